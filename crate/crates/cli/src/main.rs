use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use metricbias_core::dataset::{
    correlation_row, curves_csv, read_correlations, write_text, CORRELATIONS_FILE, CORRELATIONS_HEADER, PLOTS_DIR,
    REPORT_FILE,
};
use metricbias_core::plot::{emit_histograms, emit_overlays};
use metricbias_core::{
    aggregate, correlate, exhaustive_search, histogram, load_gray, run_batch, sweep_image, AggregateReport, Error,
    ObjectiveKind, Pair, ReconstructionRule, RunConfig, SsimConfig, Workers,
};

const USAGE_ERROR: u8 = 1;
const DATA_ERROR: u8 = 2;

/// Correlate thresholding objectives (Otsu, Kapur) with image quality
/// metrics (SSIM, PSNR) over every threshold.
#[derive(Parser)]
#[command(name = "metricbias", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one image and print its correlation row.
    Analyze {
        image: PathBuf,
        #[command(flatten)]
        rule: RuleArg,
        /// Also write the curves CSV and overlay plots here.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run the full pipeline over every image under a dataset root.
    Batch {
        dataset_root: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[command(flatten)]
        rule: RuleArg,
        /// Worker threads; defaults to one per core.
        #[arg(long, value_name = "N")]
        workers: Option<NonZeroUsize>,
        #[command(flatten)]
        bins: BinsArg,
    },
    /// Recompute aggregates and histogram plots from a correlations CSV.
    Report {
        correlations: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[command(flatten)]
        bins: BinsArg,
    },
    /// Find the optimal K thresholds of an image by exhaustive search.
    Threshold {
        image: PathBuf,
        /// Number of thresholds (1 to 3).
        #[arg(short = 'K', value_name = "K")]
        k: usize,
        /// Objective to maximize: otsu or kapur.
        #[arg(long)]
        objective: ObjectiveKind,
    },
}

#[derive(Args)]
struct RuleArg {
    /// Reconstruction rule: class-mean, midpoint or lower.
    #[arg(long, default_value = "class-mean")]
    rule: ReconstructionRule,
}

#[derive(Args)]
struct BinsArg {
    /// Histogram bins over [-1, 1].
    #[arg(long, default_value_t = 20, value_name = "B")]
    bins: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) | Error::Capability(_) => USAGE_ERROR,
        _ => DATA_ERROR,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Analyze { image, rule, out } => analyze(&image, rule.rule, out.as_deref()),
        Command::Batch {
            dataset_root,
            out,
            rule,
            workers,
            bins,
        } => {
            let mut cfg = RunConfig::new(dataset_root, out);
            cfg.rule = rule.rule;
            cfg.workers = workers.map_or(Workers::Auto, Workers::Fixed);
            cfg.histogram_bins = bins.bins;
            let outcome = run_batch(&cfg)?;
            print_summary(&outcome.report);
            for skipped in &outcome.report.skipped {
                eprintln!("skipped {}: {}", skipped.image_id, skipped.error);
            }
            println!("wrote {} files to {}", outcome.written.len(), cfg.output_dir.display());
            Ok(())
        }
        Command::Report {
            correlations,
            out,
            bins,
        } => {
            let records = read_correlations(&correlations)?;
            let report = aggregate(&records, bins.bins)?;
            write_text(&out.join(REPORT_FILE), &report.to_json())?;
            emit_histograms(&report, &out.join(PLOTS_DIR))?;
            print_summary(&report);
            Ok(())
        }
        Command::Threshold { image, k, objective } => {
            let img = load_gray(&image)?;
            let (thresholds, value) = exhaustive_search(&histogram(&img), k, &objective)?;
            println!("{objective} K={k}: thresholds {thresholds}, value {value}");
            Ok(())
        }
    }
}

fn analyze(image: &Path, rule: ReconstructionRule, out: Option<&Path>) -> Result<(), Error> {
    let image_id = image
        .file_stem()
        .map_or_else(|| "image".to_string(), |s| s.to_string_lossy().into_owned());
    let img = load_gray(image)?;
    let curves = sweep_image(image_id.clone(), &img, rule, &SsimConfig::default())?;
    let record = correlate(&curves);
    println!("{CORRELATIONS_HEADER}");
    println!("{}", correlation_row(&record));
    if let Some(dir) = out {
        write_text(&dir.join(format!("{image_id}.csv")), &curves_csv(&curves))?;
        write_text(
            &dir.join(CORRELATIONS_FILE),
            &format!("{CORRELATIONS_HEADER}\n{}\n", correlation_row(&record)),
        )?;
        emit_overlays(&curves, &dir.join(PLOTS_DIR))?;
    }
    Ok(())
}

fn print_summary(report: &AggregateReport) {
    println!(
        "images: {} analyzed, {} skipped",
        report.total_images, report.skipped_count
    );
    for pair in Pair::ALL {
        let s = report.pairs.get(pair);
        match (s.mean, s.std) {
            (Some(m), Some(sd)) => println!("{pair}: {m:.4} ± {sd:.4} ({} undefined)", s.undefined),
            _ => println!("{pair}: undefined for all images"),
        }
    }
    for (name, wins) in [("ssim", &report.wins.ssim), ("psnr", &report.wins.psnr)] {
        println!(
            "{name} wins: otsu {}, kapur {}, ties {}, undefined {}",
            wins.otsu_wins, wins.kapur_wins, wins.ties, wins.undefined
        );
    }
}
