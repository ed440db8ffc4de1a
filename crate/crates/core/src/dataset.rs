//! Dataset discovery, batch execution and the on-disk result formats.

use std::fmt::Write as _;
use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::load_gray;
use crate::metrics::SsimConfig;
use crate::objectives::ReconstructionRule;
use crate::plot::emit_plots;
use crate::report::{aggregate, AggregateReport, SkippedImage};
use crate::sweep::{correlate, sweep_image, CorrelationRecord, SweepCurves};

pub const CURVES_HEADER: &str = "threshold,otsu,kapur,ssim,psnr";
pub const CORRELATIONS_HEADER: &str =
    "image_id,rho_otsu_ssim,rho_otsu_psnr,rho_kapur_ssim,rho_kapur_psnr,dropped_points";

pub const CORRELATIONS_FILE: &str = "correlations.csv";
pub const REPORT_FILE: &str = "report.json";
pub const CURVES_DIR: &str = "curves";
pub const PLOTS_DIR: &str = "plots";

/// Grayscale conversion recorded in run metadata.
pub const GRAYSCALE_RULE: &str = "bt601-luma-round-half-away";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Workers {
    #[default]
    Auto,
    Fixed(NonZeroUsize),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset_root: PathBuf,
    pub output_dir: PathBuf,
    pub rule: ReconstructionRule,
    pub ssim: SsimConfig,
    pub workers: Workers,
    pub histogram_bins: usize,
    /// Lower-case extensions without the dot.
    pub image_extensions: Vec<String>,
}

impl RunConfig {
    pub fn new(dataset_root: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            dataset_root: dataset_root.into(),
            output_dir: output_dir.into(),
            rule: ReconstructionRule::default(),
            ssim: SsimConfig::default(),
            workers: Workers::Auto,
            histogram_bins: 20,
            image_extensions: vec!["jpg".into(), "png".into()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset_root.as_os_str().is_empty() || self.output_dir.as_os_str().is_empty() {
            return Err(Error::Argument("dataset root and output directory must be set".into()));
        }
        if self.histogram_bins < 2 {
            return Err(Error::Argument(format!(
                "histogram needs at least 2 bins, got {}",
                self.histogram_bins
            )));
        }
        if self.image_extensions.is_empty() {
            return Err(Error::Argument("no image extensions configured".into()));
        }
        self.ssim.validate()
    }

    /// The parts of the configuration that can influence results. Output
    /// location and worker count are left out so outputs do not depend on them.
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            dataset_root: self.dataset_root.to_string_lossy().into_owned(),
            rule: self.rule,
            ssim: self.ssim,
            histogram_bins: self.histogram_bins,
            image_extensions: self.image_extensions.clone(),
            grayscale: GRAYSCALE_RULE.to_string(),
            non_finite_policy: "pairwise-deletion".to_string(),
        }
    }
}

/// Serialized run configuration embedded in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dataset_root: String,
    pub rule: ReconstructionRule,
    pub ssim: SsimConfig,
    pub histogram_bins: usize,
    pub image_extensions: Vec<String>,
    pub grayscale: String,
    pub non_finite_policy: String,
}

/// A discovered image and its dataset-relative identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ImageEntry {
    /// Relative path without extension, `/`-separated.
    pub image_id: String,
    pub path: PathBuf,
}

/// Recursively lists images under `root` whose extension is in
/// `extensions` (case-insensitive), sorted by relative path.
pub fn discover_images(root: &Path, extensions: &[String]) -> Result<Vec<ImageEntry>> {
    let meta = fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "dataset root is not a directory"),
        ));
    }
    let wanted: Vec<String> = extensions
        .iter()
        .map(|e| e.trim_start_matches('.').to_ascii_lowercase())
        .collect();
    let mut found = Vec::new();
    walk(root, &mut |path| {
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if ext.is_some_and(|e| wanted.contains(&e)) {
            found.push(path.to_path_buf());
        }
    })?;

    let mut entries: Vec<(String, ImageEntry)> = found
        .into_iter()
        .map(|path| {
            let rel = path.strip_prefix(root).unwrap_or(&path);
            let rel_str = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            let id = rel.with_extension("");
            let image_id = id
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            (rel_str, ImageEntry { image_id, path })
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    if entries.is_empty() {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }
    Ok(entries.into_iter().map(|(_, e)| e).collect())
}

fn walk(dir: &Path, visit: &mut dyn FnMut(&Path)) -> Result<()> {
    let mut children: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    children.sort();
    for child in children {
        if child.is_dir() {
            walk(&child, visit)?;
        } else {
            visit(&child);
        }
    }
    Ok(())
}

/// Decodes, converts and sweeps one image.
pub fn analyze_image(entry: &ImageEntry, rule: ReconstructionRule, ssim: &SsimConfig) -> Result<SweepCurves> {
    let img = load_gray(&entry.path)?;
    sweep_image(entry.image_id.clone(), &img, rule, ssim)
}

/// Everything produced by [`run_batch`].
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub report: AggregateReport,
    pub records: Vec<CorrelationRecord>,
    pub written: Vec<PathBuf>,
}

/// Runs the full pipeline over a dataset and writes curves, correlations,
/// the JSON report and histogram plots under `cfg.output_dir`.
///
/// Images that fail to decode or sweep are listed in the report and skipped.
pub fn run_batch(cfg: &RunConfig) -> Result<BatchOutcome> {
    cfg.validate()?;
    let entries = discover_images(&cfg.dataset_root, &cfg.image_extensions)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Workers::Fixed(n) = cfg.workers {
        builder = builder.num_threads(n.get());
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(String, Result<SweepCurves>)> = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| (entry.image_id.clone(), analyze_image(entry, cfg.rule, &cfg.ssim)))
            .collect()
    });

    let mut curves = Vec::new();
    let mut skipped = Vec::new();
    for (image_id, result) in results {
        match result {
            Ok(c) => curves.push(c),
            Err(e) => skipped.push(SkippedImage {
                image_id,
                error: e.to_string(),
            }),
        }
    }
    curves.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    skipped.sort_by(|a, b| a.image_id.cmp(&b.image_id));

    let records: Vec<CorrelationRecord> = curves.iter().map(correlate).collect();
    if records.is_empty() {
        return Err(Error::EmptyDataset(cfg.dataset_root.clone()));
    }
    let mut report = aggregate(&records, cfg.histogram_bins)?;
    report.config = Some(cfg.echo());
    report.skipped_count = skipped.len();
    report.skipped = skipped;

    let out = &cfg.output_dir;
    let mut written = Vec::new();
    for c in &curves {
        let path = out.join(CURVES_DIR).join(format!("{}.csv", c.image_id));
        write_text(&path, &curves_csv(c))?;
        written.push(path);
    }
    let path = out.join(CORRELATIONS_FILE);
    write_text(&path, &correlations_csv(&records))?;
    written.push(path);
    let path = out.join(REPORT_FILE);
    write_text(&path, &report.to_json())?;
    written.push(path);
    written.extend(emit_plots(&report, None, &out.join(PLOTS_DIR))?);

    Ok(BatchOutcome {
        report,
        records,
        written,
    })
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Shortest round-trip decimal; `nan`, `inf` and `-inf` for non-finite values.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

fn format_rho(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), format_value)
}

pub fn curves_csv(curves: &SweepCurves) -> String {
    let mut s = String::with_capacity(64 * curves.thresholds.len());
    s.push_str(CURVES_HEADER);
    s.push('\n');
    for i in 0..curves.thresholds.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            curves.thresholds[i],
            format_value(curves.otsu[i]),
            format_value(curves.kapur[i]),
            format_value(curves.ssim[i]),
            format_value(curves.psnr[i]),
        );
    }
    s
}

pub fn correlation_row(r: &CorrelationRecord) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.image_id,
        format_rho(r.rho_otsu_ssim),
        format_rho(r.rho_otsu_psnr),
        format_rho(r.rho_kapur_ssim),
        format_rho(r.rho_kapur_psnr),
        r.dropped_points
    )
}

pub fn correlations_csv(records: &[CorrelationRecord]) -> String {
    let mut s = String::from(CORRELATIONS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&correlation_row(r));
        s.push('\n');
    }
    s
}

/// Parses a correlations CSV written by [`correlations_csv`].
pub fn read_correlations(path: &Path) -> Result<Vec<CorrelationRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_correlations(&text).map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        message,
    })
}

fn parse_correlations(text: &str) -> std::result::Result<Vec<CorrelationRecord>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != CORRELATIONS_HEADER {
        return Err(format!("unexpected header '{}'", header.join(",")));
    }
    let rho = |field: &str, line: u64| -> std::result::Result<Option<f64>, String> {
        let v: f64 = field
            .parse()
            .map_err(|_| format!("line {line}: bad coefficient '{field}'"))?;
        Ok(if v.is_nan() { None } else { Some(v) })
    };
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 6 {
            return Err(format!("line {line}: expected 6 fields, found {}", row.len()));
        }
        records.push(CorrelationRecord {
            image_id: row[0].to_string(),
            rho_otsu_ssim: rho(&row[1], line)?,
            rho_otsu_psnr: rho(&row[2], line)?,
            rho_kapur_ssim: rho(&row[3], line)?,
            rho_kapur_psnr: rho(&row[4], line)?,
            dropped_points: row[5]
                .parse()
                .map_err(|_| format!("line {line}: bad dropped_points '{}'", &row[5]))?,
        });
    }
    Ok(records)
}

/// Parses a curves CSV written by [`curves_csv`].
pub fn parse_curves(image_id: &str, rule: ReconstructionRule, text: &str) -> Result<SweepCurves> {
    let bad = |m: String| Error::Parse {
        path: PathBuf::from(image_id),
        message: m,
    };
    let mut lines = text.lines();
    if lines.next() != Some(CURVES_HEADER) {
        return Err(bad("missing curves header".into()));
    }
    let mut curves = SweepCurves {
        image_id: image_id.to_string(),
        rule,
        thresholds: Vec::new(),
        otsu: Vec::new(),
        kapur: Vec::new(),
        ssim: Vec::new(),
        psnr: Vec::new(),
    };
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(format!("row {}: expected 5 fields", n + 1)));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("row {}: bad number '{s}'", n + 1)))
        };
        curves.thresholds.push(
            fields[0]
                .parse()
                .map_err(|_| bad(format!("row {}: bad threshold", n + 1)))?,
        );
        curves.otsu.push(num(fields[1])?);
        curves.kapur.push(num(fields[2])?);
        curves.ssim.push(num(fields[3])?);
        curves.psnr.push(num(fields[4])?);
    }
    Ok(curves)
}
