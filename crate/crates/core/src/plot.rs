//! Static SVG rendering of correlation histograms and per-image curve
//! overlays. Output is a pure function of the input, byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dataset::write_text;
use crate::error::Result;
use crate::objectives::Objective;
use crate::report::{AggregateReport, PairStats, HISTOGRAM_RANGE};
use crate::sweep::{correlate, normalize_curve, Pair, SweepCurves};

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const LEFT: f64 = 56.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 44.0;

const OBJECTIVE_COLOR: &str = "#1f77b4";
const METRIC_COLOR: &str = "#d62728";

fn title_case(name: &str) -> String {
    match name {
        "ssim" | "psnr" => name.to_ascii_uppercase(),
        _ => {
            let mut c = name.chars();
            c.next()
                .map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
        }
    }
}

fn pair_title(pair: Pair) -> String {
    format!(
        "{} x {}",
        title_case(pair.objective.name()),
        title_case(pair.metric.name())
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open_svg(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let (x0, y0, x1, y1) = (LEFT, HEIGHT - BOTTOM, WIDTH - RIGHT, TOP);
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 8.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn x_tick(s: &mut String, x: f64, label: &str) {
    let y0 = HEIGHT - BOTTOM;
    let _ = writeln!(
        s,
        r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
        y0 + 4.0,
        y0 + 16.0
    );
}

fn y_tick(s: &mut String, y: f64, label: &str) {
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
        LEFT - 4.0,
        LEFT - 6.0,
        y + 4.0
    );
}

/// Bar chart of one pair's correlation histogram over `[-1, 1]`. Bar
/// heights are scaled to the fullest bin.
pub fn histogram_svg(pair: Pair, stats: &PairStats) -> String {
    let mut s = String::new();
    let summary = match (stats.mean, stats.std) {
        (Some(m), Some(sd)) => format!(
            "{}: mean {m:.4} \u{b1} {sd:.4}, n = {}",
            pair_title(pair),
            stats.defined
        ),
        _ => format!("{}: no defined coefficients", pair_title(pair)),
    };
    open_svg(&mut s, &summary);
    axes(&mut s, "Pearson correlation", "images");

    let (lo, hi) = HISTOGRAM_RANGE;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let max = stats.bins.iter().copied().max().unwrap_or(0);
    let bar_w = plot_w / stats.bins.len().max(1) as f64;
    for (i, &count) in stats.bins.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let h = plot_h * count as f64 / max as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{OBJECTIVE_COLOR}" stroke="white" stroke-width="0.5"/>"#,
            LEFT + i as f64 * bar_w,
            TOP + plot_h - h,
            bar_w,
            h
        );
    }
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        x_tick(&mut s, LEFT + plot_w * k as f64 / 4.0, &format!("{v}"));
    }
    y_tick(&mut s, TOP + plot_h, "0");
    if max > 0 {
        y_tick(&mut s, TOP, &max.to_string());
    }
    s.push_str("</svg>\n");
    s
}

/// Normalized objective and metric curves against threshold. Non-finite
/// points break the line.
pub fn overlay_svg(curves: &SweepCurves, pair: Pair) -> String {
    let rho = correlate(curves).get(pair);
    let rho_text = rho.map_or_else(|| "undefined".to_string(), |r| format!("{r:.2}"));
    let mut s = String::new();
    open_svg(
        &mut s,
        &format!("{} ({}): correlation = {rho_text}", pair_title(pair), curves.image_id),
    );
    axes(&mut s, "threshold T", "normalized value");

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let t_min = curves.thresholds.first().copied().unwrap_or(1) as f64;
    let t_max = curves.thresholds.last().copied().unwrap_or(255) as f64;
    let span = (t_max - t_min).max(1.0);
    let series = [
        (normalize_curve(curves.objective(pair.objective)), OBJECTIVE_COLOR),
        (normalize_curve(curves.metric(pair.metric)), METRIC_COLOR),
    ];
    for (values, color) in &series {
        let mut d = String::new();
        let mut pen_down = false;
        for (&t, &v) in curves.thresholds.iter().zip(values) {
            if !v.is_finite() {
                pen_down = false;
                continue;
            }
            let x = LEFT + plot_w * (t as f64 - t_min) / span;
            let y = TOP + plot_h * (1.0 - v);
            let _ = write!(d, "{}{x:.2},{y:.2} ", if pen_down { "L" } else { "M" });
            pen_down = true;
        }
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.trim_end()
        );
    }
    for t in [1usize, 64, 128, 192, 255] {
        x_tick(&mut s, LEFT + plot_w * (t as f64 - t_min) / span, &t.to_string());
    }
    y_tick(&mut s, TOP + plot_h, "0");
    y_tick(&mut s, TOP, "1");
    let legend_x = LEFT + 10.0;
    for (k, (name, color)) in [
        (title_case(pair.objective.name()), OBJECTIVE_COLOR),
        (title_case(pair.metric.name()), METRIC_COLOR),
    ]
    .iter()
    .enumerate()
    {
        let y = TOP + 12.0 + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{legend_x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{name}</text>"#,
            legend_x + 18.0,
            legend_x + 22.0,
            y + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `hist_<pair>.svg` for every pair of `report`.
pub fn emit_histograms(report: &AggregateReport, dir: &Path) -> Result<Vec<PathBuf>> {
    Pair::ALL
        .iter()
        .map(|&pair| {
            let path = dir.join(format!("hist_{}.svg", pair.key()));
            write_text(&path, &histogram_svg(pair, report.pairs.get(pair)))?;
            Ok(path)
        })
        .collect()
}

/// Writes `overlay_<pair>.svg` for every pair of `curves`.
pub fn emit_overlays(curves: &SweepCurves, dir: &Path) -> Result<Vec<PathBuf>> {
    Pair::ALL
        .iter()
        .map(|&pair| {
            let path = dir.join(format!("overlay_{}.svg", pair.key()));
            write_text(&path, &overlay_svg(curves, pair))?;
            Ok(path)
        })
        .collect()
}

/// Histogram plots for `report`, plus overlays for `curves` when given.
pub fn emit_plots(report: &AggregateReport, curves: Option<&SweepCurves>, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = emit_histograms(report, dir)?;
    if let Some(c) = curves {
        written.extend(emit_overlays(c, dir)?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::aggregate;
    use crate::sweep::CorrelationRecord;

    fn record(v: f64) -> CorrelationRecord {
        CorrelationRecord {
            image_id: "a".into(),
            rho_otsu_ssim: Some(v),
            rho_otsu_psnr: Some(v),
            rho_kapur_ssim: Some(v),
            rho_kapur_psnr: None,
            dropped_points: 0,
        }
    }

    #[test]
    fn single_bin_is_full_height() {
        let report = aggregate(&[record(0.97), record(0.98)], 20).unwrap();
        let pair = Pair::ALL[0];
        let svg = histogram_svg(pair, report.pairs.get(pair));
        let bars: Vec<&str> = svg.lines().filter(|l| l.starts_with("<rect x=")).collect();
        assert_eq!(bars.len(), 1);
        let full = format!(r#"height="{:.2}""#, HEIGHT - TOP - BOTTOM);
        assert!(bars[0].contains(&full), "{}", bars[0]);
        assert!(bars[0].contains(&format!(r#"y="{TOP:.2}""#)));
    }

    #[test]
    fn undefined_pair_renders_without_bars() {
        let report = aggregate(&[record(0.5)], 10).unwrap();
        let pair = Pair::ALL[3];
        let svg = histogram_svg(pair, report.pairs.get(pair));
        assert!(svg.contains("no defined coefficients"));
        assert!(!svg.lines().any(|l| l.starts_with("<rect x=")));
    }

    #[test]
    fn rendering_is_deterministic() {
        let report = aggregate(&[record(0.1), record(-0.4), record(1.0)], 20).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = emit_plots(&report, None, &dir.path().join("a")).unwrap();
        let b = emit_plots(&report, None, &dir.path().join("b")).unwrap();
        assert_eq!(a.len(), 4);
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
        }
    }

    #[test]
    fn overlay_breaks_on_non_finite() {
        let n = 255;
        let curves = SweepCurves {
            image_id: "x".into(),
            rule: Default::default(),
            thresholds: (1..=n).collect(),
            otsu: (0..n).map(|i| i as f64).collect(),
            kapur: (0..n).map(|i| (i % 7) as f64).collect(),
            ssim: (0..n).map(|i| i as f64 / 300.0).collect(),
            psnr: (0..n)
                .map(|i| if i == 100 { f64::INFINITY } else { i as f64 })
                .collect(),
        };
        let svg = overlay_svg(&curves, Pair::ALL[1]);
        assert!(svg.contains("correlation = 1.00"));
        let metric_path = svg
            .lines()
            .find(|l| l.contains(METRIC_COLOR) && l.starts_with("<path"))
            .unwrap();
        assert_eq!(metric_path.matches('M').count(), 2);
    }
}
