//! Bi-level threshold sweep of a single image and the per-image correlations
//! between objective curves and metric curves.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::image::{histogram, GrayImage, Plane, LEVELS};
use crate::metrics::{pearson, psnr_from_mse, ssim_two_level_sweep, SsimConfig};
use crate::objectives::{reconstruction_lut, CumulativeHistogram, Objective, ObjectiveKind, ReconstructionRule};

/// Number of thresholds in a sweep: `T = 1..=255`.
pub const SWEEP_LEN: usize = LEVELS - 1;

/// Objective and metric values at every threshold of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurves {
    pub image_id: String,
    pub rule: ReconstructionRule,
    pub thresholds: Vec<usize>,
    pub otsu: Vec<f64>,
    pub kapur: Vec<f64>,
    pub ssim: Vec<f64>,
    /// `+inf` where the reconstruction is exact.
    pub psnr: Vec<f64>,
}

impl SweepCurves {
    pub fn objective(&self, kind: ObjectiveKind) -> &[f64] {
        match kind {
            ObjectiveKind::Otsu => &self.otsu,
            ObjectiveKind::Kapur => &self.kapur,
        }
    }

    pub fn metric(&self, kind: MetricKind) -> &[f64] {
        match kind {
            MetricKind::Ssim => &self.ssim,
            MetricKind::Psnr => &self.psnr,
        }
    }

    /// Applies `f` to each of the four series.
    pub fn map_series(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        Self {
            otsu: f(&self.otsu),
            kapur: f(&self.kapur),
            ssim: f(&self.ssim),
            psnr: f(&self.psnr),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Ssim,
    Psnr,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Ssim => "ssim",
            MetricKind::Psnr => "psnr",
        }
    }
}

/// One of the four objective/metric pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pair {
    pub objective: ObjectiveKind,
    pub metric: MetricKind,
}

impl Pair {
    pub const ALL: [Pair; 4] = [
        Pair::new(ObjectiveKind::Otsu, MetricKind::Ssim),
        Pair::new(ObjectiveKind::Otsu, MetricKind::Psnr),
        Pair::new(ObjectiveKind::Kapur, MetricKind::Ssim),
        Pair::new(ObjectiveKind::Kapur, MetricKind::Psnr),
    ];

    pub const fn new(objective: ObjectiveKind, metric: MetricKind) -> Self {
        Self { objective, metric }
    }

    /// `otsu_ssim`, `kapur_psnr`, ...
    pub fn key(&self) -> String {
        format!("{}_{}", self.objective.name(), self.metric.name())
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Sweeps `T = 1..=255`, evaluating both objectives on the histogram and both
/// metrics on the reconstruction against `img`.
pub fn sweep_image(
    image_id: impl Into<String>,
    img: &GrayImage,
    rule: ReconstructionRule,
    cfg: &SsimConfig,
) -> Result<SweepCurves> {
    cfg.validate_for(img.width(), img.height())?;
    let h = histogram(img);
    let table = CumulativeHistogram::new(&h);
    let n = img.len() as f64;

    let luts: Vec<[f64; LEVELS]> = (1..LEVELS).map(|t| reconstruction_lut(&table, &[t], rule)).collect();
    let levels: Vec<(f64, f64)> = luts.iter().enumerate().map(|(i, lut)| (lut[0], lut[i + 1])).collect();
    let ssim = ssim_two_level_sweep(img, &levels, cfg)?;

    let points: Vec<(f64, f64, f64, f64)> = luts
        .iter()
        .zip(ssim)
        .enumerate()
        .map(|(i, (lut, ssim))| {
            let thresholds = [i + 1];
            let otsu = ObjectiveKind::Otsu.evaluate(&table, &thresholds);
            let kapur = ObjectiveKind::Kapur.evaluate(&table, &thresholds);
            let sq_err: f64 = h
                .counts()
                .iter()
                .zip(lut)
                .enumerate()
                .filter(|(_, (&c, _))| c > 0)
                .map(|(level, (&c, &v))| {
                    let d = level as f64 - v;
                    c as f64 * d * d
                })
                .sum();
            let psnr = psnr_from_mse(sq_err / n, cfg.data_range).value;
            (otsu, kapur, ssim, psnr)
        })
        .collect();

    let mut curves = SweepCurves {
        image_id: image_id.into(),
        rule,
        thresholds: (1..LEVELS).collect(),
        otsu: Vec::with_capacity(SWEEP_LEN),
        kapur: Vec::with_capacity(SWEEP_LEN),
        ssim: Vec::with_capacity(SWEEP_LEN),
        psnr: Vec::with_capacity(SWEEP_LEN),
    };
    for (o, k, s, p) in points {
        curves.otsu.push(o);
        curves.kapur.push(k);
        curves.ssim.push(s);
        curves.psnr.push(p);
    }
    Ok(curves)
}

/// The four Pearson coefficients of one image. `None` marks an undefined
/// coefficient (constant series, or fewer than two usable points).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRecord {
    pub image_id: String,
    pub rho_otsu_ssim: Option<f64>,
    pub rho_otsu_psnr: Option<f64>,
    pub rho_kapur_ssim: Option<f64>,
    pub rho_kapur_psnr: Option<f64>,
    /// Thresholds with non-finite PSNR.
    pub dropped_points: usize,
}

impl CorrelationRecord {
    pub fn get(&self, pair: Pair) -> Option<f64> {
        match (pair.objective, pair.metric) {
            (ObjectiveKind::Otsu, MetricKind::Ssim) => self.rho_otsu_ssim,
            (ObjectiveKind::Otsu, MetricKind::Psnr) => self.rho_otsu_psnr,
            (ObjectiveKind::Kapur, MetricKind::Ssim) => self.rho_kapur_ssim,
            (ObjectiveKind::Kapur, MetricKind::Psnr) => self.rho_kapur_psnr,
        }
    }
}

/// Correlates each objective curve with each metric curve, dropping
/// thresholds where either series is non-finite.
pub fn correlate(curves: &SweepCurves) -> CorrelationRecord {
    let rho = |pair: Pair| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = curves
            .objective(pair.objective)
            .iter()
            .zip(curves.metric(pair.metric))
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(&a, &b)| (a, b))
            .unzip();
        if xs.len() < 2 {
            return None;
        }
        pearson(&xs, &ys).ok().flatten()
    };
    let [os, op, ks, kp] = Pair::ALL.map(rho);
    CorrelationRecord {
        image_id: curves.image_id.clone(),
        rho_otsu_ssim: os,
        rho_otsu_psnr: op,
        rho_kapur_ssim: ks,
        rho_kapur_psnr: kp,
        dropped_points: curves.psnr.iter().filter(|p| !p.is_finite()).count(),
    }
}

/// Min-max rescales the finite entries of `v` to `[0, 1]`. Non-finite
/// entries become NaN; a constant vector maps to zeros. For display only.
pub fn normalize_curve(v: &[f64]) -> Vec<f64> {
    let (lo, hi) = v
        .iter()
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let span = hi - lo;
    v.iter()
        .map(|&x| {
            if !x.is_finite() {
                f64::NAN
            } else if span > 0.0 {
                (x - lo) / span
            } else {
                0.0
            }
        })
        .collect()
}
