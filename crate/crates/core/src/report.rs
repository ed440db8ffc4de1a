//! Dataset-level statistics over per-image correlation records.

use serde::{Deserialize, Serialize};

use crate::dataset::ConfigEcho;
use crate::error::{Error, Result};
use crate::objectives::ObjectiveKind;
use crate::sweep::{CorrelationRecord, MetricKind, Pair};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Range covered by the correlation histograms.
pub const HISTOGRAM_RANGE: (f64, f64) = (-1.0, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    /// Mean of the defined coefficients; `None` when there are none.
    pub mean: Option<f64>,
    /// Population standard deviation of the defined coefficients.
    pub std: Option<f64>,
    pub defined: usize,
    pub undefined: usize,
    /// Counts over equal-width bins on `[-1, 1]`; the last bin is closed.
    pub bins: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub otsu_ssim: PairStats,
    pub otsu_psnr: PairStats,
    pub kapur_ssim: PairStats,
    pub kapur_psnr: PairStats,
}

impl PairTable {
    pub fn get(&self, pair: Pair) -> &PairStats {
        match (pair.objective, pair.metric) {
            (ObjectiveKind::Otsu, MetricKind::Ssim) => &self.otsu_ssim,
            (ObjectiveKind::Otsu, MetricKind::Psnr) => &self.otsu_psnr,
            (ObjectiveKind::Kapur, MetricKind::Ssim) => &self.kapur_ssim,
            (ObjectiveKind::Kapur, MetricKind::Psnr) => &self.kapur_psnr,
        }
    }
}

/// How often each objective correlates more strongly with one metric.
///
/// `otsu_wins + kapur_wins + ties + undefined` equals the image count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinCounts {
    pub otsu_wins: usize,
    pub kapur_wins: usize,
    pub ties: usize,
    /// Images where at least one of the two coefficients is undefined.
    pub undefined: usize,
}

impl WinCounts {
    pub fn total(&self) -> usize {
        self.otsu_wins + self.kapur_wins + self.ties + self.undefined
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinTable {
    pub ssim: WinCounts,
    pub psnr: WinCounts,
}

impl WinTable {
    pub fn get(&self, metric: MetricKind) -> &WinCounts {
        match metric {
            MetricKind::Ssim => &self.ssim,
            MetricKind::Psnr => &self.psnr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedImage {
    pub image_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub tool_version: String,
    /// Run configuration, absent when aggregating stored records.
    pub config: Option<ConfigEcho>,
    pub std_estimator: String,
    pub histogram_bins: usize,
    pub total_images: usize,
    pub pairs: PairTable,
    pub wins: WinTable,
    pub skipped_count: usize,
    pub skipped: Vec<SkippedImage>,
}

impl AggregateReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Argument(format!("invalid report JSON: {e}")))
    }
}

/// Aggregates per-image records into means, spreads, win counts and
/// histograms.
pub fn aggregate(records: &[CorrelationRecord], bins: usize) -> Result<AggregateReport> {
    if records.is_empty() {
        return Err(Error::Argument("no correlation records to aggregate".into()));
    }
    if bins < 2 {
        return Err(Error::Argument(format!("histogram needs at least 2 bins, got {bins}")));
    }
    let stats = |pair: Pair| pair_stats(records.iter().map(|r| r.get(pair)), bins);
    let [otsu_ssim, otsu_psnr, kapur_ssim, kapur_psnr] = Pair::ALL.map(stats);
    Ok(AggregateReport {
        tool_version: TOOL_VERSION.to_string(),
        config: None,
        std_estimator: "population".to_string(),
        histogram_bins: bins,
        total_images: records.len(),
        pairs: PairTable {
            otsu_ssim,
            otsu_psnr,
            kapur_ssim,
            kapur_psnr,
        },
        wins: WinTable {
            ssim: win_counts(records, MetricKind::Ssim),
            psnr: win_counts(records, MetricKind::Psnr),
        },
        skipped_count: 0,
        skipped: Vec::new(),
    })
}

fn pair_stats(values: impl Iterator<Item = Option<f64>>, bins: usize) -> PairStats {
    let mut defined = Vec::new();
    let mut undefined = 0;
    for v in values {
        match v {
            Some(v) => defined.push(v),
            None => undefined += 1,
        }
    }
    let mut counts = vec![0usize; bins];
    for &v in &defined {
        counts[bin_index(v, bins)] += 1;
    }
    let (mean, std) = if defined.is_empty() {
        (None, None)
    } else {
        let n = defined.len() as f64;
        let mean = defined.iter().sum::<f64>() / n;
        let var = defined.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (Some(mean), Some(var.sqrt()))
    };
    PairStats {
        mean,
        std,
        defined: defined.len(),
        undefined,
        bins: counts,
    }
}

/// Bin of `v` among `bins` equal bins over `[-1, 1]`, with `1.0` in the last.
pub fn bin_index(v: f64, bins: usize) -> usize {
    let (lo, hi) = HISTOGRAM_RANGE;
    let pos = ((v - lo) / (hi - lo) * bins as f64).floor();
    (pos.max(0.0) as usize).min(bins - 1)
}

fn win_counts(records: &[CorrelationRecord], metric: MetricKind) -> WinCounts {
    let otsu = Pair::new(ObjectiveKind::Otsu, metric);
    let kapur = Pair::new(ObjectiveKind::Kapur, metric);
    let mut wins = WinCounts::default();
    for r in records {
        match (r.get(otsu), r.get(kapur)) {
            (Some(o), Some(k)) if o > k => wins.otsu_wins += 1,
            (Some(o), Some(k)) if k > o => wins.kapur_wins += 1,
            (Some(_), Some(_)) => wins.ties += 1,
            _ => wins.undefined += 1,
        }
    }
    wins
}
