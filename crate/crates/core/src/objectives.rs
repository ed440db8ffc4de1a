//! Histogram thresholding objectives and threshold search.
//!
//! Class `k` of a [`ThresholdSet`] `t_1 < ... < t_K` covers gray levels
//! `[t_{k-1}, t_k - 1]` with `t_0 = 0` and `t_{K+1} = 256`. Objectives are
//! evaluated from cumulative tables ([`CumulativeHistogram`]) so each
//! candidate costs `O(K)` after an `O(L)` setup.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{histogram, GrayImage, Histogram, Plane, RealImage, LEVELS};

/// Largest threshold count accepted by [`exhaustive_search`].
pub const MAX_SEARCH_THRESHOLDS: usize = 3;

/// Strictly increasing thresholds in `[1, 255]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThresholdSet(Vec<usize>);

impl ThresholdSet {
    pub fn new(thresholds: Vec<usize>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::Argument("at least one threshold is required".into()));
        }
        if let Some(&t) = thresholds.iter().find(|&&t| t == 0 || t >= LEVELS) {
            return Err(Error::Argument(format!("threshold {t} outside [1, 255]")));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument(format!(
                "thresholds {thresholds:?} are not strictly increasing"
            )));
        }
        Ok(Self(thresholds))
    }

    /// Bi-level split at `t`.
    pub fn single(t: usize) -> Result<Self> {
        Self::new(vec![t])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Number of thresholds `K`; there are `K + 1` classes.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Half-open gray-level ranges `[lo, hi)` of every class, in order.
    pub fn classes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        class_bounds(&self.0)
    }
}

impl fmt::Display for ThresholdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|t| t.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

fn class_bounds(thresholds: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    let lows = std::iter::once(0).chain(thresholds.iter().copied());
    let highs = thresholds.iter().copied().chain(std::iter::once(LEVELS));
    lows.zip(highs)
}

/// Weight and mean of every class, plus the global mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub weights: Vec<f64>,
    /// `None` for classes with zero weight.
    pub means: Vec<Option<f64>>,
    pub global_mean: f64,
}

pub fn class_stats(h: &Histogram, t: &ThresholdSet) -> ClassStats {
    let table = CumulativeHistogram::new(h);
    let (weights, means) = t
        .classes()
        .map(|(lo, hi)| (table.weight(lo, hi), table.mean(lo, hi)))
        .unzip();
    ClassStats {
        weights,
        means,
        global_mean: table.global_mean(),
    }
}

/// Prefix sums over a histogram.
///
/// Counts and first moments are kept as integers so class weights and means
/// are exact ratios. The `c ln c` sums used by the entropy objective are
/// accumulated in double-double precision.
#[derive(Debug, Clone)]
pub struct CumulativeHistogram {
    counts: [u64; LEVELS + 1],
    moments: [u64; LEVELS + 1],
    clogc_hi: [f64; LEVELS + 1],
    clogc_lo: [f64; LEVELS + 1],
    total: u64,
}

impl CumulativeHistogram {
    pub fn new(h: &Histogram) -> Self {
        let mut counts = [0u64; LEVELS + 1];
        let mut moments = [0u64; LEVELS + 1];
        let mut clogc_hi = [0.0; LEVELS + 1];
        let mut clogc_lo = [0.0; LEVELS + 1];
        for (i, &c) in h.counts().iter().enumerate() {
            counts[i + 1] = counts[i] + c;
            moments[i + 1] = moments[i] + i as u64 * c;
            let term = if c > 0 { c as f64 * (c as f64).ln() } else { 0.0 };
            let (s, e) = two_sum(clogc_hi[i], term);
            clogc_hi[i + 1] = s;
            clogc_lo[i + 1] = clogc_lo[i] + e;
        }
        Self {
            counts,
            moments,
            clogc_hi,
            clogc_lo,
            total: h.total(),
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Pixel count in levels `[lo, hi)`.
    #[inline]
    pub fn count(&self, lo: usize, hi: usize) -> u64 {
        self.counts[hi] - self.counts[lo]
    }

    #[inline]
    pub fn weight(&self, lo: usize, hi: usize) -> f64 {
        self.count(lo, hi) as f64 / self.total as f64
    }

    /// Mean gray level of `[lo, hi)`, or `None` when the range is empty.
    #[inline]
    pub fn mean(&self, lo: usize, hi: usize) -> Option<f64> {
        let c = self.count(lo, hi);
        (c > 0).then(|| (self.moments[hi] - self.moments[lo]) as f64 / c as f64)
    }

    pub fn global_mean(&self) -> f64 {
        self.moments[LEVELS] as f64 / self.total as f64
    }

    /// Shannon entropy (nats) of the distribution restricted to `[lo, hi)`.
    ///
    /// With `c_k` the class count, `H_k = ln c_k - (1/c_k) sum c_i ln c_i`.
    #[inline]
    pub fn class_entropy(&self, lo: usize, hi: usize) -> f64 {
        let c = self.count(lo, hi);
        if c == 0 {
            return 0.0;
        }
        let sum = (self.clogc_hi[hi] - self.clogc_hi[lo]) + (self.clogc_lo[hi] - self.clogc_lo[lo]);
        let c = c as f64;
        (c.ln() - sum / c).max(0.0)
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// A histogram-based thresholding criterion to be maximized.
///
/// Implement this to plug additional criteria into [`exhaustive_search`].
pub trait Objective: Sync {
    fn name(&self) -> &'static str;

    /// Value of the criterion for strictly increasing `thresholds`.
    fn evaluate(&self, table: &CumulativeHistogram, thresholds: &[usize]) -> f64;
}

/// Built-in objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    /// Between-class variance.
    Otsu,
    /// Sum of class entropies.
    Kapur,
}

impl Objective for ObjectiveKind {
    fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::Otsu => "otsu",
            ObjectiveKind::Kapur => "kapur",
        }
    }

    fn evaluate(&self, table: &CumulativeHistogram, thresholds: &[usize]) -> f64 {
        match self {
            ObjectiveKind::Otsu => otsu_from_table(table, thresholds),
            ObjectiveKind::Kapur => kapur_from_table(table, thresholds),
        }
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "otsu" => Ok(ObjectiveKind::Otsu),
            "kapur" => Ok(ObjectiveKind::Kapur),
            other => Err(Error::Argument(format!("unknown objective '{other}'"))),
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn otsu_from_table(table: &CumulativeHistogram, thresholds: &[usize]) -> f64 {
    let mu_t = table.global_mean();
    class_bounds(thresholds)
        .filter_map(|(lo, hi)| {
            let mu = table.mean(lo, hi)?;
            Some(table.weight(lo, hi) * (mu - mu_t) * (mu - mu_t))
        })
        .sum()
}

fn kapur_from_table(table: &CumulativeHistogram, thresholds: &[usize]) -> f64 {
    class_bounds(thresholds)
        .map(|(lo, hi)| table.class_entropy(lo, hi))
        .sum()
}

/// Otsu's between-class variance `sum_k w_k (mu_k - mu_T)^2`; empty classes
/// are skipped.
pub fn otsu_objective(h: &Histogram, t: &ThresholdSet) -> f64 {
    otsu_from_table(&CumulativeHistogram::new(h), t.as_slice())
}

/// Kapur's entropy criterion: the sum of class entropies in nats. Empty
/// classes and empty bins contribute zero.
pub fn kapur_objective(h: &Histogram, t: &ThresholdSet) -> f64 {
    kapur_from_table(&CumulativeHistogram::new(h), t.as_slice())
}

/// Rendering of a thresholded image as intensities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconstructionRule {
    /// Every pixel takes its class mean (unrounded).
    #[default]
    ClassMean,
    /// Every pixel takes the midpoint of its class's gray-level range.
    ClassMidpoint,
    /// Every pixel takes the lower bound of its class's range.
    LowerBoundary,
}

impl ReconstructionRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReconstructionRule::ClassMean => "class-mean",
            ReconstructionRule::ClassMidpoint => "midpoint",
            ReconstructionRule::LowerBoundary => "lower",
        }
    }
}

impl FromStr for ReconstructionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "class-mean" | "mean" => Ok(ReconstructionRule::ClassMean),
            "midpoint" | "class-midpoint" => Ok(ReconstructionRule::ClassMidpoint),
            "lower" | "lower-boundary" => Ok(ReconstructionRule::LowerBoundary),
            other => Err(Error::Argument(format!("unknown reconstruction rule '{other}'"))),
        }
    }
}

impl fmt::Display for ReconstructionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-gray-level output values of a reconstruction. Levels belonging to
/// empty classes map to `0.0`; no pixel can hit them.
pub fn reconstruction_lut(
    table: &CumulativeHistogram,
    thresholds: &[usize],
    rule: ReconstructionRule,
) -> [f64; LEVELS] {
    let mut lut = [0.0; LEVELS];
    for (lo, hi) in class_bounds(thresholds) {
        let value = match rule {
            ReconstructionRule::ClassMean => table.mean(lo, hi).unwrap_or(0.0),
            ReconstructionRule::ClassMidpoint => (lo + hi - 1) as f64 / 2.0,
            ReconstructionRule::LowerBoundary => lo as f64,
        };
        lut[lo..hi].fill(value);
    }
    lut
}

pub(crate) fn apply_lut(img: &GrayImage, lut: &[f64; LEVELS]) -> RealImage {
    let pixels = img.pixels().iter().map(|&p| lut[p as usize]).collect();
    RealImage::new(img.width(), img.height(), pixels).expect("lut values are finite")
}

/// Replaces every pixel by its class representative under `rule`.
pub fn reconstruct(img: &GrayImage, t: &ThresholdSet, rule: ReconstructionRule) -> RealImage {
    let table = CumulativeHistogram::new(&histogram(img));
    apply_lut(img, &reconstruction_lut(&table, t.as_slice(), rule))
}

/// Finds the thresholds maximizing `objective` by enumerating all
/// `C(255, k)` candidates. Ties resolve to the lexicographically smallest set.
pub fn exhaustive_search(h: &Histogram, k: usize, objective: &dyn Objective) -> Result<(ThresholdSet, f64)> {
    if !(1..=MAX_SEARCH_THRESHOLDS).contains(&k) {
        return Err(Error::Capability(format!(
            "exhaustive search supports 1 to {MAX_SEARCH_THRESHOLDS} thresholds, got {k}"
        )));
    }
    let table = CumulativeHistogram::new(h);
    let mut current = vec![0usize; k];
    let mut best: Option<(Vec<usize>, f64)> = None;
    enumerate(&mut current, 0, 1, &mut |t| {
        let value = objective.evaluate(&table, t);
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((t.to_vec(), value));
        }
    });
    let (thresholds, value) = best.expect("at least one candidate");
    Ok((ThresholdSet::new(thresholds)?, value))
}

/// Visits every strictly increasing fill of `buf[depth..]` with values in
/// `[start, 255]`, in lexicographic order.
fn enumerate(buf: &mut [usize], depth: usize, start: usize, visit: &mut dyn FnMut(&[usize])) {
    if depth == buf.len() {
        visit(buf);
        return;
    }
    let remaining = buf.len() - depth - 1;
    for t in start..LEVELS - remaining {
        buf[depth] = t;
        enumerate(buf, depth + 1, t + 1, visit);
    }
}
