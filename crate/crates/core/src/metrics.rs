//! Full-reference quality metrics and Pearson correlation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GrayImage, Plane, RealImage, LEVELS};

/// Normalization applied to windowed variances and covariance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceNorm {
    /// Divide by `N`.
    Biased,
    /// Divide by `N - 1`.
    #[default]
    Unbiased,
}

/// Parameters of the windowed SSIM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimConfig {
    /// Side of the square uniform window; odd and at least 3.
    pub window_size: usize,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
    pub covariance: CovarianceNorm,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window_size: 7,
            k1: 0.01,
            k2: 0.03,
            data_range: 255.0,
            covariance: CovarianceNorm::Unbiased,
        }
    }
}

impl SsimConfig {
    /// Checks the parameters on their own.
    pub fn validate(&self) -> Result<()> {
        if self.window_size < 3 || self.window_size.is_multiple_of(2) {
            return Err(Error::Argument(format!(
                "window size must be odd and >= 3, got {}",
                self.window_size
            )));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.k1) || !positive(self.k2) || !positive(self.data_range) {
            return Err(Error::Argument("k1, k2 and data_range must be positive".into()));
        }
        Ok(())
    }

    /// Checks the parameters against an image of the given size.
    pub fn validate_for(&self, width: usize, height: usize) -> Result<()> {
        self.validate()?;
        if self.window_size > width.min(height) {
            return Err(Error::Shape(format!(
                "{width}x{height} image is smaller than the {0}x{0} SSIM window",
                self.window_size
            )));
        }
        Ok(())
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.data_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.data_range).powi(2)
    }

    fn norm_factor(&self) -> f64 {
        let n = (self.window_size * self.window_size) as f64;
        match self.covariance {
            CovarianceNorm::Biased => 1.0,
            CovarianceNorm::Unbiased => n / (n - 1.0),
        }
    }
}

/// A metric value that may be the positive-infinity marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub finite: bool,
}

impl MetricValue {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            finite: value.is_finite(),
        }
    }
}

fn check_same_shape(x: &impl Plane, y: &impl Plane) -> Result<()> {
    if (x.width(), x.height()) != (y.width(), y.height()) {
        return Err(Error::Shape(format!(
            "{}x{} vs {}x{}",
            x.width(),
            x.height(),
            y.width(),
            y.height()
        )));
    }
    Ok(())
}

pub fn mse(x: &impl Plane, y: &impl Plane) -> Result<f64> {
    check_same_shape(x, y)?;
    let sum: f64 = (0..x.len())
        .map(|i| {
            let d = x.value(i) - y.value(i);
            d * d
        })
        .sum();
    Ok(sum / x.len() as f64)
}

/// `10 log10(data_range^2 / mse)`; infinite when the images are identical.
pub fn psnr(x: &impl Plane, y: &impl Plane, data_range: f64) -> Result<MetricValue> {
    if !(data_range.is_finite() && data_range > 0.0) {
        return Err(Error::Argument(format!(
            "data_range must be positive, got {data_range}"
        )));
    }
    Ok(psnr_from_mse(mse(x, y)?, data_range))
}

pub(crate) fn psnr_from_mse(mse: f64, data_range: f64) -> MetricValue {
    if mse == 0.0 {
        MetricValue::new(f64::INFINITY)
    } else {
        MetricValue::new(10.0 * (data_range * data_range / mse).log10())
    }
}

/// Mean SSIM over the interior of the image, using a uniform window.
///
/// Only windows lying entirely inside the image contribute, which is the
/// same as filtering with any boundary extension and cropping
/// `(window_size - 1) / 2` pixels from every side.
pub fn ssim(x: &impl Plane, y: &impl Plane, cfg: &SsimConfig) -> Result<f64> {
    SsimReference::new(x, cfg)?.compare(y)
}

/// Windowed statistics of a fixed reference image, reusable across many
/// comparisons.
#[derive(Debug, Clone)]
pub struct SsimReference {
    width: usize,
    height: usize,
    cfg: SsimConfig,
    samples: Vec<f64>,
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl SsimReference {
    pub fn new(x: &impl Plane, cfg: &SsimConfig) -> Result<Self> {
        cfg.validate_for(x.width(), x.height())?;
        let samples = x.to_f64_vec();
        let (mean, variance) = window_moments(&samples, x.width(), x.height(), cfg);
        Ok(Self {
            width: x.width(),
            height: x.height(),
            cfg: *cfg,
            samples,
            mean,
            variance,
        })
    }

    pub fn config(&self) -> &SsimConfig {
        &self.cfg
    }

    pub fn compare(&self, y: &impl Plane) -> Result<f64> {
        if (self.width, self.height) != (y.width(), y.height()) {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.width,
                self.height,
                y.width(),
                y.height()
            )));
        }
        let ys = y.to_f64_vec();
        let (mean_y, var_y) = window_moments(&ys, self.width, self.height, &self.cfg);
        let products: Vec<f64> = self.samples.iter().zip(&ys).map(|(a, b)| a * b).collect();
        let cross = box_sums(&products, self.width, self.height, self.cfg.window_size);

        let n = (self.cfg.window_size * self.cfg.window_size) as f64;
        let norm = self.cfg.norm_factor();
        let (c1, c2) = (self.cfg.c1(), self.cfg.c2());
        let mut total = 0.0;
        for i in 0..cross.len() {
            let (mx, my) = (self.mean[i], mean_y[i]);
            let cov = norm * (cross[i] / n - mx * my);
            let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
            let den = (mx * mx + my * my + c1) * (self.variance[i] + var_y[i] + c2);
            total += num / den;
        }
        Ok(total / cross.len() as f64)
    }
}

/// SSIM of `x` against each two-level image `y_t`, where `y_t` is `lo` at
/// pixels below `t` and `hi` elsewhere, for `t = 1..=levels.len()` and
/// `levels[t - 1] = (lo, hi)`.
///
/// Every window statistic of `y_t` follows from two integer sums per window:
/// the number of pixels at or above `t` and the sum of their values. Both are
/// updated in place as `t` grows, so each pixel is visited once per window
/// it belongs to over the whole sweep.
pub fn ssim_two_level_sweep(x: &GrayImage, levels: &[(f64, f64)], cfg: &SsimConfig) -> Result<Vec<f64>> {
    cfg.validate_for(x.width(), x.height())?;
    if levels.len() >= LEVELS {
        return Err(Error::Argument(format!(
            "at most {} thresholds, got {}",
            LEVELS - 1,
            levels.len()
        )));
    }
    let (width, height, win) = (x.width(), x.height(), cfg.window_size);
    let (out_w, out_h) = (width - win + 1, height - win + 1);
    let samples = x.to_f64_vec();
    let squares: Vec<f64> = samples.iter().map(|v| v * v).collect();
    // Integer sums of at most 49 * 255^2, exact in f64.
    let sum_x: Vec<i64> = box_sums(&samples, width, height, win)
        .iter()
        .map(|&s| s as i64)
        .collect();
    let sum_xx: Vec<i64> = box_sums(&squares, width, height, win)
        .iter()
        .map(|&s| s as i64)
        .collect();

    let n_int = (win * win) as i64;
    let n = n_int as f64;
    let scale = cfg.norm_factor() / (n * n);
    let (c1, c2) = (cfg.c1(), cfg.c2());
    let mean_x: Vec<f64> = sum_x.iter().map(|&s| s as f64 / n).collect();
    let var_x: Vec<f64> = sum_x
        .iter()
        .zip(&sum_xx)
        .map(|(&s, &ss)| (n_int * ss - s * s) as f64 * scale)
        .collect();

    // Pixels grouped by level, so raising t removes one group from the upper class.
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by_key(|&i| x.pixels()[i]);
    let mut upper_count = vec![n_int; sum_x.len()];
    let mut upper_sum = sum_x.clone();
    let mut next = 0;

    let mut out = Vec::with_capacity(levels.len());
    for (t, &(lo, hi)) in levels.iter().enumerate().map(|(i, l)| (i + 1, l)) {
        let mut changed = false;
        while next < order.len() && usize::from(x.pixels()[order[next]]) < t {
            let idx = order[next];
            let (r, c) = (idx / width, idx % width);
            let v = i64::from(x.pixels()[idx]);
            for wr in r.saturating_sub(win - 1)..=r.min(out_h - 1) {
                let row = wr * out_w;
                for wc in c.saturating_sub(win - 1)..=c.min(out_w - 1) {
                    upper_count[row + wc] -= 1;
                    upper_sum[row + wc] -= v;
                }
            }
            next += 1;
            changed = true;
        }
        if !changed && t > 1 && levels[t - 2] == (lo, hi) {
            let prev = out[t - 2];
            out.push(prev);
            continue;
        }

        let d = hi - lo;
        let mut total = 0.0;
        for j in 0..sum_x.len() {
            let m = upper_count[j];
            let mx = mean_x[j];
            let my = lo + d * m as f64 / n;
            let var_y = d * d * (m * (n_int - m)) as f64 * scale;
            let cov = d * (n_int * upper_sum[j] - sum_x[j] * m) as f64 * scale;
            let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
            let den = (mx * mx + my * my + c1) * (var_x[j] + var_y + c2);
            total += num / den;
        }
        out.push(total / sum_x.len() as f64);
    }
    Ok(out)
}

fn window_moments(samples: &[f64], width: usize, height: usize, cfg: &SsimConfig) -> (Vec<f64>, Vec<f64>) {
    let n = (cfg.window_size * cfg.window_size) as f64;
    let norm = cfg.norm_factor();
    let squares: Vec<f64> = samples.iter().map(|v| v * v).collect();
    let sums = box_sums(samples, width, height, cfg.window_size);
    let sq_sums = box_sums(&squares, width, height, cfg.window_size);
    let mean: Vec<f64> = sums.iter().map(|s| s / n).collect();
    let variance = mean
        .iter()
        .zip(&sq_sums)
        .map(|(m, sq)| norm * (sq / n - m * m))
        .collect();
    (mean, variance)
}

/// Sums over every `win x win` window fully inside the image, row-major
/// over window origins.
fn box_sums(data: &[f64], width: usize, height: usize, win: usize) -> Vec<f64> {
    let out_w = width - win + 1;
    let out_h = height - win + 1;
    let mut rows = vec![0.0; out_w * height];
    for y in 0..height {
        let src = &data[y * width..(y + 1) * width];
        let dst = &mut rows[y * out_w..(y + 1) * out_w];
        for (x, d) in dst.iter_mut().enumerate() {
            *d = src[x..x + win].iter().sum();
        }
    }
    let mut out = vec![0.0; out_w * out_h];
    for y in 0..out_h {
        let dst = &mut out[y * out_w..(y + 1) * out_w];
        for dy in 0..win {
            let src = &rows[(y + dy) * out_w..(y + dy + 1) * out_w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
    out
}

/// Pearson correlation coefficient.
///
/// Returns `Ok(None)` when either input is constant. Means and moments are
/// accumulated with compensated summation and the result is clamped to
/// `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "pearson inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Argument("pearson needs at least two samples".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Argument("pearson inputs must be finite".into()));
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Ok(None);
    }

    let n = x.len() as f64;
    let mx = compensated_sum(x.iter().copied()) / n;
    let my = compensated_sum(y.iter().copied()) / n;
    let sxy = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = compensated_sum(x.iter().map(|a| (a - mx) * (a - mx)));
    let syy = compensated_sum(y.iter().map(|b| (b - my) * (b - my)));
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// Neumaier summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A full-reference quality score of a reconstruction against its source.
///
/// Extension point for metrics beyond SSIM and PSNR.
pub trait QualityMetric: Sync {
    fn name(&self) -> &'static str;
    fn score(&self, reference: &GrayImage, candidate: &RealImage) -> Result<f64>;
}

/// Windowed SSIM as a [`QualityMetric`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Ssim(pub SsimConfig);

impl QualityMetric for Ssim {
    fn name(&self) -> &'static str {
        "ssim"
    }

    fn score(&self, reference: &GrayImage, candidate: &RealImage) -> Result<f64> {
        ssim(reference, candidate, &self.0)
    }
}

/// PSNR in decibels as a [`QualityMetric`]; identical images score `+inf`.
#[derive(Debug, Clone, Copy)]
pub struct Psnr {
    pub data_range: f64,
}

impl Default for Psnr {
    fn default() -> Self {
        Self { data_range: 255.0 }
    }
}

impl QualityMetric for Psnr {
    fn name(&self) -> &'static str {
        "psnr"
    }

    fn score(&self, reference: &GrayImage, candidate: &RealImage) -> Result<f64> {
        psnr(reference, candidate, self.data_range).map(|v| v.value)
    }
}
