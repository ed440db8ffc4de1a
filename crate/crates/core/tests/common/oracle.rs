//! Slow, direct implementations used as reference values in tests.
//!
//! Nothing here calls into the accelerated code paths of the library: class
//! statistics come from probabilities, SSIM is computed patch by patch and
//! correlations use plain two-pass sums.

/// BT.601 luma rounded half away from zero, computed on doubled integers.
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let s = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
    ((2 * s + 1000) / 2000) as u8
}

pub fn probabilities(pixels: &[u8]) -> [f64; 256] {
    let mut counts = [0u64; 256];
    for &p in pixels {
        counts[p as usize] += 1;
    }
    let n = pixels.len() as f64;
    counts.map(|c| c as f64 / n)
}

/// Inclusive gray-level ranges of the classes cut by `thresholds`.
pub fn classes(thresholds: &[usize]) -> Vec<(usize, usize)> {
    let mut bounds = vec![0];
    bounds.extend_from_slice(thresholds);
    bounds.push(256);
    bounds.windows(2).map(|w| (w[0], w[1] - 1)).collect()
}

pub fn otsu(p: &[f64; 256], thresholds: &[usize]) -> f64 {
    let mu_t: f64 = (0..256).map(|i| i as f64 * p[i]).sum();
    classes(thresholds)
        .into_iter()
        .map(|(lo, hi)| {
            let w: f64 = p[lo..=hi].iter().sum();
            if w == 0.0 {
                return 0.0;
            }
            let mu = (lo..=hi).map(|i| i as f64 * p[i]).sum::<f64>() / w;
            w * (mu - mu_t) * (mu - mu_t)
        })
        .sum()
}

pub fn kapur(p: &[f64; 256], thresholds: &[usize]) -> f64 {
    classes(thresholds)
        .into_iter()
        .map(|(lo, hi)| {
            let w: f64 = p[lo..=hi].iter().sum();
            if w == 0.0 {
                return 0.0;
            }
            -p[lo..=hi]
                .iter()
                .filter(|&&q| q > 0.0)
                .map(|&q| (q / w) * (q / w).ln())
                .sum::<f64>()
        })
        .sum()
}

/// Within-class and total variance, for the variance decomposition check.
pub fn within_and_total_variance(p: &[f64; 256], thresholds: &[usize]) -> (f64, f64) {
    let mu_t: f64 = (0..256).map(|i| i as f64 * p[i]).sum();
    let total: f64 = (0..256).map(|i| p[i] * (i as f64 - mu_t).powi(2)).sum();
    let within = classes(thresholds)
        .into_iter()
        .map(|(lo, hi)| {
            let w: f64 = p[lo..=hi].iter().sum();
            if w == 0.0 {
                return 0.0;
            }
            let mu = (lo..=hi).map(|i| i as f64 * p[i]).sum::<f64>() / w;
            (lo..=hi).map(|i| p[i] * (i as f64 - mu).powi(2)).sum::<f64>()
        })
        .sum();
    (within, total)
}

/// Replaces each pixel by the mean of the pixels in its class.
pub fn reconstruct_class_mean(pixels: &[u8], t: usize) -> Vec<f64> {
    let (mut sum, mut count) = ([0u64; 2], [0u64; 2]);
    for &p in pixels {
        let k = usize::from(p as usize >= t);
        sum[k] += u64::from(p);
        count[k] += 1;
    }
    pixels
        .iter()
        .map(|&p| {
            let k = usize::from(p as usize >= t);
            sum[k] as f64 / count[k] as f64
        })
        .collect()
}

pub fn mse(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64
}

pub fn psnr(x: &[f64], y: &[f64]) -> f64 {
    let e = mse(x, y);
    if e == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / e).log10()
    }
}

/// Mean SSIM over every fully contained `win`×`win` patch, with unbiased
/// (co)variances when `unbiased` is set.
pub fn ssim(x: &[f64], y: &[f64], width: usize, height: usize, win: usize, unbiased: bool) -> f64 {
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let n = (win * win) as f64;
    let denom = if unbiased { n - 1.0 } else { n };
    let mut total = 0.0;
    let mut patches = 0usize;
    for top in 0..=height - win {
        for left in 0..=width - win {
            let idx = |i: usize, j: usize| (top + i) * width + left + j;
            let mut mx = 0.0;
            let mut my = 0.0;
            for i in 0..win {
                for j in 0..win {
                    mx += x[idx(i, j)];
                    my += y[idx(i, j)];
                }
            }
            mx /= n;
            my /= n;
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..win {
                for j in 0..win {
                    let dx = x[idx(i, j)] - mx;
                    let dy = y[idx(i, j)] - my;
                    vx += dx * dx;
                    vy += dy * dy;
                    cov += dx * dy;
                }
            }
            vx /= denom;
            vy /= denom;
            cov /= denom;
            total += (2.0 * mx * my + c1) * (2.0 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            patches += 1;
        }
    }
    total / patches as f64
}

/// Plain two-pass Pearson correlation; `None` for a constant series.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Pearson over the points where both series are finite.
pub fn pearson_finite(x: &[f64], y: &[f64]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(&a, &b)| (a, b))
        .unzip();
    if xs.len() < 2 {
        None
    } else {
        pearson(&xs, &ys)
    }
}

/// One image's sweep curves: objective and metric values at `T = 1..=255`
/// under the class-mean reconstruction.
pub struct Curves {
    pub otsu: Vec<f64>,
    pub kapur: Vec<f64>,
    pub ssim: Vec<f64>,
    pub psnr: Vec<f64>,
}

pub fn sweep(pixels: &[u8], width: usize, height: usize) -> Curves {
    let p = probabilities(pixels);
    let x: Vec<f64> = pixels.iter().map(|&v| f64::from(v)).collect();
    let mut c = Curves {
        otsu: Vec::new(),
        kapur: Vec::new(),
        ssim: Vec::new(),
        psnr: Vec::new(),
    };
    for t in 1..256 {
        let rec = reconstruct_class_mean(pixels, t);
        c.otsu.push(otsu(&p, &[t]));
        c.kapur.push(kapur(&p, &[t]));
        c.ssim.push(ssim(&x, &rec, width, height, 7, true));
        c.psnr.push(psnr(&x, &rec));
    }
    c
}

/// The four correlations in `otsu_ssim, otsu_psnr, kapur_ssim, kapur_psnr`
/// order, plus the number of non-finite PSNR values.
pub fn correlations(c: &Curves) -> ([Option<f64>; 4], usize) {
    let dropped = c.psnr.iter().filter(|v| !v.is_finite()).count();
    (
        [
            pearson_finite(&c.otsu, &c.ssim),
            pearson_finite(&c.otsu, &c.psnr),
            pearson_finite(&c.kapur, &c.ssim),
            pearson_finite(&c.kapur, &c.psnr),
        ],
        dropped,
    )
}
