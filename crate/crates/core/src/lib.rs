//! Measures how strongly full-reference quality metrics (SSIM, PSNR) track
//! histogram thresholding objectives (Otsu, Kapur).
//!
//! For every bi-level threshold `T = 1..=255` an image is reconstructed from
//! its classes and scored; the objective and metric curves are then
//! correlated, and per-image correlations are aggregated over a dataset.

pub mod dataset;
pub mod error;
pub mod image;
pub mod metrics;
pub mod objectives;
pub mod plot;
pub mod report;
pub mod sweep;

pub use dataset::{discover_images, run_batch, BatchOutcome, ImageEntry, RunConfig, Workers};
pub use error::{Error, Result};
pub use image::{
    decode_image, histogram, load_gray, to_grayscale, DecodedImage, GrayImage, Histogram, Plane, RealImage,
};
pub use metrics::{
    mse, pearson, psnr, ssim, ssim_two_level_sweep, CovarianceNorm, MetricValue, QualityMetric, SsimConfig,
    SsimReference,
};
pub use objectives::{
    class_stats, exhaustive_search, kapur_objective, otsu_objective, reconstruct, ClassStats, Objective, ObjectiveKind,
    ReconstructionRule, ThresholdSet,
};
pub use plot::emit_plots;
pub use report::{aggregate, AggregateReport, WinCounts};
pub use sweep::{correlate, normalize_curve, sweep_image, CorrelationRecord, MetricKind, Pair, SweepCurves};
