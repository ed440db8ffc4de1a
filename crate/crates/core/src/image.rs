//! Gray-level images, histograms and the decoding boundary.
//!
//! Everything downstream of this module consumes [`GrayImage`] or
//! [`Histogram`]; codec details stay here.

use std::path::Path;

use image::{DynamicImage, ImageError, ImageReader};

use crate::error::{Error, Result};

/// Number of gray levels for 8-bit images.
pub const LEVELS: usize = 256;

/// Read access shared by integer and real-valued images.
pub trait Plane {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    /// Sample at row-major index `idx`.
    fn value(&self, idx: usize) -> f64;

    fn len(&self) -> usize {
        self.width() * self.height()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn to_f64_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }
}

/// An 8-bit single-channel image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    /// An image where every pixel has value `level`.
    pub fn filled(width: usize, height: usize, level: u8) -> Result<Self> {
        Self::new(width, height, vec![level; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

impl Plane for GrayImage {
    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }

    #[inline]
    fn value(&self, idx: usize) -> f64 {
        f64::from(self.pixels[idx])
    }
}

/// A real-valued single-channel image, used for thresholded reconstructions.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl RealImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        if let Some(i) = pixels.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("non-finite pixel at index {i}")));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

impl From<&GrayImage> for RealImage {
    fn from(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            pixels: img.to_f64_vec(),
        }
    }
}

impl Plane for RealImage {
    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }

    #[inline]
    fn value(&self, idx: usize) -> f64 {
        self.pixels[idx]
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Shape(format!("empty image ({width}x{height})")));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::Shape(format!(
            "{len} pixels do not fill a {width}x{height} image"
        )));
    }
    Ok(())
}

/// 256-bin gray-level histogram with its normalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    counts: [u64; LEVELS],
    probs: [f64; LEVELS],
    total: u64,
}

impl Histogram {
    /// Builds a histogram from raw bin counts. At least one count must be nonzero.
    pub fn from_counts(counts: [u64; LEVELS]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Argument("histogram has no mass".into()));
        }
        let mut probs = [0.0; LEVELS];
        for (p, &c) in probs.iter_mut().zip(&counts) {
            *p = c as f64 / total as f64;
        }
        Ok(Self { counts, probs, total })
    }

    pub fn counts(&self) -> &[u64; LEVELS] {
        &self.counts
    }

    pub fn probs(&self) -> &[f64; LEVELS] {
        &self.probs
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Counts gray levels of `img`.
pub fn histogram(img: &GrayImage) -> Histogram {
    let mut counts = [0u64; LEVELS];
    for &p in img.pixels() {
        counts[p as usize] += 1;
    }
    // GrayImage is never empty, so total > 0.
    Histogram::from_counts(counts).expect("non-empty image")
}

/// BT.601 luma, rounded half away from zero.
///
/// Computed in integer thousandths so the result is exact.
pub fn to_grayscale(r: &GrayImage, g: &GrayImage, b: &GrayImage) -> Result<GrayImage> {
    let dims = (r.width, r.height);
    if (g.width, g.height) != dims || (b.width, b.height) != dims {
        return Err(Error::Shape(format!(
            "channel planes differ: r {}x{}, g {}x{}, b {}x{}",
            r.width, r.height, g.width, g.height, b.width, b.height
        )));
    }
    let pixels = r
        .pixels
        .iter()
        .zip(&g.pixels)
        .zip(&b.pixels)
        .map(|((&r, &g), &b)| luma(r, g, b))
        .collect();
    GrayImage::new(dims.0, dims.1, pixels)
}

#[inline]
fn luma(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
    ((weighted + 500) / 1000).min(255) as u8
}

/// Result of decoding an image file at native resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum DecodedImage {
    Gray(GrayImage),
    Rgb { r: GrayImage, g: GrayImage, b: GrayImage },
}

impl DecodedImage {
    /// Collapses the decoded planes to a single gray plane.
    pub fn into_gray(self) -> Result<GrayImage> {
        match self {
            DecodedImage::Gray(img) => Ok(img),
            DecodedImage::Rgb { r, g, b } => to_grayscale(&r, &g, &b),
        }
    }
}

/// Decodes a PNG or JPEG file. Only 8-bit samples are accepted; an alpha
/// channel, if present, is discarded.
pub fn decode_image(path: impl AsRef<Path>) -> Result<DecodedImage> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|e| map_image_error(path, e))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);

    let planes = |raw: &[u8], channels: usize| -> Result<Vec<GrayImage>> {
        (0..channels.min(3))
            .map(|c| GrayImage::new(w, h, raw.iter().skip(c).step_by(channels).copied().collect()))
            .collect()
    };

    match decoded {
        DynamicImage::ImageLuma8(buf) => Ok(DecodedImage::Gray(GrayImage::new(w, h, buf.into_raw())?)),
        DynamicImage::ImageLumaA8(buf) => {
            let mut p = planes(buf.as_raw(), 2)?;
            Ok(DecodedImage::Gray(p.remove(0)))
        }
        DynamicImage::ImageRgb8(buf) => rgb_from(planes(buf.as_raw(), 3)?),
        DynamicImage::ImageRgba8(buf) => rgb_from(planes(buf.as_raw(), 4)?),
        other => Err(Error::Format(format!(
            "{}: {:?} samples are not 8-bit",
            path.display(),
            other.color()
        ))),
    }
}

fn rgb_from(mut planes: Vec<GrayImage>) -> Result<DecodedImage> {
    let b = planes.pop().expect("three planes");
    let g = planes.pop().expect("three planes");
    let r = planes.pop().expect("three planes");
    Ok(DecodedImage::Rgb { r, g, b })
}

fn map_image_error(path: &Path, err: ImageError) -> Error {
    match err {
        ImageError::IoError(e) => Error::io(path, e),
        ImageError::Unsupported(e) => Error::Format(format!("{}: {e}", path.display())),
        other => Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, other)),
    }
}

/// Decodes `path` and converts it to gray levels.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_image(path)?.into_gray()
}
