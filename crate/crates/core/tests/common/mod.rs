#![allow(dead_code)]

pub mod oracle;

use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const MINI_CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/mini_corpus");
pub const MINI_CORPUS_GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/mini_corpus_golden.csv");

/// Decodes an image with the `image` crate and converts it with the oracle
/// luma, returning `(pixels, width, height)`.
pub fn oracle_gray(path: &Path) -> (Vec<u8>, usize, usize) {
    let img = image::open(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let pixels = if img.color().has_color() {
        rgb.pixels().map(|p| oracle::luma(p[0], p[1], p[2])).collect()
    } else {
        img.to_luma8().into_raw()
    };
    (pixels, w as usize, h as usize)
}

/// Mini-corpus images sorted by file name, with their ids.
pub fn mini_corpus_files() -> Vec<(String, PathBuf)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(MINI_CORPUS)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), p))
        .collect()
}

/// Writes `count` small synthetic PNGs (mixed gray and RGB, some nested in a
/// subdirectory) under `dir`.
pub fn write_synthetic_dataset(dir: &Path, count: usize, seed: u64) {
    let mut rng = StdRng::seed_from_u64(seed);
    for i in 0..count {
        let (w, h) = (rng.random_range(16..40u32), rng.random_range(16..40u32));
        let modes: Vec<f64> = (0..rng.random_range(1..4))
            .map(|_| rng.random_range(20.0..235.0))
            .collect();
        let spread = rng.random_range(2.0..30.0);
        let mut sample = |x: u32, y: u32| {
            let m = modes[((x / 6 + y / 5) as usize) % modes.len()];
            (m + rng.random_range(-spread..spread)).clamp(0.0, 255.0) as u8
        };
        let sub = if i % 3 == 0 {
            dir.join("nested")
        } else {
            dir.to_path_buf()
        };
        std::fs::create_dir_all(&sub).unwrap();
        let path = sub.join(format!("img_{i:02}.png"));
        if i % 2 == 0 {
            image::GrayImage::from_fn(w, h, |x, y| image::Luma([sample(x, y)]))
                .save(&path)
                .unwrap();
        } else {
            image::RgbImage::from_fn(w, h, |x, y| {
                let v = sample(x, y);
                image::Rgb([v, v.wrapping_add(17), v / 2])
            })
            .save(&path)
            .unwrap();
        }
    }
}

/// All regular files under `dir` as `(relative path, contents)`, sorted.
pub fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

/// Relative or absolute difference, whichever is smaller.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    let diff = (a - b).abs();
    diff <= tol || diff <= tol * a.abs().max(b.abs())
}

pub fn close_opt(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => close(a, b, tol),
        (None, None) => true,
        _ => false,
    }
}
