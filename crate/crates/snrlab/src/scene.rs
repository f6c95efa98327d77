//! Test scene generation: random photon allocation, flat baselines, and
//! image-derived scenes normalized to a photon budget.

use std::path::Path;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::hadamard::TransformSize;
use crate::{Error, Result};

/// Nonnegative per-pixel photon intensities. Brightness is the exact sum of
/// the entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneVector {
    pixels: Vec<f64>,
}

impl SceneVector {
    pub fn from_pixels(pixels: Vec<f64>) -> Result<Self> {
        for (i, &p) in pixels.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Domain(format!(
                    "pixel {i} must be nonnegative and finite, got {p}"
                )));
            }
        }
        Ok(SceneVector { pixels })
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Total photon count over all pixels.
    pub fn brightness(&self) -> f64 {
        self.pixels.iter().sum()
    }
}

/// Allocate exactly `x0` photons over `n` pixels, uniformly at random.
///
/// Sequential binomial splitting: pixel i receives Binomial(remaining,
/// 1/(n-i)) photons, which realizes an exact multinomial with equal cell
/// probabilities. The total is conserved exactly, so brightness does not
/// fluctuate across trials.
pub fn random_uniform(size: TransformSize, x0: u64, rng: &mut impl Rng) -> SceneVector {
    let n = size.get();
    let mut pixels = vec![0.0f64; n];
    let mut remaining = x0;
    for i in 0..n - 1 {
        if remaining == 0 {
            break;
        }
        let p = 1.0 / (n - i) as f64;
        let take = Binomial::new(remaining, p)
            .expect("p in (0,1]")
            .sample(rng);
        pixels[i] = take as f64;
        remaining -= take;
    }
    pixels[n - 1] = remaining as f64;
    SceneVector { pixels }
}

/// Deterministic baseline: every pixel holds `x0 / n` photons.
pub fn flat(size: TransformSize, x0: f64) -> Result<SceneVector> {
    if !x0.is_finite() || x0 < 0.0 {
        return Err(Error::Domain(format!(
            "photon budget must be nonnegative and finite, got {x0}"
        )));
    }
    let n = size.get();
    Ok(SceneVector {
        pixels: vec![x0 / n as f64; n],
    })
}

/// Scene from a binary PGM (P5) image: grayscale intensities are area-average
/// downsampled (in row-major order) to `n` buckets and rescaled so the total
/// equals `x0`.
pub fn from_pgm(path: &Path, size: TransformSize, x0: f64) -> Result<SceneVector> {
    if !x0.is_finite() || x0 < 0.0 {
        return Err(Error::Domain(format!(
            "photon budget must be nonnegative and finite, got {x0}"
        )));
    }
    let bytes = std::fs::read(path)?;
    let samples = parse_pgm(path, &bytes)?;
    let n = size.get();
    if samples.len() < n {
        return Err(Error::Domain(format!(
            "image {} has {} pixels, fewer than the {} required",
            path.display(),
            samples.len(),
            n
        )));
    }
    let mut buckets = area_average(&samples, n);
    let total: f64 = buckets.iter().sum();
    if total <= 0.0 {
        if x0 > 0.0 {
            return Err(Error::DegenerateScene(format!(
                "image {} is all black; cannot scale to brightness {x0}",
                path.display()
            )));
        }
        return Ok(SceneVector {
            pixels: vec![0.0; n],
        });
    }
    let scale = x0 / total;
    for b in buckets.iter_mut() {
        *b *= scale;
    }
    Ok(SceneVector { pixels: buckets })
}

/// Exact area averaging of `m` samples into `n <= m` buckets. Both grids are
/// laid over a common axis of `m * n` units, so fractional overlaps are
/// integer unit counts and no seam is lost.
fn area_average(samples: &[f64], n: usize) -> Vec<f64> {
    let m = samples.len();
    let mut out = vec![0.0f64; n];
    for (j, &v) in samples.iter().enumerate() {
        let lo = j * n;
        let hi = lo + n;
        let mut pos = lo;
        while pos < hi {
            let bucket = pos / m;
            let bucket_end = (bucket + 1) * m;
            let step = bucket_end.min(hi) - pos;
            out[bucket] += v * step as f64;
            pos += step;
        }
    }
    out
}

/// Minimal binary PGM (P5) reader. Supports `#` comments and 8- or 16-bit
/// samples (16-bit big-endian, per the format).
fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<Vec<f64>> {
    let fail = |reason: &str| Error::PgmFormat {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(fail("missing P5 magic"));
    }
    let mut pos = 2usize;
    let mut header = [0u64; 3]; // width, height, maxval
    for slot in header.iter_mut() {
        *slot = read_header_int(bytes, &mut pos).ok_or_else(|| fail("truncated header"))?;
    }
    let (width, height, maxval) = (header[0], header[1], header[2]);
    if width == 0 || height == 0 {
        return Err(fail("zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(fail("maxval out of range 1..=65535"));
    }
    // Exactly one whitespace byte separates maxval from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(fail("missing whitespace before raster"));
    }
    pos += 1;
    let count = (width * height) as usize;
    let wide = maxval > 255;
    let needed = count * if wide { 2 } else { 1 };
    if bytes.len() < pos + needed {
        return Err(fail("raster shorter than width * height"));
    }
    let raster = &bytes[pos..pos + needed];
    let samples = if wide {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect()
    } else {
        raster.iter().map(|&b| b as f64).collect()
    };
    Ok(samples)
}

/// Next integer token in a PGM header, skipping whitespace and `#` comments.
fn read_header_int(bytes: &[u8], pos: &mut usize) -> Option<u64> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == start {
        return None;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()?
        .parse()
        .ok()
}
