//! Synthetic labeled "faces" for tests and demos.
//!
//! Each expression is a fixed texture made of five separable cosine
//! products with decreasing amplitude; samples add i.i.d. Gaussian pixel
//! noise. All five regions are cropped from fixed rectangles about twice
//! their canonical size.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::decode::to_text_image;
use crate::error::{Error, Result};
use crate::imaging::{GrayImage, Rect};
use crate::model::{write_atomic, CropSet, Expression, LabeledImage, ManifestEntry, TrainingManifest};

pub const FACE_HEIGHT: usize = 320;
pub const FACE_WIDTH: usize = 200;

/// Seed for the class textures; fixed so every dataset shares the same classes.
const TEXTURE_SEED: u64 = 0x00e1_6e4e;

const AMPLITUDES: [f64; 5] = [0.16, 0.11, 0.075, 0.05, 0.035];

/// Crop rectangles for the synthetic face layout.
pub fn standard_crops() -> CropSet {
    CropSet::new([
        Rect::new(10, 20, 80, 80),
        Rect::new(110, 20, 80, 80),
        Rect::new(40, 110, 120, 140),
        Rect::new(10, 195, 180, 120),
        Rect::new(5, 100, 190, 220),
    ])
    .expect("valid layout")
}

struct Component {
    amplitude: f64,
    row_freq: f64,
    row_phase: f64,
    col_freq: f64,
    col_phase: f64,
}

fn texture(expression: Expression) -> Vec<Component> {
    let mut rng = ChaCha8Rng::seed_from_u64(TEXTURE_SEED + expression.index() as u64);
    AMPLITUDES
        .iter()
        .enumerate()
        .map(|(j, &amplitude)| Component {
            amplitude,
            // distinct row frequencies keep the products nearly uncorrelated
            row_freq: (j as f64 + 1.0) * 1.7 + rng.random_range(0.0..0.5),
            row_phase: rng.random_range(0.0..TAU),
            col_freq: rng.random_range(1.0..6.0),
            col_phase: rng.random_range(0.0..TAU),
        })
        .collect()
}

/// The noise-free texture of one expression.
pub fn class_pattern(expression: Expression) -> GrayImage {
    let components = texture(expression);
    GrayImage::from_fn(FACE_HEIGHT, FACE_WIDTH, |i, j| {
        let y = i as f64 / FACE_HEIGHT as f64;
        let x = j as f64 / FACE_WIDTH as f64;
        0.5 + components
            .iter()
            .map(|c| {
                c.amplitude * (TAU * c.row_freq * y + c.row_phase).cos() * (TAU * c.col_freq * x + c.col_phase).cos()
            })
            .sum::<f64>()
    })
    .expect("pattern is finite")
}

/// Noisy samples of every expression.
#[derive(Clone, Debug)]
pub struct SyntheticDataset {
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticDataset {
    pub fn new(noise_sigma: f64, seed: u64) -> Self {
        SyntheticDataset { noise_sigma, seed }
    }

    /// `per_class` samples of each expression, grouped by expression.
    pub fn generate(&self, per_class: usize) -> Result<Vec<LabeledImage>> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Parameter(format!("noise sigma {}", self.noise_sigma)));
        }
        let noise = Normal::new(0.0, self.noise_sigma).map_err(|e| Error::Parameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let crops = standard_crops();
        let mut out = Vec::with_capacity(per_class * Expression::COUNT);
        for expression in Expression::ALL {
            let pattern = class_pattern(expression);
            for _ in 0..per_class {
                let pixels = pattern
                    .pixels()
                    .iter()
                    .map(|p| (p + noise.sample(&mut rng)).clamp(0.0, 1.0))
                    .collect();
                out.push(LabeledImage {
                    image: GrayImage::new(FACE_HEIGHT, FACE_WIDTH, pixels)?,
                    expression,
                    crops,
                });
            }
        }
        Ok(out)
    }
}

/// Writes samples as plain-text images under `dir` plus a `manifest.json`
/// with relative paths, returning the manifest.
pub fn write_dataset(dir: &Path, prefix: &str, samples: &[LabeledImage]) -> Result<TrainingManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let name = format!("{prefix}{i:03}_{}.txt", s.expression.name().to_lowercase());
        write_atomic(&dir.join(&name), to_text_image(&s.image).as_bytes())?;
        entries.push(ManifestEntry {
            image: name.into(),
            expression: s.expression,
            crops: s.crops,
        });
    }
    let manifest = TrainingManifest { entries };
    write_atomic(&dir.join("manifest.json"), manifest.to_json().as_bytes())?;
    Ok(manifest)
}
