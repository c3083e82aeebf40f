#![allow(dead_code)]

use std::path::PathBuf;

use eigenexpr::synth::standard_crops;
use eigenexpr::{Expression, ExpressionModel, GrayImage, LabeledImage, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut m = random_matrix(rng, n, n);
    for i in 0..n {
        for j in 0..i {
            let v = m[(j, i)];
            m[(i, j)] = v;
        }
    }
    m
}

pub fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize, lo: f64, hi: f64) -> GrayImage {
    GrayImage::new(h, w, (0..h * w).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// One random full-size face image per expression, sharing the synthetic crop layout.
pub fn random_faces(seed: u64) -> Vec<LabeledImage> {
    let mut rng = rng(seed);
    Expression::ALL
        .into_iter()
        .map(|expression| LabeledImage {
            image: random_image(
                &mut rng,
                eigenexpr::synth::FACE_HEIGHT,
                eigenexpr::synth::FACE_WIDTH,
                0.0,
                1.0,
            ),
            expression,
            crops: standard_crops(),
        })
        .collect()
}

/// Every number in a model as raw bits, in canonical cell order.
pub fn model_bits(model: &ExpressionModel) -> Vec<u64> {
    let mut bits = Vec::new();
    for (_, basis) in model.cells() {
        for p in basis.pairs() {
            bits.push(p.value.to_bits());
            bits.extend(p.vector.iter().map(|x| x.to_bits()));
        }
    }
    bits
}

// ---- brute-force oracles, deliberately written as plain loops ----

pub fn oracle_column_mean(m: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (j, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..m.rows() {
            s += m.data()[i * m.cols() + j];
        }
        *o = s / m.rows() as f64;
    }
    out
}

pub fn oracle_covariance(m: &Matrix) -> Vec<Vec<f64>> {
    let (n, q) = (m.rows(), m.cols());
    let mean = oracle_column_mean(m);
    let mut out = vec![vec![0.0; q]; q];
    for j in 0..q {
        for k in 0..q {
            let mut s = 0.0;
            for i in 0..n {
                s += (m.data()[i * q + j] - mean[j]) * (m.data()[i * q + k] - mean[k]);
            }
            out[j][k] = s / (n - 1) as f64;
        }
    }
    out
}

pub fn oracle_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = b[i] - a[i];
        s += d * d;
    }
    s.sqrt()
}

/// Eigenvalues from nalgebra, descending.
pub fn reference_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    let dm = nalgebra::DMatrix::from_row_slice(n, n, m.data());
    let mut v: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}
