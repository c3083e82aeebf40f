//! Grayscale images, the five facial regions and the crop/resize steps that
//! turn a face photo into canonical region images.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// ITU-R BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Row-major luminance grid with values in `[0, 1]`.
#[derive(Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::shape(format!("empty {height}x{width} image")));
        }
        if pixels.len() != height * width {
            return Err(Error::shape(format!(
                "{height}x{width} image needs {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        if let Some(index) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::shape(format!(
                "pixel {index} = {} is outside [0, 1]",
                pixels[index]
            )));
        }
        Ok(GrayImage { height, width, pixels })
    }

    /// Builds an image by evaluating `f(row, col)`, clamping results into `[0, 1]`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                let v = f(i, j);
                if v.is_nan() {
                    return Err(Error::NonFinite { index: i * width + j });
                }
                pixels.push(v.clamp(0.0, 1.0));
            }
        }
        GrayImage::new(height, width, pixels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Copies out `rect`, which must lie inside the image.
    pub fn crop(&self, rect: Rect) -> Result<GrayImage> {
        if rect.w == 0 || rect.h == 0 || !rect.fits_in(self.width, self.height) {
            return Err(Error::Bounds {
                rect,
                width: self.width,
                height: self.height,
            });
        }
        let mut pixels = Vec::with_capacity(rect.w * rect.h);
        for i in rect.y..rect.y + rect.h {
            let start = i * self.width + rect.x;
            pixels.extend_from_slice(&self.pixels[start..start + rect.w]);
        }
        Ok(GrayImage {
            height: rect.h,
            width: rect.w,
            pixels,
        })
    }
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GrayImage({}x{})", self.height, self.width)
    }
}

/// Crop rectangle in source pixels; `(x, y)` is the top-left corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Rect { x, y, w, h }
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.x.checked_add(self.w).is_some_and(|r| r <= width)
            && self.y.checked_add(self.h).is_some_and(|b| b <= height)
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(x={}, y={}, w={}, h={})", self.x, self.y, self.w, self.h)
    }
}

/// The five facial regions, each with fixed canonical `(rows, cols)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    LeftEye,
    RightEye,
    Nose,
    Lip,
    NoseLip,
}

impl RegionKind {
    pub const ALL: [RegionKind; 5] = [
        RegionKind::LeftEye,
        RegionKind::RightEye,
        RegionKind::Nose,
        RegionKind::Lip,
        RegionKind::NoseLip,
    ];

    /// Canonical `(rows, cols)` every crop of this region is resized to.
    pub const fn canonical_dims(self) -> (usize, usize) {
        match self {
            RegionKind::LeftEye | RegionKind::RightEye => (40, 40),
            RegionKind::Nose => (70, 60),
            RegionKind::Lip => (60, 90),
            RegionKind::NoseLip => (110, 95),
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    /// Identifier used in manifests, model files and fixture names.
    pub const fn name(self) -> &'static str {
        match self {
            RegionKind::LeftEye => "left_eye",
            RegionKind::RightEye => "right_eye",
            RegionKind::Nose => "nose",
            RegionKind::Lip => "lip",
            RegionKind::NoseLip => "nose_lip",
        }
    }

    /// Human label, as used in printed tables.
    pub const fn label(self) -> &'static str {
        match self {
            RegionKind::LeftEye => "Left eye",
            RegionKind::RightEye => "Right eye",
            RegionKind::Nose => "Nose",
            RegionKind::Lip => "Lip",
            RegionKind::NoseLip => "Nose and lip together",
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_lowercase();
        RegionKind::ALL
            .into_iter()
            .find(|r| r.name() == wanted)
            .ok_or_else(|| Error::Parameter(format!("unknown region {s:?}")))
    }
}

/// A region together with where to find it in one particular source image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionSpec {
    kind: RegionKind,
    rect: Rect,
}

impl RegionSpec {
    pub fn new(kind: RegionKind, rect: Rect) -> Result<Self> {
        if rect.w < 2 || rect.h < 2 {
            return Err(Error::Parameter(format!("{kind} crop {rect} must be at least 2x2")));
        }
        Ok(RegionSpec { kind, rect })
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }
}

/// Luma of three equal-sized channel planes, each in `[0, 1]`.
pub fn to_grayscale(r: &GrayImage, g: &GrayImage, b: &GrayImage) -> Result<GrayImage> {
    if r.dims() != g.dims() || r.dims() != b.dims() {
        return Err(Error::shape(format!(
            "channel planes differ in size: {:?}, {:?}, {:?}",
            r.dims(),
            g.dims(),
            b.dims()
        )));
    }
    let [wr, _, wb] = LUMA_WEIGHTS;
    // g + wr(r - g) + wb(b - g) equals the weighted sum but maps gray to itself exactly
    let pixels = r
        .pixels
        .iter()
        .zip(&g.pixels)
        .zip(&b.pixels)
        .map(|((r, g), b)| (g + wr * (r - g) + wb * (b - g)).clamp(0.0, 1.0))
        .collect();
    GrayImage::new(r.height, r.width, pixels)
}

pub fn crop(img: &GrayImage, spec: &RegionSpec) -> Result<GrayImage> {
    img.crop(spec.rect)
}

/// Bilinear resampling with pixel-center alignment and edge clamping.
pub fn resize(img: &GrayImage, target_rows: usize, target_cols: usize) -> Result<GrayImage> {
    if target_rows == 0 || target_cols == 0 {
        return Err(Error::shape(format!("cannot resize to {target_rows}x{target_cols}")));
    }
    if img.dims() == (target_rows, target_cols) {
        return Ok(img.clone());
    }
    let ys = sample_positions(img.height, target_rows);
    let xs = sample_positions(img.width, target_cols);
    let mut pixels = Vec::with_capacity(target_rows * target_cols);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = img.get(y0, x0) * (1.0 - fx) + img.get(y0, x1) * fx;
            let bottom = img.get(y1, x0) * (1.0 - fx) + img.get(y1, x1) * fx;
            pixels.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0));
        }
    }
    GrayImage::new(target_rows, target_cols, pixels)
}

/// For each output index: the two source indices to blend and the weight of the second.
fn sample_positions(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = s.floor();
            let i0 = lo as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - lo)
        })
        .collect()
}

/// Crops one region and resizes it to the region's canonical dimensions.
pub fn extract_region(img: &GrayImage, spec: &RegionSpec) -> Result<GrayImage> {
    let (rows, cols) = spec.kind.canonical_dims();
    resize(&crop(img, spec)?, rows, cols)
}

/// Reinterprets an image as a matrix with one row per pixel row.
pub fn region_to_matrix(img: &GrayImage) -> Matrix {
    Matrix::new(img.height, img.width, img.pixels.clone()).expect("images are non-empty and finite")
}

pub fn matrix_to_image(m: &Matrix) -> Result<GrayImage> {
    GrayImage::new(m.rows(), m.cols(), m.data().to_vec())
}
