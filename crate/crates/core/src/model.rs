//! Training manifests, per-expression reference bases and the model file.
//!
//! Each (expression, region) cell of a model holds the [`EigenBasis`] of the
//! pixel-wise mean of that expression's training crops.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::decode::load_gray;
use crate::error::{Error, Result};
use crate::features::{extract_basis, EigenBasis, BASIS_SIZE};
use crate::imaging::{extract_region, GrayImage, Rect, RegionKind, RegionSpec};
use crate::matrix::{EigenPair, Vector};

/// Version tag leading every model file.
pub const MODEL_FORMAT: &str = "eigenexpr-model/1";

/// The six basic expressions, in the row order of the printed distance tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expression {
    Surprise,
    Happy,
    Fear,
    Anger,
    Sad,
    Disgust,
}

impl Expression {
    pub const ALL: [Expression; 6] = [
        Expression::Surprise,
        Expression::Happy,
        Expression::Fear,
        Expression::Anger,
        Expression::Sad,
        Expression::Disgust,
    ];

    pub const COUNT: usize = 6;

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Expression> {
        Expression::ALL.get(i).copied()
    }

    pub const fn name(self) -> &'static str {
        match self {
            Expression::Surprise => "Surprise",
            Expression::Happy => "Happy",
            Expression::Fear => "Fear",
            Expression::Anger => "Anger",
            Expression::Sad => "Sad",
            Expression::Disgust => "Disgust",
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Expression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Expression::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown expression {s:?}")))
    }
}

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One crop rectangle per region for a single source image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CropSet {
    rects: [Rect; 5],
}

impl CropSet {
    pub fn new(rects: [Rect; 5]) -> Result<Self> {
        for (kind, rect) in RegionKind::ALL.into_iter().zip(rects) {
            RegionSpec::new(kind, rect)?;
        }
        Ok(CropSet { rects })
    }

    pub fn from_map(map: &BTreeMap<RegionKind, Rect>) -> Result<Self> {
        let missing: Vec<RegionKind> = RegionKind::ALL.into_iter().filter(|r| !map.contains_key(r)).collect();
        if !missing.is_empty() {
            return Err(Error::MissingRegions { missing });
        }
        CropSet::new(RegionKind::ALL.map(|r| map[&r]))
    }

    pub fn rect(&self, region: RegionKind) -> Rect {
        self.rects[region.index()]
    }

    pub fn spec(&self, region: RegionKind) -> RegionSpec {
        RegionSpec::new(region, self.rect(region)).expect("validated at construction")
    }

    /// Parses a standalone crops document (a JSON object keyed by region name).
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CropSet::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("crops serialize")
    }
}

impl Serialize for CropSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, Rect> = RegionKind::ALL.into_iter().map(|r| (r.name(), self.rect(r))).collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CropSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = BTreeMap::<RegionKind, Rect>::deserialize(d)?;
        CropSet::from_map(&raw).map_err(serde::de::Error::custom)
    }
}

/// A decoded training or test image with its label and crops.
#[derive(Clone, Debug)]
pub struct LabeledImage {
    pub image: GrayImage,
    pub expression: Expression,
    pub crops: CropSet,
}

impl LabeledImage {
    /// The five canonical region images of this sample.
    pub fn regions(&self) -> Result<[GrayImage; 5]> {
        region_images(&self.image, &self.crops)
    }
}

pub fn region_images(image: &GrayImage, crops: &CropSet) -> Result<[GrayImage; 5]> {
    let mut out = Vec::with_capacity(5);
    for region in RegionKind::ALL {
        out.push(extract_region(image, &crops.spec(region)).map_err(|e| e.in_region(region))?);
    }
    Ok(out.try_into().expect("five regions"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub image: PathBuf,
    pub expression: Expression,
    pub crops: CropSet,
}

/// A list of labeled images with their crops. Relative image paths are
/// resolved against the manifest file's directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingManifest {
    pub entries: Vec<ManifestEntry>,
}

impl TrainingManifest {
    pub fn from_json(text: &str, base_dir: &Path, origin: &str) -> Result<Self> {
        let mut manifest: TrainingManifest =
            serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
        for entry in &mut manifest.entries {
            if entry.image.is_relative() {
                entry.image = base_dir.join(&entry.image);
            }
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        TrainingManifest::from_json(&text, base, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Decodes every entry's image, in parallel.
    pub fn load_images(&self) -> Result<Vec<LabeledImage>> {
        self.entries
            .par_iter()
            .map(|e| {
                Ok(LabeledImage {
                    image: load_gray(&e.image)?,
                    expression: e.expression,
                    crops: e.crops,
                })
            })
            .collect()
    }
}

/// Reference bases for all 6 x 5 (expression, region) cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpressionModel {
    bases: Vec<EigenBasis>,
}

impl ExpressionModel {
    /// Assembles a model; every cell must be supplied exactly once.
    pub fn from_cells(cells: Vec<(Expression, EigenBasis)>) -> Result<Self> {
        let mut slots: Vec<Option<EigenBasis>> = vec![None; Expression::COUNT * RegionKind::ALL.len()];
        for (expression, basis) in cells {
            let slot = &mut slots[cell_index(expression, basis.region())];
            if slot.is_some() {
                return Err(Error::shape(format!(
                    "duplicate model cell {expression}/{}",
                    basis.region()
                )));
            }
            *slot = Some(basis);
        }
        let missing: Vec<String> = slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(i, _)| format!("{}/{}", Expression::ALL[i / 5], RegionKind::ALL[i % 5]))
            .collect();
        if !missing.is_empty() {
            return Err(Error::shape(format!(
                "incomplete model, missing {}",
                missing.join(", ")
            )));
        }
        Ok(ExpressionModel {
            bases: slots.into_iter().map(Option::unwrap).collect(),
        })
    }

    pub fn basis(&self, expression: Expression, region: RegionKind) -> &EigenBasis {
        &self.bases[cell_index(expression, region)]
    }

    /// Cells in canonical (expression, region) order.
    pub fn cells(&self) -> impl Iterator<Item = (Expression, &EigenBasis)> {
        self.bases.iter().enumerate().map(|(i, b)| (Expression::ALL[i / 5], b))
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            format: MODEL_FORMAT.to_string(),
            basis_size: BASIS_SIZE,
            cells: self
                .cells()
                .map(|(expression, basis)| {
                    let (rows, cols) = basis.region().canonical_dims();
                    CellDoc {
                        expression,
                        region: basis.region(),
                        rows,
                        cols,
                        eigenvalues: basis.eigenvalues(),
                        eigenvectors: basis.pairs().iter().map(|p| p.vector.to_vec()).collect(),
                    }
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("model serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let header: FormatHeader = serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
        if header.format != MODEL_FORMAT {
            return Err(Error::Version {
                found: header.format,
                expected: MODEL_FORMAT,
            });
        }
        let doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
        if doc.basis_size != BASIS_SIZE {
            return Err(Error::format(
                origin,
                format!("basis_size {} unsupported, expected {BASIS_SIZE}", doc.basis_size),
            ));
        }
        let mut cells = Vec::with_capacity(doc.cells.len());
        for cell in doc.cells {
            let ctx = |msg: String| Error::format(origin, format!("{}/{}: {msg}", cell.expression, cell.region));
            if (cell.rows, cell.cols) != cell.region.canonical_dims() {
                return Err(ctx(format!(
                    "dims {}x{} differ from canonical {:?}",
                    cell.rows,
                    cell.cols,
                    cell.region.canonical_dims()
                )));
            }
            if cell.eigenvalues.len() != cell.eigenvectors.len() {
                return Err(ctx("eigenvalue and eigenvector counts differ".into()));
            }
            let pairs = cell
                .eigenvalues
                .iter()
                .zip(&cell.eigenvectors)
                .map(|(&value, v)| {
                    Ok(EigenPair {
                        value,
                        vector: Vector::new(v.clone())?,
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| ctx(e.to_string()))?;
            let basis = EigenBasis::new(cell.region, pairs).map_err(|e| ctx(e.to_string()))?;
            cells.push((cell.expression, basis));
        }
        ExpressionModel::from_cells(cells).map_err(|e| Error::format(origin, e.to_string()))
    }
}

fn cell_index(expression: Expression, region: RegionKind) -> usize {
    expression.index() * RegionKind::ALL.len() + region.index()
}

#[derive(Deserialize)]
struct FormatHeader {
    format: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    basis_size: usize,
    cells: Vec<CellDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellDoc {
    expression: Expression,
    region: RegionKind,
    rows: usize,
    cols: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
}

/// Writes the model atomically (temp file in the target directory, then rename).
pub fn save_model(model: &ExpressionModel, path: &Path) -> Result<()> {
    write_atomic(path, model.to_json().as_bytes())
}

pub fn load_model(path: &Path) -> Result<ExpressionModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExpressionModel::from_json(&text, &path.display().to_string())
}

/// Replaces `path` with `bytes` without ever exposing a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Decodes every manifest image and trains on it.
pub fn train(manifest: &TrainingManifest) -> Result<ExpressionModel> {
    let missing = missing_expressions(manifest.entries.iter().map(|e| e.expression));
    if !missing.is_empty() {
        return Err(Error::MissingExpressions { missing });
    }
    train_images(&manifest.load_images()?)
}

/// Trains on already-decoded images.
pub fn train_images(samples: &[LabeledImage]) -> Result<ExpressionModel> {
    let missing = missing_expressions(samples.iter().map(|s| s.expression));
    if !missing.is_empty() {
        return Err(Error::MissingExpressions { missing });
    }
    let regions: Vec<(Expression, [GrayImage; 5])> = samples
        .par_iter()
        .map(|s| Ok((s.expression, s.regions()?)))
        .collect::<Result<_>>()?;

    let cells: Vec<(Expression, RegionKind)> = Expression::ALL
        .into_iter()
        .flat_map(|e| RegionKind::ALL.map(|r| (e, r)))
        .collect();
    let bases = cells
        .par_iter()
        .map(|&(expression, region)| {
            let members: Vec<&GrayImage> = regions
                .iter()
                .filter(|(e, _)| *e == expression)
                .map(|(_, imgs)| &imgs[region.index()])
                .collect();
            let mean = mean_image(&members)?;
            let basis = extract_basis(&mean, region).map_err(|e| match e {
                Error::DegenerateRank {
                    region,
                    positive,
                    required,
                    ..
                } => Error::DegenerateRank {
                    region,
                    expression: Some(expression),
                    positive,
                    required,
                },
                other => other.in_region(region),
            })?;
            Ok((expression, basis))
        })
        .collect::<Result<Vec<_>>>()?;
    ExpressionModel::from_cells(bases)
}

fn missing_expressions(present: impl Iterator<Item = Expression>) -> Vec<Expression> {
    let mut seen = [false; Expression::COUNT];
    for e in present {
        seen[e.index()] = true;
    }
    Expression::ALL.into_iter().filter(|e| !seen[e.index()]).collect()
}

/// Pixel-wise mean of equal-sized images.
///
/// Each pixel is `m + sum(x_i - m) / n` with `m` the smallest value and an
/// exactly rounded sum, so the result does not depend on the order of
/// `images` and the mean of identical images is that image.
pub fn mean_image(images: &[&GrayImage]) -> Result<GrayImage> {
    let first = images
        .first()
        .ok_or_else(|| Error::Parameter("mean of zero images".into()))?;
    if images.iter().any(|i| i.dims() != first.dims()) {
        return Err(Error::shape("mean of differently sized images"));
    }
    let n = images.len() as f64;
    let mut deltas = Vec::with_capacity(images.len());
    let pixels = (0..first.pixels().len())
        .map(|p| {
            let anchor = images.iter().map(|i| i.pixels()[p]).fold(f64::INFINITY, f64::min);
            deltas.clear();
            deltas.extend(images.iter().map(|i| i.pixels()[p] - anchor));
            (anchor + exact_sum(&deltas) / n).clamp(0.0, 1.0)
        })
        .collect();
    GrayImage::new(first.height(), first.width(), pixels)
}

/// Correctly rounded floating-point sum (Shewchuk's partials algorithm).
fn exact_sum(values: &[f64]) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for &x in values {
        let mut x = x;
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    // round-half-even correction across the top two partials
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}
