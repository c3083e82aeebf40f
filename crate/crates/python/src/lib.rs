//! Python bindings. Expressions and regions cross the boundary as their
//! lower-case names (`"sad"`, `"nose_lip"`); images as nested lists of floats.

use std::collections::BTreeMap;
use std::path::PathBuf;

use eigenexpr::synth::{self, SyntheticDataset};
use eigenexpr::{render, Error, Expression, RegionKind};
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

create_exception!(
    pyeigenexpr,
    EigenexprError,
    PyValueError,
    "Invalid input data or model."
);

fn to_py(err: Error) -> PyErr {
    match err.root() {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        _ => EigenexprError::new_err(err.to_string()),
    }
}

fn parse_expression(name: &str) -> PyResult<Expression> {
    name.parse().map_err(to_py)
}

fn parse_region(name: &str) -> PyResult<RegionKind> {
    name.parse().map_err(to_py)
}

fn expression_key(e: Expression) -> String {
    e.name().to_lowercase()
}

/// Grayscale image with values in [0, 1].
#[pyclass(module = "pyeigenexpr", frozen, skip_from_py_object)]
#[derive(Clone)]
struct GrayImage(eigenexpr::GrayImage);

#[pymethods]
impl GrayImage {
    /// Builds an image from a list of equally long rows.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(EigenexprError::new_err("rows have different lengths"));
        }
        let pixels = rows.into_iter().flatten().collect();
        eigenexpr::GrayImage::new(height, width, pixels)
            .map(Self)
            .map_err(to_py)
    }

    /// Loads a PNG/JPEG (converted to luma) or a text image.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        eigenexpr::load_gray(&path).map(Self).map_err(to_py)
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    fn get(&self, row: usize, col: usize) -> PyResult<f64> {
        if row >= self.0.height() || col >= self.0.width() {
            return Err(pyo3::exceptions::PyIndexError::new_err((row, col)));
        }
        Ok(self.0.get(row, col))
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.pixels().chunks(self.0.width()).map(<[f64]>::to_vec).collect()
    }

    fn resize(&self, rows: usize, cols: usize) -> PyResult<Self> {
        eigenexpr::resize(&self.0, rows, cols).map(Self).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("GrayImage({}x{})", self.0.height(), self.0.width())
    }
}

/// The five crop rectangles, keyed by region name, each `(x, y, w, h)`.
#[pyclass(module = "pyeigenexpr", frozen, skip_from_py_object)]
#[derive(Clone)]
struct CropSet(eigenexpr::CropSet);

#[pymethods]
impl CropSet {
    #[new]
    fn new(rects: BTreeMap<String, (usize, usize, usize, usize)>) -> PyResult<Self> {
        let mut map = BTreeMap::new();
        for (name, (x, y, w, h)) in rects {
            map.insert(parse_region(&name)?, eigenexpr::Rect::new(x, y, w, h));
        }
        eigenexpr::CropSet::from_map(&map).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        eigenexpr::CropSet::load(&path).map(Self).map_err(to_py)
    }

    /// Crop layout used by the synthetic faces.
    #[staticmethod]
    fn synthetic() -> Self {
        Self(synth::standard_crops())
    }

    fn rect(&self, region: &str) -> PyResult<(usize, usize, usize, usize)> {
        let r = self.0.rect(parse_region(region)?);
        Ok((r.x, r.y, r.w, r.h))
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }
}

/// Trained eigenvector bases for every (expression, region) pair.
#[pyclass(module = "pyeigenexpr", frozen)]
struct Model(eigenexpr::ExpressionModel);

#[pymethods]
impl Model {
    /// Trains from a manifest file.
    #[staticmethod]
    fn train(py: Python<'_>, manifest: PathBuf) -> PyResult<Self> {
        py.detach(|| eigenexpr::TrainingManifest::load(&manifest).and_then(|m| eigenexpr::train(&m)))
            .map(Self)
            .map_err(to_py)
    }

    /// Trains from `(image, expression, crops)` triples.
    #[staticmethod]
    fn train_images(
        py: Python<'_>,
        samples: Vec<(PyRef<'_, GrayImage>, String, PyRef<'_, CropSet>)>,
    ) -> PyResult<Self> {
        let labeled = samples
            .iter()
            .map(|(img, e, crops)| {
                Ok(eigenexpr::LabeledImage {
                    image: img.0.clone(),
                    expression: parse_expression(e)?,
                    crops: crops.0,
                })
            })
            .collect::<PyResult<Vec<_>>>()?;
        py.detach(|| eigenexpr::train_images(&labeled)).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        eigenexpr::load_model(&path).map(Self).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        eigenexpr::save_model(&self.0, &path).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    /// `(eigenvalues, eigenvectors)` for one cell, largest eigenvalue first.
    fn basis(&self, expression: &str, region: &str) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let b = self.0.basis(parse_expression(expression)?, parse_region(region)?);
        let vectors = b.pairs().iter().map(|p| p.vector.to_vec()).collect();
        Ok((b.eigenvalues(), vectors))
    }
}

/// Outcome of classifying one image or replaying distance tables.
#[pyclass(module = "pyeigenexpr", frozen)]
struct Classification(eigenexpr::ClassificationResult);

#[pymethods]
impl Classification {
    #[getter]
    fn decided(&self) -> String {
        expression_key(self.0.decided)
    }

    #[getter]
    fn tie_broken(&self) -> bool {
        self.0.tie_broken
    }

    /// Vote totals keyed by expression.
    fn totals(&self) -> BTreeMap<String, u32> {
        Expression::ALL
            .into_iter()
            .map(|e| (expression_key(e), self.0.votes.total(e)))
            .collect()
    }

    /// The five per-eigenvector winners of each region.
    fn winners(&self) -> BTreeMap<String, Vec<String>> {
        self.0
            .votes
            .winners()
            .iter()
            .map(|(r, w)| (r.name().to_string(), w.iter().map(|e| expression_key(*e)).collect()))
            .collect()
    }

    /// 6x5 distance table for a region, rows in canonical expression order.
    fn distances(&self, region: &str) -> PyResult<Vec<Vec<f64>>> {
        let r = parse_region(region)?;
        let m = self
            .0
            .ed_matrix(r)
            .ok_or_else(|| EigenexprError::new_err(format!("no distances for {r}")))?;
        Ok(m.rows().iter().map(|row| row.to_vec()).collect())
    }

    fn render(&self) -> String {
        render::classification(&self.0)
    }
}

#[pyfunction]
fn classify(
    py: Python<'_>,
    model: PyRef<'_, Model>,
    image: PyRef<'_, GrayImage>,
    crops: PyRef<'_, CropSet>,
) -> PyResult<Classification> {
    let (m, img, c) = (&model.0, &image.0, &crops.0);
    py.detach(|| eigenexpr::classify(img, c, m))
        .map(Classification)
        .map_err(to_py)
}

/// Votes on `<region>.txt` distance tables stored in `dir`.
#[pyfunction]
fn replay(dir: PathBuf) -> PyResult<Classification> {
    eigenexpr::load_replay_dir(&dir)
        .and_then(eigenexpr::replay)
        .map(Classification)
        .map_err(to_py)
}

/// Evaluates `model` on a manifest and returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (model, manifest, train_manifest=None))]
fn evaluate<'py>(
    py: Python<'py>,
    model: PyRef<'py, Model>,
    manifest: PathBuf,
    train_manifest: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let test = eigenexpr::TrainingManifest::load(&manifest).map_err(to_py)?;
    let training = train_manifest
        .map(|p| eigenexpr::TrainingManifest::load(&p))
        .transpose()
        .map_err(to_py)?;
    let m = &model.0;
    let report = py.detach(|| eigenexpr::evaluate(m, &test, training.as_ref()));
    py.import("json")?.call_method1("loads", (report.to_json(),))
}

/// Noisy synthetic faces: a list of `(image, expression, crops)`.
#[pyfunction]
#[pyo3(signature = (per_class, noise_sigma=0.05, seed=0))]
fn synthetic_faces(per_class: usize, noise_sigma: f64, seed: u64) -> PyResult<Vec<(GrayImage, String, CropSet)>> {
    let samples = SyntheticDataset::new(noise_sigma, seed)
        .generate(per_class)
        .map_err(to_py)?;
    Ok(samples
        .into_iter()
        .map(|s| (GrayImage(s.image), expression_key(s.expression), CropSet(s.crops)))
        .collect())
}

/// Eigenpairs of a symmetric matrix, largest eigenvalue first.
#[pyfunction]
fn eigen_symmetric(rows: Vec<Vec<f64>>) -> PyResult<Vec<(f64, Vec<f64>)>> {
    let m = eigenexpr::Matrix::from_rows(&rows).map_err(to_py)?;
    let pairs = eigenexpr::eigen_symmetric(&m).map_err(to_py)?;
    Ok(pairs.into_iter().map(|p| (p.value, p.vector.into_inner())).collect())
}

#[pymodule]
pub fn pyeigenexpr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<GrayImage>()?;
    m.add_class::<CropSet>()?;
    m.add_class::<Model>()?;
    m.add_class::<Classification>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_faces, m)?)?;
    m.add_function(wrap_pyfunction!(eigen_symmetric, m)?)?;
    m.add("EigenexprError", m.py().get_type::<EigenexprError>())?;
    m.add("EXPRESSIONS", Expression::ALL.map(expression_key).to_vec())?;
    m.add("REGIONS", RegionKind::ALL.map(|r| r.name()).to_vec())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
