//! Python bindings: `import foodtray`.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use ::foodtray_core as core;
use core::ingestion::{self, StoreWindowProvider};
use core::menu::MealManifest;
use core::recognizer::{self, Method, Recognizer, RecognizerConfig, TrayFile};
use core::{ClassId, FeatureVector, Region};

fn err(e: core::Error) -> PyErr {
    if e.is_io() {
        PyIOError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn open(path: &PathBuf) -> PyResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))
}

/// Converts through JSON so results arrive as plain dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// L2-normalized copy of `raw`.
#[pyfunction]
fn normalize(raw: Vec<f64>) -> PyResult<Vec<f64>> {
    FeatureVector::from_raw(&raw)
        .map(|v| v.as_slice().to_vec())
        .map_err(err)
}

/// 512-bin RGB histogram counts of interleaved 8-bit pixels.
#[pyfunction]
fn histogram_descriptor(width: usize, height: usize, pixels: Vec<u8>) -> PyResult<Vec<f64>> {
    let patch = ingestion::RgbPatch::new(width, height, pixels).map_err(err)?;
    ingestion::histogram_descriptor(&patch).map_err(err)
}

/// Sliding windows inside a region, as `(x, y, width, height)` tuples.
#[pyfunction]
#[pyo3(signature = (x, y, width, height, window_fraction=0.5, stride_fraction=0.25))]
fn generate_windows(
    x: u32,
    y: u32,
    width: u32,
    height: u32,
    window_fraction: f64,
    stride_fraction: f64,
) -> PyResult<Vec<(u32, u32, u32, u32)>> {
    let parent = Region::new(x, y, width, height).map_err(err)?;
    Ok(recognizer::generate_windows(&parent, window_fraction, stride_fraction)
        .map_err(err)?
        .into_iter()
        .map(|w| (w.x, w.y, w.width, w.height))
        .collect())
}

/// Micro precision, recall and F-measure over `(predicted, truth)` pairs.
#[pyfunction]
fn set_metrics<'py>(py: Python<'py>, pairs: Vec<(Vec<String>, Vec<String>)>) -> PyResult<Bound<'py, PyAny>> {
    let sets: Vec<(BTreeSet<ClassId>, BTreeSet<ClassId>)> = pairs
        .into_iter()
        .map(|(p, g)| (p.into_iter().map(ClassId::from).collect(), g.into_iter().map(ClassId::from).collect()))
        .collect();
    let m = core::evaluation::set_metrics(sets.iter().map(|(p, g)| (p, g)));
    to_py(py, &m)
}

/// Writes a synthetic dataset (manifests, `features.tsv`, `trays/`) to `out_dir`.
#[pyfunction]
#[pyo3(signature = (out_dir, seed=0, tray_count=100, dim=64, sigma=0.1, separation=1.0, mixed_fraction=0.4))]
fn generate_synthetic(
    out_dir: PathBuf,
    seed: u64,
    tray_count: usize,
    dim: usize,
    sigma: f64,
    separation: f64,
    mixed_fraction: f64,
) -> PyResult<usize> {
    let spec = core::SyntheticMenuSpec {
        seed,
        tray_count,
        dim,
        sigma,
        separation,
        mixed_fraction,
        ..Default::default()
    };
    let data = ingestion::generate_synthetic_dataset(&spec).map_err(err)?;
    data.write_dir(&out_dir).map_err(err)?;
    Ok(data.trays.len())
}

#[pyclass(name = "FeatureStore", frozen)]
struct PyFeatureStore {
    inner: core::FeatureStore,
}

#[pymethods]
impl PyFeatureStore {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = core::FeatureStore::from_reader(open(&path)?).map_err(err)?;
        Ok(PyFeatureStore { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn get(&self, id: &str) -> Option<Vec<f64>> {
        self.inner.get(id).map(<[f64]>::to_vec)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, id: &str) -> bool {
        self.inner.contains(id)
    }
}

#[pyclass(name = "Meal", frozen)]
struct PyMeal {
    inner: core::MealTemplateSet,
}

impl PyMeal {
    fn query(&self, raw: &[f64]) -> PyResult<FeatureVector> {
        FeatureVector::normalize(raw, self.inner.dim()).map_err(err)
    }
}

#[pymethods]
impl PyMeal {
    /// Loads a manifest and resolves its templates against `store`.
    #[staticmethod]
    fn load(manifest: PathBuf, store: &PyFeatureStore) -> PyResult<Self> {
        let inner = MealManifest::from_reader(open(&manifest)?)
            .and_then(|m| m.resolve(&store.inner))
            .map_err(err)?;
        Ok(PyMeal { inner })
    }

    #[getter]
    fn meal_id(&self) -> &str {
        self.inner.meal_id()
    }

    fn class_ids(&self) -> Vec<String> {
        self.inner.class_ids().map(|c| c.to_string()).collect()
    }

    fn category_of(&self, class_id: &str) -> PyResult<String> {
        Ok(self.inner.menu().category_of(&class_id.into()).map_err(err)?.id.clone())
    }

    /// Nearest class and its similarity for a raw feature.
    fn classify_single(&self, feature: Vec<f64>) -> PyResult<(String, f64)> {
        let (c, s) = core::classify_single(&self.query(&feature)?, &self.inner).map_err(err)?;
        Ok((c.to_string(), s.0))
    }

    fn class_similarity(&self, class_id: &str, feature: Vec<f64>) -> PyResult<f64> {
        core::class_similarity(&class_id.into(), &self.query(&feature)?, &self.inner)
            .map(|s| s.0)
            .map_err(err)
    }

    fn classify_multi(&self, feature: Vec<f64>, theta: f64) -> PyResult<Vec<String>> {
        let set = core::classify_multi(&self.query(&feature)?, &self.inner, theta);
        Ok(set.into_iter().map(|c| c.to_string()).collect())
    }

    fn nutrition_of<'py>(&self, py: Python<'py>, class_id: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.nutrition_of(&class_id.into()).map_err(err)?)
    }

    fn __len__(&self) -> usize {
        self.inner.menu().len()
    }
}

/// Recognizes one tray file; returns the prediction record as a dict.
#[pyfunction]
#[pyo3(signature = (tray, meal, store, method="hierarchical", theta=None, window_fraction=0.5, stride_fraction=0.25))]
#[allow(clippy::too_many_arguments)]
fn recognize_tray<'py>(
    py: Python<'py>,
    tray: PathBuf,
    meal: &PyMeal,
    store: &PyFeatureStore,
    method: &str,
    theta: Option<f64>,
    window_fraction: f64,
    stride_fraction: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let photo = TrayFile::from_reader(open(&tray)?)
        .and_then(|t| t.resolve(&store.inner))
        .map_err(err)?;
    let method = match (method, theta) {
        ("single", _) => Method::Single,
        ("hierarchical", _) => Method::Hierarchical,
        ("multi", Some(theta)) => Method::Multi { theta },
        ("multi", None) => return Err(PyValueError::new_err("method 'multi' needs theta")),
        (other, _) => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    };
    let config = RecognizerConfig {
        window_fractions: vec![window_fraction],
        stride_fraction,
        fine_grained: true,
    };
    let provider = StoreWindowProvider::new(&store.inner);
    let recognizer = Recognizer::new(&config).map_err(err)?.with_provider(&provider);
    let result = match method {
        Method::Single => recognizer::recognize_tray_single(&photo, &meal.inner),
        Method::Multi { theta } => recognizer::recognize_tray_multi(&photo, &meal.inner, theta),
        Method::Hierarchical => recognizer.recognize_tray(&photo, &meal.inner),
    }
    .map_err(err)?;
    let out = to_py(py, &result)?;
    let nutrition = core::evaluation::tray_nutrition(&result.predicted_items, &meal.inner).map_err(err)?;
    out.set_item("nutrition", to_py(py, &nutrition)?)?;
    Ok(out)
}

#[pymodule]
fn foodtray(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyFeatureStore>()?;
    m.add_class::<PyMeal>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(histogram_descriptor, m)?)?;
    m.add_function(wrap_pyfunction!(generate_windows, m)?)?;
    m.add_function(wrap_pyfunction!(set_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(recognize_tray, m)?)?;
    Ok(())
}
