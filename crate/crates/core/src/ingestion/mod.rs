//! Getting features into the engine: the feature store file, a color
//! histogram descriptor that stands in for a neural extractor, and the
//! synthetic dataset generator.

mod descriptor;
mod store;
mod synthetic;

pub use descriptor::{histogram_bin, histogram_descriptor, HistogramProvider, RgbPatch, HISTOGRAM_BINS};
pub use store::{load_feature_store, FeatureStore};
pub use synthetic::{generate_synthetic_dataset, PlateInfo, SyntheticDataset, SyntheticMenuSpec};

use crate::error::Result;
use crate::recognizer::{Region, WindowFeatureProvider};

/// Store id under which a window's feature is looked up:
/// `<parent feature id>#<x>,<y>,<width>,<height>`.
pub fn window_feature_id(parent_feature_id: &str, window: &Region) -> String {
    format!(
        "{parent_feature_id}#{},{},{},{}",
        window.x, window.y, window.width, window.height
    )
}

/// Serves window features stored under [`window_feature_id`] keys.
#[derive(Debug, Clone, Copy)]
pub struct StoreWindowProvider<'a> {
    store: &'a FeatureStore,
}

impl<'a> StoreWindowProvider<'a> {
    pub fn new(store: &'a FeatureStore) -> Self {
        StoreWindowProvider { store }
    }
}

impl WindowFeatureProvider for StoreWindowProvider<'_> {
    fn dim(&self) -> usize {
        self.store.dim()
    }

    fn window_feature(&self, _photo_id: &str, parent_feature_id: Option<&str>, window: &Region) -> Result<Option<Vec<f64>>> {
        Ok(parent_feature_id
            .and_then(|p| self.store.get(&window_feature_id(p, window)))
            .map(<[f64]>::to_vec))
    }
}
