//! Hierarchical recognition of the dishes on a tray.
//!
//! Every detected region is first assigned a single class by nearest-neighbor
//! search. When that class belongs to a category flagged for fine-grained
//! recognition (salads, fruit, rice toppings), the region is scanned with
//! sliding windows, each window is classified on its own, and the window
//! classes that share the region's category are kept. The tray prediction is
//! the union of all region predictions.

mod tray_file;
mod windows;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feature::{classify_single, FeatureVector, SimilarityScore};
use crate::menu::{Category, ClassId, MealCatalog, MealTemplateSet};
use crate::multiclass::classify_multi;

pub use tray_file::{load_tray, RegionEntry, TrayFile, WindowEntry};
pub use windows::{generate_windows, validate_window_params, Region};

/// Default window side as a fraction of the region's short side.
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.5;
/// Default window step as a fraction of the region's short side.
pub const DEFAULT_STRIDE_FRACTION: f64 = 0.25;

/// One detected dish area with its feature and, optionally, precomputed
/// sub-window features.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionObservation {
    pub region: Region,
    pub feature: FeatureVector,
    /// Store id the feature came from, used to look up derived window features.
    pub feature_id: Option<String>,
    pub sub_windows: Option<Vec<(Region, FeatureVector)>>,
}

impl RegionObservation {
    pub fn new(region: Region, feature: FeatureVector) -> Self {
        RegionObservation {
            region,
            feature,
            feature_id: None,
            sub_windows: None,
        }
    }

    pub fn with_windows(mut self, windows: Vec<(Region, FeatureVector)>) -> Self {
        self.sub_windows = Some(windows);
        self
    }
}

/// One tray photo.
#[derive(Debug, Clone, PartialEq)]
pub struct TrayObservation {
    pub photo_id: String,
    pub meal_id: String,
    pub regions: Vec<RegionObservation>,
    pub ground_truth: Option<BTreeSet<ClassId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionResult {
    pub region: Region,
    pub coarse_class: ClassId,
    pub coarse_score: SimilarityScore,
    pub triggered: bool,
    /// Classes accepted by fine-grained recognition; empty unless triggered.
    pub fine_classes: BTreeSet<ClassId>,
    /// What this region contributes to the tray prediction.
    pub items: BTreeSet<ClassId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrayResult {
    pub photo_id: String,
    pub meal_id: String,
    pub predicted_items: BTreeSet<ClassId>,
    pub region_results: Vec<RegionResult>,
}

impl TrayResult {
    fn from_regions(photo: &TrayObservation, region_results: Vec<RegionResult>) -> Self {
        let predicted_items = region_results
            .iter()
            .flat_map(|r| r.items.iter().cloned())
            .collect();
        TrayResult {
            photo_id: photo.photo_id.clone(),
            meal_id: photo.meal_id.clone(),
            predicted_items,
            region_results,
        }
    }
}

/// Supplies sub-window features for regions that arrive without them.
pub trait WindowFeatureProvider: Sync {
    fn dim(&self) -> usize;

    /// Raw feature for `window` inside a region of photo `photo_id`, or
    /// `None` when the provider has nothing for it.
    fn window_feature(
        &self,
        photo_id: &str,
        parent_feature_id: Option<&str>,
        window: &Region,
    ) -> Result<Option<Vec<f64>>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Nearest-neighbor class per region, never fine-grained.
    Single,
    /// Every class whose similarity reaches `theta`.
    Multi { theta: f64 },
    Hierarchical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognizerConfig {
    /// One sliding-window pass per entry.
    pub window_fractions: Vec<f64>,
    pub stride_fraction: f64,
    /// When false, trigger categories are ignored.
    pub fine_grained: bool,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        RecognizerConfig {
            window_fractions: vec![DEFAULT_WINDOW_FRACTION],
            stride_fraction: DEFAULT_STRIDE_FRACTION,
            fine_grained: true,
        }
    }
}

impl RecognizerConfig {
    pub fn single_class() -> Self {
        RecognizerConfig {
            fine_grained: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_fractions.is_empty() {
            return Err(Error::InvalidParameter("no window fractions given".into()));
        }
        for &wf in &self.window_fractions {
            validate_window_params(wf, self.stride_fraction)?;
        }
        Ok(())
    }
}

/// Fine-grained step: classify each window over the whole meal and keep the
/// classes whose category matches the region's coarse category.
pub fn fine_grained(
    coarse_category: &Category,
    windows: &[(Region, FeatureVector)],
    meal: &MealTemplateSet,
) -> Result<BTreeSet<ClassId>> {
    let mut kept = BTreeSet::new();
    for (_, feature) in windows {
        let (class, _) = classify_single(feature, meal)?;
        if meal.menu().category_of(&class)?.id == coarse_category.id {
            kept.insert(class);
        }
    }
    Ok(kept)
}

#[derive(Clone, Copy)]
pub struct Recognizer<'a> {
    config: &'a RecognizerConfig,
    provider: Option<&'a dyn WindowFeatureProvider>,
}

impl<'a> Recognizer<'a> {
    pub fn new(config: &'a RecognizerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Recognizer {
            config,
            provider: None,
        })
    }

    pub fn with_provider(mut self, provider: &'a dyn WindowFeatureProvider) -> Self {
        self.provider = Some(provider);
        self
    }

    pub fn recognize_region(
        &self,
        photo_id: &str,
        obs: &RegionObservation,
        meal: &MealTemplateSet,
    ) -> Result<RegionResult> {
        let (coarse_class, coarse_score) = classify_single(&obs.feature, meal)?;
        let category = meal.menu().category_of(&coarse_class)?;
        let triggered = self.config.fine_grained && category.fine_grained_trigger;
        let mut fine_classes = BTreeSet::new();
        if triggered {
            fine_classes = match &obs.sub_windows {
                Some(windows) => fine_grained(category, windows, meal)?,
                None => {
                    let windows = self.derive_windows(photo_id, obs, meal.dim())?;
                    fine_grained(category, &windows, meal)?
                }
            };
            if fine_classes.is_empty() {
                fine_classes.insert(coarse_class.clone());
            }
        }
        let items = if triggered {
            fine_classes.clone()
        } else {
            BTreeSet::from([coarse_class.clone()])
        };
        Ok(RegionResult {
            region: obs.region,
            coarse_class,
            coarse_score,
            triggered,
            fine_classes,
            items,
        })
    }

    fn derive_windows(
        &self,
        photo_id: &str,
        obs: &RegionObservation,
        dim: usize,
    ) -> Result<Vec<(Region, FeatureVector)>> {
        let missing = || Error::MissingWindowFeatures { region: obs.region };
        let provider = self.provider.ok_or_else(missing)?;
        if provider.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: provider.dim(),
            });
        }
        let mut out = Vec::new();
        for &wf in &self.config.window_fractions {
            for window in generate_windows(&obs.region, wf, self.config.stride_fraction)? {
                let raw = provider
                    .window_feature(photo_id, obs.feature_id.as_deref(), &window)?
                    .ok_or_else(missing)?;
                out.push((window, FeatureVector::normalize(&raw, dim)?));
            }
        }
        Ok(out)
    }

    pub fn recognize_tray(&self, photo: &TrayObservation, meal: &MealTemplateSet) -> Result<TrayResult> {
        check_meal(photo, meal)?;
        let regions = photo
            .regions
            .iter()
            .map(|obs| self.recognize_region(&photo.photo_id, obs, meal))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrayResult::from_regions(photo, regions))
    }
}

fn check_meal(photo: &TrayObservation, meal: &MealTemplateSet) -> Result<()> {
    if photo.meal_id != meal.meal_id() {
        return Err(Error::Validation(format!(
            "photo `{}` belongs to meal `{}`, not `{}`",
            photo.photo_id,
            photo.meal_id,
            meal.meal_id()
        )));
    }
    Ok(())
}

/// Recognizes one region with precomputed windows only.
pub fn recognize_region(
    obs: &RegionObservation,
    meal: &MealTemplateSet,
    config: &RecognizerConfig,
) -> Result<RegionResult> {
    Recognizer::new(config)?.recognize_region("", obs, meal)
}

/// Hierarchical recognition of a whole tray.
pub fn recognize_tray(
    photo: &TrayObservation,
    meal: &MealTemplateSet,
    config: &RecognizerConfig,
) -> Result<TrayResult> {
    Recognizer::new(config)?.recognize_tray(photo, meal)
}

/// Single-class baseline: one nearest-neighbor class per region.
pub fn recognize_tray_single(photo: &TrayObservation, meal: &MealTemplateSet) -> Result<TrayResult> {
    recognize_tray(photo, meal, &RecognizerConfig::single_class())
}

/// Multi-class baseline: per region, every class scoring at least `theta`.
pub fn recognize_tray_multi(photo: &TrayObservation, meal: &MealTemplateSet, theta: f64) -> Result<TrayResult> {
    check_meal(photo, meal)?;
    let regions = photo
        .regions
        .iter()
        .map(|obs| {
            let (coarse_class, coarse_score) = classify_single(&obs.feature, meal)?;
            Ok(RegionResult {
                region: obs.region,
                coarse_class,
                coarse_score,
                triggered: false,
                fine_classes: BTreeSet::new(),
                items: classify_multi(&obs.feature, meal, theta),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrayResult::from_regions(photo, regions))
}

/// Runs `method` over a batch of trays in parallel; results keep input order.
pub fn recognize_batch(
    photos: &[TrayObservation],
    meals: &MealCatalog,
    method: Method,
    recognizer: &Recognizer<'_>,
) -> Result<Vec<TrayResult>> {
    photos
        .par_iter()
        .map(|photo| {
            let meal = meals.get(&photo.meal_id)?;
            match method {
                Method::Single => recognize_tray_single(photo, meal),
                Method::Multi { theta } => recognize_tray_multi(photo, meal, theta),
                Method::Hierarchical => recognizer.recognize_tray(photo, meal),
            }
        })
        .collect()
}
