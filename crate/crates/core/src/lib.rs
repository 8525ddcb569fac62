//! Multi-item food recognition for buffet tray photos.
//!
//! Menus change at every meal and only a few template images exist per menu
//! item, so classification is nearest-neighbor search over normalized
//! features against the current meal's templates. Dishes that mix several
//! items (salads, fruit plates) are resolved by a second, sliding-window pass
//! restricted to the dish's category. Two baselines and a nutrition-aware
//! evaluation harness are included.

pub mod error;
pub mod evaluation;
pub mod feature;
pub mod ingestion;
pub mod menu;
pub mod multiclass;
pub mod recognizer;

pub use error::{Error, Result};
pub use evaluation::{evaluate, EvalReport, EvalSample};
pub use feature::{class_similarity, classify_single, FeatureVector, SimilarityScore};
pub use ingestion::{FeatureStore, SyntheticMenuSpec};
pub use menu::{Catalog, ClassId, MealCatalog, MealTemplateSet, Menu, NutritionFacts};
pub use multiclass::{classify_multi, cross_validate, tune_threshold, ThresholdGrid};
pub use recognizer::{
    recognize_tray, recognize_tray_single, Method, Recognizer, RecognizerConfig, Region,
    RegionObservation, TrayObservation, TrayResult,
};
