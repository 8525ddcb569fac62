//! Multi-class baseline: a region predicts every class whose similarity
//! reaches a global threshold. The threshold is chosen on one fold of the
//! photos and evaluated on the rest.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::{evaluate, EvalReport, EvalSample, SetMetrics};
use crate::feature::{max_similarity, FeatureVector};
use crate::menu::{ClassId, MealCatalog, MealTemplateSet};
use crate::recognizer::{recognize_tray_multi, TrayObservation};

/// Every class of `meal` whose similarity to `x` is at least `theta`.
pub fn classify_multi(x: &FeatureVector, meal: &MealTemplateSet, theta: f64) -> BTreeSet<ClassId> {
    meal.iter_templates()
        .filter(|(_, vs)| max_similarity(x, vs.iter()) >= theta)
        .map(|(c, _)| c.clone())
        .collect()
}

pub const DEFAULT_GRID_MIN: f64 = 0.0;
pub const DEFAULT_GRID_MAX: f64 = 1.0;
pub const DEFAULT_GRID_STEP: f64 = 0.005;

/// Candidate thresholds, ascending, within `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ThresholdGrid(Vec<f64>);

impl ThresholdGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("threshold grid is empty".into()));
        }
        if values.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter("grid values must lie in [-1, 1]".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("grid must be strictly ascending".into()));
        }
        Ok(ThresholdGrid(values))
    }

    /// `min, min + step, ...` up to `max` inclusive. Points are rounded to
    /// 1e-9 so that `0.83` is not stored as `0.8300000000000001`.
    pub fn range(min: f64, max: f64, step: f64) -> Result<Self> {
        let ordered = step > 0.0 && min <= max;
        if !ordered {
            return Err(Error::InvalidParameter(format!(
                "bad grid range min={min} max={max} step={step}"
            )));
        }
        let count = ((max - min) / step + 1e-9).floor() as usize;
        let values = (0..=count)
            .map(|i| (((min + i as f64 * step) * 1e9).round() / 1e9).min(max))
            .collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self::range(DEFAULT_GRID_MIN, DEFAULT_GRID_MAX, DEFAULT_GRID_STEP).unwrap()
    }
}

/// Per-region class similarities, cached so each grid point costs only a scan.
struct ScoredPhoto {
    regions: Vec<Vec<(ClassId, f64)>>,
    truth: BTreeSet<ClassId>,
}

impl ScoredPhoto {
    fn new(photo: &TrayObservation, meal: &MealTemplateSet) -> Result<Self> {
        let truth = photo
            .ground_truth
            .clone()
            .ok_or_else(|| Error::NoGroundTruth(photo.photo_id.clone()))?;
        let regions = photo
            .regions
            .iter()
            .map(|r| {
                meal.iter_templates()
                    .map(|(c, vs)| (c.clone(), max_similarity(&r.feature, vs.iter())))
                    .collect()
            })
            .collect();
        Ok(ScoredPhoto { regions, truth })
    }

    fn predict(&self, theta: f64) -> BTreeSet<ClassId> {
        self.regions
            .iter()
            .flatten()
            .filter(|(_, s)| *s >= theta)
            .map(|(c, _)| c.clone())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdChoice {
    pub theta: f64,
    pub f_measure: f64,
}

/// Micro F-measure of the multi-class baseline at every grid point.
pub fn grid_scores(
    tune_set: &[&TrayObservation],
    meals: &MealCatalog,
    grid: &ThresholdGrid,
) -> Result<Vec<f64>> {
    let scored = tune_set
        .iter()
        .map(|p| ScoredPhoto::new(p, meals.get(&p.meal_id)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(grid
        .values()
        .iter()
        .map(|&theta| {
            let (mut tp, mut pred, mut rel) = (0, 0, 0);
            for photo in &scored {
                let p = photo.predict(theta);
                tp += p.intersection(&photo.truth).count();
                pred += p.len();
                rel += photo.truth.len();
            }
            SetMetrics::from_counts(tp, pred, rel).f_measure
        })
        .collect())
}

/// Grid threshold with the highest micro F-measure on `tune_set`; ties go to
/// the larger threshold.
pub fn tune_threshold(
    tune_set: &[&TrayObservation],
    meals: &MealCatalog,
    grid: &ThresholdGrid,
) -> Result<ThresholdChoice> {
    if tune_set.is_empty() {
        return Err(Error::InsufficientData("empty tuning set".into()));
    }
    let scores = grid_scores(tune_set, meals, grid)?;
    let mut best = ThresholdChoice {
        theta: grid.values()[0],
        f_measure: scores[0],
    };
    for (&theta, &f) in grid.values().iter().zip(&scores).skip(1) {
        if f >= best.f_measure {
            best = ThresholdChoice { theta, f_measure: f };
        }
    }
    Ok(best)
}

/// Indices into the photo list for one tune/test split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fold {
    pub tune: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// Shuffles `0..n` with `seed` and cuts it into `fold_count` parts of
    /// `n / fold_count` photos. Fold `i` tunes on part `i` and tests on every
    /// other photo, including the `n % fold_count` left over.
    pub fn new(n: usize, fold_count: usize, seed: u64) -> Result<Self> {
        if fold_count < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 folds, got {fold_count}"
            )));
        }
        let part = n / fold_count;
        if part == 0 {
            return Err(Error::InsufficientData(format!(
                "{n} photos cannot fill {fold_count} folds"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let folds = (0..fold_count)
            .map(|i| {
                let mut tune = order[i * part..(i + 1) * part].to_vec();
                tune.sort_unstable();
                let in_tune: BTreeSet<usize> = tune.iter().copied().collect();
                let test = (0..n).filter(|j| !in_tune.contains(j)).collect();
                Fold { tune, test }
            })
            .collect();
        Ok(FoldPlan { folds })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldOutcome {
    pub theta: f64,
    pub tune_f_measure: f64,
    pub tune_photos: Vec<String>,
    pub test_photos: Vec<String>,
    pub report: EvalReport,
    #[serde(skip)]
    pub predictions: Vec<EvalSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidation {
    pub folds: Vec<FoldOutcome>,
    /// Metrics over the concatenated test predictions of all folds.
    pub pooled: EvalReport,
}

/// Tunes on one part and tests on the rest, for each fold of a seeded plan.
pub fn cross_validate(
    photos: &[TrayObservation],
    meals: &MealCatalog,
    grid: &ThresholdGrid,
    fold_count: usize,
    seed: u64,
) -> Result<CrossValidation> {
    if let Some(p) = photos.iter().find(|p| p.ground_truth.is_none()) {
        return Err(Error::NoGroundTruth(p.photo_id.clone()));
    }
    let plan = FoldPlan::new(photos.len(), fold_count, seed)?;
    let mut folds = Vec::with_capacity(plan.folds.len());
    let mut pooled = Vec::new();
    for fold in &plan.folds {
        let tune: Vec<&TrayObservation> = fold.tune.iter().map(|&i| &photos[i]).collect();
        let choice = tune_threshold(&tune, meals, grid)?;
        let predictions = fold
            .test
            .iter()
            .map(|&i| {
                let photo = &photos[i];
                let result = recognize_tray_multi(photo, meals.get(&photo.meal_id)?, choice.theta)?;
                EvalSample::new(&result, photo)
            })
            .collect::<Result<Vec<_>>>()?;
        let report = evaluate(&predictions, meals)?;
        pooled.extend(predictions.iter().cloned());
        folds.push(FoldOutcome {
            theta: choice.theta,
            tune_f_measure: choice.f_measure,
            tune_photos: tune.iter().map(|p| p.photo_id.clone()).collect(),
            test_photos: fold.test.iter().map(|&i| photos[i].photo_id.clone()).collect(),
            report,
            predictions,
        });
    }
    let pooled = evaluate(&pooled, meals)?;
    Ok(CrossValidation { folds, pooled })
}
