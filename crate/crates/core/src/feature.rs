//! Unit-norm feature vectors and the nearest-neighbor primitives built on them.
//!
//! Similarity between a query and a class is the largest inner product between
//! the query and any of that class's template vectors. Since every vector is
//! L2-normalized this is the cosine similarity, so scores live in `[-1, 1]`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::menu::{ClassId, MealTemplateSet};

/// Norms below this are treated as zero.
pub const ZERO_NORM_EPS: f64 = 1e-12;

/// Accepted deviation of a normalized vector's norm from 1.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// An L2-normalized feature vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    /// Divides `raw` by its Euclidean norm.
    ///
    /// `dim` is the dimensionality every vector in the dataset shares.
    pub fn normalize(raw: &[f64], dim: usize) -> Result<Self> {
        if raw.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: raw.len(),
            });
        }
        if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < ZERO_NORM_EPS {
            return Err(Error::ZeroVector);
        }
        let values: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        Ok(FeatureVector(values))
    }

    /// Normalizes using the vector's own length as the dimensionality.
    pub fn from_raw(raw: &[f64]) -> Result<Self> {
        Self::normalize(raw, raw.len())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_NORM_TOL
    }

    /// Inner product, accumulated left to right.
    pub fn dot(&self, other: &FeatureVector) -> f64 {
        dot(&self.0, &other.0)
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inner product of two unit vectors.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimilarityScore(pub f64);

impl SimilarityScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for SimilarityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.0)
    }
}

/// Largest inner product between `x` and the templates of class `class`.
pub fn class_similarity(
    class: &ClassId,
    x: &FeatureVector,
    templates: &MealTemplateSet,
) -> Result<SimilarityScore> {
    let vectors = templates
        .templates_of(class)
        .ok_or_else(|| Error::UnknownClass(class.to_string()))?;
    Ok(SimilarityScore(max_similarity(x, vectors)))
}

pub(crate) fn max_similarity<'a, I>(x: &FeatureVector, vectors: I) -> f64
where
    I: IntoIterator<Item = &'a FeatureVector>,
{
    vectors
        .into_iter()
        .map(|t| t.dot(x))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Nearest-neighbor class for `x` over the whole meal.
///
/// Classes are scanned in ascending id order and only a strictly greater
/// score replaces the current best, so ties resolve to the smallest id.
pub fn classify_single(
    x: &FeatureVector,
    templates: &MealTemplateSet,
) -> Result<(ClassId, SimilarityScore)> {
    let mut best: Option<(&ClassId, f64)> = None;
    for (class, vectors) in templates.iter_templates() {
        let score = max_similarity(x, vectors);
        match best {
            Some((_, s)) if score <= s => {}
            _ => best = Some((class, score)),
        }
    }
    best.map(|(c, s)| (c.clone(), SimilarityScore(s)))
        .ok_or(Error::EmptyTemplateSet)
}
