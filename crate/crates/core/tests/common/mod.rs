#![allow(dead_code)]

use std::collections::BTreeMap;

use num::{BigRational, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use foodtray::menu::{Category, ClassTemplates, FoodClass};
use foodtray::{ClassId, FeatureVector, MealTemplateSet, Menu, NutritionFacts};

pub fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> FeatureVector {
    loop {
        let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if let Ok(v) = FeatureVector::normalize(&raw, dim) {
            return v;
        }
    }
}

pub fn naive_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Random menu: `classes` classes spread over `categories` categories, each
/// with 1..=3 random unit templates. Categories listed in `triggers` are
/// flagged for fine-grained recognition.
pub fn random_meal(
    rng: &mut ChaCha8Rng,
    classes: usize,
    categories: usize,
    dim: usize,
    triggers: &[usize],
) -> MealTemplateSet {
    let cats = (0..categories).map(|c| Category {
        id: format!("c{c}"),
        name: format!("category {c}"),
        fine_grained_trigger: triggers.contains(&c),
    });
    let mut food = Vec::new();
    let mut templates = BTreeMap::new();
    for k in 0..classes {
        let id = ClassId::new(format!("k{k:03}"));
        let e = (rng.random_range(0.0..500.0_f64) * 10.0).round() / 10.0;
        food.push(FoodClass {
            id: id.clone(),
            name: id.to_string(),
            category_id: format!("c{}", k % categories),
            nutrition: NutritionFacts::new(e, e / 20.0, e / 30.0, e / 5.0),
        });
        let count = rng.random_range(1..=3);
        templates.insert(
            id,
            ClassTemplates {
                feature_ids: (0..count).map(|t| format!("k{k}/t{t}")).collect(),
                vectors: (0..count).map(|_| random_unit(rng, dim)).collect(),
            },
        );
    }
    let menu = Menu::new("meal", cats, food).unwrap();
    MealTemplateSet::new(menu, dim, templates).unwrap()
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

pub fn exact_sum<'a>(xs: impl IntoIterator<Item = &'a f64>) -> BigRational {
    xs.into_iter().fold(BigRational::zero(), |acc, &x| acc + rational(x))
}
