//! Tray-level evaluation: set precision/recall/F-measure over predicted item
//! sets, nutrient mean absolute error, and energy correlation.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::menu::{Catalog, ClassId, HasMenu, Nutrient, TrayNutrition};
use crate::recognizer::{TrayObservation, TrayResult};

/// Predicted and ground-truth item sets for one photo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSample {
    pub photo_id: String,
    pub meal_id: String,
    pub predicted: BTreeSet<ClassId>,
    pub ground_truth: BTreeSet<ClassId>,
}

impl EvalSample {
    pub fn new(result: &TrayResult, photo: &TrayObservation) -> Result<Self> {
        let gt = photo
            .ground_truth
            .clone()
            .ok_or_else(|| Error::NoGroundTruth(photo.photo_id.clone()))?;
        Ok(EvalSample {
            photo_id: result.photo_id.clone(),
            meal_id: result.meal_id.clone(),
            predicted: result.predicted_items.clone(),
            ground_truth: gt,
        })
    }
}

/// Pairs each result with its observation, in order.
pub fn samples_from(results: &[TrayResult], photos: &[TrayObservation]) -> Result<Vec<EvalSample>> {
    if results.len() != photos.len() {
        return Err(Error::Validation(format!(
            "{} results for {} photos",
            results.len(),
            photos.len()
        )));
    }
    results
        .iter()
        .zip(photos)
        .map(|(r, p)| EvalSample::new(r, p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub relevant: usize,
    /// Set when a denominator was zero and the affected metric was reported as 0.
    pub degenerate: bool,
}

/// `2PR / (P + R)`, or 0 when both are 0.
pub fn harmonic_mean(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl SetMetrics {
    pub fn from_counts(true_positives: usize, predicted: usize, relevant: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(true_positives, predicted);
        let recall = ratio(true_positives, relevant);
        SetMetrics {
            precision,
            recall,
            f_measure: harmonic_mean(precision, recall),
            true_positives,
            predicted,
            relevant,
            degenerate: predicted == 0 || relevant == 0,
        }
    }
}

/// Micro-averaged precision, recall and F-measure over `(predicted, truth)` pairs.
pub fn set_metrics<'a, I>(pairs: I) -> SetMetrics
where
    I: IntoIterator<Item = (&'a BTreeSet<ClassId>, &'a BTreeSet<ClassId>)>,
{
    let (mut tp, mut pred, mut rel) = (0, 0, 0);
    for (p, g) in pairs {
        tp += p.intersection(g).count();
        pred += p.len();
        rel += g.len();
    }
    SetMetrics::from_counts(tp, pred, rel)
}

/// Per-photo metrics averaged over photos. An empty prediction scores
/// precision 1 only when the truth is empty too; likewise for recall.
pub fn macro_set_metrics<'a, I>(pairs: I) -> (f64, f64, f64)
where
    I: IntoIterator<Item = (&'a BTreeSet<ClassId>, &'a BTreeSet<ClassId>)>,
{
    let (mut sp, mut sr, mut sf, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (p, g) in pairs {
        let tp = p.intersection(g).count() as f64;
        let precision = match (p.len(), g.len()) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            (k, _) => tp / k as f64,
        };
        let recall = match (g.len(), p.len()) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            (k, _) => tp / k as f64,
        };
        sp += precision;
        sr += recall;
        sf += harmonic_mean(precision, recall);
        n += 1;
    }
    if n == 0 {
        return (0.0, 0.0, 0.0);
    }
    let n = n as f64;
    (sp / n, sr / n, sf / n)
}

/// One value per nutrient, serialized with unit-suffixed keys.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerNutrient<T> {
    pub energy_kcal: T,
    pub protein_g: T,
    pub lipid_g: T,
    pub carbohydrate_g: T,
}

impl<T: Copy> PerNutrient<T> {
    pub fn from_fn(mut f: impl FnMut(Nutrient) -> T) -> Self {
        PerNutrient {
            energy_kcal: f(Nutrient::Energy),
            protein_g: f(Nutrient::Protein),
            lipid_g: f(Nutrient::Lipid),
            carbohydrate_g: f(Nutrient::Carbohydrate),
        }
    }

    pub fn get(&self, n: Nutrient) -> T {
        match n {
            Nutrient::Energy => self.energy_kcal,
            Nutrient::Protein => self.protein_g,
            Nutrient::Lipid => self.lipid_g,
            Nutrient::Carbohydrate => self.carbohydrate_g,
        }
    }
}

/// Tray nutrition of `items`, one serving each.
pub fn tray_nutrition<M: HasMenu>(items: &BTreeSet<ClassId>, meal: &M) -> Result<TrayNutrition> {
    meal.menu().tray_nutrition(items)
}

/// Ground-truth and predicted nutrition for every sample, in order.
pub fn nutrition_pairs<M: HasMenu>(
    samples: &[EvalSample],
    meals: &Catalog<M>,
) -> Result<Vec<(TrayNutrition, TrayNutrition)>> {
    samples
        .iter()
        .map(|s| {
            let meal = meals.get(&s.meal_id)?;
            Ok((
                tray_nutrition(&s.ground_truth, meal)?,
                tray_nutrition(&s.predicted, meal)?,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NutrientError {
    pub mae: f64,
    /// `mae` divided by the mean ground-truth value; `None` when that mean is 0.
    pub mae_relative: Option<f64>,
}

/// Mean absolute error of tray nutrition per nutrient.
///
/// The relative error divides by the mean ground truth over photos with a
/// non-empty ground-truth set.
pub fn nutrition_mae<M: HasMenu>(
    samples: &[EvalSample],
    meals: &Catalog<M>,
) -> Result<PerNutrient<NutrientError>> {
    let pairs = nutrition_pairs(samples, meals)?;
    Ok(mae_from_pairs(samples, &pairs))
}

fn mae_from_pairs(
    samples: &[EvalSample],
    pairs: &[(TrayNutrition, TrayNutrition)],
) -> PerNutrient<NutrientError> {
    PerNutrient::from_fn(|n| {
        let mut abs_sum = 0.0;
        let mut gt_sum = 0.0;
        let mut gt_count = 0usize;
        for (s, (gt, pred)) in samples.iter().zip(pairs) {
            abs_sum += (n.of(pred) - n.of(gt)).abs();
            if !s.ground_truth.is_empty() {
                gt_sum += n.of(gt);
                gt_count += 1;
            }
        }
        let mae = if pairs.is_empty() {
            0.0
        } else {
            abs_sum / pairs.len() as f64
        };
        let mean_gt = if gt_count == 0 {
            0.0
        } else {
            gt_sum / gt_count as f64
        };
        NutrientError {
            mae,
            mae_relative: (mean_gt > 0.0).then(|| mae / mean_gt),
        }
    })
}

/// Pearson correlation of two equally long series.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter(format!(
            "series lengths differ: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(
            "correlation needs at least two photos".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation between ground-truth and predicted tray energy.
pub fn energy_correlation<M: HasMenu>(samples: &[EvalSample], meals: &Catalog<M>) -> Result<f64> {
    let pairs = nutrition_pairs(samples, meals)?;
    let gt: Vec<f64> = pairs.iter().map(|(g, _)| g.energy).collect();
    let pred: Vec<f64> = pairs.iter().map(|(_, p)| p.energy).collect();
    pearson(&gt, &pred)
}

pub const SCATTER_HEADER: [&str; 3] = ["photo_id", "gt_energy_kcal", "predicted_energy_kcal"];

/// Writes one CSV row of ground-truth and predicted energy per photo.
/// Returns the number of data rows.
pub fn export_scatter<M: HasMenu, W: Write>(
    samples: &[EvalSample],
    meals: &Catalog<M>,
    sink: W,
) -> Result<usize> {
    let pairs = nutrition_pairs(samples, meals)?;
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(SCATTER_HEADER)?;
    for (s, (gt, pred)) in samples.iter().zip(&pairs) {
        writer.write_record([
            s.photo_id.as_str(),
            &gt.energy.to_string(),
            &pred.energy.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(pairs.len())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n_photos: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub true_positives: usize,
    pub predicted_items: usize,
    pub ground_truth_items: usize,
    #[serde(rename = "macro")]
    pub macro_average: MacroMetrics,
    pub mae: PerNutrient<f64>,
    pub mae_relative: PerNutrient<Option<f64>>,
    pub pearson_r_energy: Option<f64>,
    pub warnings: Vec<String>,
}

/// Computes every metric for `samples`.
pub fn evaluate<M: HasMenu>(samples: &[EvalSample], meals: &Catalog<M>) -> Result<EvalReport> {
    let pairs = nutrition_pairs(samples, meals)?;
    let micro = set_metrics(samples.iter().map(|s| (&s.predicted, &s.ground_truth)));
    let (mp, mr, mf) = macro_set_metrics(samples.iter().map(|s| (&s.predicted, &s.ground_truth)));
    let errors = mae_from_pairs(samples, &pairs);
    let mut warnings = Vec::new();
    if micro.degenerate {
        warnings.push(format!(
            "empty denominator: {} predicted items, {} ground-truth items",
            micro.predicted, micro.relevant
        ));
    }
    for n in Nutrient::ALL {
        if errors.get(n).mae_relative.is_none() {
            warnings.push(format!("relative MAE of {} undefined: mean ground truth is 0", n.key()));
        }
    }
    let gt: Vec<f64> = pairs.iter().map(|(g, _)| g.energy).collect();
    let pred: Vec<f64> = pairs.iter().map(|(_, p)| p.energy).collect();
    let pearson_r_energy = match pearson(&gt, &pred) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("energy correlation undefined: {e}"));
            None
        }
    };
    Ok(EvalReport {
        n_photos: samples.len(),
        precision: micro.precision,
        recall: micro.recall,
        f_measure: micro.f_measure,
        true_positives: micro.true_positives,
        predicted_items: micro.predicted,
        ground_truth_items: micro.relevant,
        macro_average: MacroMetrics {
            precision: mp,
            recall: mr,
            f_measure: mf,
        },
        mae: PerNutrient::from_fn(|n| errors.get(n).mae),
        mae_relative: PerNutrient::from_fn(|n| errors.get(n).mae_relative),
        pearson_r_energy,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::menu::{Category, FoodClass, Menu, NutritionFacts};

    fn ids(xs: &[&str]) -> BTreeSet<ClassId> {
        xs.iter().map(|&x| ClassId::from(x)).collect()
    }

    fn menu() -> Catalog<Menu> {
        let cat = Category {
            id: "c".into(),
            name: "c".into(),
            fine_grained_trigger: false,
        };
        let class = |id: &str, kcal: f64| FoodClass {
            id: id.into(),
            name: id.into(),
            category_id: "c".into(),
            nutrition: NutritionFacts::new(kcal, kcal / 10.0, kcal / 20.0, kcal / 5.0),
        };
        let m = Menu::new(
            "m",
            [cat],
            [class("A", 100.0), class("B", 250.0), class("C", 424.0), class("D", 700.0), class("E", 774.0)],
        )
        .unwrap();
        [m].into_iter().collect()
    }

    fn sample(id: &str, pred: &[&str], gt: &[&str]) -> EvalSample {
        EvalSample {
            photo_id: id.into(),
            meal_id: "m".into(),
            predicted: ids(pred),
            ground_truth: ids(gt),
        }
    }

    #[test]
    fn tray_nutrition_cases() {
        let meals = menu();
        let m = meals.get("m").unwrap();
        assert_eq!(tray_nutrition(&ids(&[]), m).unwrap(), NutritionFacts::ZERO);
        assert_eq!(tray_nutrition(&ids(&["A", "B"]), m).unwrap().energy, 350.0);
        assert!(matches!(
            tray_nutrition(&ids(&["Z"]), m),
            Err(Error::UnknownClass(_))
        ));
    }

    #[test]
    fn perfect_and_empty_predictions() {
        let perfect = [sample("1", &["A", "B"], &["A", "B"]), sample("2", &["C"], &["C"])];
        let m = set_metrics(perfect.iter().map(|s| (&s.predicted, &s.ground_truth)));
        assert_eq!((m.precision, m.recall, m.f_measure), (1.0, 1.0, 1.0));
        assert!(!m.degenerate);

        let empty = [sample("1", &[], &["A", "B"])];
        let m = set_metrics(empty.iter().map(|s| (&s.predicted, &s.ground_truth)));
        assert_eq!((m.precision, m.recall, m.f_measure), (0.0, 0.0, 0.0));
        assert!(m.degenerate);
    }

    #[test]
    fn micro_counts() {
        let s = [sample("1", &["A", "B", "C"], &["A", "D"]), sample("2", &["E"], &["E", "B"])];
        let m = set_metrics(s.iter().map(|s| (&s.predicted, &s.ground_truth)));
        assert_eq!((m.true_positives, m.predicted, m.relevant), (2, 4, 4));
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 0.5);
        assert_eq!(m.f_measure, 0.5);
    }

    #[test]
    fn mae_single_photo() {
        let meals = menu();
        let s = [sample("1", &["D"], &["E"])];
        let e = nutrition_mae(&s, &meals).unwrap();
        assert_eq!(e.energy_kcal.mae, 74.0);
        assert_eq!(e.energy_kcal.mae_relative, Some(74.0 / 774.0));

        let exact = [sample("1", &["A", "B"], &["A", "B"])];
        let e = nutrition_mae(&exact, &meals).unwrap();
        assert_eq!(e.energy_kcal.mae, 0.0);
        assert_eq!(e.protein_g.mae_relative, Some(0.0));
    }

    #[test]
    fn empty_ground_truth_excluded_from_relative_denominator() {
        let meals = menu();
        let s = [sample("1", &["A"], &[]), sample("2", &["B"], &["B"])];
        let e = nutrition_mae(&s, &meals).unwrap();
        assert_eq!(e.energy_kcal.mae, 50.0);
        assert_eq!(e.energy_kcal.mae_relative, Some(50.0 / 250.0));

        let only_empty = [sample("1", &["A"], &[])];
        let e = nutrition_mae(&only_empty, &meals).unwrap();
        assert_eq!(e.energy_kcal.mae_relative, None);
    }

    #[test]
    fn correlation_extremes() {
        let xs = [100.0, 250.0, 700.0, 30.0];
        let r = pearson(&xs, &xs).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| 1000.0 - x).collect();
        let r = pearson(&xs, &neg).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
        assert!(matches!(pearson(&xs, &[5.0; 4]), Err(Error::DegenerateVariance)));
        assert!(matches!(pearson(&[1.0], &[1.0]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn energy_correlation_uses_tray_totals() {
        let meals = menu();
        let s = [
            sample("1", &["A"], &["A"]),
            sample("2", &["B", "C"], &["B", "C"]),
            sample("3", &["E"], &["E"]),
        ];
        let r = energy_correlation(&s, &meals).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scatter_rows_in_order() {
        let meals = menu();
        let mut buf = Vec::new();
        assert_eq!(export_scatter(&[], &meals, &mut buf).unwrap(), 0);
        assert_eq!(String::from_utf8(buf).unwrap(), "photo_id,gt_energy_kcal,predicted_energy_kcal\n");

        let s = [
            sample("p3", &["A"], &["B"]),
            sample("p1", &["C"], &["C"]),
            sample("p2", &[], &["E"]),
        ];
        let mut buf = Vec::new();
        assert_eq!(export_scatter(&s, &meals, &mut buf).unwrap(), 3);
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1..], ["p3,250,100", "p1,424,424", "p2,774,0"]);
    }

    #[test]
    fn report_identities() {
        let meals = menu();
        let s = [sample("1", &["A", "B", "C"], &["A", "D"]), sample("2", &["E", "C"], &["E", "B"])];
        let r = evaluate(&s, &meals).unwrap();
        assert_eq!(r.f_measure, 2.0 * r.precision * r.recall / (r.precision + r.recall));
        assert_eq!(r.n_photos, 2);
        assert!(r.pearson_r_energy.is_some());
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["mae"]["energy_kcal"].is_number());
        assert!(json["macro"]["f_measure"].is_number());
    }

    #[test]
    fn report_on_empty_predictions_is_zero_with_warnings() {
        let meals = menu();
        let s = [sample("1", &[], &["A"]), sample("2", &[], &["B"])];
        let r = evaluate(&s, &meals).unwrap();
        assert_eq!((r.precision, r.recall, r.f_measure), (0.0, 0.0, 0.0));
        assert!(r.pearson_r_energy.is_none());
        assert!(!r.warnings.is_empty());
    }
}
