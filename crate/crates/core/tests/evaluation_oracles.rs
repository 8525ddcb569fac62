mod common;

use std::collections::BTreeSet;

use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{exact_sum, random_meal, rational};
use foodtray::evaluation::{
    energy_correlation, export_scatter, harmonic_mean, nutrition_mae, pearson, set_metrics, tray_nutrition,
};
use foodtray::ingestion::generate_synthetic_dataset;
use foodtray::menu::{Catalog, Nutrient};
use foodtray::{evaluate, recognize_tray_single, ClassId, EvalSample, SyntheticMenuSpec};

fn synthetic_samples(tray_count: usize, seed: u64) -> (Vec<EvalSample>, foodtray::MealCatalog) {
    let spec = SyntheticMenuSpec {
        tray_count,
        dim: 16,
        seed,
        ..SyntheticMenuSpec::default()
    };
    let data = generate_synthetic_dataset(&spec).unwrap();
    let meals = data.catalog().unwrap();
    let samples = data
        .observations()
        .unwrap()
        .iter()
        .map(|p| EvalSample::new(&recognize_tray_single(p, meals.get(&p.meal_id).unwrap()).unwrap(), p).unwrap())
        .collect();
    (samples, meals)
}

#[test]
fn tray_nutrition_matches_exact_summation() {
    let (samples, meals) = synthetic_samples(20, 4);
    for s in &samples {
        let meal = meals.get(&s.meal_id).unwrap();
        let total = tray_nutrition(&s.ground_truth, meal).unwrap();
        for n in Nutrient::ALL {
            let values: Vec<f64> = s.ground_truth.iter().map(|c| n.of(&meal.nutrition_of(c).unwrap())).collect();
            let exact = exact_sum(&values).to_f64().unwrap();
            assert!((n.of(&total) - exact).abs() <= 1e-9);
        }
    }
}

#[test]
fn set_metrics_matches_element_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let universe: Vec<ClassId> = (0..20).map(|i| ClassId::new(format!("c{i}"))).collect();
    let pick = |rng: &mut ChaCha8Rng, p: f64| -> BTreeSet<ClassId> {
        universe.iter().filter(|_| rng.random_bool(p)).cloned().collect()
    };
    let pairs: Vec<(BTreeSet<ClassId>, BTreeSet<ClassId>)> =
        (0..100).map(|_| (pick(&mut rng, 0.3), pick(&mut rng, 0.3))).collect();
    let (mut tp, mut pred, mut rel) = (0usize, 0usize, 0usize);
    for (p, g) in &pairs {
        for c in &universe {
            match (p.contains(c), g.contains(c)) {
                (true, true) => {
                    tp += 1;
                    pred += 1;
                    rel += 1;
                }
                (true, false) => pred += 1,
                (false, true) => rel += 1,
                (false, false) => {}
            }
        }
    }
    let m = set_metrics(pairs.iter().map(|(p, g)| (p, g)));
    assert_eq!((m.true_positives, m.predicted, m.relevant), (tp, pred, rel));
    assert_eq!(m.precision, tp as f64 / pred as f64);
    assert_eq!(m.recall, tp as f64 / rel as f64);
    let exact_f = BigRational::new(BigInt::from(2 * tp), BigInt::from(pred + rel));
    assert!((m.f_measure - exact_f.to_f64().unwrap()).abs() <= 1e-12);
}

#[test]
fn nutrition_mae_matches_extended_precision() {
    let (samples, meals) = synthetic_samples(50, 6);
    let errors = nutrition_mae(&samples, &meals).unwrap();
    for n in Nutrient::ALL {
        let (mut abs, mut gt_sum, mut gt_count) = (BigRational::zero(), BigRational::zero(), 0usize);
        for s in &samples {
            let meal = meals.get(&s.meal_id).unwrap();
            let of = |items: &BTreeSet<ClassId>| {
                let v: Vec<f64> = items.iter().map(|c| n.of(&meal.nutrition_of(c).unwrap())).collect();
                exact_sum(&v)
            };
            let (g, p) = (of(&s.ground_truth), of(&s.predicted));
            abs += (p - &g).abs();
            if !s.ground_truth.is_empty() {
                gt_sum += g;
                gt_count += 1;
            }
        }
        let mae = abs / BigInt::from(samples.len());
        let rel = &mae / (gt_sum / BigInt::from(gt_count));
        let e = errors.get(n);
        assert!((e.mae - mae.to_f64().unwrap()).abs() <= 1e-9, "{n:?}");
        assert!((e.mae_relative.unwrap() - rel.to_f64().unwrap()).abs() <= 1e-9, "{n:?}");
    }
}

fn textbook_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = BigInt::from(xs.len());
    let mx = exact_sum(xs) / &n;
    let my = exact_sum(ys) / &n;
    let (mut sxy, mut sxx, mut syy) = (BigRational::zero(), BigRational::zero(), BigRational::zero());
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (rational(*x) - &mx, rational(*y) - &my);
        sxy += &dx * &dy;
        sxx += &dx * &dx;
        syy += &dy * &dy;
    }
    let r2 = (&sxy * &sxy) / (sxx * syy);
    let r = r2.to_f64().unwrap().sqrt();
    if sxy.is_negative() {
        -r
    } else {
        r
    }
}

#[test]
fn pearson_matches_textbook_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let n = rng.random_range(2..60);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2000.0)).collect();
        let slope = rng.random_range(-2.0..2.0);
        let ys: Vec<f64> = xs.iter().map(|x| slope * x + rng.random_range(-300.0..300.0)).collect();
        let r = pearson(&xs, &ys).unwrap();
        assert!((r - textbook_pearson(&xs, &ys)).abs() <= 1e-9);
    }
}

#[test]
fn scatter_round_trip_reproduces_correlation() {
    let (samples, meals) = synthetic_samples(30, 8);
    let mut buf = Vec::new();
    assert_eq!(export_scatter(&samples, &meals, &mut buf).unwrap(), 30);
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    let (mut gt, mut pred, mut ids) = (Vec::new(), Vec::new(), Vec::new());
    for row in reader.records() {
        let row = row.unwrap();
        ids.push(row[0].to_owned());
        gt.push(row[1].parse::<f64>().unwrap());
        pred.push(row[2].parse::<f64>().unwrap());
    }
    let order: Vec<String> = samples.iter().map(|s| s.photo_id.clone()).collect();
    assert_eq!(ids, order);
    let r = energy_correlation(&samples, &meals).unwrap();
    assert!((pearson(&gt, &pred).unwrap() - r).abs() <= 1e-9);
}

#[test]
fn empty_scatter_is_header_only() {
    let catalog = Catalog::<foodtray::Menu>::new();
    let mut buf = Vec::new();
    assert_eq!(export_scatter(&[], &catalog, &mut buf).unwrap(), 0);
    assert_eq!(String::from_utf8(buf).unwrap(), "photo_id,gt_energy_kcal,predicted_energy_kcal\n");
}

proptest! {
    #[test]
    fn report_f_is_harmonic_mean(seed in any::<u64>(), photos in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let meal = random_meal(&mut rng, 12, 3, 4, &[]);
        let ids: Vec<ClassId> = meal.class_ids().cloned().collect();
        let mut pick = |p: f64| -> BTreeSet<ClassId> {
            ids.iter().filter(|_| rng.random_bool(p)).cloned().collect()
        };
        let samples: Vec<EvalSample> = (0..photos)
            .map(|i| EvalSample {
                photo_id: format!("p{i}"),
                meal_id: "meal".into(),
                predicted: pick(0.3),
                ground_truth: pick(0.3),
            })
            .collect();
        let catalog: Catalog<_> = [meal].into_iter().collect();
        let r = evaluate(&samples, &catalog).unwrap();
        let expect = if r.precision + r.recall > 0.0 {
            2.0 * r.precision * r.recall / (r.precision + r.recall)
        } else {
            0.0
        };
        prop_assert_eq!(r.f_measure, expect);
        prop_assert_eq!(r.f_measure, harmonic_mean(r.precision, r.recall));
        prop_assert!((0.0..=1.0).contains(&r.precision) && (0.0..=1.0).contains(&r.recall));
        prop_assert!(r.mae.energy_kcal >= 0.0);
    }

    #[test]
    fn pearson_is_bounded_and_symmetric(xs in prop::collection::vec(-1e4f64..1e4, 2..40), shift in -10.0f64..10.0) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x.sin() * 100.0 + i as f64 * shift).collect();
        if let (Ok(a), Ok(b)) = (pearson(&xs, &ys), pearson(&ys, &xs)) {
            prop_assert!((-1.0..=1.0).contains(&a));
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
