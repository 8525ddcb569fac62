use std::collections::{BTreeMap, BTreeSet};

use foodtray::ingestion::{histogram_descriptor, HistogramProvider, RgbPatch};
use foodtray::menu::{Category, ClassTemplates, FoodClass};
use foodtray::recognizer::WindowFeatureProvider;
use foodtray::{
    ClassId, Error, FeatureVector, MealTemplateSet, Menu, NutritionFacts, Recognizer, RecognizerConfig, Region,
    RegionObservation, TrayObservation,
};

const RED: [u8; 3] = [220, 20, 20];
const GREEN: [u8; 3] = [30, 200, 40];
const YELLOW: [u8; 3] = [240, 230, 30];
const BROWN: [u8; 3] = [140, 90, 40];

fn meal() -> MealTemplateSet {
    let cats = [
        Category { id: "salad".into(), name: "Salad".into(), fine_grained_trigger: true },
        Category { id: "soup".into(), name: "Soup".into(), fine_grained_trigger: false },
    ];
    let items = [("lettuce", "salad", GREEN), ("paprika", "salad", YELLOW), ("tomato", "salad", RED), ("miso", "soup", BROWN)];
    let classes = items.map(|(id, cat, _)| FoodClass {
        id: id.into(),
        name: id.into(),
        category_id: cat.into(),
        nutrition: NutritionFacts::new(20.0, 1.0, 0.5, 3.0),
    });
    let templates: BTreeMap<ClassId, ClassTemplates> = items
        .iter()
        .map(|(id, _, rgb)| {
            let h = histogram_descriptor(&RgbPatch::filled(8, 8, *rgb)).unwrap();
            (
                ClassId::new(*id),
                ClassTemplates {
                    feature_ids: vec![format!("{id}/t0")],
                    vectors: vec![FeatureVector::from_raw(&h).unwrap()],
                },
            )
        })
        .collect();
    MealTemplateSet::new(Menu::new("lunch", cats, classes).unwrap(), 512, templates).unwrap()
}

/// 80x40 tray: a salad plate on the left with quadrants red, green, yellow,
/// red and a plain soup bowl on the right.
fn tray_image() -> RgbPatch {
    let (w, h) = (80, 40);
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let px = match (x / 20, y / 20) {
                (0, 0) => RED,
                (1, 0) => GREEN,
                (0, 1) => YELLOW,
                (1, 1) => RED,
                _ => BROWN,
            };
            data.extend_from_slice(&px);
        }
    }
    RgbPatch::new(w, h, data).unwrap()
}

#[test]
fn hierarchical_recognition_from_raw_pixels() {
    let meal = meal();
    let image = tray_image();
    let mut provider = HistogramProvider::new();
    provider.insert("tray", image.clone());
    let regions = [Region::new(0, 0, 40, 40).unwrap(), Region::new(40, 0, 40, 40).unwrap()];
    let photo = TrayObservation {
        photo_id: "tray".into(),
        meal_id: "lunch".into(),
        regions: regions
            .iter()
            .map(|r| {
                let raw = provider.window_feature("tray", None, r).unwrap().unwrap();
                RegionObservation::new(*r, FeatureVector::from_raw(&raw).unwrap())
            })
            .collect(),
        ground_truth: None,
    };
    let config = RecognizerConfig {
        window_fractions: vec![0.5],
        stride_fraction: 0.5,
        fine_grained: true,
    };
    let result = Recognizer::new(&config).unwrap().with_provider(&provider).recognize_tray(&photo, &meal).unwrap();
    let salad = &result.region_results[0];
    assert_eq!(salad.coarse_class, ClassId::new("tomato"));
    assert!(salad.triggered);
    let want: BTreeSet<ClassId> = ["lettuce", "paprika", "tomato"].map(ClassId::new).into();
    assert_eq!(salad.fine_classes, want);
    assert!(!result.region_results[1].triggered);
    let mut all = want;
    all.insert(ClassId::new("miso"));
    assert_eq!(result.predicted_items, all);

    let without = Recognizer::new(&config).unwrap().recognize_tray(&photo, &meal);
    assert!(matches!(without, Err(Error::MissingWindowFeatures { .. })));
}

#[test]
fn provider_without_the_photo_reports_missing_windows() {
    let meal = meal();
    let provider = HistogramProvider::new();
    let region = Region::new(0, 0, 40, 40).unwrap();
    let h = histogram_descriptor(&tray_image().crop(&region).unwrap()).unwrap();
    let photo = TrayObservation {
        photo_id: "elsewhere".into(),
        meal_id: "lunch".into(),
        regions: vec![RegionObservation::new(region, FeatureVector::from_raw(&h).unwrap())],
        ground_truth: None,
    };
    let config = RecognizerConfig::default();
    let err = Recognizer::new(&config).unwrap().with_provider(&provider).recognize_tray(&photo, &meal);
    assert!(matches!(err, Err(Error::MissingWindowFeatures { region: r }) if r == region));
}
