//! Synthetic buffet data with known ground truth.
//!
//! Each class gets a cluster center made of a per-category anchor plus a
//! per-class offset, so classes of one category resemble each other more than
//! classes of different categories. Templates and query features are the
//! center plus isotropic Gaussian noise.
//!
//! Trays hold single-item plates and "mixed plates" that combine several
//! classes of one trigger category. A mixed plate's own feature is the
//! centroid of its members' centers, which looks like none of them in
//! particular, while each of its sliding windows shows one member.

use std::collections::BTreeSet;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ingestion::FeatureStore;
use crate::menu::{Category, ClassEntry, ClassId, MealCatalog, MealManifest, NutritionFacts};
use crate::recognizer::{generate_windows, Region, RegionEntry, TrayFile, TrayObservation, WindowEntry};

const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMenuSpec {
    pub category_count: usize,
    pub classes_per_category: usize,
    /// Indices of categories flagged for fine-grained recognition.
    pub trigger_categories: Vec<usize>,
    pub dim: usize,
    /// Minimum distance between any two class centers of a meal.
    pub separation: f64,
    /// Expected Euclidean norm of the noise added to every feature.
    pub sigma: f64,
    /// Length of a category anchor relative to `separation`.
    pub category_scale: f64,
    pub seed: u64,
    pub meal_count: usize,
    pub templates_per_class: usize,
    pub tray_count: usize,
    pub plates_min: usize,
    pub plates_max: usize,
    /// Probability that a plate is mixed, when a trigger category can supply it.
    pub mixed_fraction: f64,
    pub mixed_size: usize,
    pub window_fraction: f64,
    pub stride_fraction: f64,
    pub image_width: u32,
    pub image_height: u32,
}

impl Default for SyntheticMenuSpec {
    fn default() -> Self {
        SyntheticMenuSpec {
            category_count: 5,
            classes_per_category: 8,
            trigger_categories: vec![0, 1],
            dim: 64,
            separation: 1.0,
            sigma: 0.1,
            category_scale: 1.5,
            seed: 0,
            meal_count: 1,
            templates_per_class: 3,
            tray_count: 100,
            plates_min: 4,
            plates_max: 7,
            mixed_fraction: 0.4,
            mixed_size: 3,
            window_fraction: 0.5,
            stride_fraction: 0.5,
            image_width: 640,
            image_height: 480,
        }
    }
}

impl SyntheticMenuSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.dim < 2 {
            return bad(format!("dimension must be at least 2, got {}", self.dim));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return bad(format!("separation must be positive, got {}", self.separation));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if !(self.category_scale >= 0.0 && self.category_scale.is_finite()) {
            return bad("category scale must be non-negative".into());
        }
        if self.category_count == 0 || self.classes_per_category == 0 {
            return bad("need at least one category and one class per category".into());
        }
        if let Some(&c) = self.trigger_categories.iter().find(|&&c| c >= self.category_count) {
            return bad(format!("trigger category {c} out of range"));
        }
        if self.meal_count == 0 || self.templates_per_class == 0 {
            return bad("meal count and templates per class must be positive".into());
        }
        if self.plates_min > self.plates_max {
            return bad("plates_min exceeds plates_max".into());
        }
        if !(0.0..=1.0).contains(&self.mixed_fraction) {
            return bad("mixed fraction must lie in [0, 1]".into());
        }
        if self.mixed_size < 2 {
            return bad("a mixed plate needs at least 2 items".into());
        }
        crate::recognizer::validate_window_params(self.window_fraction, self.stride_fraction)
            .map_err(|e| Error::InvalidSpec(e.to_string()))?;
        if self.image_width == 0 || self.image_height == 0 {
            return bad("image must be non-empty".into());
        }
        let probe = Region { x: 0, y: 0, width: 100, height: 100 };
        let per_plate = generate_windows(&probe, self.window_fraction, self.stride_fraction)?.len();
        if self.mixed_fraction > 0.0 && !self.trigger_categories.is_empty() && per_plate < self.mixed_size {
            return bad(format!("{per_plate} windows per plate cannot show {} mixed items", self.mixed_size));
        }
        Ok(())
    }

    fn category_id(&self, c: usize) -> String {
        format!("cat{c}")
    }

    fn class_id(&self, meal: usize, c: usize, k: usize) -> ClassId {
        ClassId::new(format!("m{meal}-cat{c}-item{k:02}"))
    }
}

/// Composition of one generated plate.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateInfo {
    pub photo_id: String,
    pub region_index: usize,
    pub classes: Vec<ClassId>,
    pub mixed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub manifests: Vec<MealManifest>,
    pub store: FeatureStore,
    pub trays: Vec<TrayFile>,
    pub plates: Vec<PlateInfo>,
}

impl SyntheticDataset {
    pub fn catalog(&self) -> Result<MealCatalog> {
        let mut catalog = MealCatalog::new();
        for m in &self.manifests {
            catalog.insert(m.resolve(&self.store)?)?;
        }
        Ok(catalog)
    }

    pub fn observations(&self) -> Result<Vec<TrayObservation>> {
        self.trays.iter().map(|t| t.resolve(&self.store)).collect()
    }

    pub fn mixed_plate_fraction(&self) -> f64 {
        if self.plates.is_empty() {
            return 0.0;
        }
        self.plates.iter().filter(|p| p.mixed).count() as f64 / self.plates.len() as f64
    }

    /// Writes `meal_<id>.json` per meal, `features.tsv` and `trays/<photo>.json`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("trays"))?;
        for m in &self.manifests {
            let f = fs::File::create(dir.join(format!("meal_{}.json", m.meal_id)))?;
            m.write_to(BufWriter::new(f))?;
        }
        let f = fs::File::create(dir.join("features.tsv"))?;
        self.store.write_to(BufWriter::new(f))?;
        for t in &self.trays {
            let f = fs::File::create(dir.join("trays").join(format!("{}.json", t.photo_id)))?;
            t.write_to(BufWriter::new(f))?;
        }
        Ok(())
    }
}

struct MealModel {
    /// `centers[c][k]` is the center of class `k` in category `c`.
    centers: Vec<Vec<Vec<f64>>>,
}

struct Generator<'a> {
    spec: &'a SyntheticMenuSpec,
    rng: ChaCha8Rng,
    store: FeatureStore,
}

impl Generator<'_> {
    fn direction(&mut self, length: f64) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..self.spec.dim)
                .map(|_| self.rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                return v.into_iter().map(|x| x * length / norm).collect();
            }
        }
    }

    fn noisy(&mut self, center: &[f64]) -> Vec<f64> {
        if self.spec.sigma == 0.0 {
            return center.to_vec();
        }
        let scale = self.spec.sigma / (self.spec.dim as f64).sqrt();
        center
            .iter()
            .map(|c| c + scale * self.rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    fn place_centers(&mut self) -> Result<MealModel> {
        let spec = self.spec;
        let mut placed: Vec<Vec<f64>> = Vec::new();
        let mut centers = Vec::with_capacity(spec.category_count);
        for _ in 0..spec.category_count {
            let anchor = self.direction(spec.category_scale * spec.separation);
            let mut cat = Vec::with_capacity(spec.classes_per_category);
            for _ in 0..spec.classes_per_category {
                let mut attempts = 0;
                let center = loop {
                    let offset = self.direction(spec.separation);
                    let c: Vec<f64> = anchor.iter().zip(&offset).map(|(a, b)| a + b).collect();
                    if placed.iter().all(|p| distance(p, &c) >= spec.separation) {
                        break c;
                    }
                    attempts += 1;
                    if attempts >= PLACEMENT_ATTEMPTS {
                        return Err(Error::InvalidSpec(format!(
                            "cannot place {} classes at separation {} in {} dimensions",
                            spec.category_count * spec.classes_per_category,
                            spec.separation,
                            spec.dim
                        )));
                    }
                };
                placed.push(center.clone());
                cat.push(center);
            }
            centers.push(cat);
        }
        Ok(MealModel { centers })
    }

    fn add_feature(&mut self, id: String, values: Vec<f64>) -> Result<String> {
        self.store.insert(id.clone(), values)?;
        Ok(id)
    }

    fn manifest(&mut self, meal: usize, model: &MealModel) -> Result<MealManifest> {
        let spec = self.spec;
        let meal_id = format!("meal{meal}");
        let categories = (0..spec.category_count)
            .map(|c| Category {
                id: spec.category_id(c),
                name: format!("Category {c}"),
                fine_grained_trigger: spec.trigger_categories.contains(&c),
            })
            .collect();
        let mut classes = Vec::new();
        for (c, cat) in model.centers.iter().enumerate() {
            for (k, center) in cat.iter().enumerate() {
                let id = spec.class_id(meal, c, k);
                let nutrition = NutritionFacts::new(
                    self.uniform(10.0, 400.0),
                    self.uniform(0.5, 30.0),
                    self.uniform(0.5, 30.0),
                    self.uniform(1.0, 80.0),
                );
                let mut template_feature_ids = Vec::with_capacity(spec.templates_per_class);
                for t in 0..spec.templates_per_class {
                    let v = self.noisy(center);
                    template_feature_ids.push(self.add_feature(format!("{meal_id}/{id}/t{t}"), v)?);
                }
                classes.push(ClassEntry {
                    name: format!("Item {k} of category {c}"),
                    id,
                    category_id: spec.category_id(c),
                    nutrition,
                    template_feature_ids,
                });
            }
        }
        Ok(MealManifest {
            meal_id,
            categories,
            classes,
        })
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let v: f64 = self.rng.random_range(lo..=hi);
        (v * 10.0).round() / 10.0
    }

    fn plate_regions(&self, count: usize) -> Vec<Region> {
        if count == 0 {
            return Vec::new();
        }
        let cols = (count as f64).sqrt().ceil() as u32;
        let rows = (count as u32).div_ceil(cols);
        let cell_w = self.spec.image_width / cols;
        let cell_h = self.spec.image_height / rows;
        let side = (cell_w.min(cell_h) * 9 / 10).max(1);
        (0..count as u32)
            .map(|i| {
                let (cx, cy) = (i % cols, i / cols);
                Region {
                    x: cx * cell_w + (cell_w - side) / 2,
                    y: cy * cell_h + (cell_h - side) / 2,
                    width: side,
                    height: side,
                }
            })
            .collect()
    }

    /// Picks the classes on one plate, avoiding classes already on the tray.
    fn plate_classes(&mut self, used: &mut BTreeSet<(usize, usize)>) -> Option<(Vec<(usize, usize)>, bool)> {
        let spec = self.spec;
        let free = |c: usize, used: &BTreeSet<(usize, usize)>| -> Vec<(usize, usize)> {
            (0..spec.classes_per_category)
                .map(|k| (c, k))
                .filter(|ck| !used.contains(ck))
                .collect()
        };
        let want_mixed = self.rng.random_bool(spec.mixed_fraction);
        if want_mixed {
            let eligible: Vec<usize> = spec
                .trigger_categories
                .iter()
                .copied()
                .filter(|&c| free(c, used).len() >= spec.mixed_size)
                .collect();
            if !eligible.is_empty() {
                let c = eligible[self.rng.random_range(0..eligible.len())];
                let mut pool = free(c, used);
                let mut members = Vec::with_capacity(spec.mixed_size);
                for _ in 0..spec.mixed_size {
                    members.push(pool.swap_remove(self.rng.random_range(0..pool.len())));
                }
                members.sort_unstable();
                used.extend(members.iter().copied());
                return Some((members, true));
            }
        }
        let pool: Vec<(usize, usize)> = (0..spec.category_count).flat_map(|c| free(c, used)).collect();
        if pool.is_empty() {
            return None;
        }
        let pick = pool[self.rng.random_range(0..pool.len())];
        used.insert(pick);
        Some((vec![pick], false))
    }

    fn tray(&mut self, t: usize, meal: usize, model: &MealModel, plates: &mut Vec<PlateInfo>) -> Result<TrayFile> {
        let spec = self.spec;
        let photo_id = format!("tray{t:04}");
        let count = self.rng.random_range(spec.plates_min..=spec.plates_max);
        let mut used = BTreeSet::new();
        let mut compositions = Vec::new();
        for _ in 0..count {
            match self.plate_classes(&mut used) {
                Some(p) => compositions.push(p),
                None => break,
            }
        }
        let regions_geo = self.plate_regions(compositions.len());
        let mut regions = Vec::with_capacity(compositions.len());
        let mut truth = BTreeSet::new();
        for (i, ((members, mixed), region)) in compositions.into_iter().zip(regions_geo).enumerate() {
            let member_centers: Vec<&Vec<f64>> = members.iter().map(|&(c, k)| &model.centers[c][k]).collect();
            let plate_center = centroid(&member_centers);
            let v = self.noisy(&plate_center);
            let feature_id = self.add_feature(format!("{photo_id}/r{i}"), v)?;
            let windows = generate_windows(&region, spec.window_fraction, spec.stride_fraction)?;
            if mixed && windows.len() < members.len() {
                return Err(Error::InvalidSpec(format!(
                    "{} windows per plate cannot show {} mixed items",
                    windows.len(),
                    members.len()
                )));
            }
            let mut sub_windows = Vec::with_capacity(windows.len());
            for (j, w) in windows.iter().enumerate() {
                let v = self.noisy(member_centers[j % member_centers.len()]);
                sub_windows.push(WindowEntry {
                    x: w.x,
                    y: w.y,
                    width: w.width,
                    height: w.height,
                    feature_id: self.add_feature(format!("{photo_id}/r{i}/w{j}"), v)?,
                });
            }
            regions.push(RegionEntry {
                x: region.x,
                y: region.y,
                width: region.width,
                height: region.height,
                feature_id,
                sub_windows: Some(sub_windows),
            });
            let classes: Vec<ClassId> = members.iter().map(|&(c, k)| spec.class_id(meal, c, k)).collect();
            truth.extend(classes.iter().cloned());
            plates.push(PlateInfo {
                photo_id: photo_id.clone(),
                region_index: i,
                classes,
                mixed,
            });
        }
        Ok(TrayFile {
            photo_id,
            meal_id: format!("meal{meal}"),
            regions,
            ground_truth: Some(truth.into_iter().collect()),
        })
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn centroid(points: &[&Vec<f64>]) -> Vec<f64> {
    let n = points.len() as f64;
    let mut out = vec![0.0; points[0].len()];
    for p in points {
        for (o, v) in out.iter_mut().zip(p.iter()) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// Generates meals, features and trays. Identical specs give identical output.
pub fn generate_synthetic_dataset(spec: &SyntheticMenuSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut gen = Generator {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        store: FeatureStore::new(spec.dim),
    };
    let mut models = Vec::with_capacity(spec.meal_count);
    let mut manifests = Vec::with_capacity(spec.meal_count);
    for m in 0..spec.meal_count {
        let model = gen.place_centers()?;
        manifests.push(gen.manifest(m, &model)?);
        models.push(model);
    }
    let mut plates = Vec::new();
    let mut trays = Vec::with_capacity(spec.tray_count);
    for t in 0..spec.tray_count {
        let meal = t % spec.meal_count;
        trays.push(gen.tray(t, meal, &models[meal], &mut plates)?);
    }
    Ok(SyntheticDataset {
        manifests,
        store: gen.store,
        trays,
        plates,
    })
}
