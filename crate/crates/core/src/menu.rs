//! Menu data model: categories, food classes with nutrition facts, and the
//! per-meal template set searched by the recognizer.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::FeatureVector;
use crate::ingestion::FeatureStore;

/// Identifier of a menu item. Ordering is lexicographic on the raw string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(String);

impl ClassId {
    pub fn new(id: impl Into<String>) -> Self {
        ClassId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ClassId {
    fn from(s: &str) -> Self {
        ClassId(s.to_owned())
    }
}

impl From<String> for ClassId {
    fn from(s: String) -> Self {
        ClassId(s)
    }
}

impl Borrow<str> for ClassId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Energy and the three macronutrients for one serving.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NutritionFacts {
    #[serde(rename = "energy_kcal")]
    pub energy: f64,
    #[serde(rename = "protein_g")]
    pub protein: f64,
    #[serde(rename = "lipid_g")]
    pub lipid: f64,
    #[serde(rename = "carbohydrate_g")]
    pub carbohydrate: f64,
}

impl NutritionFacts {
    pub const ZERO: NutritionFacts = NutritionFacts {
        energy: 0.0,
        protein: 0.0,
        lipid: 0.0,
        carbohydrate: 0.0,
    };

    pub fn new(energy: f64, protein: f64, lipid: f64, carbohydrate: f64) -> Self {
        NutritionFacts {
            energy,
            protein,
            lipid,
            carbohydrate,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.energy, self.protein, self.lipid, self.carbohydrate]
    }

    fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in Nutrient::ALL.iter().zip(self.as_array()) {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("{} must be finite and non-negative, got {v}", name.key()));
            }
        }
        Ok(())
    }
}

impl Add for NutritionFacts {
    type Output = NutritionFacts;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for NutritionFacts {
    fn add_assign(&mut self, rhs: Self) {
        self.energy += rhs.energy;
        self.protein += rhs.protein;
        self.lipid += rhs.lipid;
        self.carbohydrate += rhs.carbohydrate;
    }
}

/// Nutrition total for a whole tray, one serving per item.
pub type TrayNutrition = NutritionFacts;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nutrient {
    Energy,
    Protein,
    Lipid,
    Carbohydrate,
}

impl Nutrient {
    pub const ALL: [Nutrient; 4] = [
        Nutrient::Energy,
        Nutrient::Protein,
        Nutrient::Lipid,
        Nutrient::Carbohydrate,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Nutrient::Energy => "energy_kcal",
            Nutrient::Protein => "protein_g",
            Nutrient::Lipid => "lipid_g",
            Nutrient::Carbohydrate => "carbohydrate_g",
        }
    }

    pub fn of(self, facts: &NutritionFacts) -> f64 {
        match self {
            Nutrient::Energy => facts.energy,
            Nutrient::Protein => facts.protein,
            Nutrient::Lipid => facts.lipid,
            Nutrient::Carbohydrate => facts.carbohydrate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: String,
    pub name: String,
    /// Regions whose coarse class falls in this category get fine-grained
    /// sliding-window recognition.
    #[serde(default)]
    pub fine_grained_trigger: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoodClass {
    pub id: ClassId,
    pub name: String,
    pub category_id: String,
    pub nutrition: NutritionFacts,
}

/// Categories and classes of one meal sitting, without template features.
#[derive(Debug, Clone, PartialEq)]
pub struct Menu {
    meal_id: String,
    categories: BTreeMap<String, Category>,
    classes: BTreeMap<ClassId, FoodClass>,
}

impl Menu {
    pub fn new(
        meal_id: impl Into<String>,
        categories: impl IntoIterator<Item = Category>,
        classes: impl IntoIterator<Item = FoodClass>,
    ) -> Result<Self> {
        let meal_id = meal_id.into();
        let mut cats = BTreeMap::new();
        for cat in categories {
            if cats.contains_key(&cat.id) {
                return Err(Error::Validation(format!("duplicate category id `{}`", cat.id)));
            }
            cats.insert(cat.id.clone(), cat);
        }
        let mut by_id = BTreeMap::new();
        for class in classes {
            if by_id.contains_key(&class.id) {
                return Err(Error::Validation(format!("duplicate class id `{}`", class.id)));
            }
            if !cats.contains_key(&class.category_id) {
                return Err(Error::Validation(format!(
                    "class `{}` references undeclared category `{}`",
                    class.id, class.category_id
                )));
            }
            class
                .nutrition
                .validate()
                .map_err(|e| Error::Validation(format!("class `{}`: {e}", class.id)))?;
            by_id.insert(class.id.clone(), class);
        }
        Ok(Menu {
            meal_id,
            categories: cats,
            classes: by_id,
        })
    }

    pub fn meal_id(&self) -> &str {
        &self.meal_id
    }

    pub fn categories(&self) -> impl Iterator<Item = &Category> {
        self.categories.values()
    }

    pub fn classes(&self) -> impl Iterator<Item = &FoodClass> {
        self.classes.values()
    }

    pub fn class(&self, id: &ClassId) -> Result<&FoodClass> {
        self.classes
            .get(id)
            .ok_or_else(|| Error::UnknownClass(id.to_string()))
    }

    pub fn contains(&self, id: &ClassId) -> bool {
        self.classes.contains_key(id)
    }

    pub fn category(&self, id: &str) -> Option<&Category> {
        self.categories.get(id)
    }

    /// Category of a class.
    pub fn category_of(&self, id: &ClassId) -> Result<&Category> {
        let class = self.class(id)?;
        Ok(&self.categories[&class.category_id])
    }

    pub fn nutrition_of(&self, id: &ClassId) -> Result<NutritionFacts> {
        Ok(self.class(id)?.nutrition)
    }

    /// Sum of one serving of every item in `items`.
    pub fn tray_nutrition<'a, I>(&self, items: I) -> Result<TrayNutrition>
    where
        I: IntoIterator<Item = &'a ClassId>,
    {
        items
            .into_iter()
            .try_fold(NutritionFacts::ZERO, |acc, id| Ok(acc + self.nutrition_of(id)?))
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    fn disable_triggers(&mut self) {
        for cat in self.categories.values_mut() {
            cat.fine_grained_trigger = false;
        }
    }
}

/// Template vectors of one class together with the store ids they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTemplates {
    pub feature_ids: Vec<String>,
    pub vectors: Vec<FeatureVector>,
}

/// Everything the recognizer needs for one meal: the menu plus, for each
/// class, its 1..K normalized template vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MealTemplateSet {
    menu: Menu,
    dim: usize,
    templates: BTreeMap<ClassId, ClassTemplates>,
}

impl MealTemplateSet {
    pub fn new(menu: Menu, dim: usize, templates: BTreeMap<ClassId, ClassTemplates>) -> Result<Self> {
        for class in menu.classes() {
            if !templates.contains_key(&class.id) {
                return Err(Error::Validation(format!("class `{}` has no templates", class.id)));
            }
        }
        for (id, t) in &templates {
            if !menu.contains(id) {
                return Err(Error::Validation(format!(
                    "templates given for undeclared class `{id}`"
                )));
            }
            if t.vectors.is_empty() {
                return Err(Error::Validation(format!("class `{id}` has an empty template list")));
            }
            if t.vectors.len() != t.feature_ids.len() {
                return Err(Error::Validation(format!(
                    "class `{id}`: {} feature ids for {} vectors",
                    t.feature_ids.len(),
                    t.vectors.len()
                )));
            }
            for (fid, v) in t.feature_ids.iter().zip(&t.vectors) {
                if v.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: v.dim(),
                    });
                }
                if !v.is_unit() {
                    return Err(Error::Validation(format!(
                        "template `{fid}` of class `{id}` is not unit norm (norm {})",
                        v.norm()
                    )));
                }
            }
        }
        Ok(MealTemplateSet {
            menu,
            dim,
            templates,
        })
    }

    pub fn menu(&self) -> &Menu {
        &self.menu
    }

    pub fn meal_id(&self) -> &str {
        self.menu.meal_id()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn templates_of(&self, id: &ClassId) -> Option<&[FeatureVector]> {
        self.templates.get(id).map(|t| t.vectors.as_slice())
    }

    /// Classes in ascending id order with their template vectors.
    pub fn iter_templates(&self) -> impl Iterator<Item = (&ClassId, &[FeatureVector])> {
        self.templates.iter().map(|(k, t)| (k, t.vectors.as_slice()))
    }

    pub fn class_ids(&self) -> impl Iterator<Item = &ClassId> {
        self.templates.keys()
    }

    /// Total number of template vectors across all classes.
    pub fn template_count(&self) -> usize {
        self.templates.values().map(|t| t.vectors.len()).sum()
    }

    pub fn nutrition_of(&self, id: &ClassId) -> Result<NutritionFacts> {
        self.menu.nutrition_of(id)
    }

    /// Same meal with every category's fine-grained trigger switched off.
    pub fn without_triggers(&self) -> Self {
        let mut copy = self.clone();
        copy.menu.disable_triggers();
        copy
    }

    pub fn to_manifest(&self) -> MealManifest {
        MealManifest {
            meal_id: self.menu.meal_id.clone(),
            categories: self.menu.categories.values().cloned().collect(),
            classes: self
                .menu
                .classes
                .values()
                .map(|c| ClassEntry {
                    id: c.id.clone(),
                    name: c.name.clone(),
                    category_id: c.category_id.clone(),
                    nutrition: c.nutrition,
                    template_feature_ids: self.templates[&c.id].feature_ids.clone(),
                })
                .collect(),
        }
    }
}

/// Anything that carries a [`Menu`]; lets evaluation run against either bare
/// menus or full template sets.
pub trait HasMenu {
    fn menu(&self) -> &Menu;
}

impl HasMenu for Menu {
    fn menu(&self) -> &Menu {
        self
    }
}

impl HasMenu for MealTemplateSet {
    fn menu(&self) -> &Menu {
        &self.menu
    }
}

/// Meals keyed by meal id.
#[derive(Debug, Clone)]
pub struct Catalog<T> {
    meals: BTreeMap<String, T>,
}

impl<T> Default for Catalog<T> {
    fn default() -> Self {
        Catalog {
            meals: BTreeMap::new(),
        }
    }
}

impl<T: HasMenu> Catalog<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, meal: T) -> Result<()> {
        let id = meal.menu().meal_id().to_owned();
        if self.meals.contains_key(&id) {
            return Err(Error::Validation(format!("duplicate meal id `{id}`")));
        }
        self.meals.insert(id, meal);
        Ok(())
    }

    pub fn get(&self, meal_id: &str) -> Result<&T> {
        self.meals
            .get(meal_id)
            .ok_or_else(|| Error::UnknownMeal(meal_id.to_owned()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.meals.values()
    }

    pub fn len(&self) -> usize {
        self.meals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meals.is_empty()
    }
}

impl<T: HasMenu> FromIterator<T> for Catalog<T> {
    /// Later entries with a repeated meal id replace earlier ones.
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let meals = iter
            .into_iter()
            .map(|m| (m.menu().meal_id().to_owned(), m))
            .collect();
        Catalog { meals }
    }
}

pub type MealCatalog = Catalog<MealTemplateSet>;

/// On-disk form of a meal, as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MealManifest {
    pub meal_id: String,
    pub categories: Vec<Category>,
    pub classes: Vec<ClassEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub id: ClassId,
    pub name: String,
    pub category_id: String,
    pub nutrition: NutritionFacts,
    pub template_feature_ids: Vec<String>,
}

impl MealManifest {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, self)?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    /// Validated menu, ignoring template features.
    pub fn menu(&self) -> Result<Menu> {
        Menu::new(
            self.meal_id.clone(),
            self.categories.iter().cloned(),
            self.classes.iter().map(|c| FoodClass {
                id: c.id.clone(),
                name: c.name.clone(),
                category_id: c.category_id.clone(),
                nutrition: c.nutrition,
            }),
        )
    }

    /// Resolves template feature ids against `store` and validates the result.
    pub fn resolve(&self, store: &FeatureStore) -> Result<MealTemplateSet> {
        let menu = self.menu()?;
        let mut templates = BTreeMap::new();
        for class in &self.classes {
            let mut seen = BTreeSet::new();
            let mut vectors = Vec::with_capacity(class.template_feature_ids.len());
            for fid in &class.template_feature_ids {
                if !seen.insert(fid) {
                    return Err(Error::Validation(format!(
                        "class `{}` lists template `{fid}` twice",
                        class.id
                    )));
                }
                let raw = store.get(fid).ok_or_else(|| {
                    Error::Validation(format!(
                        "class `{}` references unknown feature id `{fid}`",
                        class.id
                    ))
                })?;
                let v = FeatureVector::normalize(raw, store.dim()).map_err(|e| {
                    Error::Validation(format!("template `{fid}` of class `{}`: {e}", class.id))
                })?;
                vectors.push(v);
            }
            templates.insert(
                class.id.clone(),
                ClassTemplates {
                    feature_ids: class.template_feature_ids.clone(),
                    vectors,
                },
            );
        }
        MealTemplateSet::new(menu, store.dim(), templates)
    }
}

/// Parses and validates a meal manifest, resolving its template features.
pub fn load_meal_manifest<R: Read>(source: R, store: &FeatureStore) -> Result<MealTemplateSet> {
    MealManifest::from_reader(source)?.resolve(store)
}

/// Per-serving nutrition of a class.
pub fn nutrition_of(id: &ClassId, meal: &MealTemplateSet) -> Result<NutritionFacts> {
    meal.nutrition_of(id)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Single non-trigger category `cat`; each class gets the given raw templates.
    pub(crate) fn toy_meal(classes: &[(&str, &[&[f64]])]) -> MealTemplateSet {
        let dim = classes
            .first()
            .and_then(|(_, t)| t.first())
            .map_or(2, |v| v.len());
        let menu = Menu::new(
            "toy",
            [Category {
                id: "cat".into(),
                name: "cat".into(),
                fine_grained_trigger: false,
            }],
            classes.iter().map(|(id, _)| FoodClass {
                id: (*id).into(),
                name: (*id).into(),
                category_id: "cat".into(),
                nutrition: NutritionFacts::ZERO,
            }),
        )
        .unwrap();
        let templates = classes
            .iter()
            .map(|(id, ts)| {
                (
                    ClassId::from(*id),
                    ClassTemplates {
                        feature_ids: (0..ts.len()).map(|i| format!("{id}_{i}")).collect(),
                        vectors: ts.iter().map(|t| FeatureVector::from_raw(t).unwrap()).collect(),
                    },
                )
            })
            .collect();
        MealTemplateSet::new(menu, dim, templates).unwrap()
    }

    const SALAD_MANIFEST: &str = r#"{
      "meal_id": "lunch-0801",
      "categories": [
        {"id": "salad", "name": "Salad", "fine_grained_trigger": true},
        {"id": "soup", "name": "Soup stock", "fine_grained_trigger": false}
      ],
      "classes": [
        {"id": "cabbage", "name": "Cabbage", "category_id": "salad",
         "nutrition": {"energy_kcal": 5, "protein_g": 0.3, "lipid_g": 0.0, "carbohydrate_g": 1.2},
         "template_feature_ids": ["f1", "f2", "f3"]},
        {"id": "tomato", "name": "Tomato", "category_id": "salad",
         "nutrition": {"energy_kcal": 100, "protein_g": 0.5, "lipid_g": 0.1, "carbohydrate_g": 3.0},
         "template_feature_ids": ["f4", "f5", "f6"]},
        {"id": "miso_soup", "name": "Miso soup", "category_id": "soup",
         "nutrition": {"energy_kcal": 40, "protein_g": 2.5, "lipid_g": 1.2, "carbohydrate_g": 4.0},
         "template_feature_ids": ["f7", "f8", "f9"]}
      ]
    }"#;

    fn store9() -> FeatureStore {
        let mut text = String::from("D=3\n");
        for i in 1..=9 {
            text.push_str(&format!("f{i}\t{},{},{}\n", i, 10 - i, (i * i) % 7));
        }
        FeatureStore::from_reader(text.as_bytes()).unwrap()
    }

    #[test]
    fn loads_manifest_and_counts_templates() {
        let meal = load_meal_manifest(SALAD_MANIFEST.as_bytes(), &store9()).unwrap();
        assert_eq!(meal.template_count(), 9);
        assert_eq!(meal.menu().len(), 3);
        assert_eq!(meal.menu().categories().count(), 2);
        let cat = meal.menu().category_of(&"tomato".into()).unwrap();
        assert_eq!(cat.id, "salad");
        assert!(cat.fine_grained_trigger);
        for (_, vs) in meal.iter_templates() {
            assert!(vs.iter().all(FeatureVector::is_unit));
        }
    }

    #[test]
    fn nutrition_lookup() {
        let meal = load_meal_manifest(SALAD_MANIFEST.as_bytes(), &store9()).unwrap();
        let n = nutrition_of(&"tomato".into(), &meal).unwrap();
        assert_eq!(n.energy, 100.0);
        assert!(matches!(
            nutrition_of(&"xyz".into(), &meal),
            Err(Error::UnknownClass(c)) if c == "xyz"
        ));
    }

    #[test]
    fn dangling_category_is_rejected() {
        let bad = SALAD_MANIFEST.replace(
            r#""id": "tomato", "name": "Tomato", "category_id": "salad""#,
            r#""id": "tomato", "name": "Tomato", "category_id": "salid""#,
        );
        let err = load_meal_manifest(bad.as_bytes(), &store9()).unwrap_err();
        assert!(matches!(err, Error::Validation(m) if m.contains("salid")));
    }

    #[test]
    fn validation_failures() {
        let store = store9();
        let cases = [
            // empty template list
            SALAD_MANIFEST.replace(r#"["f7", "f8", "f9"]"#, "[]"),
            // unknown feature id
            SALAD_MANIFEST.replace(r#""f9""#, r#""f99""#),
            // duplicate class id
            SALAD_MANIFEST.replace(r#""id": "miso_soup""#, r#""id": "tomato""#),
            // negative nutrition
            SALAD_MANIFEST.replace(r#""energy_kcal": 40"#, r#""energy_kcal": -40"#),
        ];
        for (i, text) in cases.iter().enumerate() {
            let err = load_meal_manifest(text.as_bytes(), &store).unwrap_err();
            assert!(matches!(err, Error::Validation(_)), "case {i}: {err:?}");
        }
        let err = load_meal_manifest(&b"{\"meal_id\": 3"[..], &store).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn zero_template_is_rejected() {
        let store = FeatureStore::from_reader(
            "D=2\nf1\t0,0\nf2\t1,0\n".as_bytes(),
        )
        .unwrap();
        let text = r#"{"meal_id":"m","categories":[{"id":"c","name":"c"}],
          "classes":[{"id":"a","name":"a","category_id":"c",
          "nutrition":{"energy_kcal":1,"protein_g":1,"lipid_g":1,"carbohydrate_g":1},
          "template_feature_ids":["f1","f2"]}]}"#;
        let err = load_meal_manifest(text.as_bytes(), &store).unwrap_err();
        assert!(matches!(err, Error::Validation(m) if m.contains("zero")));
    }

    #[test]
    fn manifest_round_trip() {
        let store = store9();
        let meal = load_meal_manifest(SALAD_MANIFEST.as_bytes(), &store).unwrap();
        let mut buf = Vec::new();
        meal.to_manifest().write_to(&mut buf).unwrap();
        let again = load_meal_manifest(buf.as_slice(), &store).unwrap();
        assert_eq!(meal, again);
    }

    #[test]
    fn trigger_defaults_to_false() {
        let text = r#"{"meal_id":"m","categories":[{"id":"others","name":"Others"}],"classes":[]}"#;
        let menu = MealManifest::from_reader(text.as_bytes()).unwrap().menu().unwrap();
        assert!(!menu.category("others").unwrap().fine_grained_trigger);
    }

    #[test]
    fn tray_nutrition_sums_servings() {
        let meal = load_meal_manifest(SALAD_MANIFEST.as_bytes(), &store9()).unwrap();
        let items: BTreeSet<ClassId> = ["tomato".into(), "miso_soup".into()].into();
        let n = meal.menu().tray_nutrition(&items).unwrap();
        assert_eq!(n.energy, 140.0);
        assert_eq!(meal.menu().tray_nutrition(&BTreeSet::new()).unwrap(), NutritionFacts::ZERO);
    }
}
