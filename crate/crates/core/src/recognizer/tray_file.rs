use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Region, RegionObservation, TrayObservation};
use crate::error::{Error, Result};
use crate::feature::FeatureVector;
use crate::ingestion::FeatureStore;
use crate::menu::ClassId;

/// JSON form of a tray observation. Features are referenced by store id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrayFile {
    pub photo_id: String,
    pub meal_id: String,
    pub regions: Vec<RegionEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<ClassId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionEntry {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
    pub feature_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_windows: Option<Vec<WindowEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowEntry {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
    pub feature_id: String,
}

fn resolve_feature(store: &FeatureStore, id: &str, photo_id: &str) -> Result<FeatureVector> {
    let raw = store.get(id).ok_or_else(|| {
        Error::Validation(format!("photo `{photo_id}` references unknown feature id `{id}`"))
    })?;
    FeatureVector::normalize(raw, store.dim())
}

impl TrayFile {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer(&mut writer, self)?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    /// Ground truth as a set; duplicate ids collapse.
    pub fn ground_truth_set(&self) -> Option<BTreeSet<ClassId>> {
        self.ground_truth.as_ref().map(|gt| gt.iter().cloned().collect())
    }

    /// Looks up and normalizes every referenced feature.
    pub fn resolve(&self, store: &FeatureStore) -> Result<TrayObservation> {
        let mut regions = Vec::with_capacity(self.regions.len());
        for entry in &self.regions {
            let region = Region::new(entry.x, entry.y, entry.width, entry.height)?;
            let feature = resolve_feature(store, &entry.feature_id, &self.photo_id)?;
            let sub_windows = match &entry.sub_windows {
                None => None,
                Some(ws) => Some(
                    ws.iter()
                        .map(|w| {
                            let window = Region::new(w.x, w.y, w.width, w.height)?;
                            if !region.contains(&window) {
                                return Err(Error::Validation(format!(
                                    "photo `{}`: window {window} is not inside region {region}",
                                    self.photo_id
                                )));
                            }
                            Ok((window, resolve_feature(store, &w.feature_id, &self.photo_id)?))
                        })
                        .collect::<Result<Vec<_>>>()?,
                ),
            };
            regions.push(RegionObservation {
                region,
                feature,
                feature_id: Some(entry.feature_id.clone()),
                sub_windows,
            });
        }
        Ok(TrayObservation {
            photo_id: self.photo_id.clone(),
            meal_id: self.meal_id.clone(),
            regions,
            ground_truth: self.ground_truth_set(),
        })
    }
}

/// Parses a tray file and resolves its features.
pub fn load_tray<R: Read>(source: R, store: &FeatureStore) -> Result<TrayObservation> {
    TrayFile::from_reader(source)?.resolve(store)
}
