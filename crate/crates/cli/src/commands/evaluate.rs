use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use foodtray::evaluation::{evaluate, export_scatter, EvalSample};
use foodtray::menu::{Catalog, ClassId, Menu};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::inputs;

const SECTION: &str = "evaluate";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// JSON-lines predictions written by `recognize`.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Tray files with ground truth, or directories of them.
    #[arg(long, num_args = 1..)]
    trays: Vec<PathBuf>,
    /// Meal manifest (JSON); repeat for several meals.
    #[arg(long)]
    meal: Vec<PathBuf>,
    /// Also write per-photo ground-truth and predicted energy as CSV.
    #[arg(long)]
    scatter: Option<PathBuf>,
    /// Report file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct PredictionRecord {
    photo_id: String,
    meal_id: Option<String>,
    predicted_items: BTreeSet<ClassId>,
}

fn read_predictions(path: &Path) -> CliResult<BTreeMap<String, PredictionRecord>> {
    let text = inputs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(line)
            .map_err(|e| CliError::usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if out.contains_key(&record.photo_id) {
            return Err(CliError::usage(format!(
                "{}: duplicate prediction for photo `{}`",
                path.display(),
                record.photo_id
            )));
        }
        out.insert(record.photo_id.clone(), record);
    }
    Ok(out)
}

pub fn run(args: Args, config: &Config) -> CliResult<()> {
    let predictions_path: PathBuf = config
        .pick(SECTION, "predictions", args.predictions)?
        .ok_or_else(|| CliError::usage("--predictions is required"))?;
    let trays = config.pick_list(SECTION, "trays", args.trays)?;
    let meals = config.pick_list(SECTION, "meal", args.meal)?;
    let scatter: Option<PathBuf> = config.pick(SECTION, "scatter", args.scatter)?;
    let out: Option<PathBuf> = config.pick(SECTION, "out", args.out)?;

    let mut catalog = Catalog::<Menu>::new();
    for m in inputs::load_manifests(&meals)? {
        catalog.insert(m.menu()?)?;
    }
    let mut predictions = read_predictions(&predictions_path)?;
    let mut samples = Vec::new();
    for tray in inputs::load_trays(&trays)? {
        let ground_truth = tray
            .ground_truth_set()
            .ok_or_else(|| CliError::from(foodtray::Error::NoGroundTruth(tray.photo_id.clone())))?;
        let record = predictions.remove(&tray.photo_id).ok_or_else(|| {
            CliError::usage(format!("no prediction for photo `{}`", tray.photo_id))
        })?;
        if let Some(meal_id) = &record.meal_id {
            if *meal_id != tray.meal_id {
                return Err(CliError::usage(format!(
                    "photo `{}`: prediction is for meal `{meal_id}`, tray is from `{}`",
                    tray.photo_id, tray.meal_id
                )));
            }
        }
        samples.push(EvalSample {
            photo_id: tray.photo_id,
            meal_id: tray.meal_id,
            predicted: record.predicted_items,
            ground_truth,
        });
    }
    if let Some(extra) = predictions.keys().next() {
        return Err(CliError::usage(format!("prediction for unknown photo `{extra}`")));
    }

    let report = evaluate(&samples, &catalog)?;
    if let Some(path) = scatter {
        export_scatter(&samples, &catalog, inputs::output(Some(&path))?)?;
    }
    inputs::write_json(out.as_deref(), &report)
}
