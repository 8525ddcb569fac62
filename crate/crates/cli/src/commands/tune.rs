use std::path::PathBuf;

use foodtray::menu::MealCatalog;
use foodtray::multiclass::{cross_validate, ThresholdGrid, DEFAULT_GRID_MAX, DEFAULT_GRID_MIN, DEFAULT_GRID_STEP};
use foodtray::recognizer::TrayObservation;

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::inputs;

const SECTION: &str = "tune-threshold";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Meal manifest (JSON); repeat for several meals.
    #[arg(long)]
    meal: Vec<PathBuf>,
    /// Feature store (TSV).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Tray files with ground truth, or directories of them.
    #[arg(long, num_args = 1..)]
    trays: Vec<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    grid_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    grid_max: Option<f64>,
    #[arg(long)]
    grid_step: Option<f64>,
    /// Number of folds; each tunes on one part and tests on the others.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args, config: &Config) -> CliResult<()> {
    let meals = config.pick_list(SECTION, "meal", args.meal)?;
    let features: PathBuf = config
        .pick(SECTION, "features", args.features)?
        .ok_or_else(|| CliError::usage("--features is required"))?;
    let trays = config.pick_list(SECTION, "trays", args.trays)?;
    let grid_min = config.pick(SECTION, "grid-min", args.grid_min)?.unwrap_or(DEFAULT_GRID_MIN);
    let grid_max = config.pick(SECTION, "grid-max", args.grid_max)?.unwrap_or(DEFAULT_GRID_MAX);
    let grid_step = config.pick(SECTION, "grid-step", args.grid_step)?.unwrap_or(DEFAULT_GRID_STEP);
    let folds = config.pick(SECTION, "folds", args.folds)?.unwrap_or(3);
    let seed = config.pick(SECTION, "seed", args.seed)?.unwrap_or(0);
    let out: Option<PathBuf> = config.pick(SECTION, "out", args.out)?;

    let grid = ThresholdGrid::range(grid_min, grid_max, grid_step)?;
    let store = inputs::load_store(&features)?;
    let mut catalog = MealCatalog::new();
    for m in inputs::load_manifests(&meals)? {
        catalog.insert(m.resolve(&store)?)?;
    }
    let photos = inputs::load_trays(&trays)?
        .iter()
        .map(|t| t.resolve(&store).map_err(|e| CliError::from(e).context(&t.photo_id)))
        .collect::<CliResult<Vec<TrayObservation>>>()?;
    let cv = cross_validate(&photos, &catalog, &grid, folds, seed)?;
    inputs::write_json(out.as_deref(), &cv)
}
