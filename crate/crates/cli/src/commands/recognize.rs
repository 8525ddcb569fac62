use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use foodtray::evaluation::tray_nutrition;
use foodtray::ingestion::StoreWindowProvider;
use foodtray::menu::{MealCatalog, NutritionFacts};
use foodtray::recognizer::{
    recognize_batch, Method, Recognizer, RecognizerConfig, TrayObservation, TrayResult,
    DEFAULT_STRIDE_FRACTION, DEFAULT_WINDOW_FRACTION,
};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::inputs;

const SECTION: &str = "recognize";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Single,
    Multi,
    Hierarchical,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Meal manifest (JSON); repeat for several meals.
    #[arg(long)]
    meal: Vec<PathBuf>,
    /// Feature store (TSV).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Tray files, or directories of them.
    #[arg(long, num_args = 1..)]
    trays: Vec<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Similarity threshold; required by `--method multi`.
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Window side as a fraction of the region's shorter side.
    #[arg(long)]
    window_fraction: Option<f64>,
    /// Window step as a fraction of the region's shorter side.
    #[arg(long)]
    stride_fraction: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct PredictionLine<'a> {
    #[serde(flatten)]
    result: &'a TrayResult,
    nutrition: NutritionFacts,
}

pub fn run(args: Args, config: &Config) -> CliResult<()> {
    let meals = config.pick_list(SECTION, "meal", args.meal)?;
    let features: PathBuf = config
        .pick(SECTION, "features", args.features)?
        .ok_or_else(|| CliError::usage("--features is required"))?;
    let trays = config.pick_list(SECTION, "trays", args.trays)?;
    let method = config
        .pick(SECTION, "method", args.method)?
        .ok_or_else(|| CliError::usage("--method is required"))?;
    let theta = config.pick(SECTION, "theta", args.theta)?;
    let method = match method {
        MethodArg::Single => Method::Single,
        MethodArg::Hierarchical => Method::Hierarchical,
        MethodArg::Multi => Method::Multi {
            theta: theta.ok_or_else(|| CliError::usage("--method multi requires --theta"))?,
        },
    };
    let window_fraction = config
        .pick(SECTION, "window-fraction", args.window_fraction)?
        .unwrap_or(DEFAULT_WINDOW_FRACTION);
    let stride_fraction = config
        .pick(SECTION, "stride-fraction", args.stride_fraction)?
        .unwrap_or(DEFAULT_STRIDE_FRACTION);
    let out: Option<PathBuf> = config.pick(SECTION, "out", args.out)?;

    let store = inputs::load_store(&features)?;
    let catalog = inputs::load_manifests(&meals)?
        .iter()
        .try_fold(MealCatalog::new(), |mut c, m| {
            c.insert(m.resolve(&store)?)?;
            Ok::<_, foodtray::Error>(c)
        })?;
    let photos = inputs::load_trays(&trays)?
        .iter()
        .map(|t| t.resolve(&store).map_err(|e| CliError::from(e).context(&t.photo_id)))
        .collect::<CliResult<Vec<TrayObservation>>>()?;

    let recognizer_config = RecognizerConfig {
        window_fractions: vec![window_fraction],
        stride_fraction,
        fine_grained: true,
    };
    let provider = StoreWindowProvider::new(&store);
    let recognizer = Recognizer::new(&recognizer_config)?.with_provider(&provider);
    let results = recognize_batch(&photos, &catalog, method, &recognizer)?;

    let mut sink = inputs::output(out.as_deref())?;
    for result in &results {
        let line = PredictionLine {
            result,
            nutrition: tray_nutrition(&result.predicted_items, catalog.get(&result.meal_id)?)?,
        };
        serde_json::to_writer(&mut sink, &line)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}
