use std::path::PathBuf;

use foodtray::ingestion::{generate_synthetic_dataset, SyntheticMenuSpec};

use crate::config::Config;
use crate::error::{CliError, CliResult};

const SECTION: &str = "generate";

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    category_count: Option<usize>,
    #[arg(long)]
    classes_per_category: Option<usize>,
    /// Comma-separated category indices that trigger fine-grained recognition.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    trigger_categories: Option<Vec<usize>>,
    #[arg(long)]
    dim: Option<usize>,
    /// Minimum distance between class centers.
    #[arg(long)]
    separation: Option<f64>,
    /// Expected norm of the noise on every feature.
    #[arg(long)]
    sigma: Option<f64>,
    /// Category anchor length relative to the separation.
    #[arg(long)]
    category_scale: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    meal_count: Option<usize>,
    #[arg(long)]
    templates_per_class: Option<usize>,
    #[arg(long)]
    tray_count: Option<usize>,
    #[arg(long)]
    plates_min: Option<usize>,
    #[arg(long)]
    plates_max: Option<usize>,
    #[arg(long)]
    mixed_fraction: Option<f64>,
    #[arg(long)]
    mixed_size: Option<usize>,
    #[arg(long)]
    window_fraction: Option<f64>,
    #[arg(long)]
    stride_fraction: Option<f64>,
    #[arg(long)]
    image_width: Option<u32>,
    #[arg(long)]
    image_height: Option<u32>,
    /// Output directory; created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
}

macro_rules! overlay {
    ($spec:ident, $args:ident, $config:ident, [$($field:ident),* $(,)?]) => {
        $(
            let key = stringify!($field).replace('_', "-");
            if let Some(v) = $config.pick(SECTION, &key, $args.$field)? {
                $spec.$field = v;
            }
        )*
    };
}

pub fn run(args: Args, config: &Config) -> CliResult<()> {
    let out: PathBuf = config
        .pick(SECTION, "out", args.out)?
        .ok_or_else(|| CliError::usage("--out is required"))?;
    let mut spec = SyntheticMenuSpec::default();
    overlay!(spec, args, config, [
        category_count,
        classes_per_category,
        trigger_categories,
        dim,
        separation,
        sigma,
        category_scale,
        seed,
        meal_count,
        templates_per_class,
        tray_count,
        plates_min,
        plates_max,
        mixed_fraction,
        mixed_size,
        window_fraction,
        stride_fraction,
        image_width,
        image_height,
    ]);
    let dataset = generate_synthetic_dataset(&spec)?;
    dataset.write_dir(&out)?;
    Ok(())
}
