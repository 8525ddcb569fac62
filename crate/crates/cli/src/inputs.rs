use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use foodtray::ingestion::FeatureStore;
use foodtray::menu::MealManifest;
use foodtray::recognizer::TrayFile;

use crate::error::{CliError, CliResult};

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn with_path<T>(path: &Path, r: foodtray::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::from(e).context(path.display()))
}

pub fn load_store(path: &Path) -> CliResult<FeatureStore> {
    with_path(path, FeatureStore::from_reader(open(path)?))
}

pub fn load_manifests(paths: &[PathBuf]) -> CliResult<Vec<MealManifest>> {
    if paths.is_empty() {
        return Err(CliError::usage("at least one --meal manifest is required"));
    }
    paths
        .iter()
        .map(|p| with_path(p, MealManifest::from_reader(open(p)?)))
        .collect()
}

/// Expands directories to the `.json` files directly inside them, sorted by
/// name. Plain files are kept in the order given.
pub fn tray_paths(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    if paths.is_empty() {
        return Err(CliError::usage("at least one --trays file or directory is required"));
    }
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found = Vec::new();
            for entry in fs::read_dir(p).map_err(|e| CliError::io(p, e))? {
                let path = entry.map_err(|e| CliError::io(p, e))?.path();
                if path.is_file() && path.extension().is_some_and(|e| e == "json") {
                    found.push(path);
                }
            }
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub fn load_trays(paths: &[PathBuf]) -> CliResult<Vec<TrayFile>> {
    tray_paths(paths)?
        .iter()
        .map(|p| with_path(p, TrayFile::from_reader(open(p)?)))
        .collect()
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Buffered writer to `path`, or to standard output.
pub fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
