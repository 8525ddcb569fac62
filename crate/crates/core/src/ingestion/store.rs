use std::io::{BufRead, BufReader, Read, Write};

use indexmap::IndexMap;

use crate::error::{Error, Result};

/// Raw (un-normalized) feature vectors keyed by id, all of one dimensionality.
///
/// Text format: a header line `D=<int>` followed by one record per line,
/// `id<TAB>v1,v2,...,vD`. Blank lines are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    dim: usize,
    vectors: IndexMap<String, Vec<f64>>,
}

impl FeatureStore {
    pub fn new(dim: usize) -> Self {
        FeatureStore {
            dim,
            vectors: IndexMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vectors.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn insert(&mut self, id: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let id = id.into();
        if id.is_empty() || id.contains(['\t', '\n', '\r']) {
            return Err(Error::Validation(format!("invalid feature id {id:?}")));
        }
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if self.vectors.contains_key(&id) {
            return Err(Error::Validation(format!("duplicate feature id `{id}`")));
        }
        self.vectors.insert(id, values);
        Ok(())
    }

    pub fn from_reader<R: Read>(source: R) -> Result<Self> {
        let reader = BufReader::new(source);
        let mut store: Option<FeatureStore> = None;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let Some(store) = store.as_mut() else {
                store = Some(FeatureStore::new(parse_header(line, lineno)?));
                continue;
            };
            let (id, values) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse(format!("line {lineno}: expected `id<TAB>values`")))?;
            let values = values
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|e| {
                        Error::Parse(format!("line {lineno}: bad value {v:?}: {e}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            store.insert(id, values).map_err(|e| match e {
                Error::DimensionMismatch { .. } => e,
                other => Error::Parse(format!("line {lineno}: {other}")),
            })?;
        }
        store.ok_or_else(|| Error::Parse("missing `D=<int>` header".into()))
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "D={}", self.dim)?;
        let mut line = String::new();
        for (id, values) in &self.vectors {
            line.clear();
            line.push_str(id);
            line.push('\t');
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                // Display for f64 is the shortest representation that round-trips.
                line.push_str(&v.to_string());
            }
            line.push('\n');
            writer.write_all(line.as_bytes())?;
        }
        writer.flush()?;
        Ok(())
    }
}

fn parse_header(line: &str, lineno: usize) -> Result<usize> {
    let dim = line
        .trim()
        .strip_prefix("D=")
        .and_then(|d| d.parse::<usize>().ok())
        .ok_or_else(|| Error::Parse(format!("line {lineno}: expected `D=<int>` header")))?;
    if dim == 0 {
        return Err(Error::Parse("dimensionality must be positive".into()));
    }
    Ok(dim)
}

/// Parses a feature store.
pub fn load_feature_store<R: Read>(source: R) -> Result<FeatureStore> {
    FeatureStore::from_reader(source)
}
