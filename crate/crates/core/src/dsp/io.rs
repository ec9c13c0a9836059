use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::features::{feature_column_names, FeatureVector, FEATURE_DIM};
use super::DspError;
use crate::jsonl::{read_jsonl, write_jsonl};

/// One `{"clip_id", "features"}` object per line.
pub fn write_features_jsonl(path: impl AsRef<Path>, vectors: &[FeatureVector]) -> Result<(), DspError> {
    Ok(write_jsonl(path, vectors)?)
}

pub fn read_features_jsonl(path: impl AsRef<Path>) -> Result<Vec<FeatureVector>, DspError> {
    let vectors: Vec<FeatureVector> = read_jsonl(path)?;
    for (i, v) in vectors.iter().enumerate() {
        if v.values.len() != FEATURE_DIM {
            return Err(DspError::Parse {
                line: i + 1,
                message: format!("clip {} has {} features, expected {FEATURE_DIM}", v.clip_id, v.values.len()),
            });
        }
        if v.values.iter().any(|x| !x.is_finite()) {
            return Err(DspError::Parse { line: i + 1, message: format!("clip {} has non-finite features", v.clip_id) });
        }
    }
    Ok(vectors)
}

/// CSV with a 73-column header: `clip_id` followed by the named statistics.
pub fn write_features_csv(path: impl AsRef<Path>, vectors: &[FeatureVector]) -> Result<(), DspError> {
    let path = path.as_ref();
    let io_err = |source| DspError::Io { path: path.display().to_string(), source };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut header = vec!["clip_id".to_string()];
    header.extend(feature_column_names());
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for v in vectors {
        let id = if v.clip_id.contains([',', '"', '\n']) {
            format!("\"{}\"", v.clip_id.replace('"', "\"\""))
        } else {
            v.clip_id.clone()
        };
        let cells: Vec<String> = v.values.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{id},{}", cells.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
