use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RegressionError;

/// Ground-truth affect for one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectLabel {
    pub clip_id: String,
    pub valence: f64,
    pub arousal: f64,
}

/// Normalizes a file name to a clip id by dropping a trailing `.wav`.
pub(crate) fn clip_id_from_filename(name: &str) -> String {
    let trimmed = name.trim();
    match trimmed.len().checked_sub(4) {
        Some(cut) if trimmed.is_char_boundary(cut) && trimmed[cut..].eq_ignore_ascii_case(".wav") => trimmed[..cut].to_string(),
        _ => trimmed.to_string(),
    }
}

/// Parses `(clip filename, valence, arousal)` rows. A first row whose
/// numeric columns do not parse is treated as a header.
pub fn parse_labels_csv<R: Read>(reader: R, name: &str) -> Result<Vec<AffectLabel>, RegressionError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let err = |message: String| RegressionError::Labels { path: name.to_string(), line, message };
        let rec = rec.map_err(|e| err(e.to_string()))?;
        if rec.len() == 0 || rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() < 3 {
            return Err(err(format!("expected 3 columns, found {}", rec.len())));
        }
        let (v, a) = (rec[1].parse::<f64>(), rec[2].parse::<f64>());
        let (v, a) = match (v, a) {
            (Ok(v), Ok(a)) => (v, a),
            _ if line == 1 => continue,
            _ => return Err(err(format!("non-numeric affect values {:?}, {:?}", &rec[1], &rec[2]))),
        };
        let clip_id = clip_id_from_filename(&rec[0]);
        for (dimension, value) in [("valence", v), ("arousal", a)] {
            if !value.is_finite() || !(-1.0..=1.0).contains(&value) {
                return Err(RegressionError::LabelOutOfRange { clip_id, dimension, value });
            }
        }
        out.push(AffectLabel { clip_id, valence: v, arousal: a });
    }
    Ok(out)
}

pub fn read_labels_csv(path: impl AsRef<Path>) -> Result<Vec<AffectLabel>, RegressionError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_labels_csv(file, &path.display().to_string())
}
