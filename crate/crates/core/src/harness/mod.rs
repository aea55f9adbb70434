//! Sweep orchestration and CSV outputs.

mod compare;
pub mod config;
mod skr_table;
mod sweep;

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use compare::{compare_et, EtComparison, RatioFlag};
pub use config::{Policy, SweepConfig};
pub use skr_table::{
    external_skr_table, read_captures, read_captures_file, skr_table, CaptureRow, CaptureSummary, SkrRow,
};
pub use sweep::{read_records, run_sweep, write_records, PreparedCode, SweepRecord};

use crate::{Error, Result};

/// Writes `rows` as CSV with a header line.
pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let context = path.display().to_string();
    for row in rows {
        w.serialize(row).map_err(|e| Error::Csv {
            context: context.clone(),
            msg: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Renders `rows` as CSV text.
pub fn to_csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Csv {
            context: "csv output".into(),
            msg: e.to_string(),
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv {
        context: "csv output".into(),
        msg: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

/// Deserializes every row, reporting the line and column of the first bad
/// one.
fn read_csv_rows<T: DeserializeOwned, R: Read>(
    mut reader: csv::Reader<R>,
    context: &str,
) -> Result<Vec<T>> {
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            context: context.to_owned(),
            msg: e.to_string(),
        })?
        .clone();
    reader
        .deserialize()
        .map(|row| {
            row.map_err(|e| {
                let line = e.position().map(|p| p.line());
                let column = match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err
                        .field()
                        .and_then(|i| headers.get(i as usize))
                        .map(|h| format!(", column `{h}`")),
                    _ => None,
                }
                .unwrap_or_default();
                Error::Csv {
                    context: match line {
                        Some(l) => format!("{context} line {l}{column}"),
                        None => context.to_owned(),
                    },
                    msg: e.to_string(),
                }
            })
        })
        .collect()
}
