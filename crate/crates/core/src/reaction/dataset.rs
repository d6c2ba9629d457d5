use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::label::{LabelKind, StructuralLabel};
use super::{parse_reaction_smiles, ReactionRecord, Split};
use crate::error::DataError;

pub const REQUIRED_COLUMNS: [&str; 5] = [
    "id",
    "reaction_smiles",
    "reaction_name",
    "reaction_class",
    "split",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Jsonl,
    Csv,
}

impl DatasetFormat {
    /// `.csv` means CSV, anything else is read as JSONL.
    pub fn from_path(path: &Path) -> DatasetFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

/// One dataset line. Label fields are present in labeled files only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub id: String,
    pub reaction_smiles: String,
    pub reaction_name: String,
    pub reaction_class: String,
    pub split: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structural_label: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_kind: Option<LabelKind>,
}

impl DatasetRow {
    pub fn labeled(record: &ReactionRecord, label: &StructuralLabel) -> DatasetRow {
        DatasetRow {
            id: record.record_id.clone(),
            reaction_smiles: record.reaction_smiles.clone(),
            reaction_name: record.reaction_name.clone(),
            reaction_class: record.reaction_class.clone(),
            split: record.split.to_string(),
            structural_label: Some(label.atoms.to_vec()),
            label_kind: Some(label.kind),
        }
    }
}

/// A row that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based data row number (header excluded for CSV).
    pub row: usize,
    pub record_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<ReactionRecord>,
    pub rejects: Vec<Reject>,
}

fn field(
    obj: &serde_json::Map<String, Value>,
    name: &'static str,
    row: usize,
) -> Result<String, DataError> {
    match obj.get(name) {
        None => Err(DataError::MissingColumn {
            column: name,
            row: Some(row),
        }),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Null) => Ok(String::new()),
        Some(other) => Ok(other.to_string()),
    }
}

/// Row with its 1-based line or record number.
pub type NumberedRow = (usize, DatasetRow);

/// Raw rows in file order, paired with their row number. Lines that are not
/// JSON objects come back as rejects.
pub fn read_rows(
    path: &Path,
    format: DatasetFormat,
) -> Result<(Vec<NumberedRow>, Vec<Reject>), DataError> {
    let text =
        fs::read_to_string(path).map_err(|e| DataError::Io(path.display().to_string(), e))?;
    let mut rows = Vec::new();
    let mut rejects = Vec::new();
    match format {
        DatasetFormat::Jsonl => {
            for (i, line) in text.lines().enumerate() {
                let row = i + 1;
                if line.trim().is_empty() {
                    continue;
                }
                let obj = match serde_json::from_str::<Value>(line) {
                    Ok(Value::Object(o)) => o,
                    Ok(_) => {
                        rejects.push(Reject {
                            row,
                            record_id: None,
                            message: "row is not a JSON object".into(),
                        });
                        continue;
                    }
                    Err(e) => {
                        rejects.push(Reject {
                            row,
                            record_id: None,
                            message: format!("invalid JSON: {e}"),
                        });
                        continue;
                    }
                };
                let structural_label = obj
                    .get("structural_label")
                    .and_then(|v| serde_json::from_value::<Vec<u32>>(v.clone()).ok());
                let label_kind = obj
                    .get("label_kind")
                    .and_then(|v| serde_json::from_value::<LabelKind>(v.clone()).ok());
                rows.push((
                    row,
                    DatasetRow {
                        id: field(&obj, "id", row)?,
                        reaction_smiles: field(&obj, "reaction_smiles", row)?,
                        reaction_name: field(&obj, "reaction_name", row)?,
                        reaction_class: field(&obj, "reaction_class", row)?,
                        split: field(&obj, "split", row)?,
                        structural_label,
                        label_kind,
                    },
                ));
            }
        }
        DatasetFormat::Csv => {
            if text.trim().is_empty() {
                return Ok((rows, rejects));
            }
            let mut reader = csv::ReaderBuilder::new()
                .flexible(true)
                .from_reader(text.as_bytes());
            let headers = reader.headers().map_err(DataError::Csv)?.clone();
            let mut cols = [0usize; 5];
            for (slot, name) in cols.iter_mut().zip(REQUIRED_COLUMNS) {
                *slot = headers.iter().position(|h| h.trim() == name).ok_or(
                    DataError::MissingColumn {
                        column: name,
                        row: None,
                    },
                )?;
            }
            for (i, rec) in reader.records().enumerate() {
                let row = i + 1;
                let rec = match rec {
                    Ok(r) => r,
                    Err(e) => {
                        rejects.push(Reject {
                            row,
                            record_id: None,
                            message: format!("malformed CSV row: {e}"),
                        });
                        continue;
                    }
                };
                let get = |c: usize| rec.get(cols[c]).map(str::to_string);
                let (Some(id), Some(smiles), Some(name), Some(class), Some(split)) =
                    (get(0), get(1), get(2), get(3), get(4))
                else {
                    rejects.push(Reject {
                        row,
                        record_id: get(0),
                        message: "row has missing fields".into(),
                    });
                    continue;
                };
                rows.push((
                    row,
                    DatasetRow {
                        id,
                        reaction_smiles: smiles,
                        reaction_name: name,
                        reaction_class: class,
                        split,
                        structural_label: None,
                        label_kind: None,
                    },
                ));
            }
        }
    }
    Ok((rows, rejects))
}

pub fn record_from_row(row: &DatasetRow) -> Result<ReactionRecord, String> {
    let split: Split = row.split.parse()?;
    let parsed = parse_reaction_smiles(&row.reaction_smiles).map_err(|e| e.to_string())?;
    Ok(ReactionRecord {
        record_id: row.id.clone(),
        reactants: parsed.reactants,
        reagents: parsed.reagents,
        product: parsed.product,
        reaction_name: row.reaction_name.clone(),
        reaction_class: row.reaction_class.clone(),
        split,
        reaction_smiles: row.reaction_smiles.clone(),
    })
}

/// Reads a JSONL or CSV reaction dataset. Rows whose reaction SMILES or split
/// cannot be parsed are reported in `rejects`; a missing column aborts.
pub fn ingest_dataset(path: &Path, format: DatasetFormat) -> Result<Ingested, DataError> {
    let (rows, mut rejects) = read_rows(path, format)?;
    let mut records = Vec::with_capacity(rows.len());
    for (row, r) in rows {
        match record_from_row(&r) {
            Ok(rec) => records.push(rec),
            Err(message) => rejects.push(Reject {
                row,
                record_id: Some(r.id.clone()),
                message,
            }),
        }
    }
    rejects.sort_by_key(|r| r.row);
    Ok(Ingested { records, rejects })
}
