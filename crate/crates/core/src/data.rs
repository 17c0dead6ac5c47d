//! Dataset model and validation of ingested score tables.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Category token used for empty attribute cells.
pub const MISSING_VALUE: &str = "<missing>";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("input table has no data rows")]
    EmptyTable,
    #[error("column '{0}' not found in table header")]
    MissingColumn(String),
    #[error("attribute '{0}' declared more than once")]
    DuplicateAttribute(String),
    #[error("attribute '{0}' is not part of the schema")]
    UnknownAttribute(String),
    #[error("{}", format_diagnostics(.0))]
    InvalidRows(Vec<RowDiagnostic>),
    #[error("malformed table: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for DataError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                return DataError::Io(io);
            }
            unreachable!("io errors carry an io kind");
        }
        DataError::Parse(e.to_string())
    }
}

fn format_diagnostics(diags: &[RowDiagnostic]) -> String {
    const SHOWN: usize = 10;
    let mut out = format!("{} invalid row(s)", diags.len());
    for d in diags.iter().take(SHOWN) {
        out.push_str(&format!("\n  {d}"));
    }
    if diags.len() > SHOWN {
        out.push_str(&format!("\n  ... and {} more", diags.len() - SHOWN));
    }
    out
}

/// A rejected cell. `row` counts data rows from 1 (the header is not counted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    pub row: usize,
    pub column: String,
    pub message: String,
}

impl fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}, column '{}': {}", self.row, self.column, self.message)
    }
}

/// Header plus string cells, as read from a delimited text file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn column_index(&self, name: &str) -> Result<usize, DataError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    }
}

pub fn read_table<R: Read>(reader: R, delimiter: u8) -> Result<RawTable, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| DataError::Parse(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DataError::Parse(e.to_string()))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(RawTable { header, rows })
}

pub fn read_table_file(path: &Path, delimiter: u8) -> Result<RawTable, DataError> {
    let file = std::fs::File::open(path)?;
    read_table(std::io::BufReader::new(file), delimiter)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    /// Allowed values in declaration order. An empty list means "infer the
    /// value set from the data" when passed to [`validate_dataset`].
    #[serde(default)]
    pub values: Vec<String>,
}

impl Attribute {
    pub fn new(name: impl Into<String>, values: &[&str]) -> Self {
        Attribute {
            name: name.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn value_index(&self, value: &str) -> Option<u32> {
        self.values.iter().position(|v| v == value).map(|i| i as u32)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub attributes: Vec<Attribute>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>) -> Self {
        AttributeSchema { attributes }
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    fn check_unique(&self) -> Result<(), DataError> {
        let mut seen = BTreeSet::new();
        for a in &self.attributes {
            if !seen.insert(a.name.as_str()) {
                return Err(DataError::DuplicateAttribute(a.name.clone()));
            }
        }
        Ok(())
    }
}

/// One scored subject. Attribute values are stored as indices into the
/// owning dataset's schema, in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskRecord {
    pub score: f64,
    pub outcome: bool,
    pub values: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: AttributeSchema,
    records: Vec<RiskRecord>,
}

impl Dataset {
    /// Builds a dataset from already-typed records, checking every invariant.
    pub fn new(schema: AttributeSchema, records: Vec<RiskRecord>) -> Result<Self, DataError> {
        schema.check_unique()?;
        if records.is_empty() {
            return Err(DataError::EmptyTable);
        }
        let mut diags = Vec::new();
        for (i, r) in records.iter().enumerate() {
            if !(r.score.is_finite() && (0.0..=1.0).contains(&r.score)) {
                diags.push(RowDiagnostic {
                    row: i + 1,
                    column: "score".into(),
                    message: format!("score {} outside [0, 1]", r.score),
                });
            }
            if r.values.len() != schema.attributes.len() {
                diags.push(RowDiagnostic {
                    row: i + 1,
                    column: "attributes".into(),
                    message: format!(
                        "{} attribute values for {} schema attributes",
                        r.values.len(),
                        schema.attributes.len()
                    ),
                });
                continue;
            }
            for (a, &v) in schema.attributes.iter().zip(&r.values) {
                if v as usize >= a.values.len() {
                    diags.push(RowDiagnostic {
                        row: i + 1,
                        column: a.name.clone(),
                        message: format!("value index {v} not declared"),
                    });
                }
            }
        }
        if !diags.is_empty() {
            return Err(DataError::InvalidRows(diags));
        }
        Ok(Dataset { schema, records })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn records(&self) -> &[RiskRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.score).collect()
    }

    pub fn outcomes(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.outcome).collect()
    }

    pub fn positive_count(&self) -> usize {
        self.records.iter().filter(|r| r.outcome).count()
    }

    /// Value of attribute `name` for record `row`.
    pub fn attribute_value(&self, row: usize, name: &str) -> Option<&str> {
        let a = self.schema.position(name)?;
        let rec = self.records.get(row)?;
        let idx = *rec.values.get(a)? as usize;
        self.schema.attributes[a].values.get(idx).map(String::as_str)
    }

    /// Writes the dataset as a delimited table with the given column names.
    pub fn write_table<W: std::io::Write>(
        &self,
        writer: W,
        score_column: &str,
        outcome_column: &str,
    ) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![score_column.to_string(), outcome_column.to_string()];
        header.extend(self.schema.attributes.iter().map(|a| a.name.clone()));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![format!("{:.16e}", r.score), u8::from(r.outcome).to_string()];
            for (a, &v) in self.schema.attributes.iter().zip(&r.values) {
                row.push(a.values[v as usize].clone());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Converts raw rows into a [`Dataset`].
///
/// Attributes declared with an empty value list take their value set from
/// the data (sorted). Empty cells become [`MISSING_VALUE`], which is always
/// accepted and appended to the attribute's value list when it occurs. Any
/// invalid cell rejects the whole table; all offending cells are reported.
pub fn validate_dataset(
    raw: &RawTable,
    schema: &AttributeSchema,
    score_column: &str,
    outcome_column: &str,
) -> Result<Dataset, DataError> {
    schema.check_unique()?;
    if raw.rows.is_empty() {
        return Err(DataError::EmptyTable);
    }
    let score_col = raw.column_index(score_column)?;
    let outcome_col = raw.column_index(outcome_column)?;
    let attr_cols = schema
        .attributes
        .iter()
        .map(|a| raw.column_index(&a.name))
        .collect::<Result<Vec<_>, _>>()?;

    let mut resolved = schema.clone();
    for (a, &col) in resolved.attributes.iter_mut().zip(&attr_cols) {
        if a.values.is_empty() {
            let observed: BTreeSet<&str> = raw
                .rows
                .iter()
                .filter_map(|r| r.get(col))
                .map(|c| c.trim())
                .filter(|c| !c.is_empty())
                .collect();
            a.values = observed.into_iter().map(str::to_string).collect();
        }
        let has_missing = raw.rows.iter().any(|r| r.get(col).is_none_or(|c| c.trim().is_empty()));
        if has_missing && a.value_index(MISSING_VALUE).is_none() {
            a.values.push(MISSING_VALUE.to_string());
        }
    }
    let lookups: Vec<HashMap<&str, u32>> = resolved
        .attributes
        .iter()
        .map(|a| {
            a.values
                .iter()
                .enumerate()
                .map(|(i, v)| (v.as_str(), i as u32))
                .collect()
        })
        .collect();

    let mut diags = Vec::new();
    let mut records = Vec::with_capacity(raw.rows.len());
    for (i, row) in raw.rows.iter().enumerate() {
        let row_no = i + 1;
        let cell = |col: usize| row.get(col).map(|c| c.trim()).unwrap_or("");
        let mut ok = true;

        let score = match cell(score_col).parse::<f64>() {
            Ok(s) if s.is_finite() && (0.0..=1.0).contains(&s) => s,
            Ok(s) => {
                diags.push(RowDiagnostic {
                    row: row_no,
                    column: score_column.to_string(),
                    message: format!("score {s} outside [0, 1]"),
                });
                ok = false;
                0.0
            }
            Err(_) => {
                diags.push(RowDiagnostic {
                    row: row_no,
                    column: score_column.to_string(),
                    message: format!("score '{}' is not numeric", cell(score_col)),
                });
                ok = false;
                0.0
            }
        };

        let outcome = match cell(outcome_col).parse::<f64>() {
            Ok(0.0) => false,
            Ok(1.0) => true,
            _ => {
                diags.push(RowDiagnostic {
                    row: row_no,
                    column: outcome_column.to_string(),
                    message: format!("outcome '{}' is not 0 or 1", cell(outcome_col)),
                });
                ok = false;
                false
            }
        };

        let mut values = Vec::with_capacity(attr_cols.len());
        for (a, &col) in attr_cols.iter().enumerate() {
            let v = cell(col);
            let v = if v.is_empty() { MISSING_VALUE } else { v };
            if let Some(&idx) = lookups[a].get(v) {
                values.push(idx);
            } else {
                diags.push(RowDiagnostic {
                    row: row_no,
                    column: resolved.attributes[a].name.clone(),
                    message: format!("value '{v}' not declared in schema"),
                });
                ok = false;
            }
        }
        if ok {
            records.push(RiskRecord { score, outcome, values });
        }
    }
    if !diags.is_empty() {
        return Err(DataError::InvalidRows(diags));
    }
    Dataset::new(resolved, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[&str]]) -> RawTable {
        RawTable {
            header: vec!["score".into(), "y".into(), "sex".into()],
            rows: rows.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect(),
        }
    }

    fn sex_schema() -> AttributeSchema {
        AttributeSchema::new(vec![Attribute::new("sex", &["M", "F"])])
    }

    #[test]
    fn four_valid_rows_pass_through() {
        let raw = table(&[
            &["0.1", "0", "M"],
            &["0.9", "1", "F"],
            &["0.5", "1", "F"],
            &["0", "0", "M"],
        ]);
        let ds = validate_dataset(&raw, &sex_schema(), "score", "y").unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.scores(), vec![0.1, 0.9, 0.5, 0.0]);
        assert_eq!(ds.outcomes(), vec![false, true, true, false]);
        assert_eq!(ds.attribute_value(1, "sex"), Some("F"));
    }

    #[test]
    fn score_out_of_bounds_names_the_row() {
        let raw = table(&[&["0.1", "0", "M"], &["1.3", "1", "F"]]);
        let err = validate_dataset(&raw, &sex_schema(), "score", "y").unwrap_err();
        match err {
            DataError::InvalidRows(d) => {
                assert_eq!(d.len(), 1);
                assert_eq!(d[0].row, 2);
                assert_eq!(d[0].column, "score");
                assert!(d[0].message.contains("outside [0, 1]"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_score_and_bad_outcome_are_rejected() {
        let raw = table(&[&["abc", "0", "M"], &["0.4", "2", "F"]]);
        let DataError::InvalidRows(d) = validate_dataset(&raw, &sex_schema(), "score", "y").unwrap_err() else {
            panic!("expected row diagnostics")
        };
        assert_eq!(d.len(), 2);
        assert_eq!((d[0].row, d[0].column.as_str()), (1, "score"));
        assert_eq!((d[1].row, d[1].column.as_str()), (2, "y"));
    }

    #[test]
    fn undeclared_value_is_rejected() {
        let raw = table(&[&["0.4", "1", "X"]]);
        let DataError::InvalidRows(d) = validate_dataset(&raw, &sex_schema(), "score", "y").unwrap_err() else {
            panic!("expected row diagnostics")
        };
        assert!(d[0].message.contains("'X'"));
    }

    #[test]
    fn empty_table_and_missing_column() {
        let raw = table(&[]);
        assert!(matches!(
            validate_dataset(&raw, &sex_schema(), "score", "y"),
            Err(DataError::EmptyTable)
        ));
        let raw = table(&[&["0.4", "1", "M"]]);
        assert!(matches!(
            validate_dataset(&raw, &sex_schema(), "p", "y"),
            Err(DataError::MissingColumn(c)) if c == "p"
        ));
    }

    #[test]
    fn empty_cells_become_missing_category_and_values_can_be_inferred() {
        let raw = table(&[&["0.4", "1", ""], &["0.2", "0", "b"], &["0.3", "0", "a"]]);
        let schema = AttributeSchema::new(vec![Attribute::new("sex", &[])]);
        let ds = validate_dataset(&raw, &schema, "score", "y").unwrap();
        assert_eq!(ds.schema().attributes[0].values, vec!["a", "b", MISSING_VALUE]);
        assert_eq!(ds.attribute_value(0, "sex"), Some(MISSING_VALUE));
        assert_eq!(ds.attribute_value(2, "sex"), Some("a"));
    }

    #[test]
    fn read_table_parses_delimiters() {
        let text = "score;y;sex\n0.5;1;M\n0.25;0;F\n";
        let raw = read_table(text.as_bytes(), b';').unwrap();
        assert_eq!(raw.header, vec!["score", "y", "sex"]);
        assert_eq!(raw.rows.len(), 2);
        let ds = validate_dataset(&raw, &sex_schema(), "score", "y").unwrap();
        assert_eq!(ds.scores(), vec![0.5, 0.25]);
    }

    #[test]
    fn write_then_read_reproduces_dataset() {
        let raw = table(&[&["0.1", "0", "M"], &["0.7", "1", "F"]]);
        let ds = validate_dataset(&raw, &sex_schema(), "score", "y").unwrap();
        let mut buf = Vec::new();
        ds.write_table(&mut buf, "score", "y").unwrap();
        let back = read_table(buf.as_slice(), b',').unwrap();
        let ds2 = validate_dataset(&back, &sex_schema(), "score", "y").unwrap();
        assert_eq!(ds, ds2);
    }
}
