//! Column-typed in-memory table with CSV ingestion, categorical encoding,
//! quarter-dummy derivation, and train/test splitting.
//!
//! A `Dataset` is immutable after construction; the builder methods
//! (`select`, `with_column`, `set_response`, `take_rows`) return new tables.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::rng::derive_rng;

/// Declared column role in a schema config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Date,
    /// Numeric response variable. At most one per dataset.
    Response,
}

/// One column's declaration: name, kind, and (for categoricals) an optional
/// fixed level list. Empty `levels` on a categorical means levels are
/// discovered from the file in first-appearance order.
#[derive(Debug, Clone)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub levels: Vec<String>,
}

impl ColumnSchema {
    pub fn numeric(name: &str) -> Self {
        ColumnSchema { name: name.into(), kind: ColumnKind::Numeric, levels: Vec::new() }
    }
    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Categorical,
            levels: levels.iter().map(|s| s.to_string()).collect(),
        }
    }
    pub fn date(name: &str) -> Self {
        ColumnSchema { name: name.into(), kind: ColumnKind::Date, levels: Vec::new() }
    }
    pub fn response(name: &str) -> Self {
        ColumnSchema { name: name.into(), kind: ColumnKind::Response, levels: Vec::new() }
    }
}

/// Column storage. Categorical cells are codes into the level list.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical { levels: Vec<String>, codes: Vec<u32> },
    Date(Vec<NaiveDate>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
            Column::Date(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Build a categorical column from raw strings, discovering levels in
    /// first-appearance order.
    pub fn categorical_from_strings<S: AsRef<str>>(values: &[S]) -> Column {
        let mut levels: Vec<String> = Vec::new();
        let mut codes = Vec::with_capacity(values.len());
        for v in values {
            let v = v.as_ref();
            let code = match levels.iter().position(|l| l == v) {
                Some(i) => i as u32,
                None => {
                    levels.push(v.to_string());
                    (levels.len() - 1) as u32
                }
            };
            codes.push(code);
        }
        Column::Categorical { levels, codes }
    }

    fn take(&self, idx: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(idx.iter().map(|&i| v[i]).collect()),
            Column::Categorical { levels, codes } => Column::Categorical {
                levels: levels.clone(),
                codes: idx.iter().map(|&i| codes[i]).collect(),
            },
            Column::Date(v) => Column::Date(idx.iter().map(|&i| v[i]).collect()),
        }
    }

    fn cell_string(&self, i: usize) -> String {
        match self {
            Column::Numeric(v) => format!("{}", v[i]),
            Column::Categorical { levels, codes } => levels[codes[i] as usize].clone(),
            Column::Date(v) => v[i].format("%Y-%m-%d").to_string(),
        }
    }
}

/// Train/test split strategy.
#[derive(Debug, Clone)]
pub enum SplitSpec {
    /// Random partition: `fraction` of rows (floored) go to train,
    /// reproducibly from `seed`.
    Random { fraction: f64, seed: u64 },
    /// Order-preserving temporal split on the named date column:
    /// train = rows strictly before `cutoff`, test = rows at or after.
    Temporal { date_column: String, cutoff: NaiveDate },
}

/// Ingestion options for [`load_csv`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Drop rows containing empty cells instead of rejecting the file.
    pub drop_missing: bool,
}

/// Column-typed table. Exactly one column may be the response.
#[derive(Debug, Clone)]
pub struct Dataset {
    names: Vec<String>,
    cols: Vec<Column>,
    response: Option<usize>,
}

impl Dataset {
    /// Build a dataset from named columns. `response`, when given, must name
    /// one of the columns.
    pub fn from_columns(columns: Vec<(String, Column)>, response: Option<&str>) -> Result<Dataset> {
        if columns.is_empty() {
            return Err(Error::schema("dataset needs at least one column"));
        }
        let n = columns[0].1.len();
        let mut seen = HashSet::new();
        for (name, col) in &columns {
            if !seen.insert(name.clone()) {
                return Err(Error::schema(format!("duplicate column name {name:?}")));
            }
            if col.len() != n {
                return Err(Error::schema(format!(
                    "column {name:?} has {} rows, expected {n}",
                    col.len()
                )));
            }
            if let Column::Categorical { levels, codes } = col {
                let mut lvlset = HashSet::new();
                for l in levels {
                    if !lvlset.insert(l) {
                        return Err(Error::schema(format!(
                            "column {name:?} has duplicate level {l:?}"
                        )));
                    }
                }
                if codes.iter().any(|&c| c as usize >= levels.len()) {
                    return Err(Error::schema(format!("column {name:?} has out-of-range code")));
                }
            }
        }
        let names: Vec<String> = columns.iter().map(|(n, _)| n.clone()).collect();
        let cols: Vec<Column> = columns.into_iter().map(|(_, c)| c).collect();
        let response = match response {
            None => None,
            Some(r) => Some(
                names
                    .iter()
                    .position(|n| n == r)
                    .ok_or_else(|| Error::schema(format!("response column {r:?} not found")))?,
            ),
        };
        Ok(Dataset { names, cols, response })
    }

    pub fn n(&self) -> usize {
        self.cols[0].len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        let i = self.index_of(name)?;
        Ok(&self.cols[i])
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::schema(format!("no column named {name:?}")))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    /// Name of the response column, if set.
    pub fn response_name(&self) -> Option<&str> {
        self.response.map(|i| self.names[i].as_str())
    }

    pub fn response_column(&self) -> Result<&Column> {
        let i = self
            .response
            .ok_or_else(|| Error::schema("dataset has no response column"))?;
        Ok(&self.cols[i])
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.column(name)? {
            Column::Numeric(v) => Ok(v),
            _ => Err(Error::schema(format!("column {name:?} is not numeric"))),
        }
    }

    pub fn categorical(&self, name: &str) -> Result<(&[String], &[u32])> {
        match self.column(name)? {
            Column::Categorical { levels, codes } => Ok((levels, codes)),
            _ => Err(Error::schema(format!("column {name:?} is not categorical"))),
        }
    }

    pub fn dates(&self, name: &str) -> Result<&[NaiveDate]> {
        match self.column(name)? {
            Column::Date(v) => Ok(v),
            _ => Err(Error::schema(format!("column {name:?} is not a date column"))),
        }
    }

    /// New dataset with only the named columns, in the given order. The
    /// response marker is kept iff its column is selected.
    pub fn select(&self, names: &[&str]) -> Result<Dataset> {
        let mut columns = Vec::with_capacity(names.len());
        for &name in names {
            columns.push((name.to_string(), self.column(name)?.clone()));
        }
        let response = self.response_name().filter(|r| names.contains(r));
        Dataset::from_columns(columns, response)
    }

    /// New dataset with `col` appended under `name`.
    pub fn with_column(&self, name: &str, col: Column) -> Result<Dataset> {
        if self.has_column(name) {
            return Err(Error::schema(format!("column {name:?} already exists")));
        }
        if col.len() != self.n() {
            return Err(Error::schema(format!(
                "column {name:?} has {} rows, expected {}",
                col.len(),
                self.n()
            )));
        }
        let mut ds = self.clone();
        ds.names.push(name.to_string());
        ds.cols.push(col);
        Ok(ds)
    }

    /// New dataset with the response marker moved to `name`.
    pub fn set_response(&self, name: &str) -> Result<Dataset> {
        let i = self.index_of(name)?;
        let mut ds = self.clone();
        ds.response = Some(i);
        Ok(ds)
    }

    /// New dataset containing the given rows, in the given order.
    /// Indices may repeat.
    pub fn take_rows(&self, idx: &[usize]) -> Result<Dataset> {
        let n = self.n();
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::schema(format!("row index {bad} out of range (n={n})")));
        }
        let mut ds = self.clone();
        for col in &mut ds.cols {
            *col = col.take(idx);
        }
        Ok(ds)
    }

    /// Append `I(quarter 2..4)` indicator columns derived from a date column.
    /// Quarter 1 is the reference level (all three zero).
    pub fn quarter_dummies(&self, date_column: &str) -> Result<Dataset> {
        let dates = self.dates(date_column)?;
        let dummies = quarter_dummies(dates);
        let mut ds = self.clone();
        for (name, vals) in [("q2", dummies.0), ("q3", dummies.1), ("q4", dummies.2)] {
            ds = ds.with_column(name, Column::Numeric(vals))?;
        }
        Ok(ds)
    }

    /// Disjoint train/test partition per `spec`.
    pub fn split(&self, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
        let n = self.n();
        let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = match spec {
            SplitSpec::Random { fraction, seed } => {
                if !(*fraction > 0.0 && *fraction < 1.0) {
                    return Err(Error::config(format!(
                        "split fraction must be in (0,1), got {fraction}"
                    )));
                }
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(&mut derive_rng(*seed, &["split"]));
                let cut = (fraction * n as f64).floor() as usize;
                let mut train: Vec<usize> = idx[..cut].to_vec();
                let mut test: Vec<usize> = idx[cut..].to_vec();
                train.sort_unstable();
                test.sort_unstable();
                (train, test)
            }
            SplitSpec::Temporal { date_column, cutoff } => {
                let dates = self.dates(date_column)?;
                let train = (0..n).filter(|&i| dates[i] < *cutoff).collect();
                let test = (0..n).filter(|&i| dates[i] >= *cutoff).collect();
                (train, test)
            }
        };
        if train_idx.is_empty() || test_idx.is_empty() {
            return Err(Error::DegenerateSplit(format!(
                "partition sizes ({}, {})",
                train_idx.len(),
                test_idx.len()
            )));
        }
        Ok((self.take_rows(&train_idx)?, self.take_rows(&test_idx)?))
    }

    /// Write the table back out as RFC-4180 CSV.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.names).map_err(csv_io)?;
        for i in 0..self.n() {
            let rec: Vec<String> = self.cols.iter().map(|c| c.cell_string(i)).collect();
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Quarter indicators `(I(Q2), I(Q3), I(Q4))` for each date. Quarter 1 maps
/// to (0,0,0).
pub fn quarter_dummies(dates: &[NaiveDate]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut q2 = Vec::with_capacity(dates.len());
    let mut q3 = Vec::with_capacity(dates.len());
    let mut q4 = Vec::with_capacity(dates.len());
    for d in dates {
        let q = (d.month() + 2) / 3;
        q2.push(if q == 2 { 1.0 } else { 0.0 });
        q3.push(if q == 3 { 1.0 } else { 0.0 });
        q4.push(if q == 4 { 1.0 } else { 0.0 });
    }
    (q2, q3, q4)
}

/// Load a CSV file against a declared schema.
///
/// The header must contain exactly the schema's column names; column order
/// follows the file header. Categorical levels are discovered in file order
/// when the schema leaves them empty, and enforced when fixed. Empty cells
/// are rejected unless `opts.drop_missing` is set, in which case the whole
/// row is skipped. Parse errors carry the 1-based data row number.
pub fn load_csv(path: &Path, schema: &[ColumnSchema], opts: LoadOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_io)?
        .iter()
        .map(|s| s.to_string())
        .collect();

    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.clone()) {
            return Err(Error::schema(format!("duplicate header column {name:?}")));
        }
    }
    let mut order = Vec::with_capacity(header.len());
    for name in &header {
        let i = schema
            .iter()
            .position(|c| &c.name == name)
            .ok_or_else(|| Error::schema(format!("header column {name:?} not in schema")))?;
        order.push(i);
    }
    if order.len() != schema.len() {
        let missing: Vec<&str> = schema
            .iter()
            .filter(|c| !header.contains(&c.name))
            .map(|c| c.name.as_str())
            .collect();
        return Err(Error::schema(format!("header is missing columns {missing:?}")));
    }
    let ordered: Vec<&ColumnSchema> = order.iter().map(|&i| &schema[i]).collect();
    if ordered.iter().filter(|c| c.kind == ColumnKind::Response).count() > 1 {
        return Err(Error::schema("more than one response column declared"));
    }

    enum Builder {
        Numeric(Vec<f64>),
        Categorical { levels: Vec<String>, fixed: bool, codes: Vec<u32> },
        Date(Vec<NaiveDate>),
    }
    let mut builders: Vec<Builder> = ordered
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Numeric | ColumnKind::Response => Builder::Numeric(Vec::new()),
            ColumnKind::Date => Builder::Date(Vec::new()),
            ColumnKind::Categorical => Builder::Categorical {
                levels: c.levels.clone(),
                fixed: !c.levels.is_empty(),
                codes: Vec::new(),
            },
        })
        .collect();

    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| parse_row_err(row, e))?;
        if rec.len() != ordered.len() {
            return Err(Error::parse(
                row,
                format!("expected {} fields, got {}", ordered.len(), rec.len()),
            ));
        }
        if rec.iter().any(|cell| cell.is_empty()) {
            if opts.drop_missing {
                continue;
            }
            return Err(Error::parse(row, "empty cell (missing value)".to_string()));
        }
        for (j, cell) in rec.iter().enumerate() {
            match &mut builders[j] {
                Builder::Numeric(v) => {
                    let x: f64 = cell.parse().map_err(|_| {
                        Error::parse(row, format!("column {:?}: bad number {cell:?}", ordered[j].name))
                    })?;
                    v.push(x);
                }
                Builder::Date(v) => {
                    let d = NaiveDate::parse_from_str(cell, "%Y-%m-%d").map_err(|_| {
                        Error::parse(
                            row,
                            format!("column {:?}: bad date {cell:?} (want YYYY-MM-DD)", ordered[j].name),
                        )
                    })?;
                    v.push(d);
                }
                Builder::Categorical { levels, fixed, codes } => {
                    match levels.iter().position(|l| l == cell) {
                        Some(c) => codes.push(c as u32),
                        None if *fixed => {
                            return Err(Error::schema(format!(
                                "row {row}: unknown level {cell:?} for column {:?}",
                                ordered[j].name
                            )));
                        }
                        None => {
                            levels.push(cell.to_string());
                            codes.push((levels.len() - 1) as u32);
                        }
                    }
                }
            }
        }
    }

    let mut columns = Vec::with_capacity(ordered.len());
    for (c, b) in ordered.iter().zip(builders) {
        let col = match b {
            Builder::Numeric(v) => Column::Numeric(v),
            Builder::Date(v) => Column::Date(v),
            Builder::Categorical { mut levels, codes, .. } => {
                // A discovered-empty level list would make the column
                // unusable downstream; give n=0 files a placeholder.
                if levels.is_empty() && codes.is_empty() {
                    levels.push("(none)".to_string());
                }
                Column::Categorical { levels, codes }
            }
        };
        columns.push((c.name.clone(), col));
    }
    let response = ordered
        .iter()
        .find(|c| c.kind == ColumnKind::Response)
        .map(|c| c.name.as_str());
    Dataset::from_columns(columns, response)
}

fn parse_row_err(row: usize, e: csv::Error) -> Error {
    let msg = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, got {len}")
        }
        _ => e.to_string(),
    };
    Error::parse(row, msg)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum KindSpec {
    Plain(String),
    Detailed { kind: String, #[serde(default)] levels: Vec<String> },
}

#[derive(Deserialize)]
struct SchemaFile {
    columns: toml::map::Map<String, toml::Value>,
}

/// Parse a schema config: a `[columns]` table mapping column name to either
/// a kind string (`"numeric"`, `"categorical"`, `"date"`, `"response"`) or a
/// `{ kind = "categorical", levels = [...] }` table fixing the level set.
pub fn schema_from_toml(text: &str) -> Result<Vec<ColumnSchema>> {
    let file: SchemaFile =
        toml::from_str(text).map_err(|e| Error::config(format!("schema config: {e}")))?;
    let mut schema = Vec::with_capacity(file.columns.len());
    for (name, value) in file.columns {
        let spec: KindSpec = value
            .try_into()
            .map_err(|e| Error::config(format!("schema config column {name:?}: {e}")))?;
        let (kind_str, levels) = match spec {
            KindSpec::Plain(k) => (k, Vec::new()),
            KindSpec::Detailed { kind, levels } => (kind, levels),
        };
        let kind = match kind_str.as_str() {
            "numeric" => ColumnKind::Numeric,
            "categorical" => ColumnKind::Categorical,
            "date" => ColumnKind::Date,
            "response" => ColumnKind::Response,
            other => {
                return Err(Error::config(format!(
                    "schema config column {name:?}: unknown kind {other:?}"
                )))
            }
        };
        if kind != ColumnKind::Categorical && !levels.is_empty() {
            return Err(Error::config(format!(
                "schema config column {name:?}: levels only apply to categorical columns"
            )));
        }
        schema.push(ColumnSchema { name, kind, levels });
    }
    if schema.is_empty() {
        return Err(Error::config("schema config declares no columns"));
    }
    Ok(schema)
}

/// Render a dataset as a CSV string (used by artifact writers and tests).
pub fn to_csv_string(ds: &Dataset) -> String {
    let mut out = String::new();
    let quote = |s: &str| {
        if s.contains(',') || s.contains('"') || s.contains('\n') {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    let _ = writeln!(out, "{}", ds.names().iter().map(|s| quote(s)).collect::<Vec<_>>().join(","));
    for i in 0..ds.n() {
        let row: Vec<String> = ds
            .names()
            .iter()
            .map(|name| quote(&ds.column(name).unwrap().cell_string(i)))
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}
