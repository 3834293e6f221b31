//! Typed tabular data: schema parsing, CSV ingestion and emission,
//! stratified fold assignment and missingness injection.
//!
//! A [`Dataset`] is an `m x n` grid of [`Cell`]s whose last column is the
//! binary decision. Categorical and decision values are interned per column
//! so that frequency lookups during proximity computation are integer
//! comparisons.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MISSING_TOKEN: &str = "?";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Integer,
    Real,
    Decision,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Categorical => "categorical",
            ColumnKind::Integer => "integer",
            ColumnKind::Real => "real",
            ColumnKind::Decision => "decision",
        }
    }

    /// Categorical and integer columns are compared by value frequency,
    /// real columns by ratio to a class mean.
    pub fn is_discrete(self) -> bool {
        matches!(self, ColumnKind::Categorical | ColumnKind::Integer)
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "categorical" => Ok(ColumnKind::Categorical),
            "integer" => Ok(ColumnKind::Integer),
            "real" => Ok(ColumnKind::Real),
            "decision" => Ok(ColumnKind::Decision),
            other => Err(Error::Schema(format!("unknown column kind `{other}`"))),
        }
    }
}

/// One table cell. `Cat` holds an index into the column's level dictionary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Missing,
    Cat(u32),
    Int(i64),
    Real(f64),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Column layout of a dataset, read from a sidecar schema file.
///
/// The file has one `<name>:<kind>` line per column. The decision line may
/// carry a third field naming the positive label, `class:decision:yes`.
/// Blank lines and lines starting with `#` are ignored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    pub positive_label: Option<String>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>, positive_label: Option<String>) -> Result<Self> {
        let schema = Schema {
            columns,
            positive_label,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// Convenience constructor from `(name, kind)` pairs.
    pub fn from_pairs(pairs: &[(&str, ColumnKind)]) -> Result<Self> {
        let columns = pairs
            .iter()
            .map(|(name, kind)| ColumnSpec {
                name: (*name).to_string(),
                kind: *kind,
            })
            .collect();
        Schema::new(columns, None)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        let mut positive_label = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, ':');
            let name = parts.next().unwrap_or_default().trim();
            let kind = parts.next().ok_or_else(|| {
                Error::Schema(format!("line {}: expected `<name>:<kind>`", lineno + 1))
            })?;
            let kind: ColumnKind = kind.parse()?;
            if let Some(extra) = parts.next() {
                if kind != ColumnKind::Decision {
                    return Err(Error::Schema(format!(
                        "line {}: only the decision column takes a positive label",
                        lineno + 1
                    )));
                }
                positive_label = Some(extra.trim().to_string());
            }
            columns.push(ColumnSpec {
                name: name.to_string(),
                kind,
            });
        }
        Schema::new(columns, positive_label)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for col in &self.columns {
            out.push_str(&col.name);
            out.push(':');
            out.push_str(col.kind.as_str());
            if col.kind == ColumnKind::Decision {
                if let Some(pos) = &self.positive_label {
                    out.push(':');
                    out.push_str(pos);
                }
            }
            out.push('\n');
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.columns.len() < 2 {
            return Err(Error::Schema(
                "need at least one feature column and a decision column".into(),
            ));
        }
        let decisions = self
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Decision)
            .count();
        if decisions != 1 || self.columns.last().map(|c| c.kind) != Some(ColumnKind::Decision) {
            return Err(Error::Schema(
                "exactly one decision column is required and it must be last".into(),
            ));
        }
        let mut seen = HashMap::new();
        for (i, col) in self.columns.iter().enumerate() {
            if col.name.is_empty() {
                return Err(Error::Schema(format!("column {} has an empty name", i + 1)));
            }
            if let Some(prev) = seen.insert(col.name.as_str(), i) {
                return Err(Error::Schema(format!(
                    "duplicate column name `{}` (columns {} and {})",
                    col.name,
                    prev + 1,
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// Interned labels for categorical and decision columns; empty otherwise.
    levels: Vec<String>,
}

impl Column {
    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    fn intern(&mut self, token: &str) -> u32 {
        match self.levels.iter().position(|l| l == token) {
            Some(i) => i as u32,
            None => {
                self.levels.push(token.to_string());
                (self.levels.len() - 1) as u32
            }
        }
    }

    fn parse_cell(&mut self, token: &str, missing: &str) -> std::result::Result<Cell, String> {
        if token == missing {
            if self.kind == ColumnKind::Decision {
                return Err(format!(
                    "missing value in decision column `{}`",
                    self.name
                ));
            }
            return Ok(Cell::Missing);
        }
        match self.kind {
            ColumnKind::Categorical | ColumnKind::Decision => {
                if token.is_empty() {
                    return Err(format!("empty value in column `{}`", self.name));
                }
                Ok(Cell::Cat(self.intern(token)))
            }
            ColumnKind::Integer => token
                .parse::<i64>()
                .map(Cell::Int)
                .map_err(|_| format!("`{token}` is not an integer (column `{}`)", self.name)),
            ColumnKind::Real => match token.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Cell::Real(v)),
                _ => Err(format!(
                    "`{token}` is not a finite real number (column `{}`)",
                    self.name
                )),
            },
        }
    }
}

/// Immutable typed table with a trailing binary decision column.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    cells: Vec<Cell>,
    n_rows: usize,
    positive: u32,
}

impl Dataset {
    /// Builds a dataset from already-tokenized rows. Every token is parsed
    /// against its column kind; `missing` marks an unobserved cell.
    pub fn from_tokens<I, R, S>(schema: &Schema, rows: I, missing: &str) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut columns: Vec<Column> = schema
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                kind: c.kind,
                levels: Vec::new(),
            })
            .collect();
        let n = columns.len();
        let mut cells = Vec::new();
        let mut n_rows = 0;
        for (r, row) in rows.into_iter().enumerate() {
            let start = cells.len();
            for (c, token) in row.into_iter().enumerate() {
                let line = r + 2;
                let col = columns.get_mut(c).ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("expected {n} fields, found more"),
                })?;
                let cell = col
                    .parse_cell(token.as_ref().trim(), missing)
                    .map_err(|msg| Error::Parse { line, msg })?;
                cells.push(cell);
            }
            if cells.len() - start != n {
                return Err(Error::Parse {
                    line: r + 2,
                    msg: format!("expected {n} fields, found {}", cells.len() - start),
                });
            }
            n_rows += 1;
        }

        let decision = columns.last_mut().expect("schema has a decision column");
        let positive = match &schema.positive_label {
            Some(label) => decision.intern(label),
            None => {
                let best = decision
                    .levels
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.cmp(b.1))
                    .map(|(i, _)| i as u32);
                best.unwrap_or(0)
            }
        };
        if decision.levels.len() > 2 {
            return Err(Error::data(format!(
                "decision column `{}` has {} distinct labels; exactly two are supported",
                decision.name,
                decision.levels.len()
            )));
        }
        Ok(Dataset {
            columns,
            cells,
            n_rows,
            positive,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Total column count, decision included.
    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn decision_col(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, col: usize) -> &Column {
        &self.columns[col]
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns[..self.n_features()]
            .iter()
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn schema(&self) -> Schema {
        Schema {
            columns: self
                .columns
                .iter()
                .map(|c| ColumnSpec {
                    name: c.name.clone(),
                    kind: c.kind,
                })
                .collect(),
            positive_label: Some(self.positive_label().to_string()),
        }
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.columns.len() + col]
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        let n = self.columns.len();
        &self.cells[row * n..(row + 1) * n]
    }

    /// Interned decision code of a record.
    #[inline]
    pub fn class_of(&self, row: usize) -> u32 {
        match self.cell(row, self.decision_col()) {
            Cell::Cat(code) => code,
            other => unreachable!("decision cell holds {other:?}"),
        }
    }

    #[inline]
    pub fn is_positive(&self, row: usize) -> bool {
        self.class_of(row) == self.positive
    }

    pub fn labels(&self) -> Vec<bool> {
        (0..self.n_rows).map(|r| self.is_positive(r)).collect()
    }

    pub fn positive_label(&self) -> &str {
        &self.columns[self.decision_col()].levels[self.positive as usize]
    }

    /// The non-positive decision label, if the dictionary holds one.
    pub fn negative_label(&self) -> Option<&str> {
        self.columns[self.decision_col()]
            .levels
            .iter()
            .enumerate()
            .find(|(i, _)| *i as u32 != self.positive)
            .map(|(_, l)| l.as_str())
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = (0..self.n_rows).filter(|&r| self.is_positive(r)).count();
        (pos, self.n_rows - pos)
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_missing()).count()
    }

    /// Renders a cell as it would appear in CSV.
    pub fn format_cell(&self, col: usize, cell: Cell, missing: &str) -> String {
        match cell {
            Cell::Missing => missing.to_string(),
            Cell::Cat(code) => self.columns[col].levels[code as usize].clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_real(v),
        }
    }

    /// Ordering used for deterministic tie-breaks: categorical values by
    /// label text, integers and reals numerically.
    pub fn compare_values(&self, col: usize, a: Cell, b: Cell) -> Ordering {
        match (a, b) {
            (Cell::Cat(x), Cell::Cat(y)) => {
                let levels = &self.columns[col].levels;
                levels[x as usize].cmp(&levels[y as usize])
            }
            (Cell::Int(x), Cell::Int(y)) => x.cmp(&y),
            (Cell::Real(x), Cell::Real(y)) => x.total_cmp(&y),
            (Cell::Missing, Cell::Missing) => Ordering::Equal,
            (Cell::Missing, _) => Ordering::Greater,
            (_, Cell::Missing) => Ordering::Less,
            _ => unreachable!("mixed cell kinds in one column"),
        }
    }

    /// Records at `rows`, in that order. Dictionaries are shared with `self`.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut cells = Vec::with_capacity(rows.len() * self.n_cols());
        for &r in rows {
            cells.extend_from_slice(self.row(r));
        }
        Dataset {
            columns: self.columns.clone(),
            cells,
            n_rows: rows.len(),
            positive: self.positive,
        }
    }

    /// Keeps the feature columns whose `keep` flag is set plus the decision.
    pub fn project(&self, keep: &[bool]) -> Result<Dataset> {
        if keep.len() != self.n_features() {
            return Err(Error::arg(format!(
                "feature mask has {} bits, dataset has {} features",
                keep.len(),
                self.n_features()
            )));
        }
        if !keep.iter().any(|&k| k) {
            return Err(Error::arg("feature mask selects no columns"));
        }
        let cols: Vec<usize> = keep
            .iter()
            .enumerate()
            .filter(|(_, &k)| k)
            .map(|(i, _)| i)
            .chain(std::iter::once(self.decision_col()))
            .collect();
        let mut cells = Vec::with_capacity(self.n_rows * cols.len());
        for r in 0..self.n_rows {
            let row = self.row(r);
            cells.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(Dataset {
            columns: cols.iter().map(|&c| self.columns[c].clone()).collect(),
            cells,
            n_rows: self.n_rows,
            positive: self.positive,
        })
    }

    /// Same layout with replaced cells; used by imputers.
    pub(crate) fn with_cells(&self, cells: Vec<Cell>) -> Dataset {
        debug_assert_eq!(cells.len(), self.cells.len());
        Dataset {
            columns: self.columns.clone(),
            cells,
            n_rows: self.n_rows,
            positive: self.positive,
        }
    }

    pub(crate) fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Serializes to CSV with a header row.
    pub fn to_csv(&self, missing: &str) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for r in 0..self.n_rows {
            let row: Vec<String> = self
                .row(r)
                .iter()
                .enumerate()
                .map(|(c, &cell)| self.format_cell(c, cell, missing))
                .collect();
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v:?}")
}

/// Parses CSV text whose header must match `schema` column for column.
pub fn load_dataset(csv_text: &str, schema: &Schema, missing: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::data("input has no header row")),
    };
    let names: Vec<&str> = header.iter().collect();
    let expected: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
    if names != expected {
        return Err(Error::data(format!(
            "header [{}] does not match schema [{}]",
            names.join(","),
            expected.join(",")
        )));
    }
    let rows = records.collect::<std::result::Result<Vec<_>, _>>()?;
    Dataset::from_tokens(schema, rows.iter().map(|r| r.iter()), missing)
}

/// Record-to-fold mapping for stratified k-fold cross validation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub assignment: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Shuffles each class by `seed` and deals its records round-robin over
/// the folds, continuing the deal position across classes so fold sizes
/// stay within one record of each other.
pub fn stratified_kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::arg(format!("k must be at least 2, got {k}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(), Vec::new()];
    for r in 0..dataset.n_rows() {
        by_class[usize::from(!dataset.is_positive(r))].push(r);
    }
    let minority = by_class.iter().map(Vec::len).min().unwrap_or(0);
    if k > minority {
        return Err(Error::arg(format!(
            "k = {k} exceeds the minority class count ({minority})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; dataset.n_rows()];
    let mut next = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &r in members.iter() {
            assignment[r] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, assignment })
}

/// Replaces exactly `round(rate * m * (n-1))` uniformly chosen feature
/// cells with `Missing`.
pub fn inject_missing(dataset: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::arg(format!("missing rate {rate} outside [0, 1]")));
    }
    if dataset.missing_count() > 0 {
        return Err(Error::data(
            "dataset already contains missing cells; injection needs a complete table",
        ));
    }
    let nf = dataset.n_features();
    let total = dataset.n_rows() * nf;
    let count = (rate * total as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = dataset.cells().to_vec();
    let n = dataset.n_cols();
    for idx in index::sample(&mut rng, total, count.min(total)).into_iter() {
        let (r, c) = (idx / nf, idx % nf);
        cells[r * n + c] = Cell::Missing;
    }
    Ok(dataset.with_cells(cells))
}
