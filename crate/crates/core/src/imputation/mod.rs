//! Missing-value imputation.
//!
//! [`impute`] fills each missing cell from the record's z-score-selected
//! neighbors under the class-conditional proximity of
//! [`crate::proximity`]: the mode for categorical and integer columns, the
//! mean for real columns. All distances and fills are computed from the
//! input table, so imputations never see each other's output.
//!
//! [`impute_mean_mode`] and [`impute_knn`] are the baselines used by the
//! comparison harness in [`compare`].

pub mod compare;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::proximity::IndexContext;
use crate::tabular::{Cell, ColumnKind, Dataset};

pub use compare::{compare_imputers, ComparisonReport, CompareConfig, ImputerKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillRule {
    Mode,
    Mean,
    /// No neighbor observed the column; filled from the record's class.
    ClassFallback,
    /// Nothing in the record's class observed the column either.
    GlobalFallback,
}

impl FillRule {
    pub fn as_str(self) -> &'static str {
        match self {
            FillRule::Mode => "mode",
            FillRule::Mean => "mean",
            FillRule::ClassFallback => "class-fallback",
            FillRule::GlobalFallback => "global-fallback",
        }
    }
}

impl fmt::Display for FillRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImputedCell {
    pub row: usize,
    pub col: usize,
    /// Records whose values produced the fill.
    pub sources: Vec<usize>,
    pub value: Cell,
    pub rule: FillRule,
}

/// One entry per originally missing feature cell, in row-major order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ImputationLog {
    pub entries: Vec<ImputedCell>,
}

impl ImputationLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `row,column,value,rule,sources` lines; sources are `;`-separated
    /// zero-based record indices.
    pub fn to_text(&self, data: &Dataset) -> String {
        let mut out = String::from("row,column,value,rule,sources\n");
        for e in &self.entries {
            let sources: Vec<String> = e.sources.iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.row,
                data.column(e.col).name,
                data.format_cell(e.col, e.value, "?"),
                e.rule,
                sources.join(";")
            ));
        }
        out
    }
}

fn check_columns_observable(data: &Dataset) -> Result<()> {
    if data.n_rows() == 0 {
        return Ok(());
    }
    for l in 0..data.n_features() {
        if (0..data.n_rows()).all(|r| data.cell(r, l).is_missing()) {
            return Err(Error::data(format!(
                "column `{}` is missing in every record; nothing to impute from",
                data.column(l).name
            )));
        }
    }
    Ok(())
}

/// Most frequent value of column `col` over `rows`. Ties go to the value
/// that `tie_rank` orders first, then to the smallest value.
fn mode_of<F>(data: &Dataset, col: usize, rows: &[usize], tie_rank: F) -> Option<Cell>
where
    F: Fn(Cell) -> usize,
{
    let mut counts: Vec<(Cell, usize)> = Vec::new();
    let mut slot: HashMap<i64, usize> = HashMap::new();
    for &r in rows {
        let cell = data.cell(r, col);
        let key = match cell {
            Cell::Cat(c) => i64::from(c),
            Cell::Int(v) => v,
            _ => continue,
        };
        let i = *slot.entry(key).or_insert_with(|| {
            counts.push((cell, 0));
            counts.len() - 1
        });
        counts[i].1 += 1;
    }
    counts
        .into_iter()
        .max_by(|(a, ca), (b, cb)| {
            ca.cmp(cb)
                .then_with(|| tie_rank(*a).cmp(&tie_rank(*b)))
                .then_with(|| data.compare_values(col, *b, *a))
        })
        .map(|(cell, _)| cell)
}

fn mean_of(data: &Dataset, col: usize, rows: &[usize]) -> Option<Cell> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for &r in rows {
        if let Cell::Real(v) = data.cell(r, col) {
            sum += v;
            n += 1;
        }
    }
    (n > 0).then(|| Cell::Real(sum / n as f64))
}

fn observed_in(data: &Dataset, col: usize, rows: impl IntoIterator<Item = usize>) -> Vec<usize> {
    rows.into_iter()
        .filter(|&r| !data.cell(r, col).is_missing())
        .collect()
}

/// Nearest-neighbor imputation under the class-conditional proximity.
pub fn impute(data: &Dataset) -> Result<(Dataset, ImputationLog)> {
    if data.missing_count() == 0 {
        return Ok((data.clone(), ImputationLog::default()));
    }
    check_columns_observable(data)?;

    let ctx = IndexContext::new(data);
    let n = data.n_cols();
    let mut cells = data.cells().to_vec();
    let mut log = ImputationLog::default();
    for r in 0..data.n_rows() {
        let missing: Vec<usize> = (0..data.n_features())
            .filter(|&l| data.cell(r, l).is_missing())
            .collect();
        if missing.is_empty() {
            continue;
        }
        let neighbors = if data.n_rows() >= 2 {
            ctx.distance_row(r)?.nearest()
        } else {
            Vec::new()
        };
        let class = data.class_of(r);
        for l in missing {
            let entry = fill_cell(&ctx, r, l, class, &neighbors);
            cells[r * n + l] = entry.value;
            log.entries.push(entry);
        }
    }
    Ok((data.with_cells(cells), log))
}

fn fill_cell(ctx: &IndexContext, r: usize, l: usize, class: u32, neighbors: &[usize]) -> ImputedCell {
    let data = ctx.dataset();
    let kind = data.column(l).kind;
    let fill = |rows: &[usize]| -> Option<Cell> {
        match kind {
            ColumnKind::Real => mean_of(data, l, rows),
            // Ties favor the value most frequent in the record's own class.
            _ => mode_of(data, l, rows, |cell| ctx.frequency(class, l, cell)),
        }
    };

    let contributing = observed_in(data, l, neighbors.iter().copied());
    let (sources, rule) = if !contributing.is_empty() {
        let rule = if kind == ColumnKind::Real {
            FillRule::Mean
        } else {
            FillRule::Mode
        };
        (contributing, rule)
    } else {
        let same_class =
            observed_in(data, l, (0..data.n_rows()).filter(|&j| data.class_of(j) == class));
        if !same_class.is_empty() {
            (same_class, FillRule::ClassFallback)
        } else {
            (observed_in(data, l, 0..data.n_rows()), FillRule::GlobalFallback)
        }
    };
    let value = fill(&sources).expect("source set observes the column");
    ImputedCell {
        row: r,
        col: l,
        sources,
        value,
        rule,
    }
}

/// Global column mean (real) or mode (categorical, integer; ties to the
/// smallest value).
pub fn impute_mean_mode(data: &Dataset) -> Result<Dataset> {
    if data.missing_count() == 0 {
        return Ok(data.clone());
    }
    check_columns_observable(data)?;
    let n = data.n_cols();
    let mut cells = data.cells().to_vec();
    for l in 0..data.n_features() {
        let observed = observed_in(data, l, 0..data.n_rows());
        if observed.len() == data.n_rows() {
            continue;
        }
        let value = match data.column(l).kind {
            ColumnKind::Real => mean_of(data, l, &observed),
            _ => mode_of(data, l, &observed, |_| 0),
        }
        .expect("column has observed cells");
        for r in 0..data.n_rows() {
            if data.cell(r, l).is_missing() {
                cells[r * n + l] = value;
            }
        }
    }
    Ok(data.with_cells(cells))
}

/// k-nearest-neighbor imputation. Neighbors are the `k` closest records
/// under the class-conditional proximity (columns missing in either record
/// contribute nothing), ties broken by record index. If none of the `k`
/// observes the column the global mean or mode is used.
pub fn impute_knn(data: &Dataset, k: usize) -> Result<Dataset> {
    if k == 0 {
        return Err(Error::arg("k must be positive"));
    }
    if data.missing_count() == 0 {
        return Ok(data.clone());
    }
    if k >= data.n_rows() {
        return Err(Error::arg(format!(
            "k = {k} must be smaller than the record count {}",
            data.n_rows()
        )));
    }
    check_columns_observable(data)?;

    let ctx = IndexContext::new(data);
    let n = data.n_cols();
    let mut cells = data.cells().to_vec();
    for r in 0..data.n_rows() {
        if !(0..data.n_features()).any(|l| data.cell(r, l).is_missing()) {
            continue;
        }
        let mut ranked: Vec<(f64, usize)> = (0..data.n_rows())
            .filter(|&j| j != r)
            .map(|j| (ctx.record_distance(r, j), j))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let nearest: Vec<usize> = ranked.iter().take(k).map(|&(_, j)| j).collect();
        for l in 0..data.n_features() {
            if !data.cell(r, l).is_missing() {
                continue;
            }
            let mut sources = observed_in(data, l, nearest.iter().copied());
            if sources.is_empty() {
                sources = observed_in(data, l, 0..data.n_rows());
            }
            let value = match data.column(l).kind {
                ColumnKind::Real => mean_of(data, l, &sources),
                _ => mode_of(data, l, &sources, |_| 0),
            }
            .expect("column has observed cells");
            cells[r * n + l] = value;
        }
    }
    Ok(data.with_cells(cells))
}
