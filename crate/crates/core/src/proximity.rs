//! Class-conditional proximity between records.
//!
//! For a feature column `l` and two records `i != k` the column index is
//!
//! | decisions | column kind          | index                                   |
//! |-----------|----------------------|-----------------------------------------|
//! | same      | categorical, integer | `min(f_i / f_k, f_k / f_i)`             |
//! | same      | real                 | `min(x_i / mean_c, x_k / mean_c)`       |
//! | differ    | categorical, integer | `max(f_i / f_k, f_k / f_i)`             |
//! | differ    | real                 | `max(x_i / lambda, x_k / lambda)`       |
//!
//! where `f_i` is how often record `i`'s value occurs in column `l` among
//! records of `i`'s own decision class, `mean_c` is the class mean of the
//! column and `lambda` is the smaller of the two class means. Means and
//! frequencies only count cells observed in column `l`. A column where
//! either record is missing, a zero frequency and a zero denominator all
//! contribute 0. The record distance is the Euclidean norm of the column
//! indices.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::tabular::{Cell, ColumnKind, Dataset};

/// Precomputed per-class frequency tables and means for one dataset.
#[derive(Debug)]
pub struct IndexContext<'a> {
    data: &'a Dataset,
    kinds: Vec<ColumnKind>,
    /// Decision code per record.
    classes: Vec<u32>,
    /// `m x (n-1)`, one row per record: the own-class frequency of a
    /// discrete cell (0 if missing) or the value of a real cell (NaN if
    /// missing).
    values: Vec<f64>,
    /// `(n-1) x 2`: per column, per decision code, mean of observed cells.
    class_means: Vec<[Option<f64>; 2]>,
    /// Real-column denominators per decision code and across codes; 0
    /// where a mean is undefined.
    same_denom: Vec<[f64; 2]>,
    cross_denom: Vec<f64>,
    /// `(n-1)`: per column, `(class code, value key) -> count`.
    freq_tables: Vec<HashMap<(u32, i64), usize>>,
}

fn value_key(cell: Cell) -> Option<i64> {
    match cell {
        Cell::Cat(code) => Some(i64::from(code)),
        Cell::Int(v) => Some(v),
        _ => None,
    }
}

impl<'a> IndexContext<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        let m = data.n_rows();
        let nf = data.n_features();
        let kinds: Vec<ColumnKind> = data.columns()[..nf].iter().map(|c| c.kind).collect();

        let mut freq_tables = vec![HashMap::new(); nf];
        let mut sums = vec![[(0.0f64, 0usize); 2]; nf];
        for r in 0..m {
            let class = data.class_of(r);
            for (l, table) in freq_tables.iter_mut().enumerate() {
                match data.cell(r, l) {
                    Cell::Missing => {}
                    Cell::Real(v) => {
                        let s = &mut sums[l][class as usize];
                        s.0 += v;
                        s.1 += 1;
                    }
                    cell => {
                        let key = value_key(cell).expect("discrete cell");
                        *table.entry((class, key)).or_insert(0) += 1;
                    }
                }
            }
        }
        let class_means: Vec<[Option<f64>; 2]> = sums
            .iter()
            .map(|per_class| {
                let mean = |(s, n): (f64, usize)| (n > 0).then(|| s / n as f64);
                [mean(per_class[0]), mean(per_class[1])]
            })
            .collect();

        let classes: Vec<u32> = (0..m).map(|r| data.class_of(r)).collect();
        let mut values = vec![0.0; m * nf];
        for r in 0..m {
            for l in 0..nf {
                values[r * nf + l] = match data.cell(r, l) {
                    Cell::Missing if kinds[l] == ColumnKind::Real => f64::NAN,
                    Cell::Missing => 0.0,
                    Cell::Real(v) => v,
                    cell => {
                        let key = value_key(cell).expect("discrete cell");
                        freq_tables[l][&(classes[r], key)] as f64
                    }
                };
            }
        }
        let same_denom = class_means
            .iter()
            .map(|m: &[Option<f64>; 2]| [m[0].unwrap_or(0.0), m[1].unwrap_or(0.0)])
            .collect();
        let cross_denom = class_means
            .iter()
            .map(|m: &[Option<f64>; 2]| match (m[0], m[1]) {
                (Some(p), Some(q)) => p.min(q),
                _ => 0.0,
            })
            .collect();

        IndexContext {
            data,
            kinds,
            classes,
            values,
            class_means,
            same_denom,
            cross_denom,
            freq_tables,
        }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.data
    }

    /// Number of records of decision code `class` observed with value `cell`
    /// in column `col`.
    pub fn frequency(&self, class: u32, col: usize, cell: Cell) -> usize {
        value_key(cell)
            .and_then(|key| self.freq_tables[col].get(&(class, key)).copied())
            .unwrap_or(0)
    }

    /// Mean of the observed cells of real column `col` within decision code
    /// `class`.
    pub fn class_mean(&self, class: u32, col: usize) -> Option<f64> {
        self.class_means[col][class as usize]
    }

    /// Per-column index between records `i` and `k` at feature column `l`.
    pub fn column_index(&self, i: usize, k: usize, l: usize) -> Result<f64> {
        let nf = self.data.n_features();
        if l >= nf {
            return Err(Error::arg(format!(
                "column {l} is not a feature column (dataset has {nf})"
            )));
        }
        let m = self.data.n_rows();
        if i >= m || k >= m {
            return Err(Error::arg(format!(
                "record index out of range ({i}, {k}) for {m} records"
            )));
        }
        if self.kinds[l] == ColumnKind::Real && i != k {
            let observed = |r: usize| !self.data.cell(r, l).is_missing();
            if observed(i) && observed(k) {
                for r in [i, k] {
                    let class = self.data.class_of(r);
                    if self.class_mean(class, l).is_none() {
                        return Err(Error::degenerate(format!(
                            "no observed values in column {l} for class code {class}"
                        )));
                    }
                }
            }
        }
        Ok(self.index_unchecked(i, k, l))
    }

    #[inline]
    fn index_unchecked(&self, i: usize, k: usize, l: usize) -> f64 {
        if i == k {
            return 0.0;
        }
        let nf = self.kinds.len();
        self.index_at(i, k, l, self.values[i * nf + l], self.values[k * nf + l])
    }

    #[inline]
    fn index_at(&self, i: usize, k: usize, l: usize, vi: f64, vk: f64) -> f64 {
        let ci = self.classes[i];
        let same_class = ci == self.classes[k];
        if self.kinds[l].is_discrete() {
            if vi == 0.0 || vk == 0.0 {
                return 0.0;
            }
            let (a, b) = (vi / vk, vk / vi);
            if same_class {
                a.min(b)
            } else {
                a.max(b)
            }
        } else {
            if vi.is_nan() || vk.is_nan() {
                return 0.0;
            }
            let d = if same_class {
                self.same_denom[l][ci as usize]
            } else {
                self.cross_denom[l]
            };
            if d == 0.0 {
                return 0.0;
            }
            let (a, b) = (vi / d, vk / d);
            if same_class {
                a.min(b)
            } else {
                a.max(b)
            }
        }
    }

    /// Euclidean norm of the column indices over all feature columns.
    #[inline]
    pub fn record_distance(&self, i: usize, k: usize) -> f64 {
        if i == k {
            return 0.0;
        }
        let nf = self.kinds.len();
        let row_i = &self.values[i * nf..(i + 1) * nf];
        let row_k = &self.values[k * nf..(k + 1) * nf];
        let mut sum = 0.0;
        for l in 0..nf {
            let v = self.index_at(i, k, l, row_i[l], row_k[l]);
            sum += v * v;
        }
        sum.sqrt()
    }

    /// Distances from `source` to every other record, with z-scores.
    pub fn distance_row(&self, source: usize) -> Result<DistanceRow> {
        let m = self.data.n_rows();
        if source >= m {
            return Err(Error::arg(format!(
                "record {source} out of range for {m} records"
            )));
        }
        if m < 2 {
            return Err(Error::degenerate(
                "a distance row needs at least two records",
            ));
        }
        let others: Vec<usize> = (0..m).filter(|&j| j != source).collect();
        let distances: Vec<f64> = others
            .iter()
            .map(|&j| self.record_distance(source, j))
            .collect();
        let z = z_scores(&distances)?;
        let mean = distances.iter().sum::<f64>() / distances.len() as f64;
        Ok(DistanceRow {
            source,
            others,
            distances,
            z,
            mean,
        })
    }
}

/// Distances from one record to all others.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceRow {
    pub source: usize,
    /// Record indices aligned with `distances` and `z`.
    pub others: Vec<usize>,
    pub distances: Vec<f64>,
    pub z: Vec<f64>,
    pub mean: f64,
}

impl DistanceRow {
    /// Records whose distance z-score is non-positive, in record order.
    pub fn nearest(&self) -> Vec<usize> {
        self.others
            .iter()
            .zip(&self.z)
            .filter(|(_, &z)| z <= 0.0)
            .map(|(&j, _)| j)
            .collect()
    }
}

/// Standardizes distances by their mean and sample standard deviation.
/// A single value or zero spread yields all zeros.
pub fn z_scores(distances: &[f64]) -> Result<Vec<f64>> {
    if distances.is_empty() {
        return Err(Error::arg("z-scores of an empty list"));
    }
    let n = distances.len();
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let mean = distances.iter().sum::<f64>() / n as f64;
    let ss: f64 = distances.iter().map(|d| (d - mean) * (d - mean)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    if sd == 0.0 {
        return Ok(vec![0.0; n]);
    }
    Ok(distances.iter().map(|d| (d - mean) / sd).collect())
}

pub fn column_index(data: &Dataset, i: usize, k: usize, l: usize) -> Result<f64> {
    IndexContext::new(data).column_index(i, k, l)
}

pub fn record_distance(data: &Dataset, i: usize, k: usize) -> Result<f64> {
    let m = data.n_rows();
    if i >= m || k >= m {
        return Err(Error::arg(format!(
            "record index out of range ({i}, {k}) for {m} records"
        )));
    }
    Ok(IndexContext::new(data).record_distance(i, k))
}

/// Full pairwise distance matrix as `row,col,distance` CSV lines.
pub fn distance_matrix_csv(data: &Dataset) -> String {
    let ctx = IndexContext::new(data);
    let mut out = String::from("row,col,distance\n");
    for i in 0..data.n_rows() {
        for k in 0..data.n_rows() {
            out.push_str(&format!("{i},{k},{:?}\n", ctx.record_distance(i, k)));
        }
    }
    out
}
