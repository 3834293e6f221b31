//! Independent reference implementations used as test oracles. They work
//! on plain strings and floats, not on the library's interned cells, and
//! favor literal transcription of the rules over speed.

#![allow(dead_code)]

use nm_core::tabular::{ColumnKind, ColumnSpec, Dataset, Schema};
use rand::Rng;

/// A small mixed-type table in raw form. `None` marks a missing cell.
#[derive(Clone, Debug)]
pub struct Table {
    pub kinds: Vec<ColumnKind>,
    pub cells: Vec<Vec<Option<String>>>,
    pub class: Vec<String>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn schema(&self) -> Schema {
        let mut columns: Vec<ColumnSpec> = self
            .kinds
            .iter()
            .enumerate()
            .map(|(i, &kind)| ColumnSpec {
                name: format!("C{}", i + 1),
                kind,
            })
            .collect();
        columns.push(ColumnSpec {
            name: "class".into(),
            kind: ColumnKind::Decision,
        });
        Schema::new(columns, Some("pos".into())).unwrap()
    }

    pub fn dataset(&self) -> Dataset {
        let rows: Vec<Vec<String>> = self
            .cells
            .iter()
            .zip(&self.class)
            .map(|(row, c)| {
                let mut out: Vec<String> = row
                    .iter()
                    .map(|v| v.clone().unwrap_or_else(|| "?".into()))
                    .collect();
                out.push(c.clone());
                out
            })
            .collect();
        Dataset::from_tokens(&self.schema(), rows, "?").unwrap()
    }
}

/// Random table with `2..=8` records, `1..=4` features of random kinds and
/// at most three missing cells, every column observed at least once.
pub fn random_table<R: Rng>(rng: &mut R) -> Table {
    loop {
        let m = rng.gen_range(2..=8);
        let n = rng.gen_range(1..=4);
        let kinds: Vec<ColumnKind> = (0..n)
            .map(|_| match rng.gen_range(0..3) {
                0 => ColumnKind::Categorical,
                1 => ColumnKind::Integer,
                _ => ColumnKind::Real,
            })
            .collect();
        let mut cells: Vec<Vec<Option<String>>> = (0..m)
            .map(|_| {
                kinds
                    .iter()
                    .map(|k| {
                        Some(match k {
                            ColumnKind::Categorical => ["a", "b", "c"][rng.gen_range(0..3)].to_string(),
                            ColumnKind::Integer => rng.gen_range(0..4).to_string(),
                            _ => format!("{:?}", rng.gen_range(1..=40) as f64 / 4.0),
                        })
                    })
                    .collect()
            })
            .collect();
        let class: Vec<String> = (0..m)
            .map(|_| if rng.gen_bool(0.5) { "pos" } else { "neg" }.to_string())
            .collect();
        let holes = rng.gen_range(0..=3.min(m * n));
        for _ in 0..holes {
            let (r, c) = (rng.gen_range(0..m), rng.gen_range(0..n));
            cells[r][c] = None;
        }
        let observed = (0..n).all(|c| cells.iter().any(|row| row[c].is_some()));
        if observed {
            return Table { kinds, cells, class };
        }
    }
}

fn real(s: &str) -> f64 {
    s.parse().unwrap()
}

/// Records of class `c` holding value `v` in column `l`.
fn class_frequency(t: &Table, c: &str, l: usize, v: &str) -> usize {
    (0..t.rows())
        .filter(|&j| t.class[j] == c && t.cells[j][l].as_deref() == Some(v))
        .count()
}

/// Mean of the observed values of real column `l` within class `c`.
fn class_mean(t: &Table, c: &str, l: usize) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0;
    for j in 0..t.rows() {
        if t.class[j] == c {
            if let Some(v) = &t.cells[j][l] {
                sum += real(v);
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Per-column index between records `i` and `k`.
pub fn index(t: &Table, i: usize, k: usize, l: usize) -> f64 {
    if i == k {
        return 0.0;
    }
    let (Some(vi), Some(vk)) = (&t.cells[i][l], &t.cells[k][l]) else {
        return 0.0;
    };
    let same = t.class[i] == t.class[k];
    if t.kinds[l] == ColumnKind::Real {
        let denom = if same {
            class_mean(t, &t.class[i], l)
        } else {
            match (class_mean(t, &t.class[i], l), class_mean(t, &t.class[k], l)) {
                (Some(a), Some(b)) => Some(a.min(b)),
                _ => None,
            }
        };
        match denom {
            Some(d) if d != 0.0 => {
                let (a, b) = (real(vi) / d, real(vk) / d);
                if same {
                    a.min(b)
                } else {
                    a.max(b)
                }
            }
            _ => 0.0,
        }
    } else {
        let fi = class_frequency(t, &t.class[i], l, vi) as f64;
        let fk = class_frequency(t, &t.class[k], l, vk) as f64;
        if fi == 0.0 || fk == 0.0 {
            return 0.0;
        }
        if same {
            (fi / fk).min(fk / fi)
        } else {
            (fi / fk).max(fk / fi)
        }
    }
}

pub fn distance(t: &Table, i: usize, k: usize) -> f64 {
    let mut sum = 0.0;
    for l in 0..t.kinds.len() {
        let v = index(t, i, k, l);
        sum += v * v;
    }
    sum.sqrt()
}

/// Standard scores with the sample standard deviation; zero spread or a
/// single value gives zeros.
pub fn z_scores(d: &[f64]) -> Vec<f64> {
    let n = d.len();
    if n == 1 {
        return vec![0.0];
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return vec![0.0; n];
    }
    let sd = var.sqrt();
    d.iter().map(|x| (x - mean) / sd).collect()
}

pub fn neighbors(t: &Table, r: usize) -> Vec<usize> {
    let others: Vec<usize> = (0..t.rows()).filter(|&j| j != r).collect();
    if others.is_empty() {
        return others;
    }
    let d: Vec<f64> = others.iter().map(|&j| distance(t, r, j)).collect();
    let z = z_scores(&d);
    others
        .into_iter()
        .zip(z)
        .filter(|(_, z)| *z <= 0.0)
        .map(|(j, _)| j)
        .collect()
}

fn fill(t: &Table, r: usize, l: usize, sources: &[usize]) -> String {
    let values: Vec<&str> = sources
        .iter()
        .map(|&j| t.cells[j][l].as_deref().unwrap())
        .collect();
    match t.kinds[l] {
        ColumnKind::Real => {
            let mut sum = 0.0;
            for v in &values {
                sum += real(v);
            }
            format!("{:?}", sum / values.len() as f64)
        }
        kind => {
            let mut distinct: Vec<&str> = values.clone();
            distinct.sort();
            distinct.dedup();
            let count = |v: &str| values.iter().filter(|&&x| x == v).count();
            let own = |v: &str| class_frequency(t, &t.class[r], l, v);
            let smaller = |a: &str, b: &str| {
                if kind == ColumnKind::Integer {
                    a.parse::<i64>().unwrap() < b.parse::<i64>().unwrap()
                } else {
                    a < b
                }
            };
            let mut best = distinct[0];
            for &v in &distinct[1..] {
                let key_v = (count(v), own(v));
                let key_b = (count(best), own(best));
                if key_v > key_b || (key_v == key_b && smaller(v, best)) {
                    best = v;
                }
            }
            best.to_string()
        }
    }
}

/// Every cell of the imputed table, rendered as text.
pub fn impute(t: &Table) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = t
        .cells
        .iter()
        .map(|row| row.iter().map(|v| v.clone().unwrap_or_default()).collect())
        .collect();
    for r in 0..t.rows() {
        if t.cells[r].iter().all(Option::is_some) {
            continue;
        }
        let near = neighbors(t, r);
        for l in 0..t.kinds.len() {
            if t.cells[r][l].is_some() {
                continue;
            }
            let observing = |rows: Vec<usize>| -> Vec<usize> {
                rows.into_iter().filter(|&j| t.cells[j][l].is_some()).collect()
            };
            let mut sources = observing(near.clone());
            if sources.is_empty() {
                sources = observing((0..t.rows()).filter(|&j| t.class[j] == t.class[r]).collect());
            }
            if sources.is_empty() {
                sources = observing((0..t.rows()).collect());
            }
            out[r][l] = fill(t, r, l, &sources);
        }
    }
    out
}

/// Renders a library dataset's feature cells like [`impute`] does.
pub fn render(ds: &Dataset) -> Vec<Vec<String>> {
    (0..ds.n_rows())
        .map(|r| {
            (0..ds.n_features())
                .map(|c| ds.format_cell(c, ds.cell(r, c), ""))
                .collect()
        })
        .collect()
}

/// Signed-rank statistics by direct counting and the two-sided p-value by
/// enumerating all sign assignments.
pub fn wilcoxon(diffs: &[f64]) -> (f64, f64, usize, f64) {
    let d: Vec<f64> = diffs.iter().copied().filter(|&x| x != 0.0).collect();
    let n = d.len();
    let rank = |i: usize| {
        let a = d[i].abs();
        let below = d.iter().filter(|x| x.abs() < a).count() as f64;
        let equal = d.iter().filter(|x| x.abs() == a).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let ranks: Vec<f64> = (0..n).map(rank).collect();
    let w_plus: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let w_minus: f64 = (0..n).filter(|&i| d[i] < 0.0).map(|i| ranks[i]).sum();
    if n == 0 {
        return (0.0, 0.0, 0, 1.0);
    }
    let w = w_plus.min(w_minus);
    let mut at_most = 0u64;
    for signs in 0u64..(1 << n) {
        let s: f64 = (0..n).filter(|&i| signs >> i & 1 == 1).map(|i| ranks[i]).sum();
        if s <= w + 1e-9 {
            at_most += 1;
        }
    }
    let p = (2.0 * at_most as f64 / (1u64 << n) as f64).min(1.0);
    (w_plus, w_minus, n, p)
}

/// ROC over every distinct score plus the two end points, as
/// `(threshold, fpr, tpr)` sorted by threshold descending.
pub fn roc(scores: &[(f64, bool)]) -> Vec<(f64, f64, f64)> {
    let pos = scores.iter().filter(|s| s.1).count() as f64;
    let neg = scores.len() as f64 - pos;
    let mut thresholds: Vec<f64> = scores.iter().map(|s| s.0).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut out = vec![(f64::INFINITY, 0.0, 0.0)];
    for t in thresholds {
        let tp = scores.iter().filter(|s| s.1 && s.0 >= t).count() as f64;
        let fp = scores.iter().filter(|s| !s.1 && s.0 >= t).count() as f64;
        out.push((t, fp / neg, tp / pos));
    }
    out.push((f64::NEG_INFINITY, 1.0, 1.0));
    out
}

/// Area under the ROC as the probability that a random positive outscores
/// a random negative, ties counting one half.
pub fn auc(scores: &[(f64, bool)]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for p in scores.iter().filter(|s| s.1) {
        for q in scores.iter().filter(|s| !s.1) {
            pairs += 1.0;
            if p.0 > q.0 {
                wins += 1.0;
            } else if p.0 == q.0 {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Closest point to (0, 1) among the finite thresholds of [`roc`]; ties go
/// to the larger threshold.
pub fn operating_point(scores: &[(f64, bool)]) -> (f64, f64, f64) {
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for (t, fpr, tpr) in roc(scores) {
        if !t.is_finite() {
            continue;
        }
        let d = (fpr * fpr + (1.0 - tpr) * (1.0 - tpr)).sqrt();
        if best.map_or(true, |b| d < b.3) {
            best = Some((t, fpr, tpr, d));
        }
    }
    let b = best.unwrap();
    (b.0, b.1, b.2)
}
