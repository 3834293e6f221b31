//! Imputer comparison: inject missingness into a complete table, impute
//! with each method, score a cross-validated tree on the result and test
//! the proximity imputer against each baseline with matched pairs.

use std::fmt::Write as _;

use serde::Serialize;

use crate::adtree::AdtConfig;
use crate::error::{Error, Result};
use crate::metrics::{pooled_cv_scores, wilcoxon_signed_rank, Wilcoxon};
use crate::tabular::{inject_missing, Dataset};

use super::{impute, impute_knn, impute_mean_mode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImputerKind {
    Proximity,
    MeanMode,
    Knn(usize),
}

impl ImputerKind {
    pub fn name(&self) -> String {
        match self {
            ImputerKind::Proximity => "nm".to_string(),
            ImputerKind::MeanMode => "mean-mode".to_string(),
            ImputerKind::Knn(k) => format!("knn{k}"),
        }
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        match self {
            ImputerKind::Proximity => impute(data).map(|(d, _)| d),
            ImputerKind::MeanMode => impute_mean_mode(data),
            ImputerKind::Knn(k) => impute_knn(data, *k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareConfig {
    pub folds: usize,
    pub adt: AdtConfig,
    pub knn_k: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            folds: 10,
            adt: AdtConfig::default(),
            knn_k: 5,
        }
    }
}

/// Fewest (rate, seed) pairs accepted by [`compare_imputers`].
pub const MIN_PAIRS: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub rate: f64,
    pub seed: u64,
    /// Accuracy per method, aligned with [`ComparisonReport::methods`].
    pub accuracy: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairedTest {
    pub baseline: String,
    #[serde(flatten)]
    pub result: Wilcoxon,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub methods: Vec<String>,
    pub rows: Vec<ComparisonRow>,
    /// Proximity imputer against each baseline; positive ranks favor it.
    pub tests: Vec<PairedTest>,
}

impl ComparisonReport {
    /// Accuracy table followed by the rank-sum summary block.
    pub fn to_table(&self) -> String {
        let mut out = format!("rate,seed,{}\n", self.methods.join(","));
        for row in &self.rows {
            let accs: Vec<String> = row.accuracy.iter().map(|a| format!("{a:.6}")).collect();
            let _ = writeln!(out, "{},{},{}", row.rate, row.seed, accs.join(","));
        }
        out.push('\n');
        out.push_str("comparison,rank_sum_plus,rank_sum_minus,pairs,p_value\n");
        for t in &self.tests {
            let _ = writeln!(
                out,
                "{} vs {},{:.1},{:.1},{},{:.6}",
                self.methods[0], t.baseline, t.result.w_plus, t.result.w_minus, t.result.n, t.result.p_value
            );
        }
        out
    }
}

/// Runs every (rate, seed) pair. The seed drives both the injected
/// missingness and the fold assignment, so all methods in a pair are scored
/// on identical folds.
pub fn compare_imputers(
    complete: &Dataset,
    rates: &[f64],
    seeds: &[u64],
    cfg: &CompareConfig,
) -> Result<ComparisonReport> {
    let pairs = rates.len() * seeds.len();
    if pairs < MIN_PAIRS {
        return Err(Error::arg(format!(
            "{pairs} (rate, seed) pairs given; at least {MIN_PAIRS} are needed for a paired test"
        )));
    }
    let methods = [
        ImputerKind::Proximity,
        ImputerKind::MeanMode,
        ImputerKind::Knn(cfg.knn_k),
    ];
    let mut rows = Vec::with_capacity(pairs);
    for &rate in rates {
        for &seed in seeds {
            let damaged = inject_missing(complete, rate, seed)?;
            let accuracy = methods
                .iter()
                .map(|m| {
                    let filled = m.apply(&damaged)?;
                    Ok(pooled_cv_scores(&filled, cfg.folds, &cfg.adt, seed)?.accuracy())
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(ComparisonRow {
                rate,
                seed,
                accuracy,
            });
        }
    }
    let column = |i: usize| rows.iter().map(|r| r.accuracy[i]).collect::<Vec<f64>>();
    let ours = column(0);
    let tests = (1..methods.len())
        .map(|i| {
            Ok(PairedTest {
                baseline: methods[i].name(),
                result: wilcoxon_signed_rank(&ours, &column(i))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        methods: methods.iter().map(ImputerKind::name).collect(),
        rows,
        tests,
    })
}
