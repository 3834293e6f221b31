//! Evaluation: confusion counts, pooled cross-validated scores, quantile
//! threshold ROC curves with trapezoidal AUC, the operating point closest
//! to (0, 1), the Wilcoxon matched-pairs signed-rank test and an ordinary
//! least-squares line fit.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::adtree::{self, AdtConfig};
use crate::error::{Error, Result};
use crate::tabular::{stratified_kfold, Dataset, FoldAssignment};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Counts outcomes; `true` is the positive class in both slices.
pub fn confusion(labels: &[bool], predictions: &[bool]) -> Result<Confusion> {
    if labels.len() != predictions.len() || labels.is_empty() {
        return Err(Error::arg(format!(
            "confusion needs equal, non-empty inputs (got {} labels, {} predictions)",
            labels.len(),
            predictions.len()
        )));
    }
    let mut c = Confusion::default();
    for (&actual, &predicted) in labels.iter().zip(predictions) {
        match (actual, predicted) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rates {
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
}

pub fn basic_rates(c: &Confusion) -> Result<Rates> {
    if c.tp + c.fn_ == 0 {
        return Err(Error::degenerate("sensitivity undefined: no positive records"));
    }
    if c.tn + c.fp == 0 {
        return Err(Error::degenerate("specificity undefined: no negative records"));
    }
    Ok(Rates {
        sensitivity: c.tp as f64 / (c.tp + c.fn_) as f64,
        specificity: c.tn as f64 / (c.tn + c.fp) as f64,
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Score {
    pub row: usize,
    pub fold: usize,
    pub probability: f64,
    /// Class from the margin sign (majority class on a zero margin).
    pub predicted: bool,
    pub actual: bool,
}

/// Held-out scores pooled over every fold.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScorePool {
    pub scores: Vec<Score>,
}

impl ScorePool {
    pub fn from_pairs(pairs: &[(f64, bool)]) -> Self {
        ScorePool {
            scores: pairs
                .iter()
                .enumerate()
                .map(|(row, &(probability, actual))| Score {
                    row,
                    fold: 0,
                    probability,
                    predicted: probability >= 0.5,
                    actual,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.scores.iter().map(|s| s.actual).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.probability).collect()
    }

    /// Confusion counts of the margin-sign predictions.
    pub fn confusion(&self) -> Result<Confusion> {
        let predicted: Vec<bool> = self.scores.iter().map(|s| s.predicted).collect();
        confusion(&self.labels(), &predicted)
    }

    /// Confusion counts predicting positive iff `probability >= threshold`.
    pub fn confusion_at(&self, threshold: f64) -> Confusion {
        let mut c = Confusion::default();
        for s in &self.scores {
            match (s.actual, s.probability >= threshold) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn accuracy(&self) -> f64 {
        if self.scores.is_empty() {
            return 0.0;
        }
        let hits = self.scores.iter().filter(|s| s.predicted == s.actual).count();
        hits as f64 / self.scores.len() as f64
    }

    /// Accuracy per fold, indexed by fold.
    pub fn fold_accuracies(&self) -> Vec<f64> {
        let k = self.scores.iter().map(|s| s.fold + 1).max().unwrap_or(0);
        let mut hits = vec![0usize; k];
        let mut totals = vec![0usize; k];
        for s in &self.scores {
            totals[s.fold] += 1;
            hits[s.fold] += usize::from(s.predicted == s.actual);
        }
        hits.iter()
            .zip(&totals)
            .map(|(&h, &t)| if t == 0 { 0.0 } else { h as f64 / t as f64 })
            .collect()
    }
}

/// Trains a tree on each fold's complement and scores the held-out fold.
pub fn pooled_scores(data: &Dataset, folds: &FoldAssignment, adt: &AdtConfig) -> Result<ScorePool> {
    if folds.assignment.len() != data.n_rows() {
        return Err(Error::arg("fold assignment does not match the dataset"));
    }
    let mut pool = ScorePool::default();
    for fold in 0..folds.k {
        let train = data.subset(&folds.train_indices(fold));
        let test_rows = folds.test_indices(fold);
        let tree = adtree::train(&train, adt)?;
        for &row in &test_rows {
            let margin = tree.margin(data, row)?;
            pool.scores.push(Score {
                row,
                fold,
                probability: adtree::probability(margin),
                predicted: tree.classify_margin(margin),
                actual: data.is_positive(row),
            });
        }
    }
    Ok(pool)
}

/// Stratified `k`-fold cross-validated scores with folds drawn from `seed`.
pub fn pooled_cv_scores(data: &Dataset, k: usize, adt: &AdtConfig, seed: u64) -> Result<ScorePool> {
    let folds = stratified_kfold(data, k, seed)?;
    pooled_scores(data, &folds, adt)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RocPoint {
    /// Generating threshold; infinite for the appended end points.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
    pub confusion: Confusion,
}

impl RocPoint {
    pub fn is_computed(&self) -> bool {
        self.threshold.is_finite()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RocCurve {
    /// Sorted by FPR, then TPR.
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Builds a curve from bare `(fpr, tpr)` pairs, sorted; thresholds are
    /// the pair's position and confusion counts are left empty.
    pub fn from_points(points: &[(f64, f64)]) -> Self {
        let mut pts: Vec<RocPoint> = points
            .iter()
            .enumerate()
            .map(|(i, &(fpr, tpr))| RocPoint {
                threshold: i as f64,
                fpr,
                tpr,
                confusion: Confusion::default(),
            })
            .collect();
        sort_points(&mut pts);
        RocCurve { points: pts }
    }

    /// `threshold,fpr,tpr` lines for external plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            let t = if p.threshold == f64::INFINITY {
                "inf".to_string()
            } else if p.threshold == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{:?}", p.threshold)
            };
            out.push_str(&format!("{t},{:?},{:?}\n", p.fpr, p.tpr));
        }
        out
    }
}

fn sort_points(points: &mut [RocPoint]) {
    points.sort_by(|a, b| a.fpr.total_cmp(&b.fpr).then(a.tpr.total_cmp(&b.tpr)));
}

/// Quantile boundaries `q/count` for `q = 0..=count` with linear
/// interpolation between order statistics.
pub fn quantile_boundaries(values: &[f64], count: usize) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::arg("quantiles of an empty sample"));
    }
    if count == 0 {
        return Err(Error::arg("quantile count must be positive"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = (sorted.len() - 1) as f64;
    Ok((0..=count)
        .map(|q| {
            let pos = q as f64 * last / count as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            if frac == 0.0 || lo + 1 >= sorted.len() {
                sorted[lo]
            } else {
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            }
        })
        .collect())
}

/// ROC curve over the quantile boundaries of the pooled probabilities,
/// predicting positive iff `probability >= threshold`. The end points
/// (0, 0) and (1, 1) are always included.
pub fn roc_points(pool: &ScorePool, quantile_count: usize) -> Result<RocCurve> {
    let positives = pool.scores.iter().filter(|s| s.actual).count();
    let negatives = pool.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::degenerate("ROC needs both classes in the pool"));
    }
    let thresholds = quantile_boundaries(&pool.probabilities(), quantile_count)?;
    let mut points: Vec<RocPoint> = thresholds
        .iter()
        .map(|&t| {
            let c = pool.confusion_at(t);
            RocPoint {
                threshold: t,
                fpr: c.fp as f64 / negatives as f64,
                tpr: c.tp as f64 / positives as f64,
                confusion: c,
            }
        })
        .collect();
    points.push(RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
        confusion: Confusion {
            tn: negatives,
            fn_: positives,
            ..Confusion::default()
        },
    });
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        fpr: 1.0,
        tpr: 1.0,
        confusion: Confusion {
            tp: positives,
            fp: negatives,
            ..Confusion::default()
        },
    });
    sort_points(&mut points);
    Ok(RocCurve { points })
}

/// Trapezoidal area under the FPR-sorted curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    /// Euclidean distance from (FPR, TPR) to (0, 1).
    pub distance: f64,
}

/// Computed curve point closest to (0, 1); ties go to the larger threshold.
pub fn operating_point(curve: &RocCurve) -> Result<OperatingPoint> {
    let dist = |p: &RocPoint| (p.fpr * p.fpr + (1.0 - p.tpr) * (1.0 - p.tpr)).sqrt();
    let best = curve
        .points
        .iter()
        .filter(|p| p.is_computed())
        .min_by(|a, b| {
            dist(a)
                .total_cmp(&dist(b))
                .then(b.threshold.total_cmp(&a.threshold))
        })
        .ok_or_else(|| Error::degenerate("curve has no computed points"))?;
    let total = best.confusion.total();
    Ok(OperatingPoint {
        threshold: best.threshold,
        sensitivity: best.tpr,
        specificity: 1.0 - best.fpr,
        accuracy: if total == 0 {
            f64::NAN
        } else {
            (best.confusion.tp + best.confusion.tn) as f64 / total as f64
        },
        distance: dist(best),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Wilcoxon {
    pub w_plus: f64,
    pub w_minus: f64,
    /// Number of non-zero differences.
    pub n: usize,
    pub p_value: f64,
    pub exact: bool,
}

/// Largest number of non-zero differences for the exact null distribution.
pub const WILCOXON_EXACT_MAX: usize = 20;

/// Two-sided Wilcoxon matched-pairs signed-rank test on `x - y`.
///
/// Zero differences are dropped and tied magnitudes share their average
/// rank. With at most [`WILCOXON_EXACT_MAX`] non-zero differences the
/// p-value is exact over all sign assignments; otherwise it is the normal
/// approximation with tie correction.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<Wilcoxon> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::arg(format!(
            "paired test needs equal, non-empty samples (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    // Differences of accuracies that agree to ~1e-12 are treated as equal.
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    let mut diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| !close(*d, 0.0))
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(Wilcoxon {
            w_plus: 0.0,
            w_minus: 0.0,
            n: 0,
            p_value: 1.0,
            exact: true,
        });
    }
    diffs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

    // Doubled average ranks are integers.
    let mut ranks2 = vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && close(diffs[j].abs(), diffs[i].abs()) {
            j += 1;
        }
        // ranks i+1..=j averaged, doubled: (i+1 + j)
        let r2 = (i + 1 + j) as u64;
        ranks2[i..j].fill(r2);
        tie_sizes.push(j - i);
        i = j;
    }
    let w_plus2: u64 = diffs
        .iter()
        .zip(&ranks2)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, &r)| r)
        .sum();
    let total2: u64 = ranks2.iter().sum();
    let w_minus2 = total2 - w_plus2;

    let (p_value, exact) = if n <= WILCOXON_EXACT_MAX {
        // counts[s] = number of sign assignments with doubled W+ equal to s
        let mut counts = vec![0u64; total2 as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &ranks2 {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] > 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let lower = w_plus2.min(w_minus2) as usize;
        let tail: u64 = counts[..=lower].iter().sum();
        let p = 2.0 * tail as f64 / 2f64.powi(n as i32);
        (p.min(1.0), true)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let ties: f64 = tie_sizes
            .iter()
            .map(|&t| {
                let t = t as f64;
                t * t * t - t
            })
            .sum();
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        let z = (w_plus2 as f64 / 2.0 - mean) / var.sqrt();
        // two-sided: 2 (1 - Phi(|z|)) = erfc(|z| / sqrt 2)
        ((erfc(z.abs() / std::f64::consts::SQRT_2)).min(1.0), false)
    };
    Ok(Wilcoxon {
        w_plus: w_plus2 as f64 / 2.0,
        w_minus: w_minus2 as f64 / 2.0,
        n,
        p_value,
        exact,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`. A constant `y` has
/// slope 0 and r² 0.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::arg(format!(
            "linear fit needs two or more paired points (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::degenerate("all x values are equal"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}
