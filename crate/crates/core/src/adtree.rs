//! Alternating decision trees.
//!
//! A tree is a root prediction value plus a list of decision nodes. Each
//! decision node hangs off an existing prediction node (its precondition),
//! tests one column, and owns two new prediction nodes, one per outcome.
//! The margin of a record is the sum of the prediction values on every path
//! whose decision nodes all hold; its sign is the class.
//!
//! Training is boosting with confidence-rated rules: every round picks the
//! (precondition, condition) pair minimizing
//!
//! ```text
//! Z = 2 (sqrt(W+(c1 & c2) W-(c1 & c2)) + sqrt(W+(c1 & !c2) W-(c1 & !c2))) + W(!c1)
//! ```
//!
//! assigns `0.5 ln((W+ + eps) / (W- + eps))` to each branch and multiplies
//! each weight by `exp(-y r(x))`, where `r` is the new rule's contribution.
//!
//! Prediction node ids: the root is 0, decision node `t` owns `2t + 1`
//! (condition true) and `2t + 2` (condition false).

use std::fmt;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{format_real, Cell, ColumnKind, Dataset};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdtConfig {
    pub rounds: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for AdtConfig {
    fn default() -> Self {
        AdtConfig {
            rounds: 10,
            epsilon: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Test {
    /// Categorical column equals this label.
    Is(String),
    /// Integer column equals this value.
    Equals(i64),
    /// Real column strictly below this threshold.
    Below(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub column: usize,
    pub test: Test,
}

impl Condition {
    fn holds(&self, data: &Dataset, row: usize) -> Result<bool> {
        let cell = data.cell(row, self.column);
        match (&self.test, cell) {
            (_, Cell::Missing) => Err(Error::data(format!(
                "record {row} is missing column `{}`; impute before prediction",
                data.column(self.column).name
            ))),
            (Test::Is(label), Cell::Cat(code)) => {
                Ok(data.column(self.column).levels()[code as usize] == *label)
            }
            (Test::Equals(v), Cell::Int(x)) => Ok(x == *v),
            (Test::Below(t), Cell::Real(x)) => Ok(x < *t),
            (test, cell) => Err(Error::data(format!(
                "condition {test:?} cannot be applied to {cell:?} in column `{}`",
                data.column(self.column).name
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionNode {
    /// Prediction node this decision node hangs off.
    pub parent: usize,
    pub condition: Condition,
    pub if_true: f64,
    pub if_false: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdTree {
    /// Feature column names of the training table, in order.
    pub features: Vec<String>,
    pub root: f64,
    pub nodes: Vec<DecisionNode>,
    /// Class assigned when the margin is exactly zero.
    pub majority_positive: bool,
}

impl AdTree {
    pub fn decision_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn prediction_count(&self) -> usize {
        1 + 2 * self.nodes.len()
    }

    /// All prediction values indexed by prediction node id.
    pub fn prediction_values(&self) -> Vec<f64> {
        let mut values = Vec::with_capacity(self.prediction_count());
        values.push(self.root);
        for n in &self.nodes {
            values.push(n.if_true);
            values.push(n.if_false);
        }
        values
    }

    /// Checks that `data` has the feature layout the tree was trained on.
    pub fn check_layout(&self, data: &Dataset) -> Result<()> {
        let names = data.feature_names();
        if names != self.features {
            return Err(Error::data(format!(
                "tree expects features [{}], data has [{}]",
                self.features.join(","),
                names.join(",")
            )));
        }
        Ok(())
    }

    pub fn margin(&self, data: &Dataset, row: usize) -> Result<f64> {
        let mut reached = vec![false; self.prediction_count()];
        reached[0] = true;
        let mut sum = self.root;
        for (t, node) in self.nodes.iter().enumerate() {
            if !reached[node.parent] {
                continue;
            }
            if node.condition.holds(data, row)? {
                sum += node.if_true;
                reached[2 * t + 1] = true;
            } else {
                sum += node.if_false;
                reached[2 * t + 2] = true;
            }
        }
        Ok(sum)
    }

    pub fn classify_margin(&self, margin: f64) -> bool {
        if margin > 0.0 {
            true
        } else if margin < 0.0 {
            false
        } else {
            self.majority_positive
        }
    }

    /// `true` for the positive label.
    pub fn classify(&self, data: &Dataset, row: usize) -> Result<bool> {
        Ok(self.classify_margin(self.margin(data, row)?))
    }

    pub fn probability(&self, data: &Dataset, row: usize) -> Result<f64> {
        Ok(probability(self.margin(data, row)?))
    }

    /// Line-oriented serialization, decision nodes in pre-order.
    pub fn to_text(&self) -> String {
        let mut out = String::from("adtree 1\n");
        let _ = writeln!(
            out,
            "majority {}",
            if self.majority_positive { "positive" } else { "negative" }
        );
        for f in &self.features {
            let _ = writeln!(out, "feature\t{}", escape(f));
        }
        let _ = writeln!(out, "root\t{}", format_real(self.root));
        for t in self.preorder() {
            let n = &self.nodes[t];
            let (op, value) = match &n.condition.test {
                Test::Is(label) => ("is", escape(label)),
                Test::Equals(v) => ("eq", v.to_string()),
                Test::Below(x) => ("lt", format_real(*x)),
            };
            let _ = writeln!(
                out,
                "node\t{t}\t{}\t{}\t{op}\t{value}\t{}\t{}",
                n.parent,
                n.condition.column,
                format_real(n.if_true),
                format_real(n.if_false)
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            line,
            msg: format!("tree file: {msg}"),
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "adtree 1")) => {}
            _ => return Err(bad(1, "expected `adtree 1` header")),
        }
        let mut majority = None;
        let mut features = Vec::new();
        let mut root = None;
        let mut nodes: Vec<(usize, DecisionNode)> = Vec::new();
        for (i, line) in lines {
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "majority positive" => majority = Some(true),
                "majority negative" => majority = Some(false),
                "feature" if fields.len() == 2 => features.push(unescape(fields[1])),
                "root" if fields.len() == 2 => {
                    root = Some(parse_f64(fields[1]).ok_or_else(|| bad(lineno, "bad root"))?)
                }
                "node" if fields.len() == 8 => {
                    let num = |s: &str| s.parse::<usize>().map_err(|_| bad(lineno, "bad index"));
                    let id = num(fields[1])?;
                    let parent = num(fields[2])?;
                    let column = num(fields[3])?;
                    let test = match fields[4] {
                        "is" => Test::Is(unescape(fields[5])),
                        "eq" => Test::Equals(
                            fields[5].parse().map_err(|_| bad(lineno, "bad integer"))?,
                        ),
                        "lt" => Test::Below(
                            parse_f64(fields[5]).ok_or_else(|| bad(lineno, "bad threshold"))?,
                        ),
                        _ => return Err(bad(lineno, "unknown condition operator")),
                    };
                    let value = |s: &str| parse_f64(s).ok_or_else(|| bad(lineno, "bad value"));
                    nodes.push((
                        id,
                        DecisionNode {
                            parent,
                            condition: Condition { column, test },
                            if_true: value(fields[6])?,
                            if_false: value(fields[7])?,
                        },
                    ));
                }
                _ => return Err(bad(lineno, "unrecognized line")),
            }
        }
        nodes.sort_by_key(|(id, _)| *id);
        for (expected, (id, node)) in nodes.iter().enumerate() {
            if *id != expected {
                return Err(bad(0, "decision node ids must be 0..T"));
            }
            if node.parent > 2 * expected || node.condition.column >= features.len() {
                return Err(bad(0, "node references a later prediction node or unknown column"));
            }
        }
        Ok(AdTree {
            features,
            root: root.ok_or_else(|| bad(0, "missing root"))?,
            nodes: nodes.into_iter().map(|(_, n)| n).collect(),
            majority_positive: majority.ok_or_else(|| bad(0, "missing majority"))?,
        })
    }

    fn preorder(&self) -> Vec<usize> {
        fn visit(tree: &AdTree, pred: usize, out: &mut Vec<usize>) {
            for (t, n) in tree.nodes.iter().enumerate() {
                if n.parent == pred {
                    out.push(t);
                    visit(tree, 2 * t + 1, out);
                    visit(tree, 2 * t + 2, out);
                }
            }
        }
        let mut out = Vec::with_capacity(self.nodes.len());
        visit(self, 0, &mut out);
        out
    }

    /// Indented rule listing.
    pub fn rules(&self) -> String {
        fn visit(tree: &AdTree, pred: usize, depth: usize, out: &mut String) {
            for (t, n) in tree.nodes.iter().enumerate() {
                if n.parent != pred {
                    continue;
                }
                let name = &tree.features[n.condition.column];
                let (yes, no) = match &n.condition.test {
                    Test::Is(v) => (format!("{name} = {v}"), format!("{name} != {v}")),
                    Test::Equals(v) => (format!("{name} = {v}"), format!("{name} != {v}")),
                    Test::Below(x) => (format!("{name} < {x}"), format!("{name} >= {x}")),
                };
                let pad = "|  ".repeat(depth + 1);
                let _ = writeln!(out, "{pad}({}) {yes}: {:.4}", t + 1, n.if_true);
                visit(tree, 2 * t + 1, depth + 1, out);
                let _ = writeln!(out, "{pad}({}) {no}: {:.4}", t + 1, n.if_false);
                visit(tree, 2 * t + 2, depth + 1, out);
            }
        }
        let mut out = format!(": {:.4}\n", self.root);
        visit(self, 0, 0, &mut out);
        out
    }
}

impl fmt::Display for AdTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rules())
    }
}

/// Logistic map of a boosted margin, `1 / (1 + exp(-2 margin))`.
pub fn probability(margin: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * margin).exp())
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Per-column candidate structure built once per training call.
struct ColumnCandidates {
    /// Group (distinct value) index of every training row, in value order.
    group_of: Vec<usize>,
    /// One condition per candidate.
    conditions: Vec<Test>,
    /// Real columns test `group <= j`; discrete columns test `group == j`.
    threshold: bool,
    groups: usize,
}

fn column_candidates(data: &Dataset, col: usize) -> Result<ColumnCandidates> {
    let m = data.n_rows();
    let mut order: Vec<usize> = (0..m).collect();
    for r in 0..m {
        if data.cell(r, col).is_missing() {
            return Err(Error::data(format!(
                "record {r} is missing column `{}`; training needs a complete table",
                data.column(col).name
            )));
        }
    }
    order.sort_by(|&a, &b| data.compare_values(col, data.cell(a, col), data.cell(b, col)));
    let mut group_of = vec![0; m];
    let mut distinct: Vec<Cell> = Vec::new();
    for &r in &order {
        let cell = data.cell(r, col);
        if distinct.last() != Some(&cell) {
            distinct.push(cell);
        }
        group_of[r] = distinct.len() - 1;
    }
    let kind = data.column(col).kind;
    let conditions = match kind {
        ColumnKind::Real => distinct
            .windows(2)
            .map(|w| match (w[0], w[1]) {
                (Cell::Real(a), Cell::Real(b)) => Test::Below(a + (b - a) / 2.0),
                _ => unreachable!(),
            })
            .collect(),
        _ if distinct.len() < 2 => Vec::new(),
        _ => distinct
            .iter()
            .map(|&c| match c {
                Cell::Cat(code) => Test::Is(data.column(col).levels()[code as usize].clone()),
                Cell::Int(v) => Test::Equals(v),
                _ => unreachable!(),
            })
            .collect(),
    };
    Ok(ColumnCandidates {
        group_of,
        conditions,
        threshold: kind == ColumnKind::Real,
        groups: distinct.len(),
    })
}

#[derive(Clone, Copy, Debug)]
struct Choice {
    z: f64,
    column: usize,
    candidate: usize,
    rank: usize,
    precondition: usize,
    w_true: (f64, f64),
    w_false: (f64, f64),
}

impl Choice {
    fn beats(&self, other: &Choice) -> bool {
        let tol = 1e-12 * other.z.abs().max(1.0);
        if self.z < other.z - tol {
            return true;
        }
        if self.z > other.z + tol {
            return false;
        }
        (self.column, self.candidate, self.rank) < (other.column, other.candidate, other.rank)
    }
}

fn prediction_value(w_pos: f64, w_neg: f64, epsilon: f64) -> f64 {
    0.5 * ((w_pos + epsilon) / (w_neg + epsilon)).ln()
}

/// Trains an alternating decision tree with `cfg.rounds` boosting rounds.
pub fn train(data: &Dataset, cfg: &AdtConfig) -> Result<AdTree> {
    if cfg.rounds == 0 {
        return Err(Error::arg("the number of boosting rounds must be positive"));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(Error::arg(format!(
            "smoothing epsilon must be positive, got {}",
            cfg.epsilon
        )));
    }
    let m = data.n_rows();
    let labels = data.labels();
    let n_pos = labels.iter().filter(|&&p| p).count();
    if n_pos == 0 || n_pos == m {
        return Err(Error::degenerate(
            "training data must contain both decision classes",
        ));
    }
    let columns: Vec<ColumnCandidates> = (0..data.n_features())
        .map(|c| column_candidates(data, c))
        .collect::<Result<_>>()?;
    if columns.iter().all(|c| c.conditions.is_empty()) {
        return Err(Error::degenerate(
            "every feature column is constant; no admissible condition",
        ));
    }
    let y: Vec<f64> = labels.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();

    let mut weights = vec![1.0; m];
    let root = prediction_value(n_pos as f64, (m - n_pos) as f64, cfg.epsilon);
    for (w, &yi) in weights.iter_mut().zip(&y) {
        *w *= (-yi * root).exp();
    }

    // Membership of every record in every prediction node.
    let mut members: Vec<Vec<bool>> = vec![vec![true; m]];
    let mut nodes = Vec::with_capacity(cfg.rounds);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let max_groups = columns.iter().map(|c| c.groups).max().unwrap_or(0);
    let mut group_pos = vec![0.0; max_groups];
    let mut group_neg = vec![0.0; max_groups];

    for _ in 0..cfg.rounds {
        let total: f64 = weights.iter().sum();
        let mut ranks: Vec<usize> = (0..members.len()).collect();
        ranks.shuffle(&mut rng);
        let mut best: Option<Choice> = None;

        for (precondition, inside) in members.iter().enumerate() {
            let rank = ranks[precondition];
            for (col, cands) in columns.iter().enumerate() {
                if cands.conditions.is_empty() {
                    continue;
                }
                group_pos[..cands.groups].fill(0.0);
                group_neg[..cands.groups].fill(0.0);
                let (mut tot_pos, mut tot_neg) = (0.0, 0.0);
                for r in 0..m {
                    if !inside[r] {
                        continue;
                    }
                    let g = cands.group_of[r];
                    if y[r] > 0.0 {
                        group_pos[g] += weights[r];
                        tot_pos += weights[r];
                    } else {
                        group_neg[g] += weights[r];
                        tot_neg += weights[r];
                    }
                }
                let outside = (total - tot_pos - tot_neg).max(0.0);
                let (mut cum_pos, mut cum_neg) = (0.0, 0.0);
                for candidate in 0..cands.conditions.len() {
                    let (tp, tn) = if cands.threshold {
                        cum_pos += group_pos[candidate];
                        cum_neg += group_neg[candidate];
                        (cum_pos, cum_neg)
                    } else {
                        (group_pos[candidate], group_neg[candidate])
                    };
                    let (fp, fneg) = ((tot_pos - tp).max(0.0), (tot_neg - tn).max(0.0));
                    let z = 2.0 * ((tp * tn).sqrt() + (fp * fneg).sqrt()) + outside;
                    let choice = Choice {
                        z,
                        column: col,
                        candidate,
                        rank,
                        precondition,
                        w_true: (tp, tn),
                        w_false: (fp, fneg),
                    };
                    if best.as_ref().map_or(true, |b| choice.beats(b)) {
                        best = Some(choice);
                    }
                }
            }
        }

        let choice = best.expect("at least one admissible condition");
        let cands = &columns[choice.column];
        let holds = |r: usize| {
            let g = cands.group_of[r];
            if cands.threshold {
                g <= choice.candidate
            } else {
                g == choice.candidate
            }
        };
        let if_true = prediction_value(choice.w_true.0, choice.w_true.1, cfg.epsilon);
        let if_false = prediction_value(choice.w_false.0, choice.w_false.1, cfg.epsilon);
        let parent = &members[choice.precondition];
        let mut on_true = vec![false; m];
        let mut on_false = vec![false; m];
        for r in 0..m {
            if !parent[r] {
                continue;
            }
            let value = if holds(r) {
                on_true[r] = true;
                if_true
            } else {
                on_false[r] = true;
                if_false
            };
            weights[r] *= (-y[r] * value).exp();
        }
        members.push(on_true);
        members.push(on_false);
        nodes.push(DecisionNode {
            parent: choice.precondition,
            condition: Condition {
                column: choice.column,
                test: cands.conditions[choice.candidate].clone(),
            },
            if_true,
            if_false,
        });
    }

    Ok(AdTree {
        features: data.feature_names(),
        root,
        nodes,
        majority_positive: 2 * n_pos >= m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{load_dataset, Schema};

    fn real_data(points: &[(f64, &str)]) -> Dataset {
        let schema =
            Schema::from_pairs(&[("x", ColumnKind::Real), ("d", ColumnKind::Decision)]).unwrap();
        let mut csv = String::from("x,d\n");
        for (x, d) in points {
            csv.push_str(&format!("{x:?},{d}\n"));
        }
        load_dataset(&csv, &schema, "?").unwrap()
    }

    fn cfg(rounds: usize) -> AdtConfig {
        AdtConfig {
            rounds,
            ..AdtConfig::default()
        }
    }

    #[test]
    fn root_value_is_half_log_ratio() {
        let ds = real_data(&[(1.0, "p"), (2.0, "p"), (3.0, "n"), (4.0, "n")]);
        let tree = train(&ds, &cfg(1)).unwrap();
        assert_eq!(tree.root, 0.0);

        let ds = real_data(&[(1.0, "p"), (2.0, "p"), (3.0, "p"), (4.0, "n")]);
        let tree = train(&ds, &cfg(1)).unwrap();
        assert!((tree.root - 0.5 * 2f64.ln()).abs() < 1e-12);
        assert!((tree.root - 0.3466).abs() < 1e-4);
    }

    #[test]
    fn single_threshold_separates() {
        let ds = real_data(&[(2.0, "p"), (3.0, "p"), (7.0, "n"), (8.0, "n")]);
        let tree = train(&ds, &cfg(1)).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.nodes[0].condition.test, Test::Below(5.0));
        for r in 0..4 {
            assert_eq!(tree.classify(&ds, r).unwrap(), ds.is_positive(r));
        }
        assert!((tree.nodes[0].if_true - 0.5 * 3f64.ln()).abs() < 1e-12);
        assert!((tree.nodes[0].if_false + 0.5 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn node_counts_follow_rounds() {
        let ds = real_data(&[
            (1.0, "p"),
            (2.0, "n"),
            (3.0, "p"),
            (4.0, "n"),
            (5.0, "p"),
            (6.0, "p"),
        ]);
        for t in [1, 3, 7] {
            let tree = train(&ds, &cfg(t)).unwrap();
            assert_eq!(tree.decision_count(), t);
            assert_eq!(tree.prediction_values().len(), 2 * t + 1);
            for (i, n) in tree.nodes.iter().enumerate() {
                assert!(n.parent <= 2 * i);
            }
        }
    }

    #[test]
    fn training_errors() {
        let ds = real_data(&[(1.0, "p"), (2.0, "p")]);
        assert!(matches!(train(&ds, &cfg(1)), Err(Error::Degenerate(_))));
        let ds = real_data(&[(1.0, "p"), (2.0, "n")]);
        assert!(train(&ds, &cfg(0)).is_err());
        let bad_eps = AdtConfig {
            epsilon: 0.0,
            ..cfg(1)
        };
        assert!(train(&ds, &bad_eps).is_err());
        let ds = real_data(&[(1.0, "p"), (1.0, "n")]);
        assert!(matches!(train(&ds, &cfg(1)), Err(Error::Degenerate(_))));
        let schema =
            Schema::from_pairs(&[("x", ColumnKind::Real), ("d", ColumnKind::Decision)]).unwrap();
        let ds = load_dataset("x,d\n1.0,p\n?,n\n", &schema, "?").unwrap();
        assert!(matches!(train(&ds, &cfg(1)), Err(Error::Data(_))));
    }

    fn hand_tree() -> AdTree {
        AdTree {
            features: vec!["x".into()],
            root: 0.1,
            nodes: vec![
                DecisionNode {
                    parent: 0,
                    condition: Condition {
                        column: 0,
                        test: Test::Below(5.0),
                    },
                    if_true: 0.4,
                    if_false: -0.4,
                },
                DecisionNode {
                    parent: 0,
                    condition: Condition {
                        column: 0,
                        test: Test::Below(9.0),
                    },
                    if_true: 0.3,
                    if_false: -0.2,
                },
                DecisionNode {
                    parent: 2,
                    condition: Condition {
                        column: 0,
                        test: Test::Below(7.0),
                    },
                    if_true: 1.0,
                    if_false: 2.0,
                },
            ],
            majority_positive: false,
        }
    }

    #[test]
    fn margin_sums_all_satisfied_paths() {
        let ds = real_data(&[(2.0, "p"), (6.0, "n"), (8.0, "n"), (10.0, "n")]);
        let tree = hand_tree();
        // x=2: root + first (true) + second (true); node 2 not reached
        assert!((tree.margin(&ds, 0).unwrap() - 0.8).abs() < 1e-12);
        // x=6: 0.1 - 0.4 + 0.3 + 1.0
        assert!((tree.margin(&ds, 1).unwrap() - 1.0).abs() < 1e-12);
        // x=10: 0.1 - 0.4 - 0.2 + 2.0
        assert!((tree.margin(&ds, 3).unwrap() - 1.5).abs() < 1e-12);

        let root_only = AdTree {
            nodes: Vec::new(),
            root: 0.3466,
            ..tree.clone()
        };
        for r in 0..4 {
            assert_eq!(root_only.margin(&ds, r).unwrap(), 0.3466);
        }
        let single = AdTree {
            root: 0.0,
            nodes: vec![DecisionNode {
                if_true: 0.7,
                if_false: -0.7,
                ..tree.nodes[0].clone()
            }],
            ..tree
        };
        assert_eq!(single.margin(&ds, 0).unwrap(), 0.7);
    }

    #[test]
    fn classification_tie_rule() {
        let mut tree = hand_tree();
        assert!(tree.classify_margin(0.7));
        assert!(!tree.classify_margin(-0.1));
        assert!(!tree.classify_margin(0.0));
        tree.majority_positive = true;
        assert!(tree.classify_margin(0.0));

        let ds = real_data(&[(1.0, "p"), (2.0, "p"), (3.0, "p"), (4.0, "n")]);
        assert!(train(&ds, &cfg(1)).unwrap().majority_positive);
    }

    #[test]
    fn probability_mapping() {
        assert_eq!(probability(0.0), 0.5);
        assert!((probability(0.5 * 2f64.ln()) - 2.0 / 3.0).abs() < 1e-12);
        assert!((probability(0.3466) - 0.667).abs() < 1e-3);
        assert!((probability(1.7) + probability(-1.7) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_cell_is_an_error_at_prediction() {
        let schema =
            Schema::from_pairs(&[("x", ColumnKind::Real), ("d", ColumnKind::Decision)]).unwrap();
        let ds = load_dataset("x,d\n?,p\n", &schema, "?").unwrap();
        assert!(hand_tree().margin(&ds, 0).is_err());
    }

    #[test]
    fn categorical_and_integer_conditions() {
        let schema = Schema::from_pairs(&[
            ("color", ColumnKind::Categorical),
            ("count", ColumnKind::Integer),
            ("d", ColumnKind::Decision),
        ])
        .unwrap();
        let ds = load_dataset(
            "color,count,d\nred,1,p\nred,2,p\nblue,1,n\nblue,3,n\ngreen,2,n\nred,3,p\n",
            &schema,
            "?",
        )
        .unwrap();
        let tree = train(&ds, &cfg(2)).unwrap();
        assert_eq!(tree.nodes[0].condition.column, 0);
        assert_eq!(tree.nodes[0].condition.test, Test::Is("red".into()));
        for r in 0..ds.n_rows() {
            assert_eq!(tree.classify(&ds, r).unwrap(), ds.is_positive(r));
        }
        let again = AdTree::from_text(&tree.to_text()).unwrap();
        assert_eq!(again, tree);
    }

    #[test]
    fn text_round_trip_and_rules() {
        let tree = hand_tree();
        let text = tree.to_text();
        assert_eq!(AdTree::from_text(&text).unwrap(), tree);
        // pre-order: node 0, its false-branch child node 2, then node 1
        let ids: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("node"))
            .map(|l| l.split('\t').nth(1).unwrap())
            .collect();
        assert_eq!(ids, vec!["0", "2", "1"]);
        let rules = tree.rules();
        assert!(rules.starts_with(": 0.1000\n|  (1) x < 5: 0.4000\n"));
        assert!(rules.contains("|  |  (3) x < 7: 1.0000"));

        assert!(AdTree::from_text("nope").is_err());
        assert!(AdTree::from_text("adtree 1\nroot\t0.0\n").is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = real_data(&[
            (1.0, "p"),
            (2.0, "n"),
            (3.0, "p"),
            (4.0, "n"),
            (5.0, "n"),
            (6.0, "p"),
            (7.0, "p"),
        ]);
        let c = AdtConfig {
            rounds: 5,
            epsilon: 0.5,
            seed: 42,
        };
        assert_eq!(train(&ds, &c).unwrap(), train(&ds, &c).unwrap());
    }
}
