//! Acceptance suite: runs every criterion at its stated tolerance, prints
//! one PASS/FAIL line per criterion and exits non-zero if any fails.
//! Criteria 1 to 8 run twice; criterion 9 compares the two runs.

mod common;

use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nm_core::adtree::{self, probability, AdtConfig};
use nm_core::imputation::impute;
use nm_core::metrics::{auc, basic_rates, roc_points, wilcoxon_signed_rank, RocCurve, ScorePool};
use nm_core::pipeline::{cmd_bench, cmd_pipeline, BenchConfig, PipelineConfig};
use nm_core::proximity::{z_scores, IndexContext};
use nm_core::synth::informative_dataset;
use nm_core::tabular::{inject_missing, load_dataset, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion: pass flag, a human-readable summary and the
/// deterministic content compared across runs.
struct Outcome {
    pass: bool,
    summary: String,
    fingerprint: String,
}

struct Check {
    pass: bool,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check { pass: true, notes: Vec::new() }
    }

    fn require(&mut self, ok: bool, note: impl Into<String>) {
        if !ok {
            self.pass = false;
            self.notes.push(note.into());
        }
    }

    fn within(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.require(
            (got - want).abs() <= tol,
            format!("{what} = {got} (want {want} ± {tol})"),
        );
    }

    fn time(&mut self, elapsed: Duration, limit: Duration) {
        self.require(
            elapsed < limit,
            format!("took {:.1?} (limit {:.0?})", elapsed, limit),
        );
    }

    fn finish(self, ok_summary: String, fingerprint: String) -> Outcome {
        let summary = if self.pass {
            ok_summary
        } else {
            self.notes.join("; ")
        };
        Outcome { pass: self.pass, summary, fingerprint }
    }
}

fn worked_example() -> nm_core::Dataset {
    let schema = Schema::parse("C1:categorical\nC2:real\nclass:decision:positive\n").unwrap();
    load_dataset(
        "C1,C2,class\n?,12.0,positive\nyes,10.5,positive\nno,14.0,positive\nno,13.0,negative\n",
        &schema,
        "?",
    )
    .unwrap()
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut c = Check::new();
    let ds = worked_example();
    let ctx = IndexContext::new(&ds);
    let i12 = ctx.column_index(0, 1, 1).unwrap();
    let i13 = ctx.column_index(0, 2, 1).unwrap();
    let a = ctx.class_mean(ds.class_of(0), 1).unwrap();
    c.within("I(R1,R2,C2)", i12, 0.86, 0.005);
    c.within("I(R1,R3,C2)", i13, 0.99, 0.005);
    c.within("A#", a, 12.17, 0.005);
    let (filled, _) = impute(&ds).unwrap();
    let fill = filled.format_cell(0, filled.cell(0, 0), "?");
    c.require(fill == "yes", format!("R1.C1 imputed as `{fill}`"));
    c.time(start.elapsed(), Duration::from_secs(1));
    let fp = format!("{i12:?} {i13:?} {a:?} {fill}");
    c.finish(
        format!("I = {i12:.4}, {i13:.4}; A# = {a:.4}; R1.C1 = {fill}"),
        fp,
    )
}

fn ac2() -> Outcome {
    let mut c = Check::new();
    let z = z_scores(&[0.0, 0.0, 0.93]).unwrap();
    for (got, want) in z.iter().zip([-0.577, -0.577, 1.155]) {
        c.within("z", *got, want, 0.001);
    }
    c.finish(format!("z = {{{:.4}, {:.4}, {:.4}}}", z[0], z[1], z[2]), format!("{z:?}"))
}

fn ac3() -> Outcome {
    let mut c = Check::new();
    let x: Vec<f64> = (1..=10).map(|i| 0.9 + i as f64 / 100.0).collect();
    let y: Vec<f64> = vec![0.9; 10];
    let w = wilcoxon_signed_rank(&x, &y).unwrap();
    c.require(w.w_plus == 55.0 && w.w_minus == 0.0, format!("rank sums ({}, {})", w.w_plus, w.w_minus));
    c.within("p", w.p_value, 0.00195, 0.0005);
    c.finish(
        format!("rank sums ({:.1}, {:.1}), p = {:.5}", w.w_plus, w.w_minus, w.p_value),
        format!("{w:?}"),
    )
}

fn ac4() -> Outcome {
    let start = Instant::now();
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut fp = String::new();
    let mut holes = 0;
    for case in 0..200 {
        let t = common::random_table(&mut rng);
        holes += t.cells.iter().flatten().filter(|v| v.is_none()).count();
        let (filled, _) = impute(&t.dataset()).unwrap();
        let got = common::render(&filled);
        let want = common::impute(&t);
        c.require(got == want, format!("case {case} differs: {got:?} vs {want:?}"));
        let _ = write!(fp, "{got:?}");
    }
    c.time(start.elapsed(), Duration::from_secs(30));
    c.finish(format!("200 tables, {holes} imputed cells identical to the oracle"), fp)
}

fn separable(rows: usize) -> nm_core::Dataset {
    let schema = Schema::parse("x:real\nclass:decision:p\n").unwrap();
    let mut csv = String::from("x,class\n");
    for i in 0..rows {
        let label = if i % 2 == 0 { "p" } else { "n" };
        let x = if i % 2 == 0 { 5.0 + i as f64 } else { i as f64 / 10.0 };
        let _ = writeln!(csv, "{x:?},{label}");
    }
    load_dataset(&csv, &schema, "?").unwrap()
}

fn ac5() -> Outcome {
    let mut c = Check::new();
    let mut fp = String::new();
    let ds = informative_dataset(60, 4, 5);
    for rounds in [1, 5, 10] {
        let tree = adtree::train(&ds, &AdtConfig { rounds, ..AdtConfig::default() }).unwrap();
        c.require(
            tree.decision_count() == rounds && tree.prediction_values().len() == 2 * rounds + 1,
            format!(
                "T = {rounds}: {} decision nodes, {} prediction values",
                tree.decision_count(),
                tree.prediction_values().len()
            ),
        );
        fp.push_str(&tree.to_text());
    }
    let mut worst: f64 = 0.0;
    for i in -400..=400 {
        let m = i as f64 / 20.0;
        worst = worst.max((probability(m) + probability(-m) - 1.0).abs());
    }
    c.require(worst < 1e-12, format!("probability complement error {worst:e}"));
    let sep = separable(20);
    let tree = adtree::train(&sep, &AdtConfig { rounds: 1, ..AdtConfig::default() }).unwrap();
    let correct = (0..sep.n_rows()).filter(|&r| tree.classify(&sep, r).unwrap() == sep.is_positive(r)).count();
    let acc = correct as f64 / sep.n_rows() as f64;
    c.require(acc == 1.0, format!("separable training accuracy {acc}"));
    let _ = write!(fp, "{worst:e} {acc}");
    c.finish(
        format!("node counts T+0/2T+1 for T = 1, 5, 10; complement error {worst:.1e}; separable accuracy {acc}"),
        fp,
    )
}

fn ac6() -> Outcome {
    let mut c = Check::new();
    let diag = auc(&RocCurve::from_points(&[(0.0, 0.0), (1.0, 1.0)]));
    let perfect = auc(&RocCurve::from_points(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]));
    c.require(diag == 0.5, format!("diagonal AUC {diag}"));
    c.require(perfect == 1.0, format!("perfect AUC {perfect}"));

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut fp = format!("{diag} {perfect}");
    for _ in 0..50 {
        let n = rng.gen_range(1..40);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-4..=4) as f64 / 2.0).collect();
        let w = wilcoxon_signed_rank(&x, &vec![0.0; n]).unwrap();
        let m = w.n as f64;
        c.require(
            w.w_plus + w.w_minus == m * (m + 1.0) / 2.0,
            format!("rank sums {} + {} for n' = {}", w.w_plus, w.w_minus, w.n),
        );
        let _ = write!(fp, " {w:?}");
    }

    let mut pools = 0;
    while pools < 200 {
        let n = rng.gen_range(2..=12);
        let pairs: Vec<(f64, bool)> =
            (0..n).map(|_| (rng.gen_range(0..=10) as f64 / 10.0, rng.gen_bool(0.5))).collect();
        if !(pairs.iter().any(|p| p.1) && pairs.iter().any(|p| !p.1)) {
            continue;
        }
        pools += 1;
        let pool = ScorePool::from_pairs(&pairs);
        let curve = roc_points(&pool, n - 1).unwrap();
        let oracle = common::roc(&pairs);
        for (t, fpr, tpr) in &oracle {
            let Some(p) = curve.points.iter().find(|p| p.threshold == *t) else {
                c.require(false, format!("threshold {t} absent for {pairs:?}"));
                continue;
            };
            if t.is_finite() {
                let rates = basic_rates(&p.confusion).unwrap();
                c.require(
                    (rates.sensitivity - tpr).abs() < 1e-12
                        && (rates.specificity - (1.0 - fpr)).abs() < 1e-12,
                    format!("SE/SP at {t} for {pairs:?}"),
                );
            }
        }
        let a = auc(&curve);
        let want = common::auc(&pairs);
        c.require((a - want).abs() < 1e-12, format!("AUC {a} vs {want} for {pairs:?}"));
        let _ = write!(fp, " {a:?}");
    }
    c.finish(
        "AUC 0.5 / 1.0 exact; 50 rank-sum identities; 200 pools match the all-thresholds oracle".into(),
        fp,
    )
}

fn ac7() -> Outcome {
    let start = Instant::now();
    let mut c = Check::new();
    let dir = tempfile::tempdir().unwrap();
    let complete = informative_dataset(500, 8, 7);
    let damaged = inject_missing(&complete, 0.1, 7).unwrap();
    let data = dir.path().join("data.csv");
    let schema = dir.path().join("schema.txt");
    fs::write(&data, damaged.to_csv("?").unwrap()).unwrap();
    fs::write(&schema, damaged.schema().to_text()).unwrap();
    let out = dir.path().join("out");
    let cfg = PipelineConfig::new(&data, &schema, &out, 7);
    let report = match cmd_pipeline(&cfg) {
        Ok(r) => r,
        Err(e) => {
            c.require(false, format!("pipeline failed: {e}: {}", e.source));
            return c.finish(String::new(), String::new());
        }
    };
    let elapsed = start.elapsed();
    c.time(elapsed, Duration::from_secs(300));
    let features = &report.selection.features;
    let e = &report.evaluation;
    c.require(features.iter().any(|f| f == "signal"), format!("mask {features:?} lacks `signal`"));
    c.require(e.accuracy >= 0.95, format!("accuracy {}", e.accuracy));
    c.require(e.auc >= 0.95, format!("AUC {}", e.auc));
    let mut fp = String::new();
    for name in ["report.json", "roc.csv", "features.txt", "imputed.csv", "impute.log", "tree.txt"] {
        fp.push_str(&fs::read_to_string(out.join(name)).unwrap_or_default());
    }
    c.finish(
        format!(
            "mask [{}], accuracy {:.4}, AUC {:.4}, {} imputed cells, {:.1?}",
            features.join(", "),
            e.accuracy,
            e.auc,
            report.imputed_cells,
            elapsed
        ),
        fp,
    )
}

fn ac8() -> Outcome {
    let start = Instant::now();
    let mut c = Check::new();
    let dir = tempfile::tempdir().unwrap();
    let cfg = BenchConfig::new(vec![1000, 2500, 5000, 7500, 10000], 8);
    let report = match cmd_bench(&cfg, dir.path()) {
        Ok(r) => r,
        Err(e) => {
            c.require(false, format!("bench failed: {e}: {}", e.source));
            return c.finish(String::new(), String::new());
        }
    };
    let elapsed = start.elapsed();
    c.time(elapsed, Duration::from_secs(600));
    c.require(report.fit.r_squared >= 0.9, format!("r² = {:.4}", report.fit.r_squared));
    let c_ok = dir.path().join("bench.csv").exists();
    c.require(c_ok, "bench.csv not written");
    let fp: String = report
        .rows
        .iter()
        .map(|r| format!("{} {} {}\n", r.size, r.missing_cells, r.digest))
        .collect();
    let times: Vec<String> = report.rows.iter().map(|r| format!("{:.3}", r.seconds)).collect();
    c.finish(
        format!(
            "seconds [{}], r² = {:.4}, total {:.1?}",
            times.join(", "),
            report.fit.r_squared,
            elapsed
        ),
        fp,
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("AC1 worked-example goldens", ac1),
        ("AC2 z-score golden", ac2),
        ("AC3 Wilcoxon golden", ac3),
        ("AC4 imputation oracle equivalence", ac4),
        ("AC5 ADT structure", ac5),
        ("AC6 metrics suite", ac6),
        ("AC7 end-to-end pipeline", ac7),
        ("AC8 imputation scaling", ac8),
    ];
    let mut failed = 0;
    let mut first = Vec::new();
    for (name, run) in criteria {
        let o = run();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.summary);
        failed += usize::from(!o.pass);
        first.push(o.fingerprint);
    }
    let mut differing = Vec::new();
    for ((name, run), fp) in criteria.iter().zip(&first) {
        if run().fingerprint != *fp {
            differing.push(name.split(' ').next().unwrap_or(name));
        }
    }
    if differing.is_empty() {
        println!("PASS AC9 determinism: criteria 1-8 reproduced byte-identical reports on a second run");
    } else {
        failed += 1;
        println!("FAIL AC9 determinism: {} differ between runs", differing.join(", "));
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

