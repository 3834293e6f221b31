//! Seeded synthetic tables with one informative column among noise.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::tabular::{ColumnKind, ColumnSpec, Dataset, Schema};

pub const POSITIVE: &str = "positive";
pub const NEGATIVE: &str = "negative";

/// Column position of the informative feature among `features` columns.
pub fn informative_column(features: usize) -> usize {
    features / 2
}

/// `rows` records with `features` feature columns: column
/// [`informative_column`] is a real `signal` drawn from [6, 10) for
/// positives and [1, 5) for negatives; the rest are class-independent noise
/// cycling through categorical, integer and real kinds. Classes alternate,
/// so the split is balanced.
pub fn informative_dataset(rows: usize, features: usize, seed: u64) -> Dataset {
    assert!(features >= 1, "need at least one feature column");
    let signal_at = informative_column(features);
    let mut columns = Vec::with_capacity(features + 1);
    let mut noise = 0;
    for c in 0..features {
        if c == signal_at {
            columns.push(ColumnSpec {
                name: "signal".into(),
                kind: ColumnKind::Real,
            });
        } else {
            noise += 1;
            let kind = match noise % 3 {
                1 => ColumnKind::Categorical,
                2 => ColumnKind::Integer,
                _ => ColumnKind::Real,
            };
            columns.push(ColumnSpec {
                name: format!("noise{noise}"),
                kind,
            });
        }
    }
    columns.push(ColumnSpec {
        name: "diagnosis".into(),
        kind: ColumnKind::Decision,
    });
    let schema = Schema::new(columns, Some(POSITIVE.into())).expect("valid synthetic schema");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = ["a", "b", "c"];
    let table: Vec<Vec<String>> = (0..rows)
        .map(|r| {
            let positive = r % 2 == 0;
            let mut row: Vec<String> = schema.columns[..features]
                .iter()
                .enumerate()
                .map(|(c, spec)| {
                    if c == signal_at {
                        let lo = if positive { 6.0 } else { 1.0 };
                        let v: f64 = rng.gen_range(lo..lo + 4.0);
                        format!("{:?}", round3(v))
                    } else {
                        match spec.kind {
                            ColumnKind::Categorical => {
                                levels[rng.gen_range(0..levels.len())].to_string()
                            }
                            ColumnKind::Integer => rng.gen_range(0..5).to_string(),
                            _ => format!("{:?}", round3(rng.gen_range(1.0..10.0))),
                        }
                    }
                })
                .collect();
            row.push(if positive { POSITIVE } else { NEGATIVE }.to_string());
            row
        })
        .collect();
    Dataset::from_tokens(&schema, table, "?").expect("synthetic rows parse")
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}
