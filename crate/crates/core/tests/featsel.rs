use nm_core::adtree::AdtConfig;
use nm_core::featsel::{fitness, select_features, FeatureMask, GaConfig};
use nm_core::synth::{informative_column, informative_dataset};
use nm_core::tabular::{load_dataset, Schema};

const FEATURES: usize = 8;

fn signal_only(features: usize) -> FeatureMask {
    let mut bits = vec![false; features];
    bits[informative_column(features)] = true;
    FeatureMask::new(bits).unwrap()
}

fn without_signal(features: usize) -> FeatureMask {
    let mut bits = vec![true; features];
    bits[informative_column(features)] = false;
    FeatureMask::new(bits).unwrap()
}

#[test]
fn decision_copied_from_a_column_scores_one() {
    let schema = Schema::parse("flag:categorical\nnoise:integer\nclass:decision:yes\n").unwrap();
    let mut csv = String::from("flag,noise,class\n");
    for i in 0..30 {
        let label = if i % 3 == 0 { "yes" } else { "no" };
        csv.push_str(&format!("{label},{},{label}\n", (i * 7) % 5));
    }
    let ds = load_dataset(&csv, &schema, "?").unwrap();
    let f = fitness(&ds, &FeatureMask::all(2), 5, &AdtConfig::default(), 1).unwrap();
    assert_eq!(f, 1.0);
}

#[test]
fn noise_only_masks_score_near_chance() {
    let mut total = 0.0;
    for seed in 0..10 {
        let ds = informative_dataset(200, FEATURES, seed);
        let f = fitness(&ds, &without_signal(FEATURES), 10, &AdtConfig::default(), seed).unwrap();
        assert!((f - 0.5).abs() <= 0.15, "seed {seed}: fitness {f}");
        total += f;
        let signal = fitness(&ds, &signal_only(FEATURES), 10, &AdtConfig::default(), seed).unwrap();
        assert_eq!(signal, 1.0);
    }
    assert!((total / 10.0 - 0.5).abs() <= 0.15);
}

#[test]
fn fitness_is_deterministic() {
    let ds = informative_dataset(100, FEATURES, 3);
    let mask = without_signal(FEATURES);
    let a = fitness(&ds, &mask, 10, &AdtConfig::default(), 9).unwrap();
    let b = fitness(&ds, &mask, 10, &AdtConfig::default(), 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn search_recovers_the_informative_column_with_few_bits() {
    let mut found = 0;
    let mut small = 0;
    for seed in 0..10 {
        let ds = informative_dataset(200, FEATURES, 100 + seed);
        let cfg = GaConfig { seed, ..GaConfig::default() };
        let sel = select_features(&ds, &cfg, 10, &AdtConfig::default()).unwrap();
        assert_eq!(sel.history.len(), cfg.generations + 1);
        assert!(sel.history.windows(2).all(|w| w[1] >= w[0]), "seed {seed}: {:?}", sel.history);
        let best = sel.history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(sel.fitness, best);
        found += usize::from(sel.mask.contains(informative_column(FEATURES)));
        small += usize::from(sel.mask.count() <= 4);
    }
    assert!(found >= 9, "informative column selected in {found} of 10 runs");
    assert!(small >= 8, "at most 4 columns in {small} of 10 runs");
}

#[test]
fn returned_fitness_is_reproducible_from_the_mask() {
    let ds = informative_dataset(120, 6, 5);
    let cfg = GaConfig { population: 10, generations: 6, seed: 21, ..GaConfig::default() };
    let adt = AdtConfig { rounds: 5, ..AdtConfig::default() };
    let sel = select_features(&ds, &cfg, 5, &adt).unwrap();
    assert_eq!(fitness(&ds, &sel.mask, 5, &adt, cfg.seed).unwrap(), sel.fitness);
    assert!(sel.evaluations >= 1);
}
