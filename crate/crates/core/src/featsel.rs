//! Wrapper feature selection: a generational genetic search over column
//! masks scored by cross-validated tree accuracy.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adtree::AdtConfig;
use crate::error::{Error, Result};
use crate::metrics::pooled_scores;
use crate::tabular::{stratified_kfold, Dataset, FoldAssignment};

/// Selected feature columns; the decision column is never part of a mask.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask {
    bits: Vec<bool>,
}

impl FeatureMask {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if !bits.iter().any(|&b| b) {
            return Err(Error::arg("a feature mask must select at least one column"));
        }
        Ok(FeatureMask { bits })
    }

    pub fn all(features: usize) -> Self {
        assert!(features > 0, "no feature columns");
        FeatureMask {
            bits: vec![true; features],
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, col: usize) -> bool {
        self.bits.get(col).copied().unwrap_or(false)
    }

    /// Indices of the selected columns, ascending.
    pub fn selected(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i]).collect()
    }

    pub fn names(&self, data: &Dataset) -> Vec<String> {
        self.selected()
            .into_iter()
            .map(|i| data.column(i).name.clone())
            .collect()
    }

    pub fn from_names<S: AsRef<str>>(data: &Dataset, names: &[S]) -> Result<Self> {
        let features = data.feature_names();
        let mut bits = vec![false; features.len()];
        for name in names {
            let name = name.as_ref();
            let pos = features.iter().position(|f| f == name).ok_or_else(|| {
                Error::data(format!("feature `{name}` is not a feature column of the dataset"))
            })?;
            bits[pos] = true;
        }
        FeatureMask::new(bits)
    }

    /// Reads one column name per line; blank lines and `#` comments are ignored.
    pub fn parse(data: &Dataset, text: &str) -> Result<Self> {
        let names: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        FeatureMask::from_names(data, &names)
    }

    pub fn to_text(&self, data: &Dataset) -> String {
        self.names(data).iter().map(|n| format!("{n}\n")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover: f64,
    /// Per-bit flip probability.
    pub mutation: f64,
    /// Individuals copied unchanged into the next generation.
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 20,
            generations: 20,
            crossover: 1.0,
            mutation: 0.001,
            elitism: 1,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::arg(format!(
                "population must be at least 2, got {}",
                self.population
            )));
        }
        for (name, p) in [("crossover", self.crossover), ("mutation", self.mutation)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::arg(format!("{name} probability {p} outside [0, 1]")));
            }
        }
        if self.elitism > self.population {
            return Err(Error::arg(format!(
                "elitism {} exceeds the population {}",
                self.elitism, self.population
            )));
        }
        Ok(())
    }
}

/// Scores masks on one fixed fold assignment and caches the results.
pub struct Evaluator<'a> {
    data: &'a Dataset,
    folds: FoldAssignment,
    adt: AdtConfig,
    cache: HashMap<FeatureMask, f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(data: &'a Dataset, cv_k: usize, adt: &AdtConfig, seed: u64) -> Result<Self> {
        if data.missing_count() > 0 {
            return Err(Error::data(
                "feature selection needs a complete table; impute it first",
            ));
        }
        Ok(Evaluator {
            data,
            folds: stratified_kfold(data, cv_k, seed)?,
            adt: *adt,
            cache: HashMap::new(),
        })
    }

    /// Cross-validated accuracy of `mask`. A mask on which some training
    /// fold has no usable split scores 0.
    pub fn fitness(&mut self, mask: &FeatureMask) -> Result<f64> {
        if let Some(&f) = self.cache.get(mask) {
            return Ok(f);
        }
        let projected = self.data.project(mask.bits())?;
        let f = match pooled_scores(&projected, &self.folds, &self.adt) {
            Ok(pool) => pool.accuracy(),
            Err(Error::Degenerate(_)) => 0.0,
            Err(e) => return Err(e),
        };
        self.cache.insert(mask.clone(), f);
        Ok(f)
    }

    /// Distinct masks scored so far.
    pub fn evaluations(&self) -> usize {
        self.cache.len()
    }
}

/// Stratified `cv_k`-fold accuracy of a tree trained on the masked columns.
pub fn fitness(
    data: &Dataset,
    mask: &FeatureMask,
    cv_k: usize,
    adt: &AdtConfig,
    seed: u64,
) -> Result<f64> {
    Evaluator::new(data, cv_k, adt, seed)?.fitness(mask)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub mask: FeatureMask,
    pub fitness: f64,
    /// Best fitness in the population, initial generation first.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Orders by fitness descending, then fewer selected columns.
fn better(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn repair(bits: &mut [bool], rng: &mut ChaCha8Rng) {
    if !bits.iter().any(|&b| b) {
        let i = rng.gen_range(0..bits.len());
        bits[i] = true;
    }
}

fn roulette(fitness: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = fitness.iter().sum();
    if total <= 0.0 {
        return rng.gen_range(0..fitness.len());
    }
    let mut target = rng.gen::<f64>() * total;
    for (i, &f) in fitness.iter().enumerate() {
        if target < f {
            return i;
        }
        target -= f;
    }
    fitness.len() - 1
}

/// Runs the genetic search. Every mask is scored on the same folds, drawn
/// from `cfg.seed`. The best mask ever scored is returned; among equal
/// fitness the one with fewer columns wins, then the first found.
pub fn select_features(
    data: &Dataset,
    cfg: &GaConfig,
    cv_k: usize,
    adt: &AdtConfig,
) -> Result<Selection> {
    cfg.validate()?;
    let n = data.n_features();
    let mut eval = Evaluator::new(data, cv_k, adt, cfg.seed)?;
    if n == 1 {
        let mask = FeatureMask::all(1);
        let f = eval.fitness(&mask)?;
        return Ok(Selection {
            mask,
            fitness: f,
            history: vec![f],
            evaluations: 1,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut population: Vec<FeatureMask> = Vec::with_capacity(cfg.population);
    population.push(FeatureMask::all(n));
    while population.len() < cfg.population {
        let mut bits: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        repair(&mut bits, &mut rng);
        population.push(FeatureMask { bits });
    }

    let mut best: Option<(FeatureMask, f64)> = None;
    let mut history = Vec::with_capacity(cfg.generations + 1);
    for generation in 0..=cfg.generations {
        let scores = population
            .iter()
            .map(|m| eval.fitness(m))
            .collect::<Result<Vec<f64>>>()?;
        for (mask, &f) in population.iter().zip(&scores) {
            let replace = match &best {
                None => true,
                Some((b, bf)) => better((f, mask.count()), (*bf, b.count())),
            };
            if replace {
                best = Some((mask.clone(), f));
            }
        }
        history.push(scores.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        if generation == cfg.generations {
            break;
        }

        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then(population[a].count().cmp(&population[b].count()))
                .then(a.cmp(&b))
        });
        let mut next: Vec<FeatureMask> = ranked[..cfg.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < cfg.population {
            let a = &population[roulette(&scores, &mut rng)].bits;
            let b = &population[roulette(&scores, &mut rng)].bits;
            let (mut c1, mut c2) = if rng.gen::<f64>() < cfg.crossover {
                let cut = rng.gen_range(1..n);
                (
                    [&a[..cut], &b[cut..]].concat(),
                    [&b[..cut], &a[cut..]].concat(),
                )
            } else {
                (a.clone(), b.clone())
            };
            for child in [&mut c1, &mut c2] {
                for bit in child.iter_mut() {
                    if rng.gen::<f64>() < cfg.mutation {
                        *bit = !*bit;
                    }
                }
                repair(child, &mut rng);
            }
            next.push(FeatureMask { bits: c1 });
            if next.len() < cfg.population {
                next.push(FeatureMask { bits: c2 });
            }
        }
        population = next;
    }

    let (mask, fitness) = best.expect("population is non-empty");
    Ok(Selection {
        mask,
        fitness,
        history,
        evaluations: eval.evaluations(),
    })
}
