//! Randomized verification harness.
//!
//! Generates seeded instance corpora and runs each characterization in its
//! executable form, counting exact agreements between the geometric
//! procedures and the independent LP/path oracles. Any disagreement is
//! recorded with a reproducer (seed plus canonical instance dump) and makes
//! the run fail.

use crate::market::{io::serialize_instance, sample, NodeId, Path, ScenarioTree};
use crate::na;
use crate::prior;
use crate::rat::Rat;
use num_bigint::BigInt;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Inclusive ranges.
    pub periods: (usize, usize),
    pub asset_dim: (usize, usize),
    pub alphabet_size: (usize, usize),
    pub generators: (usize, usize),
    pub denominator_bound: u64,
    /// Chance that a generator drops an outcome, as numerator/denominator.
    pub zero_mass: (u32, u32),
    pub force_arbitrage: bool,
    /// Redraw level sizes until the path count fits; keeps the exponential
    /// path-LP oracle affordable without shrinking the per-level ranges.
    pub max_paths: Option<usize>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            periods: (1, 3),
            asset_dim: (1, 3),
            alphabet_size: (2, 3),
            generators: (1, 3),
            denominator_bound: 8,
            zero_mass: (1, 8),
            force_arbitrage: false,
            max_paths: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("range {name} is empty or starts at zero: {lo}..={hi}")]
    BadRange { name: &'static str, lo: usize, hi: usize },
    #[error("denominator bound must be ≥ 1")]
    BadDenominator,
    #[error("zero-mass probability must have a positive denominator")]
    BadZeroMass,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ranges = [
            ("periods", self.periods),
            ("asset_dim", self.asset_dim),
            ("alphabet_size", self.alphabet_size),
            ("generators", self.generators),
        ];
        for (name, (lo, hi)) in ranges {
            if lo == 0 || lo > hi {
                return Err(ConfigError::BadRange { name, lo, hi });
            }
        }
        if self.denominator_bound == 0 {
            return Err(ConfigError::BadDenominator);
        }
        if self.zero_mass.1 == 0 {
            return Err(ConfigError::BadZeroMass);
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c
    }
}

fn grid_rational(rng: &mut ChaCha8Rng, denominator_bound: u64) -> Rat {
    let hi = 2 * denominator_bound as i64;
    let num = rng.gen_range(-hi..=hi);
    let den = rng.gen_range(1..=denominator_bound as i64);
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Deterministic-in-seed random instance. Prices and generator weights come
/// from the bounded-denominator grid; with `force_arbitrage`, one relevant
/// node's child prices are re-drawn so every one-step increment lies in an
/// open halfspace, guaranteeing a local (hence global) failure.
pub fn gen_instance(config: &GeneratorConfig) -> Result<ScenarioTree, ConfigError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let horizon = rng.gen_range(config.periods.0..=config.periods.1);
    let asset_dim = rng.gen_range(config.asset_dim.0..=config.asset_dim.1);
    let mut sizes: Vec<usize> = (0..horizon)
        .map(|_| rng.gen_range(config.alphabet_size.0..=config.alphabet_size.1))
        .collect();
    if let Some(cap) = config.max_paths {
        for _ in 0..64 {
            if sizes.iter().product::<usize>() <= cap {
                break;
            }
            sizes = (0..horizon)
                .map(|_| rng.gen_range(config.alphabet_size.0..=config.alphabet_size.1))
                .collect();
        }
        if sizes.iter().product::<usize>() > cap {
            // cap unreachable for these ranges; fall back to the smallest shape
            sizes = vec![config.alphabet_size.0; horizon];
        }
    }
    let alphabets: Vec<Vec<String>> = sizes
        .into_iter()
        .map(|m| (0..m).map(|i| ((b'a' + i as u8) as char).to_string()).collect())
        .collect();

    let mut tree = ScenarioTree {
        horizon,
        asset_dim,
        alphabets,
        prices: BTreeMap::new(),
        priors: BTreeMap::new(),
    };
    // Half the corpus gets balanced increments (child moves at each node
    // summing to zero, on a common denominator), so that trees where
    // no-arbitrage holds are as common as trees where it fails even in
    // higher dimensions.
    let balanced = rng.gen_range(0..2u8) == 0;
    let root_price: Vec<Rat> =
        (0..asset_dim).map(|_| grid_rational(&mut rng, config.denominator_bound)).collect();
    tree.prices.insert(NodeId::root(), root_price);
    for t in 0..horizon {
        for node in tree.nodes_at_depth(t) {
            let parent_price = tree.prices[&node].clone();
            let m = tree.alphabets[t].len();
            if balanced {
                let den = rng.gen_range(1..=config.denominator_bound as i64);
                let hi = 2 * config.denominator_bound as i64;
                let mut increments: Vec<Vec<Rat>> = (0..m.saturating_sub(1))
                    .map(|_| {
                        (0..asset_dim)
                            .map(|_| {
                                Rat::new(BigInt::from(rng.gen_range(-hi..=hi)), BigInt::from(den))
                            })
                            .collect()
                    })
                    .collect();
                let balancing: Vec<Rat> = (0..asset_dim)
                    .map(|j| -increments.iter().fold(Rat::from_integer(0.into()), |acc, v| acc + &v[j]))
                    .collect();
                increments.push(balancing);
                for (a, inc) in increments.into_iter().enumerate() {
                    let price: Vec<Rat> =
                        parent_price.iter().zip(&inc).map(|(p, dv)| p + dv).collect();
                    tree.prices.insert(node.child(a), price);
                }
            } else {
                for a in 0..m {
                    let price: Vec<Rat> = (0..asset_dim)
                        .map(|_| grid_rational(&mut rng, config.denominator_bound))
                        .collect();
                    tree.prices.insert(node.child(a), price);
                }
            }
        }
    }
    for node in tree.non_terminal_nodes() {
        let m = tree.alphabets[node.depth()].len();
        let k = rng.gen_range(config.generators.0..=config.generators.1);
        let gens = (0..k)
            .map(|_| sample::prob_vector(&mut rng, m, config.denominator_bound, config.zero_mass))
            .collect();
        tree.priors.insert(node, gens);
    }

    if config.force_arbitrage {
        let candidates: Vec<NodeId> =
            (0..horizon).flat_map(|t| tree.relevant_nodes_at_depth(t)).collect();
        let node = candidates[rng.gen_range(0..candidates.len())].clone();
        let parent_price = tree.prices[&node].clone();
        for child in tree.children(&node) {
            let mut price = parent_price.clone();
            // strictly positive move in the first coordinate
            let num = rng.gen_range(1..=config.denominator_bound as i64);
            let den = rng.gen_range(1..=config.denominator_bound as i64);
            price[0] = &price[0] + Rat::new(BigInt::from(num), BigInt::from(den));
            for coord in price.iter_mut().skip(1) {
                *coord = &*coord + grid_rational(&mut rng, config.denominator_bound);
            }
            tree.prices.insert(child, price);
        }
    }
    debug_assert!(tree.validate().is_empty());
    Ok(tree)
}

#[derive(Debug, Clone, Serialize)]
pub struct Disagreement {
    pub check: String,
    pub seed: u64,
    pub detail: String,
    /// Canonical instance dump; re-running the check on it reproduces the
    /// disagreement.
    pub instance: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckStats {
    pub cases: u64,
    pub agreements: u64,
    pub disagreements: Vec<Disagreement>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnessReport {
    pub config: GeneratorConfig,
    pub instances: u64,
    pub checks: BTreeMap<String, CheckStats>,
    /// Not serialized: two runs with one seed must emit identical JSON.
    #[serde(skip)]
    pub wall_time_ms: u128,
}

pub const CHECK_NAMES: [&str; 8] = [
    "global_na_vs_search",
    "p_star_vs_global_na",
    "single_prior_geometric_vs_search",
    "class_member_na",
    "class_polar_sets",
    "class_domination",
    "section_equivalence",
    "witness_soundness",
];

const SINGLE_PRIOR_SAMPLES: usize = 3;
const CLASS_SAMPLES: usize = 3;
const DOMINATION_SAMPLES: usize = 3;
const SECTION_SAMPLES: usize = 2;

impl HarnessReport {
    pub fn total_disagreements(&self) -> u64 {
        self.checks.values().map(|c| c.disagreements.len() as u64).sum()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "harness: {} instance(s), seed {}, {} disagreement(s), {} ms\n",
            self.instances,
            self.config.seed,
            self.total_disagreements(),
            self.wall_time_ms
        ));
        for (name, stats) in &self.checks {
            out.push_str(&format!(
                "  {:<34} {:>6} case(s)  {:>6} agree  {:>3} disagree\n",
                name,
                stats.cases,
                stats.agreements,
                stats.disagreements.len()
            ));
        }
        for stats in self.checks.values() {
            for d in &stats.disagreements {
                out.push_str(&format!(
                    "  DISAGREEMENT in {} (seed {}): {}\n",
                    d.check, d.seed, d.detail
                ));
            }
        }
        out
    }
}

struct Recorder {
    checks: BTreeMap<String, CheckStats>,
}

impl Recorder {
    fn new() -> Self {
        let checks =
            CHECK_NAMES.iter().map(|&n| (n.to_string(), CheckStats::default())).collect();
        Recorder { checks }
    }

    fn record(&mut self, check: &str, seed: u64, tree: &ScenarioTree, ok: bool, detail: impl Fn() -> String) {
        let stats = self.checks.get_mut(check).expect("known check name");
        stats.cases += 1;
        if ok {
            stats.agreements += 1;
        } else {
            stats.disagreements.push(Disagreement {
                check: check.to_string(),
                seed,
                detail: detail(),
                instance: serialize_instance(tree),
            });
        }
    }
}

/// Runs every executable characterization on `n_instances` seeded trees.
pub fn run_all(config: &GeneratorConfig, n_instances: u64) -> Result<HarnessReport, ConfigError> {
    config.validate()?;
    let start = Instant::now();
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rec = Recorder::new();

    for _ in 0..n_instances {
        let instance_seed: u64 = master.gen();
        let instance_cfg = config.with_seed(instance_seed);
        let tree = gen_instance(&instance_cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
        run_checks(&mut rec, &tree, instance_seed, &mut rng, config.denominator_bound);
    }

    Ok(HarnessReport {
        config: config.clone(),
        instances: n_instances,
        checks: rec.checks,
        wall_time_ms: start.elapsed().as_millis(),
    })
}

fn run_checks(
    rec: &mut Recorder,
    tree: &ScenarioTree,
    seed: u64,
    rng: &mut ChaCha8Rng,
    denominator_bound: u64,
) {
    // (a) geometric global verdict vs the exhaustive path-LP search
    let holds = na::global_na(tree);
    let found = na::global_arbitrage_search(tree);
    rec.record(
        "global_na_vs_search",
        seed,
        tree,
        holds == found.is_none(),
        || format!("global_na={holds} but search found {:?}", found.as_ref().map(|(_, p)| p)),
    );

    // (b) the dominating-prior certificate vs the global verdict
    let cert = prior::construct_p_star(tree);
    rec.record("p_star_vs_global_na", seed, tree, cert.valid == holds, || {
        format!("certificate valid={} but global_na={holds}", cert.valid)
    });

    // (c) single priors: geometric criterion vs restricted path search
    for _ in 0..SINGLE_PRIOR_SAMPLES {
        let kernels = sample::kernel_selection(tree, rng, denominator_bound);
        let geo = na::single_prior_na(tree, &kernels);
        let search = na::single_prior_arbitrage_search(tree, &kernels);
        rec.record(
            "single_prior_geometric_vs_search",
            seed,
            tree,
            geo == search.is_none(),
            || format!("single_prior_na={geo} but search found {:?}", search.as_ref().map(|(_, p)| p)),
        );
    }

    if holds {
        // (d) sampled class members stay arbitrage-free; polar sets match;
        // the half-half member dominates every sampled kernel
        for _ in 0..CLASS_SAMPLES {
            let s = prior::sample_class_member(tree, &cert.kernels, rng.gen());
            rec.record("class_member_na", seed, tree, na::single_prior_na(tree, &s.member), || {
                "sampled class member admits single-prior arbitrage".to_string()
            });
        }
        rec.record(
            "class_polar_sets",
            seed,
            tree,
            prior::polar_sets_equal(tree, &cert.kernels),
            || "class and prior set disagree on relevant paths".to_string(),
        );
        let floor = Rat::new(BigInt::one(), BigInt::from(2i64.pow(tree.horizon as u32)));
        for _ in 0..DOMINATION_SAMPLES {
            let q = sample::kernel_selection(tree, rng, denominator_bound);
            let dom = prior::dominating_member(tree, &cert.kernels, &q);
            let ok = tree.paths().iter().all(|p| {
                tree.path_probability(&dom, p) >= &floor * tree.path_probability(&q, p)
            });
            rec.record("class_domination", seed, tree, ok, || {
                "domination bound 2^-T violated on some path".to_string()
            });
        }
    } else {
        // (f) witness extraction from the first relevant failing node
        let failing = (0..tree.horizon)
            .flat_map(|t| tree.relevant_nodes_at_depth(t))
            .map(|n| na::local_na(tree, &n))
            .find(|v| !v.holds)
            .expect("a failing relevant node exists when global NA fails");
        let witness =
            na::extract_arbitrage(tree, &failing.node, failing.witness.as_ref().unwrap());
        let ok = match &witness {
            Ok(w) => na::verify_witness(tree, w).is_empty(),
            Err(_) => false,
        };
        rec.record("witness_soundness", seed, tree, ok, || {
            format!("witness extraction/verification failed at `{}`", tree.node_key(&failing.node))
        });
    }

    // (e) sectioning a path function vs the quasi-sure inequality
    for sample_idx in 0..SECTION_SAMPLES {
        let signed = sample_idx % 2 == 1;
        let mut f_map: BTreeMap<Path, Rat> = BTreeMap::new();
        for path in tree.paths() {
            let mut v = grid_rational(rng, denominator_bound);
            if !signed {
                v = v.abs();
            }
            f_map.insert(path, v);
        }
        let level = rng.gen_range(0..tree.horizon);
        let f = |p: &Path| f_map[p].clone();
        let section = na::section_positive(tree, f, level);
        let qs = tree.quasi_sure_geq(f, &Rat::new(0.into(), 1.into()));
        rec.record("section_equivalence", seed, tree, section.complement_polar == qs, || {
            format!(
                "section complement_polar={} but quasi_sure_geq={qs} at level {level}",
                section.complement_polar
            )
        });
    }
}
