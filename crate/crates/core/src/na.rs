//! Local, single-prior and global quasi-sure no-arbitrage.
//!
//! The production decision procedure is geometric: at each relevant node,
//! no-arbitrage holds iff the origin lies in the relative interior of the
//! convex hull of the quasi-sure support of the one-step increment. The
//! exponential path-LP search ([`global_arbitrage_search`]) is kept as an
//! independent oracle and as the witness extractor for single priors.

use crate::geom::{self, lp};
use crate::market::{io::ParseError, KernelSelection, NodeId, Path, ProbVector, ScenarioTree, Strategy, Violation};
use crate::rat::{format_rat, format_vec, parse_rat, Rat};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Verdict of the local no-arbitrage test at one node: either a strictly
/// positive convex combination of the support hitting the origin (the
/// certificate) or a separating vector (the witness).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalVerdict {
    pub node: NodeId,
    pub holds: bool,
    /// Separating vector over the support points, present iff the test fails.
    pub witness: Option<Vec<Rat>>,
    /// Convex weights over `support_d(node)` (in its sorted order) summing
    /// to 1 with zero barycenter, present iff the test holds.
    pub certificate: Option<Vec<Rat>>,
}

/// An explicit arbitrage: a strategy, a product measure charging a profit
/// path, and that path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbitrageWitness {
    pub strategy: Strategy,
    pub measure: KernelSelection,
    pub profit_path: Path,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NaError {
    #[error("node `{0}` is not relevant; a polar failure cannot be monetized")]
    IrrelevantNode(String),
    #[error("not a valid local arbitrage witness at node `{0}`")]
    InvalidWitness(String),
    #[error("node `{0}` is terminal")]
    TerminalNode(String),
}

/// Geometric local no-arbitrage test at a non-terminal node.
pub fn local_na(tree: &ScenarioTree, node: &NodeId) -> LocalVerdict {
    let support = tree.support_d(node);
    match geom::ri_conv_zero_certificate(&support) {
        Some(weights) => LocalVerdict {
            node: node.clone(),
            holds: true,
            witness: None,
            certificate: Some(weights),
        },
        None => {
            let h = geom::separating_vector(&support)
                .expect("origin outside the relative interior admits a separator");
            LocalVerdict { node: node.clone(), holds: false, witness: Some(h), certificate: None }
        }
    }
}

/// Depth-`level` nodes passing the local test, and whether the failing rest
/// is polar (contains no relevant prefix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelReport {
    pub level: usize,
    pub passing: Vec<NodeId>,
    pub complement_polar: bool,
}

pub fn omega_na(tree: &ScenarioTree, level: usize) -> LevelReport {
    assert!(level < tree.horizon);
    let passing: Vec<NodeId> = tree
        .nodes_at_depth(level)
        .into_iter()
        .filter(|n| local_na(tree, n).holds)
        .collect();
    let complement_polar = tree
        .relevant_nodes_at_depth(level)
        .iter()
        .all(|n| passing.contains(n));
    LevelReport { level, passing, complement_polar }
}

/// Global quasi-sure no-arbitrage: the local test must hold at every
/// relevant prefix of every depth.
pub fn global_na(tree: &ScenarioTree) -> bool {
    (0..tree.horizon).all(|t| {
        tree.relevant_nodes_at_depth(t)
            .iter()
            .all(|node| local_na(tree, node).holds)
    })
}

/// Exhaustive path-LP arbitrage search (the independent oracle).
///
/// For each relevant terminal path `w*`, solves the exact feasibility
/// program over positions at all relevant non-terminal prefixes:
/// terminal value >= 0 on every relevant path and >= 1 on `w*`
/// (arbitrage is scale-invariant, so the normalization loses nothing).
/// Returns the first feasible pair.
pub fn global_arbitrage_search(tree: &ScenarioTree) -> Option<(Strategy, Path)> {
    let relevant_paths = tree.relevant_paths();
    let nodes: Vec<NodeId> =
        (0..tree.horizon).flat_map(|t| tree.relevant_nodes_at_depth(t)).collect();
    arbitrage_search_over(tree, &relevant_paths, &nodes)
}

/// The same search restricted to paths charged by a single prior; decides
/// `NA(P)` by brute force.
pub fn single_prior_arbitrage_search(
    tree: &ScenarioTree,
    kernels: &KernelSelection,
) -> Option<(Strategy, Path)> {
    let paths: Vec<Path> = tree
        .paths()
        .into_iter()
        .filter(|p| tree.path_probability(kernels, p).is_positive())
        .collect();
    let mut nodes = Vec::new();
    for t in 0..tree.horizon {
        let mut level: Vec<NodeId> = paths.iter().map(|p| p.prefix(t)).collect();
        level.sort();
        level.dedup();
        nodes.extend(level);
    }
    arbitrage_search_over(tree, &paths, &nodes)
}

fn arbitrage_search_over(
    tree: &ScenarioTree,
    paths: &[Path],
    nodes: &[NodeId],
) -> Option<(Strategy, Path)> {
    if paths.is_empty() {
        return None;
    }
    let d = tree.asset_dim;
    let var_of: BTreeMap<&NodeId, usize> =
        nodes.iter().enumerate().map(|(i, n)| (n, i * d)).collect();
    let num_vars = nodes.len() * d;

    // Rows are shared across candidate profit paths; only the rhs differs.
    let mut rows = Vec::with_capacity(paths.len());
    for path in paths {
        let mut row = vec![Rat::zero(); num_vars];
        for t in 0..tree.horizon {
            let node = path.prefix(t);
            let base = var_of[&node];
            let step = tree.delta_s(&node, path.0[t]).expect("valid tree");
            for (j, s) in step.iter().enumerate() {
                row[base + j] = &row[base + j] + s;
            }
        }
        rows.push(row);
    }

    for (target, profit_path) in paths.iter().enumerate() {
        let mut prog = lp::LinearProgram::new(num_vars);
        for (i, row) in rows.iter().enumerate() {
            let rhs = if i == target { Rat::one() } else { Rat::zero() };
            prog.constrain(row.clone(), lp::Relation::Ge, rhs);
        }
        match prog.solve().expect("well-formed program") {
            lp::LpOutcome::Optimal { solution, .. } => {
                let mut strategy = Strategy::zero(tree);
                for (node, &base) in &var_of {
                    strategy
                        .positions
                        .insert((*node).clone(), solution[base..base + d].to_vec());
                }
                return Some((strategy, profit_path.clone()));
            }
            lp::LpOutcome::Infeasible => {}
            lp::LpOutcome::Unbounded => unreachable!("feasibility program has zero objective"),
        }
    }
    None
}

/// Lifts a local witness at a relevant failing node to a full arbitrage:
/// the strategy holds `h` for one period at that node and nothing else;
/// the measure charges the node's prefix and a strictly profitable child.
pub fn extract_arbitrage(
    tree: &ScenarioTree,
    node: &NodeId,
    witness: &[Rat],
) -> Result<ArbitrageWitness, NaError> {
    let key = || tree.node_key(node);
    if node.depth() >= tree.horizon {
        return Err(NaError::TerminalNode(key()));
    }
    if !tree.is_relevant_path(node) {
        return Err(NaError::IrrelevantNode(key()));
    }
    let support = tree.support_d(node);
    let products: Vec<Rat> = support.iter().map(|y| geom::dot(witness, y)).collect();
    let valid = !geom::is_zero_vec(witness)
        && products.iter().all(|p| !p.is_negative())
        && products.iter().any(|p| p.is_positive());
    if !valid {
        return Err(NaError::InvalidWitness(key()));
    }

    let mut strategy = Strategy::zero(tree);
    strategy.positions.insert(node.clone(), witness.to_vec());

    // First generator everywhere, overridden along the prefix and at the
    // failing node so that the profit path is charged.
    let mut measure = KernelSelection::first_generator(tree);
    let dirac_on = |gens: &[ProbVector], label: usize| -> Vec<Rat> {
        let idx = gens
            .iter()
            .position(|g| g.weights[label].is_positive())
            .expect("relevant edge is charged by some generator");
        let mut w = vec![Rat::zero(); gens.len()];
        w[idx] = Rat::one();
        w
    };
    for t in 0..node.depth() {
        let parent = node.prefix(t);
        let w = dirac_on(tree.generators(&parent), node.0[t]);
        measure.weights.insert(parent, w);
    }
    let profitable_child = tree
        .relevant_children(node)
        .into_iter()
        .find(|&a| {
            let step = tree.delta_s(node, a).expect("valid tree");
            geom::dot(witness, &step).is_positive()
        })
        .expect("witness has a strictly positive product on the support");
    measure
        .weights
        .insert(node.clone(), dirac_on(tree.generators(node), profitable_child));

    // Extend to a full path along edges the measure charges.
    let mut path = node.child(profitable_child);
    while path.depth() < tree.horizon {
        let q = measure.induced(tree, &path);
        let next = q
            .support()
            .first()
            .copied()
            .expect("probability vector charges some outcome");
        path = path.child(next);
    }

    Ok(ArbitrageWitness { strategy, measure, profit_path: path })
}

/// Exact re-verification of an arbitrage witness against an instance.
/// Empty result means the witness is sound.
pub fn verify_witness(tree: &ScenarioTree, witness: &ArbitrageWitness) -> Vec<Violation> {
    let mut out = Vec::new();
    if !witness.strategy.initial_capital.is_zero() {
        out.push(Violation::new("", "witness strategy must start from zero capital"));
    }
    for node in tree.non_terminal_nodes() {
        match witness.strategy.positions.get(&node) {
            None => out.push(Violation::new(
                &tree.node_key(&node),
                "strategy position absent",
            )),
            Some(p) if p.len() != tree.asset_dim => out.push(Violation::new(
                &tree.node_key(&node),
                "strategy position dimension mismatch",
            )),
            _ => {}
        }
    }
    out.extend(witness.measure.validate(tree));
    if !out.is_empty() {
        return out;
    }
    for path in tree.relevant_paths() {
        let values = tree.value_process(&witness.strategy, &path).expect("total strategy");
        if values[tree.horizon].is_negative() {
            out.push(Violation::new(
                &tree.node_key(&path),
                "terminal value negative on a relevant path",
            ));
        }
    }
    if witness.profit_path.depth() != tree.horizon {
        out.push(Violation::new("", "profit path does not reach the horizon"));
        return out;
    }
    if !tree
        .path_probability(&witness.measure, &witness.profit_path)
        .is_positive()
    {
        out.push(Violation::new(
            &tree.node_key(&witness.profit_path),
            "witness measure gives the profit path zero mass",
        ));
    }
    let values = tree
        .value_process(&witness.strategy, &witness.profit_path)
        .expect("total strategy");
    if !values[tree.horizon].is_positive() {
        out.push(Violation::new(
            &tree.node_key(&witness.profit_path),
            "terminal value not strictly positive on the profit path",
        ));
    }
    out
}

/// Geometric single-prior no-arbitrage: at every node the prior reaches
/// with positive probability, the origin must lie in the relative interior
/// of the convex hull of the prior's one-step support.
pub fn single_prior_na(tree: &ScenarioTree, kernels: &KernelSelection) -> bool {
    let mut level = vec![NodeId::root()];
    for _t in 0..tree.horizon {
        let mut next = Vec::new();
        for node in &level {
            if !geom::ri_conv_contains_zero(&tree.support_dp(kernels, node)) {
                return false;
            }
            let q = kernels.induced(tree, node);
            for a in q.support() {
                next.push(node.child(a));
            }
        }
        level = next;
    }
    true
}

/// Depth-`level` nodes below which `f >= 0` holds on every relevant
/// continuation, plus whether the excluded nodes are polar. The polar flag
/// is equivalent to the quasi-sure inequality `f >= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionReport {
    pub level: usize,
    pub members: Vec<NodeId>,
    pub complement_polar: bool,
}

pub fn section_positive(
    tree: &ScenarioTree,
    f: impl Fn(&Path) -> Rat,
    level: usize,
) -> SectionReport {
    assert!(level < tree.horizon);
    let members: Vec<NodeId> = tree
        .nodes_at_depth(level)
        .into_iter()
        .filter(|node| {
            relevant_continuations(tree, node)
                .iter()
                .all(|path| !f(path).is_negative())
        })
        .collect();
    let complement_polar = tree
        .relevant_nodes_at_depth(level)
        .iter()
        .all(|n| members.contains(n));
    SectionReport { level, members, complement_polar }
}

/// Full paths extending `node` whose remaining edges are all relevant.
fn relevant_continuations(tree: &ScenarioTree, node: &NodeId) -> Vec<Path> {
    let mut acc = vec![node.clone()];
    for _t in node.depth()..tree.horizon {
        let mut next = Vec::new();
        for n in &acc {
            for a in tree.relevant_children(n) {
                next.push(n.child(a));
            }
        }
        acc = next;
    }
    acc
}

// ---------------------------------------------------------------------------
// Report and witness serialization
// ---------------------------------------------------------------------------

/// Full diagnosis of an instance: every non-terminal node's verdict, the
/// per-level summary, and the global verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaReport {
    pub global_holds: bool,
    pub verdicts: Vec<(LocalVerdict, bool)>, // verdict, node relevance
    pub levels: Vec<LevelReport>,
}

pub fn analyze(tree: &ScenarioTree) -> NaReport {
    let mut verdicts = Vec::new();
    for node in tree.non_terminal_nodes() {
        let relevant = tree.is_relevant_path(&node);
        verdicts.push((local_na(tree, &node), relevant));
    }
    let levels: Vec<LevelReport> = (0..tree.horizon).map(|t| omega_na(tree, t)).collect();
    let global_holds = verdicts.iter().all(|(v, relevant)| v.holds || !relevant);
    NaReport { global_holds, verdicts, levels }
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeVerdictDto {
    node: String,
    level: usize,
    relevant: bool,
    holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LevelDto {
    level: usize,
    passing: Vec<String>,
    complement_polar: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct NaReportDto {
    global_na: bool,
    nodes: Vec<NodeVerdictDto>,
    levels: Vec<LevelDto>,
}

pub fn report_to_json(tree: &ScenarioTree, report: &NaReport) -> String {
    let dto = NaReportDto {
        global_na: report.global_holds,
        nodes: report
            .verdicts
            .iter()
            .map(|(v, relevant)| NodeVerdictDto {
                node: tree.node_key(&v.node),
                level: v.node.depth(),
                relevant: *relevant,
                holds: v.holds,
                witness: v.witness.as_ref().map(|h| format_vec(h)),
                certificate: v.certificate.as_ref().map(|c| format_vec(c)),
            })
            .collect(),
        levels: report
            .levels
            .iter()
            .map(|l| LevelDto {
                level: l.level,
                passing: l.passing.iter().map(|n| tree.node_key(n)).collect(),
                complement_polar: l.complement_polar,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&dto).expect("report serialization");
    s.push('\n');
    s
}

pub fn report_to_text(tree: &ScenarioTree, report: &NaReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "global quasi-sure no-arbitrage: {}\n",
        if report.global_holds { "HOLDS" } else { "FAILS" }
    ));
    for l in &report.levels {
        out.push_str(&format!(
            "level {}: {} passing node(s), complement {}\n",
            l.level,
            l.passing.len(),
            if l.complement_polar { "polar" } else { "NOT polar" }
        ));
    }
    for (v, relevant) in &report.verdicts {
        if v.holds {
            continue;
        }
        out.push_str(&format!(
            "  failing node `{}`{}: witness [{}]\n",
            tree.node_key(&v.node),
            if *relevant { "" } else { " (irrelevant)" },
            v.witness
                .as_ref()
                .map(|h| h.iter().map(format_rat).collect::<Vec<_>>().join(", "))
                .unwrap_or_default(),
        ));
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct StrategyDto {
    initial_capital: String,
    positions: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WitnessDto {
    strategy: StrategyDto,
    measure: BTreeMap<String, Vec<String>>,
    profit_path: Vec<String>,
}

pub fn witness_to_json(tree: &ScenarioTree, witness: &ArbitrageWitness) -> String {
    let dto = WitnessDto {
        strategy: StrategyDto {
            initial_capital: format_rat(&witness.strategy.initial_capital),
            positions: witness
                .strategy
                .positions
                .iter()
                .map(|(n, p)| (tree.node_key(n), format_vec(p)))
                .collect(),
        },
        measure: witness
            .measure
            .weights
            .iter()
            .map(|(n, w)| (tree.node_key(n), format_vec(w)))
            .collect(),
        profit_path: witness
            .profit_path
            .0
            .iter()
            .enumerate()
            .map(|(t, &a)| tree.alphabets[t][a].clone())
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&dto).expect("witness serialization");
    s.push('\n');
    s
}

pub fn witness_from_json(
    tree: &ScenarioTree,
    text: &str,
) -> Result<ArbitrageWitness, ParseError> {
    let dto: WitnessDto = serde_json::from_str(text)?;
    let rational = |location: String, s: &str| {
        parse_rat(s).map_err(move |source| ParseError::Rational { location, source })
    };
    let node = |location: &str, key: &str| {
        tree.parse_key(key).map_err(|source| ParseError::Node {
            location: location.to_string(),
            source,
        })
    };
    let mut positions = BTreeMap::new();
    for (key, p) in &dto.strategy.positions {
        let n = node("strategy.positions", key)?;
        let mut vec = Vec::with_capacity(p.len());
        for s in p {
            vec.push(rational(format!("strategy.positions[\"{key}\"]"), s)?);
        }
        positions.insert(n, vec);
    }
    let strategy = Strategy {
        initial_capital: rational("strategy.initial_capital".into(), &dto.strategy.initial_capital)?,
        positions,
    };
    let mut weights = BTreeMap::new();
    for (key, w) in &dto.measure {
        let n = node("measure", key)?;
        let mut vec = Vec::with_capacity(w.len());
        for s in w {
            vec.push(rational(format!("measure[\"{key}\"]"), s)?);
        }
        weights.insert(n, vec);
    }
    let profit_key = dto.profit_path.join("/");
    let profit_path = node("profit_path", &profit_key)?;
    Ok(ArbitrageWitness {
        strategy,
        measure: KernelSelection { weights },
        profit_path,
    })
}
