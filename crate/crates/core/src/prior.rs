//! Construction of the certifying priors.
//!
//! When no-arbitrage holds, the uniform mixture of a node's generators has
//! the full quasi-sure support, so its one-step support matches the
//! quasi-sure one and carries the origin in its relative interior. Stitched
//! over the tree this yields the dominating prior and its per-node
//! geometric certificate; mixing it with arbitrary admissible kernels
//! yields the arbitrage-free subclass with the same polar sets.

use crate::geom::{self, lp};
use crate::market::{io::ParseError, sample, KernelSelection, NodeId, ProbVector, ScenarioTree};
use crate::na::local_na;
use crate::rat::{format_vec, parse_rat, Rat};
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PriorError {
    #[error("measure lies outside the generator hull at node `{0}`")]
    OutsideHull(String),
    #[error("local no-arbitrage fails at node `{0}`")]
    LocalNaFails(String),
    #[error("mixing weight must lie in (0, 1], got {0}")]
    BadMixWeight(String),
    #[error("expected {expected} mixing weights (one per period), got {got}")]
    BadMixLength { expected: usize, got: usize },
}

/// Whether a prior charges every arbitrage-free direction: `p` belongs to
/// the distinguished subclass iff no nonzero `h` in the affine hull of the
/// quasi-sure support has `h · y >= 0` on all of `p`'s one-step support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QBarMembership {
    pub prior: ProbVector,
    pub in_qbar: bool,
    /// A direction defeating membership, present iff `in_qbar` is false.
    pub counterexample: Option<Vec<Rat>>,
}

/// Decides membership by LP scans over a basis of the affine hull of the
/// quasi-sure support: maximize each coordinate of `h` in both signs under
/// `h · y >= 0` for the support of `p`; membership means every optimum is 0.
pub fn qbar_member(
    tree: &ScenarioTree,
    node: &NodeId,
    p: &ProbVector,
) -> Result<QBarMembership, PriorError> {
    if !in_generator_hull(tree, node, p) {
        return Err(PriorError::OutsideHull(tree.node_key(node)));
    }
    let d_points = tree.support_d(node);
    let e_points = tree.support_e(node, p);
    let aff_d = geom::affine_hull(&d_points);

    if !aff_d.contains_zero() {
        // Off-origin hull: the projection of the origin onto it has a
        // strictly positive product with every support point. Unlike the
        // separating-vector route this must not be rescaled, or it would
        // leave the (affine, not linear) hull.
        let h = geom::origin_projection(&aff_d);
        debug_assert!(aff_d.contains(&h));
        return Ok(QBarMembership { prior: p.clone(), in_qbar: false, counterexample: Some(h) });
    }

    let basis = geom::span_basis(&d_points);
    let k = basis.len();
    for j in 0..k {
        for sign in [Rat::one(), -Rat::one()] {
            let mut prog = lp::LinearProgram::new(k);
            prog.objective[j] = sign.clone();
            for b in prog.bounds.iter_mut() {
                *b = lp::Bounds { lower: Some(-Rat::one()), upper: Some(Rat::one()) };
            }
            for y in &e_points {
                let row: Vec<Rat> = basis.iter().map(|b| geom::dot(b, y)).collect();
                prog.constrain(row, lp::Relation::Ge, Rat::zero());
            }
            match prog.solve().expect("well-formed program") {
                lp::LpOutcome::Optimal { value, solution } => {
                    if value.is_positive() {
                        let mut h = vec![Rat::zero(); tree.asset_dim];
                        for (a, b) in solution.iter().zip(&basis) {
                            for (hx, bx) in h.iter_mut().zip(b) {
                                *hx = &*hx + &(a * bx);
                            }
                        }
                        geom::normalize_direction(&mut h);
                        return Ok(QBarMembership {
                            prior: p.clone(),
                            in_qbar: false,
                            counterexample: Some(h),
                        });
                    }
                }
                other => unreachable!("box-bounded feasible program cannot be {other:?}"),
            }
        }
    }
    Ok(QBarMembership { prior: p.clone(), in_qbar: true, counterexample: None })
}

/// Exact hull membership: convex weights over the node's generators
/// reproducing `p`.
pub fn in_generator_hull(tree: &ScenarioTree, node: &NodeId, p: &ProbVector) -> bool {
    let gens = tree.generators(node);
    let m = tree.alphabets[node.depth()].len();
    if p.weights.len() != m {
        return false;
    }
    let k = gens.len();
    let mut prog = lp::LinearProgram::new(k);
    for b in prog.bounds.iter_mut() {
        b.lower = Some(Rat::zero());
    }
    for a in 0..m {
        let row: Vec<Rat> = gens.iter().map(|g| g.weights[a].clone()).collect();
        prog.constrain(row, lp::Relation::Eq, p.weights[a].clone());
    }
    prog.constrain(vec![Rat::one(); k], lp::Relation::Eq, Rat::one());
    matches!(prog.solve().expect("well-formed program"), lp::LpOutcome::Optimal { .. })
}

/// The one-period certifying measure at a node where local no-arbitrage
/// holds: the uniform mixture of all generators. Its support is the whole
/// quasi-sure support, so the affine hulls match and the relative-interior
/// condition is inherited; both are re-verified before returning.
pub fn construct_p_hat(tree: &ScenarioTree, node: &NodeId) -> Result<ProbVector, PriorError> {
    if !local_na(tree, node).holds {
        return Err(PriorError::LocalNaFails(tree.node_key(node)));
    }
    let gens = tree.generators(node);
    let share = Rat::new(1.into(), (gens.len() as i64).into());
    let parts: Vec<(Rat, &ProbVector)> = gens.iter().map(|g| (share.clone(), g)).collect();
    let p_hat = ProbVector::mix(&parts);

    let e = tree.support_e(node, &p_hat);
    let d = tree.support_d(node);
    assert!(
        geom::affine_hull(&e).same_as(&geom::affine_hull(&d)),
        "uniform mixture must reach the full quasi-sure support"
    );
    assert!(geom::ri_conv_contains_zero(&e), "relative-interior condition must be inherited");
    Ok(p_hat)
}

/// The dimension-improvement step: the midpoint mixture, whose support is
/// the union of the two supports, so the affine dimension never drops.
pub fn improve_prior(
    _tree: &ScenarioTree,
    _node: &NodeId,
    p: &ProbVector,
    q: &ProbVector,
) -> ProbVector {
    let half = Rat::new(1.into(), 2.into());
    ProbVector::mix(&[(half.clone(), p), (half, q)])
}

/// One node's share of the dominating-prior certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeCheck {
    pub node: NodeId,
    pub aff_match: bool,
    pub ri_zero: bool,
}

/// The dominating prior candidate and its per-node certificate: at every
/// relevant node, the affine hull of the selected kernel's support must
/// equal the quasi-sure one and contain the origin in the relative
/// interior of its convex hull. `valid` iff both hold everywhere, which is
/// equivalent to global no-arbitrage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PStarCertificate {
    pub kernels: KernelSelection,
    pub checks: Vec<NodeCheck>,
    pub valid: bool,
}

pub fn construct_p_star(tree: &ScenarioTree) -> PStarCertificate {
    let mut kernels = KernelSelection::default();
    for node in tree.non_terminal_nodes() {
        let k = tree.generators(&node).len();
        let weights = if local_na(tree, &node).holds {
            vec![Rat::new(1.into(), (k as i64).into()); k]
        } else {
            // any admissible selection works off the no-arbitrage set;
            // the first generator keeps the construction deterministic
            let mut w = vec![Rat::zero(); k];
            w[0] = Rat::one();
            w
        };
        kernels.weights.insert(node, weights);
    }
    let mut checks = Vec::new();
    let mut valid = true;
    for t in 0..tree.horizon {
        for node in tree.relevant_nodes_at_depth(t) {
            let dp = tree.support_dp(&kernels, &node);
            let d = tree.support_d(&node);
            let aff_match = geom::affine_hull(&dp).same_as(&geom::affine_hull(&d));
            let ri_zero = geom::ri_conv_contains_zero(&dp);
            valid = valid && aff_match && ri_zero;
            checks.push(NodeCheck { node, aff_match, ri_zero });
        }
    }
    PStarCertificate { kernels, checks, valid }
}

/// A member of the arbitrage-free class: per-node mixture
/// `l_t * pstar + (1 - l_t) * q` with `l_t` in `(0, 1]`, expressed back in
/// generator weights.
pub fn class_member(
    tree: &ScenarioTree,
    p_star: &KernelSelection,
    ell: &[Rat],
    q: &KernelSelection,
) -> Result<KernelSelection, PriorError> {
    if ell.len() != tree.horizon {
        return Err(PriorError::BadMixLength { expected: tree.horizon, got: ell.len() });
    }
    for l in ell {
        if !l.is_positive() || l > &Rat::one() {
            return Err(PriorError::BadMixWeight(crate::rat::format_rat(l)));
        }
    }
    let mut weights = BTreeMap::new();
    for node in tree.non_terminal_nodes() {
        let l = &ell[node.depth()];
        let co_l = Rat::one() - l;
        let a = &p_star.weights[&node];
        let b = &q.weights[&node];
        let mixed: Vec<Rat> =
            a.iter().zip(b).map(|(x, y)| l * x + &co_l * y).collect();
        weights.insert(node, mixed);
    }
    Ok(KernelSelection { weights })
}

/// The half-half class member. Every path keeps at least `2^-horizon` of
/// its mass under `q`, so every null set of the result is `q`-null.
pub fn dominating_member(
    tree: &ScenarioTree,
    p_star: &KernelSelection,
    q: &KernelSelection,
) -> KernelSelection {
    let half = Rat::new(1.into(), 2.into());
    let ell = vec![half; tree.horizon];
    class_member(tree, p_star, &ell, q).expect("1/2 is a valid mixing weight")
}

/// Polar sets of the class versus the full prior set, compared as relevant
/// path sets. An edge is class-relevant when the `p_star` kernel or some
/// generator charges it; with mixing weights below 1 the class reaches
/// everything any admissible kernel reaches.
pub fn polar_sets_equal(tree: &ScenarioTree, p_star: &KernelSelection) -> bool {
    let mut class_level = vec![NodeId::root()];
    for _t in 0..tree.horizon {
        let mut next = Vec::new();
        for node in &class_level {
            let star = p_star.induced(tree, node);
            let m = tree.alphabets[node.depth()].len();
            for a in 0..m {
                let charged = star.weights[a].is_positive()
                    || tree.generators(node).iter().any(|g| g.weights[a].is_positive());
                if charged {
                    next.push(node.child(a));
                }
            }
        }
        class_level = next;
    }
    class_level == tree.relevant_paths()
}

/// Deterministic sample from the arbitrage-free class: mixing weights and
/// an admissible kernel drawn from a 64-bit seed.
#[derive(Debug, Clone)]
pub struct ClassSample {
    pub ell: Vec<Rat>,
    pub q: KernelSelection,
    pub member: KernelSelection,
}

pub fn sample_class_member(
    tree: &ScenarioTree,
    p_star: &KernelSelection,
    seed: u64,
) -> ClassSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const DENOM: u64 = 16;
    let ell: Vec<Rat> = (0..tree.horizon)
        .map(|_| sample::rational_in_unit(&mut rng, DENOM, false))
        .collect();
    let q = sample::kernel_selection(tree, &mut rng, DENOM);
    let member = class_member(tree, p_star, &ell, &q).expect("sampled weights lie in (0, 1]");
    ClassSample { ell, q, member }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct NodeCheckDto {
    node: String,
    aff_match: bool,
    ri_zero: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct CertificateDto {
    valid: bool,
    kernels: BTreeMap<String, Vec<String>>,
    checks: Vec<NodeCheckDto>,
}

pub fn certificate_to_json(tree: &ScenarioTree, cert: &PStarCertificate) -> String {
    let dto = CertificateDto {
        valid: cert.valid,
        kernels: cert
            .kernels
            .weights
            .iter()
            .map(|(n, w)| (tree.node_key(n), format_vec(w)))
            .collect(),
        checks: cert
            .checks
            .iter()
            .map(|c| NodeCheckDto {
                node: tree.node_key(&c.node),
                aff_match: c.aff_match,
                ri_zero: c.ri_zero,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&dto).expect("certificate serialization");
    s.push('\n');
    s
}

pub fn certificate_from_json(
    tree: &ScenarioTree,
    text: &str,
) -> Result<PStarCertificate, ParseError> {
    let dto: CertificateDto = serde_json::from_str(text)?;
    let kernels = kernel_selection_from_entries(tree, &dto.kernels, "kernels")?;
    let mut checks = Vec::with_capacity(dto.checks.len());
    for c in &dto.checks {
        let node = tree.parse_key(&c.node).map_err(|source| ParseError::Node {
            location: "checks".to_string(),
            source,
        })?;
        checks.push(NodeCheck { node, aff_match: c.aff_match, ri_zero: c.ri_zero });
    }
    Ok(PStarCertificate { kernels, checks, valid: dto.valid })
}

pub fn kernel_selection_to_json(tree: &ScenarioTree, kernels: &KernelSelection) -> String {
    let map: BTreeMap<String, Vec<String>> = kernels
        .weights
        .iter()
        .map(|(n, w)| (tree.node_key(n), format_vec(w)))
        .collect();
    let mut s = serde_json::to_string_pretty(&map).expect("kernel serialization");
    s.push('\n');
    s
}

pub fn kernel_selection_from_json(
    tree: &ScenarioTree,
    text: &str,
) -> Result<KernelSelection, ParseError> {
    let map: BTreeMap<String, Vec<String>> = serde_json::from_str(text)?;
    kernel_selection_from_entries(tree, &map, "kernels")
}

fn kernel_selection_from_entries(
    tree: &ScenarioTree,
    map: &BTreeMap<String, Vec<String>>,
    location: &str,
) -> Result<KernelSelection, ParseError> {
    let mut weights = BTreeMap::new();
    for (key, w) in map {
        let node = tree.parse_key(key).map_err(|source| ParseError::Node {
            location: location.to_string(),
            source,
        })?;
        let mut vec = Vec::with_capacity(w.len());
        for s in w {
            vec.push(parse_rat(s).map_err(|source| ParseError::Rational {
                location: format!("{location}[\"{key}\"]"),
                source,
            })?);
        }
        weights.insert(node, vec);
    }
    Ok(KernelSelection { weights })
}
