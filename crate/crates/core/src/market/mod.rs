//! The finite multi-prior market: a product-structured scenario tree with
//! per-node asset prices and per-node finite lists of generator priors.
//!
//! A node is a path prefix, identified by the label indices chosen at each
//! level. All nodes at depth `t` share alphabet `t`; a node prunes children
//! by giving them zero mass under every generator. Everything is an exact
//! rational and every operation is a pure function, so a validated tree can
//! be shared freely across threads.

pub mod io;
pub mod sample;

use crate::rat::Rat;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// A path prefix: the label index chosen at each level so far. The root is
/// the empty prefix; a prefix of length `horizon` is a full path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub Vec<usize>);

/// A full path through the tree (a depth-`horizon` prefix).
pub type Path = NodeId;

impl NodeId {
    pub fn root() -> Self {
        NodeId(Vec::new())
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn child(&self, label: usize) -> NodeId {
        let mut v = self.0.clone();
        v.push(label);
        NodeId(v)
    }

    pub fn parent(&self) -> Option<NodeId> {
        if self.0.is_empty() {
            None
        } else {
            Some(NodeId(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn prefix(&self, depth: usize) -> NodeId {
        NodeId(self.0[..depth].to_vec())
    }
}

/// An exact probability vector over one level's alphabet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ProbVector {
    pub weights: Vec<Rat>,
}

impl ProbVector {
    pub fn new(weights: Vec<Rat>) -> Self {
        ProbVector { weights }
    }

    pub fn dirac(len: usize, at: usize) -> Self {
        let mut weights = vec![Rat::zero(); len];
        weights[at] = Rat::one();
        ProbVector { weights }
    }

    pub fn uniform(len: usize) -> Self {
        ProbVector { weights: vec![Rat::new(1.into(), (len as i64).into()); len] }
    }

    pub fn is_valid(&self) -> bool {
        !self.weights.is_empty()
            && self.weights.iter().all(|w| !w.is_negative())
            && self.weights.iter().sum::<Rat>().is_one()
    }

    /// Outcome indices carrying positive mass.
    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| w.is_positive())
            .map(|(i, _)| i)
            .collect()
    }

    /// Convex mixture of measures over the same alphabet.
    pub fn mix(parts: &[(Rat, &ProbVector)]) -> ProbVector {
        let len = parts[0].1.weights.len();
        let mut weights = vec![Rat::zero(); len];
        for (coef, p) in parts {
            for (w, x) in weights.iter_mut().zip(&p.weights) {
                *w = &*w + &(coef * x);
            }
        }
        ProbVector { weights }
    }
}

use num_traits::Signed;

/// Per-node choice of a measure inside the local prior set, as convex
/// weights over that node's generators. A total selection induces a
/// product measure on paths.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KernelSelection {
    pub weights: BTreeMap<NodeId, Vec<Rat>>,
}

impl KernelSelection {
    /// Weight 1 on each node's first generator.
    pub fn first_generator(tree: &ScenarioTree) -> Self {
        let mut weights = BTreeMap::new();
        for node in tree.non_terminal_nodes() {
            let k = tree.generators(&node).len();
            let mut w = vec![Rat::zero(); k];
            w[0] = Rat::one();
            weights.insert(node, w);
        }
        KernelSelection { weights }
    }

    /// Uniform mixture of each node's generators.
    pub fn uniform_mixture(tree: &ScenarioTree) -> Self {
        let mut weights = BTreeMap::new();
        for node in tree.non_terminal_nodes() {
            let k = tree.generators(&node).len();
            weights.insert(node, vec![Rat::new(1.into(), (k as i64).into()); k]);
        }
        KernelSelection { weights }
    }

    /// The measure selected at `node`: the weighted sum of its generators.
    pub fn induced(&self, tree: &ScenarioTree, node: &NodeId) -> ProbVector {
        let gens = tree.generators(node);
        let w = self
            .weights
            .get(node)
            .unwrap_or_else(|| panic!("kernel selection missing node {:?}", node));
        assert_eq!(w.len(), gens.len(), "kernel weight count mismatch at {:?}", node);
        let parts: Vec<(Rat, &ProbVector)> =
            w.iter().cloned().zip(gens.iter()).collect();
        ProbVector::mix(&parts)
    }

    pub fn validate(&self, tree: &ScenarioTree) -> Vec<Violation> {
        let mut out = Vec::new();
        for node in tree.non_terminal_nodes() {
            let key = tree.node_key(&node);
            match self.weights.get(&node) {
                None => out.push(Violation::new(&key, "kernel weights absent")),
                Some(w) => {
                    if w.len() != tree.generators(&node).len() {
                        out.push(Violation::new(&key, "kernel weight count mismatch"));
                    } else if w.iter().any(|x| x.is_negative()) {
                        out.push(Violation::new(&key, "kernel weight negative"));
                    } else if !w.iter().sum::<Rat>().is_one() {
                        out.push(Violation::new(&key, "kernel weights sum ≠ 1"));
                    }
                }
            }
        }
        for node in self.weights.keys() {
            if node.depth() >= tree.horizon || tree.node_key_checked(node).is_none() {
                out.push(Violation::new(
                    &format!("{:?}", node),
                    "kernel weights at unknown node",
                ));
            }
        }
        out
    }
}

/// A trading strategy: initial capital plus a position vector chosen at
/// every non-terminal node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub initial_capital: Rat,
    pub positions: BTreeMap<NodeId, Vec<Rat>>,
}

impl Strategy {
    pub fn zero(tree: &ScenarioTree) -> Self {
        let mut positions = BTreeMap::new();
        for node in tree.non_terminal_nodes() {
            positions.insert(node, vec![Rat::zero(); tree.asset_dim]);
        }
        Strategy { initial_capital: Rat::zero(), positions }
    }
}

/// One invariant violation, located at a node key (or a structural field).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl Violation {
    pub fn new(location: &str, message: &str) -> Self {
        Violation { location: location.to_string(), message: message.to_string() }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "node `{}`: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MarketError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown label `{label}` at level {level}")]
    UnknownLabel { level: usize, label: String },
    #[error("price absent at node `{0}`")]
    MissingPrice(String),
    #[error("strategy position absent at node `{0}`")]
    MissingPosition(String),
}

/// The finite multi-prior market model.
///
/// `alphabets[t]` is the label set shared by every edge from depth `t` to
/// depth `t + 1`. `prices` must cover every node of depth `0..=horizon`;
/// `priors` gives each non-terminal node its nonempty list of generator
/// measures, whose convex hull is the local prior set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioTree {
    pub horizon: usize,
    pub asset_dim: usize,
    pub alphabets: Vec<Vec<String>>,
    pub prices: BTreeMap<NodeId, Vec<Rat>>,
    pub priors: BTreeMap<NodeId, Vec<ProbVector>>,
}

impl ScenarioTree {
    /// Every invariant violation, with its node location. Empty iff the
    /// tree is well-formed; all other operations assume a valid tree.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.horizon == 0 {
            out.push(Violation::new("", "horizon must be ≥ 1"));
        }
        if self.asset_dim == 0 {
            out.push(Violation::new("", "asset_dim must be ≥ 1"));
        }
        if self.alphabets.len() != self.horizon {
            out.push(Violation::new(
                "",
                &format!(
                    "expected {} alphabets, found {}",
                    self.horizon,
                    self.alphabets.len()
                ),
            ));
            return out; // level structure unusable; stop here
        }
        for (t, alpha) in self.alphabets.iter().enumerate() {
            if alpha.is_empty() {
                out.push(Violation::new("", &format!("alphabet {} is empty", t)));
            }
            let mut seen = BTreeSet::new();
            for label in alpha {
                if label.contains('/') {
                    out.push(Violation::new(
                        "",
                        &format!("label `{}` in alphabet {} contains '/'", label, t),
                    ));
                }
                if !seen.insert(label) {
                    out.push(Violation::new(
                        "",
                        &format!("label `{}` repeated in alphabet {}", label, t),
                    ));
                }
            }
        }
        if out.iter().any(|v| v.message.contains("is empty")) {
            return out; // node enumeration would be vacuous below
        }
        for t in 0..=self.horizon {
            for node in self.nodes_at_depth(t) {
                let key = self.node_key(&node);
                match self.prices.get(&node) {
                    None => out.push(Violation::new(&key, "price absent")),
                    Some(p) if p.len() != self.asset_dim => {
                        out.push(Violation::new(&key, "price dimension mismatch"))
                    }
                    _ => {}
                }
                if t < self.horizon {
                    match self.priors.get(&node) {
                        None => out.push(Violation::new(&key, "generators absent")),
                        Some(gens) if gens.is_empty() => {
                            out.push(Violation::new(&key, "generator list empty"))
                        }
                        Some(gens) => {
                            let m = self.alphabets[t].len();
                            for (i, g) in gens.iter().enumerate() {
                                if g.weights.len() != m {
                                    out.push(Violation::new(
                                        &key,
                                        &format!("generator {} has wrong arity", i),
                                    ));
                                } else if g.weights.iter().any(|w| w.is_negative()) {
                                    out.push(Violation::new(
                                        &key,
                                        &format!("generator {} has a negative weight", i),
                                    ));
                                } else if !g.weights.iter().sum::<Rat>().is_one() {
                                    out.push(Violation::new(
                                        &key,
                                        &format!("generator {}: weights sum ≠ 1", i),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        for node in self.prices.keys() {
            if self.node_key_checked(node).is_none() {
                out.push(Violation::new(&format!("{:?}", node), "price at unknown node"));
            }
        }
        for node in self.priors.keys() {
            if node.depth() >= self.horizon || self.node_key_checked(node).is_none() {
                out.push(Violation::new(&format!("{:?}", node), "generators at unknown node"));
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// All nodes of the given depth, in lexicographic label-index order.
    pub fn nodes_at_depth(&self, depth: usize) -> Vec<NodeId> {
        assert!(depth <= self.horizon);
        let mut acc = vec![NodeId::root()];
        for t in 0..depth {
            let m = self.alphabets[t].len();
            let mut next = Vec::with_capacity(acc.len() * m);
            for node in &acc {
                for a in 0..m {
                    next.push(node.child(a));
                }
            }
            acc = next;
        }
        acc
    }

    pub fn non_terminal_nodes(&self) -> Vec<NodeId> {
        (0..self.horizon).flat_map(|t| self.nodes_at_depth(t)).collect()
    }

    pub fn paths(&self) -> Vec<Path> {
        self.nodes_at_depth(self.horizon)
    }

    pub fn children(&self, node: &NodeId) -> Vec<NodeId> {
        assert!(node.depth() < self.horizon, "terminal node has no children");
        (0..self.alphabets[node.depth()].len()).map(|a| node.child(a)).collect()
    }

    /// `"/"`-joined labels; the root is the empty string.
    pub fn node_key(&self, node: &NodeId) -> String {
        self.node_key_checked(node)
            .unwrap_or_else(|| panic!("node {:?} outside the tree", node))
    }

    pub fn node_key_checked(&self, node: &NodeId) -> Option<String> {
        if node.depth() > self.horizon {
            return None;
        }
        let mut labels = Vec::with_capacity(node.depth());
        for (t, &a) in node.0.iter().enumerate() {
            labels.push(self.alphabets.get(t)?.get(a)?.as_str());
        }
        Some(labels.join("/"))
    }

    pub fn parse_key(&self, key: &str) -> Result<NodeId, MarketError> {
        if key.is_empty() {
            return Ok(NodeId::root());
        }
        let mut indices = Vec::new();
        for (t, label) in key.split('/').enumerate() {
            let alphabet = if t < self.horizon { self.alphabets.get(t) } else { None };
            let Some(alphabet) = alphabet else {
                return Err(MarketError::UnknownNode(key.to_string()));
            };
            match alphabet.iter().position(|l| l == label) {
                Some(a) => indices.push(a),
                None => {
                    return Err(MarketError::UnknownLabel { level: t, label: label.to_string() })
                }
            }
        }
        Ok(NodeId(indices))
    }

    pub fn price(&self, node: &NodeId) -> Result<&Vec<Rat>, MarketError> {
        self.prices
            .get(node)
            .ok_or_else(|| MarketError::MissingPrice(self.node_key(node)))
    }

    /// Generators of the local prior set at a non-terminal node.
    pub fn generators(&self, node: &NodeId) -> &[ProbVector] {
        self.priors
            .get(node)
            .unwrap_or_else(|| panic!("generators absent at {:?}", node))
    }

    /// One-step price increment `S_{t+1}(node, label) - S_t(node)`.
    pub fn delta_s(&self, node: &NodeId, label: usize) -> Result<Vec<Rat>, MarketError> {
        if node.depth() >= self.horizon {
            return Err(MarketError::UnknownNode(self.node_key(node)));
        }
        if label >= self.alphabets[node.depth()].len() {
            return Err(MarketError::UnknownLabel {
                level: node.depth(),
                label: format!("#{label}"),
            });
        }
        let here = self.price(node)?;
        let child = node.child(label);
        let there = self.price(&child)?;
        Ok(there.iter().zip(here).map(|(a, b)| a - b).collect())
    }

    /// Wealth along a path: `V_0 = x`, `V_t = V_{t-1} + φ_t · ΔS_t`.
    pub fn value_process(
        &self,
        strategy: &Strategy,
        path: &Path,
    ) -> Result<Vec<Rat>, MarketError> {
        assert_eq!(path.depth(), self.horizon, "value process needs a full path");
        let mut values = Vec::with_capacity(self.horizon + 1);
        let mut v = strategy.initial_capital.clone();
        values.push(v.clone());
        for t in 0..self.horizon {
            let node = path.prefix(t);
            let pos = strategy
                .positions
                .get(&node)
                .ok_or_else(|| MarketError::MissingPosition(self.node_key(&node)))?;
            let step = self.delta_s(&node, path.0[t])?;
            v = v + crate::geom::dot(pos, &step);
            values.push(v.clone());
        }
        Ok(values)
    }

    /// Support of the one-step increment under a single measure: the
    /// increments of the outcomes `p` charges, deduplicated.
    pub fn support_e(&self, node: &NodeId, p: &ProbVector) -> Vec<Vec<Rat>> {
        let mut set = BTreeSet::new();
        for a in p.support() {
            set.insert(self.delta_s(node, a).expect("valid tree"));
        }
        set.into_iter().collect()
    }

    /// Quasi-sure support: union of the generator supports.
    pub fn support_d(&self, node: &NodeId) -> Vec<Vec<Rat>> {
        let mut set = BTreeSet::new();
        for g in self.generators(node) {
            for a in g.support() {
                set.insert(self.delta_s(node, a).expect("valid tree"));
            }
        }
        set.into_iter().collect()
    }

    /// Support under the kernel-selected measure; always a subset of
    /// [`support_d`](Self::support_d).
    pub fn support_dp(&self, kernels: &KernelSelection, node: &NodeId) -> Vec<Vec<Rat>> {
        self.support_e(node, &kernels.induced(self, node))
    }

    /// Labels charged by at least one generator.
    pub fn relevant_children(&self, node: &NodeId) -> Vec<usize> {
        let m = self.alphabets[node.depth()].len();
        (0..m)
            .filter(|&a| self.generators(node).iter().any(|g| g.weights[a].is_positive()))
            .collect()
    }

    /// True iff every edge along the prefix is charged by some generator.
    /// A path set is polar iff it contains no relevant path.
    pub fn is_relevant_path(&self, prefix: &NodeId) -> bool {
        for (t, &label) in prefix.0.iter().enumerate() {
            let parent = prefix.prefix(t);
            let charged = self
                .generators(&parent)
                .iter()
                .any(|g| g.weights[label].is_positive());
            if !charged {
                return false;
            }
        }
        true
    }

    /// All relevant prefixes of the given depth.
    pub fn relevant_nodes_at_depth(&self, depth: usize) -> Vec<NodeId> {
        let mut acc = vec![NodeId::root()];
        for _t in 0..depth {
            let mut next = Vec::new();
            for node in &acc {
                for a in self.relevant_children(node) {
                    next.push(node.child(a));
                }
            }
            acc = next;
        }
        acc
    }

    pub fn relevant_paths(&self) -> Vec<Path> {
        self.relevant_nodes_at_depth(self.horizon)
    }

    /// Mass the induced product measure gives to a full path.
    pub fn path_probability(&self, kernels: &KernelSelection, path: &Path) -> Rat {
        assert_eq!(path.depth(), self.horizon);
        let mut mass = Rat::one();
        for t in 0..self.horizon {
            let node = path.prefix(t);
            let q = kernels.induced(self, &node);
            mass = mass * &q.weights[path.0[t]];
            if mass.is_zero() {
                return mass;
            }
        }
        mass
    }

    /// True iff `f ≥ bound` on every relevant path — the finite analog of
    /// a quasi-sure inequality.
    pub fn quasi_sure_geq(&self, f: impl Fn(&Path) -> Rat, bound: &Rat) -> bool {
        self.relevant_paths().iter().all(|p| &f(p) >= bound)
    }
}
