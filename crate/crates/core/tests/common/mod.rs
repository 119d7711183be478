//! Independent oracles shared by the integration suites.
//!
//! Everything here decides the same questions as the production code by a
//! different route: plain Gaussian elimination for ranks, Fourier-Motzkin
//! elimination for strict feasibility, exhaustive vertex enumeration for
//! small linear programs, and the witness-search program for local
//! no-arbitrage.

#![allow(dead_code)]

use num_traits::{One, Signed, Zero};
use qsna_core::geom::lp::{LinearProgram, LpOutcome, Relation};
use qsna_core::market::sample;
use qsna_core::rat::{rat, Rat};
use qsna_core::{NodeId, ProbVector, ScenarioTree};
use rand::Rng;
use std::collections::BTreeMap;

// ---------------------------------------------------------------------------
// Exact rank by full Gaussian elimination (independent of geom::Echelon)
// ---------------------------------------------------------------------------

pub fn gaussian_rank(mut m: Vec<Vec<Rat>>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        let Some(piv) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, piv);
        let p = m[row][col].clone();
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = &m[r][col] / &p;
                for c in col..cols {
                    let delta = &f * &m[row][c];
                    m[r][c] = &m[r][c] - &delta;
                }
            }
        }
        rank += 1;
        row += 1;
        if row == m.len() {
            break;
        }
    }
    rank
}

// ---------------------------------------------------------------------------
// Fourier-Motzkin decision of 0 ∈ Ri(Conv(points))
// ---------------------------------------------------------------------------

/// A strict linear inequality `coeffs · t + constant > 0`.
#[derive(Debug, Clone)]
struct StrictIneq {
    coeffs: Vec<Rat>,
    constant: Rat,
}

/// Decides whether strictly positive convex weights with zero barycenter
/// exist, which for a finite point set is exactly `0 ∈ Ri(Conv(points))`.
/// Route: solve the equality system for the weights, then eliminate the
/// free parameters from the strict positivity constraints by
/// Fourier-Motzkin. Entirely independent of the simplex solver.
pub fn ri_zero_fm_oracle(points: &[Vec<Rat>]) -> bool {
    let n = points.len();
    let d = points[0].len();
    // Equality system over the weights: per-coordinate zero sum, total 1.
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(d + 1);
    let mut rhs: Vec<Rat> = Vec::with_capacity(d + 1);
    for k in 0..d {
        rows.push(points.iter().map(|y| y[k].clone()).collect());
        rhs.push(Rat::zero());
    }
    rows.push(vec![Rat::one(); n]);
    rhs.push(Rat::one());

    // Reduced row echelon form of [rows | rhs].
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(p) = (row..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(row, p);
        rhs.swap(row, p);
        let piv = rows[row][col].clone();
        for c in 0..n {
            rows[row][c] = &rows[row][c] / &piv;
        }
        rhs[row] = &rhs[row] / &piv;
        for r in 0..rows.len() {
            if r != row && !rows[r][col].is_zero() {
                let f = rows[r][col].clone();
                for c in 0..n {
                    let delta = &f * &rows[row][c];
                    rows[r][c] = &rows[r][c] - &delta;
                }
                let delta = &f * &rhs[row];
                rhs[r] = &rhs[r] - &delta;
            }
        }
        pivots.push(col);
        row += 1;
        if row == rows.len() {
            break;
        }
    }
    // Inconsistent equalities: 0 = nonzero.
    for r in row..rows.len() {
        if rows[r].iter().all(Rat::is_zero) && !rhs[r].is_zero() {
            return false;
        }
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();

    // Weight i as an affine function of the free parameters.
    let mut ineqs: Vec<StrictIneq> = Vec::with_capacity(n);
    for i in 0..n {
        let (coeffs, constant) = if let Some(r) = pivots.iter().position(|&p| p == i) {
            // pivot variable: value = rhs[r] - sum over free columns
            let coeffs: Vec<Rat> = free.iter().map(|&fc| -rows[r][fc].clone()).collect();
            (coeffs, rhs[r].clone())
        } else {
            let j = free.iter().position(|&fc| fc == i).expect("free variable");
            let mut coeffs = vec![Rat::zero(); free.len()];
            coeffs[j] = Rat::one();
            (coeffs, Rat::zero())
        };
        ineqs.push(StrictIneq { coeffs, constant });
    }

    // Eliminate parameters one by one.
    let mut active = ineqs;
    for var in (0..free.len()).rev() {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut rest = Vec::new();
        for q in active {
            let c = q.coeffs[var].clone();
            if c.is_positive() {
                pos.push(q);
            } else if c.is_negative() {
                neg.push(q);
            } else {
                rest.push(q);
            }
        }
        // one-sided constraints are always satisfiable in that variable
        if !pos.is_empty() && !neg.is_empty() {
            for p in &pos {
                for q in &neg {
                    let a = p.coeffs[var].clone();
                    let b = -q.coeffs[var].clone();
                    // b * p + a * q cancels the variable; both strict
                    let coeffs: Vec<Rat> = p
                        .coeffs
                        .iter()
                        .zip(&q.coeffs)
                        .map(|(x, y)| &b * x + &a * y)
                        .collect();
                    let constant = &b * &p.constant + &a * &q.constant;
                    rest.push(StrictIneq { coeffs, constant });
                }
            }
        }
        for q in rest.iter_mut() {
            q.coeffs.truncate(var);
        }
        active = rest;
    }
    active.iter().all(|q| q.constant.is_positive())
}

// ---------------------------------------------------------------------------
// Vertex-enumeration LP oracle (box-bounded programs only)
// ---------------------------------------------------------------------------

fn solve_square(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col].clone();
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &p;
                for c in col..n {
                    let delta = &f * &a[col][c];
                    a[r][c] = &a[r][c] - &delta;
                }
                let delta = &f * &b[col];
                b[r] = &b[r] - &delta;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Maximum of the objective over all vertices of the feasible polytope,
/// `None` when no vertex is feasible. Correct for programs whose variables
/// are all box-bounded (the feasible set is then a polytope, and a nonempty
/// polytope attains its maximum at a vertex).
pub fn lp_vertex_oracle(lp: &LinearProgram) -> Option<Rat> {
    let n = lp.num_vars();
    let mut planes: Vec<(Vec<Rat>, Rat)> = Vec::new();
    for c in &lp.constraints {
        planes.push((c.coeffs.clone(), c.rhs.clone()));
    }
    for (j, b) in lp.bounds.iter().enumerate() {
        let mut row = vec![Rat::zero(); n];
        row[j] = Rat::one();
        planes.push((row.clone(), b.lower.clone().expect("box-bounded oracle")));
        planes.push((row, b.upper.clone().expect("box-bounded oracle")));
    }
    let feasible = |x: &[Rat]| -> bool {
        for c in &lp.constraints {
            let lhs: Rat = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let ok = match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Eq => lhs == c.rhs,
                Relation::Ge => lhs >= c.rhs,
            };
            if !ok {
                return false;
            }
        }
        for (j, b) in lp.bounds.iter().enumerate() {
            if &x[j] < b.lower.as_ref().unwrap() || &x[j] > b.upper.as_ref().unwrap() {
                return false;
            }
        }
        true
    };

    let mut best: Option<Rat> = None;
    let m = planes.len();
    let mut chosen = vec![0usize; n];
    fn subsets(
        m: usize,
        k: usize,
        start: usize,
        chosen: &mut Vec<usize>,
        depth: usize,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if depth == k {
            visit(&chosen[..k]);
            return;
        }
        for i in start..m {
            chosen[depth] = i;
            subsets(m, k, i + 1, chosen, depth + 1, visit);
        }
    }
    let mut visit = |idx: &[usize]| {
        let a: Vec<Vec<Rat>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<Rat> = idx.iter().map(|&i| planes[i].1.clone()).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let value: Rat = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = match best.take() {
                    None => Some(value),
                    Some(old) => Some(if value > old { value } else { old }),
                };
            }
        }
    };
    subsets(m, n, 0, &mut chosen, 0, &mut visit);
    best
}

// ---------------------------------------------------------------------------
// Local no-arbitrage witness-search oracle
// ---------------------------------------------------------------------------

/// `max sum_y h·y  s.t.  h·y >= 0 for all y in D, |h_j| <= 1`:
/// local no-arbitrage holds iff the optimum is zero.
pub fn local_na_lp_oracle(tree: &ScenarioTree, node: &NodeId) -> bool {
    let points = tree.support_d(node);
    let d = tree.asset_dim;
    let mut lp = LinearProgram::new(d);
    for j in 0..d {
        lp.bounds[j] = qsna_core::geom::lp::Bounds {
            lower: Some(-Rat::one()),
            upper: Some(Rat::one()),
        };
        lp.objective[j] = points.iter().map(|y| y[j].clone()).sum();
    }
    for y in &points {
        lp.constrain(y.clone(), Relation::Ge, Rat::zero());
    }
    match lp.solve().expect("well-formed program") {
        LpOutcome::Optimal { value, .. } => !value.is_positive(),
        other => panic!("witness-search program cannot be {other:?}"),
    }
}

// ---------------------------------------------------------------------------
// Instance builders
// ---------------------------------------------------------------------------

/// One-period tree with the given per-child price increments (root price 0)
/// and generator priors.
pub fn one_period_tree(increments: &[Vec<Rat>], generators: Vec<ProbVector>) -> ScenarioTree {
    let n = increments.len();
    let d = increments[0].len();
    let alphabet: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    let mut prices = BTreeMap::new();
    prices.insert(NodeId::root(), vec![Rat::zero(); d]);
    for (i, inc) in increments.iter().enumerate() {
        prices.insert(NodeId(vec![i]), inc.clone());
    }
    let mut priors = BTreeMap::new();
    priors.insert(NodeId::root(), generators);
    ScenarioTree { horizon: 1, asset_dim: d, alphabets: vec![alphabet], prices, priors }
}

/// Random rational point with numerators in `-bound..=bound`.
pub fn random_point(rng: &mut impl Rng, d: usize, bound: i64) -> Vec<Rat> {
    (0..d)
        .map(|_| rat(rng.gen_range(-bound..=bound), rng.gen_range(1..=4)))
        .collect()
}

/// Random probability vector in the convex hull of the given generators.
pub fn random_hull_member(rng: &mut impl Rng, generators: &[ProbVector]) -> ProbVector {
    let k = generators.len();
    let weights = sample::prob_vector(rng, k, 8, (1, 4));
    let parts: Vec<(Rat, &ProbVector)> = weights
        .weights
        .iter()
        .cloned()
        .zip(generators.iter())
        .collect();
    ProbVector::mix(&parts)
}
