//! Exact convex and affine geometry over rationals.
//!
//! Affine hulls, membership tests, relative-interior membership of the
//! origin, and separating vectors — the geometric half of the no-arbitrage
//! criteria. All decisions are exact; the relative-interior test is backed
//! by the simplex core in [`lp`].

pub mod lp;

use crate::rat::Rat;
use lp::{Bounds, LinearProgram, LpOutcome, Relation};
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeomError {
    #[error("0 lies in the relative interior of the convex hull; no separating vector exists")]
    NoSeparator,
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

pub fn is_zero_vec(v: &[Rat]) -> bool {
    v.iter().all(Rat::is_zero)
}

pub fn sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Incremental row-echelon accumulator for exact span membership.
///
/// Each inserted row is reduced against all previous rows, so reducing a
/// vector in insertion order zeroes every pivot column progressively.
#[derive(Debug, Clone, Default)]
pub(crate) struct Echelon {
    rows: Vec<(Vec<Rat>, usize)>, // (reduced row, pivot column)
}

impl Echelon {
    pub fn residual(&self, v: &[Rat]) -> Vec<Rat> {
        let mut r = v.to_vec();
        for (row, pivot) in &self.rows {
            if !r[*pivot].is_zero() {
                let factor = &r[*pivot] / &row[*pivot];
                for (x, y) in r.iter_mut().zip(row.iter()) {
                    if !y.is_zero() {
                        *x = &*x - &(&factor * y);
                    }
                }
            }
        }
        r
    }

    /// Returns true when `v` was independent of the rows seen so far.
    pub fn insert(&mut self, v: &[Rat]) -> bool {
        let r = self.residual(v);
        match r.iter().position(|x| !x.is_zero()) {
            Some(pivot) => {
                self.rows.push((r, pivot));
                true
            }
            None => false,
        }
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        is_zero_vec(&self.residual(v))
    }
}

/// The smallest affine set containing a point cloud: a base point plus a
/// maximal independent set of difference vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSubspace {
    base_point: Vec<Rat>,
    basis: Vec<Vec<Rat>>,
}

impl AffineSubspace {
    pub fn base_point(&self) -> &[Rat] {
        &self.base_point
    }

    pub fn basis(&self) -> &[Vec<Rat>] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.base_point.len()
    }

    fn direction_echelon(&self) -> Echelon {
        let mut ech = Echelon::default();
        for v in &self.basis {
            let fresh = ech.insert(v);
            debug_assert!(fresh, "basis vectors must be independent");
        }
        ech
    }

    /// Affine membership: x - base lies in the span of the basis.
    pub fn contains(&self, x: &[Rat]) -> bool {
        self.direction_echelon().contains(&sub(x, &self.base_point))
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&vec![Rat::zero(); self.ambient_dim()])
    }

    /// Equality as affine sets: same dimension, mutually contained base
    /// points, and each direction of one inside the span of the other.
    pub fn same_as(&self, other: &AffineSubspace) -> bool {
        if self.dim() != other.dim() || self.ambient_dim() != other.ambient_dim() {
            return false;
        }
        if !self.contains(&other.base_point) || !other.contains(&self.base_point) {
            return false;
        }
        let ech = other.direction_echelon();
        self.basis.iter().all(|v| ech.contains(v))
    }
}

/// Smallest affine set containing `points`. Panics on an empty input.
pub fn affine_hull(points: &[Vec<Rat>]) -> AffineSubspace {
    assert!(!points.is_empty(), "affine hull of an empty point set");
    let base = points[0].clone();
    let mut ech = Echelon::default();
    let mut basis = Vec::new();
    for p in &points[1..] {
        let v = sub(p, &base);
        if ech.insert(&v) {
            basis.push(v);
        }
    }
    AffineSubspace { base_point: base, basis }
}

pub fn aff_contains(aff: &AffineSubspace, x: &[Rat]) -> bool {
    aff.contains(x)
}

/// Strictly positive convex weights witnessing `0 ∈ Ri(Conv(points))`, if
/// the origin lies in the relative interior; `None` otherwise.
///
/// Decided by the exact program: maximize e subject to
/// sum_i w_i y_i = 0, sum_i w_i = 1, w_i >= e. The optimum is positive
/// exactly when a strictly positive convex combination of the points hits
/// the origin, which for finite sets is the relative-interior condition.
pub fn ri_conv_zero_certificate(points: &[Vec<Rat>]) -> Option<Vec<Rat>> {
    assert!(!points.is_empty(), "relative-interior test on an empty point set");
    let d = points[0].len();
    let n = points.len();
    let zero = vec![Rat::zero(); d];
    if !affine_hull(points).contains(&zero) {
        return None;
    }
    // Variables: w_1..w_n, e (all free; the equality rows pin them down).
    let mut prog = LinearProgram::new(n + 1);
    prog.objective[n] = Rat::one();
    for k in 0..d {
        let mut row: Vec<Rat> = points.iter().map(|y| y[k].clone()).collect();
        row.push(Rat::zero());
        prog.constrain(row, Relation::Eq, Rat::zero());
    }
    let mut ones = vec![Rat::one(); n];
    ones.push(Rat::zero());
    prog.constrain(ones, Relation::Eq, Rat::one());
    for i in 0..n {
        let mut row = vec![Rat::zero(); n + 1];
        row[i] = Rat::one();
        row[n] = -Rat::one();
        prog.constrain(row, Relation::Ge, Rat::zero());
    }
    match prog.solve().expect("well-formed program") {
        LpOutcome::Optimal { value, solution } => {
            if value.is_positive() {
                Some(solution[..n].to_vec())
            } else {
                None
            }
        }
        // 0 in the affine hull makes the program feasible, and the weight
        // normalization bounds e above by 1/n.
        other => unreachable!("relative-interior program cannot be {other:?}"),
    }
}

pub fn ri_conv_contains_zero(points: &[Vec<Rat>]) -> bool {
    ri_conv_zero_certificate(points).is_some()
}

/// Basis of the linear span of `points` (directions through the origin).
pub fn span_basis(points: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let mut ech = Echelon::default();
    let mut basis = Vec::new();
    for p in points {
        if ech.insert(p) {
            basis.push(p.clone());
        }
    }
    basis
}

/// Scales a nonzero vector by a positive rational so that its first nonzero
/// coordinate becomes +1 or -1.
pub fn normalize_direction(h: &mut [Rat]) {
    if let Some(first) = h.iter().find(|x| !x.is_zero()) {
        let scale = first.abs();
        if !scale.is_one() {
            for x in h.iter_mut() {
                *x = &*x / &scale;
            }
        }
    }
}

/// A vector `h` in the linear span of `points` with `h·y >= 0` for every
/// point and either `h·y > 0` somewhere or `0 ∉ Aff(points)` (in which case
/// `h·y > 0` everywhere). Errors when `0 ∈ Ri(Conv(points))`.
pub fn separating_vector(points: &[Vec<Rat>]) -> Result<Vec<Rat>, GeomError> {
    assert!(!points.is_empty(), "separating vector of an empty point set");
    let d = points[0].len();
    let zero = vec![Rat::zero(); d];
    let aff = affine_hull(points);

    if !aff.contains(&zero) {
        // The projection z of the origin onto the affine hull satisfies
        // z·y = |z|^2 > 0 for every y in the hull.
        let mut z = origin_projection(&aff);
        debug_assert!(!is_zero_vec(&z));
        normalize_direction(&mut z);
        return Ok(z);
    }

    // 0 in the affine hull: the hull is the linear span of the points.
    // Search h = sum_j a_j b_j maximizing total slack under h·y >= 0.
    let basis = span_basis(points);
    let k = basis.len();
    if k == 0 {
        // Every point is the origin, so 0 is the whole hull.
        return Err(GeomError::NoSeparator);
    }
    let mut prog = LinearProgram::new(k);
    for j in 0..k {
        prog.bounds[j] = Bounds { lower: Some(-Rat::one()), upper: Some(Rat::one()) };
        prog.objective[j] = points.iter().map(|y| dot(&basis[j], y)).sum();
    }
    for y in points {
        let row: Vec<Rat> = basis.iter().map(|b| dot(b, y)).collect();
        prog.constrain(row, Relation::Ge, Rat::zero());
    }
    match prog.solve().expect("well-formed program") {
        LpOutcome::Optimal { value, solution } => {
            if !value.is_positive() {
                return Err(GeomError::NoSeparator);
            }
            let mut h = vec![Rat::zero(); d];
            for (a, b) in solution.iter().zip(&basis) {
                for (hx, bx) in h.iter_mut().zip(b) {
                    *hx = &*hx + &(a * bx);
                }
            }
            normalize_direction(&mut h);
            Ok(h)
        }
        other => unreachable!("box-bounded feasible program cannot be {other:?}"),
    }
}

/// Solves a square rational system by Gaussian elimination; `None` if
/// singular.
pub fn gaussian_solve(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &p;
            for c in col..n {
                let delta = &f * &a[col][c];
                a[r][c] = &a[r][c] - &delta;
            }
            let delta = &f * &b[col];
            b[r] = &b[r] - &delta;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Orthogonal projection of the origin onto an affine subspace: the unique
/// `z` in the subspace with `z · y = |z|^2` for every member `y`. Solves
/// the Gram normal equations exactly.
pub fn origin_projection(aff: &AffineSubspace) -> Vec<Rat> {
    let basis = aff.basis();
    let b = aff.base_point();
    if basis.is_empty() {
        return b.to_vec();
    }
    let k = basis.len();
    let gram: Vec<Vec<Rat>> =
        (0..k).map(|i| (0..k).map(|j| dot(&basis[i], &basis[j])).collect()).collect();
    let rhs: Vec<Rat> = (0..k).map(|i| -dot(&basis[i], b)).collect();
    let t = gaussian_solve(gram, rhs).expect("Gram matrix of independent vectors is invertible");
    let mut z = b.to_vec();
    for (ti, v) in t.iter().zip(basis) {
        for (zx, vx) in z.iter_mut().zip(v) {
            *zx = &*zx + &(ti * vx);
        }
    }
    z
}
