//! Exact linear programming over rationals.
//!
//! Dense two-phase simplex with Bland's pivoting rule, so termination is
//! guaranteed and every reported optimum is exact. No scaling or
//! preprocessing is done; rational arithmetic makes conditioning moot.
//!
//! The solver maximizes `objective · x`. Minimize by negating the objective.

use crate::rat::Rat;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub relation: Relation,
    pub rhs: Rat,
}

/// Per-variable bounds; `None` on both sides means a free variable.
#[derive(Debug, Clone, Default)]
pub struct Bounds {
    pub lower: Option<Rat>,
    pub upper: Option<Rat>,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<Rat>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bounds>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Rat, solution: Vec<Rat> },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
}

impl LinearProgram {
    /// Fresh program over `num_vars` free variables with a zero objective.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![Rat::zero(); num_vars],
            constraints: Vec::new(),
            bounds: vec![Bounds::default(); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<Rat>, relation: Relation, rhs: Rat) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn check_dimensions(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::Dimension(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                n
            )));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Dimension(format!(
                    "constraint {} has {} coefficients for {} variables",
                    i,
                    c.coeffs.len(),
                    n
                )));
            }
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpOutcome, LpError> {
        self.check_dimensions()?;
        Ok(solve_impl(self))
    }
}

/// How an original variable maps onto the nonnegative tableau variables.
#[derive(Debug, Clone)]
enum VarMap {
    /// x = lower + u
    Shift { col: usize, lower: Rat },
    /// x = upper - u
    Mirror { col: usize, upper: Rat },
    /// x = u - v
    Split { pos: usize, neg: usize },
}

struct Tableau {
    /// rows[i] has `ncols + 1` entries; the last one is the rhs.
    rows: Vec<Vec<Rat>>,
    /// basis[i] = column index of the basic variable of row i.
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rat {
        &self.rows[i][self.ncols]
    }

    fn pivot(&mut self, row: usize, col: usize, obj: &mut Vec<Rat>) {
        let piv = self.rows[row][col].clone();
        debug_assert!(!piv.is_zero());
        if !piv.is_one() {
            for x in self.rows[row].iter_mut() {
                if !x.is_zero() {
                    *x = &*x / &piv;
                }
            }
        }
        let piv_row = self.rows[row].clone();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            eliminate(other, &piv_row, col);
        }
        eliminate(obj, &piv_row, col);
        self.basis[row] = col;
    }
}

fn eliminate(target: &mut [Rat], piv_row: &[Rat], col: usize) {
    let factor = target[col].clone();
    if factor.is_zero() {
        return;
    }
    for (t, p) in target.iter_mut().zip(piv_row.iter()) {
        if !p.is_zero() {
            *t = &*t - &(&factor * p);
        }
    }
}

/// Objective row holding reduced costs `c_B B^-1 A_j - c_j`; entry `ncols`
/// carries the current objective value. Optimal (for max) when all reduced
/// costs are >= 0.
fn init_obj_row(tab: &Tableau, cost: &[Rat]) -> Vec<Rat> {
    let mut obj = vec![Rat::zero(); tab.ncols + 1];
    for (j, c) in cost.iter().enumerate() {
        obj[j] = -c.clone();
    }
    for (i, &b) in tab.basis.iter().enumerate() {
        let cb = cost[b].clone();
        if cb.is_zero() {
            continue;
        }
        for (o, r) in obj.iter_mut().zip(tab.rows[i].iter()) {
            if !r.is_zero() {
                *o = &*o + &(&cb * r);
            }
        }
    }
    // value entry sign: obj[ncols] accumulated c_B * b, which is the value.
    obj
}

enum SimplexEnd {
    Optimal,
    Unbounded,
}

/// Bland's rule: entering = smallest column with negative reduced cost;
/// leaving = smallest basic-variable index among the minimum-ratio rows.
fn run_simplex(tab: &mut Tableau, obj: &mut Vec<Rat>, allowed_cols: usize) -> SimplexEnd {
    loop {
        let mut entering = None;
        for (j, rc) in obj.iter().take(allowed_cols).enumerate() {
            if rc.is_negative() {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else {
            return SimplexEnd::Optimal;
        };
        let mut leave: Option<(usize, Rat)> = None;
        for i in 0..tab.rows.len() {
            let a = &tab.rows[i][e];
            if a.is_positive() {
                let ratio = tab.rhs(i) / a;
                match &leave {
                    None => leave = Some((i, ratio)),
                    Some((best_i, best)) => {
                        if ratio < *best
                            || (ratio == *best && tab.basis[i] < tab.basis[*best_i])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, _)) = leave else {
            return SimplexEnd::Unbounded;
        };
        tab.pivot(row, e, obj);
    }
}

fn solve_impl(lp: &LinearProgram) -> LpOutcome {
    let n = lp.num_vars();

    // Map every variable onto nonnegative tableau variables.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut extra_rows: Vec<(usize, Rat)> = Vec::new(); // u_col <= cap
    for b in &lp.bounds {
        match (&b.lower, &b.upper) {
            (Some(l), Some(u)) => {
                if u < l {
                    return LpOutcome::Infeasible;
                }
                maps.push(VarMap::Shift { col: ncols, lower: l.clone() });
                extra_rows.push((ncols, u - l));
                ncols += 1;
            }
            (Some(l), None) => {
                maps.push(VarMap::Shift { col: ncols, lower: l.clone() });
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap::Mirror { col: ncols, upper: u.clone() });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            }
        }
    }
    let nstruct = ncols;

    // Rewrite rows over the tableau variables.
    struct Row {
        coeffs: Vec<Rat>,
        relation: Relation,
        rhs: Rat,
    }
    let mut rows: Vec<Row> = Vec::with_capacity(lp.constraints.len() + extra_rows.len());
    for c in &lp.constraints {
        let mut coeffs = vec![Rat::zero(); nstruct];
        let mut rhs = c.rhs.clone();
        for (j, a) in c.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            match &maps[j] {
                VarMap::Shift { col, lower } => {
                    coeffs[*col] = &coeffs[*col] + a;
                    rhs = &rhs - &(a * lower);
                }
                VarMap::Mirror { col, upper } => {
                    coeffs[*col] = &coeffs[*col] - a;
                    rhs = &rhs - &(a * upper);
                }
                VarMap::Split { pos, neg } => {
                    coeffs[*pos] = &coeffs[*pos] + a;
                    coeffs[*neg] = &coeffs[*neg] - a;
                }
            }
        }
        rows.push(Row { coeffs, relation: c.relation, rhs });
    }
    for (col, cap) in extra_rows {
        let mut coeffs = vec![Rat::zero(); nstruct];
        coeffs[col] = Rat::one();
        rows.push(Row { coeffs, relation: Relation::Le, rhs: cap });
    }

    // Normalize to nonnegative right-hand sides.
    for r in rows.iter_mut() {
        if r.rhs.is_negative() {
            for x in r.coeffs.iter_mut() {
                *x = -&*x;
            }
            r.rhs = -&r.rhs;
            r.relation = match r.relation {
                Relation::Le => Relation::Ge,
                Relation::Eq => Relation::Eq,
                Relation::Ge => Relation::Le,
            };
        }
    }

    // Slack, surplus and artificial columns.
    let m = rows.len();
    let n_slack = rows
        .iter()
        .filter(|r| matches!(r.relation, Relation::Le | Relation::Ge))
        .count();
    let n_art = rows
        .iter()
        .filter(|r| matches!(r.relation, Relation::Ge | Relation::Eq))
        .count();
    let total = nstruct + n_slack + n_art;

    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: vec![0; m],
        ncols: total,
    };
    let mut slack_at = nstruct;
    let mut art_at = nstruct + n_slack;
    let mut art_cols = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut row = vec![Rat::zero(); total + 1];
        row[..nstruct].clone_from_slice(&r.coeffs);
        row[total] = r.rhs.clone();
        match r.relation {
            Relation::Le => {
                row[slack_at] = Rat::one();
                tab.basis[i] = slack_at;
                slack_at += 1;
            }
            Relation::Ge => {
                row[slack_at] = -Rat::one();
                slack_at += 1;
                row[art_at] = Rat::one();
                tab.basis[i] = art_at;
                art_cols.push(art_at);
                art_at += 1;
            }
            Relation::Eq => {
                row[art_at] = Rat::one();
                tab.basis[i] = art_at;
                art_cols.push(art_at);
                art_at += 1;
            }
        }
        tab.rows.push(row);
    }

    // Phase 1: maximize -(sum of artificials).
    if !art_cols.is_empty() {
        let mut cost = vec![Rat::zero(); total];
        for &c in &art_cols {
            cost[c] = -Rat::one();
        }
        let mut obj = init_obj_row(&tab, &cost);
        match run_simplex(&mut tab, &mut obj, total) {
            SimplexEnd::Optimal => {}
            SimplexEnd::Unbounded => unreachable!("phase-1 objective is bounded above by 0"),
        }
        if obj[total].is_negative() {
            return LpOutcome::Infeasible;
        }
        // Drive leftover artificials out of the basis; drop redundant rows.
        let is_art = |c: usize| c >= nstruct + n_slack;
        let mut i = 0;
        while i < tab.rows.len() {
            if is_art(tab.basis[i]) {
                let piv_col = (0..nstruct + n_slack).find(|&j| !tab.rows[i][j].is_zero());
                match piv_col {
                    Some(j) => tab.pivot(i, j, &mut obj),
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    // Phase 2: the real objective, artificial columns barred from entering.
    let entering_limit = nstruct + n_slack;
    let mut cost = vec![Rat::zero(); total];
    for (j, c) in lp.objective.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        match &maps[j] {
            VarMap::Shift { col, .. } => cost[*col] = &cost[*col] + c,
            VarMap::Mirror { col, .. } => cost[*col] = &cost[*col] - c,
            VarMap::Split { pos, neg } => {
                cost[*pos] = &cost[*pos] + c;
                cost[*neg] = &cost[*neg] - c;
            }
        }
    }
    let mut obj = init_obj_row(&tab, &cost);
    match run_simplex(&mut tab, &mut obj, entering_limit) {
        SimplexEnd::Unbounded => return LpOutcome::Unbounded,
        SimplexEnd::Optimal => {}
    }

    // Read the tableau solution and map it back.
    let mut u = vec![Rat::zero(); total];
    for (i, &b) in tab.basis.iter().enumerate() {
        u[b] = tab.rhs(i).clone();
    }
    let mut solution = Vec::with_capacity(n);
    for map in &maps {
        let x = match map {
            VarMap::Shift { col, lower } => lower + &u[*col],
            VarMap::Mirror { col, upper } => upper - &u[*col],
            VarMap::Split { pos, neg } => &u[*pos] - &u[*neg],
        };
        solution.push(x);
    }
    let value = lp
        .objective
        .iter()
        .zip(solution.iter())
        .fold(Rat::zero(), |acc, (c, x)| acc + c * x);
    LpOutcome::Optimal { value, solution }
}
