//! Dense two-phase primal simplex.
//!
//! Solves `maximize cᵀx` subject to linear rows `aᵀx {≤,=,≥} b` and `x ≥ 0`.
//! Pivoting uses Dantzig's rule and falls back to Bland's rule after a run of
//! degenerate pivots, which rules out cycling. The final basic solution is
//! recomputed from the original data with an LU solve to shed drift.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<f64>,
    rel: Relation,
    rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Row>,
    max_pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Result<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Ok(s),
            LpOutcome::Infeasible => Err(Error::LpFailure("infeasible".into())),
            LpOutcome::Unbounded => Err(Error::LpFailure("unbounded".into())),
        }
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            max_pivots: 50_000,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn maximize(&mut self, objective: Vec<f64>) -> &mut Self {
        assert_eq!(objective.len(), self.num_vars);
        self.objective = objective;
        self
    }

    pub fn add(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars);
        self.rows.push(Row { coeffs, rel, rhs });
        self
    }

    /// Sparse form of [`LinearProgram::add`].
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], rel: Relation, rhs: f64) -> &mut Self {
        let mut coeffs = vec![0.0; self.num_vars];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        self.add(coeffs, rel, rhs)
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    /// `rows × (cols + 1)`; the last column is the right-hand side.
    a: Vec<Vec<f64>>,
    /// Reduced-cost row (`z_j − c_j`) with the objective value in the last slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    artificial_start: usize,
    /// Original row index of each tableau row.
    row_origin: Vec<usize>,
    /// Sign applied to each original row so its rhs is nonnegative.
    row_sign: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars;
        let mut rel = Vec::with_capacity(lp.rows.len());
        let mut row_sign = Vec::with_capacity(lp.rows.len());
        for r in &lp.rows {
            if r.rhs < 0.0 {
                row_sign.push(-1.0);
                rel.push(match r.rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                });
            } else {
                row_sign.push(1.0);
                rel.push(r.rel);
            }
        }
        let n_slack = rel.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = rel.iter().filter(|r| **r != Relation::Le).count();
        let artificial_start = n + n_slack;
        let cols = artificial_start + n_art;
        let mut a = Vec::with_capacity(lp.rows.len());
        let mut basis = Vec::with_capacity(lp.rows.len());
        let (mut s, mut t) = (n, artificial_start);
        for (i, r) in lp.rows.iter().enumerate() {
            let mut row = vec![0.0; cols + 1];
            for (j, &c) in r.coeffs.iter().enumerate() {
                row[j] = c * row_sign[i];
            }
            row[cols] = r.rhs * row_sign[i];
            match rel[i] {
                Relation::Le => {
                    row[s] = 1.0;
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    s += 1;
                    row[t] = 1.0;
                    basis.push(t);
                    t += 1;
                }
                Relation::Eq => {
                    row[t] = 1.0;
                    basis.push(t);
                    t += 1;
                }
            }
            a.push(row);
        }
        Tableau {
            obj: vec![0.0; cols + 1],
            a,
            basis,
            cols,
            artificial_start,
            row_origin: (0..lp.rows.len()).collect(),
            row_sign,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        for x in self.a[r].iter_mut() {
            *x /= p;
        }
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c];
            if factor != 0.0 {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= factor * y;
                }
                row[c] = 0.0;
            }
        }
        let factor = self.obj[c];
        if factor != 0.0 {
            for (x, y) in self.obj.iter_mut().zip(&pivot_row) {
                *x -= factor * y;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Sets the reduced-cost row for maximizing `cost` over the first `active` columns.
    fn set_objective(&mut self, cost: &[f64]) {
        self.obj = vec![0.0; self.cols + 1];
        for (j, &c) in cost.iter().enumerate() {
            self.obj[j] = -c;
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost.get(b).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (x, y) in self.obj.iter_mut().zip(&self.a[i]) {
                    *x += cb * y;
                }
            }
        }
    }

    /// Runs simplex iterations over columns `< active`. `Ok(false)` means unbounded.
    fn iterate(&mut self, active: usize, max_pivots: usize) -> Result<bool> {
        let rhs = self.cols;
        let mut degenerate = 0usize;
        let mut last_value = self.obj[rhs];
        let scale = self
            .obj
            .iter()
            .take(active)
            .fold(1.0_f64, |s, x| s.max(x.abs()));
        for _ in 0..max_pivots {
            let bland = degenerate >= DEGENERATE_RUN;
            let entering = if bland {
                (0..active).find(|&j| self.obj[j] < -COST_TOL * scale)
            } else {
                (0..active)
                    .filter(|&j| self.obj[j] < -COST_TOL * scale)
                    .min_by(|&i, &j| self.obj[i].total_cmp(&self.obj[j]))
            };
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.a.iter().enumerate() {
                if row[c] > PIVOT_TOL {
                    let ratio = row[rhs].max(0.0) / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12 * br.abs().max(1.0)
                                || (ratio <= br + 1e-12 * br.abs().max(1.0) && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, c);
            let value = self.obj[rhs];
            if value > last_value + 1e-12 * last_value.abs().max(1.0) {
                degenerate = 0;
                last_value = value;
            } else {
                degenerate += 1;
            }
        }
        Err(Error::LpFailure("pivot limit reached".into()))
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome> {
        let n = lp.num_vars;
        // Phase 1: maximize −Σ artificials.
        if self.artificial_start < self.cols {
            let mut cost = vec![0.0; self.cols];
            for c in cost.iter_mut().skip(self.artificial_start) {
                *c = -1.0;
            }
            self.set_objective(&cost);
            if !self.iterate(self.cols, lp.max_pivots)? {
                return Err(Error::LpFailure("phase one unbounded".into()));
            }
            let infeas = -self.obj[self.cols];
            let rhs_scale = self.a.iter().fold(1.0_f64, |s, r| s.max(r[self.cols].abs()));
            if infeas > 1e-8 * rhs_scale {
                return Ok(LpOutcome::Infeasible);
            }
            self.expel_artificials();
        }
        let mut cost = vec![0.0; self.cols];
        cost[..n].copy_from_slice(&lp.objective);
        self.set_objective(&cost);
        if !self.iterate(self.artificial_start, lp.max_pivots)? {
            return Ok(LpOutcome::Unbounded);
        }
        let x = self.polished_solution(lp);
        let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        Ok(LpOutcome::Optimal(LpSolution { x, objective }))
    }

    /// Pivots zero-valued artificials out of the basis; drops redundant rows.
    fn expel_artificials(&mut self) {
        let mut i = 0;
        while i < self.a.len() {
            if self.basis[i] >= self.artificial_start {
                let col = (0..self.artificial_start)
                    .filter(|&j| self.a[i][j].abs() > PIVOT_TOL)
                    .max_by(|&p, &q| self.a[i][p].abs().total_cmp(&self.a[i][q].abs()));
                match col {
                    Some(c) => self.pivot(i, c),
                    None => {
                        self.a.remove(i);
                        self.basis.remove(i);
                        self.row_origin.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    fn polished_solution(&self, lp: &LinearProgram) -> Vec<f64> {
        let n = lp.num_vars;
        let mut raw = vec![0.0; self.cols];
        for (i, &b) in self.basis.iter().enumerate() {
            raw[b] = self.a[i][self.cols].max(0.0);
        }
        // Rebuild the basis matrix from the original rows (with slack columns).
        let k = self.basis.len();
        let mut slack_of_row = vec![None; lp.rows.len()];
        let mut s = n;
        for (i, r) in lp.rows.iter().enumerate() {
            if r.rel != Relation::Eq {
                slack_of_row[i] = Some(s);
                s += 1;
            }
        }
        let column = |j: usize, orig: usize| -> f64 {
            let r = &lp.rows[orig];
            let sign = self.row_sign[orig];
            if j < n {
                r.coeffs[j] * sign
            } else if Some(j) == slack_of_row[orig] {
                // Le rows (after sign flip) carry +1, Ge rows −1.
                let flipped_le = (r.rel == Relation::Le) == (sign > 0.0);
                if flipped_le {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            }
        };
        if self.basis.iter().any(|&b| b >= self.artificial_start) {
            return raw[..n].to_vec();
        }
        let mut bmat = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for (ri, &orig) in self.row_origin.iter().enumerate() {
            for (ci, &b) in self.basis.iter().enumerate() {
                bmat[(ri, ci)] = column(b, orig);
            }
            rhs[ri] = lp.rows[orig].rhs * self.row_sign[orig];
        }
        match bmat.lu().solve(&rhs) {
            Some(sol) if sol.iter().all(|x| x.is_finite()) => {
                let mut x = vec![0.0; self.cols];
                for (ci, &b) in self.basis.iter().enumerate() {
                    x[b] = sol[ci].max(0.0);
                }
                // Keep the polished point only if it is at least as feasible.
                if violation(lp, &x[..n]) <= violation(lp, &raw[..n]) {
                    x.truncate(n);
                    return x;
                }
                raw[..n].to_vec()
            }
            _ => raw[..n].to_vec(),
        }
    }
}

/// Largest constraint violation of a point.
pub fn violation(lp: &LinearProgram, x: &[f64]) -> f64 {
    let mut worst = x.iter().fold(0.0_f64, |w, &v| w.max(-v));
    for r in &lp.rows {
        let lhs: f64 = r.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        let v = match r.rel {
            Relation::Le => lhs - r.rhs,
            Relation::Ge => r.rhs - lhs,
            Relation::Eq => (lhs - r.rhs).abs(),
        };
        worst = worst.max(v);
    }
    worst
}
