//! Thin feasibility engine over a conic interior-point backend.
//!
//! Problems are assembled symbolically (PSD blocks, nonnegative and free
//! scalars, affine equalities/inequalities, rotated second-order cones,
//! optional linear objective), handed to the solver, and every claimed
//! witness is re-validated here against the declared constraints before a
//! `Feasible` verdict is issued. Infeasibility verdicts come from the
//! solver's certificate; anything ambiguous degrades to `Indeterminate`.

use std::collections::BTreeMap;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_FEAS_TOL: f64 = 1e-7;
pub const DEFAULT_INFEAS_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: u32 = 200;

/// Affine expression over the problem's scalar slots.
#[derive(Clone, Debug, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        LinExpr::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: usize) -> Self {
        LinExpr {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(mut self, v: usize, k: f64) -> Self {
        self.terms.push((v, k));
        self
    }

    pub fn offset(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn plus(mut self, other: &LinExpr) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self.constant += other.constant;
        self
    }

    pub fn minus(mut self, other: &LinExpr) -> Self {
        for &(v, k) in &other.terms {
            self.terms.push((v, -k));
        }
        self.constant -= other.constant;
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= k;
        }
        self.constant *= k;
        self
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, k)| k * x[v]).sum::<f64>()
    }

    /// Magnitude of the evaluated terms, for scale-relative residuals.
    fn magnitude(&self, x: &[f64]) -> f64 {
        self.constant.abs()
            + self
                .terms
                .iter()
                .map(|&(v, k)| (k * x[v]).abs())
                .sum::<f64>()
    }
}

/// Handle to a symmetric PSD matrix variable; scalar slots hold the upper
/// triangle in column-stacked order.
#[derive(Clone, Copy, Debug)]
pub struct PsdVar {
    start: usize,
    pub n: usize,
}

impl PsdVar {
    pub fn entry(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.start + c * (c + 1) / 2 + r
    }

    pub fn len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[derive(Debug, Default)]
pub struct ConicProblem {
    n_scalars: usize,
    psd_blocks: Vec<PsdVar>,
    nonneg_vars: Vec<usize>,
    eqs: Vec<(LinExpr, f64)>,
    les: Vec<(LinExpr, f64)>,
    rsocs: Vec<[LinExpr; 3]>,
    objective: Option<LinExpr>,
}

impl ConicProblem {
    pub fn new() -> Self {
        ConicProblem::default()
    }

    pub fn add_psd(&mut self, n: usize) -> PsdVar {
        let v = PsdVar {
            start: self.n_scalars,
            n,
        };
        self.n_scalars += v.len();
        self.psd_blocks.push(v);
        v
    }

    pub fn add_nonneg(&mut self) -> usize {
        let v = self.n_scalars;
        self.n_scalars += 1;
        self.nonneg_vars.push(v);
        v
    }

    pub fn add_free(&mut self) -> usize {
        let v = self.n_scalars;
        self.n_scalars += 1;
        v
    }

    pub fn eq(&mut self, e: LinExpr, rhs: f64) {
        self.eqs.push((e, rhs));
    }

    pub fn le(&mut self, e: LinExpr, rhs: f64) {
        self.les.push((e, rhs));
    }

    /// Quadratic cap `x^2 <= a*b`; membership forces `a, b >= 0`.
    pub fn rsoc(&mut self, x: LinExpr, a: LinExpr, b: LinExpr) {
        self.rsocs.push([a, b, x]);
    }

    pub fn minimize(&mut self, e: LinExpr) {
        self.objective = Some(e);
    }

    pub fn n_scalars(&self) -> usize {
        self.n_scalars
    }

    /// Reconstruct a PSD block from a witness vector.
    pub fn psd_value(&self, witness: &[f64], v: &PsdVar) -> DMatrix<f64> {
        DMatrix::from_fn(v.n, v.n, |i, j| witness[v.entry(i, j)])
    }

    /// Validate an assignment against every declared constraint. Returns the
    /// worst scale-relative residual; nonpositive means satisfied within
    /// rounding.
    pub fn check_assignment(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (e, rhs) in &self.eqs {
            let denom = 1.0f64.max(rhs.abs()).max(e.magnitude(x));
            worst = worst.max((e.eval(x) - rhs).abs() / denom);
        }
        for (e, rhs) in &self.les {
            let denom = 1.0f64.max(rhs.abs()).max(e.magnitude(x));
            worst = worst.max((e.eval(x) - rhs) / denom);
        }
        for &v in &self.nonneg_vars {
            worst = worst.max(-x[v] / 1.0f64.max(x[v].abs()));
        }
        for [a, b, xx] in &self.rsocs {
            let av = a.eval(x);
            let bv = b.eval(x);
            let xv = xx.eval(x);
            let denom = 1.0f64.max(av * bv).max(xv * xv);
            worst = worst.max((xv * xv - av * bv) / denom);
            worst = worst.max(-av / 1.0f64.max(av.abs()));
            worst = worst.max(-bv / 1.0f64.max(bv.abs()));
        }
        for blk in &self.psd_blocks {
            let m = self.psd_value(x, blk);
            let eig = m.symmetric_eigen();
            let lmax = eig
                .eigenvalues
                .iter()
                .fold(0.0f64, |acc, &v| acc.max(v.abs()));
            let lmin = eig
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(-lmin / 1.0f64.max(lmax));
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatusKind {
    Feasible,
    Infeasible,
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub status: SolveStatusKind,
    pub witness: Option<Vec<f64>>,
    pub max_residual: f64,
    pub iterations: u32,
    /// Optimal value; populated only when the solver converged on the
    /// objective, not merely on a feasible point.
    pub objective: Option<f64>,
}

pub fn solve_default(p: &ConicProblem) -> Result<Verdict> {
    solve(p, DEFAULT_FEAS_TOL, DEFAULT_INFEAS_TOL, DEFAULT_MAX_ITER)
}

pub fn solve(p: &ConicProblem, feas_tol: f64, infeas_tol: f64, max_iter: u32) -> Result<Verdict> {
    if p.n_scalars == 0 {
        return Err(Error::Invalid("problem has no variables".into()));
    }
    let _ = infeas_tol; // infeasibility is certified by the backend's own test

    // Rows of (A, b) with s = b - A x, grouped to match the cone list:
    // equalities, nonnegatives (variable signs then affine inequalities),
    // second-order triples, PSD triangles.
    let mut trips: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut b_vec: Vec<f64> = Vec::new();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    let mut row = 0usize;

    let push_expr = |trips: &mut BTreeMap<(usize, usize), f64>,
                         b_vec: &mut Vec<f64>,
                         row: &mut usize,
                         e: &LinExpr,
                         rhs: f64| {
        for &(v, k) in &e.terms {
            *trips.entry((v, *row)).or_insert(0.0) += k;
        }
        b_vec.push(rhs - e.constant);
        *row += 1;
    };
    // s-rows that must equal the expression itself (cone membership rows).
    let push_value = |trips: &mut BTreeMap<(usize, usize), f64>,
                          b_vec: &mut Vec<f64>,
                          row: &mut usize,
                          e: &LinExpr,
                          scale: f64| {
        for &(v, k) in &e.terms {
            *trips.entry((v, *row)).or_insert(0.0) -= scale * k;
        }
        b_vec.push(scale * e.constant);
        *row += 1;
    };

    for (e, rhs) in &p.eqs {
        push_expr(&mut trips, &mut b_vec, &mut row, e, *rhs);
    }
    if !p.eqs.is_empty() {
        cones.push(SupportedConeT::ZeroConeT(p.eqs.len()));
    }

    let n_nonneg = p.nonneg_vars.len() + p.les.len();
    for &v in &p.nonneg_vars {
        push_value(&mut trips, &mut b_vec, &mut row, &LinExpr::var(v), 1.0);
    }
    for (e, rhs) in &p.les {
        push_expr(&mut trips, &mut b_vec, &mut row, e, *rhs);
    }
    if n_nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(n_nonneg));
    }

    for [a, b, x] in &p.rsocs {
        let sum = a.clone().plus(b);
        let diff = a.clone().minus(b);
        push_value(&mut trips, &mut b_vec, &mut row, &sum, 1.0);
        push_value(&mut trips, &mut b_vec, &mut row, &diff, 1.0);
        push_value(&mut trips, &mut b_vec, &mut row, x, 2.0);
        cones.push(SupportedConeT::SecondOrderConeT(3));
    }

    let sqrt2 = std::f64::consts::SQRT_2;
    for blk in &p.psd_blocks {
        for j in 0..blk.n {
            for i in 0..=j {
                let fac = if i == j { 1.0 } else { sqrt2 };
                push_value(
                    &mut trips,
                    &mut b_vec,
                    &mut row,
                    &LinExpr::var(blk.entry(i, j)),
                    fac,
                );
            }
        }
        cones.push(SupportedConeT::PSDTriangleConeT(blk.n));
    }

    let m = row;
    let n = p.n_scalars;
    let a_mat = csc_from_triplets(m, n, &trips);
    let p_mat = CscMatrix::<f64>::zeros((n, n));
    let mut q = vec![0.0; n];
    if let Some(obj) = &p.objective {
        for &(v, k) in &obj.terms {
            q[v] += k;
        }
    }

    let settings = DefaultSettings::<f64> {
        verbose: false,
        max_iter,
        tol_gap_abs: 1e-9,
        tol_gap_rel: 1e-9,
        tol_feas: 1e-9,
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(&p_mat, &q, &a_mat, &b_vec, &cones, settings)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    solver.solve();

    let status = solver.solution.status;
    let iterations = solver.solution.iterations;
    let x = solver.solution.x.clone();
    let obj_val = solver.solution.obj_val;

    let verdict = match status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            let residual = p.check_assignment(&x);
            if residual <= feas_tol {
                Verdict {
                    status: SolveStatusKind::Feasible,
                    witness: Some(x),
                    max_residual: residual,
                    iterations,
                    objective: if p.objective.is_some() {
                        Some(obj_val + p.objective.as_ref().unwrap().constant)
                    } else {
                        None
                    },
                }
            } else {
                Verdict {
                    status: SolveStatusKind::Indeterminate,
                    witness: Some(x),
                    max_residual: residual,
                    iterations,
                    objective: None,
                }
            }
        }
        SolverStatus::PrimalInfeasible => Verdict {
            status: SolveStatusKind::Infeasible,
            witness: None,
            max_residual: f64::INFINITY,
            iterations,
            objective: None,
        },
        _ => {
            // Iteration cap, numerical trouble, dual infeasibility: accept
            // the iterate only if it independently verifies.
            let residual = p.check_assignment(&x);
            if residual <= feas_tol {
                Verdict {
                    status: SolveStatusKind::Feasible,
                    witness: Some(x),
                    max_residual: residual,
                    iterations,
                    objective: None,
                }
            } else {
                Verdict {
                    status: SolveStatusKind::Indeterminate,
                    witness: None,
                    max_residual: residual,
                    iterations,
                    objective: None,
                }
            }
        }
    };
    Ok(verdict)
}

fn csc_from_triplets(m: usize, n: usize, trips: &BTreeMap<(usize, usize), f64>) -> CscMatrix<f64> {
    // Keys are (col, row), so iteration order is already column-major.
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(trips.len());
    let mut nzval = Vec::with_capacity(trips.len());
    for (&(c, r), &v) in trips {
        colptr[c + 1] += 1;
        rowval.push(r);
        nzval.push(v);
    }
    for c in 0..n {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pinned_identity_is_feasible_with_witness() {
        let mut p = ConicProblem::new();
        let x = p.add_psd(2);
        p.eq(LinExpr::var(x.entry(0, 0)), 1.0);
        p.eq(LinExpr::var(x.entry(1, 1)), 1.0);
        p.eq(LinExpr::var(x.entry(0, 1)), 0.0);
        let v = solve_default(&p).unwrap();
        assert_eq!(v.status, SolveStatusKind::Feasible);
        let w = v.witness.unwrap();
        let m = p.psd_value(&w, &x);
        assert_abs_diff_eq!(m[(0, 0)], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(m[(1, 1)], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(m[(0, 1)], 0.0, epsilon = 1e-6);
        assert!(v.max_residual <= DEFAULT_FEAS_TOL);
    }

    #[test]
    fn negative_scalar_psd_is_infeasible() {
        let mut p = ConicProblem::new();
        let x = p.add_psd(1);
        p.eq(LinExpr::var(x.entry(0, 0)), -1.0);
        let v = solve_default(&p).unwrap();
        assert_eq!(v.status, SolveStatusKind::Infeasible);
    }

    #[test]
    fn rotated_cone_respects_geometric_mean() {
        // a + b = 1 caps ab at 1/4, so x = 0.6 cannot satisfy x^2 <= ab.
        let mut p = ConicProblem::new();
        let a = p.add_free();
        let b = p.add_free();
        let x = p.add_free();
        p.eq(LinExpr::var(a).term(b, 1.0), 1.0);
        p.eq(LinExpr::var(x), 0.6);
        p.rsoc(LinExpr::var(x), LinExpr::var(a), LinExpr::var(b));
        let v = solve(&p, 1e-7, 1e-7, 200).unwrap();
        assert_eq!(v.status, SolveStatusKind::Infeasible);

        let mut p2 = ConicProblem::new();
        let a = p2.add_free();
        let b = p2.add_free();
        let x = p2.add_free();
        p2.eq(LinExpr::var(a).term(b, 1.0), 1.0);
        p2.eq(LinExpr::var(x), 0.4);
        p2.rsoc(LinExpr::var(x), LinExpr::var(a), LinExpr::var(b));
        let v2 = solve_default(&p2).unwrap();
        assert_eq!(v2.status, SolveStatusKind::Feasible);
        let w = v2.witness.unwrap();
        assert!(0.4f64.powi(2) <= w[a] * w[b] + 1e-6);
    }

    #[test]
    fn linear_objective_minimum() {
        let mut p = ConicProblem::new();
        let t = p.add_nonneg();
        p.le(LinExpr::constant(3.0).term(t, -1.0), 0.0); // 3 - t <= 0
        p.minimize(LinExpr::var(t));
        let v = solve_default(&p).unwrap();
        assert_eq!(v.status, SolveStatusKind::Feasible);
        assert_abs_diff_eq!(v.objective.unwrap(), 3.0, epsilon = 1e-6);
    }

    #[test]
    fn verdicts_survive_data_scaling() {
        for scale in [1e-3, 1.0, 1e3] {
            let mut p = ConicProblem::new();
            let x = p.add_psd(2);
            p.eq(LinExpr::var(x.entry(0, 0)), scale);
            p.eq(LinExpr::var(x.entry(1, 1)), scale);
            p.eq(LinExpr::var(x.entry(0, 1)), 1.5 * scale);
            // off-diagonal exceeds the diagonal geometric mean: infeasible
            let v = solve_default(&p).unwrap();
            assert_eq!(v.status, SolveStatusKind::Infeasible, "scale {scale}");

            let mut p2 = ConicProblem::new();
            let x = p2.add_psd(2);
            p2.eq(LinExpr::var(x.entry(0, 0)), scale);
            p2.eq(LinExpr::var(x.entry(1, 1)), scale);
            p2.eq(LinExpr::var(x.entry(0, 1)), 0.5 * scale);
            let v2 = solve_default(&p2).unwrap();
            assert_eq!(v2.status, SolveStatusKind::Feasible, "scale {scale}");
        }
    }

    #[test]
    fn objective_constant_carries_through() {
        let mut p = ConicProblem::new();
        let t = p.add_nonneg();
        p.le(LinExpr::constant(1.0).term(t, -1.0), 0.0);
        p.minimize(LinExpr::var(t).offset(2.0));
        let v = solve_default(&p).unwrap();
        assert_abs_diff_eq!(v.objective.unwrap(), 3.0, epsilon = 1e-6);
    }
}
