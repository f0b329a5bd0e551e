//! Data-driven cap on the classical covariance trace. Any decomposition of
//! `rho` induces a two-copy operator `beta = sum_k w_k rho_k (x) rho_k`,
//! and `tr(G^c) = tr(Q beta) - tr(Q rho (x) rho)` with
//! `Q = sum_i G_i (x) G_i`. Relaxing `beta` to a swap-invariant PSD
//! operator with marginal `rho` and swap overlap in `[tau, 1]` turns the
//! worst case into a small SDP over the symmetric/antisymmetric blocks.
//! The relaxation keeps only these constraints, so it is an upper bound on
//! the true trace; the closed-form purity cap is applied on top.

use nalgebra::DMatrix;

use crate::bounds::{self, PurityProfile};
use crate::conic::{solve, ConicProblem, LinExpr, PsdVar};
use crate::error::{Error, Result};
use crate::linalg::{c, cr, ComplexMatrix, DensityMatrix};
use crate::states::{mean_values, MeasurementCollection};

use super::SolveOpts;

const MAX_DIM: usize = 8;

pub fn tighten_gamma_c_trace(
    rho: &DensityMatrix,
    m: &MeasurementCollection,
    p: &PurityProfile,
) -> Result<f64> {
    tighten_gamma_c_trace_opts(rho, m, p, &SolveOpts::default())
}

pub fn tighten_gamma_c_trace_opts(
    rho: &DensityMatrix,
    m: &MeasurementCollection,
    p: &PurityProfile,
    opts: &SolveOpts,
) -> Result<f64> {
    if rho.dims() != m.dims() {
        return Err(Error::Shape(format!(
            "state dims {:?} do not match measurement dims {:?}",
            rho.dims(),
            m.dims()
        )));
    }
    let d = rho.dim();
    if d > MAX_DIM {
        return Err(Error::Invalid(format!(
            "dimension overflow: two-copy program supports total dimension up to {MAX_DIM}, got {d}"
        )));
    }
    let analytic = analytic_cap(m, p)?;

    // Q = sum over observables of G (x) G.
    let mut q = ComplexMatrix::zeros(d * d, d * d);
    for (party, k) in m.flat() {
        let g = m.global_observable(party, k);
        let gg = g.tensor(&g);
        q = ComplexMatrix(q.0 + gg.0);
    }
    let means = mean_values(rho, m)?;
    let const_term: f64 = means.iter().map(|v| v * v).sum();

    let (vs, va) = swap_isometries(d);
    let qs = project(&q, &vs);
    let qa = project(&q, &va);
    let real_data = rho.matrix().max_imag_abs() < 1e-13
        && (0..m.n_parties())
            .all(|i| m.party_observables(i).iter().all(|o| o.max_imag_abs() < 1e-13));

    let mut prob = ConicProblem::new();
    let bs = block_var(&mut prob, vs.cols(), real_data);
    let ba = block_var(&mut prob, va.cols(), real_data);

    // Marginal of the first copy is the state itself; swap invariance makes
    // the second marginal match automatically.
    for a in 0..d {
        for b in a..d {
            let mut re_op = ComplexMatrix::zeros(d, d);
            if a == b {
                re_op.set(a, a, cr(1.0));
            } else {
                re_op.set(a, b, cr(1.0));
                re_op.set(b, a, cr(1.0));
            }
            let h = left_op(&re_op, d);
            let target = if a == b {
                rho.matrix().get(a, a).re
            } else {
                2.0 * rho.matrix().get(a, b).re
            };
            let expr = block_trace(&bs, &project(&h, &vs)).plus(&block_trace(&ba, &project(&h, &va)));
            prob.eq(expr, target);
            if a < b && !real_data {
                let mut im_op = ComplexMatrix::zeros(d, d);
                im_op.set(a, b, c(0.0, 1.0));
                im_op.set(b, a, c(0.0, -1.0));
                let h = left_op(&im_op, d);
                let expr =
                    block_trace(&bs, &project(&h, &vs)).plus(&block_trace(&ba, &project(&h, &va)));
                prob.eq(expr, 2.0 * rho.matrix().get(a, b).im);
            }
        }
    }

    // Swap overlap window: the average component purity lives in [tau, 1].
    let eye_s = ComplexMatrix::identity(vs.cols());
    let eye_a = ComplexMatrix::identity(va.cols());
    let overlap = block_trace(&bs, &eye_s).minus(&block_trace(&ba, &eye_a));
    prob.le(overlap.clone().scaled(-1.0), -p.tau);
    prob.le(overlap, 1.0);

    let objective = block_trace(&bs, &qs)
        .plus(&block_trace(&ba, &qa))
        .scaled(-1.0)
        .offset(const_term);
    prob.minimize(objective);

    let verdict = solve(&prob, opts.feas_tol, opts.infeas_tol, opts.max_iter)?;
    let bound = match verdict.objective {
        Some(obj) => (-obj).min(analytic),
        // Conservative fallback: the closed-form cap stands on its own.
        None => analytic,
    };
    Ok(bound.max(0.0))
}

fn analytic_cap(m: &MeasurementCollection, p: &PurityProfile) -> Result<f64> {
    if p.l1.is_some() {
        bounds::gamma_c_trace_bound(p)
    } else {
        bounds::gamma_c_trace_bound(&p.clone().with_l1(m.operator_sum_constant()?)?)
    }
}

enum BlockVar {
    /// Real symmetric PSD block of the stated size.
    Real(PsdVar),
    /// Complex Hermitian block through its real embedding (doubled size);
    /// real functionals pick up a factor one half.
    Embedded(PsdVar),
    Empty,
}

fn block_var(prob: &mut ConicProblem, n: usize, real_data: bool) -> BlockVar {
    if n == 0 {
        BlockVar::Empty
    } else if real_data {
        BlockVar::Real(prob.add_psd(n))
    } else {
        BlockVar::Embedded(prob.add_psd(2 * n))
    }
}

/// `tr(B H)` as a linear expression over the block variable, for Hermitian
/// `H` given in the block basis.
fn block_trace(bv: &BlockVar, h: &ComplexMatrix) -> LinExpr {
    let mut expr = LinExpr::zero();
    match bv {
        BlockVar::Empty => expr,
        BlockVar::Real(v) => {
            let hr = h.real_part();
            for i in 0..v.n {
                for j in i..v.n {
                    let coeff = if i == j { hr[(i, i)] } else { 2.0 * hr[(i, j)] };
                    if coeff != 0.0 {
                        expr = expr.term(v.entry(i, j), coeff);
                    }
                }
            }
            expr
        }
        BlockVar::Embedded(v) => {
            let e = embed(h);
            let n = v.n;
            for i in 0..n {
                for j in i..n {
                    let coeff = if i == j { 0.5 * e[(i, i)] } else { e[(i, j)] };
                    if coeff != 0.0 {
                        expr = expr.term(v.entry(i, j), coeff);
                    }
                }
            }
            expr
        }
    }
}

/// Real embedding `[[X, -Y], [Y, X]]` of `H = X + iY`.
fn embed(h: &ComplexMatrix) -> DMatrix<f64> {
    let n = h.rows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let v = h.get(i % n, j % n);
        match (i >= n, j >= n) {
            (false, false) | (true, true) => v.re,
            (false, true) => -v.im,
            (true, false) => v.im,
        }
    })
}

/// `X (x) I` on the two-copy space.
fn left_op(x: &ComplexMatrix, d: usize) -> ComplexMatrix {
    x.tensor(&ComplexMatrix::identity(d))
}

/// Congruence of `h` into an isometry's column space.
fn project(h: &ComplexMatrix, v: &ComplexMatrix) -> ComplexMatrix {
    &(&v.adjoint() * h) * v
}

/// Orthonormal bases of the symmetric and antisymmetric subspaces of
/// `C^d (x) C^d`, as real isometry columns.
fn swap_isometries(d: usize) -> (ComplexMatrix, ComplexMatrix) {
    let s = d * (d + 1) / 2;
    let a = d * (d - 1) / 2;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut vs = ComplexMatrix::zeros(d * d, s);
    let mut va = ComplexMatrix::zeros(d * d, a);
    let (mut cs, mut ca) = (0, 0);
    for m_ in 0..d {
        for n_ in m_..d {
            if m_ == n_ {
                vs.set(m_ * d + m_, cs, cr(1.0));
            } else {
                vs.set(m_ * d + n_, cs, cr(inv_sqrt2));
                vs.set(n_ * d + m_, cs, cr(inv_sqrt2));
                va.set(m_ * d + n_, ca, cr(inv_sqrt2));
                va.set(n_ * d + m_, ca, cr(-inv_sqrt2));
                ca += 1;
            }
            cs += 1;
        }
    }
    (vs, va)
}
