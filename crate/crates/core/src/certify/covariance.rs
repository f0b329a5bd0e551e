//! Covariance-decomposition criteria backed by the conic engine.
//!
//! All three entry points share one program shape: find source-supported PSD
//! blocks (plus optional classical-correlation and noise terms) whose sum
//! matches the observed covariance matrix up to an entrywise deviation `t`,
//! and minimize `t`. The reported margin is `-t*`; a decomposable matrix
//! reaches `t* = 0` up to solver precision.

use nalgebra::DMatrix;

use crate::bounds::{self, PurityProfile};
use crate::conic::{solve, ConicProblem, LinExpr, PsdVar, SolveStatusKind};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::states::CovarianceMatrix;

use super::{CertReport, CriterionId, SolveOpts};

pub(crate) enum GammaCMode {
    /// No classical term: exact independent-source decomposition.
    None,
    /// PSD term with entrywise and optional trace caps.
    Capped { entry: f64, trace: Option<f64> },
    /// Two-component mixture cap: diagonal entries at most `4*eta*(1-eta)`,
    /// written as rotated cones against the noise-weight variable.
    NoiseCapped,
}

pub(crate) struct SdpSpec<'a> {
    pub gamma_c: GammaCMode,
    /// Known noise covariance and the admissible range of the network
    /// weight `eta`; the program contributes `(1-eta) * noise`.
    pub noise: Option<(&'a DMatrix<f64>, (f64, f64))>,
}

pub(crate) struct DeviationOutcome {
    /// Minimal entrywise deviation when the solve converged.
    pub t_star: Option<f64>,
    pub iterations: u32,
    pub max_residual: f64,
    /// Value of the noise-weight variable at the optimum, if modeled.
    pub eta: Option<f64>,
    pub status: SolveStatusKind,
}

pub(crate) fn min_deviation(
    gamma: &CovarianceMatrix,
    g: &Network,
    spec: &SdpSpec,
    opts: &SolveOpts,
) -> Result<DeviationOutcome> {
    if gamma.n_parties() != g.n_parties() {
        return Err(Error::Shape(format!(
            "covariance has {} party blocks, network has {} parties",
            gamma.n_parties(),
            g.n_parties()
        )));
    }
    let sizes = gamma.sizes().to_vec();
    let total = gamma.total();

    let mut p = ConicProblem::new();
    let t = p.add_nonneg();

    // One PSD block per source, plus the map from its local rows to global
    // covariance rows.
    let mut upsilons: Vec<(PsdVar, Vec<usize>)> = Vec::new();
    for e in 0..g.n_sources() {
        let rows = g.block_projector_indices(&sizes, e)?;
        let v = p.add_psd(rows.len());
        upsilons.push((v, rows));
    }
    // Reverse map: global entry (i, j) -> contributing (block, local i, local j).
    let mut coverage: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); total * total];
    for (b, (_, rows)) in upsilons.iter().enumerate() {
        for (li, &gi) in rows.iter().enumerate() {
            for (lj, &gj) in rows.iter().enumerate() {
                coverage[gi * total + gj].push((b, li, lj));
            }
        }
    }

    let gamma_c = match spec.gamma_c {
        GammaCMode::None => None,
        _ => Some(p.add_psd(total)),
    };

    let eta = match spec.noise {
        Some((noise, (lo, hi))) => {
            if noise.nrows() != total || noise.ncols() != total {
                return Err(Error::Shape(format!(
                    "noise matrix is {}x{}, covariance is {}x{}",
                    noise.nrows(),
                    noise.ncols(),
                    total,
                    total
                )));
            }
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Error::Invalid(format!(
                    "eta range [{lo}, {hi}] is not a subinterval of [0, 1]"
                )));
            }
            let scale = noise.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let min_eig = noise
                .clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if min_eig < -1e-8 * scale {
                return Err(Error::Invalid(format!(
                    "noise covariance has negative eigenvalue {min_eig:.3e}"
                )));
            }
            let v = p.add_free();
            p.le(LinExpr::var(v), hi);
            p.le(LinExpr::var(v).scaled(-1.0), -lo);
            Some(v)
        }
        None => None,
    };

    // Entrywise deviation: |Gamma_ij - (sum Upsilon + Gamma^c + (1-eta) N)_ij| <= t.
    for i in 0..total {
        for j in i..total {
            let mut expr = LinExpr::zero();
            for &(b, li, lj) in &coverage[i * total + j] {
                expr = expr.term(upsilons[b].0.entry(li, lj), 1.0);
            }
            if let Some(c) = &gamma_c {
                expr = expr.term(c.entry(i, j), 1.0);
            }
            if let (Some(ev), Some((noise, _))) = (eta, &spec.noise) {
                let nij = noise[(i, j)];
                expr = expr.offset(nij).term(ev, -nij);
            }
            let target = gamma.entry(i, j);
            p.le(expr.clone().term(t, -1.0), target);
            p.le(expr.scaled(-1.0).term(t, -1.0), -target);
        }
    }

    // Source blocks absorb only component variances, which cannot exceed 1
    // per observable (spectral radius <= 1); with a noise split the quantum
    // part carries weight eta.
    for k in 0..total {
        let mut diag = LinExpr::zero();
        for &(b, li, lj) in &coverage[k * total + k] {
            if li == lj {
                diag = diag.term(upsilons[b].0.entry(li, lj), 1.0);
            }
        }
        match eta {
            Some(ev) => p.le(diag.term(ev, -1.0), 0.0),
            None => p.le(diag, 1.0),
        }
    }

    match (&spec.gamma_c, &gamma_c) {
        (GammaCMode::Capped { entry, trace }, Some(c)) => {
            for i in 0..total {
                p.le(LinExpr::var(c.entry(i, i)), *entry);
                for j in (i + 1)..total {
                    p.le(LinExpr::var(c.entry(i, j)), *entry);
                    p.le(LinExpr::var(c.entry(i, j)).scaled(-1.0), *entry);
                }
            }
            if let Some(cap) = trace {
                let mut tr = LinExpr::zero();
                for i in 0..total {
                    tr = tr.term(c.entry(i, i), 1.0);
                }
                p.le(tr, *cap);
            }
        }
        (GammaCMode::NoiseCapped, Some(c)) => {
            let ev = eta.expect("noise cap requires the eta variable");
            for i in 0..total {
                // (2 eta - 1)^2 <= 1 - c_ii, i.e. c_ii <= 4 eta (1 - eta).
                p.rsoc(
                    LinExpr::var(ev).scaled(2.0).offset(-1.0),
                    LinExpr::var(c.entry(i, i)).scaled(-1.0).offset(1.0),
                    LinExpr::constant(1.0),
                );
            }
        }
        _ => {}
    }

    p.minimize(LinExpr::var(t));
    let verdict = solve(&p, opts.feas_tol, opts.infeas_tol, opts.max_iter)?;
    let eta_value = match (&verdict.witness, eta) {
        (Some(w), Some(ev)) => Some(w[ev]),
        _ => None,
    };
    Ok(DeviationOutcome {
        t_star: verdict.objective.map(|v| v.max(0.0)),
        iterations: verdict.iterations,
        max_residual: verdict.max_residual,
        eta: eta_value,
        status: verdict.status,
    })
}

fn deviation_report(
    criterion: CriterionId,
    outcome: &DeviationOutcome,
    opts: &SolveOpts,
    extra: &str,
) -> CertReport {
    match outcome.t_star {
        Some(t) => CertReport::from_deviation(
            criterion,
            t,
            opts.feas_tol,
            format!(
                "t*={:.3e}; residual={:.2e}; iterations={}{}",
                t, outcome.max_residual, outcome.iterations, extra
            ),
        ),
        None => CertReport::indeterminate(
            criterion,
            format!(
                "solver did not converge ({:?}, residual {:.2e} after {} iterations){}",
                outcome.status, outcome.max_residual, outcome.iterations, extra
            ),
        ),
    }
}

/// Exact independent-source decomposition test: the covariance must split
/// into source-supported PSD blocks.
pub fn certify_iqn_covariance(gamma: &CovarianceMatrix, g: &Network) -> Result<CertReport> {
    certify_iqn_covariance_opts(gamma, g, &SolveOpts::default())
}

pub fn certify_iqn_covariance_opts(
    gamma: &CovarianceMatrix,
    g: &Network,
    opts: &SolveOpts,
) -> Result<CertReport> {
    let spec = SdpSpec {
        gamma_c: GammaCMode::None,
        noise: None,
    };
    let outcome = min_deviation(gamma, g, &spec, opts)?;
    Ok(deviation_report(
        CriterionId::IqnDecomposition,
        &outcome,
        opts,
        "",
    ))
}

/// Mixture decomposition test: adds a PSD classical-correlation term whose
/// entries and trace are capped by the purity profile.
pub fn certify_cqn_covariance(
    gamma: &CovarianceMatrix,
    g: &Network,
    p: &PurityProfile,
) -> Result<CertReport> {
    certify_cqn_covariance_opts(gamma, g, p, &SolveOpts::default())
}

pub fn certify_cqn_covariance_opts(
    gamma: &CovarianceMatrix,
    g: &Network,
    p: &PurityProfile,
    opts: &SolveOpts,
) -> Result<CertReport> {
    let entry = bounds::gamma_c_entry_bound(p);
    let trace = match p.l1 {
        Some(_) => Some(bounds::gamma_c_trace_bound(p)?),
        None => None,
    };
    let spec = SdpSpec {
        gamma_c: GammaCMode::Capped { entry, trace },
        noise: None,
    };
    let outcome = min_deviation(gamma, g, &spec, opts)?;
    let extra = format!(
        "; tau={:.6} (rank {}), entry cap={:.6}, trace cap={}",
        p.tau,
        p.rank,
        entry,
        trace.map_or("none".to_string(), |v| format!("{v:.6}"))
    );
    Ok(deviation_report(
        CriterionId::CqnDecomposition,
        &outcome,
        opts,
        &extra,
    ))
}

/// Known-noise decomposition test: the covariance must split as
/// `eta * (network part) + (1 - eta) * noise + classical term` for some
/// admissible noise weight, with the classical term capped by the
/// two-component mixture bound.
pub fn known_noise_check(
    gamma: &CovarianceMatrix,
    g: &Network,
    noise_gamma: &DMatrix<f64>,
    eta_range: (f64, f64),
) -> Result<CertReport> {
    known_noise_check_opts(gamma, g, noise_gamma, eta_range, &SolveOpts::default())
}

pub fn known_noise_check_opts(
    gamma: &CovarianceMatrix,
    g: &Network,
    noise_gamma: &DMatrix<f64>,
    eta_range: (f64, f64),
    opts: &SolveOpts,
) -> Result<CertReport> {
    let spec = SdpSpec {
        gamma_c: GammaCMode::NoiseCapped,
        noise: Some((noise_gamma, eta_range)),
    };
    let outcome = min_deviation(gamma, g, &spec, opts)?;
    let extra = match outcome.eta {
        Some(v) => format!("; eta*={v:.6} in [{:.3}, {:.3}]", eta_range.0, eta_range.1),
        None => String::new(),
    };
    Ok(deviation_report(
        CriterionId::KnownNoise,
        &outcome,
        opts,
        &extra,
    ))
}
