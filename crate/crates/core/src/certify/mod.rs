//! Certification criteria and the aggregate runner.
//!
//! Every criterion returns a [`CertReport`] with a signed margin
//! (nonnegative = the necessary condition holds, negative = violated) and a
//! human-readable detail line. `Incompatible` is always a proof that the
//! state is outside the claimed network set; `Compatible` only means this
//! particular necessary condition cannot tell.

mod covariance;
mod fidelity;
mod inflation;
mod norms;
mod tighten;

pub use covariance::{
    certify_cqn_covariance, certify_cqn_covariance_opts, certify_iqn_covariance,
    certify_iqn_covariance_opts, known_noise_check, known_noise_check_opts,
};
pub use fidelity::{fidelity_upper_bound, fidelity_upper_bound_detailed, FidelityMode, FidelityReport};
pub use inflation::{check_triangle_inflation, symmetric_e2_bound, MeanValueData};
pub use norms::{
    certify_cqn_norms, certify_cqn_norms_opts, check_mixture_norm_bound,
    check_multi_topology_bound, check_multi_topology_bound_main_text, check_norm_inequality_iqn,
};
pub use tighten::{tighten_gamma_c_trace, tighten_gamma_c_trace_opts};

use serde::{Deserialize, Serialize};

use crate::bounds::{self, PurityProfile};
use crate::conic::{DEFAULT_FEAS_TOL, DEFAULT_INFEAS_TOL, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};
use crate::linalg::DensityMatrix;
use crate::network::Network;
use crate::states::{
    covariance, profile_for_decomposition, profile_for_state, Decomposition, MeasurementCollection,
};

/// Exact-arithmetic margins this close to zero are reported as boundary
/// cases rather than violations.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriterionId {
    IqnDecomposition,
    CqnDecomposition,
    NormDecomposition,
    VertexNorm,
    MixtureNorm,
    MultiTopology,
    TriangleInflation,
    SymmetricInflation,
    KnownNoise,
}

impl CriterionId {
    /// Anchor string naming the criterion in reports.
    pub fn anchor(&self) -> &'static str {
        match self {
            CriterionId::IqnDecomposition => "Eq. (1)",
            CriterionId::CqnDecomposition => "Theorem 1",
            CriterionId::NormDecomposition => "Eq. (7)/Theorem 2",
            CriterionId::VertexNorm => "Eq. (2)",
            CriterionId::MixtureNorm => "Observation 3",
            CriterionId::MultiTopology => "Observation 4",
            CriterionId::TriangleInflation => "Eq. (9)/(10)",
            CriterionId::SymmetricInflation => "Eq. (11)",
            CriterionId::KnownNoise => "Example 3",
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            CriterionId::IqnDecomposition => "independent-source covariance decomposition",
            CriterionId::CqnDecomposition => "mixture covariance decomposition with purity caps",
            CriterionId::NormDecomposition => "block trace-norm decomposition",
            CriterionId::VertexNorm => "per-vertex norm inequality",
            CriterionId::MixtureNorm => "global mixture norm bound",
            CriterionId::MultiTopology => "multi-topology mixture bound",
            CriterionId::TriangleInflation => "triangle inflation inequality",
            CriterionId::SymmetricInflation => "symmetric two-point inflation bound",
            CriterionId::KnownNoise => "known-noise decomposition",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Compatible,
    Incompatible,
    Indeterminate,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::Compatible => write!(f, "Compatible"),
            Status::Incompatible => write!(f, "Incompatible"),
            Status::Indeterminate => write!(f, "Indeterminate"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertReport {
    pub criterion: CriterionId,
    pub anchor: String,
    pub status: Status,
    pub margin: f64,
    pub details: String,
}

impl CertReport {
    pub(crate) fn closed_form(criterion: CriterionId, margin: f64, details: String) -> CertReport {
        // Closed-form criteria are non-strict inequalities evaluated in exact
        // float arithmetic; equality boundaries are Compatible, and a grace of
        // BOUNDARY_TOL absorbs rounding dust in eigenvalue-derived terms.
        let status = if margin >= -BOUNDARY_TOL {
            Status::Compatible
        } else {
            Status::Incompatible
        };
        CertReport {
            criterion,
            anchor: criterion.anchor().to_string(),
            status,
            margin,
            details,
        }
    }

    /// Report for a minimum-deviation program: `t_star` is the smallest
    /// entrywise deviation of any admissible decomposition, so the margin is
    /// `-t_star`.
    pub(crate) fn from_deviation(
        criterion: CriterionId,
        t_star: f64,
        feas_tol: f64,
        details: String,
    ) -> CertReport {
        let status = if t_star <= feas_tol {
            Status::Compatible
        } else if t_star <= 10.0 * feas_tol {
            Status::Indeterminate
        } else {
            Status::Incompatible
        };
        CertReport {
            criterion,
            anchor: criterion.anchor().to_string(),
            status,
            margin: -t_star,
            details,
        }
    }

    pub(crate) fn indeterminate(criterion: CriterionId, details: String) -> CertReport {
        CertReport {
            criterion,
            anchor: criterion.anchor().to_string(),
            status: Status::Indeterminate,
            margin: 0.0,
            details,
        }
    }
}

/// Solver knobs shared by the SDP-backed criteria.
#[derive(Clone, Copy, Debug)]
pub struct SolveOpts {
    pub feas_tol: f64,
    pub infeas_tol: f64,
    pub max_iter: u32,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            feas_tol: DEFAULT_FEAS_TOL,
            infeas_tol: DEFAULT_INFEAS_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Which membership claim the runner is testing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// Independent sources and local channels, no shared randomness.
    Iqn,
    /// Convex mixtures of independent-source states.
    Cqn,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub target: Target,
    pub solve: SolveOpts,
    pub rank_cutoff: f64,
    /// Opt into the stricter main-text constant for the multi-topology
    /// bound (experimental).
    pub main_text_multi_topology: bool,
    /// Explicit decomposition, when known; sharpens the purity profile.
    pub decomposition: Option<Decomposition>,
    /// Externally calibrated lower bound on the state purity; raises the
    /// measured value when larger.
    pub purity_floor: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            target: Target::Cqn,
            solve: SolveOpts::default(),
            rank_cutoff: 1e-9,
            main_text_multi_topology: false,
            decomposition: None,
            purity_floor: None,
        }
    }
}

/// Worst status over a report list: any Incompatible wins, then any
/// Indeterminate, else Compatible.
pub fn overall(reports: &[CertReport]) -> Status {
    let mut out = Status::Compatible;
    for r in reports {
        match r.status {
            Status::Incompatible => return Status::Incompatible,
            Status::Indeterminate => out = Status::Indeterminate,
            Status::Compatible => {}
        }
    }
    out
}

fn is_triangle(g: &Network) -> bool {
    if g.n_parties() != 3 || g.n_sources() != 3 {
        return false;
    }
    let mut srcs = g.sources().to_vec();
    srcs.sort();
    srcs == [vec![0, 1], vec![0, 2], vec![1, 2]]
}

/// Run every criterion that applies to the given target and inputs.
pub fn run_all(
    state: &DensityMatrix,
    m: &MeasurementCollection,
    g: &Network,
    options: &RunOptions,
) -> Result<Vec<CertReport>> {
    if state.dims() != m.dims() {
        return Err(Error::Shape(format!(
            "state dims {:?} vs measurement dims {:?}",
            state.dims(),
            m.dims()
        )));
    }
    if m.n_parties() != g.n_parties() {
        return Err(Error::Shape(format!(
            "{} parties measured, network has {}",
            m.n_parties(),
            g.n_parties()
        )));
    }
    let gamma = covariance(state, m)?;
    let mut profile = match &options.decomposition {
        Some(dec) => profile_for_decomposition(dec, m, options.rank_cutoff)?,
        None => profile_for_state(state, m, options.rank_cutoff)?,
    };
    if let Some(floor) = options.purity_floor {
        if floor > profile.tau {
            let mut raised = PurityProfile::new(profile.rank, floor)?;
            if let Some(l1) = profile.l1 {
                raised = raised.with_l1(l1)?;
            }
            if let Some(ci) = profile.components {
                raised = raised.with_components(ci.tau0.max(floor), ci.n0)?;
            }
            profile = raised;
        }
    }
    let iqn = options.target == Target::Iqn;
    let gamma_c_trace = if iqn {
        0.0
    } else {
        bounds::gamma_c_trace_bound(&profile)?
    };
    let n = g.n_parties();
    let k = g.max_source_size();
    let mut reports = Vec::new();

    if iqn {
        reports.push(covariance::certify_iqn_covariance_opts(&gamma, g, &options.solve)?);
        if m.is_dichotomic() {
            reports.push(check_norm_inequality_iqn(&gamma, g)?);
        }
    }
    reports.push(covariance::certify_cqn_covariance_opts(
        &gamma,
        g,
        &profile,
        &options.solve,
    )?);
    reports.push(norms::certify_cqn_norms_opts(
        &gamma,
        g,
        &profile,
        &m.sizes(),
        &options.solve,
    )?);
    reports.push(check_mixture_norm_bound(&gamma, k, n, gamma_c_trace)?);
    if k <= 3 {
        let c3 = g.sources().iter().filter(|s| s.len() == 3).count();
        let m_max = m.sizes().into_iter().max().unwrap_or(1);
        reports.push(if options.main_text_multi_topology {
            check_multi_topology_bound_main_text(&gamma, n, c3, m_max, gamma_c_trace)?
        } else {
            check_multi_topology_bound(&gamma, n, c3, m_max, gamma_c_trace)?
        });
    }
    if is_triangle(g) && m.sizes() == [1, 1, 1] && m.is_dichotomic() {
        let data = MeanValueData::from_state(state, m)?;
        let eps = if iqn {
            0.0
        } else {
            bounds::epsilon(profile.rank, profile.tau)?
        };
        reports.push(check_triangle_inflation(&data, eps)?);
    }
    Ok(reports)
}
