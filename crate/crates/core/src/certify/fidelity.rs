//! Fidelity ceilings for network states: how close any independent-source
//! state can get to a target, read off from the target's covariance
//! deviation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::states::CovarianceMatrix;

use super::covariance::{min_deviation, GammaCMode, SdpSpec};
use super::SolveOpts;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FidelityMode {
    /// Mean-drift chain valid for any target covariance.
    Generic,
    /// Sharper constant for stabilizer-type targets whose observables pin
    /// the state.
    Stabilizer,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FidelityReport {
    pub mode: FidelityMode,
    /// Minimal covariance deviation of the target, polished to a nearby
    /// small rational when one matches.
    pub t0: f64,
    /// Raw solver value before polishing.
    pub t0_raw: f64,
    pub bound: f64,
    pub iterations: u32,
}

/// Upper bound on the fidelity between the target (given through its
/// covariance) and any state preparable on the network.
pub fn fidelity_upper_bound(
    gamma_target: &CovarianceMatrix,
    g: &Network,
    mode: FidelityMode,
) -> Result<f64> {
    fidelity_upper_bound_detailed(gamma_target, g, mode, &SolveOpts::default())
        .map(|r| r.bound)
}

pub fn fidelity_upper_bound_detailed(
    gamma_target: &CovarianceMatrix,
    g: &Network,
    mode: FidelityMode,
    opts: &SolveOpts,
) -> Result<FidelityReport> {
    let spec = SdpSpec {
        gamma_c: GammaCMode::None,
        noise: None,
    };
    let out = min_deviation(gamma_target, g, &spec, opts)?;
    let t0_raw = match out.t_star {
        Some(v) => v,
        None => {
            return Err(Error::Solver(format!(
                "deviation program did not converge ({:?}, residual {:.2e})",
                out.status, out.max_residual
            )))
        }
    };
    let t0 = snap_rational(t0_raw, 24, 1e-5);
    let bound = match mode {
        FidelityMode::Stabilizer => (1.0 - t0 / 6.0).clamp(0.0, 1.0),
        FidelityMode::Generic => invert_drift_chain(t0),
    };
    Ok(FidelityReport {
        mode,
        t0,
        t0_raw,
        bound,
        iterations: out.iterations,
    })
}

/// Replace `x` by the nearest fraction with denominator at most `max_den`
/// when one lies within `tol`; otherwise keep `x`. Interior-point output
/// lands ~1e-9 from clean optima, and downstream constants deserve exact
/// arithmetic when the optimum is exact.
fn snap_rational(x: f64, max_den: u32, tol: f64) -> f64 {
    for q in 1..=max_den {
        let p = (x * q as f64).round();
        let cand = p / q as f64;
        if (x - cand).abs() <= tol {
            return cand;
        }
    }
    x
}

/// Solve `2 sqrt(1-f) + 2 sqrt(1-f^2) = t0` for `f`; the left side falls
/// monotonically from 4 at `f = 0` to 0 at `f = 1`.
fn invert_drift_chain(t0: f64) -> f64 {
    if t0 <= 0.0 {
        return 1.0;
    }
    if t0 >= 4.0 {
        return 0.0;
    }
    let h = |f: f64| 2.0 * (1.0 - f).max(0.0).sqrt() + 2.0 * (1.0 - f * f).max(0.0).sqrt();
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > t0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn ghz_gamma() -> CovarianceMatrix {
        CovarianceMatrix::new(DMatrix::from_element(3, 3, 1.0), vec![1; 3]).unwrap()
    }

    #[test]
    fn ghz_deviation_snaps_to_half() {
        let r = fidelity_upper_bound_detailed(
            &ghz_gamma(),
            &Network::triangle(),
            FidelityMode::Stabilizer,
            &SolveOpts::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.t0_raw, 0.5, epsilon = 1e-6);
        assert_eq!(r.t0, 0.5);
        assert_abs_diff_eq!(r.bound, 11.0 / 12.0, epsilon = 1e-12);
    }

    #[test]
    fn generic_mode_inverts_the_chain() {
        let r = fidelity_upper_bound_detailed(
            &ghz_gamma(),
            &Network::triangle(),
            FidelityMode::Generic,
            &SolveOpts::default(),
        )
        .unwrap();
        let f = r.bound;
        let lhs = 2.0 * (1.0 - f).sqrt() + 2.0 * (1.0 - f * f).sqrt();
        assert_abs_diff_eq!(lhs, 0.5, epsilon = 1e-9);
        assert!(f > 0.9 && f < 1.0);
    }

    #[test]
    fn feasible_target_is_unconstrained() {
        let gamma = CovarianceMatrix::new(DMatrix::identity(3, 3), vec![1; 3]).unwrap();
        for mode in [FidelityMode::Generic, FidelityMode::Stabilizer] {
            let b = fidelity_upper_bound(&gamma, &Network::triangle(), mode).unwrap();
            assert_eq!(b, 1.0);
        }
    }

    #[test]
    fn snapping_behaviour() {
        assert_eq!(snap_rational(0.4999999991, 24, 1e-5), 0.5);
        assert_eq!(snap_rational(3.2e-9, 24, 1e-5), 0.0);
        assert_eq!(snap_rational(0.1234567, 24, 1e-5), 0.1234567);
        assert_eq!(snap_rational(1.0 / 3.0 + 1e-8, 24, 1e-5), 1.0 / 3.0);
    }

    #[test]
    fn chain_inversion_endpoints() {
        assert_eq!(invert_drift_chain(0.0), 1.0);
        assert_eq!(invert_drift_chain(4.5), 0.0);
        assert_abs_diff_eq!(invert_drift_chain(4.0 - 1e-12), 0.0, epsilon = 1e-5);
        let mut last = 1.0;
        for i in 1..40 {
            let f = invert_drift_chain(i as f64 * 0.1);
            assert!(f <= last);
            last = f;
        }
    }
}
