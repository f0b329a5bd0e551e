//! Purity-driven bounds on the classical-correlation part of a covariance
//! decomposition.
//!
//! All caps are functions of a `PurityProfile`: the rank `r` and a purity
//! floor `tau` of the global state, optionally refined by component
//! information (a purity floor `tau0` and a rank ceiling `n0` for the members
//! of the mixture) and by the operator constant `l1` of the measurement set.
//! Observables are assumed to have spectral radius at most one; every bound
//! here is calibrated to that normalization.

use crate::error::{Error, Result};

const TAU_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentInfo {
    /// Average purity of the mixture components, or an upper estimate of it.
    pub tau0: f64,
    /// Rank ceiling for every component of the mixture.
    pub n0: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PurityProfile {
    pub rank: usize,
    pub tau: f64,
    pub components: Option<ComponentInfo>,
    /// Largest singular value of the measurement operator sum; enables the
    /// trace cap when present.
    pub l1: Option<f64>,
}

impl PurityProfile {
    pub fn new(rank: usize, tau: f64) -> Result<Self> {
        if rank == 0 {
            return Err(Error::Invalid("rank must be at least one".into()));
        }
        if !(tau > 0.0) || tau > 1.0 + TAU_SLACK {
            return Err(Error::Invalid(format!("purity {tau} outside (0, 1]")));
        }
        Ok(PurityProfile {
            rank,
            tau: tau.min(1.0),
            components: None,
            l1: None,
        })
    }

    /// Attach component-level information from a known decomposition.
    pub fn with_components(mut self, tau0: f64, n0: usize) -> Result<Self> {
        if !(tau0 > 0.0) || tau0 > 1.0 + TAU_SLACK {
            return Err(Error::Invalid(format!("component purity {tau0} outside (0, 1]")));
        }
        let tau0 = tau0.min(1.0);
        if tau0 + TAU_SLACK < self.tau {
            return Err(Error::Invalid(format!(
                "average component purity {tau0} below mixture purity {}",
                self.tau
            )));
        }
        if n0 == 0 || n0 > self.rank {
            return Err(Error::Invalid(format!(
                "component rank ceiling {n0} outside 1..={}",
                self.rank
            )));
        }
        self.components = Some(ComponentInfo { tau0, n0 });
        Ok(self)
    }

    pub fn with_l1(mut self, l1: f64) -> Result<Self> {
        if !(l1 >= 0.0) {
            return Err(Error::Invalid(format!("operator constant {l1} negative")));
        }
        self.l1 = Some(l1);
        Ok(self)
    }

    pub fn tau0(&self) -> f64 {
        self.components.map(|c| c.tau0).unwrap_or(1.0)
    }

    pub fn n0(&self) -> usize {
        self.components.map(|c| c.n0).unwrap_or(self.rank)
    }
}

/// Baseline entry cap `min{ r(1-tau), 2 sqrt(1-tau^2) }`.
pub fn beta(rank: usize, tau: f64) -> Result<f64> {
    let p = PurityProfile::new(rank, tau)?;
    let linear = p.rank as f64 * (1.0 - p.tau);
    let quad = 2.0 * (1.0 - p.tau * p.tau).max(0.0).sqrt();
    Ok(linear.min(quad))
}

/// `max_{1 <= n <= n0} 4 n (r - n) / r`, the sharpened prefactor available
/// when component ranks are capped by `n0`.
pub fn r_factor(rank: usize, n0: usize) -> Result<f64> {
    if rank == 0 || n0 == 0 || n0 > rank {
        return Err(Error::Invalid(format!(
            "rank {rank} and component cap {n0} must satisfy 1 <= n0 <= rank"
        )));
    }
    // n(r-n) is unimodal with integer peak at floor(r/2).
    let n_star = n0.min(rank / 2).max(1) as f64;
    let r = rank as f64;
    Ok(4.0 * n_star * (r - n_star) / r)
}

/// Cap on every entry of the classical-correlation matrix. With a bare
/// profile this is exactly `beta(rank, tau)`; component information switches
/// the linear branch to the sharpened `R (tau0 - tau)` form.
pub fn gamma_c_entry_bound(p: &PurityProfile) -> f64 {
    let quad = 2.0 * (1.0 - p.tau * p.tau).max(0.0).sqrt();
    let linear = match p.components {
        None => p.rank as f64 * (1.0 - p.tau),
        Some(c) => {
            let r = r_factor(p.rank, c.n0).expect("profile validated on construction");
            r * (c.tau0 - p.tau).max(0.0)
        }
    };
    linear.min(quad)
}

/// Cap on the trace of the classical-correlation matrix,
/// `l1 * min{ r (tau0 - tau), 2 sqrt(1-tau^2) }`. Needs `l1`.
pub fn gamma_c_trace_bound(p: &PurityProfile) -> Result<f64> {
    let l1 = p
        .l1
        .ok_or_else(|| Error::Invalid("trace cap needs the operator constant l1".into()))?;
    let linear = p.rank as f64 * (p.tau0() - p.tau).max(0.0);
    let quad = 2.0 * (1.0 - p.tau * p.tau).max(0.0).sqrt();
    Ok(l1 * linear.min(quad))
}

/// Bound on how far any mean value can drift between the mixture and its
/// best-matching component: `min{ sqrt(r(1-tau)), 2 sqrt(1-tau) }`.
pub fn epsilon(rank: usize, tau: f64) -> Result<f64> {
    let p = PurityProfile::new(rank, tau)?;
    let a = (p.rank as f64 * (1.0 - p.tau)).max(0.0).sqrt();
    let b = 2.0 * (1.0 - p.tau).max(0.0).sqrt();
    Ok(a.min(b))
}

/// Mean-value drift bound in terms of a Frobenius distance to a nearby state
/// of rank at most `n0`: `sqrt(R) * dist`.
pub fn mean_drift_bound_frobenius(rank: usize, n0: usize, frob_dist: f64) -> Result<f64> {
    if !(frob_dist >= 0.0) {
        return Err(Error::Invalid(format!("distance {frob_dist} negative")));
    }
    Ok(r_factor(rank, n0)?.sqrt() * frob_dist)
}

/// Trace-distance bound from a fidelity floor: `2 sqrt(1-f) + 2 sqrt(1-f^2)`.
/// Decreasing in `f`; zero at `f = 1`.
pub fn fidelity_trace_bound(f: f64) -> Result<f64> {
    if !(f >= -TAU_SLACK) || f > 1.0 + TAU_SLACK {
        return Err(Error::Invalid(format!("fidelity {f} outside [0, 1]")));
    }
    let f = f.clamp(0.0, 1.0);
    Ok(2.0 * (1.0 - f).sqrt() + 2.0 * (1.0 - f * f).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_pinned_values() {
        assert_abs_diff_eq!(beta(2, 0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(beta(2, 1.0).unwrap(), 0.0, epsilon = 1e-15);
        // Low purity: the quadratic branch takes over.
        assert_abs_diff_eq!(
            beta(8, 0.25).unwrap(),
            2.0 * (1.0 - 0.0625f64).sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn r_factor_peaks_at_half_rank() {
        assert_abs_diff_eq!(r_factor(2, 1).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r_factor(2, 2).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r_factor(4, 1).unwrap(), 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r_factor(4, 2).unwrap(), 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r_factor(5, 5).unwrap(), 4.0 * 6.0 / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn entry_bound_defaults_reduce_to_beta() {
        for &(r, tau) in &[(2usize, 0.5f64), (3, 0.9), (5, 0.4), (8, 0.99)] {
            let p = PurityProfile::new(r, tau).unwrap();
            assert_eq!(gamma_c_entry_bound(&p), beta(r, tau).unwrap());
        }
    }

    #[test]
    fn component_info_only_tightens() {
        for n0 in 1..=5usize {
            let refined = PurityProfile::new(5, 0.6)
                .unwrap()
                .with_components(1.0, n0)
                .unwrap();
            let base = PurityProfile::new(5, 0.6).unwrap();
            assert!(gamma_c_entry_bound(&refined) <= gamma_c_entry_bound(&base) + 1e-15);
        }
        // Pure components of bounded rank at tau0 = tau pin the cap to zero.
        let tight = PurityProfile::new(4, 0.7)
            .unwrap()
            .with_components(0.7, 2)
            .unwrap();
        assert_abs_diff_eq!(gamma_c_entry_bound(&tight), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn trace_bound_needs_l1_and_scales_with_it() {
        let p = PurityProfile::new(2, 0.5).unwrap();
        assert!(gamma_c_trace_bound(&p).is_err());
        let p3 = p.clone().with_l1(3.0).unwrap();
        assert_abs_diff_eq!(gamma_c_trace_bound(&p3).unwrap(), 3.0, epsilon = 1e-15);
        let p6 = p.with_l1(6.0).unwrap();
        assert_abs_diff_eq!(gamma_c_trace_bound(&p6).unwrap(), 6.0, epsilon = 1e-15);
    }

    #[test]
    fn epsilon_pinned_and_monotone() {
        assert_abs_diff_eq!(epsilon(2, 0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(epsilon(2, 1.0).unwrap(), 0.0, epsilon = 1e-15);
        let mut last = f64::INFINITY;
        for k in 1..=10 {
            let tau = k as f64 / 10.0;
            let e = epsilon(3, tau).unwrap();
            assert!(e <= last + 1e-15);
            last = e;
        }
    }

    #[test]
    fn drift_bound_matches_r_factor() {
        assert_abs_diff_eq!(
            mean_drift_bound_frobenius(4, 2, 0.5).unwrap(),
            0.5 * 2.0,
            epsilon = 1e-15
        );
        assert!(mean_drift_bound_frobenius(4, 0, 0.5).is_err());
    }

    #[test]
    fn fidelity_trace_bound_endpoints() {
        assert_abs_diff_eq!(fidelity_trace_bound(1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_trace_bound(0.0).unwrap(), 4.0, epsilon = 1e-15);
        let hi = fidelity_trace_bound(11.0 / 12.0).unwrap();
        let lo = fidelity_trace_bound(0.95).unwrap();
        assert!(hi > lo && lo > 0.0);
        assert!(fidelity_trace_bound(1.5).is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(PurityProfile::new(0, 0.5).is_err());
        assert!(PurityProfile::new(2, 0.0).is_err());
        assert!(PurityProfile::new(2, 1.2).is_err());
        assert!(PurityProfile::new(2, 0.8)
            .unwrap()
            .with_components(0.5, 1)
            .is_err());
        assert!(PurityProfile::new(2, 0.8)
            .unwrap()
            .with_components(0.9, 3)
            .is_err());
        assert!(PurityProfile::new(2, 0.8).unwrap().with_l1(-1.0).is_err());
    }
}
