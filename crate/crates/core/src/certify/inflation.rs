//! Triangle inflation test on first and second moments of one dichotomic
//! observable per party, with a purity-driven relaxation parameter.

use crate::error::{Error, Result};
use crate::linalg::DensityMatrix;
use crate::states::MeasurementCollection;

use super::{CertReport, CriterionId};

/// Single-party and pairwise correlators for a tripartite scenario.
/// Pairs are ordered `(0,1), (0,2), (1,2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanValueData {
    pub e_single: [f64; 3],
    pub e_pair: [f64; 3],
}

impl MeanValueData {
    pub fn new(e_single: [f64; 3], e_pair: [f64; 3]) -> Result<Self> {
        for v in e_single.iter().chain(e_pair.iter()) {
            if !v.is_finite() || v.abs() > 1.0 + 1e-9 {
                return Err(Error::Invalid(format!(
                    "correlator {v} outside [-1, 1]"
                )));
            }
        }
        Ok(Self { e_single, e_pair })
    }

    /// Correlators of a tripartite state under one dichotomic observable
    /// per party.
    pub fn from_state(rho: &DensityMatrix, m: &MeasurementCollection) -> Result<Self> {
        if m.n_parties() != 3 {
            return Err(Error::Shape(format!(
                "inflation needs 3 parties, got {}",
                m.n_parties()
            )));
        }
        if m.sizes() != [1, 1, 1] {
            return Err(Error::Shape(
                "inflation needs exactly one observable per party".into(),
            ));
        }
        if !m.is_dichotomic() {
            return Err(Error::Invalid(
                "inflation needs dichotomic observables".into(),
            ));
        }
        let g: Vec<_> = (0..3).map(|p| m.global_observable(p, 0)).collect();
        let mut e_single = [0.0; 3];
        for p in 0..3 {
            e_single[p] = rho.expectation(&g[p])?;
        }
        let mut e_pair = [0.0; 3];
        for (idx, (a, b)) in [(0usize, 1usize), (0, 2), (1, 2)].iter().enumerate() {
            let prod = &g[*a] * &g[*b];
            e_pair[idx] = rho.expectation(&prod)?;
        }
        Self::new(e_single, e_pair)
    }
}

/// Hexagon-inflation inequality for the triangle, relaxed by `eps`:
/// each pair term `1 + |E_a| + |E_b| + E_ab - 3 eps` is clamped at zero
/// before squaring, and the squares must stay below
/// `6 prod_a (1 + |E_a| + eps)`.
pub fn check_triangle_inflation(d: &MeanValueData, eps: f64) -> Result<CertReport> {
    if !(eps >= 0.0) {
        return Err(Error::Invalid(format!("relaxation eps={eps} negative")));
    }
    let s = &d.e_single;
    let mut lhs = 0.0;
    let mut clamped = 0;
    for (idx, (a, b)) in [(0usize, 1usize), (0, 2), (1, 2)].iter().enumerate() {
        let term = 1.0 + s[*a].abs() + s[*b].abs() + d.e_pair[idx] - 3.0 * eps;
        if term > 0.0 {
            lhs += term * term;
        } else {
            clamped += 1;
        }
    }
    let rhs = 6.0 * s.iter().map(|e| 1.0 + e.abs() + eps).product::<f64>();
    Ok(CertReport::closed_form(
        CriterionId::TriangleInflation,
        rhs - lhs,
        format!("lhs={lhs:.6}, rhs={rhs:.6}, eps={eps:.6}, clamped terms={clamped}"),
    ))
}

/// Largest symmetric two-body correlator compatible with the relaxed
/// triangle inflation bound at vanishing single-party marginals:
/// `sqrt(2) (1+eps)^{3/2} + 3 eps - 1`.
pub fn symmetric_e2_bound(eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::Invalid(format!("relaxation eps={eps} negative")));
    }
    Ok(std::f64::consts::SQRT_2 * (1.0 + eps).powf(1.5) + 3.0 * eps - 1.0)
}
