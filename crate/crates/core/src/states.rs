//! Canonical states, measurement collections, covariance assembly and the
//! classical-correlation matrix of explicit decompositions.

pub mod sample;

use nalgebra::DMatrix;

use crate::bounds::PurityProfile;
use crate::error::{Error, Result};
use crate::linalg::{cr, ComplexMatrix, DensityMatrix, DEFAULT_TOL};

/// Per-party lists of observables. Spectral radius is capped at one (the
/// purity bounds are calibrated to that normalization); the dichotomic flag
/// is established spectrally, never trusted from the caller.
#[derive(Clone, Debug)]
pub struct MeasurementCollection {
    dims: Vec<usize>,
    per_party: Vec<Vec<ComplexMatrix>>,
    dichotomic: bool,
}

impl MeasurementCollection {
    pub fn new(dims: Vec<usize>, per_party: Vec<Vec<ComplexMatrix>>, tol: f64) -> Result<Self> {
        if dims.is_empty() || dims.len() != per_party.len() {
            return Err(Error::Shape(format!(
                "{} dims for {} party lists",
                dims.len(),
                per_party.len()
            )));
        }
        let mut dichotomic = true;
        for (i, obs_list) in per_party.iter().enumerate() {
            if obs_list.is_empty() {
                return Err(Error::Invalid(format!("party {i} has no observables")));
            }
            for (k, obs) in obs_list.iter().enumerate() {
                if obs.rows() != dims[i] || obs.cols() != dims[i] {
                    return Err(Error::Shape(format!(
                        "observable {k} of party {i} is {}x{}, local dimension {}",
                        obs.rows(),
                        obs.cols(),
                        dims[i]
                    )));
                }
                let spec = obs.hermitian_eigen(tol)?;
                if spec.values.iter().any(|v| v.abs() > 1.0 + tol.max(1e-12) * 10.0) {
                    return Err(Error::Invalid(format!(
                        "observable {k} of party {i} has spectral radius {:.6} > 1",
                        spec.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
                    )));
                }
                if spec
                    .values
                    .iter()
                    .any(|v| (v.abs() - 1.0).abs() > tol.max(1e-12) * 100.0)
                {
                    dichotomic = false;
                }
            }
        }
        Ok(MeasurementCollection {
            dims,
            per_party,
            dichotomic,
        })
    }

    /// One Pauli-Z observable per qubit party.
    pub fn z_measurements(n: usize) -> Self {
        let z = ComplexMatrix::from_rows(&[vec![cr(1.0), cr(0.0)], vec![cr(0.0), cr(-1.0)]])
            .unwrap();
        MeasurementCollection::new(vec![2; n], vec![vec![z]; n], DEFAULT_TOL).unwrap()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.per_party.iter().map(|l| l.len()).collect()
    }

    pub fn total(&self) -> usize {
        self.per_party.iter().map(|l| l.len()).sum()
    }

    pub fn party_observables(&self, i: usize) -> &[ComplexMatrix] {
        &self.per_party[i]
    }

    pub fn is_dichotomic(&self) -> bool {
        self.dichotomic
    }

    /// Row index of observable `k` of party `i` in the flat ordering.
    pub fn flat_index(&self, party: usize, k: usize) -> usize {
        self.per_party[..party].iter().map(|l| l.len()).sum::<usize>() + k
    }

    pub fn flat(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.total());
        for (i, l) in self.per_party.iter().enumerate() {
            for k in 0..l.len() {
                out.push((i, k));
            }
        }
        out
    }

    /// Observable embedded on the full carrier with identities elsewhere.
    pub fn global_observable(&self, party: usize, k: usize) -> ComplexMatrix {
        let mut op = ComplexMatrix::identity(1);
        for (i, &d) in self.dims.iter().enumerate() {
            let factor = if i == party {
                self.per_party[party][k].clone()
            } else {
                ComplexMatrix::identity(d)
            };
            op = op.tensor(&factor);
        }
        op
    }

    /// The operator constant `l1`: largest singular value of the sum of
    /// `M (x) M` over the flattened collection.
    pub fn operator_sum_constant(&self) -> Result<f64> {
        let d: usize = self.dims.iter().product();
        if d > 32 {
            return Err(Error::Invalid(format!(
                "operator constant needs the {0}^2 x {0}^2 duplicated space; dimension {0} exceeds desk scale",
                d
            )));
        }
        let mut sum = DMatrix::zeros(d * d, d * d);
        for (i, k) in self.flat() {
            let g = self.global_observable(i, k);
            let gg = g.tensor(&g);
            sum += gg.0;
        }
        // The sum is Hermitian, so the top singular value is the spectral
        // radius.
        let spec = ComplexMatrix(sum).hermitian_eigen(1e-7)?;
        Ok(spec.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

/// Real symmetric covariance matrix with its party block map.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    mat: DMatrix<f64>,
    sizes: Vec<usize>,
}

impl CovarianceMatrix {
    pub fn new(mat: DMatrix<f64>, sizes: Vec<usize>) -> Result<Self> {
        let total: usize = sizes.iter().sum();
        if sizes.is_empty() || sizes.iter().any(|&s| s == 0) {
            return Err(Error::Invalid("block sizes must be nonempty and positive".into()));
        }
        if mat.nrows() != total || mat.ncols() != total {
            return Err(Error::Shape(format!(
                "matrix is {}x{} but blocks give {}",
                mat.nrows(),
                mat.ncols(),
                total
            )));
        }
        let scale = mat.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..total {
            for j in i..total {
                if (mat[(i, j)] - mat[(j, i)]).abs() > 1e-8 * scale {
                    return Err(Error::NotHermitian((mat[(i, j)] - mat[(j, i)]).abs()));
                }
            }
        }
        let sym = (&mat + mat.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-7 * scale {
            return Err(Error::Invalid(format!(
                "covariance matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(CovarianceMatrix { mat: sym, sizes })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_parties(&self) -> usize {
        self.sizes.len()
    }

    pub fn total(&self) -> usize {
        self.mat.nrows()
    }

    pub fn offset(&self, party: usize) -> usize {
        self.sizes[..party].iter().sum()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.mat
            .view((self.offset(i), self.offset(j)), (self.sizes[i], self.sizes[j]))
            .into_owned()
    }

    pub fn block_trace_norm(&self, i: usize, j: usize) -> f64 {
        self.block(i, j)
            .svd(false, false)
            .singular_values
            .iter()
            .sum()
    }

    pub fn block_trace(&self, i: usize) -> f64 {
        self.block(i, i).trace()
    }
}

/// Explicit convex decomposition of a state.
#[derive(Clone, Debug)]
pub struct Decomposition {
    weights: Vec<f64>,
    components: Vec<DensityMatrix>,
}

impl Decomposition {
    pub fn new(weights: Vec<f64>, components: Vec<DensityMatrix>) -> Result<Self> {
        if weights.len() != components.len() || components.is_empty() {
            return Err(Error::Invalid("need matching, nonempty weights and components".into()));
        }
        if weights.iter().any(|&w| w < -1e-12) {
            return Err(Error::Invalid("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("weights sum to {total}")));
        }
        let dims = components[0].dims().to_vec();
        if components.iter().any(|c| c.dims() != dims) {
            return Err(Error::Shape("components live on different carriers".into()));
        }
        Ok(Decomposition {
            weights,
            components,
        })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[DensityMatrix] {
        &self.components
    }

    pub fn mixture(&self) -> DensityMatrix {
        DensityMatrix::mix(&self.weights, &self.components).expect("validated on construction")
    }

    /// Average purity of the components (the tau0 of the purity bounds).
    pub fn average_purity(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * c.purity())
            .sum()
    }

    pub fn max_component_rank(&self, cutoff: f64) -> usize {
        self.components
            .iter()
            .map(|c| c.numerical_rank(cutoff))
            .max()
            .unwrap_or(0)
    }
}

/// Flat vector of measurement means on the given state.
pub fn mean_values(rho: &DensityMatrix, m: &MeasurementCollection) -> Result<Vec<f64>> {
    if rho.dims() != m.dims() {
        return Err(Error::Shape(format!(
            "state dims {:?} vs measurement dims {:?}",
            rho.dims(),
            m.dims()
        )));
    }
    m.flat()
        .into_iter()
        .map(|(i, k)| rho.expectation(&m.global_observable(i, k)))
        .collect()
}

/// Covariance matrix of the state under the collection; same-party pairs use
/// the symmetrized second moment so the matrix is real symmetric even for
/// non-commuting observables.
pub fn covariance(rho: &DensityMatrix, m: &MeasurementCollection) -> Result<CovarianceMatrix> {
    if rho.dims() != m.dims() {
        return Err(Error::Shape(format!(
            "state dims {:?} vs measurement dims {:?}",
            rho.dims(),
            m.dims()
        )));
    }
    let flat = m.flat();
    let n = flat.len();
    let ops: Vec<ComplexMatrix> = flat
        .iter()
        .map(|&(i, k)| m.global_observable(i, k))
        .collect();
    let rho_ops: Vec<ComplexMatrix> = ops
        .iter()
        .map(|g| ComplexMatrix(&rho.matrix().0 * &g.0))
        .collect();
    let means: Vec<f64> = rho_ops.iter().map(|rg| rg.trace().re).collect();
    let mut mat = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            // Re tr(rho A B) is the symmetrized moment for Hermitian A, B.
            let mut t = 0.0;
            let x = &rho_ops[a].0;
            let y = &ops[b].0;
            for r in 0..x.nrows() {
                for c in 0..x.ncols() {
                    t += (x[(r, c)] * y[(c, r)]).re;
                }
            }
            let v = t - means[a] * means[b];
            mat[(a, b)] = v;
            mat[(b, a)] = v;
        }
    }
    CovarianceMatrix::new(mat, m.sizes())
}

/// Classical-correlation matrix of an explicit decomposition:
/// `sum_k p_k <M_i>_k <M_j>_k - <M_i><M_j>`. Always PSD (a Gram matrix of
/// weighted mean deviations).
pub fn gamma_c(dec: &Decomposition, m: &MeasurementCollection) -> Result<DMatrix<f64>> {
    let comp_means: Vec<Vec<f64>> = dec
        .components()
        .iter()
        .map(|c| mean_values(c, m))
        .collect::<Result<_>>()?;
    let n = m.total();
    let mut avg = vec![0.0; n];
    for (w, means) in dec.weights().iter().zip(&comp_means) {
        for (a, v) in means.iter().enumerate() {
            avg[a] += w * v;
        }
    }
    let mut out = DMatrix::zeros(n, n);
    for (w, means) in dec.weights().iter().zip(&comp_means) {
        for a in 0..n {
            for b in 0..n {
                out[(a, b)] += w * (means[a] - avg[a]) * (means[b] - avg[b]);
            }
        }
    }
    Ok(out)
}

/// Purity profile of a bare state: measured rank, purity and the operator
/// constant of the collection.
pub fn profile_for_state(
    rho: &DensityMatrix,
    m: &MeasurementCollection,
    cutoff: f64,
) -> Result<PurityProfile> {
    PurityProfile::new(rho.numerical_rank(cutoff), rho.purity().min(1.0))?
        .with_l1(m.operator_sum_constant()?)
}

/// Profile of a mixture with its decomposition known: adds the average
/// component purity and the component rank ceiling.
pub fn profile_for_decomposition(
    dec: &Decomposition,
    m: &MeasurementCollection,
    cutoff: f64,
) -> Result<PurityProfile> {
    let rho = dec.mixture();
    let base = profile_for_state(&rho, m, cutoff)?;
    let tau0 = dec.average_purity().min(1.0).max(base.tau);
    let n0 = dec.max_component_rank(cutoff).min(base.rank).max(1);
    base.with_components(tau0, n0)
}

/// GHZ state on `n` qubits.
pub fn ghz(n: usize) -> Result<DensityMatrix> {
    if n < 2 {
        return Err(Error::Invalid("GHZ needs at least two parties".into()));
    }
    let d = 1usize << n;
    let mut amps = vec![cr(0.0); d];
    amps[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
    amps[d - 1] = cr(std::f64::consts::FRAC_1_SQRT_2);
    DensityMatrix::from_pure(vec![2; n], &amps)
}

/// Mixture `alpha |+><+| + (1-alpha) |-><-|` of the two three-qubit GHZ
/// parity states.
pub fn rho_alpha(alpha: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Invalid(format!("alpha {alpha} outside [0, 1]")));
    }
    let s = cr(std::f64::consts::FRAC_1_SQRT_2);
    let mut plus = vec![cr(0.0); 8];
    plus[0] = s;
    plus[7] = s;
    let mut minus = vec![cr(0.0); 8];
    minus[0] = s;
    minus[7] = -s;
    let p = DensityMatrix::from_pure(vec![2, 2, 2], &plus)?;
    let m = DensityMatrix::from_pure(vec![2, 2, 2], &minus)?;
    if alpha == 0.0 {
        return Ok(m);
    }
    if alpha == 1.0 {
        return Ok(p);
    }
    DensityMatrix::mix(&[alpha, 1.0 - alpha], &[p, m])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ghz_marginals_and_purity() {
        let g = ghz(3).unwrap();
        assert_abs_diff_eq!(g.purity(), 1.0, epsilon = 1e-12);
        assert_eq!(g.numerical_rank(1e-9), 1);
        let one = g.partial_trace(&[1]).unwrap();
        assert_abs_diff_eq!(one.matrix().get(0, 0).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(one.matrix().get(1, 1).re, 0.5, epsilon = 1e-12);
        let two = g.partial_trace(&[1, 2]).unwrap();
        assert_abs_diff_eq!(two.matrix().get(0, 0).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(two.matrix().get(3, 3).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(two.matrix().get(0, 3).norm(), 0.0, epsilon = 1e-12);
        assert!(ghz(1).is_err());
    }

    #[test]
    fn rho_alpha_purity_curve() {
        assert_abs_diff_eq!(rho_alpha(1.0).unwrap().purity(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho_alpha(0.5).unwrap().purity(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho_alpha(0.25).unwrap().purity(), 0.625, epsilon = 1e-12);
        assert_eq!(rho_alpha(0.3).unwrap().numerical_rank(1e-9), 2);
        assert!(rho_alpha(1.5).is_err());
    }

    #[test]
    fn ghz_z_covariance_is_all_ones() {
        let m = MeasurementCollection::z_measurements(3);
        for state in [ghz(3).unwrap(), rho_alpha(0.3).unwrap(), rho_alpha(0.5).unwrap()] {
            let cov = covariance(&state, &m).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert_abs_diff_eq!(cov.entry(i, j), 1.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn product_state_covariance_is_block_diagonal() {
        let plus = DensityMatrix::from_pure(
            vec![2],
            &[cr(std::f64::consts::FRAC_1_SQRT_2), cr(std::f64::consts::FRAC_1_SQRT_2)],
        )
        .unwrap();
        let zero = DensityMatrix::from_pure(vec![2], &[cr(1.0), cr(0.0)]).unwrap();
        let prod = DensityMatrix::new(
            vec![2, 2],
            plus.matrix().tensor(zero.matrix()),
            1e-9,
        )
        .unwrap();
        let m = MeasurementCollection::z_measurements(2);
        let cov = covariance(&prod, &m).unwrap();
        assert_abs_diff_eq!(cov.entry(0, 1), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(cov.entry(0, 0), 1.0, epsilon = 1e-10); // <Z>=0 on |+>
        assert_abs_diff_eq!(cov.entry(1, 1), 0.0, epsilon = 1e-10); // Z sharp on |0>
    }

    #[test]
    fn same_party_blocks_symmetrized() {
        // Z and X on one qubit do not commute; the symmetrized moment of the
        // pair on |0> is zero.
        let z = ComplexMatrix::from_rows(&[vec![cr(1.0), cr(0.0)], vec![cr(0.0), cr(-1.0)]])
            .unwrap();
        let x = ComplexMatrix::from_rows(&[vec![cr(0.0), cr(1.0)], vec![cr(1.0), cr(0.0)]])
            .unwrap();
        let m = MeasurementCollection::new(vec![2], vec![vec![z, x]], 1e-9).unwrap();
        let zero = DensityMatrix::from_pure(vec![2], &[cr(1.0), cr(0.0)]).unwrap();
        let cov = covariance(&zero, &m).unwrap();
        assert_abs_diff_eq!(cov.entry(0, 0), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(cov.entry(1, 1), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(cov.entry(0, 1), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn operator_sum_constant_of_triple_z() {
        let m = MeasurementCollection::z_measurements(3);
        assert_abs_diff_eq!(m.operator_sum_constant().unwrap(), 3.0, epsilon = 1e-7);
    }

    #[test]
    fn dichotomic_flag_is_spectral() {
        let z = ComplexMatrix::from_rows(&[vec![cr(1.0), cr(0.0)], vec![cr(0.0), cr(-1.0)]])
            .unwrap();
        let weak = z.scale(cr(0.5));
        let m1 = MeasurementCollection::new(vec![2], vec![vec![z]], 1e-9).unwrap();
        assert!(m1.is_dichotomic());
        let m2 = MeasurementCollection::new(vec![2], vec![vec![weak]], 1e-9).unwrap();
        assert!(!m2.is_dichotomic());
        let big = ComplexMatrix::from_rows(&[vec![cr(3.0), cr(0.0)], vec![cr(0.0), cr(-1.0)]])
            .unwrap();
        assert!(MeasurementCollection::new(vec![2], vec![vec![big]], 1e-9).is_err());
    }

    #[test]
    fn gamma_c_cases() {
        let m = MeasurementCollection::z_measurements(3);
        // Single component: zero matrix.
        let dec = Decomposition::new(vec![1.0], vec![ghz(3).unwrap()]).unwrap();
        let gc = gamma_c(&dec, &m).unwrap();
        assert!(gc.iter().all(|v| v.abs() < 1e-12));
        // Even parity mixture: components have vanishing Z means.
        let dec = Decomposition::new(
            vec![0.5, 0.5],
            vec![rho_alpha(1.0).unwrap(), rho_alpha(0.0).unwrap()],
        )
        .unwrap();
        let gc = gamma_c(&dec, &m).unwrap();
        assert!(gc.iter().all(|v| v.abs() < 1e-12));
        // Classical |000>/|111> mixture: means are +-1 vectors.
        let mut a0 = vec![cr(0.0); 8];
        a0[0] = cr(1.0);
        let mut a7 = vec![cr(0.0); 8];
        a7[7] = cr(1.0);
        let dec = Decomposition::new(
            vec![0.5, 0.5],
            vec![
                DensityMatrix::from_pure(vec![2, 2, 2], &a0).unwrap(),
                DensityMatrix::from_pure(vec![2, 2, 2], &a7).unwrap(),
            ],
        )
        .unwrap();
        let gc = gamma_c(&dec, &m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(gc[(i, j)], 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn covariance_decomposition_identity() {
        // Gamma = sum_k p_k Gamma^(k) + Gamma^c, elementwise.
        let m = MeasurementCollection::z_measurements(3);
        let dec = Decomposition::new(
            vec![0.3, 0.7],
            vec![rho_alpha(0.8).unwrap(), ghz(3).unwrap()],
        )
        .unwrap();
        let full = covariance(&dec.mixture(), &m).unwrap();
        let gc = gamma_c(&dec, &m).unwrap();
        let mut acc = gc.clone();
        for (w, comp) in dec.weights().iter().zip(dec.components()) {
            let part = covariance(comp, &m).unwrap();
            acc += part.matrix() * *w;
        }
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(full.entry(i, j), acc[(i, j)], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn profile_reads_measured_quantities() {
        let m = MeasurementCollection::z_measurements(3);
        let p = profile_for_state(&rho_alpha(0.5).unwrap(), &m, 1e-9).unwrap();
        assert_eq!(p.rank, 2);
        assert_abs_diff_eq!(p.tau, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.l1.unwrap(), 3.0, epsilon = 1e-7);
        assert!(p.components.is_none());
    }

    #[test]
    fn measurement_validation_rejects_complex_nonhermitian() {
        let bad = ComplexMatrix::from_rows(&[vec![cr(0.0), c(0.0, 1.0)], vec![c(0.0, 1.0), cr(0.0)]])
            .unwrap();
        assert!(MeasurementCollection::new(vec![2], vec![vec![bad]], 1e-9).is_err());
        let y = ComplexMatrix::from_rows(&[vec![cr(0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), cr(0.0)]])
            .unwrap();
        let col = MeasurementCollection::new(vec![2], vec![vec![y]], 1e-9).unwrap();
        assert!(col.is_dichotomic());
    }
}
