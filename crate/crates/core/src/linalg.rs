//! Dense complex linear algebra shared by every other module.
//!
//! States in this crate live on a handful of qubits, so everything is stored
//! as explicit dense `DMatrix<Complex<f64>>` and no attempt is made at sparse
//! or structured representations.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Default tolerance for hermiticity / positivity / trace checks.
pub const DEFAULT_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Dense complex matrix. The inner `nalgebra` storage is public; arithmetic
/// goes through it directly, the wrapper only adds the spectral helpers the
/// certification code needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(pub DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        ComplexMatrix(DMatrix::identity(n, n))
    }

    /// Build from row-major nested vectors; rows must be equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Shape("matrix needs at least one row".into()));
        }
        let ncols = rows[0].len();
        if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Shape("ragged or empty rows".into()));
        }
        Ok(ComplexMatrix(DMatrix::from_fn(rows.len(), ncols, |i, j| {
            rows[i][j]
        })))
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        ComplexMatrix(m.map(cr))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        ComplexMatrix(DMatrix::from_fn(rows, cols, f))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.0.is_square()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.0[(i, j)] = v;
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix(self.0.map(|z| z * s))
    }

    /// Kronecker product; the left factor is the most significant one.
    pub fn tensor(&self, other: &ComplexMatrix) -> Self {
        ComplexMatrix(self.0.kronecker(&other.0))
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.0.map(|z| z.re)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.0.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Largest absolute deviation from `A = A†`.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows() {
            for j in i..self.cols() {
                let d = (self.0[(i, j)] - self.0[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(1.0);
        self.hermiticity_defect() <= tol * scale
    }

    /// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
    pub fn hermitian_eigen(&self, tol: f64) -> Result<Spectrum> {
        let scale = self.max_abs().max(1.0);
        let defect = self.hermiticity_defect();
        if defect > tol * scale {
            return Err(Error::NotHermitian(defect));
        }
        // Symmetrize first so roundoff asymmetry cannot leak into the solver.
        let sym = (&self.0 + self.0.adjoint()).map(|z| z * cr(0.5));
        let eig = nalgebra::SymmetricEigen::new(sym);
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(Spectrum {
            values,
            vectors: ComplexMatrix(vectors),
        })
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let sv = self.0.clone().svd(false, false).singular_values;
        let mut out: Vec<f64> = sv.iter().copied().collect();
        out.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        out
    }

    pub fn max_singular_value(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Trace norm (sum of singular values).
    pub fn trace_norm(&self) -> f64 {
        self.singular_values().iter().sum()
    }

    /// Check positive semidefiniteness; errors if the matrix is not Hermitian.
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        let spec = self.hermitian_eigen(tol)?;
        let scale = spec.values.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
        Ok(spec.min() >= -tol * scale)
    }
}

impl std::ops::Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl std::ops::Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

/// Hermitian eigensystem with eigenvalues in descending order and the
/// eigenvector columns permuted to match.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Spectrum {
    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Column of the eigenvector matrix as a plain vector.
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.rows())
            .map(|i| self.vectors.get(i, k))
            .collect()
    }

    /// `U diag(values) U†`; used by tests to confirm the decomposition.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let d = DMatrix::from_fn(n, n, |i, j| if i == j { cr(self.values[i]) } else { cr(0.0) });
        ComplexMatrix(&self.vectors.0 * d * self.vectors.0.adjoint())
    }
}

/// Density matrix over an explicit tensor factorization. Party 0 is the most
/// significant tensor factor.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity before accepting.
    pub fn new(dims: Vec<usize>, mat: ComplexMatrix, tol: f64) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::Invalid("dims must be nonempty and positive".into()));
        }
        let total: usize = dims.iter().product();
        if mat.rows() != total || mat.cols() != total {
            return Err(Error::Shape(format!(
                "matrix is {}x{} but dims give {}",
                mat.rows(),
                mat.cols(),
                total
            )));
        }
        let spec = mat
            .hermitian_eigen(tol)
            .map_err(|_| Error::NotDensity("matrix is not Hermitian".into()))?;
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol.max(1e-12) * 10.0 || tr.im.abs() > tol.max(1e-12) * 10.0 {
            return Err(Error::NotDensity(format!("trace is {:.6} + {:.2e}i", tr.re, tr.im)));
        }
        if spec.min() < -tol.max(1e-12) * 10.0 {
            return Err(Error::NotDensity(format!(
                "negative eigenvalue {:.3e}",
                spec.min()
            )));
        }
        Ok(DensityMatrix { dims, mat })
    }

    /// Pure state from an amplitude vector (normalized internally).
    pub fn from_pure(dims: Vec<usize>, amplitudes: &[C64]) -> Result<Self> {
        let total: usize = dims.iter().product();
        if amplitudes.len() != total {
            return Err(Error::Shape(format!(
                "amplitude vector has length {}, dims give {}",
                amplitudes.len(),
                total
            )));
        }
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(Error::Invalid("zero state vector".into()));
        }
        let mat = ComplexMatrix::from_fn(total, total, |i, j| {
            amplitudes[i] * amplitudes[j].conj() / norm_sq
        });
        Ok(DensityMatrix { dims, mat })
    }

    /// Skip validation; for internal construction where positivity holds by
    /// Gram structure.
    pub(crate) fn trusted(dims: Vec<usize>, mat: ComplexMatrix) -> Self {
        DensityMatrix { dims, mat }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn purity(&self) -> f64 {
        // tr(rho^2) = ||rho||_F^2 for Hermitian rho.
        let f = self.mat.frobenius_norm();
        f * f
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.mat
            .hermitian_eigen(DEFAULT_TOL)
            .map(|s| s.values)
            .unwrap_or_default()
    }

    /// Number of eigenvalues above `cutoff * lambda_max`. Overestimating the
    /// rank is sound for every bound downstream, so the cutoff is relative.
    pub fn numerical_rank(&self, cutoff: f64) -> usize {
        let evs = self.eigenvalues();
        let lmax = evs.first().copied().unwrap_or(0.0).max(0.0);
        evs.iter().filter(|&&v| v > cutoff * lmax).count()
    }

    pub fn expectation(&self, op: &ComplexMatrix) -> Result<f64> {
        if op.rows() != self.dim() || op.cols() != self.dim() {
            return Err(Error::Shape(format!(
                "operator is {}x{}, state dimension {}",
                op.rows(),
                op.cols(),
                self.dim()
            )));
        }
        Ok((&self.mat.0 * &op.0).trace().re)
    }

    /// Trace out every party not listed in `keep` (strictly increasing party
    /// indices). The kept parties stay in their original order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let n = self.dims.len();
        if keep.is_empty() {
            return Err(Error::Invalid("must keep at least one party".into()));
        }
        if keep.windows(2).any(|w| w[0] >= w[1]) || *keep.last().unwrap() >= n {
            return Err(Error::Invalid(format!(
                "keep list must be strictly increasing within 0..{n}"
            )));
        }
        let traced: Vec<usize> = (0..n).filter(|p| !keep.contains(p)).collect();
        let keep_dims: Vec<usize> = keep.iter().map(|&p| self.dims[p]).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&p| self.dims[p]).collect();
        let dk: usize = keep_dims.iter().product();
        let dt: usize = traced_dims.iter().product();

        // Strides of the full big-endian index.
        let mut stride = vec![1usize; n];
        for p in (0..n.saturating_sub(1)).rev() {
            stride[p] = stride[p + 1] * self.dims[p + 1];
        }
        let offset = |flat: usize, parties: &[usize], dims: &[usize]| -> usize {
            let mut rem = flat;
            let mut off = 0;
            for (pos, &p) in parties.iter().enumerate().rev() {
                let digit = rem % dims[pos];
                rem /= dims[pos];
                off += digit * stride[p];
            }
            off
        };

        let mut out = DMatrix::<C64>::zeros(dk, dk);
        for a in 0..dk {
            let ra = offset(a, keep, &keep_dims);
            for b in 0..dk {
                let cb = offset(b, keep, &keep_dims);
                let mut acc = cr(0.0);
                for t in 0..dt {
                    let o = offset(t, &traced, &traced_dims);
                    acc += self.mat.0[(ra + o, cb + o)];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(DensityMatrix {
            dims: keep_dims,
            mat: ComplexMatrix(out),
        })
    }

    /// Uhlmann fidelity in the squared convention: `F(psi, sigma)` equals
    /// `<psi|sigma|psi>` when the first argument is pure.
    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Shape("fidelity of unequal dimensions".into()));
        }
        // Pure shortcut keeps the common case exact.
        for (a, b) in [(self, other), (other, self)] {
            if a.purity() > 1.0 - 1e-12 {
                let spec = a.mat.hermitian_eigen(1e-7)?;
                let psi = spec.vector(0);
                let mut val = cr(0.0);
                for i in 0..b.dim() {
                    for j in 0..b.dim() {
                        val += psi[i].conj() * b.mat.0[(i, j)] * psi[j];
                    }
                }
                return Ok(val.re.clamp(0.0, 1.0));
            }
        }
        let spec = self.mat.hermitian_eigen(1e-7)?;
        let n = self.dim();
        let sqrt_vals: Vec<f64> = spec.values.iter().map(|&v| v.max(0.0).sqrt()).collect();
        let d = DMatrix::from_fn(n, n, |i, j| if i == j { cr(sqrt_vals[i]) } else { cr(0.0) });
        let sqrt_rho = &spec.vectors.0 * d * spec.vectors.0.adjoint();
        let inner = &sqrt_rho * &other.mat.0 * &sqrt_rho;
        let inner_spec = ComplexMatrix(inner).hermitian_eigen(1e-7)?;
        let root_sum: f64 = inner_spec.values.iter().map(|&v| v.max(0.0).sqrt()).sum();
        Ok((root_sum * root_sum).clamp(0.0, 1.0))
    }

    /// Convex mixture of states on identical carriers.
    pub fn mix(weights: &[f64], states: &[DensityMatrix]) -> Result<DensityMatrix> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::Invalid("need matching, nonempty weights and states".into()));
        }
        if weights.iter().any(|&w| w < -1e-12) {
            return Err(Error::Invalid("negative mixture weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("weights sum to {total}")));
        }
        let dims = states[0].dims.clone();
        if states.iter().any(|s| s.dims != dims) {
            return Err(Error::Shape("mixture components on different carriers".into()));
        }
        let mut acc = DMatrix::<C64>::zeros(states[0].dim(), states[0].dim());
        for (w, s) in weights.iter().zip(states) {
            acc += s.mat.0.map(|z| z * cr(*w));
        }
        Ok(DensityMatrix {
            dims,
            mat: ComplexMatrix(acc),
        })
    }
}
