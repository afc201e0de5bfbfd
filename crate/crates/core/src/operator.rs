//! Dense complex linear algebra: Hermitian eigendecompositions, norms,
//! pseudoinverses and unitary dilations of contractions.
//!
//! Every operator here acts on a register of qubits, so dimensions are
//! always powers of two. Basis index `i` of a multi-register operator is
//! laid out most-significant register first.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Entrywise tolerance used when checking Hermiticity of inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative threshold below which the two lowest eigenvalues count as degenerate.
pub const DEGENERACY_REL_TOL: f64 = 1e-10;
/// Slack allowed on `||M|| <= 1` before a dilation is refused.
pub const DILATION_NORM_SLACK: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// A square complex matrix acting on `log2(dim)` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    m: CMatrix,
}

impl DenseOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Shape(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let dim = m.nrows();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::Dimension(dim));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { m })
    }

    /// Builds an operator without re-validating; callers guarantee the invariants.
    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        debug_assert!(m.nrows() == m.ncols() && m.nrows().is_power_of_two());
        Self { m }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(CMatrix::zeros(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let d = CVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    /// Row-major real entries.
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::Shape(format!(
                "expected {} entries, got {}",
                dim * dim,
                rows.len()
            )));
        }
        Self::new(CMatrix::from_fn(dim, dim, |i, j| C64::new(rows[i * dim + j], 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "cannot multiply {}-dim by {}-dim operator",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Self { m: gemm(&self.m, &other.m) })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Shape("cannot add operators of different dimension".into()));
        }
        Ok(Self { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Shape("cannot subtract operators of different dimension".into()));
        }
        Ok(Self { m: &self.m - &other.m })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: &self.m * C64::new(s, 0.0) }
    }

    /// `self - shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.m.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= C64::new(shift, 0.0);
        }
        Self { m }
    }

    /// Kronecker product with `self` as the most significant register.
    pub fn kron(&self, other: &Self) -> Self {
        Self { m: self.m.kronecker(&other.m) }
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.m - self.m.adjoint()))
    }

    /// Largest entrywise deviation of `U^dagger U` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        let mut g = gemm(&self.m.adjoint(), &self.m);
        for i in 0..g.nrows() {
            g[(i, i)] -= ONE;
        }
        max_abs(&g)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() <= tol
    }

    /// Top-left `k x k` block.
    pub fn top_left(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.dim() || !k.is_power_of_two() {
            return Err(Error::Dimension(k));
        }
        Ok(Self { m: self.m.view((0, 0), (k, k)).into_owned() })
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.dim() {
            return Err(Error::Shape(format!(
                "vector of length {} for {}-dim operator",
                v.len(),
                self.dim()
            )));
        }
        Ok(&self.m * v)
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        max_abs(&(&self.m - &other.m))
    }
}

/// A normalized state on a register of qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: CVector,
}

impl StateVector {
    pub fn new(amps: CVector) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::Dimension(dim));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amps })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Parameter(format!("basis index {index} >= dimension {dim}")));
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = ONE;
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    /// Multiplies by a global phase so the largest-magnitude amplitude is real
    /// and positive. Ties go to the lowest index.
    pub fn canonical_phase(mut self) -> Self {
        let mut best = 0;
        for (i, z) in self.amps.iter().enumerate() {
            if z.norm() > self.amps[best].norm() + 1e-14 {
                best = i;
            }
        }
        let z = self.amps[best];
        if z.norm() > 0.0 {
            let phase = z.conj() / z.norm();
            self.amps *= phase;
        }
        self
    }
}

/// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the eigenvector of `eigenvalues[j]`.
    pub eigenvectors: CMatrix,
    pub e0: f64,
    /// `E1 - E0`; zero for one-dimensional inputs.
    pub gap: f64,
    pub degenerate: bool,
}

impl SpectralData {
    pub fn eigenvector(&self, j: usize) -> CVector {
        self.eigenvectors.column(j).into_owned()
    }

    /// The ground state with the canonical global phase.
    pub fn ground_state(&self) -> StateVector {
        StateVector { amps: self.eigenvector(0) }.canonical_phase()
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
    }

    /// Rebuilds `V f(Lambda) V^dagger`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fj = C64::new(f(lam), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        gemm(&scaled, &self.eigenvectors.adjoint())
    }
}

/// Dense complex product through a blocked gemm kernel.
pub(crate) fn gemm(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    if m * k * n < 1 << 15 {
        return a * b;
    }
    let mut c = CMatrix::zeros(m, n);
    // Complex64 is repr(C) { re, im }, the same layout as [f64; 2];
    // nalgebra storage is column-major and contiguous.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

fn ensure_hermitian(a: &CMatrix) -> Result<()> {
    let scale = max_abs(a).max(1.0);
    let asymmetry = max_abs(&(a - a.adjoint()));
    if asymmetry > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix (validated, then symmetrized).
pub fn hermitian_eig(a: &DenseOperator) -> Result<SpectralData> {
    eig_matrix(a.matrix())
}

pub(crate) fn eig_matrix(a: &CMatrix) -> Result<SpectralData> {
    ensure_hermitian(a)?;
    let sym = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let n = sym.nrows();
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let e0 = eigenvalues[0];
    let gap = if n > 1 { eigenvalues[1] - eigenvalues[0] } else { 0.0 };
    let radius = eigenvalues.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()));
    let degenerate = n > 1 && gap < DEGENERACY_REL_TOL * radius.max(f64::MIN_POSITIVE);
    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
        e0,
        gap,
        degenerate,
    })
}


/// Square root of a Hermitian PSD matrix; tiny negative eigenvalues are clamped.

/// Moore-Penrose pseudoinverse of a Hermitian PSD operator.
///
/// Eigenvalues above `tol` are inverted, the rest map to zero. Eigenvalues in
/// `[-max(tol, 1e-10 ||A||), 0)` are treated as rounding noise.
pub fn pseudoinverse(a: &DenseOperator, tol: f64) -> Result<DenseOperator> {
    if !(tol >= 0.0) {
        return Err(Error::Parameter(format!("tolerance must be nonnegative, got {tol}")));
    }
    let spec = hermitian_eig(a)?;
    let floor = tol.max(1e-10 * spec.spectral_radius());
    if let Some(&neg) = spec.eigenvalues.iter().find(|&&x| x < -floor) {
        return Err(Error::NotPsd { eigenvalue: neg });
    }
    let m = spec.reconstruct_with(|x| if x > tol { 1.0 / x } else { 0.0 });
    Ok(DenseOperator::from_matrix_unchecked(m))
}

/// Largest singular value.
pub fn operator_norm(a: &DenseOperator) -> f64 {
    matrix_norm(a.matrix())
}

pub(crate) fn matrix_norm(a: &CMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// Embeds a contraction `M` as the top-left block of the unitary
/// `[[M, sqrt(I - M M^dagger)], [sqrt(I - M^dagger M), -M^dagger]]`.
///
/// For Hermitian `M` the result is itself Hermitian.
pub fn unitary_dilation(m: &DenseOperator) -> Result<DenseOperator> {
    let norm = operator_norm(m);
    if norm > 1.0 + DILATION_NORM_SLACK {
        return Err(Error::Normalization { norm });
    }
    Ok(DenseOperator::from_matrix_unchecked(dilate_matrix(m.matrix())?))
}

/// Dilation of an already-validated contraction, built from an SVD
/// `A = U S V^dagger` so that `sqrt(I - A A^dagger) = U sqrt(1 - S^2) U^dagger`
/// stays accurate for singular values near one. Values slightly above one are
/// clipped.
pub(crate) fn dilate_matrix(m: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    if n > 0 && max_abs(&(m - m.adjoint())) <= 1e-12 {
        // Hermitian blocks: [[A, S], [S, -A]] with S = sqrt(1 - A^2) commuting with A.
        let spec = eig_matrix(m)?;
        let a = spec.reconstruct_with(|x| x.clamp(-1.0, 1.0));
        let s = spec.reconstruct_with(|x| (1.0 - x.clamp(-1.0, 1.0).powi(2)).max(0.0).sqrt());
        let mut u = CMatrix::zeros(2 * n, 2 * n);
        u.view_mut((0, 0), (n, n)).copy_from(&a);
        u.view_mut((0, n), (n, n)).copy_from(&s);
        u.view_mut((n, 0), (n, n)).copy_from(&s);
        u.view_mut((n, n), (n, n)).copy_from(&(-&a));
        return Ok(u);
    }
    let svd = m.clone().svd(true, true);
    let (uu, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(v)) => (u, v),
        _ => return Err(Error::Validation("singular value decomposition failed".into())),
    };
    let sig = &svd.singular_values;
    let clip = sig.iter().any(|&x| x > 1.0);
    let a = if clip {
        let mut us = uu.clone();
        for (j, &x) in sig.iter().enumerate() {
            let f = C64::new(x.min(1.0), 0.0);
            for i in 0..n {
                us[(i, j)] *= f;
            }
        }
        gemm(&us, &vt)
    } else {
        m.clone()
    };
    let weighted = |basis: &CMatrix| {
        let mut b = basis.clone();
        for (j, &x) in sig.iter().enumerate() {
            let f = C64::new((1.0 - x.min(1.0) * x.min(1.0)).max(0.0).sqrt(), 0.0);
            for i in 0..n {
                b[(i, j)] *= f;
            }
        }
        gemm(&b, &basis.adjoint())
    };
    let v = vt.adjoint();
    let right = weighted(&uu);
    let left = weighted(&v);
    let mut u = CMatrix::zeros(2 * n, 2 * n);
    u.view_mut((0, 0), (n, n)).copy_from(&a);
    u.view_mut((0, n), (n, n)).copy_from(&right);
    u.view_mut((n, 0), (n, n)).copy_from(&left);
    u.view_mut((n, n), (n, n)).copy_from(&(-a.adjoint()));
    Ok(u)
}

/// Unitary whose first column is `v`, built from one Householder reflection
/// and a phase on the first basis vector.
pub fn state_prep_unitary(v: &StateVector) -> DenseOperator {
    DenseOperator::from_matrix_unchecked(householder_completion(v.amplitudes()))
}

pub(crate) fn householder_completion(v: &CVector) -> CMatrix {
    let n = v.len();
    let v0 = v[0];
    let phase = if v0.norm() > 0.0 { v0 / v0.norm() } else { ONE };
    // Rotate v so its first entry is real nonnegative, then reflect e0 onto it.
    let vt = v * phase.conj();
    let mut w = -vt.clone();
    w[0] += ONE;
    let wn2 = w.norm_squared();
    let mut h = CMatrix::identity(n, n);
    if wn2 > 1e-30 {
        let outer = &w * w.adjoint();
        h -= outer * C64::new(2.0 / wn2, 0.0);
    }
    // H e0 = vt, so (H diag(phase, 1, ...)) e0 = v.
    for i in 0..n {
        h[(i, 0)] *= phase;
    }
    h
}
