//! Parameterized spin-chain Hamiltonians, their driving terms, and
//! frustration-free projector models.
//!
//! A model at parameter `lambda + t` is always `H(lambda) + t * H_I`; every
//! built-in family is linear in `lambda` with `H_I = dH/dlambda`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{eig_matrix, hermitian_eig, DenseOperator, SpectralData, StateVector, C64, ZERO};

pub const MAX_QUBITS: usize = 10;

/// One weighted Pauli word. Character `i` of the word acts on qubit `i`,
/// and qubit 0 is the most significant bit of a basis index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm(pub f64, pub String);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliSum {
    pub n_qubits: usize,
    #[serde(default)]
    pub terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, terms: Vec::new() }
    }

    pub fn push(&mut self, coeff: f64, word: impl Into<String>) -> &mut Self {
        self.terms.push(PauliTerm(coeff, word.into()));
        self
    }

    /// Adds a single-site or two-site operator given as (site, letter) pairs.
    pub fn push_sites(&mut self, coeff: f64, sites: &[(usize, char)]) -> &mut Self {
        let mut word = vec!['I'; self.n_qubits];
        for &(i, c) in sites {
            word[i] = c;
        }
        self.push(coeff, word.into_iter().collect::<String>())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(Error::Parameter(format!(
                "n_qubits must lie in [1, {MAX_QUBITS}], got {}",
                self.n_qubits
            )));
        }
        for PauliTerm(c, w) in &self.terms {
            if !c.is_finite() {
                return Err(Error::NonFinite);
            }
            if w.chars().count() != self.n_qubits {
                return Err(Error::Validation(format!(
                    "Pauli word {w:?} does not have length {}",
                    self.n_qubits
                )));
            }
            if let Some(bad) = w.chars().find(|ch| !matches!(ch, 'I' | 'X' | 'Y' | 'Z')) {
                return Err(Error::Validation(format!("invalid Pauli letter {bad:?} in {w:?}")));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|PauliTerm(c, w)| PauliTerm(c * s, w.clone())).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Shape("Pauli sums act on different qubit counts".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self { n_qubits: self.n_qubits, terms })
    }

    /// Sum of absolute coefficients, an upper bound on the operator norm.
    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.0.abs()).sum()
    }
}

/// Dense matrix of a Pauli sum.
pub fn pauli_to_dense(p: &PauliSum) -> Result<DenseOperator> {
    p.validate()?;
    let n = p.n_qubits;
    let dim = 1usize << n;
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for PauliTerm(coeff, word) in &p.terms {
        let letters: Vec<char> = word.chars().collect();
        let mut flip = 0usize;
        for (q, &ch) in letters.iter().enumerate() {
            if matches!(ch, 'X' | 'Y') {
                flip |= 1 << (n - 1 - q);
            }
        }
        for col in 0..dim {
            let mut amp = C64::new(*coeff, 0.0);
            for (q, &ch) in letters.iter().enumerate() {
                let bit = (col >> (n - 1 - q)) & 1;
                match ch {
                    'Z' if bit == 1 => amp = -amp,
                    // Y|0> = i|1>, Y|1> = -i|0>
                    'Y' => amp *= if bit == 0 { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) },
                    _ => {}
                }
            }
            m[(col ^ flip, col)] += amp;
        }
    }
    DenseOperator::new(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `H = -sum Z_i Z_{i+1} - lambda sum X_i`, open chain.
    Tfim,
    /// `H = sum (X_i X_{i+1} + Y_i Y_{i+1} + lambda Z_i Z_{i+1})`, open chain.
    Xxz,
    /// `H = sum |1><1|_i + lambda sum X_i`; frustration-free at `lambda = 0`.
    FfProjectorChain,
    /// `H = base + lambda * driving`.
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Family,
    pub n_qubits: usize,
    #[serde(default)]
    pub lambda: f64,
    /// Required for the explicit family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<PauliSum>,
    /// Overrides the family's default driving term `dH/dlambda`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub driving: Option<PauliSum>,
}

impl ModelSpec {
    pub fn new(family: Family, n_qubits: usize, lambda: f64) -> Self {
        Self { family, n_qubits, lambda, base: None, driving: None }
    }

    pub fn tfim(n_qubits: usize, lambda: f64) -> Self {
        Self::new(Family::Tfim, n_qubits, lambda)
    }

    pub fn explicit(base: PauliSum, driving: PauliSum, lambda: f64) -> Self {
        Self {
            family: Family::Explicit,
            n_qubits: base.n_qubits,
            lambda,
            base: Some(base),
            driving: Some(driving),
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "n_qubits must lie in [1, {MAX_QUBITS}], got {}",
                self.n_qubits
            )));
        }
        if !self.lambda.is_finite() {
            return Err(Error::Config("lambda must be finite".into()));
        }
        if self.family == Family::Xxz && self.n_qubits < 2 {
            return Err(Error::Config("xxz needs at least 2 qubits".into()));
        }
        if self.family == Family::Explicit && (self.base.is_none() || self.driving.is_none()) {
            return Err(Error::Config("explicit family needs both `base` and `driving`".into()));
        }
        for p in [&self.base, &self.driving].into_iter().flatten() {
            if p.n_qubits != self.n_qubits {
                return Err(Error::Config(format!(
                    "Pauli sum on {} qubits in a {}-qubit model",
                    p.n_qubits, self.n_qubits
                )));
            }
            p.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Builds `(H(lambda), H_I)` for a model.
pub fn build_model(spec: &ModelSpec) -> Result<(PauliSum, PauliSum)> {
    spec.validate()?;
    let n = spec.n_qubits;
    let lam = spec.lambda;
    let (lambda_free, default_driving) = match spec.family {
        Family::Tfim => {
            let mut h0 = PauliSum::new(n);
            for i in 0..n.saturating_sub(1) {
                h0.push_sites(-1.0, &[(i, 'Z'), (i + 1, 'Z')]);
            }
            let mut hi = PauliSum::new(n);
            for i in 0..n {
                hi.push_sites(-1.0, &[(i, 'X')]);
            }
            (h0, hi)
        }
        Family::Xxz => {
            let mut h0 = PauliSum::new(n);
            let mut hi = PauliSum::new(n);
            for i in 0..n - 1 {
                h0.push_sites(1.0, &[(i, 'X'), (i + 1, 'X')]);
                h0.push_sites(1.0, &[(i, 'Y'), (i + 1, 'Y')]);
                hi.push_sites(1.0, &[(i, 'Z'), (i + 1, 'Z')]);
            }
            (h0, hi)
        }
        Family::FfProjectorChain => {
            let mut h0 = PauliSum::new(n);
            let mut hi = PauliSum::new(n);
            for i in 0..n {
                h0.push_sites(0.5, &[]);
                h0.push_sites(-0.5, &[(i, 'Z')]);
                hi.push_sites(1.0, &[(i, 'X')]);
            }
            (h0, hi)
        }
        Family::Explicit => {
            let base = spec.base.clone().expect("validated");
            let driving = spec.driving.clone().expect("validated");
            (base, driving)
        }
    };
    let h = lambda_free.plus(&default_driving.scaled(lam))?;
    let h_i = spec.driving.clone().unwrap_or(default_driving);
    Ok((h, h_i))
}

/// Dense `(H, H_I)` for a model.
pub fn build_dense(spec: &ModelSpec) -> Result<(DenseOperator, DenseOperator)> {
    let (h, hi) = build_model(spec)?;
    Ok((pauli_to_dense(&h)?, pauli_to_dense(&hi)?))
}

/// Spectrum and ground state, rejecting degenerate ground spaces.
pub fn ground_data(h: &DenseOperator) -> Result<(SpectralData, StateVector)> {
    let spec = hermitian_eig(h)?;
    if spec.degenerate {
        return Err(Error::DegenerateGround { gap: spec.gap });
    }
    let psi = spec.ground_state();
    Ok((spec, psi))
}

/// A frustration-free Hamiltonian `H_F = sum_j Pi_j` with a verified common kernel.
#[derive(Clone, Debug)]
pub struct FfModel {
    pub n_qubits: usize,
    pub projectors: Vec<DenseOperator>,
    pub r: usize,
    pub h_f: DenseOperator,
}

#[derive(Clone, Debug)]
pub enum FfVariant {
    /// `Pi_i = |1><1|` on site `i`, for every site.
    Chain,
    /// Two qubits, `|1><1| (x) I` and `I (x) |1><1|`.
    ProjectorPair,
    Projectors(Vec<DenseOperator>),
}

fn site_projector(n: usize, site: usize, bit: usize) -> DenseOperator {
    let dim = 1usize << n;
    let diag: Vec<f64> = (0..dim)
        .map(|b| if (b >> (n - 1 - site)) & 1 == bit { 1.0 } else { 0.0 })
        .collect();
    DenseOperator::from_real_diagonal(&diag).expect("power-of-two diagonal")
}

/// `|b><b|` on one site of an `n`-qubit register.
pub fn single_site_projector(n: usize, site: usize, bit: usize) -> Result<DenseOperator> {
    if n == 0 || n > MAX_QUBITS || site >= n || bit > 1 {
        return Err(Error::Parameter(format!("no site {site} with bit {bit} on {n} qubits")));
    }
    Ok(site_projector(n, site, bit))
}

pub fn build_ff_model(n_qubits: usize, variant: FfVariant) -> Result<FfModel> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Parameter(format!(
            "n_qubits must lie in [1, {MAX_QUBITS}], got {n_qubits}"
        )));
    }
    let projectors = match variant {
        FfVariant::Chain => (0..n_qubits).map(|i| site_projector(n_qubits, i, 1)).collect(),
        FfVariant::ProjectorPair => {
            if n_qubits != 2 {
                return Err(Error::Parameter("the projector pair lives on 2 qubits".into()));
            }
            vec![site_projector(2, 0, 1), site_projector(2, 1, 1)]
        }
        FfVariant::Projectors(ps) => ps,
    };
    if projectors.is_empty() {
        return Err(Error::Parameter("at least one projector is required".into()));
    }
    let dim = 1usize << n_qubits;
    let mut sum = DMatrix::from_element(dim, dim, ZERO);
    for p in &projectors {
        if p.dim() != dim {
            return Err(Error::Shape(format!("projector of dimension {} on {dim}-dim space", p.dim())));
        }
        let herm = p.hermiticity_defect();
        if herm > 1e-10 {
            return Err(Error::NotHermitian { asymmetry: herm });
        }
        let idem = crate::operator::max_abs(&(p.matrix() * p.matrix() - p.matrix()));
        if idem > 1e-10 {
            return Err(Error::Validation(format!("operator is not a projector (|P^2 - P| = {idem:.3e})")));
        }
        sum += p.matrix();
    }
    let e0 = eig_matrix(&sum)?.e0;
    if e0.abs() > 1e-9 {
        return Err(Error::NotFrustrationFree);
    }
    let r = projectors.len();
    Ok(FfModel {
        n_qubits,
        projectors,
        r,
        h_f: DenseOperator::new(sum)?,
    })
}

impl FfModel {
    /// `r` rounded up to a power of two.
    pub fn r_padded(&self) -> usize {
        self.r.next_power_of_two()
    }

    /// `sum_j <psi|Pi_j|psi>` terms, all zero for a ground state.
    pub fn projector_expectations(&self, psi: &StateVector) -> Vec<f64> {
        let v = psi.amplitudes();
        self.projectors
            .iter()
            .map(|p| (v.adjoint() * p.matrix() * v)[(0, 0)].re)
            .collect()
    }
}

/// `sum_i Z_i` on `n` qubits.
pub fn total_z(n: usize) -> PauliSum {
    let mut p = PauliSum::new(n);
    for i in 0..n {
        p.push_sites(1.0, &[(i, 'Z')]);
    }
    p
}

/// `sum_i X_i` on `n` qubits.
pub fn total_x(n: usize) -> PauliSum {
    let mut p = PauliSum::new(n);
    for i in 0..n {
        p.push_sites(1.0, &[(i, 'X')]);
    }
    p
}
