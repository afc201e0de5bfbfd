//! Fidelity susceptibility and static susceptibility: exact oracles and the
//! block-encoding + amplitude-estimation pipeline.
//!
//! The quantum estimate of `chi_F = ||(H - E0)^+ H_I |psi0>||^2` encodes
//! `G = (H - E0)^+ H_I` with normalization `alpha_Q`, estimates the
//! probability `p` of the all-zero ancilla outcome on `U_G |0>|psi0>`, and
//! returns `alpha_Q^2 p_hat`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::amplitude::{choose_k, AmplitudeEstimate, AmplitudeEstimator, MAX_K};
use crate::block_encoding::{
    encode_matrix, ff_select_prepare, ff_shifted_encoding, product, scale_cost, verify, BlockEncoding,
    OracleTag, QueryCost,
};
use crate::error::{Error, Result};
use crate::models::{build_dense, ground_data, pauli_to_dense, FfModel, ModelSpec, PauliSum};
use crate::operator::{operator_norm, pseudoinverse, CVector, DenseOperator, StateVector};
use crate::polynomial::{fit_inverse, FitOptions, DEFAULT_MAX_DEGREE};
use crate::qsvt::{
    ff_pseudoinverse_encoding_with, pseudoinverse_encoding_with, sqrt_pseudoinverse_encoding_with, Backend,
    QsvtOptions,
};

/// Default finite-difference step for the oracle triangle.
pub const FD_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    FidelitySusceptibility,
    StaticSusceptibility,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineOptions {
    pub backend: Backend,
    pub max_degree: usize,
    pub max_k: u64,
    /// Skip the finite-difference oracle (two extra diagonalizations).
    pub skip_finite_difference: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { backend: Backend::Spectral, max_degree: DEFAULT_MAX_DEGREE, max_k: MAX_K, skip_finite_difference: false }
    }
}

impl PipelineOptions {
    fn qsvt(&self) -> QsvtOptions {
        QsvtOptions { backend: self.backend, fit: FitOptions { max_degree: self.max_degree } }
    }
}

/// One pipeline run.
///
/// `chi_f_hat = prefactor * alpha_q^2 * p_hat`; the prefactor is 1 for the
/// fidelity susceptibility and 2 for the static susceptibility.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub quantity: Quantity,
    pub chi_f_hat: f64,
    pub eps_target: f64,
    pub alpha_q: f64,
    pub prefactor: f64,
    pub p_hat: f64,
    /// Exact success probability of the prepared state.
    pub p_exact: f64,
    /// Total base-oracle queries over all amplitude-estimation runs.
    pub queries: QueryCost,
    pub backend: Backend,
    pub ff_mode: bool,
    pub seed: u64,
    pub oracle_values: BTreeMap<String, f64>,
    /// Declared error of the encoding of `G`.
    pub eps1: f64,
    /// Amplitude-estimation accuracy target.
    pub eps2: f64,
    /// Measured `||G - alpha_Q block||`.
    pub g_error: f64,
    pub k: u64,
    pub n_medians: usize,
    pub poly_degree: usize,
    pub grover_applications: u64,
    /// Inversion-oracle queries per application of `G`.
    pub inversion_queries: u64,
    /// The same count for the general pseudoinverse on the same model (FF mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub general_inversion_queries: Option<u64>,
}

impl EstimationReport {
    /// Sum of all base-oracle queries.
    pub fn total_queries(&self) -> u64 {
        self.queries.values().sum()
    }

    pub fn oracle(&self, key: &str) -> Option<f64> {
        self.oracle_values.get(key).copied()
    }
}

/// A pipeline with all encodings built, ready to be sampled with many seeds.
#[derive(Clone, Debug)]
pub struct PreparedEstimate {
    quantity: Quantity,
    estimator: AmplitudeEstimator,
    encoding: BlockEncoding,
    ground: StateVector,
    per_u_cost: QueryCost,
    eps: f64,
    eps1: f64,
    eps2: f64,
    alpha_q: f64,
    prefactor: f64,
    k: u64,
    g_error: f64,
    poly_degree: usize,
    inversion_queries: u64,
    general_inversion_queries: Option<u64>,
    backend: Backend,
    ff_mode: bool,
    oracle_values: BTreeMap<String, f64>,
}

impl PreparedEstimate {
    fn new_run(&self, est: AmplitudeEstimate) -> EstimationReport {
        let runs = est.n_medians as u64;
        EstimationReport {
            quantity: self.quantity,
            chi_f_hat: self.prefactor * self.alpha_q * self.alpha_q * est.p_hat,
            eps_target: self.eps,
            alpha_q: self.alpha_q,
            prefactor: self.prefactor,
            p_hat: est.p_hat,
            p_exact: self.estimator.probability(),
            queries: scale_cost(&self.per_u_cost, est.u_queries * runs),
            backend: self.backend,
            ff_mode: self.ff_mode,
            seed: est.seed,
            oracle_values: self.oracle_values.clone(),
            eps1: self.eps1,
            eps2: self.eps2,
            g_error: self.g_error,
            k: est.k_queries,
            n_medians: est.n_medians,
            poly_degree: self.poly_degree,
            grover_applications: est.grover_applications * runs,
            inversion_queries: self.inversion_queries,
            general_inversion_queries: self.general_inversion_queries,
        }
    }

    /// Single amplitude-estimation run.
    pub fn run(&self, seed: u64) -> Result<EstimationReport> {
        Ok(self.new_run(self.estimator.estimate(self.k, seed)?))
    }

    /// Median of `n_runs` amplitude-estimation runs.
    pub fn run_median(&self, n_runs: usize, seed: u64) -> Result<EstimationReport> {
        Ok(self.new_run(self.estimator.median(self.k, n_runs, seed)?))
    }

    /// `n_runs == 1` is a raw run.
    pub fn run_with(&self, n_runs: usize, seed: u64) -> Result<EstimationReport> {
        if n_runs == 1 {
            self.run(seed)
        } else {
            self.run_median(n_runs, seed)
        }
    }

    /// `prefactor * alpha_Q^2 * p`, the estimate an exact readout would give.
    pub fn noiseless_value(&self) -> f64 {
        self.prefactor * self.alpha_q * self.alpha_q * self.estimator.probability()
    }

    pub fn encoding(&self) -> &BlockEncoding {
        &self.encoding
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn alpha_q(&self) -> f64 {
        self.alpha_q
    }

    /// `u = U_G (I (x) U_psi)` on `[anc][sys]`.
    pub fn state_preparation(&self) -> Result<DenseOperator> {
        let da = 1usize << self.encoding.ancillas;
        let prep = DenseOperator::identity(da)?.kron(&crate::operator::state_prep_unitary(&self.ground));
        self.encoding.unitary().matmul(&prep)
    }

    /// Flag projector on the all-zero ancilla outcome.
    pub fn flag(&self) -> Result<DenseOperator> {
        crate::amplitude::ancilla_flag(self.encoding.ancillas, self.encoding.system_qubits)
    }
}

// ---------------------------------------------------------------------------
// Exact oracles

/// `sum_{j > 0} |<j|H_I|0>|^2 / (E_j - E_0)^2`.
pub fn chi_f_exact_sum(h: &DenseOperator, h_i: &DenseOperator) -> Result<f64> {
    lehmann(h, h_i, 2)
}

/// `||(H - E_0)^+ H_I |psi_0>||^2`.
pub fn chi_f_exact_resolvent(h: &DenseOperator, h_i: &DenseOperator) -> Result<f64> {
    check_pair(h, h_i)?;
    let (spec, psi) = ground_data(h)?;
    let r = pseudoinverse(&h.shifted(spec.e0), spec.gap / 2.0)?;
    let v = r.apply(&h_i.apply(psi.amplitudes())?)?;
    Ok(v.norm_squared())
}

/// `2 sum_{j > 0} |<j|O|0>|^2 / (E_j - E_0)`.
pub fn static_susceptibility_exact(h: &DenseOperator, o: &DenseOperator) -> Result<f64> {
    Ok(2.0 * lehmann(h, o, 1)?)
}

fn check_pair(h: &DenseOperator, h_i: &DenseOperator) -> Result<()> {
    if h.dim() != h_i.dim() {
        return Err(Error::Shape(format!("H is {}-dim but the perturbation is {}-dim", h.dim(), h_i.dim())));
    }
    let defect = h_i.hermiticity_defect();
    if defect > crate::operator::HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry: defect });
    }
    Ok(())
}

fn lehmann(h: &DenseOperator, o: &DenseOperator, power: i32) -> Result<f64> {
    check_pair(h, o)?;
    let (spec, psi) = ground_data(h)?;
    let v = o.apply(psi.amplitudes())?;
    let mut total = 0.0;
    for j in 1..spec.eigenvalues.len() {
        let overlap = spec.eigenvector(j).dotc(&v).norm_sqr();
        total += overlap / (spec.eigenvalues[j] - spec.e0).powi(power);
    }
    Ok(total)
}

/// `-2 ln |<psi_0(-s)|psi_0(+s)>| / (2 s)^2` along `H(s) = H + s H_I`.
pub fn chi_f_finite_difference_dense(h: &DenseOperator, h_i: &DenseOperator, step: f64) -> Result<f64> {
    check_pair(h, h_i)?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Parameter(format!("step must be positive, got {step}")));
    }
    let plus = h.add(&h_i.scale(step))?;
    let minus = h.sub(&h_i.scale(step))?;
    let (_, a) = ground_data(&minus)?;
    let (_, b) = ground_data(&plus)?;
    let mut f = a.amplitudes().dotc(b.amplitudes()).norm().min(1.0);
    // Overlaps within a few ulps of one are rounding of identical states.
    if 1.0 - f <= 4.0 * f64::EPSILON {
        f = 1.0;
    }
    Ok(-2.0 * f.ln() / (2.0 * step).powi(2))
}

/// Central finite difference of the ground-state fidelity at `lambda +- step`,
/// moving along the model's driving term.
pub fn chi_f_finite_difference(spec: &ModelSpec, step: f64) -> Result<f64> {
    let (h, h_i) = build_dense(spec)?;
    ground_data(&h)?;
    chi_f_finite_difference_dense(&h, &h_i, step)
}

/// `d<O>/ds` at `s = 0` for `H(s) = H - s O`, by central differences.
pub fn static_susceptibility_field_derivative(h: &DenseOperator, o: &DenseOperator, step: f64) -> Result<f64> {
    check_pair(h, o)?;
    let expect = |s: f64| -> Result<f64> {
        let hs = h.sub(&o.scale(s))?;
        let (_, psi) = ground_data(&hs)?;
        let v = psi.amplitudes();
        Ok(v.dotc(&o.apply(v)?).re)
    };
    Ok((expect(step)? - expect(-step)?) / (2.0 * step))
}

/// Exact oracle values for a pair `(H, H_I)`.
pub fn oracle_values(h: &DenseOperator, h_i: &DenseOperator, with_fd: bool) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    out.insert("sum_over_states".to_string(), chi_f_exact_sum(h, h_i)?);
    out.insert("resolvent".to_string(), chi_f_exact_resolvent(h, h_i)?);
    if with_fd {
        out.insert("finite_difference".to_string(), chi_f_finite_difference_dense(h, h_i, FD_STEP)?);
    }
    Ok(out)
}

/// Quantum Fisher information `4 chi_F` for the driving `dH/dlambda`.
pub fn qfi_exact(spec: &ModelSpec) -> Result<f64> {
    let (h, h_i) = build_dense(&natural_driving(spec))?;
    Ok(4.0 * chi_f_exact_sum(&h, &h_i)?)
}

/// Pipeline estimate of the quantum Fisher information `4 chi_F`.
pub fn qfi(spec: &ModelSpec, eps: f64, seed: u64) -> Result<f64> {
    Ok(4.0 * estimate_chi_f(&natural_driving(spec), eps, seed)?.chi_f_hat)
}

fn natural_driving(spec: &ModelSpec) -> ModelSpec {
    match spec.family {
        crate::models::Family::Explicit => spec.clone(),
        _ => ModelSpec { driving: None, ..spec.clone() },
    }
}

// ---------------------------------------------------------------------------
// Encodings

fn hermitian_encoding(a: &DenseOperator, tag: OracleTag) -> Result<BlockEncoding> {
    let norm = operator_norm(a);
    let alpha = if norm > 0.0 { norm } else { 1.0 };
    Ok(encode_matrix(a, alpha)?.with_tag(tag))
}

/// `(alpha_Q, m_1 + m_2 + 1, eps)` encoding of `G = (H - E0)^+ H_I` with
/// `alpha_Q = 4 alpha_I / (3 gap)`.
pub fn build_g_encoding(u_h: &BlockEncoding, u_i: &BlockEncoding, gap: f64, eps: f64) -> Result<BlockEncoding> {
    Ok(build_g_encoding_with(u_h, u_i, gap, eps, &PipelineOptions::default())?.0)
}

/// As [`build_g_encoding`], also returning the pseudoinverse degree.
pub fn build_g_encoding_with(
    u_h: &BlockEncoding,
    u_i: &BlockEncoding,
    gap: f64,
    eps: f64,
    opts: &PipelineOptions,
) -> Result<(BlockEncoding, usize)> {
    if u_h.system_qubits != u_i.system_qubits {
        return Err(Error::Shape(format!(
            "H acts on {} qubits but H_I on {}",
            u_h.system_qubits, u_i.system_qubits
        )));
    }
    let pinv = pseudoinverse_encoding_with(u_h, gap, eps / u_i.alpha, &opts.qsvt())?;
    Ok((product(&pinv.encoding, u_i)?, pinv.poly.degree()))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    Ok(())
}

struct Staged {
    quantity: Quantity,
    g: BlockEncoding,
    target: DenseOperator,
    ground: StateVector,
    eps: f64,
    eps1: f64,
    eps2: f64,
    prefactor: f64,
    poly_degree: usize,
    inversion_queries: u64,
    general_inversion_queries: Option<u64>,
    ff_mode: bool,
    oracle_values: BTreeMap<String, f64>,
}

fn stage(s: Staged, opts: &PipelineOptions) -> Result<PreparedEstimate> {
    let k = choose_k(s.eps2, opts.max_k)?;
    let ds = s.g.system_dim();
    let u = s.g.unitary().matrix();
    let state: CVector = u.columns(0, ds) * s.ground.amplitudes();
    let estimator = AmplitudeEstimator::from_prefix(&state, ds)?;
    let g_error = verify(&s.g, &s.target)?;
    let mut per_u_cost = s.g.cost.clone();
    *per_u_cost.entry(OracleTag::UPsi).or_insert(0) += 1;
    Ok(PreparedEstimate {
        quantity: s.quantity,
        estimator,
        alpha_q: s.g.alpha,
        encoding: s.g,
        ground: s.ground,
        per_u_cost,
        eps: s.eps,
        eps1: s.eps1,
        eps2: s.eps2,
        prefactor: s.prefactor,
        k,
        g_error,
        poly_degree: s.poly_degree,
        inversion_queries: s.inversion_queries,
        general_inversion_queries: s.general_inversion_queries,
        backend: opts.backend,
        ff_mode: s.ff_mode,
        oracle_values: s.oracle_values,
    })
}

/// Builds the general pipeline for `chi_F` of `(H, H_I)`.
pub fn prepare_chi_f_dense(
    h: &DenseOperator,
    h_i: &DenseOperator,
    eps: f64,
    opts: &PipelineOptions,
) -> Result<PreparedEstimate> {
    check_eps(eps)?;
    check_pair(h, h_i)?;
    let (spec, ground) = ground_data(h)?;
    let shifted = h.shifted(spec.e0);
    let u_h = hermitian_encoding(&shifted, OracleTag::UH)?;
    let u_i = hermitian_encoding(h_i, OracleTag::UI)?;
    let alpha_q = 4.0 * u_i.alpha / (3.0 * spec.gap);
    let eps1 = eps / (4.0 * alpha_q);
    let eps2 = eps / (2.0 * alpha_q * alpha_q);
    let (g, degree) = build_g_encoding_with(&u_h, &u_i, spec.gap, eps1, opts)?;
    let target = pseudoinverse(&shifted, spec.gap / 2.0)?.matmul(h_i)?;
    let per_g = g.cost.get(&OracleTag::UH).copied().unwrap_or(0);
    stage(
        Staged {
            quantity: Quantity::FidelitySusceptibility,
            g,
            target,
            ground,
            eps,
            eps1,
            eps2,
            prefactor: 1.0,
            poly_degree: degree,
            inversion_queries: per_g,
            general_inversion_queries: None,
            ff_mode: false,
            oracle_values: oracle_values(h, h_i, !opts.skip_finite_difference)?,
        },
        opts,
    )
}

/// Builds the general pipeline for a model.
pub fn prepare_chi_f(spec: &ModelSpec, eps: f64, opts: &PipelineOptions) -> Result<PreparedEstimate> {
    let (h, h_i) = build_dense(spec)?;
    prepare_chi_f_dense(&h, &h_i, eps, opts)
}

/// Single-run estimate of `chi_F` to additive error `eps` with probability at least `8 / pi^2`.
pub fn estimate_chi_f(spec: &ModelSpec, eps: f64, seed: u64) -> Result<EstimationReport> {
    prepare_chi_f(spec, eps, &PipelineOptions::default())?.run(seed)
}

/// Builds the frustration-free pipeline: spectral amplification, the shifted
/// reflection encoding and the FF pseudoinverse in place of the general inverse.
pub fn prepare_chi_f_ff(
    model: &FfModel,
    driving: &PauliSum,
    eps: f64,
    opts: &PipelineOptions,
) -> Result<PreparedEstimate> {
    check_eps(eps)?;
    if driving.n_qubits != model.n_qubits {
        return Err(Error::Shape(format!(
            "driving on {} qubits for a {}-qubit model",
            driving.n_qubits, model.n_qubits
        )));
    }
    let h = &model.h_f;
    let h_i = pauli_to_dense(driving)?;
    let (spec, ground) = ground_data(h)?;
    if spec.e0.abs() > 1e-10 {
        return Err(Error::NotFrustrationFree);
    }
    let gap = spec.gap;
    let r = model.r_padded();
    let u_i = hermitian_encoding(&h_i, OracleTag::UI)?;
    let k_norm = crate::polynomial::ff_normalization(gap);
    let alpha_q = k_norm * u_i.alpha;
    let eps1 = eps / (4.0 * alpha_q);
    let eps2 = eps / (2.0 * alpha_q * alpha_q);

    let u_sa = ff_select_prepare(model)?;
    let u_f = ff_shifted_encoding(&u_sa)?;
    let pinv = ff_pseudoinverse_encoding_with(&u_f, r, gap, eps1 / u_i.alpha, &opts.qsvt())?;
    let g = product(&pinv.encoding, &u_i)?;
    let degree = pinv.poly.degree();
    let per_g = g.cost.get(&OracleTag::UF).copied().unwrap_or(0);

    // General inversion on the same H_F at the same eps.
    let alpha_h = operator_norm(h);
    let alpha_gen = 4.0 * u_i.alpha / (3.0 * gap);
    let eps_gen = eps / (4.0 * alpha_gen) / u_i.alpha;
    let general = fit_inverse(
        (gap / alpha_h).min(1.0),
        eps_gen * 3.0 * gap / 4.0,
        &FitOptions { max_degree: opts.max_degree },
    )?;

    let target = pseudoinverse(h, gap / 2.0)?.matmul(&h_i)?;
    stage(
        Staged {
            quantity: Quantity::FidelitySusceptibility,
            g,
            target,
            ground,
            eps,
            eps1,
            eps2,
            prefactor: 1.0,
            poly_degree: degree,
            inversion_queries: per_g,
            general_inversion_queries: Some(general.degree() as u64),
            ff_mode: true,
            oracle_values: oracle_values(h, &h_i, !opts.skip_finite_difference)?,
        },
        opts,
    )
}

/// Single-run frustration-free estimate of `chi_F`.
pub fn estimate_chi_f_ff(model: &FfModel, driving: &PauliSum, eps: f64, seed: u64) -> Result<EstimationReport> {
    prepare_chi_f_ff(model, driving, eps, &PipelineOptions::default())?.run(seed)
}

/// Builds the static-susceptibility pipeline `chi = 2 ||R^(1/2) O |psi0>||^2`
/// with `R^(1/2)` the square-root pseudoinverse of `H - E0`.
pub fn prepare_static_dense(
    h: &DenseOperator,
    o: &DenseOperator,
    eps: f64,
    opts: &PipelineOptions,
) -> Result<PreparedEstimate> {
    check_eps(eps)?;
    check_pair(h, o)?;
    let (spec, ground) = ground_data(h)?;
    let shifted = h.shifted(spec.e0);
    let u_h = hermitian_encoding(&shifted, OracleTag::UH)?;
    let u_o = hermitian_encoding(o, OracleTag::UI)?;
    let alpha = 4.0 * u_o.alpha / (3.0 * spec.gap.sqrt());
    let eps1 = eps / (8.0 * alpha);
    let eps2 = eps / (4.0 * alpha * alpha);
    let root = sqrt_pseudoinverse_encoding_with(&u_h, spec.gap, eps1 / u_o.alpha, &opts.qsvt())?;
    let g = product(&root.encoding, &u_o)?;
    let degree = root.poly.degree();
    let per_g = g.cost.get(&OracleTag::UH).copied().unwrap_or(0);
    let target = crate::operator::DenseOperator::new(
        spec.reconstruct_with(|e| if e - spec.e0 > spec.gap / 2.0 { (e - spec.e0).sqrt().recip() } else { 0.0 }),
    )?
    .matmul(o)?;
    let mut oracle = BTreeMap::new();
    oracle.insert("lehmann".to_string(), static_susceptibility_exact(h, o)?);
    stage(
        Staged {
            quantity: Quantity::StaticSusceptibility,
            g,
            target,
            ground,
            eps,
            eps1,
            eps2,
            prefactor: 2.0,
            poly_degree: degree,
            inversion_queries: per_g,
            general_inversion_queries: None,
            ff_mode: false,
            oracle_values: oracle,
        },
        opts,
    )
}

/// Single-run pipeline estimate of the static susceptibility of `O` at the model's ground state.
pub fn static_susceptibility_estimate(
    spec: &ModelSpec,
    o: &DenseOperator,
    eps: f64,
    seed: u64,
) -> Result<EstimationReport> {
    let (h, _) = build_dense(spec)?;
    prepare_static_dense(&h, o, eps, &PipelineOptions::default())?.run(seed)
}
