//! Canonical amplitude estimation with a simulated phase-estimation readout.
//!
//! For `u|0> = sin(theta)|good> + cos(theta)|bad>` the Grover operator
//! `Q = u S_0 u^dagger S_flag` rotates by `2 theta` in the two-dimensional
//! invariant subspace. Phase estimation with a `log2 K` qubit register then
//! returns `y` with the Fejer-kernel law centred on `K theta / pi`, and the
//! estimate is `sin^2(pi y / K)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{max_abs, CVector, DenseOperator, C64, HERMITIAN_TOL};

/// Largest readout register accepted by [`choose_k`].
pub const MAX_K: u64 = 1 << 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEstimate {
    pub p_hat: f64,
    pub k_queries: u64,
    /// `2 pi sqrt(p_hat (1 - p_hat)) / K + pi^2 / K^2`.
    pub bound: f64,
    pub n_medians: usize,
    pub seed: u64,
    /// Controlled applications of `Q` per run.
    pub grover_applications: u64,
    /// Queries to `u` and `u^dagger` per run: `2 (K - 1) + 1`.
    pub u_queries: u64,
}

impl AmplitudeEstimate {
    fn new(p_hat: f64, k: u64, n_medians: usize, seed: u64) -> Self {
        Self {
            p_hat,
            k_queries: k,
            bound: qae_bound(p_hat, k),
            n_medians,
            seed,
            grover_applications: k - 1,
            u_queries: 2 * (k - 1) + 1,
        }
    }

    /// Total Grover applications over all median runs.
    pub fn total_grover_applications(&self) -> u64 {
        self.grover_applications * self.n_medians as u64
    }

    /// Total `u` queries over all median runs.
    pub fn total_u_queries(&self) -> u64 {
        self.u_queries * self.n_medians as u64
    }
}

/// `2 pi sqrt(p (1 - p)) / K + pi^2 / K^2`.
pub fn qae_bound(p: f64, k: u64) -> f64 {
    let k = k as f64;
    2.0 * PI * (p * (1.0 - p)).max(0.0).sqrt() / k + PI * PI / (k * k)
}

/// Smallest power of two `K >= 2` whose bound at `p = 1/2` is at most `eps`.
pub fn choose_k(eps: f64, max_k: u64) -> Result<u64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Parameter(format!("amplitude accuracy must be positive, got {eps}")));
    }
    let mut k = 2u64;
    while qae_bound(0.5, k) > eps {
        if k >= max_k {
            return Err(Error::ResourceCap(format!(
                "amplitude accuracy {eps:.3e} needs K above the cap {max_k}"
            )));
        }
        k *= 2;
    }
    Ok(k)
}

fn check_projector(flag: &DenseOperator) -> Result<()> {
    let defect = flag.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::Validation(format!("flag is not Hermitian (defect {defect:.3e})")));
    }
    let p = flag.matrix();
    let idem = max_abs(&(crate::operator::gemm(p, p) - p));
    if idem > 1e-10 {
        return Err(Error::Validation(format!("flag is not a projector (|P^2 - P| = {idem:.3e})")));
    }
    Ok(())
}

/// `|0^m><0^m| (x) I` on `m` ancillas above `system_qubits`.
pub fn ancilla_flag(ancillas: usize, system_qubits: usize) -> Result<DenseOperator> {
    let ds = 1usize << system_qubits;
    let dim = ds << ancillas;
    let diag: Vec<f64> = (0..dim).map(|i| if i < ds { 1.0 } else { 0.0 }).collect();
    DenseOperator::from_real_diagonal(&diag)
}

/// `Q = u (2|0><0| - I) u^dagger (I - 2 P_flag)`.
pub fn grover_operator(u: &DenseOperator, flag: &DenseOperator) -> Result<DenseOperator> {
    if u.dim() != flag.dim() {
        return Err(Error::Shape(format!("u is {0}x{0} but the flag is {1}x{1}", u.dim(), flag.dim())));
    }
    if !u.is_unitary(1e-10) {
        return Err(Error::Validation("u is not unitary".into()));
    }
    check_projector(flag)?;
    let d = u.dim();
    let um = u.matrix();
    // u S_0 u^dagger = 2 u|0><0|u^dagger - I
    let col = um.column(0).into_owned();
    let mut a = &col * col.adjoint() * C64::new(2.0, 0.0);
    for i in 0..d {
        a[(i, i)] -= C64::new(1.0, 0.0);
    }
    let mut s_flag = flag.matrix() * C64::new(-2.0, 0.0);
    for i in 0..d {
        s_flag[(i, i)] += C64::new(1.0, 0.0);
    }
    let q = DenseOperator::from_matrix_unchecked(crate::operator::gemm(&a, &s_flag));
    let res = q.unitarity_residual();
    if res > 1e-10 {
        return Err(Error::Validation(format!("Grover operator not unitary (residual {res:.3e})")));
    }
    Ok(q)
}

/// Amplitude estimation for a fixed success probability `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeEstimator {
    p: f64,
    theta: f64,
}

impl AmplitudeEstimator {
    /// From a state preparation `u` and a flag projector.
    pub fn new(u: &DenseOperator, flag: &DenseOperator) -> Result<Self> {
        if u.dim() != flag.dim() {
            return Err(Error::Shape(format!("u is {0}x{0} but the flag is {1}x{1}", u.dim(), flag.dim())));
        }
        if !u.is_unitary(1e-10) {
            return Err(Error::Validation("u is not unitary".into()));
        }
        Self::from_state(&u.matrix().column(0).into_owned(), flag)
    }

    /// From the prepared state `u|0>` directly.
    pub fn from_state(psi: &CVector, flag: &DenseOperator) -> Result<Self> {
        if psi.len() != flag.dim() {
            return Err(Error::Shape(format!("state of length {} with a {}-dim flag", psi.len(), flag.dim())));
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        check_projector(flag)?;
        let p = (psi.adjoint() * flag.matrix() * psi)[(0, 0)].re;
        Self::from_probability(p.clamp(0.0, 1.0))
    }

    /// From `p = ||P_flag u|0>||^2` restricted to the first `flagged` amplitudes.
    pub fn from_prefix(psi: &CVector, flagged: usize) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        if flagged > psi.len() {
            return Err(Error::Shape(format!("{flagged} flagged amplitudes in a state of length {}", psi.len())));
        }
        let p: f64 = psi.rows(0, flagged).norm_squared();
        Self::from_probability(p.clamp(0.0, 1.0))
    }

    pub fn from_probability(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("probability {p} outside [0, 1]")));
        }
        Ok(Self { p, theta: p.sqrt().asin() })
    }

    pub fn probability(&self) -> f64 {
        self.p
    }

    /// Grover rotation angle `theta` with `sin^2 theta = p`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Probability of reading `y` from a `K`-point register.
    pub fn outcome_probability(&self, k: u64, y: u64) -> f64 {
        let kf = k as f64;
        let centre = kf * self.theta / PI;
        let mut d = centre - y as f64;
        d -= kf * (d / kf).round();
        fejer(d, kf)
    }

    fn sample(&self, k: u64, rng: &mut ChaCha8Rng) -> f64 {
        let kf = k as f64;
        let centre = kf * self.theta / PI;
        let y0 = centre.round() as i64;
        let r: f64 = rng.random();
        let mut cum = 0.0;
        let mut chosen = y0;
        // Offsets 0, 1, -1, 2, -2, ..., K/2 visit each residue once.
        for i in 0..k as i64 {
            let off = if i % 2 == 1 { (i + 1) / 2 } else { -(i / 2) };
            let y = y0 + off;
            cum += fejer(centre - y as f64, kf);
            if cum > r {
                chosen = y;
                break;
            }
        }
        let s = (PI * chosen.rem_euclid(k as i64) as f64 / kf).sin();
        s * s
    }

    /// One estimate from a `K`-point readout, using stream 0 of `seed`.
    pub fn estimate(&self, k: u64, seed: u64) -> Result<AmplitudeEstimate> {
        check_k(k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        Ok(AmplitudeEstimate::new(self.sample(k, &mut rng), k, 1, seed))
    }

    /// Median of `n_runs` estimates on streams `0..n_runs` of `seed`.
    ///
    /// Each run lands within the bound with probability at least `8 / pi^2`,
    /// so the median fails with probability at most
    /// `exp(-2 n_runs (8 / pi^2 - 1/2)^2)` by Hoeffding.
    pub fn median(&self, k: u64, n_runs: usize, seed: u64) -> Result<AmplitudeEstimate> {
        check_k(k)?;
        if n_runs == 0 || n_runs % 2 == 0 {
            return Err(Error::Parameter(format!("n_runs must be odd, got {n_runs}")));
        }
        let mut samples: Vec<f64> = (0..n_runs)
            .map(|run| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(run as u64);
                self.sample(k, &mut rng)
            })
            .collect();
        samples.sort_by(f64::total_cmp);
        Ok(AmplitudeEstimate::new(samples[n_runs / 2], k, n_runs, seed))
    }
}

fn fejer(d: f64, k: f64) -> f64 {
    if d.abs() < 1e-9 {
        return 1.0;
    }
    let num = (PI * d).sin();
    let den = k * (PI * d / k).sin();
    (num * num) / (den * den)
}

fn check_k(k: u64) -> Result<()> {
    if k < 2 || !k.is_power_of_two() {
        return Err(Error::Parameter(format!("K must be a power of two >= 2, got {k}")));
    }
    Ok(())
}

/// Single-run amplitude estimate of `||P_flag u|0>||^2`.
pub fn amplitude_estimate(u: &DenseOperator, flag: &DenseOperator, k: u64, seed: u64) -> Result<AmplitudeEstimate> {
    check_k(k)?;
    AmplitudeEstimator::new(u, flag)?.estimate(k, seed)
}

/// Median-amplified amplitude estimate.
pub fn median_amplify(
    u: &DenseOperator,
    flag: &DenseOperator,
    k: u64,
    n_runs: usize,
    seed: u64,
) -> Result<AmplitudeEstimate> {
    check_k(k)?;
    AmplitudeEstimator::new(u, flag)?.median(k, n_runs, seed)
}
