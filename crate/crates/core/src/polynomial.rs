//! Chebyshev-series approximants to `1/x`-type targets and their evaluation
//! on scalars and Hermitian matrices.
//!
//! Approximants are built by interpolating a smoothed target at Chebyshev
//! nodes. The smoothing is a window `u * phi(u^m)^((1 + a) / m)` in the
//! scaled variable `u = y / sigma`, with `phi(v) = (1 - e^-v) / v`; for large
//! `u` it behaves like `u^-a`, so it matches `y^-a` away from the origin and
//! vanishes linearly at `y = 0`. The smallest degree passing a dense-grid
//! check is found by doubling and bisection, minimized over `m`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{eig_matrix, CMatrix, DenseOperator, C64};

pub const DEFAULT_MAX_DEGREE: usize = 1 << 16;
/// Uniform grid used for the final acceptance check of every fit.
pub const CHECK_GRID: usize = 10_000;
/// Allowed overshoot of `|p|` above 1 on `[-1, 1]`.
pub const BOUND_SLACK: f64 = 1e-9;
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
    None,
}

/// The function a polynomial approximates, with its validity domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApproxTarget {
    /// `(3/4) delta / x` on `delta <= |x| <= 1`.
    ScaledInverse { delta: f64 },
    /// `(2 / (r K)) / (1 - x)` on `[-1, 1 - 2 gap / r]`, and 0 at `x = 1`.
    FfInverse { r: f64, gap: f64, k_norm: f64 },
    /// `(3/4) sqrt(delta / |x|)` with the sign of `x`, on `delta <= |x| <= 1`.
    SqrtInverse { delta: f64 },
}

impl ApproxTarget {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            ApproxTarget::ScaledInverse { delta } => 0.75 * delta / x,
            ApproxTarget::FfInverse { r, k_norm, .. } => {
                if x >= 1.0 {
                    0.0
                } else {
                    2.0 / (r * k_norm) / (1.0 - x)
                }
            }
            ApproxTarget::SqrtInverse { delta } => 0.75 * (delta / x.abs()).sqrt() * x.signum(),
        }
    }

    pub fn in_domain(&self, x: f64) -> bool {
        match *self {
            ApproxTarget::ScaledInverse { delta } | ApproxTarget::SqrtInverse { delta } => {
                x.abs() >= delta && x.abs() <= 1.0
            }
            ApproxTarget::FfInverse { r, gap, .. } => x >= -1.0 && x <= 1.0 - 2.0 * gap / r,
        }
    }

    /// Closed intervals making up the domain.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        match *self {
            ApproxTarget::ScaledInverse { delta } | ApproxTarget::SqrtInverse { delta } => {
                vec![(-1.0, -delta), (delta, 1.0)]
            }
            ApproxTarget::FfInverse { r, gap, .. } => vec![(-1.0, 1.0 - 2.0 * gap / r)],
        }
    }

    /// Largest `|target|` on the domain.
    fn peak(&self) -> f64 {
        match *self {
            ApproxTarget::ScaledInverse { .. } | ApproxTarget::SqrtInverse { .. } => 0.75,
            ApproxTarget::FfInverse { r, gap, k_norm } => (2.0 / (r * k_norm)) / (2.0 * gap / r),
        }
    }
}

/// `c_0 T_0 + c_1 T_1 + ... + c_d T_d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct ChebyshevPolynomial {
    coeffs: Vec<f64>,
    parity: Parity,
    target: Option<ApproxTarget>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyRepr {
    coeffs: Vec<f64>,
    degree: usize,
    parity: Parity,
    #[serde(default)]
    target: Option<ApproxTarget>,
}

impl From<ChebyshevPolynomial> for PolyRepr {
    fn from(p: ChebyshevPolynomial) -> Self {
        PolyRepr { degree: p.degree(), coeffs: p.coeffs, parity: p.parity, target: p.target }
    }
}

impl TryFrom<PolyRepr> for ChebyshevPolynomial {
    type Error = Error;
    fn try_from(r: PolyRepr) -> Result<Self> {
        if r.coeffs.len() != r.degree + 1 {
            return Err(Error::Validation(format!(
                "degree {} with {} coefficients",
                r.degree,
                r.coeffs.len()
            )));
        }
        let mut p = ChebyshevPolynomial::new(r.coeffs, r.parity)?;
        p.target = r.target;
        Ok(p)
    }
}

impl ChebyshevPolynomial {
    pub fn new(coeffs: Vec<f64>, parity: Parity) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Validation("a polynomial needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        let bad = match parity {
            Parity::Odd => coeffs.iter().step_by(2).any(|&c| c != 0.0),
            Parity::Even => coeffs.iter().skip(1).step_by(2).any(|&c| c != 0.0),
            Parity::None => false,
        };
        if bad {
            return Err(Error::Validation(format!("coefficients violate {parity:?} parity")));
        }
        Ok(Self { coeffs, parity, target: None })
    }

    /// The single Chebyshev polynomial `T_k`.
    pub fn chebyshev_t(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        let parity = if k % 2 == 0 { Parity::Even } else { Parity::Odd };
        Self { coeffs, parity, target: None }
    }

    pub fn with_target(mut self, target: ApproxTarget) -> Self {
        self.target = Some(target);
        self
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn target(&self) -> Option<&ApproxTarget> {
        self.target.as_ref()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        eval_scalar(self, x)
    }

    /// Max of `|p|` over a dense Chebyshev grid, a uniform grid and both endpoints.
    pub fn max_abs(&self) -> f64 {
        let m = grid_size(self.degree());
        let (_, v) = eval_cheb_grid(&self.coeffs, m);
        let best = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        let uniform = (0..CHECK_GRID)
            .into_par_iter()
            .map(|i| clenshaw(&self.coeffs, -1.0 + 2.0 * i as f64 / (CHECK_GRID - 1) as f64).abs())
            .reduce(|| 0.0, f64::max);
        best.max(uniform)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("polynomials always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Validation(e.to_string()))
    }
}

/// Grid checks of a fitted polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyCheck {
    pub degree: usize,
    pub parity: Parity,
    pub max_abs: f64,
    /// `max |p(x) -/+ p(-x)|` on a uniform grid; zero for polynomials without parity.
    pub parity_defect: f64,
    pub sup_error: Option<f64>,
    pub bounded: bool,
}

/// Bound, parity and (when a target is attached) accuracy on `CHECK_GRID`-point grids.
pub fn check_polynomial(p: &ChebyshevPolynomial) -> Result<PolyCheck> {
    let sign = match p.parity {
        Parity::Odd => -1.0,
        Parity::Even => 1.0,
        Parity::None => 0.0,
    };
    let parity_defect = if sign == 0.0 {
        0.0
    } else {
        (0..CHECK_GRID)
            .into_par_iter()
            .map(|i| {
                let x = i as f64 / (CHECK_GRID - 1) as f64;
                (clenshaw(&p.coeffs, -x) - sign * clenshaw(&p.coeffs, x)).abs()
            })
            .reduce(|| 0.0, f64::max)
    };
    let max_abs = p.max_abs();
    let sup_error = match &p.target {
        Some(t) => Some(sup_error(p, t, CHECK_GRID)?),
        None => None,
    };
    Ok(PolyCheck {
        degree: p.degree(),
        parity: p.parity,
        max_abs,
        parity_defect,
        sup_error,
        bounded: max_abs <= 1.0 + BOUND_SLACK,
    })
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c[1..].iter().rev() {
        let b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + x * b1 - b2
}

/// Clenshaw evaluation at `x in [-1, 1]`.
pub fn eval_scalar(p: &ChebyshevPolynomial, x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + DOMAIN_SLACK {
        return Err(Error::Domain(x));
    }
    Ok(clenshaw(&p.coeffs, x.clamp(-1.0, 1.0)))
}

/// `V p(Lambda) V^dagger` for Hermitian `A` with spectrum in `[-1, 1]`.
pub fn eval_matrix(p: &ChebyshevPolynomial, a: &DenseOperator) -> Result<DenseOperator> {
    Ok(DenseOperator::from_matrix_unchecked(eval_matrix_raw(p, a.matrix())?))
}

pub(crate) fn eval_matrix_raw(p: &ChebyshevPolynomial, a: &CMatrix) -> Result<CMatrix> {
    let spec = eig_matrix(a)?;
    if let Some(&bad) = spec.eigenvalues.iter().find(|x| x.abs() > 1.0 + 1e-10) {
        return Err(Error::Normalization { norm: bad.abs() });
    }
    Ok(spec.reconstruct_with(|x| clenshaw(&p.coeffs, x.clamp(-1.0, 1.0))))
}

/// Matrix Clenshaw recurrence; a reference for [`eval_matrix`].
pub fn eval_matrix_clenshaw(p: &ChebyshevPolynomial, a: &DenseOperator) -> Result<DenseOperator> {
    let n = a.dim();
    let am = a.matrix();
    let id = CMatrix::identity(n, n);
    let two = C64::new(2.0, 0.0);
    let mut b1 = CMatrix::zeros(n, n);
    let mut b2 = CMatrix::zeros(n, n);
    for &ck in p.coeffs[1..].iter().rev() {
        let b0 = &id * C64::new(ck, 0.0) + (am * &b1) * two - &b2;
        b2 = b1;
        b1 = b0;
    }
    let out = &id * C64::new(p.coeffs[0], 0.0) + am * &b1 - b2;
    DenseOperator::new(out)
}

/// `max |p(x) - target(x)|` over a uniform grid of `grid_points` per domain interval.
pub fn sup_error(p: &ChebyshevPolynomial, target: &ApproxTarget, grid_points: usize) -> Result<f64> {
    if grid_points < 1000 {
        return Err(Error::Parameter(format!("grid_points must be >= 1000, got {grid_points}")));
    }
    let mut worst = 0.0_f64;
    for (lo, hi) in target.intervals() {
        let err = (0..grid_points)
            .into_par_iter()
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (grid_points - 1) as f64;
                (clenshaw(&p.coeffs, x) - target.value(x)).abs()
            })
            .reduce(|| 0.0, f64::max);
        worst = worst.max(err);
    }
    Ok(worst)
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Chebyshev nodes `x_j = cos(pi (j + 1/2) / n)`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos())
        .collect()
}

/// Coefficients of the degree-`d` interpolant of `f` at the `d + 1` Chebyshev nodes.
pub fn chebyshev_interpolate(f: impl Fn(f64) -> f64, degree: usize) -> Vec<f64> {
    let n = degree + 1;
    let nodes = chebyshev_nodes(n);
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); 2 * n];
    for (j, &x) in nodes.iter().enumerate() {
        buf[j] = Complex64::new(f(x), 0.0);
    }
    plan(2 * n, false).process(&mut buf);
    let mut c: Vec<f64> = (0..n)
        .map(|k| {
            let tw = Complex64::from_polar(1.0, -std::f64::consts::PI * k as f64 / (2 * n) as f64);
            2.0 / n as f64 * (tw * buf[k]).re
        })
        .collect();
    c[0] *= 0.5;
    c
}

/// Values of the series at the `m` Chebyshev nodes, via one FFT of length `2m`.
pub(crate) fn eval_cheb_grid(c: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(c.len() <= m, "grid must be finer than the degree");
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); 2 * m];
    for (k, &ck) in c.iter().enumerate() {
        buf[k] = Complex64::from_polar(ck, std::f64::consts::PI * k as f64 / (2 * m) as f64);
    }
    plan(2 * m, true).process(&mut buf);
    (chebyshev_nodes(m), buf[..m].iter().map(|z| z.re).collect())
}

fn grid_size(degree: usize) -> usize {
    (16 * (degree + 1)).max(8192).next_power_of_two()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub max_degree: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_degree: DEFAULT_MAX_DEGREE }
    }
}

/// `u * phi(u^m)^q` with `phi(v) = (1 - e^-v) / v`.
fn window(u: f64, m: i32, q: f64) -> f64 {
    let v = u.powi(m);
    let phi = if v < 1e-12 { 1.0 - 0.5 * v } else { -(-v).exp_m1() / v };
    u * phi.powf(q)
}

/// Relative deficit of the window from `u^-a` at `u`.
fn window_rel_error(u: f64, m: i32, q: f64) -> f64 {
    let t = (-u.powi(m)).exp();
    -(q * (-t).ln_1p()).exp_m1()
}

/// Smallest `u0` with relative deficit at most `tol`.
fn solve_u0(tol: f64, m: i32, q: f64) -> f64 {
    let (mut lo, mut hi) = (1e-9, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if window_rel_error(mid, m, q) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn window_peak(m: i32, q: f64) -> f64 {
    (0..=200_000).map(|i| window(i as f64 * 1e-4, m, q)).fold(0.0, f64::max)
}

/// One smoothed-target family member, ready to be interpolated.
#[derive(Clone, Copy)]
struct Smoothed {
    m: i32,
    q: f64,
    sigma: f64,
    scale: f64,
    /// `y = 1 - x` instead of the odd extension in `|x|`.
    edge: bool,
}

impl Smoothed {
    fn eval(&self, x: f64) -> f64 {
        if self.edge {
            self.scale * window((1.0 - x).max(0.0) / self.sigma, self.m, self.q)
        } else {
            x.signum() * self.scale * window(x.abs() / self.sigma, self.m, self.q)
        }
    }
}

struct Problem {
    target: ApproxTarget,
    odd: bool,
    /// Power in the `y^-a` decay.
    a: f64,
    /// Target is `coef * y^-a` for `y >= y_min`.
    coef: f64,
    y_min: f64,
    edge: bool,
    tol: f64,
    ms: Vec<i32>,
}

impl Problem {
    fn smoothed(&self, m: i32) -> Option<Smoothed> {
        let q = (1.0 + self.a) / m as f64;
        let rel = 0.5 * self.tol / self.target.peak();
        let u0 = solve_u0(rel, m, q);
        let sigma = self.y_min / u0;
        let scale = self.coef * sigma.powf(-self.a);
        if scale * window_peak(m, q) > 1.0 - 0.5 * self.tol {
            return None;
        }
        Some(Smoothed { m, q, sigma, scale, edge: self.edge })
    }

    fn build(&self, s: &Smoothed, degree: usize) -> Vec<f64> {
        let mut c = chebyshev_interpolate(|x| s.eval(x), degree);
        if self.odd {
            for ck in c.iter_mut().step_by(2) {
                *ck = 0.0;
            }
        }
        c
    }

    fn edge_ok(&self, c: &[f64]) -> bool {
        !self.edge || clenshaw(c, 1.0).abs() <= self.tol
    }

    /// Fast acceptance test on a dense Chebyshev grid.
    fn accept(&self, c: &[f64]) -> bool {
        let (xs, vs) = eval_cheb_grid(c, grid_size(c.len() - 1));
        for (&x, &v) in xs.iter().zip(&vs) {
            if v.abs() > 1.0 {
                return false;
            }
            if self.target.in_domain(x) && (v - self.target.value(x)).abs() > self.tol {
                return false;
            }
        }
        let ends = [clenshaw(c, 1.0), clenshaw(c, -1.0)];
        ends.iter().all(|v| v.abs() <= 1.0) && self.edge_ok(c)
    }

    /// Final check on the uniform grid, the same one `sup_error` uses.
    fn confirm(&self, c: &[f64]) -> bool {
        let p = ChebyshevPolynomial { coeffs: c.to_vec(), parity: Parity::None, target: None };
        let err = sup_error(&p, &self.target, CHECK_GRID).unwrap_or(f64::INFINITY);
        err <= self.tol && p.max_abs() <= 1.0 + BOUND_SLACK && self.edge_ok(c)
    }

    fn search(&self, s: &Smoothed, max_degree: usize) -> Option<(usize, Vec<f64>)> {
        let cand = |k: usize| if self.odd { 2 * k + 1 } else { k };
        let kmax = if self.odd { (max_degree.saturating_sub(1)) / 2 } else { max_degree };
        let test = |k: usize| {
            let c = self.build(s, cand(k));
            if self.accept(&c) {
                Some(c)
            } else {
                None
            }
        };
        let mut lo: Option<usize> = None;
        let mut k = 0usize;
        let mut hit = loop {
            if let Some(c) = test(k) {
                break (k, c);
            }
            if k == kmax {
                return None;
            }
            lo = Some(k);
            k = (2 * k + 1).min(kmax);
        };
        let mut lo = lo.map(|x| x as i64).unwrap_or(-1);
        let mut hi = hit.0 as i64;
        while hi - lo > 1 {
            let mid = ((lo + hi) / 2) as usize;
            match test(mid) {
                Some(c) => {
                    hi = mid as i64;
                    hit = (mid, c);
                }
                None => lo = mid as i64,
            }
        }
        Some(hit)
    }

    /// The uniform-grid confirmation occasionally needs a little more degree.
    fn confirm_from(&self, s: &Smoothed, hit: (usize, Vec<f64>), max_degree: usize) -> Option<(usize, Vec<f64>)> {
        let cand = |k: usize| if self.odd { 2 * k + 1 } else { k };
        let kmax = if self.odd { (max_degree.saturating_sub(1)) / 2 } else { max_degree };
        let (mut k, mut c) = hit;
        for _ in 0..8 {
            if self.confirm(&c) {
                return Some((cand(k), c));
            }
            if k >= kmax {
                return None;
            }
            k += 1;
            c = self.build(s, cand(k));
        }
        None
    }

    fn solve(&self, opts: &FitOptions) -> Result<ChebyshevPolynomial> {
        let cand = |k: usize| if self.odd { 2 * k + 1 } else { k };
        let mut found: Vec<(usize, i32, Smoothed, (usize, Vec<f64>))> = self
            .ms
            .par_iter()
            .filter_map(|&m| {
                let s = self.smoothed(m)?;
                self.search(&s, opts.max_degree).map(|hit| (cand(hit.0), m, s, hit))
            })
            .collect();
        found.sort_by_key(|(d, m, _, _)| (*d, *m));
        for (_, _, s, hit) in found {
            if let Some((_, coeffs)) = self.confirm_from(&s, hit, opts.max_degree) {
                let parity = if self.odd { Parity::Odd } else { Parity::None };
                return Ok(ChebyshevPolynomial { coeffs, parity, target: Some(self.target) });
            }
        }
        Err(Error::ResourceCap(format!(
            "no polynomial of degree <= {} reaches sup error {:.3e}",
            opts.max_degree, self.tol
        )))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    Ok(())
}

/// Odd `p` with `|p - (3/4) delta / x| <= eps` on `delta <= |x| <= 1` and `|p| <= 1`.
pub fn inverse_poly(delta: f64, eps: f64) -> Result<ChebyshevPolynomial> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::Parameter(format!("delta must lie in (0, 1/2], got {delta}")));
    }
    check_eps(eps)?;
    fit_inverse(delta, eps, &FitOptions::default())
}

/// As [`inverse_poly`] but accepting any `delta` in `(0, 1]` and any `eps > 0`.
pub fn fit_inverse(delta: f64, eps: f64, opts: &FitOptions) -> Result<ChebyshevPolynomial> {
    if !(delta > 0.0 && delta <= 1.0) || !(eps > 0.0) {
        return Err(Error::Parameter(format!("cannot fit delta = {delta}, eps = {eps}")));
    }
    Problem {
        target: ApproxTarget::ScaledInverse { delta },
        odd: true,
        a: 1.0,
        coef: 0.75 * delta,
        y_min: delta,
        edge: false,
        tol: eps,
        ms: (1..=8).map(|k| 2 * k).collect(),
    }
    .solve(opts)
}

/// Normalization `K` of the edge-accelerated inverse.
pub fn ff_normalization(gap: f64) -> f64 {
    2.0 / gap
}

/// `q` with `|q - (2 / (r K)) / (1 - x)| <= eps / K` on `[-1, 1 - 2 gap / r]`,
/// `|q(1)| <= eps / K` and `|q| <= 1`, where `K = 2 / gap`.
///
/// Applied to the block `I - 2 H_F / r`, `K q` approximates `H_F^+`.
pub fn ff_inverse_poly(r: usize, gap: f64, eps: f64) -> Result<ChebyshevPolynomial> {
    check_eps(eps)?;
    fit_ff_inverse(r, gap, eps, &FitOptions::default())
}

pub fn fit_ff_inverse(r: usize, gap: f64, eps: f64, opts: &FitOptions) -> Result<ChebyshevPolynomial> {
    if r == 0 || !(gap > 0.0 && gap <= r as f64) || !(eps > 0.0) {
        return Err(Error::Parameter(format!("cannot fit r = {r}, gap = {gap}, eps = {eps}")));
    }
    let k_norm = ff_normalization(gap);
    let rf = r as f64;
    Problem {
        target: ApproxTarget::FfInverse { r: rf, gap, k_norm },
        odd: false,
        a: 1.0,
        coef: 2.0 / (rf * k_norm),
        y_min: 2.0 * gap / rf,
        edge: true,
        tol: eps / k_norm,
        ms: (1..=8).collect(),
    }
    .solve(opts)
}

/// Odd `p` with `|p - (3/4) sqrt(delta / x)| <= eps` on `delta <= x <= 1`.
pub fn sqrt_inverse_poly(delta: f64, eps: f64) -> Result<ChebyshevPolynomial> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::Parameter(format!("delta must lie in (0, 1/2], got {delta}")));
    }
    check_eps(eps)?;
    fit_sqrt_inverse(delta, eps, &FitOptions::default())
}

pub fn fit_sqrt_inverse(delta: f64, eps: f64, opts: &FitOptions) -> Result<ChebyshevPolynomial> {
    if !(delta > 0.0 && delta <= 1.0) || !(eps > 0.0) {
        return Err(Error::Parameter(format!("cannot fit delta = {delta}, eps = {eps}")));
    }
    Problem {
        target: ApproxTarget::SqrtInverse { delta },
        odd: true,
        a: 0.5,
        coef: 0.75 * delta.sqrt(),
        y_min: delta,
        edge: false,
        tol: eps,
        ms: (1..=8).map(|k| 2 * k).collect(),
    }
    .solve(opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Power-basis coefficients of a Chebyshev series, by the three-term recurrence.
    fn to_monomial(c: &[f64]) -> Vec<f64> {
        let n = c.len();
        let mut out = vec![0.0; n];
        let mut t_prev = vec![0.0; n];
        let mut t_cur = vec![0.0; n];
        t_prev[0] = 1.0;
        if n > 1 {
            t_cur[1] = 1.0;
        }
        for (k, &ck) in c.iter().enumerate() {
            let tk = if k == 0 { &t_prev } else { &t_cur };
            for i in 0..n {
                out[i] += ck * tk[i];
            }
            if k >= 1 && k + 1 < n {
                let mut next = vec![0.0; n];
                for i in 0..n - 1 {
                    next[i + 1] += 2.0 * t_cur[i];
                }
                for i in 0..n {
                    next[i] -= t_prev[i];
                }
                t_prev = std::mem::replace(&mut t_cur, next);
            }
        }
        out
    }

    fn horner(m: &[f64], x: f64) -> f64 {
        m.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    #[test]
    fn t1_and_t2() {
        let t1 = ChebyshevPolynomial::chebyshev_t(1);
        assert_eq!(t1.eval(0.5).unwrap(), 0.5);
        let t2 = ChebyshevPolynomial::chebyshev_t(2);
        let vals: Vec<f64> = [-1.0, 0.0, 1.0].iter().map(|&x| t2.eval(x).unwrap()).collect();
        assert_eq!(vals, vec![1.0, -1.0, 1.0]);
        assert!(matches!(t2.eval(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn clenshaw_matches_monomial_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c: Vec<f64> = (0..=20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = ChebyshevPolynomial::new(c.clone(), Parity::None).unwrap();
        let mono = to_monomial(&c);
        for _ in 0..100 {
            let x = rng.random_range(-1.0..1.0);
            assert!((p.eval(x).unwrap() - horner(&mono, x)).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let c = chebyshev_interpolate(|x| 4.0 * x * x * x - 3.0 * x, 5);
        let want = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        for (a, b) in c.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_evaluation_matches_clenshaw() {
        let c: Vec<f64> = (0..40).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let (xs, vs) = eval_cheb_grid(&c, 128);
        for (x, v) in xs.iter().zip(vs) {
            assert!((clenshaw(&c, *x) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_is_validated() {
        assert!(ChebyshevPolynomial::new(vec![0.1, 1.0], Parity::Odd).is_err());
        assert!(ChebyshevPolynomial::new(vec![0.0, 1.0], Parity::Odd).is_ok());
        assert!(ChebyshevPolynomial::new(vec![1.0, 0.5], Parity::Even).is_err());
    }

    #[test]
    fn zero_polynomial_sup_error() {
        let z = ChebyshevPolynomial::new(vec![0.0], Parity::None).unwrap();
        let e = sup_error(&z, &ApproxTarget::ScaledInverse { delta: 0.5 }, 1000).unwrap();
        assert!((e - 0.75).abs() < 1e-15);
        assert!(sup_error(&z, &ApproxTarget::ScaledInverse { delta: 0.5 }, 10).is_err());
    }

    #[test]
    fn inverse_quarter() {
        let p = inverse_poly(0.25, 1e-3).unwrap();
        assert_eq!(p.parity(), Parity::Odd);
        let t = ApproxTarget::ScaledInverse { delta: 0.25 };
        assert!(sup_error(&p, &t, 10_000).unwrap() <= 1e-3);
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
        assert!(p.max_abs() <= 1.0 + BOUND_SLACK);
        let e2 = sup_error(&p, &t, 20_000).unwrap();
        let e1 = sup_error(&p, &t, 10_000).unwrap();
        assert!((e2 - e1).abs() <= 0.1 * e1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x: f64 = rng.random_range(-1.0..1.0);
            assert_eq!(p.eval(-x).unwrap(), -p.eval(x).unwrap());
        }
    }

    #[test]
    fn inverse_degree_is_monotone_in_eps() {
        let degrees: Vec<usize> =
            [1e-2, 3e-3, 1e-3, 3e-4, 1e-4].iter().map(|&e| inverse_poly(0.125, e).unwrap().degree()).collect();
        assert!(degrees.windows(2).all(|w| w[0] <= w[1]), "{degrees:?}");
    }

    #[test]
    fn ff_catalog_values() {
        let eps = 1e-3;
        let q = ff_inverse_poly(2, 1.0, eps).unwrap();
        let k = ff_normalization(1.0);
        let got: Vec<f64> = [1.0, 0.0, -1.0].iter().map(|&x| k * q.eval(x).unwrap()).collect();
        for (g, w) in got.iter().zip([0.0, 1.0, 0.5]) {
            assert!((g - w).abs() <= eps, "{got:?}");
        }
        assert!(q.max_abs() <= 1.0 + BOUND_SLACK);
    }

    #[test]
    fn ff_eps_halving_is_additive() {
        let d1 = ff_inverse_poly(8, 1.0, 2e-3).unwrap().degree() as i64;
        let d2 = ff_inverse_poly(8, 1.0, 1e-3).unwrap().degree() as i64;
        let d4 = ff_inverse_poly(8, 1.0, 2.5e-4).unwrap().degree() as i64;
        assert!(d2 >= d1);
        // Doubling precision adds a roughly constant number of degrees.
        assert!((d4 - d1) as f64 <= 2.0 * (d2 - d1).max(2) as f64 + 4.0, "{d1} {d2} {d4}");
        assert!(d4 < 2 * d1, "{d1} {d4}");
    }

    #[test]
    fn sqrt_inverse_fit() {
        let p = sqrt_inverse_poly(0.1, 1e-3).unwrap();
        let t = ApproxTarget::SqrtInverse { delta: 0.1 };
        assert!(sup_error(&p, &t, 10_000).unwrap() <= 1e-3);
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn degree_cap() {
        let opts = FitOptions { max_degree: 9 };
        assert!(matches!(fit_inverse(0.01, 1e-6, &opts), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn matrix_evaluation() {
        let z = DenseOperator::from_real_diagonal(&[1.0, -1.0]).unwrap();
        let t1 = ChebyshevPolynomial::chebyshev_t(1);
        assert!(eval_matrix(&t1, &z).unwrap().max_abs_diff(&z) < 1e-15);
        let p = ChebyshevPolynomial::new(vec![0.1, 0.2, 0.3], Parity::None).unwrap();
        let want = DenseOperator::from_real_diagonal(&[0.6, 0.2]).unwrap();
        assert!(eval_matrix(&p, &z).unwrap().max_abs_diff(&want) < 1e-14);
        let big = z.scale(2.0);
        assert!(matches!(eval_matrix(&p, &big), Err(Error::Normalization { .. })));
    }

    #[test]
    fn json_roundtrip() {
        let p = inverse_poly(0.5, 1e-2).unwrap();
        let back = ChebyshevPolynomial::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
        assert!(ChebyshevPolynomial::from_json(r#"{"coeffs":[1.0],"degree":3,"parity":"none"}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn hermitian_contraction(dim: usize) -> impl Strategy<Value = DenseOperator> {
            proptest::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |v| {
                let m = CMatrix::from_fn(dim, dim, |i, j| C64::new(v[i * dim + j], v[dim * dim + i * dim + j]));
                let h = &m + m.adjoint();
                let n = crate::operator::matrix_norm(&h).max(1e-3);
                DenseOperator::new(h * C64::new(0.99 / n, 0.0)).unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn functional_calculus(a in hermitian_contraction(8),
                                   c in proptest::collection::vec(-0.2f64..0.2, 1..12)) {
                let p = ChebyshevPolynomial::new(c, Parity::None).unwrap();
                let spectral = eval_matrix(&p, &a).unwrap();
                let recur = eval_matrix_clenshaw(&p, &a).unwrap();
                prop_assert!(spectral.max_abs_diff(&recur) < 1e-9);
                let pa = spectral.matmul(&a).unwrap();
                let ap = a.matmul(&spectral).unwrap();
                prop_assert!(pa.max_abs_diff(&ap) < 1e-9);
            }
        }
    }

    #[test]
    fn check_report() {
        let p = fit_inverse(0.25, 1e-3, &FitOptions::default()).unwrap();
        let c = check_polynomial(&p).unwrap();
        assert!(c.bounded && c.parity == Parity::Odd);
        assert!(c.parity_defect < 1e-12);
        assert!(c.sup_error.unwrap() <= 1e-3);
        let q = ChebyshevPolynomial::new(vec![0.0, 0.5, 0.0, 0.5], Parity::Odd).unwrap();
        assert_eq!(check_polynomial(&q).unwrap().sup_error, None);
    }
}
