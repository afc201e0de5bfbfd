//! Block encodings as explicit unitaries, their products, and the
//! spectral-amplification encodings of frustration-free Hamiltonians.
//!
//! Register order inside a unitary is `[ancillas][system]` with the
//! ancillas most significant, so the encoded block is the top-left
//! `2^n x 2^n` corner.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::FfModel;
use crate::operator::{
    dilate_matrix, gemm, matrix_norm, operator_norm, CMatrix, DenseOperator, C64, ONE,
};

/// Tolerance for accepting `alpha` slightly below the computed norm.
const ALPHA_SLACK: f64 = 1e-12;

/// Which oracle a query is charged to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OracleTag {
    #[serde(rename = "U_H")]
    UH,
    #[serde(rename = "U_I")]
    UI,
    #[serde(rename = "U_F")]
    UF,
    #[serde(rename = "U_Psi")]
    UPsi,
    #[serde(rename = "composite")]
    Composite,
}

impl fmt::Display for OracleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OracleTag::UH => "U_H",
            OracleTag::UI => "U_I",
            OracleTag::UF => "U_F",
            OracleTag::UPsi => "U_Psi",
            OracleTag::Composite => "composite",
        };
        f.write_str(s)
    }
}

/// Oracle queries consumed by one application of an encoding.
pub type QueryCost = BTreeMap<OracleTag, u64>;

pub(crate) fn scale_cost(cost: &QueryCost, k: u64) -> QueryCost {
    cost.iter().map(|(t, q)| (*t, q * k)).collect()
}

pub(crate) fn add_cost(a: &QueryCost, b: &QueryCost) -> QueryCost {
    let mut out = a.clone();
    for (t, q) in b {
        *out.entry(*t).or_insert(0) += q;
    }
    out
}

/// An `(alpha, m, eps)` block encoding: `||A - alpha * <0^m| U |0^m>|| <= eps`.
#[derive(Clone, Debug)]
pub struct BlockEncoding {
    unitary: DenseOperator,
    pub alpha: f64,
    /// Materialized ancilla qubits in `unitary`.
    pub ancillas: usize,
    /// Ancilla count of the circuit this matrix stands for.
    pub logical_ancillas: usize,
    pub system_qubits: usize,
    pub eps: f64,
    pub tag: OracleTag,
    /// Base-oracle queries per application.
    pub cost: QueryCost,
    counter: Arc<AtomicU64>,
    /// Index-register width for spectral-amplification encodings.
    ff_index_qubits: Option<usize>,
}

impl BlockEncoding {
    /// Wraps a unitary; the first `ancillas` qubits are the ancilla register.
    pub fn from_unitary(
        unitary: DenseOperator,
        alpha: f64,
        ancillas: usize,
        eps: f64,
        tag: OracleTag,
    ) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(eps >= 0.0) {
            return Err(Error::Parameter(format!("eps must be nonnegative, got {eps}")));
        }
        let total = unitary.qubits();
        if ancillas > total {
            return Err(Error::Shape(format!("{ancillas} ancillas in a {total}-qubit unitary")));
        }
        let residual = unitary.unitarity_residual();
        if residual > 1e-10 {
            return Err(Error::Validation(format!("matrix is not unitary (residual {residual:.3e})")));
        }
        let mut cost = QueryCost::new();
        cost.insert(tag, 1);
        Ok(Self {
            unitary,
            alpha,
            ancillas,
            logical_ancillas: ancillas,
            system_qubits: total - ancillas,
            eps,
            tag,
            cost,
            counter: Arc::new(AtomicU64::new(0)),
            ff_index_qubits: None,
        })
    }

    /// Re-tags a base oracle; the cost map is reset to one query of `tag`.
    pub fn with_tag(mut self, tag: OracleTag) -> Self {
        self.tag = tag;
        self.cost = QueryCost::from([(tag, 1)]);
        self
    }

    pub(crate) fn with_cost(mut self, cost: QueryCost) -> Self {
        self.cost = cost;
        self
    }

    pub(crate) fn with_logical_ancillas(mut self, m: usize) -> Self {
        self.logical_ancillas = m;
        self
    }

    pub fn unitary(&self) -> &DenseOperator {
        &self.unitary
    }

    pub fn system_dim(&self) -> usize {
        1 << self.system_qubits
    }

    /// `<0^m| U |0^m>`, without the `alpha` factor.
    pub fn block(&self) -> DenseOperator {
        self.unitary
            .top_left(self.system_dim())
            .expect("system block of a power-of-two unitary")
    }

    /// `alpha * <0^m| U |0^m>`.
    pub fn encoded(&self) -> DenseOperator {
        self.block().scale(self.alpha)
    }

    /// Counts one application of this encoding (or its inverse).
    pub fn record_use(&self) {
        self.counter.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_uses(&self, n: u64) {
        self.counter.fetch_add(n, Ordering::Relaxed);
    }

    pub fn uses(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }

    pub fn reset_uses(&self) {
        self.counter.store(0, Ordering::Relaxed);
    }
}

/// Encodes `A` as the top-left block of the dilation of `A / alpha`.
pub fn encode_matrix(a: &DenseOperator, alpha: f64) -> Result<BlockEncoding> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    let norm = operator_norm(a);
    if norm > alpha * (1.0 + ALPHA_SLACK) {
        return Err(Error::Normalization { norm: norm / alpha });
    }
    let scaled = a.matrix() * C64::new(1.0 / alpha, 0.0);
    let u = DenseOperator::from_matrix_unchecked(dilate_matrix(&scaled)?);
    BlockEncoding::from_unitary(u, alpha, 1, 0.0, OracleTag::Composite)
}

/// Embeds `U` acting on `[anc][sys]` into a larger register `[extra][anc][sys]`
/// as `I_extra (x) U`.
fn lift_outer(u: &CMatrix, extra: usize) -> CMatrix {
    if extra == 0 {
        return u.clone();
    }
    CMatrix::identity(1 << extra, 1 << extra).kronecker(u)
}

/// Embeds `U` acting on `[anc][sys]` into `[anc][extra][sys]` as identity on `extra`.
fn lift_middle(u: &CMatrix, anc: usize, extra: usize, sys: usize) -> CMatrix {
    if extra == 0 {
        return u.clone();
    }
    let da = 1usize << anc;
    let de = 1usize << extra;
    let ds = 1usize << sys;
    let n = da * de * ds;
    let mut out = CMatrix::zeros(n, n);
    for a1 in 0..da {
        for a2 in 0..da {
            let blk = u.view((a1 * ds, a2 * ds), (ds, ds));
            for e in 0..de {
                let r = (a1 * de + e) * ds;
                let c = (a2 * de + e) * ds;
                out.view_mut((r, c), (ds, ds)).copy_from(&blk);
            }
        }
    }
    out
}

/// Product of two encodings, encoding `A B`.
///
/// The result is `(I_b (x) U_A)(I_a (x) U_B)` on `[anc_B][anc_A][sys]`,
/// an `(alpha_A alpha_B, a + b, alpha_A eps_B + alpha_B eps_A)` encoding.
pub fn product(ua: &BlockEncoding, ub: &BlockEncoding) -> Result<BlockEncoding> {
    if ua.system_qubits != ub.system_qubits {
        return Err(Error::Shape(format!(
            "system registers differ: {} vs {} qubits",
            ua.system_qubits, ub.system_qubits
        )));
    }
    let (a, b, n) = (ua.ancillas, ub.ancillas, ua.system_qubits);
    let left = lift_outer(ua.unitary.matrix(), b);
    let right = lift_middle(ub.unitary.matrix(), b, a, n);
    let u = DenseOperator::from_matrix_unchecked(gemm(&left, &right));
    let alpha = ua.alpha * ub.alpha;
    let eps = ua.alpha * ub.eps + ub.alpha * ua.eps;
    let be = BlockEncoding::from_unitary(u, alpha, a + b, eps, OracleTag::Composite)?;
    Ok(be
        .with_cost(add_cost(&ua.cost, &ub.cost))
        .with_logical_ancillas(ua.logical_ancillas + ub.logical_ancillas))
}

/// Operator-norm discrepancy `||target - alpha * block||`.
pub fn verify(be: &BlockEncoding, target: &DenseOperator) -> Result<f64> {
    if target.dim() != be.system_dim() {
        return Err(Error::Shape(format!(
            "target of dimension {} for a {}-dim block",
            target.dim(),
            be.system_dim()
        )));
    }
    Ok(matrix_norm(&(target.matrix() - be.encoded().into_matrix())))
}

/// `H_SA`: the map `sys -> [b][sys]`, `|psi> -> sum_j |j> (x) Pi_j |psi>`, as a
/// `(r_pad 2^n) x 2^n` matrix. Padded projectors are zero.
pub fn ff_amplification_map(model: &FfModel) -> CMatrix {
    let ds = 1usize << model.n_qubits;
    let rp = model.r_padded();
    let mut out = CMatrix::zeros(rp * ds, ds);
    for (j, p) in model.projectors.iter().enumerate() {
        out.view_mut((j * ds, 0), (ds, ds)).copy_from(p.matrix());
    }
    out
}

/// `U_SA = SELECT (PREPARE_b (x) I)` on `[a][b][sys]`, with `a` the single
/// dilation qubit shared by all projector encodings and `b` the index register.
///
/// As an encoding it has one ancilla (`a`) and system register `[b][sys]`,
/// with `alpha = sqrt(r_pad)`. Restricted to inputs with `b = 0`, `alpha`
/// times its block is `H_SA` from [`ff_amplification_map`].
pub fn ff_select_prepare(model: &FfModel) -> Result<BlockEncoding> {
    let n = model.n_qubits;
    let ds = 1usize << n;
    let rp = model.r_padded();
    let nb = rp.trailing_zeros() as usize;
    let dim = 2 * rp * ds;

    // SELECT = sum_j |j><j|_b (x) U_j with U_j the dilation of Pi_j on [a][sys],
    // and PREPARE = H^{(x) b}, so U_SA[(a1, j), (a2, k)] = U_j[a1, a2] H[j, k].
    let h = hadamard_power(nb);
    let mut u = CMatrix::zeros(dim, dim);
    let zero = CMatrix::zeros(ds, ds);
    for j in 0..rp {
        let pj = model.projectors.get(j).map(|p| p.matrix()).unwrap_or(&zero);
        let uj = dilate_matrix(pj)?;
        for a1 in 0..2 {
            for a2 in 0..2 {
                let blk = uj.view((a1 * ds, a2 * ds), (ds, ds));
                for k in 0..rp {
                    let r = (a1 * rp + j) * ds;
                    let c = (a2 * rp + k) * ds;
                    u.view_mut((r, c), (ds, ds)).copy_from(&(blk * h[(j, k)]));
                }
            }
        }
    }
    let u = DenseOperator::from_matrix_unchecked(u);
    let mut be = BlockEncoding::from_unitary(u, (rp as f64).sqrt(), 1, 0.0, OracleTag::UF)?;
    be.ff_index_qubits = Some(nb);
    Ok(be)
}

pub(crate) fn hadamard_power(k: usize) -> CMatrix {
    let d = 1usize << k;
    let s = (d as f64).sqrt().recip();
    CMatrix::from_fn(d, d, |i, j| {
        if (i & j).count_ones() % 2 == 0 {
            C64::new(s, 0.0)
        } else {
            C64::new(-s, 0.0)
        }
    })
}

/// `U_SA^dagger (REF_a (x) I) U_SA` with `REF_a = I - 2|0><0|_a`, a
/// `(1, 1 + b, 0)` encoding of `I - 2 H_F / r_pad` on the original system.
pub fn ff_shifted_encoding(u_sa: &BlockEncoding) -> Result<BlockEncoding> {
    let nb = u_sa.ff_index_qubits.ok_or_else(|| {
        Error::Validation("encoding was not produced by ff_select_prepare".into())
    })?;
    // U^dagger (I - 2 P_a0) U = I - 2 T^dagger T with T the a = 0 rows of U.
    let u = u_sa.unitary().matrix();
    let dim = u.nrows();
    let t = u.rows(0, dim / 2).into_owned();
    let mut w = gemm(&t.adjoint(), &t) * C64::new(-2.0, 0.0);
    for i in 0..dim {
        w[(i, i)] += ONE;
    }
    let be = BlockEncoding::from_unitary(
        DenseOperator::from_matrix_unchecked(w),
        1.0,
        1 + nb,
        0.0,
        OracleTag::UF,
    )?;
    // One forward and one inverse query of U_SA per use.
    Ok(be.with_cost(QueryCost::from([(OracleTag::UF, 2)])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_ff_model, FfVariant};
    use crate::operator::hermitian_eig;

    fn pauli(c: char) -> DenseOperator {
        match c {
            'X' => DenseOperator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap(),
            'Z' => DenseOperator::from_real_diagonal(&[1.0, -1.0]).unwrap(),
            _ => DenseOperator::identity(2).unwrap(),
        }
    }

    #[test]
    fn encode_pauli_z() {
        let be = encode_matrix(&pauli('Z'), 1.0).unwrap();
        assert_eq!(be.ancillas, 1);
        assert!(be.block().max_abs_diff(&pauli('Z')) < 1e-15);
        assert!(verify(&be, &pauli('Z')).unwrap() <= 1e-12);
    }

    #[test]
    fn encode_scaled_x() {
        let two_x = pauli('X').scale(2.0);
        let be = encode_matrix(&two_x, 2.0).unwrap();
        assert_eq!(be.alpha, 2.0);
        assert!(be.block().max_abs_diff(&pauli('X')) < 1e-15);
        assert!(matches!(encode_matrix(&two_x, 1.0), Err(Error::Normalization { .. })));
    }

    #[test]
    fn verify_against_wrong_target() {
        let be = encode_matrix(&pauli('X'), 1.0).unwrap();
        assert!(verify(&be, &pauli('X')).unwrap() <= 1e-12);
        // X - Z has eigenvalues +-sqrt(2).
        assert!((verify(&be, &pauli('Z')).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn product_bookkeeping() {
        let ua = BlockEncoding { eps: 1e-4, ..encode_matrix(&pauli('X').scale(2.0), 2.0).unwrap() };
        let ub = BlockEncoding { eps: 1e-5, ..encode_matrix(&pauli('Z').scale(3.0), 3.0).unwrap() };
        let p = product(&ua, &ub).unwrap();
        assert_eq!(p.alpha, 6.0);
        assert_eq!(p.ancillas, 2);
        assert_eq!(p.eps, 2.0 * 1e-5 + 3.0 * 1e-4);
    }

    #[test]
    fn product_of_identities() {
        let id = encode_matrix(&pauli('I'), 1.0).unwrap();
        let p = product(&id, &id).unwrap();
        assert!(p.block().max_abs_diff(&pauli('I')) < 1e-12);
    }

    #[test]
    fn product_x_times_z() {
        let p = product(&encode_matrix(&pauli('X'), 1.0).unwrap(), &encode_matrix(&pauli('Z'), 1.0).unwrap())
            .unwrap();
        let xz = pauli('X').matmul(&pauli('Z')).unwrap();
        assert!(verify(&p, &xz).unwrap() < 1e-10);
        assert!(p.unitary().unitarity_residual() < 1e-12);
    }

    #[test]
    fn product_rejects_mismatched_systems() {
        let a = encode_matrix(&pauli('X'), 1.0).unwrap();
        let b = encode_matrix(&DenseOperator::identity(4).unwrap(), 1.0).unwrap();
        assert!(matches!(product(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn product_cost_adds() {
        let a = encode_matrix(&pauli('X'), 1.0).unwrap().with_tag(OracleTag::UH);
        let b = encode_matrix(&pauli('Z'), 1.0).unwrap().with_tag(OracleTag::UI);
        let p = product(&a, &b).unwrap();
        assert_eq!(p.cost, QueryCost::from([(OracleTag::UH, 1), (OracleTag::UI, 1)]));
    }

    #[test]
    fn counter_is_shared_between_clones() {
        let a = encode_matrix(&pauli('X'), 1.0).unwrap();
        let b = a.clone();
        a.record_use();
        b.record_uses(2);
        assert_eq!(a.uses(), 3);
    }

    #[test]
    fn select_prepare_single_projector() {
        let m = build_ff_model(1, FfVariant::Chain).unwrap();
        let u = ff_select_prepare(&m).unwrap();
        assert_eq!(u.alpha, 1.0);
        assert!(u.block().max_abs_diff(&m.projectors[0]) < 1e-14);
        let s = ff_shifted_encoding(&u).unwrap();
        assert!(s.block().max_abs_diff(&pauli('Z')) < 1e-12);
    }

    #[test]
    fn select_prepare_pair_model() {
        let m = build_ff_model(2, FfVariant::ProjectorPair).unwrap();
        let u = ff_select_prepare(&m).unwrap();
        assert!((u.alpha - 2f64.sqrt()).abs() < 1e-15);
        // Columns with the index register at zero carry H_SA / sqrt(r).
        let h_sa = ff_amplification_map(&m);
        let cols = u.block().matrix().columns(0, 4).into_owned();
        let diff = cols * C64::new(u.alpha, 0.0) - &h_sa;
        assert!(crate::operator::max_abs(&diff) < 1e-12);
        let hf = h_sa.adjoint() * &h_sa;
        assert!(crate::operator::max_abs(&(hf - m.h_f.matrix())) < 1e-12);
    }

    #[test]
    fn shifted_encoding_spectrum() {
        let m = build_ff_model(2, FfVariant::ProjectorPair).unwrap();
        let s = ff_shifted_encoding(&ff_select_prepare(&m).unwrap()).unwrap();
        assert_eq!(s.alpha, 1.0);
        assert_eq!(s.ancillas, 2);
        let eig = hermitian_eig(&s.block()).unwrap().eigenvalues;
        for (a, b) in eig.iter().zip([-1.0, 0.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-10);
        }
        let target = DenseOperator::identity(4).unwrap().sub(&m.h_f.scale(1.0)).unwrap();
        assert!(verify(&s, &target).unwrap() < 1e-10);
        assert!((operator_norm(&s.block()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_encoding_padded_chain() {
        // r = 3 pads to 4, so the block is I - H_F / 2.
        let m = build_ff_model(3, FfVariant::Chain).unwrap();
        let s = ff_shifted_encoding(&ff_select_prepare(&m).unwrap()).unwrap();
        let target = DenseOperator::identity(8).unwrap().sub(&m.h_f.scale(0.5)).unwrap();
        assert!(verify(&s, &target).unwrap() < 1e-10);
        let v = s.block().matrix()[(0, 0)];
        assert!((v.re - 1.0).abs() < 1e-10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn hermitian(dim: usize) -> impl Strategy<Value = DenseOperator> {
            proptest::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |v| {
                let m = CMatrix::from_fn(dim, dim, |i, j| C64::new(v[i * dim + j], v[dim * dim + i * dim + j]));
                DenseOperator::new(&m + m.adjoint()).unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn encoding_roundtrip(a in hermitian(8), slack in 1.0f64..3.0) {
                let alpha = operator_norm(&a) * slack + 1e-9;
                let be = encode_matrix(&a, alpha).unwrap();
                prop_assert!(verify(&be, &a).unwrap() <= 1e-10);
                prop_assert!(be.unitary().unitarity_residual() <= 1e-10);
            }

            #[test]
            fn product_consistency(a in hermitian(4), b in hermitian(4)) {
                let ua = encode_matrix(&a, operator_norm(&a) + 0.1).unwrap();
                let ub = encode_matrix(&b, operator_norm(&b) + 0.1).unwrap();
                let p = product(&ua, &ub).unwrap();
                prop_assert!(verify(&p, &a.matmul(&b).unwrap()).unwrap() <= 1e-9);
            }
        }
    }
}
