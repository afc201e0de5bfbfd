//! Polynomial transformations of block-encoded Hermitian matrices and the
//! pseudoinverse encodings built from them.
//!
//! Two backends realize `p(A / alpha)`. `Spectral` applies `p` in the
//! eigenbasis of the extracted block. `ChebLcu` builds the qubitization walk
//! `W = (2 Pi_0 - I) U`, reads `T_k` off the `|0^m>` block of `W^k`, and
//! combines the powers with a PREPARE/SELECT linear combination. Both
//! re-dilate the resulting block with a single fresh ancilla.

use serde::{Deserialize, Serialize};

use crate::block_encoding::{scale_cost, BlockEncoding, OracleTag};
use crate::error::{Error, Result};
use crate::operator::{
    dilate_matrix, householder_completion, matrix_norm, max_abs, CMatrix, CVector, DenseOperator, C64,
};
use crate::polynomial::{
    eval_matrix_raw, ff_normalization, fit_ff_inverse, fit_inverse, fit_sqrt_inverse, ChebyshevPolynomial,
    FitOptions, BOUND_SLACK,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Spectral,
    ChebLcu,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QsvtOptions {
    pub backend: Backend,
    pub fit: FitOptions,
}

/// A transformed encoding together with the polynomial that produced it.
#[derive(Clone, Debug)]
pub struct PolyEncoding {
    pub encoding: BlockEncoding,
    pub poly: ChebyshevPolynomial,
    /// Queries to the input encoding per use of `encoding`.
    pub queries: u64,
}

/// `(1, m + 1, 0)` encoding of `p(A / alpha)`.
///
/// A polynomial whose matrix norm lands in `(1, 1 + 1e-9]` is divided by
/// that norm, which is then reported as `alpha`.
pub fn apply_poly(be: &BlockEncoding, p: &ChebyshevPolynomial, backend: Backend) -> Result<BlockEncoding> {
    Ok(apply_poly_counted(be, p, backend)?.0)
}

fn apply_poly_counted(
    be: &BlockEncoding,
    p: &ChebyshevPolynomial,
    backend: Backend,
) -> Result<(BlockEncoding, u64)> {
    let (block, queries) = match backend {
        Backend::Spectral => (eval_matrix_raw(p, be.block().matrix())?, p.degree() as u64),
        Backend::ChebLcu => cheb_lcu_block(be, p)?,
    };
    let norm = matrix_norm(&block);
    if norm > 1.0 + BOUND_SLACK {
        return Err(Error::Unbounded(norm));
    }
    let (block, alpha) = if norm > 1.0 { (block * C64::new(1.0 / norm, 0.0), norm) } else { (block, 1.0) };
    let u = DenseOperator::from_matrix_unchecked(dilate_matrix(&block)?);
    be.record_uses(queries);
    let out = BlockEncoding::from_unitary(u, alpha, 1, 0.0, OracleTag::Composite)?
        .with_cost(scale_cost(&be.cost, queries))
        .with_logical_ancillas(be.logical_ancillas + 1);
    Ok((out, queries))
}

/// A Hermitian unitary whose `|0^m>` block is the block of `be`, plus the
/// number of `be` queries it costs.
fn hermitian_unitary(be: &BlockEncoding) -> Result<(CMatrix, usize, u64)> {
    let u = be.unitary().matrix();
    if max_abs(&(u - u.adjoint())) <= 1e-12 {
        return Ok((u.clone(), be.ancillas, 1));
    }
    let block = be.block();
    let defect = block.hermiticity_defect();
    if defect > 1e-10 {
        return Err(Error::Unsupported(format!(
            "walk operators need a Hermitian block (defect {defect:.3e})"
        )));
    }
    // (H (x) I)(|0><1| (x) U + |1><0| (x) U^dagger)(H (x) I) has block (A + A^dagger) / 2 = A.
    let d = u.nrows();
    let mut v = CMatrix::zeros(2 * d, 2 * d);
    v.view_mut((0, d), (d, d)).copy_from(u);
    v.view_mut((d, 0), (d, d)).copy_from(&u.adjoint());
    let h = crate::block_encoding::hadamard_power(1).kronecker(&CMatrix::identity(d, d));
    Ok((&h * v * &h, be.ancillas + 1, 2))
}

/// `W = (2 Pi_0 - I) U` for a Hermitian-unitary form of `be`, with the
/// system dimension of its `|0^m>` block.
pub fn walk_operator(be: &BlockEncoding) -> Result<(DenseOperator, usize)> {
    let (u, _, _) = hermitian_unitary(be)?;
    let ds = be.system_dim();
    let mut w = u;
    for i in ds..w.nrows() {
        for j in 0..w.ncols() {
            w[(i, j)] = -w[(i, j)];
        }
    }
    Ok((DenseOperator::from_matrix_unchecked(w), ds))
}

fn cheb_lcu_block(be: &BlockEncoding, p: &ChebyshevPolynomial) -> Result<(CMatrix, u64)> {
    let (_, _, per_step) = hermitian_unitary(be)?;
    let (w, ds) = walk_operator(be)?;
    let w = w.into_matrix();
    let c = p.coeffs();
    let l1: f64 = c.iter().map(|x| x.abs()).sum();
    if l1 == 0.0 {
        return Ok((CMatrix::zeros(ds, ds), 0));
    }

    // PREPARE on a counter register: |0> -> sum_k sqrt(|c_k| / l1) |k>.
    let len = c.len().next_power_of_two();
    let amps = CVector::from_fn(len, |k, _| {
        let ck = c.get(k).copied().unwrap_or(0.0);
        C64::new((ck.abs() / l1).sqrt(), 0.0)
    });
    let prep = householder_completion(&amps);

    // <0| PREP^dagger SELECT PREP |0> restricted to the |0^m> block,
    // with SELECT = sum_k |k><k| (x) sign(c_k) W^k applied column by column.
    let mut cols = CMatrix::identity(w.nrows(), ds);
    let mut acc = CMatrix::zeros(ds, ds);
    let mut queries = 0u64;
    for (k, &ck) in c.iter().enumerate() {
        if k > 0 {
            cols = &w * &cols;
        }
        if ck == 0.0 {
            continue;
        }
        queries += k as u64 * per_step;
        let weight = prep[(k, 0)].conj() * prep[(k, 0)] * C64::new(ck.signum(), 0.0);
        acc += cols.view((0, 0), (ds, ds)) * weight;
    }
    Ok((acc * C64::new(l1, 0.0), queries))
}

fn check_gap_eps(gap: f64, eps: f64) -> Result<()> {
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::Parameter(format!("gap must be positive, got {gap}")));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// `(4 / (3 gap), m + 1, eps)` encoding of `(H - E0)^+` from an encoding of
/// the PSD matrix `H - E0`.
pub fn pseudoinverse_encoding(u_h: &BlockEncoding, gap: f64, eps: f64) -> Result<BlockEncoding> {
    Ok(pseudoinverse_encoding_with(u_h, gap, eps, &QsvtOptions::default())?.encoding)
}

pub fn pseudoinverse_encoding_with(
    u_h: &BlockEncoding,
    gap: f64,
    eps: f64,
    opts: &QsvtOptions,
) -> Result<PolyEncoding> {
    check_gap_eps(gap, eps)?;
    let delta = gap / u_h.alpha;
    if delta > 1.0 + 1e-12 {
        return Err(Error::Parameter(format!("gap {gap} exceeds the normalization {}", u_h.alpha)));
    }
    let alpha = 4.0 / (3.0 * gap);
    let poly = fit_inverse(delta.min(1.0), eps / alpha, &opts.fit)?;
    finish(u_h, poly, alpha, eps, opts.backend)
}

/// `(K, b + 2, eps)` encoding of `H_F^+` from the shifted encoding of
/// `I - 2 H_F / r`, with `K = 2 / gap`. `r` is the padded projector count.
pub fn ff_pseudoinverse_encoding(u_f: &BlockEncoding, r: usize, gap: f64, eps: f64) -> Result<BlockEncoding> {
    Ok(ff_pseudoinverse_encoding_with(u_f, r, gap, eps, &QsvtOptions::default())?.encoding)
}

pub fn ff_pseudoinverse_encoding_with(
    u_f: &BlockEncoding,
    r: usize,
    gap: f64,
    eps: f64,
    opts: &QsvtOptions,
) -> Result<PolyEncoding> {
    check_gap_eps(gap, eps)?;
    if (u_f.alpha - 1.0).abs() > 1e-12 {
        return Err(Error::Validation("the shifted encoding must have alpha = 1".into()));
    }
    let poly = fit_ff_inverse(r, gap, eps, &opts.fit)?;
    finish(u_f, poly, ff_normalization(gap), eps, opts.backend)
}

/// `(4 / (3 sqrt(gap)), m + 1, eps)` encoding of `((H - E0)^+)^(1/2)`.
pub fn sqrt_pseudoinverse_encoding(u_h: &BlockEncoding, gap: f64, eps: f64) -> Result<BlockEncoding> {
    Ok(sqrt_pseudoinverse_encoding_with(u_h, gap, eps, &QsvtOptions::default())?.encoding)
}

pub fn sqrt_pseudoinverse_encoding_with(
    u_h: &BlockEncoding,
    gap: f64,
    eps: f64,
    opts: &QsvtOptions,
) -> Result<PolyEncoding> {
    check_gap_eps(gap, eps)?;
    let delta = gap / u_h.alpha;
    if delta > 1.0 + 1e-12 {
        return Err(Error::Parameter(format!("gap {gap} exceeds the normalization {}", u_h.alpha)));
    }
    let alpha = 4.0 / (3.0 * gap.sqrt());
    let poly = fit_sqrt_inverse(delta.min(1.0), eps / alpha, &opts.fit)?;
    finish(u_h, poly, alpha, eps, opts.backend)
}

fn finish(
    input: &BlockEncoding,
    poly: ChebyshevPolynomial,
    alpha: f64,
    eps: f64,
    backend: Backend,
) -> Result<PolyEncoding> {
    let (mut enc, queries) = apply_poly_counted(input, &poly, backend)?;
    enc.alpha *= alpha;
    enc.eps = eps;
    Ok(PolyEncoding { encoding: enc, poly, queries })
}

/// `alpha * block * psi`, the image of a state under an encoded operator.
pub fn apply_encoded(be: &BlockEncoding, psi: &CVector) -> Result<CVector> {
    be.encoded().apply(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block_encoding::{encode_matrix, ff_select_prepare, ff_shifted_encoding, verify};
    use crate::models::{build_dense, build_ff_model, FfVariant, ModelSpec};
    use crate::operator::{hermitian_eig, operator_norm, pseudoinverse};
    use crate::polynomial::Parity;

    fn z() -> DenseOperator {
        DenseOperator::from_real_diagonal(&[1.0, -1.0]).unwrap()
    }

    fn shifted_tfim(n: usize, lambda: f64) -> (DenseOperator, f64) {
        let (h, _) = build_dense(&ModelSpec::tfim(n, lambda)).unwrap();
        let s = hermitian_eig(&h).unwrap();
        (h.shifted(s.e0), s.gap)
    }

    #[test]
    fn identity_transform() {
        let a = DenseOperator::from_real_rows(2, &[0.3, 0.4, 0.4, -0.1]).unwrap();
        let be = encode_matrix(&a, 2.0).unwrap();
        for backend in [Backend::Spectral, Backend::ChebLcu] {
            let out = apply_poly(&be, &ChebyshevPolynomial::chebyshev_t(1), backend).unwrap();
            assert_eq!(out.alpha, 1.0);
            assert!(verify(&out, &a.scale(0.5)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn t2_of_z_is_identity() {
        let be = encode_matrix(&z(), 1.0).unwrap();
        for backend in [Backend::Spectral, Backend::ChebLcu] {
            let out = apply_poly(&be, &ChebyshevPolynomial::chebyshev_t(2), backend).unwrap();
            assert!(verify(&out, &DenseOperator::identity(2).unwrap()).unwrap() < 1e-10);
        }
    }

    #[test]
    fn unbounded_polynomial_rejected() {
        let be = encode_matrix(&z(), 1.0).unwrap();
        let p = ChebyshevPolynomial::new(vec![0.0, 2.0], Parity::Odd).unwrap();
        assert!(matches!(apply_poly(&be, &p, Backend::Spectral), Err(Error::Unbounded(_))));
    }

    #[test]
    fn non_hermitian_block_unsupported_for_walks() {
        let a = DenseOperator::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let be = encode_matrix(&a, 1.0).unwrap();
        let p = ChebyshevPolynomial::chebyshev_t(1);
        assert!(matches!(apply_poly(&be, &p, Backend::ChebLcu), Err(Error::Unsupported(_))));
    }

    #[test]
    fn walk_powers_give_chebyshev_blocks() {
        let a = DenseOperator::from_real_rows(2, &[0.2, 0.5, 0.5, -0.4]).unwrap();
        let be = encode_matrix(&a, 1.0).unwrap();
        let (w, ds) = walk_operator(&be).unwrap();
        let mut wk = DenseOperator::identity(w.dim()).unwrap();
        for k in 0..6 {
            let blk = wk.top_left(ds).unwrap();
            let tk = crate::polynomial::eval_matrix(&ChebyshevPolynomial::chebyshev_t(k), &a).unwrap();
            assert!(blk.max_abs_diff(&tk) < 1e-12, "k = {k}");
            wk = w.matmul(&wk).unwrap();
        }
    }

    #[test]
    fn symmetrized_walk_for_product_encodings() {
        // Product encodings are not Hermitian unitaries even when the block is.
        let a = DenseOperator::from_real_rows(2, &[0.5, 0.0, 0.0, 0.25]).unwrap();
        let ea = encode_matrix(&a, 1.0).unwrap();
        let prod = crate::block_encoding::product(&ea, &ea).unwrap();
        let p = ChebyshevPolynomial::new(vec![0.1, 0.0, 0.4, 0.0, 0.2], Parity::Even).unwrap();
        let s = apply_poly(&prod, &p, Backend::Spectral).unwrap();
        let l = apply_poly(&prod, &p, Backend::ChebLcu).unwrap();
        assert!(s.block().max_abs_diff(&l.block()) < 1e-10);
    }

    #[test]
    fn backends_agree_on_inverse_polynomial() {
        let (a, gap) = shifted_tfim(3, 0.7);
        let alpha = operator_norm(&a);
        let be = encode_matrix(&a, alpha).unwrap();
        let p = crate::polynomial::fit_inverse(gap / alpha, 0.05, &FitOptions::default()).unwrap();
        let s = apply_poly(&be, &p, Backend::Spectral).unwrap();
        let l = apply_poly(&be, &p, Backend::ChebLcu).unwrap();
        assert!(s.block().max_abs_diff(&l.block()) < 1e-8, "degree {}", p.degree());
    }

    #[test]
    fn query_charges() {
        let be = encode_matrix(&z(), 1.0).unwrap().with_tag(OracleTag::UH);
        let p = ChebyshevPolynomial::new(vec![0.0, 0.5, 0.0, 0.25], Parity::Odd).unwrap();
        let s = apply_poly(&be, &p, Backend::Spectral).unwrap();
        assert_eq!(s.cost[&OracleTag::UH], 3);
        assert_eq!(be.uses(), 3);
        let l = apply_poly(&be, &p, Backend::ChebLcu).unwrap();
        assert_eq!(l.cost[&OracleTag::UH], 1 + 3);
    }

    #[test]
    fn pseudoinverse_of_two_level_system() {
        let a = DenseOperator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let be = encode_matrix(&a, 1.0).unwrap();
        let pinv = pseudoinverse_encoding(&be, 1.0, 1e-3).unwrap();
        assert!((pinv.alpha - 4.0 / 3.0).abs() < 1e-15);
        assert!(verify(&pinv, &a).unwrap() <= 1e-3);
    }

    #[test]
    fn pseudoinverse_of_diagonal() {
        let a = DenseOperator::from_real_diagonal(&[0.0, 2.0, 4.0, 4.0]).unwrap();
        let be = encode_matrix(&a, 4.0).unwrap();
        let pinv = pseudoinverse_encoding(&be, 2.0, 1e-3).unwrap();
        assert!((pinv.alpha - 4.0 / 6.0).abs() < 1e-15);
        let want = DenseOperator::from_real_diagonal(&[0.0, 0.5, 0.25, 0.25]).unwrap();
        assert!(verify(&pinv, &want).unwrap() <= 1e-3);
        assert!(matches!(pseudoinverse_encoding(&be, 0.0, 1e-3), Err(Error::Parameter(_))));
    }

    #[test]
    fn pseudoinverse_annihilates_ground_state() {
        let (a, gap) = shifted_tfim(3, 0.9);
        let be = encode_matrix(&a, operator_norm(&a)).unwrap();
        let eps = 1e-3;
        let pinv = pseudoinverse_encoding(&be, gap, eps).unwrap();
        let exact = pseudoinverse(&a, gap / 2.0).unwrap();
        assert!(verify(&pinv, &exact).unwrap() <= eps);
        let psi = hermitian_eig(&a).unwrap().ground_state();
        let img = apply_encoded(&pinv, psi.amplitudes()).unwrap();
        assert!(img.norm() <= eps);
    }

    #[test]
    fn ff_pseudoinverse_catalog() {
        let m = build_ff_model(2, FfVariant::ProjectorPair).unwrap();
        let uf = ff_shifted_encoding(&ff_select_prepare(&m).unwrap()).unwrap();
        let eps = 1e-3;
        let pe = ff_pseudoinverse_encoding_with(&uf, m.r_padded(), 1.0, eps, &QsvtOptions::default()).unwrap();
        assert_eq!(pe.encoding.alpha, 2.0);
        let exact = pseudoinverse(&m.h_f, 0.5).unwrap();
        assert!(verify(&pe.encoding, &exact).unwrap() <= eps);
        assert_eq!(pe.queries, pe.poly.degree() as u64);
    }

    #[test]
    fn ff_single_projector() {
        let m = build_ff_model(1, FfVariant::Chain).unwrap();
        let uf = ff_shifted_encoding(&ff_select_prepare(&m).unwrap()).unwrap();
        let pinv = ff_pseudoinverse_encoding(&uf, 1, 1.0, 1e-3).unwrap();
        assert!(verify(&pinv, &m.projectors[0]).unwrap() <= 1e-3);
    }

    #[test]
    fn ff_chain_beats_general_inversion() {
        let m = build_ff_model(6, FfVariant::Chain).unwrap();
        let eps = 1e-2;
        let uf = ff_shifted_encoding(&ff_select_prepare(&m).unwrap()).unwrap();
        let ff = ff_pseudoinverse_encoding_with(&uf, m.r_padded(), 1.0, eps, &QsvtOptions::default()).unwrap();
        let uh = encode_matrix(&m.h_f, operator_norm(&m.h_f)).unwrap();
        let gen = pseudoinverse_encoding_with(&uh, 1.0, eps, &QsvtOptions::default()).unwrap();
        assert!(ff.queries < gen.queries, "ff {} general {}", ff.queries, gen.queries);
        let exact = pseudoinverse(&m.h_f, 0.5).unwrap();
        assert!(verify(&ff.encoding, &exact).unwrap() <= eps);
        assert!(verify(&gen.encoding, &exact).unwrap() <= eps);
    }

    #[test]
    fn sqrt_pseudoinverse() {
        let a = DenseOperator::from_real_diagonal(&[0.0, 1.0, 4.0, 2.0]).unwrap();
        let be = encode_matrix(&a, 4.0).unwrap();
        let enc = sqrt_pseudoinverse_encoding(&be, 1.0, 1e-3).unwrap();
        let want = DenseOperator::from_real_diagonal(&[0.0, 1.0, 0.5, 0.5f64.sqrt()]).unwrap();
        assert!(verify(&enc, &want).unwrap() <= 1e-3);
    }
}
