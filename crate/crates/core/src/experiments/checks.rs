use serde::{Deserialize, Serialize};

use crate::block_encoding::{encode_matrix, ff_select_prepare, ff_shifted_encoding, product, verify, BlockEncoding};
use crate::error::{Error, Result};
use crate::models::{build_dense, ground_data, FfModel, ModelSpec};
use crate::operator::{hermitian_eig, operator_norm, pseudoinverse, DenseOperator, StateVector};
use crate::qsvt::{apply_encoded, ff_pseudoinverse_encoding, pseudoinverse_encoding, sqrt_pseudoinverse_encoding};

/// Slack added to declared errors to absorb floating-point rounding.
pub const CHECK_SLACK: f64 = 1e-10;

/// One encoding compared against its dense target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingCheck {
    pub name: String,
    pub alpha: f64,
    pub ancillas: usize,
    pub declared_eps: f64,
    pub error: f64,
    pub passed: bool,
}

impl EncodingCheck {
    fn new(name: &str, be: &BlockEncoding, error: f64) -> Self {
        Self {
            name: name.into(),
            alpha: be.alpha,
            ancillas: be.ancillas,
            declared_eps: be.eps,
            error,
            passed: error <= be.eps + CHECK_SLACK,
        }
    }
}

fn norm_encoding(a: &DenseOperator) -> Result<BlockEncoding> {
    let n = operator_norm(a);
    encode_matrix(a, if n > 0.0 { n } else { 1.0 })
}

fn annihilation(name: &str, be: &BlockEncoding, ground: &StateVector) -> Result<EncodingCheck> {
    let img = apply_encoded(be, ground.amplitudes())?;
    Ok(EncodingCheck::new(name, be, img.norm()))
}

fn product_bookkeeping(a: &BlockEncoding, b: &BlockEncoding, ab: &BlockEncoding) -> EncodingCheck {
    let alpha = a.alpha * b.alpha;
    let eps = a.alpha * b.eps + b.alpha * a.eps;
    let exact = ab.alpha == alpha && ab.eps == eps && ab.ancillas == a.ancillas + b.ancillas;
    EncodingCheck {
        name: "product_bookkeeping".into(),
        alpha: ab.alpha,
        ancillas: ab.ancillas,
        declared_eps: ab.eps,
        error: if exact { 0.0 } else { f64::INFINITY },
        passed: exact,
    }
}

/// Encodings built for `spec` at polynomial accuracy `eps`: `H - E0`, `H_I`,
/// the pseudoinverse and its square root (each with ground-state annihilation),
/// and the product `G = (H - E0)^+ H_I`.
pub fn encoding_checks(spec: &ModelSpec, eps: f64) -> Result<Vec<EncodingCheck>> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    let (h, h_i) = build_dense(spec)?;
    let (sd, ground) = ground_data(&h)?;
    let shifted = h.shifted(sd.e0);
    let u_h = norm_encoding(&shifted)?;
    let u_i = norm_encoding(&h_i)?;
    let mut out = vec![
        EncodingCheck::new("hamiltonian", &u_h, verify(&u_h, &shifted)?),
        EncodingCheck::new("driving", &u_i, verify(&u_i, &h_i)?),
    ];

    let pinv_target = pseudoinverse(&shifted, sd.gap / 2.0)?;
    let pinv = pseudoinverse_encoding(&u_h, sd.gap, eps)?;
    out.push(EncodingCheck::new("pseudoinverse", &pinv, verify(&pinv, &pinv_target)?));
    out.push(annihilation("pseudoinverse_annihilation", &pinv, &ground)?);

    let cut = sd.gap / 2.0;
    let sqrt_target = DenseOperator::new(
        hermitian_eig(&shifted)?.reconstruct_with(|x| if x > cut { x.sqrt().recip() } else { 0.0 }),
    )?;
    let sq = sqrt_pseudoinverse_encoding(&u_h, sd.gap, eps)?;
    out.push(EncodingCheck::new("sqrt_pseudoinverse", &sq, verify(&sq, &sqrt_target)?));
    out.push(annihilation("sqrt_pseudoinverse_annihilation", &sq, &ground)?);

    let g = product(&pinv, &u_i)?;
    out.push(EncodingCheck::new("g", &g, verify(&g, &pinv_target.matmul(&h_i)?)?));
    out.push(product_bookkeeping(&pinv, &u_i, &g));
    Ok(out)
}

/// Frustration-free encodings of `model`: the shifted reflection encoding of
/// `I - 2 H_F / r_pad` and the FF pseudoinverse at accuracy `eps`.
pub fn ff_encoding_checks(model: &FfModel, eps: f64) -> Result<Vec<EncodingCheck>> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    let (sd, ground) = ground_data(&model.h_f)?;
    let rp = model.r_padded();
    let u_f = ff_shifted_encoding(&ff_select_prepare(model)?)?;
    let shifted = DenseOperator::identity(model.h_f.dim())?.sub(&model.h_f.scale(2.0 / rp as f64))?;
    let pinv = ff_pseudoinverse_encoding(&u_f, rp, sd.gap, eps)?;
    let target = pseudoinverse(&model.h_f, sd.gap / 2.0)?;
    Ok(vec![
        EncodingCheck::new("ff_shifted", &u_f, verify(&u_f, &shifted)?),
        EncodingCheck::new("ff_pseudoinverse", &pinv, verify(&pinv, &target)?),
        annihilation("ff_pseudoinverse_annihilation", &pinv, &ground)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_ff_model, Family, FfVariant};

    #[test]
    fn general_checks_pass() {
        for spec in [ModelSpec::tfim(2, 0.7), ModelSpec::tfim(3, 1.3), ModelSpec::new(Family::Xxz, 4, 0.5)] {
            let checks = encoding_checks(&spec, 1e-3).unwrap();
            assert_eq!(checks.len(), 8);
            for c in &checks {
                assert!(c.passed, "{spec:?}: {c:?}");
            }
        }
    }

    #[test]
    fn ff_checks_pass() {
        for v in [FfVariant::Chain, FfVariant::ProjectorPair] {
            let m = build_ff_model(if matches!(v, FfVariant::Chain) { 3 } else { 2 }, v).unwrap();
            for c in ff_encoding_checks(&m, 1e-3).unwrap() {
                assert!(c.passed, "{c:?}");
            }
        }
    }

    #[test]
    fn degenerate_model_is_rejected() {
        assert!(matches!(encoding_checks(&ModelSpec::tfim(3, 0.0), 1e-3), Err(Error::DegenerateGround { .. })));
        assert!(encoding_checks(&ModelSpec::tfim(2, 1.0), 0.0).is_err());
    }
}
