use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::compressive::decoder::{decode, top_k_support, DecodeOutcome, DecoderSpec};
use crate::duals::{certify_inverse_transfer, hinv_dual, Condensation, CondensationKind, ErrorCertificate};
use crate::error::{check_len, invalid, Error, Result};
use crate::frames::Frame;
use crate::noise_shaping::{QuantizationResult, TransferOperator, TransferSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageOutcome {
    /// Fine estimate, zero off `support`.
    pub fine: DVector<f64>,
    /// Top-`k` support of the coarse estimate.
    pub support: Vec<usize>,
    pub coarse: DecodeOutcome,
    /// Present when the quantizer was stable and the fine stage ran.
    pub certificate: Option<ErrorCertificate>,
    /// `Φ_T̃` was rank-deficient and `fine` is the coarse estimate.
    pub fell_back: bool,
}

/// Coarse robust decoding of `(Φ/√m, q/√m)`, then the `H⁻¹`-dual of the
/// columns on the recovered support applied to `q`.
pub fn two_stage_reconstruct(
    phi: &DMatrix<f64>,
    quant: &QuantizationResult,
    h: &TransferOperator,
    spec: &DecoderSpec,
) -> Result<TwoStageOutcome> {
    let m = phi.nrows();
    check_len(m, quant.q.len())?;
    check_len(m, h.size())?;
    let scale = 1.0 / libm::sqrt(m as f64);
    let q = DVector::from_column_slice(&quant.q);
    let coarse = decode(spec, &(phi * scale), &(&q * scale))?;
    let support = top_k_support(&coarse.x, spec.k);

    let fallback = |coarse: DecodeOutcome, support| {
        Ok(TwoStageOutcome { fine: coarse.x.clone(), support, coarse, certificate: None, fell_back: true })
    };
    if support.is_empty() || support.len() > m {
        return fallback(coarse, support);
    }
    let sub = match Frame::from_matrix(phi.select_columns(&support)) {
        Ok(f) => f,
        Err(Error::RankDeficient { .. }) => return fallback(coarse, support),
        Err(e) => return Err(e),
    };
    let dual = match hinv_dual(&sub, h) {
        Ok(d) => d,
        Err(Error::RankDeficient { .. }) => return fallback(coarse, support),
        Err(e) => return Err(e),
    };
    let values = dual.reconstruct(&quant.q)?;
    let mut fine = DVector::zeros(phi.ncols());
    for (&i, &v) in support.iter().zip(values.iter()) {
        fine[i] = v;
    }
    let certificate = match certify_inverse_transfer(&sub, h, quant) {
        Ok(c) => Some(c),
        Err(Error::Overloaded) => None,
        Err(e) => return Err(e),
    };
    Ok(TwoStageOutcome { fine, support, coarse, certificate, fell_back: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneStageOutcome {
    pub x: DVector<f64>,
    pub decode: DecodeOutcome,
    /// `√p β^{−λ′} ‖u‖∞`, the bound on `‖VΦx − Vq‖₂`.
    pub budget: f64,
    /// Factor applied to `(VΦ, Vq)` before decoding.
    pub scale: f64,
}

/// Decodes the beta-condensed system `(VΦ, Vq)`, rescaled so that columns
/// of `VΦ` have unit mean square norm.
pub fn one_stage_condensed_reconstruct(
    phi: &DMatrix<f64>,
    quant: &QuantizationResult,
    v: &Condensation,
    h: &TransferOperator,
    spec: &DecoderSpec,
) -> Result<OneStageOutcome> {
    let m = phi.nrows();
    check_len(m, quant.q.len())?;
    check_len(m, v.matrix().ncols())?;
    check_len(m, h.size())?;
    let (beta, blocks, block_len) = match (v.kind(), h.spec()) {
        (CondensationKind::Beta { beta, blocks, block_len }, TransferSpec::BetaBlock { beta: hb, blocks: hp })
            if beta == hb && blocks == hp =>
        {
            (*beta, *blocks, *block_len)
        }
        _ => return Err(invalid("one-stage decoding needs a matching beta condensation and transfer")),
    };
    if quant.overloaded {
        return Err(Error::Overloaded);
    }
    let condensed = v.matrix() * phi;
    let frob = condensed.norm();
    let scale = if frob > 0.0 { libm::sqrt(phi.ncols() as f64) / frob } else { 1.0 };
    let vq = DVector::from_vec(v.apply(&quant.q)?);
    let out = decode(spec, &(condensed * scale), &(vq * scale))?;
    let budget = libm::sqrt(blocks as f64) * libm::pow(beta, -(block_len as f64)) * quant.u_inf;
    Ok(OneStageOutcome { x: out.x.clone(), decode: out, budget, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressive::{gen_compressible, gen_sparse};
    use crate::duals::build_beta_condensation;
    use crate::noise_shaping::{greedy_quantize, Alphabet};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::seed::rng(seed);
        DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn exact(y: &DVector<f64>) -> QuantizationResult {
        QuantizationResult { q: y.as_slice().into(), u: alloc::vec![0.0; y.len()], overloaded: false, u_inf: 0.0 }
    }

    #[test]
    fn unquantized_identity_like() {
        let phi = DMatrix::<f64>::identity(40, 30);
        let s = gen_sparse(30, 4, 0.2, 2).unwrap();
        let y = &phi * s.x();
        let h = TransferOperator::power_diff(2, 40).unwrap();
        let out = two_stage_reconstruct(&phi, &exact(&y), &h, &DecoderSpec::omp(4)).unwrap();
        assert!(!out.fell_back);
        assert!((&out.fine - s.x()).amax() < 1e-12);
        assert_eq!(out.certificate.unwrap().bound(), 0.0);
    }

    #[test]
    fn two_stage_recovers_support() {
        let (n, m, k) = (256, 160, 5);
        let phi = gaussian(m, n, 40);
        let s = gen_sparse(n, k, 0.3, 41).unwrap();
        let y = &phi * s.x();
        let h = TransferOperator::power_diff(2, m).unwrap();
        let delta = 0.01;
        let a = Alphabet::for_stability(h.strict_part_inf_norm(), y.amax(), delta).unwrap();
        let quant = greedy_quantize(y.as_slice(), &h, &a).unwrap();
        assert!(!quant.overloaded);
        for spec in [DecoderSpec::omp(k), DecoderSpec::iht(k)] {
            let out = two_stage_reconstruct(&phi, &quant, &h, &spec).unwrap();
            assert_eq!(out.support, s.support());
            let err = (&out.fine - s.x()).norm();
            let cert = out.certificate.unwrap();
            let sub = phi.select_columns(s.support());
            let eq_bound = libm::sqrt(m as f64) * quant.u_inf
                / crate::linalg::sigma_min(&h.solve_columns(&sub).unwrap());
            assert!(cert.bound() <= eq_bound * (1.0 + 1e-12));
            assert!(cert.holds(err), "{err} vs {}", cert.bound());
            assert!(err <= (&out.coarse.x - s.x()).norm());
        }
    }

    #[test]
    fn one_stage_sparse_noise_vanishes() {
        let (n, p, beta) = (128, 24, 2.0);
        let s = gen_sparse(n, 3, 0.3, 7).unwrap();
        let mut prev = f64::INFINITY;
        for lam in [2usize, 6, 12, 20] {
            let m = p * lam;
            let phi = gaussian(m, n, 8);
            let y = &phi * s.x();
            let h = TransferOperator::beta_block(beta, p, m).unwrap();
            let (v, _) = build_beta_condensation(beta, p, m).unwrap();
            let a = Alphabet::for_stability(h.strict_part_inf_norm(), y.amax(), 0.5).unwrap();
            let quant = greedy_quantize(y.as_slice(), &h, &a).unwrap();
            let out = one_stage_condensed_reconstruct(&phi, &quant, &v, &h, &DecoderSpec::omp(3)).unwrap();
            let err = (&out.x - s.x()).norm();
            assert!(err <= prev.max(1e-12));
            prev = err;
            assert!((out.budget - libm::sqrt(p as f64) * libm::pow(beta, -(lam as f64)) * quant.u_inf).abs() < 1e-15);
        }
        assert!(prev < 1e-5, "{prev}");
    }

    #[test]
    fn one_stage_zero_signal() {
        let (n, p, m) = (64, 8, 64);
        let phi = gaussian(m, n, 1);
        let h = TransferOperator::beta_block(1.5, p, m).unwrap();
        let (v, _) = build_beta_condensation(1.5, p, m).unwrap();
        let a = Alphabet::new(4, 0.5).unwrap();
        let quant = greedy_quantize(&alloc::vec![0.0; m], &h, &a).unwrap();
        let out = one_stage_condensed_reconstruct(&phi, &quant, &v, &h, &DecoderSpec::iht(4)).unwrap();
        assert!(out.x.norm() <= 10.0 * out.budget * out.scale + 1e-12, "{}", out.x.norm());
    }

    #[test]
    fn one_stage_rejects_mismatched_pair() {
        let phi = gaussian(16, 20, 1);
        let h = TransferOperator::power_diff(1, 16).unwrap();
        let (v, _) = build_beta_condensation(1.5, 4, 16).unwrap();
        let y = &phi * gen_compressible(20, 2.0, 1).unwrap().x() * 0.1;
        let a = Alphabet::new(16, 0.5).unwrap();
        let quant = greedy_quantize(y.as_slice(), &h, &a).unwrap();
        assert!(one_stage_condensed_reconstruct(&phi, &quant, &v, &h, &DecoderSpec::omp(2)).is_err());
    }
}
