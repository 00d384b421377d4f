use nalgebra::{DMatrix, DVector};
use noiseshape::compressive::{gen_sparse, rip_constant_bruteforce, top_k_support};
use noiseshape::duals::{build_beta_condensation, certify_condensed, certify_inverse_transfer, hinv_dual, v_dual};
use noiseshape::frames::{canonical_dual, generate_frame, random_matrix, FrameKind};
use noiseshape::noise_shaping::{greedy_quantize, Alphabet, TransferOperator};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Scheme {
    Sd(u32),
    Beta(f64),
}

fn scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![(1u32..=4).prop_map(Scheme::Sd), prop_oneof![Just(1.5), Just(2.0)].prop_map(Scheme::Beta)]
}

fn operator(s: &Scheme, m: usize) -> TransferOperator {
    match *s {
        Scheme::Sd(r) => TransferOperator::power_diff(r, m).unwrap(),
        Scheme::Beta(b) => TransferOperator::beta_block(b, 2, m).unwrap(),
    }
}

fn inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn stable_greedy_keeps_state_and_identity(
        s in scheme(),
        half in 2usize..40,
        seed in any::<u64>(),
        delta in 0.01f64..3.0,
        extra in 0usize..4,
    ) {
        let m = 2 * half;
        let h = operator(&s, m);
        let feedback = h.strict_part_inf_norm();
        let levels = feedback.ceil() as usize + 1 + extra;
        let amp = (levels as f64 - feedback) * delta;
        let mut rng = noiseshape::seed::rng(seed);
        let y: Vec<f64> = (0..m).map(|_| amp * (2.0 * rand::Rng::random::<f64>(&mut rng) - 1.0)).collect();
        let alphabet = Alphabet::new(levels, delta).unwrap();
        let quant = greedy_quantize(&y, &h, &alphabet).unwrap();
        prop_assert!(!quant.overloaded);
        prop_assert!(inf(&quant.u) <= delta * (1.0 + 1e-12));
        prop_assert!(quant.q.iter().all(|&q| alphabet.contains(q)));
        prop_assert!(quant.residual(&y, &h).unwrap() <= 1e-12 * (1.0 + inf(&y)));
    }

    #[test]
    fn hinv_dual_is_left_inverse(r in 1u32..=3, m in 8usize..48, k in 1usize..4, seed in any::<u64>()) {
        let frame = generate_frame(&FrameKind::Gaussian, m, k, seed).unwrap();
        let h = TransferOperator::power_diff(r, m).unwrap();
        let dual = hinv_dual(&frame, &h).unwrap();
        prop_assert!(dual.left_inverse_defect(&frame) <= 1e-10);
        prop_assert!(canonical_dual(&frame).unwrap().left_inverse_defect(&frame) <= 1e-10);
    }

    #[test]
    fn shaped_certificate_is_sound(r in 1u32..=3, m in 12usize..96, seed in any::<u64>(), delta in 0.05f64..0.5) {
        let frame = generate_frame(&FrameKind::Harmonic { semicircle: true }, m, 2, seed).unwrap();
        let x = DVector::from_vec(vec![0.4, -0.3]);
        let y = frame.analyze(&x).unwrap();
        let h = TransferOperator::power_diff(r, m).unwrap();
        let alphabet = Alphabet::for_stability(h.strict_part_inf_norm(), inf(y.as_slice()), delta).unwrap();
        let quant = greedy_quantize(y.as_slice(), &h, &alphabet).unwrap();
        let err = (&x - hinv_dual(&frame, &h).unwrap().reconstruct(&quant.q).unwrap()).norm();
        let cert = certify_inverse_transfer(&frame, &h, &quant).unwrap();
        prop_assert!(cert.holds(err), "{err} > {}", cert.bound());
    }

    #[test]
    fn beta_certificate_is_sound(lambda in 2usize..14, seed in any::<u64>(), beta in 1.2f64..2.0) {
        let m = 2 * lambda;
        let frame = generate_frame(&FrameKind::Gaussian, m, 2, seed).unwrap();
        let x = DVector::from_vec(vec![-0.2, 0.7]);
        let y = frame.analyze(&x).unwrap();
        let h = TransferOperator::beta_block(beta, 2, m).unwrap();
        let alphabet = Alphabet::for_stability(beta, inf(y.as_slice()), 0.4).unwrap();
        let quant = greedy_quantize(y.as_slice(), &h, &alphabet).unwrap();
        let (v, _) = build_beta_condensation(beta, 2, m).unwrap();
        let dual = v_dual(&frame, &v).unwrap();
        let err = (&x - dual.reconstruct(&quant.q).unwrap()).norm();
        let cert = certify_condensed(&frame, &v, &h, &quant).unwrap();
        prop_assert!(cert.holds(err), "{err} > {}", cert.bound());
    }

    // a perturbation below half the smallest magnitude keeps the top-k support
    #[test]
    fn top_k_recovers_support(n in 16usize..128, k in 1usize..6, seed in any::<u64>(), frac in 0.0f64..0.999) {
        let signal = gen_sparse(n, k, 0.1, seed).unwrap();
        let e = random_matrix(&FrameKind::Gaussian, n, 1, seed ^ 1).unwrap().column(0).into_owned();
        let eta = frac * signal.min_mag() / 2.0;
        let noisy = signal.x() + e.normalize() * eta;
        prop_assert_eq!(top_k_support(&noisy, k), signal.support().to_vec());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn rip_constant_grows_with_order(rows in 6usize..12, cols in 6usize..10, seed in any::<u64>()) {
        let phi = random_matrix(&FrameKind::Gaussian, rows, cols, seed).unwrap() / (rows as f64).sqrt();
        let mut last = 0.0;
        for s in 1..=3 {
            let d = rip_constant_bruteforce(&phi, s).unwrap();
            prop_assert!(d >= last - 1e-12);
            last = d;
        }
        // order 1 is the largest deviation of a squared column norm from 1
        let d1 = phi.column_iter().map(|c| (c.norm_squared() - 1.0).abs()).fold(0.0, f64::max);
        prop_assert!((rip_constant_bruteforce(&phi, 1).unwrap() - d1).abs() < 1e-10);
    }
}

#[test]
fn rip_of_orthonormal_columns_is_zero() {
    let q = DMatrix::<f64>::identity(6, 4);
    for s in 1..=4 {
        assert!(rip_constant_bruteforce(&q, s).unwrap() < 1e-12);
    }
}

// one β = 2 block of length 32: H⁻¹ reaches 2^31
#[test]
fn ill_conditioned_beta_dual_stays_a_left_inverse() {
    let frame = generate_frame(&FrameKind::RootsOfUnity, 32, 2, 0).unwrap();
    let h = TransferOperator::beta_block(2.0, 1, 32).unwrap();
    let dual = hinv_dual(&frame, &h).unwrap();
    assert!(dual.left_inverse_defect(&frame) <= 1e-10);
    assert!(dual.matrix().abs().max() < 1.0);
}
