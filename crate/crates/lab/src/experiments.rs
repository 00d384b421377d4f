//! Seeded parameter sweeps producing one table row per trial and scheme.
//!
//! Trial `i` at grid position `g` uses `sub_seed(master_seed, g * trials + i)`;
//! inside a trial, the frame or measurement matrix draws from
//! `sub_seed(trial_seed, 0)` and the signal from `sub_seed(trial_seed, 1)`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use noiseshape::compressive::{
    gen_compressible, gen_sparse, one_stage_condensed_reconstruct, two_stage_reconstruct, DecoderSpec,
};
use noiseshape::duals::{build_beta_condensation, certify_condensed, certify_inverse_transfer, hinv_dual, v_dual};
use noiseshape::frames::{canonical_dual, generate_frame, random_matrix};
use noiseshape::linalg::{self, InfToTwoBound};
use noiseshape::noise_shaping::{greedy_quantize, msq_quantize, TransferOperator};
use noiseshape::seed::{self, sub_seed};
use noiseshape::Error;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::adc::{AdcParams, AdcRun, AdcScheme};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{LabError, LabResult};
use crate::formats::{Cell, Table};

/// Uniform draw from the Euclidean unit ball of `R^k`.
pub fn unit_ball_point(k: usize, seed: u64) -> DVector<f64> {
    let mut rng = seed::rng(seed);
    let dir = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let radius = rng.random::<f64>().powf(1.0 / k as f64);
    let norm = dir.norm();
    if norm == 0.0 {
        dir
    } else {
        dir * (radius / norm)
    }
}

pub fn columns(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::FrameDecay => {
            &["trial", "seed", "scheme", "m", "lambda", "err2", "bound", "sigma_min", "u_inf", "overloaded", "runtime_ms"]
        }
        ExperimentKind::BetaDecay => &[
            "trial", "seed", "scheme", "lambda_prime", "m", "err2", "bound", "sigma_min", "u_inf", "overloaded",
            "runtime_ms",
        ],
        ExperimentKind::SingularValues => {
            &["trial", "seed", "frame", "m", "lambda", "r", "alpha", "sigma_min", "threshold", "pass", "runtime_ms"]
        }
        ExperimentKind::CsTwoStage => &[
            "trial", "seed", "m", "n", "k", "err2", "coarse_err2", "bound", "sigma_min", "u_inf", "eps_q",
            "overloaded", "support_recovered", "fell_back", "min_mag", "runtime_ms",
        ],
        ExperimentKind::CsCompressible => &[
            "trial", "seed", "m", "lambda_prime", "n", "k", "err2", "budget", "quant_term", "tail_term", "u_inf",
            "overloaded", "alphabet_condition", "runtime_ms",
        ],
        ExperimentKind::Adc => &[
            "trial", "seed", "scheme", "lambda", "m", "sup_error", "bound", "u_inf", "overloaded", "inband_energy",
            "inband_fraction", "runtime_ms",
        ],
    }
}

type Rows = Vec<Vec<Cell>>;

/// Runs the sweep described by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> LabResult<Table> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> =
        (0..cfg.grid.len()).flat_map(|g| (0..cfg.trials).map(move |i| (g, i))).collect();
    let per_job: Vec<Rows> = jobs
        .par_iter()
        .map(|&(g, i)| {
            let trial_seed = sub_seed(cfg.master_seed, (g * cfg.trials + i) as u64);
            let start = Instant::now();
            let mut rows = run_trial(cfg, cfg.grid[g], trial_seed)?;
            let runtime = if cfg.timing { Cell::Real(start.elapsed().as_secs_f64() * 1e3) } else { Cell::Empty };
            for r in &mut rows {
                r.insert(0, trial_seed.into());
                r.insert(0, i.into());
                r.push(runtime.clone());
            }
            Ok(rows)
        })
        .collect::<LabResult<_>>()?;
    let mut table = Table::new(columns(cfg.kind).iter().copied());
    table.metadata.push(format!("noiseshape experiment {}", cfg.kind.tag()));
    table.metadata.push(cfg.to_toml());
    for row in per_job.into_iter().flatten() {
        table.push(row);
    }
    Ok(table)
}

/// Runs the sweep and writes it to `cfg.output` when set.
pub fn run_and_write(cfg: &ExperimentConfig) -> LabResult<Table> {
    let table = run_experiment(cfg)?;
    if let Some(path) = &cfg.output {
        table.write(path)?;
    }
    Ok(table)
}

fn run_trial(cfg: &ExperimentConfig, x: usize, trial_seed: u64) -> LabResult<Rows> {
    let frame_seed = sub_seed(trial_seed, 0);
    let signal_seed = sub_seed(trial_seed, 1);
    match cfg.kind {
        ExperimentKind::FrameDecay => frame_decay(cfg, x, frame_seed, signal_seed),
        ExperimentKind::BetaDecay => beta_decay(cfg, x, frame_seed, signal_seed),
        ExperimentKind::SingularValues => census(cfg, x, frame_seed),
        ExperimentKind::CsTwoStage => cs_two_stage(cfg, x, frame_seed, signal_seed),
        ExperimentKind::CsCompressible => cs_compressible(cfg, x, frame_seed, signal_seed),
        ExperimentKind::Adc => adc(cfg, x, signal_seed),
    }
}

fn opt(v: f64, keep: bool) -> Cell {
    if keep {
        Cell::Real(v)
    } else {
        Cell::Empty
    }
}

fn frame_decay(cfg: &ExperimentConfig, m: usize, frame_seed: u64, signal_seed: u64) -> LabResult<Rows> {
    let k = cfg.frame.k;
    let frame = generate_frame(&cfg.frame_kind()?, m, k, frame_seed)?;
    let x = unit_ball_point(k, signal_seed);
    let y = frame.analyze(&x)?;
    let r = cfg.quantizer.order;
    let h = TransferOperator::power_diff(r, m)?;
    let alphabet = cfg.quantizer.alphabet(h.strict_part_inf_norm())?;
    let lambda = m as f64 / k as f64;

    let sd = greedy_quantize(y.as_slice(), &h, &alphabet)?;
    let dual = hinv_dual(&frame, &h)?;
    let err = (&x - dual.reconstruct(&sd.q)?).norm();
    let sigma = linalg::sigma_min(&h.solve_columns(frame.matrix())?);
    let bound = match certify_inverse_transfer(&frame, &h, &sd) {
        Ok(c) => Some(c.bound()),
        Err(Error::Overloaded) => None,
        Err(e) => return Err(e.into()),
    };

    let msq = msq_quantize(y.as_slice(), &alphabet);
    let canon = canonical_dual(&frame)?;
    let msq_err = (&x - canon.reconstruct(&msq.q)?).norm();
    let msq_bound = InfToTwoBound::of(canon.matrix()).best() * msq.u_inf;

    Ok(vec![
        vec![
            h.spec().to_string().into(),
            m.into(),
            lambda.into(),
            err.into(),
            bound.into(),
            sigma.into(),
            sd.u_inf.into(),
            sd.overloaded.into(),
        ],
        vec![
            "msq".into(),
            m.into(),
            lambda.into(),
            msq_err.into(),
            opt(msq_bound, !msq.overloaded),
            linalg::sigma_min(frame.matrix()).into(),
            msq.u_inf.into(),
            msq.overloaded.into(),
        ],
    ])
}

fn beta_decay(cfg: &ExperimentConfig, lambda_prime: usize, frame_seed: u64, signal_seed: u64) -> LabResult<Rows> {
    let k = cfg.frame.k;
    let q = &cfg.quantizer;
    let m = q.blocks * lambda_prime;
    let frame = generate_frame(&cfg.frame_kind()?, m, k, frame_seed)?;
    let x = unit_ball_point(k, signal_seed);
    let y = frame.analyze(&x)?;
    let h = TransferOperator::beta_block(q.beta, q.blocks, m)?;
    let alphabet = q.alphabet(h.strict_part_inf_norm())?;
    let quant = greedy_quantize(y.as_slice(), &h, &alphabet)?;
    let (v, _) = build_beta_condensation(q.beta, q.blocks, m)?;
    let dual = v_dual(&frame, &v)?;
    let err = (&x - dual.reconstruct(&quant.q)?).norm();
    let sigma = linalg::sigma_min(&(v.matrix() * frame.matrix()));
    let bound = match certify_condensed(&frame, &v, &h, &quant) {
        Ok(c) => Some(c.bound()),
        Err(Error::Overloaded) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(vec![vec![
        h.spec().to_string().into(),
        lambda_prime.into(),
        m.into(),
        err.into(),
        bound.into(),
        sigma.into(),
        quant.u_inf.into(),
        quant.overloaded.into(),
    ]])
}

/// `λ^{α(r − 1/2)} √m` with `λ = m / k`.
pub fn census_threshold(m: usize, k: usize, r: u32, alpha: f64) -> f64 {
    let lambda = m as f64 / k as f64;
    lambda.powf(alpha * (r as f64 - 0.5)) * (m as f64).sqrt()
}

fn census(cfg: &ExperimentConfig, m: usize, frame_seed: u64) -> LabResult<Rows> {
    let k = cfg.frame.k;
    let r = cfg.quantizer.order;
    let alpha = cfg.census.alpha;
    let frame = generate_frame(&cfg.frame_kind()?, m, k, frame_seed)?;
    let h = TransferOperator::power_diff(r, m)?;
    let sigma = linalg::sigma_min(&h.solve_columns(frame.matrix())?);
    let threshold = census_threshold(m, k, r, alpha);
    Ok(vec![vec![
        cfg.frame.kind.clone().into(),
        m.into(),
        (m as f64 / k as f64).into(),
        r.into(),
        alpha.into(),
        sigma.into(),
        threshold.into(),
        (sigma >= threshold).into(),
    ]])
}

/// Decoder configured by the CS section.
pub fn decoder_spec(cfg: &ExperimentConfig) -> LabResult<DecoderSpec> {
    match cfg.cs.decoder.as_str() {
        "omp" => Ok(DecoderSpec::omp(cfg.cs.sparsity)),
        "iht" => Ok(DecoderSpec::iht(cfg.cs.sparsity)),
        other => Err(LabError::Config(format!("unknown decoder `{other}`"))),
    }
}

fn measurement_matrix(cfg: &ExperimentConfig, m: usize, seed: u64) -> LabResult<DMatrix<f64>> {
    Ok(random_matrix(&cfg.frame_kind()?, m, cfg.cs.n, seed)?)
}

fn cs_two_stage(cfg: &ExperimentConfig, m: usize, frame_seed: u64, signal_seed: u64) -> LabResult<Rows> {
    let (n, k) = (cfg.cs.n, cfg.cs.sparsity);
    let phi = measurement_matrix(cfg, m, frame_seed)?;
    let signal = gen_sparse(n, k, cfg.cs.min_mag, signal_seed)?;
    let y = &phi * signal.x();
    let h = TransferOperator::power_diff(cfg.quantizer.order, m)?;
    let alphabet = cfg.quantizer.alphabet(h.strict_part_inf_norm())?;
    let quant = greedy_quantize(y.as_slice(), &h, &alphabet)?;
    let out = two_stage_reconstruct(&phi, &quant, &h, &decoder_spec(cfg)?)?;
    let eps_q = (&y - DVector::from_column_slice(&quant.q)).norm() / (m as f64).sqrt();
    Ok(vec![vec![
        m.into(),
        n.into(),
        k.into(),
        (&out.fine - signal.x()).norm().into(),
        (&out.coarse.x - signal.x()).norm().into(),
        out.certificate.map(|c| c.bound()).into(),
        out.certificate.map(|c| c.sigma_min).into(),
        quant.u_inf.into(),
        eps_q.into(),
        quant.overloaded.into(),
        (out.support == signal.support()).into(),
        out.fell_back.into(),
        signal.min_mag().into(),
    ]])
}

fn cs_compressible(cfg: &ExperimentConfig, m: usize, frame_seed: u64, signal_seed: u64) -> LabResult<Rows> {
    let (n, k) = (cfg.cs.n, cfg.cs.sparsity);
    let q = &cfg.quantizer;
    let lambda_prime = m / q.blocks;
    let phi = measurement_matrix(cfg, m, frame_seed)?;
    let signal = gen_compressible(n, cfg.cs.decay, signal_seed)?;
    let y = &phi * signal.x();
    let h = TransferOperator::beta_block(q.beta, q.blocks, m)?;
    let alphabet = q.alphabet(h.strict_part_inf_norm())?;
    let quant = greedy_quantize(y.as_slice(), &h, &alphabet)?;
    let (v, _) = build_beta_condensation(q.beta, q.blocks, m)?;
    let quant_term = (q.blocks as f64).sqrt() * q.beta.powi(-(lambda_prime as i32)) * alphabet.delta();
    let tail_term = signal.best_k_term_error(k) / (k as f64).sqrt();
    let (err, budget) = match one_stage_condensed_reconstruct(&phi, &quant, &v, &h, &decoder_spec(cfg)?) {
        Ok(out) => (Some((&out.x - signal.x()).norm()), Some(out.budget)),
        Err(Error::Overloaded) => (None, None),
        Err(e) => return Err(e.into()),
    };
    Ok(vec![vec![
        m.into(),
        lambda_prime.into(),
        n.into(),
        k.into(),
        err.into(),
        budget.into(),
        quant_term.into(),
        tail_term.into(),
        quant.u_inf.into(),
        quant.overloaded.into(),
        // β + 2√N/δ ≤ L
        (q.beta + 2.0 * (n as f64).sqrt() / alphabet.delta() <= alphabet.levels() as f64).into(),
    ]])
}

/// One two-stage compressive run at `m` measurements with the signal and
/// matrix seeded as in trial `seed`. Columns `index,x,coarse,fine`.
pub fn cs_single_run(cfg: &ExperimentConfig, m: usize, seed: u64) -> LabResult<Table> {
    let n = cfg.cs.n;
    let phi = measurement_matrix(cfg, m, sub_seed(seed, 0))?;
    let signal = gen_sparse(n, cfg.cs.sparsity, cfg.cs.min_mag, sub_seed(seed, 1))?;
    let y = &phi * signal.x();
    let h = TransferOperator::power_diff(cfg.quantizer.order, m)?;
    let alphabet = cfg.quantizer.alphabet(h.strict_part_inf_norm())?;
    let quant = greedy_quantize(y.as_slice(), &h, &alphabet)?;
    let out = two_stage_reconstruct(&phi, &quant, &h, &decoder_spec(cfg)?)?;
    let mut t = Table::new(["index", "x", "coarse", "fine"]);
    t.metadata.push(format!(
        "cs run m={m} n={n} k={} order={} levels={} delta={} seed={seed} overloaded={} fell_back={} err2={} coarse_err2={} bound={}",
        cfg.cs.sparsity,
        cfg.quantizer.order,
        alphabet.levels(),
        crate::formats::fmt_g17(alphabet.delta()),
        quant.overloaded,
        out.fell_back,
        crate::formats::fmt_g17((&out.fine - signal.x()).norm()),
        crate::formats::fmt_g17((&out.coarse.x - signal.x()).norm()),
        out.certificate.map_or("none".into(), |c| crate::formats::fmt_g17(c.bound())),
    ));
    for i in 0..n {
        t.push(vec![i.into(), signal.x()[i].into(), out.coarse.x[i].into(), out.fine[i].into()]);
    }
    Ok(t)
}

/// ADC parameters from the configuration; the alphabet is sized for the
/// highest ΣΔ order in the run.
pub fn adc_params(cfg: &ExperimentConfig) -> LabResult<AdcParams> {
    let r = cfg.quantizer.order.max(1);
    let alphabet = cfg.quantizer.alphabet(((1u64 << r) - 1) as f64)?;
    Ok(AdcParams {
        bandwidth: cfg.adc.bandwidth,
        eps0: cfg.adc.eps0,
        periods: cfg.adc.periods,
        amplitude: cfg.quantizer.amplitude,
        levels: alphabet.levels(),
        delta: alphabet.delta(),
    })
}

fn adc(cfg: &ExperimentConfig, lambda: usize, signal_seed: u64) -> LabResult<Rows> {
    let params = adc_params(cfg)?;
    let alphabet = noiseshape::noise_shaping::Alphabet::new(params.levels, params.delta)?;
    let run = AdcRun::new(&params, lambda as f64, signal_seed)?;
    let m = run.reconstructor.sampler().per_period();
    let schemes = std::iter::once(AdcScheme::Msq).chain((1..=cfg.quantizer.order).map(AdcScheme::SigmaDelta));
    let mut rows = Vec::new();
    for scheme in schemes {
        let o = run.run(scheme, &alphabet)?;
        rows.push(vec![
            scheme.tag().into(),
            lambda.into(),
            m.into(),
            o.sup_error.into(),
            opt(o.bound, !o.overloaded),
            o.u_inf.into(),
            o.overloaded.into(),
            o.energy.inband.into(),
            o.energy.fraction().into(),
        ]);
    }
    Ok(rows)
}

/// Error spectra of MSQ and first and second order ΣΔ on one signal.
pub fn spectrum_table(params: &AdcParams, lambda: f64, seed: u64) -> LabResult<Table> {
    let alphabet = noiseshape::noise_shaping::Alphabet::new(params.levels, params.delta)?;
    let run = AdcRun::new(params, lambda, seed)?;
    let outs: Vec<_> = [AdcScheme::Msq, AdcScheme::SigmaDelta(1), AdcScheme::SigmaDelta(2)]
        .iter()
        .map(|&s| run.run(s, &alphabet))
        .collect::<LabResult<_>>()?;
    let signal = crate::adc::noise_spectrum(&run.samples);
    let mut t = Table::new(["freq_index", "magnitude_msq", "magnitude_sd1", "magnitude_sd2", "signal_magnitude"]);
    t.metadata.push(format!(
        "adc spectrum bandwidth={} lambda={} periods={} eps0={} levels={} delta={} amplitude={} seed={} band_index={}",
        params.bandwidth,
        lambda,
        params.periods,
        params.eps0,
        params.levels,
        params.delta,
        params.amplitude,
        seed,
        run.reconstructor.band_index()
    ));
    for (j, s) in signal.iter().enumerate() {
        t.push(vec![j.into(), outs[0].spectrum[j].into(), outs[1].spectrum[j].into(), outs[2].spectrum[j].into(), (*s).into()]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_draws() {
        for s in 0..50 {
            let x = unit_ball_point(3, s);
            assert!(x.norm() <= 1.0);
        }
        assert_eq!(unit_ball_point(2, 4), unit_ball_point(2, 4));
    }

    #[test]
    fn census_threshold_value() {
        // λ = 64, 64^{0.25} √512 = 2√2 · 16√2 = 64
        assert!((census_threshold(512, 8, 1, 0.5) - 64.0).abs() < 1e-12);
    }

    #[test]
    fn columns_match_rows() {
        let mut small = Vec::new();
        for (kind, grid) in [
            (ExperimentKind::FrameDecay, vec![8, 16]),
            (ExperimentKind::BetaDecay, vec![2, 3]),
            (ExperimentKind::SingularValues, vec![16]),
            (ExperimentKind::CsTwoStage, vec![40]),
            (ExperimentKind::CsCompressible, vec![16]),
            (ExperimentKind::Adc, vec![4]),
        ] {
            let mut c = ExperimentConfig::new(kind, grid);
            c.trials = 2;
            c.cs.n = 32;
            c.cs.sparsity = 2;
            c.quantizer.delta = Some(0.5);
            small.push(c);
        }
        small[1].quantizer.delta = None;
        small[1].quantizer.levels = Some(4);
        small[1].quantizer.amplitude = 4.0;
        small[4].quantizer.delta = None;
        small[4].quantizer.levels = Some(8);
        small[4].quantizer.amplitude = 4.0;
        small[3].quantizer.delta = Some(0.05);
        small[3].quantizer.amplitude = 6.0;
        for c in &small {
            let t = run_experiment(c).unwrap();
            assert!(!t.rows.is_empty());
            assert!(t.rows.iter().all(|r| r.len() == t.header.len()), "{:?}", c.kind);
            assert_eq!(t.render(), run_experiment(c).unwrap().render());
        }
    }
}
