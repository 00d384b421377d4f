use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use noiseshape::duals::{build_beta_condensation, hinv_dual, v_dual};
use noiseshape::frames::{canonical_dual, generate_frame, FrameKind};
use noiseshape::noise_shaping::{greedy_quantize, msq_quantize, Alphabet, TransferOperator, TransferSpec};
use noiseshape_lab::adc::AdcParams;
use noiseshape_lab::config::{ExperimentConfig, ExperimentKind, QuantizerSection};
use noiseshape_lab::experiments::{cs_single_run, run_and_write, spectrum_table, unit_ball_point};
use noiseshape_lab::fit::{fit_slope, FitScale};
use noiseshape_lab::formats::{
    parse_frame, parse_quantization, quantization_table, read_text, render_dual, render_frame, write_text,
    ParsedTable, Table,
};
use noiseshape_lab::{LabError, LabResult};

/// Noise-shaping quantization for frames, compressive sampling and ADC.
#[derive(Debug, Parser)]
#[command(name = "noiseshape", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Frame files.
    Frame {
        #[command(subcommand)]
        action: FrameAction,
    },
    /// Quantize the frame coefficients of one signal.
    Quantize(QuantizeArgs),
    /// Apply a dual to a quantization file.
    Reconstruct(ReconstructArgs),
    /// Run a seeded sweep and write its CSV.
    Experiment(Box<ExperimentArgs>),
    /// Oversampled analog-to-digital conversion.
    Adc {
        #[command(subcommand)]
        action: AdcAction,
    },
    /// Compressive sampling.
    Cs {
        #[command(subcommand)]
        action: CsAction,
    },
    /// Median log-log (or semi-log) slope of a CSV column.
    Fit(FitArgs),
}

#[derive(Debug, Subcommand)]
enum FrameAction {
    Gen {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct AlphabetArgs {
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Bound on `‖y‖∞` used to size the alphabet.
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
}

impl AlphabetArgs {
    fn section(&self) -> QuantizerSection {
        QuantizerSection { levels: self.levels, delta: self.delta, amplitude: self.amplitude, ..Default::default() }
    }
}

#[derive(Debug, Args)]
struct QuantizeArgs {
    #[arg(long)]
    frame: PathBuf,
    /// Signal coordinates, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "x_seed")]
    x: Option<Vec<f64>>,
    /// Draw the signal uniformly from the unit ball instead.
    #[arg(long)]
    x_seed: Option<u64>,
    /// `msq`, `sd:r=N` or `beta:beta=B:p=P`.
    #[arg(long)]
    scheme: String,
    #[command(flatten)]
    alphabet: AlphabetArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum DualChoice {
    Canonical,
    Hinv,
    Vdual,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[arg(long)]
    frame: PathBuf,
    #[arg(long)]
    quant: PathBuf,
    #[arg(long, value_enum, default_value_t = DualChoice::Hinv)]
    dual: DualChoice,
    /// Also write the dual matrix here.
    #[arg(long)]
    dual_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    /// TOML configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    frame: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    sparsity: Option<usize>,
    #[arg(long)]
    min_mag: Option<f64>,
    #[arg(long)]
    decoder: Option<String>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    bandwidth: Option<usize>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long)]
    timing: bool,
}

impl ExperimentArgs {
    fn config(&self) -> LabResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let cfg = ExperimentConfig::load(path)?;
                if cfg.kind != self.kind {
                    return Err(LabError::Config(format!(
                        "config is for `{}`, not `{}`",
                        cfg.kind.tag(),
                        self.kind.tag()
                    )));
                }
                cfg
            }
            None => ExperimentConfig::new(self.kind, Vec::new()),
        };
        macro_rules! set {
            ($src:ident => $($dst:tt)+) => {
                if let Some(v) = &self.$src {
                    cfg.$($dst)+ = v.clone();
                }
            };
        }
        set!(seed => master_seed);
        set!(trials => trials);
        set!(grid => grid);
        set!(frame => frame.kind);
        set!(k => frame.k);
        set!(order => quantizer.order);
        set!(beta => quantizer.beta);
        set!(blocks => quantizer.blocks);
        set!(amplitude => quantizer.amplitude);
        set!(alpha => census.alpha);
        set!(n => cs.n);
        set!(sparsity => cs.sparsity);
        set!(min_mag => cs.min_mag);
        set!(decoder => cs.decoder);
        set!(decay => cs.decay);
        set!(bandwidth => adc.bandwidth);
        set!(eps0 => adc.eps0);
        set!(periods => adc.periods);
        if self.levels.is_some() {
            cfg.quantizer.levels = self.levels;
        }
        if self.delta.is_some() {
            cfg.quantizer.delta = self.delta;
        }
        if self.out.is_some() {
            cfg.output = self.out.clone();
        }
        cfg.timing |= self.timing;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
enum AdcAction {
    /// Error spectra of MSQ, first and second order ΣΔ on one signal.
    Sim {
        #[arg(long, default_value_t = 2)]
        bandwidth: usize,
        #[arg(long, default_value_t = 32.0)]
        lambda: f64,
        #[arg(long, default_value_t = 5)]
        periods: usize,
        #[arg(long, default_value_t = 0.25)]
        eps0: f64,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 0.9)]
        amplitude: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum CsAction {
    /// One two-stage reconstruction of a sparse signal.
    Run {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0.2)]
        min_mag: f64,
        #[arg(long, default_value_t = 1)]
        order: u32,
        #[arg(long, default_value = "gaussian")]
        matrix: String,
        #[arg(long, default_value = "omp")]
        decoder: String,
        #[command(flatten)]
        alphabet: AlphabetArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    /// Fit `log10 y` against `x` instead of `log10 x`.
    #[arg(long)]
    semilog: bool,
    /// Keep only rows with `column=value`.
    #[arg(long = "where")]
    filter: Option<String>,
}

fn emit(text: &str, out: Option<&PathBuf>) -> LabResult<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn transfer_for(scheme: &str, m: usize) -> LabResult<Option<TransferOperator>> {
    if scheme == "msq" {
        return Ok(None);
    }
    let spec: TransferSpec = scheme.parse()?;
    Ok(Some(TransferOperator::build(&spec, m)?))
}

fn quantize(args: &QuantizeArgs) -> LabResult<()> {
    let (frame, _, _) = parse_frame(&read_text(&args.frame)?)?;
    let x = match (&args.x, args.x_seed) {
        (Some(v), _) => DVector::from_vec(v.clone()),
        (None, Some(seed)) => unit_ball_point(frame.k(), seed),
        (None, None) => return Err(LabError::Config("give --x or --x-seed".into())),
    };
    let y = frame.analyze(&x)?;
    let h = transfer_for(&args.scheme, frame.m())?;
    let section = args.alphabet.section();
    let feedback = h.as_ref().map_or(0.0, |h| h.strict_part_inf_norm());
    let alphabet = section.alphabet(feedback)?;
    let quant = match &h {
        Some(h) => greedy_quantize(y.as_slice(), h, &alphabet)?,
        None => msq_quantize(y.as_slice(), &alphabet),
    };
    if quant.overloaded {
        eprintln!("warning: quantizer overloaded (‖u‖∞ = {})", quant.u_inf);
    }
    emit(&quantization_table(&args.scheme, &alphabet, y.as_slice(), &quant).render(), args.out.as_ref())
}

fn reconstruct(args: &ReconstructArgs) -> LabResult<()> {
    let (frame, _, _) = parse_frame(&read_text(&args.frame)?)?;
    let (scheme, q) = parse_quantization(&read_text(&args.quant)?)?;
    if q.len() != frame.m() {
        return Err(LabError::Format(format!("{} quantized values for a frame with m = {}", q.len(), frame.m())));
    }
    let h = transfer_for(&scheme, frame.m())?;
    let dual = match (args.dual, &h) {
        (DualChoice::Canonical, _) | (_, None) => canonical_dual(&frame)?,
        (DualChoice::Hinv, Some(h)) => hinv_dual(&frame, h)?,
        (DualChoice::Vdual, Some(h)) => match h.spec() {
            TransferSpec::BetaBlock { beta, blocks } => {
                let (v, _) = build_beta_condensation(*beta, *blocks, frame.m())?;
                v_dual(&frame, &v)?
            }
            _ => hinv_dual(&frame, h)?,
        },
    };
    if let Some(path) = &args.dual_out {
        write_text(path, &render_dual(&dual))?;
    }
    let xhat = dual.reconstruct(&q)?;
    let mut t = Table::new(["index", "x_hat"]);
    t.metadata.push(format!("reconstruction dual={} scheme={scheme}", dual.label()));
    for (i, v) in xhat.iter().enumerate() {
        t.push(vec![i.into(), (*v).into()]);
    }
    emit(&t.render(), args.out.as_ref())
}

fn run(cli: Cli) -> LabResult<()> {
    match cli.command {
        Command::Frame { action: FrameAction::Gen { kind, m, k, seed, out } } => {
            let kind: FrameKind = kind.parse()?;
            let frame = generate_frame(&kind, m, k, seed)?;
            emit(&render_frame(&frame), out.as_ref())
        }
        Command::Quantize(args) => quantize(&args),
        Command::Reconstruct(args) => reconstruct(&args),
        Command::Experiment(args) => {
            let cfg = args.config()?;
            let table = run_and_write(&cfg)?;
            if cfg.output.is_none() {
                print!("{}", table.render());
            }
            Ok(())
        }
        Command::Adc { action: AdcAction::Sim { bandwidth, lambda, periods, eps0, levels, delta, amplitude, seed, out } } => {
            Alphabet::new(levels, delta)?;
            let params = AdcParams { bandwidth, eps0, periods, amplitude, levels, delta };
            emit(&spectrum_table(&params, lambda, seed)?.render(), out.as_ref())
        }
        Command::Cs {
            action: CsAction::Run { m, n, k, min_mag, order, matrix, decoder, alphabet, seed, out },
        } => {
            let mut cfg = ExperimentConfig::new(ExperimentKind::CsTwoStage, vec![m]);
            cfg.frame.kind = matrix;
            cfg.quantizer = QuantizerSection { order, ..alphabet.section() };
            cfg.cs.n = n;
            cfg.cs.sparsity = k;
            cfg.cs.min_mag = min_mag;
            cfg.cs.decoder = decoder;
            cfg.validate()?;
            emit(&cs_single_run(&cfg, m, seed)?.render(), out.as_ref())
        }
        Command::Fit(args) => {
            let table = ParsedTable::read(&args.input)?;
            let filter = match &args.filter {
                Some(f) => Some(
                    f.split_once('=').ok_or_else(|| LabError::Config(format!("--where wants col=value, got `{f}`")))?,
                ),
                None => None,
            };
            let scale = if args.semilog { FitScale::SemiLog } else { FitScale::LogLog };
            let fit = fit_slope(&table, &args.x, &args.y, scale, filter)?;
            println!("slope={} intercept={} r2={} points={}", fit.slope, fit.intercept, fit.r2, fit.points);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
