//! Experiment configuration, read from TOML or assembled from flags.

use std::path::{Path, PathBuf};

use noiseshape::frames::FrameKind;
use noiseshape::noise_shaping::Alphabet;
use serde::{Deserialize, Serialize};

use crate::error::{config, LabResult};
use crate::formats::read_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FrameDecay,
    BetaDecay,
    SingularValues,
    CsTwoStage,
    CsCompressible,
    Adc,
}

impl ExperimentKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ExperimentKind::FrameDecay => "frame-decay",
            ExperimentKind::BetaDecay => "beta-decay",
            ExperimentKind::SingularValues => "singular-values",
            ExperimentKind::CsTwoStage => "cs-two-stage",
            ExperimentKind::CsCompressible => "cs-compressible",
            ExperimentKind::Adc => "adc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// `m` for frame, census and CS sweeps; `λ′` for beta sweeps; `λ` for ADC.
    pub grid: Vec<usize>,
    /// Fill the `runtime_ms` column. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub frame: FrameSection,
    #[serde(default)]
    pub quantizer: QuantizerSection,
    #[serde(default)]
    pub census: CensusSection,
    #[serde(default)]
    pub cs: CsSection,
    #[serde(default)]
    pub adc: AdcSection,
}

fn default_trials() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameSection {
    /// Frame tag, e.g. `roots-of-unity`, `gaussian`, `harmonic-semicircle`.
    pub kind: String,
    /// Ambient dimension.
    pub k: usize,
}

impl Default for FrameSection {
    fn default() -> Self {
        Self { kind: "gaussian".into(), k: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantizerSection {
    /// ΣΔ order `r`.
    pub order: u32,
    pub beta: f64,
    /// Number of beta blocks `p`.
    pub blocks: usize,
    /// Alphabet size; derived from the stability condition when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    /// Alphabet half-spacing; derived from `levels` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Assumed bound on `‖y‖∞` for the stability condition.
    pub amplitude: f64,
}

impl Default for QuantizerSection {
    fn default() -> Self {
        Self { order: 1, beta: 1.5, blocks: 2, levels: None, delta: None, amplitude: 1.0 }
    }
}

impl QuantizerSection {
    /// Alphabet satisfying `feedback + amplitude / δ ≤ L` for whichever of
    /// `L`, `δ` is not given.
    pub fn alphabet(&self, feedback: f64) -> LabResult<Alphabet> {
        let a = match (self.levels, self.delta) {
            (Some(l), Some(d)) => Alphabet::new(l, d)?,
            (None, Some(d)) => Alphabet::for_stability(feedback, self.amplitude, d)?,
            (Some(l), None) => {
                let room = l as f64 - feedback;
                if !(room > 0.0) {
                    return Err(config(format!("{l} levels cannot absorb feedback norm {feedback}")));
                }
                Alphabet::new(l, self.amplitude / room)?
            }
            (None, None) => return Err(config("quantizer needs `levels`, `delta`, or both")),
        };
        Ok(a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CensusSection {
    pub alpha: f64,
}

impl Default for CensusSection {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsSection {
    /// Signal dimension `N`.
    pub n: usize,
    /// Sparsity of generated signals and decoder target `k`.
    pub sparsity: usize,
    pub min_mag: f64,
    /// `omp` or `iht`.
    pub decoder: String,
    /// Power-law exponent for compressible signals.
    pub decay: f64,
}

impl Default for CsSection {
    fn default() -> Self {
        Self { n: 256, sparsity: 5, min_mag: 0.2, decoder: "omp".into(), decay: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdcSection {
    /// Band limit `B` (highest integer frequency).
    pub bandwidth: usize,
    /// Kernel transition width relative to `B`.
    pub eps0: f64,
    /// Periods in the simulated stream.
    pub periods: usize,
}

impl Default for AdcSection {
    fn default() -> Self {
        Self { bandwidth: 2, eps0: 0.25, periods: 5 }
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, grid: Vec<usize>) -> Self {
        Self {
            kind,
            master_seed: 0,
            trials: default_trials(),
            grid,
            timing: false,
            output: None,
            frame: FrameSection::default(),
            quantizer: QuantizerSection::default(),
            census: CensusSection::default(),
            cs: CsSection::default(),
            adc: AdcSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> LabResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        Self::from_toml(&read_text(path)?)
    }

    /// The configuration as TOML, without the output path.
    pub fn to_toml(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        toml::to_string(&c).expect("configuration serializes")
    }

    pub fn frame_kind(&self) -> LabResult<FrameKind> {
        self.frame.kind.parse().map_err(|_| config(format!("unknown frame kind `{}`", self.frame.kind)))
    }

    pub fn validate(&self) -> LabResult<()> {
        if self.trials == 0 {
            return Err(config("trials must be at least 1"));
        }
        if self.grid.is_empty() {
            return Err(config("grid is empty"));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) || self.grid[0] == 0 {
            return Err(config("grid must be positive and strictly increasing"));
        }
        if self.frame.k == 0 {
            return Err(config("frame.k must be positive"));
        }
        self.frame_kind()?;
        let q = &self.quantizer;
        if !(q.amplitude >= 0.0) {
            return Err(config("quantizer.amplitude must be non-negative"));
        }
        match self.kind {
            ExperimentKind::SingularValues => {
                if q.order == 0 {
                    return Err(config("census needs order r >= 1"));
                }
                if !(self.census.alpha > 0.0 && self.census.alpha < 1.0) {
                    return Err(config("census.alpha must lie in (0, 1)"));
                }
            }
            ExperimentKind::BetaDecay | ExperimentKind::CsCompressible => {
                if !(q.beta > 1.0) || q.blocks == 0 {
                    return Err(config("beta schemes need beta > 1 and blocks >= 1"));
                }
                if self.kind == ExperimentKind::BetaDecay && q.blocks < self.frame.k {
                    return Err(config("beta-decay needs quantizer.blocks >= frame.k"));
                }
            }
            _ => {}
        }
        if matches!(self.kind, ExperimentKind::CsCompressible) && self.grid.iter().any(|m| m % q.blocks != 0) {
            return Err(config("every m in the grid must be a multiple of quantizer.blocks"));
        }
        if matches!(self.kind, ExperimentKind::CsTwoStage | ExperimentKind::CsCompressible) {
            if self.cs.sparsity == 0 || self.cs.sparsity > self.cs.n {
                return Err(config("cs.sparsity must lie in 1..=cs.n"));
            }
            if !matches!(self.cs.decoder.as_str(), "omp" | "iht") {
                return Err(config(format!("unknown decoder `{}`", self.cs.decoder)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_and_full() {
        let c = ExperimentConfig::from_toml("kind = \"frame-decay\"\ngrid = [32, 64]\n").unwrap();
        assert_eq!(c.trials, 20);
        assert_eq!(c.frame.kind, "gaussian");
        let text = r#"
            kind = "beta-decay"
            master_seed = 9
            trials = 3
            grid = [2, 3, 4]
            [frame]
            kind = "gaussian"
            k = 2
            [quantizer]
            beta = 1.5
            blocks = 2
            levels = 4
            amplitude = 4.0
        "#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.quantizer.delta, None);
        let a = c.quantizer.alphabet(1.5).unwrap();
        assert_eq!(a.levels(), 4);
        assert!((a.delta() - 1.6).abs() < 1e-15);
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "kind = \"adc\"\ngrid = []\n",
            "kind = \"adc\"\ngrid = [4, 4]\n",
            "kind = \"adc\"\ngrid = [4]\ntrials = 0\n",
            "kind = \"adc\"\ngrid = [4]\ncolour = 1\n",
            "kind = \"warp\"\ngrid = [4]\n",
            "kind = \"singular-values\"\ngrid = [64]\n[census]\nalpha = 1.5\n",
            "kind = \"frame-decay\"\ngrid = [64]\n[frame]\nkind = \"spiral\"\n",
            "kind = \"cs-compressible\"\ngrid = [63]\n",
        ] {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn alphabet_rules() {
        let q = QuantizerSection { delta: Some(0.5), ..Default::default() };
        assert_eq!(q.alphabet(1.0).unwrap().levels(), 3);
        assert_eq!(q.alphabet(3.0).unwrap().levels(), 5);
        let q = QuantizerSection { levels: Some(2), delta: None, ..Default::default() };
        assert!(q.alphabet(3.0).is_err());
        let q = QuantizerSection { levels: None, delta: None, ..Default::default() };
        assert!(q.alphabet(1.0).is_err());
    }
}
