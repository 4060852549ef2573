//! Experiment configuration, its validation and its digest.

use crate::error::{HarnessError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use teq_core::exit::OptimizerSpec;
use teq_core::fiber::{FiberSpanConfig, LinkConfig, SsfmSettings};
use teq_core::ldpc::DegreeDistribution;
use teq_core::neural::{LossMode, TrainSpec};
use teq_core::signal::ModFormat;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationConfig {
    /// Bits per polarization per symbol (2: QPSK, 4: 16QAM, 6: 64QAM).
    pub m: usize,
    #[serde(default = "d_baud")]
    pub baud_gbd: f64,
    #[serde(default = "d_rolloff")]
    pub rolloff: f64,
    #[serde(default = "d_os")]
    pub oversampling: usize,
    #[serde(default = "d_one")]
    pub channels: usize,
    #[serde(default = "d_spacing")]
    pub spacing_ghz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub spans: usize,
    #[serde(default = "FiberSpanConfig::nzdsf_80km")]
    pub fiber: FiberSpanConfig,
    /// `None` switches ASE off.
    #[serde(default = "d_nf")]
    pub edfa_nf_db: Option<f64>,
    pub powers_dbm: Vec<f64>,
    #[serde(default)]
    pub ssfm: SsfmSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train_symbols: usize,
    pub test_symbols: usize,
    pub le_taps: usize,
    pub window: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            train_symbols: 1 << 15,
            test_symbols: 1 << 16,
            le_taps: 15,
            window: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualizerKind {
    Le,
    DnnNb,
    DnnBce,
    DnnTeq,
}

impl EqualizerKind {
    pub fn name(self) -> &'static str {
        match self {
            EqualizerKind::Le => "le",
            EqualizerKind::DnnNb => "dnn_nb",
            EqualizerKind::DnnBce => "dnn_bce",
            EqualizerKind::DnnTeq => "dnn_teq",
        }
    }

    pub fn loss_mode(self) -> Option<LossMode> {
        match self {
            EqualizerKind::Le => None,
            EqualizerKind::DnnNb => Some(LossMode::NbSoftmax),
            EqualizerKind::DnnBce => Some(LossMode::BceMultilabel),
            EqualizerKind::DnnTeq => Some(LossMode::TeqMinmax),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub width: usize,
    pub blocks: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    /// Defaults per loss when absent (1000 for the turbo model, 100 otherwise).
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub dropout: Option<f64>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            width: 128,
            blocks: 4,
            max_epochs: 500,
            patience: 13,
            learning_rate: 1e-3,
            batch_size: None,
            dropout: None,
        }
    }
}

/// Degree distribution of the LDPC code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CodeSpec {
    /// λ(x) = 0.1x² + 0.8x³ + 0.1x⁴, ρ(x) = x³⁰.
    Rate9_10,
    /// λ(x) = (2x² + 9x³ + x¹³)/12, ρ(x) = x²².
    Rate5_6,
    Explicit { dist: DegreeDistribution },
    /// Fixed variable side with a check-concentrated ρ of average `dc`.
    CheckAverage { var: Vec<(usize, f64)>, dc: f64 },
}

impl CodeSpec {
    pub fn distribution(&self) -> Result<DegreeDistribution> {
        Ok(match self {
            CodeSpec::Rate9_10 => DegreeDistribution::dvbs2_r9_10(),
            CodeSpec::Rate5_6 => DegreeDistribution::dvbs2_r5_6(),
            CodeSpec::Explicit { dist } => {
                dist.validate()?;
                dist.clone()
            }
            CodeSpec::CheckAverage { var, dc } => DegreeDistribution::check_concentrated(var.clone(), *dc)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeConfig {
    pub spec: CodeSpec,
    pub n: usize,
    pub bp_iterations: usize,
    pub outer_iterations: usize,
    /// Scale on the decoder extrinsic fed back to the turbo equalizer.
    pub feedback_scale: f64,
    pub seed: u64,
    pub interleaver_seed: u64,
    /// Stop a BER point after this many information-bit errors...
    pub min_errors: usize,
    /// ...or this many information bits, whichever comes first.
    pub max_info_bits: usize,
}

impl Default for CodeConfig {
    fn default() -> Self {
        Self {
            spec: CodeSpec::Rate9_10,
            n: 4800,
            bp_iterations: 4,
            outer_iterations: 3,
            feedback_scale: 0.5,
            seed: 1,
            interleaver_seed: 2,
            min_errors: 100,
            max_info_bits: 1 << 20,
        }
    }
}

/// Code family for the achievable-rate sweep: one variable side, several
/// average check degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    pub var: Vec<(usize, f64)>,
    pub check_degrees: Vec<f64>,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            var: DegreeDistribution::dvbs2_r5_6().var_degrees,
            check_degrees: vec![8.0, 11.0, 14.0, 18.0, 22.0, 30.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExitConfig {
    pub grid_points: usize,
    /// Launch power for the EXIT chart; the highest configured power if absent.
    #[serde(default)]
    pub power_dbm: Option<f64>,
}

impl Default for ExitConfig {
    fn default() -> Self {
        Self {
            grid_points: 11,
            power_dbm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("results") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "d_version")]
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub modulation: ModulationConfig,
    pub link: LinkSpec,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default = "d_equalizers")]
    pub equalizers: Vec<EqualizerKind>,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub code: CodeConfig,
    #[serde(default)]
    pub rate: RateConfig,
    #[serde(default)]
    pub exit: ExitConfig,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default = "d_one_u64")]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

fn d_version() -> u32 {
    CONFIG_VERSION
}
fn d_baud() -> f64 {
    34.0
}
fn d_rolloff() -> f64 {
    0.1
}
fn d_os() -> usize {
    4
}
fn d_one() -> usize {
    1
}
fn d_one_u64() -> u64 {
    1
}
fn d_spacing() -> f64 {
    37.4
}
fn d_nf() -> Option<f64> {
    Some(5.0)
}
fn d_equalizers() -> Vec<EqualizerKind> {
    vec![EqualizerKind::Le, EqualizerKind::DnnBce, EqualizerKind::DnnTeq]
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::InvalidConfig(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn digest(&self) -> String {
        let canon = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canon))
    }

    pub fn format(&self) -> Result<ModFormat> {
        Ok(ModFormat::square_qam(self.modulation.m)?)
    }

    pub fn baud(&self) -> f64 {
        self.modulation.baud_gbd * 1e9
    }

    pub fn link_at(&self, power_dbm: f64) -> LinkConfig {
        LinkConfig {
            spans: self.link.spans,
            span: self.link.fiber.clone(),
            edfa_nf_db: self.link.edfa_nf_db,
            launch_power_dbm: power_dbm,
        }
    }

    pub fn train_spec(&self, mode: LossMode, seed: u64) -> TrainSpec {
        let mut spec = TrainSpec::new(mode);
        spec.width = self.network.width;
        spec.blocks = self.network.blocks;
        spec.max_epochs = self.network.max_epochs;
        spec.patience = self.network.patience;
        spec.adam.lr = self.network.learning_rate;
        if let Some(b) = self.network.batch_size {
            spec.batch_size = b;
        }
        if let Some(d) = self.network.dropout {
            spec.dropout = d;
        }
        spec.seed = seed;
        spec
    }

    /// Launch power of the EXIT chart and optimizer runs.
    pub fn exit_power(&self) -> f64 {
        self.exit
            .power_dbm
            .unwrap_or_else(|| self.link.powers_dbm.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(invalid(format!("unsupported config version {}", self.version)));
        }
        let md = &self.modulation;
        if md.m == 0 || md.m % 2 != 0 || md.m > 8 {
            return Err(invalid(format!("m = {} is not a square QAM", md.m)));
        }
        if !(md.baud_gbd > 0.0 && md.baud_gbd < 1000.0) {
            return Err(invalid("baud rate out of range"));
        }
        if !(md.rolloff > 0.0 && md.rolloff <= 1.0) {
            return Err(invalid("rolloff must be in (0, 1]"));
        }
        if md.oversampling < 2 {
            return Err(invalid("oversampling must be at least 2"));
        }
        if md.channels == 0 || md.channels % 2 == 0 {
            return Err(invalid("channel count must be odd"));
        }
        if md.channels > 1 && md.spacing_ghz < md.baud_gbd * (1.0 + md.rolloff) {
            return Err(invalid("channel spacing is narrower than the signal bandwidth"));
        }
        let l = &self.link;
        if l.spans == 0 || l.spans > 100 {
            return Err(invalid("span count must be in 1..=100"));
        }
        l.fiber.validate()?;
        l.ssfm.validate(l.fiber.length_km)?;
        if let Some(nf) = l.edfa_nf_db {
            if !(0.0..=20.0).contains(&nf) {
                return Err(invalid("noise figure must be in [0, 20] dB"));
            }
        }
        if l.powers_dbm.is_empty() || l.powers_dbm.iter().any(|p| !(-30.0..=20.0).contains(p)) {
            return Err(invalid("launch powers must be non-empty and within [-30, 20] dBm"));
        }
        let d = &self.data;
        if d.window == 0 || d.window % 2 == 0 {
            return Err(invalid("window must be odd"));
        }
        if d.le_taps == 0 || d.le_taps % 2 == 0 {
            return Err(invalid("LE tap count must be odd"));
        }
        if d.train_symbols < 8 * d.le_taps || d.test_symbols == 0 {
            return Err(invalid("too few symbols"));
        }
        if self.equalizers.is_empty() {
            return Err(invalid("no equalizer selected"));
        }
        let nw = &self.network;
        if nw.width == 0 || nw.width >= 4096 || nw.blocks == 0 || nw.max_epochs == 0 {
            return Err(invalid("network topology or epoch budget is empty"));
        }
        if !(nw.learning_rate > 0.0) {
            return Err(invalid("learning rate must be positive"));
        }
        if let Some(dp) = nw.dropout {
            if !(0.0..1.0).contains(&dp) {
                return Err(invalid("dropout must be in [0, 1)"));
            }
        }
        let c = &self.code;
        c.spec.distribution()?;
        if c.n < 64 || c.bp_iterations == 0 || c.outer_iterations == 0 || c.min_errors == 0 {
            return Err(invalid("code length, iteration counts and error target must be positive"));
        }
        if !(c.feedback_scale > 0.0 && c.feedback_scale <= 1.0) {
            return Err(invalid("feedback scale must be in (0, 1]"));
        }
        let bits_per_symbol = 2 * md.m;
        let stream = d.test_symbols * bits_per_symbol;
        if stream < c.n {
            return Err(invalid(format!(
                "test burst carries {stream} bits, less than one length-{} codeword",
                c.n
            )));
        }
        if self.rate.check_degrees.iter().any(|&dc| !(dc >= 2.0)) {
            return Err(invalid("rate sweep check degrees must be at least 2"));
        }
        if self.exit.grid_points < 4 {
            return Err(invalid("EXIT grid needs at least 4 points"));
        }
        Ok(())
    }
}
