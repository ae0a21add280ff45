//! Network configuration and the three reference presets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::column::{ColumnError, ColumnParams, StdpGate};
use crate::decode::{DecodeError, VoterParams};
use crate::encode::posneg::{FIELD_GRID, FIELD_WIDTH};
use crate::encode::stream::CLASSES;
use crate::fixed::{FixedError, Fraction, WeightFormat};
use crate::neuron::NeuronModel;

/// Lines per source column bundle feeding a layer-`n+1` column.
pub const BUNDLES: usize = 4;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("weight format: {0}")]
    Format(#[source] FixedError),
    #[error("a network needs 1 to 3 column layers, got {0}")]
    LayerCount(usize),
    #[error("layer 1 grid must be {FIELD_GRID}, got {0}")]
    FirstGrid(usize),
    #[error("layer {layer} grid must be {expected} (previous grid - 2), got {got}")]
    Grid { layer: usize, expected: usize, got: usize },
    #[error("layer {layer}: {source}")]
    Column {
        layer: usize,
        #[source]
        source: ColumnError,
    },
    #[error("layer {layer} voter ({which}): {source}")]
    Voter {
        layer: usize,
        which: &'static str,
        #[source]
        source: DecodeError,
    },
    #[error("last layer {0} has no [layers.voter] table")]
    MissingVoter(usize),
    #[error("voters must be 1 (low threshold only) or 2 (high and low), got {0}")]
    VoterCount(u8),
    #[error("classes must be {CLASSES}, got {0}")]
    Classes(usize),
    #[error("binarize_threshold must be in 1..=255, got {0}")]
    Threshold(u32),
    #[error("unknown preset {0:?}; expected ecvt, eccvt or ecccvt")]
    UnknownPreset(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoterSpec {
    pub theta_hi: Fraction,
    pub theta_lo: Fraction,
    pub tau_eff: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub grid: usize,
    pub q: usize,
    pub theta: u32,
    pub mu_plus: Fraction,
    pub mu_minus: Fraction,
    pub mu_search: Fraction,
    /// Used only when this is the last layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voter: Option<VoterSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub name: String,
    pub tau_max: u32,
    pub w_max: u32,
    pub frac_bits: u32,
    #[serde(default)]
    pub neuron_model: NeuronModel,
    #[serde(default)]
    pub stdp_gate: StdpGate,
    pub binarize_threshold: u32,
    pub voters: u8,
    pub classes: usize,
    pub layers: Vec<LayerSpec>,
}

/// Voter bank flavours, in bank order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BankKind {
    Lo,
    Hi,
}

impl BankKind {
    pub fn name(self) -> &'static str {
        match self {
            BankKind::Lo => "lo",
            BankKind::Hi => "hi",
        }
    }
}

type Frac = (u32, u32);
type PresetLayer = (usize, usize, u32, Frac, Frac, Frac, Frac, u32);

const PRESET_LAYERS: [PresetLayer; 3] = [
    // grid, q, theta, mu+-, mu_s, theta_hi, theta_lo, tau_eff
    (26, 12, 4, (1, 2), (1, 1024), (15, 32), (1, 32), 2),
    (24, 20, 8, (1, 4), (1, 512), (21, 32), (1, 64), 3),
    (22, 32, 8, (1, 4), (1, 512), (24, 32), (1, 64), 4),
];

pub const PRESETS: [&str; 3] = ["ecvt", "eccvt", "ecccvt"];

impl NetworkConfig {
    /// `ecvt`, `eccvt` or `ecccvt`: one, two or three column layers.
    pub fn preset(name: &str) -> Result<NetworkConfig, ConfigError> {
        let depth = match name {
            "ecvt" => 1,
            "eccvt" => 2,
            "ecccvt" => 3,
            other => return Err(ConfigError::UnknownPreset(other.to_owned())),
        };
        let frac = |(n, d): (u32, u32)| Fraction::new(n, d);
        let layers = PRESET_LAYERS[..depth]
            .iter()
            .map(|&(grid, q, theta, mu, mu_s, hi, lo, tau_eff)| LayerSpec {
                grid,
                q,
                theta,
                mu_plus: frac(mu),
                mu_minus: frac(mu),
                mu_search: frac(mu_s),
                voter: Some(VoterSpec {
                    theta_hi: frac(hi),
                    theta_lo: frac(lo),
                    tau_eff,
                }),
            })
            .collect();
        Ok(NetworkConfig {
            name: name.to_owned(),
            tau_max: 8,
            w_max: 8,
            frac_bits: 10,
            neuron_model: NeuronModel::Rif,
            stdp_gate: StdpGate::PostWta,
            binarize_threshold: 128,
            voters: 2,
            classes: CLASSES,
            layers,
        })
    }

    pub fn from_toml(text: &str) -> Result<NetworkConfig, ConfigError> {
        let cfg: NetworkConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn format(&self) -> Result<WeightFormat, ConfigError> {
        WeightFormat::new(self.frac_bits, self.w_max).map_err(ConfigError::Format)
    }

    /// Input lines per column of layer `n` (0-based).
    pub fn inputs(&self, n: usize) -> usize {
        match n {
            0 => FIELD_WIDTH,
            _ => BUNDLES * self.layers[n - 1].q,
        }
    }

    pub fn column_params(&self, n: usize) -> ColumnParams {
        let l = &self.layers[n];
        ColumnParams {
            p: self.inputs(n),
            q: l.q,
            theta: l.theta,
            mu_plus: l.mu_plus,
            mu_minus: l.mu_minus,
            mu_search: l.mu_search,
            gate: self.stdp_gate,
            model: self.neuron_model,
            tau_max: self.tau_max,
        }
    }

    pub fn last_layer(&self) -> &LayerSpec {
        self.layers.last().expect("validated: at least one layer")
    }

    pub fn voter_spec(&self) -> Option<&VoterSpec> {
        self.layers.last().and_then(|l| l.voter.as_ref())
    }

    /// Banks in evaluation order.
    pub fn banks(&self) -> Vec<BankKind> {
        match self.voters {
            1 => vec![BankKind::Lo],
            _ => vec![BankKind::Lo, BankKind::Hi],
        }
    }

    pub fn voter_params(&self, kind: BankKind) -> Option<VoterParams> {
        let v = self.voter_spec()?;
        Some(VoterParams {
            q: self.last_layer().q,
            r: self.classes,
            tau_eff: v.tau_eff,
            theta_v: match kind {
                BankKind::Lo => v.theta_lo,
                BankKind::Hi => v.theta_hi,
            },
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fmt = self.format()?;
        if self.layers.is_empty() || self.layers.len() > 3 {
            return Err(ConfigError::LayerCount(self.layers.len()));
        }
        if self.layers[0].grid != FIELD_GRID {
            return Err(ConfigError::FirstGrid(self.layers[0].grid));
        }
        for (n, pair) in self.layers.windows(2).enumerate() {
            let expected = pair[0].grid.saturating_sub(2);
            if pair[1].grid != expected || expected == 0 {
                return Err(ConfigError::Grid {
                    layer: n + 2,
                    expected,
                    got: pair[1].grid,
                });
            }
        }
        if !(1..=2).contains(&self.voters) {
            return Err(ConfigError::VoterCount(self.voters));
        }
        if self.classes != CLASSES {
            return Err(ConfigError::Classes(self.classes));
        }
        if !(1..=255).contains(&self.binarize_threshold) {
            return Err(ConfigError::Threshold(self.binarize_threshold));
        }
        for n in 0..self.layers.len() {
            crate::column::Column::new(self.column_params(n), fmt)
                .map(drop)
                .map_err(|source| ConfigError::Column { layer: n + 1, source })?;
        }
        let depth = self.layers.len();
        if self.voter_spec().is_none() {
            return Err(ConfigError::MissingVoter(depth));
        }
        for kind in [BankKind::Lo, BankKind::Hi] {
            let params = self.voter_params(kind).expect("voter spec present");
            crate::decode::VoterBank::new(params, fmt, self.tau_max)
                .map(drop)
                .map_err(|source| ConfigError::Voter {
                    layer: depth,
                    which: kind.name(),
                    source,
                })?;
        }
        Ok(())
    }
}
