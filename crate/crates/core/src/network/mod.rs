//! Layered column network with its voter banks.
//!
//! Layer 1 has one column per 3x3 receptive field. A layer-`n+1` column at
//! `(i, j)` reads the CID bundles of the layer-`n` columns at the four
//! corners of the 3x3 window rooted at `(i, j)`: `(i, j)`, `(i, j+2)`,
//! `(i+2, j)`, `(i+2, j+2)`, concatenated in that order.

pub mod checkpoint;
pub mod config;
pub mod run;

use rayon::prelude::*;

use crate::column::{Cid, Column};
use crate::decode::{clamp, tally_counts, LabelVolley, Prediction, VoterBank};
use crate::encode::posneg::EncodedFrame;
use crate::fixed::WeightFormat;
use crate::time::SpikeTime;

pub use config::{BankKind, ConfigError, LayerSpec, NetworkConfig, VoterSpec, BUNDLES};

/// Source columns of the layer-`n+1` column at `(i, j)` in a layer-`n`
/// grid of side `grid`, as flat row-major indices.
pub fn sources(grid: usize, i: usize, j: usize) -> [usize; BUNDLES] {
    [(i, j), (i, j + 2), (i + 2, j), (i + 2, j + 2)].map(|(r, c)| r * grid + c)
}

/// Column synapses of layer `n`: columns x inputs x neurons.
pub fn layer_synapses(cfg: &NetworkConfig, n: usize) -> u64 {
    let l = &cfg.layers[n];
    (l.grid * l.grid * cfg.inputs(n) * l.q) as u64
}

/// Synapses of one voter bank: voters x q x classes x tau_eff.
pub fn voter_synapses(cfg: &NetworkConfig) -> u64 {
    let l = cfg.last_layer();
    let tau_eff = cfg.voter_spec().map_or(0, |v| v.tau_eff) as usize;
    (l.grid * l.grid * l.q * cfg.classes * tau_eff) as u64
}

pub fn total_synapses(cfg: &NetworkConfig) -> u64 {
    let columns: u64 = (0..cfg.layers.len()).map(|n| layer_synapses(cfg, n)).sum();
    columns + cfg.voters as u64 * voter_synapses(cfg)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub grid: usize,
    pub columns: Vec<Column>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bank {
    pub kind: BankKind,
    pub voters: Vec<VoterBank>,
}

/// Everything one gamma cycle produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepResult {
    pub prediction: Prediction,
    /// Classes sharing the top vote count.
    pub winners: Vec<usize>,
    pub counts: Vec<u32>,
    pub tie: bool,
    /// Per-bank vote counts, in [`NetworkConfig::banks`] order.
    pub bank_counts: Vec<Vec<u32>>,
    /// Per-layer CIDs in grid order, before clamping.
    pub cids: Vec<Vec<Option<Cid>>>,
}

impl StepResult {
    pub fn no_prediction(&self) -> bool {
        self.prediction == Prediction::NoPrediction
    }

    pub fn is_correct(&self, label: usize) -> bool {
        self.prediction.is_correct(label)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    cfg: NetworkConfig,
    fmt: WeightFormat,
    layers: Vec<Layer>,
    banks: Vec<Bank>,
}

impl Network {
    /// Builds the topology with every weight and counter at `w_max / 2`.
    pub fn new(cfg: NetworkConfig) -> Result<Network, ConfigError> {
        cfg.validate()?;
        let fmt = cfg.format()?;
        let layers = cfg
            .layers
            .iter()
            .enumerate()
            .map(|(n, l)| {
                let col = Column::new(cfg.column_params(n), fmt).expect("validated");
                Layer {
                    grid: l.grid,
                    columns: vec![col; l.grid * l.grid],
                }
            })
            .collect();
        let voters = cfg.last_layer().grid.pow(2);
        let banks = cfg
            .banks()
            .into_iter()
            .map(|kind| {
                let params = cfg.voter_params(kind).expect("validated");
                let bank = VoterBank::new(params, fmt, cfg.tau_max).expect("validated");
                Bank {
                    kind,
                    voters: vec![bank; voters],
                }
            })
            .collect();
        Ok(Network {
            cfg,
            fmt,
            layers,
            banks,
        })
    }

    /// Assembles a network from explicit state; shapes must match `cfg`.
    pub(crate) fn from_parts(cfg: NetworkConfig, layers: Vec<Layer>, banks: Vec<Bank>) -> Network {
        let fmt = cfg.format().expect("validated");
        Network {
            cfg,
            fmt,
            layers,
            banks,
        }
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn format(&self) -> &WeightFormat {
        &self.fmt
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn banks(&self) -> &[Bank] {
        &self.banks
    }

    pub fn column_synapses(&self) -> Vec<u64> {
        self.layers
            .iter()
            .map(|l| l.columns.iter().map(|c| (c.p() * c.q()) as u64).sum())
            .collect()
    }

    pub fn bank_synapses(&self) -> Vec<u64> {
        self.banks
            .iter()
            .map(|b| b.voters.iter().map(|v| v.counters().len() as u64).sum())
            .collect()
    }

    /// Input volley of column `k` in layer `n`, given the previous layer's CIDs.
    pub fn column_input(&self, n: usize, k: usize, frame: &EncodedFrame, prev: &[Option<Cid>]) -> Vec<SpikeTime> {
        if n == 0 {
            return frame.field(k).to_vec();
        }
        let grid = self.layers[n].grid;
        let q = self.cfg.layers[n - 1].q;
        bundle_input(self.layers[n - 1].grid, q, k / grid, k % grid, prev)
    }

    /// One gamma cycle: infer every layer, predict, then (when `learning`)
    /// apply STDP and the voter updates.
    ///
    /// The prediction never sees this frame's updates, and voters never feed
    /// back into the columns.
    pub fn step(&mut self, frame: &EncodedFrame, label: &LabelVolley, learning: bool) -> StepResult {
        assert_eq!(frame.fields(), self.layers[0].columns.len(), "frame does not match layer 1");
        let mut cids: Vec<Vec<Option<Cid>>> = Vec::with_capacity(self.layers.len());
        for n in 0..self.layers.len() {
            let layer_cids = match n {
                0 => self.layers[0]
                    .columns
                    .par_iter_mut()
                    .enumerate()
                    .map(|(k, col)| {
                        let mut x = frame.field(k).to_vec();
                        col.step_in_place(&mut x, learning)
                    })
                    .collect(),
                _ => {
                    let prev = &cids[n - 1];
                    let prev_grid = self.layers[n - 1].grid;
                    let q = self.cfg.layers[n - 1].q;
                    let grid = self.layers[n].grid;
                    self.layers[n]
                        .columns
                        .par_iter_mut()
                        .enumerate()
                        .map(|(k, col)| {
                            let mut x = bundle_input(prev_grid, q, k / grid, k % grid, prev);
                            col.step_in_place(&mut x, learning)
                        })
                        .collect()
                }
            };
            cids.push(layer_cids);
        }

        let tau_eff = self.cfg.voter_spec().expect("validated").tau_eff;
        let top: Vec<Option<Cid>> = cids.last().expect("at least one layer").iter().map(|c| c.map(|c| clamp(c, tau_eff))).collect();
        let r = self.cfg.classes;
        let bank_counts: Vec<Vec<u32>> = self
            .banks
            .iter()
            .map(|bank| {
                let mut counts = vec![0u32; r];
                for (v, cid) in bank.voters.iter().zip(&top) {
                    v.cast(*cid, &mut counts);
                }
                counts
            })
            .collect();
        let mut counts = vec![0u32; r];
        for bc in &bank_counts {
            for (c, b) in counts.iter_mut().zip(bc) {
                *c += b;
            }
        }
        let t = tally_counts(counts);

        if learning {
            for bank in &mut self.banks {
                bank.voters
                    .par_iter_mut()
                    .zip(top.par_iter())
                    .for_each(|(v, cid)| v.update_cid(*cid, label));
            }
        }

        StepResult {
            prediction: t.prediction,
            winners: t.winners,
            counts: t.counts,
            tie: t.tie,
            bank_counts,
            cids,
        }
    }
}

/// Concatenated CID bundles feeding a column at `(i, j)` of the next layer.
pub fn bundle_input(prev_grid: usize, q: usize, i: usize, j: usize, prev: &[Option<Cid>]) -> Vec<SpikeTime> {
    let mut x = vec![SpikeTime::INF; BUNDLES * q];
    for (b, src) in sources(prev_grid, i, j).into_iter().enumerate() {
        if let Some(c) = prev[src] {
            x[b * q + c.neuron as usize] = SpikeTime::at(c.time);
        }
    }
    x
}
