//! Cluster snapshots: every column's CID over a window of the stream,
//! plus the layer-1 input masks, enough to rebuild every column's input.
//!
//! File layout (little-endian), followed by a SHA-256 of the preceding bytes:
//!
//! ```text
//! magic "TNNSNAP\0", version u32, tau_max u32, start u64, frames u32,
//! layers u32, then per layer: grid u32, p u32, q u32,
//! layer-1 corner masks: frames * columns u8,
//! per layer CIDs: frames * columns u16 (neuron * tau_max + time; 0xFFFF = none)
//! ```

use thiserror::Error;

use crate::column::Cid;
use crate::encode::posneg::{field_volley_from_mask, FIELDS};
use crate::encode::stream::StreamItem;
use crate::network::checkpoint::{ByteReader, ByteWriter};
use crate::network::run::RunSink;
use crate::network::{sources, Network, StepResult, BUNDLES};
use crate::time::{normalize_in_place, SpikeTime};

pub const MAGIC: &[u8; 8] = b"TNNSNAP\0";
pub const VERSION: u32 = 1;
const NO_CID: u16 = u16::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SnapshotError {
    #[error("not a snapshot (bad magic)")]
    Magic,
    #[error("checksum mismatch; snapshot is corrupt")]
    Checksum,
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("snapshot truncated at byte {0}")]
    Truncated(usize),
    #[error("invalid snapshot: {0}")]
    Invalid(String),
}

fn encode_cid(c: Option<Cid>, tau_max: u32) -> u16 {
    match c {
        Some(c) => (c.neuron as u32 * tau_max + c.time) as u16,
        None => NO_CID,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerShape {
    pub grid: usize,
    pub p: usize,
    pub q: usize,
}

impl LayerShape {
    pub fn columns(&self) -> usize {
        self.grid * self.grid
    }
}

/// A column input with `INF` lines mapped to `tau_max`, stored sparsely:
/// only the finite lines are listed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub active: Vec<(u32, u32)>,
}

impl Pattern {
    pub fn from_volley(x: &[SpikeTime]) -> Pattern {
        Pattern {
            active: x
                .iter()
                .enumerate()
                .filter_map(|(i, t)| t.value().map(|v| (i as u32, v)))
                .collect(),
        }
    }

    /// Dense form with `INF` mapped to `tau`.
    pub fn dense(&self, dim: usize, tau: u32) -> Vec<u32> {
        let mut d = vec![tau; dim];
        for &(i, v) in &self.active {
            d[i as usize] = v;
        }
        d
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub tau_max: u32,
    /// Stream position of the first captured frame.
    pub start: u64,
    pub frames: usize,
    pub layers: Vec<LayerShape>,
    masks: Vec<u8>,
    cids: Vec<Vec<u16>>,
}

impl Snapshot {
    pub fn empty(net: &Network, start: u64) -> Snapshot {
        let cfg = net.config();
        let layers = (0..cfg.layers.len())
            .map(|n| LayerShape {
                grid: cfg.layers[n].grid,
                p: cfg.inputs(n),
                q: cfg.layers[n].q,
            })
            .collect::<Vec<_>>();
        Snapshot {
            tau_max: cfg.tau_max,
            start,
            frames: 0,
            cids: vec![Vec::new(); layers.len()],
            layers,
            masks: Vec::new(),
        }
    }

    pub fn push(&mut self, item: &StreamItem, result: &StepResult) {
        self.masks.extend((0..FIELDS).map(|k| item.frame.corner_mask(k)));
        let tau = self.tau_max;
        for (store, layer) in self.cids.iter_mut().zip(&result.cids) {
            store.extend(layer.iter().map(|c| encode_cid(*c, tau)));
        }
        self.frames += 1;
    }

    pub fn cid(&self, layer: usize, frame: usize, column: usize) -> Option<Cid> {
        let cols = self.layers[layer].columns();
        let v = self.cids[layer][frame * cols + column];
        (v != NO_CID).then(|| Cid {
            neuron: (v as u32 / self.tau_max) as u16,
            time: v as u32 % self.tau_max,
        })
    }

    /// The normalized input column `column` of layer `layer` saw at `frame`.
    pub fn input(&self, layer: usize, frame: usize, column: usize) -> Vec<SpikeTime> {
        let mut x = if layer == 0 {
            field_volley_from_mask(self.masks[frame * FIELDS + column]).into_inner()
        } else {
            let prev = self.layers[layer - 1];
            let g = self.layers[layer].grid;
            let mut x = vec![SpikeTime::INF; BUNDLES * prev.q];
            for (b, src) in sources(prev.grid, column / g, column % g).into_iter().enumerate() {
                if let Some(c) = self.cid(layer - 1, frame, src) {
                    x[b * prev.q + c.neuron as usize] = SpikeTime::at(c.time);
                }
            }
            x
        };
        normalize_in_place(&mut x);
        x
    }

    pub fn pattern(&self, layer: usize, frame: usize, column: usize) -> Pattern {
        Pattern::from_volley(&self.input(layer, frame, column))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u32(self.tau_max);
        w.u64(self.start);
        w.u32(self.frames as u32);
        w.u32(self.layers.len() as u32);
        for l in &self.layers {
            w.u32(l.grid as u32);
            w.u32(l.p as u32);
            w.u32(l.q as u32);
        }
        w.bytes(&self.masks);
        for layer in &self.cids {
            for c in layer {
                w.u16(*c);
            }
        }
        w.finish_with_digest()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(SnapshotError::Magic);
        }
        let mut r = ByteReader::with_digest(bytes).ok_or(SnapshotError::Checksum)?;
        let t = SnapshotError::Truncated;
        let bad = |s: &str| SnapshotError::Invalid(s.to_owned());
        r.take(MAGIC.len()).map_err(t)?;
        let version = r.u32().map_err(t)?;
        if version != VERSION {
            return Err(SnapshotError::Version(version));
        }
        let tau_max = r.u32().map_err(t)?;
        if !(2..=64).contains(&tau_max) {
            return Err(bad("tau_max out of range"));
        }
        let start = r.u64().map_err(t)?;
        let frames = r.u32().map_err(t)? as usize;
        let n = r.u32().map_err(t)? as usize;
        if !(1..=3).contains(&n) {
            return Err(bad("layer count out of range"));
        }
        let mut layers = Vec::with_capacity(n);
        for k in 0..n {
            let shape = LayerShape {
                grid: r.u32().map_err(t)? as usize,
                p: r.u32().map_err(t)? as usize,
                q: r.u32().map_err(t)? as usize,
            };
            let expected_grid = match k {
                0 => 26,
                _ => layers.last().map_or(0, |l: &LayerShape| l.grid.saturating_sub(2)),
            };
            let expected_p = match k {
                0 => 8,
                _ => 4 * layers.last().map_or(0, |l: &LayerShape| l.q),
            };
            if shape.grid != expected_grid || shape.p != expected_p || shape.q == 0 {
                return Err(bad("layer shape"));
            }
            if shape.q as u64 * tau_max as u64 >= NO_CID as u64 {
                return Err(bad("CID code overflow"));
            }
            layers.push(shape);
        }
        let masks = r.take(frames.checked_mul(FIELDS).ok_or(r.position()).map_err(t)?).map_err(t)?.to_vec();
        if masks.iter().any(|m| *m > 0xF) {
            return Err(bad("corner mask"));
        }
        let mut cids = Vec::with_capacity(n);
        for l in &layers {
            let count = frames.checked_mul(l.columns()).ok_or(r.position()).map_err(t)?;
            let raw = r.take(count.checked_mul(2).ok_or(r.position()).map_err(t)?).map_err(t)?;
            let vals: Vec<u16> = raw.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
            let limit = l.q as u32 * tau_max;
            if vals.iter().any(|&v| v != NO_CID && v as u32 >= limit) {
                return Err(bad("CID out of range"));
            }
            cids.push(vals);
        }
        if r.remaining() != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok(Snapshot {
            tau_max,
            start,
            frames,
            layers,
            masks,
            cids,
        })
    }

}

/// Captures frames whose stream position lies in `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnapshotRecorder {
    pub start: u64,
    pub end: u64,
    pub snapshot: Snapshot,
}

impl SnapshotRecorder {
    pub fn new(net: &Network, start: u64, end: u64) -> SnapshotRecorder {
        SnapshotRecorder {
            start,
            end,
            snapshot: Snapshot::empty(net, start),
        }
    }
}

impl RunSink for SnapshotRecorder {
    fn record(&mut self, item: &StreamItem, result: &StepResult) {
        let s = item.position as u64;
        if s >= self.start && s < self.end {
            self.snapshot.push(item, result);
        }
    }
}
