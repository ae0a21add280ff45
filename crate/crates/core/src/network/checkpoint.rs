//! Versioned binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "TNNCKPT\0"
//! version  u32
//! config   u32 length + UTF-8 TOML
//! position u64      next stream position
//! extra    u32 length + opaque run state
//! layers   u32 count, then per layer: columns u32, p u32, q u32, raw weights u32...
//! banks    u32 count, then per bank: kind u8, voters u32, q u32, r u32, tau_eff u32, raw counters u32...
//! sha256   32 bytes over everything above
//! ```

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Bank, BankKind, ConfigError, Layer, Network, NetworkConfig};
use crate::column::Column;
use crate::decode::VoterBank;
use crate::fixed::FixedWeight;

pub const MAGIC: &[u8; 8] = b"TNNCKPT\0";
pub const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    Magic,
    #[error("unsupported checkpoint version {0}, expected {VERSION}")]
    Version(u32),
    #[error("checkpoint truncated at byte {0}")]
    Truncated(usize),
    #[error("checksum mismatch; file is corrupt")]
    Checksum,
    #[error("{0} trailing bytes before the checksum")]
    Trailing(usize),
    #[error("embedded config is not UTF-8")]
    Utf8,
    #[error("embedded config: {0}")]
    Config(#[from] ConfigError),
    #[error("state does not match the embedded config: {0}")]
    Shape(String),
    #[error("checkpoint was written for a different configuration")]
    ConfigMismatch,
}

/// Little-endian writer for the checkpoint and snapshot containers.
#[derive(Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> ByteWriter {
        ByteWriter::default()
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    /// Length-prefixed (u32) blob.
    pub fn blob(&mut self, b: &[u8]) {
        self.u32(u32::try_from(b.len()).expect("blob under 4 GiB"));
        self.bytes(b);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Appends the SHA-256 of everything written so far and returns the bytes.
    pub fn finish_with_digest(mut self) -> Vec<u8> {
        let digest = Sha256::digest(&self.buf);
        self.buf.extend_from_slice(digest.as_slice());
        self.buf
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }
}

/// Bounds-checked little-endian reader. Errors carry the failing offset.
pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> ByteReader<'a> {
        ByteReader { buf, pos: 0 }
    }

    /// Verifies and strips a trailing SHA-256.
    pub fn with_digest(buf: &'a [u8]) -> Option<ByteReader<'a>> {
        let split = buf.len().checked_sub(DIGEST_LEN)?;
        let (body, digest) = buf.split_at(split);
        (Sha256::digest(body).as_slice() == digest).then(|| ByteReader::new(body))
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], usize> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(self.pos)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, usize> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, usize> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    pub fn u32(&mut self) -> Result<u32, usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64, usize> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn blob(&mut self) -> Result<&'a [u8], usize> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    /// `n` u32 values, refusing counts the remaining input cannot hold.
    pub fn u32s(&mut self, n: usize) -> Result<Vec<u32>, usize> {
        let bytes = self.take(n.checked_mul(4).ok_or(self.pos)?)?;
        Ok(bytes.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }
}

/// A decoded checkpoint.
#[derive(Debug)]
pub struct Checkpoint {
    pub network: Network,
    pub position: u64,
    pub extra: Vec<u8>,
}

/// Serializes the full network state, the next stream position, and an
/// opaque run-state section.
pub fn checkpoint(net: &Network, position: u64, extra: &[u8]) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(MAGIC);
    w.u32(VERSION);
    w.blob(net.config().to_toml().as_bytes());
    w.u64(position);
    w.blob(extra);
    w.u32(net.layers().len() as u32);
    for layer in net.layers() {
        let c0 = &layer.columns[0];
        w.u32(layer.columns.len() as u32);
        w.u32(c0.p() as u32);
        w.u32(c0.q() as u32);
        for col in &layer.columns {
            for wt in col.weights() {
                w.u32(wt.raw());
            }
        }
    }
    w.u32(net.banks().len() as u32);
    for bank in net.banks() {
        let p = bank.voters[0].params();
        w.u8(match bank.kind {
            BankKind::Lo => 0,
            BankKind::Hi => 1,
        });
        w.u32(bank.voters.len() as u32);
        w.u32(p.q as u32);
        w.u32(p.r as u32);
        w.u32(p.tau_eff);
        for v in &bank.voters {
            for c in v.counters() {
                w.u32(c.raw());
            }
        }
    }
    w.finish_with_digest()
}

fn expect(what: &str, got: u32, want: usize) -> Result<(), CheckpointError> {
    if got as usize != want {
        return Err(CheckpointError::Shape(format!("{what}: file has {got}, config needs {want}")));
    }
    Ok(())
}

/// Decodes and validates a checkpoint against its own embedded config.
pub fn restore(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::Magic);
    }
    let mut r = ByteReader::with_digest(bytes).ok_or(CheckpointError::Checksum)?;
    let t = CheckpointError::Truncated;
    r.take(MAGIC.len()).map_err(t)?;
    let version = r.u32().map_err(t)?;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let text = std::str::from_utf8(r.blob().map_err(t)?).map_err(|_| CheckpointError::Utf8)?;
    let cfg = NetworkConfig::from_toml(text)?;
    let position = r.u64().map_err(t)?;
    let extra = r.blob().map_err(t)?.to_vec();
    let fmt = cfg.format()?;

    expect("layer count", r.u32().map_err(t)?, cfg.layers.len())?;
    let mut layers = Vec::with_capacity(cfg.layers.len());
    for (n, spec) in cfg.layers.iter().enumerate() {
        let params = cfg.column_params(n);
        expect("columns", r.u32().map_err(t)?, spec.grid * spec.grid)?;
        expect("inputs", r.u32().map_err(t)?, params.p)?;
        expect("neurons", r.u32().map_err(t)?, params.q)?;
        let per = params.p * params.q;
        let mut columns = Vec::with_capacity(spec.grid * spec.grid);
        for _ in 0..spec.grid * spec.grid {
            let raw = r.u32s(per).map_err(t)?;
            let col = Column::with_weights(params.clone(), fmt, raw.into_iter().map(FixedWeight).collect())
                .map_err(|e| CheckpointError::Shape(e.to_string()))?;
            columns.push(col);
        }
        layers.push(Layer { grid: spec.grid, columns });
    }

    let kinds = cfg.banks();
    expect("bank count", r.u32().map_err(t)?, kinds.len())?;
    let voters = cfg.last_layer().grid.pow(2);
    let mut banks = Vec::with_capacity(kinds.len());
    for kind in kinds {
        let tag = r.u8().map_err(t)?;
        expect("bank kind", tag as u32, kind as usize)?;
        let params = cfg.voter_params(kind).expect("validated");
        expect("voters", r.u32().map_err(t)?, voters)?;
        expect("voter q", r.u32().map_err(t)?, params.q)?;
        expect("classes", r.u32().map_err(t)?, params.r)?;
        expect("tau_eff", r.u32().map_err(t)?, params.tau_eff as usize)?;
        let per = params.q * params.r * params.tau_eff as usize;
        let mut vs = Vec::with_capacity(voters);
        for _ in 0..voters {
            let raw = r.u32s(per).map_err(t)?;
            let v = VoterBank::with_counters(params.clone(), fmt, cfg.tau_max, raw.into_iter().map(FixedWeight).collect())
                .map_err(|e| CheckpointError::Shape(e.to_string()))?;
            vs.push(v);
        }
        banks.push(Bank { kind, voters: vs });
    }
    if r.remaining() != 0 {
        return Err(CheckpointError::Trailing(r.remaining()));
    }
    Ok(Checkpoint {
        network: Network::from_parts(cfg, layers, banks),
        position,
        extra,
    })
}

/// Like [`restore`], but refuses a checkpoint written under a different config.
pub fn restore_matching(bytes: &[u8], cfg: &NetworkConfig) -> Result<Checkpoint, CheckpointError> {
    let ck = restore(bytes)?;
    if ck.network.config() != cfg {
        return Err(CheckpointError::ConfigMismatch);
    }
    Ok(ck)
}
