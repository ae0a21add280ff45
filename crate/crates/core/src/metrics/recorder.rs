//! The standard run sink: prequential trackers for the combined tally and
//! for each voter bank alone, plus an optional cluster snapshot.

use super::prequential::ErrorTracker;
use super::snapshot::{Snapshot, SnapshotRecorder};
use crate::encode::stream::StreamItem;
use crate::network::checkpoint::{ByteReader, ByteWriter};
use crate::network::run::RunSink;
use crate::network::{BankKind, Network, StepResult};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunRecorder {
    pub combined: ErrorTracker,
    /// One tracker per bank, scoring that bank's votes alone.
    pub banks: Vec<(BankKind, ErrorTracker)>,
    pub snapshot: Option<SnapshotRecorder>,
}

impl RunRecorder {
    pub fn new(net: &Network, interval: u64, window: Option<(u64, u64)>) -> RunRecorder {
        RunRecorder {
            combined: ErrorTracker::new(interval),
            banks: net
                .config()
                .banks()
                .into_iter()
                .map(|k| (k, ErrorTracker::new(interval)))
                .collect(),
            snapshot: window.map(|(a, b)| SnapshotRecorder::new(net, a, b)),
        }
    }

    pub fn bank(&self, kind: BankKind) -> Option<&ErrorTracker> {
        self.banks.iter().find(|(k, _)| *k == kind).map(|(_, t)| t)
    }

    pub fn finish(&mut self) {
        self.combined.finish();
        for (_, t) in &mut self.banks {
            t.finish();
        }
    }

    /// Serialized form stored in checkpoints.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        self.combined.write_state(&mut w);
        w.u32(self.banks.len() as u32);
        for (_, t) in &self.banks {
            t.write_state(&mut w);
        }
        match &self.snapshot {
            Some(s) => {
                w.u8(1);
                w.u64(s.start);
                w.u64(s.end);
                w.blob(&s.snapshot.to_bytes());
            }
            None => w.u8(0),
        }
        w.into_inner()
    }

    /// Inverse of [`RunRecorder::to_bytes`]; `None` if the bytes do not fit `net`.
    pub fn from_bytes(bytes: &[u8], net: &Network) -> Option<RunRecorder> {
        let mut r = ByteReader::new(bytes);
        let combined = ErrorTracker::read_state(&mut r).ok()?;
        let kinds = net.config().banks();
        if r.u32().ok()? as usize != kinds.len() {
            return None;
        }
        let mut banks = Vec::new();
        for k in kinds {
            banks.push((k, ErrorTracker::read_state(&mut r).ok()?));
        }
        let snapshot = match r.u8().ok()? {
            0 => None,
            1 => {
                let start = r.u64().ok()?;
                let end = r.u64().ok()?;
                let snapshot = Snapshot::from_bytes(r.blob().ok()?).ok()?;
                if snapshot.layers != Snapshot::empty(net, start).layers || snapshot.tau_max != net.config().tau_max {
                    return None;
                }
                Some(SnapshotRecorder { start, end, snapshot })
            }
            _ => return None,
        };
        (r.remaining() == 0).then_some(RunRecorder {
            combined,
            banks,
            snapshot,
        })
    }
}

impl RunSink for RunRecorder {
    fn record(&mut self, item: &StreamItem, result: &StepResult) {
        let label = item.label.class();
        self.combined.record_result(result, label);
        for ((_, t), counts) in self.banks.iter_mut().zip(&result.bank_counts) {
            t.record_counts(counts, label);
        }
        if let Some(s) = &mut self.snapshot {
            s.record(item, result);
        }
    }
}
