//! Test-then-train error tracking over fixed-length intervals.

use num::rational::Ratio;

use crate::decode::{tally_counts, Prediction};
use crate::network::checkpoint::ByteReader;
use crate::network::checkpoint::ByteWriter;
use crate::network::StepResult;

pub const DEFAULT_INTERVAL: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalRecord {
    /// Inputs seen when the interval closed.
    pub interval_end: u64,
    /// Inputs in this interval; short only for a trailing partial interval.
    pub len: u64,
    pub errors: u64,
    pub cumulative_errors: u64,
    pub ties: u64,
    pub no_predictions: u64,
}

impl IntervalRecord {
    pub fn error_rate(&self) -> Ratio<u64> {
        Ratio::new(self.errors, self.len)
    }

    pub fn cumulative_rate(&self) -> Ratio<u64> {
        Ratio::new(self.cumulative_errors, self.interval_end)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorTracker {
    interval: u64,
    seen: u64,
    errors: u64,
    ties: u64,
    no_predictions: u64,
    total_errors: u64,
    records: Vec<IntervalRecord>,
}

impl ErrorTracker {
    pub fn new(interval: u64) -> ErrorTracker {
        assert!(interval > 0, "interval must be positive");
        ErrorTracker {
            interval,
            seen: 0,
            errors: 0,
            ties: 0,
            no_predictions: 0,
            total_errors: 0,
            records: Vec::new(),
        }
    }

    pub fn interval(&self) -> u64 {
        self.interval
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn total_errors(&self) -> u64 {
        self.total_errors
    }

    pub fn records(&self) -> &[IntervalRecord] {
        &self.records
    }

    /// Scores one prediction. A missing prediction is an error.
    pub fn record(&mut self, prediction: Prediction, label: usize, tie: bool) {
        self.seen += 1;
        if !prediction.is_correct(label) {
            self.errors += 1;
            self.total_errors += 1;
        }
        self.ties += tie as u64;
        self.no_predictions += (prediction == Prediction::NoPrediction) as u64;
        if self.seen.is_multiple_of(self.interval) {
            self.close(self.interval);
        }
    }

    pub fn record_result(&mut self, result: &StepResult, label: usize) {
        self.record(result.prediction, label, result.tie);
    }

    /// Scores the tally of a vote-count vector, e.g. one bank's counts.
    pub fn record_counts(&mut self, counts: &[u32], label: usize) {
        let t = tally_counts(counts.to_vec());
        self.record(t.prediction, label, t.tie);
    }

    fn close(&mut self, len: u64) {
        self.records.push(IntervalRecord {
            interval_end: self.seen,
            len,
            errors: self.errors,
            cumulative_errors: self.total_errors,
            ties: self.ties,
            no_predictions: self.no_predictions,
        });
        self.errors = 0;
        self.ties = 0;
        self.no_predictions = 0;
    }

    /// Closes a trailing partial interval, if any.
    pub fn finish(&mut self) {
        let pending = self.seen % self.interval;
        if pending != 0 {
            self.close(pending);
        }
    }

    /// Mean interval error rate over records whose end lies in `(from, to]`.
    pub fn mean_rate(&self, from: u64, to: u64) -> Option<Ratio<u64>> {
        let (e, n) = self
            .records
            .iter()
            .filter(|r| r.interval_end > from && r.interval_end <= to)
            .fold((0, 0), |(e, n), r| (e + r.errors, n + r.len));
        (n > 0).then(|| Ratio::new(e, n))
    }

    pub fn write_state(&self, w: &mut ByteWriter) {
        for v in [self.interval, self.seen, self.errors, self.ties, self.no_predictions, self.total_errors] {
            w.u64(v);
        }
        w.u64(self.records.len() as u64);
        for r in &self.records {
            for v in [r.interval_end, r.len, r.errors, r.cumulative_errors, r.ties, r.no_predictions] {
                w.u64(v);
            }
        }
    }

    pub fn read_state(r: &mut ByteReader) -> Result<ErrorTracker, usize> {
        let mut next = || r.u64();
        let interval = next()?;
        if interval == 0 {
            return Err(0);
        }
        let mut t = ErrorTracker::new(interval);
        t.seen = next()?;
        t.errors = next()?;
        t.ties = next()?;
        t.no_predictions = next()?;
        t.total_errors = next()?;
        let n = next()?;
        for _ in 0..n {
            let mut f = [0u64; 6];
            for v in &mut f {
                *v = r.u64()?;
            }
            if f[1] == 0 {
                return Err(r.position());
            }
            t.records.push(IntervalRecord {
                interval_end: f[0],
                len: f[1],
                errors: f[2],
                cumulative_errors: f[3],
                ties: f[4],
                no_predictions: f[5],
            });
        }
        Ok(t)
    }
}
