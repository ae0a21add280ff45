//! Streaming driver: steps the network over a stream in order.

use super::{Network, StepResult};
use crate::encode::stream::StreamItem;

/// Receives every step result in stream order.
pub trait RunSink {
    fn record(&mut self, item: &StreamItem, result: &StepResult);
}

impl<F: FnMut(&StreamItem, &StepResult)> RunSink for F {
    fn record(&mut self, item: &StreamItem, result: &StepResult) {
        self(item, result)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunLog {
    pub steps: usize,
    /// Stream position after the last step.
    pub end: usize,
    /// Positions at which checkpoints were taken.
    pub checkpoints: Vec<usize>,
}

/// Runs `items` through `net`, feeding `sink`.
///
/// Every `checkpoint_every` inputs (counted on absolute stream position)
/// `on_checkpoint` is called with the next position to process.
pub fn run<I, S, F, E>(
    net: &mut Network,
    items: I,
    learning: bool,
    sink: &mut S,
    checkpoint_every: Option<usize>,
    mut on_checkpoint: F,
) -> Result<RunLog, E>
where
    I: IntoIterator<Item = StreamItem>,
    S: RunSink,
    F: FnMut(&Network, usize, &S) -> Result<(), E>,
{
    let mut log = RunLog::default();
    for item in items {
        let result = net.step(&item.frame, &item.label, learning);
        sink.record(&item, &result);
        log.steps += 1;
        log.end = item.position + 1;
        if let Some(every) = checkpoint_every.filter(|&e| e > 0) {
            if log.end % every == 0 {
                on_checkpoint(net, log.end, sink)?;
                log.checkpoints.push(log.end);
            }
        }
    }
    Ok(log)
}
