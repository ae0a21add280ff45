//! Excitatory neuron: response functions, body potential and spike time.

use serde::{Deserialize, Serialize};

use crate::fixed::{FixedWeight, WeightFormat};
use crate::time::SpikeTime;

/// Which response function the excitatory neurons use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NeuronModel {
    /// Ramp integrate-and-fire: ramp-no-leak response.
    #[default]
    Rif,
    /// Integrate-and-fire: step-no-leak response.
    If,
}

impl NeuronModel {
    #[inline]
    pub fn response(self, w: u32, t: i64) -> u32 {
        match self {
            NeuronModel::Rif => rnl_response(w, t),
            NeuronModel::If => snl_response(w, t),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NeuronModel::Rif => "rif",
            NeuronModel::If => "if",
        }
    }
}

/// Ramp-no-leak response: rises by one per unit time until it reaches `w`.
#[inline]
pub fn rnl_response(w: u32, t: i64) -> u32 {
    if t < 0 {
        0
    } else if t < w as i64 {
        t as u32 + 1
    } else {
        w
    }
}

/// Step-no-leak response: jumps to `w` at the spike and stays there.
#[inline]
pub fn snl_response(w: u32, t: i64) -> u32 {
    if t < 0 {
        0
    } else {
        w
    }
}

/// Body potential at local time `t`: the sum of time-shifted responses
/// over all lines carrying a spike.
pub fn body_potential(
    weights: &[FixedWeight],
    x: &[SpikeTime],
    t: u32,
    model: NeuronModel,
    fmt: &WeightFormat,
) -> u32 {
    assert_eq!(weights.len(), x.len(), "weights and volley differ in width");
    weights
        .iter()
        .zip(x)
        .filter_map(|(w, xi)| xi.value().map(|xi| model.response(fmt.integer(*w), t as i64 - xi as i64)))
        .sum()
}

/// First local time at which the body potential reaches `theta`.
///
/// The potentials never decay, so the search stops at
/// `max finite x_i + w_max`; past that point the potential is constant.
pub fn fire_time(
    weights: &[FixedWeight],
    x: &[SpikeTime],
    theta: u32,
    model: NeuronModel,
    fmt: &WeightFormat,
) -> SpikeTime {
    fire_time_within(weights, x, theta, model, fmt, u32::MAX)
}

/// Like [`fire_time`], but a crossing at `t >= limit` reports `INF`.
///
/// Columns pass `tau_max` here: a spike after the end of the gamma cycle
/// never happens.
pub fn fire_time_within(
    weights: &[FixedWeight],
    x: &[SpikeTime],
    theta: u32,
    model: NeuronModel,
    fmt: &WeightFormat,
    limit: u32,
) -> SpikeTime {
    assert_eq!(weights.len(), x.len(), "weights and volley differ in width");
    let active: Vec<(usize, u32)> = x
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.value().map(|t| (i, t)))
        .collect();
    fire_time_sparse(&active, weights, theta, model, fmt, limit)
}

/// Spike time from a precomputed list of `(line, time)` for the spiking lines.
#[inline]
pub fn fire_time_sparse(
    active: &[(usize, u32)],
    weights: &[FixedWeight],
    theta: u32,
    model: NeuronModel,
    fmt: &WeightFormat,
    limit: u32,
) -> SpikeTime {
    debug_assert!(theta >= 1);
    let ceiling: u32 = active.iter().map(|&(i, _)| fmt.integer(weights[i])).sum();
    if ceiling < theta {
        return SpikeTime::INF;
    }
    let last_input = active.iter().map(|&(_, t)| t).max().unwrap_or(0);
    let horizon = (last_input as u64 + fmt.w_max() as u64).min(limit as u64 - 1) as u32;
    let mut t = 0u32;
    loop {
        let potential: u32 = active
            .iter()
            .map(|&(i, xi)| model.response(fmt.integer(weights[i]), t as i64 - xi as i64))
            .sum();
        if potential >= theta {
            return SpikeTime::at(t);
        }
        if t >= horizon {
            return SpikeTime::INF;
        }
        t += 1;
    }
}
