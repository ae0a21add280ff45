//! Clustering column: a `p x q` synaptic crossbar feeding `q` excitatory
//! neurons, winner-take-all inhibition, and the local STDP learner.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixed::{FixedError, FixedWeight, Fraction, WeightFormat};
use crate::neuron::{fire_time_sparse, NeuronModel};
use crate::time::{normalize_in_place, SpikeTime, Volley};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ColumnError {
    #[error("column needs p >= 1, q >= 1 and theta >= 1 (got p={p}, q={q}, theta={theta})")]
    Shape { p: usize, q: usize, theta: u32 },
    #[error("tau_max must be at least 2, got {0}")]
    TauMax(u32),
    #[error("{name}: {source}")]
    Increment {
        name: &'static str,
        #[source]
        source: FixedError,
    },
    #[error("{0} / 2 is not representable; STDP applies half increments")]
    HalfIncrement(&'static str),
    #[error("weight matrix has {got} entries, expected {expected}")]
    WeightCount { got: usize, expected: usize },
    #[error("weight {0:?} exceeds w_max")]
    WeightRange(FixedWeight),
}

/// Which neuron outputs drive STDP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StdpGate {
    /// Learn from the inhibited outputs `z`: only the winner sees an output spike.
    #[default]
    PostWta,
    /// Learn from the raw excitatory outputs `y`.
    PreWta,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnParams {
    pub p: usize,
    pub q: usize,
    pub theta: u32,
    pub mu_plus: Fraction,
    pub mu_minus: Fraction,
    pub mu_search: Fraction,
    pub gate: StdpGate,
    pub model: NeuronModel,
    pub tau_max: u32,
}

/// The five STDP cases, keyed by input and output spike presence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StdpRow {
    /// Input at or before the output: potentiate by `F+(w)`.
    Causal,
    /// Input after the output: depress by `F-(w)`.
    AntiCausal,
    /// Input but no output: search-mode creep `+mu_s`.
    Search,
    /// Output without input: depress by `F-(w)`.
    Unused,
    /// Neither: no change.
    Idle,
}

/// Table lookup for one synapse; every `(s_in, s_out)` pair lands in exactly one row.
#[inline]
pub fn stdp_row(s_in: SpikeTime, s_out: SpikeTime) -> StdpRow {
    match (s_in.is_finite(), s_out.is_finite()) {
        (true, true) if s_in <= s_out => StdpRow::Causal,
        (true, true) => StdpRow::AntiCausal,
        (true, false) => StdpRow::Search,
        (false, true) => StdpRow::Unused,
        (false, false) => StdpRow::Idle,
    }
}

/// Raw fixed-point increments used by the learner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StdpIncrements {
    pub plus: i32,
    pub minus: i32,
    pub search: i32,
}

impl StdpIncrements {
    /// Signed raw change for `row` at current weight `w`.
    #[inline]
    pub fn delta(&self, row: StdpRow, w: FixedWeight, fmt: &WeightFormat) -> i32 {
        let upper = fmt.in_upper_half(w);
        match row {
            StdpRow::Causal => {
                if upper {
                    self.plus
                } else {
                    self.plus / 2
                }
            }
            StdpRow::AntiCausal | StdpRow::Unused => {
                if upper {
                    -(self.minus / 2)
                } else {
                    -self.minus
                }
            }
            StdpRow::Search => self.search,
            StdpRow::Idle => 0,
        }
    }
}

/// A temporal one-hot cluster identifier: which neuron won, and when.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cid {
    pub neuron: u16,
    pub time: u32,
}

impl Cid {
    pub fn to_volley(self, q: usize) -> Volley {
        let mut v = Volley::silent(q);
        v[self.neuron as usize] = SpikeTime::at(self.time);
        v
    }

    pub fn from_volley(z: &[SpikeTime]) -> Option<Cid> {
        z.iter().enumerate().find_map(|(j, t)| {
            t.value().map(|time| Cid {
                neuron: j as u16,
                time,
            })
        })
    }
}

/// Winner-take-all inhibition: pass only the earliest spike, lowest index on ties.
pub fn wta(y: &[SpikeTime]) -> Volley {
    let mut z = Volley::silent(y.len());
    if let Some(c) = wta_winner(y) {
        z[c.neuron as usize] = SpikeTime::at(c.time);
    }
    z
}

/// The surviving spike of [`wta`], if any.
pub fn wta_winner(y: &[SpikeTime]) -> Option<Cid> {
    let mut best: Option<Cid> = None;
    for (j, t) in y.iter().enumerate() {
        if let Some(time) = t.value() {
            if best.is_none_or(|b| time < b.time) {
                best = Some(Cid {
                    neuron: j as u16,
                    time,
                });
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Column {
    params: ColumnParams,
    fmt: WeightFormat,
    inc: StdpIncrements,
    // Neuron-major: weights[j * p + i] is the synapse from line i to neuron j.
    weights: Vec<FixedWeight>,
}

impl Column {
    /// A column with every weight at `w_max / 2`.
    pub fn new(params: ColumnParams, fmt: WeightFormat) -> Result<Column, ColumnError> {
        let weights = vec![fmt.half_max(); params.p * params.q];
        Column::with_weights(params, fmt, weights)
    }

    pub fn with_weights(
        params: ColumnParams,
        fmt: WeightFormat,
        weights: Vec<FixedWeight>,
    ) -> Result<Column, ColumnError> {
        if params.p == 0 || params.q == 0 || params.theta == 0 || params.q > u16::MAX as usize {
            return Err(ColumnError::Shape {
                p: params.p,
                q: params.q,
                theta: params.theta,
            });
        }
        if params.tau_max < 2 {
            return Err(ColumnError::TauMax(params.tau_max));
        }
        let raw = |name, x| fmt.raw_of(x).map_err(|source| ColumnError::Increment { name, source });
        let inc = StdpIncrements {
            plus: raw("mu_plus", params.mu_plus)? as i32,
            minus: raw("mu_minus", params.mu_minus)? as i32,
            search: raw("mu_search", params.mu_search)? as i32,
        };
        if inc.plus % 2 != 0 {
            return Err(ColumnError::HalfIncrement("mu_plus"));
        }
        if inc.minus % 2 != 0 {
            return Err(ColumnError::HalfIncrement("mu_minus"));
        }
        let expected = params.p * params.q;
        if weights.len() != expected {
            return Err(ColumnError::WeightCount {
                got: weights.len(),
                expected,
            });
        }
        if let Some(w) = weights.iter().find(|w| !fmt.contains(**w)) {
            return Err(ColumnError::WeightRange(*w));
        }
        Ok(Column {
            params,
            fmt,
            inc,
            weights,
        })
    }

    pub fn params(&self) -> &ColumnParams {
        &self.params
    }

    pub fn format(&self) -> &WeightFormat {
        &self.fmt
    }

    pub fn increments(&self) -> StdpIncrements {
        self.inc
    }

    pub fn p(&self) -> usize {
        self.params.p
    }

    pub fn q(&self) -> usize {
        self.params.q
    }

    /// Synapse from input line `i` to neuron `j`.
    pub fn weight(&self, i: usize, j: usize) -> FixedWeight {
        self.weights[j * self.params.p + i]
    }

    /// Synapses of neuron `j`, indexed by input line.
    pub fn neuron_weights(&self, j: usize) -> &[FixedWeight] {
        let p = self.params.p;
        &self.weights[j * p..(j + 1) * p]
    }

    /// All weights, neuron-major.
    pub fn weights(&self) -> &[FixedWeight] {
        &self.weights
    }

    /// Excitatory outputs `y = E(x, W)` for an input already in local time.
    ///
    /// Crossings at or after `tau_max` fall outside the gamma cycle and are `INF`.
    pub fn excite(&self, x: &[SpikeTime]) -> Volley {
        assert_eq!(x.len(), self.params.p, "input volley width");
        let active = active_lines(x);
        self.excite_active(&active)
    }

    fn excite_active(&self, active: &[(usize, u32)]) -> Volley {
        let ColumnParams {
            theta,
            model,
            tau_max,
            q,
            ..
        } = self.params;
        Volley::from_times(
            (0..q)
                .map(|j| fire_time_sparse(active, self.neuron_weights(j), theta, model, &self.fmt, tau_max))
                .collect(),
        )
    }

    /// Applies one STDP step for input `x` and gated output `out`.
    pub fn stdp_update(&mut self, x: &[SpikeTime], out: &[SpikeTime]) {
        assert_eq!(x.len(), self.params.p, "input volley width");
        assert_eq!(out.len(), self.params.q, "output volley width");
        let active = active_lines(x);
        self.stdp_update_active(x, &active, out);
    }

    fn stdp_update_active(&mut self, x: &[SpikeTime], active: &[(usize, u32)], out: &[SpikeTime]) {
        let p = self.params.p;
        let fmt = self.fmt;
        let inc = self.inc;
        for (j, s_out) in out.iter().enumerate() {
            let row = &mut self.weights[j * p..(j + 1) * p];
            if s_out.is_inf() {
                // Only the spiking lines leave the idle row here.
                if inc.search != 0 {
                    for &(i, _) in active {
                        row[i] = fmt.saturating_add(row[i], inc.search);
                    }
                }
            } else {
                for (w, s_in) in row.iter_mut().zip(x) {
                    let d = inc.delta(stdp_row(*s_in, *s_out), *w, &fmt);
                    *w = fmt.saturating_add(*w, d);
                }
            }
        }
    }

    /// Inference `z = I(E(x, W))` followed, when `learning`, by STDP.
    ///
    /// `x` is normalized to local time first. Returns the CID volley.
    pub fn infer_and_learn(&mut self, x: &[SpikeTime], learning: bool) -> Volley {
        let mut local = x.to_vec();
        let cid = self.step_in_place(&mut local, learning);
        match cid {
            Some(c) => c.to_volley(self.params.q),
            None => Volley::silent(self.params.q),
        }
    }

    /// Same as [`Column::infer_and_learn`] but normalizes `x` in place and
    /// returns the compact CID.
    pub fn step_in_place(&mut self, x: &mut [SpikeTime], learning: bool) -> Option<Cid> {
        assert_eq!(x.len(), self.params.p, "input volley width");
        normalize_in_place(x);
        let active = active_lines(x);
        let y = self.excite_active(&active);
        let winner = wta_winner(&y);
        if learning {
            match self.params.gate {
                StdpGate::PreWta => self.stdp_update_active(x, &active, &y),
                StdpGate::PostWta => {
                    let z = match winner {
                        Some(c) => c.to_volley(self.params.q),
                        None => Volley::silent(self.params.q),
                    };
                    self.stdp_update_active(x, &active, &z);
                }
            }
        }
        winner
    }

    /// Inference only; never touches the weights.
    pub fn infer(&self, x: &[SpikeTime]) -> Option<Cid> {
        let mut local = x.to_vec();
        normalize_in_place(&mut local);
        wta_winner(&self.excite(&local))
    }
}

#[inline]
fn active_lines(x: &[SpikeTime]) -> Vec<(usize, u32)> {
    x.iter()
        .enumerate()
        .filter_map(|(i, t)| t.value().map(|t| (i, t)))
        .collect()
}
