//! Supervised decoder: per-column voters backed by saturating up/down
//! counters, and the tally block that sums their votes.

use thiserror::Error;

use crate::column::Cid;
use crate::fixed::{FixedError, FixedWeight, Fraction, WeightFormat};
use crate::time::{SpikeTime, Volley};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("tau_eff must be in 1..={tau_max}, got {tau_eff}")]
    TauEff { tau_eff: u32, tau_max: u32 },
    #[error("vote threshold {0} must lie strictly between 0 and 1")]
    Threshold(Fraction),
    #[error("vote threshold: {0}")]
    Precision(#[from] FixedError),
    #[error("voter needs q >= 1 and r >= 1 (got q={q}, r={r})")]
    Shape { q: usize, r: usize },
    #[error("label volley must hold exactly one spike at t = 0, got {0:?}")]
    MalformedLabel(Volley),
    #[error("class {class} out of range for {r} classes")]
    ClassRange { class: usize, r: usize },
    #[error("counter array has {got} entries, expected {expected}")]
    CounterCount { got: usize, expected: usize },
    #[error("counter {0:?} exceeds w_max")]
    CounterRange(FixedWeight),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoterParams {
    pub q: usize,
    pub r: usize,
    pub tau_eff: u32,
    pub theta_v: Fraction,
}

/// Binary one-hot class label: the correct class spikes at 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelVolley {
    class: usize,
    r: usize,
}

impl LabelVolley {
    pub fn from_class(class: usize, r: usize) -> Result<LabelVolley, DecodeError> {
        if class >= r {
            return Err(DecodeError::ClassRange { class, r });
        }
        Ok(LabelVolley { class, r })
    }

    /// Validates a raw label volley.
    pub fn from_volley(l: &[SpikeTime]) -> Result<LabelVolley, DecodeError> {
        let mut spikes = l.iter().enumerate().filter(|(_, t)| t.is_finite());
        match (spikes.next(), spikes.next()) {
            (Some((class, t)), None) if *t == SpikeTime::ZERO => Ok(LabelVolley { class, r: l.len() }),
            _ => Err(DecodeError::MalformedLabel(Volley::from_times(l.to_vec()))),
        }
    }

    pub fn class(&self) -> usize {
        self.class
    }

    pub fn to_volley(&self) -> Volley {
        let mut v = Volley::silent(self.r);
        v[self.class] = SpikeTime::ZERO;
        v
    }
}

/// Maps late spike times into the top counter index, `tau_eff - 1`.
pub fn clamp_cid(z: &[SpikeTime], tau_eff: u32) -> Volley {
    Volley::from_times(
        z.iter()
            .map(|t| match t.value() {
                Some(v) if v >= tau_eff => SpikeTime::at(tau_eff - 1),
                _ => *t,
            })
            .collect(),
    )
}

pub fn clamp(cid: Cid, tau_eff: u32) -> Cid {
    Cid {
        neuron: cid.neuron,
        time: cid.time.min(tau_eff - 1),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoterBank {
    params: VoterParams,
    fmt: WeightFormat,
    up: i32,
    down: i32,
    // counters[(i * tau_eff + k) * r + j]: CID line i at clamped time k, class j.
    counters: Vec<FixedWeight>,
}

impl VoterBank {
    /// A voter with every counter at `w_max / 2`.
    pub fn new(params: VoterParams, fmt: WeightFormat, tau_max: u32) -> Result<VoterBank, DecodeError> {
        let n = params.q * params.r * params.tau_eff as usize;
        VoterBank::with_counters(params, fmt, tau_max, vec![fmt.half_max(); n])
    }

    pub fn with_counters(
        params: VoterParams,
        fmt: WeightFormat,
        tau_max: u32,
        counters: Vec<FixedWeight>,
    ) -> Result<VoterBank, DecodeError> {
        if params.q == 0 || params.r == 0 {
            return Err(DecodeError::Shape {
                q: params.q,
                r: params.r,
            });
        }
        if params.tau_eff == 0 || params.tau_eff > tau_max {
            return Err(DecodeError::TauEff {
                tau_eff: params.tau_eff,
                tau_max,
            });
        }
        let t = params.theta_v;
        if t.is_zero() || t.numer() >= t.denom() {
            return Err(DecodeError::Threshold(t));
        }
        let down = fmt.raw_of(t)? as i32;
        let up = fmt.one() as i32 - down;
        let expected = params.q * params.r * params.tau_eff as usize;
        if counters.len() != expected {
            return Err(DecodeError::CounterCount {
                got: counters.len(),
                expected,
            });
        }
        if let Some(c) = counters.iter().find(|c| !fmt.contains(**c)) {
            return Err(DecodeError::CounterRange(*c));
        }
        Ok(VoterBank {
            params,
            fmt,
            up,
            down,
            counters,
        })
    }

    pub fn params(&self) -> &VoterParams {
        &self.params
    }

    pub fn format(&self) -> &WeightFormat {
        &self.fmt
    }

    pub fn counters(&self) -> &[FixedWeight] {
        &self.counters
    }

    /// Counter `k` at crosspoint `(i, j)`.
    pub fn counter(&self, i: usize, j: usize, k: u32) -> FixedWeight {
        self.counters[self.slot(i, k) + j]
    }

    pub fn counter_mut(&mut self, i: usize, j: usize, k: u32) -> &mut FixedWeight {
        let s = self.slot(i, k) + j;
        &mut self.counters[s]
    }

    #[inline]
    fn slot(&self, i: usize, k: u32) -> usize {
        debug_assert!(i < self.params.q && k < self.params.tau_eff);
        (i * self.params.tau_eff as usize + k as usize) * self.params.r
    }

    /// Binarized votes for a clamped one-hot CID volley.
    pub fn infer(&self, z: &[SpikeTime]) -> Volley {
        assert_eq!(z.len(), self.params.q, "CID volley width");
        let mut v = Volley::silent(self.params.r);
        if let Some(c) = Cid::from_volley(z) {
            for j in self.vote_classes(c) {
                v[j] = SpikeTime::ZERO;
            }
        }
        v
    }

    /// Classes voted for by the (clamped) CID `cid`.
    pub fn vote_classes(&self, cid: Cid) -> impl Iterator<Item = usize> + '_ {
        let base = self.slot(cid.neuron as usize, cid.time);
        let fmt = self.fmt;
        self.counters[base..base + self.params.r]
            .iter()
            .enumerate()
            .filter(move |(_, c)| fmt.in_upper_half(**c))
            .map(|(j, _)| j)
    }

    /// Adds this voter's votes for `cid` into `counts`.
    pub fn cast(&self, cid: Option<Cid>, counts: &mut [u32]) {
        if let Some(c) = cid {
            for j in self.vote_classes(c) {
                counts[j] += 1;
            }
        }
    }

    /// Supervised update from a clamped CID volley and the label.
    pub fn update(&mut self, z: &[SpikeTime], label: &LabelVolley) {
        assert_eq!(z.len(), self.params.q, "CID volley width");
        self.update_cid(Cid::from_volley(z), label);
    }

    /// A silent column (`None`) leaves every counter unchanged.
    pub fn update_cid(&mut self, cid: Option<Cid>, label: &LabelVolley) {
        let Some(c) = cid else { return };
        assert_eq!(label.r, self.params.r, "label width");
        let base = self.slot(c.neuron as usize, c.time);
        let fmt = self.fmt;
        for (j, counter) in self.counters[base..base + self.params.r].iter_mut().enumerate() {
            let d = if j == label.class { self.up } else { -self.down };
            *counter = fmt.saturating_add(*counter, d);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prediction {
    Class(usize),
    /// No class received a vote.
    NoPrediction,
}

impl Prediction {
    pub fn class(self) -> Option<usize> {
        match self {
            Prediction::Class(c) => Some(c),
            Prediction::NoPrediction => None,
        }
    }

    /// A missing prediction is always wrong.
    pub fn is_correct(self, label: usize) -> bool {
        self == Prediction::Class(label)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tally {
    pub counts: Vec<u32>,
    pub winners: Vec<usize>,
    pub prediction: Prediction,
    pub tie: bool,
}

/// Sums binarized vote volleys and picks the most-voted class.
pub fn tally(votes: &[Volley], r: usize) -> Tally {
    let mut counts = vec![0u32; r];
    for v in votes {
        assert_eq!(v.len(), r, "vote volley width");
        for (c, t) in counts.iter_mut().zip(v.iter()) {
            *c += t.is_finite() as u32;
        }
    }
    tally_counts(counts)
}

/// Tally from per-class vote counts. Ties go to the lowest class index.
pub fn tally_counts(counts: Vec<u32>) -> Tally {
    let best = counts.iter().copied().max().unwrap_or(0);
    if best == 0 {
        return Tally {
            counts,
            winners: Vec::new(),
            prediction: Prediction::NoPrediction,
            tie: false,
        };
    }
    let winners: Vec<usize> = (0..counts.len()).filter(|&j| counts[j] == best).collect();
    Tally {
        prediction: Prediction::Class(winners[0]),
        tie: winners.len() > 1,
        winners,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const INF: Option<u32> = None;

    fn v(times: &[Option<u32>]) -> Volley {
        Volley::from_options(times.iter().copied())
    }

    fn fmt8() -> WeightFormat {
        WeightFormat::new(10, 8).unwrap()
    }

    fn bank(theta: Fraction) -> VoterBank {
        let p = VoterParams {
            q: 3,
            r: 2,
            tau_eff: 3,
            theta_v: theta,
        };
        VoterBank::new(p, fmt8(), 8).unwrap()
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(clamp_cid(&v(&[INF, Some(5), INF]), 3), v(&[INF, Some(2), INF]));
        assert_eq!(clamp_cid(&v(&[INF, Some(1), INF]), 3), v(&[INF, Some(1), INF]));
        assert_eq!(clamp_cid(&v(&[INF, INF]), 3), v(&[INF, INF]));
        assert_eq!(clamp(Cid { neuron: 2, time: 9 }, 4), Cid { neuron: 2, time: 3 });
    }

    #[test]
    fn infer_compares_against_half_range() {
        let f = fmt8();
        let mut b = bank(Fraction::new(1, 32));
        *b.counter_mut(1, 0, 2) = f.weight_of(Fraction::new(9, 2)).unwrap();
        *b.counter_mut(1, 1, 2) = f.weight_of(Fraction::new(3, 1)).unwrap();
        let z = v(&[INF, Some(2), INF]);
        assert_eq!(b.infer(&z), v(&[Some(0), INF]));
        // 3.97 is not exactly representable; the nearest raw value below 4 must not vote.
        *b.counter_mut(1, 0, 2) = FixedWeight(4065);
        assert_eq!(b.infer(&z), v(&[INF, INF]));
        assert_eq!(b.infer(&v(&[INF, INF, INF])), v(&[INF, INF]));
    }

    #[test]
    fn update_follows_the_label() {
        let f = fmt8();
        let mut b = bank(Fraction::new(1, 32));
        let start = f.half_max().raw();
        let label = LabelVolley::from_class(0, 2).unwrap();
        b.update(&v(&[Some(1), INF, INF]), &label);
        assert_eq!(b.counter(0, 0, 1).raw(), start + 31 * 32);
        assert_eq!(b.counter(0, 1, 1).raw(), start - 32);
        // Only r counters move.
        let moved = b.counters().iter().filter(|c| c.raw() != start).count();
        assert_eq!(moved, 2);
        // Silent column: no update.
        let before = b.clone();
        b.update(&v(&[INF, INF, INF]), &label);
        assert_eq!(b, before);
    }

    #[test]
    fn saturated_counter_stays_at_w_max() {
        let f = fmt8();
        let mut b = bank(Fraction::new(1, 32));
        *b.counter_mut(0, 0, 0) = f.max();
        let label = LabelVolley::from_class(0, 2).unwrap();
        for _ in 0..5 {
            b.update_cid(Some(Cid { neuron: 0, time: 0 }), &label);
            assert_eq!(b.counter(0, 0, 0), f.max());
        }
    }

    #[test]
    fn malformed_labels_are_rejected() {
        assert!(LabelVolley::from_volley(&v(&[INF, INF])).is_err());
        assert!(LabelVolley::from_volley(&v(&[Some(0), Some(0)])).is_err());
        assert!(LabelVolley::from_volley(&v(&[INF, Some(1)])).is_err());
        assert_eq!(LabelVolley::from_volley(&v(&[INF, Some(0)])).unwrap().class(), 1);
        assert!(LabelVolley::from_class(10, 10).is_err());
    }

    #[test]
    fn invalid_voter_params() {
        let f = fmt8();
        let p = |tau_eff, theta_v| VoterParams {
            q: 2,
            r: 2,
            tau_eff,
            theta_v,
        };
        assert!(matches!(VoterBank::new(p(0, Fraction::new(1, 2)), f, 8), Err(DecodeError::TauEff { .. })));
        assert!(matches!(VoterBank::new(p(9, Fraction::new(1, 2)), f, 8), Err(DecodeError::TauEff { .. })));
        assert!(matches!(VoterBank::new(p(2, Fraction::integer(0)), f, 8), Err(DecodeError::Threshold(_))));
        assert!(matches!(VoterBank::new(p(2, Fraction::integer(1)), f, 8), Err(DecodeError::Threshold(_))));
        assert!(matches!(VoterBank::new(p(2, Fraction::new(1, 3)), f, 8), Err(DecodeError::Precision(_))));
    }

    #[test]
    fn tally_examples() {
        let t = tally(&[v(&[Some(0), INF]), v(&[Some(0), INF]), v(&[INF, Some(0)])], 2);
        assert_eq!(t.counts, vec![2, 1]);
        assert_eq!(t.prediction, Prediction::Class(0));
        assert!(!t.tie);

        let t = tally_counts(vec![3, 3]);
        assert_eq!(t.winners, vec![0, 1]);
        assert_eq!(t.prediction, Prediction::Class(0));
        assert!(t.tie);

        let t = tally(&[v(&[INF, INF])], 2);
        assert_eq!(t.prediction, Prediction::NoPrediction);
        assert!(!t.prediction.is_correct(0));
    }

    proptest! {
        #[test]
        fn fewest_non_votes_equals_most_votes(votes in prop::collection::vec(prop::collection::vec(any::<bool>(), 5), 1..20)) {
            let volleys: Vec<Volley> = votes
                .iter()
                .map(|vs| Volley::from_options(vs.iter().map(|b| b.then_some(0))))
                .collect();
            let t = tally(&volleys, 5);
            let fired = volleys.len() as u32;
            let nonvotes: Vec<u32> = t.counts.iter().map(|c| fired - c).collect();
            let fewest = *nonvotes.iter().min().unwrap();
            let by_exclusion: Vec<usize> = (0..5).filter(|&j| nonvotes[j] == fewest).collect();
            if t.prediction != Prediction::NoPrediction {
                prop_assert_eq!(by_exclusion, t.winners);
            }
        }

        #[test]
        fn tally_is_order_independent(mut votes in prop::collection::vec(prop::collection::vec(any::<bool>(), 4), 0..12)) {
            let to_volleys = |vs: &Vec<Vec<bool>>| -> Vec<Volley> {
                vs.iter().map(|v| Volley::from_options(v.iter().map(|b| b.then_some(0)))).collect()
            };
            let a = tally(&to_volleys(&votes), 4);
            votes.reverse();
            prop_assert_eq!(a, tally(&to_volleys(&votes), 4));
        }

        #[test]
        fn banks_are_disjoint_state(updates in prop::collection::vec((0usize..3, 0u32..3, 0usize..2), 0..30)) {
            let mut lo = bank(Fraction::new(1, 32));
            let mut hi = bank(Fraction::new(15, 32));
            let lo_before = lo.clone();
            for (i, k, class) in updates {
                hi.update_cid(Some(Cid { neuron: i as u16, time: k }), &LabelVolley::from_class(class, 2).unwrap());
            }
            prop_assert_eq!(&lo, &lo_before);
            lo.update_cid(None, &LabelVolley::from_class(0, 2).unwrap());
            prop_assert_eq!(lo, lo_before);
        }
    }
}
