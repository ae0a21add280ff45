//! Spike times and volleys.
//!
//! A spike time is a small non-negative integer measured in unit clock
//! cycles from the start of a neuron's local time, or [`SpikeTime::INF`]
//! when the line carries no spike during the gamma cycle. A volley is the
//! fixed-width vector of spike times carried on a bundle of lines.

use std::fmt;
use std::ops::{Deref, DerefMut};

/// A spike time in unit cycles, or `INF` for "no spike this gamma cycle".
///
/// `INF` is a sentinel strictly greater than every finite time. It only
/// takes part in comparisons; callers must check [`SpikeTime::is_finite`]
/// before doing arithmetic with [`SpikeTime::value`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpikeTime(u32);

impl SpikeTime {
    pub const INF: SpikeTime = SpikeTime(u32::MAX);
    pub const ZERO: SpikeTime = SpikeTime(0);

    /// Largest representable finite time.
    pub const MAX_FINITE: u32 = u32::MAX - 1;

    #[inline]
    pub fn at(t: u32) -> SpikeTime {
        assert!(t <= Self::MAX_FINITE, "spike time {t} collides with INF");
        SpikeTime(t)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0 != u32::MAX
    }

    #[inline]
    pub fn is_inf(self) -> bool {
        self.0 == u32::MAX
    }

    /// The finite value, or `None` for `INF`.
    #[inline]
    pub fn value(self) -> Option<u32> {
        self.is_finite().then_some(self.0)
    }

    /// Finite value with `INF` mapped to `inf_value`.
    #[inline]
    pub fn value_or(self, inf_value: u32) -> u32 {
        if self.is_finite() {
            self.0
        } else {
            inf_value
        }
    }
}

impl fmt::Debug for SpikeTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SpikeTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(t) => write!(f, "{t}"),
            None => f.write_str("INF"),
        }
    }
}

impl From<Option<u32>> for SpikeTime {
    fn from(t: Option<u32>) -> Self {
        t.map_or(SpikeTime::INF, SpikeTime::at)
    }
}

/// A bundle of spike times, one per line. Its width is fixed at construction.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Volley(Vec<SpikeTime>);

impl Volley {
    /// A volley of `width` lines with no spikes.
    pub fn silent(width: usize) -> Volley {
        Volley(vec![SpikeTime::INF; width])
    }

    pub fn from_times(times: Vec<SpikeTime>) -> Volley {
        Volley(times)
    }

    /// Builds a volley from optional integer times (`None` is `INF`).
    pub fn from_options<I: IntoIterator<Item = Option<u32>>>(times: I) -> Volley {
        Volley(times.into_iter().map(SpikeTime::from).collect())
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<SpikeTime> {
        self.0
    }

    pub fn spike_count(&self) -> usize {
        self.0.iter().filter(|t| t.is_finite()).count()
    }

    /// Earliest finite spike time, if any line carries a spike.
    pub fn first_spike(&self) -> Option<u32> {
        first_spike(&self.0)
    }
}

// Deref to a slice only; the width cannot change through `DerefMut`.
impl Deref for Volley {
    type Target = [SpikeTime];
    fn deref(&self) -> &[SpikeTime] {
        &self.0
    }
}

impl DerefMut for Volley {
    fn deref_mut(&mut self) -> &mut [SpikeTime] {
        &mut self.0
    }
}

impl fmt::Debug for Volley {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

pub fn first_spike(x: &[SpikeTime]) -> Option<u32> {
    x.iter().filter_map(|t| t.value()).min()
}

/// Shifts all finite times so the earliest spike lands at local `t = 0`.
///
/// An all-`INF` volley is returned unchanged.
pub fn normalize_local_time(x: &[SpikeTime]) -> Volley {
    let mut out = Volley(x.to_vec());
    normalize_in_place(&mut out);
    out
}

pub fn normalize_in_place(x: &mut [SpikeTime]) {
    if let Some(min) = first_spike(x) {
        if min > 0 {
            for t in x.iter_mut().filter(|t| t.is_finite()) {
                t.0 -= min;
            }
        }
    }
}

/// Keeps only spike presence: every finite time becomes 0.
pub fn binarize(x: &[SpikeTime]) -> Volley {
    Volley(
        x.iter()
            .map(|t| if t.is_finite() { SpikeTime::ZERO } else { SpikeTime::INF })
            .collect(),
    )
}
