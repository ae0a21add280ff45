//! Low-precision saturating fixed-point weights.
//!
//! Synaptic weights and voter counters are unsigned counters in
//! `[0, w_max]` with `frac_bits` bits to the right of the binary point.
//! Only the integer part drives the response functions; the fraction
//! accumulates learning increments smaller than one.

use std::fmt;
use std::str::FromStr;

use num::rational::Ratio;
use num::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FixedError {
    #[error("fraction {0} is not representable with {1} fractional bits")]
    NotRepresentable(Fraction, u32),
    #[error("fraction {0} exceeds the weight range [0, {1}]")]
    OutOfRange(Fraction, u32),
    #[error("invalid fraction {0:?}: expected \"num/den\"")]
    Parse(String),
    #[error("weight format with {frac_bits} fractional bits and w_max {w_max} does not fit in 32 bits")]
    TooWide { frac_bits: u32, w_max: u32 },
}

/// An exact non-negative rational such as `1/32`, written as `"num/den"`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fraction(Ratio<u32>);

impl Fraction {
    pub fn new(num: u32, den: u32) -> Fraction {
        assert!(den != 0, "zero denominator");
        Fraction(Ratio::new(num, den))
    }

    pub fn integer(n: u32) -> Fraction {
        Fraction(Ratio::from_integer(n))
    }

    pub fn numer(&self) -> u32 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u32 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Debug for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Fraction {
    type Err = FixedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse = |p: &str| p.trim().parse::<u32>().map_err(|_| FixedError::Parse(s.to_owned()));
        match s.split_once('/') {
            Some((n, d)) => {
                let (n, d) = (parse(n)?, parse(d)?);
                if d == 0 {
                    return Err(FixedError::Parse(s.to_owned()));
                }
                Ok(Fraction::new(n, d))
            }
            None => Ok(Fraction::integer(parse(s)?)),
        }
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A weight held as a raw count of `2^-frac_bits` units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FixedWeight(pub u32);

impl FixedWeight {
    pub const ZERO: FixedWeight = FixedWeight(0);

    pub fn raw(self) -> u32 {
        self.0
    }
}

/// Shared precision parameters for a population of weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WeightFormat {
    frac_bits: u32,
    w_max: u32,
}

impl WeightFormat {
    pub fn new(frac_bits: u32, w_max: u32) -> Result<WeightFormat, FixedError> {
        let fits = frac_bits < 31 && (w_max as u64) << frac_bits <= (i32::MAX as u64);
        if !fits {
            return Err(FixedError::TooWide { frac_bits, w_max });
        }
        Ok(WeightFormat { frac_bits, w_max })
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn w_max(&self) -> u32 {
        self.w_max
    }

    /// Raw value of one integer unit.
    pub fn one(&self) -> u32 {
        1 << self.frac_bits
    }

    pub fn max_raw(&self) -> u32 {
        self.w_max << self.frac_bits
    }

    pub fn max(&self) -> FixedWeight {
        FixedWeight(self.max_raw())
    }

    /// `w_max / 2` rounded down to the nearest representable value.
    pub fn half_max(&self) -> FixedWeight {
        FixedWeight(self.max_raw() / 2)
    }

    /// The integer part seen by the response functions.
    #[inline]
    pub fn integer(&self, w: FixedWeight) -> u32 {
        w.0 >> self.frac_bits
    }

    /// `w >= w_max / 2`, compared at full precision.
    #[inline]
    pub fn in_upper_half(&self, w: FixedWeight) -> bool {
        2 * w.0 as u64 >= self.max_raw() as u64
    }

    /// Exact raw encoding of a fraction; fails if it needs more bits.
    pub fn raw_of(&self, x: Fraction) -> Result<u32, FixedError> {
        let scaled = (x.numer() as u64) << self.frac_bits;
        if !scaled.is_multiple_of(x.denom() as u64) {
            return Err(FixedError::NotRepresentable(x, self.frac_bits));
        }
        let raw = scaled / x.denom() as u64;
        if raw > self.max_raw() as u64 {
            return Err(FixedError::OutOfRange(x, self.w_max));
        }
        Ok(raw as u32)
    }

    pub fn weight_of(&self, x: Fraction) -> Result<FixedWeight, FixedError> {
        self.raw_of(x).map(FixedWeight)
    }

    /// Adds a signed raw increment, clamping to `[0, w_max]`.
    #[inline]
    pub fn saturating_add(&self, w: FixedWeight, delta: i32) -> FixedWeight {
        let sum = w.0 as i64 + delta as i64;
        FixedWeight(sum.clamp(0, self.max_raw() as i64) as u32)
    }

    pub fn to_f64(&self, w: FixedWeight) -> f64 {
        w.0 as f64 / self.one() as f64
    }

    pub fn contains(&self, w: FixedWeight) -> bool {
        w.0 <= self.max_raw()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fmt8() -> WeightFormat {
        WeightFormat::new(10, 8).unwrap()
    }

    fn w(fmt: &WeightFormat, s: &str) -> FixedWeight {
        fmt.weight_of(s.parse().unwrap()).unwrap()
    }

    fn d(fmt: &WeightFormat, s: &str) -> i32 {
        fmt.raw_of(s.parse().unwrap()).unwrap() as i32
    }

    #[test]
    fn saturating_add_examples() {
        let f = fmt8();
        assert_eq!(f.saturating_add(w(&f, "31/4"), d(&f, "1/2")), f.max());
        assert_eq!(f.to_f64(f.saturating_add(w(&f, "31/4"), d(&f, "1/2"))), 8.0);
        assert_eq!(f.saturating_add(w(&f, "1/4"), -d(&f, "1/2")), FixedWeight::ZERO);
        assert_eq!(f.saturating_add(w(&f, "4"), 0), w(&f, "4"));
    }

    #[test]
    fn fractions_parse_and_print() {
        let x: Fraction = "15/32".parse().unwrap();
        assert_eq!((x.numer(), x.denom()), (15, 32));
        assert_eq!(x.to_string(), "15/32");
        assert_eq!("2/4".parse::<Fraction>().unwrap().to_string(), "1/2");
        assert_eq!("3".parse::<Fraction>().unwrap(), Fraction::integer(3));
        assert!("1/0".parse::<Fraction>().is_err());
        assert!("a/2".parse::<Fraction>().is_err());
        assert!("".parse::<Fraction>().is_err());
    }

    #[test]
    fn representability_is_checked() {
        let f = fmt8();
        assert_eq!(f.raw_of(Fraction::new(1, 1024)), Ok(1));
        assert_eq!(f.raw_of(Fraction::new(31, 32)), Ok(992));
        assert!(matches!(f.raw_of(Fraction::new(1, 3)), Err(FixedError::NotRepresentable(..))));
        assert!(matches!(f.raw_of(Fraction::new(1, 2048)), Err(FixedError::NotRepresentable(..))));
        assert!(matches!(f.raw_of(Fraction::integer(9)), Err(FixedError::OutOfRange(..))));
        assert!(WeightFormat::new(31, 8).is_err());
    }

    #[test]
    fn integer_part_and_half_range() {
        let f = fmt8();
        assert_eq!(f.integer(w(&f, "4")), 4);
        assert_eq!(f.integer(w(&f, "1023/256")), 3);
        assert_eq!(f.half_max(), w(&f, "4"));
        assert!(f.in_upper_half(w(&f, "4")));
        assert!(!f.in_upper_half(w(&f, "4095/1024")));
        let odd = WeightFormat::new(2, 7).unwrap();
        assert_eq!(odd.to_f64(odd.half_max()), 3.5);
    }

    proptest! {
        #[test]
        fn saturating_add_stays_in_range(start in 0u32..=8192, deltas in prop::collection::vec(-8192i32..=8192, 0..50)) {
            let f = fmt8();
            let mut x = FixedWeight(start);
            for delta in deltas {
                x = f.saturating_add(x, delta);
                prop_assert!(f.contains(x));
            }
        }

        #[test]
        fn increments_commute_when_no_clamp_occurs(start in 0u32..=8192, a in -2048i32..=2048, b in -2048i32..=2048) {
            let f = fmt8();
            let s = start as i64;
            let unclamped = |x: i64| (0..=8192).contains(&x);
            let ab = f.saturating_add(f.saturating_add(FixedWeight(start), a), b);
            let ba = f.saturating_add(f.saturating_add(FixedWeight(start), b), a);
            if unclamped(s + a as i64) && unclamped(s + b as i64) && unclamped(s + a as i64 + b as i64) {
                prop_assert_eq!(ab, ba);
                prop_assert_eq!(ab.0 as i64, s + a as i64 + b as i64);
            }
        }
    }

    #[test]
    fn clamping_breaks_commutativity() {
        // +1 then -1 from the ceiling is not the same as -1 then +1.
        let f = fmt8();
        let one = f.one() as i32;
        let top = f.max();
        assert_eq!(f.saturating_add(f.saturating_add(top, one), -one), FixedWeight(top.0 - f.one()));
        assert_eq!(f.saturating_add(f.saturating_add(top, -one), one), top);
    }
}
