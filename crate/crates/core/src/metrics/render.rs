//! CSV rendering. Rationals appear twice: as a decimal with six fractional
//! digits (rounded half up) and as an exact `num/den` column.

use std::fmt::Write;

use num::rational::Ratio;
use num::{BigInt, BigRational, Integer, Signed};

use super::cluster::{LayerConvergence, RbfProfile};
use super::prequential::ErrorTracker;

pub const INTERVALS_HEADER: &str =
    "interval_end,errors,error_rate,cumulative_rate,ties,no_predictions,error_rate_exact,cumulative_rate_exact";
pub const CCONV_HEADER: &str = "layer,column_id,members,c_conv,c_conv_exact";
pub const RBF_HEADER: &str = "probe_id,spike_time,mean_sad,coverage,mean_sad_exact,coverage_exact";

/// Six-digit decimal of a non-negative rational.
pub fn decimal6(r: &BigRational) -> String {
    assert!(!r.is_negative(), "rates and distances are non-negative");
    let scale = BigInt::from(1_000_000u32);
    let twice = r.numer() * &scale * 2u32 + r.denom();
    let (scaled, _) = twice.div_mod_floor(&(r.denom() * 2u32));
    let (int, frac) = scaled.div_mod_floor(&scale);
    format!("{int}.{frac:0>6}")
}

pub fn big(r: Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub fn exact(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn intervals_csv(t: &ErrorTracker) -> String {
    let mut out = String::from(INTERVALS_HEADER);
    out.push('\n');
    for r in t.records() {
        let (e, c) = (big(r.error_rate()), big(r.cumulative_rate()));
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.interval_end,
            r.errors,
            decimal6(&e),
            decimal6(&c),
            r.ties,
            r.no_predictions,
            exact(&e),
            exact(&c)
        )
        .expect("writing to a String");
    }
    out
}

/// Per-column rows, then one aggregate row per layer with column id `all`.
/// Layers are numbered from 1; silent columns are omitted.
pub fn cconv_csv(layers: &[LayerConvergence]) -> String {
    let mut out = String::from(CCONV_HEADER);
    out.push('\n');
    for l in layers {
        for c in &l.columns {
            let v = big(c.c_conv());
            writeln!(out, "{},{},{},{},{}", l.layer + 1, c.column, c.members, decimal6(&v), exact(&v)).expect("String");
        }
    }
    for l in layers {
        if let Some(v) = l.c_conv() {
            let v = big(v);
            writeln!(out, "{},all,{},{},{}", l.layer + 1, l.members, decimal6(&v), exact(&v)).expect("String");
        }
    }
    out
}

pub fn rbf_csv(profiles: &[(String, RbfProfile)]) -> String {
    let mut out = String::from(RBF_HEADER);
    out.push('\n');
    for (id, p) in profiles {
        for b in &p.buckets {
            let cov = big(b.coverage);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                id,
                b.spike_time,
                decimal6(&b.mean_distance),
                decimal6(&cov),
                exact(&b.mean_distance),
                exact(&cov)
            )
            .expect("String");
        }
    }
    out
}
