//! Centroid convergence and RBF profiling over captured clusters.
//!
//! Patterns live in clamped-time space: every `INF` line counts as
//! `tau_max`. A cluster of `n` members with per-line sums `S` has centroid
//! `S / n`; all distance comparisons are done exactly by cross-multiplying.

use num::rational::Ratio;
use num::{BigInt, BigRational, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::snapshot::{Pattern, Snapshot};
use crate::column::Cid;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("vectors differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("layer {layer} column {column} does not exist in the snapshot")]
    NoColumn { layer: usize, column: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    /// Sum of absolute differences.
    #[default]
    Sad,
    Euclidean,
}

/// Sum of absolute differences between a clamped-time vector and a rational one.
pub fn sad(a: &[u32], b: &[BigRational]) -> Result<BigRational, ClusterError> {
    if a.len() != b.len() {
        return Err(ClusterError::Length(a.len(), b.len()));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = BigRational::from_integer(BigInt::from(*x)) - y;
            if d < BigRational::zero() {
                -d
            } else {
                d
            }
        })
        .sum())
}

/// Per-cluster sums for one column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clusters {
    dim: usize,
    tau: u64,
    counts: Vec<u64>,
    sums: Vec<Vec<u64>>,
}

/// An exact distance `num / den` from a pattern to a centroid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactDistance {
    pub num: u128,
    pub den: u128,
}

impl ExactDistance {
    pub fn cmp_exact(&self, other: &ExactDistance) -> std::cmp::Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    pub fn to_rational(self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }
}

impl Clusters {
    pub fn new(dim: usize, clusters: usize, tau: u32) -> Clusters {
        Clusters {
            dim,
            tau: tau as u64,
            counts: vec![0; clusters],
            sums: vec![vec![0; dim]; clusters],
        }
    }

    pub fn add(&mut self, cluster: usize, p: &Pattern) {
        self.counts[cluster] += 1;
        let sums = &mut self.sums[cluster];
        for s in sums.iter_mut() {
            *s += self.tau;
        }
        for &(i, v) in &p.active {
            sums[i as usize] -= self.tau - v as u64;
        }
    }

    pub fn count(&self, cluster: usize) -> u64 {
        self.counts[cluster]
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|c| *c == 0)
    }

    pub fn centroid(&self, cluster: usize) -> Option<Vec<BigRational>> {
        let n = self.counts[cluster];
        (n > 0).then(|| {
            self.sums[cluster]
                .iter()
                .map(|s| BigRational::new(BigInt::from(*s), BigInt::from(n)))
                .collect()
        })
    }

    fn term(n: i128, x: i128, s: i128, metric: Distance) -> i128 {
        let d = n * x - s;
        match metric {
            Distance::Sad => d.abs(),
            Distance::Euclidean => d * d,
        }
    }

    /// Per-cluster distance numerator of an all-silent pattern.
    ///
    /// Inactive lines sit at `tau`, which is at least every member value, so
    /// their contribution is a per-cluster constant and a distance only has
    /// to correct for the active lines.
    pub fn baselines(&self, metric: Distance) -> Vec<i128> {
        let tau = self.tau as i128;
        self.sums
            .iter()
            .zip(&self.counts)
            .map(|(sums, &n)| sums.iter().map(|&s| Clusters::term(n as i128, tau, s as i128, metric)).sum())
            .collect()
    }

    /// Distance from `p` to the centroid of `cluster`, which must be non-empty.
    pub fn distance(&self, p: &Pattern, cluster: usize, metric: Distance) -> ExactDistance {
        let base = self.baselines(metric)[cluster];
        self.distance_from(p, cluster, metric, base)
    }

    fn distance_from(&self, p: &Pattern, cluster: usize, metric: Distance, base: i128) -> ExactDistance {
        let n = self.counts[cluster] as i128;
        debug_assert!(n > 0);
        let sums = &self.sums[cluster];
        let tau = self.tau as i128;
        let mut total = base;
        for &(i, v) in &p.active {
            let s = sums[i as usize] as i128;
            total += Clusters::term(n, v as i128, s, metric) - Clusters::term(n, tau, s, metric);
        }
        let den = match metric {
            Distance::Sad => n,
            Distance::Euclidean => n * n,
        };
        ExactDistance {
            num: total as u128,
            den: den as u128,
        }
    }

    /// Whether `own` attains the minimum distance over all non-empty clusters.
    pub fn nearest_is(&self, p: &Pattern, own: usize, metric: Distance) -> bool {
        self.nearest_is_with(p, own, metric, &self.baselines(metric))
    }

    /// [`Clusters::nearest_is`] with precomputed [`Clusters::baselines`].
    pub fn nearest_is_with(&self, p: &Pattern, own: usize, metric: Distance, bases: &[i128]) -> bool {
        let d_own = self.distance_from(p, own, metric, bases[own]);
        (0..self.len())
            .filter(|&k| k != own && self.counts[k] > 0)
            .all(|k| self.distance_from(p, k, metric, bases[k]).cmp_exact(&d_own) != std::cmp::Ordering::Less)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnConvergence {
    pub layer: usize,
    pub column: usize,
    pub members: u64,
    pub matches: u64,
}

impl ColumnConvergence {
    pub fn c_conv(&self) -> Ratio<u64> {
        Ratio::new(self.matches, self.members)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerConvergence {
    pub layer: usize,
    pub columns: Vec<ColumnConvergence>,
    pub members: u64,
    pub matches: u64,
}

impl LayerConvergence {
    /// Pattern-weighted over all columns of the layer.
    pub fn c_conv(&self) -> Option<Ratio<u64>> {
        (self.members > 0).then(|| Ratio::new(self.matches, self.members))
    }
}

fn column_clusters(snap: &Snapshot, layer: usize, column: usize) -> (Clusters, Vec<(usize, Pattern)>) {
    let shape = snap.layers[layer];
    let mut clusters = Clusters::new(shape.p, shape.q, snap.tau_max);
    let mut members = Vec::new();
    for f in 0..snap.frames {
        if let Some(c) = snap.cid(layer, f, column) {
            let p = snap.pattern(layer, f, column);
            clusters.add(c.neuron as usize, &p);
            members.push((c.neuron as usize, p));
        }
    }
    (clusters, members)
}

/// c_conv for one column; `None` when the column never fired in the window.
pub fn column_convergence(snap: &Snapshot, layer: usize, column: usize, metric: Distance) -> Option<ColumnConvergence> {
    let (clusters, members) = column_clusters(snap, layer, column);
    if members.is_empty() {
        return None;
    }
    let bases = clusters.baselines(metric);
    let matches = members
        .iter()
        .filter(|(own, p)| clusters.nearest_is_with(p, *own, metric, &bases))
        .count() as u64;
    Some(ColumnConvergence {
        layer,
        column,
        members: members.len() as u64,
        matches,
    })
}

/// c_conv for every column of every layer. Patterns whose column stayed
/// silent belong to no cluster and are left out.
pub fn centroid_convergence(snap: &Snapshot, metric: Distance) -> Vec<LayerConvergence> {
    use rayon::prelude::*;
    (0..snap.layers.len())
        .map(|layer| {
            let columns: Vec<ColumnConvergence> = (0..snap.layers[layer].columns())
                .into_par_iter()
                .filter_map(|k| column_convergence(snap, layer, k, metric))
                .collect();
            LayerConvergence {
                layer,
                members: columns.iter().map(|c| c.members).sum(),
                matches: columns.iter().map(|c| c.matches).sum(),
                columns,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RbfBucket {
    pub spike_time: u32,
    pub members: u64,
    /// Mean distance from each member to its own cluster's centroid.
    pub mean_distance: BigRational,
    /// Fraction of all window inputs that fired at this time.
    pub coverage: Ratio<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RbfProfile {
    pub layer: usize,
    pub column: usize,
    pub inputs: u64,
    pub no_spike: u64,
    /// Non-empty buckets in increasing spike time.
    pub buckets: Vec<RbfBucket>,
}

/// Buckets a column's window inputs by output spike time.
pub fn rbf_profile(snap: &Snapshot, layer: usize, column: usize, metric: Distance) -> Result<RbfProfile, ClusterError> {
    if layer >= snap.layers.len() || column >= snap.layers[layer].columns() {
        return Err(ClusterError::NoColumn { layer, column });
    }
    let shape = snap.layers[layer];
    let window: Vec<(Pattern, Option<Cid>)> = (0..snap.frames)
        .map(|f| (snap.pattern(layer, f, column), snap.cid(layer, f, column)))
        .collect();
    let mut profile = rbf_from_window(&window, shape.p, shape.q, snap.tau_max, metric);
    profile.layer = layer;
    profile.column = column;
    Ok(profile)
}

/// RBF profile of any column from its `(input, CID)` pairs.
pub fn rbf_from_window(window: &[(Pattern, Option<Cid>)], p: usize, q: usize, tau_max: u32, metric: Distance) -> RbfProfile {
    let mut clusters = Clusters::new(p, q, tau_max);
    for (pat, cid) in window {
        if let Some(c) = cid {
            clusters.add(c.neuron as usize, pat);
        }
    }
    let bases = clusters.baselines(metric);
    let tau = tau_max as usize;
    let mut sums = vec![BigRational::zero(); tau];
    let mut counts = vec![0u64; tau];
    let mut no_spike = 0;
    for (pat, cid) in window {
        match cid {
            Some(c) => {
                let k = c.neuron as usize;
                let d = clusters.distance_from(pat, k, metric, bases[k]);
                let d = match metric {
                    Distance::Sad => d.to_rational(),
                    // Report the distance itself, not its square.
                    Distance::Euclidean => BigRational::from_float(d.to_rational().to_f64().unwrap_or(0.0).sqrt())
                        .unwrap_or_else(BigRational::zero),
                };
                sums[c.time as usize] += d;
                counts[c.time as usize] += 1;
            }
            None => no_spike += 1,
        }
    }
    let inputs = window.len() as u64;
    let buckets = (0..tau)
        .filter(|&t| counts[t] > 0)
        .map(|t| RbfBucket {
            spike_time: t as u32,
            members: counts[t],
            mean_distance: &sums[t] / BigRational::from_integer(BigInt::from(counts[t])),
            coverage: Ratio::new(counts[t], inputs),
        })
        .collect();
    RbfProfile {
        layer: 0,
        column: 0,
        inputs,
        no_spike,
        buckets,
    }
}

impl RbfProfile {
    /// Mean distance never decreases with spike time across buckets whose
    /// coverage is at least `min_coverage`.
    pub fn is_monotone(&self, min_coverage: Ratio<u64>) -> bool {
        let kept: Vec<&RbfBucket> = self.buckets.iter().filter(|b| b.coverage >= min_coverage).collect();
        kept.windows(2).all(|w| w[0].mean_distance <= w[1].mean_distance)
    }

    /// The earliest bucket has the smallest mean distance of all buckets.
    pub fn earliest_is_closest(&self) -> bool {
        match self.buckets.first() {
            Some(first) => self.buckets.iter().all(|b| first.mean_distance <= b.mean_distance),
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn pat(dense: &[u32], tau: u32) -> Pattern {
        Pattern {
            active: dense
                .iter()
                .enumerate()
                .filter(|(_, v)| **v < tau)
                .map(|(i, v)| (i as u32, *v))
                .collect(),
        }
    }

    #[test]
    fn sad_examples() {
        let ints = |v: &[i64]| v.iter().map(|x| q(*x, 1)).collect::<Vec<_>>();
        assert_eq!(sad(&[3, 1, 4], &ints(&[3, 1, 4])).unwrap(), q(0, 1));
        assert_eq!(sad(&[0, 2], &ints(&[1, 1])).unwrap(), q(2, 1));
        assert_eq!(sad(&[0, 2], &[q(1, 2), q(5, 2)]).unwrap(), q(1, 1));
        assert_eq!(sad(&[0], &[]), Err(ClusterError::Length(1, 0)));
    }

    #[test]
    fn singleton_clusters_converge() {
        let tau = 8;
        let pats = [[0, 8, 8, 1], [8, 0, 2, 8], [3, 3, 8, 8]];
        let mut c = Clusters::new(4, 3, tau);
        for (k, p) in pats.iter().enumerate() {
            c.add(k, &pat(p, tau));
        }
        for (k, p) in pats.iter().enumerate() {
            assert!(c.nearest_is(&pat(p, tau), k, Distance::Sad));
            assert_eq!(c.distance(&pat(p, tau), k, Distance::Sad).num, 0);
        }
    }

    // Dense rational oracle: nearest centroid by direct evaluation.
    fn oracle(pats: &[(usize, Vec<u32>)], k: usize, metric: Distance) -> usize {
        let dim = pats[0].1.len();
        let cents: Vec<Option<Vec<BigRational>>> = (0..k)
            .map(|c| {
                let m: Vec<_> = pats.iter().filter(|(o, _)| *o == c).collect();
                (!m.is_empty()).then(|| {
                    (0..dim)
                        .map(|i| q(m.iter().map(|(_, p)| p[i] as i64).sum(), m.len() as i64))
                        .collect()
                })
            })
            .collect();
        pats.iter()
            .filter(|(own, p)| {
                let dist = |c: &Vec<BigRational>| match metric {
                    Distance::Sad => sad(p, c).unwrap(),
                    Distance::Euclidean => p
                        .iter()
                        .zip(c)
                        .map(|(x, y)| {
                            let d = q(*x as i64, 1) - y;
                            &d * &d
                        })
                        .sum(),
                };
                let mine = dist(cents[*own].as_ref().unwrap());
                cents.iter().flatten().all(|c| dist(c) >= mine)
            })
            .count()
    }

    #[test]
    fn trained_pattern_lands_in_the_earliest_bucket() {
        use crate::column::{Column, ColumnParams, StdpGate};
        use crate::encode::image::{BinaryImage, PIXELS};
        use crate::encode::posneg::posneg_encode_window;
        use crate::fixed::{Fraction, WeightFormat};
        use crate::neuron::NeuronModel;

        let img = |seed: usize| {
            let mut px = [0u8; PIXELS];
            for (k, v) in px.iter_mut().enumerate() {
                *v = (k * 7 + seed * 5).is_multiple_of(3) as u8;
            }
            BinaryImage::from_bits(&px, 0)
        };
        let params = ColumnParams {
            p: 50,
            q: 4,
            theta: 40,
            mu_plus: Fraction::new(1, 2),
            mu_minus: Fraction::new(1, 2),
            mu_search: Fraction::new(1, 1024),
            gate: StdpGate::PostWta,
            model: NeuronModel::Rif,
            tau_max: 8,
        };
        let mut col = Column::new(params, WeightFormat::new(10, 8).unwrap()).unwrap();
        let trained = posneg_encode_window(&img(0), 4, 4, 5);
        for _ in 0..100 {
            col.infer_and_learn(&trained, true);
        }
        let window: Vec<(Pattern, Option<Cid>)> = (0..40)
            .map(|s| {
                let x = posneg_encode_window(&img(s), 4 + s % 3, 4 + s % 5, 5);
                (Pattern::from_volley(&x), col.infer(&x))
            })
            .collect();
        let prof = rbf_from_window(&window, 50, 4, 8, Distance::Sad);
        let own = col.infer(&trained).unwrap();
        assert_eq!(prof.buckets[0].spike_time, own.time);
        assert_eq!(prof.inputs, 40);
        let covered: Ratio<u64> = prof.buckets.iter().map(|b| b.coverage).sum::<Ratio<u64>>() + Ratio::new(prof.no_spike, 40);
        assert_eq!(covered, Ratio::from_integer(1));
        assert!(prof.buckets.iter().all(|b| b.members > 0));
    }

    proptest! {
        #[test]
        fn fast_path_matches_brute_force(
            raw in prop::collection::vec((0usize..3, prop::collection::vec(0u32..9, 6)), 20),
            euclid in any::<bool>(),
        ) {
            let tau = 8;
            let metric = if euclid { Distance::Euclidean } else { Distance::Sad };
            let mut c = Clusters::new(6, 3, tau);
            for (own, p) in &raw {
                c.add(*own, &pat(p, tau));
            }
            let fast = raw.iter().filter(|(own, p)| c.nearest_is(&pat(p, tau), *own, metric)).count();
            prop_assert_eq!(fast, oracle(&raw, 3, metric));
            for (own, p) in &raw {
                let d = c.distance(&pat(p, tau), *own, Distance::Sad).to_rational();
                prop_assert_eq!(d, sad(p, &c.centroid(*own).unwrap()).unwrap());
            }
        }

        #[test]
        fn sad_is_a_metric(a in prop::collection::vec(0u32..9, 5), b in prop::collection::vec(0u32..9, 5), c in prop::collection::vec(0u32..9, 5)) {
            let r = |v: &[u32]| v.iter().map(|x| q(*x as i64, 1)).collect::<Vec<_>>();
            prop_assert_eq!(sad(&a, &r(&b)).unwrap(), sad(&b, &r(&a)).unwrap());
            prop_assert!(sad(&a, &r(&c)).unwrap() <= sad(&a, &r(&b)).unwrap() + sad(&b, &r(&c)).unwrap());
        }
    }
}
