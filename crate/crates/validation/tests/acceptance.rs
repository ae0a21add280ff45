//! Acceptance suite on real MNIST.
//!
//! Needs the four MNIST IDX files in `$TNN_MNIST_DIR` (default
//! `/root/data/mnist`). The full suite streams about 350K inputs through
//! the simulator, so expect several minutes per core. Run artifacts are kept
//! under the cargo target tmp dir in `acceptance/`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num::BigRational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tnn_core::column::{stdp_row, StdpRow};
use tnn_core::decode::LabelVolley;
use tnn_core::network::{layer_synapses, total_synapses, voter_synapses};
use tnn_core::neuron::{fire_time, fire_time_within};
use tnn_core::{Cid, FixedWeight, Fraction, NetworkConfig, NeuronModel, SpikeTime, VoterBank, VoterParams, WeightFormat};

const STREAM: u64 = 70_000;

struct Report {
    lines: Vec<String>,
    failed: Vec<u32>,
    log: PathBuf,
}

impl Report {
    fn new(dir: &Path) -> Report {
        let log = dir.join("summary.txt");
        fs::write(&log, "").unwrap();
        Report { lines: Vec::new(), failed: Vec::new(), log }
    }

    /// Writes straight to stderr so the line shows without `--nocapture`.
    fn verdict(&mut self, n: u32, name: &str, pass: bool, detail: String) {
        let line = format!("criterion {n:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
        let _ = writeln!(std::io::stderr(), "{line}");
        let mut f = fs::OpenOptions::new().append(true).open(&self.log).unwrap();
        writeln!(f, "{line}").unwrap();
        if !pass {
            self.failed.push(n);
        }
        self.lines.push(line);
    }
}

fn mnist_dir() -> PathBuf {
    std::env::var_os("TNN_MNIST_DIR").map_or_else(|| PathBuf::from("/root/data/mnist"), PathBuf::from)
}

fn data_args() -> Vec<String> {
    let d = mnist_dir();
    let f = |n: &str| d.join(n).to_str().unwrap().to_owned();
    vec![
        "--images".into(),
        f("train-images-idx3-ubyte"),
        "--images".into(),
        f("t10k-images-idx3-ubyte"),
        "--labels".into(),
        f("train-labels-idx1-ubyte"),
        "--labels".into(),
        f("t10k-labels-idx1-ubyte"),
    ]
}

fn tnn(args: &[String]) {
    let argv = std::iter::once("tnn".to_string()).chain(args.iter().cloned());
    assert_eq!(tnn_cli::main_from(argv), 0, "tnn {args:?} failed");
}

fn run_cmd(sub: &[&str], out: &Path, extra: &[&str]) {
    let mut a: Vec<String> = sub.iter().map(|s| s.to_string()).collect();
    a.extend(data_args());
    a.extend(["--out".to_string(), out.to_str().unwrap().to_string()]);
    a.extend(extra.iter().map(|s| s.to_string()));
    tnn(&a);
}

/// `(interval_end, errors)` rows of an intervals CSV.
fn intervals(path: &Path) -> Vec<(u64, u64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap().parse().unwrap(), f.next().unwrap().parse().unwrap())
        })
        .collect()
}

/// Error rate over intervals ending in `(from, to]`.
fn rate(rows: &[(u64, u64)], from: u64, to: u64) -> BigRational {
    let mut prev = 0;
    let (mut errors, mut seen) = (0u64, 0u64);
    for &(end, e) in rows {
        if end > from && end <= to {
            errors += e;
            seen += end - prev;
        }
        prev = end;
    }
    assert!(seen > 0, "no intervals in ({from}, {to}]");
    BigRational::new(errors.into(), seen.into())
}

fn q(n: u64, d: u64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn dec(r: &BigRational) -> String {
    use num::ToPrimitive;
    format!("{:.4}", r.to_f64().unwrap())
}

fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let head: Vec<String> = lines.next().unwrap().split(',').map(str::to_owned).collect();
    lines.map(|l| head.iter().cloned().zip(l.split(',').map(str::to_owned)).collect()).collect()
}

fn exact(row: &BTreeMap<String, String>, key: &str) -> BigRational {
    row[key].parse().unwrap()
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn structural(r: &mut Report) {
    let c = |p: &str| NetworkConfig::preset(p).unwrap();
    let ecccvt = c("ecccvt");
    let cols: Vec<u64> = (0..3).map(|n| layer_synapses(&ecccvt, n)).collect();
    let voters: Vec<u64> = ["ecvt", "eccvt", "ecccvt"].iter().map(|p| voter_synapses(&c(p))).collect();
    let totals: Vec<u64> = ["ecvt", "eccvt", "ecccvt"].iter().map(|p| total_synapses(&c(p))).collect();
    let pass = cols == [64_896, 552_960, 1_239_040]
        && voters == [162_240, 345_600, 619_520]
        && totals == [389_376, 1_309_056, 3_095_936];
    r.verdict(1, "structural golden values", pass, format!("columns {cols:?}, voter banks {voters:?}, totals {totals:?}"));
}

/// Brute-force time-stepped body potential, straight from the response
/// definitions.
fn oracle_fire(weights: &[u32], x: &[Option<u32>], theta: u32, model: NeuronModel, limit: u32) -> Option<u32> {
    (0..limit.min(200)).find(|&t| {
        let beta: u32 = weights
            .iter()
            .zip(x)
            .filter_map(|(&w, xi)| {
                let xi = (*xi)?;
                if t < xi {
                    return Some(0);
                }
                Some(match model {
                    NeuronModel::Rif => (t - xi + 1).min(w),
                    NeuronModel::If => w,
                })
            })
            .sum();
        beta >= theta
    })
}

fn oracles(r: &mut Report) {
    let mut rng = StdRng::seed_from_u64(0x7e1a);
    let mut mismatches = 0u32;
    let instances = 20_000;
    for k in 0..instances {
        let model = if k % 2 == 0 { NeuronModel::Rif } else { NeuronModel::If };
        let p = rng.random_range(1..=8usize);
        let w_max = rng.random_range(1..=8u32);
        let frac = rng.random_range(0..=10u32);
        let fmt = WeightFormat::new(frac, w_max).unwrap();
        let raws: Vec<u32> = (0..p).map(|_| rng.random_range(0..=w_max << frac)).collect();
        let x: Vec<Option<u32>> = (0..p).map(|_| rng.random_bool(0.75).then(|| rng.random_range(0..8u32))).collect();
        let theta = rng.random_range(1..=(p as u32 * w_max + 2));
        let weights: Vec<FixedWeight> = raws.iter().map(|&w| FixedWeight(w)).collect();
        let ints: Vec<u32> = raws.iter().map(|&w| w >> frac).collect();
        let volley: Vec<SpikeTime> = x.iter().map(|t| t.map_or(SpikeTime::INF, SpikeTime::at)).collect();
        let got = fire_time(&weights, &volley, theta, model, &fmt).value();
        let got8 = fire_time_within(&weights, &volley, theta, model, &fmt, 8).value();
        if got != oracle_fire(&ints, &x, theta, model, u32::MAX) || got8 != oracle_fire(&ints, &x, theta, model, 8) {
            mismatches += 1;
        }
    }

    // Expected row for every (s_in, s_out) over times 0..4 and no spike.
    let times: Vec<Option<u32>> = vec![Some(0), Some(1), Some(2), Some(3), None];
    let mut stdp_mismatch = 0;
    let mut cases = 0;
    for &a in &times {
        for &b in &times {
            let expected = match (a, b) {
                (Some(i), Some(o)) if i <= o => StdpRow::Causal,
                (Some(_), Some(_)) => StdpRow::AntiCausal,
                (Some(_), None) => StdpRow::Search,
                (None, Some(_)) => StdpRow::Unused,
                (None, None) => StdpRow::Idle,
            };
            let s = |t: Option<u32>| t.map_or(SpikeTime::INF, SpikeTime::at);
            cases += 1;
            if stdp_row(s(a), s(b)) != expected {
                stdp_mismatch += 1;
            }
        }
    }
    r.verdict(
        2,
        "oracle equivalence",
        mismatches == 0 && stdp_mismatch == 0,
        format!("{mismatches} of {instances} fire-time mismatches, {stdp_mismatch} of {cases} STDP-row mismatches"),
    );
}

fn voter_drift(r: &mut Report) {
    let fmt = WeightFormat::new(10, 8).unwrap();
    let params = VoterParams { q: 1, r: 10, tau_eff: 1, theta_v: Fraction::new(1, 4) };
    let cid = Cid { neuron: 0, time: 0 };
    let mut details = Vec::new();
    let mut pass = true;
    for (num, den) in [(1u64, 20u64), (9, 20)] {
        let mut bank = VoterBank::new(params.clone(), fmt, 8).unwrap();
        // Label 0 on a Bresenham schedule so exactly floor(k·φ) of the first
        // k occurrences carry it.
        let target = if num * 4 > den { fmt.max() } else { FixedWeight(0) };
        let mut hit = None;
        let mut stable = true;
        for k in 0..2000u64 {
            let class = if (k + 1) * num / den > k * num / den { 0 } else { 1 };
            bank.update_cid(Some(cid), &LabelVolley::from_class(class, 10).unwrap());
            let c = bank.counter(0, 0, 0);
            if hit.is_none() && c == target {
                hit = Some(k + 1);
            }
            // Once saturated, the counter must stay on the saturated side.
            if hit.is_some() && fmt.in_upper_half(c) != fmt.in_upper_half(target) {
                stable = false;
            }
        }
        let ok = hit.is_some() && stable;
        pass &= ok;
        details.push(format!("phi={num}/{den}: saturated at {} after {hit:?} occurrences, stable {stable}", target.raw()));
    }
    r.verdict(10, "voter drift law", pass, details.join("; "));
}

#[test]
fn acceptance() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    let mnist = mnist_dir();
    assert!(
        mnist.join("train-images-idx3-ubyte").is_file(),
        "MNIST IDX files not found in {}; set TNN_MNIST_DIR",
        mnist.display()
    );
    let mut r = Report::new(&dir);

    structural(&mut r);
    oracles(&mut r);
    voter_drift(&mut r);

    // Determinism and ECVT learning speed.
    let (e1, e2) = (dir.join("ecvt-w1"), dir.join("ecvt-w3"));
    let ecvt = ["--preset", "ecvt", "--snapshot-window", "none", "--checkpoint-every", "10000"];
    run_cmd(&["run"], &e1, &[&ecvt[..], &["--workers", "1"]].concat());
    run_cmd(&["run"], &e2, &[&ecvt[..], &["--workers", "3"]].concat());
    let (t1, t2) = (tree(&e1), tree(&e2));
    let compared: Vec<&String> = t1.keys().filter(|k| k.ends_with(".csv") || k.ends_with(".bin")).collect();
    let same = compared.len() > 3 && compared.iter().all(|k| t1.get(*k) == t2.get(*k)) && t1.len() == t2.len();
    r.verdict(3, "determinism across --workers", same, format!("{} csv/checkpoint files compared", compared.len()));

    let ecvt_rows = intervals(&e1.join("intervals.csv"));
    let at4k = rate(&ecvt_rows, 3000, 4000);
    let band = rate(&ecvt_rows, 4000, 10_000);

    // Main ECCCVT 1-phase pair: RIF (with snapshot) and IF.
    let ab = dir.join("ecccvt-neuron");
    run_cmd(&["ablate", "--dimension", "neuron"], &ab, &["--preset", "ecccvt"]);
    let rif = ab.join("rif");
    let main_rows = intervals(&rif.join("intervals.csv"));
    let final10 = rate(&main_rows, STREAM - 10_000, STREAM);
    r.verdict(
        4,
        "online learning speed",
        at4k <= q(15, 100) && band <= q(12, 100) && final10 <= q(8, 100),
        format!(
            "ECVT at 4K {}, ECVT mean 4K-10K {}, ECCCVT final 10K {}",
            dec(&at4k),
            dec(&band),
            dec(&final10)
        ),
    );

    tnn(&["analyze".into(), "cconv".into(), "--run".into(), rif.to_str().unwrap().into()]);
    let cconv = read_csv(&rif.join("cconv.csv"));
    let agg: Vec<BigRational> = cconv.iter().filter(|row| row["column_id"] == "all").map(|row| exact(row, "c_conv_exact")).collect();
    let bounds = [q(99, 100), q(95, 100), q(92, 100)];
    let pass = agg.len() == 3 && agg.iter().zip(&bounds).all(|(v, b)| v >= b);
    r.verdict(
        5,
        "centroid convergence",
        pass,
        format!("layers {} (need 0.99 / 0.95 / 0.92)", agg.iter().map(dec).collect::<Vec<_>>().join(" / ")),
    );

    tnn(&["analyze".into(), "rbf".into(), "--run".into(), rif.to_str().unwrap().into()]);
    let rbf = read_csv(&rif.join("rbf.csv"));
    let mut probes: BTreeMap<String, Vec<(u32, BigRational, BigRational)>> = BTreeMap::new();
    for row in &rbf {
        probes.entry(row["probe_id"].clone()).or_default().push((
            row["spike_time"].parse().unwrap(),
            exact(row, "mean_sad_exact"),
            exact(row, "coverage_exact"),
        ));
    }
    let mut pass = probes.len() == 3;
    let mut detail = Vec::new();
    for (id, buckets) in &probes {
        let covered: Vec<&BigRational> = buckets.iter().filter(|b| b.2 >= q(1, 100)).map(|b| &b.1).collect();
        let monotone = covered.windows(2).all(|w| w[0] <= w[1]);
        let earliest = buckets.iter().min_by_key(|b| b.0).map(|b| &b.1);
        let min = buckets.iter().all(|b| earliest.is_some_and(|e| *e <= b.1));
        pass &= monotone && min && !covered.is_empty();
        detail.push(format!("{id}: {} buckets, monotone {monotone}, earliest minimal {min}", buckets.len()));
    }
    r.verdict(6, "RBF behavior", pass, detail.join("; "));

    let cmp = read_csv(&ab.join("comparison.csv"));
    let fin = |v: &str| exact(cmp.iter().find(|row| row["variant"] == v).unwrap(), "final_error_rate_exact");
    let (rif_err, if_err) = (fin("rif"), fin("if"));
    r.verdict(
        7,
        "RIF vs IF",
        rif_err <= &if_err * q(7, 10),
        format!("RIF final 10K {}, IF final 10K {}", dec(&rif_err), dec(&if_err)),
    );

    let lo = rate(&intervals(&rif.join("intervals_lo.csv")), STREAM - 10_000, STREAM);
    let hi = rate(&intervals(&rif.join("intervals_hi.csv")), STREAM - 10_000, STREAM);
    r.verdict(
        8,
        "dual-voter ordering",
        final10 <= lo && lo <= hi,
        format!("Hi+Lo {}, Lo {}, Hi {}", dec(&final10), dec(&lo), dec(&hi)),
    );

    let three = dir.join("ecccvt-3phase");
    run_cmd(&["run"], &three, &["--preset", "ecccvt", "--stream", "3phase", "--snapshot-window", "none"]);
    let rows = intervals(&three.join("intervals.csv"));
    let mut pass = true;
    let mut detail = Vec::new();
    for b in [20_000u64, 40_000] {
        let before = rate(&rows, b - 5000, b);
        let limit = &before * q(3, 2);
        let spike = rate(&rows, b, b + 1000);
        let recovered = rows
            .iter()
            .filter(|(end, _)| *end > b + 1000 && *end <= b + 12_000)
            .find(|(end, _)| rate(&rows, end - 1000, *end) <= limit)
            .map(|(end, _)| end - b);
        pass &= spike > limit && recovered.is_some();
        detail.push(format!(
            "at {b}: before {}, first interval {}, back within 1.5x after {recovered:?} inputs",
            dec(&before),
            dec(&spike)
        ));
    }
    r.verdict(9, "3-phase adaptability", pass, detail.join("; "));

    let mut lines = r.lines.clone();
    lines.sort_by_key(|l| l[10..12].trim().parse::<u32>().unwrap());
    fs::write(&r.log, lines.join("\n") + "\n").unwrap();
    assert!(r.failed.is_empty(), "failed criteria {:?}:\n{}", r.failed, lines.join("\n"));
}
