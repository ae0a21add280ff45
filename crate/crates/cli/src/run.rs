//! `run`, `ablate` and `replay`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use num::rational::Ratio;
use tnn_core::encode::idx::{pair, parse_images, parse_labels, read_file};
use tnn_core::encode::stream::build_stream_from;
use tnn_core::encode::{GrayImage, StreamItem, StreamSpec};
use tnn_core::metrics::prequential::ErrorTracker;
use tnn_core::metrics::render::{big, decimal6, exact, intervals_csv};
use tnn_core::metrics::RunRecorder;
use tnn_core::network::checkpoint::{checkpoint, restore_matching};
use tnn_core::network::run::{run, RunSink};
use tnn_core::network::BankKind;
use tnn_core::{Network, NetworkConfig, NeuronModel, StepResult};

use crate::error::{Classify, Failure};
use crate::manifest::{self, Dataset, Manifest};
use crate::{Neuron, RunArgs};

/// Final-window length used by the ablation comparisons.
pub const FINAL_WINDOW: u64 = 10_000;

#[derive(Clone, Debug)]
pub struct Plan {
    pub cfg: NetworkConfig,
    pub overrides: Vec<String>,
    pub stream_name: String,
    pub stream: StreamSpec,
    pub data: Vec<(PathBuf, PathBuf)>,
    pub interval: u64,
    pub window: Option<(u64, u64)>,
    pub checkpoint_every: Option<usize>,
    pub resume: Option<PathBuf>,
    /// Expected dataset digests, when replaying.
    pub digests: Option<Vec<Dataset>>,
}

pub struct Outcome {
    pub recorder: RunRecorder,
    pub end: u64,
}

fn parse_window(s: &str) -> Result<Option<(u64, u64)>, Failure> {
    if s == "none" {
        return Ok(None);
    }
    let bad = || Failure::usage(format!("--snapshot-window expects START:END or none, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    if a >= b {
        return Err(bad());
    }
    Ok(Some((a, b)))
}

fn truncate(spec: &StreamSpec, len: usize) -> StreamSpec {
    let mut left = len;
    StreamSpec {
        phases: spec
            .phases
            .iter()
            .map(|p| {
                let mut p = *p;
                p.length = p.length.min(left);
                left -= p.length;
                p
            })
            .filter(|p| p.length > 0)
            .collect(),
    }
}

pub fn plan_from_args(args: &RunArgs) -> Result<Plan, Failure> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).config_ctx(format!("cannot read config {}", path.display()))?;
            NetworkConfig::from_toml(&text).config_ctx(format!("invalid config {}", path.display()))?
        }
        (None, Some(name)) => NetworkConfig::preset(name).map_err(Failure::config)?,
        _ => return Err(Failure::usage("pass exactly one of --config or --preset")),
    };
    let mut overrides = Vec::new();
    if let Some(n) = args.neuron {
        cfg.neuron_model = match n {
            Neuron::Rif => NeuronModel::Rif,
            Neuron::If => NeuronModel::If,
        };
        overrides.push(format!("neuron_model={}", cfg.neuron_model.name()));
    }
    if let Some(v) = args.voters {
        cfg.voters = v;
        overrides.push(format!("voters={v}"));
    }
    cfg.validate().map_err(Failure::config)?;

    let mut stream = StreamSpec::named(&args.stream).map_err(|e| Failure::usage(e.to_string()))?;
    if let Some(lengths) = &args.phase_lengths {
        if lengths.len() != stream.phases.len() {
            return Err(Failure::usage(format!(
                "--phase-lengths needs {} values for {}",
                stream.phases.len(),
                args.stream
            )));
        }
        for (p, l) in stream.phases.iter_mut().zip(lengths) {
            p.length = *l;
        }
        overrides.push(format!("phase_lengths={lengths:?}"));
    }
    if let Some(len) = args.length {
        stream = truncate(&stream, len);
        overrides.push(format!("length={len}"));
    }
    if args.images.len() != args.labels.len() {
        return Err(Failure::usage("each --images needs a matching --labels"));
    }
    if args.interval == 0 {
        return Err(Failure::usage("--interval must be positive"));
    }
    if args.checkpoint_every == Some(0) {
        return Err(Failure::usage("--checkpoint-every must be positive"));
    }
    Ok(Plan {
        cfg,
        overrides,
        stream_name: args.stream.clone(),
        stream,
        data: args.images.iter().cloned().zip(args.labels.iter().cloned()).collect(),
        interval: args.interval,
        window: parse_window(&args.snapshot_window)?,
        checkpoint_every: args.checkpoint_every,
        resume: args.resume.clone(),
        digests: None,
    })
}

fn load_data(plan: &Plan) -> Result<(Vec<GrayImage>, Vec<Dataset>), Failure> {
    let mut images = Vec::new();
    let mut sets = Vec::new();
    for (ip, lp) in &plan.data {
        let ib = read_file(ip).map_err(Failure::data)?;
        let lb = read_file(lp).map_err(Failure::data)?;
        let imgs = parse_images(&ib).data_ctx(format!("{}", ip.display()))?;
        let lbls = parse_labels(&lb).data_ctx(format!("{}", lp.display()))?;
        images.extend(pair(imgs, lbls).data_ctx(format!("{} / {}", ip.display(), lp.display()))?);
        sets.push(Dataset {
            images: ip.clone(),
            images_sha256: manifest::sha256_hex(&ib),
            labels: lp.clone(),
            labels_sha256: manifest::sha256_hex(&lb),
        });
    }
    if let Some(expected) = &plan.digests {
        let same = expected.len() == sets.len()
            && expected
                .iter()
                .zip(&sets)
                .all(|(a, b)| a.images_sha256 == b.images_sha256 && a.labels_sha256 == b.labels_sha256);
        if !same {
            return Err(Failure::data(anyhow!("dataset checksums differ from the manifest")));
        }
    }
    Ok((images, sets))
}

fn write(out: &Path, name: &str, bytes: impl AsRef<[u8]>, artifacts: &mut Vec<String>) -> Result<(), Failure> {
    let path = out.join(name);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).data_ctx(format!("cannot create {}", dir.display()))?;
    }
    fs::write(&path, bytes).data_ctx(format!("cannot write {}", path.display()))?;
    artifacts.push(name.to_owned());
    Ok(())
}

/// Runs a plan and writes every artifact into `out`.
pub fn execute(plan: &Plan, out: &Path) -> Result<Outcome, Failure> {
    let (images, datasets) = load_data(plan)?;
    let (mut net, recorder, start) = match &plan.resume {
        Some(path) => {
            let bytes = fs::read(path).data_ctx(format!("cannot read checkpoint {}", path.display()))?;
            let ck = restore_matching(&bytes, &plan.cfg).map_err(|e| match e {
                tnn_core::network::checkpoint::CheckpointError::ConfigMismatch => Failure::config(e),
                other => Failure::data(anyhow::Error::new(other).context(format!("{}", path.display()))),
            })?;
            let rec = RunRecorder::from_bytes(&ck.extra, &ck.network)
                .ok_or_else(|| Failure::data(anyhow!("{}: run state does not match this run", path.display())))?;
            if rec.combined.interval() != plan.interval {
                return Err(Failure::usage("--interval differs from the checkpointed run"));
            }
            (ck.network, rec, ck.position)
        }
        None => {
            let net = Network::new(plan.cfg.clone()).map_err(Failure::config)?;
            let rec = RunRecorder::new(&net, plan.interval, plan.window);
            (net, rec, 0)
        }
    };
    let end = plan.stream.len() as u64;
    if start > end {
        return Err(Failure::data(anyhow!("checkpoint position {start} lies beyond the stream end {end}")));
    }
    let items = build_stream_from(&plan.stream, &images, plan.cfg.binarize_threshold, start as usize)
        .map_err(Failure::data)?;

    fs::create_dir_all(out).data_ctx(format!("cannot create {}", out.display()))?;
    let mut artifacts = Vec::new();
    let mut sink = Progress { recorder, name: &plan.cfg.name, interval: plan.interval as usize, total: end as usize };
    let log = run(&mut net, items, true, &mut sink, plan.checkpoint_every, |net, pos, sink: &Progress| {
        let name = format!("checkpoints/ckpt-{pos:06}.bin");
        let path = out.join(&name);
        fs::create_dir_all(out.join("checkpoints")).data_ctx("cannot create checkpoints/")?;
        fs::write(&path, checkpoint(net, pos as u64, &sink.recorder.to_bytes()))
            .data_ctx(format!("cannot write {}", path.display()))
    })?;
    artifacts.extend(log.checkpoints.iter().map(|pos| format!("checkpoints/ckpt-{pos:06}.bin")));
    let mut recorder = sink.recorder;

    let state = recorder.to_bytes();
    write(out, "checkpoint.bin", checkpoint(&net, end, &state), &mut artifacts)?;
    recorder.finish();
    write(out, "intervals.csv", intervals_csv(&recorder.combined), &mut artifacts)?;
    for (kind, t) in &recorder.banks {
        write(out, &format!("intervals_{}.csv", kind.name()), intervals_csv(t), &mut artifacts)?;
    }
    if let Some(s) = &recorder.snapshot {
        if s.snapshot.frames > 0 {
            write(out, "snapshot.bin", s.snapshot.to_bytes(), &mut artifacts)?;
        }
    }
    let text = plan.cfg.to_toml();
    write(out, "config.toml", &text, &mut artifacts)?;
    artifacts.push("manifest.json".into());
    let m = Manifest {
        tool: "tnn".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: text,
        overrides: plan.overrides.clone(),
        stream_name: plan.stream_name.clone(),
        stream: plan.stream.clone(),
        start: 0,
        end,
        resumed_from: plan.resume.as_ref().map(|_| start),
        datasets,
        interval: plan.interval,
        snapshot_window: plan.window,
        checkpoint_every: plan.checkpoint_every,
        artifacts,
    };
    fs::write(out.join("manifest.json"), manifest::render(&m)).data_ctx("cannot write manifest.json")?;
    Ok(Outcome { recorder, end })
}

struct Progress<'a> {
    recorder: RunRecorder,
    name: &'a str,
    interval: usize,
    total: usize,
}

impl RunSink for Progress<'_> {
    fn record(&mut self, item: &StreamItem, result: &StepResult) {
        self.recorder.record(item, result);
        let done = item.position + 1;
        if done.is_multiple_of(10 * self.interval) || done == self.total {
            if let Some(r) = self.recorder.combined.records().last() {
                eprintln!("[{}] {done}/{} inputs, interval error {}", self.name, self.total, decimal6(&big(r.error_rate())));
            }
        }
    }
}

pub fn cmd_run(args: &RunArgs, _label: &str) -> Result<Outcome, Failure> {
    let plan = plan_from_args(args)?;
    execute(&plan, &args.out)
}

pub fn cmd_replay(path: &Path, out: &Path) -> Result<(), Failure> {
    let m = manifest::load(path).data_ctx(format!("cannot read manifest {}", path.display()))?;
    let cfg = NetworkConfig::from_toml(&m.config).config_ctx("manifest config")?;
    let plan = Plan {
        cfg,
        overrides: m.overrides.clone(),
        stream_name: m.stream_name.clone(),
        stream: m.stream.clone(),
        data: m.datasets.iter().map(|d| (d.images.clone(), d.labels.clone())).collect(),
        interval: m.interval,
        window: m.snapshot_window,
        checkpoint_every: m.checkpoint_every,
        resume: None,
        digests: Some(m.datasets.clone()),
    };
    execute(&plan, out).map(drop)
}

fn final_rate(t: &ErrorTracker, end: u64) -> Option<Ratio<u64>> {
    t.mean_rate(end.saturating_sub(FINAL_WINDOW), end)
}

fn comparison(rows: &[(&str, &ErrorTracker)], end: u64) -> String {
    let mut out = String::from("variant,inputs,errors,error_rate,final_error_rate,error_rate_exact,final_error_rate_exact\n");
    for (name, t) in rows {
        let overall = big(Ratio::new(t.total_errors(), t.seen().max(1)));
        let fin = final_rate(t, end).map(big);
        out.push_str(&format!(
            "{name},{},{},{},{},{},{}\n",
            t.seen(),
            t.total_errors(),
            decimal6(&overall),
            fin.as_ref().map(decimal6).unwrap_or_default(),
            exact(&overall),
            fin.as_ref().map(exact).unwrap_or_default(),
        ));
    }
    out
}

pub fn cmd_ablate_neuron(args: &RunArgs) -> Result<(), Failure> {
    let base = plan_from_args(args)?;
    let mut outcomes = Vec::new();
    for model in [NeuronModel::Rif, NeuronModel::If] {
        let mut plan = base.clone();
        plan.cfg.neuron_model = model;
        plan.overrides.retain(|o| !o.starts_with("neuron_model="));
        plan.overrides.push(format!("neuron_model={}", model.name()));
        let o = execute(&plan, &args.out.join(model.name()))?;
        outcomes.push((model.name(), o));
    }
    let end = outcomes[0].1.end;
    let rows: Vec<(&str, &ErrorTracker)> = outcomes.iter().map(|(n, o)| (*n, &o.recorder.combined)).collect();
    let csv = comparison(&rows, end);
    fs::write(args.out.join("comparison.csv"), &csv).data_ctx("cannot write comparison.csv")?;
    print!("{csv}");
    Ok(())
}

/// Bank trackers score each bank's votes alone. Voters never feed back into
/// the columns and banks never read each other, so this equals separate
/// single-bank runs exactly.
pub fn cmd_ablate_voters(args: &RunArgs) -> Result<(), Failure> {
    let mut plan = plan_from_args(args)?;
    plan.cfg.voters = 2;
    plan.overrides.retain(|o| !o.starts_with("voters="));
    plan.overrides.push("voters=2".into());
    let o = execute(&plan, &args.out)?;
    let lo = o.recorder.bank(BankKind::Lo).expect("two banks");
    let hi = o.recorder.bank(BankKind::Hi).expect("two banks");
    let rows = [("hi+lo", &o.recorder.combined), ("lo", lo), ("hi", hi)];
    let csv = comparison(&rows, o.end);
    fs::write(args.out.join("comparison.csv"), &csv).data_ctx("cannot write comparison.csv")?;
    print!("{csv}");
    Ok(())
}
