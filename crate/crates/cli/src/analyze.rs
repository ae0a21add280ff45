//! `analyze cconv|rbf` over a run's snapshot.

use std::fs;
use std::path::Path;

use anyhow::anyhow;
use tnn_core::metrics::render::{cconv_csv, rbf_csv};
use tnn_core::metrics::{centroid_convergence, rbf_profile, Distance, Snapshot};

use crate::error::{Classify, Failure};

fn load(run: &Path) -> Result<Snapshot, Failure> {
    if !run.is_dir() {
        return Err(Failure::data(anyhow!("{} is not a run directory", run.display())));
    }
    let path = run.join("snapshot.bin");
    if !path.is_file() {
        return Err(Failure::data(anyhow!(
            "{} has no snapshot.bin; rerun with --snapshot-window START:END covering part of the stream",
            run.display()
        )));
    }
    let bytes = fs::read(&path).data_ctx(format!("cannot read {}", path.display()))?;
    Snapshot::from_bytes(&bytes).data_ctx(format!("{}", path.display()))
}

/// Probe `LAYER:ROW:COL` (layer from 1) to zero-based (layer, column).
pub fn parse_probe(s: &str, snap: &Snapshot) -> Result<(usize, usize), Failure> {
    let bad = |why: &str| Failure::usage(format!("probe {s:?}: {why}"));
    let parts: Vec<usize> = s
        .split(':')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("expected LAYER:ROW:COL"))?;
    let [layer, row, col] = parts[..] else {
        return Err(bad("expected LAYER:ROW:COL"));
    };
    if layer == 0 || layer > snap.layers.len() {
        return Err(bad(&format!("layer must be in 1..={}", snap.layers.len())));
    }
    let grid = snap.layers[layer - 1].grid;
    if row >= grid || col >= grid {
        return Err(bad(&format!("row and column must be below {grid}")));
    }
    Ok((layer - 1, row * grid + col))
}

pub fn cmd_cconv(run: &Path, out: &Path, metric: Distance) -> Result<(), Failure> {
    let snap = load(run)?;
    let layers = centroid_convergence(&snap, metric);
    fs::create_dir_all(out).data_ctx(format!("cannot create {}", out.display()))?;
    let csv = cconv_csv(&layers);
    fs::write(out.join("cconv.csv"), &csv).data_ctx("cannot write cconv.csv")?;
    for l in &layers {
        if let Some(v) = l.c_conv() {
            println!("layer {}: c_conv {:.6} over {} patterns", l.layer + 1, *v.numer() as f64 / *v.denom() as f64, l.members);
        }
    }
    Ok(())
}

pub fn cmd_rbf(run: &Path, out: &Path, probes: &[String], metric: Distance) -> Result<(), Failure> {
    let snap = load(run)?;
    let mut profiles = Vec::new();
    for s in probes {
        let (layer, column) = parse_probe(s, &snap)?;
        let p = rbf_profile(&snap, layer, column, metric).data_ctx(format!("probe {s}"))?;
        profiles.push((s.clone(), p));
    }
    fs::create_dir_all(out).data_ctx(format!("cannot create {}", out.display()))?;
    fs::write(out.join("rbf.csv"), rbf_csv(&profiles)).data_ctx("cannot write rbf.csv")?;
    Ok(())
}
