//! System-size and threshold sweeps.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Preset;
use crate::observables::d_pos;

use super::archive::{final_per_state, read_summary, write_run, RunSummary};
use super::config::{ExperimentConfig, Mode};
use super::runs::run;

pub const FIG3_FILE: &str = "fig3_scaling.csv";
pub const THRESHOLD_FILE: &str = "threshold_sweep.csv";

/// How the control locality follows the chain length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KRule {
    Fixed(usize),
    HalfChain,
}

impl KRule {
    pub fn k_for(self, n_sites: usize) -> usize {
        match self {
            KRule::Fixed(k) => k,
            KRule::HalfChain => n_sites / 2,
        }
    }
}

impl std::str::FromStr for KRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" | "L/2" => Ok(KRule::HalfChain),
            _ => s
                .parse()
                .map(KRule::Fixed)
                .map_err(|_| Error::Config(format!("k rule must be an integer or \"half\", got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub preset: Preset,
    pub n_sites: usize,
    pub k: usize,
    pub shell_size: Option<usize>,
    pub d_pos: Option<usize>,
    pub error: Option<String>,
}

/// Name of a sweep entry's run directory.
pub fn entry_name(preset: Preset, n_sites: usize, k: usize) -> String {
    format!("{}_L{n_sites}_k{k}", preset.name())
}

fn run_entry(template: &ExperimentConfig, preset: Preset, l: usize, k: usize, root: Option<&Path>) -> Result<RunSummary> {
    let mut cfg = template.clone();
    cfg.model.preset = Some(preset);
    cfg.model.h = None;
    cfg.model.g = None;
    cfg.model.n_sites = l;
    cfg.control.k = Some(k);
    let resolved = cfg.resolve()?;
    let out = run(&resolved)?;
    match root {
        Some(root) => write_run(&out, &root.join(entry_name(preset, l, k))),
        None => Ok(super::archive::summarize(&out)),
    }
}

/// Optimizes every `(preset, L)` pair and tabulates `D_pos` at the final time.
///
/// Entries run in parallel; a failing entry yields a row carrying its error
/// and the others continue.
pub fn run_scaling_sweep(
    template: &ExperimentConfig,
    presets: &[Preset],
    sizes: &[usize],
    rule: KRule,
    root: Option<&Path>,
) -> Result<Vec<ScalingRow>> {
    if template.control.mode != Mode::Optimize {
        return Err(Error::Config("size sweeps run in optimize mode".into()));
    }
    if let Some(l) = sizes.iter().find(|&&l| l % 2 != 0) {
        return Err(Error::Config(format!("size sweeps need even L, got {l}")));
    }
    let entries: Vec<(Preset, usize)> = presets
        .iter()
        .flat_map(|&p| sizes.iter().map(move |&l| (p, l)))
        .collect();
    let rows: Vec<ScalingRow> = entries
        .par_iter()
        .map(|&(preset, l)| {
            let k = rule.k_for(l);
            match run_entry(template, preset, l, k, root) {
                Ok(s) => ScalingRow {
                    preset,
                    n_sites: l,
                    k,
                    shell_size: Some(s.shell_size),
                    d_pos: Some(s.final_d_pos),
                    error: None,
                },
                Err(e) => {
                    log::error!("{}: {e}", entry_name(preset, l, k));
                    ScalingRow {
                        preset,
                        n_sites: l,
                        k,
                        shell_size: None,
                        d_pos: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    if let Some(root) = root {
        write_scaling_table(&rows, &root.join(FIG3_FILE))?;
    }
    Ok(rows)
}

pub fn write_scaling_table(rows: &[ScalingRow], path: &Path) -> Result<()> {
    let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
    let mut text = String::from("# eigenwork fig3_scaling v1\npreset,L,k,shell_size,D_pos,error\n");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.write_record([
            r.preset.name().to_string(),
            r.n_sites.to_string(),
            r.k.to_string(),
            opt(r.shell_size),
            opt(r.d_pos),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    let body = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    text.push_str(&String::from_utf8_lossy(&body));
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub run: String,
    pub n_sites: usize,
    pub h: f64,
    pub g: f64,
    pub manifest: String,
    pub epsilon: f64,
    pub shell_size: usize,
    pub d_pos: usize,
}

/// Recounts `D_pos` at the last sample of each archived run for every `ε`.
///
/// Reward parameters stay as they were during the runs; only the counting
/// threshold moves.
pub fn run_threshold_sweep(dirs: &[PathBuf], eps: &[f64]) -> Result<Vec<ThresholdRow>> {
    let mut rows = Vec::new();
    for dir in dirs {
        let summary = read_summary(dir)?;
        let per_state = final_per_state(dir)?;
        if per_state.len() != summary.shell_size {
            return Err(Error::Parse(format!(
                "{}: {} final records for a shell of {}",
                dir.display(),
                per_state.len(),
                summary.shell_size
            )));
        }
        let w: Vec<f64> = per_state.iter().map(|r| r.w).collect();
        let width = summary.shell_hi - summary.shell_lo;
        for &e in eps {
            if e > width + 1e-12 {
                log::warn!("epsilon {e} exceeds the shell width {width}; the greedy gradient argument no longer applies");
            }
            rows.push(ThresholdRow {
                run: dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned()),
                n_sites: summary.n_sites,
                h: summary.h,
                g: summary.g,
                manifest: summary.manifest.clone(),
                epsilon: e,
                shell_size: summary.shell_size,
                d_pos: d_pos(&w, e),
            });
        }
    }
    Ok(rows)
}

pub fn write_threshold_table(rows: &[ThresholdRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut file = std::io::BufWriter::new(file);
    std::io::Write::write_all(&mut file, b"# eigenwork threshold_sweep v1\n").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
