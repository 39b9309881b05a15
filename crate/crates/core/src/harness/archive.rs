//! Run-directory layout.
//!
//! | file                    | contents                                                         |
//! |-------------------------|------------------------------------------------------------------|
//! | `config.toml`           | resolved configuration; loading it reproduces the run            |
//! | `protocol.txt`          | replayable control protocol                                      |
//! | `basis_manifest.txt`    | operator list the protocol rows refer to                         |
//! | `spectrum.csv`          | `alpha,E,E_over_L,in_shell`                                      |
//! | `timeseries.csv`        | `step,t,r,Y_norm,dr_dt,D_pos,vanished`                           |
//! | `per_state.csv`         | `alpha,E,step,t,w,W,S`, one row per shell state per sample       |
//! | `fig2_dpos_vs_t.csv`    | `t,D_pos,shell_size`                                             |
//! | `fig4_deltaS_vs_w.csv`  | `alpha,w,S0,St,S0_minus_St,St_minus_S0,in_dpos` at the last sample |
//! | `summary.json`          | [`RunSummary`]                                                   |
//!
//! Every CSV starts with a `# eigenwork <name> v1` comment line. `S0` is the
//! entropy of the eigenstate itself, before any kick. Files contain no
//! timestamps, so identical configs give byte-identical directories.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::text_checksum;
use crate::observables::{ee_report, EEReport};
use crate::propagate::ControlProtocol;
use crate::trajectory::Trajectory;

use super::config::{ExperimentConfig, Mode};
use super::runs::RunOutcome;

pub const FORMAT_TAG: &str = "eigenwork-run-v1";

pub const CONFIG_FILE: &str = "config.toml";
pub const PROTOCOL_FILE: &str = "protocol.txt";
pub const MANIFEST_FILE: &str = "basis_manifest.txt";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const PER_STATE_FILE: &str = "per_state.csv";
pub const FIG2_FILE: &str = "fig2_dpos_vs_t.csv";
pub const FIG4_FILE: &str = "fig4_deltaS_vs_w.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub format: String,
    pub mode: Mode,
    pub n_sites: usize,
    pub h: f64,
    pub g: f64,
    pub manifest: String,
    pub basis_size: usize,
    pub sector_dim: usize,
    pub shell_lo: f64,
    pub shell_hi: f64,
    pub shell_size: usize,
    pub dt: f64,
    pub steps: usize,
    pub duration: f64,
    pub dpos_eps: f64,
    pub final_d_pos: usize,
    pub max_d_pos: usize,
    pub final_reward: f64,
    pub vanished_steps: usize,
    pub degenerate: bool,
    /// Shell-mean entropy of the initial eigenstates, the stand-in for a
    /// thermal reference level.
    pub mean_initial_entropy: Option<f64>,
    pub std_initial_entropy: Option<f64>,
    /// Degenerate eigenvalues make the eigenvector basis solver-dependent;
    /// this pins the one the run used.
    pub eigenvector_checksum: String,
    pub basis_checksum: String,
    pub protocol_checksum: String,
}

fn csv_writer(path: &Path, tag: &str) -> Result<csv::Writer<fs::File>> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(file, "# eigenwork {tag} v1").map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Entropy report between the unperturbed eigenstates and the last sample.
pub fn final_ee_report(traj: &Trajectory) -> Option<EEReport> {
    let s0 = traj.initial_entropy.as_ref()?;
    let st = traj.final_sample()?.entropy.as_ref()?;
    ee_report(&traj.alphas, s0, st).ok()
}

pub fn summarize(out: &RunOutcome) -> RunSummary {
    let traj = &out.trajectory;
    let ee = final_ee_report(traj);
    let last = traj.steps.last();
    RunSummary {
        format: FORMAT_TAG.into(),
        mode: out.config.mode,
        n_sites: out.config.model.n_sites,
        h: out.config.model.h,
        g: out.config.model.g,
        manifest: out.basis.kind.to_string(),
        basis_size: out.basis.len(),
        sector_dim: out.problem.sector.dim(),
        shell_lo: out.problem.shell.lo,
        shell_hi: out.problem.shell.hi,
        shell_size: traj.shell_size(),
        dt: out.config.dt,
        steps: out.config.steps,
        duration: out.protocol.duration(),
        dpos_eps: traj.dpos_eps,
        final_d_pos: traj.final_d_pos(),
        max_d_pos: traj.max_d_pos(),
        final_reward: last.map_or(f64::NAN, |s| s.reward),
        vanished_steps: traj.steps.iter().filter(|s| s.vanished).count(),
        degenerate: traj.degenerate,
        mean_initial_entropy: ee.as_ref().map(|r| r.mean_s0),
        std_initial_entropy: ee.as_ref().map(|r| r.std_s0),
        eigenvector_checksum: out.problem.eig.checksum(),
        basis_checksum: out.basis.checksum(),
        protocol_checksum: text_checksum(&out.protocol.to_text()),
    }
}

/// Writes the full run directory and returns its summary.
pub fn write_run(out: &RunOutcome, dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let traj = &out.trajectory;
    write_text(&dir.join(CONFIG_FILE), &out.config.raw.to_toml()?)?;
    write_text(&dir.join(PROTOCOL_FILE), &out.protocol.to_text())?;
    write_text(&dir.join(MANIFEST_FILE), &out.basis.manifest())?;

    let spectrum_path = dir.join(SPECTRUM_FILE);
    let mut spectrum = fs::File::create(&spectrum_path).map_err(|e| Error::io(&spectrum_path, e))?;
    writeln!(spectrum, "# eigenwork spectrum v1").map_err(|e| Error::io(&spectrum_path, e))?;
    out.problem.eig.write_spectrum_csv(&out.problem.shell, spectrum)?;

    let mut w = csv_writer(&dir.join(TIMESERIES_FILE), "timeseries")?;
    w.write_record(["step", "t", "r", "Y_norm", "dr_dt", "D_pos", "vanished"])?;
    for s in &traj.steps {
        w.write_record([
            s.step.to_string(),
            num(s.t),
            num(s.reward),
            num(s.y_norm),
            num(s.dr_dt),
            s.d_pos.to_string(),
            (s.vanished as u8).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(dir.join(TIMESERIES_FILE), e))?;

    let mut w = csv_writer(&dir.join(PER_STATE_FILE), "per_state")?;
    w.write_record(["alpha", "E", "step", "t", "w", "W", "S"])?;
    for sample in &traj.samples {
        for (j, rec) in traj.work_records(sample).iter().enumerate() {
            let s = sample.entropy.as_ref().map_or(String::new(), |e| num(e[j]));
            w.write_record([
                rec.alpha.to_string(),
                num(rec.energy),
                sample.step.to_string(),
                num(rec.t),
                num(rec.w),
                num(rec.work),
                s,
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(dir.join(PER_STATE_FILE), e))?;

    let mut w = csv_writer(&dir.join(FIG2_FILE), "fig2_dpos_vs_t")?;
    w.write_record(["t", "D_pos", "shell_size"])?;
    for s in &traj.steps {
        w.write_record([num(s.t), s.d_pos.to_string(), traj.shell_size().to_string()])?;
    }
    w.flush().map_err(|e| Error::io(dir.join(FIG2_FILE), e))?;

    if let (Some(report), Some(last)) = (final_ee_report(traj), traj.final_sample()) {
        let mut w = csv_writer(&dir.join(FIG4_FILE), "fig4_deltaS_vs_w")?;
        w.write_record(["alpha", "w", "S0", "St", "S0_minus_St", "St_minus_S0", "in_dpos"])?;
        for (rec, &wv) in report.records.iter().zip(&last.w) {
            w.write_record([
                rec.alpha.to_string(),
                num(wv),
                num(rec.s0),
                num(rec.st),
                num(rec.delta),
                num(-rec.delta),
                ((wv >= traj.dpos_eps) as u8).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(dir.join(FIG4_FILE), e))?;
    }

    let summary = summarize(out);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse(e.to_string()))?;
    write_text(&dir.join(SUMMARY_FILE), &(json + "\n"))?;
    Ok(summary)
}

pub fn read_summary(dir: &Path) -> Result<RunSummary> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let s: RunSummary = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if s.format != FORMAT_TAG {
        return Err(Error::Parse(format!("{}: unknown format {}", path.display(), s.format)));
    }
    Ok(s)
}

pub fn read_config(dir: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(&dir.join(CONFIG_FILE))
}

pub fn read_protocol(path: &Path) -> Result<ControlProtocol> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ControlProtocol::parse(&text)
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct PerStateRow {
    pub alpha: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    pub step: usize,
    pub t: f64,
    pub w: f64,
    #[serde(rename = "W")]
    pub work: f64,
    #[serde(rename = "S")]
    pub entropy: Option<f64>,
}

pub fn read_per_state(dir: &Path) -> Result<Vec<PerStateRow>> {
    let mut r = csv_reader(&dir.join(PER_STATE_FILE))?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct TimeseriesRow {
    pub step: usize,
    pub t: f64,
    pub r: f64,
    #[serde(rename = "Y_norm")]
    pub y_norm: f64,
    pub dr_dt: f64,
    #[serde(rename = "D_pos")]
    pub d_pos: usize,
    pub vanished: u8,
}

pub fn read_timeseries(dir: &Path) -> Result<Vec<TimeseriesRow>> {
    let mut r = csv_reader(&dir.join(TIMESERIES_FILE))?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Per-state rows of the last sample in a run directory.
pub fn final_per_state(dir: &Path) -> Result<Vec<PerStateRow>> {
    let rows = read_per_state(dir)?;
    let last = rows
        .iter()
        .map(|r| r.step)
        .max()
        .ok_or_else(|| Error::Parse(format!("{}: no per-state rows", dir.display())))?;
    Ok(rows.into_iter().filter(|r| r.step == last).collect())
}
