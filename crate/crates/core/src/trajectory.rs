//! Per-step and per-sample records shared by every run mode.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::observables::{batch_entropies, d_pos, WorkRecord};
use crate::optimize::{reward, work_density, RewardParams};
use crate::problem::Problem;
use crate::propagate::{SampleSchedule, StateBatch};

/// One row of `timeseries.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub reward: f64,
    /// NaN outside optimize mode.
    pub y_norm: f64,
    /// NaN outside optimize mode.
    pub dr_dt: f64,
    pub d_pos: usize,
    pub vanished: bool,
}

/// Work densities (and optionally entropies) of the whole shell at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub step: usize,
    pub t: f64,
    pub w: Vec<f64>,
    pub entropy: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n_sites: usize,
    pub alphas: Vec<usize>,
    pub energies: Vec<f64>,
    pub dpos_eps: f64,
    /// Entropies of the unperturbed eigenstates, before any kick.
    pub initial_entropy: Option<Vec<f64>>,
    pub steps: Vec<StepRecord>,
    pub samples: Vec<Sample>,
    /// Set when the control gradient vanished at every step.
    pub degenerate: bool,
}

impl Trajectory {
    pub fn shell_size(&self) -> usize {
        self.alphas.len()
    }

    pub fn final_sample(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn final_w(&self) -> &[f64] {
        self.final_sample().map_or(&[], |s| &s.w)
    }

    pub fn final_d_pos(&self) -> usize {
        self.steps.last().map_or(0, |s| s.d_pos)
    }

    pub fn max_d_pos(&self) -> usize {
        self.steps.iter().map(|s| s.d_pos).max().unwrap_or(0)
    }

    pub fn work_records(&self, sample: &Sample) -> Vec<WorkRecord> {
        self.alphas
            .iter()
            .zip(&self.energies)
            .zip(&sample.w)
            .map(|((&a, &e), &w)| WorkRecord::new(a, e, sample.t, w, self.n_sites))
            .collect()
    }
}

/// Observer that turns batch snapshots into a [`Trajectory`].
pub struct Recorder<'a> {
    problem: &'a Problem,
    reward: RewardParams,
    schedule: SampleSchedule,
    entropy: bool,
    total_steps: usize,
    dt: f64,
    traj: Trajectory,
}

impl<'a> Recorder<'a> {
    pub fn new(
        problem: &'a Problem,
        reward: RewardParams,
        dpos_eps: f64,
        schedule: SampleSchedule,
        entropy: bool,
        total_steps: usize,
        dt: f64,
    ) -> Result<Self> {
        let initial = StateBatch::from_shell(&problem.eig, &problem.shell);
        let initial_entropy = if entropy && problem.n_sites() % 2 == 0 {
            Some(batch_entropies(initial.states(), &problem.sector)?)
        } else {
            None
        };
        Ok(Recorder {
            problem,
            reward,
            schedule,
            entropy: initial_entropy.is_some(),
            total_steps,
            dt,
            traj: Trajectory {
                n_sites: problem.n_sites(),
                alphas: initial.alphas().to_vec(),
                energies: initial.energies().to_vec(),
                dpos_eps,
                initial_entropy,
                steps: Vec::with_capacity(total_steps + 1),
                samples: Vec::new(),
                degenerate: false,
            },
        })
    }

    /// Records step `step` given densities already computed from `batch`.
    pub fn record(
        &mut self,
        step: usize,
        batch: &StateBatch,
        w: &[f64],
        y_norm: f64,
        dr_dt: f64,
        vanished: bool,
    ) -> Result<()> {
        let t = step as f64 * self.dt;
        self.traj.steps.push(StepRecord {
            step,
            t,
            reward: reward(w, &self.reward),
            y_norm,
            dr_dt,
            d_pos: d_pos(w, self.traj.dpos_eps),
            vanished,
        });
        if self.schedule.is_sample(step, self.total_steps) {
            let entropy = if self.entropy {
                Some(batch_entropies(batch.states(), &self.problem.sector)?)
            } else {
                None
            };
            self.traj.samples.push(Sample {
                step,
                t,
                w: w.to_vec(),
                entropy,
            });
        }
        Ok(())
    }

    /// Observer form for [`crate::propagate::evolve`] with a sample-every-step schedule.
    pub fn observe(&mut self, step: usize, batch: &StateBatch) -> Result<()> {
        let w = work_density(batch, &self.problem.h_target, self.problem.n_sites())?;
        self.record(step, batch, &w, f64::NAN, f64::NAN, false)
    }

    pub fn finish(mut self, degenerate: bool) -> Trajectory {
        self.traj.degenerate = degenerate;
        self.traj
    }
}
