//! Greedy norm-constrained control: each step picks the coefficients that
//! maximize the instantaneous growth of the reward.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{SectorMatrix, SparseSectorMatrix, C64, ZERO};
use crate::problem::Problem;
use crate::propagate::{
    control_hamiltonian, expm_step, ControlProtocol, Kick, ProjectedControls, ProtocolHeader,
    SampleSchedule, StateBatch,
};
use crate::trajectory::{Recorder, Trajectory};

/// Largest tolerated real part of `Σ_α g_α Tr[[H, O_i] ρ_α] / L`.
pub const Y_RESIDUE_TOL: f64 = 1e-10;

/// Largest tolerated imaginary part of an energy expectation.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    pub a: f64,
    pub c: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            a: 30.0,
            c: 0.1,
            epsilon: 0.15,
            delta: 0.3,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !(self.c >= 0.0) || !(self.epsilon < self.delta) {
            return Err(Error::Config(format!(
                "reward parameters need a > 0, c >= 0, epsilon < delta; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// `1 / (1 + e^{-a x})`.
pub fn sigmoid(a: f64, x: f64) -> f64 {
    1.0 / (1.0 + (-a * x).exp())
}

/// `Σ_α [σ_a(w_α - ε) + c (w_α - δ) θ(δ - w_α)]` with `θ(0) = 0`.
pub fn reward(w: &[f64], p: &RewardParams) -> f64 {
    w.iter()
        .map(|&x| {
            let penalty = if x < p.delta { p.c * (x - p.delta) } else { 0.0 };
            sigmoid(p.a, x - p.epsilon) + penalty
        })
        .sum()
}

/// `∂r/∂w_α`.
pub fn reward_grad(w: &[f64], p: &RewardParams) -> Vec<f64> {
    w.iter()
        .map(|&x| {
            let s = sigmoid(p.a, x - p.epsilon);
            let slope = p.a * s * (1.0 - s);
            if x < p.delta {
                slope + p.c
            } else {
                slope
            }
        })
        .collect()
}

fn check_dims(batch: &StateBatch, h: &SectorMatrix) -> Result<()> {
    if batch.dim() != h.dim() {
        return Err(Error::InvalidArgument(format!(
            "batch dimension {} against Hamiltonian dimension {}",
            batch.dim(),
            h.dim()
        )));
    }
    Ok(())
}

/// Densities `w_α` together with `H ψ_α` (columns), reused by [`compute_y_with`].
pub fn work_density_and_image(
    batch: &StateBatch,
    h_target: &SectorMatrix,
    n_sites: usize,
) -> Result<(Vec<f64>, Mat<C64>)> {
    check_dims(batch, h_target)?;
    let psi = batch.states();
    let phi = h_target.as_ref() * psi;
    let mut w = Vec::with_capacity(batch.len());
    for (j, &e) in batch.energies().iter().enumerate() {
        let mut ev = ZERO;
        for i in 0..batch.dim() {
            ev += psi[(i, j)].conj() * phi[(i, j)];
        }
        if ev.im.abs() > EXPECTATION_IMAG_TOL {
            return Err(Error::Numerical(format!("energy expectation has imaginary part {:e}", ev.im)));
        }
        w.push((e - ev.re) / n_sites as f64);
    }
    Ok((w, phi))
}

/// `w_α = (E_α - ⟨ψ_α|H|ψ_α⟩) / L`.
pub fn work_density(batch: &StateBatch, h_target: &SectorMatrix, n_sites: usize) -> Result<Vec<f64>> {
    work_density_and_image(batch, h_target, n_sites).map(|(w, _)| w)
}

/// `A_{jk} = Σ_α g_α conj((Hψ_α)_j) (ψ_α)_k`, so that
/// `Σ_{jk} O_{jk} A_{jk} = Σ_α g_α ⟨Hψ_α|O|ψ_α⟩`.
fn weighted_overlap(psi: &Mat<C64>, phi: &Mat<C64>, weights: &[f64]) -> Mat<C64> {
    let left = Mat::from_fn(phi.nrows(), phi.ncols(), |j, a| phi[(j, a)].conj() * weights[a]);
    &left * psi.transpose()
}

/// `Y_i = (i/L) Σ_α g_α Tr[[H, O_i] ρ_α]` given `phi = H ψ`.
pub fn compute_y_with(
    batch: &StateBatch,
    phi: &Mat<C64>,
    mats: &[SparseSectorMatrix],
    grad: &[f64],
    n_sites: usize,
) -> Result<Vec<f64>> {
    if grad.len() != batch.len() || phi.ncols() != batch.len() {
        return Err(Error::InvalidArgument("gradient length differs from batch size".into()));
    }
    let a = weighted_overlap(batch.states(), phi, grad);
    let l = n_sites as f64;
    let comps: Vec<(f64, f64)> = mats
        .par_iter()
        .map(|m| {
            // ⟨Hψ|O|ψ⟩ - ⟨ψ|O|Hψ⟩, weighted and summed over the batch.
            let comm = m.contract(a.as_ref()) - m.contract_adjoint(a.as_ref());
            (-comm.im / l, comm.re.abs() / l)
        })
        .collect();
    let worst = comps.iter().map(|c| c.1).fold(0.0, f64::max);
    if worst > Y_RESIDUE_TOL {
        return Err(Error::Numerical(format!("commutator expectation has real residue {worst:e}")));
    }
    Ok(comps.into_iter().map(|c| c.0).collect())
}

pub fn compute_y(
    batch: &StateBatch,
    h_target: &SectorMatrix,
    mats: &[SparseSectorMatrix],
    grad: &[f64],
    n_sites: usize,
) -> Result<Vec<f64>> {
    let (_, phi) = work_density_and_image(batch, h_target, n_sites)?;
    compute_y_with(batch, &phi, mats, grad, n_sites)
}

/// `dw_α/dt` under the control `Σ_i γ_i O_i`, one entry per batch column.
pub fn work_rate(
    batch: &StateBatch,
    h_target: &SectorMatrix,
    mats: &[SparseSectorMatrix],
    gamma: &[f64],
    n_sites: usize,
) -> Result<Vec<f64>> {
    (0..batch.len())
        .map(|j| {
            let mut one_hot = vec![0.0; batch.len()];
            one_hot[j] = 1.0;
            let y = compute_y(batch, h_target, mats, &one_hot, n_sites)?;
            Ok(gamma.iter().zip(&y).map(|(g, y)| g * y).sum())
        })
        .collect()
}

/// `√(2 L d)` with `d = 2^L`.
pub fn default_norm_bound(n_sites: usize) -> f64 {
    (2.0 * n_sites as f64 * (n_sites as f64).exp2()).sqrt()
}

/// `1e-12 · √n` for a basis of `n` operators.
pub fn default_vanish_tol(n_ops: usize) -> f64 {
    1e-12 * (n_ops as f64).sqrt()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaSolution {
    pub gamma: Vec<f64>,
    pub y_norm: f64,
    pub vanished: bool,
}

/// Closed-form maximizer of `Σ γ_i Y_i` subject to `L d Σ γ_i² <= C²`.
pub fn solve_gamma(y: &[f64], c: f64, n_sites: usize, tol: f64) -> GammaSolution {
    let y_norm = l2_norm(y);
    if y_norm <= tol {
        return GammaSolution {
            gamma: vec![0.0; y.len()],
            y_norm,
            vanished: true,
        };
    }
    let ld = n_sites as f64 * (n_sites as f64).exp2();
    let scale = c / (ld.sqrt() * y_norm);
    GammaSolution {
        gamma: y.iter().map(|v| v * scale).collect(),
        y_norm,
        vanished: false,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub dt: f64,
    pub steps: usize,
    /// `None` means `√(2Ld)`.
    pub norm_bound: Option<f64>,
    pub kick: Option<Kick>,
    /// `None` means `1e-12 · √n`.
    pub vanish_tol: Option<f64>,
    pub reward: RewardParams,
    pub dpos_eps: f64,
    pub schedule: SampleSchedule,
    pub entropy: bool,
}

impl OptimizerConfig {
    pub fn new(dt: f64, duration: f64) -> Result<Self> {
        Ok(OptimizerConfig {
            dt,
            steps: steps_for(duration, dt)?,
            norm_bound: None,
            kick: Some(Kick { duration: 0.001 }),
            vanish_tol: None,
            reward: RewardParams::default(),
            dpos_eps: 0.15,
            schedule: SampleSchedule { every: 50 },
            entropy: false,
        })
    }

    fn validate(&self) -> Result<()> {
        self.reward.validate()?;
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if self.norm_bound.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::Config("norm bound must be positive".into()));
        }
        if self.kick.is_some_and(|k| !(k.duration >= 0.0)) {
            return Err(Error::Config("kick duration must be non-negative".into()));
        }
        Ok(())
    }
}

/// Integer step count for `duration`, which must be a multiple of `dt`.
pub fn steps_for(duration: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(duration >= 0.0) {
        return Err(Error::Config(format!("bad time grid: duration {duration}, dt {dt}")));
    }
    let n = (duration / dt).round();
    if (n * dt - duration).abs() > 1e-12 {
        return Err(Error::Config(format!("duration {duration} is not a multiple of dt {dt}")));
    }
    Ok(n as usize)
}

pub struct OptimizeOutcome {
    pub protocol: ControlProtocol,
    pub trajectory: Trajectory,
}

/// Runs the greedy controller from the shell eigenstates of `problem`.
pub fn optimize(
    config: &OptimizerConfig,
    problem: &Problem,
    controls: &ProjectedControls,
) -> Result<OptimizeOutcome> {
    config.validate()?;
    problem.require_shell()?;
    let l = problem.n_sites();
    let c = config.norm_bound.unwrap_or_else(|| default_norm_bound(l));
    let tol = config.vanish_tol.unwrap_or_else(|| default_vanish_tol(controls.len()));
    let mut batch = StateBatch::from_shell(&problem.eig, &problem.shell);
    let mut recorder = Recorder::new(
        problem,
        config.reward,
        config.dpos_eps,
        config.schedule,
        config.entropy,
        config.steps,
        config.dt,
    )?;
    if let Some(kick) = config.kick {
        controls.apply_kick(&mut batch, kick)?;
    }
    batch.set_time(0.0);

    let mut gammas = Vec::with_capacity(config.steps);
    let mut vanished_steps = 0;
    for step in 0..=config.steps {
        let (w, phi) = work_density_and_image(&batch, &problem.h_target, l)?;
        let grad = reward_grad(&w, &config.reward);
        let y = compute_y_with(&batch, &phi, &controls.mats, &grad, l)?;
        let sol = solve_gamma(&y, c, l, tol);
        let dr_dt: f64 = sol.gamma.iter().zip(&y).map(|(g, y)| g * y).sum();
        recorder.record(step, &batch, &w, sol.y_norm, dr_dt, sol.vanished)?;
        if step == config.steps {
            break;
        }
        if sol.vanished {
            vanished_steps += 1;
        } else {
            let u = expm_step(&control_hamiltonian(&sol.gamma, &controls.mats)?, config.dt)?;
            batch.apply(&u, config.dt);
        }
        batch.set_time((step + 1) as f64 * config.dt);
        gammas.push(sol.gamma);
    }
    batch.check_norms()?;
    let degenerate = config.steps > 0 && vanished_steps == config.steps;
    if degenerate {
        log::warn!("control gradient vanished at every step; the run is degenerate");
    }
    let protocol = ControlProtocol {
        header: ProtocolHeader {
            model: problem.model,
            shell_lo: problem.shell.lo,
            shell_hi: problem.shell.hi,
            kind: controls.kind,
            basis_checksum: controls.checksum.clone(),
            dt: config.dt,
            kick: config.kick,
        },
        gammas,
    };
    Ok(OptimizeOutcome {
        protocol,
        trajectory: recorder.finish(degenerate),
    })
}
