//! Optimize, quench and discrete runs, plus protocol replay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::ControlBasis;
use crate::error::{Error, Result};
use crate::optimize::{optimize, OptimizerConfig, RewardParams};
use crate::problem::Problem;
use crate::propagate::{evolve, ControlProtocol, Kick, ProjectedControls, ProtocolHeader, SampleSchedule, StateBatch};
use crate::trajectory::{Recorder, Trajectory};

use super::config::{Mode, ResolvedConfig};

/// Size of the discrete action set.
pub const DISCRETE_ACTIONS: usize = 7;

/// Uniform action indices from a seeded ChaCha8 stream.
pub fn random_action_sequence(seed: u64, length: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..length).map(|_| rng.gen_range(0..DISCRETE_ACTIONS)).collect()
}

/// Everything a finished run leaves behind.
pub struct RunOutcome {
    pub config: ResolvedConfig,
    pub problem: Problem,
    pub basis: ControlBasis,
    pub protocol: ControlProtocol,
    pub trajectory: Trajectory,
}

fn kick_of(duration: f64) -> Option<Kick> {
    (duration > 0.0).then_some(Kick { duration })
}

fn setup(config: &ResolvedConfig) -> Result<(Problem, ControlBasis, ProjectedControls)> {
    let shell = config.raw.shell;
    let problem = Problem::new(config.model, shell.lo, shell.hi)?;
    problem.require_shell()?;
    let basis = ControlBasis::build(config.kind, config.model.n_sites)?;
    let controls = ProjectedControls::new(&basis, &problem.sector)?;
    Ok((problem, basis, controls))
}

/// Runs whichever mode `config` selects.
pub fn run(config: &ResolvedConfig) -> Result<RunOutcome> {
    match config.mode {
        Mode::Optimize => run_optimize(config),
        Mode::Quench => run_quench(config),
        Mode::Discrete => run_discrete(config),
    }
}

pub fn run_optimize(config: &ResolvedConfig) -> Result<RunOutcome> {
    if config.mode != Mode::Optimize {
        return Err(Error::Config("not an optimize-mode config".into()));
    }
    let (problem, basis, controls) = setup(config)?;
    let opt = OptimizerConfig {
        dt: config.dt,
        steps: config.steps,
        norm_bound: None,
        kick: kick_of(config.kick),
        vanish_tol: config.raw.control.vanish_tol,
        reward: config.raw.reward,
        dpos_eps: config.dpos_eps,
        schedule: SampleSchedule { every: config.sample_every },
        entropy: config.entropy,
    };
    let out = optimize(&opt, &problem, &controls)?;
    Ok(RunOutcome {
        config: config.clone(),
        problem,
        basis,
        protocol: out.protocol,
        trajectory: out.trajectory,
    })
}

/// Fixed coefficient rows replayed through [`evolve`] with a full recorder.
fn run_fixed(config: &ResolvedConfig, gammas: Vec<Vec<f64>>) -> Result<RunOutcome> {
    let (problem, basis, controls) = setup(config)?;
    let protocol = ControlProtocol {
        header: ProtocolHeader {
            model: config.model,
            shell_lo: problem.shell.lo,
            shell_hi: problem.shell.hi,
            kind: config.kind,
            basis_checksum: controls.checksum.clone(),
            dt: config.dt,
            kick: kick_of(config.kick),
        },
        gammas,
    };
    let trajectory = replay_protocol(&problem, &controls, &protocol, config.raw.reward, config.dpos_eps, config.sample_every, config.entropy)?;
    Ok(RunOutcome {
        config: config.clone(),
        problem,
        basis,
        protocol,
        trajectory,
    })
}

/// Constant evolution under the quench Hamiltonian.
pub fn run_quench(config: &ResolvedConfig) -> Result<RunOutcome> {
    if config.mode != Mode::Quench {
        return Err(Error::Config("not a quench-mode config".into()));
    }
    run_fixed(config, vec![vec![1.0]; config.steps])
}

/// Evolution through a sequence of discrete actions.
pub fn run_discrete(config: &ResolvedConfig) -> Result<RunOutcome> {
    if config.mode != Mode::Discrete {
        return Err(Error::Config("not a discrete-mode config".into()));
    }
    let rows = config
        .actions
        .iter()
        .map(|&a| {
            if a >= DISCRETE_ACTIONS {
                return Err(Error::InvalidArgument(format!("action index {a} out of range")));
            }
            let mut row = vec![0.0; DISCRETE_ACTIONS];
            row[a] = 1.0;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    run_fixed(config, rows)
}

/// Re-evolves the shell under `protocol` and records every step.
pub fn replay_protocol(
    problem: &Problem,
    controls: &ProjectedControls,
    protocol: &ControlProtocol,
    reward: RewardParams,
    dpos_eps: f64,
    sample_every: usize,
    entropy: bool,
) -> Result<Trajectory> {
    let header = &protocol.header;
    if header.model != problem.model {
        return Err(Error::ManifestMismatch("protocol was recorded for a different model".into()));
    }
    let mut batch = StateBatch::from_shell(&problem.eig, &problem.shell);
    let mut recorder = Recorder::new(
        problem,
        reward,
        dpos_eps,
        SampleSchedule { every: sample_every },
        entropy,
        protocol.steps(),
        header.dt,
    )?;
    evolve(&mut batch, protocol, controls, SampleSchedule { every: 1 }, |step, b| {
        recorder.observe(step, b)
    })?;
    Ok(recorder.finish(false))
}

/// Rebuilds the problem named in a protocol header and replays it.
pub fn replay_standalone(
    protocol: &ControlProtocol,
    reward: RewardParams,
    dpos_eps: f64,
    sample_every: usize,
    entropy: bool,
) -> Result<Trajectory> {
    let h = &protocol.header;
    let problem = Problem::new(h.model, h.shell_lo, h.shell_hi)?;
    let basis = ControlBasis::build(h.kind, h.model.n_sites)?;
    let controls = ProjectedControls::new(&basis, &problem.sector)?;
    if controls.checksum != h.basis_checksum {
        return Err(Error::ManifestMismatch(format!(
            "rebuilt {} manifest has checksum {}, protocol expects {}",
            h.kind, controls.checksum, h.basis_checksum
        )));
    }
    replay_protocol(&problem, &controls, protocol, reward, dpos_eps, sample_every, entropy)
}
