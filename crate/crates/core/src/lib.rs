//! Exact-diagonalization laboratory for work extraction from energy
//! eigenstates of the periodic quantum Ising chain under greedy,
//! norm-constrained control.
//!
//! All dynamics run inside the zero-momentum, inversion-even sector; the
//! full `2^L` space is only touched to compute entanglement entropies.

pub mod basis;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod operator;
pub mod optimize;
pub mod pauli;
pub mod problem;
pub mod propagate;
pub mod sector;
pub mod trajectory;

pub use basis::{build_basis, discrete_action_set, enumerate_window_paulis, ControlBasis, ManifestKind};
pub use error::{Error, Result};
pub use linalg::{use_sequential_kernels, SectorMatrix, SparseSectorMatrix, C64};
pub use model::{build_ising, diagonalize, select_shell, EigenDecomposition, EnergyShell, IsingParams, Preset};
pub use operator::SymmetrizedOperator;
pub use pauli::{Axis, PauliString, Phase};
pub use observables::{d_pos, ee_report, half_chain_ee, EERecord, EEReport, WorkRecord};
pub use optimize::{
    compute_y, optimize, reward, reward_grad, solve_gamma, work_density, OptimizeOutcome, OptimizerConfig,
    RewardParams,
};
pub use problem::Problem;
pub use propagate::{evolve, expm_step, ControlProtocol, Kick, ProjectedControls, SampleSchedule, StateBatch};
pub use sector::{project_operator, SectorBasis};
pub use trajectory::{Recorder, Sample, StepRecord, Trajectory};
