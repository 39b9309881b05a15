//! Shared fixtures for the benchmarks.

use eigenwork_core::{ControlBasis, Kick, ManifestKind, Preset, Problem, ProjectedControls, Result, StateBatch};

/// Integrable chain on `n_sites` with the standard shell.
pub fn problem(n_sites: usize) -> Result<Problem> {
    Problem::new(Preset::Integrable.params(n_sites), -0.25, -0.1)
}

pub fn local_basis(n_sites: usize, k: usize) -> Result<ControlBasis> {
    ControlBasis::build(ManifestKind::Local { k }, n_sites)
}

/// Shell states after the standard kick, so gradients are nonzero.
pub fn kicked_batch(p: &Problem, controls: &ProjectedControls) -> Result<StateBatch> {
    let mut batch = StateBatch::from_shell(&p.eig, &p.shell);
    controls.apply_kick(&mut batch, Kick { duration: 0.001 })?;
    Ok(batch)
}
