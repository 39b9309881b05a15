//! The fixed part of a run: chain, sector, target Hamiltonian, spectrum and shell.

use crate::error::{Error, Result};
use crate::linalg::SectorMatrix;
use crate::model::{build_ising, diagonalize, select_shell, EigenDecomposition, EnergyShell, IsingParams};
use crate::sector::{project_operator, SectorBasis};

#[derive(Clone, Debug)]
pub struct Problem {
    pub model: IsingParams,
    pub sector: SectorBasis,
    pub h_target: SectorMatrix,
    pub eig: EigenDecomposition,
    pub shell: EnergyShell,
}

impl Problem {
    pub fn new(model: IsingParams, shell_lo: f64, shell_hi: f64) -> Result<Self> {
        let sector = SectorBasis::new(model.n_sites)?;
        let h_target = project_operator(&build_ising(&model)?, &sector)?;
        let eig = diagonalize(&h_target, model.n_sites)?;
        let shell = select_shell(&eig.energies, model.n_sites, shell_lo, shell_hi)?;
        log::info!(
            "L={} h={} g={}: sector dim {}, shell {} states",
            model.n_sites,
            model.h,
            model.g,
            sector.dim(),
            shell.len()
        );
        Ok(Problem {
            model,
            sector,
            h_target,
            eig,
            shell,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.model.n_sites
    }

    pub fn require_shell(&self) -> Result<()> {
        if self.shell.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "energy shell [{}, {}] is empty at L={}",
                self.shell.lo,
                self.shell.hi,
                self.n_sites()
            )));
        }
        Ok(())
    }
}
