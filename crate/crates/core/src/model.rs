//! The periodic quantum Ising chain `Σ_l Z_l Z_{l+1} + h Z_l + g X_l`.

use std::io::Write;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, matrix_checksum, SectorMatrix, C64};
use crate::operator::SymmetrizedOperator;
use crate::pauli::{Axis, PauliString};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    /// Longitudinal field.
    pub h: f64,
    /// Transverse field.
    pub g: f64,
    pub n_sites: usize,
}

/// Named field settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Nonintegrable,
    Integrable,
    QuenchTarget,
}

impl Preset {
    /// `(h, g)`.
    pub fn fields(self) -> (f64, f64) {
        match self {
            Preset::Nonintegrable => (0.9045, 0.809),
            Preset::Integrable => (0.0, 0.5),
            Preset::QuenchTarget => (0.0, 1.5),
        }
    }

    pub fn params(self, n_sites: usize) -> IsingParams {
        let (h, g) = self.fields();
        IsingParams { h, g, n_sites }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Nonintegrable => "nonintegrable",
            Preset::Integrable => "integrable",
            Preset::QuenchTarget => "quench-target",
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonintegrable" => Ok(Preset::Nonintegrable),
            "integrable" => Ok(Preset::Integrable),
            "quench-target" => Ok(Preset::QuenchTarget),
            _ => Err(Error::Config(format!("unknown preset {s:?}"))),
        }
    }
}

/// Default shell in energy density.
pub const SHELL_LO: f64 = -0.25;
pub const SHELL_HI: f64 = -0.1;

pub fn build_ising(params: &IsingParams) -> Result<SymmetrizedOperator> {
    let l = params.n_sites;
    if !params.h.is_finite() || !params.g.is_finite() {
        return Err(Error::InvalidArgument("Ising fields must be finite".into()));
    }
    if l < 2 {
        return Err(Error::InvalidArgument("Ising chain needs L >= 2".into()));
    }
    // At L=2 the bonds (0,1) and (1,0) coincide and both are kept, so the
    // coupling doubles as in the literal periodic sum.
    let zz = PauliString::new(&[(0, Axis::Z), (1, Axis::Z)], l)?;
    let z = PauliString::new(&[(0, Axis::Z)], l)?;
    let x = PauliString::new(&[(0, Axis::X)], l)?;
    let mut terms = SymmetrizedOperator::translation_sum(1.0, &zz);
    if params.h != 0.0 {
        terms.extend(SymmetrizedOperator::translation_sum(params.h, &z));
    }
    if params.g != 0.0 {
        terms.extend(SymmetrizedOperator::translation_sum(params.g, &x));
    }
    SymmetrizedOperator::new(
        format!("ising(h={},g={})", params.h, params.g),
        2,
        l,
        terms,
    )
}

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Ascending.
    pub energies: Vec<f64>,
    /// Columns are sector-coordinate eigenvectors.
    pub states: Mat<C64>,
    pub n_sites: usize,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn state(&self, alpha: usize) -> Vec<C64> {
        (0..self.states.nrows()).map(|i| self.states[(i, alpha)]).collect()
    }

    pub fn checksum(&self) -> String {
        matrix_checksum(self.states.as_ref())
    }

    /// `alpha,E,E_over_L,in_shell`.
    pub fn write_spectrum_csv(&self, shell: &EnergyShell, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "E", "E_over_L", "in_shell"])?;
        for (alpha, e) in self.energies.iter().enumerate() {
            w.write_record(&[
                alpha.to_string(),
                format!("{e:.16e}"),
                format!("{:.16e}", e / self.n_sites as f64),
                (shell.contains(alpha) as u8).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("spectrum.csv", e))?;
        Ok(())
    }
}

pub fn diagonalize(h: &SectorMatrix, n_sites: usize) -> Result<EigenDecomposition> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(crate::linalg::hermitian_deviation(h.as_ref())));
    }
    let eig = hermitian_eigen(h)?;
    Ok(EigenDecomposition {
        energies: eig.values,
        states: eig.vectors,
        n_sites,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyShell {
    pub lo: f64,
    pub hi: f64,
    /// Eigenstate indices with `E/L` in `[lo, hi]`, ascending.
    pub members: Vec<usize>,
}

impl EnergyShell {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, alpha: usize) -> bool {
        self.members.binary_search(&alpha).is_ok()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Closed-interval shell in energy density.
pub fn select_shell(energies: &[f64], n_sites: usize, lo: f64, hi: f64) -> Result<EnergyShell> {
    if lo >= hi || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("shell bounds [{lo}, {hi}] not ordered")));
    }
    let members = energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| {
            let density = e / n_sites as f64;
            density >= lo && density <= hi
        })
        .map(|(a, _)| a)
        .collect();
    Ok(EnergyShell { lo, hi, members })
}
