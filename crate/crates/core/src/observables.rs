//! Work counts and half-chain entanglement entropy.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::model::EnergyShell;
use crate::sector::SectorBasis;

/// Schmidt weights below this are dropped from the entropy sum.
pub const SCHMIDT_CUTOFF: f64 = 1e-14;

/// Work extracted from one shell eigenstate at one sample time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkRecord {
    pub alpha: usize,
    pub energy: f64,
    pub t: f64,
    /// Work density `w`.
    pub w: f64,
    /// Extracted work `W = L·w`.
    pub work: f64,
}

impl WorkRecord {
    pub fn new(alpha: usize, energy: f64, t: f64, w: f64, n_sites: usize) -> Self {
        WorkRecord {
            alpha,
            energy,
            t,
            w,
            work: w * n_sites as f64,
        }
    }
}

/// Half-chain entropies (nats) of one state before and after control.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EERecord {
    pub alpha: usize,
    pub s0: f64,
    pub st: f64,
    /// `S0 - St`.
    pub delta: f64,
}

/// Number of densities with `w >= eps`.
pub fn d_pos(w: &[f64], eps: f64) -> usize {
    w.iter().filter(|&&x| x >= eps).count()
}

/// `|{α ∈ shell : W_α >= εL}|`, requiring a record for every shell member.
pub fn d_pos_records(records: &[WorkRecord], eps: f64, shell: &EnergyShell) -> Result<usize> {
    let mut count = 0;
    for &alpha in &shell.members {
        let rec = records
            .iter()
            .find(|r| r.alpha == alpha)
            .ok_or_else(|| Error::InvalidArgument(format!("no work record for shell state {alpha}")))?;
        if rec.w >= eps {
            count += 1;
        }
    }
    Ok(count)
}

/// Von Neumann entropy of the sites in `block_mask` for a full-space state.
pub fn block_entropy(state: &[C64], n_sites: usize, block_mask: u32) -> Result<f64> {
    if state.len() != 1usize << n_sites {
        return Err(Error::InvalidArgument(format!(
            "state of length {} on {n_sites} sites",
            state.len()
        )));
    }
    let norm_sq: f64 = state.iter().map(|a| a.norm_sqr()).sum();
    if (norm_sq - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("state norm² {norm_sq} is not 1")));
    }
    let block_mask = block_mask & ((1u64 << n_sites) - 1) as u32;
    let na = block_mask.count_ones() as usize;
    let nb = n_sites - na;
    if na == 0 || nb == 0 {
        return Ok(0.0);
    }
    let a_sites: Vec<usize> = (0..n_sites).filter(|s| block_mask >> s & 1 == 1).collect();
    let b_sites: Vec<usize> = (0..n_sites).filter(|s| block_mask >> s & 1 == 0).collect();
    let scatter = |idx: usize, sites: &[usize]| -> usize {
        sites
            .iter()
            .enumerate()
            .fold(0, |acc, (bit, &site)| acc | ((idx >> bit & 1) << site))
    };
    let m = Mat::from_fn(1 << na, 1 << nb, |a, b| {
        state[scatter(a, &a_sites) | scatter(b, &b_sites)]
    });
    let sv = m
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    Ok(entropy_of_weights(sv.iter().map(|s| s * s)))
}

/// Entanglement entropy across the cut between sites `0..L/2` and the rest.
pub fn half_chain_ee(state: &[C64], n_sites: usize) -> Result<f64> {
    if n_sites % 2 != 0 {
        return Err(Error::InvalidArgument(format!("half-chain cut needs even L, got {n_sites}")));
    }
    block_entropy(state, n_sites, (1u32 << (n_sites / 2)) - 1)
}

/// `-Σ λ ln λ` over weights above [`SCHMIDT_CUTOFF`].
pub fn entropy_of_weights(weights: impl IntoIterator<Item = f64>) -> f64 {
    weights
        .into_iter()
        .filter(|&l| l > SCHMIDT_CUTOFF)
        .map(|l| -l * l.ln())
        .sum()
}

/// Half-chain entropy of each column of a sector-coordinate batch.
pub fn batch_entropies(states: &Mat<C64>, sector: &SectorBasis) -> Result<Vec<f64>> {
    (0..states.ncols())
        .into_par_iter()
        .map(|j| {
            let col: Vec<C64> = (0..states.nrows()).map(|i| states[(i, j)]).collect();
            half_chain_ee(&sector.embed_state(&col)?, sector.n_sites())
        })
        .collect()
}

/// Entropy change per state plus the shell-mean initial entropy used as the
/// reference level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EEReport {
    pub records: Vec<EERecord>,
    pub mean_s0: f64,
    pub std_s0: f64,
}

pub fn ee_report(alphas: &[usize], s0: &[f64], st: &[f64]) -> Result<EEReport> {
    if alphas.len() != s0.len() || s0.len() != st.len() {
        return Err(Error::InvalidArgument("entropy vectors of different lengths".into()));
    }
    let records: Vec<EERecord> = alphas
        .iter()
        .zip(s0.iter().zip(st))
        .map(|(&alpha, (&s0, &st))| EERecord {
            alpha,
            s0,
            st,
            delta: s0 - st,
        })
        .collect();
    let n = s0.len().max(1) as f64;
    let mean_s0 = s0.iter().sum::<f64>() / n;
    let std_s0 = (s0.iter().map(|s| (s - mean_s0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(EEReport {
        records,
        mean_s0,
        std_s0,
    })
}
