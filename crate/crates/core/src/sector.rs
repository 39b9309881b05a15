//! The zero-momentum, inversion-even sector of a periodic spin-1/2 chain.
//!
//! Translation and reflection only permute computational basis states, so
//! the sector is spanned by uniform superpositions over dihedral orbits
//! `|s⟩ = |O|^{-1/2} Σ_{b ∈ O} |b⟩`, one per orbit.

use std::fmt::Write as _;

use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{SectorMatrix, SparseSectorMatrix, C64, ZERO};
use crate::operator::SymmetrizedOperator;

/// Largest supported chain; the index table has `2^L` entries.
pub const MAX_SECTOR_SITES: usize = 20;

/// Cyclic shift of the site bits of `n` by `shift` (site `l` to `l+shift`).
pub fn translate_index(n: u64, shift: usize, n_sites: usize) -> u64 {
    let s = shift % n_sites;
    if s == 0 {
        return n;
    }
    let mask = (1u64 << n_sites) - 1;
    ((n << s) | (n >> (n_sites - s))) & mask
}

/// Reflection `l ↦ L-1-l` of the site bits of `n`.
pub fn invert_index(n: u64, n_sites: usize) -> u64 {
    n.reverse_bits() >> (64 - n_sites)
}

#[derive(Clone, Debug)]
pub struct SectorBasis {
    n_sites: usize,
    reps: Vec<u32>,
    orbit_sizes: Vec<u32>,
    norms: Vec<f64>,
    index_of: Vec<u32>,
}

impl SectorBasis {
    pub fn new(n_sites: usize) -> Result<Self> {
        if !(2..=MAX_SECTOR_SITES).contains(&n_sites) {
            return Err(Error::InvalidArgument(format!(
                "sector construction needs 2 <= L <= {MAX_SECTOR_SITES}, got {n_sites}"
            )));
        }
        let full = 1usize << n_sites;
        let mut index_of = vec![u32::MAX; full];
        let mut reps = Vec::new();
        let mut orbit_sizes = Vec::new();
        let mut norms = Vec::new();
        let mut orbit = Vec::with_capacity(2 * n_sites);
        for n in 0..full as u64 {
            if index_of[n as usize] != u32::MAX {
                continue;
            }
            orbit.clear();
            let r = invert_index(n, n_sites);
            for l in 0..n_sites {
                orbit.push(translate_index(n, l, n_sites));
                orbit.push(translate_index(r, l, n_sites));
            }
            orbit.sort_unstable();
            orbit.dedup();
            // All group characters are +1 and the action is a permutation,
            // so the symmetric sum over an orbit never vanishes.
            let idx = reps.len() as u32;
            for &b in &orbit {
                index_of[b as usize] = idx;
            }
            reps.push(n as u32);
            orbit_sizes.push(orbit.len() as u32);
            norms.push((orbit.len() as f64).sqrt().recip());
        }
        Ok(SectorBasis {
            n_sites,
            reps,
            orbit_sizes,
            norms,
            index_of,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn full_dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn representatives(&self) -> &[u32] {
        &self.reps
    }

    pub fn orbit_sizes(&self) -> &[u32] {
        &self.orbit_sizes
    }

    /// Amplitude of every orbit member in the normalized sector state.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Sector coordinate of the orbit containing basis state `n`.
    pub fn sector_index(&self, n: u64) -> usize {
        self.index_of[n as usize] as usize
    }

    /// Sector coordinates to the full `2^L` space.
    pub fn embed_state(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "sector vector has length {}, expected {}",
                v.len(),
                self.dim()
            )));
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "sector vector not normalized (norm {norm})"
            )));
        }
        Ok(self
            .index_of
            .iter()
            .map(|&s| v[s as usize] * self.norms[s as usize])
            .collect())
    }

    /// Orthogonal projection of a full-space vector onto the sector basis.
    pub fn restrict(&self, full: &[C64]) -> Result<Vec<C64>> {
        if full.len() != self.full_dim() {
            return Err(Error::InvalidArgument(format!(
                "full vector has length {}, expected {}",
                full.len(),
                self.full_dim()
            )));
        }
        let mut v = vec![ZERO; self.dim()];
        for (n, &s) in self.index_of.iter().enumerate() {
            v[s as usize] += full[n] * self.norms[s as usize];
        }
        Ok(v)
    }

    /// Text manifest: header line then one `rep norm` line per coordinate.
    pub fn manifest(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# sector k=0 R=+1");
        let _ = writeln!(out, "L={} dim={}", self.n_sites, self.dim());
        for (r, n) in self.reps.iter().zip(&self.norms) {
            let _ = writeln!(out, "{r} {n:.16e}");
        }
        out
    }
}

/// Sparse sector representation of a symmetric operator.
///
/// `⟨s'|Q|s⟩ = sqrt(|O_s| / |O_s'|) Σ_{b' ∈ O_s'} ⟨b'|Q|rep_s⟩`, which uses
/// only the representative column of each orbit.
pub fn project_operator_sparse(
    op: &SymmetrizedOperator,
    basis: &SectorBasis,
) -> Result<SparseSectorMatrix> {
    if op.n_sites() != basis.n_sites() {
        return Err(Error::InvalidArgument(format!(
            "operator on {} sites, basis on {}",
            op.n_sites(),
            basis.n_sites()
        )));
    }
    if !op.is_symmetric() {
        return Err(Error::NotSymmetric(op.label().to_string()));
    }
    let dim = basis.dim();
    let columns: Vec<Vec<(u32, C64)>> = (0..dim)
        .into_par_iter()
        .map(|col| {
            let rep = basis.reps[col] as u64;
            let size_col = basis.orbit_sizes[col] as f64;
            let mut entries: Vec<(u32, C64)> = op
                .terms()
                .iter()
                .map(|(c, p)| {
                    let (m, ph) = p.apply_to_basis_state(rep);
                    let row = basis.index_of[m as usize];
                    let w = (size_col / basis.orbit_sizes[row as usize] as f64).sqrt();
                    (row, ph.to_complex() * (c * w))
                })
                .collect();
            entries.sort_by_key(|e| e.0);
            entries
        })
        .collect();
    let mut rows: Vec<Vec<(u32, C64)>> = vec![Vec::new(); dim];
    for (col, entries) in columns.into_iter().enumerate() {
        for (row, v) in entries {
            rows[row as usize].push((col as u32, v));
        }
    }
    Ok(SparseSectorMatrix::from_rows(dim, rows))
}

/// Dense sector matrix of a symmetric operator; checked Hermitian.
pub fn project_operator(op: &SymmetrizedOperator, basis: &SectorBasis) -> Result<SectorMatrix> {
    project_operator_sparse(op, basis)?.to_sector_matrix()
}

/// Matrix whose columns are the embedded sector basis vectors (`2^L x dim`).
pub fn embedding_matrix(basis: &SectorBasis) -> Mat<C64> {
    let mut m = Mat::zeros(basis.full_dim(), basis.dim());
    for (n, &s) in basis.index_of.iter().enumerate() {
        m[(n, s as usize)] = C64::new(basis.norms[s as usize], 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigen, max_abs_diff};
    use crate::pauli::{Axis, PauliString};

    /// Dimension of the common +1 eigenspace of T and R via the group
    /// projector trace: (1/2L) Σ_g Tr[g] = (1/2L) Σ_g #fixed points of g.
    fn brute_force_dim(n_sites: usize) -> usize {
        let full = 1u64 << n_sites;
        let mut fixed = 0usize;
        for l in 0..n_sites {
            for n in 0..full {
                if translate_index(n, l, n_sites) == n {
                    fixed += 1;
                }
                if translate_index(invert_index(n, n_sites), l, n_sites) == n {
                    fixed += 1;
                }
            }
        }
        assert_eq!(fixed % (2 * n_sites), 0);
        fixed / (2 * n_sites)
    }

    fn ising_zz(n: usize) -> SymmetrizedOperator {
        let zz = PauliString::new(&[(0, Axis::Z), (1, Axis::Z)], n).unwrap();
        SymmetrizedOperator::new("ZZ", 2, n, SymmetrizedOperator::translation_sum(1.0, &zz)).unwrap()
    }

    #[test]
    fn dimensions_match_group_projector_trace() {
        assert_eq!(SectorBasis::new(4).unwrap().dim(), 6);
        assert_eq!(SectorBasis::new(2).unwrap().dim(), 3);
        for l in 2..=8 {
            assert_eq!(SectorBasis::new(l).unwrap().dim(), brute_force_dim(l), "L={l}");
        }
    }

    #[test]
    fn rejects_out_of_range_sizes() {
        assert!(SectorBasis::new(1).is_err());
        assert!(SectorBasis::new(MAX_SECTOR_SITES + 1).is_err());
    }

    #[test]
    fn embedded_vectors_are_symmetric_and_orthonormal() {
        for l in [3, 4, 6] {
            let b = SectorBasis::new(l).unwrap();
            let e = embedding_matrix(&b);
            let gram = e.adjoint() * &e;
            let id = Mat::<C64>::identity(b.dim(), b.dim());
            assert!(max_abs_diff(gram.as_ref(), id.as_ref()) < 1e-12);
            for s in 0..b.dim() {
                for n in 0..b.full_dim() as u64 {
                    let t = translate_index(n, 1, l) as usize;
                    let r = invert_index(n, l) as usize;
                    assert!((e[(t, s)] - e[(n as usize, s)]).norm() < 1e-12);
                    assert!((e[(r, s)] - e[(n as usize, s)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn embed_examples() {
        let b = SectorBasis::new(4).unwrap();
        let s = b.sector_index(0b0101);
        let mut v = vec![ZERO; b.dim()];
        v[s] = C64::new(1.0, 0.0);
        let full = b.embed_state(&v).unwrap();
        let h = 0.5f64.sqrt();
        for (n, amp) in full.iter().enumerate() {
            let expect = if n == 0b0101 || n == 0b1010 { h } else { 0.0 };
            assert!((amp.re - expect).abs() < 1e-15 && amp.im == 0.0);
        }
        let mut v0 = vec![ZERO; b.dim()];
        v0[b.sector_index(0)] = C64::new(1.0, 0.0);
        let full0 = b.embed_state(&v0).unwrap();
        assert_eq!(full0[0], C64::new(1.0, 0.0));
        assert!(full0[1..].iter().all(|a| a.norm() == 0.0));
        let back = b.restrict(&full).unwrap();
        assert!(back.iter().zip(&v).all(|(a, c)| (a - c).norm() < 1e-15));
        assert!(b.embed_state(&vec![ZERO; b.dim()]).is_err());
    }

    #[test]
    fn classical_ising_sector_matrix() {
        let b = SectorBasis::new(4).unwrap();
        let m = project_operator(&ising_zz(4), &b).unwrap();
        let mut diag = Vec::new();
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                if i != j {
                    assert!(m.as_ref()[(i, j)].norm() < 1e-14);
                }
            }
            diag.push(m.as_ref()[(i, i)].re);
        }
        diag.sort_by(f64::total_cmp);
        assert_eq!(diag, vec![-4.0, 0.0, 0.0, 0.0, 4.0, 4.0]);
    }

    #[test]
    fn magnetization_is_traceless() {
        let b = SectorBasis::new(4).unwrap();
        let z = PauliString::new(&[(0, Axis::Z)], 4).unwrap();
        let op = SymmetrizedOperator::new("Z", 1, 4, SymmetrizedOperator::translation_sum(1.0, &z))
            .unwrap();
        let m = project_operator(&op, &b).unwrap();
        let tr: f64 = (0..b.dim()).map(|i| m.as_ref()[(i, i)].re).sum();
        assert!(tr.abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_operator() {
        let b = SectorBasis::new(4).unwrap();
        let x = PauliString::new(&[(0, Axis::X)], 4).unwrap();
        let op = SymmetrizedOperator::new("X0", 1, 4, vec![(1.0, x)]).unwrap();
        assert!(matches!(project_operator(&op, &b), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn projection_equals_restricted_full_matrix() {
        let l = 5;
        let b = SectorBasis::new(l).unwrap();
        let xy = PauliString::new(&[(0, Axis::X), (1, Axis::Y)], l).unwrap();
        let mut terms = SymmetrizedOperator::translation_sum(1.0, &xy);
        terms.extend(SymmetrizedOperator::translation_sum(1.0, &xy.invert()));
        let y = PauliString::new(&[(0, Axis::Y)], l).unwrap();
        terms.extend(SymmetrizedOperator::translation_sum(0.3, &y));
        let op = SymmetrizedOperator::new("mix", 2, l, terms).unwrap();
        let e = embedding_matrix(&b);
        let dense = e.adjoint() * op.to_full_matrix() * &e;
        let proj = project_operator(&op, &b).unwrap();
        assert!(max_abs_diff(dense.as_ref(), proj.as_ref()) < 1e-12);
    }

    #[test]
    fn sector_spectrum_inside_full_spectrum() {
        let l = 6;
        let b = SectorBasis::new(l).unwrap();
        let op = ising_zz(l);
        let full = SectorMatrix::new(op.to_full_matrix()).unwrap();
        let full_ev = hermitian_eigen(&full).unwrap().values;
        let sec_ev = hermitian_eigen(&project_operator(&op, &b).unwrap()).unwrap().values;
        for e in sec_ev {
            assert!(full_ev.iter().any(|f| (f - e).abs() < 1e-9));
        }
    }

    #[test]
    fn manifest_lists_every_orbit() {
        let b = SectorBasis::new(4).unwrap();
        let m = b.manifest();
        assert!(m.contains("L=4 dim=6"));
        assert_eq!(m.lines().count(), 2 + 6);
    }
}
