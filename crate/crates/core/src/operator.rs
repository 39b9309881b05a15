//! Real linear combinations of Hermitian Pauli strings.

use std::collections::BTreeMap;

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::pauli::PauliString;

const SYMMETRY_TOL: f64 = 1e-12;

/// A Hermitian operator `Σ c_j P_j` with real `c_j` and Hermitian strings `P_j`.
///
/// Control-basis elements and model Hamiltonians are both of this form; the
/// symmetry predicates are checked on the term multiset, never on matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetrizedOperator {
    label: String,
    locality: usize,
    n_sites: usize,
    terms: Vec<(f64, PauliString)>,
}

impl SymmetrizedOperator {
    pub fn new(
        label: impl Into<String>,
        locality: usize,
        n_sites: usize,
        terms: Vec<(f64, PauliString)>,
    ) -> Result<Self> {
        for (c, p) in &terms {
            if p.n_sites() != n_sites {
                return Err(Error::InvalidArgument(format!(
                    "term {p} does not live on {n_sites} sites"
                )));
            }
            if !p.is_hermitian() {
                return Err(Error::InvalidArgument(format!("term {p} is not Hermitian")));
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient on {p}")));
            }
        }
        Ok(SymmetrizedOperator {
            label: label.into(),
            locality,
            n_sites,
            terms,
        })
    }

    /// `Σ_l T^l p T^{-l}` over all `L` shifts, times `coef`.
    pub fn translation_sum(coef: f64, p: &PauliString) -> Vec<(f64, PauliString)> {
        (0..p.n_sites())
            .map(|l| (coef, p.translate(l as i64)))
            .collect()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn locality(&self) -> usize {
        self.locality
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn hilbert_dim(&self) -> f64 {
        (self.n_sites as f64).exp2()
    }

    /// Merged coefficients of the bare products `X^x Z^z`, keyed by masks.
    pub fn coefficient_map(&self) -> BTreeMap<u64, C64> {
        let mut map = BTreeMap::new();
        for (c, p) in &self.terms {
            *map.entry(p.mask_key()).or_insert(ZERO) += p.phase().to_complex() * *c;
        }
        map.retain(|_, v| v.norm() > 1e-15);
        map
    }

    /// `Tr[A† B]` computed from the string expansion.
    pub fn frobenius_inner(&self, other: &SymmetrizedOperator) -> C64 {
        let a = self.coefficient_map();
        let b = other.coefficient_map();
        let mut acc = ZERO;
        for (k, va) in &a {
            if let Some(vb) = b.get(k) {
                acc += va.conj() * vb;
            }
        }
        acc * self.hilbert_dim()
    }

    /// `‖A‖₂² = Tr[A† A]`.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.coefficient_map().values().map(|v| v.norm_sqr()).sum::<f64>() * self.hilbert_dim()
    }

    fn mapped(&self, f: impl Fn(&PauliString) -> PauliString) -> BTreeMap<u64, C64> {
        let mut map = BTreeMap::new();
        for (c, p) in &self.terms {
            let q = f(p);
            *map.entry(q.mask_key()).or_insert(ZERO) += q.phase().to_complex() * *c;
        }
        map.retain(|_, v| v.norm() > 1e-15);
        map
    }

    fn maps_agree(a: &BTreeMap<u64, C64>, b: &BTreeMap<u64, C64>) -> bool {
        a.len() == b.len()
            && a.iter().all(|(k, va)| {
                b.get(k)
                    .is_some_and(|vb| (va - vb).norm() <= SYMMETRY_TOL * (1.0 + va.norm()))
            })
    }

    pub fn is_translation_invariant(&self) -> bool {
        Self::maps_agree(&self.coefficient_map(), &self.mapped(|p| p.translate(1)))
    }

    pub fn is_inversion_invariant(&self) -> bool {
        Self::maps_agree(&self.coefficient_map(), &self.mapped(PauliString::invert))
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_translation_invariant() && self.is_inversion_invariant()
    }

    /// `Σ_k w_k A_k`, all on the same chain.
    pub fn linear_combination(
        label: impl Into<String>,
        parts: &[(f64, &SymmetrizedOperator)],
    ) -> Result<Self> {
        let n_sites = parts
            .first()
            .map(|(_, op)| op.n_sites)
            .ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?;
        let mut terms = Vec::new();
        let mut locality = 0;
        for (w, op) in parts {
            if op.n_sites != n_sites {
                return Err(Error::InvalidArgument("mixed chain lengths".into()));
            }
            locality = locality.max(op.locality);
            terms.extend(op.terms.iter().map(|(c, p)| (c * w, *p)));
        }
        Self::new(label, locality, n_sites, terms)
    }

    /// Dense matrix on the full `2^L` space. Intended for `L <= 10`.
    pub fn to_full_matrix(&self) -> Mat<C64> {
        let d = 1usize << self.n_sites;
        let mut m = Mat::zeros(d, d);
        for (c, p) in &self.terms {
            for n in 0..d {
                let (row, ph) = p.apply_to_basis_state(n as u64);
                m[(row as usize, n)] += ph.to_complex() * *c;
            }
        }
        m
    }
}
