//! Translation-invariant, inversion-symmetric, orthogonal operator sets.
//!
//! `B_k` collects one element per translation class of Pauli strings whose
//! support fits in `k` contiguous sites. Classes closed under reflection give
//! `Q = Σ_l T^l P T^{-l}`; a class and its mirror image are merged into the
//! single element `(Q + R Q R)/√2`. Every element has `‖Q‖₂² = L·2^L`.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{text_checksum, SparseSectorMatrix};
use crate::model::Preset;
use crate::operator::SymmetrizedOperator;
use crate::pauli::{Axis, PauliString};
use crate::sector::{project_operator_sparse, SectorBasis};

const AXES: [Option<Axis>; 4] = [None, Some(Axis::X), Some(Axis::Y), Some(Axis::Z)];

/// Every non-identity Hermitian string supported on sites `0..k` with site 0
/// occupied, in base-4 order of the site letters `I<X<Y<Z`.
pub fn enumerate_window_paulis(n_sites: usize, k: usize) -> Result<Vec<PauliString>> {
    if k == 0 || k > n_sites {
        return Err(Error::InvalidArgument(format!(
            "window size k={k} outside 1..={n_sites}"
        )));
    }
    let mut out = Vec::with_capacity(3 << (2 * (k - 1)));
    for first in 1..4 {
        for rest in 0..(1usize << (2 * (k - 1))) {
            let mut axes = vec![(0, AXES[first].unwrap())];
            for site in 1..k {
                if let Some(a) = AXES[(rest >> (2 * (k - 1 - site))) & 3] {
                    axes.push((site, a));
                }
            }
            out.push(PauliString::new(&axes, n_sites)?);
        }
    }
    Ok(out)
}

/// Smallest mask key over the translation orbit; identifies the class.
pub fn translation_class_key(p: &PauliString) -> u64 {
    (0..p.n_sites())
        .map(|s| p.translate(s as i64).mask_key())
        .min()
        .unwrap()
}

/// Representative of minimal cyclic extent starting at site 0; ties broken by
/// the letter sequence.
fn canonical_rep(p: &PauliString) -> PauliString {
    let extent = p.cyclic_extent();
    (0..p.n_sites())
        .map(|s| p.translate(s as i64))
        .filter(|q| q.axis_at(0).is_some() && 32 - q.support().leading_zeros() as usize == extent)
        .min_by_key(|q| q.letters())
        .unwrap()
}

/// Number of distinct translates of `p`.
fn orbit_len(p: &PauliString) -> usize {
    let mut keys: Vec<u64> = (0..p.n_sites()).map(|s| p.translate(s as i64).mask_key()).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// `Σ_l T^l P T^{-l}` rescaled so the norm is `sqrt(L d)` also for strings
/// with a period shorter than `L`.
fn normalized_translation_sum(p: &PauliString, weight: f64) -> Vec<(f64, PauliString)> {
    let n = p.n_sites();
    let period = orbit_len(p);
    let coef = weight * (n as f64 / period as f64).sqrt();
    (0..period).map(|l| (coef, p.translate(l as i64))).collect()
}

fn window_letters(p: &PauliString, extent: usize) -> String {
    p.letters()[..extent].to_string()
}

/// `B_k` on `L` sites, ordered by `(locality, letters)`.
pub fn build_basis(n_sites: usize, k: usize) -> Result<Vec<SymmetrizedOperator>> {
    let strings = enumerate_window_paulis(n_sites, k)?;
    // Translation classes, deduplicated up to phase.
    let mut seen: HashMap<u64, ()> = HashMap::new();
    let mut classes = Vec::new();
    for p in &strings {
        let key = translation_class_key(p);
        if seen.insert(key, ()).is_none() {
            classes.push(canonical_rep(p));
        }
    }
    let mut consumed: HashMap<u64, ()> = HashMap::new();
    let mut elements = Vec::new();
    for rep in &classes {
        let key = translation_class_key(rep);
        if consumed.contains_key(&key) {
            continue;
        }
        consumed.insert(key, ());
        let extent = rep.cyclic_extent();
        let mirror = canonical_rep(&rep.invert());
        let mirror_key = translation_class_key(&mirror);
        let (sort_key, label, terms) = if mirror_key == key {
            let letters = window_letters(rep, extent);
            (letters.clone(), letters, normalized_translation_sum(rep, 1.0))
        } else {
            consumed.insert(mirror_key, ());
            let a = window_letters(rep, extent);
            let b = window_letters(&mirror, extent);
            let (first, second) = if a <= b { (a, b) } else { (b, a) };
            let w = std::f64::consts::FRAC_1_SQRT_2;
            let mut terms = normalized_translation_sum(rep, w);
            terms.extend(normalized_translation_sum(&mirror, w));
            (first.clone(), format!("{first}+{second}"), terms)
        };
        elements.push((extent, sort_key, label, terms));
    }
    elements.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    elements
        .into_iter()
        .map(|(extent, _, label, terms)| SymmetrizedOperator::new(label, extent, n_sites, terms))
        .collect()
}

/// The seven fixed Hamiltonians of the discrete-action protocol.
pub fn discrete_action_set(n_sites: usize) -> Result<Vec<SymmetrizedOperator>> {
    let (h_i, g_i) = Preset::Integrable.fields();
    let (h_n, g_n) = Preset::Nonintegrable.fields();
    let l = n_sites;
    let p = |axes: &[(usize, Axis)]| PauliString::new(axes, l);
    let zz = p(&[(0, Axis::Z), (1, Axis::Z)])?;
    let z = p(&[(0, Axis::Z)])?;
    let x = p(&[(0, Axis::X)])?;
    let y = p(&[(0, Axis::Y)])?;
    let xy = p(&[(0, Axis::X), (1, Axis::Y)])?;
    let yx = p(&[(0, Axis::Y), (1, Axis::X)])?;
    let yz = p(&[(0, Axis::Y), (1, Axis::Z)])?;
    let zy = p(&[(0, Axis::Z), (1, Axis::Y)])?;
    let sum = SymmetrizedOperator::translation_sum;
    let cat = |a: Vec<(f64, PauliString)>, b: Vec<(f64, PauliString)>| {
        a.into_iter().chain(b).collect::<Vec<_>>()
    };
    let ops = vec![
        SymmetrizedOperator::new(format!("zz+{h_i}z"), 2, l, cat(sum(1.0, &zz), sum(h_i, &z)))?,
        SymmetrizedOperator::new(format!("zz+{h_n}z"), 2, l, cat(sum(1.0, &zz), sum(h_n, &z)))?,
        SymmetrizedOperator::new("xy+yx", 2, l, cat(sum(1.0, &xy), sum(1.0, &yx)))?,
        SymmetrizedOperator::new("yz+zy", 2, l, cat(sum(1.0, &yz), sum(1.0, &zy)))?,
        SymmetrizedOperator::new(format!("{g_i}x"), 1, l, sum(g_i, &x))?,
        SymmetrizedOperator::new(format!("{g_n}x"), 1, l, sum(g_n, &x))?,
        SymmetrizedOperator::new("y", 1, l, sum(1.0, &y))?,
    ];
    Ok(ops)
}

/// Which operator list a protocol's coefficient rows refer to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ManifestKind {
    /// `B_k`.
    Local { k: usize },
    /// The seven-element discrete action set.
    Discrete,
    /// A single Ising Hamiltonian held fixed.
    Quench { h: f64, g: f64 },
}

impl std::fmt::Display for ManifestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ManifestKind::Local { k } => write!(f, "local k={k}"),
            ManifestKind::Discrete => write!(f, "discrete"),
            ManifestKind::Quench { h, g } => write!(f, "quench h={h:.16e} g={g:.16e}"),
        }
    }
}

impl std::str::FromStr for ManifestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad manifest kind {s:?}"));
        let mut toks = s.split_whitespace();
        match toks.next() {
            Some("local") => {
                let k = toks
                    .next()
                    .and_then(|t| t.strip_prefix("k="))
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(bad)?;
                Ok(ManifestKind::Local { k })
            }
            Some("discrete") => Ok(ManifestKind::Discrete),
            Some("quench") => {
                let mut field = |name: &str| -> Result<f64> {
                    toks.next()
                        .and_then(|t| t.strip_prefix(name))
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(bad)
                };
                let h = field("h=")?;
                let g = field("g=")?;
                Ok(ManifestKind::Quench { h, g })
            }
            _ => Err(bad()),
        }
    }
}

/// An ordered operator list with its text manifest.
#[derive(Clone, Debug)]
pub struct ControlBasis {
    pub kind: ManifestKind,
    pub n_sites: usize,
    pub ops: Vec<SymmetrizedOperator>,
}

impl ControlBasis {
    pub fn build(kind: ManifestKind, n_sites: usize) -> Result<Self> {
        let ops = match kind {
            ManifestKind::Local { k } => build_basis(n_sites, k)?,
            ManifestKind::Discrete => discrete_action_set(n_sites)?,
            ManifestKind::Quench { h, g } => vec![crate::model::build_ising(
                &crate::model::IsingParams { h, g, n_sites },
            )?],
        };
        Ok(ControlBasis { kind, n_sites, ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn manifest(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# eigenwork control basis v1");
        let _ = writeln!(out, "kind={}", self.kind);
        let _ = writeln!(out, "L={} count={}", self.n_sites, self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            let _ = writeln!(
                out,
                "op {i} label={} locality={} norm={:.16e} terms={}",
                op.label(),
                op.locality(),
                op.frobenius_norm_sq().sqrt(),
                op.terms().len()
            );
            for (c, p) in op.terms() {
                let _ = writeln!(out, "  {c:.16e} {p}");
            }
        }
        out
    }

    pub fn checksum(&self) -> String {
        text_checksum(&self.manifest())
    }

    pub fn parse_manifest(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("control manifest: {what}"));
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let kind: ManifestKind = lines
            .next()
            .and_then(|l| l.strip_prefix("kind="))
            .ok_or_else(|| bad("missing kind"))?
            .parse()?;
        let header = lines.next().ok_or_else(|| bad("missing header"))?;
        let mut n_sites = None;
        let mut count = None;
        for tok in header.split_whitespace() {
            if let Some(v) = tok.strip_prefix("L=") {
                n_sites = v.parse().ok();
            } else if let Some(v) = tok.strip_prefix("count=") {
                count = v.parse::<usize>().ok();
            }
        }
        let n_sites = n_sites.ok_or_else(|| bad("missing L"))?;
        let count = count.ok_or_else(|| bad("missing count"))?;
        let mut ops = Vec::with_capacity(count);
        for _ in 0..count {
            let line = lines.next().ok_or_else(|| bad("truncated"))?;
            let mut label = None;
            let mut locality = None;
            let mut n_terms = None;
            for tok in line.split_whitespace() {
                if let Some(v) = tok.strip_prefix("label=") {
                    label = Some(v.to_string());
                } else if let Some(v) = tok.strip_prefix("locality=") {
                    locality = v.parse::<usize>().ok();
                } else if let Some(v) = tok.strip_prefix("terms=") {
                    n_terms = v.parse::<usize>().ok();
                }
            }
            let n_terms = n_terms.ok_or_else(|| bad("missing terms"))?;
            let mut terms = Vec::with_capacity(n_terms);
            for _ in 0..n_terms {
                let t = lines.next().ok_or_else(|| bad("truncated terms"))?.trim();
                let (c, p) = t.split_once(' ').ok_or_else(|| bad("term"))?;
                let c: f64 = c.parse().map_err(|_| bad("coefficient"))?;
                terms.push((c, p.parse::<PauliString>()?));
            }
            ops.push(SymmetrizedOperator::new(
                label.ok_or_else(|| bad("missing label"))?,
                locality.ok_or_else(|| bad("missing locality"))?,
                n_sites,
                terms,
            )?);
        }
        Ok(ControlBasis { kind, n_sites, ops })
    }

    /// Sector matrices of every element, in order.
    pub fn project(&self, sector: &SectorBasis) -> Result<Vec<SparseSectorMatrix>> {
        self.ops
            .par_iter()
            .map(|op| project_operator_sparse(op, sector))
            .collect()
    }
}
