//! Signed Pauli strings on a periodic chain in symplectic bitmask form.
//!
//! A string is stored as `i^phase · Π_l X_l^{x_l} Z_l^{z_l}` with the X factor
//! to the left of the Z factor on every site, so a `Y` site is `i·X·Z` and
//! contributes one unit to `phase`. Bit `l` of a computational basis index
//! holds site `l`, and `|0⟩` is the `+1` eigenstate of `σ^z`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest chain supported by the 32-bit masks.
pub const MAX_SITES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// A power of `i`, i.e. one of `{1, i, -1, -i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_pow(pow: i64) -> Self {
        Phase(pow.rem_euclid(4) as u8)
    }

    pub fn pow(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    x_mask: u32,
    z_mask: u32,
    phase: Phase,
    n_sites: u8,
}

fn site_mask(n_sites: usize) -> u32 {
    if n_sites >= 32 {
        u32::MAX
    } else {
        (1u32 << n_sites) - 1
    }
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Result<Self> {
        Self::from_masks(0, 0, Phase::ONE, n_sites)
    }

    /// Raw constructor. Masks must not have bits at or above `n_sites`.
    pub fn from_masks(x_mask: u32, z_mask: u32, phase: Phase, n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::InvalidArgument(format!(
                "site count {n_sites} outside 1..={MAX_SITES}"
            )));
        }
        let m = site_mask(n_sites);
        if (x_mask | z_mask) & !m != 0 {
            return Err(Error::InvalidArgument(format!(
                "mask bits beyond site count {n_sites}"
            )));
        }
        Ok(PauliString {
            x_mask,
            z_mask,
            phase,
            n_sites: n_sites as u8,
        })
    }

    /// Hermitian string `Π σ^{axis}_{site}` with unit prefactor.
    pub fn new(axes: &[(usize, Axis)], n_sites: usize) -> Result<Self> {
        let mut x = 0u32;
        let mut z = 0u32;
        let mut n_y = 0i64;
        let mut seen = 0u32;
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::InvalidArgument(format!(
                "site count {n_sites} outside 1..={MAX_SITES}"
            )));
        }
        for &(site, axis) in axes {
            if site >= n_sites {
                return Err(Error::InvalidArgument(format!(
                    "site {site} out of range for L={n_sites}"
                )));
            }
            let bit = 1u32 << site;
            if seen & bit != 0 {
                return Err(Error::InvalidArgument(format!("duplicate site {site}")));
            }
            seen |= bit;
            match axis {
                Axis::X => x |= bit,
                Axis::Z => z |= bit,
                Axis::Y => {
                    x |= bit;
                    z |= bit;
                    n_y += 1;
                }
            }
        }
        Self::from_masks(x, z, Phase::from_pow(n_y), n_sites)
    }

    pub fn x_mask(&self) -> u32 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u32 {
        self.z_mask
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites as usize
    }

    pub fn support(&self) -> u32 {
        self.x_mask | self.z_mask
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    pub fn y_count(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    pub fn is_hermitian(&self) -> bool {
        (self.phase.pow() as u32 + self.y_count()) % 2 == 0
    }

    pub fn axis_at(&self, site: usize) -> Option<Axis> {
        let bit = 1u32 << site;
        match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
            (false, false) => None,
            (true, false) => Some(Axis::X),
            (false, true) => Some(Axis::Z),
            (true, true) => Some(Axis::Y),
        }
    }

    /// Same masks, phase multiplied by `c`.
    pub fn with_phase(self, phase: Phase) -> Self {
        PauliString { phase, ..self }
    }

    /// Masks as a single sortable key.
    pub fn mask_key(&self) -> u64 {
        ((self.x_mask as u64) << 32) | self.z_mask as u64
    }

    /// Shift every site by `shift` (mod L).
    pub fn translate(&self, shift: i64) -> Self {
        let n = self.n_sites();
        let s = shift.rem_euclid(n as i64) as u32;
        let rot = |m: u32| -> u32 {
            if s == 0 {
                m
            } else {
                ((m << s) | (m >> (n as u32 - s))) & site_mask(n)
            }
        };
        PauliString {
            x_mask: rot(self.x_mask),
            z_mask: rot(self.z_mask),
            ..*self
        }
    }

    /// Reflection `l ↦ L-1-l`.
    pub fn invert(&self) -> Self {
        let n = self.n_sites() as u32;
        let rev = |m: u32| -> u32 { m.reverse_bits() >> (32 - n) };
        PauliString {
            x_mask: rev(self.x_mask),
            z_mask: rev(self.z_mask),
            ..*self
        }
    }

    /// The `c` with `self = c · other`, if the masks coincide.
    pub fn equal_up_to_phase(&self, other: &PauliString) -> Result<Option<Phase>> {
        if self.n_sites != other.n_sites {
            return Err(Error::InvalidArgument(format!(
                "site count mismatch: {} vs {}",
                self.n_sites, other.n_sites
            )));
        }
        if self.x_mask == other.x_mask && self.z_mask == other.z_mask {
            Ok(Some(Phase::from_pow(
                self.phase.pow() as i64 - other.phase.pow() as i64,
            )))
        } else {
            Ok(None)
        }
    }

    /// `P|n⟩ = c|m⟩`.
    #[inline]
    pub fn apply_to_basis_state(&self, n: u64) -> (u64, Phase) {
        let minus = (self.z_mask as u64 & n).count_ones() & 1;
        (
            n ^ self.x_mask as u64,
            self.phase * Phase::from_pow(2 * minus as i64),
        )
    }

    /// Extent of the support counted along the ring from its first site,
    /// minimised over all cyclic starting points.
    pub fn cyclic_extent(&self) -> usize {
        let n = self.n_sites();
        let sup = self.support();
        if sup == 0 {
            return 0;
        }
        (0..n)
            .filter(|&s| sup & (1 << s) != 0)
            .map(|start| {
                let rotated = self.translate(-(start as i64)).support();
                32 - rotated.leading_zeros() as usize
            })
            .min()
            .unwrap_or(0)
    }

    /// Site-by-site letters, e.g. `"XIZI"`.
    pub fn letters(&self) -> String {
        (0..self.n_sites())
            .map(|l| self.axis_at(l).map_or('I', Axis::letter))
            .collect()
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

/// Canonical text form, e.g. `X0 Y1 @L=4 *i^0`.
///
/// The trailing power of `i` is the prefactor in front of the product of the
/// printed Pauli matrices, so every Hermitian string built by [`PauliString::new`]
/// prints with `*i^0`. The identity prints as `I`.
impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for l in 0..self.n_sites() {
            if let Some(a) = self.axis_at(l) {
                if !first {
                    f.write_str(" ")?;
                }
                write!(f, "{}{}", a.letter(), l)?;
                first = false;
            }
        }
        if first {
            f.write_str("I")?;
        }
        let pre = Phase::from_pow(self.phase.pow() as i64 - self.y_count() as i64);
        write!(f, " @L={} *i^{}", self.n_sites, pre.pow())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed Pauli string {s:?}"));
        let mut n_sites = None;
        let mut pre = None;
        let mut axes = Vec::new();
        for tok in s.split_whitespace() {
            if let Some(rest) = tok.strip_prefix("@L=") {
                n_sites = Some(rest.parse::<usize>().map_err(|_| bad())?);
            } else if let Some(rest) = tok.strip_prefix("*i^") {
                pre = Some(rest.parse::<i64>().map_err(|_| bad())?);
            } else if tok == "I" {
                continue;
            } else {
                let mut chars = tok.chars();
                let axis = match chars.next() {
                    Some('X') => Axis::X,
                    Some('Y') => Axis::Y,
                    Some('Z') => Axis::Z,
                    _ => return Err(bad()),
                };
                let site = chars.as_str().parse::<usize>().map_err(|_| bad())?;
                axes.push((site, axis));
            }
        }
        let n_sites = n_sites.ok_or_else(bad)?;
        let p = PauliString::new(&axes, n_sites)?;
        Ok(p.with_phase(p.phase * Phase::from_pow(pre.ok_or_else(bad)?)))
    }
}
