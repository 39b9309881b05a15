//! Dense complex matrices over the symmetry sector and the sparse form used
//! for the control operators.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Runs dense kernels single-threaded so results do not depend on the
/// thread count. Parallelism then comes from rayon at the caller level.
pub fn use_sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}

/// Tolerance for the Hermitian check of sector matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Max elementwise `|M - M†|`.
pub fn hermitian_deviation(m: MatRef<'_, C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Dense Hermitian matrix in sector coordinates.
#[derive(Clone, Debug)]
pub struct SectorMatrix {
    mat: Mat<C64>,
}

impl SectorMatrix {
    /// Wraps `mat` after checking Hermiticity to [`HERMITIAN_TOL`].
    pub fn new(mat: Mat<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidArgument(format!(
                "sector matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let dev = hermitian_deviation(mat.as_ref());
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(SectorMatrix { mat })
    }

    pub fn zeros(dim: usize) -> Self {
        SectorMatrix {
            mat: Mat::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_ref(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn into_inner(self) -> Mat<C64> {
        self.mat
    }

    pub fn is_hermitian(&self) -> bool {
        hermitian_deviation(self.as_ref()) <= HERMITIAN_TOL
    }

    /// Largest absolute eigenvalue bound via the max row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.mat[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Compressed-row sparse sector matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSectorMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

impl SparseSectorMatrix {
    /// Builds from per-row `(col, value)` entries; duplicate columns are summed
    /// and exact zeros dropped.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(u32, C64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                if v.norm() > 1e-14 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseSectorMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.cols[p] as usize, self.vals[p]))
        })
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::zeros(self.dim, self.dim);
        self.add_scaled_into(&mut m, 1.0);
        m
    }

    pub fn to_sector_matrix(&self) -> Result<SectorMatrix> {
        SectorMatrix::new(self.to_dense())
    }

    /// `dst += coef * self`.
    pub fn add_scaled_into(&self, dst: &mut Mat<C64>, coef: f64) {
        for (i, j, v) in self.entries() {
            dst[(i, j)] += v * coef;
        }
    }

    /// `Σ_{jk} self_{jk} · a_{jk}` (elementwise contraction, not a trace).
    pub fn contract(&self, a: MatRef<'_, C64>) -> C64 {
        let mut acc = ZERO;
        for (i, j, v) in self.entries() {
            acc += v * a[(i, j)];
        }
        acc
    }

    /// `Σ_{jk} self_{jk} · conj(a_{kj})`.
    pub fn contract_adjoint(&self, a: MatRef<'_, C64>) -> C64 {
        let mut acc = ZERO;
        for (i, j, v) in self.entries() {
            acc += v * a[(j, i)].conj();
        }
        acc
    }
}

/// Eigendecomposition of a Hermitian matrix with deterministic output.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are eigenvectors.
    pub vectors: Mat<C64>,
}

/// Eigenvalues ascending; each eigenvector rotated so that its first
/// coordinate with modulus above `1e-10` is real and positive.
pub fn hermitian_eigen(m: &SectorMatrix) -> Result<HermitianEigen> {
    let evd = m
        .as_ref()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let n = m.dim();
    let s = evd.S();
    let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let mut vectors = evd.U().to_owned();
    for j in 0..n {
        let pivot = (0..n).map(|i| vectors[(i, j)]).find(|v| v.norm() > 1e-10);
        if let Some(p) = pivot {
            let rot = p.conj() / p.norm();
            for i in 0..n {
                vectors[(i, j)] *= rot;
            }
        }
    }
    for w in values.windows(2) {
        if w[1] < w[0] {
            return Err(Error::Numerical("eigenvalues not sorted".into()));
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// `exp(-i dt H)` via the Hermitian eigendecomposition.
pub fn expm_hermitian(h: &SectorMatrix, dt: f64) -> Result<Mat<C64>> {
    let n = h.dim();
    if dt == 0.0 {
        return Ok(Mat::identity(n, n));
    }
    let eig = hermitian_eigen(h)?;
    let v = &eig.vectors;
    let scaled = Mat::from_fn(n, n, |i, j| {
        v[(i, j)] * C64::from_polar(1.0, -dt * eig.values[j])
    });
    Ok(&scaled * v.adjoint())
}

/// Max elementwise deviation of `U†U` from the identity.
pub fn unitarity_defect(u: MatRef<'_, C64>) -> f64 {
    let p = u.adjoint() * u;
    let n = p.nrows();
    let mut dev: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { ONE } else { ZERO };
            dev = dev.max((p[(i, j)] - target).norm());
        }
    }
    dev
}

pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            dev = dev.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    dev
}

/// SHA-256 over the little-endian bytes of a matrix, column-major.
pub fn matrix_checksum(m: MatRef<'_, C64>) -> String {
    let mut hasher = Sha256::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            hasher.update(m[(i, j)].re.to_le_bytes());
            hasher.update(m[(i, j)].im.to_le_bytes());
        }
    }
    hex(&hasher.finalize())
}

pub fn text_checksum(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
