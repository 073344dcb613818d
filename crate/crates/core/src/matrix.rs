//! Dense symmetric matrices and the handful of primitives the estimators need:
//! norms, banding, principal submatrices, zero-padded embedding and Cholesky.
//!
//! Storage is a full row-major square. Every constructor and mutator keeps
//! `a[i][j] == a[j][i]` bit-for-bit.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest dimension for which the spectral norm uses a full eigendecomposition.
pub const DENSE_EIGEN_MAX_DIM: usize = 64;
/// Relative pivot threshold below which a Cholesky factorization reports "not PD".
pub const PD_RELATIVE_TOLERANCE: f64 = 1e-12;

const POWER_TOL: f64 = 1e-10;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be at least 1");
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        m
    }

    /// Builds a matrix by evaluating `f(i, j)` on the upper triangle (`i <= j`)
    /// and mirroring.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Takes ownership of a row-major buffer; entries must already be exactly symmetric.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("matrix dimension must be at least 1"));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if data[i * dim + j] != data[j * dim + i] {
                    return Err(Error::NotSymmetric {
                        row: i + 1,
                        col: j + 1,
                    });
                }
            }
        }
        Ok(SymMatrix { dim, data })
    }

    /// Like [`SymMatrix::from_row_major`] but averages `a_ij` and `a_ji`.
    pub fn symmetrized(dim: usize, data: &[f64]) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self::from_fn(dim, |i, j| {
            0.5 * (data[i * dim + j] + data[j * dim + i])
        }))
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let dim = m.nrows();
        let data: Vec<f64> = (0..dim * dim).map(|idx| m[(idx / dim, idx % dim)]).collect();
        Self::symmetrized(dim, &data)
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Writes `v` at `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &SymMatrix) {
        assert_eq!(self.dim, other.dim, "axpy dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// `self += c * (block)^0` where the block lives on `set x set`.
    pub fn add_embedded(&mut self, c: f64, block: &SymMatrix, set: &IndexSet) {
        assert_eq!(block.dim, set.len(), "embedded block does not match index set");
        for (a, &i) in set.iter().enumerate() {
            for (b, &j) in set.iter().enumerate() {
                self.data[i * self.dim + j] += c * block.data[a * block.dim + b];
            }
        }
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        norm(self, kind)
    }

    pub fn band(&self, k: usize) -> SymMatrix {
        band(self, k)
    }

    /// True when every entry with `|i - j| > k` is exactly zero.
    pub fn is_banded(&self, k: usize) -> bool {
        (0..self.dim).all(|i| {
            (0..self.dim)
                .filter(|&j| i.abs_diff(j) > k)
                .all(|j| self.get(i, j) == 0.0)
        })
    }

    /// Reverses the variable order: `i -> p - 1 - i`.
    pub fn reversed(&self) -> SymMatrix {
        let p = self.dim;
        SymMatrix::from_fn(p, |i, j| self.get(p - 1 - i, p - 1 - j))
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Dense product `self * other`, row-major.
    pub fn matmul(&self, other: &SymMatrix) -> Vec<f64> {
        assert_eq!(self.dim, other.dim);
        let p = self.dim;
        let mut out = vec![0.0; p * p];
        for i in 0..p {
            for l in 0..p {
                let a = self.data[i * p + l];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[l * p..(l + 1) * p];
                for (o, b) in out[i * p..(i + 1) * p].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .to_dmatrix()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::new(self)
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;

    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

/// Sorted, distinct, 0-based variable indices.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("index set must be non-empty"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("index set must be strictly increasing"));
        }
        Ok(IndexSet(indices))
    }

    /// The contiguous window `start, start + 1, .., start + len - 1`.
    pub fn contiguous(start: usize, len: usize) -> Self {
        assert!(len >= 1, "contiguous index set must be non-empty");
        IndexSet((start..start + len).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn last(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn intersection(&self, other: &IndexSet) -> Vec<usize> {
        self.0.iter().copied().filter(|&i| other.contains(i)).collect()
    }
}

impl fmt::Debug for IndexSet {
    /// 1-based, like the documentation.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let contiguous = self.0.windows(2).all(|w| w[1] == w[0] + 1);
        if contiguous && self.len() > 1 {
            write!(f, "{{{}..{}}}", self.first() + 1, self.last() + 1)
        } else {
            let items: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "{{{}}}", items.join(","))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    /// Maximum absolute row sum.
    LInfOp,
    /// Largest absolute eigenvalue.
    L2Op,
    Frobenius,
    /// Largest absolute entry.
    MaxAbs,
}

impl NormKind {
    pub const ALL: [NormKind; 4] = [
        NormKind::LInfOp,
        NormKind::L2Op,
        NormKind::Frobenius,
        NormKind::MaxAbs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NormKind::LInfOp => "linf-op",
            NormKind::L2Op => "l2-op",
            NormKind::Frobenius => "frobenius",
            NormKind::MaxAbs => "max-abs",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linf-op" | "linfop" | "inf" => Ok(NormKind::LInfOp),
            "l2-op" | "l2op" | "spectral" => Ok(NormKind::L2Op),
            "frobenius" | "fro" | "l2" => Ok(NormKind::Frobenius),
            "max-abs" | "maxabs" | "linf" => Ok(NormKind::MaxAbs),
            other => Err(invalid(format!("unknown norm `{other}`"))),
        }
    }
}

pub fn norm(a: &SymMatrix, kind: NormKind) -> f64 {
    let p = a.dim;
    match kind {
        NormKind::LInfOp => (0..p)
            .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::L2Op => spectral_norm(a),
        NormKind::Frobenius => a.data.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormKind::MaxAbs => a.data.iter().map(|v| v.abs()).fold(0.0, f64::max),
    }
}

fn spectral_norm(a: &SymMatrix) -> f64 {
    if a.dim <= DENSE_EIGEN_MAX_DIM {
        a.to_dmatrix()
            .symmetric_eigenvalues()
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    } else {
        power_iteration_norm(a, POWER_TOL, 10 * a.dim)
    }
}

/// Estimates `max |eigenvalue|` as `||A v||` along the power sequence, which
/// stays correct when `+lambda` and `-lambda` are both extremal.
pub fn power_iteration_norm(a: &SymMatrix, tol: f64, max_iter: usize) -> f64 {
    let p = a.dim;
    let mut v: Vec<f64> = (0..p).map(|i| 1.0 + (i as f64 + 1.0) / p as f64).collect();
    let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= vn);
    let mut w = vec![0.0; p];
    let mut estimate = 0.0;
    for _ in 0..max_iter.max(1) {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = a.row(i).iter().zip(&v).map(|(x, y)| x * y).sum();
        }
        let next = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if next == 0.0 {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / next;
        }
        let done = (next - estimate).abs() <= tol * next;
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// `B_k(A)`: zero every entry more than `k` off the diagonal.
pub fn band(a: &SymMatrix, k: usize) -> SymMatrix {
    SymMatrix::from_fn(a.dim, |i, j| if j - i <= k { a.get(i, j) } else { 0.0 })
}

pub fn submatrix(a: &SymMatrix, set: &IndexSet) -> Result<SymMatrix> {
    if set.last() >= a.dim {
        return Err(Error::IndexOutOfRange {
            index: set.last() + 1,
            dim: a.dim,
        });
    }
    let idx = set.as_slice();
    Ok(SymMatrix::from_fn(idx.len(), |r, c| a.get(idx[r], idx[c])))
}

/// `(B)^0`: a `p x p` matrix holding `block` on `set x set` and zeros elsewhere.
pub fn embed(block: &SymMatrix, set: &IndexSet, p: usize) -> Result<SymMatrix> {
    if block.dim != set.len() {
        return Err(Error::DimensionMismatch {
            expected: set.len(),
            found: block.dim,
        });
    }
    if set.last() >= p {
        return Err(Error::IndexOutOfRange {
            index: set.last() + 1,
            dim: p,
        });
    }
    let mut out = SymMatrix::zeros(p);
    out.add_embedded(1.0, block, set);
    Ok(out)
}

/// Lower-triangular Cholesky factor `L` with `L L^T = A`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &SymMatrix) -> Result<Self> {
        let p = a.dim;
        let max_diag = (0..p).map(|i| a.get(i, i)).fold(f64::NEG_INFINITY, f64::max);
        let threshold = PD_RELATIVE_TOLERANCE * max_diag.max(0.0);
        let mut l = vec![0.0; p * p];
        for j in 0..p {
            let mut d = a.get(j, j);
            for m in 0..j {
                d -= l[j * p + m] * l[j * p + m];
            }
            if !(d > threshold) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j + 1, dim: p });
            }
            let djj = d.sqrt();
            l[j * p + j] = djj;
            for i in (j + 1)..p {
                let mut s = a.get(i, j);
                for m in 0..j {
                    s -= l[i * p + m] * l[j * p + m];
                }
                l[i * p + j] = s / djj;
            }
        }
        Ok(Cholesky { dim: p, l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(i, j)` of `L`; zero above the diagonal.
    pub fn l(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.dim + j]
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.l[i * self.dim + i].ln()).sum::<f64>()
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let p = self.dim;
        let mut y = b.to_vec();
        for i in 0..p {
            let mut s = y[i];
            for m in 0..i {
                s -= self.l[i * p + m] * y[m];
            }
            y[i] = s / self.l[i * p + i];
        }
        y
    }

    /// Solves `L^T x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let p = self.dim;
        let mut x = y.to_vec();
        for i in (0..p).rev() {
            let mut s = x[i];
            for m in (i + 1)..p {
                s -= self.l[m * p + i] * x[m];
            }
            x[i] = s / self.l[i * p + i];
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `L v`.
    pub fn mul_lower(&self, v: &[f64]) -> Vec<f64> {
        let p = self.dim;
        (0..p)
            .map(|i| (0..=i).map(|m| self.l[i * p + m] * v[m]).sum())
            .collect()
    }

    /// `A^{-1} = L^{-T} L^{-1}`.
    pub fn inverse(&self) -> SymMatrix {
        let p = self.dim;
        // columns of L^{-1}
        let mut linv = vec![0.0; p * p];
        for c in 0..p {
            let mut e = vec![0.0; p];
            e[c] = 1.0;
            let col = self.solve_lower(&e);
            for r in 0..p {
                linv[r * p + c] = col[r];
            }
        }
        SymMatrix::from_fn(p, |i, j| {
            // L^{-1} is lower triangular, so rows below max(i, j) contribute.
            (i.max(j)..p).map(|m| linv[m * p + i] * linv[m * p + j]).sum()
        })
    }
}
