//! Dense Hermitian matrices and the reference eigensolver.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{ensure, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense complex Hermitian matrix.
///
/// The upper triangle (including the real part of the diagonal) is the
/// source of truth at construction; the lower triangle is filled in by
/// conjugation, so the stored matrix is exactly Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: CMatrix,
}

impl HermitianMatrix {
    /// Builds a matrix from a generator over the upper triangle `j >= i`.
    pub fn from_upper(dim: usize, mut entry: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        ensure!(dim > 0, Input, "matrix dimension must be positive");
        let mut data = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let z = entry(i, j);
                ensure!(z.re.is_finite() && z.im.is_finite(), Input, "non-finite entry at ({i}, {j})");
                if i == j {
                    data[(i, i)] = Complex64::new(z.re, 0.0);
                } else {
                    data[(i, j)] = z;
                    data[(j, i)] = z.conj();
                }
            }
        }
        Ok(Self { data })
    }

    /// Symmetrizes a dense matrix from its upper triangle.
    pub fn from_dense(m: &CMatrix) -> Result<Self> {
        ensure!(m.is_square(), Input, "matrix must be square, got {}x{}", m.nrows(), m.ncols());
        Self::from_upper(m.nrows(), |i, j| m[(i, j)])
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        ensure!(rows.iter().all(|r| r.len() == n), Input, "rows must form a square matrix");
        Self::from_upper(n, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        Self::from_upper(values.len(), |i, j| if i == j { Complex64::new(values[i], 0.0) } else { ZERO })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { data: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { data: CMatrix::identity(dim, dim) }
    }

    /// Wraps a matrix the caller has built Hermitian by construction
    /// (e.g. `V diag(x) V†`), re-imposing exact symmetry.
    pub(crate) fn from_hermitian_unchecked(mut data: CMatrix) -> Self {
        let n = data.nrows();
        for i in 0..n {
            data[(i, i)].im = 0.0;
            for j in (i + 1)..n {
                let avg = (data[(i, j)] + data[(j, i)].conj()) * 0.5;
                data[(i, j)] = avg;
                data[(j, i)] = avg.conj();
            }
        }
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Spectral norm via the reference eigensolver.
    pub fn spectral_norm(&self) -> f64 {
        eig_reference(self)
            .map(|d| d.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .unwrap_or(f64::NAN)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { data: self.data.map(|z| z * factor) }
    }

    /// `self - c I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut data = self.data.clone();
        for i in 0..self.dim() {
            data[(i, i)].re -= c;
        }
        Self { data }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { data: &self.data + &other.data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { data: &self.data - &other.data }
    }

    /// `self† self`, which for a Hermitian matrix is its square.
    pub fn gram(&self) -> Self {
        Self::from_hermitian_unchecked(self.data.adjoint() * &self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Eigenvalues sorted non-increasing with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(lam);
        }
        scaled * v.adjoint()
    }

    /// `‖H − VΛV†‖_F`.
    pub fn reconstruction_residual(&self, h: &HermitianMatrix) -> f64 {
        (h.as_matrix() - self.reconstruct()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖V†V − I‖_F`.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.dim();
        let gram = self.eigenvectors.adjoint() * &self.eigenvectors;
        (gram - CMatrix::identity(n, n)).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Gap and midpoint around index `k` (1-based, `1 <= k <= N-1`).
    pub fn gap(&self, k: usize) -> Result<GapGroundTruth> {
        let n = self.dim();
        ensure!(k >= 1 && k < n, Parameter, "k must lie in [1, {}], got {k}", n.saturating_sub(1));
        let upper = self.eigenvalues[k - 1];
        let lower = self.eigenvalues[k];
        Ok(GapGroundTruth { k, lambda_k: upper, lambda_k1: lower, gap: upper - lower, midpoint: 0.5 * (upper + lower) })
    }

    /// Number of eigenvalues strictly below `threshold`.
    pub fn count_below(&self, threshold: f64) -> usize {
        self.eigenvalues.iter().filter(|&&v| v < threshold).count()
    }

    /// Smallest singular value of `H − h I`.
    pub fn sigma_min_shifted(&self, h: f64) -> f64 {
        self.eigenvalues.iter().map(|v| (v - h).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Ground-truth gap information at index `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapGroundTruth {
    pub k: usize,
    pub lambda_k: f64,
    pub lambda_k1: f64,
    pub gap: f64,
    pub midpoint: f64,
}

const MAX_SWEEPS: usize = 100;

/// Full eigendecomposition by the cyclic complex Jacobi method.
///
/// Deterministic for a fixed input. Eigenvalues are returned in
/// non-increasing order.
pub fn eig_reference(h: &HermitianMatrix) -> Result<SpectralDecomposition> {
    ensure!(h.is_finite(), Input, "matrix has non-finite entries");
    let n = h.dim();
    let mut a = h.as_matrix().clone();
    let mut v = CMatrix::identity(n, n);

    let scale = h.frobenius_norm();
    if scale > 0.0 {
        let tol = (f64::EPSILON * scale).powi(2);
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].norm_sqr())
                .sum();
            if off <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.total_cmp(&a[(x, x)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// One Jacobi rotation annihilating `a[p][q]`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if mag <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    // Phase-strip the pivot to a real symmetric 2x2 problem, then rotate.
    let phase = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let e = phase.conj();
    // J = [[c, s], [-s e, c e]] on the (p, q) plane; A <- J† A J, V <- V J.
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -e * s;
    let jqq = e * c;
    let n = a.nrows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
}

/// `V diag(f(λ)) V†` for an eigenbasis `V` and eigenvalues in column order.
pub(crate) fn assemble(vectors: &CMatrix, values: impl IntoIterator<Item = f64>) -> HermitianMatrix {
    let mut scaled = vectors.clone();
    for (j, lam) in values.into_iter().enumerate() {
        scaled.column_mut(j).scale_mut(lam);
    }
    HermitianMatrix::from_hermitian_unchecked(scaled * vectors.adjoint())
}
