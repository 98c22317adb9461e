//! Dense complex linear algebra helpers shared by the solver modules.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex<f64>`.
//! Rank decisions are always made relative to the largest singular value.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Builds a complex matrix from real row-major data.
pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMat {
    assert_eq!(data.len(), rows * cols);
    CMat::from_fn(rows, cols, |i, j| c(data[i * cols + j], 0.0))
}

pub fn real_vector(data: &[f64]) -> CVec {
    CVec::from_iterator(data.len(), data.iter().map(|&x| c(x, 0.0)))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

/// Frobenius norm.
pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vnorm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖M − M*‖` in the Frobenius norm.
pub fn hermitian_defect(m: &CMat) -> f64 {
    fro(&(m - m.adjoint()))
}

/// `‖M + M*‖` in the Frobenius norm.
pub fn skew_defect(m: &CMat) -> f64 {
    fro(&(m + m.adjoint()))
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let h = (m + m.adjoint()).scale(0.5);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

/// `(σ_min, σ_max)` of a square matrix.
pub fn sigma_extremes(m: &CMat) -> (f64, f64) {
    let s = singular_values(m);
    match (s.last(), s.first()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0.0, 0.0),
    }
}

/// Orthonormal basis of `{v : Mv = 0}`.
///
/// A singular value counts as zero when `σ ≤ tol_rank · σ_max`; a zero matrix
/// has the full space as kernel. Wide matrices are padded with zero rows so
/// that the SVD yields a complete set of right singular vectors.
pub fn nullspace(m: &CMat, tol_rank: f64) -> CMat {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return zeros(0, 0);
    }
    if rows == 0 {
        return identity(cols);
    }
    let padded = if rows < cols {
        let mut p = zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let sigma = &svd.singular_values;
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return identity(cols);
    }
    let rank = sigma.iter().filter(|&&s| s > tol_rank * smax).count();
    let v = svd.v_t.expect("requested right singular vectors").adjoint();
    v.columns(rank, cols - rank).into_owned()
}

/// Numerical rank with the same relative threshold as [`nullspace`].
pub fn rank(m: &CMat, tol_rank: f64) -> usize {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol_rank * smax).count()
}

/// Minimum-norm least-squares solution of `M x = b` through a truncated SVD.
pub fn lstsq_min_norm(m: &CMat, b: &CVec, tol_rank: f64) -> CVec {
    let (rows, cols) = m.shape();
    assert_eq!(rows, b.len());
    if rows == 0 || cols == 0 {
        return CVec::zeros(cols);
    }
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.as_ref().expect("left singular vectors");
    let v_t = svd.v_t.as_ref().expect("right singular vectors");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut x = CVec::zeros(cols);
    if smax == 0.0 {
        return x;
    }
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol_rank * smax {
            continue;
        }
        let coef = u.column(k).dotc(b) / s;
        x += v_t.row(k).adjoint() * coef;
    }
    x
}

/// Orthogonal projection of `v` onto the span of the orthonormal columns of `basis`.
pub fn project(basis: &CMat, v: &CVec) -> CVec {
    if basis.ncols() == 0 {
        return CVec::zeros(v.len());
    }
    basis * (basis.adjoint() * v)
}

pub fn expm(m: &CMat) -> CMat {
    if m.nrows() == 0 {
        return m.clone();
    }
    m.exp()
}

/// `(e^{M h}, ∫₀ʰ e^{M s} ds)` from one exponential of the augmented block
/// matrix `[[M, I], [0, 0]]·h`; no inverse of `M` is needed.
pub fn exp_and_integral(m: &CMat, h: f64) -> (CMat, CMat) {
    let n = m.nrows();
    let mut aug = zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(&m.scale(h));
    aug.view_mut((0, n), (n, n))
        .copy_from(&identity(n).scale(h));
    let e = expm(&aug);
    (
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, n)).into_owned(),
    )
}

/// `∫₀ʰ e^{X* t} M e^{Y t} dt` by Van Loan's block exponential.
pub fn gram_integral(x: &CMat, m: &CMat, y: &CMat, h: f64) -> CMat {
    let p = x.nrows();
    let r = y.nrows();
    assert_eq!(m.shape(), (p, r));
    let mut z = zeros(p + r, p + r);
    z.view_mut((0, 0), (p, p))
        .copy_from(&(-x.adjoint()).scale(h));
    z.view_mut((0, p), (p, r)).copy_from(&m.scale(h));
    z.view_mut((p, p), (r, r)).copy_from(&y.scale(h));
    let e = expm(&z);
    let f12 = e.view((0, p), (p, r)).into_owned();
    let ex = expm(&x.scale(h)).adjoint();
    ex * f12
}

/// Block-diagonal matrix from square blocks.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(total, total);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

/// The `k`-th length-`n` block of a stacked vector.
pub fn block(v: &CVec, k: usize, n: usize) -> CVec {
    v.rows(k * n, n).into_owned()
}

pub fn stack(blocks: &[CVec]) -> CVec {
    let total: usize = blocks.iter().map(|b| b.len()).sum();
    let mut out = CVec::zeros(total);
    let mut off = 0;
    for b in blocks {
        out.rows_mut(off, b.len()).copy_from(b);
        off += b.len();
    }
    out
}

/// Rescales `v` so that its entry of largest modulus becomes exactly `1`.
/// Ties within a relative `1e-12` go to the lowest index.
pub fn normalize_phase(v: &CVec) -> CVec {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return v.clone();
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .expect("nonzero vector has a pivot");
    let scale = v[pivot];
    let mut out = v.map(|z| z / scale);
    out[pivot] = ONE;
    out
}

/// Inverse of a square matrix that has already been checked to be invertible.
pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

pub fn solve(m: &CMat, b: &CVec) -> Option<CVec> {
    m.clone().lu().solve(b)
}
