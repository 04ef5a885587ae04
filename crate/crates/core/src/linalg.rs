//! Dense complex linear algebra shared by the rest of the crate.
//!
//! All decompositions sort their spectra explicitly and all rank decisions
//! use a threshold relative to the largest singular value.

// f64 math in no_std
use alloc::vec::Vec;
use core::cmp::Ordering;
#[allow(unused_imports)]
use nalgebra::ComplexField as _;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Complex scalar.
pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Real scalar as a complex number.
#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `½(a + a*)`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * re(0.5)
}

/// Eigendecomposition of the Hermitian part of `a`, eigenvalues ascending.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let e = SymmetricEigen::new(hermitian_part(a));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        e.eigenvalues[i]
            .partial_cmp(&e.eigenvalues[j])
            .unwrap_or(Ordering::Equal)
    });
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Thin singular value decomposition `a = u · diag(s) · v*`, `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors, `m × min(m,n)`.
    pub u: CMat,
    /// Singular values, descending.
    pub s: Vec<f64>,
    /// Right singular vectors, `n × min(m,n)`.
    pub v: CMat,
}

/// Thin SVD with descending singular values.
///
/// One-sided Jacobi on the tall orientation. nalgebra's complex
/// bidiagonal SVD returns wrong factors on some inputs with clustered
/// singular values, while Jacobi rotations keep `a·v = u·diag(s)` to
/// working precision by construction.
pub fn svd(a: &CMat) -> Svd {
    let (m, n) = a.shape();
    if m.min(n) == 0 {
        return Svd {
            u: CMat::zeros(m, 0),
            s: Vec::new(),
            v: CMat::zeros(n, 0),
        };
    }
    if m < n {
        let t = svd(&a.adjoint());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let mut w = a.clone();
    let mut v = CMat::identity(n, n);
    const MAX_SWEEPS: usize = 80;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * alpha.sqrt() * beta.sqrt() || g < 1e-280 {
                    continue;
                }
                rotated = true;
                // phase-align column q so the 2×2 Gram block is real
                let phase = gamma.conj() / g;
                let phase = phase / phase.norm();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for r in 0..mat.nrows() {
                        let xp = mat[(r, p)];
                        let xq = mat[(r, q)] * phase;
                        mat[(r, p)] = xp * c - xq * s;
                        mat[(r, q)] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(Ordering::Equal));
    let smax = norms[idx[0]];
    let mut u = CMat::zeros(m, n);
    let mut s = Vec::with_capacity(n);
    let mut filled = 0;
    for &j in &idx {
        let sj = norms[j];
        if sj > smax * f64::EPSILON * (m as f64) && sj > f64::MIN_POSITIVE {
            u.set_column(filled, &(w.column(j) * re(1.0 / sj)));
            filled += 1;
        }
        s.push(sj);
    }
    // orthonormal completion for numerically zero singular values
    let mut e = 0;
    while filled < n {
        let mut x = CVec::zeros(m);
        x[e] = ONE;
        e += 1;
        for _ in 0..2 {
            for k in 0..filled {
                let proj = u.column(k).dotc(&x);
                x -= u.column(k) * proj;
            }
        }
        let nx = x.norm();
        if nx > 1e-8 {
            u.set_column(filled, &(x * re(1.0 / nx)));
            filled += 1;
        }
    }
    let v = CMat::from_fn(n, n, |r, c| v[(r, idx[c])]);
    Svd { u, s, v }
}

/// Number of singular values above `tol · σ_max`.
fn cutoff_count(s: &[f64], tol: f64) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax <= f64::MIN_POSITIVE {
        return 0;
    }
    s.iter().take_while(|&&x| x > tol * smax).count()
}

/// Orthonormal basis of the column span of `a`.
pub fn range_basis(a: &CMat, tol: f64) -> CMat {
    let d = svd(a);
    let r = cutoff_count(&d.s, tol);
    d.u.columns(0, r).into_owned()
}

/// Numerical rank.
pub fn rank(a: &CMat, tol: f64) -> usize {
    cutoff_count(&svd(a).s, tol)
}

/// Orthonormal basis of the null space of `a`.
pub fn null_space(a: &CMat, tol: f64) -> CMat {
    let (m, n) = a.shape();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let padded = if m < n {
        let mut p = CMat::zeros(n, n);
        p.rows_mut(0, m).copy_from(a);
        p
    } else {
        a.clone()
    };
    let d = svd(&padded);
    let r = cutoff_count(&d.s, tol);
    d.v.columns(r, n - r).into_owned()
}

/// Moore–Penrose pseudo-inverse with relative cutoff.
pub fn pinv(a: &CMat, tol: f64) -> CMat {
    let d = svd(a);
    let r = cutoff_count(&d.s, tol);
    let mut out = CMat::zeros(a.ncols(), a.nrows());
    for k in 0..r {
        let inv = re(1.0 / d.s[k]);
        out += d.v.column(k) * d.u.column(k).adjoint() * inv;
    }
    out
}

/// Solves `x · a = b` in the least-squares sense; returns `x` and `‖x·a − b‖_max`.
pub fn solve_right(a: &CMat, b: &CMat, tol: f64) -> (CMat, f64) {
    let x = b * pinv(a, tol);
    let res = max_abs(&(&x * a - b));
    (x, res)
}

/// Largest singular value; zero for empty matrices.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    svd(a).s[0]
}

/// Largest entry modulus.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Frobenius norm.
pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product with row-major double indexing `(i·dim b + j)`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Kronecker product of coordinate vectors.
pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

/// Applies `f` to the spectrum of the Hermitian part of `a`.
pub fn hermitian_fn(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(a);
    let n = vals.len();
    let mut d = CMat::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        d[(k, k)] = re(f(l));
    }
    &vecs * d * vecs.adjoint()
}

/// `‖a*a − 1‖_max`; zero exactly for isometries.
pub fn isometry_defect(a: &CMat) -> f64 {
    let g = a.adjoint() * a;
    max_abs(&(g - CMat::identity(a.ncols(), a.ncols())))
}

/// Orthogonal projection residual of `v` onto the span of orthonormal `q`.
pub fn span_residual(q: &CMat, v: &CVec) -> f64 {
    let p = q * (q.adjoint() * v);
    (v - p).norm()
}

/// Views a coordinate vector with index `a·cols + b` as a matrix.
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |a, b| v[a * cols + b])
}

/// Row-major flattening, inverse of [`unvec`].
pub fn vec_rm(m: &CMat) -> CVec {
    let (r, c) = m.shape();
    CVec::from_fn(r * c, |k, _| m[(k / c, k % c)])
}

/// Block-diagonal matrix from square or rectangular blocks.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), b.shape()).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn recompose(d: &Svd) -> CMat {
        let s = CMat::from_diagonal(&CVec::from_iterator(d.s.len(), d.s.iter().map(|&x| re(x))));
        &d.u * s * d.v.adjoint()
    }

    #[test]
    fn svd_reconstructs_structured_matrices() {
        // Kronecker factors give repeated singular values, the case that
        // breaks naive bidiagonal iterations on wide inputs.
        let mut rng = random::seeded(4);
        for trial in 0..200 {
            let k = 1 + trial % 4;
            let (r, c) = (1 + (trial / 4) % 4, 1 + (trial / 16) % 6);
            let g = random::gaussian(&mut rng, r, c);
            let a = kron(&CMat::identity(k, k), &g);
            let q = random::unitary(&mut rng, a.nrows());
            for m in [&q * &a, (&q * &a).adjoint()] {
                let d = svd(&m);
                assert!(
                    max_abs(&(recompose(&d) - &m)) < 1e-12 * (1.0 + max_abs(&m)),
                    "trial {trial} {:?}",
                    m.shape()
                );
                assert!(isometry_defect(&d.u) < 1e-12);
                assert!(isometry_defect(&d.v) < 1e-12);
            }
        }
    }

    #[test]
    fn eigh_and_svd_handle_clustered_spectra() {
        let mut rng = random::seeded(5);
        for trial in 0..100 {
            let k = 1 + trial % 3;
            let n = 1 + (trial / 3) % 5;
            let g = random::gaussian(&mut rng, n, n);
            let q = random::unitary(&mut rng, k * n);
            let h = &q * kron(&CMat::identity(k, k), &hermitian_part(&g)) * q.adjoint();
            let (vals, vecs) = eigh(&h);
            let d = CMat::from_diagonal(&CVec::from_iterator(k * n, vals.iter().map(|&x| re(x))));
            assert!(
                max_abs(&(&vecs * d * vecs.adjoint() - &h)) < 1e-12 * (1.0 + max_abs(&h)),
                "trial {trial}"
            );
            let a = &q * kron(&CMat::identity(k, k), &g);
            let s = svd(&a);
            assert!(
                max_abs(&(recompose(&s) - &a)) < 1e-12 * (1.0 + max_abs(&a)),
                "trial {trial}"
            );
        }
    }

    #[test]
    fn eigh_reconstructs_hermitian_matrices() {
        let mut rng = random::seeded(3);
        let g = random::gaussian(&mut rng, 5, 5);
        let h = hermitian_part(&g);
        let (vals, vecs) = eigh(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMat::from_diagonal(&CVec::from_iterator(5, vals.iter().map(|&x| re(x))));
        assert!(max_abs(&(&vecs * d * vecs.adjoint() - h)) < 1e-12);
    }

    #[test]
    fn svd_is_sorted_and_exact() {
        let mut rng = random::seeded(4);
        let a = random::gaussian(&mut rng, 3, 6);
        let d = svd(&a);
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        let s = CMat::from_diagonal(&CVec::from_iterator(3, d.s.iter().map(|&x| re(x))));
        assert!(max_abs(&(&d.u * s * d.v.adjoint() - a)) < 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let mut rng = random::seeded(5);
        let a = random::gaussian(&mut rng, 2, 5);
        let n = null_space(&a, 1e-10);
        assert_eq!(n.ncols(), 3);
        assert!(max_abs(&(&a * &n)) < 1e-12);
        assert!(isometry_defect(&n) < 1e-12);
    }

    #[test]
    fn pinv_solves_consistent_systems() {
        let mut rng = random::seeded(6);
        let a = random::gaussian(&mut rng, 4, 7);
        let x0 = random::gaussian(&mut rng, 3, 4);
        let b = &x0 * &a;
        let (x, res) = solve_right(&a, &b, 1e-12);
        assert!(res < 1e-11);
        assert!(max_abs(&(x - x0)) < 1e-10);
    }

    #[test]
    fn rank_and_range_of_low_rank_product() {
        let mut rng = random::seeded(7);
        let a = random::gaussian(&mut rng, 6, 2) * random::gaussian(&mut rng, 2, 6);
        assert_eq!(rank(&a, 1e-10), 2);
        let q = range_basis(&a, 1e-10);
        for j in 0..6 {
            assert!(span_residual(&q, &a.column(j).into_owned()) < 1e-10);
        }
    }

    #[test]
    fn vec_roundtrip() {
        let mut rng = random::seeded(8);
        let a = random::gaussian(&mut rng, 3, 4);
        assert_eq!(unvec(&vec_rm(&a), 3, 4), a);
    }
}
