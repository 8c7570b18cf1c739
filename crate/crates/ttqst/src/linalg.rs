//! Small dense linear-algebra helpers on top of nalgebra.
//!
//! Matrices are column-major `DMatrix`. The SVD/QR wrappers apply a
//! deterministic phase convention so that factorizations are reproducible
//! bit-for-bit given identical input.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::Scalar;

pub type Mat<T> = DMatrix<T>;

/// Thin SVD `a = u * diag(s) * vh` with singular values sorted descending and
/// each column of `u` phased so its first non-negligible entry is real
/// positive.
pub fn thin_svd<T: Scalar>(a: &Mat<T>) -> Result<(Mat<T>, Vec<f64>, Mat<T>)> {
    let svd = a.clone().svd(true, true);
    let mut u = svd.u.ok_or_else(|| Error::validation("svd did not produce u"))?;
    let mut vh = svd
        .v_t
        .ok_or_else(|| Error::validation("svd did not produce v"))?;
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();

    for j in 0..u.ncols() {
        let col_max = (0..u.nrows())
            .map(|i| u[(i, j)].modulus())
            .fold(0.0f64, f64::max);
        if col_max == 0.0 {
            continue;
        }
        let pivot = (0..u.nrows()).find(|&i| u[(i, j)].modulus() > 1e-12 * col_max);
        if let Some(i) = pivot {
            let x = u[(i, j)];
            let phase = x.unscale(x.modulus());
            let conj_phase = phase.conjugate();
            for r in 0..u.nrows() {
                u[(r, j)] *= conj_phase;
            }
            if j < vh.nrows() {
                for c in 0..vh.ncols() {
                    vh[(j, c)] *= phase;
                }
            }
        }
    }
    Ok((u, s, vh))
}

/// Thin QR `a = q * r` with the diagonal of `r` made real non-negative (the
/// column-phase correction that also turns a QR of a Gaussian matrix into a
/// Haar-distributed orthogonal/unitary factor).
pub fn thin_qr_phase_fixed<T: Scalar>(a: Mat<T>) -> (Mat<T>, Mat<T>) {
    let qr = a.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let k = q.ncols().min(r.nrows());
    for j in 0..k {
        let d = r[(j, j)];
        let m = d.modulus();
        if m > 0.0 {
            let phase = d.unscale(m);
            let conj_phase = phase.conjugate();
            for i in 0..q.nrows() {
                q[(i, j)] *= phase;
            }
            for c in 0..r.ncols() {
                r[(j, c)] *= conj_phase;
            }
        }
    }
    (q, r)
}

/// `max_ij |(mᴴm − I)_ij|`, the unitarity defect of the columns of `m`.
pub fn gram_identity_defect<T: Scalar>(m: &Mat<T>) -> f64 {
    let g = m.adjoint() * m;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((g[(i, j)] - target).modulus());
        }
    }
    worst
}

/// Frobenius norm of a scalar slice.
pub fn slice_norm<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

/// Conjugate-linear-in-first-argument inner product of two slices.
pub fn slice_inner<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conjugate() * *y;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_vec, rng_from_seed};
    use num_complex::Complex64;

    fn random_mat<T: Scalar>(rows: usize, cols: usize, seed: u64) -> Mat<T> {
        let mut rng = rng_from_seed(seed);
        Mat::from_vec(rows, cols, normal_vec(&mut rng, rows * cols))
    }

    #[test]
    fn svd_reconstructs_real_and_complex() {
        let a = random_mat::<f64>(9, 5, 1);
        let (u, s, vh) = thin_svd(&a).unwrap();
        let mut sig = Mat::<f64>::zeros(u.ncols(), vh.nrows());
        for (i, &x) in s.iter().enumerate() {
            sig[(i, i)] = x;
        }
        assert!(((&u * sig * &vh) - &a).norm() < 1e-12 * a.norm());

        let c = random_mat::<Complex64>(6, 8, 2);
        let (u, s, vh) = thin_svd(&c).unwrap();
        let mut sig = Mat::<Complex64>::zeros(u.ncols(), vh.nrows());
        for (i, &x) in s.iter().enumerate() {
            sig[(i, i)] = Complex64::new(x, 0.0);
        }
        assert!(((&u * sig * &vh) - &c).norm() < 1e-12 * c.norm());
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_phase_convention_pins_columns() {
        let a = random_mat::<Complex64>(7, 4, 3);
        let (u, _, _) = thin_svd(&a).unwrap();
        for j in 0..u.ncols() {
            let col_max = (0..u.nrows()).map(|i| u[(i, j)].norm()).fold(0.0, f64::max);
            let i = (0..u.nrows())
                .find(|&i| u[(i, j)].norm() > 1e-12 * col_max)
                .unwrap();
            assert!(u[(i, j)].im.abs() < 1e-12);
            assert!(u[(i, j)].re > 0.0);
        }
    }

    #[test]
    fn qr_phase_fix_keeps_product_and_signs() {
        let a = random_mat::<Complex64>(10, 10, 4);
        let (q, r) = thin_qr_phase_fixed(a.clone());
        assert!((&q * &r - &a).norm() < 1e-12 * a.norm());
        assert!(gram_identity_defect(&q) < 1e-13);
        for j in 0..r.nrows() {
            assert!(r[(j, j)].im.abs() < 1e-13);
            assert!(r[(j, j)].re >= 0.0);
        }
    }
}
