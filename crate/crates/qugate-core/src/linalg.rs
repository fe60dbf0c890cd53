//! Dense complex-matrix kernel.
//!
//! Everything here works on row-major `Array2<Complex64>` matrices. The
//! decomposition primitives (SVD, Hermitian eigensolver, QR, determinant)
//! are LAPACK-backed through `ndarray-linalg`; the orthonormalization and
//! basis constructions are implemented directly because they operate on
//! *real* spans of complex matrices, which no shelf routine provides.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Determinant, Eigh, SVD, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, row-major.
pub type CMatrix = Array2<Complex64>;
/// Dense complex vector.
pub type CVector = Array1<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// n-by-n identity.
pub fn identity(n: usize) -> CMatrix {
    Array2::eye(n)
}

/// Kronecker product; `(a ⊗ b)(x ⊗ y) = ax ⊗ by`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    ndarray::linalg::kron(a, b)
}

/// Conjugate transpose.
pub fn adjoint(a: &CMatrix) -> CMatrix {
    let mut out = a.t().to_owned();
    out.mapv_inplace(|z| z.conj());
    out
}

/// Hilbert-Schmidt inner product `tr(a† b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Real inner product `Re tr(a† b)` under which u(n) is a real Euclidean space.
pub fn re_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

/// Frobenius norm.
pub fn fro_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry magnitude.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖a†a − I‖_max`; zero for exactly unitary input.
pub fn unitarity_residual(a: &CMatrix) -> f64 {
    let mut g = adjoint(a).dot(a);
    for i in 0..g.nrows() {
        g[(i, i)] -= ONE;
    }
    max_abs(&g)
}

/// `‖a + a†‖_max`; zero for exactly anti-hermitian input.
pub fn antihermitian_residual(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] + a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Full SVD `a = u · diag(s) · vt`, singular values in non-increasing order.
pub fn svd(a: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let (u, s, vt) = a.svd(true, true)?;
    Ok((
        u.expect("svd requested u"),
        s.to_vec(),
        vt.expect("svd requested vt"),
    ))
}

/// Singular values only, non-increasing.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    let (_, s, _) = a.svd(false, false)?;
    Ok(s.to_vec())
}

/// Count of singular values above `rel_tol` times the largest.
pub fn rank_from_singular(s: &[f64], rel_tol: f64) -> usize {
    match s.first() {
        None => 0,
        Some(&s0) if s0 <= 0.0 => 0,
        Some(&s0) => s.iter().filter(|&&x| x > rel_tol * s0).count(),
    }
}

/// Eigendecomposition of a hermitian matrix: `a = u · diag(w) · u†` with
/// ascending eigenvalues and eigenvectors in the columns of `u`.
pub fn eigh_hermitian(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let (w, v) = a.eigh(UPLO::Lower)?;
    // The backend hands back the eigenvector matrix of the transposed
    // (row-major vs column-major) problem; conjugating restores the
    // columns-are-eigenvectors convention for hermitian input.
    Ok((w.to_vec(), v.mapv(|z| z.conj())))
}

/// Determinant via LU.
pub fn det(a: &CMatrix) -> Result<Complex64> {
    Ok(a.det()?)
}

/// Exponential of an anti-hermitian matrix, exactly unitary up to round-off.
///
/// Writes `a = i·h` with `h` hermitian and returns `u · exp(i·diag(w)) · u†`
/// from the eigendecomposition of `h`.
pub fn expm_antihermitian(a: &CMatrix) -> Result<CMatrix> {
    let h = a.mapv(|z| z * Complex64::new(0.0, -1.0));
    let (w, u) = eigh_hermitian(&h)?;
    let phases: Vec<Complex64> = w.iter().map(|&x| Complex64::from_polar(1.0, x)).collect();
    let mut scaled = u.clone();
    for (j, col) in scaled.columns_mut().into_iter().enumerate() {
        let mut col = col;
        col.mapv_inplace(|z| z * phases[j]);
    }
    Ok(scaled.dot(&adjoint(&u)))
}

/// Nearest unitary in Frobenius norm: the `u·vt` factor of the SVD.
pub fn polar_unitary(a: &CMatrix) -> Result<CMatrix> {
    let (u, _, vt) = svd(a)?;
    Ok(u.dot(&vt))
}

/// Orthonormal basis of u(d): anti-hermitian d×d matrices under `Re tr(a†b)`.
///
/// Ordering: d diagonal elements `i·E_jj`, then the off-diagonal pairs.
pub fn u_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        let mut m = Array2::from_elem((d, d), ZERO);
        m[(j, j)] = I;
        out.push(m);
    }
    append_offdiag_pairs(d, &mut out);
    out
}

/// Orthonormal basis of su(d): traceless anti-hermitian d×d matrices.
pub fn su_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d - 1);
    // Diagonal ladder: i·diag(1,..,1,-m,0,..)/sqrt(m(m+1)) with m leading ones.
    for m in 1..d {
        let norm = (m as f64 * (m as f64 + 1.0)).sqrt();
        let mut mat = Array2::from_elem((d, d), ZERO);
        for j in 0..m {
            mat[(j, j)] = I / norm;
        }
        mat[(m, m)] = -I * (m as f64) / norm;
        out.push(mat);
    }
    append_offdiag_pairs(d, &mut out);
    out
}

fn append_offdiag_pairs(d: usize, out: &mut Vec<CMatrix>) {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in (j + 1)..d {
            let mut re = Array2::from_elem((d, d), ZERO);
            re[(j, k)] = Complex64::new(inv_sqrt2, 0.0);
            re[(k, j)] = Complex64::new(-inv_sqrt2, 0.0);
            out.push(re);
            let mut im = Array2::from_elem((d, d), ZERO);
            im[(j, k)] = Complex64::new(0.0, inv_sqrt2);
            im[(k, j)] = Complex64::new(0.0, inv_sqrt2);
            out.push(im);
        }
    }
}

/// Project `x` orthogonally against each of `basis` (real coefficients),
/// in place; two modified Gram-Schmidt passes for stability.
pub fn project_out(x: &mut CMatrix, basis: &[CMatrix]) {
    for _ in 0..2 {
        for e in basis {
            let c = re_inner(e, x);
            if c != 0.0 {
                x.zip_mut_with(e, |xi, ei| *xi -= c * ei);
            }
        }
    }
}

/// Orthonormalize the real span of `mats`; drops members whose residual
/// against the accepted set falls at or below `tol` (relative to unit norm).
pub fn orthonormalize_real_span(mats: &[CMatrix], tol: f64) -> Vec<CMatrix> {
    let mut basis: Vec<CMatrix> = Vec::new();
    for m in mats {
        let norm = fro_norm(m);
        if norm <= f64::EPSILON {
            continue;
        }
        let mut r = m.mapv(|z| z / norm);
        project_out(&mut r, &basis);
        let rnorm = fro_norm(&r);
        if rnorm > tol {
            r.mapv_inplace(|z| z / rnorm);
            basis.push(r);
        }
    }
    basis
}

/// Dimension of the real span of `mats`.
pub fn real_span_dim(mats: &[CMatrix], tol: f64) -> usize {
    orthonormalize_real_span(mats, tol).len()
}

/// Reshape a length-d² vector into a d×d matrix, row-major.
pub fn unvec(v: &CVector, d: usize) -> Result<CMatrix> {
    if v.len() != d * d {
        return Err(Error::DimensionMismatch(v.len(), d * d));
    }
    Ok(Array2::from_shape_fn((d, d), |(i, k)| v[i * d + k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn kron_identity() {
        let i2 = identity(2);
        let i4 = kron(&i2, &i2);
        assert_eq!(i4, identity(4));
    }

    #[test]
    fn kron_mixed_product() {
        // (a ⊗ b)(x ⊗ y) = ax ⊗ by on basis vectors.
        let mut sx = Array2::from_elem((2, 2), ZERO);
        sx[(0, 1)] = ONE;
        sx[(1, 0)] = ONE;
        let g = kron(&sx, &identity(2));
        // |00> -> |10>: column 0 has its unit entry at row 2.
        assert_eq!(g[(2, 0)], ONE);
        assert_eq!(g[(0, 0)], ZERO);
    }

    #[test]
    fn unitarity_residual_detects_scaling() {
        let mut m = identity(3);
        assert!(unitarity_residual(&m) < 1e-15);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        assert!(unitarity_residual(&m) > 0.1);
    }

    #[test]
    fn expm_zero_is_identity() {
        let z = Array2::from_elem((3, 3), ZERO);
        let e = expm_antihermitian(&z).unwrap();
        assert!(max_abs(&(&e - &identity(3))) < 1e-12);
    }

    #[test]
    fn expm_is_unitary_and_matches_series() {
        // exp(i·t·sigma_x) = cos t · I + i sin t · sigma_x
        let t = 0.7313;
        let mut a = Array2::from_elem((2, 2), ZERO);
        a[(0, 1)] = I * t;
        a[(1, 0)] = I * t;
        let e = expm_antihermitian(&a).unwrap();
        assert!(unitarity_residual(&e) < 1e-12);
        assert!(approx(e[(0, 0)].re, t.cos(), 1e-12));
        assert!(approx(e[(0, 1)].im, t.sin(), 1e-12));
    }

    fn taylor_exp(m: &CMatrix) -> CMatrix {
        let n = m.nrows();
        let mut acc = identity(n);
        let mut term = identity(n);
        for k in 1..60 {
            term = term.dot(m).mapv(|z| z / k as f64);
            acc = &acc + &term;
        }
        acc
    }

    #[test]
    fn eigh_columns_diagonalize_the_input() {
        // Complex hermitian input whose eigenvector matrix is not
        // symmetric: catches orientation mix-ups in the backend glue.
        let h = ndarray::array![
            [Complex64::new(0.3, 0.0), Complex64::new(0.0707, -0.3536)],
            [Complex64::new(0.0707, 0.3536), Complex64::new(-0.2, 0.0)]
        ];
        let (w, u) = eigh_hermitian(&h).unwrap();
        assert!(unitarity_residual(&u) < 1e-12);
        let diag = Array2::from_shape_fn((2, 2), |(i, j)| {
            if i == j {
                Complex64::new(w[i], 0.0)
            } else {
                ZERO
            }
        });
        let rec = u.dot(&diag).dot(&adjoint(&u));
        assert!(max_abs(&(&rec - &h)) < 1e-12);
    }

    #[test]
    fn expm_matches_taylor_on_generic_antihermitian() {
        // Mixed symmetric/antisymmetric parts: a full-convention check.
        let a = ndarray::array![
            [Complex64::new(0.0, 0.3), Complex64::new(0.3536, 0.0707)],
            [Complex64::new(-0.3536, 0.0707), Complex64::new(0.0, -0.2)]
        ];
        let e = expm_antihermitian(&a).unwrap();
        assert!(max_abs(&(&e - &taylor_exp(&a))) < 1e-12);
    }

    #[test]
    fn u_basis_is_orthonormal_antihermitian() {
        for d in 2..=4 {
            let b = u_basis(d);
            assert_eq!(b.len(), d * d);
            for (i, x) in b.iter().enumerate() {
                assert!(antihermitian_residual(x) < 1e-15);
                for (j, y) in b.iter().enumerate() {
                    let g = re_inner(x, y);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(approx(g, want, 1e-14), "gram({i},{j}) = {g}");
                }
            }
        }
    }

    #[test]
    fn su_basis_is_traceless_orthonormal() {
        for d in 2..=4 {
            let b = su_basis(d);
            assert_eq!(b.len(), d * d - 1);
            for x in &b {
                let tr: Complex64 = (0..d).map(|i| x[(i, i)]).sum();
                assert!(tr.norm() < 1e-14);
                assert!(approx(re_inner(x, x), 1.0, 1e-14));
            }
        }
    }

    #[test]
    fn span_dim_counts_independent_directions() {
        let b = u_basis(3);
        assert_eq!(real_span_dim(&b, 1e-8), 9);
        // i·x and x span the same real line only if collinear over R; i·x is
        // a genuinely new direction when x is anti-hermitian? No: i·x is
        // hermitian, still linearly independent over R as a raw matrix.
        let doubled: Vec<CMatrix> = b.iter().cloned().chain(b.iter().cloned()).collect();
        assert_eq!(real_span_dim(&doubled, 1e-8), 9);
    }

    #[test]
    fn svd_of_diagonal() {
        let mut m = Array2::from_elem((2, 2), ZERO);
        m[(0, 0)] = Complex64::new(3.0, 0.0);
        m[(1, 1)] = Complex64::new(-4.0, 0.0);
        let s = singular_values(&m).unwrap();
        assert!(approx(s[0], 4.0, 1e-12));
        assert!(approx(s[1], 3.0, 1e-12));
        assert_eq!(rank_from_singular(&s, 1e-9), 2);
        assert_eq!(rank_from_singular(&[1.0, 1e-12], 1e-9), 1);
    }

    #[test]
    fn svd_reconstructs_complex_input() {
        let a = ndarray::array![
            [Complex64::new(0.2, 0.7), Complex64::new(-0.4, 0.1)],
            [Complex64::new(0.9, -0.3), Complex64::new(0.5, 0.6)]
        ];
        let (u, s, vt) = svd(&a).unwrap();
        let diag = Array2::from_shape_fn((2, 2), |(i, j)| {
            if i == j {
                Complex64::new(s[i], 0.0)
            } else {
                ZERO
            }
        });
        let rec = u.dot(&diag).dot(&vt);
        assert!(max_abs(&(&rec - &a)) < 1e-12);
    }

    #[test]
    fn polar_recovers_unitary_factor() {
        // a = 2·I is polar-projected back to I.
        let a = identity(3).mapv(|z| z * 2.0);
        let u = polar_unitary(&a).unwrap();
        assert!(max_abs(&(&u - &identity(3))) < 1e-12);
    }
}
