//! Lie-algebra certificates for universality.
//!
//! The local gates `S ⊗ T` form a subgroup whose Lie algebra 𝔥 sits
//! inside u(d²) with dimension 2d²−1. Together with its conjugate
//! `V 𝔥 V⁻¹` it either generates all of u(d²) (dimension d⁴) or stays at
//! 𝔥 — nothing in between. Computing the bracket closure therefore gives
//! an independent numeric certificate of (im)primitivity; the four-block
//! decomposition of u(d²) under local conjugation and the normalizer test
//! make the mechanism observable.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gate::Gate;
use crate::linalg::{self, CMatrix};
use crate::primitivity;
use crate::tol;

/// Hard cap on bracket rounds before the closure aborts with a diagnostic.
const MAX_ROUNDS: usize = 50;

/// Orthonormal set of anti-hermitian matrices spanning a Lie subalgebra
/// of u(d²), under the real inner product `Re tr(a†b)`.
#[derive(Debug, Clone)]
pub struct LieBasis {
    matrix_size: usize,
    elements: Vec<CMatrix>,
}

impl LieBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn matrix_size(&self) -> usize {
        self.matrix_size
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn gram_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.elements.iter().enumerate() {
            for (j, b) in self.elements.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((linalg::re_inner(a, b) - want).abs());
            }
        }
        worst
    }

    /// Residual of `x` against the span (norm after projecting out).
    pub fn out_of_span(&self, x: &CMatrix) -> f64 {
        let norm = linalg::fro_norm(x);
        if norm <= f64::EPSILON {
            return 0.0;
        }
        let mut r = x.mapv(|z| z / norm);
        linalg::project_out(&mut r, &self.elements);
        linalg::fro_norm(&r)
    }
}

/// Orthonormal basis of 𝔥 = {X⊗I + I⊗Y : X, Y ∈ u(d)}; dimension 2d²−1.
pub fn basis_h(d: usize) -> LieBasis {
    let d2 = d * d;
    let mut elements = Vec::with_capacity(2 * d2 - 1);
    // Scalar direction i·(I ⊗ I), normalized.
    let scalar = linalg::identity(d2).mapv(|z| z * linalg::I / d as f64);
    elements.push(scalar);
    let eye = linalg::identity(d);
    let scale = 1.0 / (d as f64).sqrt();
    for x in linalg::su_basis(d) {
        elements.push(linalg::kron(&x, &eye).mapv(|z| z * scale));
    }
    for y in linalg::su_basis(d) {
        elements.push(linalg::kron(&eye, &y).mapv(|z| z * scale));
    }
    LieBasis {
        matrix_size: d2,
        elements,
    }
}

/// Traceless part of 𝔥: the Lie algebra of special local gates,
/// dimension 2(d²−1).
pub fn basis_h_su(d: usize) -> LieBasis {
    let full = basis_h(d);
    LieBasis {
        matrix_size: full.matrix_size,
        elements: full.elements.into_iter().skip(1).collect(),
    }
}

/// Conjugated basis `{V ξ V⁻¹}`, re-orthonormalized; spans `V 𝔥 V⁻¹`.
pub fn conjugate_basis(v: &Gate, b: &LieBasis) -> Result<LieBasis> {
    if v.dim() != b.matrix_size {
        return Err(Error::DimensionMismatch(v.dim(), b.matrix_size));
    }
    let vd = linalg::adjoint(v.matrix());
    let conjugated: Vec<CMatrix> = b
        .elements
        .iter()
        .map(|xi| v.matrix().dot(xi).dot(&vd))
        .collect();
    let elements = linalg::orthonormalize_real_span(&conjugated, tol::CLOSURE_ADMIT);
    Ok(LieBasis {
        matrix_size: b.matrix_size,
        elements,
    })
}

fn bracket(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut c = a.dot(b) - b.dot(a);
    // Anti-hermitize to keep round-off inside u(d²).
    let ct = linalg::adjoint(&c);
    c.zip_mut_with(&ct, |x, y| *x = (*x - y) * 0.5);
    c
}

/// Smallest real Lie algebra containing the span of the generators.
///
/// Breadth-first bracket rounds: every newly admitted element is
/// bracketed against the whole current basis; candidates are normalized,
/// projected against the span (two Gram-Schmidt passes), and admitted
/// when the residual exceeds `tol`. Stops when a round admits nothing,
/// or immediately once the dimension reaches dim u(d²) = d⁴, the full
/// space.
pub fn lie_closure(generators: &[CMatrix], tol: f64) -> Result<LieBasis> {
    let first = generators.first().ok_or_else(|| {
        Error::BadSpec("lie_closure needs at least one generator".into())
    })?;
    let size = first.nrows();
    for g in generators {
        if g.nrows() != size || g.ncols() != size {
            return Err(Error::DimensionMismatch(g.nrows(), size));
        }
        let norm = linalg::fro_norm(g).max(1.0);
        let res = linalg::antihermitian_residual(g) / norm;
        if res > 1e-8 {
            return Err(Error::NotAntiHermitian(res));
        }
    }
    let cap = size * size;
    let mut basis = linalg::orthonormalize_real_span(generators, tol);
    let mut fresh_from = 0;
    let mut rounds = 0;
    while fresh_from < basis.len() && basis.len() < cap {
        rounds += 1;
        if rounds > MAX_ROUNDS {
            return Err(Error::ClosureRoundCap(MAX_ROUNDS));
        }
        let fresh_end = basis.len();
        'outer: for a_idx in fresh_from..fresh_end {
            for b_idx in 0..fresh_end {
                if a_idx == b_idx {
                    continue;
                }
                let c = bracket(&basis[a_idx], &basis[b_idx]);
                let norm = linalg::fro_norm(&c);
                if norm <= 1e-12 {
                    continue;
                }
                let mut r = c.mapv(|z| z / norm);
                linalg::project_out(&mut r, &basis);
                let rnorm = linalg::fro_norm(&r);
                if rnorm > tol {
                    r.mapv_inplace(|z| z / rnorm);
                    basis.push(r);
                    if basis.len() == cap {
                        break 'outer;
                    }
                }
            }
        }
        fresh_from = fresh_end;
    }
    Ok(LieBasis {
        matrix_size: size,
        elements: basis,
    })
}

/// Components of an algebra element along the four conjugation-irreducible
/// blocks of u(d²): scalars, `su(d)⊗I`, `I⊗su(d)`, and the complement.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub p0: CMatrix,
    pub p1: CMatrix,
    pub p2: CMatrix,
    pub p3: CMatrix,
}

impl BlockDecomposition {
    pub fn component(&self, idx: usize) -> &CMatrix {
        match idx {
            0 => &self.p0,
            1 => &self.p1,
            2 => &self.p2,
            3 => &self.p3,
            _ => panic!("block index out of range"),
        }
    }
}

/// Orthogonal projection of an anti-hermitian ξ onto the four blocks.
///
/// `p0 = (tr ξ / d²)·I`; `p1 = X₀ ⊗ I` with `X₀` the traceless part of the
/// slot-2 partial trace divided by d; `p2` symmetrically; `p3` the rest.
pub fn block_project(xi: &CMatrix, d: usize) -> Result<BlockDecomposition> {
    let d2 = d * d;
    if xi.nrows() != d2 || xi.ncols() != d2 {
        return Err(Error::DimensionMismatch(xi.nrows(), d2));
    }
    let res = linalg::antihermitian_residual(xi) / linalg::fro_norm(xi).max(1.0);
    if res > 1e-8 {
        return Err(Error::NotAntiHermitian(res));
    }
    let trace: Complex64 = (0..d2).map(|i| xi[(i, i)]).sum();
    let mean = trace / d2 as f64;
    let p0 = linalg::identity(d2).mapv(|z| z * mean);

    // Partial trace over slot 2: X[i,k] = Σ_j ξ[(i,j),(k,j)].
    let mut x = Array2::from_elem((d, d), linalg::ZERO);
    for i in 0..d {
        for k in 0..d {
            for j in 0..d {
                x[(i, k)] += xi[(i * d + j, k * d + j)];
            }
        }
    }
    x.mapv_inplace(|z| z / d as f64);
    for i in 0..d {
        x[(i, i)] -= mean;
    }
    let p1 = linalg::kron(&x, &linalg::identity(d));

    // Partial trace over slot 1: Y[j,l] = Σ_i ξ[(i,j),(i,l)].
    let mut y = Array2::from_elem((d, d), linalg::ZERO);
    for j in 0..d {
        for l in 0..d {
            for i in 0..d {
                y[(j, l)] += xi[(i * d + j, i * d + l)];
            }
        }
    }
    y.mapv_inplace(|z| z / d as f64);
    for j in 0..d {
        y[(j, j)] -= mean;
    }
    let p2 = linalg::kron(&linalg::identity(d), &y);

    let p3 = xi - &p0 - &p1 - &p2;
    Ok(BlockDecomposition { p0, p1, p2, p3 })
}

/// Check whether conjugation by `r` preserves 𝔥, and report the largest
/// complement-block leak over the basis of 𝔥.
pub fn normalizes_h(r: &Gate) -> Result<(bool, f64)> {
    if r.n() != 2 {
        return Err(Error::WrongSlotCount {
            expected: 2,
            got: r.n(),
        });
    }
    let d = r.d();
    let rd = linalg::adjoint(r.matrix());
    let mut max_leak = 0.0f64;
    for xi in basis_h(d).elements() {
        let conj = r.matrix().dot(xi).dot(&rd);
        let blocks = block_project(&conj, d)?;
        max_leak = max_leak.max(linalg::fro_norm(&blocks.p3));
    }
    Ok((max_leak <= tol::NORMALIZER, max_leak))
}

/// Joint verdict: the primitivity decision, the closure dimension, and
/// their required consistency.
#[derive(Debug, Clone, Serialize)]
pub struct UniversalityReport {
    pub d: usize,
    pub imprimitive: bool,
    pub closure_dim: usize,
    /// The only two dimensions the closure may take: [2d²−1, d⁴].
    pub expected_dims: [usize; 2],
    pub universal: bool,
    /// True when the closure dimension matches the primitivity verdict;
    /// false flags a numerical failure (in particular any intermediate
    /// dimension).
    pub consistent: bool,
}

/// Decide universality of {all 1-qudit gates} ∪ {v} and cross-check the
/// primitivity route against the closure dimension.
pub fn universality_report(v: &Gate) -> Result<UniversalityReport> {
    let d = v.d();
    let verdict = primitivity::is_primitive(v, tol::PRIMITIVITY)?;
    let imprimitive = !verdict.is_primitive;

    let hb = basis_h(d);
    let hc = conjugate_basis(v, &hb)?;
    let mut generators = hb.elements().to_vec();
    generators.extend_from_slice(hc.elements());
    let closure = lie_closure(&generators, tol::CLOSURE_ADMIT)?;
    let closure_dim = closure.dim();

    let dim_h = 2 * d * d - 1;
    let dim_g = d.pow(4);
    let consistent = if imprimitive {
        closure_dim == dim_g
    } else {
        closure_dim == dim_h
    };
    Ok(UniversalityReport {
        d,
        imprimitive,
        closure_dim,
        expected_dims: [dim_h, dim_g],
        universal: imprimitive,
        consistent,
    })
}
