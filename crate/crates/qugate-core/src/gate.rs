//! Gates on n-qudit registers: validated unitaries together with the slot
//! bookkeeping, embeddings, the reshuffle/operator-Schmidt machinery, and
//! the phase-invariant distance.
//!
//! Basis convention: the column index of `|i1 i2 .. in>` is `Σ i_k d^(n-k)`
//! (big-endian digits), and `<row|V|col> = V[row, col]`. For two slots the
//! coefficient `V_{ij,kl}` lives at `V[i*d+j, k*d+l]`.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::tol;

/// A unitary gate on `n` qudits of local dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    d: usize,
    n: usize,
    matrix: CMatrix,
}

impl Gate {
    /// Validate and wrap a matrix: square of size d^n, finite entries,
    /// unitary within [`tol::UNITARITY`].
    pub fn new(d: usize, n: usize, matrix: CMatrix) -> Result<Self> {
        if d < 2 {
            return Err(Error::BadDimension(d));
        }
        if n < 1 {
            return Err(Error::BadSlotCount(n));
        }
        let dim = checked_dim(d, n)?;
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if matrix.nrows() != dim {
            return Err(Error::SizeMismatch {
                size: matrix.nrows(),
                d,
                n,
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let residual = linalg::unitarity_residual(&matrix);
        if residual > tol::UNITARITY {
            return Err(Error::NotUnitary {
                residual,
                tol: tol::UNITARITY,
            });
        }
        Ok(Gate { d, n, matrix })
    }

    /// Wrap a matrix known to be unitary by construction (products and
    /// embeddings of validated gates). Size bookkeeping is still enforced.
    pub(crate) fn new_unchecked(d: usize, n: usize, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), d.pow(n as u32));
        debug_assert!(linalg::unitarity_residual(&matrix) <= 1e-6);
        Gate { d, n, matrix }
    }

    /// Identity gate on `n` slots of dimension `d`.
    pub fn identity(d: usize, n: usize) -> Result<Self> {
        let dim = checked_dim(d, n)?;
        if d < 2 {
            return Err(Error::BadDimension(d));
        }
        Ok(Gate {
            d,
            n,
            matrix: linalg::identity(dim),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total Hilbert-space dimension d^n.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn compose(&self, other: &Gate) -> Result<Gate> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(Gate::new_unchecked(
            self.d,
            self.n,
            self.matrix.dot(&other.matrix),
        ))
    }

    /// Conjugate transpose (the inverse).
    pub fn dag(&self) -> Gate {
        Gate::new_unchecked(self.d, self.n, linalg::adjoint(&self.matrix))
    }

    /// Multiply by a scalar phase `e^{i·theta}`.
    pub fn phased(&self, theta: f64) -> Gate {
        let ph = Complex64::from_polar(1.0, theta);
        Gate::new_unchecked(self.d, self.n, self.matrix.mapv(|z| z * ph))
    }

    /// Apply to a state vector.
    pub fn apply(&self, psi: &CVector) -> Result<CVector> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch(psi.len(), self.dim()));
        }
        Ok(self.matrix.dot(psi))
    }
}

fn checked_dim(d: usize, n: usize) -> Result<usize> {
    if n < 1 {
        return Err(Error::BadSlotCount(n));
    }
    let mut dim: usize = 1;
    for _ in 0..n {
        dim = dim
            .checked_mul(d)
            .filter(|&x| x <= tol::MAX_DIM)
            .ok_or(Error::TooLarge {
                dim: usize::MAX,
                cap: tol::MAX_DIM,
            })?;
    }
    Ok(dim)
}

/// Operator Schmidt decomposition of a 2-slot gate:
/// `V = Σ_m σ_m · A_m ⊗ B_m` with orthonormal factor sets.
#[derive(Debug, Clone)]
pub struct SchmidtData {
    pub singular_values: Vec<f64>,
    pub left_factors: Vec<CMatrix>,
    pub right_factors: Vec<CMatrix>,
}

impl SchmidtData {
    /// Number of terms above `rel_tol` times the leading value.
    pub fn rank(&self, rel_tol: f64) -> usize {
        linalg::rank_from_singular(&self.singular_values, rel_tol)
    }

    /// Ratio of the second to the leading singular value; 0 when rank 1.
    pub fn second_ratio(&self) -> f64 {
        match self.singular_values.as_slice() {
            [] | [_] => 0.0,
            [s0, s1, ..] => {
                if *s0 <= 0.0 {
                    0.0
                } else {
                    s1 / s0
                }
            }
        }
    }

    /// Rebuild `Σ σ_m A_m ⊗ B_m`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.left_factors[0].nrows();
        let mut out = Array2::from_elem((d * d, d * d), linalg::ZERO);
        for ((s, a), b) in self
            .singular_values
            .iter()
            .zip(&self.left_factors)
            .zip(&self.right_factors)
        {
            out.zip_mut_with(&linalg::kron(a, b), |o, k| *o += s * k);
        }
        out
    }
}

/// Index rearrangement turning Kronecker structure into matrix rank:
/// `M[i·d+k, j·d+l] = V_{ij,kl}`; `rank(M) = 1` iff `V = A ⊗ B`.
pub fn reshuffle(v: &Gate) -> Result<CMatrix> {
    if v.n() != 2 {
        return Err(Error::WrongSlotCount {
            expected: 2,
            got: v.n(),
        });
    }
    let d = v.d();
    let m = Array2::from_shape_fn((d * d, d * d), |(r, c)| {
        let (i, k) = (r / d, r % d);
        let (j, l) = (c / d, c % d);
        v.matrix()[(i * d + j, k * d + l)]
    });
    Ok(m)
}

/// SVD of the reshuffled gate repackaged into Kronecker factors.
pub fn operator_schmidt(v: &Gate) -> Result<SchmidtData> {
    let d = v.d();
    let m = reshuffle(v)?;
    let (u, s, vt) = linalg::svd(&m)?;
    let mut left = Vec::with_capacity(s.len());
    let mut right = Vec::with_capacity(s.len());
    for m_idx in 0..s.len() {
        left.push(Array2::from_shape_fn((d, d), |(i, k)| {
            u[(i * d + k, m_idx)]
        }));
        right.push(Array2::from_shape_fn((d, d), |(j, l)| {
            vt[(m_idx, j * d + l)]
        }));
    }
    Ok(SchmidtData {
        singular_values: s,
        left_factors: left,
        right_factors: right,
    })
}

/// Embed a 1-qudit gate on slot `l` (1-based) of an `n`-slot register.
pub fn embed1(a: &Gate, slot: usize, n: usize) -> Result<Gate> {
    if a.n() != 1 {
        return Err(Error::WrongSlotCount {
            expected: 1,
            got: a.n(),
        });
    }
    if slot < 1 || slot > n {
        return Err(Error::SlotOutOfRange { slot, n });
    }
    let d = a.d();
    checked_dim(d, n)?;
    let left = d.pow((slot - 1) as u32);
    let right = d.pow((n - slot) as u32);
    let m = linalg::kron(
        &linalg::kron(&linalg::identity(left), a.matrix()),
        &linalg::identity(right),
    );
    Ok(Gate::new_unchecked(d, n, m))
}

/// Embed a 2-qudit gate on the ordered slot pair `(p, q)` (1-based) of an
/// `n`-slot register; acts as the identity elsewhere.
pub fn embed2(b: &Gate, p: usize, q: usize, n: usize) -> Result<Gate> {
    if b.n() != 2 {
        return Err(Error::WrongSlotCount {
            expected: 2,
            got: b.n(),
        });
    }
    if p == q {
        return Err(Error::EqualSlots { p, q });
    }
    for slot in [p, q] {
        if slot < 1 || slot > n {
            return Err(Error::SlotOutOfRange { slot, n });
        }
    }
    let d = b.d();
    let dim = checked_dim(d, n)?;
    let (p0, q0) = (p - 1, q - 1);
    // Digit weights: slot k (0-based) carries weight d^(n-1-k).
    let weights: Vec<usize> = (0..n).map(|k| d.pow((n - 1 - k) as u32)).collect();
    let outside: Vec<usize> = (0..n).filter(|&k| k != p0 && k != q0).collect();
    let mut m = Array2::from_elem((dim, dim), linalg::ZERO);
    let combos = d.pow(outside.len() as u32);
    for t in 0..combos {
        let mut base = 0;
        let mut rest = t;
        for &k in &outside {
            base += (rest % d) * weights[k];
            rest /= d;
        }
        for rp in 0..d {
            for rq in 0..d {
                let row = base + rp * weights[p0] + rq * weights[q0];
                for cp in 0..d {
                    for cq in 0..d {
                        let col = base + cp * weights[p0] + cq * weights[q0];
                        m[(row, col)] = b.matrix()[(rp * d + rq, cp * d + cq)];
                    }
                }
            }
        }
    }
    Ok(Gate::new_unchecked(d, n, m))
}

/// Phase-invariant distance `1 − |tr(u†w)| / d^n`, in `[0, 1]`; zero exactly
/// when `u = e^{iθ} w`.
pub fn dist_up_to_phase(u: &Gate, w: &Gate) -> Result<f64> {
    if u.d() != w.d() || u.n() != w.n() {
        return Err(Error::DimensionMismatch(u.dim(), w.dim()));
    }
    Ok(dist_up_to_phase_raw(u.matrix(), w.matrix()))
}

/// Same distance on raw matrices of equal size.
pub(crate) fn dist_up_to_phase_raw(u: &CMatrix, w: &CMatrix) -> f64 {
    let overlap = linalg::hs_inner(u, w).norm();
    (1.0 - overlap / u.nrows() as f64).max(0.0)
}

// ── JSON wire format ────────────────────────────────────────────────

/// On-disk gate format: `{ "d": int, "n": int, "matrix": [[[re,im],..],..] }`,
/// row-major in the computational basis.
#[derive(Serialize, Deserialize)]
struct GateJson {
    d: usize,
    n: usize,
    matrix: Vec<Vec<[f64; 2]>>,
}

impl Gate {
    pub fn to_json(&self) -> String {
        let matrix = self
            .matrix
            .rows()
            .into_iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        let j = GateJson {
            d: self.d,
            n: self.n,
            matrix,
        };
        serde_json::to_string_pretty(&j).expect("gate serializes")
    }

    /// Parse and validate; rejects non-square and non-unitary input with a
    /// diagnostic carrying the residual.
    pub fn from_json(text: &str) -> Result<Self> {
        let j: GateJson = serde_json::from_str(text)?;
        let rows = j.matrix.len();
        let cols = j.matrix.first().map_or(0, Vec::len);
        if j.matrix.iter().any(|r| r.len() != cols) || rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let m = Array2::from_shape_fn((rows, cols), |(i, k)| {
            Complex64::new(j.matrix[i][k][0], j.matrix[i][k][1])
        });
        Gate::new(j.d, j.n, m)
    }

    pub fn write_json_file(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Gate::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs, ONE, ZERO};

    fn swap2() -> Gate {
        // P|xy> = |yx> for d = 2.
        let mut m = Array2::from_elem((4, 4), ZERO);
        m[(0, 0)] = ONE;
        m[(1, 2)] = ONE;
        m[(2, 1)] = ONE;
        m[(3, 3)] = ONE;
        Gate::new(2, 2, m).unwrap()
    }

    fn cnot2() -> Gate {
        let mut m = Array2::from_elem((4, 4), ZERO);
        m[(0, 0)] = ONE;
        m[(1, 1)] = ONE;
        m[(2, 3)] = ONE;
        m[(3, 2)] = ONE;
        Gate::new(2, 2, m).unwrap()
    }

    fn sigma_x() -> Gate {
        let mut m = Array2::from_elem((2, 2), ZERO);
        m[(0, 1)] = ONE;
        m[(1, 0)] = ONE;
        Gate::new(2, 1, m).unwrap()
    }

    #[test]
    fn rejects_non_unitary_with_residual() {
        let mut m = identity(4);
        m[(0, 0)] = Complex64::new(1.1, 0.0);
        match Gate::new(2, 2, m) {
            Err(Error::NotUnitary { residual, .. }) => assert!(residual > 0.1),
            other => panic!("expected NotUnitary, got {other:?}"),
        }
    }

    #[test]
    fn rejects_nan_entries() {
        let mut m = identity(4);
        m[(2, 2)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(Gate::new(2, 2, m), Err(Error::NonFinite)));
    }

    #[test]
    fn rejects_size_mismatch() {
        assert!(matches!(
            Gate::new(3, 2, identity(4)),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn enforces_dense_cap() {
        // 2^13 = 8192 exceeds the 4096 cap.
        assert!(matches!(
            Gate::identity(2, 13),
            Err(Error::TooLarge { .. })
        ));
        assert!(Gate::identity(2, 3).is_ok());
    }

    #[test]
    fn reshuffle_swap_singular_values() {
        // Hand computation: the reshuffled swap is a permutation matrix,
        // so all four singular values equal 1.
        let s = operator_schmidt(&swap2()).unwrap();
        for (got, want) in s.singular_values.iter().zip([1.0, 1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn reshuffle_cnot_singular_values() {
        // Hand computation: reshuffled CNOT has two orthogonal rows of norm
        // √2 and two zero rows.
        let s = operator_schmidt(&cnot2()).unwrap();
        let want = [2f64.sqrt(), 2f64.sqrt(), 0.0, 0.0];
        for (got, want) in s.singular_values.iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(s.rank(1e-9), 2);
    }

    #[test]
    fn schmidt_of_identity_is_single_term() {
        let g = Gate::identity(2, 2).unwrap();
        let s = operator_schmidt(&g).unwrap();
        assert_eq!(s.rank(1e-9), 1);
        assert!((s.singular_values[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn schmidt_reconstruction_roundtrip() {
        for g in [swap2(), cnot2()] {
            let s = operator_schmidt(&g).unwrap();
            let back = s.reconstruct();
            assert!(max_abs(&(&back - g.matrix())) < 1e-10);
        }
    }

    #[test]
    fn embed1_acts_on_the_right_slot() {
        // sigma_x on slot 1 of two: |00> -> |10>.
        let g = embed1(&sigma_x(), 1, 2).unwrap();
        assert_eq!(g.matrix()[(2, 0)], ONE);
        // Slot 2 embedding is I ⊗ A.
        let g2 = embed1(&sigma_x(), 2, 2).unwrap();
        let expect = linalg::kron(&identity(2), sigma_x().matrix());
        assert!(max_abs(&(g2.matrix() - &expect)) < 1e-14);
    }

    #[test]
    fn embed1_slot_range_checked() {
        assert!(matches!(
            embed1(&sigma_x(), 3, 2),
            Err(Error::SlotOutOfRange { .. })
        ));
    }

    #[test]
    fn embed1_disjoint_slots_commute_to_kron() {
        let a = sigma_x();
        let h = {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let m = ndarray::array![
                [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)]
            ];
            Gate::new(2, 1, m).unwrap()
        };
        let lhs = embed1(&a, 1, 2)
            .unwrap()
            .compose(&embed1(&h, 2, 2).unwrap())
            .unwrap();
        let rhs = linalg::kron(a.matrix(), h.matrix());
        assert!(max_abs(&(lhs.matrix() - &rhs)) < 1e-14);
    }

    #[test]
    fn embed2_identity_placement() {
        let b = cnot2();
        let e = embed2(&b, 1, 2, 2).unwrap();
        assert!(max_abs(&(e.matrix() - b.matrix())) < 1e-14);
    }

    #[test]
    fn embed2_reversed_slots_is_swap_conjugation() {
        let b = cnot2();
        let p = swap2();
        let lhs = embed2(&b, 2, 1, 2).unwrap();
        let rhs = p.compose(&b).unwrap().compose(&p).unwrap();
        assert!(max_abs(&(lhs.matrix() - rhs.matrix())) < 1e-14);
    }

    #[test]
    fn embed2_rejects_equal_slots() {
        assert!(matches!(
            embed2(&cnot2(), 1, 1, 2),
            Err(Error::EqualSlots { .. })
        ));
    }

    #[test]
    fn embed2_on_three_slots_factorizes() {
        // B = S ⊗ T on slots (1,3): acts as S on slot 1, T on slot 3.
        let s = sigma_x();
        let t = sigma_x();
        let b = Gate::new(2, 2, linalg::kron(s.matrix(), t.matrix())).unwrap();
        let e = embed2(&b, 1, 3, 3).unwrap();
        let expect = embed1(&s, 1, 3)
            .unwrap()
            .compose(&embed1(&t, 3, 3).unwrap())
            .unwrap();
        assert!(max_abs(&(e.matrix() - expect.matrix())) < 1e-14);
    }

    #[test]
    fn dist_examples() {
        let sw = swap2();
        let id = Gate::identity(2, 2).unwrap();
        assert!(dist_up_to_phase(&id, &id).unwrap() < 1e-15);
        // tr(swap) = 2 on dimension 4.
        assert!((dist_up_to_phase(&id, &sw).unwrap() - 0.5).abs() < 1e-12);
        // Phase invariance.
        let phased = sw.phased(1.234);
        assert!(dist_up_to_phase(&sw, &phased).unwrap() < 1e-12);
    }

    #[test]
    fn json_roundtrip_and_rejection() {
        let g = cnot2();
        let text = g.to_json();
        let back = Gate::from_json(&text).unwrap();
        assert!(max_abs(&(back.matrix() - g.matrix())) < 1e-15);

        let bad = r#"{"d":2,"n":1,"matrix":[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.5,0.0]]]}"#;
        match Gate::from_json(bad) {
            Err(Error::NotUnitary { residual, .. }) => assert!(residual > 0.5),
            other => panic!("expected NotUnitary, got {other:?}"),
        }

        let nonsquare = r#"{"d":2,"n":1,"matrix":[[[1.0,0.0],[0.0,0.0]]]}"#;
        assert!(matches!(
            Gate::from_json(nonsquare),
            Err(Error::NotSquare { .. })
        ));
    }
}
