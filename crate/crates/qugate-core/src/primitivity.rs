//! Primitivity of 2-qudit gates.
//!
//! A gate is primitive when it maps every product state to a product
//! state; equivalently it is `S ⊗ T` or `(S ⊗ T)·P` with `P` the swap.
//! Three routes decide this numerically:
//!
//! 1. Schmidt route: the reshuffle of `V` (or of `V·P`) has rank 1.
//! 2. Coefficient route: the quadratic equations on matrix coefficients,
//!    brute-forced over all index tuples — an oracle for route 1.
//! 3. Diagonal route: for diagonal gates, the additive phase criterion.
//!
//! Primitive gates are factored constructively; imprimitive gates get an
//! explicit entangled witness `V|xy>`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gate::{operator_schmidt, Gate};
use crate::gates::swap;
use crate::linalg::{self, CMatrix, CVector};
use crate::tol;

/// Factorization of a primitive gate: `V = e^{i·phase} (S ⊗ T) · [P]`.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub s: Gate,
    pub t: Gate,
    pub swap_flag: bool,
    /// Global phase in `[0, 2π)`.
    pub phase: f64,
}

impl Factorization {
    /// Rebuild the gate this factorization describes.
    pub fn reconstruct(&self) -> Result<Gate> {
        let d = self.s.d();
        let st = Gate::new(d, 2, linalg::kron(self.s.matrix(), self.t.matrix()))?;
        let base = if self.swap_flag {
            st.compose(&swap(d)?)?
        } else {
            st
        };
        Ok(base.phased(self.phase))
    }
}

/// Product input that an imprimitive gate entangles.
#[derive(Debug, Clone)]
pub struct Witness {
    pub x: CVector,
    pub y: CVector,
    /// Von Neumann entropy (nats) of the reduced output state.
    pub output_entropy: f64,
}

/// Outcome of the primitivity decision.
#[derive(Debug, Clone)]
pub struct PrimitivityVerdict {
    pub is_primitive: bool,
    pub factorization: Option<Factorization>,
    pub witness: Option<Witness>,
    /// Best-route ratio σ₂/σ₁ of the reshuffled gate.
    pub residual_schmidt: f64,
    /// Best-route maximal coefficient-equation residual.
    pub residual_coeff: f64,
    /// Set when the verdict sits close to the decision threshold, or when
    /// an imprimitive gate entangles below the entropy floor.
    pub borderline: bool,
}

impl PrimitivityVerdict {
    /// Wire shape: `{"primitive","swap","phase","residuals","witness","borderline"}`.
    pub fn to_json(&self) -> serde_json::Value {
        let witness = self.witness.as_ref().map(|w| {
            serde_json::json!({
                "x": complex_pairs(&w.x),
                "y": complex_pairs(&w.y),
                "entropy": w.output_entropy,
            })
        });
        serde_json::json!({
            "primitive": self.is_primitive,
            "swap": self.factorization.as_ref().map(|f| f.swap_flag),
            "phase": self.factorization.as_ref().map(|f| f.phase),
            "residuals": {
                "schmidt": self.residual_schmidt,
                "coeff": self.residual_coeff,
            },
            "witness": witness,
            "borderline": self.borderline,
        })
    }
}

fn complex_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Both Schmidt-route ratios: `σ₂/σ₁` for the reshuffles of `V` and `V·P`.
pub fn schmidt_ratios(v: &Gate) -> Result<(f64, f64)> {
    let direct = operator_schmidt(v)?.second_ratio();
    let swapped = operator_schmidt(&v.compose(&swap(v.d())?)?)?.second_ratio();
    Ok((direct, swapped))
}

/// Decide primitivity of a 2-qudit gate.
///
/// Primitive exactly when one of the two reshuffle routes has rank 1 at
/// relative tolerance `tol`; the verdict then carries a factorization,
/// otherwise an entangling witness.
pub fn is_primitive(v: &Gate, tol: f64) -> Result<PrimitivityVerdict> {
    require_two_slots(v)?;
    let (r_direct, r_swapped) = schmidt_ratios(v)?;
    let residual_schmidt = r_direct.min(r_swapped);
    let coeff = coefficient_test(v)?;
    let residual_coeff = coeff.max_residual_i.min(coeff.max_residual_ii);

    let primitive = residual_schmidt <= tol;
    let mut borderline = residual_schmidt > tol / tol::BORDERLINE_BAND
        && residual_schmidt <= tol * tol::BORDERLINE_BAND;

    let (factorization, witness) = if primitive {
        (Some(factor_primitive(v)?), None)
    } else {
        let w = best_witness(v);
        if w.output_entropy <= tol::ENTROPY_FLOOR {
            borderline = true;
        }
        (None, Some(w))
    };

    Ok(PrimitivityVerdict {
        is_primitive: primitive,
        factorization,
        witness,
        residual_schmidt,
        residual_coeff,
        borderline,
    })
}

/// Report of the quadratic coefficient equations.
#[derive(Debug, Clone, Copy)]
pub struct CoefficientReport {
    pub holds_i: bool,
    pub holds_ii: bool,
    pub max_residual_i: f64,
    pub max_residual_ii: f64,
}

/// Brute-force evaluation of the coefficient equations over all d⁸ index
/// tuples. Condition (i) holds iff `V = A ⊗ B`; condition (ii) iff
/// `V·P = A ⊗ B`; the gate is primitive iff one of them holds.
pub fn coefficient_test(v: &Gate) -> Result<CoefficientReport> {
    require_two_slots(v)?;
    let d = v.d();
    let m = v.matrix();
    let at = |i: usize, j: usize, k: usize, l: usize| m[(i * d + j, k * d + l)];
    let mut max_i = 0.0f64;
    let mut max_ii = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let v0 = at(i, j, k, l);
                    for ib in 0..d {
                        for jb in 0..d {
                            for kb in 0..d {
                                for lb in 0..d {
                                    let lhs = v0 * at(ib, jb, kb, lb);
                                    let rhs_i = at(i, jb, k, lb) * at(ib, j, kb, l);
                                    let rhs_ii = at(i, jb, kb, l) * at(ib, j, k, lb);
                                    max_i = max_i.max((lhs - rhs_i).norm());
                                    max_ii = max_ii.max((lhs - rhs_ii).norm());
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(CoefficientReport {
        holds_i: max_i <= tol::COEFF,
        holds_ii: max_ii <= tol::COEFF,
        max_residual_i: max_i,
        max_residual_ii: max_ii,
    })
}

/// Primitivity criterion for diagonal gates `V|jk> = e^{i·θ_jk}|jk>`:
/// primitive iff `θ_jk + θ_pq ≡ θ_jq + θ_pk (mod 2π)` for all indices.
/// Returns the verdict and the worst circular violation.
pub fn diagonal_primitivity(thetas: &Array2<f64>) -> (bool, f64) {
    assert_eq!(thetas.nrows(), thetas.ncols(), "angle grid must be square");
    let d = thetas.nrows();
    let mut worst = 0.0f64;
    for j in 0..d {
        for k in 0..d {
            for p in 0..d {
                for q in 0..d {
                    let x = thetas[(j, k)] + thetas[(p, q)] - thetas[(j, q)] - thetas[(p, k)];
                    worst = worst.max(circular_distance(x));
                }
            }
        }
    }
    (worst <= tol::ANGLE, worst)
}

/// Distance of an angle from 0 on the circle, in `[0, π]`.
pub fn circular_distance(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = x.rem_euclid(tau);
    r.min(tau - r)
}

/// Factor a primitive gate as `e^{i·phase}(S ⊗ T)·[P]`.
///
/// Takes the rank-1 route of the reshuffle, rescales the leading Schmidt
/// pair to unitaries (polar projection), and fixes phases so that the
/// first nonzero entry of each factor's 0-th column is real positive.
pub fn factor_primitive(v: &Gate) -> Result<Factorization> {
    require_two_slots(v)?;
    let d = v.d();
    let p = swap(d)?;
    let direct = operator_schmidt(v)?;
    let swapped = operator_schmidt(&v.compose(&p)?)?;
    let (r_direct, r_swapped) = (direct.second_ratio(), swapped.second_ratio());
    if r_direct.min(r_swapped) > tol::PRIMITIVITY {
        return Err(Error::NotPrimitive(r_direct.min(r_swapped)));
    }
    let (schmidt, swap_flag) = if r_direct <= r_swapped {
        (direct, false)
    } else {
        (swapped, true)
    };

    let scale = schmidt.singular_values[0].sqrt();
    let s_raw = schmidt.left_factors[0].mapv(|z| z * scale);
    let t_raw = schmidt.right_factors[0].mapv(|z| z * scale);
    let s_unit = linalg::polar_unitary(&s_raw)?;
    let t_unit = linalg::polar_unitary(&t_raw)?;
    let s = normalize_leading_phase(&s_unit);
    let t = normalize_leading_phase(&t_unit);

    // Whatever phase the normalization stripped reappears globally.
    let st = linalg::kron(&s, &t);
    let base = if swap_flag { st.dot(p.matrix()) } else { st };
    let overlap = linalg::hs_inner(&base, v.matrix());
    let phase = overlap.arg().rem_euclid(std::f64::consts::TAU);

    Ok(Factorization {
        s: Gate::new(d, 1, s)?,
        t: Gate::new(d, 1, t)?,
        swap_flag,
        phase,
    })
}

/// Divide out the phase of the first nonzero entry in column 0.
fn normalize_leading_phase(u: &CMatrix) -> CMatrix {
    let pivot = (0..u.nrows())
        .map(|i| u[(i, 0)])
        .find(|z| z.norm() > 1e-8)
        .unwrap_or(linalg::ONE);
    let phase = pivot / pivot.norm();
    u.mapv(|z| z / phase)
}

/// Entanglement entropy (nats) of a pure 2-qudit state: the von Neumann
/// entropy of its reduced density matrix, via the SVD of the d×d
/// coefficient matrix.
pub fn entanglement_entropy(psi: &CVector, d: usize) -> Result<f64> {
    if psi.len() != d * d {
        return Err(Error::DimensionMismatch(psi.len(), d * d));
    }
    let c = Array2::from_shape_fn((d, d), |(j, k)| psi[j * d + k]);
    let sv = linalg::singular_values(&c)?;
    Ok(entropy_from_probs(sv.iter().map(|s| s * s)))
}

fn entropy_from_probs(probs: impl Iterator<Item = f64>) -> f64 {
    let mut e = 0.0;
    for p in probs {
        if p > 1e-300 {
            e -= p * p.ln();
        }
    }
    e
}

/// Find a product input that the gate entangles above the entropy floor.
///
/// Errors with `NotImprimitive` for primitive gates, and with
/// `WitnessBelowFloor` when the search cannot certify entanglement above
/// the floor (near-primitive gates).
pub fn entangling_witness(v: &Gate) -> Result<Witness> {
    require_two_slots(v)?;
    let (r1, r2) = schmidt_ratios(v)?;
    if r1.min(r2) <= tol::PRIMITIVITY {
        return Err(Error::NotImprimitive(r1.min(r2)));
    }
    let w = best_witness(v);
    if w.output_entropy <= tol::ENTROPY_FLOOR {
        return Err(Error::WitnessBelowFloor {
            best: w.output_entropy,
            floor: tol::ENTROPY_FLOOR,
        });
    }
    Ok(w)
}

/// Grid search over superposition probes followed by gradient-free
/// refinement on the product-state manifold.
fn best_witness(v: &Gate) -> Witness {
    let probes = probe_states(v.d());
    let mut best = (0.0f64, probes[0].clone(), probes[0].clone());
    for x in &probes {
        for y in &probes {
            let e = product_entropy(v, x, y);
            if e > best.0 {
                best = (e, x.clone(), y.clone());
            }
        }
    }
    let (entropy, x, y) = refine_witness(v, best.1, best.2, best.0);
    Witness {
        x,
        y,
        output_entropy: entropy,
    }
}

/// Probe set: basis states and two-level superpositions `(|j>+|p>)/√2`,
/// `(|j>+i|p>)/√2`.
fn probe_states(d: usize) -> Vec<CVector> {
    let mut out = Vec::new();
    for j in 0..d {
        let mut v = Array1::from_elem(d, linalg::ZERO);
        v[j] = linalg::ONE;
        out.push(v);
    }
    let half = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    for j in 0..d {
        for p in (j + 1)..d {
            let mut v = Array1::from_elem(d, linalg::ZERO);
            v[j] = half;
            v[p] = half;
            out.push(v.clone());
            v[p] = half * linalg::I;
            out.push(v);
        }
    }
    out
}

fn product_entropy(v: &Gate, x: &CVector, y: &CVector) -> f64 {
    let d = v.d();
    let mut input = Array1::from_elem(d * d, linalg::ZERO);
    for j in 0..d {
        for k in 0..d {
            input[j * d + k] = x[j] * y[k];
        }
    }
    let out = v.matrix().dot(&input);
    entanglement_entropy(&out, d).unwrap_or(0.0)
}

/// Compass search over the real/imaginary coordinates of (x, y), with the
/// vectors renormalized after every trial step.
fn refine_witness(v: &Gate, x0: CVector, y0: CVector, e0: f64) -> (f64, CVector, CVector) {
    let d = v.d();
    let mut x = x0;
    let mut y = y0;
    let mut best = e0;
    let mut step = 0.3f64;
    let mut evals = 0;
    while step > 1e-4 && evals < 2000 {
        let mut improved = false;
        for side in 0..2 {
            for coord in 0..d {
                for part in 0..2 {
                    for sign in [1.0f64, -1.0] {
                        let delta = Complex64::new(
                            if part == 0 { sign * step } else { 0.0 },
                            if part == 1 { sign * step } else { 0.0 },
                        );
                        let (mut cx, mut cy) = (x.clone(), y.clone());
                        let target = if side == 0 { &mut cx } else { &mut cy };
                        target[coord] += delta;
                        normalize(target);
                        let e = product_entropy(v, &cx, &cy);
                        evals += 1;
                        if e > best + 1e-14 {
                            best = e;
                            x = cx;
                            y = cy;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, x, y)
}

fn normalize(v: &mut CVector) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 1e-12 {
        v.mapv_inplace(|z| z / norm);
    }
}

fn require_two_slots(v: &Gate) -> Result<()> {
    if v.n() != 2 {
        return Err(Error::WrongSlotCount {
            expected: 2,
            got: v.n(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::dist_up_to_phase;
    use crate::gates::{cnot_general, haar_matrix, q_phi};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const LN2: f64 = std::f64::consts::LN_2;

    fn haar_pair(d: usize, seed: u64) -> (CMatrix, CMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (haar_matrix(d, &mut rng), haar_matrix(d, &mut rng))
    }

    #[test]
    fn cnot_is_imprimitive_with_bell_witness() {
        let v = cnot_general(2).unwrap();
        let verdict = is_primitive(&v, tol::PRIMITIVITY).unwrap();
        assert!(!verdict.is_primitive);
        assert!(!verdict.borderline);
        let w = verdict.witness.expect("imprimitive verdicts carry a witness");
        // The plus-state control with |0> target produces a Bell state.
        assert!((w.output_entropy - LN2).abs() < 1e-9);
        assert!(verdict.factorization.is_none());
    }

    #[test]
    fn swap_factors_as_identity_pair() {
        for d in [2usize, 3] {
            let p = swap(d).unwrap();
            let verdict = is_primitive(&p, tol::PRIMITIVITY).unwrap();
            assert!(verdict.is_primitive);
            let f = verdict.factorization.expect("primitive verdicts factor");
            assert!(f.swap_flag);
            assert!(f.phase.abs() < 1e-9 || (f.phase - std::f64::consts::TAU).abs() < 1e-9);
            let id = linalg::identity(d);
            assert!(linalg::max_abs(&(f.s.matrix() - &id)) < 1e-9);
            assert!(linalg::max_abs(&(f.t.matrix() - &id)) < 1e-9);
            assert!(dist_up_to_phase(&f.reconstruct().unwrap(), &p).unwrap() < 1e-12);
        }
    }

    #[test]
    fn haar_product_factors_match_inputs_up_to_phase() {
        for d in [2usize, 3] {
            let (s, t) = haar_pair(d, 11 + d as u64);
            let v = Gate::new(d, 2, linalg::kron(&s, &t)).unwrap();
            let f = factor_primitive(&v).unwrap();
            assert!(!f.swap_flag);
            assert!(dist_up_to_phase(&f.reconstruct().unwrap(), &v).unwrap() < 1e-10);
            // Recovered factors agree with the inputs up to phase.
            let ds = crate::gate::dist_up_to_phase_raw(f.s.matrix(), &s);
            let dt = crate::gate::dist_up_to_phase_raw(f.t.matrix(), &t);
            assert!(ds < 1e-10, "left factor distance {ds}");
            assert!(dt < 1e-10, "right factor distance {dt}");
        }
    }

    #[test]
    fn phased_product_recovers_global_phase() {
        let (s, t) = haar_pair(2, 23);
        let phase = std::f64::consts::PI / 5.0;
        let v = Gate::new(2, 2, linalg::kron(&s, &t)).unwrap().phased(phase);
        let f = factor_primitive(&v).unwrap();
        let exact = f.reconstruct().unwrap();
        // Not just phase-close: the reconstruction includes the phase.
        assert!(linalg::max_abs(&(exact.matrix() - v.matrix())) < 1e-9);
    }

    #[test]
    fn factor_rejects_imprimitive_input() {
        let v = cnot_general(2).unwrap();
        assert!(matches!(factor_primitive(&v), Err(Error::NotPrimitive(_))));
    }

    #[test]
    fn coefficient_test_on_products_and_cnot() {
        let (s, t) = haar_pair(3, 5);
        let st = Gate::new(3, 2, linalg::kron(&s, &t)).unwrap();
        let rep = coefficient_test(&st).unwrap();
        assert!(rep.holds_i);
        assert!(rep.max_residual_i <= 1e-12);

        let stp = st.compose(&swap(3).unwrap()).unwrap();
        let rep = coefficient_test(&stp).unwrap();
        assert!(rep.holds_ii);
        assert!(!rep.holds_i);

        let x = cnot_general(2).unwrap();
        let rep = coefficient_test(&x).unwrap();
        assert!(!rep.holds_i && !rep.holds_ii);
        assert!((rep.max_residual_i - 1.0).abs() < 1e-12);
        // Documented witnessing tuple: V00,00·V11,10 = 1 against V01,00·V10,10 = 0.
        let m = x.matrix();
        let lhs = m[(0, 0)] * m[(3, 2)];
        let rhs = m[(1, 0)] * m[(2, 2)];
        assert!((lhs - rhs).norm() == 1.0);
    }

    #[test]
    fn diagonal_criterion() {
        let zeros = Array2::zeros((3, 3));
        let (prim, worst) = diagonal_primitivity(&zeros);
        assert!(prim && worst == 0.0);

        let mut grid = Array2::zeros((2, 2));
        grid[(1, 1)] = std::f64::consts::FRAC_PI_2;
        let (prim, worst) = diagonal_primitivity(&grid);
        assert!(!prim);
        assert!((worst - std::f64::consts::FRAC_PI_2).abs() < 1e-12);

        // Separable phases cancel.
        let alpha = [0.3, 1.9, 4.4];
        let beta = [2.2, 0.1, 5.0];
        let sep = Array2::from_shape_fn((3, 3), |(j, k)| alpha[j] + beta[k]);
        let (prim, worst) = diagonal_primitivity(&sep);
        assert!(prim, "worst violation {worst}");
    }

    #[test]
    fn diagonal_criterion_wraps_mod_2pi() {
        // Violations of exactly 2π collapse to zero.
        let mut grid = Array2::zeros((2, 2));
        grid[(1, 1)] = std::f64::consts::TAU;
        let (prim, worst) = diagonal_primitivity(&grid);
        assert!(prim, "worst violation {worst}");
    }

    #[test]
    fn q_pi_witness_is_maximally_entangling() {
        let v = q_phi(std::f64::consts::PI);
        let w = entangling_witness(&v).unwrap();
        assert!((w.output_entropy - LN2).abs() < 1e-9);
    }

    #[test]
    fn witness_rejects_primitive_gates() {
        let p = swap(2).unwrap();
        assert!(matches!(
            entangling_witness(&p),
            Err(Error::NotImprimitive(_))
        ));
    }

    #[test]
    fn near_primitive_gate_is_flagged_borderline() {
        // Q_phi with a tiny phase: imprimitive by the ratio test but the
        // best witness entropy sits below the floor.
        let v = q_phi(1e-4);
        let verdict = is_primitive(&v, tol::PRIMITIVITY).unwrap();
        assert!(!verdict.is_primitive);
        assert!(verdict.borderline);
        let w = verdict.witness.unwrap();
        assert!(w.output_entropy <= tol::ENTROPY_FLOOR);
        assert!(matches!(
            entangling_witness(&v),
            Err(Error::WitnessBelowFloor { .. })
        ));
    }

    #[test]
    fn entropy_matches_reduced_density_route() {
        // Independent oracle: eigenvalues of the 2x2 reduced density
        // matrix in closed form from trace and determinant.
        let v = cnot_general(2).unwrap();
        let w = entangling_witness(&v).unwrap();
        let d = 2;
        let mut input = Array1::from_elem(4, linalg::ZERO);
        for j in 0..d {
            for k in 0..d {
                input[j * d + k] = w.x[j] * w.y[k];
            }
        }
        let psi = v.apply(&input).unwrap();
        let c = Array2::from_shape_fn((2, 2), |(j, k)| psi[j * 2 + k]);
        let rho = c.dot(&linalg::adjoint(&c));
        let tr = (rho[(0, 0)] + rho[(1, 1)]).re;
        let det = (rho[(0, 0)] * rho[(1, 1)] - rho[(0, 1)] * rho[(1, 0)]).re;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        let probs = [tr / 2.0 + disc, tr / 2.0 - disc];
        let oracle = entropy_from_probs(probs.into_iter());
        assert!((oracle - w.output_entropy).abs() < 1e-8);
    }

    #[test]
    fn verdict_json_shape() {
        let v = cnot_general(2).unwrap();
        let j = is_primitive(&v, tol::PRIMITIVITY).unwrap().to_json();
        assert_eq!(j["primitive"], serde_json::json!(false));
        assert!(j["swap"].is_null());
        assert!(j["witness"]["entropy"].as_f64().unwrap() > 0.5);
    }
}
