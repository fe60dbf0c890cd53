//! Constructors for the named gates, Haar-random sampling, and the
//! standard test corpus.

use ndarray::Array2;
use ndarray_linalg::QRSquare;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::Gate;
use crate::linalg::{self, CMatrix, ONE, ZERO};

/// Swap gate `P|xy> = |yx>`.
pub fn swap(d: usize) -> Result<Gate> {
    let dim = d * d;
    let mut m = Array2::from_elem((dim, dim), ZERO);
    for k in 0..d {
        for l in 0..d {
            m[(l * d + k, k * d + l)] = ONE;
        }
    }
    Gate::new(d, 2, m)
}

/// Generalized CNOT: `X|ij> = |i, i+j mod d>`.
pub fn cnot_general(d: usize) -> Result<Gate> {
    let dim = d * d;
    let mut m = Array2::from_elem((dim, dim), ZERO);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + (i + j) % d, i * d + j)] = ONE;
        }
    }
    Gate::new(d, 2, m)
}

/// Controlled gate `X_U`: applies `U` on the target when the control is
/// `|0>`, identity otherwise.
pub fn controlled_u(u: &Gate) -> Result<Gate> {
    if u.n() != 1 {
        return Err(Error::WrongSlotCount {
            expected: 1,
            got: u.n(),
        });
    }
    let d = u.d();
    let dim = d * d;
    let mut m = linalg::identity(dim);
    for k in 0..d {
        for l in 0..d {
            m[(k, l)] = u.matrix()[(k, l)];
        }
    }
    Gate::new(d, 2, m)
}

/// Diagonal 2-qudit gate `V|jk> = e^{i·theta_jk}|jk>`; `thetas` is the d×d
/// angle grid, row-major.
pub fn diagonal_gate(d: usize, thetas: &[f64]) -> Result<Gate> {
    if thetas.len() != d * d {
        return Err(Error::BadSpec(format!(
            "diagonal gate needs {} angles, got {}",
            d * d,
            thetas.len()
        )));
    }
    let dim = d * d;
    let mut m = Array2::from_elem((dim, dim), ZERO);
    for (idx, &th) in thetas.iter().enumerate() {
        m[(idx, idx)] = Complex64::from_polar(1.0, th);
    }
    Gate::new(d, 2, m)
}

/// The one-parameter family `Q_phi = diag(1, 1, 1, e^{i·phi})` on two qubits.
pub fn q_phi(phi: f64) -> Gate {
    diagonal_gate(2, &[0.0, 0.0, 0.0, phi]).expect("diagonal unitary")
}

/// The single-qubit rotation with rows
/// `(cos θ, −i e^{iφ} sin θ)` and `(−i e^{−iφ} sin θ, cos θ)`; determinant 1.
pub fn u_theta_phi(theta: f64, phi: f64) -> Gate {
    let c = Complex64::new(theta.cos(), 0.0);
    let s = theta.sin();
    let m = ndarray::array![
        [c, Complex64::new(0.0, -s) * Complex64::from_polar(1.0, phi)],
        [Complex64::new(0.0, -s) * Complex64::from_polar(1.0, -phi), c]
    ];
    Gate::new(2, 1, m).expect("unitary by construction")
}

/// Haar-distributed unitary matrix of size `m`, from the QR factorization
/// of a complex Gaussian matrix with the R-diagonal phases folded into Q.
pub fn haar_matrix(m: usize, rng: &mut impl Rng) -> CMatrix {
    let g = Array2::from_shape_fn((m, m), |_| {
        Complex64::new(standard_normal(rng), standard_normal(rng)) / 2f64.sqrt()
    });
    let (q, r) = g.qr_square().expect("QR of a Gaussian matrix");
    let mut out = q;
    for j in 0..m {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        for i in 0..m {
            out[(i, j)] *= phase;
        }
    }
    out
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller on (0,1] uniforms.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Haar-random gate on `n` qudits of dimension `d`, deterministic per seed.
///
/// The stream is a counter-based ChaCha generator, so equal seeds give
/// bit-identical gates across runs and platforms.
pub fn haar_random(d: usize, n: usize, seed: u64) -> Result<Gate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = d.pow(n as u32);
    Gate::new(d, n, haar_matrix(dim, &mut rng))
}

/// Best scalar fit of a matrix: the phase `theta = arg(tr u)` and the
/// largest deviation `max_jk |u_jk − e^{iθ} δ_jk|`.
pub fn scalar_fit(u: &CMatrix) -> (f64, f64) {
    let tr: Complex64 = (0..u.nrows()).map(|i| u[(i, i)]).sum();
    let theta = tr.arg();
    let scalar = Complex64::from_polar(1.0, theta);
    let mut dev = 0.0f64;
    for i in 0..u.nrows() {
        for j in 0..u.ncols() {
            let want = if i == j { scalar } else { ZERO };
            dev = dev.max((u[(i, j)] - want).norm());
        }
    }
    (theta, dev)
}

// ── Gate specs ──────────────────────────────────────────────────────

/// Named gate kinds accepted by the spec mini-language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Cnot,
    ControlledU,
    Diagonal,
    QPhi,
    UThetaPhi,
    Swap,
    Haar,
    Identity,
}

/// Declarative gate description, e.g. `{"kind":"q_phi","params":[1.5707963]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: GateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    /// Matrix payload for `controlled_u`, row-major `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl GateSpec {
    pub fn build(&self) -> Result<Gate> {
        let d = self.d.unwrap_or(2);
        match self.kind {
            GateKind::Cnot => cnot_general(d),
            GateKind::Swap => swap(d),
            GateKind::Identity => Gate::identity(d, self.slots.unwrap_or(2)),
            GateKind::QPhi => {
                let phi = self.one_param("q_phi")?;
                if d != 2 {
                    return Err(Error::BadSpec("q_phi is a two-qubit family (d=2)".into()));
                }
                Ok(q_phi(phi))
            }
            GateKind::UThetaPhi => {
                if self.params.len() != 2 {
                    return Err(Error::BadSpec(format!(
                        "u_theta_phi needs params [theta, phi], got {} value(s)",
                        self.params.len()
                    )));
                }
                Ok(u_theta_phi(self.params[0], self.params[1]))
            }
            GateKind::Diagonal => diagonal_gate(d, &self.params),
            GateKind::Haar => haar_random(d, self.slots.unwrap_or(2), self.seed.unwrap_or(0)),
            GateKind::ControlledU => {
                let rows = self
                    .unitary
                    .as_ref()
                    .ok_or_else(|| Error::BadSpec("controlled_u needs a unitary payload".into()))?;
                let du = rows.len();
                if rows.iter().any(|r| r.len() != du) {
                    return Err(Error::BadSpec("controlled_u payload must be square".into()));
                }
                let m = Array2::from_shape_fn((du, du), |(i, j)| {
                    Complex64::new(rows[i][j][0], rows[i][j][1])
                });
                controlled_u(&Gate::new(du, 1, m)?)
            }
        }
    }

    fn one_param(&self, kind: &str) -> Result<f64> {
        match self.params.as_slice() {
            [x] => Ok(*x),
            other => Err(Error::BadSpec(format!(
                "{kind} needs exactly one parameter, got {}",
                other.len()
            ))),
        }
    }
}

// ── Standard corpus ─────────────────────────────────────────────────

/// A named corpus member. Haar-backed members record their seed.
#[derive(Debug, Clone)]
pub struct CorpusGate {
    pub name: String,
    pub gate: Gate,
    pub seed: Option<u64>,
}

/// The standard 2-qudit test corpus: per local dimension, Haar samples,
/// local products, swapped products, diagonals (generic and separable),
/// CNOT dressed with random locals, and controlled gates (generic and
/// scalar). 100 gates per dimension.
pub fn standard_corpus(dims: &[usize], seed: u64) -> Result<Vec<CorpusGate>> {
    let mut out = Vec::new();
    for &d in dims {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (d as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let dim = d * d;
        let mut push = |name: String, gate: Gate, seed: Option<u64>| {
            out.push(CorpusGate { name, gate, seed });
        };

        for k in 0..30 {
            let s = seed.wrapping_add(1000 * d as u64 + k);
            push(format!("d{d}/haar/{k:02}"), haar_random(d, 2, s)?, Some(s));
        }
        for k in 0..15 {
            let s = haar_matrix(d, &mut rng);
            let t = haar_matrix(d, &mut rng);
            let g = Gate::new(d, 2, linalg::kron(&s, &t))?;
            push(format!("d{d}/product/{k:02}"), g, None);
        }
        for k in 0..15 {
            let s = haar_matrix(d, &mut rng);
            let t = haar_matrix(d, &mut rng);
            let g = Gate::new(d, 2, linalg::kron(&s, &t))?.compose(&swap(d)?)?;
            push(format!("d{d}/product_swap/{k:02}"), g, None);
        }
        for k in 0..10 {
            let thetas: Vec<f64> = (0..dim)
                .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                .collect();
            push(
                format!("d{d}/diag_generic/{k:02}"),
                diagonal_gate(d, &thetas)?,
                None,
            );
        }
        for k in 0..10 {
            let alpha: Vec<f64> = (0..d)
                .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                .collect();
            let beta: Vec<f64> = (0..d)
                .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                .collect();
            let thetas: Vec<f64> = (0..dim).map(|idx| alpha[idx / d] + beta[idx % d]).collect();
            push(
                format!("d{d}/diag_separable/{k:02}"),
                diagonal_gate(d, &thetas)?,
                None,
            );
        }
        push(format!("d{d}/cnot"), cnot_general(d)?, None);
        for k in 0..9 {
            let g = local_dress(&cnot_general(d)?, &mut rng)?;
            push(format!("d{d}/cnot_dressed/{k:02}"), g, None);
        }
        for k in 0..6 {
            let u = Gate::new(d, 1, haar_matrix(d, &mut rng))?;
            push(format!("d{d}/controlled_haar/{k:02}"), controlled_u(&u)?, None);
        }
        for k in 0..4 {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let u = Gate::identity(d, 1)?.phased(theta);
            push(format!("d{d}/controlled_scalar/{k:02}"), controlled_u(&u)?, None);
        }
    }
    Ok(out)
}

/// `(A ⊗ B) · V · (C ⊗ D)` with Haar locals; preserves (im)primitivity.
pub fn local_dress(v: &Gate, rng: &mut impl Rng) -> Result<Gate> {
    let d = v.d();
    let left = Gate::new(d, 2, linalg::kron(&haar_matrix(d, rng), &haar_matrix(d, rng)))?;
    let right = Gate::new(d, 2, linalg::kron(&haar_matrix(d, rng), &haar_matrix(d, rng)))?;
    left.compose(v)?.compose(&right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::dist_up_to_phase;
    use crate::linalg::max_abs;

    #[test]
    fn cnot_d2_is_standard() {
        let x = cnot_general(2).unwrap();
        let mut want = Array2::from_elem((4, 4), ZERO);
        want[(0, 0)] = ONE;
        want[(1, 1)] = ONE;
        want[(2, 3)] = ONE;
        want[(3, 2)] = ONE;
        assert!(max_abs(&(x.matrix() - &want)) < 1e-15);
    }

    #[test]
    fn cnot_d3_maps_12_to_10() {
        let x = cnot_general(3).unwrap();
        // |12> is column 1*3+2 = 5; 1 + 2 = 0 mod 3 so output is |10> = row 3.
        assert_eq!(x.matrix()[(3, 5)], ONE);
    }

    #[test]
    fn cnot_power_d_is_identity() {
        for d in 2..=5 {
            let x = cnot_general(d).unwrap();
            let mut acc = Gate::identity(d, 2).unwrap();
            for _ in 0..d {
                acc = acc.compose(&x).unwrap();
            }
            assert!(dist_up_to_phase(&acc, &Gate::identity(d, 2).unwrap()).unwrap() < 1e-12);
        }
    }

    #[test]
    fn controlled_identity_is_identity() {
        let u = Gate::identity(2, 1).unwrap();
        let g = controlled_u(&u).unwrap();
        assert!(max_abs(&(g.matrix() - &linalg::identity(4))) < 1e-15);
    }

    #[test]
    fn controlled_u_acts_on_control_zero_block() {
        let mut sx = Array2::from_elem((2, 2), ZERO);
        sx[(0, 1)] = ONE;
        sx[(1, 0)] = ONE;
        let g = controlled_u(&Gate::new(2, 1, sx).unwrap()).unwrap();
        // |00> -> |01>, |10> -> |10>.
        assert_eq!(g.matrix()[(1, 0)], ONE);
        assert_eq!(g.matrix()[(2, 2)], ONE);
    }

    #[test]
    fn q_phi_zero_is_identity() {
        assert!(max_abs(&(q_phi(0.0).matrix() - &linalg::identity(4))) < 1e-15);
    }

    #[test]
    fn q_phi_determinant_phase() {
        let phi = 1.0;
        let det = linalg::det(q_phi(phi).matrix()).unwrap();
        assert!((det - Complex64::from_polar(1.0, phi)).norm() < 1e-12);
    }

    #[test]
    fn u_theta_phi_special_values() {
        let id = u_theta_phi(0.0, 2.0);
        assert!(max_abs(&(id.matrix() - &linalg::identity(2))) < 1e-15);
        // theta = pi/2, phi = 0 gives -i·sigma_x.
        let g = u_theta_phi(std::f64::consts::FRAC_PI_2, 0.0);
        assert!((g.matrix()[(0, 1)] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(g.matrix()[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn u_theta_phi_has_unit_determinant() {
        for i in 0..8 {
            for j in 0..8 {
                let theta = i as f64 * 0.7;
                let phi = j as f64 * 0.9;
                let det = linalg::det(u_theta_phi(theta, phi).matrix()).unwrap();
                assert!((det - ONE).norm() < 1e-12, "theta={theta} phi={phi}");
            }
        }
    }

    #[test]
    fn haar_is_unitary_and_deterministic() {
        let a = haar_random(2, 2, 42).unwrap();
        let b = haar_random(2, 2, 42).unwrap();
        let c = haar_random(2, 2, 43).unwrap();
        assert!(linalg::unitarity_residual(a.matrix()) < 1e-12);
        assert!(max_abs(&(a.matrix() - b.matrix())) == 0.0);
        assert!(max_abs(&(a.matrix() - c.matrix())) > 1e-3);
    }

    #[test]
    fn scalar_fit_detects_scalars() {
        let g = Gate::identity(3, 1).unwrap().phased(0.8);
        let (theta, dev) = scalar_fit(g.matrix());
        assert!((theta - 0.8).abs() < 1e-12);
        assert!(dev < 1e-12);
        let (_, dev_x) = scalar_fit(cnot_general(2).unwrap().matrix());
        assert!(dev_x > 0.5);
    }

    #[test]
    fn spec_mini_language_builds() {
        let spec: GateSpec =
            serde_json::from_str(r#"{"kind":"q_phi","params":[1.5707963]}"#).unwrap();
        let g = spec.build().unwrap();
        assert_eq!(g.d(), 2);
        assert!((g.matrix()[(3, 3)] - Complex64::from_polar(1.0, 1.5707963)).norm() < 1e-12);

        let bad: GateSpec = serde_json::from_str(r#"{"kind":"q_phi"}"#).unwrap();
        assert!(matches!(bad.build(), Err(Error::BadSpec(_))));
    }

    #[test]
    fn corpus_has_expected_size_and_names() {
        let corpus = standard_corpus(&[2], 7).unwrap();
        assert_eq!(corpus.len(), 100);
        assert!(corpus.iter().any(|c| c.name == "d2/cnot"));
        for c in &corpus {
            assert_eq!(c.gate.n(), 2);
        }
    }
}
