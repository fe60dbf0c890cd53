//! Universality when the 1-qudit gates are restricted to determinant 1.
//!
//! With only special local gates available, every circuit determinant is a
//! power of `det V`, so universality additionally requires that `det V`
//! is not a root of unity. Floating point cannot certify irrationality;
//! the scan is bounded and verdicts that rest on the bound say so.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gate::Gate;
use crate::lie::{basis_h_su, conjugate_basis, lie_closure};
use crate::linalg;
use crate::primitivity::{self, circular_distance};
use crate::tol;

/// Determinant-contract tolerance for gate families.
const DET_CONTRACT_TOL: f64 = 1e-8;

/// Determinant phase analysis of a gate.
#[derive(Debug, Clone, Serialize)]
pub struct DetAnalysis {
    /// `det V = e^{i·phase}`, with phase in `[0, 2π)`.
    pub phase: f64,
    /// Smallest `n ≤ nmax_searched` with `n·phase ≡ 0 (mod 2π)`, if any.
    pub root_order: Option<usize>,
    pub nmax_searched: usize,
    pub tol: f64,
}

/// `arg(det V)` normalized to `[0, 2π)`.
pub fn det_phase(v: &Gate) -> Result<f64> {
    let det = linalg::det(v.matrix())?;
    Ok(det.arg().rem_euclid(std::f64::consts::TAU))
}

/// Smallest `n ≤ nmax` with `n·phi` within `tol` of a multiple of 2π.
///
/// `None` means only "no root of order ≤ nmax": numerical irrationality
/// is not decidable.
pub fn root_of_unity_order(phi: f64, nmax: usize, tol: f64) -> Option<usize> {
    (1..=nmax).find(|&n| circular_distance(n as f64 * phi) <= tol)
}

/// Run the determinant analysis with the default scan tolerance.
pub fn analyze_determinant(v: &Gate, nmax: usize) -> Result<DetAnalysis> {
    let phase = det_phase(v)?;
    Ok(DetAnalysis {
        phase,
        root_order: root_of_unity_order(phase, nmax, tol::ANGLE),
        nmax_searched: nmax,
        tol: tol::ANGLE,
    })
}

/// Verdict for {all special 1-qudit gates} ∪ {v}.
#[derive(Debug, Clone, Serialize)]
pub struct SpecialVerdict {
    pub imprimitive: bool,
    pub det_analysis: DetAnalysis,
    /// Universal iff imprimitive and no root of unity of order ≤ nmax.
    pub special_universal: bool,
    /// Dimension of the closure of the special local algebra with its
    /// conjugate; lands on 2(d²−1) or d⁴−1.
    pub su_closure_dim: usize,
    pub expected_su_dims: [usize; 2],
    /// Present whenever the verdict rests on the bounded root scan.
    pub caveat: Option<String>,
}

/// Decide universality in the determinant-1 setting.
pub fn special_universality_verdict(v: &Gate, nmax: usize) -> Result<SpecialVerdict> {
    if v.n() != 2 {
        return Err(Error::WrongSlotCount {
            expected: 2,
            got: v.n(),
        });
    }
    let d = v.d();
    let verdict = primitivity::is_primitive(v, tol::PRIMITIVITY)?;
    let imprimitive = !verdict.is_primitive;
    let det_analysis = analyze_determinant(v, nmax)?;

    let hb = basis_h_su(d);
    let hc = conjugate_basis(v, &hb)?;
    let mut generators = hb.elements().to_vec();
    generators.extend_from_slice(hc.elements());
    let su_closure_dim = lie_closure(&generators, tol::CLOSURE_ADMIT)?.dim();

    let special_universal = imprimitive && det_analysis.root_order.is_none();
    let caveat = special_universal.then(|| {
        format!(
            "verdict rests on the bounded scan: no root of unity of order <= {} found \
             at tolerance {:.1e}; irrationality of the determinant phase cannot be \
             certified in floating point",
            nmax,
            tol::ANGLE
        )
    });
    Ok(SpecialVerdict {
        imprimitive,
        det_analysis,
        special_universal,
        su_closure_dim,
        expected_su_dims: [2 * (d * d - 1), d.pow(4) - 1],
        caveat,
    })
}

/// Verdict for a determinant-indexed gate family.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyVerdict {
    /// Exactly universal iff at least one sampled member is imprimitive.
    pub universal: bool,
    /// First sampled angle whose gate witnessed imprimitivity.
    pub witness_phi: Option<f64>,
    pub samples_checked: usize,
}

/// Test a family `phi -> Q_phi` with `det Q_phi = e^{i·phi}` (checked per
/// sample) against the sampled angles.
pub fn family_universality(
    sampler: impl Fn(f64) -> Result<Gate>,
    samples: &[f64],
) -> Result<FamilyVerdict> {
    let mut witness_phi = None;
    for &phi in samples {
        let gate = sampler(phi)?;
        let det = linalg::det(gate.matrix())?;
        let residual = (det - num_complex::Complex64::from_polar(1.0, phi)).norm();
        if residual > DET_CONTRACT_TOL {
            return Err(Error::DeterminantContract { phi, residual });
        }
        if witness_phi.is_none() {
            let verdict = primitivity::is_primitive(&gate, tol::PRIMITIVITY)?;
            if !verdict.is_primitive {
                witness_phi = Some(phi);
            }
        }
    }
    Ok(FamilyVerdict {
        universal: witness_phi.is_some(),
        witness_phi,
        samples_checked: samples.len(),
    })
}

/// Default angle sample set: `count` equispaced angles in `(0, 2π)`.
pub fn default_family_samples(count: usize) -> Vec<f64> {
    (1..=count)
        .map(|k| k as f64 * std::f64::consts::TAU / (count + 1) as f64)
        .collect()
}
