//! Constructive synthesis: compile a target 2-qudit gate into a circuit
//! of parameterized local layers interleaved with placements of a fixed
//! imprimitive entangler.
//!
//! Local layers use full u(d) exponential coordinates (d² parameters per
//! slot), so the parameterization is dimension-uniform and chart-free.
//! The cost is the phase-invariant infidelity `1 − |tr(target† U)|/d²`;
//! its gradient is exact, via the Daleckii-Krein form of the derivative
//! of the matrix exponential, and is minimized by L-BFGS with seeded
//! random restarts over ansatz structures `L·(E·L)^k`.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::Gate;
use crate::gates::swap;
use crate::linalg::{self, CMatrix};
use crate::primitivity;
use crate::tol;

/// One circuit element: a parameterized local gate on a slot, or a fixed
/// entangler placement.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    Local { slot: usize, params: Vec<f64> },
    Entangler { orientation: (usize, usize) },
}

/// Ordered gate sequence on two qudits; `layers[0]` acts first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Circuit {
    pub d: usize,
    pub layers: Vec<Layer>,
}

impl Circuit {
    /// Structure `L·(E·L)^k` with alternating entangler orientations
    /// starting from `first`; all local parameters zero.
    pub fn ansatz(d: usize, entanglers: usize, first: (usize, usize)) -> Circuit {
        let mut layers = vec![
            Layer::Local {
                slot: 1,
                params: vec![0.0; d * d],
            },
            Layer::Local {
                slot: 2,
                params: vec![0.0; d * d],
            },
        ];
        let mut orientation = first;
        for _ in 0..entanglers {
            layers.push(Layer::Entangler { orientation });
            layers.push(Layer::Local {
                slot: 1,
                params: vec![0.0; d * d],
            });
            layers.push(Layer::Local {
                slot: 2,
                params: vec![0.0; d * d],
            });
            orientation = (orientation.1, orientation.0);
        }
        Circuit { d, layers }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Local { params, .. } => params.len(),
                Layer::Entangler { .. } => 0,
            })
            .sum()
    }

    /// Flattened parameter vector, layer by layer.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            if let Layer::Local { params, .. } = l {
                out.extend_from_slice(params);
            }
        }
        out
    }

    /// Copy of the circuit with parameters replaced from a flat vector.
    pub fn with_params(&self, flat: &[f64]) -> Result<Circuit> {
        if flat.len() != self.parameter_count() {
            return Err(Error::MalformedCircuit(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                flat.len()
            )));
        }
        let mut out = self.clone();
        let mut cursor = 0;
        for l in &mut out.layers {
            if let Layer::Local { params, .. } = l {
                let len = params.len();
                params.copy_from_slice(&flat[cursor..cursor + len]);
                cursor += len;
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Circuit> {
        Ok(serde_json::from_str(text)?)
    }

    fn validate(&self, entangler: &Gate) -> Result<()> {
        if entangler.n() != 2 || entangler.d() != self.d {
            return Err(Error::DimensionMismatch(entangler.dim(), self.d * self.d));
        }
        for l in &self.layers {
            match l {
                Layer::Local { slot, params } => {
                    if *slot != 1 && *slot != 2 {
                        return Err(Error::MalformedCircuit(format!(
                            "local layer slot must be 1 or 2, got {slot}"
                        )));
                    }
                    if params.len() != self.d * self.d {
                        return Err(Error::MalformedCircuit(format!(
                            "local layer needs {} parameters, got {}",
                            self.d * self.d,
                            params.len()
                        )));
                    }
                    if params.iter().any(|p| !p.is_finite()) {
                        return Err(Error::MalformedCircuit(
                            "local parameters must be finite".into(),
                        ));
                    }
                }
                Layer::Entangler { orientation } => {
                    if *orientation != (1, 2) && *orientation != (2, 1) {
                        return Err(Error::MalformedCircuit(format!(
                            "entangler orientation must be (1,2) or (2,1), got {orientation:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Product unitary of a circuit for a concrete entangler gate.
pub fn circuit_unitary(c: &Circuit, entangler: &Gate) -> Result<Gate> {
    c.validate(entangler)?;
    let eval = Evaluator::new(c, entangler, None)?;
    let u = eval.forward(&c.params())?.unitary;
    Ok(Gate::new_unchecked(c.d, 2, u))
}

/// Phase-invariant cost of a circuit against a target.
pub fn circuit_cost(c: &Circuit, entangler: &Gate, target: &Gate) -> Result<f64> {
    let u = circuit_unitary(c, entangler)?;
    crate::gate::dist_up_to_phase(&u, target)
}

/// Cost and its exact gradient with respect to the flat parameter vector.
pub fn cost_gradient(c: &Circuit, entangler: &Gate, target: &Gate) -> Result<(f64, Vec<f64>)> {
    c.validate(entangler)?;
    if target.d() != c.d || target.n() != 2 {
        return Err(Error::DimensionMismatch(target.dim(), c.d * c.d));
    }
    let eval = Evaluator::new(c, entangler, Some(target))?;
    eval.cost_and_gradient(&c.params())
}

/// Compare the analytic gradient against central finite differences with
/// step `h`; returns the max discrepancy relative to `max(1, ‖g_fd‖_∞)`.
pub fn gradient_check_at(
    c: &Circuit,
    entangler: &Gate,
    target: &Gate,
    h: f64,
) -> Result<f64> {
    c.validate(entangler)?;
    let eval = Evaluator::new(c, entangler, Some(target))?;
    let params = c.params();
    let (_, grad) = eval.cost_and_gradient(&params)?;
    let mut fd = vec![0.0; params.len()];
    let mut probe = params.clone();
    for k in 0..params.len() {
        probe[k] = params[k] + h;
        let fp = eval.cost(&probe)?;
        probe[k] = params[k] - h;
        let fm = eval.cost(&probe)?;
        probe[k] = params[k];
        fd[k] = (fp - fm) / (2.0 * h);
    }
    let scale = fd.iter().fold(1.0f64, |m, g| m.max(g.abs()));
    let worst = grad
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    Ok(worst / scale)
}

/// Gradient check at the standard step 1e-5.
pub fn gradient_check(c: &Circuit, entangler: &Gate, target: &Gate) -> Result<f64> {
    gradient_check_at(c, entangler, target, 1e-5)
}

/// Synthesis search controls.
#[derive(Debug, Clone, Serialize)]
pub struct SynthesisOptions {
    /// Largest entangler count k in the structure search L·(E·L)^k.
    pub max_entanglers: usize,
    /// Optimizer restarts per structure (restart 0 starts from zero).
    pub restarts: usize,
    /// Convergence target on the phase-invariant cost.
    pub tol: f64,
    pub seed: u64,
    /// Iteration cap per restart.
    pub max_iters: usize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            max_entanglers: 3,
            restarts: 20,
            tol: 1e-9,
            seed: 0,
            max_iters: 5000,
        }
    }
}

/// Outcome of a synthesis run.
#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub circuit: Circuit,
    /// Final phase-invariant infidelity against the target.
    pub cost: f64,
    /// Optimizer iterations spent by the winning restart.
    pub iterations: usize,
    /// Total restarts launched across all structures.
    pub restarts_used: usize,
    pub converged: bool,
}

impl SynthesisResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "circuit": serde_json::to_value(&self.circuit).expect("circuit serializes"),
            "cost": self.cost,
            "iterations": self.iterations,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
        })
    }
}

/// Compile `target` from local layers and placements of the imprimitive
/// entangler `v`.
///
/// Tries structures with k = 0..=max_entanglers entanglers and both
/// alternating orientation schedules, L-BFGS from seeded restarts, and
/// returns the first circuit reaching `tol` (the best-cost circuit is
/// reported through `NoConvergence` when none does). A primitive `v` is
/// rejected: it cannot reach generic targets.
pub fn synthesize(
    target: &Gate,
    v: &Gate,
    opts: &SynthesisOptions,
) -> Result<SynthesisResult> {
    if target.n() != 2 || v.n() != 2 || target.d() != v.d() {
        return Err(Error::DimensionMismatch(target.dim(), v.dim()));
    }
    let verdict = primitivity::is_primitive(v, tol::PRIMITIVITY)?;
    if verdict.is_primitive {
        return Err(Error::PrimitiveEntangler);
    }
    let d = target.d();
    let mut best: Option<(f64, Circuit, usize)> = None;
    let mut restarts_used = 0;

    'structures: for k in 0..=opts.max_entanglers {
        let orientations: &[(usize, usize)] = if k == 0 {
            &[(1, 2)]
        } else {
            &[(1, 2), (2, 1)]
        };
        for (o_idx, &first) in orientations.iter().enumerate() {
            let template = Circuit::ansatz(d, k, first);
            let eval = Evaluator::new(&template, v, Some(target))?;
            let nparams = template.parameter_count();
            for r in 0..opts.restarts.max(1) {
                let x0 = if r == 0 {
                    vec![0.0; nparams]
                } else {
                    let stream = ((k as u64) << 32) | ((o_idx as u64) << 24) | r as u64;
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                    rng.set_stream(stream);
                    (0..nparams)
                        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                        .collect()
                };
                let run = lbfgs(
                    |x| eval.cost_and_gradient(x),
                    x0,
                    opts.max_iters,
                    1e-9,
                    opts.tol,
                )?;
                restarts_used += 1;
                let better = match &best {
                    None => true,
                    Some((c, _, _)) => run.cost < *c,
                };
                if better {
                    best = Some((run.cost, template.with_params(&run.x)?, run.iterations));
                }
                if run.cost <= opts.tol {
                    break 'structures;
                }
            }
        }
    }

    let (cost, circuit, iterations) = best.expect("at least one restart ran");
    if cost <= opts.tol {
        Ok(SynthesisResult {
            circuit,
            cost,
            iterations,
            restarts_used,
            converged: true,
        })
    } else {
        Err(Error::NoConvergence { best_cost: cost })
    }
}

// ── Cost evaluator ──────────────────────────────────────────────────

/// Precomputed structure data for repeated cost/gradient evaluations of
/// one circuit template.
struct Evaluator {
    d: usize,
    dim: usize,
    layers: Vec<LayerKind>,
    basis: Vec<CMatrix>,
    target_dag: Option<CMatrix>,
}

enum LayerKind {
    Local { slot: usize },
    Fixed { matrix: CMatrix },
}

struct Forward {
    unitary: CMatrix,
    /// Per-layer realized matrices, aligned with `layers`.
    matrices: Vec<CMatrix>,
    /// Per-local-layer eigendecomposition of the hermitian generator.
    eigs: Vec<Option<(Vec<f64>, CMatrix)>>,
}

impl Evaluator {
    fn new(c: &Circuit, entangler: &Gate, target: Option<&Gate>) -> Result<Evaluator> {
        let d = c.d;
        let dim = d * d;
        let p = swap(d)?;
        let ent_12 = entangler.matrix().clone();
        let ent_21 = p.matrix().dot(entangler.matrix()).dot(p.matrix());
        let layers = c
            .layers
            .iter()
            .map(|l| match l {
                Layer::Local { slot, .. } => LayerKind::Local { slot: *slot },
                Layer::Entangler { orientation } => LayerKind::Fixed {
                    matrix: if *orientation == (1, 2) {
                        ent_12.clone()
                    } else {
                        ent_21.clone()
                    },
                },
            })
            .collect();
        Ok(Evaluator {
            d,
            dim,
            layers,
            basis: linalg::u_basis(d),
            target_dag: target.map(|t| linalg::adjoint(t.matrix())),
        })
    }

    fn forward(&self, params: &[f64]) -> Result<Forward> {
        let mut matrices = Vec::with_capacity(self.layers.len());
        let mut eigs = Vec::with_capacity(self.layers.len());
        let mut unitary = linalg::identity(self.dim);
        let mut cursor = 0;
        for layer in &self.layers {
            let m = match layer {
                LayerKind::Fixed { matrix } => {
                    eigs.push(None);
                    matrix.clone()
                }
                LayerKind::Local { slot } => {
                    let theta = &params[cursor..cursor + self.d * self.d];
                    cursor += self.d * self.d;
                    // Hermitian generator h with local gate exp(i·h).
                    let mut h = Array2::from_elem((self.d, self.d), linalg::ZERO);
                    for (t, b) in theta.iter().zip(&self.basis) {
                        if *t != 0.0 {
                            h.zip_mut_with(b, |hi, bi| {
                                *hi += bi * Complex64::new(0.0, -*t)
                            });
                        }
                    }
                    let (w, u) = linalg::eigh_hermitian(&h)?;
                    let local = phase_apply(&w, &u);
                    eigs.push(Some((w, u)));
                    self.embed(&local, *slot)
                }
            };
            unitary = m.dot(&unitary);
            matrices.push(m);
        }
        Ok(Forward {
            unitary,
            matrices,
            eigs,
        })
    }

    fn embed(&self, local: &CMatrix, slot: usize) -> CMatrix {
        if slot == 1 {
            linalg::kron(local, &linalg::identity(self.d))
        } else {
            linalg::kron(&linalg::identity(self.d), local)
        }
    }

    fn cost(&self, params: &[f64]) -> Result<f64> {
        let fwd = self.forward(params)?;
        let tdag = self.target_dag.as_ref().expect("cost needs a target");
        let overlap = trace_of_product(tdag, &fwd.unitary);
        Ok((1.0 - overlap.norm() / self.dim as f64).max(0.0))
    }

    fn cost_and_gradient(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let fwd = self.forward(params)?;
        let tdag = self.target_dag.as_ref().expect("cost needs a target");
        let overlap = trace_of_product(tdag, &fwd.unitary);
        let cost = (1.0 - overlap.norm() / self.dim as f64).max(0.0);

        let mut grad = vec![0.0; params.len()];
        if overlap.norm() < 1e-300 {
            // |overlap| is not differentiable at 0; report a subgradient.
            return Ok((cost, grad));
        }
        let weight = overlap.conj() / (overlap.norm() * self.dim as f64);

        // Prefix products: pre[j] applies layers [0, j); suffix products:
        // post[j] applies layers (j, end].
        let count = self.layers.len();
        let mut pre = Vec::with_capacity(count);
        let mut acc = linalg::identity(self.dim);
        for m in &fwd.matrices {
            pre.push(acc.clone());
            acc = m.dot(&acc);
        }
        let mut post = vec![linalg::identity(self.dim); count];
        for j in (0..count.saturating_sub(1)).rev() {
            post[j] = post[j + 1].dot(&fwd.matrices[j + 1]);
        }

        let mut cursor = 0;
        for (j, layer) in self.layers.iter().enumerate() {
            let LayerKind::Local { slot } = layer else {
                continue;
            };
            let (w, u) = fwd.eigs[j].as_ref().expect("local layer eigendata");
            // K = pre[j] · target† · post[j]; derivative of the overlap in
            // direction X on this slot is the contraction of K with X.
            let k_mat = pre[j].dot(tdag).dot(&post[j]);
            let a = self.slot_contract(&k_mat, *slot);
            // Push the contraction into the eigenbasis and fold in the
            // divided-difference phases.
            let at = u.t().mapv(|z| z); // plain transpose of U
            let a_tilde = linalg::adjoint(u).dot(&a.t().to_owned()).dot(u);
            let phi = divided_phase_table(w);
            let c_mat = Array2::from_shape_fn((self.d, self.d), |(p, q)| {
                a_tilde[(q, p)] * phi[(p, q)]
            });
            drop(at);
            for (kk, b) in self.basis.iter().enumerate() {
                let b_tilde = linalg::adjoint(u).dot(b).dot(u);
                let ds: Complex64 = c_mat
                    .iter()
                    .zip(b_tilde.iter())
                    .map(|(ci, bi)| ci * bi)
                    .sum();
                grad[cursor + kk] = -(weight * ds).re;
            }
            cursor += self.d * self.d;
        }
        Ok((cost, grad))
    }

    /// Contraction reducing `tr(K · embed(X, slot))` to `Σ A ∘ X`.
    fn slot_contract(&self, k_mat: &CMatrix, slot: usize) -> CMatrix {
        let d = self.d;
        let mut a = Array2::from_elem((d, d), linalg::ZERO);
        if slot == 1 {
            // tr(K·(X⊗I)) = Σ_{c,a,b} K[(a,b),(c,b)] · X[c,a]
            for c in 0..d {
                for r in 0..d {
                    let mut s = linalg::ZERO;
                    for b in 0..d {
                        s += k_mat[(r * d + b, c * d + b)];
                    }
                    a[(c, r)] = s;
                }
            }
        } else {
            // tr(K·(I⊗Y)) = Σ_{c,b,a} K[(a,b),(a,c)] · Y[c,b]
            for c in 0..d {
                for b in 0..d {
                    let mut s = linalg::ZERO;
                    for r in 0..d {
                        s += k_mat[(r * d + b, r * d + c)];
                    }
                    a[(c, b)] = s;
                }
            }
        }
        a
    }
}

/// `u · diag(e^{i·w}) · u†`.
fn phase_apply(w: &[f64], u: &CMatrix) -> CMatrix {
    let mut scaled = u.clone();
    for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let ph = Complex64::from_polar(1.0, w[j]);
        col.mapv_inplace(|z| z * ph);
    }
    scaled.dot(&linalg::adjoint(u))
}

/// Divided differences of `e^{i·w}`:
/// `Φ[p,q] = e^{i(w_p+w_q)/2} · sinc((w_p−w_q)/2) · i`-free form; the
/// diagonal limit is `e^{i·w_p}`.
fn divided_phase_table(w: &[f64]) -> CMatrix {
    let n = w.len();
    Array2::from_shape_fn((n, n), |(p, q)| {
        let mid = Complex64::from_polar(1.0, (w[p] + w[q]) / 2.0);
        let x = (w[p] - w[q]) / 2.0;
        let sinc = if x.abs() < 1e-8 {
            1.0 - x * x / 6.0
        } else {
            x.sin() / x
        };
        mid * sinc
    })
}

fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    // tr(a·b) without forming the product.
    let n = a.nrows();
    let mut s = linalg::ZERO;
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

// ── L-BFGS ──────────────────────────────────────────────────────────

struct RunOutcome {
    x: Vec<f64>,
    cost: f64,
    iterations: usize,
}

/// Limited-memory BFGS with Armijo backtracking; converges on gradient
/// infinity-norm ≤ `gtol` or cost ≤ `ftarget`.
fn lbfgs(
    mut f: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    x0: Vec<f64>,
    max_iters: usize,
    gtol: f64,
    ftarget: f64,
) -> Result<RunOutcome> {
    const MEMORY: usize = 8;
    let mut x = x0;
    let (mut fx, mut gx) = f(&x)?;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iters {
        if fx <= ftarget || inf_norm(&gx) <= gtol {
            break;
        }
        iterations += 1;

        // Two-loop recursion for the search direction.
        let mut q = gx.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for i in (0..s_hist.len()).rev() {
            let alpha = rho_hist[i] * dot(&s_hist[i], &q);
            axpy(&mut q, -alpha, &y_hist[i]);
            alphas.push(alpha);
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y).max(1e-300);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for i in 0..s_hist.len() {
            let beta = rho_hist[i] * dot(&y_hist[i], &q);
            let alpha = alphas[s_hist.len() - 1 - i];
            axpy(&mut q, alpha - beta, &s_hist[i]);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&gx, &dir);
        if slope >= 0.0 {
            // Not a descent direction; fall back to steepest descent.
            dir = gx.iter().map(|v| -v).collect();
            slope = -dot(&gx, &gx);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        // Armijo backtracking.
        let mut step = 1.0f64;
        let mut accepted = false;
        for _ in 0..40 {
            let xt: Vec<f64> = x
                .iter()
                .zip(&dir)
                .map(|(xi, di)| xi + step * di)
                .collect();
            let (ft, gt) = f(&xt)?;
            if ft <= fx + 1e-4 * step * slope {
                let s_vec: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y_vec: Vec<f64> = gt.iter().zip(&gx).map(|(a, b)| a - b).collect();
                let sy = dot(&s_vec, &y_vec);
                if sy > 1e-10 * norm(&s_vec) * norm(&y_vec) {
                    s_hist.push(s_vec);
                    y_hist.push(y_vec);
                    rho_hist.push(1.0 / sy);
                    if s_hist.len() > MEMORY {
                        s_hist.remove(0);
                        y_hist.remove(0);
                        rho_hist.remove(0);
                    }
                }
                x = xt;
                fx = ft;
                gx = gt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(RunOutcome {
        x,
        cost: fx,
        iterations,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
