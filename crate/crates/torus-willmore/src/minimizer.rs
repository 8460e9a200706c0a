//! Constrained minimization of the penalized Willmore energy over truncated
//! normal-mode perturbations of a homogeneous torus.
//!
//! The search space is the coefficient vector of exp_{f^b}(Φ n̂) with Φ a
//! mode sum over k, l ≤ K, the invariance modes (1,1), (1,0), (0,1) frozen
//! to zero. Equality constraints on the conformal class are handled by an
//! augmented Lagrangian whose multiplier estimates are exactly the α̂, β̂ of
//! the constrained Euler–Lagrange equation δW = α δΠ¹ + β δΠ²; the inner
//! problems run L-BFGS with Richardson-refined central-difference gradients
//! over cached basis jets.
//!
//! Tabulating the pinned minima over an a-grid yields the desk-scale
//! minimal-energy map ω(a, b), whose slopes reproduce the multipliers and
//! whose second differences certify concavity.

use crate::error::{Error, Result};
use crate::geometry::{analytic_jet, jet_to_plane, mode_sum_jet, ProductChart, ScalarJet};
use crate::immersion::{
    exp_normal_with_grid, homogeneous_torus, mode_sum_normal_field, NormalField, TorusImmersion,
};
use crate::modes::FourierMode;
use crate::projection::{MetricGrid, Projector};
use crate::spectral::{
    fit_multipliers, scan_modes, second_variation_triple, subsample_metric, MultiplierFit,
    PenalizedForm, SecondVariationOptions,
};
use rayon::prelude::*;
use std::sync::Arc;

// ---------------------------------------------------------------------------
// Problem statement
// ---------------------------------------------------------------------------

/// Constraint regime of a minimization run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintSpec {
    /// Minimize W − α·Π¹ subject to Π² = b.
    Penalized { alpha: f64 },
    /// Minimize W subject to Π¹ = a_target and Π² = b.
    Pinned { a_target: f64 },
}

/// Optimizer knobs; defaults are the desk-scale tolerances of the tables.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerSettings {
    pub max_iters: usize,
    /// Absolute ∞-norm tolerance on the augmented-Lagrangian gradient.
    pub grad_tol: f64,
    /// Absolute tolerance on each constraint residual.
    pub constraint_tol: f64,
    /// Central-difference step over mode coefficients.
    pub fd_step: f64,
    /// Quadrature grid and projection grid (n_proj divides n_geom).
    pub n_geom: usize,
    pub n_proj: usize,
    /// Initial augmented-Lagrangian penalty and its growth factor.
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub lbfgs_memory: usize,
    /// Seed amplitude along the kernel mode (None = automatic from the
    /// quadratic Π¹ response).
    pub seed_amplitude: Option<f64>,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-5,
            constraint_tol: 1e-6,
            fd_step: 1e-3,
            n_geom: 64,
            n_proj: 32,
            penalty_init: 1e2,
            penalty_growth: 10.0,
            lbfgs_memory: 8,
            seed_amplitude: None,
        }
    }
}

/// A full minimization problem.
#[derive(Debug, Clone)]
pub struct MinimizationProblem {
    pub b: f64,
    pub k_max: u32,
    pub constraint: ConstraintSpec,
    pub settings: OptimizerSettings,
}

impl MinimizationProblem {
    pub fn validate(&self) -> Result<()> {
        if !(0.8..=1.25).contains(&self.b) {
            return Err(Error::Domain(format!(
                "minimization is calibrated for b ∈ [0.8, 1.25], got {}",
                self.b
            )));
        }
        if self.k_max < 2 || self.k_max > 8 {
            return Err(Error::Domain(format!(
                "mode cutoff must lie in [2, 8] at desk scale, got {}",
                self.k_max
            )));
        }
        if let ConstraintSpec::Pinned { a_target } = self.constraint {
            if !(0.0..=0.05).contains(&a_target) {
                return Err(Error::Domain(format!(
                    "pinned conformal coordinate must lie in [0, 0.05], got {a_target}"
                )));
            }
        }
        if self.settings.n_geom % self.settings.n_proj != 0 {
            return Err(Error::GridMismatch {
                expected: self.settings.n_proj,
                got: self.settings.n_geom,
            });
        }
        Ok(())
    }
}

/// Convergence bookkeeping of a run.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub constraint_violation: f64,
    /// Relative residual of δW = α̂δΠ¹ + β̂δΠ² over the probe basis
    /// (NaN when not computed).
    pub kkt_residual: f64,
}

/// Outcome of a minimization.
#[derive(Debug, Clone)]
pub struct MinimizerResult {
    pub b: f64,
    pub k_max: u32,
    pub constraint: ConstraintSpec,
    /// Mode-sum coefficients of the minimizing perturbation.
    pub modes: Vec<FourierMode>,
    /// Willmore energy and the penalized objective at the minimizer.
    pub energy_w: f64,
    pub objective: f64,
    /// Achieved class, orientation convention a ≥ 0.
    pub achieved_a: f64,
    pub achieved_b: f64,
    /// α̂ from the augmented Lagrangian (pinned runs with a > 0) or the
    /// prescribed α (penalized runs); β̂ always estimated.
    pub alpha_hat: Option<f64>,
    pub beta_hat: f64,
    pub converged: bool,
    pub report: ConvergenceReport,
}

impl MinimizerResult {
    /// Euclidean norm of the coefficient vector.
    pub fn coefficient_norm(&self) -> f64 {
        self.modes
            .iter()
            .flat_map(|m| m.coeffs())
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// Rebuild the minimizing surface.
    pub fn surface(&self) -> Result<TorusImmersion> {
        let f = homogeneous_torus(self.b)?;
        let v = mode_sum_normal_field(&self.modes, &f)?;
        crate::immersion::exp_normal(&f, &v, 1.0)
    }
}

// ---------------------------------------------------------------------------
// Coefficient-space evaluator with cached basis jets
// ---------------------------------------------------------------------------

/// One degree of freedom: a coefficient slot of a mode.
#[derive(Debug, Clone, Copy)]
struct Dof {
    k: u32,
    l: u32,
    slot: usize,
}

/// Diagonal curvature scale per dof: the Clifford Willmore eigenvalue
/// factor times the basis-function norm, floored away from zero. Used as a
/// fixed diagonal preconditioner of the inner L-BFGS.
fn dof_curvature_scales(dofs: &[Dof], b: f64) -> Vec<f64> {
    dofs.iter()
        .map(|dof| {
            let mut coeffs = [0.0; 4];
            coeffs[dof.slot] = 1.0;
            let mode = FourierMode::new(dof.k, dof.l, coeffs).expect("dof mode");
            let factor = crate::spectral::willmore_eigenvalue_factor(dof.k, dof.l).max(4.0);
            factor * mode.l2_norm_sq(b)
        })
        .collect()
}

fn enumerate_dofs(k_max: u32) -> Vec<Dof> {
    let mut out = Vec::new();
    for (k, l) in scan_modes(k_max) {
        let slots: &[usize] = if k >= 1 && l >= 1 {
            &[0, 1, 2, 3]
        } else if k == 0 {
            &[1, 2]
        } else {
            &[0, 2]
        };
        for &slot in slots {
            out.push(Dof { k, l, slot });
        }
    }
    out
}

fn modes_from_coeffs(dofs: &[Dof], c: &[f64]) -> Vec<FourierMode> {
    let mut by_kl: Vec<((u32, u32), [f64; 4])> = Vec::new();
    for (dof, &value) in dofs.iter().zip(c.iter()) {
        match by_kl.iter_mut().find(|(kl, _)| *kl == (dof.k, dof.l)) {
            Some((_, coeffs)) => coeffs[dof.slot] += value,
            None => {
                let mut coeffs = [0.0; 4];
                coeffs[dof.slot] = value;
                by_kl.push(((dof.k, dof.l), coeffs));
            }
        }
    }
    by_kl
        .into_iter()
        .filter(|(_, coeffs)| coeffs.iter().any(|c| *c != 0.0))
        .map(|((k, l), coeffs)| FourierMode::new(k, l, coeffs).expect("dof mode"))
        .collect()
}

/// (W, a_signed, b) of the perturbed surface described by a coefficient
/// vector.
#[derive(Debug, Clone, Copy)]
struct Measurement {
    w: f64,
    a: f64,
    b: f64,
}

/// Shared immutable evaluation data.
struct EvalShared {
    chart: ProductChart,
    n_geom: usize,
    n_proj: usize,
    /// Basis jets per dof (unit coefficient).
    basis: Vec<ScalarJet>,
}

impl EvalShared {
    fn new(b: f64, k_max: u32, n_geom: usize, n_proj: usize) -> Result<(Self, Vec<Dof>)> {
        let chart = ProductChart::homogeneous(b)?;
        let dofs = enumerate_dofs(k_max);
        let basis = dofs
            .iter()
            .map(|dof| {
                let mut coeffs = [0.0; 4];
                coeffs[dof.slot] = 1.0;
                let mode = FourierMode::new(dof.k, dof.l, coeffs).expect("basis mode");
                mode_sum_jet(&[mode], n_geom)
            })
            .collect();
        Ok((Self { chart, n_geom, n_proj, basis }, dofs))
    }

    fn jet_for(&self, c: &[f64]) -> ScalarJet {
        let mut jet = ScalarJet::zeros(self.n_geom);
        for (b, &value) in self.basis.iter().zip(c.iter()) {
            if value != 0.0 {
                jet.add_scaled(b, value);
            }
        }
        jet
    }

    fn measure_jet(&self, jet: &ScalarJet, projector: &mut Projector) -> Result<Measurement> {
        let grid = analytic_jet(&self.chart, Some(jet), self.n_geom);
        let plane = jet_to_plane(&grid, &self.chart.lattice);
        let geo = crate::immersion::assemble_plane_geometry(&plane, self.chart.lattice)?;
        let w = geo.willmore_energy();
        let metric = subsample_metric(&MetricGrid::from_geometry(&geo), self.n_proj)?;
        let (a, b) = projector.project_signed(&metric)?;
        Ok(Measurement { w, a, b })
    }
}

/// Per-run evaluator: shared basis plus a warm-startable projector.
struct Evaluator {
    shared: Arc<EvalShared>,
    dofs: Vec<Dof>,
    projector: Projector,
    /// Harmonic potential at the current base point; every nearby stencil
    /// solve warms from it, independent of evaluation order.
    base_potential: Option<Vec<f64>>,
}

impl Evaluator {
    fn new(b: f64, k_max: u32, settings: &OptimizerSettings) -> Result<Self> {
        let (shared, dofs) = EvalShared::new(b, k_max, settings.n_geom, settings.n_proj)?;
        Ok(Self {
            shared: Arc::new(shared),
            dofs,
            projector: Projector::new(settings.n_proj),
            base_potential: None,
        })
    }

    fn measure(&mut self, c: &[f64]) -> Result<Measurement> {
        let jet = self.shared.jet_for(c);
        self.projector.set_warm_start(self.base_potential.clone());
        self.shared.measure_jet(&jet, &mut self.projector)
    }

    fn remember_base(&mut self) {
        self.base_potential = self.projector.last_potential().cloned();
    }

    /// Richardson central-difference gradients of (W, a, b) at `c`,
    /// parallel over coefficients with deterministic per-task state.
    fn gradients(&self, c: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let shared = Arc::clone(&self.shared);
        let base_potential = self.base_potential.clone();
        let projector_proto = Projector::new(self.shared.n_proj);
        let n_dof = self.dofs.len();
        let base_jet = Arc::new(self.shared.jet_for(c));

        let per_dof: Vec<Result<(f64, f64, f64)>> = (0..n_dof)
            .into_par_iter()
            .map_init(
                || (projector_proto.clone(), (*base_jet).clone()),
                |(projector, jet), j| {
                    let mut stencil = |delta: f64| -> Result<Measurement> {
                        jet.add_scaled(&shared.basis[j], delta);
                        projector.set_warm_start(base_potential.clone());
                        let m = shared.measure_jet(jet, projector);
                        jet.add_scaled(&shared.basis[j], -delta);
                        m
                    };
                    let ph = stencil(h)?;
                    let mh = stencil(-h)?;
                    let ph2 = stencil(h / 2.0)?;
                    let mh2 = stencil(-h / 2.0)?;
                    let d = |p: f64, m: f64, p2: f64, m2: f64| {
                        let coarse = (p - m) / (2.0 * h);
                        let fine = (p2 - m2) / h;
                        (4.0 * fine - coarse) / 3.0
                    };
                    Ok((
                        d(ph.w, mh.w, ph2.w, mh2.w),
                        d(ph.a, mh.a, ph2.a, mh2.a),
                        d(ph.b, mh.b, ph2.b, mh2.b),
                    ))
                },
            )
            .collect();

        let mut gw = vec![0.0; n_dof];
        let mut ga = vec![0.0; n_dof];
        let mut gb = vec![0.0; n_dof];
        for (j, item) in per_dof.into_iter().enumerate() {
            let (w, a, b) = item?;
            gw[j] = w;
            ga[j] = a;
            gb[j] = b;
        }
        Ok((gw, ga, gb))
    }
}

// ---------------------------------------------------------------------------
// Augmented Lagrangian with L-BFGS inner loops
// ---------------------------------------------------------------------------

struct AugLag {
    /// Objective weight on Π¹ (penalized runs); zero for pinned runs.
    alpha_weight: f64,
    /// Some(a) pins Π¹; Π² = b is always pinned.
    a_target: Option<f64>,
    b_target: f64,
    lambda_a: f64,
    lambda_b: f64,
    mu: f64,
}

impl AugLag {
    fn constraints(&self, m: &Measurement) -> (f64, f64) {
        (self.a_target.map_or(0.0, |a| m.a - a), m.b - self.b_target)
    }

    fn value(&self, m: &Measurement) -> f64 {
        let (ha, hb) = self.constraints(m);
        let mut val = m.w - self.alpha_weight * m.a;
        if self.a_target.is_some() {
            val += -self.lambda_a * ha + 0.5 * self.mu * ha * ha;
        }
        val + (-self.lambda_b * hb + 0.5 * self.mu * hb * hb)
    }

    fn gradient(&self, m: &Measurement, gw: &[f64], ga: &[f64], gb: &[f64]) -> Vec<f64> {
        let (ha, hb) = self.constraints(m);
        let wa = if self.a_target.is_some() {
            -(self.lambda_a - self.mu * ha)
        } else {
            -self.alpha_weight
        };
        let wb = -(self.lambda_b - self.mu * hb);
        gw.iter()
            .zip(ga.iter())
            .zip(gb.iter())
            .map(|((w, a), b)| w + wa * a + wb * b)
            .collect()
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Two-loop L-BFGS direction with a fixed diagonal H₀ = diag(1/scales),
/// γ-corrected from the latest curvature pair.
fn lbfgs_direction(
    grad: &[f64],
    history: &[(Vec<f64>, Vec<f64>)],
    scales: &[f64],
) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y) in history.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y.iter()) {
            *qi -= alpha * yi;
        }
        alphas.push((alpha, rho));
    }
    let gamma = match history.last() {
        Some((s, y)) => {
            let ydy: f64 = y.iter().zip(scales.iter()).map(|(yi, d)| yi * yi / d).sum();
            (dot(s, y) / ydy).max(1e-8)
        }
        None => 1.0,
    };
    for (qi, d) in q.iter_mut().zip(scales.iter()) {
        *qi *= gamma / d;
    }
    for ((s, y), (alpha, rho)) in history.iter().zip(alphas.into_iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s.iter()) {
            *qi += (alpha - beta) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

/// Warm-start data carried along an a-grid sweep.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub coefficients: Vec<f64>,
    pub lambda_a: f64,
    pub lambda_b: f64,
}

/// Kernel seed mode for the aspect ratio: (1,2)-type for b ≥ 1, mirrored
/// (2,1)-type below.
pub fn kernel_seed_mode(b: f64) -> FourierMode {
    let (k, l) = if b >= 1.0 { (1, 2) } else { (2, 1) };
    FourierMode::new(k, l, [1.0, 1.0, 0.0, 0.0]).expect("kernel mode")
}

/// Quadratic response of the signed class coordinate along the kernel mode
/// at f^b: a(t) ≈ ½ q t².
fn kernel_pi1_response(b: f64, settings: &OptimizerSettings) -> Result<f64> {
    let f = homogeneous_torus(b)?;
    let seed = kernel_seed_mode(b);
    let v = crate::immersion::mode_normal_field(&seed, &f)?;
    let opts = SecondVariationOptions {
        n_geom: settings.n_geom,
        n_proj: settings.n_proj,
        ..Default::default()
    };
    let (_, qa, _) = second_variation_triple(&f, &v, &opts)?;
    Ok(qa)
}

/// Minimize the problem from the standard seed.
pub fn minimize(problem: &MinimizationProblem) -> Result<MinimizerResult> {
    minimize_warm(problem, None)
}

/// Minimize with optional warm-start coefficients and multipliers.
pub fn minimize_warm(
    problem: &MinimizationProblem,
    warm: Option<&WarmStart>,
) -> Result<MinimizerResult> {
    problem.validate()?;
    let settings = &problem.settings;
    let mut evaluator = Evaluator::new(problem.b, problem.k_max, settings)?;
    let n_dof = evaluator.dofs.len();
    let curvature = dof_curvature_scales(&evaluator.dofs, problem.b);

    // Seed: warm coefficients when provided, otherwise the kernel mode at
    // the amplitude matching the quadratic Π¹ response √(2a/q).
    let mut c = vec![0.0; n_dof];
    // The Π² multiplier of the homogeneous family, ∂_b W(f^b) = π²(1 − b⁻²),
    // is the natural warm start for λ_b; the outer updates own it from here.
    let beta_seed = std::f64::consts::PI.powi(2) * (1.0 - 1.0 / (problem.b * problem.b));
    let mut lam = (0.0, beta_seed);
    match warm {
        Some(w) if w.coefficients.len() == n_dof => {
            c.copy_from_slice(&w.coefficients);
            lam = (w.lambda_a, w.lambda_b);
        }
        _ => {
            let seed = kernel_seed_mode(problem.b);
            let amplitude = match (settings.seed_amplitude, problem.constraint) {
                (Some(t0), _) => t0,
                (None, ConstraintSpec::Pinned { a_target }) if a_target > 0.0 => {
                    let q = kernel_pi1_response(problem.b, settings)?;
                    if q <= 0.0 {
                        return Err(Error::Infeasible(format!(
                            "kernel-mode Π¹ response is non-positive ({q:.3e}); cannot reach a > 0"
                        )));
                    }
                    (2.0 * a_target / q).sqrt()
                }
                (None, ConstraintSpec::Pinned { .. }) => 0.0,
                (None, ConstraintSpec::Penalized { .. }) => 0.05,
            };
            if amplitude != 0.0 {
                for (j, dof) in evaluator.dofs.iter().enumerate() {
                    if (dof.k, dof.l) == (seed.k, seed.l) {
                        c[j] = amplitude * seed.coeffs()[dof.slot];
                    }
                }
            }
        }
    }

    let mut auglag = match problem.constraint {
        ConstraintSpec::Penalized { alpha } => AugLag {
            alpha_weight: alpha,
            a_target: None,
            b_target: problem.b,
            lambda_a: 0.0,
            lambda_b: lam.1,
            mu: settings.penalty_init,
        },
        ConstraintSpec::Pinned { a_target } => AugLag {
            alpha_weight: 0.0,
            a_target: Some(a_target),
            b_target: problem.b,
            lambda_a: lam.0,
            lambda_b: lam.1,
            mu: settings.penalty_init,
        },
    };

    let mut iterations = 0usize;
    let mut measurement = evaluator.measure(&c)?;
    evaluator.remember_base();
    let mut converged = false;
    let mut last_grad_norm = f64::INFINITY;
    let mut prev_violation = f64::INFINITY;

    'outer: for _outer in 0..12 {
        let mut history: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        let mut grad = {
            let (gw, ga, gb) = evaluator.gradients(&c, settings.fd_step)?;
            auglag.gradient(&measurement, &gw, &ga, &gb)
        };
        let mut value = auglag.value(&measurement);

        loop {
            if iterations >= settings.max_iters {
                break 'outer;
            }
            last_grad_norm = inf_norm(&grad);
            let (ha, hb) = auglag.constraints(&measurement);
            if last_grad_norm <= settings.grad_tol {
                if ha.abs() <= settings.constraint_tol && hb.abs() <= settings.constraint_tol {
                    converged = true;
                    break 'outer;
                }
                break; // inner solved, constraints need a multiplier update
            }

            let mut direction = lbfgs_direction(&grad, &history, &curvature);
            if dot(&direction, &grad) >= 0.0 {
                history.clear();
                direction = grad
                    .iter()
                    .zip(curvature.iter())
                    .map(|(g, d)| -g / d)
                    .collect();
            }

            // Backtracking Armijo line search; degenerate geometry along the
            // ray counts as +∞.
            let slope = dot(&direction, &grad);
            let mut step = 1.0;
            let mut accepted = None;
            for _bt in 0..30 {
                let trial: Vec<f64> = c
                    .iter()
                    .zip(direction.iter())
                    .map(|(ci, di)| ci + step * di)
                    .collect();
                if inf_norm(&trial) <= 0.8 {
                    match evaluator.measure(&trial) {
                        Ok(m) => {
                            let v = auglag.value(&m);
                            if v <= value + 1e-4 * step * slope {
                                accepted = Some((trial, m, v));
                                break;
                            }
                        }
                        // Off the sane amplitude range the geometry collapses
                        // or the projection stalls; both reject the step.
                        Err(Error::DegenerateImmersion { .. }) => {}
                        Err(Error::SolverDiverged { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
                step *= 0.5;
            }
            let Some((new_c, new_m, new_v)) = accepted else {
                break; // line search hit the gradient noise floor
            };

            iterations += 1;
            let s: Vec<f64> = new_c.iter().zip(c.iter()).map(|(a, b)| a - b).collect();
            c = new_c;
            measurement = new_m;
            evaluator.remember_base();
            value = new_v;

            let (gw, ga, gb) = evaluator.gradients(&c, settings.fd_step)?;
            let new_grad = auglag.gradient(&measurement, &gw, &ga, &gb);
            let y: Vec<f64> = new_grad
                .iter()
                .zip(grad.iter())
                .map(|(a, b)| a - b)
                .collect();
            if dot(&y, &s) > 1e-14 {
                history.push((s, y));
                if history.len() > settings.lbfgs_memory {
                    history.remove(0);
                }
            }
            grad = new_grad;
        }

        // Outer update: first-order multiplier step; grow the penalty when
        // the violation is not contracting.
        let (ha, hb) = auglag.constraints(&measurement);
        let violation = ha.abs().max(hb.abs());
        if violation <= settings.constraint_tol && last_grad_norm <= settings.grad_tol {
            converged = true;
            break;
        }
        if auglag.a_target.is_some() {
            auglag.lambda_a -= auglag.mu * ha;
        }
        auglag.lambda_b -= auglag.mu * hb;
        if violation > 0.25 * prev_violation {
            auglag.mu = (auglag.mu * settings.penalty_growth).min(1e8);
        }
        prev_violation = violation;
    }

    let (ha, hb) = auglag.constraints(&measurement);
    let modes = modes_from_coeffs(&evaluator.dofs, &c);
    let alpha_hat = match problem.constraint {
        ConstraintSpec::Penalized { alpha } => Some(alpha),
        ConstraintSpec::Pinned { a_target } => {
            if a_target > 0.0 {
                Some(auglag.lambda_a - auglag.mu * ha)
            } else {
                None // isothermic point: δΠ¹ = 0, multiplier undetermined
            }
        }
    };
    let beta_hat = auglag.lambda_b - auglag.mu * hb;

    // Cross-check the multipliers against the Euler–Lagrange fit on the
    // converged surface.
    let kkt_residual = if converged && !modes.is_empty() {
        let f = homogeneous_torus(problem.b)?;
        let v = mode_sum_normal_field(&modes, &f)?;
        let surface = crate::immersion::exp_normal(&f, &v, 1.0)?;
        fit_on(&surface, settings)
            .map(|fit| fit.residual_rel)
            .unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };

    Ok(MinimizerResult {
        b: problem.b,
        k_max: problem.k_max,
        constraint: problem.constraint,
        modes,
        energy_w: measurement.w,
        objective: match problem.constraint {
            ConstraintSpec::Penalized { alpha } => measurement.w - alpha * measurement.a,
            ConstraintSpec::Pinned { .. } => measurement.w,
        },
        achieved_a: measurement.a.abs(),
        achieved_b: measurement.b,
        alpha_hat,
        beta_hat,
        converged,
        report: ConvergenceReport {
            iterations,
            gradient_norm: last_grad_norm,
            constraint_violation: ha.abs().max(hb.abs()),
            kkt_residual,
        },
    })
}

fn fit_on(surface: &TorusImmersion, settings: &OptimizerSettings) -> Result<MultiplierFit> {
    let opts = SecondVariationOptions {
        n_geom: settings.n_geom,
        n_proj: settings.n_proj,
        ..Default::default()
    };
    fit_multipliers(surface, &opts)
}

/// Least-squares multiplier estimate on the converged surface of a result.
pub fn multiplier_estimate(result: &MinimizerResult) -> Result<MultiplierFit> {
    if !result.converged {
        return Err(Error::Infeasible(
            "multiplier estimate requires a converged result".into(),
        ));
    }
    fit_on(&result.surface()?, &OptimizerSettings::default())
}

// ---------------------------------------------------------------------------
// The energy table ω(a, b) and its diagnostics
// ---------------------------------------------------------------------------

/// One row of the minimal-energy table.
#[derive(Debug, Clone)]
pub struct EnergyRow {
    pub a: f64,
    pub omega: f64,
    pub alpha_hat: Option<f64>,
    pub beta_hat: f64,
    pub converged: bool,
}

/// Minimal Willmore energy over an a-grid at fixed b, with multipliers.
#[derive(Debug, Clone)]
pub struct EnergyTable {
    pub b: f64,
    pub k_max: u32,
    pub rows: Vec<EnergyRow>,
}

/// One pinned minimization per grid point, warm-starting coefficients (with
/// the √a amplitude law of the kernel branch) and multipliers along the
/// sweep. Non-converged rows are retained and flagged.
pub fn omega_table(
    b: f64,
    a_grid: &[f64],
    k_max: u32,
    settings: &OptimizerSettings,
) -> Result<EnergyTable> {
    if a_grid.is_empty() {
        return Err(Error::TooFewRows { need: 1, got: 0 });
    }
    for pair in a_grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Domain("a-grid must be strictly increasing".into()));
        }
    }
    let mut rows = Vec::with_capacity(a_grid.len());
    let mut warm: Option<(WarmStart, f64)> = None;
    for &a in a_grid {
        let problem = MinimizationProblem {
            b,
            k_max,
            constraint: ConstraintSpec::Pinned { a_target: a },
            settings: *settings,
        };
        let warm_for_row = match &warm {
            Some((w, prev_a)) if *prev_a > 0.0 && a > 0.0 => {
                let scale = (a / prev_a).sqrt();
                Some(WarmStart {
                    coefficients: w.coefficients.iter().map(|c| c * scale).collect(),
                    lambda_a: w.lambda_a,
                    lambda_b: w.lambda_b,
                })
            }
            _ => None,
        };
        let result = minimize_warm(&problem, warm_for_row.as_ref())?;
        if result.converged && a > 0.0 {
            let dofs = enumerate_dofs(k_max);
            let mut coefficients = vec![0.0; dofs.len()];
            for (j, dof) in dofs.iter().enumerate() {
                if let Some(m) = result.modes.iter().find(|m| (m.k, m.l) == (dof.k, dof.l)) {
                    coefficients[j] = m.coeffs()[dof.slot];
                }
            }
            warm = Some((
                WarmStart {
                    coefficients,
                    lambda_a: result.alpha_hat.unwrap_or(0.0),
                    lambda_b: result.beta_hat,
                },
                a,
            ));
        }
        rows.push(EnergyRow {
            a,
            omega: result.energy_w,
            alpha_hat: result.alpha_hat,
            beta_hat: result.beta_hat,
            converged: result.converged,
        });
    }
    Ok(EnergyTable { b, k_max, rows })
}

/// Sample t ↦ W_{α,β}(exp_normal(f^b, v, t)) over a t-grid (signed Π¹).
pub fn directional_profile(
    b: f64,
    form: &PenalizedForm,
    v: &NormalField,
    t_grid: &[f64],
    opts: &SecondVariationOptions,
) -> Result<Vec<(f64, f64)>> {
    let mut projector = Projector::new(opts.n_proj);
    let f = homogeneous_torus(b)?;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let moved = exp_normal_with_grid(&f, v, t, opts.n_geom)?;
        let geo = moved.geometry(opts.n_geom)?;
        let w = geo.willmore_energy();
        let metric = subsample_metric(&MetricGrid::from_geometry(&geo), opts.n_proj)?;
        let (a, bb) = projector.project_signed(&metric)?;
        out.push((t, w - form.alpha * a - form.beta * bb));
    }
    Ok(out)
}

/// Concavity diagnostics of an energy table.
#[derive(Debug, Clone)]
pub struct ConcavityReport {
    /// Largest second divided difference (×2, a d²ω/da² estimate) over
    /// consecutive converged triples.
    pub max_second_difference: f64,
    pub budget: f64,
    pub pass: bool,
    /// (a₀, a₁, a₂, dd) per triple.
    pub triples: Vec<(f64, f64, f64, f64)>,
}

/// Second divided differences of ω over the converged rows; passes when
/// none exceeds the budget (concavity up to solver noise).
pub fn concavity_check(table: &EnergyTable, budget: f64) -> Result<ConcavityReport> {
    let rows: Vec<&EnergyRow> = table.rows.iter().filter(|r| r.converged).collect();
    if rows.len() < 3 {
        return Err(Error::TooFewRows { need: 3, got: rows.len() });
    }
    let mut max_dd = f64::NEG_INFINITY;
    let mut triples = Vec::new();
    for w in rows.windows(3) {
        let (a0, a1, a2) = (w[0].a, w[1].a, w[2].a);
        let (f0, f1, f2) = (w[0].omega, w[1].omega, w[2].omega);
        let dd = 2.0 * ((f2 - f1) / (a2 - a1) - (f1 - f0) / (a1 - a0)) / (a2 - a0);
        max_dd = max_dd.max(dd);
        triples.push((a0, a1, a2, dd));
    }
    Ok(ConcavityReport {
        max_second_difference: max_dd,
        budget,
        pass: max_dd <= budget,
        triples,
    })
}

/// Hand-built energy table (tests and calibration).
pub fn synthetic_table(b: f64, samples: &[(f64, f64)]) -> EnergyTable {
    EnergyTable {
        b,
        k_max: 0,
        rows: samples
            .iter()
            .map(|&(a, omega)| EnergyRow {
                a,
                omega,
                alpha_hat: None,
                beta_hat: 0.0,
                converged: true,
            })
            .collect(),
    }
}
