//! Second-variation analysis of the penalized functional W − αΠ¹ − βΠ² at
//! homogeneous tori, mode by Fourier mode.
//!
//! At the Clifford torus everything is closed-form on A_{k,l}:
//!
//! ```text
//! D²W(φ,φ)  = (2n² − 6n + 4)⟨φ,φ⟩,            n = k² + l²,
//! D²Π¹(φ,φ) = (1/π²)(2kl − 4kl/n)·ρ·⟨φ,φ⟩,    ρ = (2ab − 2cd)/Σc²  ∈ [−1, 1],
//! ```
//!
//! with ρ = 1 exactly for the aligned patterns a = b, c = −d. The stability
//! question for W_α reduces to the sign of the even quartic
//!
//! ```text
//! g_{α̃,c}(l) = 2(c²+1)²l⁴ − (6(c²+1) + 8α̃c)l² + 4 + 16α̃c/(c²+1),
//! ```
//!
//! α̃ = α/(4π²), c = k/l, whose positive roots are l² = 2/(c²+1) and
//! l² = (1 + 4α̃c/(c²+1))/(c²+1). Scanning integer modes (excluding the
//! invariance modes (1,1), (1,0), (0,1)) gives the threshold α¹ = 10π² with
//! kernel sin/cos(√2(x+2y)) and sin/cos(√2(2x+y)).
//!
//! Away from b = 1 the threshold is located numerically: β^b is fitted as
//! the multiplier of the homogeneous torus, each mode's three raw Hessians
//! (W, Π¹, Π²) are measured along geodesic normal families, and α^b is the
//! largest α keeping every non-invariance margin nonnegative.

use crate::error::{Error, Result};
use crate::geometry::radii;
use crate::immersion::{
    exp_normal_with_grid, homogeneous_torus, mode_normal_field, willmore_energy, NormalField,
    TorusImmersion,
};
use crate::modes::FourierMode;
use crate::projection::{MetricGrid, Projector};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Invariance (Möbius-direction) modes excluded from every stability scan.
pub const INVARIANCE_MODES: [(u32, u32); 3] = [(1, 1), (1, 0), (0, 1)];

/// The penalized functional's multipliers: W_{α,β} = W − αΠ¹ − βΠ².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenalizedForm {
    pub alpha: f64,
    pub beta: f64,
}

/// Which functional a numeric quadratic form differentiates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    Willmore,
    Pi1,
    Pi2,
    Penalized(PenalizedForm),
}

// ---------------------------------------------------------------------------
// Closed forms at the Clifford torus
// ---------------------------------------------------------------------------

/// Eigenvalue factor 2n² − 6n + 4 of δ²W at the Clifford torus, n = k² + l².
pub fn willmore_eigenvalue_factor(k: u32, l: u32) -> f64 {
    let n = (k * k + l * l) as f64;
    2.0 * n * n - 6.0 * n + 4.0
}

/// δ²W(f¹)(φ, φ) for φ ∈ A_{k,l}: the eigenvalue factor times ⟨φ,φ⟩.
pub fn d2_willmore_clifford(m: &FourierMode) -> f64 {
    willmore_eigenvalue_factor(m.k, m.l) * m.l2_norm_sq(1.0)
}

/// (1/π²)(2kl − 4kl/(k²+l²)): δ²Π¹ per unit ⟨φ,φ⟩ at alignment ρ = 1.
pub fn pi1_factor_unit(k: u32, l: u32) -> f64 {
    if k == 0 || l == 0 {
        return 0.0;
    }
    let n = (k * k + l * l) as f64;
    let kl = (k * l) as f64;
    (2.0 * kl - 4.0 * kl / n) / (PI * PI)
}

/// Signed δ²Π¹(f¹)(φ, φ) including the coefficient alignment ρ; vanishes
/// when k = 0 or l = 0 (the mixed derivative dies).
pub fn d2_pi1_clifford(m: &FourierMode) -> f64 {
    if m.k == 0 || m.l == 0 {
        return 0.0;
    }
    pi1_factor_unit(m.k, m.l) * m.pi1_alignment() * m.l2_norm_sq(1.0)
}

/// The traceless correction η₂ = (2/n)·∂₁∂₂Φ (chart derivatives on T²₁,
/// where ∂ᵢ = √2·∂θᵢ), the particular solution transporting the holomorphic
/// basis along a metric deformation. Boundary modes map to zero.
pub fn eta_correction(m: &FourierMode) -> FourierMode {
    let n = (m.k * m.k + m.l * m.l) as f64;
    m.d_theta12().scaled(4.0 / n)
}

/// Residual of the defining Poisson equation of η₂ with denominators
/// cleared: n·Δ_θη̃ + 2n·∂θ₁∂θ₂Φ for η̃ = (2/n)·∂θ₁∂θ₂Φ. Every coefficient
/// cancels exactly (identical float products with opposite signs), so the
/// residual mode is identically zero — the symbolic check behind
/// [`eta_correction`].
pub fn eta_residual_scaled(m: &FourierMode) -> FourierMode {
    let n = (m.k * m.k + m.l * m.l) as f64;
    let d12 = m.d_theta12();
    let mut out = d12.laplacian_theta().scaled(2.0);
    let add = d12.scaled(2.0 * n);
    out.c_sc += add.c_sc;
    out.c_cs += add.c_cs;
    out.c_cc += add.c_cc;
    out.c_ss += add.c_ss;
    out
}

/// δ²Π²(f^b)(φ, φ) for φ ∈ A_{k,l}(T²_b): the ∂₁₁ − ∂₂₂ pairing plus the
/// curvature corrections with c_r(k,l) = (k²s² − l²r²)/(k²s² + l²r²),
///
/// ```text
/// [ l²r² − k²s² − (r² − s²) − c_r(k,l) ] / (4π²r⁴s²) · ⟨φ,φ⟩.
/// ```
pub fn d2_pi2_homogeneous(m: &FourierMode, b: f64) -> Result<f64> {
    let (r, s) = radii(b)?;
    let (k2, l2) = ((m.k * m.k) as f64, (m.l * m.l) as f64);
    let (r2, s2) = (r * r, s * s);
    let c_r = (k2 * s2 - l2 * r2) / (k2 * s2 + l2 * r2);
    let bracket = l2 * r2 - k2 * s2 - (r2 - s2) - c_r;
    Ok(bracket / (4.0 * PI * PI * r2 * r2 * s2) * m.l2_norm_sq(b))
}

// ---------------------------------------------------------------------------
// The stability quartic
// ---------------------------------------------------------------------------

/// g_{α̃,c}(l) = 2(c²+1)²l⁴ − (6(c²+1) + 8α̃c)l² + 4 + 16α̃c/(c²+1).
pub fn g_polynomial(alpha_tilde: f64, c: f64, l: f64) -> f64 {
    let c2p1 = c * c + 1.0;
    let l2 = l * l;
    2.0 * c2p1 * c2p1 * l2 * l2 - (6.0 * c2p1 + 8.0 * alpha_tilde * c) * l2
        + 4.0
        + 16.0 * alpha_tilde * c / c2p1
}

/// The two l² roots of the quartic: 2/(c²+1) and (1 + 4α̃c/(c²+1))/(c²+1).
/// A branch that would be negative is reported as `None`.
pub fn g_roots(alpha_tilde: f64, c: f64) -> (Option<f64>, Option<f64>) {
    let c2p1 = c * c + 1.0;
    let first = 2.0 / c2p1;
    let second = (1.0 + 4.0 * alpha_tilde * c / c2p1) / c2p1;
    (
        (first >= 0.0).then_some(first),
        (second >= 0.0).then_some(second),
    )
}

// ---------------------------------------------------------------------------
// Numeric quadratic forms along geodesic normal families
// ---------------------------------------------------------------------------

/// Grid sizes and steps for the numeric first and second variations.
#[derive(Debug, Clone, Copy)]
pub struct SecondVariationOptions {
    /// Geometry/quadrature grid.
    pub n_geom: usize,
    /// Projection grid (must divide `n_geom`); the metric is subsampled.
    pub n_proj: usize,
    /// Base step of the Richardson-extrapolated second difference.
    pub step: f64,
    /// First-variation step for multiplier fits.
    pub fd_step: f64,
}

impl Default for SecondVariationOptions {
    fn default() -> Self {
        Self { n_geom: 64, n_proj: 32, step: 0.01, fd_step: 1e-3 }
    }
}

pub(crate) fn subsample_metric(metric: &MetricGrid, n_proj: usize) -> Result<MetricGrid> {
    let n = metric.n;
    if n == n_proj {
        return Ok(metric.clone());
    }
    if n % n_proj != 0 {
        return Err(Error::GridMismatch { expected: n_proj, got: n });
    }
    let stride = n / n_proj;
    let mut out = MetricGrid::flat(metric.lattice, n_proj);
    for i in 0..n_proj {
        for j in 0..n_proj {
            let src = (i * stride) * n + j * stride;
            let dst = i * n_proj + j;
            out.e[dst] = metric.e[src];
            out.f[dst] = metric.f[src];
            out.g[dst] = metric.g[src];
        }
    }
    Ok(out)
}

/// One (W, a_signed, b) measurement for exp_normal(f, v, t).
fn measure(
    f: &TorusImmersion,
    v: &NormalField,
    t: f64,
    opts: &SecondVariationOptions,
    projector: &mut Projector,
) -> Result<(f64, f64, f64)> {
    let moved = exp_normal_with_grid(f, v, t, opts.n_geom)?;
    let geo = moved.geometry(opts.n_geom)?;
    let w = geo.willmore_energy();
    let metric = subsample_metric(&MetricGrid::from_geometry(&geo), opts.n_proj)?;
    let (a, b) = projector.project_signed(&metric)?;
    Ok((w, a, b))
}

fn require_analytic_base(f: &TorusImmersion) -> Result<()> {
    if f.is_grid() || !f.perturbation_modes().is_empty() {
        return Err(Error::UnsupportedKind(
            "numeric quadratic forms are taken at unperturbed analytic tori",
        ));
    }
    Ok(())
}

/// Raw Hessians d²/dt²|₀ of (W, signed Π¹, Π²) along the geodesic family
/// exp_normal(f, v, t), Richardson-extrapolated from steps h and h/2.
pub fn second_variation_triple(
    f: &TorusImmersion,
    v: &NormalField,
    opts: &SecondVariationOptions,
) -> Result<(f64, f64, f64)> {
    require_analytic_base(f)?;
    let mut projector = Projector::new(opts.n_proj);
    let h = opts.step;
    let base = measure(f, v, 0.0, opts, &mut projector)?;
    let ph = measure(f, v, h, opts, &mut projector)?;
    let mh = measure(f, v, -h, opts, &mut projector)?;
    let ph2 = measure(f, v, h / 2.0, opts, &mut projector)?;
    let mh2 = measure(f, v, -h / 2.0, opts, &mut projector)?;
    let hessian = |p: f64, z: f64, m: f64, p2: f64, m2: f64| {
        let coarse = (p - 2.0 * z + m) / (h * h);
        let fine = (p2 - 2.0 * z + m2) / (h * h / 4.0);
        (4.0 * fine - coarse) / 3.0
    };
    Ok((
        hessian(ph.0, base.0, mh.0, ph2.0, mh2.0),
        hessian(ph.1, base.1, mh.1, ph2.1, mh2.1),
        hessian(ph.2, base.2, mh.2, ph2.2, mh2.2),
    ))
}

/// Numeric second variation of a functional along exp_normal(f, v, ·);
/// the raw d²/dt² value, same normalization as the closed forms.
pub fn quadratic_form_numeric(
    functional: Functional,
    f: &TorusImmersion,
    v: &NormalField,
    opts: &SecondVariationOptions,
) -> Result<f64> {
    let (qw, qp1, qp2) = second_variation_triple(f, v, opts)?;
    Ok(match functional {
        Functional::Willmore => qw,
        Functional::Pi1 => qp1,
        Functional::Pi2 => qp2,
        Functional::Penalized(form) => qw - form.alpha * qp1 - form.beta * qp2,
    })
}

// ---------------------------------------------------------------------------
// Multiplier fit (first variations)
// ---------------------------------------------------------------------------

/// Least-squares fit of δW(f)(v) = α δΠ¹(f)(v) + β δΠ²(f)(v) over a probe
/// basis of normal fields.
#[derive(Debug, Clone)]
pub struct MultiplierFit {
    /// None when the Π¹ direction degenerates (isothermic base point).
    pub alpha: Option<f64>,
    pub beta: f64,
    /// ‖δW − fit‖ relative to ‖δW‖ (floored), and absolute.
    pub residual_rel: f64,
    pub residual_abs: f64,
    pub probes: usize,
}

/// First variation of the Willmore energy along v, Richardson-extrapolated.
pub fn dw_directional(
    f: &TorusImmersion,
    v: &NormalField,
    h: f64,
    n_geom: usize,
) -> Result<f64> {
    let w_at = |t: f64| -> Result<f64> {
        willmore_energy(&exp_normal_with_grid(f, v, t, n_geom)?, n_geom)
    };
    let coarse = (w_at(h)? - w_at(-h)?) / (2.0 * h);
    let fine = (w_at(h / 2.0)? - w_at(-h / 2.0)?) / h;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Probe fields: the constant field (the homogeneous-family direction, the
/// one with first-order Π² response at f^b) plus low modes.
fn probe_fields(f: &TorusImmersion) -> Result<Vec<NormalField>> {
    let mut probes = vec![NormalField::constant(f, 1.0)?];
    for (k, l) in [(1, 2), (2, 1), (2, 2), (1, 3), (3, 1)] {
        let m = FourierMode::new(k, l, [1.0, 1.0, 0.0, 0.0])?;
        probes.push(crate::immersion::mode_sum_normal_field(&[m], f)?);
    }
    Ok(probes)
}

/// Fit the constrained Euler–Lagrange multipliers of an immersion.
pub fn fit_multipliers(
    f: &TorusImmersion,
    opts: &SecondVariationOptions,
) -> Result<MultiplierFit> {
    let probes = probe_fields(f)?;
    let h = opts.fd_step;
    let mut rows = Vec::with_capacity(probes.len());
    for v in &probes {
        let dw = dw_directional(f, v, h, opts.n_geom)?;
        let (dp1, dp2) = crate::projection::dpi_directional(f, v, h, opts.n_geom)?;
        rows.push((dw, dp1, dp2));
    }

    // Normal equations for [α, β]; drop the α column when δΠ¹ degenerates.
    let s11: f64 = rows.iter().map(|r| r.1 * r.1).sum();
    let s22: f64 = rows.iter().map(|r| r.2 * r.2).sum();
    let s12: f64 = rows.iter().map(|r| r.1 * r.2).sum();
    let b1: f64 = rows.iter().map(|r| r.0 * r.1).sum();
    let b2: f64 = rows.iter().map(|r| r.0 * r.2).sum();

    let beta_only = || if s22 > 0.0 { b2 / s22 } else { 0.0 };
    let degenerate = s11 <= 1e-10 * s22.max(1e-30);
    let (alpha, beta) = if degenerate {
        (None, beta_only())
    } else {
        let det = s11 * s22 - s12 * s12;
        if det.abs() <= 1e-12 * s11 * s22 {
            (None, beta_only())
        } else {
            (Some((b1 * s22 - b2 * s12) / det), (s11 * b2 - s12 * b1) / det)
        }
    };

    let mut resid_sq = 0.0;
    let mut dw_sq = 0.0;
    for (dw, dp1, dp2) in &rows {
        let fit = alpha.unwrap_or(0.0) * dp1 + beta * dp2;
        resid_sq += (dw - fit) * (dw - fit);
        dw_sq += dw * dw;
    }
    let residual_abs = resid_sq.sqrt();
    let residual_rel = residual_abs / dw_sq.sqrt().max(1e-9);
    Ok(MultiplierFit { alpha, beta, residual_rel, residual_abs, probes: rows.len() })
}

// ---------------------------------------------------------------------------
// The threshold α^b
// ---------------------------------------------------------------------------

/// A scanned mode/pattern with its normalized quadratic forms and the margin
/// of W_{α,β} at the reported threshold.
#[derive(Debug, Clone)]
pub struct MarginRow {
    pub k: u32,
    pub l: u32,
    pub pattern: &'static str,
    /// Per-unit-⟨φ,φ⟩ second variations.
    pub q_w: f64,
    pub q_pi1: f64,
    pub q_pi2: f64,
    /// Raw Q_{α,β}(φ) of the unit-coefficient pattern at the threshold.
    pub q_alpha_value: f64,
    /// Normalized margin at the threshold.
    pub margin: f64,
}

/// How a threshold was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdPath {
    AnalyticClifford,
    NumericHessian,
}

/// The threshold α^b, the multiplier β^b used, the kernel modes of
/// δ²W_{α^b,β^b}(f^b), and the full margin table.
#[derive(Debug, Clone)]
pub struct ThresholdResult {
    pub b: f64,
    pub alpha_b: f64,
    pub beta_b: f64,
    pub kernel: Vec<FourierMode>,
    pub diagnostics: Vec<MarginRow>,
    pub path: ThresholdPath,
    pub warnings: Vec<String>,
    pub tol: f64,
}

impl ThresholdResult {
    /// Kernel (k, l) pairs, deduplicated, in scan order.
    pub fn kernel_types(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = Vec::new();
        for m in &self.kernel {
            if !out.contains(&(m.k, m.l)) {
                out.push((m.k, m.l));
            }
        }
        out
    }
}

/// Coefficient patterns scanned per mode: the aligned (equality-case)
/// patterns that extremize δ²Π¹ and their sign opposites; boundary modes
/// keep their two surviving basis slots.
pub fn scan_patterns(k: u32, l: u32) -> Vec<(&'static str, [f64; 4])> {
    if k >= 1 && l >= 1 {
        vec![
            ("sc+cs", [1.0, 1.0, 0.0, 0.0]),
            ("cc-ss", [0.0, 0.0, 1.0, -1.0]),
            ("sc-cs", [1.0, -1.0, 0.0, 0.0]),
            ("cc+ss", [0.0, 0.0, 1.0, 1.0]),
        ]
    } else if k == 0 {
        vec![("cs", [0.0, 1.0, 0.0, 0.0]), ("cc", [0.0, 0.0, 1.0, 0.0])]
    } else {
        vec![("sc", [1.0, 0.0, 0.0, 0.0]), ("cc", [0.0, 0.0, 1.0, 0.0])]
    }
}

/// All non-invariance modes with k, l ≤ k_max, in scan order.
pub fn scan_modes(k_max: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for k in 0..=k_max {
        for l in 0..=k_max {
            if (k, l) == (0, 0) || INVARIANCE_MODES.contains(&(k, l)) {
                continue;
            }
            out.push((k, l));
        }
    }
    out
}

/// Default kernel/margin tolerance (relative to ⟨φ,φ⟩).
pub const THRESHOLD_TOL: f64 = 1e-6;

/// Largest α with δ²W_{α,β^b}(f^b) ≥ 0 away from the invariance modes.
///
/// b = 1 takes the exact Clifford scan; other aspect ratios in [0.8, 1.25]
/// take the numeric-Hessian path with β^b from the multiplier fit.
pub fn alpha_threshold(b: f64, k_max: u32, tol: f64) -> Result<ThresholdResult> {
    if !(0.8..=1.25).contains(&b) {
        return Err(Error::Domain(format!(
            "threshold scan is calibrated for b ∈ [0.8, 1.25], got {b}"
        )));
    }
    if k_max < 4 {
        return Err(Error::Domain(format!("mode cutoff must be ≥ 4, got {k_max}")));
    }
    if b == 1.0 {
        Ok(alpha_threshold_analytic(k_max, tol))
    } else {
        alpha_threshold_numeric(b, k_max, tol, &SecondVariationOptions::default())
    }
}

/// Exact Clifford-torus threshold: scan the closed forms over integer modes.
pub fn alpha_threshold_analytic(k_max: u32, tol: f64) -> ThresholdResult {
    // Crossing α of an aligned mode, in exact integer arithmetic over π²:
    // (2n² − 6n + 4)·n / (2kl(n − 2)).
    let crossing = |k: u32, l: u32| -> Option<f64> {
        if k == 0 || l == 0 {
            return None;
        }
        let n = (k * k + l * l) as i64;
        let w_num = 2 * n * n - 6 * n + 4;
        let den = 2 * (k as i64) * (l as i64) * (n - 2);
        if den <= 0 {
            return None;
        }
        Some(PI * PI * (w_num * n) as f64 / den as f64)
    };

    let mut alpha_b = f64::INFINITY;
    for (k, l) in scan_modes(k_max) {
        if let Some(a) = crossing(k, l) {
            alpha_b = alpha_b.min(a);
        }
    }

    let mut diagnostics = Vec::new();
    let mut kernel = Vec::new();
    for (k, l) in scan_modes(k_max) {
        for (pattern, coeffs) in scan_patterns(k, l) {
            let mode = FourierMode::new(k, l, coeffs).expect("scan mode");
            let q_w = willmore_eigenvalue_factor(k, l);
            let q_pi1 = pi1_factor_unit(k, l) * mode.pi1_alignment();
            let margin = q_w - alpha_b * q_pi1;
            let norm = mode.l2_norm_sq(1.0);
            if margin.abs() <= 10.0 * tol {
                kernel.push(mode);
            }
            diagnostics.push(MarginRow {
                k,
                l,
                pattern,
                q_w,
                q_pi1,
                q_pi2: 0.0,
                q_alpha_value: margin * norm,
                margin,
            });
        }
    }

    ThresholdResult {
        b: 1.0,
        alpha_b,
        beta_b: 0.0,
        kernel,
        diagnostics,
        path: ThresholdPath::AnalyticClifford,
        warnings: Vec::new(),
        tol,
    }
}

/// Numeric-Hessian threshold at aspect ratio b (also usable at b = 1 as a
/// cross-check of the analytic path).
pub fn alpha_threshold_numeric(
    b: f64,
    k_max: u32,
    tol: f64,
    opts: &SecondVariationOptions,
) -> Result<ThresholdResult> {
    let f_b = homogeneous_torus(b)?;
    let beta_b = if b == 1.0 { 0.0 } else { fit_multipliers(&f_b, opts)?.beta };

    // Sorted mode/pattern tasks; Hessian triples are independent.
    let mut tasks = Vec::new();
    for (k, l) in scan_modes(k_max) {
        for (pattern, coeffs) in scan_patterns(k, l) {
            tasks.push((k, l, pattern, coeffs));
        }
    }
    let triples: Vec<Result<(f64, f64, f64, f64)>> = tasks
        .par_iter()
        .map(|(k, l, _pattern, coeffs)| {
            let mode = FourierMode::new(*k, *l, *coeffs)?;
            let v = mode_normal_field(&mode, &f_b)?;
            let (qw, qp1, qp2) = second_variation_triple(&f_b, &v, opts)?;
            Ok((qw, qp1, qp2, mode.l2_norm_sq(b)))
        })
        .collect();

    let mut rows = Vec::with_capacity(tasks.len());
    let mut norms = Vec::with_capacity(tasks.len());
    for ((k, l, pattern, _), triple) in tasks.iter().zip(triples.into_iter()) {
        let (qw, qp1, qp2, norm) = triple?;
        norms.push(norm);
        rows.push(MarginRow {
            k: *k,
            l: *l,
            pattern,
            q_w: qw / norm,
            q_pi1: qp1 / norm,
            q_pi2: qp2 / norm,
            q_alpha_value: 0.0,
            margin: 0.0,
        });
    }

    let min_margin = |alpha: f64| -> f64 {
        rows.iter()
            .map(|r| r.q_w - alpha * r.q_pi1 - beta_b * r.q_pi2)
            .fold(f64::INFINITY, f64::min)
    };

    // Bisect the largest feasible α in [0, 12π²].
    let (mut lo, mut hi) = (0.0, 12.0 * PI * PI);
    if min_margin(lo) < -tol {
        let table: Vec<String> = rows
            .iter()
            .map(|r| {
                format!(
                    "({},{}) {}: Q_W={:.6e} Q_Pi1={:.6e} Q_Pi2={:.6e}",
                    r.k, r.l, r.pattern, r.q_w, r.q_pi1, r.q_pi2
                )
            })
            .collect();
        return Err(Error::BracketFailure(format!(
            "W_{{0,β}} already indefinite at α = 0 (β = {beta_b:.6e}); margins:\n{}",
            table.join("\n")
        )));
    }
    let mut warnings = Vec::new();
    if min_margin(hi) >= -tol {
        warnings.push(format!(
            "margin still nonnegative at the bracket end α = 12π²; cutoff K = {k_max} may be too small"
        ));
    } else {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if min_margin(mid) >= -tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let alpha_b = lo;

    let mut kernel = Vec::new();
    for (row, norm) in rows.iter_mut().zip(norms.iter()) {
        row.margin = row.q_w - alpha_b * row.q_pi1 - beta_b * row.q_pi2;
        row.q_alpha_value = row.margin * norm;
        if row.margin.abs() <= 10.0 * tol {
            let coeffs = scan_patterns(row.k, row.l)
                .into_iter()
                .find(|(p, _)| *p == row.pattern)
                .expect("pattern")
                .1;
            kernel.push(FourierMode::new(row.k, row.l, coeffs)?);
            if row.k == k_max || row.l == k_max {
                warnings.push(format!(
                    "kernel mode ({},{}) sits on the cutoff K = {k_max}; increase K",
                    row.k, row.l
                ));
            }
        }
    }

    Ok(ThresholdResult {
        b,
        alpha_b,
        beta_b,
        kernel,
        diagnostics: rows,
        path: ThresholdPath::NumericHessian,
        warnings,
        tol,
    })
}

// ---------------------------------------------------------------------------
// The one-dimensional kernel profile in the equivariant chart
// ---------------------------------------------------------------------------

/// The kernel normal variation written in the (2,−1)-equivariant chart,
/// where it depends on one variable only: x̃ ↦ sin(ν x̃) with
/// ν = s/r + 4r/s for b > 1 (mirror r ↔ s for b < 1).
#[derive(Debug, Clone, Copy)]
pub struct KernelProfile {
    pub frequency: f64,
}

impl KernelProfile {
    pub fn eval(&self, x: f64) -> f64 {
        (self.frequency * x).sin()
    }
}

/// One-variable kernel profile; at b = 1 the kernel is two-dimensional
/// beyond phase translation and no single profile exists.
pub fn equivariant_kernel_profile(b: f64) -> Result<KernelProfile> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!("aspect ratio b must be > 0, got {b}")));
    }
    if b == 1.0 {
        return Err(Error::AmbiguousKernel);
    }
    let frequency = if b > 1.0 { b + 4.0 / b } else { 1.0 / b + 4.0 * b };
    Ok(KernelProfile { frequency })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn mode(k: u32, l: u32, c: [f64; 4]) -> FourierMode {
        FourierMode::new(k, l, c).unwrap()
    }

    #[test]
    fn willmore_form_zero_modes_and_positivity() {
        for (k, l) in [(1, 1), (1, 0), (0, 1)] {
            assert_eq!(d2_willmore_clifford(&mode(k, l, [1.0; 4])), 0.0);
        }
        for k in 0..=8u32 {
            for l in 0..=8u32 {
                if k * k + l * l == 0 || INVARIANCE_MODES.contains(&(k, l)) {
                    continue;
                }
                assert!(
                    willmore_eigenvalue_factor(k, l) > 0.0,
                    "({k},{l}) should be strictly stable"
                );
            }
        }
    }

    #[test]
    fn willmore_form_on_kernel_mode() {
        // (1,2) aligned: factor 24, ⟨φ,φ⟩ = π².
        let m = mode(1, 2, [1.0, 1.0, 0.0, 0.0]);
        assert!((d2_willmore_clifford(&m) - 24.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn pi1_form_values_and_bound() {
        let m = mode(1, 2, [1.0, 1.0, 0.0, 0.0]);
        assert!((d2_pi1_clifford(&m) - 12.0 / 5.0).abs() < 1e-12);
        let m = mode(1, 2, [1.0, -1.0, 0.0, 0.0]);
        assert!((d2_pi1_clifford(&m) + 12.0 / 5.0).abs() < 1e-12);
        assert_eq!(d2_pi1_clifford(&mode(0, 1, [1.0; 4])), 0.0);

        // Bound structure: value ≤ factor·⟨φ,φ⟩, equality iff aligned.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let k = rng.gen_range(1..=4u32);
            let l = rng.gen_range(1..=4u32);
            let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let m = mode(k, l, c);
            let bound = pi1_factor_unit(k, l) * m.l2_norm_sq(1.0);
            assert!(d2_pi1_clifford(&m) <= bound + 1e-12);
        }
        let aligned = mode(3, 2, [0.7, 0.7, -0.2, 0.2]);
        let bound = pi1_factor_unit(3, 2) * aligned.l2_norm_sq(1.0);
        assert!((d2_pi1_clifford(&aligned) - bound).abs() < 1e-12);
    }

    #[test]
    fn eta_correction_examples() {
        // Φ = sin·sin at (1,1): η₂ = 2 cos·cos.
        let eta = eta_correction(&mode(1, 1, [0.0, 0.0, 0.0, 1.0]));
        assert_eq!((eta.k, eta.l), (1, 1));
        assert!((eta.c_cc - 2.0).abs() < 1e-15);
        assert_eq!((eta.c_sc, eta.c_cs, eta.c_ss), (0.0, 0.0, 0.0));

        // Φ = sin·cos at (1,2): swaps to cos·sin with factor 8/5, negative
        // sign from the θ₂ differentiation of cos.
        let eta = eta_correction(&mode(1, 2, [1.0, 0.0, 0.0, 0.0]));
        assert!((eta.c_cs + 8.0 / 5.0).abs() < 1e-15);
        assert_eq!((eta.c_sc, eta.c_cc, eta.c_ss), (0.0, 0.0, 0.0));

        // Zero mode maps to zero.
        assert!(eta_correction(&mode(2, 3, [0.0; 4])).is_zero());
    }

    #[test]
    fn eta_residual_is_identically_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let k = rng.gen_range(1..=6u32);
            let l = rng.gen_range(1..=6u32);
            let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
            let res = eta_residual_scaled(&mode(k, l, c));
            assert_eq!(res.coeffs(), [0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn pi2_form_symmetries() {
        // b = 1, (1,1): both correction terms vanish.
        let v = d2_pi2_homogeneous(&mode(1, 1, [1.0, 1.0, 0.0, 0.0]), 1.0).unwrap();
        assert!(v.abs() < 1e-12);

        // b = 1: swapping (1,2) ↔ (2,1) flips the ∂₁₁ − ∂₂₂ pairing's sign.
        let v12 = d2_pi2_homogeneous(&mode(1, 2, [1.0, 1.0, 0.0, 0.0]), 1.0).unwrap();
        let v21 = d2_pi2_homogeneous(&mode(2, 1, [1.0, 1.0, 0.0, 0.0]), 1.0).unwrap();
        assert!((v12 + v21).abs() < 1e-10 * v12.abs().max(1.0));
        assert!(v12 > 0.0);

        // b = 1.05: the (1,2)-type dominates the (2,1)-type.
        let v12 = d2_pi2_homogeneous(&mode(1, 2, [1.0, 1.0, 0.0, 0.0]), 1.05).unwrap();
        let v21 = d2_pi2_homogeneous(&mode(2, 1, [1.0, 1.0, 0.0, 0.0]), 1.05).unwrap();
        assert!(v12 > v21, "{v12} vs {v21}");
    }

    #[test]
    fn g_polynomial_examples() {
        assert!(g_polynomial(2.5, 2.0, 1.0).abs() < 1e-12);
        assert!(g_polynomial(3.5, 1.0, 2.0).abs() < 1e-12);
        // l = 0 leaves the constant term.
        let (at, c) = (0.77, 1.9);
        let expect = 4.0 + 16.0 * at * c / (c * c + 1.0);
        assert_eq!(g_polynomial(at, c, 0.0), expect);
    }

    #[test]
    fn g_roots_examples_and_consistency() {
        let (r1, r2) = g_roots(2.5, 2.0);
        assert_eq!(r1.unwrap(), 0.4);
        assert_eq!(r2.unwrap(), 1.0);
        let (r1, r2) = g_roots(3.5, 1.0);
        assert_eq!(r1.unwrap(), 1.0);
        assert_eq!(r2.unwrap(), 4.0);
        let (r1, r2) = g_roots(0.0, 1.0);
        assert_eq!(r1.unwrap(), 1.0);
        assert_eq!(r2.unwrap(), 0.5);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let at = rng.gen_range(0.0..5.0);
            let c = rng.gen_range(1.0..4.0);
            let (r1, r2) = g_roots(at, c);
            for root in [r1, r2].into_iter().flatten() {
                let g = g_polynomial(at, c, root.sqrt());
                assert!(g.abs() < 1e-12, "g({at},{c}) at l² = {root}: {g:.3e}");
            }
        }
    }

    #[test]
    fn clifford_threshold_is_ten_pi_squared() {
        let res = alpha_threshold(1.0, 8, THRESHOLD_TOL).unwrap();
        assert!((res.alpha_b - 10.0 * PI * PI).abs() < 1e-9);
        assert_eq!(res.path, ThresholdPath::AnalyticClifford);
        // Kernel: (1,2) and (2,1), aligned patterns only.
        let mut kernel: Vec<(u32, u32, [f64; 4])> =
            res.kernel.iter().map(|m| (m.k, m.l, m.coeffs())).collect();
        kernel.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        assert_eq!(
            kernel,
            vec![
                (1, 2, [1.0, 1.0, 0.0, 0.0]),
                (1, 2, [0.0, 0.0, 1.0, -1.0]),
                (2, 1, [1.0, 1.0, 0.0, 0.0]),
                (2, 1, [0.0, 0.0, 1.0, -1.0]),
            ]
        );
        // All non-kernel margins strictly positive.
        for row in &res.diagnostics {
            if row.margin.abs() > 10.0 * res.tol {
                assert!(row.margin > 0.0, "({},{}) {}", row.k, row.l, row.pattern);
            }
        }
        // Out-of-range b and tiny cutoffs are rejected.
        assert!(alpha_threshold(0.5, 8, THRESHOLD_TOL).is_err());
        assert!(alpha_threshold(1.0, 3, THRESHOLD_TOL).is_err());
    }

    #[test]
    fn kernel_profile_frequencies() {
        let p = equivariant_kernel_profile(1.1).unwrap();
        assert!((p.frequency - (1.1 + 4.0 / 1.1)).abs() < 1e-12);
        assert!((p.frequency - 4.7364).abs() < 1e-4);
        // Limit value 5 on both sides of b = 1; exact again at b = 4.
        assert!((equivariant_kernel_profile(1.0 + 1e-9).unwrap().frequency - 5.0).abs() < 1e-7);
        assert!((equivariant_kernel_profile(1.0 - 1e-9).unwrap().frequency - 5.0).abs() < 1e-7);
        assert!((equivariant_kernel_profile(4.0).unwrap().frequency - 5.0).abs() < 1e-12);
        assert!(matches!(equivariant_kernel_profile(1.0), Err(Error::AmbiguousKernel)));
        // Integer frequency closes the profile with period 2π.
        let p = equivariant_kernel_profile(4.0).unwrap();
        for i in 0..10 {
            let x = i as f64 * 0.61;
            assert!((p.eval(x + 2.0 * PI) - p.eval(x)).abs() < 1e-9);
        }
    }
}
