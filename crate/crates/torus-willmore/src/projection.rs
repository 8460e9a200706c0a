//! Projection of an induced metric to its marked conformal class.
//!
//! Given metric samples over the fundamental domain of a reference lattice,
//! we build the harmonic 1-form η = du + dφ (co-closed for the sampled
//! metric, solved spectrally with the flat-preconditioned CG), close it to
//! the holomorphic form ω = η + i★η, and integrate ω over the two marked
//! generator loops. The class is the reduced ratio of those periods; for
//! flat metrics φ vanishes and the whole computation is exact.

use crate::error::{Error, Result};
use crate::immersion::{GeometryFields, NormalField, TorusImmersion};
use crate::lattice::{reduce_modulus_signed, Lattice, TeichmullerPoint};
use crate::poisson::{CoefficientField, PeriodicSolver};
use crate::quadrature::grid_mean;
use crate::Complex64;

/// Default grid for projections driven from an immersion.
pub const DEFAULT_PROJECTION_GRID: usize = 64;
/// Relative residual tolerance of the harmonic-form solve.
pub const SOLVER_TOL: f64 = 1e-10;

/// Metric samples E, F, G (plane-chart components) on the n×n lattice grid.
#[derive(Debug, Clone)]
pub struct MetricGrid {
    pub n: usize,
    pub lattice: Lattice,
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl MetricGrid {
    pub fn from_geometry(geo: &GeometryFields) -> Self {
        Self {
            n: geo.n,
            lattice: geo.lattice,
            e: geo.e.clone(),
            f: geo.f.clone(),
            g: geo.g.clone(),
        }
    }

    /// Constant (flat) metric grid of a lattice.
    pub fn flat(lattice: Lattice, n: usize) -> Self {
        Self {
            n,
            lattice,
            e: vec![1.0; n * n],
            f: vec![0.0; n * n],
            g: vec![1.0; n * n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.n * self.n;
        if self.e.len() != total || self.f.len() != total || self.g.len() != total {
            return Err(Error::GridMismatch { expected: total, got: self.e.len() });
        }
        for idx in 0..total {
            let det = self.e[idx] * self.g[idx] - self.f[idx] * self.f[idx];
            if !(det > 0.0) {
                return Err(Error::DegenerateImmersion {
                    i: idx / self.n,
                    j: idx % self.n,
                    det,
                });
            }
        }
        Ok(())
    }
}

/// Reusable projection state: FFT plans, CG scratch and a warm-start field.
#[derive(Clone)]
pub struct Projector {
    solver: PeriodicSolver,
    pub tol: f64,
    pub max_iters: usize,
    warm: Option<Vec<f64>>,
}

impl Projector {
    pub fn new(n: usize) -> Self {
        Self {
            solver: PeriodicSolver::new(n),
            tol: SOLVER_TOL,
            max_iters: 10 * n,
            warm: None,
        }
    }

    pub fn n(&self) -> usize {
        self.solver.n()
    }

    /// Warm-start potential for the next solve (e.g. the base point of a
    /// finite-difference sweep). Cleared by `clear_warm_start`.
    pub fn set_warm_start(&mut self, phi: Option<Vec<f64>>) {
        self.warm = phi;
    }

    pub fn warm_start(&self) -> Option<&Vec<f64>> {
        self.warm.as_ref()
    }

    /// Harmonic potential of the last successful projection.
    pub fn last_potential(&self) -> Option<&Vec<f64>> {
        self.warm.as_ref()
    }

    /// Marked class with the signed first coordinate (no reflection).
    pub fn project_signed(&mut self, metric: &MetricGrid) -> Result<(f64, f64)> {
        let n = self.solver.n();
        if metric.n != n {
            return Err(Error::GridMismatch { expected: n, got: metric.n });
        }
        metric.validate()?;
        let total = n * n;

        // Pull the plane-chart metric back to (u, v) and form A = √h · h⁻¹.
        let (g1, g2) = (metric.lattice.gen1, metric.lattice.gen2);
        let mut a = CoefficientField {
            a11: vec![0.0; total],
            a12: vec![0.0; total],
            a22: vec![0.0; total],
        };
        for idx in 0..total {
            let (e, f, g) = (metric.e[idx], metric.f[idx], metric.g[idx]);
            let huu = g1.re * g1.re * e + 2.0 * g1.re * g1.im * f + g1.im * g1.im * g;
            let huv = g1.re * g2.re * e + (g1.re * g2.im + g1.im * g2.re) * f
                + g1.im * g2.im * g;
            let hvv = g2.re * g2.re * e + 2.0 * g2.re * g2.im * f + g2.im * g2.im * g;
            let det = huu * hvv - huv * huv;
            if !(det > 0.0) {
                return Err(Error::DegenerateImmersion { i: idx / n, j: idx % n, det });
            }
            let sqrt_det = det.sqrt();
            a.a11[idx] = hvv / sqrt_det;
            a.a12[idx] = -huv / sqrt_det;
            a.a22[idx] = huu / sqrt_det;
        }

        // η = du + dφ co-closed: div(A(∇φ + e₁)) = 0, so the positive
        // operator −div(A∇·) gets rhs = +div(A e₁).
        let rhs: Vec<f64> = self.solver.divergence(&a.a11, &a.a12);
        let warm = self.warm.take();
        let info = self.solver.solve_div_form(
            &a,
            &rhs,
            warm.as_deref(),
            self.tol,
            self.max_iters,
        )?;
        let (gu, gv) = self.solver.gradient(&info.x);
        self.warm = Some(info.x);

        // ★η with (★α)_u = −(A₁₂α_u + A₂₂α_v), (★α)_v = A₁₁α_u + A₁₂α_v.
        let mut star_u = vec![0.0; total];
        let mut star_v = vec![0.0; total];
        for idx in 0..total {
            let eta_u = 1.0 + gu[idx];
            let eta_v = gv[idx];
            star_u[idx] = -(a.a12[idx] * eta_u + a.a22[idx] * eta_v);
            star_v[idx] = a.a11[idx] * eta_u + a.a12[idx] * eta_v;
        }

        // Periods of ω = η + i★η over the marked loops; ∫η is exactly (1, 0).
        let p1 = Complex64::new(1.0, grid_mean(&star_u));
        let p2 = Complex64::new(0.0, grid_mean(&star_v));
        let mut tau = p2 / p1;
        if tau.im < 0.0 {
            tau = -tau;
        }
        Ok(reduce_modulus_signed(tau))
    }

    /// Marked class with the orientation convention a ≥ 0.
    pub fn project(&mut self, metric: &MetricGrid) -> Result<TeichmullerPoint> {
        let (a, b) = self.project_signed(metric)?;
        TeichmullerPoint::new(a.abs(), b)
    }
}

/// One-shot projection of a metric grid.
pub fn project_conformal_class(metric: &MetricGrid) -> Result<TeichmullerPoint> {
    Projector::new(metric.n).project(metric)
}

/// Signed one-shot projection (internal chart coordinate before reflection).
pub fn project_conformal_class_signed(metric: &MetricGrid) -> Result<(f64, f64)> {
    Projector::new(metric.n).project_signed(metric)
}

/// Marked conformal class of an immersion, sampled at resolution n.
pub fn immersion_class(f: &TorusImmersion, n: usize) -> Result<TeichmullerPoint> {
    let geo = f.geometry(n)?;
    project_conformal_class(&MetricGrid::from_geometry(&geo))
}

/// Directional derivative (δΠ¹(f)(v), δΠ²(f)(v)) of the signed class along
/// a normal field, by Richardson-extrapolated central differences of the
/// projection of exp_normal(f, v, ±h), ±h/2.
pub fn dpi_directional(
    f: &TorusImmersion,
    v: &NormalField,
    h: f64,
    n_grid: usize,
) -> Result<(f64, f64)> {
    let mut projector = Projector::new(n_grid);
    let class_at = |projector: &mut Projector, t: f64| -> Result<(f64, f64)> {
        let moved = crate::immersion::exp_normal_with_grid(f, v, t, n_grid)?;
        let geo = moved.geometry(n_grid)?;
        projector.project_signed(&MetricGrid::from_geometry(&geo))
    };
    let pph = class_at(&mut projector, h)?;
    let pmh = class_at(&mut projector, -h)?;
    let pph2 = class_at(&mut projector, h / 2.0)?;
    let pmh2 = class_at(&mut projector, -h / 2.0)?;
    let richardson = |fh: (f64, f64), fmh: (f64, f64), fh2: (f64, f64), fmh2: (f64, f64)| {
        let coarse = ((fh.0 - fmh.0) / (2.0 * h), (fh.1 - fmh.1) / (2.0 * h));
        let fine = ((fh2.0 - fmh2.0) / h, (fh2.1 - fmh2.1) / h);
        (
            (4.0 * fine.0 - coarse.0) / 3.0,
            (4.0 * fine.1 - coarse.1) / 3.0,
        )
    };
    Ok(richardson(pph, pmh, pph2, pmh2))
}

/// Mean-square seam mismatch of a metric grid continued periodically; small
/// values certify that the samples really are periodic.
pub fn seam_mismatch(metric: &MetricGrid) -> f64 {
    let n = metric.n;
    let mut worst: f64 = 0.0;
    for j in 0..n {
        worst = worst.max((metric.e[(n - 1) * n + j] - metric.e[j]).abs() / (n as f64));
    }
    worst
}
