//! Periodic spectral derivatives and a flat-preconditioned conjugate
//! gradient for divergence-form operators −div(A ∇φ) on the unit torus.
//!
//! The preconditioner inverts the constant-coefficient operator built from
//! the grid averages of A, which is diagonal in Fourier space with symbol
//! Ā₁₁k₁² + 2Ā₁₂k₁k₂ + Ā₂₂k₂². The metrics handled here are small
//! perturbations of flat, so the preconditioned iteration contracts fast.
//! All inner products use the deterministic pairwise reduction.

use crate::error::{Error, Result};
use crate::quadrature::{grid_mean, pairwise_sum};
use crate::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// In-place 2D FFT on n×n complex data (row-major).
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            scratch: vec![Complex64::default(); n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transpose(&mut self, data: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                self.scratch[j * n + i] = data[i * n + j];
            }
        }
        data.copy_from_slice(&self.scratch);
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        let n = self.n;
        for row in data.chunks_exact_mut(n) {
            self.fwd.process(row);
        }
        self.transpose(data);
        for row in data.chunks_exact_mut(n) {
            self.fwd.process(row);
        }
        self.transpose(data);
    }

    /// Inverse transform including the 1/n² normalization.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let n = self.n;
        for row in data.chunks_exact_mut(n) {
            self.inv.process(row);
        }
        self.transpose(data);
        for row in data.chunks_exact_mut(n) {
            self.inv.process(row);
        }
        self.transpose(data);
        let norm = 1.0 / (n * n) as f64;
        for v in data.iter_mut() {
            *v *= norm;
        }
    }
}

/// Signed frequency index: 0, 1, …, n/2, −(n/2−1), …, −1.
#[inline]
fn freq_index(m: usize, n: usize) -> f64 {
    if m <= n / 2 {
        m as f64
    } else {
        m as f64 - n as f64
    }
}

/// Angular wavenumber for the unit square, with the Nyquist row zeroed so
/// odd derivatives stay real and symmetric.
#[inline]
fn wavenumber(m: usize, n: usize) -> f64 {
    if n % 2 == 0 && m == n / 2 {
        0.0
    } else {
        2.0 * std::f64::consts::PI * freq_index(m, n)
    }
}

/// SPD coefficient field of a divergence-form operator.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
}

/// Outcome of a CG solve.
#[derive(Debug, Clone)]
pub struct SolveInfo {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Spectral-derivative workspace plus the preconditioned CG driver.
#[derive(Clone)]
pub struct PeriodicSolver {
    n: usize,
    fft: Fft2,
    buf_a: Vec<Complex64>,
    buf_b: Vec<Complex64>,
}

impl PeriodicSolver {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            fft: Fft2::new(n),
            buf_a: vec![Complex64::default(); n * n],
            buf_b: vec![Complex64::default(); n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn load(&mut self, field: &[f64]) {
        for (dst, src) in self.buf_a.iter_mut().zip(field.iter()) {
            *dst = Complex64::new(*src, 0.0);
        }
    }

    /// Spectral gradient (∂u, ∂v) of a real periodic field.
    pub fn gradient(&mut self, field: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        self.load(field);
        self.fft.forward(&mut self.buf_a);
        // ∂u spectrum into buf_b, ∂v spectrum stays in buf_a.
        for i in 0..n {
            let ku = wavenumber(i, n);
            for j in 0..n {
                let kv = wavenumber(j, n);
                let idx = i * n + j;
                let hat = self.buf_a[idx];
                self.buf_b[idx] = hat * Complex64::new(0.0, ku);
                self.buf_a[idx] = hat * Complex64::new(0.0, kv);
            }
        }
        let mut du = std::mem::take(&mut self.buf_b);
        self.fft.inverse(&mut du);
        let gu: Vec<f64> = du.iter().map(|z| z.re).collect();
        self.buf_b = du;
        self.fft.inverse(&mut self.buf_a);
        let gv: Vec<f64> = self.buf_a.iter().map(|z| z.re).collect();
        (gu, gv)
    }

    /// Spectral divergence ∂u p + ∂v q of a real periodic vector field.
    pub fn divergence(&mut self, p: &[f64], q: &[f64]) -> Vec<f64> {
        let n = self.n;
        self.load(p);
        self.fft.forward(&mut self.buf_a);
        std::mem::swap(&mut self.buf_a, &mut self.buf_b); // p̂ in buf_b
        self.load(q);
        self.fft.forward(&mut self.buf_a); // q̂ in buf_a
        for i in 0..n {
            let ku = wavenumber(i, n);
            for j in 0..n {
                let kv = wavenumber(j, n);
                let idx = i * n + j;
                self.buf_a[idx] = self.buf_b[idx] * Complex64::new(0.0, ku)
                    + self.buf_a[idx] * Complex64::new(0.0, kv);
            }
        }
        let mut out = std::mem::take(&mut self.buf_a);
        self.fft.inverse(&mut out);
        let div: Vec<f64> = out.iter().map(|z| z.re).collect();
        self.buf_a = out;
        div
    }

    /// Apply the positive operator φ ↦ −div(A ∇φ).
    fn apply(&mut self, a: &CoefficientField, x: &[f64]) -> Vec<f64> {
        let (gu, gv) = self.gradient(x);
        let mut p = vec![0.0; x.len()];
        let mut q = vec![0.0; x.len()];
        for idx in 0..x.len() {
            p[idx] = a.a11[idx] * gu[idx] + a.a12[idx] * gv[idx];
            q[idx] = a.a12[idx] * gu[idx] + a.a22[idx] * gv[idx];
        }
        let div = self.divergence(&p, &q);
        div.iter().map(|d| -d).collect()
    }

    /// Apply the inverse of the averaged-coefficient operator.
    fn preconditioner(&mut self, mean: (f64, f64, f64), r: &[f64]) -> Vec<f64> {
        let n = self.n;
        let (m11, m12, m22) = mean;
        self.load(r);
        self.fft.forward(&mut self.buf_a);
        for i in 0..n {
            let ku = wavenumber(i, n);
            for j in 0..n {
                let kv = wavenumber(j, n);
                let idx = i * n + j;
                let sym = m11 * ku * ku + 2.0 * m12 * ku * kv + m22 * kv * kv;
                if sym > 0.0 {
                    self.buf_a[idx] /= sym;
                } else {
                    self.buf_a[idx] = Complex64::default();
                }
            }
        }
        let mut out = std::mem::take(&mut self.buf_a);
        self.fft.inverse(&mut out);
        let z: Vec<f64> = out.iter().map(|w| w.re).collect();
        self.buf_a = out;
        z
    }

    /// Solve −div(A ∇φ) = rhs on mean-zero fields with preconditioned CG.
    pub fn solve_div_form(
        &mut self,
        a: &CoefficientField,
        rhs: &[f64],
        warm_start: Option<&[f64]>,
        tol: f64,
        max_iters: usize,
    ) -> Result<SolveInfo> {
        let total = self.n * self.n;
        assert_eq!(rhs.len(), total);
        let mean = (grid_mean(&a.a11), grid_mean(&a.a12), grid_mean(&a.a22));

        let mut b = rhs.to_vec();
        let b_mean = grid_mean(&b);
        for v in &mut b {
            *v -= b_mean;
        }
        let b_norm = pairwise_sum(&b.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
        if b_norm == 0.0 {
            return Ok(SolveInfo { x: vec![0.0; total], residual: 0.0, iterations: 0 });
        }
        // Absolute floor: rhs at round-off scale (flat metrics) cannot be
        // reduced by the relative factor.
        let target = (tol * b_norm).max(1e-14 * (1.0 + b_norm));

        let mut x = match warm_start {
            Some(w) if w.len() == total => {
                let mut x = w.to_vec();
                let m = grid_mean(&x);
                for v in &mut x {
                    *v -= m;
                }
                x
            }
            _ => vec![0.0; total],
        };

        let ax = self.apply(a, &x);
        let mut r: Vec<f64> = b.iter().zip(ax.iter()).map(|(bi, ai)| bi - ai).collect();
        let mut res_norm =
            pairwise_sum(&r.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
        if res_norm <= target {
            return Ok(SolveInfo { x, residual: res_norm, iterations: 0 });
        }

        let mut z = self.preconditioner(mean, &r);
        let mut p = z.clone();
        let mut rz = pairwise_sum(&r.iter().zip(z.iter()).map(|(a, b)| a * b).collect::<Vec<_>>());

        for iter in 1..=max_iters {
            let ap = self.apply(a, &p);
            let pap =
                pairwise_sum(&p.iter().zip(ap.iter()).map(|(a, b)| a * b).collect::<Vec<_>>());
            if !(pap > 0.0) {
                // Round-off exhausted the Krylov space; accept if the
                // residual already sits at machine scale.
                if res_norm <= 1e-12 * (1.0 + b_norm) {
                    let m = grid_mean(&x);
                    for v in &mut x {
                        *v -= m;
                    }
                    return Ok(SolveInfo { x, residual: res_norm, iterations: iter });
                }
                return Err(Error::SolverDiverged {
                    what: "harmonic-form CG (operator lost positivity)",
                    iters: iter,
                    residual: res_norm,
                });
            }
            let alpha = rz / pap;
            for idx in 0..total {
                x[idx] += alpha * p[idx];
                r[idx] -= alpha * ap[idx];
            }
            res_norm = pairwise_sum(&r.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
            if res_norm <= target {
                let m = grid_mean(&x);
                for v in &mut x {
                    *v -= m;
                }
                return Ok(SolveInfo { x, residual: res_norm, iterations: iter });
            }
            z = self.preconditioner(mean, &r);
            let rz_new =
                pairwise_sum(&r.iter().zip(z.iter()).map(|(a, b)| a * b).collect::<Vec<_>>());
            let beta = rz_new / rz;
            rz = rz_new;
            for idx in 0..total {
                p[idx] = z[idx] + beta * p[idx];
            }
        }
        Err(Error::SolverDiverged {
            what: "harmonic-form CG",
            iters: max_iters,
            residual: res_norm / b_norm,
        })
    }
}
