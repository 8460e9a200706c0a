//! Doubly periodic Fourier modes on the torus.
//!
//! The space of doubly periodic functions splits into the constants and the
//! four-dimensional spaces A_{k,l} spanned, in phase coordinates
//! (θ₁, θ₂) ∈ [0, 2π)², by
//!
//! ```text
//! sin(kθ₁)cos(lθ₂), cos(kθ₁)sin(lθ₂), cos(kθ₁)cos(lθ₂), sin(kθ₁)sin(lθ₂).
//! ```
//!
//! On the square torus the phases are θ = √2·(x, y); on a homogeneous torus
//! of class b they are θ = (x/r, y/s). Mapping a mode between the two charts
//! by keeping its coefficients is the canonical isomorphism A_{k,l}(T²₁) ≅
//! A_{k,l}(T²_b); see [`FourierMode::eval_chart`].
//!
//! Coefficients are named `c_sc`, `c_cs`, `c_cc`, `c_ss` after the basis
//! order above (the spelled-out letters avoid clashing with the conformal
//! coordinates a, b). Differentiation acts exactly on coefficients, which is
//! what the symbolic second-variation checks rely on.

use crate::error::{Error, Result};

/// An element of A_{k,l}: four coefficients over the trigonometric basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierMode {
    pub k: u32,
    pub l: u32,
    pub c_sc: f64,
    pub c_cs: f64,
    pub c_cc: f64,
    pub c_ss: f64,
}

impl FourierMode {
    /// Build a mode, zeroing the basis slots that vanish identically when
    /// k = 0 or l = 0 (sin(0·θ) ≡ 0 kills `sc`/`ss` resp. `cs`/`ss`).
    pub fn new(k: u32, l: u32, coeffs: [f64; 4]) -> Result<Self> {
        if k == 0 && l == 0 {
            return Err(Error::Domain("mode (0,0) is the constant space".into()));
        }
        let [mut sc, mut cs, cc, mut ss] = coeffs;
        if k == 0 {
            sc = 0.0;
            ss = 0.0;
        }
        if l == 0 {
            cs = 0.0;
            ss = 0.0;
        }
        Ok(Self { k, l, c_sc: sc, c_cs: cs, c_cc: cc, c_ss: ss })
    }

    pub fn coeffs(&self) -> [f64; 4] {
        [self.c_sc, self.c_cs, self.c_cc, self.c_ss]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs().iter().all(|c| *c == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            c_sc: self.c_sc * factor,
            c_cs: self.c_cs * factor,
            c_cc: self.c_cc * factor,
            c_ss: self.c_ss * factor,
            ..*self
        }
    }

    /// Evaluate at phase coordinates (θ₁, θ₂).
    pub fn eval_phases(&self, theta1: f64, theta2: f64) -> f64 {
        let (s1, c1) = (self.k as f64 * theta1).sin_cos();
        let (s2, c2) = (self.l as f64 * theta2).sin_cos();
        self.c_sc * s1 * c2 + self.c_cs * c1 * s2 + self.c_cc * c1 * c2 + self.c_ss * s1 * s2
    }

    /// Evaluate on the chart of the homogeneous torus of class b, where the
    /// phases are (x/r, y/s). At b = 1 this reproduces the √2-frequency
    /// functions of the square torus.
    pub fn eval_chart(&self, b: f64, x: f64, y: f64) -> f64 {
        let r = 1.0 / (1.0 + b * b).sqrt();
        let s = b * r;
        self.eval_phases(x / r, y / s)
    }

    /// ∂/∂θ₁ acting on coefficients.
    pub fn d_theta1(&self) -> Self {
        let k = self.k as f64;
        Self {
            c_sc: -k * self.c_cc,
            c_cs: k * self.c_ss,
            c_cc: k * self.c_sc,
            c_ss: -k * self.c_cs,
            ..*self
        }
    }

    /// ∂/∂θ₂ acting on coefficients.
    pub fn d_theta2(&self) -> Self {
        let l = self.l as f64;
        Self {
            c_sc: l * self.c_ss,
            c_cs: -l * self.c_cc,
            c_cc: l * self.c_cs,
            c_ss: -l * self.c_sc,
            ..*self
        }
    }

    /// Mixed derivative ∂²/∂θ₁∂θ₂ acting on coefficients.
    pub fn d_theta12(&self) -> Self {
        self.d_theta1().d_theta2()
    }

    /// Phase-coordinate Laplacian: −(k² + l²) · mode.
    pub fn laplacian_theta(&self) -> Self {
        let n = (self.k * self.k + self.l * self.l) as f64;
        self.scaled(-n)
    }

    /// L² norm squared ∫ Φ² dx dy over the chart of the homogeneous torus of
    /// class b (flat measure, total area 4π²rs).
    ///
    /// Each active basis function has mean square 1/4 when k, l ≥ 1 and 1/2
    /// when exactly one index vanishes (one trigonometric factor collapses
    /// to a constant).
    pub fn l2_norm_sq(&self, b: f64) -> f64 {
        let r2s2 = b / (1.0 + b * b); // r·s
        let area = 4.0 * std::f64::consts::PI.powi(2) * r2s2;
        let mean_sq = if self.k >= 1 && self.l >= 1 { 0.25 } else { 0.5 };
        let sum: f64 = self.coeffs().iter().map(|c| c * c).sum();
        area * mean_sq * sum
    }

    /// Ratio (2·c_sc·c_cs − 2·c_cc·c_ss) / Σc², the alignment factor that
    /// scales the second variation of Π¹ between its extremes ±1.
    pub fn pi1_alignment(&self) -> f64 {
        let sum: f64 = self.coeffs().iter().map(|c| c * c).sum();
        if sum == 0.0 {
            return 0.0;
        }
        2.0 * (self.c_sc * self.c_cs - self.c_cc * self.c_ss) / sum
    }
}

/// Harmonic addition: c₁·sin θ + c₂·cos θ = d₁·sin(θ + d₂) with d₁ > 0.
pub fn combine_phases(c1: f64, c2: f64) -> Result<(f64, f64)> {
    if c1 == 0.0 && c2 == 0.0 {
        return Err(Error::ZeroAmplitude);
    }
    Ok((c1.hypot(c2), c2.atan2(c1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn boundary_modes_zero_inactive_slots() {
        let m = FourierMode::new(0, 2, [1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.coeffs(), [0.0, 2.0, 3.0, 0.0]);
        let m = FourierMode::new(2, 0, [1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.coeffs(), [1.0, 0.0, 3.0, 0.0]);
        assert!(FourierMode::new(0, 0, [1.0; 4]).is_err());
    }

    #[test]
    fn kernel_mode_is_plane_wave_on_square_chart() {
        // sin(√2x)cos(2√2y) + cos(√2x)sin(2√2y) = sin(√2(x + 2y))
        let m = FourierMode::new(1, 2, [1.0, 1.0, 0.0, 0.0]).unwrap();
        for i in 0..17 {
            for j in 0..13 {
                let x = i as f64 * 0.37;
                let y = j as f64 * 0.53;
                let expect = ((2.0f64).sqrt() * (x + 2.0 * y)).sin();
                assert!((m.eval_chart(1.0, x, y) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chart_transfer_keeps_coefficients() {
        // (1,2) with coefficients (1,1,0,0) on class b: sin(x/r + 2y/s).
        let b: f64 = 1.1;
        let r = 1.0 / (1.0 + b * b).sqrt();
        let s = b * r;
        let m = FourierMode::new(1, 2, [1.0, 1.0, 0.0, 0.0]).unwrap();
        for i in 0..11 {
            for j in 0..11 {
                let x = i as f64 * 0.41;
                let y = j as f64 * 0.29;
                let expect = (x / r + 2.0 * y / s).sin();
                assert!((m.eval_chart(b, x, y) - expect).abs() < 1e-12);
            }
        }
        // (2,1): sin(2x/r + y/s).
        let m = FourierMode::new(2, 1, [1.0, 1.0, 0.0, 0.0]).unwrap();
        let expect = (2.0 * 0.3 / r + 0.7 / s).sin();
        assert!((m.eval_chart(b, 0.3, 0.7) - expect).abs() < 1e-12);
    }

    #[test]
    fn derivative_coefficients_match_finite_differences() {
        let m = FourierMode::new(2, 3, [0.3, -0.7, 1.1, 0.5]).unwrap();
        let h = 1e-6;
        let (t1, t2) = (0.731, -0.317);
        let d1 = m.d_theta1();
        let fd1 = (m.eval_phases(t1 + h, t2) - m.eval_phases(t1 - h, t2)) / (2.0 * h);
        assert!((d1.eval_phases(t1, t2) - fd1).abs() < 1e-7);
        let d12 = m.d_theta12();
        let fd12 = (m.d_theta2().eval_phases(t1 + h, t2) - m.d_theta2().eval_phases(t1 - h, t2))
            / (2.0 * h);
        assert!((d12.eval_phases(t1, t2) - fd12).abs() < 1e-6);
    }

    #[test]
    fn norm_on_square_torus() {
        // ⟨φ, φ⟩ = (π²/2)·Σc² for interior modes at b = 1.
        let m = FourierMode::new(1, 2, [1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((m.l2_norm_sq(1.0) - PI * PI).abs() < 1e-12);
        // Boundary mode: one active trig factor, mean square 1/2.
        let m = FourierMode::new(0, 1, [0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((m.l2_norm_sq(1.0) - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn combine_phases_examples() {
        assert_eq!(combine_phases(1.0, 0.0).unwrap(), (1.0, 0.0));
        let (d1, d2) = combine_phases(0.0, 1.0).unwrap();
        assert_eq!(d1, 1.0);
        assert!((d2 - PI / 2.0).abs() < 1e-15);
        let (d1, d2) = combine_phases(3.0, 4.0).unwrap();
        assert_eq!(d1, 5.0);
        assert!((d2 - (4.0f64).atan2(3.0)).abs() < 1e-15);
        assert!(matches!(combine_phases(0.0, 0.0), Err(Error::ZeroAmplitude)));
    }

    proptest! {
        #[test]
        fn combine_phases_identity_on_grid(
            c1 in -5.0..5.0f64,
            c2 in -5.0..5.0f64,
        ) {
            prop_assume!(c1 * c1 + c2 * c2 > 1e-6);
            let (d1, d2) = combine_phases(c1, c2).unwrap();
            prop_assert!(d1 > 0.0);
            for i in 0..64 {
                let theta = 2.0 * PI * i as f64 / 64.0;
                let lhs = c1 * theta.sin() + c2 * theta.cos();
                let rhs = d1 * (theta + d2).sin();
                prop_assert!((lhs - rhs).abs() < 1e-12 * d1.max(1.0));
            }
        }

        #[test]
        fn mixed_derivative_commutes(
            k in 1u32..5,
            l in 1u32..5,
            a in -2.0..2.0f64,
            b in -2.0..2.0f64,
            c in -2.0..2.0f64,
            d in -2.0..2.0f64,
        ) {
            let m = FourierMode::new(k, l, [a, b, c, d]).unwrap();
            let once = m.d_theta1().d_theta2();
            let other = m.d_theta2().d_theta1();
            prop_assert_eq!(once.coeffs(), other.coeffs());
        }
    }
}
