//! Jet evaluation for immersed tori.
//!
//! Every surface here is parametrized over the unit square (u, v) ∈ [0,1)²
//! along the generators of its domain lattice. For the analytic kinds the
//! two circle phases are exactly 2π(u, v) by construction of the period
//! lattice, so the point map and all derivatives are closed-form:
//!
//! ```text
//! F(u, v) = cos(Φ)·P + sin(Φ)·N,   P = (r e^{2πiu}, s e^{2πiv}),
//!                                  N = (−s e^{2πiu}, r e^{2πiv}),
//! ```
//!
//! with Φ a trigonometric mode sum (Φ ≡ 0 for the unperturbed tori).
//! Grid-sampled surfaces get 4th-order centered periodic finite differences
//! instead. Both paths produce a [`JetGrid`] (point + first and second
//! (u,v)-derivatives), which is then pushed through the constant lattice
//! Jacobian to the plane chart where the fundamental forms are read off.

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::modes::FourierMode;
use crate::Complex64;

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Product-torus chart data: circle radii and the domain lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductChart {
    pub r: f64,
    pub s: f64,
    pub lattice: Lattice,
}

impl ProductChart {
    /// Chart of the homogeneous torus f^b on 2πr ℤ ⊕ 2πs i ℤ.
    pub fn homogeneous(b: f64) -> Result<Self> {
        let (r, s) = radii(b)?;
        Ok(Self { r, s, lattice: Lattice::rectangular(TWO_PI * r, TWO_PI * s) })
    }

    /// Chart of the (1,2)-equivariant parametrization
    /// (x, y) ↦ (r e^{i(y + 2(s/r)x)}, s e^{i(2y − (r/s)x)}).
    ///
    /// Its period lattice is the preimage of 2πℤ² under the phase map,
    /// spanned by 2π(2rs + ir²)/(r² + 4s²) and 2π(−rs + 2is²)/(r² + 4s²);
    /// the modulus of that lattice is exactly ib, the class of T²_b.
    pub fn equivariant12(b: f64) -> Result<Self> {
        let (r, s) = radii(b)?;
        let denom = r * r + 4.0 * s * s;
        let g1 = Complex64::new(2.0 * r * s, r * r) * (TWO_PI / denom);
        let g2 = Complex64::new(-r * s, 2.0 * s * s) * (TWO_PI / denom);
        Ok(Self { r, s, lattice: Lattice::new(g1, g2) })
    }
}

/// r = 1/√(1+b²), s = b·r, so that r² + s² = 1 and s/r = b.
pub fn radii(b: f64) -> Result<(f64, f64)> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!("aspect ratio b must be > 0, got {b}")));
    }
    let r = 1.0 / (1.0 + b * b).sqrt();
    Ok((r, b * r))
}

// ---------------------------------------------------------------------------
// Scalar jets of mode sums
// ---------------------------------------------------------------------------

/// A scalar field with first and second derivatives in (u, v) on an n×n grid.
#[derive(Debug, Clone)]
pub struct ScalarJet {
    pub n: usize,
    pub phi: Vec<f64>,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    pub duu: Vec<f64>,
    pub duv: Vec<f64>,
    pub dvv: Vec<f64>,
}

impl ScalarJet {
    pub fn zeros(n: usize) -> Self {
        let z = vec![0.0; n * n];
        Self { n, phi: z.clone(), du: z.clone(), dv: z.clone(), duu: z.clone(), duv: z.clone(), dvv: z }
    }

    /// self += factor · other (all six fields).
    pub fn add_scaled(&mut self, other: &ScalarJet, factor: f64) {
        debug_assert_eq!(self.n, other.n);
        for (dst, src) in [
            (&mut self.phi, &other.phi),
            (&mut self.du, &other.du),
            (&mut self.dv, &other.dv),
            (&mut self.duu, &other.duu),
            (&mut self.duv, &other.duv),
            (&mut self.dvv, &other.dvv),
        ] {
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d += factor * s;
            }
        }
    }
}

/// Sine/cosine tables sin(2πk·i/n), cos(2πk·i/n) for k = 0..=k_max.
struct TrigTables {
    n: usize,
    k_max: u32,
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl TrigTables {
    fn new(n: usize, k_max: u32) -> Self {
        let rows = (k_max + 1) as usize;
        let mut sin = vec![0.0; rows * n];
        let mut cos = vec![0.0; rows * n];
        for k in 0..rows {
            for i in 0..n {
                let (s, c) = (TWO_PI * k as f64 * i as f64 / n as f64).sin_cos();
                sin[k * n + i] = s;
                cos[k * n + i] = c;
            }
        }
        Self { n, k_max: k_max as u32, sin, cos }
    }

    #[inline]
    fn sk(&self, k: u32, i: usize) -> f64 {
        self.sin[k as usize * self.n + i]
    }

    #[inline]
    fn ck(&self, k: u32, i: usize) -> f64 {
        self.cos[k as usize * self.n + i]
    }
}

/// Sample the (u,v)-jet of a mode sum on the n×n grid. Phase derivatives
/// carry the 2π chart factor per order.
pub fn mode_sum_jet(modes: &[FourierMode], n: usize) -> ScalarJet {
    let mut jet = ScalarJet::zeros(n);
    let k_max = modes.iter().map(|m| m.k.max(m.l)).max().unwrap_or(0);
    let tables = TrigTables::new(n, k_max);
    debug_assert!(tables.k_max >= k_max);
    for m in modes {
        if m.is_zero() {
            continue;
        }
        let [a, b, c, d] = m.coeffs();
        let (kf, lf) = (m.k as f64, m.l as f64);
        for i in 0..n {
            let (s1, c1) = (tables.sk(m.k, i), tables.ck(m.k, i));
            let row = i * n;
            for j in 0..n {
                let (s2, c2) = (tables.sk(m.l, j), tables.ck(m.l, j));
                let b_sc = s1 * c2;
                let b_cs = c1 * s2;
                let b_cc = c1 * c2;
                let b_ss = s1 * s2;
                let val = a * b_sc + b * b_cs + c * b_cc + d * b_ss;
                let idx = row + j;
                jet.phi[idx] += val;
                jet.du[idx] += TWO_PI * kf * (a * b_cc - b * b_ss - c * b_sc + d * b_cs);
                jet.dv[idx] += TWO_PI * lf * (-a * b_ss + b * b_cc - c * b_cs + d * b_sc);
                jet.duu[idx] += -(TWO_PI * kf).powi(2) * val;
                jet.dvv[idx] += -(TWO_PI * lf).powi(2) * val;
                jet.duv[idx] +=
                    TWO_PI * TWO_PI * kf * lf * (-a * b_cs - b * b_sc + c * b_ss + d * b_cc);
            }
        }
    }
    jet
}

/// Plain values of a mode sum on the n×n grid (no derivatives).
pub fn mode_sum_values(modes: &[FourierMode], n: usize) -> Vec<f64> {
    let k_max = modes.iter().map(|m| m.k.max(m.l)).max().unwrap_or(0);
    let tables = TrigTables::new(n, k_max);
    let mut out = vec![0.0; n * n];
    for m in modes {
        if m.is_zero() {
            continue;
        }
        let [a, b, c, d] = m.coeffs();
        for i in 0..n {
            let (s1, c1) = (tables.sk(m.k, i), tables.ck(m.k, i));
            for j in 0..n {
                let (s2, c2) = (tables.sk(m.l, j), tables.ck(m.l, j));
                out[i * n + j] += a * s1 * c2 + b * c1 * s2 + c * c1 * c2 + d * s1 * s2;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Point jets
// ---------------------------------------------------------------------------

pub type Vec4 = [f64; 4];

#[inline]
fn axpy4(acc: &mut Vec4, factor: f64, v: &Vec4) {
    for i in 0..4 {
        acc[i] += factor * v[i];
    }
}

#[inline]
pub fn dot4(a: &Vec4, b: &Vec4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
pub fn norm4(a: &Vec4) -> f64 {
    dot4(a, a).sqrt()
}

/// Generalized cross product in ℝ⁴ (Hodge dual of a∧b∧c), with the sign
/// convention that for the product torus cross4(f, f_x, f_y) equals the
/// chosen unit normal (−s e^{iθ₁}, r e^{iθ₂}).
pub fn cross4(a: &Vec4, b: &Vec4, c: &Vec4) -> Vec4 {
    let det3 = |c0: usize, c1: usize, c2: usize| -> f64 {
        a[c0] * (b[c1] * c[c2] - b[c2] * c[c1]) - a[c1] * (b[c0] * c[c2] - b[c2] * c[c0])
            + a[c2] * (b[c0] * c[c1] - b[c1] * c[c0])
    };
    [det3(1, 2, 3), -det3(0, 2, 3), det3(0, 1, 3), -det3(0, 1, 2)]
}

/// Point + derivative grids of an immersion in (u, v) coordinates.
#[derive(Debug, Clone)]
pub struct JetGrid {
    pub n: usize,
    pub f: Vec<Vec4>,
    pub fu: Vec<Vec4>,
    pub fv: Vec<Vec4>,
    pub fuu: Vec<Vec4>,
    pub fuv: Vec<Vec4>,
    pub fvv: Vec<Vec4>,
}

/// Analytic jet of cos(Φ)P + sin(Φ)N on the n×n grid; `phi = None` gives the
/// unperturbed product torus.
pub fn analytic_jet(chart: &ProductChart, phi: Option<&ScalarJet>, n: usize) -> JetGrid {
    if let Some(jet) = phi {
        assert_eq!(jet.n, n, "scalar jet grid must match requested grid");
    }
    let (r, s) = (chart.r, chart.s);
    let total = n * n;
    let mut out = JetGrid {
        n,
        f: vec![[0.0; 4]; total],
        fu: vec![[0.0; 4]; total],
        fv: vec![[0.0; 4]; total],
        fuu: vec![[0.0; 4]; total],
        fuv: vec![[0.0; 4]; total],
        fvv: vec![[0.0; 4]; total],
    };
    let w = TWO_PI;
    for i in 0..n {
        let (s1, c1) = (w * i as f64 / n as f64).sin_cos();
        for j in 0..n {
            let (s2, c2) = (w * j as f64 / n as f64).sin_cos();
            let idx = i * n + j;

            let p: Vec4 = [r * c1, r * s1, s * c2, s * s2];
            let nh: Vec4 = [-s * c1, -s * s1, r * c2, r * s2];
            let pu: Vec4 = [-w * r * s1, w * r * c1, 0.0, 0.0];
            let pv: Vec4 = [0.0, 0.0, -w * s * s2, w * s * c2];
            // Weingarten of the product torus: N_u = −(s/r)P_u, N_v = (r/s)P_v.
            let nu: Vec4 = [w * s * s1, -w * s * c1, 0.0, 0.0];
            let nv: Vec4 = [0.0, 0.0, -w * r * s2, w * r * c2];
            let w2 = w * w;
            let puu: Vec4 = [-w2 * p[0], -w2 * p[1], 0.0, 0.0];
            let pvv: Vec4 = [0.0, 0.0, -w2 * p[2], -w2 * p[3]];
            let nuu: Vec4 = [-w2 * nh[0], -w2 * nh[1], 0.0, 0.0];
            let nvv: Vec4 = [0.0, 0.0, -w2 * nh[2], -w2 * nh[3]];

            match phi {
                None => {
                    out.f[idx] = p;
                    out.fu[idx] = pu;
                    out.fv[idx] = pv;
                    out.fuu[idx] = puu;
                    out.fvv[idx] = pvv;
                    // fuv stays zero
                }
                Some(jet) => {
                    let (ph, pu1, pv1) = (jet.phi[idx], jet.du[idx], jet.dv[idx]);
                    let (puu1, puv1, pvv1) = (jet.duu[idx], jet.duv[idx], jet.dvv[idx]);
                    let (sf, cf) = ph.sin_cos();

                    let mut f = [0.0; 4];
                    axpy4(&mut f, cf, &p);
                    axpy4(&mut f, sf, &nh);
                    out.f[idx] = f;

                    // F_u = (−sinΦ Φ_u)P + cosΦ P_u + (cosΦ Φ_u)N + sinΦ N_u
                    let mut fu = [0.0; 4];
                    axpy4(&mut fu, -sf * pu1, &p);
                    axpy4(&mut fu, cf, &pu);
                    axpy4(&mut fu, cf * pu1, &nh);
                    axpy4(&mut fu, sf, &nu);
                    out.fu[idx] = fu;

                    let mut fv = [0.0; 4];
                    axpy4(&mut fv, -sf * pv1, &p);
                    axpy4(&mut fv, cf, &pv);
                    axpy4(&mut fv, cf * pv1, &nh);
                    axpy4(&mut fv, sf, &nv);
                    out.fv[idx] = fv;

                    // F_ab = (−cosΦ Φ_aΦ_b − sinΦ Φ_ab)P − sinΦ(Φ_a P_b + Φ_b P_a) + cosΦ P_ab
                    //      + (−sinΦ Φ_aΦ_b + cosΦ Φ_ab)N + cosΦ(Φ_a N_b + Φ_b N_a) + sinΦ N_ab
                    let mut fuu = [0.0; 4];
                    axpy4(&mut fuu, -cf * pu1 * pu1 - sf * puu1, &p);
                    axpy4(&mut fuu, -2.0 * sf * pu1, &pu);
                    axpy4(&mut fuu, cf, &puu);
                    axpy4(&mut fuu, -sf * pu1 * pu1 + cf * puu1, &nh);
                    axpy4(&mut fuu, 2.0 * cf * pu1, &nu);
                    axpy4(&mut fuu, sf, &nuu);
                    out.fuu[idx] = fuu;

                    let mut fvv = [0.0; 4];
                    axpy4(&mut fvv, -cf * pv1 * pv1 - sf * pvv1, &p);
                    axpy4(&mut fvv, -2.0 * sf * pv1, &pv);
                    axpy4(&mut fvv, cf, &pvv);
                    axpy4(&mut fvv, -sf * pv1 * pv1 + cf * pvv1, &nh);
                    axpy4(&mut fvv, 2.0 * cf * pv1, &nv);
                    axpy4(&mut fvv, sf, &nvv);
                    out.fvv[idx] = fvv;

                    let mut fuv = [0.0; 4];
                    axpy4(&mut fuv, -cf * pu1 * pv1 - sf * puv1, &p);
                    axpy4(&mut fuv, -sf * pu1, &pv);
                    axpy4(&mut fuv, -sf * pv1, &pu);
                    axpy4(&mut fuv, -sf * pu1 * pv1 + cf * puv1, &nh);
                    axpy4(&mut fuv, cf * pu1, &nv);
                    axpy4(&mut fuv, cf * pv1, &nu);
                    out.fuv[idx] = fuv;
                }
            }
        }
    }
    out
}

/// 4th-order centered periodic finite-difference jet of a sampled grid.
pub fn finite_difference_jet(points: &[Vec4], n: usize) -> JetGrid {
    assert_eq!(points.len(), n * n);
    assert!(n >= 5, "finite-difference stencils need n ≥ 5");
    let h = 1.0 / n as f64;
    let idx = |i: isize, j: isize| -> usize {
        let ii = i.rem_euclid(n as isize) as usize;
        let jj = j.rem_euclid(n as isize) as usize;
        ii * n + jj
    };
    let d1 = |get: &dyn Fn(isize) -> Vec4| -> Vec4 {
        let (m2, m1, p1, p2) = (get(-2), get(-1), get(1), get(2));
        let mut out = [0.0; 4];
        for c in 0..4 {
            out[c] = (m2[c] - p2[c] + 8.0 * (p1[c] - m1[c])) / (12.0 * h);
        }
        out
    };
    let d2 = |get: &dyn Fn(isize) -> Vec4| -> Vec4 {
        let (m2, m1, z, p1, p2) = (get(-2), get(-1), get(0), get(1), get(2));
        let mut out = [0.0; 4];
        for c in 0..4 {
            out[c] = (-m2[c] - p2[c] + 16.0 * (m1[c] + p1[c]) - 30.0 * z[c]) / (12.0 * h * h);
        }
        out
    };

    let total = n * n;
    let mut fu = vec![[0.0; 4]; total];
    let mut fv = vec![[0.0; 4]; total];
    let mut fuu = vec![[0.0; 4]; total];
    let mut fvv = vec![[0.0; 4]; total];
    for i in 0..n as isize {
        for j in 0..n as isize {
            let at = idx(i, j);
            let along_u = |di: isize| points[idx(i + di, j)];
            let along_v = |dj: isize| points[idx(i, j + dj)];
            fu[at] = d1(&along_u);
            fv[at] = d1(&along_v);
            fuu[at] = d2(&along_u);
            fvv[at] = d2(&along_v);
        }
    }
    // Mixed derivative: v-derivative of the u-derivative field.
    let mut fuv = vec![[0.0; 4]; total];
    for i in 0..n as isize {
        for j in 0..n as isize {
            let along_v = |dj: isize| fu[idx(i, j + dj)];
            fuv[idx(i, j)] = d1(&along_v);
        }
    }
    JetGrid { n, f: points.to_vec(), fu, fv, fuu, fuv, fvv }
}

/// Inverse of the lattice Jacobian [[Re g₁, Re g₂], [Im g₁, Im g₂]].
pub fn inverse_lattice_jacobian(lat: &Lattice) -> [[f64; 2]; 2] {
    let j = [[lat.gen1.re, lat.gen2.re], [lat.gen1.im, lat.gen2.im]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]]
}

/// Transform a (u,v)-jet to first/second derivatives in the plane chart of
/// the lattice: ∂x = B₁₁∂u + B₂₁∂v, ∂y = B₁₂∂u + B₂₂∂v with B = J⁻¹.
pub fn jet_to_plane(jet: &JetGrid, lat: &Lattice) -> PlaneJet {
    let b = inverse_lattice_jacobian(lat);
    let (b11, b12, b21, b22) = (b[0][0], b[0][1], b[1][0], b[1][1]);
    let total = jet.n * jet.n;
    let mut out = PlaneJet {
        n: jet.n,
        f: jet.f.clone(),
        fx: vec![[0.0; 4]; total],
        fy: vec![[0.0; 4]; total],
        fxx: vec![[0.0; 4]; total],
        fxy: vec![[0.0; 4]; total],
        fyy: vec![[0.0; 4]; total],
    };
    for idx in 0..total {
        for c in 0..4 {
            let (fu, fv) = (jet.fu[idx][c], jet.fv[idx][c]);
            let (fuu, fuv, fvv) = (jet.fuu[idx][c], jet.fuv[idx][c], jet.fvv[idx][c]);
            out.fx[idx][c] = b11 * fu + b21 * fv;
            out.fy[idx][c] = b12 * fu + b22 * fv;
            out.fxx[idx][c] = b11 * b11 * fuu + 2.0 * b11 * b21 * fuv + b21 * b21 * fvv;
            out.fxy[idx][c] =
                b11 * b12 * fuu + (b11 * b22 + b12 * b21) * fuv + b21 * b22 * fvv;
            out.fyy[idx][c] = b12 * b12 * fuu + 2.0 * b12 * b22 * fuv + b22 * b22 * fvv;
        }
    }
    out
}

/// Plane-chart jet (derivatives with respect to the ℂ coordinates).
#[derive(Debug, Clone)]
pub struct PlaneJet {
    pub n: usize,
    pub f: Vec<Vec4>,
    pub fx: Vec<Vec4>,
    pub fy: Vec<Vec4>,
    pub fxx: Vec<Vec4>,
    pub fxy: Vec<Vec4>,
    pub fyy: Vec<Vec4>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross4_matches_product_torus_normal() {
        let (r, s) = radii(1.3).unwrap();
        for (t1, t2) in [(0.0, 0.0), (0.7, 1.9), (2.4, -0.3)] {
            let f = [r * f64::cos(t1), r * f64::sin(t1), s * f64::cos(t2), s * f64::sin(t2)];
            let fx = [-f64::sin(t1), f64::cos(t1), 0.0, 0.0];
            let fy = [0.0, 0.0, -f64::sin(t2), f64::cos(t2)];
            let n = cross4(&f, &fx, &fy);
            let expect = [-s * f64::cos(t1), -s * f64::sin(t1), r * f64::cos(t2), r * f64::sin(t2)];
            for c in 0..4 {
                assert!((n[c] - expect[c]).abs() < 1e-14, "component {c}");
            }
        }
    }

    #[test]
    fn equivariant_chart_phases_close_up() {
        // The phase map θ₁ = y + 2(s/r)x, θ₂ = 2y − (r/s)x must shift by
        // (2π, 0) along gen1 and (0, 2π) along gen2.
        let chart = ProductChart::equivariant12(1.07).unwrap();
        let (r, s) = (chart.r, chart.s);
        let phase = |z: Complex64| -> (f64, f64) {
            (z.im + 2.0 * (s / r) * z.re, 2.0 * z.im - (r / s) * z.re)
        };
        let (p1, p2) = phase(chart.lattice.gen1);
        assert!((p1 - TWO_PI).abs() < 1e-12 && p2.abs() < 1e-12);
        let (q1, q2) = phase(chart.lattice.gen2);
        assert!(q1.abs() < 1e-12 && (q2 - TWO_PI).abs() < 1e-12);
    }

    #[test]
    fn mode_jet_matches_pointwise_derivatives() {
        let m = FourierMode::new(2, 3, [0.4, -0.2, 0.9, 0.1]).unwrap();
        let n = 16;
        let jet = mode_sum_jet(&[m], n);
        let h = 1e-6;
        let eval = |u: f64, v: f64| m.eval_phases(TWO_PI * u, TWO_PI * v);
        for (i, j) in [(0, 0), (3, 7), (11, 2)] {
            let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
            let idx = i * n + j;
            assert!((jet.phi[idx] - eval(u, v)).abs() < 1e-13);
            let du = (eval(u + h, v) - eval(u - h, v)) / (2.0 * h);
            assert!((jet.du[idx] - du).abs() < 1e-5);
            let duv = (eval(u + h, v + h) - eval(u + h, v - h) - eval(u - h, v + h)
                + eval(u - h, v - h))
                / (4.0 * h * h);
            assert!((jet.duv[idx] - duv).abs() < 1e-3);
        }
    }

    #[test]
    fn analytic_and_fd_jets_agree_on_perturbed_surface() {
        let chart = ProductChart::homogeneous(1.1).unwrap();
        let m = FourierMode::new(1, 2, [0.05, 0.05, 0.0, 0.0]).unwrap();
        let n = 64;
        let phi = mode_sum_jet(&[m], n);
        let exact = analytic_jet(&chart, Some(&phi), n);
        let fd = finite_difference_jet(&exact.f, n);
        let mut worst: f64 = 0.0;
        for idx in 0..n * n {
            for c in 0..4 {
                worst = worst.max((exact.fu[idx][c] - fd.fu[idx][c]).abs());
                worst = worst.max((exact.fuv[idx][c] - fd.fuv[idx][c]).abs());
            }
        }
        // 4th-order stencil at n = 64; second derivatives of the 4π-frequency
        // factor dominate.
        assert!(worst < 2e-3, "worst jet disagreement {worst:.3e}");
    }
}
