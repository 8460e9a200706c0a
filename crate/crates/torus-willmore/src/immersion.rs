//! Parametrized tori in S³ and their differential geometry.
//!
//! Supported kinds:
//! - homogeneous product torus f^b (x, y) ↦ (r e^{ix/r}, s e^{iy/s}),
//! - the (1,2)-equivariant reparametrization of the same image,
//! - normal-graph perturbations cos(Φ)f + sin(Φ)n of the two above along a
//!   trigonometric mode sum (exact jets),
//! - raw grid samples (4th-order finite-difference jets).
//!
//! The unit normal is the S³-tangent field fixed to (−s e^{ix/r}, r e^{iy/s})
//! on product tori; curvature data is taken with respect to it. The Gauss
//! curvature uses the ambient Gauss equation K = det II / det g + 1.

use crate::error::{Error, Result};
use crate::geometry::{
    self, analytic_jet, cross4, dot4, finite_difference_jet, jet_to_plane, mode_sum_jet,
    mode_sum_values, norm4, JetGrid, PlaneJet, ProductChart, Vec4,
};
use crate::lattice::Lattice;
use crate::modes::FourierMode;
use crate::quadrature::{pairwise_sum, periodic_trapezoid};

/// Default sampling resolution for grid evaluations.
pub const DEFAULT_GRID: usize = 128;

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Analytic {
        chart: ProductChart,
        base: BaseKind,
        /// Normal offset field Φ; empty for the unperturbed torus.
        modes: Vec<FourierMode>,
    },
    Grid(GridData),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BaseKind {
    Homogeneous,
    Equivariant12,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    pub n: usize,
    pub lattice: Lattice,
    pub points: Vec<Vec4>,
}

/// A doubly periodic immersion T² → S³ ⊂ ℝ⁴.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusImmersion {
    repr: Repr,
}

/// The homogeneous torus of aspect ratio b = s/r, r² + s² = 1, on the
/// lattice 2πr ℤ ⊕ 2πs i ℤ. b = 1 is the Clifford torus.
pub fn homogeneous_torus(b: f64) -> Result<TorusImmersion> {
    Ok(TorusImmersion {
        repr: Repr::Analytic {
            chart: ProductChart::homogeneous(b)?,
            base: BaseKind::Homogeneous,
            modes: Vec::new(),
        },
    })
}

/// The (1,2)-equivariant parametrization of the same product torus,
/// (x, y) ↦ (r e^{i(y + 2(s/r)x)}, s e^{i(2y − (r/s)x)}), on its true period
/// lattice. Same image set as [`homogeneous_torus`], different marking
/// machinery exercised.
pub fn equivariant_12_torus(b: f64) -> Result<TorusImmersion> {
    Ok(TorusImmersion {
        repr: Repr::Analytic {
            chart: ProductChart::equivariant12(b)?,
            base: BaseKind::Equivariant12,
            modes: Vec::new(),
        },
    })
}

impl TorusImmersion {
    pub fn from_grid(grid: GridData) -> Result<Self> {
        if grid.points.len() != grid.n * grid.n {
            return Err(Error::GridMismatch { expected: grid.n * grid.n, got: grid.points.len() });
        }
        Ok(Self { repr: Repr::Grid(grid) })
    }

    /// Domain lattice of the parametrization.
    pub fn domain_lattice(&self) -> Lattice {
        match &self.repr {
            Repr::Analytic { chart, .. } => chart.lattice,
            Repr::Grid(g) => g.lattice,
        }
    }

    /// Aspect ratio b of the underlying product torus, when analytic.
    pub fn aspect_ratio(&self) -> Option<f64> {
        match &self.repr {
            Repr::Analytic { chart, .. } => Some(chart.s / chart.r),
            Repr::Grid(_) => None,
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.repr, Repr::Grid(_))
    }

    /// Normal-offset mode sum of a perturbed analytic surface (empty when
    /// unperturbed).
    pub fn perturbation_modes(&self) -> &[FourierMode] {
        match &self.repr {
            Repr::Analytic { modes, .. } => modes,
            Repr::Grid(_) => &[],
        }
    }

    /// Evaluate at lattice coordinates (u, v) ∈ [0,1)². Grid surfaces only
    /// support their own nodes.
    pub fn evaluate(&self, u: f64, v: f64) -> Result<Vec4> {
        match &self.repr {
            Repr::Analytic { chart, modes, .. } => {
                let theta1 = geometry::TWO_PI * u;
                let theta2 = geometry::TWO_PI * v;
                let (r, s) = (chart.r, chart.s);
                let p: Vec4 = [
                    r * theta1.cos(),
                    r * theta1.sin(),
                    s * theta2.cos(),
                    s * theta2.sin(),
                ];
                let nh: Vec4 = [
                    -s * theta1.cos(),
                    -s * theta1.sin(),
                    r * theta2.cos(),
                    r * theta2.sin(),
                ];
                let phi: f64 = modes.iter().map(|m| m.eval_phases(theta1, theta2)).sum();
                let (sf, cf) = phi.sin_cos();
                Ok([
                    cf * p[0] + sf * nh[0],
                    cf * p[1] + sf * nh[1],
                    cf * p[2] + sf * nh[2],
                    cf * p[3] + sf * nh[3],
                ])
            }
            Repr::Grid(_) => Err(Error::UnsupportedKind("grid surfaces evaluate only at nodes")),
        }
    }

    /// Sample the point map on an n×n grid.
    pub fn sample_points(&self, n: usize) -> Result<Vec<Vec4>> {
        match &self.repr {
            Repr::Analytic { .. } => {
                let jet = self.jet(n)?;
                Ok(jet.f)
            }
            Repr::Grid(g) => {
                if g.n != n {
                    return Err(Error::GridMismatch { expected: g.n, got: n });
                }
                Ok(g.points.clone())
            }
        }
    }

    fn jet(&self, n: usize) -> Result<JetGrid> {
        match &self.repr {
            Repr::Analytic { chart, modes, .. } => {
                if modes.is_empty() {
                    Ok(analytic_jet(chart, None, n))
                } else {
                    let phi = mode_sum_jet(modes, n);
                    Ok(analytic_jet(chart, Some(&phi), n))
                }
            }
            Repr::Grid(g) => {
                if g.n != n {
                    return Err(Error::GridMismatch { expected: g.n, got: n });
                }
                Ok(finite_difference_jet(&g.points, g.n))
            }
        }
    }

    /// First and second fundamental forms, curvatures, area element and unit
    /// normal on an n×n grid (plane-chart components).
    pub fn geometry(&self, n: usize) -> Result<GeometryFields> {
        if n < 16 {
            return Err(Error::Domain(format!("grid size must be ≥ 16, got {n}")));
        }
        let jet = self.jet(n)?;
        let plane = jet_to_plane(&jet, &self.domain_lattice());
        assemble_fields(&plane, self.domain_lattice())
    }
}

/// Metric, curvature and normal data of an immersion on a grid.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    pub n: usize,
    pub lattice: Lattice,
    /// First fundamental form (plane chart).
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// Second fundamental form against the S³-tangent unit normal.
    pub l: Vec<f64>,
    pub m: Vec<f64>,
    pub n2: Vec<f64>,
    /// Mean curvature H = tr_g(II)/2 and intrinsic Gauss curvature.
    pub mean_h: Vec<f64>,
    pub gauss_k: Vec<f64>,
    /// √(EG − F²), the area density in the plane chart.
    pub area_element: Vec<f64>,
    pub unit_normal: Vec<Vec4>,
    /// Sampled points (for unit-sphere checks and exports).
    pub points: Vec<Vec4>,
}

impl GeometryFields {
    /// Plane-chart cell measure of one grid cell.
    pub fn cell_measure(&self) -> f64 {
        self.lattice.oriented_area().abs() / (self.n * self.n) as f64
    }

    /// Total surface area ∫ dA.
    pub fn area(&self) -> f64 {
        periodic_trapezoid(&self.area_element, self.cell_measure())
    }

    /// ∫ (H² + 1) dA.
    pub fn willmore_energy(&self) -> f64 {
        let vals: Vec<f64> = self
            .mean_h
            .iter()
            .zip(self.area_element.iter())
            .map(|(h, da)| (h * h + 1.0) * da)
            .collect();
        periodic_trapezoid(&vals, self.cell_measure())
    }
}

/// Assemble geometry fields from a plane-chart jet (shared with the
/// coefficient-space evaluator of the minimizer).
pub(crate) fn assemble_plane_geometry(
    plane: &PlaneJet,
    lattice: Lattice,
) -> Result<GeometryFields> {
    assemble_fields(plane, lattice)
}

fn assemble_fields(plane: &PlaneJet, lattice: Lattice) -> Result<GeometryFields> {
    let n = plane.n;
    let total = n * n;
    let mut out = GeometryFields {
        n,
        lattice,
        e: vec![0.0; total],
        f: vec![0.0; total],
        g: vec![0.0; total],
        l: vec![0.0; total],
        m: vec![0.0; total],
        n2: vec![0.0; total],
        mean_h: vec![0.0; total],
        gauss_k: vec![0.0; total],
        area_element: vec![0.0; total],
        unit_normal: vec![[0.0; 4]; total],
        points: plane.f.clone(),
    };
    for idx in 0..total {
        let (fx, fy) = (&plane.fx[idx], &plane.fy[idx]);
        let e = dot4(fx, fx);
        let ff = dot4(fx, fy);
        let g = dot4(fy, fy);
        let det = e * g - ff * ff;
        if !(det > 0.0) {
            return Err(Error::DegenerateImmersion { i: idx / n, j: idx % n, det });
        }
        let raw = cross4(&plane.f[idx], fx, fy);
        let len = norm4(&raw);
        let nh = [raw[0] / len, raw[1] / len, raw[2] / len, raw[3] / len];
        let l = dot4(&plane.fxx[idx], &nh);
        let m = dot4(&plane.fxy[idx], &nh);
        let n2 = dot4(&plane.fyy[idx], &nh);
        out.e[idx] = e;
        out.f[idx] = ff;
        out.g[idx] = g;
        out.l[idx] = l;
        out.m[idx] = m;
        out.n2[idx] = n2;
        out.mean_h[idx] = (g * l - 2.0 * ff * m + e * n2) / (2.0 * det);
        out.gauss_k[idx] = (l * n2 - m * m) / det + 1.0;
        out.area_element[idx] = det.sqrt();
        out.unit_normal[idx] = nh;
    }
    Ok(out)
}

/// Willmore energy ∫ (H² + 1) dA by periodic trapezoidal quadrature on an
/// n×n grid; spectrally accurate for the analytic kinds.
pub fn willmore_energy(f: &TorusImmersion, n: usize) -> Result<f64> {
    Ok(f.geometry(n)?.willmore_energy())
}

// ---------------------------------------------------------------------------
// Normal fields and the geodesic exponential
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum FieldRep {
    /// constant + trigonometric mode sum, evaluable anywhere.
    Analytic { constant: f64, modes: Vec<FourierMode> },
    Grid { n: usize, values: Vec<f64> },
}

/// A scalar field Φ along the unit normal of a reference immersion.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    base: TorusImmersion,
    rep: FieldRep,
}

impl NormalField {
    /// Constant field Φ ≡ c (moves a product torus through product tori).
    pub fn constant(base: &TorusImmersion, c: f64) -> Result<Self> {
        if let Repr::Grid(g) = &base.repr {
            let n = g.n;
            return Ok(Self {
                base: base.clone(),
                rep: FieldRep::Grid { n, values: vec![c; n * n] },
            });
        }
        Ok(Self {
            base: base.clone(),
            rep: FieldRep::Analytic { constant: c, modes: Vec::new() },
        })
    }

    pub fn from_grid(base: &TorusImmersion, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::GridMismatch { expected: n * n, got: values.len() });
        }
        Ok(Self { base: base.clone(), rep: FieldRep::Grid { n, values } })
    }

    pub fn base(&self) -> &TorusImmersion {
        &self.base
    }

    pub fn modes(&self) -> Option<&[FourierMode]> {
        match &self.rep {
            FieldRep::Analytic { modes, .. } => Some(modes),
            FieldRep::Grid { .. } => None,
        }
    }

    /// Scalar samples on an n×n grid.
    pub fn sample(&self, n: usize) -> Result<Vec<f64>> {
        match &self.rep {
            FieldRep::Analytic { constant, modes } => {
                let mut vals = mode_sum_values(modes, n);
                if *constant != 0.0 {
                    for v in &mut vals {
                        *v += constant;
                    }
                }
                Ok(vals)
            }
            FieldRep::Grid { n: gn, values } => {
                if *gn != n {
                    return Err(Error::GridMismatch { expected: *gn, got: n });
                }
                Ok(values.clone())
            }
        }
    }

    /// L² norm squared of Φ over the plane-chart measure of the base lattice.
    pub fn l2_norm_sq(&self, n: usize) -> Result<f64> {
        let vals = self.sample(n)?;
        let sq: Vec<f64> = vals.iter().map(|p| p * p).collect();
        let cell = self.base.domain_lattice().oriented_area().abs() / (n * n) as f64;
        Ok(pairwise_sum(&sq) * cell)
    }
}

/// The normal variation of a Fourier mode: Φ sampled through the chart
/// phases of `f` and attached to f's unit normal.
pub fn mode_normal_field(m: &FourierMode, f: &TorusImmersion) -> Result<NormalField> {
    mode_sum_normal_field(std::slice::from_ref(m), f)
}

/// Normal field from an explicit mode sum on an analytic surface.
pub fn mode_sum_normal_field(modes: &[FourierMode], f: &TorusImmersion) -> Result<NormalField> {
    if f.is_grid() {
        return Err(Error::UnsupportedKind(
            "mode fields need an analytic chart; sample onto the grid first",
        ));
    }
    Ok(NormalField {
        base: f.clone(),
        rep: FieldRep::Analytic { constant: 0.0, modes: modes.to_vec() },
    })
}

/// Geodesic exponential in S³ along the unit normal of `v.base()`:
/// p ↦ cos(tΦ)·p + sin(tΦ)·n. Exactly preserves the unit-sphere constraint.
///
/// For an unperturbed analytic base with a mode-backed field the result
/// stays analytic; otherwise the result is sampled onto a grid (size chosen
/// from the inputs, [`DEFAULT_GRID`] as a last resort — use
/// [`exp_normal_with_grid`] to pin it).
pub fn exp_normal(f: &TorusImmersion, v: &NormalField, t: f64) -> Result<TorusImmersion> {
    exp_normal_impl(f, v, t, None)
}

/// [`exp_normal`] with an explicit sampling resolution for the grid path.
pub fn exp_normal_with_grid(
    f: &TorusImmersion,
    v: &NormalField,
    t: f64,
    n: usize,
) -> Result<TorusImmersion> {
    exp_normal_impl(f, v, t, Some(n))
}

fn exp_normal_impl(
    f: &TorusImmersion,
    v: &NormalField,
    t: f64,
    grid: Option<usize>,
) -> Result<TorusImmersion> {
    if v.base() != f {
        return Err(Error::UnsupportedKind("normal field was built on a different surface"));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    match (&f.repr, &v.rep) {
        (
            Repr::Analytic { chart, base, modes },
            FieldRep::Analytic { constant, modes: ms },
        ) if modes.is_empty() && *constant == 0.0 => {
            let scaled: Vec<FourierMode> = ms
                .iter()
                .filter(|m| !m.is_zero())
                .map(|m| m.scaled(t))
                .collect();
            Ok(TorusImmersion {
                repr: Repr::Analytic { chart: *chart, base: *base, modes: scaled },
            })
        }
        (
            Repr::Analytic { chart, base, modes },
            FieldRep::Analytic { constant, modes: ms },
        ) if modes.is_empty() && ms.iter().all(|m| m.is_zero()) => {
            // Constant offset of a product torus: rotate the circle radii,
            // keep the chart lattice. Still exactly on the sphere.
            let (st, ct) = (t * constant).sin_cos();
            let rotated = ProductChart {
                r: ct * chart.r - st * chart.s,
                s: ct * chart.s + st * chart.r,
                lattice: chart.lattice,
            };
            Ok(TorusImmersion {
                repr: Repr::Analytic { chart: rotated, base: *base, modes: Vec::new() },
            })
        }
        _ => {
            // General path: offset pointwise along the true unit normal.
            let n = match (&f.repr, &v.rep) {
                (Repr::Grid(g), _) => g.n,
                (_, FieldRep::Grid { n, .. }) => *n,
                _ => grid.unwrap_or(DEFAULT_GRID),
            };
            let geo = f.geometry(n)?;
            let phi = v.sample(n)?;
            let mut points = vec![[0.0; 4]; n * n];
            for idx in 0..n * n {
                let (sf, cf) = (t * phi[idx]).sin_cos();
                for c in 0..4 {
                    points[idx][c] = cf * geo.points[idx][c] + sf * geo.unit_normal[idx][c];
                }
            }
            TorusImmersion::from_grid(GridData { n, lattice: f.domain_lattice(), points })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::radii;
    use std::f64::consts::PI;

    fn max_abs(vals: impl Iterator<Item = f64>) -> f64 {
        vals.fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    #[test]
    fn clifford_radii_and_sphere_constraint() {
        let f = homogeneous_torus(1.0).unwrap();
        let pts = f.sample_points(32).unwrap();
        let worst = max_abs(pts.iter().map(|p| norm4(p) - 1.0));
        assert!(worst < 1e-12);

        let f = homogeneous_torus(1.2).unwrap();
        let (r, s) = radii(1.2).unwrap();
        assert!((r - 0.640184).abs() < 1e-6);
        assert!((s - 0.768221).abs() < 1e-6);
        let worst = max_abs(f.sample_points(32).unwrap().iter().map(|p| norm4(p) - 1.0));
        assert!(worst < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_aspect() {
        assert!(homogeneous_torus(0.0).is_err());
        assert!(homogeneous_torus(-1.0).is_err());
        assert!(equivariant_12_torus(-0.5).is_err());
    }

    #[test]
    fn clifford_is_minimal_and_flat_chart_orthonormal() {
        let f = homogeneous_torus(1.0).unwrap();
        let geo = f.geometry(32).unwrap();
        assert!(max_abs(geo.mean_h.iter().copied()) < 1e-10);
        assert!(max_abs(geo.e.iter().map(|e| e - 1.0)) < 1e-12);
        assert!(max_abs(geo.g.iter().map(|g| g - 1.0)) < 1e-12);
        assert!(max_abs(geo.f.iter().copied()) < 1e-12);
    }

    #[test]
    fn homogeneous_mean_curvature_magnitude() {
        // |H| = |s² − r²| / (2rs), the product-torus principal curvatures
        // s/r and −r/s averaged.
        for b in [0.9, 1.2] {
            let (r, s) = radii(b).unwrap();
            let expect = (s * s - r * r).abs() / (2.0 * r * s);
            let geo = homogeneous_torus(b).unwrap().geometry(32).unwrap();
            let worst = max_abs(geo.mean_h.iter().map(|h| h.abs() - expect));
            assert!(worst < 1e-9, "b = {b}: {worst:.2e}");
            // H is constant over the grid.
            let mean = crate::quadrature::grid_mean(&geo.mean_h);
            let var = max_abs(geo.mean_h.iter().map(|h| h - mean));
            assert!(var < 1e-10);
        }
    }

    #[test]
    fn gauss_curvature_of_product_tori_vanishes() {
        // Flat intrinsic geometry: K = det II/det g + 1 = (s/r)(−r/s) + 1 = 0.
        for b in [0.85, 1.0, 1.15] {
            let geo = homogeneous_torus(b).unwrap().geometry(32).unwrap();
            assert!(max_abs(geo.gauss_k.iter().copied()) < 1e-10);
        }
    }

    #[test]
    fn clifford_energy_is_two_pi_squared() {
        let f = homogeneous_torus(1.0).unwrap();
        let w = willmore_energy(&f, 128).unwrap();
        assert!((w - 2.0 * PI * PI).abs() < 1e-8);
    }

    #[test]
    fn homogeneous_energy_formula() {
        // W = π²/(rs) with rs = b/(1+b²).
        for b in [0.8, 0.95, 1.05, 1.2, 1.25] {
            let rs = b / (1.0 + b * b);
            let w = willmore_energy(&homogeneous_torus(b).unwrap(), 128).unwrap();
            assert!((w - PI * PI / rs).abs() < 1e-8, "b = {b}");
        }
        let w12 = willmore_energy(&homogeneous_torus(1.2).unwrap(), 128).unwrap();
        assert!((w12 - 20.0682).abs() < 5e-4);
    }

    #[test]
    fn quadrature_error_shrinks_with_resolution() {
        let f = homogeneous_torus(1.0).unwrap();
        let target = 2.0 * PI * PI;
        let errs: Vec<f64> = [32usize, 64, 128]
            .iter()
            .map(|&n| (willmore_energy(&f, n).unwrap() - target).abs())
            .collect();
        assert!(errs[2] < 1e-8);
        // Monotone within floating noise (the integrand is exactly constant
        // here, so all three errors sit at round-off).
        assert!(errs[1] <= errs[0] + 1e-14);
        assert!(errs[2] <= errs[1] + 1e-14);
    }

    #[test]
    fn equivariant_parametrization_same_image_and_energy() {
        for b in [1.0, 1.05, 1.2] {
            let (r, s) = radii(b).unwrap();
            let f = equivariant_12_torus(b).unwrap();
            // Image lies on the product torus |z₁| = r, |z₂| = s: distance of
            // each sample to that set is √((|p₁₂|−r)² + (|p₃₄|−s)²).
            let pts = f.sample_points(64).unwrap();
            let worst = max_abs(pts.iter().map(|p| {
                let rho1 = (p[0] * p[0] + p[1] * p[1]).sqrt() - r;
                let rho2 = (p[2] * p[2] + p[3] * p[3]).sqrt() - s;
                (rho1 * rho1 + rho2 * rho2).sqrt()
            }));
            assert!(worst < 1e-10, "b = {b}: image offset {worst:.2e}");

            let w_h = willmore_energy(&homogeneous_torus(b).unwrap(), 128).unwrap();
            let w_e = willmore_energy(&f, 128).unwrap();
            assert!((w_h - w_e).abs() < 1e-8, "b = {b}: {w_h} vs {w_e}");
        }
    }

    #[test]
    fn normal_field_consistency() {
        for f in [
            homogeneous_torus(1.1).unwrap(),
            equivariant_12_torus(0.95).unwrap(),
        ] {
            let geo = f.geometry(32).unwrap();
            let jet = f.jet(32).unwrap();
            let plane = jet_to_plane(&jet, &f.domain_lattice());
            for idx in 0..32 * 32 {
                let n = &geo.unit_normal[idx];
                assert!((norm4(n) - 1.0).abs() < 1e-10);
                assert!(dot4(n, &geo.points[idx]).abs() < 1e-10);
                assert!(dot4(n, &plane.fx[idx]).abs() < 1e-10);
                assert!(dot4(n, &plane.fy[idx]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        // Every column identical: the u-direction collapses, rank-deficient
        // metric.
        let n = 16;
        let f = homogeneous_torus(1.0).unwrap();
        let base = f.sample_points(n).unwrap();
        let mut points = vec![[0.0; 4]; n * n];
        for i in 0..n {
            for j in 0..n {
                points[i * n + j] = base[j];
            }
        }
        let g = TorusImmersion::from_grid(GridData {
            n,
            lattice: f.domain_lattice(),
            points,
        })
        .unwrap();
        assert!(matches!(
            g.geometry(n),
            Err(Error::DegenerateImmersion { .. })
        ));
    }

    #[test]
    fn exp_normal_basics() {
        let f = homogeneous_torus(1.0).unwrap();
        let m = FourierMode::new(1, 2, [1.0, 1.0, 0.0, 0.0]).unwrap();
        let v = mode_normal_field(&m, &f).unwrap();

        // t = 0 returns the same surface.
        let same = exp_normal(&f, &v, 0.0).unwrap();
        assert_eq!(&same, &f);

        // Unit-sphere constraint after offsetting.
        let g = exp_normal(&f, &v, 0.05).unwrap();
        let worst = max_abs(g.sample_points(64).unwrap().iter().map(|p| norm4(p) - 1.0));
        assert!(worst < 1e-12);

        // First-order consistency: (exp(tφ) − f)/t → Φ·n with O(t²) error.
        let geo = f.geometry(32).unwrap();
        let phi = v.sample(32).unwrap();
        let mut errs = Vec::new();
        for &t in &[1e-2, 1e-3] {
            let moved = exp_normal(&f, &v, t).unwrap().sample_points(32).unwrap();
            let mut worst: f64 = 0.0;
            for idx in 0..32 * 32 {
                for c in 0..4 {
                    let fd = (moved[idx][c] - geo.points[idx][c]) / t;
                    worst = worst.max((fd - phi[idx] * geo.unit_normal[idx][c]).abs());
                }
            }
            errs.push(worst);
        }
        // O(t²): shrinking t by 10 shrinks the defect by ~100.
        assert!(errs[0] < 5e-2 && errs[1] < 5e-4, "{errs:?}");
    }

    #[test]
    fn constant_offset_of_clifford_is_another_product_torus() {
        let f = homogeneous_torus(1.0).unwrap();
        let v = NormalField::constant(&f, 1.0).unwrap();
        let g = exp_normal(&f, &v, 0.1).unwrap();
        // cos(t)·r − sin(t)·s and cos(t)·s + sin(t)·r: still a product of
        // circles, radii r', s' with r'² + s'² = 1.
        let (r, s) = radii(1.0).unwrap();
        let (st, ct) = (0.1f64).sin_cos();
        let (r2, s2) = (ct * r - st * s, ct * s + st * r);
        let pts = g.sample_points(32).unwrap();
        let worst = max_abs(pts.iter().map(|p| {
            let rho1 = (p[0] * p[0] + p[1] * p[1]).sqrt() - r2.abs();
            let rho2 = (p[2] * p[2] + p[3] * p[3]).sqrt() - s2.abs();
            rho1.abs().max(rho2.abs())
        }));
        assert!(worst < 1e-12);
    }

    #[test]
    fn constant_field_really_is_constant() {
        let f = homogeneous_torus(1.3).unwrap();
        let v = NormalField::constant(&f, 0.7).unwrap();
        let vals = v.sample(16).unwrap();
        assert!(max_abs(vals.iter().map(|x| x - 0.7)) < 1e-15);
    }

    #[test]
    fn zero_mode_field_is_zero() {
        let f = homogeneous_torus(1.0).unwrap();
        let m = FourierMode::new(2, 3, [0.0; 4]).unwrap();
        let v = mode_normal_field(&m, &f).unwrap();
        assert!(max_abs(v.sample(16).unwrap().into_iter()) == 0.0);
    }
}
