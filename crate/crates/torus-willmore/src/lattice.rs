//! Lattices in ℂ and their marked conformal classes.
//!
//! A torus ℂ/Λ with Λ = ℤ·gen1 ⊕ ℤ·gen2 carries the flat conformal class of
//! the modulus τ = gen2/gen1. We work with *marked* classes: the ordered pair
//! of generators is part of the data, so b and 1/b stay distinct (the two
//! chart directions of a product torus play different roles). Normalization
//! keeps only the transformations that preserve the marking up to
//! orientation: reorienting a generator, shearing gen2 by a multiple of gen1,
//! and the reflection a ↦ |a| that fixes the orientation convention a ≥ 0.
//! The square lattice maps to (0, 1).

use crate::error::{Error, Result};
use crate::Complex64;

/// Tolerance for the round trips and invariances promised by this module.
pub const LATTICE_TOL: f64 = 1e-12;

/// A rank-2 lattice in ℂ given by an ordered pair of generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub gen1: Complex64,
    pub gen2: Complex64,
}

impl Lattice {
    pub fn new(gen1: Complex64, gen2: Complex64) -> Self {
        Self { gen1, gen2 }
    }

    /// Rectangular lattice L·(ℤ ⊕ i·ratio·ℤ).
    pub fn rectangular(len1: f64, len2: f64) -> Self {
        Self::new(
            Complex64::new(len1, 0.0),
            Complex64::new(0.0, len2),
        )
    }

    /// Oriented area of the fundamental parallelogram, Im(conj(gen1)·gen2).
    pub fn oriented_area(&self) -> f64 {
        (self.gen1.conj() * self.gen2).im
    }

    /// Relative area |Im(ḡ₁g₂)| / (|g₁||g₂|); zero iff the generators are
    /// collinear over ℝ.
    pub fn relative_area(&self) -> f64 {
        let scale = self.gen1.norm() * self.gen2.norm();
        if scale == 0.0 {
            0.0
        } else {
            self.oriented_area().abs() / scale
        }
    }

    fn validate(&self) -> Result<()> {
        let rel = self.relative_area();
        if !rel.is_finite() || rel < 1e-12 {
            return Err(Error::InvalidLattice { rel_area: rel });
        }
        Ok(())
    }
}

/// Marked conformal class (a, b) of a flat torus, b > 0 and a ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeichmullerPoint {
    a: f64,
    b: f64,
}

impl TeichmullerPoint {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::Domain(format!("Teichmüller b must be > 0, got {b}")));
        }
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("Teichmüller a must be ≥ 0, got {a}")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

impl std::fmt::Display for TeichmullerPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

/// Shear-reduce a modulus with Im τ > 0 to |Re| ≤ 1/2 without reflecting.
///
/// Exposed for callers that need the signed first coordinate (directional
/// derivatives of the class distinguish the two orientations).
pub fn reduce_modulus_signed(tau: Complex64) -> (f64, f64) {
    let shift = tau.re.round();
    (tau.re - shift, tau.im)
}

/// Marked modulus of a lattice: τ = gen2/gen1 with orientation fixed to
/// Im τ > 0, sheared to |Re τ| ≤ 1/2, and reflected to a ≥ 0.
pub fn modulus_from_lattice(lat: &Lattice) -> Result<TeichmullerPoint> {
    lat.validate()?;
    let mut tau = lat.gen2 / lat.gen1;
    if tau.im < 0.0 {
        // Reorient the second generator; the reflection below absorbs the
        // accompanying sign of the real part.
        tau = -tau;
    }
    let (a_signed, b) = reduce_modulus_signed(tau);
    TeichmullerPoint::new(a_signed.abs(), b)
}

/// Lattice 2π-style representative of a class: (scale, scale·(a + ib)).
///
/// Round-trips through [`modulus_from_lattice`] to the input class within
/// [`LATTICE_TOL`] for a ≤ 1/2.
pub fn lattice_for_class(p: &TeichmullerPoint, scale: f64) -> Result<Lattice> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Domain(format!("lattice scale must be > 0, got {scale}")));
    }
    Ok(Lattice::new(
        Complex64::new(scale, 0.0),
        Complex64::new(scale * p.a(), scale * p.b()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn square_lattice_maps_to_origin_of_chart() {
        let sq = Lattice::new(c((2.0f64).sqrt() * PI, 0.0), c(0.0, (2.0f64).sqrt() * PI));
        let p = modulus_from_lattice(&sq).unwrap();
        assert!((p.a() - 0.0).abs() < LATTICE_TOL);
        assert!((p.b() - 1.0).abs() < LATTICE_TOL);
    }

    #[test]
    fn shear_is_removed() {
        let lat = Lattice::new(c(1.0, 0.0), c(3.0, 1.0));
        let p = modulus_from_lattice(&lat).unwrap();
        assert!((p.a() - 0.0).abs() < LATTICE_TOL);
        assert!((p.b() - 1.0).abs() < LATTICE_TOL);
    }

    #[test]
    fn reduced_generators_pass_through() {
        let g1 = 2.0 * PI * 0.64;
        let lat = Lattice::new(c(g1, 0.0), c(g1 * 0.03, g1 * 1.05));
        let p = modulus_from_lattice(&lat).unwrap();
        assert!((p.a() - 0.03).abs() < LATTICE_TOL);
        assert!((p.b() - 1.05).abs() < LATTICE_TOL);
    }

    #[test]
    fn collinear_generators_are_rejected() {
        let lat = Lattice::new(c(1.0, 2.0), c(-2.0, -4.0));
        assert!(matches!(
            modulus_from_lattice(&lat),
            Err(Error::InvalidLattice { .. })
        ));
    }

    #[test]
    fn class_representatives() {
        let p = TeichmullerPoint::new(0.0, 1.0).unwrap();
        let lat = lattice_for_class(&p, (2.0f64).sqrt() * PI).unwrap();
        assert!((lat.gen1 - c((2.0f64).sqrt() * PI, 0.0)).norm() < 1e-14);
        assert!((lat.gen2 - c(0.0, (2.0f64).sqrt() * PI)).norm() < 1e-14);

        let p = TeichmullerPoint::new(0.1, 1.05).unwrap();
        let lat = lattice_for_class(&p, 2.0 * PI).unwrap();
        assert!((lat.gen2 - c(2.0 * PI * 0.1, 2.0 * PI * 1.05)).norm() < 1e-13);

        let p = TeichmullerPoint::new(0.0, 1.2).unwrap();
        let lat = lattice_for_class(&p, 1.0).unwrap();
        assert!((lat.gen2 - c(0.0, 1.2)).norm() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_scale() {
        let p = TeichmullerPoint::new(0.0, 1.0).unwrap();
        assert!(lattice_for_class(&p, 0.0).is_err());
        assert!(lattice_for_class(&p, -1.0).is_err());
    }

    #[test]
    fn swapping_rectangular_generators_inverts_b() {
        // Swapping the marking exchanges the roles of the two directions:
        // (0, b) becomes (0, 1/b). This is the convention that keeps
        // homogeneous tori with b < 1 distinguishable from their mirrors.
        let lat = Lattice::rectangular(2.0, 2.0 * 0.8);
        let swapped = Lattice::new(lat.gen2, lat.gen1);
        let p = modulus_from_lattice(&lat).unwrap();
        let q = modulus_from_lattice(&swapped).unwrap();
        assert!((p.b() - 0.8).abs() < LATTICE_TOL);
        assert!((q.b() - 1.0 / 0.8).abs() < LATTICE_TOL);
    }

    proptest! {
        #[test]
        fn round_trip_through_lattice(
            a in 0.0..0.3f64,
            b in 0.8..1.25f64,
            s in 0.05..20.0f64,
        ) {
            let p = TeichmullerPoint::new(a, b).unwrap();
            let lat = lattice_for_class(&p, s).unwrap();
            let q = modulus_from_lattice(&lat).unwrap();
            prop_assert!((q.a() - a).abs() < LATTICE_TOL);
            prop_assert!((q.b() - b).abs() < LATTICE_TOL);
        }

        #[test]
        fn shear_negation_and_scale_invariance(
            a in 0.0..0.3f64,
            b in 0.8..1.25f64,
            n in -5i32..=5,
            sre in -3.0..3.0f64,
            sim in -3.0..3.0f64,
            neg1 in proptest::bool::ANY,
            neg2 in proptest::bool::ANY,
        ) {
            prop_assume!(sre * sre + sim * sim > 1e-4);
            let p = TeichmullerPoint::new(a, b).unwrap();
            let base = lattice_for_class(&p, 1.0).unwrap();
            let scale = c(sre, sim);
            let sign1 = if neg1 { -1.0 } else { 1.0 };
            let sign2 = if neg2 { -1.0 } else { 1.0 };
            let lat = Lattice::new(
                scale * base.gen1 * sign1,
                scale * (base.gen2 + c(n as f64, 0.0) * base.gen1) * sign2,
            );
            let q = modulus_from_lattice(&lat).unwrap();
            prop_assert!((q.a() - a).abs() < LATTICE_TOL, "a: {} vs {}", q.a(), a);
            prop_assert!((q.b() - b).abs() < LATTICE_TOL, "b: {} vs {}", q.b(), b);
        }
    }
}
