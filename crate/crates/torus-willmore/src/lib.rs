//! Numerics for tori immersed in S³: homogeneous and (1,2)-equivariant
//! product tori, Willmore energy by periodic quadrature, projection of an
//! induced metric to its marked conformal class, closed-form and numeric
//! second variations of the penalized functional W − α·Π¹ − β·Π², the
//! stability threshold α^b with its kernel modes, and a truncated
//! mode-space constrained minimizer for the minimal-energy map ω(a, b).
//!
//! Conventions
//! - Willmore energy in S³ is the conformally invariant ∫ (H² + 1) dA, so
//!   the Clifford torus scores 2π².
//! - Conformal classes are *marked*: (a, b) lives in the upper half plane
//!   with the orientation convention a ≥ 0; b and 1/b are distinct classes.
//! - The homogeneous torus of class b is (x, y) ↦ (r e^{ix/r}, s e^{iy/s})
//!   with r² + s² = 1 and b = s/r, on the lattice 2πr ℤ ⊕ 2πs i ℤ.
//! - Its unit normal is fixed as (−s e^{ix/r}, r e^{iy/s}); this orients the
//!   second variation of Π¹ to be ≥ 0 on the destabilizing modes.

pub use num_complex::Complex64;

pub mod error;
pub mod quadrature;

pub mod lattice;
pub mod modes;
pub mod geometry;
pub mod immersion;
pub mod poisson;
pub mod projection;
pub mod spectral;
pub mod minimizer;
pub mod io;

pub use error::{Error, Result};
pub use lattice::{lattice_for_class, modulus_from_lattice, Lattice, TeichmullerPoint};
pub use modes::{combine_phases, FourierMode};
pub use immersion::{
    equivariant_12_torus, exp_normal, homogeneous_torus, mode_normal_field, willmore_energy,
    GeometryFields, NormalField, TorusImmersion,
};
pub use projection::{project_conformal_class, MetricGrid, Projector};
pub use spectral::{
    alpha_threshold, d2_pi1_clifford, d2_pi2_homogeneous, d2_willmore_clifford, eta_correction,
    equivariant_kernel_profile, g_polynomial, g_roots, quadratic_form_numeric, Functional,
    PenalizedForm, ThresholdResult,
};
pub use minimizer::{
    concavity_check, directional_profile, minimize, multiplier_estimate, omega_table,
    EnergyTable, MinimizationProblem, MinimizerResult,
};
