//! Deterministic summation and periodic trapezoidal quadrature.
//!
//! All reductions in this crate go through [`pairwise_sum`] so results are
//! bit-identical regardless of how many threads produced the summands.

/// Pairwise (cascade) summation with a fixed recursion tree.
///
/// The tree depends only on the slice length, never on thread count, so the
/// result is reproducible. Error grows like O(log n · ε) instead of O(n · ε).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Trapezoidal rule on a uniform periodic grid: `cell · Σ values`.
///
/// On a periodic domain the trapezoidal weights collapse to the midpoint
/// weights, and the rule converges spectrally for smooth integrands.
pub fn periodic_trapezoid(values: &[f64], cell: f64) -> f64 {
    pairwise_sum(values) * cell
}

/// Mean of a grid sample, with the same deterministic reduction.
pub fn grid_mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }

    #[test]
    fn periodic_trapezoid_integrates_constants_exactly() {
        let v = vec![3.25; 64 * 64];
        let cell = 0.5 / (64.0 * 64.0);
        assert_eq!(periodic_trapezoid(&v, cell), 3.25 * 0.5);
    }

    #[test]
    fn trapezoid_is_spectral_for_trig() {
        // ∫₀^{2π} (1 + cos x)² dx / (2π) = 3/2
        let n = 32;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let x = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                (1.0 + x.cos()).powi(2)
            })
            .collect();
        let mean = grid_mean(&vals);
        assert!((mean - 1.5).abs() < 1e-14);
    }
}
