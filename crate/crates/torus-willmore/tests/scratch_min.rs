use torus_willmore::minimizer::*;
use torus_willmore::spectral::{alpha_threshold, THRESHOLD_TOL};

#[test]
fn probe_pinned_minimize() {
    let settings = OptimizerSettings::default();
    for (k_max, a) in [(4u32, 0.01f64), (6, 0.01)] {
        let t0 = std::time::Instant::now();
        let problem = MinimizationProblem {
            b: 1.05,
            k_max,
            constraint: ConstraintSpec::Pinned { a_target: a },
            settings,
        };
        let r = minimize(&problem).unwrap();
        println!(
            "PROBE pinned K={k_max} a={a}: conv={} iters={} omega={:.8} a_hat={:.8} alpha={:?} beta={:.6} kkt={:.2e} |grad|={:.2e} viol={:.2e} [{:.1?}]",
            r.converged, r.report.iterations, r.energy_w, r.achieved_a, r.alpha_hat, r.beta_hat,
            r.report.kkt_residual, r.report.gradient_norm, r.report.constraint_violation, t0.elapsed()
        );
    }
}

#[test]
fn probe_penalized_minimize() {
    let thr = alpha_threshold(1.05, 6, THRESHOLD_TOL).unwrap();
    println!("PROBE alpha_b(1.05, K=6) = {:.6}", thr.alpha_b);
    let settings = OptimizerSettings::default();
    for factor in [0.9f64, 1.02] {
        let t0 = std::time::Instant::now();
        let problem = MinimizationProblem {
            b: 1.05,
            k_max: 4,
            constraint: ConstraintSpec::Penalized { alpha: factor * thr.alpha_b },
            settings,
        };
        let r = minimize(&problem).unwrap();
        println!(
            "PROBE penalized {factor}·α^b: conv={} iters={} |c|={:.3e} W_a={:.8} omega={:.8} beta={:.6} [{:.1?}]",
            r.converged, r.report.iterations, r.coefficient_norm(), r.objective, r.energy_w, r.beta_hat, t0.elapsed()
        );
    }
}
