//! Monte Carlo and quadrature checks against closed-form answers.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use mala_core::diagnostics::{acceptance_stats, grid_truth, hanson_wright_check, histogram, tv_distance};
use mala_core::rng;
use mala_core::samplers::{run_mala, run_rwm, ChainConfig};
use mala_core::targets::{annulus, Gaussian};

#[test]
fn grid_truth_matches_normal_cdf() {
    let g = grid_truth(&Gaussian::standard(1), &[-6.0], &[6.0], &[1200], None).unwrap();
    let normal = Normal::standard();
    let cum = g.cumulative();
    let edges = g.edges();
    let worst = (0..=g.len())
        .map(|i| (cum[i] - (normal.cdf(edges[i]) - normal.cdf(-6.0)) / (1.0 - 2.0 * normal.cdf(-6.0))).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "max CDF error {worst}");
}

#[test]
fn constrained_grid_truth_matches_radial_law() {
    // For a standard 2D Gaussian, P(r ≤ s) = 1 − exp(−s²/2).
    let ring = annulus(0.5, 1.5).unwrap();
    let g = grid_truth(&Gaussian::standard(2), &[-1.5, -1.5], &[1.5, 1.5], &[400, 400], Some(&ring)).unwrap();
    let radial = |s: f64| 1.0 - (-s * s / 2.0).exp();
    let inner_mass: f64 = (0..g.len()).filter(|&c| norm(&g.midpoint(c)) <= 1.0).map(|c| g.mass()[c]).sum();
    let expected = (radial(1.0) - radial(0.5)) / (radial(1.5) - radial(0.5));
    assert!((inner_mass - expected).abs() < 5e-3, "{inner_mass} vs {expected}");
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn histogram_of_exact_draws_is_close_to_truth() {
    let truth = grid_truth(&Gaussian::standard(1), &[-5.0], &[5.0], &[2000], None).unwrap().coarsen(&[40]).unwrap();
    let mut rng = rng::stream(11, 0);
    let draws: Vec<[f64; 1]> = (0..1_000_000).map(|_| [rng::standard_normal_vec(&mut rng, 1)[0]]).collect();
    let h = histogram(&draws, &[-5.0], &[5.0], &[40]).unwrap();
    assert!(h.out_of_bounds < 10);
    let tv = tv_distance(&h.distribution, &truth).unwrap();
    assert!(tv <= 0.01, "TV {tv}");
}

/// `E[min(1, e^{−ΔH})]` for one leapfrog step on `U(x) = x²/2` under the
/// stationary law of `(x, v)`, by tensor midpoint quadrature.
fn exact_mala_acceptance(eta: f64) -> f64 {
    let (n, half) = (1600, 8.0);
    let h = 2.0 * half / n as f64;
    let w = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    for i in 0..n {
        let x = -half + (i as f64 + 0.5) * h;
        for j in 0..n {
            let v = -half + (j as f64 + 0.5) * h;
            let vh = v - 0.5 * eta * x;
            let xn = x + eta * vh;
            let vn = vh - 0.5 * eta * xn;
            let dh = 0.5 * (xn * xn + vn * vn) - 0.5 * (x * x + v * v);
            total += w(x) * w(v) * (-dh).exp().min(1.0);
        }
    }
    total * h * h
}

#[test]
fn mala_acceptance_matches_quadrature() {
    for eta in [0.5, 1.2] {
        let exact = exact_mala_acceptance(eta);
        let cfg = ChainConfig::new(eta, 400_000, 3);
        let trace = run_mala(&Gaussian::standard(1), &cfg, &[0.0]).unwrap();
        let stats = acceptance_stats(&trace).unwrap();
        // Chains are autocorrelated; 0.005 is many standard errors at this length.
        assert!((stats.mean - exact).abs() < 0.005, "eta {eta}: mean {} vs exact {exact}", stats.mean);
        assert!((stats.accepted_fraction - exact).abs() < 0.005);
    }
}

#[test]
fn rwm_acceptance_matches_closed_form() {
    // For U = x²/2 and proposal x + η ξ, E[min(1, π(y)/π(x))] = (2/π) atan(2/η).
    let eta = 1.0;
    let exact = 2.0 / std::f64::consts::PI * (2.0f64 / eta).atan();
    let trace = run_rwm(&Gaussian::standard(1), &ChainConfig::new(eta, 400_000, 5), &[0.0]).unwrap();
    let stats = acceptance_stats(&trace).unwrap();
    assert!((stats.accepted_fraction - exact).abs() < 0.005, "{} vs {exact}", stats.accepted_fraction);
}

#[test]
fn hanson_wright_empirical_tail_matches_chi_square() {
    let d = 10;
    let xi = 1.5 * (2.0 * d as f64).sqrt();
    let rep = hanson_wright_check(d, xi, 1_000_000, 17).unwrap();
    let exact = 1.0 - ChiSquared::new(d as f64).unwrap().cdf(xi * xi);
    assert!(rep.holds && rep.empirical <= rep.bound);
    assert!((rep.empirical - exact).abs() <= 4.0 * (exact / 1e6).sqrt() + 1e-7, "{} vs {exact}", rep.empirical);
}
