//! Monte Carlo `E(τ)` against tensor Gauss–Hermite quadrature for small `M`.

use scsparc_core::{denoiser_mse, DenoiserMse};

/// Nodes and weights of `n`-point Gauss–Hermite quadrature for the weight
/// `e^{-x²}`, by Newton iteration on the orthonormal Hermite recurrence.
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j + 1) as f64).sqrt() * p2 - (j as f64 / (j + 1) as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `E(τ)` for section size `m ≤ 4` by an `m`-fold tensor rule.
fn quadrature_mse(tau: f64, m: usize, nodes: usize) -> f64 {
    assert!((2..=4).contains(&m));
    let (x, w) = gauss_hermite(nodes);
    let norm = std::f64::consts::PI.sqrt();
    let mut total = 0.0;
    let mut idx = vec![0usize; m];
    loop {
        let u: Vec<f64> = idx.iter().map(|&k| std::f64::consts::SQRT_2 * x[k]).collect();
        let weight: f64 = idx.iter().map(|&k| w[k] / norm).product();
        let a1 = u[0] / tau.sqrt();
        let denom: f64 = (a1).exp() + (-1.0 / tau).exp() * u[1..].iter().map(|v| (v / tau.sqrt()).exp()).sum::<f64>();
        total += weight * a1.exp() / denom;
        // odometer
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < nodes {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == m {
                return total;
            }
        }
    }
}

#[test]
fn rule_integrates_gaussian_moments() {
    let (x, w) = gauss_hermite(40);
    let norm = std::f64::consts::PI.sqrt();
    let second: f64 = x.iter().zip(&w).map(|(x, w)| w / norm * 2.0 * x * x).sum();
    let fourth: f64 = x.iter().zip(&w).map(|(x, w)| w / norm * 4.0 * x.powi(4)).sum();
    assert!((second - 1.0).abs() < 1e-12);
    assert!((fourth - 3.0).abs() < 1e-10);
}

#[test]
fn monte_carlo_matches_quadrature_two_entries() {
    let q = quadrature_mse(1.0, 2, 60);
    let mc = denoiser_mse(1.0, 2, 100_000, 4).unwrap();
    assert!((mc.mean - q).abs() < 1e-3, "mc {mc:?} vs quadrature {q}");
    assert!((mc.mean - q).abs() < 4.0 * mc.std_err);
}

#[test]
fn monte_carlo_matches_quadrature_three_and_four_entries() {
    for (m, tau) in [(3, 0.5), (4, 2.0)] {
        let q = quadrature_mse(tau, m, 24);
        let mc = denoiser_mse(tau, m, 100_000, 8).unwrap();
        assert!((mc.mean - q).abs() < 4.0 * mc.std_err + 1e-4, "M={m}: mc {mc:?} vs {q}");
    }
}

#[test]
fn mse_is_nonincreasing_in_tau() {
    let mut est = DenoiserMse::new(512, 2000, 12).unwrap();
    let grid = [0.01, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 1.0, 3.0];
    let vals: Vec<_> = grid.iter().map(|&t| est.estimate(t).unwrap()).collect();
    for w in vals.windows(2) {
        let tol = 2.0 * (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt();
        assert!(w[1].mean <= w[0].mean + tol, "{:?} -> {:?}", w[0], w[1]);
    }
}
