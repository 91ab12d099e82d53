//! Monte Carlo validation beyond the acceptance suite: scheme agreement,
//! long-run stationary functionals, and transform matching on a lambda grid.
//! All runs are seeded; the fixtures were verified to sit well inside their
//! statistical bands.

use affine2f::model::{LambdaPair, ModelParams, State};
use affine2f::riccati::transform_exponent;
use affine2f::sampler::{
    simulate_terminal, simulate_y_euler, simulate_y_exact, InitialCondition, PathGrid, RngStream,
    Scheme,
};
use affine2f::stationary::stationary_moment;

fn params(a: f64, b: f64, m: f64, theta: f64, alpha: f64) -> ModelParams {
    ModelParams::new(a, b, m, theta, alpha).unwrap()
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Two-sample Kolmogorov–Smirnov distance.
fn ks_distance(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

#[test]
fn euler_matches_exact_in_distribution_at_alpha_two() {
    let p = params(1.0, 1.0, 0.0, 1.0, 2.0);
    let n_paths = 100_000;

    let exact_grid = PathGrid::new(1.0, 1).unwrap();
    let mut rng = RngStream::new(501, 0).rng();
    let exact: Vec<f64> = (0..n_paths)
        .map(|_| {
            *simulate_y_exact(&mut rng, 1.0, &exact_grid, &p)
                .unwrap()
                .last()
                .unwrap()
        })
        .collect();

    let euler_grid = PathGrid::new(1.0, 512).unwrap();
    let mut rng = RngStream::new(502, 0).rng();
    let euler: Vec<f64> = (0..n_paths)
        .map(|_| {
            *simulate_y_euler(&mut rng, 1.0, &euler_grid, &p)
                .unwrap()
                .last()
                .unwrap()
        })
        .collect();

    // weak agreement of the first two moments
    let (me, se_e) = mean_and_se(&exact);
    let (mu, se_u) = mean_and_se(&euler);
    let joint = (se_e * se_e + se_u * se_u).sqrt();
    assert!((me - mu).abs() <= 3.0 * joint + 2e-3, "means {me} vs {mu}");
    let (qe, se_qe) = mean_and_se(&exact.iter().map(|y| y * y).collect::<Vec<_>>());
    let (qu, se_qu) = mean_and_se(&euler.iter().map(|y| y * y).collect::<Vec<_>>());
    let joint = (se_qe * se_qe + se_qu * se_qu).sqrt();
    assert!(
        (qe - qu).abs() <= 3.0 * joint + 5e-3,
        "second moments {qe} vs {qu}"
    );

    let d = ks_distance(exact, euler);
    assert!(d <= 0.02, "KS distance {d}");
}

/// Not asserted (no convergence-order claim is available for the Euler
/// scheme with a stable driver); run with `--ignored --nocapture` to print
/// the empirical dt-refinement table against the exact sampler.
#[test]
#[ignore]
fn euler_dt_refinement_table() {
    let p = params(1.0, 1.0, 0.0, 1.0, 2.0);
    let n_paths = 50_000;
    let exact_grid = PathGrid::new(1.0, 1).unwrap();
    let mut rng = RngStream::new(901, 0).rng();
    let exact: Vec<f64> = (0..n_paths)
        .map(|_| {
            *simulate_y_exact(&mut rng, 1.0, &exact_grid, &p)
                .unwrap()
                .last()
                .unwrap()
        })
        .collect();
    println!("alpha = 2, y0 = 1, T = 1: KS(exact, euler) by step count");
    for n_steps in [32usize, 64, 128, 256, 512] {
        let grid = PathGrid::new(1.0, n_steps).unwrap();
        let mut rng = RngStream::new(902, 0).rng();
        let euler: Vec<f64> = (0..n_paths)
            .map(|_| {
                *simulate_y_euler(&mut rng, 1.0, &grid, &p)
                    .unwrap()
                    .last()
                    .unwrap()
            })
            .collect();
        println!(
            "  n_steps = {n_steps:4}: KS = {:.5}",
            ks_distance(exact.clone(), euler)
        );
    }
}

#[test]
fn long_run_second_moment_of_x() {
    // E X_inf^2 = (a theta + 2 b m^2) / (2 b theta^2)
    let p = params(1.0, 1.0, 0.5, 1.0, 2.0);
    let target =
        (p.a() * p.theta() + 2.0 * p.b() * p.m() * p.m()) / (2.0 * p.b() * p.theta() * p.theta());
    assert!((stationary_moment(0, 2, &p).unwrap() - target).abs() < 1e-14);

    let grid = PathGrid::new(15.0, 750).unwrap();
    let init = InitialCondition::StationaryY {
        x0: p.m() / p.theta(),
    };
    let samples = simulate_terminal(601, &init, &grid, 30_000, Scheme::Exact, &p).unwrap();
    let squares: Vec<f64> = samples.iter().map(|&(_, x)| x * x).collect();
    let (mean, se) = mean_and_se(&squares);
    assert!(
        (mean - target).abs() <= 3.0 * se + 2e-3,
        "mean {mean} target {target} se {se}"
    );
}

#[test]
fn transform_agreement_on_lambda_grid() {
    let lambdas = [(0.5, 0.0), (1.0, 1.0), (2.0, -1.5)];
    for &alpha in &[2.0, 1.5] {
        let p = params(1.0, 1.0, 0.0, 1.0, alpha);
        let scheme = if alpha == 2.0 {
            Scheme::Exact
        } else {
            Scheme::Euler
        };
        let n_steps = if alpha == 2.0 { 64 } else { 512 };
        let grid = PathGrid::new(1.0, n_steps).unwrap();
        let init = State::new(1.0, 0.0).unwrap();
        let samples = simulate_terminal(
            700 + alpha as u64,
            &InitialCondition::Fixed(init),
            &grid,
            40_000,
            scheme,
            &p,
        )
        .unwrap();
        for &(l1, l2) in &lambdas {
            let lambda = LambdaPair::new(l1, l2).unwrap();
            let exponent = transform_exponent(&lambda, 1.0, &init, 1e-10, &p).unwrap();
            let target = exponent.exp();
            let re: Vec<f64> = samples
                .iter()
                .map(|&(y, x)| (-l1 * y).exp() * (l2 * x).cos())
                .collect();
            let im: Vec<f64> = samples
                .iter()
                .map(|&(y, x)| (-l1 * y).exp() * (l2 * x).sin())
                .collect();
            let (mre, sre) = mean_and_se(&re);
            let (mim, sim) = mean_and_se(&im);
            assert!(
                (mre - target.re).abs() <= 3.0 * sre + 2e-3,
                "alpha={alpha} lambda=({l1},{l2}): re {mre} vs {}",
                target.re
            );
            if l2 != 0.0 {
                assert!(
                    (mim - target.im).abs() <= 3.0 * sim + 2e-3,
                    "alpha={alpha} lambda=({l1},{l2}): im {mim} vs {}",
                    target.im
                );
            }
        }
    }
}
