#![allow(dead_code)]

use relaypower_core::model::{NetworkScenario, Physics, Point};

/// Unit noise, SNR target 10, `relays` placeholder positions. Strategies
/// only read the noise power and target from it.
pub fn unit_scenario(relays: usize) -> NetworkScenario {
    let positions = (0..relays)
        .map(|i| Point::new(50.0, 1.0 + i as f64))
        .collect();
    NetworkScenario::new(
        Point::new(0.0, 0.0),
        Point::new(100.0, 0.0),
        positions,
        Physics::default(),
        1.0,
        10.0,
    )
    .unwrap()
}

/// `k` standard errors of a sample mean.
pub fn within_se(mean: f64, expected: f64, sd: f64, n: usize, k: f64) -> bool {
    (mean - expected).abs() <= k * sd / (n as f64).sqrt()
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
