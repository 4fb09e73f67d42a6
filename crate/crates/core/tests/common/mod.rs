//! Shared helpers for the integration and acceptance suites.

use fipinn::distributions::Proposal;
use fipinn::failure::LimitState;

pub fn unit_square_prior() -> Proposal {
    Proposal::uniform_box(vec![(-1.0, 1.0), (-1.0, 1.0)]).unwrap()
}

/// g = x0 on the uniform square: exact failure probability 1/2.
pub fn half_space_lsf() -> LimitState<'static> {
    LimitState::new(1.0, |x: &[f64]| 1.0 + x[0]).unwrap()
}

/// g = 1/2 - |x - (1/2, 1/2)| on the uniform square: exact probability
/// pi (1/2)^2 / 4 = pi/16.
pub fn disk_lsf() -> LimitState<'static> {
    LimitState::new(0.5, |x: &[f64]| {
        let d = ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt();
        (1.0 - d).max(0.0)
    })
    .unwrap()
}

pub fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

/// Sample variance.
pub fn variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

pub fn accept_line(criterion: usize, pass: bool, detail: &str) {
    println!(
        "[ACCEPT] criterion {}: {} - {}",
        criterion,
        if pass { "PASS" } else { "FAIL" },
        detail
    );
}
