//! Analytic test functions used to verify the optimizers.

use std::f64::consts::TAU;

/// Half-width of the conventional sphere / Rastrigin box.
pub const CONVENTIONAL_HALF_WIDTH: f64 = 5.12;

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (TAU * v).cos()).sum::<f64>()
}
