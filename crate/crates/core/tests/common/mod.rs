#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central first difference at 0, one Richardson step.
pub fn first_derivative(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

pub fn second_derivative(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let f0 = f(0.0);
    let d = |h: f64| (f(h) - 2.0 * f0 + f(-h)) / (h * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

pub fn third_derivative(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h * h * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// `f'''(0)` for `f = O(t^3)`, from `6 f(t) / t^3` at `h, h/2, h/4` with the first
/// two error orders removed.
pub fn cubic_coefficient(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let s = |t: f64| 6.0 * f(t) / (t * t * t);
    (8.0 * s(h / 4.0) - 6.0 * s(h / 2.0) + s(h)) / 3.0
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
