//! Test-only numerics, independent of the crate's own quadrature.
#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Composite Simpson rule with `n` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Standard normal upper tail by brute-force integration of the density.
pub fn q_oracle(x: f64) -> f64 {
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if x < 0.0 {
        return 1.0 - q_oracle(-x);
    }
    simpson(phi, x, x + 40.0, 400_000)
}

/// Single-building LOS probability straight from the double integral: the
/// chance a Rayleigh building is shorter than the link, averaged along it.
pub fn single_building_oracle(h1: f64, h2: f64, gamma: f64) -> f64 {
    let pdf = |h: f64| h / (gamma * gamma) * (-h * h / (2.0 * gamma * gamma)).exp();
    simpson(|s| simpson(pdf, 0.0, s * h1 + (1.0 - s) * h2, 200), 0.0, 1.0, 200)
}

/// A generator unrelated to the crate's ChaCha8 substreams.
pub fn test_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}
