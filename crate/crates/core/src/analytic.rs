//! Closed-form average LOS probability between two UAV layers.
//!
//! Chain: single-building LOS probability under Rayleigh heights, the
//! expected number of buildings a link of horizontal length `l` meets,
//! the independent-blockage power law, the same-street floor `P₀`, and
//! finally the average over the distance distribution of uniformly placed
//! endpoints in an `A × A` patch.
//!
//! Distances fed to the building-count model are in kilometres because β is
//! per km²; everything else is in meters.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::quad;
use crate::scene::ItuParams;

/// Mass of the polynomial distance density on `0 < k < 1`: `π − 8/3 + 1/2`.
pub const POLY_MASS: f64 = PI - 8.0 / 3.0 + 0.5;

/// Gaussian upper tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightPair {
    pub h1: f64,
    pub h2: f64,
}

impl HeightPair {
    pub fn new(h1: f64, h2: f64) -> Result<Self> {
        if !(h1.is_finite() && h1 >= 0.0) {
            return Err(Error::param("h1", format!("{h1} must be ≥ 0")));
        }
        if !(h2.is_finite() && h2 >= 0.0) {
            return Err(Error::param("h2", format!("{h2} must be ≥ 0")));
        }
        Ok(Self { h1, h2 })
    }

    pub fn equal(h: f64) -> Result<Self> {
        Self::new(h, h)
    }

    pub fn h_min(&self) -> f64 {
        self.h1.min(self.h2)
    }

    pub fn h_max(&self) -> f64 {
        self.h1.max(self.h2)
    }

    pub fn delta_h(&self) -> f64 {
        (self.h1 - self.h2).abs()
    }
}

/// LOS probability past one building whose height is Rayleigh(γ), the link
/// height at the building being uniform between the two endpoint heights.
///
/// The bracket runs from the lower to the higher endpoint, which is what
/// makes the `Δh → 0` limit agree with `1 − e^{−h²/2γ²}`.
pub fn p_los_single(hp: &HeightPair, gamma: f64) -> f64 {
    let dh = hp.delta_h();
    let lo = hp.h_min();
    let p = if dh == 0.0 {
        -(-(lo * lo) / (2.0 * gamma * gamma)).exp_m1()
    } else {
        let bracket = q_function(lo / gamma) - q_function(hp.h_max() / gamma);
        1.0 - (2.0 * PI).sqrt() * gamma / dh * bracket
    };
    p.clamp(0.0, 1.0)
}

/// Mean building count along a horizontal span of `l_km`: `2√(αβ/π)·l + α`.
pub fn expected_buildings(l_km: f64, alpha: f64, beta_per_km2: f64) -> f64 {
    crossing_slope(alpha, beta_per_km2) * l_km + alpha
}

/// `2√(αβ/π)`, buildings per km of link.
fn crossing_slope(alpha: f64, beta_per_km2: f64) -> f64 {
    2.0 * (alpha * beta_per_km2 / PI).sqrt()
}

pub fn p_los_at_distance(l_km: f64, hp: &HeightPair, params: &ItuParams) -> f64 {
    let p1 = p_los_single(hp, params.gamma_m);
    p1.powf(expected_buildings(l_km, params.alpha, params.beta_per_km2))
}

/// Probability that both endpoints share a street, `P₀`, clamped to `[0, 1]`.
pub fn same_street_probability(params: &ItuParams) -> Result<f64> {
    let beta_s = params.beta_per_km2 * params.area_km2();
    if beta_s.is_nan() || beta_s <= 0.0 {
        return Err(Error::param("beta_per_km2", format!("β·S = {beta_s} must be > 0")));
    }
    let a = params.alpha;
    let street = 2.0 * (1.0 - a.sqrt()).powi(2) / ((1.0 - a) * beta_s.sqrt());
    Ok((street + params.d_correction).clamp(0.0, 1.0))
}

fn corrected_with(p0: f64, l_km: f64, hp: &HeightPair, params: &ItuParams) -> f64 {
    p0 + (1.0 - p0) * p_los_at_distance(l_km, hp, params)
}

pub fn corrected_p_los(l_km: f64, hp: &HeightPair, params: &ItuParams) -> Result<f64> {
    Ok(corrected_with(same_street_probability(params)?, l_km, hp, params))
}

/// Polynomial density of `l / A` for uniform endpoints in a square (unnormalized on `[0, 1)`).
pub fn distance_pdf_poly(k: f64) -> f64 {
    if k > 0.0 && k < 1.0 {
        2.0 * PI * k - 8.0 * k * k + 2.0 * k * k * k
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentMode {
    /// The quoted moments μ = 0.52·A, σ = 0.06·A, with σ read as a standard deviation.
    #[default]
    Paper,
    /// Moments of the renormalized polynomial density.
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PdfChoice {
    Poly,
    #[default]
    Gauss,
}

/// Mean and standard deviation of the link distance, in units of the patch side `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceMoments {
    pub mu: f64,
    pub sigma: f64,
}

impl DistanceMoments {
    pub const QUOTED: Self = Self { mu: 0.52, sigma: 0.06 };

    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::param("mu", format!("{mu} must be > 0")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("{sigma} must be > 0")));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu_m(&self, patch_side_m: f64) -> f64 {
        self.mu * patch_side_m
    }

    pub fn sigma_m(&self, patch_side_m: f64) -> f64 {
        self.sigma * patch_side_m
    }
}

pub fn distance_moments(mode: MomentMode) -> DistanceMoments {
    match mode {
        MomentMode::Paper => DistanceMoments::QUOTED,
        MomentMode::Derived => {
            let m = |p: i32| {
                quad::integrate(|k| k.powi(p) * distance_pdf_poly(k), 0.0, 1.0, 1e-15, 1e-13)
                    .expect("smooth polynomial")
                    .value
            };
            let mass = m(0);
            let mean = m(1) / mass;
            let var = m(2) / mass - mean * mean;
            DistanceMoments { mu: mean, sigma: var.sqrt() }
        }
    }
}

/// Gaussian stand-in for the distance density, per meter; zero for `l ≤ 0`.
pub fn distance_pdf_gauss(l_m: f64, m: &DistanceMoments, patch_side_m: f64) -> f64 {
    if l_m <= 0.0 {
        return 0.0;
    }
    let mu = m.mu_m(patch_side_m);
    let sigma = m.sigma_m(patch_side_m);
    let z = (l_m - mu) / sigma;
    (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * sigma)
}

/// Averages the corrected LOS probability over the chosen distance density.
pub fn average_p_los_numeric(
    hp: &HeightPair,
    params: &ItuParams,
    pdf: PdfChoice,
    moments: &DistanceMoments,
) -> Result<f64> {
    let p0 = same_street_probability(params)?;
    let side = params.patch_side_m;
    let f = |l_m: f64| corrected_with(p0, l_m / 1000.0, hp, params);
    let integral = match pdf {
        PdfChoice::Poly => quad::integrate(|k| f(k * side) * distance_pdf_poly(k), 0.0, 1.0, 1e-13, 1e-10)?.value / POLY_MASS,
        PdfChoice::Gauss => {
            let mu = moments.mu_m(side);
            let sigma = moments.sigma_m(side);
            let lo = (mu - 12.0 * sigma).max(0.0);
            let hi = mu + 12.0 * sigma;
            quad::integrate(|l| f(l) * distance_pdf_gauss(l, moments, side), lo, hi, 1e-13, 1e-10)?.value
        }
    };
    Ok(integral.clamp(0.0, 1.0))
}

/// Ingredients of the Gaussian closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub p0: f64,
    pub p_single: f64,
    /// Effective building count exponent η.
    pub eta: f64,
    /// Shifted Gaussian centre Γ, meters.
    pub shifted_mean_m: f64,
    /// True when Γ < 2σ (or `P₁` vanishes) and the value collapses to `P₀`.
    pub street_only: bool,
    pub value: f64,
}

const LN_GUARD: f64 = 1e-30;

pub fn closed_form(hp: &HeightPair, params: &ItuParams, moments: &DistanceMoments) -> Result<ClosedForm> {
    let p0 = same_street_probability(params)?;
    let p1 = p_los_single(hp, params.gamma_m);
    let side = params.patch_side_m;
    let mu_km = moments.mu_m(side) / 1000.0;
    let sigma_km = moments.sigma_m(side) / 1000.0;
    let slope = crossing_slope(params.alpha, params.beta_per_km2);
    let s2 = sigma_km * sigma_km;

    if p1 <= LN_GUARD {
        return Ok(ClosedForm {
            p0,
            p_single: p1,
            eta: f64::NAN,
            shifted_mean_m: f64::NEG_INFINITY,
            street_only: true,
            value: p0,
        });
    }
    let ln_p1 = p1.ln();
    let shifted = mu_km + slope * ln_p1 * s2;
    let eta = params.alpha + slope * mu_km + 2.0 * params.alpha * params.beta_per_km2 / PI * s2 * ln_p1;
    let street_only = shifted < 2.0 * sigma_km;
    let value = if street_only { p0 } else { p0 + (1.0 - p0) * p1.powf(eta) };
    Ok(ClosedForm {
        p0,
        p_single: p1,
        eta,
        shifted_mean_m: shifted * 1000.0,
        street_only,
        value: value.clamp(0.0, 1.0),
    })
}

pub fn average_p_los_closed(hp: &HeightPair, params: &ItuParams, moments: &DistanceMoments) -> Result<f64> {
    closed_form(hp, params, moments).map(|c| c.value)
}
