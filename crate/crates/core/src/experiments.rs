//! Monte Carlo harness tying synthetic scenes and the geometric engine to the
//! analytic and Markov models.
//!
//! Randomness is drawn from counter-based substreams keyed by
//! `(seed, tag, cell, chunk)`, so sweeps are bit-reproducible for any
//! number of rayon workers.

use rand::Rng;
use rayon::prelude::*;

use crate::analytic::{self, DistanceMoments, HeightPair, MomentMode, PdfChoice};
use crate::error::{Error, Result};
use crate::los::{self, Link, Point3};
use crate::markov::{self, LinkState, StateTrace, TransitionEstimate};
use crate::rng;
use crate::scene::{self, ItuParams, UrbanScene};

const TAG_SCENE: u64 = 0x5C3E;
const TAG_MC: u64 = 0x3C;
const MC_CHUNK: usize = 4096;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Distance kept between a nudged Tx and the footprint it was moved out of.
pub const TX_STREET_MARGIN_M: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub params: ItuParams,
    pub tx_heights: Vec<f64>,
    pub rx_heights: Vec<f64>,
    /// Uniform endpoint pairs per scene and height pair.
    pub n_samples: usize,
    pub n_scenes: usize,
    /// Flight-path sampling step, meters.
    pub delta_d: f64,
    pub seed: u64,
    pub moment_mode: MomentMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            params: ItuParams::urban_default(),
            tx_heights: vec![10.0, 15.0, 20.0, 25.0, 30.0, 50.0],
            rx_heights: vec![2.0, 10.0, 20.0, 30.0, 40.0, 50.0],
            n_samples: 100_000,
            n_scenes: 10,
            delta_d: 2.0,
            seed: 1,
            moment_mode: MomentMode::Paper,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_samples == 0 {
            return Err(Error::param("n_samples", "must be ≥ 1"));
        }
        if self.n_scenes == 0 {
            return Err(Error::param("n_scenes", "must be ≥ 1"));
        }
        if !(self.delta_d > 0.0 && self.delta_d.is_finite()) {
            return Err(Error::param("delta_d", format!("{} must be > 0", self.delta_d)));
        }
        for (name, hs) in [("tx_heights", &self.tx_heights), ("rx_heights", &self.rx_heights)] {
            if hs.is_empty() {
                return Err(Error::param(name, "empty height list"));
            }
            if let Some(h) = hs.iter().find(|h| !(h.is_finite() && **h >= 0.0)) {
                return Err(Error::param(name, format!("height {h} must be ≥ 0")));
            }
        }
        Ok(())
    }

    pub fn moments(&self) -> DistanceMoments {
        analytic::distance_moments(self.moment_mode)
    }

    pub fn scene_seed(&self, scene_index: usize) -> u64 {
        rng::derive_key(self.seed, &[TAG_SCENE, scene_index as u64])
    }
}

/// The `n_scenes` independent patches shared by every cell of a sweep.
pub fn build_scenes(config: &SweepConfig) -> Result<Vec<UrbanScene>> {
    (0..config.n_scenes)
        .map(|i| scene::generate_scene(config.params, config.scene_seed(i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformPair {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub distance: f64,
}

pub fn sample_uniform_pair<R: Rng + ?Sized>(side: f64, rng: &mut R) -> UniformPair {
    let a = (side * rng.random::<f64>(), side * rng.random::<f64>());
    let b = (side * rng.random::<f64>(), side * rng.random::<f64>());
    UniformPair {
        a,
        b,
        distance: (b.0 - a.0).hypot(b.1 - a.1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    /// Binomial 95% half-width.
    pub ci95: f64,
    pub los: u64,
    pub total: u64,
}

impl McEstimate {
    fn from_counts(los: u64, total: u64) -> Self {
        let p = los as f64 / total as f64;
        Self {
            estimate: p,
            ci95: Z95 * (p * (1.0 - p) / total as f64).sqrt(),
            los,
            total,
        }
    }
}

/// MC average LOS probability with freshly generated scenes (cell index 0).
pub fn estimate_avg_plos_mc(config: &SweepConfig, h1: f64, h2: f64) -> Result<McEstimate> {
    config.validate()?;
    let scenes = build_scenes(config)?;
    Ok(estimate_avg_plos_mc_on(&scenes, config, 0, h1, h2))
}

/// MC average LOS probability on given scenes, `n_samples` pairs each.
pub fn estimate_avg_plos_mc_on(scenes: &[UrbanScene], config: &SweepConfig, cell: usize, h1: f64, h2: f64) -> McEstimate {
    let chunks_per_scene = config.n_samples.div_ceil(MC_CHUNK);
    let los: u64 = (0..scenes.len() * chunks_per_scene)
        .into_par_iter()
        .map(|chunk| {
            let scene = &scenes[chunk / chunks_per_scene];
            let first = (chunk % chunks_per_scene) * MC_CHUNK;
            let n = MC_CHUNK.min(config.n_samples - first);
            let mut rng = rng::substream(config.seed, &[TAG_MC, cell as u64, chunk as u64]);
            let side = scene.patch_side();
            (0..n)
                .filter(|_| {
                    let pair = sample_uniform_pair(side, &mut rng);
                    let link = Link::new(Point3::new(pair.a.0, pair.a.1, h1), Point3::new(pair.b.0, pair.b.1, h2));
                    los::is_los(scene, &link)
                })
                .count() as u64
        })
        .sum();
    McEstimate::from_counts(los, (scenes.len() * config.n_samples) as u64)
}

/// States recorded along a serpentine Rx path, with the visited positions.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightTrace {
    /// `(x, y)` of every recorded sample, aligned with `trace.states()`.
    pub points: Vec<(f64, f64)>,
    pub trace: StateTrace,
}

/// Flies Rx over a serpentine lattice of pitch `delta_d` at `rx_height`,
/// recording the LOS state towards `tx`. Lattice points inside footprints are
/// skipped and split the trace into separate segments.
pub fn trace_path(scene: &UrbanScene, tx: Point3, rx_height: f64, delta_d: f64) -> Result<FlightTrace> {
    let side = scene.patch_side();
    if !(delta_d > 0.0 && delta_d <= side) {
        return Err(Error::param("delta_d", format!("{delta_d} must be in (0, {side}]")));
    }
    let n = (side / delta_d).floor() as usize;
    let mut points = Vec::with_capacity(n * n);
    let mut segments: Vec<Vec<LinkState>> = Vec::new();
    let mut current: Vec<LinkState> = Vec::new();
    for row in 0..n {
        let y = (row as f64 + 0.5) * delta_d;
        for k in 0..n {
            let col = if row % 2 == 0 { k } else { n - 1 - k };
            let x = (col as f64 + 0.5) * delta_d;
            if scene.footprint_at(x, y).is_some() {
                if !current.is_empty() {
                    segments.push(std::mem::take(&mut current));
                }
                continue;
            }
            let link = Link::new(tx, Point3::new(x, y, rx_height));
            current.push(LinkState::from_los(los::is_los(scene, &link)));
            points.push((x, y));
        }
    }
    segments.push(current);
    Ok(FlightTrace {
        points,
        trace: StateTrace::from_segments(delta_d, segments)?,
    })
}

/// Moves a point that lies inside a footprint to the nearest street position.
pub fn nudge_to_street(scene: &UrbanScene, x: f64, y: f64) -> (f64, f64) {
    let Some(i) = scene.footprint_at(x, y) else {
        return (x, y);
    };
    let b = scene.buildings()[i];
    let reach = b.half_side + TX_STREET_MARGIN_M;
    let side = scene.patch_side();
    let mut options = [
        (b.center_x - reach, y),
        (b.center_x + reach, y),
        (x, b.center_y - reach),
        (x, b.center_y + reach),
    ];
    options.sort_by(|p, q| {
        let dp = (p.0 - x).hypot(p.1 - y);
        let dq = (q.0 - x).hypot(q.1 - y);
        dp.total_cmp(&dq)
    });
    options
        .into_iter()
        .find(|&(px, py)| (0.0..=side).contains(&px) && (0.0..=side).contains(&py) && scene.footprint_at(px, py).is_none())
        .unwrap_or((x, y))
}

/// Patch centre plus the four points at `(±A/4, ±A/4)` from it, moved off rooftops.
pub fn tx_positions(scene: &UrbanScene) -> Vec<(f64, f64)> {
    let c = 0.5 * scene.patch_side();
    let q = 0.25 * scene.patch_side();
    [(c, c), (c - q, c - q), (c + q, c - q), (c - q, c + q), (c + q, c + q)]
        .into_iter()
        .map(|(x, y)| nudge_to_street(scene, x, y))
        .collect()
}

/// Markov model fitted from the serpentine traces of one height pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovFit {
    pub tx_h: f64,
    pub rx_h: f64,
    /// Pooled over every scene and Tx site.
    pub transitions: TransitionEstimate,
    /// NaN when the NLOS row is undefined or saturated.
    pub mu: f64,
    /// NaN when the LOS row is undefined or saturated.
    pub lambda: f64,
    pub mean_dlos: f64,
    pub mean_dnlos: f64,
    /// KS distance of pooled LOS run lengths against the lattice exponential fit.
    pub ks_los: f64,
    pub mu_ci95: f64,
    pub lambda_ci95: f64,
    pub mean_dlos_ci95: f64,
    pub los_runs: usize,
}

/// One row of a height sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tx_h: f64,
    pub rx_h: f64,
    pub plos_mc: f64,
    pub plos_ci95: f64,
    pub plos_closed: f64,
    pub plos_numeric_poly: f64,
    pub plos_numeric_gauss: f64,
    pub markov: MarkovFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub moments: DistanceMoments,
}

/// Rate and 95% half-width from a Markov-chain transition count
/// (asymptotic variance `p(1−p)/n` of the ML estimate, delta method to the rate).
fn rate_with_ci(est: &TransitionEstimate, from: LinkState, delta_d: f64) -> (f64, f64) {
    let n = est.sources(from);
    match est.probability(from, from.other()) {
        Some(p) if p < 1.0 => {
            let rate = markov::rate_from_probability(p, delta_d, from).unwrap_or(f64::NAN);
            let sd_p = (p * (1.0 - p) / n as f64).sqrt();
            (rate, Z95 * sd_p / ((1.0 - p) * delta_d))
        }
        _ => (f64::NAN, f64::NAN),
    }
}

fn fit_markov_cell(scenes: &[UrbanScene], txs: &[Vec<(f64, f64)>], config: &SweepConfig, tx_h: f64, rx_h: f64) -> Result<MarkovFit> {
    let mut transitions = TransitionEstimate::default();
    let mut runs = Vec::new();
    for (scene, positions) in scenes.iter().zip(txs) {
        for &(x, y) in positions {
            let ft = trace_path(scene, Point3::new(x, y, tx_h), rx_h, config.delta_d)?;
            transitions += markov::estimate_transitions(&ft.trace);
            runs.extend(markov::run_lengths(&ft.trace, LinkState::Los));
        }
    }
    let (mu, mu_ci95) = rate_with_ci(&transitions, LinkState::Nlos, config.delta_d);
    let (lambda, lambda_ci95) = rate_with_ci(&transitions, LinkState::Los, config.delta_d);
    let ks_los = markov::fit_exponential_lattice(&runs, config.delta_d).map_or(f64::NAN, |f| f.ks);
    Ok(MarkovFit {
        tx_h,
        rx_h,
        transitions,
        mu,
        lambda,
        mean_dlos: 1.0 / lambda,
        mean_dnlos: 1.0 / mu,
        ks_los,
        mu_ci95,
        lambda_ci95,
        mean_dlos_ci95: lambda_ci95 / (lambda * lambda),
        los_runs: runs.len(),
    })
}

fn sweep_cell(scenes: &[UrbanScene], txs: &[Vec<(f64, f64)>], config: &SweepConfig, cell: usize, tx_h: f64, rx_h: f64) -> Result<SweepRow> {
    let hp = HeightPair::new(tx_h, rx_h)?;
    let moments = config.moments();
    let mc = estimate_avg_plos_mc_on(scenes, config, cell, tx_h, rx_h);
    Ok(SweepRow {
        tx_h,
        rx_h,
        plos_mc: mc.estimate,
        plos_ci95: mc.ci95,
        plos_closed: analytic::average_p_los_closed(&hp, &config.params, &moments)?,
        plos_numeric_poly: analytic::average_p_los_numeric(&hp, &config.params, PdfChoice::Poly, &moments)?,
        plos_numeric_gauss: analytic::average_p_los_numeric(&hp, &config.params, PdfChoice::Gauss, &moments)?,
        markov: fit_markov_cell(scenes, txs, config, tx_h, rx_h)?,
    })
}

/// `(cell index, tx_h, rx_h)` in row-major order of the height grids.
pub fn height_cells(config: &SweepConfig) -> Vec<(usize, f64, f64)> {
    config
        .tx_heights
        .iter()
        .flat_map(|&t| config.rx_heights.iter().map(move |&r| (t, r)))
        .enumerate()
        .map(|(i, (t, r))| (i, t, r))
        .collect()
}

/// Markov fits for every height pair, without the LOS probability estimates.
pub fn fit_markov_grid(config: &SweepConfig) -> Result<Vec<MarkovFit>> {
    config.validate()?;
    let scenes = build_scenes(config)?;
    let txs: Vec<Vec<(f64, f64)>> = scenes.iter().map(tx_positions).collect();
    height_cells(config)
        .into_par_iter()
        .map(|(_, t, r)| fit_markov_cell(&scenes, &txs, config, t, r))
        .collect()
}

/// Evaluates every `(tx_h, rx_h)` pair: MC estimate, analytic values, and
/// Markov parameters from serpentine traces around five Tx sites per scene.
pub fn sweep_heights(config: &SweepConfig) -> Result<SweepTable> {
    config.validate()?;
    let scenes = build_scenes(config)?;
    let txs: Vec<Vec<(f64, f64)>> = scenes.iter().map(tx_positions).collect();
    let rows = height_cells(config)
        .into_par_iter()
        .map(|(cell, t, r)| sweep_cell(&scenes, &txs, config, cell, t, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        rows,
        moments: config.moments(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildingCountCheck {
    pub length_m: f64,
    pub n_links: usize,
    pub empirical_mean: f64,
    /// `2√(αβ/π)·l + α`.
    pub predicted: f64,
}

impl BuildingCountCheck {
    pub fn relative_error(&self) -> f64 {
        (self.empirical_mean - self.predicted).abs() / self.predicted
    }
}

/// A uniformly placed, uniformly oriented horizontal segment of the given
/// length lying entirely inside the patch (rejection sampled).
pub fn random_link_of_length<R: Rng + ?Sized>(side: f64, length: f64, rng: &mut R) -> Result<Link> {
    if !(length >= 0.0 && length < side * std::f64::consts::SQRT_2) {
        return Err(Error::param("length", format!("{length} m does not fit a {side} m patch")));
    }
    for _ in 0..1_000_000 {
        let (x, y) = (side * rng.random::<f64>(), side * rng.random::<f64>());
        let theta = std::f64::consts::TAU * rng.random::<f64>();
        let (bx, by) = (x + length * theta.cos(), y + length * theta.sin());
        if (0.0..=side).contains(&bx) && (0.0..=side).contains(&by) {
            return Ok(Link::new(Point3::new(x, y, 0.0), Point3::new(bx, by, 0.0)));
        }
    }
    Err(Error::param("length", format!("could not place a {length} m link")))
}

pub fn validate_building_count<R: Rng + ?Sized>(scene: &UrbanScene, length_m: f64, n_links: usize, rng: &mut R) -> Result<BuildingCountCheck> {
    if n_links == 0 {
        return Err(Error::NotEnoughSamples { needed: 1, got: 0 });
    }
    let mut total = 0usize;
    for _ in 0..n_links {
        let link = random_link_of_length(scene.patch_side(), length_m, rng)?;
        total += los::count_crossed_buildings(scene, &link);
    }
    let p = scene.params();
    Ok(BuildingCountCheck {
        length_m,
        n_links,
        empirical_mean: total as f64 / n_links as f64,
        predicted: analytic::expected_buildings(length_m / 1000.0, p.alpha, p.beta_per_km2),
    })
}

/// L1 distance between the histogram of `n` unit-square pair distances on
/// `[0, 1)` and the unnormalized polynomial density integrated per bin.
pub fn validate_distance_pdf(n: usize, bins: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::NotEnoughSamples { needed: 1, got: 0 });
    }
    if bins == 0 {
        return Err(Error::param("bins", "must be ≥ 1"));
    }
    let mut rng = rng::seeded(seed);
    let mut counts = vec![0u64; bins];
    for _ in 0..n {
        let d = sample_uniform_pair(1.0, &mut rng).distance;
        if d < 1.0 {
            counts[((d * bins as f64) as usize).min(bins - 1)] += 1;
        }
    }
    let antiderivative = |k: f64| std::f64::consts::PI * k * k - 8.0 / 3.0 * k.powi(3) + 0.5 * k.powi(4);
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let lo = i as f64 / bins as f64;
            let hi = (i + 1) as f64 / bins as f64;
            (c as f64 / n as f64 - (antiderivative(hi) - antiderivative(lo))).abs()
        })
        .sum())
}
