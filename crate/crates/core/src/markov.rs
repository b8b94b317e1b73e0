//! Two-state distance-homogeneous LOS/NLOS Markov model.
//!
//! A trace is a sequence of link states sampled every `Δd` meters along a
//! flight path. Paths that are interrupted (e.g. by skipping positions inside
//! a building) are stored as separate segments: transitions and runs never
//! bridge a segment boundary.

use std::ops::AddAssign;

use rand::Rng;

use crate::error::{Error, Result};
use crate::quad;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum LinkState {
    Nlos = 0,
    Los = 1,
}

impl LinkState {
    pub fn from_los(los: bool) -> Self {
        if los { LinkState::Los } else { LinkState::Nlos }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Self {
        match self {
            LinkState::Nlos => LinkState::Los,
            LinkState::Los => LinkState::Nlos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateTrace {
    delta_d: f64,
    states: Vec<LinkState>,
    /// Start offsets of each contiguous segment; always begins with 0.
    segment_starts: Vec<usize>,
}

impl StateTrace {
    pub fn new(delta_d: f64, states: Vec<LinkState>) -> Result<Self> {
        Self::from_segments(delta_d, vec![states])
    }

    /// Builds a trace from contiguous pieces. Empty pieces are dropped.
    pub fn from_segments(delta_d: f64, segments: Vec<Vec<LinkState>>) -> Result<Self> {
        if !(delta_d > 0.0 && delta_d.is_finite()) {
            return Err(Error::param("delta_d", format!("{delta_d} must be > 0")));
        }
        let mut states = Vec::with_capacity(segments.iter().map(Vec::len).sum());
        let mut segment_starts = Vec::new();
        for seg in segments.into_iter().filter(|s| !s.is_empty()) {
            segment_starts.push(states.len());
            states.extend(seg);
        }
        if states.len() < 2 {
            return Err(Error::TraceTooShort(states.len()));
        }
        Ok(Self {
            delta_d,
            states,
            segment_starts,
        })
    }

    pub fn delta_d(&self) -> f64 {
        self.delta_d
    }

    pub fn states(&self) -> &[LinkState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn segment_starts(&self) -> &[usize] {
        &self.segment_starts
    }

    pub fn segments(&self) -> impl Iterator<Item = &[LinkState]> + '_ {
        let ends = self.segment_starts[1..].iter().copied().chain(std::iter::once(self.states.len()));
        self.segment_starts.iter().zip(ends).map(move |(&a, b)| &self.states[a..b])
    }

    pub fn los_fraction(&self) -> f64 {
        self.states.iter().filter(|&&s| s == LinkState::Los).count() as f64 / self.states.len() as f64
    }
}

/// Transition counts `counts[from][to]` with the derived ML probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransitionEstimate {
    pub counts: [[u64; 2]; 2],
}

impl TransitionEstimate {
    /// Number of transitions out of `state`.
    pub fn sources(&self, state: LinkState) -> u64 {
        let row = self.counts[state.index()];
        row[0] + row[1]
    }

    pub fn n0(&self) -> u64 {
        self.sources(LinkState::Nlos)
    }

    pub fn n1(&self) -> u64 {
        self.sources(LinkState::Los)
    }

    /// `None` when `from` never occurs as a transition source.
    pub fn probability(&self, from: LinkState, to: LinkState) -> Option<f64> {
        let n = self.sources(from);
        (n > 0).then(|| self.counts[from.index()][to.index()] as f64 / n as f64)
    }

    pub fn p00(&self) -> Option<f64> {
        self.probability(LinkState::Nlos, LinkState::Nlos)
    }

    pub fn p01(&self) -> Option<f64> {
        self.probability(LinkState::Nlos, LinkState::Los)
    }

    pub fn p10(&self) -> Option<f64> {
        self.probability(LinkState::Los, LinkState::Nlos)
    }

    pub fn p11(&self) -> Option<f64> {
        self.probability(LinkState::Los, LinkState::Los)
    }
}

impl AddAssign for TransitionEstimate {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..2 {
            for j in 0..2 {
                self.counts[i][j] += rhs.counts[i][j];
            }
        }
    }
}

pub fn estimate_transitions(trace: &StateTrace) -> TransitionEstimate {
    let mut est = TransitionEstimate::default();
    for seg in trace.segments() {
        for w in seg.windows(2) {
            est.counts[w[0].index()][w[1].index()] += 1;
        }
    }
    est
}

/// Per-meter transition rates: μ (NLOS→LOS) and λ (LOS→NLOS).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovRates {
    pub mu: f64,
    pub lambda: f64,
}

impl MarkovRates {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::param("mu", format!("{mu} must be ≥ 0")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", format!("{lambda} must be ≥ 0")));
        }
        Ok(Self { mu, lambda })
    }

    /// Step probability of leaving `state` over `delta_d`.
    pub fn leave_probability(&self, state: LinkState, delta_d: f64) -> f64 {
        let rate = match state {
            LinkState::Nlos => self.mu,
            LinkState::Los => self.lambda,
        };
        -(-rate * delta_d).exp_m1()
    }

    /// Long-run LOS fraction μ/(μ+λ).
    pub fn stationary_los(&self) -> f64 {
        self.mu / (self.mu + self.lambda)
    }
}

/// `−ln(1 − p)/Δd` for the probability `p` of leaving `state` in one step.
pub fn rate_from_probability(p: f64, delta_d: f64, state: LinkState) -> Result<f64> {
    if p >= 1.0 {
        return Err(Error::SaturatedTransition(state));
    }
    Ok(-(-p).ln_1p() / delta_d)
}

pub fn rates_from_transitions(est: &TransitionEstimate, delta_d: f64) -> Result<MarkovRates> {
    let leave = |s: LinkState| -> Result<f64> {
        let p = est.probability(s, s.other()).ok_or(Error::UndefinedTransitionRow(s))?;
        rate_from_probability(p, delta_d, s)
    };
    Ok(MarkovRates {
        mu: leave(LinkState::Nlos)?,
        lambda: leave(LinkState::Los)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifeDistances {
    /// 1/λ; infinite when λ = 0.
    pub los_m: f64,
    /// 1/μ; infinite when μ = 0.
    pub nlos_m: f64,
}

pub fn life_distance_expectations(rates: &MarkovRates) -> LifeDistances {
    LifeDistances {
        los_m: 1.0 / rates.lambda,
        nlos_m: 1.0 / rates.mu,
    }
}

/// Expected LOS life time `∫₀^∞ f(x·E[d_LOS])·e^{−x} dx` for a distance→time map `f`.
pub fn expected_life_time<F: Fn(f64) -> f64>(rates: &MarkovRates, distance_to_time: F) -> Result<f64> {
    let mean = life_distance_expectations(rates).los_m;
    if !mean.is_finite() {
        return Err(Error::Quadrature("LOS life distance is unbounded (λ = 0)".into()));
    }
    let integrand = |x: f64| {
        let w = (-x).exp();
        if w == 0.0 { 0.0 } else { distance_to_time(x * mean) * w }
    };
    Ok(quad::integrate_to_infinity(integrand, 0.0, 1e-14, 1e-10)?.value)
}

/// Lengths (in meters) of maximal runs of `state`. The first and last run of
/// every segment are censored by the segment boundary and left out.
pub fn run_lengths(trace: &StateTrace, state: LinkState) -> Vec<f64> {
    let mut out = Vec::new();
    for seg in trace.segments() {
        let runs: Vec<(LinkState, usize)> = seg.chunk_by(|a, b| a == b).map(|c| (c[0], c.len())).collect();
        if runs.len() <= 2 {
            continue;
        }
        out.extend(
            runs[1..runs.len() - 1]
                .iter()
                .filter(|(s, _)| *s == state)
                .map(|&(_, n)| n as f64 * trace.delta_d()),
        );
    }
    out
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    /// Per meter.
    pub rate: f64,
    pub ks: f64,
    pub n: usize,
}

/// Fits `Exp(1/mean)` to continuous samples and reports the KS distance.
pub fn fit_exponential(runs: &[f64]) -> Result<ExponentialFit> {
    if runs.len() < 2 {
        return Err(Error::NotEnoughSamples { needed: 2, got: runs.len() });
    }
    let mean = runs.iter().sum::<f64>() / runs.len() as f64;
    let rate = 1.0 / mean;
    let ks = ks_statistic(runs, |x| -(-rate * x).exp_m1());
    Ok(ExponentialFit { rate, ks, n: runs.len() })
}

/// Exponential fit for run lengths observed on a `Δd` lattice.
///
/// The per-step exit probability is `Δd / mean`, converted to a rate the same
/// way transition probabilities are. The KS distance is taken at the lattice
/// points, where the empirical and fitted CDFs are both defined.
pub fn fit_exponential_lattice(runs: &[f64], delta_d: f64) -> Result<ExponentialFit> {
    if runs.len() < 2 {
        return Err(Error::NotEnoughSamples { needed: 2, got: runs.len() });
    }
    let mut steps: Vec<u64> = runs.iter().map(|r| (r / delta_d).round().max(1.0) as u64).collect();
    steps.sort_unstable();
    let n = steps.len() as f64;
    let mean_steps = steps.iter().sum::<u64>() as f64 / n;
    let exit = 1.0 / mean_steps;
    let rate = rate_from_probability(exit, delta_d, LinkState::Los)?;
    let mut ks: f64 = 0.0;
    let mut i = 0;
    while i < steps.len() {
        let k = steps[i];
        let mut j = i;
        while j < steps.len() && steps[j] == k {
            j += 1;
        }
        let fitted = -(-rate * k as f64 * delta_d).exp_m1();
        let before = -(-rate * (k - 1) as f64 * delta_d).exp_m1();
        ks = ks.max((j as f64 / n - fitted).abs()).max((i as f64 / n - before).abs());
        i = j;
    }
    Ok(ExponentialFit { rate, ks, n: steps.len() })
}

/// Samples a Markov trace with per-step exit probabilities `1 − e^{−rate·Δd}`.
pub fn simulate_two_state(
    rates: &MarkovRates,
    delta_d: f64,
    n_steps: usize,
    initial: LinkState,
    seed: u64,
) -> Result<StateTrace> {
    let mut rng = rng::seeded(seed);
    let leave = [
        rates.leave_probability(LinkState::Nlos, delta_d),
        rates.leave_probability(LinkState::Los, delta_d),
    ];
    let mut s = initial;
    let mut states = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        states.push(s);
        if rng.random::<f64>() < leave[s.index()] {
            s = s.other();
        }
    }
    StateTrace::new(delta_d, states)
}
