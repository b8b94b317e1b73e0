mod common;

use common::test_rng;
use proptest::prelude::*;
use rand::Rng;
use uavlos_core::markov::{
    estimate_transitions, fit_exponential, rate_from_probability, rates_from_transitions, run_lengths,
    simulate_two_state, TransitionEstimate,
};
use uavlos_core::{LinkState, MarkovRates, StateTrace};

const L: LinkState = LinkState::Los;
const N: LinkState = LinkState::Nlos;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b
}

#[test]
fn rate_from_ten_percent_step() {
    let mu = rate_from_probability(0.1, 2.0, N).unwrap();
    assert!((mu - 0.05268).abs() < 1e-5, "{mu}");
    assert!((mu - 0.9f64.ln() / -2.0).abs() < 1e-15);
    assert_eq!(rate_from_probability(0.0, 2.0, N).unwrap(), 0.0);
}

#[test]
fn probability_rate_round_trip() {
    for &mu in &[0.0, 1e-6, 0.003, 0.05, 0.7, 3.0] {
        let r = MarkovRates::new(mu, 0.0).unwrap();
        let p = r.leave_probability(N, 2.0);
        assert!((p - (1.0 - (-mu * 2.0f64).exp())).abs() < 1e-15);
        assert!((rate_from_probability(p, 2.0, N).unwrap() - mu).abs() <= 1e-12 * mu.max(1.0));
    }
}

#[test]
fn recovers_simulated_rates() {
    let truth = MarkovRates::new(0.05, 0.02).unwrap();
    let trace = simulate_two_state(&truth, 2.0, 50_000, N, 1).unwrap();
    let got = rates_from_transitions(&estimate_transitions(&trace), 2.0).unwrap();
    assert!(rel(got.mu, 0.05) < 0.05, "mu {}", got.mu);
    assert!(rel(got.lambda, 0.02) < 0.05, "lambda {}", got.lambda);
}

#[test]
fn stationary_los_fraction() {
    let truth = MarkovRates::new(0.05, 0.02).unwrap();
    let trace = simulate_two_state(&truth, 2.0, 1_000_000, L, 2).unwrap();
    let expected = 0.05 / 0.07;
    assert!((truth.stationary_los() - expected).abs() < 1e-15);
    assert!(rel(trace.los_fraction(), expected) < 0.02, "{}", trace.los_fraction());
}

#[test]
fn zero_rates_give_constant_trace() {
    let t = simulate_two_state(&MarkovRates::new(0.0, 0.0).unwrap(), 2.0, 1000, L, 3).unwrap();
    assert!(t.states().iter().all(|&s| s == L));
    let est = estimate_transitions(&t);
    assert_eq!(est.p11(), Some(1.0));
    assert_eq!(est.p01(), None);
}

#[test]
fn recovery_error_shrinks_with_length() {
    let truth = MarkovRates::new(0.05, 0.02).unwrap();
    let mean_err = |steps: usize| {
        (0..20)
            .map(|seed| {
                let t = simulate_two_state(&truth, 2.0, steps, N, 100 + seed).unwrap();
                match rates_from_transitions(&estimate_transitions(&t), 2.0) {
                    Ok(r) => rel(r.mu, 0.05) + rel(r.lambda, 0.02),
                    Err(_) => 2.0,
                }
            })
            .sum::<f64>()
            / 20.0
    };
    let (short, long) = (mean_err(1_000), mean_err(100_000));
    assert!(long < short / 3.0, "short {short} long {long}");
}

#[test]
fn mean_los_run_matches_inverse_rate() {
    let truth = MarkovRates::new(0.05, 0.02).unwrap();
    let trace = simulate_two_state(&truth, 2.0, 1_000_000, N, 4).unwrap();
    let runs = run_lengths(&trace, L);
    let mean = runs.iter().sum::<f64>() / runs.len() as f64;
    assert!(rel(mean, 50.0) < 0.05, "{mean} over {} runs", runs.len());
}

#[test]
fn exponential_fit_on_synthetic_draws() {
    let mut rng = test_rng(9);
    let draws: Vec<f64> = (0..100_000).map(|_| -(1.0 - rng.random::<f64>()).ln() / 0.05).collect();
    let fit = fit_exponential(&draws).unwrap();
    assert!(rel(fit.rate, 0.05) < 0.02, "{}", fit.rate);
    assert!(fit.ks < 0.01, "{}", fit.ks);
    assert_eq!(fit.n, 100_000);

    let same = fit_exponential(&[8.0; 5]).unwrap();
    assert!((same.rate - 0.125).abs() < 1e-15);
    assert!(fit_exponential(&[]).is_err());
    assert!(fit_exponential(&[3.0]).is_err());
}

/// Alternating exponential sojourns sampled every `step` meters.
fn sample_continuous(rates: &MarkovRates, step: f64, length: f64, seed: u64) -> StateTrace {
    let mut rng = test_rng(seed);
    let mut state = N;
    let mut switch_at = 0.0;
    let mut states = Vec::with_capacity((length / step) as usize);
    let mut x = 0.0;
    while x < length {
        while switch_at <= x {
            let rate = if state == N { rates.mu } else { rates.lambda };
            switch_at += -(1.0 - rng.random::<f64>()).ln() / rate;
            state = state.other();
        }
        states.push(state.other());
        x += step;
    }
    StateTrace::new(step, states).unwrap()
}

#[test]
fn rates_do_not_depend_on_sampling_step() {
    let truth = MarkovRates::new(0.05, 0.02).unwrap();
    let fine = sample_continuous(&truth, 1.0, 2.0e6, 21);
    let coarse = sample_continuous(&truth, 4.0, 2.0e6, 21);
    let a = rates_from_transitions(&estimate_transitions(&fine), 1.0).unwrap();
    let b = rates_from_transitions(&estimate_transitions(&coarse), 4.0).unwrap();
    assert!(rel(b.mu, a.mu) < 0.10, "{} vs {}", a.mu, b.mu);
    assert!(rel(b.lambda, a.lambda) < 0.10, "{} vs {}", a.lambda, b.lambda);
    assert!(rel(a.mu, 0.05) < 0.05 && rel(a.lambda, 0.02) < 0.05);
}

proptest! {
    #[test]
    fn transition_rows_are_stochastic(bits in prop::collection::vec(any::<bool>(), 2..400)) {
        let t = StateTrace::new(2.0, bits.iter().map(|&b| LinkState::from_los(b)).collect()).unwrap();
        let est = estimate_transitions(&t);
        prop_assert_eq!(est.n0() + est.n1(), bits.len() as u64 - 1);
        for from in [N, L] {
            match (est.probability(from, N), est.probability(from, L)) {
                (Some(a), Some(b)) => {
                    prop_assert_eq!(a + b, 1.0);
                    prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
                }
                (None, None) => prop_assert_eq!(est.sources(from), 0),
                _ => prop_assert!(false, "row half defined"),
            }
        }
    }

    #[test]
    fn counts_add_like_traces(a in prop::collection::vec(any::<bool>(), 2..100), b in prop::collection::vec(any::<bool>(), 2..100)) {
        let to = |v: &[bool]| v.iter().map(|&x| LinkState::from_los(x)).collect::<Vec<_>>();
        let split = StateTrace::from_segments(2.0, vec![to(&a), to(&b)]).unwrap();
        let mut sum = estimate_transitions(&StateTrace::new(2.0, to(&a)).unwrap());
        sum += estimate_transitions(&StateTrace::new(2.0, to(&b)).unwrap());
        prop_assert_eq!(estimate_transitions(&split), sum);
        prop_assert_eq!(TransitionEstimate::default().n0(), 0);
    }
}
