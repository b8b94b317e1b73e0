//! End-to-end acceptance checks. Runs every criterion, prints one PASS/FAIL
//! line each (details indented below it) and exits nonzero if any fail.
//!
//!     cargo test --release -p uavlos-core --test acceptance

mod common;

use std::time::{Duration, Instant};

use common::{single_building_oracle, test_rng};
use rand::Rng;
use uavlos_core::analytic::{average_p_los_numeric, closed_form, p_los_single};
use uavlos_core::experiments::{build_scenes, sample_uniform_pair, sweep_heights, validate_building_count, validate_distance_pdf};
use uavlos_core::markov::{
    estimate_transitions, fit_exponential, fit_exponential_lattice, rates_from_transitions, run_lengths, simulate_two_state,
};
use uavlos_core::{io, HeightPair, LinkState, MarkovRates, PdfChoice, SweepConfig, SweepTable};

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let config = SweepConfig::default();
    let moments = config.moments();
    let (mut checked, mut worst, mut worst_at) = (0, 0.0f64, (0.0, 0.0));
    let mut details = Vec::new();
    for &t in &config.tx_heights {
        for &r in &config.rx_heights {
            let hp = HeightPair::new(t, r).unwrap();
            let c = closed_form(&hp, &config.params, &moments).unwrap();
            if c.street_only {
                details.push(format!("({t}, {r}) skipped: Γ < 2σ"));
                continue;
            }
            let numeric = average_p_los_numeric(&hp, &config.params, PdfChoice::Gauss, &moments).unwrap();
            checked += 1;
            if (c.value - numeric).abs() > worst {
                worst = (c.value - numeric).abs();
                worst_at = (t, r);
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst <= 0.03 && within(elapsed, 1.0),
        summary: format!(
            "closed form vs Gaussian quadrature: worst |Δ| = {worst:.2e} at {worst_at:?} over {checked} pairs (≤ 0.03), {:.3} s (< 1 s)",
            elapsed.as_secs_f64()
        ),
        details,
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (mut worst, mut n) = (0.0f64, 0);
    for gamma in [8.0, 13.3, 20.0] {
        for i in 0..20 {
            for j in 0..20 {
                let (h1, h2) = (60.0 * i as f64 / 19.0, 60.0 * j as f64 / 19.0);
                let exact = p_los_single(&HeightPair::new(h1, h2).unwrap(), gamma);
                worst = worst.max((exact - single_building_oracle(h1, h2, gamma)).abs());
                n += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst < 1e-3 && within(elapsed, 10.0),
        summary: format!(
            "single building vs double quadrature: worst |Δ| = {worst:.2e} over {n} points (< 1e-3), {:.2} s (< 10 s)",
            elapsed.as_secs_f64()
        ),
        details: vec![],
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let l1 = validate_distance_pdf(1_000_000, 100, 3).unwrap();
    let mut rng = test_rng(33);
    let n = 1_000_000;
    let mean = (0..n).map(|_| sample_uniform_pair(1.0, &mut rng).distance).sum::<f64>() / n as f64;
    let elapsed = start.elapsed();
    Outcome {
        pass: l1 < 0.03 && (mean - 0.5214).abs() <= 0.002 && within(elapsed, 10.0),
        summary: format!(
            "pair distances: histogram L1 = {l1:.4} (< 0.03), mean = {mean:.4}A (0.5214 ± 0.002), {:.2} s (< 10 s)",
            elapsed.as_secs_f64()
        ),
        details: vec![],
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let config = SweepConfig::default();
    let scenes = build_scenes(&config).unwrap();
    let per_scene = 100_000 / scenes.len();
    let mut pass = true;
    let mut details = Vec::new();
    for length in [100.0, 200.0, 400.0] {
        let mut rng = test_rng(400 + length as u64);
        let (mut sum, mut predicted) = (0.0, 0.0);
        for scene in &scenes {
            let c = validate_building_count(scene, length, per_scene, &mut rng).unwrap();
            sum += c.empirical_mean;
            predicted = c.predicted;
        }
        let empirical = sum / scenes.len() as f64;
        let rel = (empirical - predicted).abs() / predicted;
        pass &= rel <= 0.15;
        details.push(format!(
            "l = {length} m: empirical {empirical:.3}, predicted {predicted:.3}, relative error {:.1}%",
            100.0 * rel
        ));
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: pass && within(elapsed, 60.0),
        summary: format!(
            "mean buildings crossed vs linear count model within 15% for l ∈ {{100, 200, 400}} m, {:.1} s (< 60 s)",
            elapsed.as_secs_f64()
        ),
        details,
    }
}

fn criterion_5(table: &SweepTable, elapsed: Duration) -> Outcome {
    let mut details = Vec::new();
    let mut inside = 0;
    let mut worst = (0.0f64, 0.0, 0.0);
    for r in &table.rows {
        let gap = (r.plos_mc - r.plos_closed).abs();
        inside += usize::from(gap <= 0.1);
        if gap > worst.0 {
            worst = (gap, r.tx_h, r.rx_h);
        }
        details.push(format!(
            "({:>2}, {:>2}) mc {:.4} ± {:.4}  closed {:.4}  gauss {:.4}  poly {:.4}  gap {:+.4}{}",
            r.tx_h,
            r.rx_h,
            r.plos_mc,
            r.plos_ci95,
            r.plos_closed,
            r.plos_numeric_gauss,
            r.plos_numeric_poly,
            r.plos_mc - r.plos_closed,
            if gap > 0.1 { "  > 0.1" } else { "" }
        ));
    }
    Outcome {
        pass: inside == table.rows.len() && within(elapsed, 600.0),
        summary: format!(
            "MC vs closed form within 0.1: {inside}/{} pairs, worst {:.3} at ({}, {}), sweep {:.1} s (< 600 s)",
            table.rows.len(),
            worst.0,
            worst.1,
            worst.2,
            elapsed.as_secs_f64()
        ),
        details,
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let truth = MarkovRates::new(0.05, 0.02).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    let mut details = Vec::new();

    let trace = simulate_two_state(&truth, 2.0, 50_000, LinkState::Nlos, 1).unwrap();
    let rates = rates_from_transitions(&estimate_transitions(&trace), 2.0).unwrap();
    let rates_ok = rel(rates.mu, 0.05) < 0.05 && rel(rates.lambda, 0.02) < 0.05;
    details.push(format!(
        "5e4 steps: mu {:.5} ({:.1}%), lambda {:.5} ({:.1}%)",
        rates.mu,
        100.0 * rel(rates.mu, 0.05),
        rates.lambda,
        100.0 * rel(rates.lambda, 0.02)
    ));

    let long = simulate_two_state(&truth, 2.0, 4_000_000, LinkState::Nlos, 2).unwrap();
    let runs = run_lengths(&long, LinkState::Los);
    let mean = runs.iter().sum::<f64>() / runs.len() as f64;
    let life_ok = rel(mean, 1.0 / truth.lambda) < 0.05 && runs.len() >= 100_000;
    let lattice = fit_exponential_lattice(&runs, 2.0).unwrap();
    details.push(format!(
        "{} LOS runs: mean {mean:.2} m vs 1/lambda = 50 m ({:.1}%), lattice KS {:.4}",
        runs.len(),
        100.0 * rel(mean, 50.0),
        lattice.ks
    ));

    let mut rng = test_rng(66);
    let draws: Vec<f64> = (0..100_000).map(|_| -(1.0 - rng.random::<f64>()).ln() / 0.05).collect();
    let fit = fit_exponential(&draws).unwrap();
    details.push(format!("1e5 exponential draws: rate {:.5}, KS {:.4}", fit.rate, fit.ks));

    let ks_ok = lattice.ks < 0.01 && fit.ks < 0.01 && rel(fit.rate, 0.05) < 0.02;
    let elapsed = start.elapsed();
    Outcome {
        pass: rates_ok && life_ok && ks_ok && within(elapsed, 10.0),
        summary: format!(
            "Markov recovery: rates {}, life distance {}, exponential KS {}, {:.2} s (< 10 s)",
            if rates_ok { "ok" } else { "off" },
            if life_ok { "ok" } else { "off" },
            if ks_ok { "ok" } else { "off" },
            elapsed.as_secs_f64()
        ),
        details,
    }
}

/// Adjacent values may not drop by more than their joint CI, and the ends
/// must be separated by their CIs.
fn trend_ok(values: &[(f64, f64)]) -> bool {
    let steps = values.windows(2).all(|w| w[1].0 - w[0].0 >= -(w[0].1 + w[1].1));
    let (first, last) = (values[0], values[values.len() - 1]);
    steps && last.0 - last.1 > first.0 + first.1
}

fn criterion_7(table: &SweepTable, elapsed: Duration) -> Outcome {
    let row = |t: f64, r: f64| table.rows.iter().find(|x| x.tx_h == t && x.rx_h == r).unwrap();
    let at20: Vec<_> = table.rows.iter().filter(|x| x.tx_h == 20.0).collect();
    let plos: Vec<(f64, f64)> = at20.iter().map(|x| (x.plos_mc, x.plos_ci95)).collect();
    let dlos: Vec<(f64, f64)> = at20.iter().map(|x| (x.markov.mean_dlos, x.markov.mean_dlos_ci95)).collect();
    let (lo, hi) = (row(10.0, 2.0), row(50.0, 50.0));
    let (lo, hi) = (&lo.markov, &hi.markov);
    let mu_ok = hi.mu - hi.mu_ci95 > lo.mu + lo.mu_ci95;
    let (p_ok, d_ok) = (trend_ok(&plos), trend_ok(&dlos));
    let fmt = |v: &[(f64, f64)], digits: usize| {
        v.iter().map(|(m, c)| format!("{m:.digits$}±{c:.digits$}")).collect::<Vec<_>>().join(", ")
    };
    Outcome {
        pass: p_ok && d_ok && mu_ok && within(elapsed, 600.0),
        summary: format!(
            "trends at tx 20 m: P_LOS {}, E[d_LOS] {}; mu(10,2) < mu(50,50) {}, sweep {:.1} s (< 600 s)",
            if p_ok { "ok" } else { "off" },
            if d_ok { "ok" } else { "off" },
            if mu_ok { "ok" } else { "off" },
            elapsed.as_secs_f64()
        ),
        details: vec![
            format!("P_LOS over rx 2..50 m: {}", fmt(&plos, 4)),
            format!("E[d_LOS] m over rx 2..50 m: {}", fmt(&dlos, 2)),
            format!("mu(10,2) = {:.5} ± {:.5}, mu(50,50) = {:.5} ± {:.5}", lo.mu, lo.mu_ci95, hi.mu, hi.mu_ci95),
        ],
    }
}

fn sweep_csv(config: &SweepConfig, threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let table = pool.install(|| sweep_heights(config)).unwrap();
    let mut out = Vec::new();
    io::write_sweep(&table, &mut out).unwrap();
    out
}

fn criterion_8(default_table: &SweepTable) -> Outcome {
    let start = Instant::now();
    let mut reference = Vec::new();
    io::write_sweep(default_table, &mut reference).unwrap();
    let rerun = sweep_csv(&SweepConfig::default(), 3);
    let reduced = SweepConfig {
        n_samples: 20_000,
        n_scenes: 2,
        ..SweepConfig::default()
    };
    let runs: Vec<Vec<u8>> = [1, 2, 7].iter().map(|&t| sweep_csv(&reduced, t)).collect();
    let same_default = rerun == reference;
    let same_reduced = runs.windows(2).all(|w| w[0] == w[1]);
    Outcome {
        pass: same_default && same_reduced,
        summary: format!(
            "byte-identical sweep CSV: default config rerun on 3 workers {}, reduced config on 1/2/7 workers {}, {:.1} s",
            if same_default { "identical" } else { "differs" },
            if same_reduced { "identical" } else { "differs" },
            start.elapsed().as_secs_f64()
        ),
        details: vec![],
    }
}

fn main() {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |n: usize, o: Outcome| {
        println!("criterion {n} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.summary);
        for d in &o.details {
            println!("    {d}");
        }
        results.push((n, o));
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());

    let start = Instant::now();
    let table = sweep_heights(&SweepConfig::default()).expect("default sweep");
    let sweep_time = start.elapsed();
    report(5, criterion_5(&table, sweep_time));
    report(6, criterion_6());
    report(7, criterion_7(&table, sweep_time));
    report(8, criterion_8(&table));

    let failed: Vec<usize> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    println!();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
    } else {
        println!("acceptance: {} of {} criteria fail: {failed:?}", failed.len(), results.len());
        std::process::exit(1);
    }
}
