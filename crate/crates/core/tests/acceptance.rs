//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails. Pass criterion numbers as arguments to run a subset:
//! `cargo test --test acceptance -- 1 4 8`.

use std::collections::HashMap;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use switchchain::chain::{sample_uniform, ChainOptions, ChainState, StepOutcome, TriangleTracking};
use switchchain::construct::{havel_hakimi, TieBreak};
use switchchain::degseq::DegreeSequence;
use switchchain::experiments::{
    run_ccm_success, run_delta_histogram, run_ecm_vs_urg, run_mixing_distribution, run_scaling_fit,
    ExperimentConfig, ExperimentKind, Model, SequenceMode,
};
use switchchain::graph::SimpleGraph;
use switchchain::oracle::{
    all_graphical_sequences_with_isolated, enumerate_graphs, max_triangles, Enumerator,
};
use switchchain::stats::{
    empirical_mixing_time, loglog_fit, pearson_correlation, tv_distance, TriangleHistogram,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (u32, &'static str, fn() -> Verdict);

const CRITERIA: &[Criterion] = &[
    (1, "exact stationarity on {2,2,2,2,2,2}", exact_stationarity),
    (
        2,
        "triangle distribution on {4,4,3,3,3,2,1}",
        triangle_stationarity,
    ),
    (
        3,
        "Havel-Hakimi near-maximality for n = 8",
        havel_hakimi_near_max,
    ),
    (4, "max triangles spot value", max_triangles_spot),
    (5, "CCMd success rate", ccmd_success),
    (6, "CCMdu bimodality", ccmdu_bimodality),
    (7, "incremental triangle delta integrity", delta_integrity),
    (8, "TV and fit unit values", tv_fit_values),
    (9, "scaling exponent consistency", scaling_exponent),
    (10, "ECM below URG at tau 2.1", ecm_below_urg),
    (11, "mixing time growth", mixing_growth),
    (12, "success rate correlation sign", success_correlation),
];

fn main() {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for &(id, name, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let clock = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let tag = if v.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!v.pass);
        println!(
            "[{tag}] criterion {id:>2} {name}: {} ({:.1}s)",
            v.detail,
            clock.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn seq(d: &[u32]) -> DegreeSequence {
    DegreeSequence::new(d.to_vec()).unwrap()
}

fn on_demand(g: SimpleGraph) -> ChainState {
    ChainState::with_options(
        g,
        ChainOptions {
            tracking: TriangleTracking::OnDemand,
            ..ChainOptions::default()
        },
    )
    .unwrap()
}

fn config(kind: ExperimentKind, n: usize, taus: &[f64], seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.n_values = vec![n];
    cfg.tau_values = taus.to_vec();
    cfg.base_seed = seed;
    cfg
}

/// Visit frequencies of the chain over the 70 labeled 2-regular graphs on 6
/// vertices, recorded every 50 steps of a 10^7-step run.
fn exact_stationarity() -> Verdict {
    const STEPS: u64 = 10_000_000;
    const THIN: u64 = 50;
    let s = seq(&[2; 6]);
    let all = enumerate_graphs(&s).unwrap();
    let shape: Vec<(u64, u64)> = all
        .triangle_distribution
        .iter()
        .map(|(&k, &c)| (k, c))
        .collect();
    let masks = all.masks();
    let index: HashMap<u128, usize> = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut state = on_demand(havel_hakimi(&s, TieBreak::Stable).unwrap());
    let mut counts = vec![0u64; masks.len()];
    for _ in 0..STEPS / THIN {
        state.advance(THIN, &mut rng).unwrap();
        counts[index[&state.graph().edge_mask().unwrap()]] += 1;
    }
    let expected = (STEPS / THIN) as f64 / masks.len() as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let df = (masks.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(df).unwrap().cdf(chi2);
    let pass = masks.len() == 70 && shape == [(0, 60), (2, 10)] && p > 0.001;
    verdict(
        pass,
        format!(
            "{} graphs ({} cycles, {} triangle pairs), chi2 = {chi2:.1} on {df} df, p = {p:.4} (need > 0.001)",
            masks.len(),
            all.triangle_distribution.get(&0).copied().unwrap_or(0),
            all.triangle_distribution.get(&2).copied().unwrap_or(0),
        ),
    )
}

fn triangle_stationarity() -> Verdict {
    let s = seq(&[4, 4, 3, 3, 3, 2, 1]);
    let exact: TriangleHistogram = {
        let mut h = TriangleHistogram::new();
        for (&k, &c) in &enumerate_graphs(&s).unwrap().triangle_distribution {
            h.add_many(k, c);
        }
        h
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let empirical: TriangleHistogram = (0..10_000)
        .map(|_| {
            sample_uniform(&s, 2000.0, &mut rng)
                .unwrap()
                .count_triangles()
        })
        .collect();
    let tv = tv_distance(&empirical, &exact).unwrap();
    verdict(
        tv < 0.05,
        format!("TV = {tv:.4} over 10000 samples (need < 0.05)"),
    )
}

fn havel_hakimi_near_max() -> Verdict {
    let all = all_graphical_sequences_with_isolated(8).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for tie in [TieBreak::Stable, TieBreak::Alternating] {
        let mut matching = 0usize;
        let mut deficit = 0u64;
        for d in &all {
            let positive: Vec<u32> = d.iter().copied().filter(|&x| x > 0).collect();
            if positive.is_empty() {
                matching += 1;
                continue;
            }
            let s = seq(&positive);
            let best = Enumerator::default()
                .triangle_profile(s.degrees())
                .unwrap()
                .max_triangles
                .unwrap();
            let got = havel_hakimi(&s, tie).unwrap().count_triangles();
            assert!(got <= best);
            if got == best {
                matching += 1;
            } else {
                deficit += best - got;
            }
        }
        let misses = all.len() - matching;
        let mean_deficit = if misses > 0 {
            deficit as f64 / misses as f64
        } else {
            0.0
        };
        let frac = matching as f64 / all.len() as f64;
        let ok = (frac - 1022.0 / 1213.0).abs() <= 0.05 && (mean_deficit - 1.57).abs() <= 0.5;
        pass &= ok;
        lines.push(format!(
            "{tie:?} {matching}/{} matching, mean deficit {mean_deficit:.3}",
            all.len()
        ));
    }
    verdict(
        pass,
        format!(
            "{} (target 1022/1213 +-0.05, deficit 1.57 +-0.5)",
            lines.join("; ")
        ),
    )
}

fn max_triangles_spot() -> Verdict {
    let s = seq(&[4, 4, 3, 3, 3, 2, 1]);
    let max = max_triangles(&s).unwrap();
    let stable = havel_hakimi(&s, TieBreak::Stable)
        .unwrap()
        .count_triangles();
    let alternating = havel_hakimi(&s, TieBreak::Alternating)
        .unwrap()
        .count_triangles();
    verdict(
        max == 5 && stable == 3 && alternating == 5,
        format!("max = {max}, Havel-Hakimi stable = {stable}, alternating = {alternating} (need 5, 3, 5)"),
    )
}

fn ccm_config(taus: &[f64], sequences: usize, seed: u64) -> ExperimentConfig {
    let mut cfg = config(ExperimentKind::CcmSuccess, 1000, taus, seed);
    cfg.sequence_mode = SequenceMode::Iid;
    cfg.sequences = sequences;
    cfg.attempts = 100;
    cfg
}

fn ccmd_success() -> Verdict {
    let out = run_ccm_success(&ccm_config(&[2.1, 2.5, 2.9], 200, 5)).unwrap();
    let rows: Vec<_> = out.rows.iter().filter(|r| r.method == "ccmd").collect();
    let attempts: u64 = rows.iter().map(|r| r.attempts).sum();
    let successes: u64 = rows.iter().map(|r| r.successes).sum();
    let rate = successes as f64 / attempts as f64;
    verdict(
        rows.len() == 600 && out.failures.is_empty() && rate >= 0.999,
        format!(
            "{successes}/{attempts} over {} sequences, rate {rate:.5} (need >= 0.999)",
            rows.len()
        ),
    )
}

fn ccmdu_bimodality() -> Verdict {
    let mut details = Vec::new();
    for seed in [6, 106] {
        let out = run_ccm_success(&ccm_config(&[2.1], 500, seed)).unwrap();
        let rates: Vec<f64> = out
            .rows
            .iter()
            .filter(|r| r.method == "ccmdu")
            .map(|r| r.rate())
            .collect();
        let low = rates.iter().filter(|&&r| r <= 0.05).count();
        let high = rates.iter().filter(|&&r| r >= 0.95).count();
        let frac = high as f64 / rates.len() as f64;
        let ok = rates.len() == 500 && low >= 1 && frac >= 0.8;
        details.push(format!(
            "seed {seed}: {low} sequences <= 0.05, {frac:.3} >= 0.95"
        ));
        if ok {
            return verdict(
                true,
                format!("{} (need >= 1 and >= 0.8)", details.join("; ")),
            );
        }
    }
    verdict(
        false,
        format!("{} (need >= 1 and >= 0.8)", details.join("; ")),
    )
}

/// Accepted moves on Erdos-Renyi graphs, each delta checked against a full
/// recount.
fn delta_integrity() -> Verdict {
    const CHECKS: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    let mut graphs = 0usize;
    while checked < CHECKS {
        let n = rng.random_range(10..=200);
        let p = rng.random_range(0.02..0.25);
        let mut g = SimpleGraph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    g.add_edge(u as u32, v as u32).unwrap();
                }
            }
        }
        if g.edge_count() < 2 {
            continue;
        }
        graphs += 1;
        let mut state = ChainState::new(g);
        let mut before = state.graph().count_triangles();
        let mut local = 0;
        while local < 1000 && checked < CHECKS {
            if let StepOutcome::Accepted { delta } = state.step(&mut rng).unwrap() {
                let after = state.graph().count_triangles();
                if delta != Some(after as i64 - before as i64) {
                    mismatches += 1;
                }
                before = after;
                local += 1;
                checked += 1;
            } else if state.stats().proposals() > 100_000 && local == 0 {
                break;
            }
        }
    }
    verdict(
        mismatches == 0,
        format!("{checked} accepted switches on {graphs} graphs, {mismatches} mismatches (need 0)"),
    )
}

fn hist(pairs: &[(u64, u64)]) -> TriangleHistogram {
    let mut h = TriangleHistogram::new();
    for &(k, c) in pairs {
        h.add_many(k, c);
    }
    h
}

fn tv_fit_values() -> Verdict {
    const EPS: f64 = 1e-12;
    let mut failures = Vec::new();
    let check = |failures: &mut Vec<String>, name: &str, got: f64, want: f64| {
        if (got - want).abs() > EPS {
            failures.push(format!("{name}: {got} != {want}"));
        }
    };
    let p = hist(&[(0, 3), (1, 5), (4, 2)]);
    check(&mut failures, "tv(p, p)", tv_distance(&p, &p).unwrap(), 0.0);
    check(
        &mut failures,
        "tv disjoint",
        tv_distance(&hist(&[(0, 4), (1, 1)]), &hist(&[(2, 7)])).unwrap(),
        1.0,
    );
    check(
        &mut failures,
        "tv half",
        tv_distance(&hist(&[(0, 1), (1, 1)]), &hist(&[(0, 1)])).unwrap(),
        0.5,
    );

    // Reference uniform on 0..100; checkpoint histograms shifted by k put
    // exactly k/100 of their mass outside the reference support.
    let reference = hist(&(0..100).map(|k| (k, 1)).collect::<Vec<_>>());
    let shifted = |k: u64| hist(&(k..k + 100).map(|v| (v, 1)).collect::<Vec<_>>());
    let n = 50u64;
    let series: Vec<(u64, TriangleHistogram)> = [50, 30, 9, 4]
        .iter()
        .enumerate()
        .map(|(i, &k)| ((i as u64 + 1) * n, shifted(k)))
        .collect();
    for ((_, h), want) in series.iter().zip([0.5, 0.3, 0.09, 0.04]) {
        check(
            &mut failures,
            "tv series",
            tv_distance(h, &reference).unwrap(),
            want,
        );
    }
    let mixing = empirical_mixing_time(&series, &reference, 0.1).unwrap();
    if mixing != Some(3 * n) {
        failures.push(format!("mixing time {mixing:?} != {}", 3 * n));
    }
    let first = empirical_mixing_time(&series[3..], &reference, 0.1).unwrap();
    if first != Some(4 * n) {
        failures.push(format!("first checkpoint below threshold gave {first:?}"));
    }
    let never = empirical_mixing_time(&series[..2], &reference, 0.1).unwrap();
    if never.is_some() {
        failures.push(format!("series above threshold gave {never:?}"));
    }

    let exact = loglog_fit(&[(10.0, 100.0), (100.0, 10000.0)]).unwrap();
    check(&mut failures, "exact a", exact.a, 2.0);
    check(&mut failures, "exact b", exact.b, 0.0);

    let noisy = [
        (100.0, 7.3),
        (200.0, 12.9),
        (400.0, 26.1),
        (800.0, 44.0),
        (1600.0, 97.5),
    ];
    let fit = loglog_fit(&noisy).unwrap();
    let (a, b) = normal_equations(&noisy);
    check(&mut failures, "noisy a", fit.a, a);
    check(&mut failures, "noisy b", fit.b, b);
    let scaled: Vec<(f64, f64)> = noisy.iter().map(|&(x, y)| (x, 3.5 * y)).collect();
    let shifted_fit = loglog_fit(&scaled).unwrap();
    check(&mut failures, "scaled a", shifted_fit.a, fit.a);
    check(
        &mut failures,
        "scaled b",
        shifted_fit.b,
        fit.b + 3.5f64.ln(),
    );

    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "all examples within 1e-12".to_string()
        } else {
            failures.join("; ")
        },
    )
}

/// Solves the 2x2 normal equations of the log-log regression by Cramer's rule.
fn normal_equations(points: &[(f64, f64)]) -> (f64, f64) {
    let k = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let det = k * sxx - sx * sx;
    ((k * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det)
}

fn scaling_exponent() -> Verdict {
    let mut cfg = config(ExperimentKind::ScalingFit, 500, &[2.5], 9);
    cfg.n_values = vec![500, 1000, 2000, 4000];
    cfg.replicas = 200;
    let out = run_scaling_fit(&cfg).unwrap();
    let means: Vec<String> = out
        .points
        .iter()
        .filter(|p| p.model == Model::Urg)
        .map(|p| format!("{}:{:.1}", p.n, p.mean_triangles))
        .collect();
    match out.fit(2.5, Model::Urg) {
        Some(f) => verdict(
            (0.75..=1.35).contains(&f.a),
            format!(
                "a = {:.3} from means [{}] (need in [0.75, 1.35])",
                f.a,
                means.join(", ")
            ),
        ),
        None => verdict(false, "no fit"),
    }
}

fn ecm_below_urg() -> Verdict {
    let mut cfg = config(ExperimentKind::EcmVsUrg, 2000, &[2.1], 10);
    cfg.replicas = 500;
    let out = run_ecm_vs_urg(&cfg).unwrap();
    let c = &out.cases[0];
    let (ecm, urg) = (c.ecm_mean(), c.urg_mean());
    verdict(
        ecm < urg,
        format!("ECM mean {ecm:.1}, URG mean {urg:.1} over 500 samples each (need ECM < URG)"),
    )
}

fn mixing_growth() -> Verdict {
    let mut times = Vec::new();
    for n in [100, 200, 400, 800] {
        let mut cfg = config(ExperimentKind::MixingDistribution, n, &[2.5], 11);
        cfg.replicas = 5000;
        let out = run_mixing_distribution(&cfg).unwrap();
        times.push((n, out.cases[0].mixing_time));
    }
    let shown: Vec<String> = times
        .iter()
        .map(|(n, t)| format!("{n}:{}", t.map_or("none".into(), |t| t.to_string())))
        .collect();
    let mut ratios = Vec::new();
    let mut pass = true;
    for w in times.windows(2) {
        match (w[0].1, w[1].1) {
            (Some(a), Some(b)) if a > 0 => {
                let r = b as f64 / a as f64;
                pass &= r <= 3.0;
                ratios.push(format!("{r:.2}"));
            }
            _ => {
                pass = false;
                ratios.push("undefined".into());
            }
        }
    }
    verdict(
        pass,
        format!(
            "mixing times [{}], ratios [{}] (need <= 3)",
            shown.join(", "),
            ratios.join(", ")
        ),
    )
}

fn success_correlation() -> Verdict {
    let mut cfg = config(ExperimentKind::DeltaHistogram, 1000, &[2.1], 12);
    cfg.sequence_mode = SequenceMode::Iid;
    cfg.sequences = 300;
    cfg.replicas = 1;
    let out = run_delta_histogram(&cfg).unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = out
        .cases
        .iter()
        .filter(|c| c.mean_triangles > 0.0)
        .filter_map(|c| c.success_rate().map(|s| (c.mean_triangles.ln(), s)))
        .unzip();
    match pearson_correlation(&xs, &ys) {
        Some(r) => verdict(
            r < 0.0,
            format!("r = {r:.3} over {} sequences (need < 0)", xs.len()),
        ),
        None => verdict(false, "correlation undefined"),
    }
}
