//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use bandprec::estimators::{bayes_frobenius, estimate, graphical_mle};
use bandprec::gwishart::{
    band_posterior, credible_radius, log_ig_banded, log_ig_complete, log_marginal_likelihood,
    mean_matrix, sample_posterior,
};
use bandprec::harness::report::{run_to_json, table_to_csv};
use bandprec::harness::{run_experiment, Bandwidth, ExperimentConfig};
use bandprec::scenarios::{ar1_covariance, sample_mvn, scenario_truth, substream};
use bandprec::{EstimatorKind, NormKind, PriorOverK, PriorSpec, SampleStats, Scenario, ScenarioKind, SymMatrix};
use rand::Rng;
use statrs::function::gamma::ln_gamma;

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn table_config(kind: ScenarioKind, n: usize, p: usize, reps: usize) -> ExperimentConfig {
    ExperimentConfig {
        scenario: Scenario { kind, p, n, replications: reps, seed: SEED },
        estimators: EstimatorKind::ALL.to_vec(),
        bandwidth: Bandwidth::Auto { k_max: None },
        prior: PriorSpec::default(),
        rho_prior: PriorOverK::ExpQuartic,
        norms: vec![NormKind::LInfOp],
    }
}

fn linf_means(cfg: &ExperimentConfig) -> Vec<(EstimatorKind, f64, f64)> {
    let run = run_experiment(cfg).expect("experiment runs");
    cfg.estimators
        .iter()
        .map(|&e| {
            let c = run.table.cell(e, NormKind::LInfOp).unwrap();
            assert_eq!(c.failures, 0, "{} failed in some replications", e);
            (e, c.mean, c.sd)
        })
        .collect()
}

fn check_targets(means: &[(EstimatorKind, f64, f64)], targets: &[(EstimatorKind, f64, f64)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for &(e, target, tol) in targets {
        let (_, m, sd) = *means.iter().find(|x| x.0 == e).unwrap();
        let ok = (m - target).abs() <= tol;
        pass &= ok;
        parts.push(format!("{}={m:.3} (sd {sd:.3}; target {target} +/- {tol})", e.name()));
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn criterion_1() -> Outcome {
    let targets = [
        (EstimatorKind::GraphicalMle, 1.252, 0.09),
        (EstimatorKind::BayesStein, 1.175, 0.085),
        (EstimatorKind::CholeskyBanding, 1.249, 0.09),
    ];
    let means = linf_means(&table_config(ScenarioKind::Ar1 { rho: 0.3 }, 100, 50, 100));
    let mut out = check_targets(&means, &targets);
    if !out.pass {
        // diagnostic only: the same run with rho = 0.5
        let alt = linf_means(&table_config(ScenarioKind::Ar1 { rho: 0.5 }, 100, 50, 100));
        out.detail += &format!("; diagnostic with rho = 0.5: {}", check_targets(&alt, &targets).detail);
    }
    out
}

fn criterion_2() -> Outcome {
    let targets = [(EstimatorKind::GraphicalMle, 1.836, 0.12), (EstimatorKind::BayesFrobenius, 2.066, 0.13)];
    let cfg = table_config(ScenarioKind::Ar4, 100, 50, 100);
    let run = run_experiment(&cfg).unwrap();
    let mut ks: Vec<usize> = run.bandwidths.iter().flatten().copied().collect();
    ks.sort_unstable();
    let mut out = check_targets(&linf_means(&cfg), &targets);
    out.detail += &format!("; selected k in {}..={}", ks[0], ks[ks.len() - 1]);
    if !out.pass {
        // diagnostic only: fixed bandwidths around the true one
        for k in [4, 5] {
            let mut fixed = cfg.clone();
            fixed.bandwidth = Bandwidth::Fixed(k);
            let d = check_targets(&linf_means(&fixed), &targets).detail;
            out.detail += &format!("; diagnostic with fixed k = {k}: {d}");
        }
    }
    out
}

fn criterion_3() -> Outcome {
    let means = linf_means(&table_config(ScenarioKind::Fgn { hurst: 0.7 }, 200, 50, 100));
    check_targets(&means, &[(EstimatorKind::GraphicalMle, 1.184, 0.05)])
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut bad = Vec::new();
    for kind in [ScenarioKind::Ar1 { rho: 0.3 }, ScenarioKind::Ar4, ScenarioKind::Fgn { hurst: 0.7 }] {
        let by_n: Vec<_> = [100, 200, 500]
            .iter()
            .map(|&n| linf_means(&table_config(kind, n, 50, 100)))
            .collect();
        for (i, e) in EstimatorKind::ALL.iter().enumerate() {
            let m: Vec<f64> = by_n.iter().map(|row| row[i].1).collect();
            if !(m[0] > m[1] && m[1] > m[2]) {
                pass = false;
                bad.push(format!("{kind}/{}: {:.3} {:.3} {:.3}", e.name(), m[0], m[1], m[2]));
            }
        }
    }
    let detail = if pass {
        "15 (scenario, estimator) pairs strictly decreasing over n = 100, 200, 500".into()
    } else {
        format!("not decreasing: {}", bad.join("; "))
    };
    Outcome { pass, detail }
}

fn random_stats(p: usize, n: usize, seed: u64) -> SampleStats {
    let mut rng = substream(seed, 7);
    // heterogeneous scales and correlations
    let a = SymMatrix::from_fn(p, |i, j| {
        if i == j {
            1.0 + rng.random::<f64>()
        } else {
            0.6 * (rng.random::<f64>() - 0.5)
        }
    });
    let sigma = &SymMatrix::symmetrized(p, &a.matmul(&a)).unwrap() + &SymMatrix::identity(p).scaled(0.1);
    SampleStats::from_observations(&sample_mvn(&sigma, n, seed).unwrap())
}

fn criterion_5() -> Outcome {
    let mut rng = substream(SEED, 5);
    let mut worst: f64 = 0.0;
    let mut banded = true;
    for case in 0..100 {
        let p = rng.random_range(2..=30);
        let k = rng.random_range(0..=5usize).min(p - 1);
        let n = p + rng.random_range(5..=60);
        let st = random_stats(p, n, 1000 + case);
        let mle = graphical_mle(&st, k).unwrap();
        banded &= mle.band(k) == mle;
        let inv = mle.cholesky().unwrap().inverse();
        for i in 0..p {
            for j in i..p.min(i + k + 1) {
                worst = worst.max((inv.get(i, j) - st.s.get(i, j)).abs());
            }
        }
    }
    Outcome {
        pass: banded && worst <= 1e-8,
        detail: format!("max band residual {worst:.2e} (tol 1e-8), banded support {banded}"),
    }
}

fn scalar_evidence(x: &[f64], delta: f64) -> f64 {
    // omega ~ Gamma(shape delta/2, rate 1/2), x_i | omega ~ N(0, 1/omega)
    let n = x.len() as f64;
    let (a, b) = (delta / 2.0, 0.5f64);
    let ss: f64 = x.iter().map(|v| v * v).sum();
    -n / 2.0 * (2.0 * std::f64::consts::PI).ln() + ln_gamma(a + n / 2.0) - ln_gamma(a) + a * b.ln()
        - (a + n / 2.0) * (b + ss / 2.0).ln()
}

fn criterion_6() -> Outcome {
    let mut rng = substream(SEED, 6);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let p = rng.random_range(1..=8);
        let delta = 2.5 + 5.0 * rng.random::<f64>();
        let d = random_stats(p, p + 10, 2000 + case).s;
        let a = log_ig_banded(delta, &d, p - 1).unwrap();
        let b = log_ig_complete(delta, &d).unwrap();
        worst = worst.max((a - b).abs());
    }
    let mut worst_scalar: f64 = 0.0;
    for (i, delta) in [2.5, 3.0, 7.0].into_iter().enumerate() {
        let x = sample_mvn(&SymMatrix::from_diag(&[1.3]), 25 + 10 * i, 60 + i as u64).unwrap();
        let st = SampleStats::from_observations(&x);
        let lml = log_marginal_likelihood(&st, 0, &PriorSpec::new(delta).unwrap()).unwrap();
        worst_scalar = worst_scalar.max((lml - scalar_evidence(x.as_slice(), delta)).abs());
    }
    Outcome {
        pass: worst <= 1e-10 && worst_scalar <= 1e-10,
        detail: format!("banded vs complete {worst:.2e}, p = 1 vs conjugate oracle {worst_scalar:.2e} (tol 1e-10)"),
    }
}

fn criterion_7() -> Outcome {
    let sigma = SymMatrix::from_row_major(2, vec![1.0, 0.6, 0.6, 2.0]).unwrap();
    let st = SampleStats::from_observations(&sample_mvn(&sigma, 15, SEED).unwrap());
    let prior = PriorSpec::default();
    let exact = bayes_frobenius(&st, 1, &prior).unwrap();
    let m = 20_000;
    let draws = sample_posterior(&st, 1, &prior, m, SEED).unwrap();
    let mut worst_z: f64 = 0.0;
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        let v: Vec<f64> = draws.iter().map(|d| d.get(i, j)).collect();
        let mean = v.iter().sum::<f64>() / m as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        let se = (var / m as f64).sqrt();
        worst_z = worst_z.max((mean - exact.get(i, j)).abs() / se);
    }
    Outcome {
        pass: worst_z <= 3.0,
        detail: format!("max |mean - closed form| = {worst_z:.2} standard errors (tol 3)"),
    }
}

fn criterion_8() -> Outcome {
    let (sigma, _) = scenario_truth(&Scenario {
        kind: ScenarioKind::Ar1 { rho: 0.3 },
        p: 50,
        n: 500,
        replications: 1,
        seed: SEED,
    })
    .unwrap();
    let prior = PriorSpec::default();
    let hits = (0..50u64)
        .filter(|&r| {
            let x = bandprec::scenarios::sample_mvn_with(&sigma, 500, &mut substream(SEED, r)).unwrap();
            let st = SampleStats::from_observations(&x);
            band_posterior(&st, &prior, &PriorOverK::Uniform, 10).unwrap().mode == 1
        })
        .count();
    let mut shape_ok = true;
    let mut modes = Vec::new();
    for p in [50, 100, 200, 500] {
        let (sigma, _) = scenario_truth(&Scenario { kind: ScenarioKind::Ar4, p, n: 100, replications: 1, seed: SEED }).unwrap();
        let st = SampleStats::from_observations(&sample_mvn(&sigma, 100, SEED).unwrap());
        let bp = band_posterior(&st, &prior, &PriorOverK::ExpQuartic, 10).unwrap();
        let lp = &bp.log_posterior;
        let interior = bp.mode > 0 && bp.mode < 10;
        let decays = lp[bp.mode..].windows(2).all(|w| w[1] < w[0]);
        let rises = lp[..=bp.mode].windows(2).all(|w| w[1] > w[0]);
        shape_ok &= interior && decays && rises;
        modes.push(format!("p={p}: mode {}", bp.mode));
    }
    Outcome {
        pass: hits >= 45 && shape_ok,
        detail: format!(
            "AR(1) mode = 1 in {hits}/50 (need 45); AR(4) unimodal interior maximum {shape_ok} [{}]",
            modes.join(", ")
        ),
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_9() -> Outcome {
    let ns = [100usize, 200, 500];
    let sigma = ar1_covariance(50, 0.3).unwrap();
    let prior = PriorSpec::default();
    let mut errors = Vec::new();
    let mut radii = Vec::new();
    for &n in &ns {
        let mut cfg = table_config(ScenarioKind::Ar1 { rho: 0.3 }, n, 50, 100);
        cfg.estimators = vec![EstimatorKind::GraphicalMle];
        cfg.bandwidth = Bandwidth::Fixed(1);
        errors.push(linf_means(&cfg)[0].1);
        let st = SampleStats::from_observations(&sample_mvn(&sigma, n, SEED).unwrap());
        let draws = sample_posterior(&st, 1, &prior, 2000, SEED).unwrap();
        let center = mean_matrix(&draws).unwrap();
        radii.push(credible_radius(&draws, &center, NormKind::LInfOp, 0.95).unwrap());
    }
    let logn: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let loge: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let b = slope(&logn, &loge);
    let shrinking = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        pass: shrinking(&errors) && shrinking(&radii) && (-0.8..=-0.2).contains(&b),
        detail: format!(
            "MLE error {:.3} {:.3} {:.3}, 95% radius {:.3} {:.3} {:.3}, slope {b:.3} (need [-0.8, -0.2])",
            errors[0], errors[1], errors[2], radii[0], radii[1], radii[2]
        ),
    }
}

fn criterion_10() -> Outcome {
    let mut cfg = table_config(ScenarioKind::Ar4, 100, 50, 24);
    cfg.norms = NormKind::ALL.to_vec();
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in [1usize, 4, 4].into_iter().enumerate() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let run = pool.install(|| run_experiment(&cfg)).unwrap();
        let csv = dir.path().join(format!("run{i}.csv"));
        let json = dir.path().join(format!("run{i}.json"));
        std::fs::write(&csv, table_to_csv(&run.table).unwrap()).unwrap();
        std::fs::write(&json, run_to_json(&run).unwrap()).unwrap();
        outputs.push((std::fs::read(&csv).unwrap(), std::fs::read(&json).unwrap()));
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    // the estimators themselves are pure
    let st = random_stats(12, 40, 3);
    let pure = estimate(EstimatorKind::BayesFrobenius, &st, 2, &PriorSpec::default()).unwrap()
        == estimate(EstimatorKind::BayesFrobenius, &st, 2, &PriorSpec::default()).unwrap();
    Outcome {
        pass: identical && pure,
        detail: format!("CSV and JSON byte-identical across 1, 4, 4 worker threads: {identical}"),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AR(1) table values", criterion_1),
        ("AR(4) table values", criterion_2),
        ("fGn table values", criterion_3),
        ("monotone error decay in n", criterion_4),
        ("MLE characterization", criterion_5),
        ("evidence consistency", criterion_6),
        ("sampler vs closed form", criterion_7),
        ("bandwidth selection behavior", criterion_8),
        ("empirical rate", criterion_9),
        ("determinism", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} {name}: {} [{secs:.1}s]", out.detail);
        failed += usize::from(!out.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
