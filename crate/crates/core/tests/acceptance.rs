//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.

use std::time::{Duration, Instant};

use ordered_cif::simulation::GroupScenario;
use ordered_cif::{
    cif_censored, compute_bands, empirical_cif, isoreg_maxmin, isoreg_weighted, pvalue_resampled, run_study,
    sequential_stats, BandCenter, BandOptions, BandWeight, Cause, GroupSample, IsotonicProblem, MultiGroupDataset,
    ScenarioSpec, StudyKind, Transform,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn scenario(study: StudyKind, groups: Vec<GroupScenario>, replications: usize, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        study,
        groups,
        replications,
        seed,
        alpha: 0.05,
        replicates: 1000,
        horizon: None,
        force_resampling: false,
        band_group: 0,
        interval: None,
        transform: Transform::Identity,
        weight: BandWeight::Unit,
    }
}

fn grp(n: usize, l1: f64, l2: f64, lc: f64) -> GroupScenario {
    GroupScenario { n, cause1_rate: l1, cause2_rate: l2, censoring_rate: lc }
}

fn random_problem(rng: &mut ChaCha8Rng) -> IsotonicProblem {
    let k = rng.random_range(1..=8);
    let values = (0..k).map(|_| rng.random_range(-10.0..10.0)).collect();
    let weights = (0..k).map(|_| rng.random_range(0.1..10.0)).collect();
    IsotonicProblem::new(values, weights).unwrap()
}

fn pava_matches_maxmin() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = random_problem(&mut rng);
        for (a, b) in isoreg_weighted(&p).iter().zip(isoreg_maxmin(&p)) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max |pava - maxmin| = {worst:.1e} over 1000 problems in {elapsed:.2?}"),
    )
}

fn error_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut violations = 0;
    for _ in 0..1000 {
        let p = random_problem(&mut rng);
        let mut theta: Vec<f64> = (0..p.values().len()).map(|_| rng.random_range(-10.0..10.0)).collect();
        theta.sort_by(f64::total_cmp);
        let fit = isoreg_weighted(&p);
        let sup = |xs: &[f64]| xs.iter().zip(&theta).map(|(x, t)| (x - t).abs()).fold(0.0, f64::max);
        if sup(&fit) > sup(p.values()) {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        violations == 0 && elapsed < Duration::from_secs(1),
        format!("{violations} violations over 1000 pairs in {elapsed:.2?}"),
    )
}

fn uncensored_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = Instant::now();
    let mut mismatches = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=120);
        // Coarse times so ties are common.
        let pairs: Vec<(f64, u8)> = (0..n)
            .map(|_| (rng.random_range(1..=40) as f64 / 8.0, rng.random_range(1..=2)))
            .collect();
        let g = GroupSample::from_pairs("g", &pairs).unwrap();
        let mut grid: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid.insert(0, 0.0);
        for cause in [Cause::Primary, Cause::Competing] {
            let a = empirical_cif(&g, cause).unwrap();
            let b = cif_censored(&g, cause).unwrap();
            if grid.iter().any(|&t| a.evaluate(t).to_bits() != b.evaluate(t).to_bits()) {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        mismatches == 0 && elapsed < Duration::from_secs(5),
        format!("{mismatches} of 1000 estimates differ in any bit, {elapsed:.2?}"),
    )
}

fn analytic_tail() -> Outcome {
    let g = grp(500, 0.95, 0.05, 0.0);
    let spec = scenario(StudyKind::Size, vec![g, g], 2000, 4);
    let report = run_study(&spec).unwrap();
    // For k = 2 the product p-value is exp(-2x^2), so p <= 0.05 iff T_n >= 1.2239.
    let rate = report.cell("rejection_rate", None).unwrap().value;
    verdict(
        (0.02..=0.055).contains(&rate),
        format!("P(T_n >= 1.2239) = {rate:.4} over 2000 null datasets, accepted [0.02, 0.055]"),
    )
}

fn covariance_matching() -> Outcome {
    // Censoring fraction lc / (l1 + l2 + lc) = 0.25.
    let g = grp(300, 1.0, 1.0, 2.0 / 3.0);
    let mut spec = scenario(StudyKind::Covmatch, vec![g, g], 1, 5);
    spec.replicates = 5000;
    let report = run_study(&spec).unwrap();
    let diffs: Vec<_> = report.cells_named("covariance_abs_diff").collect();
    let tols: Vec<_> = report.cells_named("covariance_tolerance").collect();
    let worst = diffs.iter().zip(&tols).map(|(d, t)| d.value / t.value).fold(0.0, f64::max);
    let ok = diffs.len() == 10 && diffs.iter().zip(&tols).all(|(d, t)| d.value <= t.value);
    verdict(
        ok,
        format!("{} (s,t) pairs, worst |mc - plugin| / tolerance = {worst:.3}", diffs.len()),
    )
}

fn hoel_fixture() -> Outcome {
    Outcome::Skip("raw Hoel (1972) RFM data not available verbatim; no fixture bundled".into())
}

fn amse_improvement() -> Outcome {
    let g = grp(200, 1.0, 1.0, 0.0);
    let spec = scenario(StudyKind::Mse, vec![g, g], 2000, 7);
    let report = run_study(&spec).unwrap();
    let median = g.mass_quantile(0.5);
    let at = |metric: &str| {
        report.cells_named(metric).find(|c| c.group == Some(0) && c.t == Some(median)).unwrap().clone()
    };
    let ratio = at("mse_ratio").value;
    let diff = at("mse_difference");
    let se = diff.mc_se.unwrap();
    verdict(
        ratio < 1.0 && diff.value > 2.0 * se,
        format!("median point: MSE ratio {ratio:.4}, difference {:.3e} ({:.1} se)", diff.value, diff.value / se),
    )
}

fn band_coverage() -> Outcome {
    let g = grp(200, 1.0, 1.0, 2.0 / 3.0);
    let spec = scenario(StudyKind::Coverage, vec![g, g], 1000, 8);
    let report = run_study(&spec).unwrap();
    let cov = report.cell("coverage_unrestricted", None).unwrap().value;
    let restricted = report.cell("coverage_restricted", None).unwrap().value;
    verdict(
        (0.92..=0.97).contains(&cov),
        format!("coverage {cov:.3} over 1000 datasets, accepted [0.92, 0.97]; restricted center {restricted:.3}"),
    )
}

fn pipelines() -> Vec<String> {
    let g = grp(60, 1.0, 0.7, 0.5);
    let spec = scenario(StudyKind::Size, vec![g, grp(60, 1.2, 0.7, 0.5), g], 1, 9);
    let ds: MultiGroupDataset = spec.dataset(0).unwrap();
    let report = sequential_stats(&ds, None).unwrap();
    let tested = pvalue_resampled(&ds, &report, 500, 11).unwrap();
    let options = BandOptions { transform: Transform::Cloglog, replicates: 500, seed: 13, ..BandOptions::default() };
    let bands = compute_bands(&ds, 1, &options, &[BandCenter::Unrestricted, BandCenter::Restricted]).unwrap();
    let mut sim = scenario(StudyKind::Coverage, vec![g, g], 8, 17);
    sim.replicates = 200;
    let study = run_study(&sim).unwrap();
    vec![
        serde_json::to_string(&tested).unwrap(),
        serde_json::to_string(&bands).unwrap(),
        serde_json::to_string(&study).unwrap(),
    ]
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(pipelines)
    };
    let a = in_pool(1);
    let b = in_pool(1);
    let c = in_pool(4);
    let elapsed = start.elapsed();
    verdict(
        a == b && a == c && elapsed < Duration::from_secs(60),
        format!("test, band, simulate outputs identical across runs and 1/4 workers: {}, {elapsed:.2?}", a == b && a == c),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("isotonic oracle equivalence", pava_matches_maxmin),
        ("error-reduction invariant", error_reduction),
        ("uncensored reduction", uncensored_reduction),
        ("analytic tail", analytic_tail),
        ("covariance matching", covariance_matching),
        ("Hoel fixture", hoel_fixture),
        ("AMSE improvement", amse_improvement),
        ("band coverage", band_coverage),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match check() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {} [{tag}] {name}: {detail} ({:.1?})", i + 1, start.elapsed());
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
