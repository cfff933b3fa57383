//! Acceptance criteria, one test each. Every test writes a single
//! `criterion N: PASS|FAIL ...` line straight to stdout, so the lines show up
//! even when the test harness captures output.
//!
//! Criteria 4 and 5 share one particle sweep (N = 32, 64, 128 with ell = N,
//! 20 replicas) and take about an hour on a single core.

use std::io::Write;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use torus_blowup::bdchain::{expected_explosion_time, BirthDeathSpec};
use torus_blowup::harness::{self, emit_report, ExperimentReport, Formats, Preset};
use torus_blowup::model::{ModelParams, Profile, RateFunction};
use torus_blowup::pde::{comparison_run, estimate_blowup};
use torus_blowup::rng::replica_rng;
use torus_blowup::simulator::{coupled_truncation_run, SimOptions};

/// Timed criteria hold this lock so that their clocks do not include other
/// criteria running on the same cores.
fn exclusive() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report_line(criterion: u32, passed: bool, detail: &str) {
    let line = format!(
        "criterion {criterion}: {} {detail}\n",
        if passed { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn failed_checks(report: &ExperimentReport) -> Vec<String> {
    report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect()
}

#[test]
fn criterion_01_constant_data_blowup() {
    let _guard = exclusive();
    let start = Instant::now();
    let estimate = estimate_blowup(&[1.0; 16], &|u: f64| u * u, &[1e2, 1e3, 1e4], 5.0, 1e-4).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let passed = (estimate.t_est - 1.0).abs() <= 1e-3 && seconds < 5.0;
    report_line(1, passed, &format!("t_est = {:.9} in {seconds:.2} s", estimate.t_est));
    assert!(passed);
}

#[test]
fn criterion_02_scheme_order() {
    let _guard = exclusive();
    let start = Instant::now();
    let config = Preset::SchemeOrder.default_config();
    assert_eq!(config.n_list, vec![16, 32, 64]);
    let report = harness::run(&config, 0).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let slope = report.derived("slope").unwrap();
    let passed = (-2.3..=-1.7).contains(&slope) && seconds < 30.0;
    report_line(2, passed, &format!("slope = {slope:.4} in {seconds:.1} s"));
    assert!(passed);
}

#[test]
fn criterion_03_comparison_lemma() {
    let _guard = exclusive();
    let start = Instant::now();
    let mut violations = 0;
    let mut steps = 0;
    let mut min_gap = f64::INFINITY;
    for n in [8, 16, 32] {
        for c in [1.0, 5.0] {
            let run = comparison_run(n, c, 1.0).unwrap();
            violations += run.violations;
            steps += run.steps;
            min_gap = min_gap.min(run.upper_gap).min(run.lower_gap);
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let passed = violations == 0 && min_gap >= 0.0 && seconds < 10.0;
    report_line(
        3,
        passed,
        &format!("{violations} violations over {steps} steps, smallest gap {min_gap:.3e}, {seconds:.2} s"),
    );
    assert!(passed);
}

/// The shipped blow-up sweep, which also measures the distance to the
/// equation on `[0, 0.5]`.
fn particle_sweep() -> &'static ExperimentReport {
    static REPORT: OnceLock<ExperimentReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let config = Preset::BlowupSweep.default_config();
        assert_eq!(config.n_list, vec![32, 64, 128]);
        assert_eq!(config.replicas, 20);
        assert_eq!(config.ell_rule, "n");
        assert_eq!(config.lln.as_ref().unwrap().t_end, 0.5);
        assert_eq!(config.blowup.as_ref().unwrap().m_stop, 50.0);
        harness::run(&config, 0).unwrap()
    })
}

#[test]
fn criterion_04_lln_trend() {
    let report = particle_sweep();
    let medians: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|n| report.derived(&format!("median_eps_N{n}")).unwrap())
        .collect();
    let lln: Vec<_> = report.checks.iter().filter(|c| c.name.starts_with("lln")).collect();
    assert_eq!(lln.len(), 2);
    let passed = lln.iter().all(|c| c.passed);
    report_line(4, passed, &format!("median distances {medians:.4?}; {}", lln[1].detail));
    assert!(passed, "{:?}", failed_checks(report));
}

#[test]
fn criterion_05_explosion_time_concentration() {
    let report = particle_sweep();
    let blowup: Vec<_> = report.checks.iter().filter(|c| c.name.starts_with("blowup")).collect();
    assert_eq!(blowup.len(), 3);
    let passed = blowup.iter().all(|c| c.passed);
    let tails: Vec<String> = [32, 64, 128]
        .iter()
        .map(|n| {
            format!(
                "N={n}: median {:.4}, lower {:.2}, upper {:.2}",
                report.derived(&format!("median_t_N{n}")).unwrap(),
                report.derived(&format!("lower_tail_g0.1_N{n}")).unwrap(),
                report.derived(&format!("upper_tail_g0.1_N{n}")).unwrap()
            )
        })
        .collect();
    report_line(5, passed, &tails.join("; "));
    assert!(passed, "{:?}", failed_checks(report));
}

#[test]
fn criterion_06_domination() {
    let _guard = exclusive();
    let start = Instant::now();
    let config = Preset::DominationCheck.default_config();
    let report = harness::run(&config, 0).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let replicas = report.records.len();
    let dominated = report.records.iter().filter(|r| r.metrics["dominated"] == 1.0).count();
    let variants: std::collections::BTreeSet<&str> = report.records.iter().map(|r| r.group.as_str()).collect();
    let passed = replicas >= 50 && dominated == replicas && variants.len() == 2 && seconds < 60.0;
    report_line(
        6,
        passed,
        &format!("{dominated}/{replicas} replicas dominated across {variants:?} in {seconds:.1} s"),
    );
    assert!(passed);
    // The same preset also compares Y's explosion time with the chain.
    assert!(report.passed(), "{:?}", failed_checks(&report));
}

#[test]
fn criterion_07_hitting_time_recursion() {
    let _guard = exclusive();
    let start = Instant::now();
    let config = Preset::BdHitting.default_config();
    assert_eq!(config.bd.as_ref().unwrap().samples, 100_000);
    let report = harness::run(&config, 0).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let passed = report.passed() && seconds < 60.0;
    report_line(
        7,
        passed,
        &format!("{} checks, {} failed, {seconds:.1} s", report.checks.len(), failed_checks(&report).len()),
    );
    assert!(passed, "{:?}", failed_checks(&report));
}

#[test]
fn criterion_08_explosion_series() {
    let spec = BirthDeathSpec::pure_birth(|r| r * r).reflect_at(1);
    let value = expected_explosion_time(&spec, 10, 1e-9).unwrap().value;
    // Closed form: pi^2 / 6 minus the first nine terms.
    let oracle = std::f64::consts::PI.powi(2) / 6.0 - (1..10).map(|r| 1.0 / (r * r) as f64).sum::<f64>();
    let passed = (value - oracle).abs() <= 1e-6;
    report_line(8, passed, &format!("{value:.12} vs {oracle:.12}"));
    assert!(passed);
}

#[test]
fn criterion_09_truncation_coupling() {
    let params = ModelParams::new(16, 16, RateFunction::power(2.0), RateFunction::zero(), Profile::constant(1.0)).unwrap();
    let opts = SimOptions::new(3.0, 16.0);
    let mut ok = 0;
    let mut diverged = 0;
    let replicas = 20;
    for replica in 0..replicas {
        let run = coupled_truncation_run(&params, 4.0, 1.0, &opts, &mut replica_rng(9, replica)).unwrap();
        let separation = run.separation_time.expect("the truncated copy passes M + 1/2");
        match run.first_divergence_time {
            Some(t) if t < separation => {}
            Some(_) => {
                diverged += 1;
                ok += 1;
            }
            None => ok += 1,
        }
    }
    let passed = ok == replicas;
    report_line(
        9,
        passed,
        &format!("{ok}/{replicas} replicas identical up to the M + 1/2 passage ({diverged} diverge afterwards)"),
    );
    assert!(passed);
}

fn reduced(preset: Preset) -> harness::ExperimentConfig {
    let mut config = preset.default_config();
    match preset {
        Preset::LlnSweep | Preset::BlowupSweep => {
            config.n_list = vec![8, 16];
            config.replicas = 5;
        }
        Preset::DominationCheck => config.replicas = 5,
        Preset::SchemeOrder => config.n_list = vec![8, 16, 32],
        Preset::BdHitting => config.bd.as_mut().unwrap().samples = 10_000,
    }
    config
}

#[test]
fn criterion_10_determinism() {
    let mut identical = Vec::new();
    for preset in Preset::ALL {
        let config = reduced(preset);
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let files: Vec<_> = dirs
            .iter()
            .zip([1, 2])
            .map(|(dir, workers)| {
                let report = harness::run(&config, workers).unwrap();
                emit_report(&report, Formats::default(), dir.path()).unwrap()
            })
            .collect();
        let mut same = true;
        for (a, b) in [
            (files[0].csv.clone(), files[1].csv.clone()),
            (files[0].json.clone(), files[1].json.clone()),
        ] {
            same &= std::fs::read(a.unwrap()).unwrap() == std::fs::read(b.unwrap()).unwrap();
        }
        identical.push((preset, same));
    }
    let passed = identical.iter().all(|(_, same)| *same);
    let detail: Vec<String> = identical
        .iter()
        .map(|(p, same)| format!("{p}: {}", if *same { "identical" } else { "DIFFERENT" }))
        .collect();
    report_line(10, passed, &detail.join(", "));
    assert!(passed);
}
