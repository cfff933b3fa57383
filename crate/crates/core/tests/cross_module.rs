//! Checks that span several modules: the coupled lower process against the
//! birth-death recursion, harness determinism across worker counts, and the
//! command-line entry point.

use std::process::Command;

use torus_blowup::bdchain::{expected_hitting_times, BirthDeathSpec};
use torus_blowup::harness::{self, emit_report, Formats, Preset};
use torus_blowup::model::{ModelParams, Profile, RateFunction};
use torus_blowup::rng::replica_rng;
use torus_blowup::simulator::{coupled_domination_run, DominationOptions, SimOptions};
use torus_blowup::stats::Summary;

#[test]
fn lower_process_passage_matches_recursion() {
    // Pure quadratic births: Y is the chain with b_r = r^2 / (ell N), and its
    // passage from ell N to 2 ell N takes sum_r ell N / r^2 on average.
    let params = ModelParams::new(16, 16, RateFunction::power(2.0), RateFunction::zero(), Profile::constant(1.0)).unwrap();
    let mass = 256;
    let opts = DominationOptions {
        sim: SimOptions::new(5.0, 100.0),
        y0: mass,
        y_target: Some(2 * mass),
    };
    let times: Vec<f64> = (0..300)
        .map(|i| {
            let run = coupled_domination_run(&params, &opts, &mut replica_rng(41, i)).unwrap();
            assert!(run.dominated);
            assert_eq!(run.clipped_births, 0);
            run.target_time.expect("Y reaches 2 ell N before the system stops")
        })
        .collect();
    let spec = BirthDeathSpec::from_model(&params).unwrap().reflect_at(1);
    let hitting = expected_hitting_times(&spec, 2 * mass).unwrap();
    let expected = hitting.passage(mass, 2 * mass);
    let direct: f64 = (mass..2 * mass).map(|r| mass as f64 / (r * r) as f64).sum();
    assert!((expected - direct).abs() < 1e-12);
    let s = Summary::of(&times);
    assert!(s.within_se(expected, 3.0), "mean {} +- {} vs {expected}", s.mean, s.standard_error);
}

fn small(preset: Preset) -> harness::ExperimentConfig {
    let mut config = preset.default_config();
    match preset {
        Preset::LlnSweep | Preset::BlowupSweep => {
            config.n_list = vec![8, 16];
            config.replicas = 4;
        }
        Preset::DominationCheck => {
            config.n_list = vec![8];
            config.replicas = 4;
        }
        Preset::SchemeOrder => config.n_list = vec![8, 16],
        Preset::BdHitting => config.bd.as_mut().unwrap().samples = 2000,
    }
    config
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    for preset in [Preset::LlnSweep, Preset::DominationCheck, Preset::BdHitting] {
        let config = small(preset);
        let serial = harness::run(&config, 1).unwrap();
        let parallel = harness::run(&config, 3).unwrap();
        assert_eq!(serial, parallel, "{preset}");
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = emit_report(&serial, Formats::default(), a.path()).unwrap();
        let fb = emit_report(&parallel, Formats::default(), b.path()).unwrap();
        for (x, y) in [(fa.csv, fb.csv), (fa.json, fb.json)] {
            assert_eq!(std::fs::read(x.unwrap()).unwrap(), std::fs::read(y.unwrap()).unwrap());
        }
    }
}

#[test]
fn changing_the_seed_changes_replicas() {
    let mut config = small(Preset::DominationCheck);
    let a = harness::run(&config, 1).unwrap();
    config.seed += 1;
    let b = harness::run(&config, 1).unwrap();
    assert_ne!(a.records, b.records);
    assert_ne!(a.provenance.config_sha256, b.provenance.config_sha256);
}

#[test]
fn cli_runs_a_preset_and_reports_through_the_exit_code() {
    let exe = env!("CARGO_BIN_EXE_torus-blowup");
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bd.toml");
    std::fs::write(&config, small(Preset::BdHitting).to_toml()).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(exe)
        .args(["bd-hitting", "--config"])
        .arg(&config)
        .args(["--seed", "5", "--workers", "1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8(status.stdout).unwrap();
    assert!(stdout.contains("[PASS]"));
    assert!(out.join("bd-hitting_replicas.csv").exists());
    let json = std::fs::read_to_string(out.join("bd-hitting_summary.json")).unwrap();
    assert!(json.contains("\"seed\": 5"));

    // failing checks give exit code 1
    let mut strict = small(Preset::SchemeOrder);
    strict.scheme.as_mut().unwrap().slope_max = -3.0;
    std::fs::write(&config, strict.to_toml()).unwrap();
    let status = Command::new(exe)
        .args(["scheme-order", "--no-plots", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // a slowly growing ell schedule is refused with exit code 2
    let mut slow = small(Preset::LlnSweep);
    slow.ell_rule = "const:64".into();
    std::fs::write(&config, slow.to_toml()).unwrap();
    let result = Command::new(exe).args(["lln-sweep", "--config"]).arg(&config).output().unwrap();
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("log N"));

    // a config for another preset is rejected
    let result = Command::new(exe).args(["bd-hitting", "--config"]).arg(&config).output().unwrap();
    assert_eq!(result.status.code(), Some(2));
}
