//! A small law-of-large-numbers sweep through the experiment harness, written
//! to a directory as CSV, JSON and SVG.
//!
//! `cargo run --release --example lln_sweep -- [out_dir]`

use std::path::PathBuf;

use torus_blowup::harness::{emit_report, run_lln_sweep, Formats, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("out/lln-example"), PathBuf::from);
    let mut config = Preset::LlnSweep.default_config();
    config.n_list = vec![8, 16, 32];
    config.replicas = 8;
    // The shipped band is for N = 128; scale it by (128 / 32)^0.4.
    let lln = config.lln.as_mut().expect("lln section");
    lln.band = 0.9;
    lln.band_note = "shipped band scaled to N = 32".into();
    let report = run_lln_sweep(&config, 0)?;
    for n in &config.n_list {
        let agg = report.aggregate("ell=n", *n, "eps").expect("distance recorded");
        println!("N = {n:>3}: median {:.4}, IQR {:.4}", agg.summary.median, agg.summary.iqr());
    }
    for check in &report.checks {
        println!("{} {}: {}", if check.passed { "pass" } else { "FAIL" }, check.name, check.detail);
    }
    let files = emit_report(&report, Formats::default(), &out)?;
    println!("wrote {:?}", files);
    Ok(())
}
