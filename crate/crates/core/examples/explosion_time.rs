//! Simulates the quadratic-birth particle system from flat data until the
//! sup-site density reaches `M_stop`, and prints the explosion-time estimate.
//!
//! `cargo run --release --example explosion_time -- [N] [seed]`

use std::time::Instant;

use torus_blowup::model::{ModelParams, Profile, RateFunction};
use torus_blowup::rng::replica_rng;
use torus_blowup::simulator::{estimate_explosion_time, simulate, SimOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(32), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;
    let params = ModelParams::new(n, n as u64, RateFunction::power(2.0), RateFunction::zero(), Profile::constant(1.0))?;
    let start = Instant::now();
    let outcome = simulate(&params, &SimOptions::new(10.0, 50.0), &mut replica_rng(seed, 0))?;
    let elapsed = start.elapsed().as_secs_f64();
    let (raw, corrected) = estimate_explosion_time(&outcome, &params.birth)?;
    println!("N = {n}, ell = {n}, seed = {seed}");
    println!("events       {}", outcome.events_processed);
    println!("events/s     {:.3e}", outcome.events_processed as f64 / elapsed);
    for hit in &outcome.threshold_hits {
        println!("M = {:>4}     t_sup = {:.6}", hit.level, hit.t_sup.unwrap_or(f64::INFINITY));
    }
    println!("t_raw        {raw:.6}");
    println!("t_corrected  {corrected:.6}  (limit 1)");
    Ok(())
}
