//! The particle system from a sinusoidal profile, run until a site density
//! reaches 8. Prints snapshot and threshold CSV and compares the density
//! field with the equation at t = 0.2.

use torus_blowup::metrics::{field_from_config, sup_distance};
use torus_blowup::model::{ModelParams, Profile, RateFunction};
use torus_blowup::pde::{integrate, IntegrateOptions};
use torus_blowup::rng::replica_rng;
use torus_blowup::simulator::{simulate, SimOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = Profile::SinSquared {
        base: 0.5,
        amplitude: 1.0,
    };
    let params = ModelParams::new(8, 64, RateFunction::power(2.0), RateFunction::linear(0.5), profile.clone())?;
    let times = vec![0.0, 0.05, 0.1, 0.2];
    let opts = SimOptions::new(2.0, 8.0).samples(times.clone());
    let outcome = simulate(&params, &opts, &mut replica_rng(7, 0))?;
    print!("{}", outcome.snapshots_csv());
    println!();
    print!("{}", outcome.thresholds_csv());

    let (pde, _) = integrate(
        &profile.sample(32),
        &|u| params.source(u),
        &IntegrateOptions::new(0.2).samples(times),
    )?;
    let last = outcome.snapshots.last().expect("snapshot at t = 0.2");
    let field = field_from_config(&last.counts, params.ell);
    println!();
    println!(
        "t = {}: L1 = {:.4}, sup distance to the equation = {:.4}",
        last.time,
        field.l1_norm(),
        sup_distance(&field, pde.trajectory.states.last().unwrap())?
    );
    Ok(())
}
