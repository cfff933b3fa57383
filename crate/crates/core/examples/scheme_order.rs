//! Spatial convergence order of the semidiscrete scheme for `f(u) = u (1 - u)`
//! against a solution on a four times finer grid.

use torus_blowup::model::Profile;
use torus_blowup::pde::{solution_and_reference, trajectory_gap, IntegrateOptions};
use torus_blowup::stats::loglog_slope;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = Profile::Sine {
        base: 0.5,
        amplitude: 0.25,
        modes: 1,
    };
    let f = |u: f64| u * (1.0 - u);
    let opts = IntegrateOptions::new(0.5).uniform_samples(10);
    let ns = [16.0, 32.0, 64.0];
    let mut errors = Vec::new();
    for &n in &ns {
        let (coarse, reference) = solution_and_reference(&profile, &f, n as usize, 4, &opts)?;
        let error = trajectory_gap(&coarse, &reference);
        println!("N = {n:>3}  sup error = {error:.4e}");
        errors.push(error);
    }
    println!("log-log slope = {:.4}", loglog_slope(&ns, &errors));
    Ok(())
}
