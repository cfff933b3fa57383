//! Couples the total particle count with the birth-death chain `Y` for a
//! bounded death rate, and compares the mean explosion time of `Y` with the
//! value from the first-passage series.

use torus_blowup::bdchain::{expected_explosion_time, passage_time, BirthDeathSpec};
use torus_blowup::model::{ModelParams, Profile, RateFunction};
use torus_blowup::rng::replica_rng;
use torus_blowup::simulator::{coupled_domination_run, DominationOptions, SimOptions};
use torus_blowup::stats::Summary;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let death = RateFunction::bounded(1.0, 1.0);
    let birth = RateFunction::power_plus_death(2.0, death.clone());
    let params = ModelParams::new(16, 16, birth, death, Profile::constant(1.0))?;
    let y0 = 256;
    let spec = BirthDeathSpec::from_model(&params)?;
    let cap = 25_600;
    // Reflected at y0 / 2, which Y practically never reaches, so that the
    // expectations are finite.
    let reflected = spec.clone().reflect_at(y0 / 2);
    let cap_tail = expected_explosion_time(&reflected, cap, 1e-7)?.value;
    let analytic = expected_explosion_time(&reflected, y0, 1e-7)?.value;

    let mut times = Vec::new();
    for replica in 0..20 {
        let mut rng = replica_rng(5, replica);
        let opts = DominationOptions {
            sim: SimOptions::new(5.0, 50.0),
            y0,
            y_target: None,
        };
        let run = coupled_domination_run(&params, &opts, &mut rng)?;
        let t = run.outcome.final_time + passage_time(&spec, run.y_final, cap, &mut rng) + cap_tail;
        println!(
            "replica {replica:>2}: dominated = {}, min slack = {:>4}, Y at stop = {:>6}, Y explodes at {t:.4}",
            run.dominated, run.min_slack, run.y_final
        );
        times.push(t);
    }
    let s = Summary::of(&times);
    println!("mean {:.4} +- {:.4}, series {analytic:.4}", s.mean, s.standard_error);
    Ok(())
}
