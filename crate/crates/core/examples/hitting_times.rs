//! Expected first-passage times of a birth-death chain from the recursion,
//! checked against simulation, and the expected explosion time of the
//! inverse-square chain.

use torus_blowup::bdchain::{expected_explosion_time, expected_hitting_times, passage_time, BirthDeathSpec};
use torus_blowup::rng::replica_rng;
use torus_blowup::stats::Summary;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = BirthDeathSpec::from_fns(|r| 2f64.powf(r), |r| if r >= 1.0 { 1.0 } else { 0.0 })?;
    let hitting = expected_hitting_times(&spec, 5)?;
    print!("{}", hitting.to_csv(&spec));
    let mut rng = replica_rng(3, 0);
    for r in 0..4 {
        let samples: Vec<f64> = (0..100_000).map(|_| passage_time(&spec, r, r + 1, &mut rng)).collect();
        let s = Summary::of(&samples);
        println!("r = {r}: simulated {:.5} +- {:.5}, recursion {:.5}", s.mean, s.standard_error, hitting.at(r));
    }
    let squares = BirthDeathSpec::pure_birth(|r| r * r).reflect_at(1);
    let explosion = expected_explosion_time(&squares, 10, 1e-9)?;
    println!("{}", serde_json::to_string(&explosion)?);
    Ok(())
}
