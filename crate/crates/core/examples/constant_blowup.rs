//! Blow-up time of `u_t = u_xx + u^2` from `u = 1`, where the solution stays
//! flat and blows up at exactly `t = 1`.

use torus_blowup::pde::estimate_blowup;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = |u: f64| u * u;
    for n in [8, 32] {
        let estimate = estimate_blowup(&vec![1.0; n], &f, &[1e2, 1e4, 1e6], 5.0, 1e-6)?;
        println!(
            "N = {n:>3}  t_stop = {:.9}  t_est = {:.12}  ({})",
            estimate.t_stop, estimate.t_est, estimate.method
        );
    }
    println!("{}", serde_json::to_string_pretty(&estimate_blowup(&[1.0; 4], &f, &[1e3], 5.0, 1e-6)?)?);
    Ok(())
}
