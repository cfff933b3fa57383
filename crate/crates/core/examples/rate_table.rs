//! A birth rate read from a two-column CSV table, its Lipschitz constant on
//! a range, and the tapered version used by the truncation coupling.

use torus_blowup::model::{truncate_birth, RateFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::temp_dir().join("birth_table.csv");
    std::fs::write(&path, "x,value\n0,0\n1,1\n2,4\n3,9\n")?;
    let table = RateFunction::table_from_csv(&path)?;
    let tapered = truncate_birth(&table, 1.5, 1.0);
    println!("    x   table  tapered");
    for i in 0..=8 {
        let x = 0.5 * i as f64;
        println!("{x:>5.1} {:>7.3} {:>8.3}", table.eval(x), tapered.eval(x));
    }
    println!("Lipschitz constant on [0, 3]: {:.3}", table.lipschitz_on(0.0, 3.0, 301));
    Ok(())
}
