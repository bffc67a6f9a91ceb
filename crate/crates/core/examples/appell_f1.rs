//! Evaluate the Appell F1 function and the truncated Marchenko-Pastur
//! moments built on it.

use schatten::theory::{appell_f1, AppellF1Args, MarchenkoPastur};

fn main() -> schatten::Result<()> {
    let args = AppellF1Args {
        a: 1.5,
        b: 0.5,
        b_prime: -0.5,
        c: 2.5,
        x: -0.3,
        y: 0.4,
    };
    println!(
        "F1(1.5, 0.5, -0.5; 2.5; -0.3, 0.4) = {:.15}",
        appell_f1(&args)?
    );
    // with b' = 0 it reduces to Gauss 2F1(1, 1; 2; x) = -ln(1 - x) / x
    let x: f64 = 0.5;
    let f = appell_f1(&AppellF1Args {
        a: 1.0,
        b: 1.0,
        b_prime: 0.0,
        c: 2.0,
        x,
        y: 0.0,
    })?;
    println!(
        "2F1(1, 1; 2; 0.5) = {f:.15} (exact {:.15})",
        -(1.0 - x).ln() / x
    );

    let mp = MarchenkoPastur::new(0.5)?;
    for upper in [0.2, 0.5, 1.0, 2.0, 3.0] {
        let moments: Vec<String> = (-1..=2)
            .map(|r| format!("{:.6}", mp.partial_moment(r, upper).unwrap()))
            .collect();
        println!("I(r, {upper}) for r = -1..2: {}", moments.join(" "));
    }
    Ok(())
}
