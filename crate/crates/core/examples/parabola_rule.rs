//! Expected minimum of a parabola sampled at random points, exact and by
//! Monte Carlo.

use schatten::basin::{expected_cv_minimum, monte_carlo_parabola_min};

fn main() -> schatten::Result<()> {
    println!("n,kappa,exact,monte_carlo,se");
    for n in [1, 3, 10, 30] {
        for kappa in [0.5, 2.0] {
            let exact = expected_cv_minimum(0.0, kappa, 1.0, n)?;
            let (mc, se) = monte_carlo_parabola_min(0.0, kappa, 1.0, n, 200_000, n as u64)?;
            println!("{n},{kappa},{exact:.6},{mc:.6},{se:.1e}");
        }
    }
    Ok(())
}
