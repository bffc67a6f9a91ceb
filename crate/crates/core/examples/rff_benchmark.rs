//! Nuclear vs Ridge on random Fourier features of a nonlinear target.

use schatten::cv::{rff_benchmark, CvConfig};
use schatten::rff::RffConfig;
use schatten::SchattenIndex;

fn main() -> schatten::Result<()> {
    let cfg = CvConfig {
        n_datasets: 30,
        models: vec![SchattenIndex::Nuclear, SchattenIndex::Frobenius],
        ..CvConfig::default()
    };
    println!("d_rbf,sigma,nuclear_avg,ridge_avg,nuclear_win");
    for d_rbf in [50, 200] {
        for sigma in [0.5, 2.0] {
            let rff = RffConfig {
                n_test: 1000,
                ..RffConfig::new(d_rbf, sigma)
            };
            let r = rff_benchmark(&rff, &cfg)?;
            println!(
                "{d_rbf},{sigma},{:.4},{:.4},{:.2}",
                r.avg_error[0], r.avg_error[1], r.win_prob[0]
            );
        }
    }
    Ok(())
}
