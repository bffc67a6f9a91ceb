//! Cross-validated comparison on equicorrelated Gaussian designs.

use schatten::cv::{run_benchmark, CvConfig};
use schatten::ensembles::{EnsembleConfig, EquicorrelatedConfig};

fn main() -> schatten::Result<()> {
    let cfg = CvConfig {
        n_datasets: 50,
        seed: 1,
        ..CvConfig::default()
    };
    for rho in [0.0, 0.5, 0.9] {
        let ensemble = EnsembleConfig::Equicorrelated {
            config: EquicorrelatedConfig {
                n_obs: 100,
                n_feat: 50,
                rho,
                sigma: 2.0,
                sparse: None,
            },
            n_test: 2000,
        };
        let r = run_benchmark(&ensemble, &cfg)?;
        println!("rho {rho}");
        for (i, p) in r.models.iter().enumerate() {
            println!(
                "  {:>8}: avg {:.3}  win {:.2}",
                p.name(),
                r.avg_error[i],
                r.win_prob[i]
            );
        }
    }
    Ok(())
}
