//! Limiting test error of each estimator under the spherical ensemble and a
//! power-law diagonal ensemble, written as CSV.

use schatten::density::SpectralDensity;
use schatten::theory::{log_grid, ErrorModel, TheoryCurve};
use schatten::SchattenIndex;

fn main() -> schatten::Result<()> {
    let alphas = log_grid(1e-3, 1e3, 25);
    let models = [
        ErrorModel::spherical(0.5, 1.0, 1.0),
        ErrorModel::diagonal(0.5, 1.0, 1.0, SpectralDensity::power_law(2.0)?),
    ];
    let mut curves = Vec::new();
    for model in &models {
        for p in SchattenIndex::ALL {
            curves.push(TheoryCurve::compute(model, p, &alphas)?);
        }
    }
    TheoryCurve::write_csv(&curves, std::io::stdout())
}
