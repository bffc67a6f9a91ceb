//! Solve the bias-constrained variance problem numerically and compare with
//! the closed-form operator.

use nalgebra::DMatrix;
use schatten::estimator::{solve_detailed, OracleOptions};
use schatten::{
    bias_bound_to_alpha, operator_diagnostics, BiasBound, GramSpectrum, LinearOperator,
    SchattenIndex,
};

fn main() -> schatten::Result<()> {
    let x = DMatrix::from_row_slice(
        6,
        3,
        &[
            1.0, 0.2, -0.5, 0.3, 1.5, 0.1, -0.7, 0.4, 0.9, 0.0, -1.1, 0.6, 1.2, 0.8, -0.3, -0.4,
            0.2, 1.4,
        ],
    );
    let spectrum = GramSpectrum::from_design(&x)?;
    for p in SchattenIndex::ALL {
        let bound = BiasBound::new(0.5)?;
        let alpha = bias_bound_to_alpha(&spectrum, p, bound);
        let exact = LinearOperator::closed_form(&x, p, alpha)?;
        let numeric = solve_detailed(&x, bound, p, &OracleOptions::default())?;
        let gap = (&numeric.operator.entries - &exact.entries).norm() / exact.entries.norm();
        let (_, v) = operator_diagnostics(&exact, &x, p)?;
        println!(
            "{:>8}: alpha {alpha:.5}, variance {v:.6} (numeric {:.6}), relative gap {gap:.1e}, {} iterations",
            p.name(),
            numeric.objective,
            numeric.iterations
        );
    }
    Ok(())
}
