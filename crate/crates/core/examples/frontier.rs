//! Bias/variance frontier of the three estimators on a small design.

use nalgebra::DMatrix;
use schatten::{
    alpha_to_bias_bound, operator_diagnostics, GramSpectrum, LinearOperator, SchattenIndex,
};

fn main() -> schatten::Result<()> {
    let x = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        10,
        (1..=10).map(|i| (i as f64).sqrt()),
    ));
    let spectrum = GramSpectrum::from_design(&x)?;
    println!("estimator,alpha,bias_bound,variance");
    for p in SchattenIndex::ALL {
        for alpha in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
            let op = LinearOperator::closed_form(&x, p, alpha)?;
            let (_, variance) = operator_diagnostics(&op, &x, p)?;
            let bound = alpha_to_bias_bound(&spectrum, p, alpha).value();
            println!("{},{alpha},{bound:.6},{variance:.6}", p.name());
        }
    }
    Ok(())
}
