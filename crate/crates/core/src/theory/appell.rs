//! Appell's hypergeometric function `F1`, evaluated from its Euler integral
//!
//! ```text
//! F1(a; b, b'; c; x, y) = Γ(c) / (Γ(a) Γ(c - a))
//!     ∫_0^1 u^(a-1) (1-u)^(c-a-1) (1-ux)^(-b) (1-uy)^(-b') du,   a > 0, c - a > 0.
//! ```
//!
//! The integral defines the analytic continuation to `x, y < -1` as well,
//! which is where the Marchenko–Pastur partial moments need it.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::theory::quadrature::Quadrature;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppellF1Args {
    pub a: f64,
    pub b: f64,
    pub b_prime: f64,
    pub c: f64,
    pub x: f64,
    pub y: f64,
}

/// Evaluate `F1` to roughly 1e-12 relative accuracy.
///
/// Fails with [`Error::DomainError`] when `a <= 0`, `c - a <= 0`, or when a
/// factor `1 - ux` or `1 - uy` vanishes inside `(0, 1)` (i.e. `x > 1` or
/// `y > 1`) or makes the integral diverge at `u = 1`.
pub fn appell_f1(args: &AppellF1Args) -> Result<f64> {
    let AppellF1Args {
        a,
        b,
        b_prime,
        c,
        x,
        y,
    } = *args;
    if [a, b, b_prime, c, x, y].iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainError("non-finite F1 argument".into()));
    }
    if a <= 0.0 || c - a <= 0.0 {
        return Err(Error::DomainError(format!(
            "Euler integral needs a > 0 and c - a > 0 (a = {a}, c = {c})"
        )));
    }
    if x > 1.0 || y > 1.0 {
        return Err(Error::DomainError(format!(
            "pole on the integration path (x = {x}, y = {y})"
        )));
    }
    if x == 0.0 && y == 0.0 {
        return Ok(1.0);
    }

    // factors that vanish at u = 1 are folded into the (1-u) exponent
    let mut tail = c - a;
    let (mut bx, mut by) = (b, b_prime);
    if x == 1.0 {
        tail -= b;
        bx = 0.0;
    }
    if y == 1.0 {
        tail -= b_prime;
        by = 0.0;
    }
    if tail <= 0.0 {
        return Err(Error::DomainError("integral diverges at u = 1".into()));
    }
    let smooth = |u: f64| {
        let mut v = 1.0;
        if bx != 0.0 {
            v *= (1.0 - u * x).powf(-bx);
        }
        if by != 0.0 {
            v *= (1.0 - u * y).powf(-by);
        }
        v
    };

    let quad = Quadrature {
        abs_tol: 1e-16,
        rel_tol: 1e-13,
        max_segments: 10_000,
    };
    // u in [0, 1/2]: u = t^(1/a) absorbs u^(a-1)
    let left = quad.integrate(
        |t: f64| {
            let u = t.powf(1.0 / a);
            (1.0 - u).powf(tail - 1.0) * smooth(u) / a
        },
        0.0,
        0.5f64.powf(a),
    )?;
    // 1 - u in [0, 1/2]: 1 - u = t^(1/tail) absorbs (1-u)^(tail-1)
    let right = quad.integrate(
        |t: f64| {
            let u = 1.0 - t.powf(1.0 / tail);
            u.powf(a - 1.0) * smooth(u) / tail
        },
        0.0,
        0.5f64.powf(tail),
    )?;
    let log_norm = ln_gamma(c) - ln_gamma(a) - ln_gamma(c - a);
    Ok(log_norm.exp() * (left.value + right.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn args(a: f64, b: f64, b_prime: f64, c: f64, x: f64, y: f64) -> AppellF1Args {
        AppellF1Args {
            a,
            b,
            b_prime,
            c,
            x,
            y,
        }
    }

    #[test]
    fn origin_is_one() {
        assert_eq!(appell_f1(&args(1.5, 2.0, 0.3, 2.5, 0.0, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn elementary_reductions() {
        // b = b' = 0: integrand is the normalized beta density
        assert_relative_eq!(
            appell_f1(&args(0.7, 0.0, 0.0, 2.2, 0.3, -0.4)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        // F1(1; 1, 0; 2; x, y) = 2F1(1, 1; 2; x) = -ln(1 - x) / x
        let x: f64 = -3.0;
        assert_relative_eq!(
            appell_f1(&args(1.0, 1.0, 0.0, 2.0, x, 0.5)).unwrap(),
            -(1.0 - x).ln() / x,
            max_relative = 1e-12
        );
        // x = y collapses to 2F1(a, b + b'; c; x); with a = 1, c = 2, b + b' = 1 as above
        assert_relative_eq!(
            appell_f1(&args(1.0, 0.4, 0.6, 2.0, x, x)).unwrap(),
            -(1.0 - x).ln() / x,
            max_relative = 1e-12
        );
    }

    #[test]
    fn unit_argument_is_folded_into_the_tail() {
        // F1(1; 0, b'; 2; x, 1) = ∫ (1-u)^(-b') du * Γ(2) = 1 / (1 - b')
        assert_relative_eq!(
            appell_f1(&args(1.0, 0.0, -0.5, 2.0, 0.2, 1.0)).unwrap(),
            1.0 / 1.5,
            epsilon = 1e-12
        );
        assert!(matches!(
            appell_f1(&args(1.0, 0.0, 1.5, 2.0, 0.0, 1.0)),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn domain_errors() {
        assert!(appell_f1(&args(0.0, 1.0, 1.0, 2.0, 0.1, 0.1)).is_err());
        assert!(appell_f1(&args(2.0, 1.0, 1.0, 2.0, 0.1, 0.1)).is_err());
        assert!(appell_f1(&args(1.0, 1.0, 1.0, 2.0, 1.5, 0.1)).is_err());
        assert!(appell_f1(&args(1.0, 1.0, 1.0, 2.0, 0.1, f64::NAN)).is_err());
    }
}
