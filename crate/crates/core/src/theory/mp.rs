use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::theory::appell::{appell_f1, AppellF1Args};
use crate::theory::quadrature::Quadrature;

/// Marchenko–Pastur law with aspect ratio `lambda = d / N` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchenkoPastur {
    lambda: f64,
    support_lo: f64,
    support_hi: f64,
}

impl MarchenkoPastur {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "aspect ratio must lie in (0, 1), got {lambda}"
            )));
        }
        let r = lambda.sqrt();
        Ok(Self {
            lambda,
            support_lo: (1.0 - r).powi(2),
            support_hi: (1.0 + r).powi(2),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Lower support edge `(1 - sqrt(lambda))^2`.
    pub fn support_lo(&self) -> f64 {
        self.support_lo
    }

    /// Upper support edge `(1 + sqrt(lambda))^2`.
    pub fn support_hi(&self) -> f64 {
        self.support_hi
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= self.support_lo || x >= self.support_hi {
            return 0.0;
        }
        ((self.support_hi - x) * (x - self.support_lo)).sqrt() / (2.0 * PI * self.lambda * x)
    }

    /// Angle `theta` with `x = lo + (hi - lo) sin^2(theta)`.
    fn angle_of(&self, x: f64) -> f64 {
        let t = ((x - self.support_lo) / (self.support_hi - self.support_lo)).clamp(0.0, 1.0);
        t.sqrt().asin()
    }

    /// `∫_{lo}^{upper} g(x) μ(dx)` using the substitution
    /// `x = lo + (hi - lo) sin^2(theta)`, which removes the square-root edges.
    /// `kinks` are interior points where `g` is not smooth.
    pub fn integrate<F: Fn(f64) -> f64>(
        &self,
        g: F,
        upper: f64,
        kinks: &[f64],
        quad: &Quadrature,
    ) -> Result<f64> {
        let (lo, hi) = (self.support_lo, self.support_hi);
        let width = hi - lo;
        let theta_max = if upper >= hi {
            FRAC_PI_2
        } else {
            self.angle_of(upper)
        };
        if theta_max <= 0.0 {
            return Ok(0.0);
        }
        let mut pts = vec![0.0];
        pts.extend(
            kinks
                .iter()
                .filter(|k| **k > lo && **k < upper.min(hi))
                .map(|k| self.angle_of(*k)),
        );
        pts.push(theta_max);
        pts.sort_by(f64::total_cmp);
        let scale = width * width / (PI * self.lambda);
        let integrand = |theta: f64| {
            let (s, c) = theta.sin_cos();
            let x = lo + width * s * s;
            g(x) * scale * s * s * c * c / x
        };
        Ok(quad.integrate_with_breaks(integrand, &pts)?.value)
    }

    /// Cumulative distribution function, by adaptive quadrature of the density.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= self.support_lo {
            return Ok(0.0);
        }
        if x >= self.support_hi {
            return Ok(1.0);
        }
        let v = self.integrate(|_| 1.0, x, &[], &Quadrature::with_tolerance(1e-14, 1e-14))?;
        Ok(v.clamp(0.0, 1.0))
    }

    /// Truncated moment `I(r, a) = ∫_{lo}^{a} x^r μ(dx)` through the Appell
    /// `F1` Euler integral:
    ///
    /// `I = (a - lo)^{3/2} lo^{r-1} sqrt(hi - lo) / (2 pi lambda) * (2/3)
    ///      * F1(3/2, 1 - r, -1/2, 5/2, 1 - a/lo, (a - lo)/(hi - lo))`.
    pub fn partial_moment(&self, r: i32, upper: f64) -> Result<f64> {
        let (lo, hi) = (self.support_lo, self.support_hi);
        let a = upper.min(hi);
        if a <= lo {
            return Ok(0.0);
        }
        let f1 = appell_f1(&AppellF1Args {
            a: 1.5,
            b: 1.0 - r as f64,
            b_prime: -0.5,
            c: 2.5,
            x: 1.0 - a / lo,
            y: ((a - lo) / (hi - lo)).min(1.0),
        })?;
        let prefactor = (a - lo).powf(1.5) * lo.powi(r - 1) * (hi - lo).sqrt()
            / (2.0 * PI * self.lambda)
            * (2.0 / 3.0);
        Ok(prefactor * f1)
    }
}
