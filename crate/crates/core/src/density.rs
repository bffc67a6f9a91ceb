//! Spectral densities on `[0, 1]` for the diagonal ensemble.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory::quadrature::Quadrature;

/// Eigenvalue density supported on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralDensity {
    /// Density proportional to `x^(gamma - 1)`.
    PowerLaw { gamma: f64 },
    /// Piecewise-constant density: `weights[k]` is the probability mass of
    /// the bin `[edges[k], edges[k + 1])`. Edges run from 0 to 1.
    Tabulated { edges: Vec<f64>, weights: Vec<f64> },
}

impl SpectralDensity {
    pub fn power_law(gamma: f64) -> Result<Self> {
        let d = Self::PowerLaw { gamma };
        d.validate()?;
        Ok(d)
    }

    /// Tabulated density; weights are normalized to sum to one.
    pub fn tabulated(edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        let weights = weights.iter().map(|w| w / total).collect();
        let d = Self::Tabulated { edges, weights };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PowerLaw { gamma } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "power-law exponent must be positive, got {gamma}"
                    )));
                }
            }
            Self::Tabulated { edges, weights } => {
                let ok = edges.len() >= 2
                    && weights.len() + 1 == edges.len()
                    && edges[0] == 0.0
                    && *edges.last().unwrap() == 1.0
                    && edges.windows(2).all(|w| w[0] < w[1])
                    && weights.iter().all(|w| w.is_finite() && *w >= 0.0)
                    && (weights.iter().sum::<f64>() - 1.0).abs() < 1e-9;
                if !ok {
                    return Err(Error::InvalidConfig(
                        "tabulated density needs increasing edges from 0 to 1 and nonnegative weights summing to 1"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The power-law exponent, if any (reported in curve metadata).
    pub fn gamma(&self) -> Option<f64> {
        match self {
            Self::PowerLaw { gamma } => Some(*gamma),
            Self::Tabulated { .. } => None,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match self {
            Self::PowerLaw { gamma } => gamma * x.powf(gamma - 1.0),
            Self::Tabulated { edges, weights } => {
                let k = bin_of(edges, x);
                weights[k] / (edges[k + 1] - edges[k])
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match self {
            Self::PowerLaw { gamma } => x.powf(*gamma),
            Self::Tabulated { edges, weights } => {
                let k = bin_of(edges, x);
                let below: f64 = weights[..k].iter().sum();
                below + weights[k] * (x - edges[k]) / (edges[k + 1] - edges[k])
            }
        }
    }

    /// Mean `E[x]`.
    pub fn mean(&self) -> f64 {
        match self {
            Self::PowerLaw { gamma } => gamma / (gamma + 1.0),
            Self::Tabulated { edges, weights } => weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * 0.5 * (edges[k] + edges[k + 1]))
                .sum(),
        }
    }

    /// Draw `n` iid samples. Power laws use the inverse CDF `u^(1/gamma)`;
    /// tabulated densities pick a bin by the alias method, then a uniform
    /// point inside it.
    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            Self::PowerLaw { gamma } => (0..n)
                .map(|_| rng.random::<f64>().powf(1.0 / gamma))
                .collect(),
            Self::Tabulated { edges, weights } => {
                let alias = WeightedAliasIndex::new(weights.clone()).expect("validated weights");
                (0..n)
                    .map(|_| {
                        let k = alias.sample(rng);
                        edges[k] + rng.random::<f64>() * (edges[k + 1] - edges[k])
                    })
                    .collect()
            }
        }
    }

    /// `∫ g(x) ν(dx)` by adaptive quadrature. `kinks` are points in `(0, 1)`
    /// where `g` is not smooth.
    pub fn expectation<F: Fn(f64) -> f64>(
        &self,
        g: F,
        kinks: &[f64],
        quad: &Quadrature,
    ) -> Result<f64> {
        match self {
            Self::PowerLaw { gamma } => {
                // with v = x^gamma the measure becomes Lebesgue on [0, 1]
                let inv = 1.0 / gamma;
                let mut pts = vec![0.0];
                pts.extend(
                    kinks
                        .iter()
                        .filter(|k| **k > 0.0 && **k < 1.0)
                        .map(|k| k.powf(*gamma)),
                );
                pts.push(1.0);
                pts.sort_by(f64::total_cmp);
                Ok(quad.integrate_with_breaks(|v| g(v.powf(inv)), &pts)?.value)
            }
            Self::Tabulated { edges, weights } => {
                let mut total = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    let (a, b) = (edges[k], edges[k + 1]);
                    let mut pts = vec![a];
                    pts.extend(kinks.iter().filter(|x| **x > a && **x < b));
                    pts.push(b);
                    pts.sort_by(f64::total_cmp);
                    total += w / (b - a) * quad.integrate_with_breaks(&g, &pts)?.value;
                }
                Ok(total)
            }
        }
    }
}

fn bin_of(edges: &[f64], x: f64) -> usize {
    let k = edges.partition_point(|e| *e <= x);
    k.saturating_sub(1).min(edges.len() - 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn power_law_moments() {
        let d = SpectralDensity::power_law(2.0).unwrap();
        let q = Quadrature::default();
        assert_relative_eq!(
            d.expectation(|_| 1.0, &[], &q).unwrap(),
            1.0,
            epsilon = 1e-13
        );
        assert_relative_eq!(
            d.expectation(|x| x, &[], &q).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-13
        );
        assert_relative_eq!(d.mean(), 2.0 / 3.0);
        let sqrt = SpectralDensity::power_law(0.5).unwrap();
        assert_relative_eq!(
            sqrt.expectation(|x| x * x, &[0.3], &q).unwrap(),
            0.5 / 2.5,
            epsilon = 1e-13
        );
    }

    #[test]
    fn tabulated_density() {
        let d = SpectralDensity::tabulated(vec![0.0, 0.5, 1.0], vec![1.0, 3.0]).unwrap();
        assert_relative_eq!(d.pdf(0.25), 0.5);
        assert_relative_eq!(d.pdf(0.75), 1.5);
        assert_relative_eq!(d.cdf(0.75), 0.25 + 0.375);
        assert_relative_eq!(d.mean(), 0.25 * 0.25 + 0.75 * 0.75);
        let q = Quadrature::default();
        assert_relative_eq!(
            d.expectation(|x| x, &[0.7], &q).unwrap(),
            d.mean(),
            epsilon = 1e-13
        );
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs = d.sample_n(40_000, &mut rng);
        let frac = xs.iter().filter(|x| **x >= 0.5).count() as f64 / xs.len() as f64;
        assert!((frac - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / 40_000.0).sqrt());
    }

    #[test]
    fn rejects_invalid() {
        assert!(SpectralDensity::power_law(0.0).is_err());
        assert!(SpectralDensity::tabulated(vec![0.0, 0.6], vec![1.0]).is_err());
        assert!(SpectralDensity::tabulated(vec![0.0, 0.5, 1.0], vec![1.0]).is_err());
    }
}
