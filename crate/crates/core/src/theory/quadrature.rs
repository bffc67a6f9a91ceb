//! Globally adaptive Gauss–Kronrod (7/15 point) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below `max(abs_tol, rel_tol * |integral|)`. Known kinks
//! can be passed as breakpoints so that no panel straddles them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_segments: 4000,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

impl Quadrature {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<QuadResult> {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// Integrate over `[points[0], points[last]]`, with the interior points
    /// used as initial panel boundaries. Points must be nondecreasing.
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
        &self,
        f: F,
        points: &[f64],
    ) -> Result<QuadResult> {
        if points.len() < 2 || points.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidArgument(
                "quadrature breakpoints must be sorted and finite".into(),
            ));
        }
        let mut heap = BinaryHeap::new();
        let mut total = 0.0;
        let mut total_err = 0.0;
        let mut evaluations = 0;
        for w in points.windows(2) {
            if w[0] == w[1] {
                continue;
            }
            let (value, error) = gauss_kronrod(&f, w[0], w[1]);
            evaluations += 15;
            total += value;
            total_err += error;
            heap.push(Segment {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
        loop {
            if !total.is_finite() || !total_err.is_finite() {
                return Err(Error::QuadratureFailure {
                    tolerance: self.abs_tol,
                    estimate: f64::INFINITY,
                });
            }
            let target = self.abs_tol.max(self.rel_tol * total.abs());
            if total_err <= target {
                return Ok(QuadResult {
                    value: total,
                    error: total_err,
                    evaluations,
                });
            }
            if heap.len() >= self.max_segments {
                return Err(Error::QuadratureFailure {
                    tolerance: target,
                    estimate: total_err,
                });
            }
            let Some(worst) = heap.pop() else {
                return Ok(QuadResult {
                    value: total,
                    error: total_err,
                    evaluations,
                });
            };
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // panel cannot be split further in floating point
                return Err(Error::QuadratureFailure {
                    tolerance: target,
                    estimate: total_err,
                });
            }
            let (v1, e1) = gauss_kronrod(&f, worst.a, mid);
            let (v2, e2) = gauss_kronrod(&f, mid, worst.b);
            evaluations += 30;
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            heap.push(Segment {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Segment {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
            // resum occasionally to avoid drift from incremental updates
            if heap.len() % 64 == 0 {
                total = heap.iter().map(|s| s.value).sum();
                total_err = heap.iter().map(|s| s.error).sum();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        let q = Quadrature::default();
        let r = q.integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0).unwrap();
        assert_relative_eq!(r.value, 9.0 - 1.5 + 6.0, epsilon = 1e-13);
        assert_eq!(r.evaluations, 15);
    }

    #[test]
    fn handles_sqrt_endpoint_singularity() {
        let q = Quadrature::with_tolerance(1e-12, 1e-12);
        let r = q.integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn breakpoints_resolve_kinks() {
        let q = Quadrature::default();
        let r = q
            .integrate_with_breaks(|x: f64| (x - 0.3).abs(), &[0.0, 0.3, 1.0])
            .unwrap();
        assert_relative_eq!(r.value, 0.045 + 0.245, epsilon = 1e-14);
    }

    #[test]
    fn reports_failure_on_non_integrable() {
        let q = Quadrature {
            max_segments: 50,
            ..Quadrature::default()
        };
        assert!(matches!(
            q.integrate(|x: f64| 1.0 / x, 0.0, 1.0),
            Err(Error::QuadratureFailure { .. })
        ));
    }

    #[test]
    fn empty_interval_is_zero() {
        let r = Quadrature::default().integrate(|x| x, 1.0, 1.0).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
