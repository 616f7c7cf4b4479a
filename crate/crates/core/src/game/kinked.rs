//! Exact maximization of a concave quadratic minus weighted absolute values,
//! `f(x) = -a x^2 + b x + k - sum_j w_j |x - p_j|`, over an interval.
//!
//! The function is concave and piecewise quadratic with kinks at the `p_j`.
//! Walking the pieces left to right, the maximizer is the first point where
//! the right derivative stops being positive: either a stationary point
//! inside a piece or a kink.

use crate::consideration::ClosedInterval;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kink {
    pub location: f64,
    pub weight: f64,
}

impl Kink {
    pub fn new(location: f64, weight: f64) -> Self {
        Kink { location, weight }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinkedConcave {
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub kinks: Vec<Kink>,
}

impl KinkedConcave {
    pub fn new(a: f64, b: f64, k: f64, kinks: Vec<Kink>) -> Self {
        KinkedConcave { a, b, k, kinks }
    }

    pub fn value(&self, x: f64) -> f64 {
        let smooth = -self.a * x * x + self.b * x + self.k;
        self.kinks.iter().fold(smooth, |acc, kink| {
            acc - kink.weight * (x - kink.location).abs()
        })
    }

    /// Slope constant of the piece containing `x` (not at a kink):
    /// `f'(x) = -2 a x + slope_constant(x)`.
    fn slope_constant(&self, x: f64) -> f64 {
        self.kinks.iter().fold(self.b, |acc, kink| {
            if kink.location > x {
                acc + kink.weight
            } else if kink.location < x {
                acc - kink.weight
            } else {
                acc
            }
        })
    }

    fn check(&self, lo: f64, hi: f64) -> Result<()> {
        if !(self.a >= 0.0 && self.a.is_finite() && self.b.is_finite() && self.k.is_finite()) {
            return Err(Error::MethodUnsupported(format!(
                "kinked maximization needs a finite curvature a >= 0, got a = {}",
                self.a
            )));
        }
        if self.kinks.iter().any(|kink| {
            !(kink.weight >= 0.0 && kink.weight.is_finite() && kink.location.is_finite())
        }) {
            return Err(Error::MethodUnsupported(
                "kink weights must be finite and nonnegative".into(),
            ));
        }
        if !(lo.is_finite() && lo <= hi) {
            return Err(Error::Configuration(format!("invalid domain [{lo}, {hi}]")));
        }
        Ok(())
    }

    /// Exact maximizer set over `[lo, hi]`; `hi` may be infinite when `a > 0`.
    ///
    /// The result is a single point unless `a = 0` and a piece is flat.
    pub fn argmax(&self, lo: f64, hi: f64) -> Result<ClosedInterval> {
        self.check(lo, hi)?;
        let mut breaks: Vec<f64> = self
            .kinks
            .iter()
            .filter(|kink| kink.weight > 0.0 && kink.location > lo && kink.location < hi)
            .map(|kink| kink.location)
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks.insert(0, lo);
        breaks.push(hi);

        for piece in breaks.windows(2) {
            let (left, right) = (piece[0], piece[1]);
            let probe = if right.is_finite() {
                0.5 * (left + right)
            } else {
                left + 1.0
            };
            let c = self.slope_constant(probe);
            let slope_at_left = -2.0 * self.a * left + c;
            if slope_at_left < 0.0 {
                return Ok(ClosedInterval::singleton(left));
            }
            if slope_at_left == 0.0 {
                if self.a == 0.0 {
                    return Ok(ClosedInterval::new(left, right));
                }
                return Ok(ClosedInterval::singleton(left));
            }
            if !right.is_finite() {
                if self.a == 0.0 {
                    return Err(Error::Configuration(
                        "objective is unbounded above on the domain".into(),
                    ));
                }
                return Ok(ClosedInterval::singleton(c / (2.0 * self.a)));
            }
            let slope_at_right = -2.0 * self.a * right + c;
            if slope_at_right < 0.0 {
                return Ok(ClosedInterval::singleton(c / (2.0 * self.a)));
            }
        }
        Ok(ClosedInterval::singleton(hi))
    }
}

/// Maximizer set of `-a x^2 + b x + k - sum w_j |x - p_j|` over `x >= 0`.
pub fn kinked_concave_argmax(
    quad: (f64, f64, f64),
    kinks: &[(f64, f64)],
) -> Result<ClosedInterval> {
    let (a, b, k) = quad;
    if !(a > 0.0) {
        return Err(Error::MethodUnsupported(format!(
            "kinked maximization over the half-line needs a > 0, got {a}"
        )));
    }
    let f = KinkedConcave::new(
        a,
        b,
        k,
        kinks.iter().map(|&(p, w)| Kink::new(p, w)).collect(),
    );
    f.argmax(0.0, f64::INFINITY)
}
