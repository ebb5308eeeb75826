//! Maps between bounded parameters and unconstrained optimizer coordinates.

/// Logistic sigmoid, numerically safe for large `|u|`.
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Scaled logit onto the open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Option<Self> {
        (lo.is_finite() && hi.is_finite() && lo < hi).then_some(Self { lo, hi })
    }

    pub fn contains_open(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn to_unbounded(&self, x: f64) -> f64 {
        logit((x - self.lo) / (self.hi - self.lo))
    }

    /// Clamped into the open interval; extreme `u` would otherwise round onto an edge.
    pub fn to_bounded(&self, u: f64) -> f64 {
        let x = self.lo + (self.hi - self.lo) * sigmoid(u);
        let eps = (self.hi - self.lo) * 1e-15;
        x.clamp(self.lo + eps, self.hi - eps)
    }
}
