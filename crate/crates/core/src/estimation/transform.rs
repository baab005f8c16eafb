//! Maps between bounded natural parameters and the unconstrained
//! coordinates seen by the optimiser.

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// Any real value.
    Free,
    /// `(0, ∞)` through `x = exp(u)`.
    Positive,
    /// `(lo, hi)` through a scaled logistic.
    Interval(f64, f64),
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

impl Bound {
    pub const UNIT: Bound = Bound::Interval(0.0, 1.0);

    pub fn to_internal(self, x: f64) -> f64 {
        match self {
            Bound::Free => x,
            Bound::Positive => x.max(f64::MIN_POSITIVE).ln(),
            Bound::Interval(lo, hi) => {
                let span = hi - lo;
                let p = ((x - lo) / span).clamp(1e-15, 1.0 - 1e-15);
                (p / (1.0 - p)).ln()
            }
        }
    }

    pub fn to_natural(self, u: f64) -> f64 {
        match self {
            Bound::Free => u,
            Bound::Positive => u.exp(),
            Bound::Interval(lo, hi) => lo + (hi - lo) * sigmoid(u),
        }
    }

    /// `dx/du` at internal coordinate `u`.
    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Bound::Free => 1.0,
            Bound::Positive => u.exp(),
            Bound::Interval(lo, hi) => {
                let s = sigmoid(u);
                (hi - lo) * s * (1.0 - s)
            }
        }
    }

    /// Pulls a starting value inside the open domain.
    pub fn clamp_start(self, x: f64) -> f64 {
        match self {
            Bound::Free => x,
            Bound::Positive => x.max(1e-300),
            Bound::Interval(lo, hi) => {
                let margin = 1e-6 * (hi - lo);
                x.clamp(lo + margin, hi - margin)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip(x in 1e-6..0.999f64) {
            for b in [Bound::Free, Bound::Positive, Bound::UNIT, Bound::Interval(0.0, 3.0)] {
                let back = b.to_natural(b.to_internal(x));
                prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(1e-6));
            }
        }

        #[test]
        fn derivative_matches_difference(u in -8.0..8.0f64) {
            for b in [Bound::Positive, Bound::Interval(0.0, 3.0)] {
                let h = 1e-6;
                let fd = (b.to_natural(u + h) - b.to_natural(u - h)) / (2.0 * h);
                prop_assert!((fd - b.derivative(u)).abs() <= 1e-6 * fd.abs().max(1e-8));
            }
        }
    }
}
