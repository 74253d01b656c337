use std::sync::Arc;

use crate::zrp::EquilibriumTables;

use super::{FluxError, RateFunction};

pub const DEFAULT_RHO_MAX: f64 = 50.0;

#[derive(Clone, Debug)]
pub enum ClosureKind {
    /// `h(ρ) = ρ`, the closure of `g(k) = k`.
    Linear,
    /// `h(ρ) = ρ/(1+ρ)`, the closure of `g(k) = 1{k ≥ 1}`.
    Saturating,
    /// `h = R⁻¹` evaluated from partition-function tables.
    Equilibrium(Arc<EquilibriumTables>),
    /// `h(ρ) = (ρ - center)²/2`.
    Convex { center: f64 },
    /// `h(ρ) = -(ρ - center)²/2`.
    Concave { center: f64 },
}

/// Qualitative shape of `h`, deciding which steady-state branches exist.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Increasing,
    /// Minimum `m0` attained at `rho_m`.
    Convex { rho_m: f64 },
    /// Maximum attained at `rho_m`.
    Concave { rho_m: f64 },
}

/// Macroscopic closure `h` on a bounded admissible density range.
#[derive(Clone, Debug)]
pub struct Closure {
    kind: ClosureKind,
    rho_max: f64,
}

impl Closure {
    pub fn linear() -> Self {
        Self::new(ClosureKind::Linear)
    }

    pub fn saturating() -> Self {
        Self::new(ClosureKind::Saturating)
    }

    pub fn convex(center: f64) -> Self {
        Self::new(ClosureKind::Convex { center })
    }

    pub fn concave(center: f64) -> Self {
        Self::new(ClosureKind::Concave { center })
    }

    pub fn new(kind: ClosureKind) -> Self {
        Self {
            kind,
            rho_max: DEFAULT_RHO_MAX,
        }
    }

    pub fn with_rho_max(mut self, rho_max: f64) -> Self {
        self.rho_max = rho_max;
        self
    }

    /// Closed form for the built-in rate functions, tabulated otherwise.
    pub fn for_rate(g: &RateFunction) -> Result<Self, FluxError> {
        match g {
            RateFunction::Indicator => Ok(Self::saturating()),
            RateFunction::Identity => Ok(Self::linear()),
            RateFunction::Table(_) => closure_from_rate(g),
        }
    }

    pub fn kind(&self) -> &ClosureKind {
        &self.kind
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn shape(&self) -> Shape {
        match self.kind {
            ClosureKind::Convex { center } => Shape::Convex { rho_m: center },
            ClosureKind::Concave { center } => Shape::Concave { rho_m: center },
            _ => Shape::Increasing,
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.shape() == Shape::Increasing
    }

    /// Admissible density interval.
    pub fn domain(&self) -> (f64, f64) {
        match self.kind {
            ClosureKind::Convex { center } | ClosureKind::Concave { center } => {
                (center - self.rho_max, center + self.rho_max)
            }
            _ => (0.0, self.rho_max),
        }
    }

    pub fn in_domain(&self, rho: f64) -> bool {
        let (lo, hi) = self.domain();
        rho >= lo && rho <= hi
    }

    pub fn eval(&self, rho: f64) -> Result<f64, FluxError> {
        if !self.in_domain(rho) {
            let (lo, hi) = self.domain();
            return Err(FluxError::Domain { rho, lo, hi });
        }
        Ok(self.h(rho))
    }

    /// `h(ρ)` without a domain check.
    #[inline]
    pub fn h(&self, rho: f64) -> f64 {
        match &self.kind {
            ClosureKind::Linear => rho,
            ClosureKind::Saturating => rho / (1.0 + rho),
            ClosureKind::Equilibrium(t) => t.fugacity_for_density(rho.max(0.0)).unwrap_or(f64::NAN),
            ClosureKind::Convex { center } => 0.5 * (rho - center) * (rho - center),
            ClosureKind::Concave { center } => -0.5 * (rho - center) * (rho - center),
        }
    }

    /// `h'(ρ)`.
    pub fn dh(&self, rho: f64) -> f64 {
        match &self.kind {
            ClosureKind::Linear => 1.0,
            ClosureKind::Saturating => 1.0 / ((1.0 + rho) * (1.0 + rho)),
            ClosureKind::Equilibrium(t) => {
                let phi = self.h(rho);
                match t.moments(phi) {
                    Ok(m) if m.variance > 0.0 => phi / m.variance,
                    // at φ = 0 the derivative is 1/g(1)
                    _ => 1.0 / t.rate().eval(1),
                }
            }
            ClosureKind::Convex { center } => rho - center,
            ClosureKind::Concave { center } => center - rho,
        }
    }

    /// Bound on `|h'|` over `[lo, hi]`.
    pub fn max_abs_slope(&self, lo: f64, hi: f64) -> f64 {
        match self.kind {
            ClosureKind::Linear => 1.0,
            ClosureKind::Saturating => self.dh(lo.max(0.0)),
            ClosureKind::Convex { .. } | ClosureKind::Concave { .. } => self.dh(lo).abs().max(self.dh(hi).abs()),
            ClosureKind::Equilibrium(_) => {
                let n = 64;
                (0..=n)
                    .map(|i| self.dh(lo + (hi - lo) * i as f64 / n as f64).abs())
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Supremum of `h` over the admissible range (increasing closures).
    pub fn sup(&self) -> f64 {
        match self.shape() {
            Shape::Increasing => self.h(self.rho_max),
            Shape::Convex { .. } => self.h(self.domain().1),
            Shape::Concave { rho_m } => self.h(rho_m),
        }
    }

    /// `h⁻¹(y)` for increasing closures; `None` when `y` is not attained.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        if !self.is_monotone() {
            return None;
        }
        let (lo, hi) = self.domain();
        if y < self.h(lo) || y > self.h(hi) {
            return None;
        }
        match &self.kind {
            ClosureKind::Linear => Some(y),
            ClosureKind::Saturating => Some(y / (1.0 - y)),
            ClosureKind::Equilibrium(t) => t.mean_occupation(y).ok(),
            _ => unreachable!(),
        }
    }

    /// Whether `h` is concave (linear counts) on its domain; sampled for
    /// tabulated closures.
    pub fn is_concave(&self) -> bool {
        match self.kind {
            ClosureKind::Linear | ClosureKind::Saturating | ClosureKind::Concave { .. } => true,
            ClosureKind::Convex { .. } => false,
            ClosureKind::Equilibrium(_) => {
                let (lo, hi) = self.domain();
                let n = 256;
                let slopes: Vec<f64> = (0..=n).map(|i| self.dh(lo + (hi - lo) * i as f64 / n as f64)).collect();
                slopes.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9))
            }
        }
    }

    /// Density where `h'` equals `slope`, for concave closures (rarefaction fans).
    pub fn inverse_slope(&self, slope: f64) -> Option<f64> {
        match self.kind {
            ClosureKind::Saturating => (slope > 0.0).then(|| 1.0 / slope.sqrt() - 1.0),
            ClosureKind::Concave { center } => Some(center - slope),
            ClosureKind::Equilibrium(_) => {
                let (mut lo, mut hi) = self.domain();
                if slope > self.dh(lo) || slope < self.dh(hi) {
                    return None;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.dh(mid) > slope {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(0.5 * (lo + hi))
            }
            _ => None,
        }
    }
}

/// Builds `h = R⁻¹` from the equilibrium tables of `g`.
pub fn closure_from_rate(g: &RateFunction) -> Result<Closure, FluxError> {
    let tables = EquilibriumTables::new(g.clone())?;
    Ok(Closure::new(ClosureKind::Equilibrium(Arc::new(tables))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_closures_from_tables() {
        let id = closure_from_rate(&RateFunction::Identity).unwrap();
        assert!((id.eval(2.0).unwrap() - 2.0).abs() < 1e-12);
        let ind = closure_from_rate(&RateFunction::Indicator).unwrap();
        assert!((ind.eval(1.0).unwrap() - 0.5).abs() < 1e-12);
        for c in [&id, &ind] {
            assert_eq!(c.eval(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn tabulated_agrees_with_closed_form() {
        let tab = closure_from_rate(&RateFunction::Indicator).unwrap();
        let exact = Closure::saturating();
        for rho in [0.01, 0.3, 1.0, 4.0, 25.0, 50.0] {
            assert!((tab.h(rho) - exact.h(rho)).abs() < 1e-12, "rho={rho}");
            assert!((tab.dh(rho) - exact.dh(rho)).abs() < 1e-9, "rho={rho}");
        }
        assert!(tab.is_concave());
    }

    #[test]
    fn domain_errors() {
        let c = Closure::saturating();
        assert!(matches!(c.eval(-0.5), Err(FluxError::Domain { .. })));
        assert!(c.eval(51.0).is_err());
        let c = closure_from_rate(&RateFunction::Identity).unwrap();
        assert!(c.eval(-1e-9).is_err());
    }

    #[test]
    fn inverse_and_slopes() {
        let c = Closure::saturating();
        assert!((c.inverse(0.25).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(c.inverse(0.999).is_none());
        let rho = c.inverse_slope(c.dh(0.7)).unwrap();
        assert!((rho - 0.7).abs() < 1e-12);
        assert_eq!(Closure::convex(1.0).shape(), Shape::Convex { rho_m: 1.0 });
        assert!(Closure::convex(0.0).inverse(1.0).is_none());
    }
}
