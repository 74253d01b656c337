//! Steady states `m_α^±(x)` solving `λ(x) h(m) = α`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::flux::{Closure, FluxModel, Shape};
use crate::fv::Grid1D;

const MAX_ITER: usize = 200;
const RESIDUAL_TOL: f64 = 1e-10;

/// Which root of `λ(x) h(ρ) = α` to take; the two coincide for increasing `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Root at or above `ρ_m`.
    Plus,
    /// Root at or below `ρ_m`.
    Minus,
}

impl Branch {
    pub fn tag(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteadyError {
    #[error("flux level {alpha} not attained at x = {x}; attainable interval [{lo}, {hi}]")]
    NoSolution { x: f64, alpha: f64, lo: f64, hi: f64 },
    #[error("cell {cell}: {source}")]
    Cell { cell: usize, source: Box<SteadyError> },
    #[error("density {rho} at x = {x} outside the closure range [{lo}, {hi}]")]
    Domain { x: f64, rho: f64, lo: f64, hi: f64 },
    #[error("{0}")]
    Unsupported(&'static str),
}

/// Root of `lambda · h(ρ) = alpha` on the requested branch, or the attainable
/// flux interval when there is none.
pub fn steady_value(closure: &Closure, lambda: f64, alpha: f64, branch: Branch) -> Result<f64, (f64, f64)> {
    let (lo, hi) = closure.domain();
    // bracket [a, b] on which F is monotone
    let (a, b) = match (closure.shape(), branch) {
        (Shape::Increasing, _) => (lo, hi),
        (Shape::Convex { rho_m } | Shape::Concave { rho_m }, Branch::Plus) => (rho_m, hi),
        (Shape::Convex { rho_m } | Shape::Concave { rho_m }, Branch::Minus) => (lo, rho_m),
    };
    let f = |r: f64| lambda * closure.h(r) - alpha;
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        let (ya, yb) = (fa + alpha, fb + alpha);
        return Err((ya.min(yb), ya.max(yb)));
    }
    let rising = fb > 0.0;
    let (mut l, mut r) = (a, b);
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (l + r);
        if mid <= l || mid >= r {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == rising {
            r = mid;
        } else {
            l = mid;
        }
        if r - l <= 1e-13 * r.abs().max(1.0) {
            break;
        }
    }
    // secant polish inside the final bracket
    let (mut x0, mut x1) = (l, r);
    let (mut f0, mut f1) = (f(x0), f(x1));
    let mut best = if f0.abs() < f1.abs() { x0 } else { x1 };
    for _ in 0..4 {
        if f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x2 >= l && x2 <= r) {
            break;
        }
        let f2 = f(x2);
        if f2.abs() < f(best).abs() {
            best = x2;
        }
        (x0, f0, x1, f1) = (x1, f1, x2, f2);
        if f2 == 0.0 {
            break;
        }
    }
    Ok(best)
}

/// `m_α^branch(x)` for the model, to a residual of `1e-10 · max(1, |α|)`.
pub fn solve_steady(model: &FluxModel, alpha: f64, x: f64, branch: Branch) -> Result<f64, SteadyError> {
    let lambda = model.speed().eval(x);
    let m = steady_value(model.closure(), lambda, alpha, branch).map_err(|(lo, hi)| SteadyError::NoSolution {
        x,
        alpha,
        lo,
        hi,
    })?;
    let res = (lambda * model.closure().h(m) - alpha).abs();
    if res > RESIDUAL_TOL * alpha.abs().max(1.0) {
        return Err(SteadyError::NoSolution {
            x,
            alpha,
            lo: lambda * model.closure().h(m),
            hi: lambda * model.closure().h(m),
        });
    }
    Ok(m)
}

/// `solve_steady` at every cell centre.
pub fn steady_profile(model: &FluxModel, alpha: f64, grid: &Grid1D, branch: Branch) -> Result<Vec<f64>, SteadyError> {
    (0..grid.n_cells())
        .map(|i| {
            solve_steady(model, alpha, grid.center(i), branch).map_err(|e| SteadyError::Cell {
                cell: i,
                source: Box::new(e),
            })
        })
        .collect()
}

type CacheKey = (u64, usize, Branch);

/// Memoised steady profiles of one model, keyed by `(α, grid, branch)`.
#[derive(Debug)]
pub struct SteadyCache {
    model: FluxModel,
    profiles: Mutex<HashMap<CacheKey, Arc<Vec<f64>>>>,
}

impl SteadyCache {
    pub fn new(model: FluxModel) -> Self {
        Self {
            model,
            profiles: Mutex::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &FluxModel {
        &self.model
    }

    pub fn profile(&self, alpha: f64, grid: &Grid1D, branch: Branch) -> Result<Arc<Vec<f64>>, SteadyError> {
        let key = (alpha.to_bits(), grid.n_cells(), branch);
        if let Some(p) = self.profiles.lock().expect("cache poisoned").get(&key) {
            return Ok(p.clone());
        }
        let p = Arc::new(steady_profile(&self.model, alpha, grid, branch)?);
        self.profiles
            .lock()
            .expect("cache poisoned")
            .insert(key, p.clone());
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.profiles.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Flux level needed at one point so that `m_α^+ ≥ rho` there. Levels above
/// the attainable range count as `m_α = +∞`.
fn required_level(closure: &Closure, lambda: f64, rho: f64) -> f64 {
    match closure.shape() {
        Shape::Increasing => lambda * closure.h(rho),
        Shape::Convex { rho_m } => lambda * closure.h(rho.max(rho_m)),
        Shape::Concave { .. } => unreachable!(),
    }
}

/// Grid step used by [`envelope_alpha`]: 1% of the largest attainable level.
pub fn envelope_step(model: &FluxModel) -> f64 {
    let c = model.closure();
    let (lo, hi) = c.domain();
    model.speed().lambda_hi() * c.h(hi).max(c.h(lo)) / 100.0
}

/// Smallest `α` on a 1% grid with `m_α^+(x) ≥ rho(x)` at every sample.
/// Points where `α` exceeds the attainable flux count as dominated.
pub fn envelope_alpha(model: &FluxModel, xs: &[f64], rho: &[f64]) -> Result<f64, SteadyError> {
    let c = model.closure();
    if matches!(c.shape(), Shape::Concave { .. }) {
        return Err(SteadyError::Unsupported("envelopes need an increasing or convex closure"));
    }
    let (lo, hi) = c.domain();
    let mut need = model.m0().max(0.0);
    if matches!(c.shape(), Shape::Increasing) {
        need = need.max(model.speed().lambda_hi() * c.h(lo));
    }
    for (&x, &r) in xs.iter().zip(rho) {
        if !(r >= lo && r <= hi) {
            return Err(SteadyError::Domain { x, rho: r, lo, hi });
        }
        need = need.max(required_level(c, model.speed().eval(x), r));
    }
    let step = envelope_step(model);
    let j = (need / step - 1e-9).ceil().max(0.0);
    Ok(j * step)
}

/// `m_α^+(x)`, or `+∞` when `α` exceeds the flux attainable at `x`.
pub fn steady_upper(model: &FluxModel, alpha: f64, x: f64) -> f64 {
    let lambda = model.speed().eval(x);
    match steady_value(model.closure(), lambda, alpha, Branch::Plus) {
        Ok(m) => m,
        Err((_, top)) if alpha > top => f64::INFINITY,
        Err(_) => model.closure().domain().0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::SpeedField;
    use proptest::prelude::*;

    fn fixture() -> FluxModel {
        FluxModel::new(SpeedField::step(2.0, 1.0, 0.5).unwrap(), Closure::saturating())
    }

    // independent oracle: plain bisection on λh(ρ) - α
    fn bisect(lambda: f64, alpha: f64) -> f64 {
        let (mut a, mut b) = (0.0f64, 50.0f64);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if lambda * m / (1.0 + m) < alpha {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn fixture_values() {
        let m = fixture();
        let left = solve_steady(&m, 0.5, 0.25, Branch::Plus).unwrap();
        let right = solve_steady(&m, 0.5, 0.75, Branch::Plus).unwrap();
        assert!((left - 1.0 / 3.0).abs() < 1e-10);
        assert!((right - 1.0).abs() < 1e-10);
        assert!((left - bisect(2.0, 0.5)).abs() < 1e-10);
        assert!((right - bisect(1.0, 0.5)).abs() < 1e-10);
    }

    #[test]
    fn convex_extremum_level() {
        let m = FluxModel::new(SpeedField::step(2.0, 1.0, 0.5).unwrap(), Closure::convex(1.0));
        for x in [0.2, 0.7] {
            assert_eq!(solve_steady(&m, 0.0, x, Branch::Plus).unwrap(), 1.0);
            assert_eq!(solve_steady(&m, 0.0, x, Branch::Minus).unwrap(), 1.0);
        }
        let p = solve_steady(&m, 0.25, 0.7, Branch::Plus).unwrap();
        let q = solve_steady(&m, 0.25, 0.7, Branch::Minus).unwrap();
        assert!((p - 1.0 - 0.5f64.sqrt()).abs() < 1e-10);
        assert!((q - 1.0 + 0.5f64.sqrt()).abs() < 1e-10);
        assert!(solve_steady(&m, -0.1, 0.7, Branch::Plus).is_err());
    }

    #[test]
    fn no_solution_reports_interval() {
        let m = fixture();
        match solve_steady(&m, 1.5, 0.75, Branch::Plus) {
            Err(SteadyError::NoSolution { x, lo, hi, .. }) => {
                assert_eq!(x, 0.75);
                assert_eq!(lo, 0.0);
                assert!((hi - 50.0 / 51.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn profile_two_values() {
        let m = fixture();
        let g = Grid1D::new(64);
        let p = steady_profile(&m, 0.5, &g, Branch::Plus).unwrap();
        for (i, v) in p.iter().enumerate() {
            let want = if g.center(i) < 0.5 { 1.0 / 3.0 } else { 1.0 };
            assert!((v - want).abs() < 1e-10);
        }
        let c = FluxModel::new(SpeedField::constant(2.0).unwrap(), Closure::linear());
        assert!(steady_profile(&c, 1.0, &g, Branch::Plus).unwrap().iter().all(|&v| (v - 0.5).abs() < 1e-12));
        let err = steady_profile(&m, 1.5, &g, Branch::Plus).unwrap_err();
        assert!(matches!(err, SteadyError::Cell { cell: 32, .. }));
    }

    #[test]
    fn cache_reuses_profiles() {
        let cache = SteadyCache::new(fixture());
        let g = Grid1D::new(16);
        let a = cache.profile(0.5, &g, Branch::Plus).unwrap();
        let b = cache.profile(0.5, &g, Branch::Plus).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        cache.profile(0.4, &g, Branch::Plus).unwrap();
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn envelope_examples() {
        let m = fixture();
        let xs: Vec<f64> = (0..200).map(|i| (i as f64 + 0.5) / 200.0).collect();
        assert_eq!(envelope_alpha(&m, &xs, &vec![0.0; 200]).unwrap(), 0.0);
        // dense α-scan oracle: smallest α with m_α ≥ 1 at both regions, +∞ allowed
        let scan = (0..=100_000)
            .map(|k| k as f64 * 2.0 / 100_000.0)
            .find(|&a| xs.iter().all(|&x| steady_upper(&m, a, x) >= 1.0 - 1e-12))
            .unwrap();
        let env = envelope_alpha(&m, &xs, &vec![1.0; 200]).unwrap();
        assert!((scan - 1.0).abs() < 1e-4);
        assert!(env >= scan - 1e-12 && env - scan <= envelope_step(&m));
        let beta = 0.37;
        let prof: Vec<f64> = xs.iter().map(|&x| solve_steady(&m, beta, x, Branch::Plus).unwrap()).collect();
        let a = envelope_alpha(&m, &xs, &prof).unwrap();
        assert!(a >= beta - 1e-9 && a - beta <= envelope_step(&m));
        assert!(envelope_alpha(&m, &xs[..1], &[-1.0]).is_err());
    }

    #[test]
    fn flux_constant_across_jump() {
        let m = fixture();
        for alpha in [0.1, 0.5, 0.9] {
            for x in [0.0, 0.1, 0.4999, 0.5, 0.5001, 0.99] {
                let v = solve_steady(&m, alpha, x, Branch::Plus).unwrap();
                assert!((m.flux(x, v) - alpha).abs() < 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn monotone_in_alpha(a1 in 0.0f64..0.9, d in 0.0f64..0.05, x in 0.0f64..1.0) {
            let m = fixture();
            let lo = solve_steady(&m, a1, x, Branch::Plus).unwrap();
            let hi = solve_steady(&m, a1 + d, x, Branch::Plus).unwrap();
            prop_assert!(lo <= hi);
        }

        #[test]
        fn residual_bound(alpha in 0.0f64..0.97, x in 0.0f64..1.0) {
            let m = fixture();
            let v = solve_steady(&m, alpha, x, Branch::Plus).unwrap();
            prop_assert!((m.flux(x, v) - alpha).abs() <= 1e-10 * alpha.max(1.0));
        }
    }
}
