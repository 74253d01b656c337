//! Exact Riemann solutions at a jump of `λ` for increasing concave `h`.

use crate::flux::{Closure, SpeedField};

use super::{FvError, StepProfile};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Wave {
    /// Data already steady across the jump.
    None,
    Contact { speed: f64 },
    Shock { speed: f64 },
    /// Fan between the trace (tail) and the right state (head).
    Rarefaction { tail: f64, head: f64 },
}

/// Self-similar solution with the jump of `λ` at `x = 0`.
#[derive(Clone, Debug)]
pub struct RiemannSolution {
    lambda_right: f64,
    closure: Closure,
    rho_left: f64,
    rho_right: f64,
    trace: f64,
    wave: Wave,
}

/// Left state unchanged; trace `ρ* = h⁻¹(λ_L h(ρ_L)/λ_R)` at `0⁺`; one
/// classical wave between `ρ*` and `ρ_R` under the flux `λ_R h`.
pub fn riemann_exact(
    lambda_left: f64,
    lambda_right: f64,
    closure: &Closure,
    rho_left: f64,
    rho_right: f64,
) -> Result<RiemannSolution, FvError> {
    if !closure.is_monotone() || !closure.is_concave() {
        return Err(FvError::Unsupported("exact Riemann solver needs an increasing concave closure".into()));
    }
    if !(lambda_left > 0.0 && lambda_right > 0.0) {
        return Err(FvError::Unsupported("speeds must be positive".into()));
    }
    for rho in [rho_left, rho_right] {
        if !closure.in_domain(rho) {
            return Err(FvError::Unsupported(format!("density {rho} outside the closure domain")));
        }
    }
    let alpha_in = lambda_left * closure.h(rho_left);
    let cap = lambda_right * closure.sup();
    if alpha_in >= cap {
        return Err(FvError::Unsupported(format!(
            "incoming flux {alpha_in} not attainable on the right (sup {cap})"
        )));
    }
    let trace = closure
        .inverse(alpha_in / lambda_right)
        .ok_or_else(|| FvError::Unsupported("trace density not attainable".into()))?;
    let f = |r: f64| lambda_right * closure.h(r);
    let scale = trace.abs().max(rho_right.abs()).max(1.0);
    let wave = if (trace - rho_right).abs() <= 1e-14 * scale {
        Wave::None
    } else {
        let (s_tail, s_head) = (lambda_right * closure.dh(trace), lambda_right * closure.dh(rho_right));
        if (s_tail - s_head).abs() <= 1e-14 * s_tail.abs().max(1.0) {
            Wave::Contact { speed: s_tail }
        } else if trace < rho_right {
            Wave::Shock {
                speed: (f(rho_right) - f(trace)) / (rho_right - trace),
            }
        } else {
            Wave::Rarefaction {
                tail: s_tail,
                head: s_head,
            }
        }
    };
    Ok(RiemannSolution {
        lambda_right,
        closure: closure.clone(),
        rho_left,
        rho_right,
        trace,
        wave,
    })
}

impl RiemannSolution {
    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn wave(&self) -> Wave {
        self.wave
    }

    pub fn rho_left(&self) -> f64 {
        self.rho_left
    }

    pub fn rho_right(&self) -> f64 {
        self.rho_right
    }

    /// Fastest signal; zero when nothing moves.
    pub fn max_speed(&self) -> f64 {
        match self.wave {
            Wave::None => 0.0,
            Wave::Contact { speed } | Wave::Shock { speed } => speed,
            Wave::Rarefaction { head, .. } => head,
        }
    }

    /// `ρ(t, x)` with the jump of `λ` at `x = 0`.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        if x < 0.0 {
            return self.rho_left;
        }
        if t <= 0.0 {
            return self.rho_right;
        }
        let xi = x / t;
        match self.wave {
            Wave::None => self.trace,
            Wave::Contact { speed } | Wave::Shock { speed } => {
                if xi < speed {
                    self.trace
                } else {
                    self.rho_right
                }
            }
            Wave::Rarefaction { tail, head } => {
                if xi <= tail {
                    self.trace
                } else if xi >= head {
                    self.rho_right
                } else {
                    self.closure
                        .inverse_slope(xi / self.lambda_right)
                        .unwrap_or(self.rho_right)
                        .clamp(self.rho_right, self.trace)
                }
            }
        }
    }
}

/// Composite exact solution on the torus for piecewise-constant `λ` and
/// data, valid until waves from neighbouring jumps meet.
#[derive(Clone, Debug)]
pub struct PeriodicRiemann {
    jumps: Vec<f64>,
    locals: Vec<RiemannSolution>,
    t_interact: f64,
}

impl PeriodicRiemann {
    pub fn new(speed: &SpeedField, closure: &Closure, data: &StepProfile) -> Result<Self, FvError> {
        if speed.constant_pieces().is_none() {
            return Err(FvError::Unsupported("composite Riemann solution needs piecewise-constant speeds".into()));
        }
        let mut jumps: Vec<f64> = speed.breakpoints().iter().copied().chain(data.jumps()).collect();
        jumps.sort_by(f64::total_cmp);
        jumps.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        if jumps.is_empty() {
            jumps.push(0.0);
        }
        let n = jumps.len();
        let gap = |k: usize| {
            let next = if k + 1 < n { jumps[k + 1] } else { jumps[0] + 1.0 };
            next - jumps[k]
        };
        // interval k = [jumps[k], jumps[k+1])
        let mid = |k: usize| jumps[k] + 0.5 * gap(k);
        let mut locals = Vec::with_capacity(n);
        let mut t_interact = f64::INFINITY;
        for k in 0..n {
            let left = (k + n - 1) % n;
            let local = riemann_exact(
                speed.eval(mid(left)),
                speed.eval(mid(k)),
                closure,
                data.eval(mid(left)),
                data.eval(mid(k)),
            )?;
            let s = local.max_speed();
            if s > 0.0 {
                t_interact = t_interact.min(gap(k) / s);
            }
            locals.push(local);
        }
        Ok(Self {
            jumps,
            locals,
            t_interact,
        })
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn locals(&self) -> &[RiemannSolution] {
        &self.locals
    }

    /// First time a wave reaches the next jump.
    pub fn interaction_time(&self) -> f64 {
        self.t_interact
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64, FvError> {
        if t > self.t_interact {
            return Err(FvError::Unsupported(format!(
                "t = {t} beyond wave interaction time {}",
                self.t_interact
            )));
        }
        Ok(self.eval_unchecked(t, x))
    }

    fn eval_unchecked(&self, t: f64, x: f64) -> f64 {
        let x = crate::flux::wrap(x);
        let k = self.jumps.partition_point(|&j| j <= x);
        let (k, xi) = if k == 0 {
            let last = self.jumps.len() - 1;
            (last, x + 1.0 - self.jumps[last])
        } else {
            (k - 1, x - self.jumps[k - 1])
        };
        self.locals[k].eval(t, xi)
    }

    /// Mean over `[a, b]` from `samples` midpoint evaluations.
    pub fn average(&self, t: f64, a: f64, b: f64, samples: usize) -> Result<f64, FvError> {
        if t > self.t_interact {
            return self.eval(t, a);
        }
        let h = (b - a) / samples as f64;
        Ok((0..samples)
            .map(|i| self.eval_unchecked(t, a + (i as f64 + 0.5) * h))
            .sum::<f64>()
            / samples as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_contact() {
        let s = riemann_exact(1.0, 2.0, &Closure::linear(), 1.0, 1.0).unwrap();
        assert_eq!(s.trace(), 0.5);
        assert_eq!(s.wave(), Wave::Contact { speed: 2.0 });
        let t = 0.1;
        assert_eq!(s.eval(t, -0.05), 1.0);
        assert_eq!(s.eval(t, 0.1), 0.5);
        assert_eq!(s.eval(t, 0.25), 1.0);
    }

    #[test]
    fn steady_data_is_time_independent() {
        let s = riemann_exact(2.0, 1.0, &Closure::saturating(), 1.0 / 3.0, 1.0).unwrap();
        assert_eq!(s.wave(), Wave::None);
        for t in [0.0, 0.3, 5.0] {
            for x in [-0.2, 0.0, 0.4] {
                let want = if x < 0.0 { 1.0 / 3.0 } else { 1.0 };
                assert!((s.eval(t, x) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn shock_and_fan_of_fixture() {
        let c = Closure::saturating();
        let shock = riemann_exact(2.0, 1.0, &c, 1.0 / 3.0, 2.0).unwrap();
        match shock.wave() {
            Wave::Shock { speed } => assert!((speed - 1.0 / 6.0).abs() < 1e-14),
            w => panic!("{w:?}"),
        }
        let fan = riemann_exact(1.0, 2.0, &c, 2.0, 1.0 / 3.0).unwrap();
        assert!((fan.trace() - 0.5).abs() < 1e-14);
        match fan.wave() {
            Wave::Rarefaction { tail, head } => {
                assert!((tail - 2.0 / 2.25).abs() < 1e-14);
                assert!((head - 1.125).abs() < 1e-14);
            }
            w => panic!("{w:?}"),
        }
        // inside the fan, λ_R h'(ρ) = x/t
        let (t, x) = (0.2, 0.2);
        let r = fan.eval(t, x);
        assert!((2.0 / (1.0 + r).powi(2) - x / t).abs() < 1e-12);
    }

    #[test]
    fn unattainable_flux_is_rejected() {
        let c = Closure::saturating();
        assert!(riemann_exact(2.0, 1.0, &c, 10.0, 1.0).is_err());
        assert!(riemann_exact(1.0, 1.0, &Closure::convex(0.0), 1.0, 1.0).is_err());
    }

    #[test]
    fn composite_fixture() {
        let speed = SpeedField::step(2.0, 1.0, 0.5).unwrap();
        let data = StepProfile::new(vec![(0.0, 1.0 / 3.0), (0.5, 2.0)]).unwrap();
        let p = PeriodicRiemann::new(&speed, &Closure::saturating(), &data).unwrap();
        assert!((p.interaction_time() - 0.5 / 1.125).abs() < 1e-12);
        let t = 0.4;
        assert!((p.eval(t, 0.5 + t / 6.0 - 1e-6).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(p.eval(t, 0.5 + t / 6.0 + 1e-6).unwrap(), 2.0);
        assert!((p.eval(t, 0.01).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(p.eval(t, 0.46).unwrap(), 1.0 / 3.0);
        assert_eq!(p.eval(t, 0.9).unwrap(), 2.0);
        assert!(p.eval(0.45, 0.2).is_err());
    }
}
