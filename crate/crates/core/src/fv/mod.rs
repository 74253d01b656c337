//! First-order Godunov scheme on a periodic grid for `∂_t ρ + ∂_x(λ_ε(x) h(ρ)) = 0`.
//!
//! The speed is frozen at cell centres, so each interface sees a left and a
//! right coefficient. The interface flux is the Godunov supply/demand value
//! for the pair, which makes cell-centred steady states exact fixed points
//! and keeps the scheme monotone.

mod grid;
mod profile;
mod riemann;

pub use grid::Grid1D;
pub use profile::StepProfile;
pub use riemann::{riemann_exact, PeriodicRiemann, RiemannSolution, Wave};

use thiserror::Error;

use crate::flux::{Closure, FluxError, FluxModel, MollifierKernel, Shape};
use crate::steady::{steady_value, Branch, SteadyError};

/// Default Courant number used by [`Discretization::solve`].
pub const CFL: f64 = 0.45;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FvError {
    #[error("time step {dt} violates the CFL bound; admissible dt = {admissible}")]
    CflViolation { dt: f64, admissible: f64 },
    #[error("mollifier scale {epsilon} below 4 dx = {}", 4.0 * dx)]
    Unresolved { epsilon: f64, dx: f64 },
    #[error("expected {expected} cell values, got {found}")]
    Length { expected: usize, found: usize },
    #[error("invalid time {0}")]
    Time(f64),
    #[error("unsupported regime: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error(transparent)]
    Steady(#[from] SteadyError),
}

/// Cell averages at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSolution {
    pub grid: Grid1D,
    pub time: f64,
    pub values: Vec<f64>,
    pub epsilon: Option<f64>,
}

impl GridSolution {
    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn l1_distance(&self, other: &GridSolution) -> f64 {
        self.grid.l1_distance(&self.values, &other.values)
    }
}

/// Recorded states `ρ^n` at `t_n = n·dt` (every step unless thinned).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: Grid1D,
    pub epsilon: Option<f64>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn snapshot(&self, k: usize) -> GridSolution {
        GridSolution {
            grid: self.grid,
            time: self.times[k],
            values: self.states[k].clone(),
            epsilon: self.epsilon,
        }
    }

    pub fn last(&self) -> GridSolution {
        self.snapshot(self.states.len() - 1)
    }

    /// Index of the recorded time closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            0
        } else if k == self.times.len() || t - self.times[k - 1] <= self.times[k] - t {
            k - 1
        } else {
            k
        }
    }
}

/// Godunov flux between cells with coefficients `lambda_l`, `lambda_r`.
#[inline]
pub fn godunov_flux(closure: &Closure, lambda_l: f64, lambda_r: f64, rho_l: f64, rho_r: f64) -> f64 {
    match closure.shape() {
        Shape::Increasing => (lambda_l * closure.h(rho_l)).min(lambda_r * closure.sup()),
        Shape::Convex { rho_m } => (lambda_l * closure.h(rho_l.max(rho_m))).max(lambda_r * closure.h(rho_r.min(rho_m))),
        Shape::Concave { rho_m } => (lambda_l * closure.h(rho_l.min(rho_m))).min(lambda_r * closure.h(rho_r.max(rho_m))),
    }
}

/// Godunov value of the model flux at one interface.
pub fn interface_flux(model: &FluxModel, x_interface: f64, rho_left: f64, rho_right: f64) -> f64 {
    let lambda = model.speed().eval(x_interface);
    godunov_flux(model.closure(), lambda, lambda, rho_left, rho_right)
}

/// Speeds frozen at cell centres plus the closure; everything a step needs.
#[derive(Clone, Debug)]
pub struct Discretization {
    grid: Grid1D,
    lambda: Vec<f64>,
    closure: Closure,
    epsilon: Option<f64>,
}

impl Discretization {
    /// Mollifies the model when a kernel is given; requires `ε ≥ 4 dx`.
    pub fn new(model: &FluxModel, kernel: Option<&MollifierKernel>, grid: Grid1D) -> Result<Self, FvError> {
        let speed = match kernel {
            Some(k) => {
                if k.epsilon() < 4.0 * grid.dx() * (1.0 - 1e-12) {
                    return Err(FvError::Unresolved {
                        epsilon: k.epsilon(),
                        dx: grid.dx(),
                    });
                }
                model.speed().mollify(k)
            }
            None => model.speed().clone(),
        };
        Ok(Self {
            grid,
            lambda: grid.sample(|x| speed.eval(x)),
            closure: model.closure().clone(),
            epsilon: kernel.map(|k| k.epsilon()),
        })
    }

    pub fn from_speeds(lambda: Vec<f64>, closure: Closure) -> Self {
        Self {
            grid: Grid1D::new(lambda.len()),
            lambda,
            closure,
            epsilon: None,
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    /// `λ_i h(ρ)`.
    #[inline]
    pub fn flux(&self, i: usize, rho: f64) -> f64 {
        self.lambda[i] * self.closure.h(rho)
    }

    /// Cell-centred steady profile against the frozen speeds.
    pub fn steady_profile(&self, alpha: f64, branch: Branch) -> Result<Vec<f64>, SteadyError> {
        self.lambda
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                steady_value(&self.closure, l, alpha, branch).map_err(|(lo, hi)| SteadyError::Cell {
                    cell: i,
                    source: Box::new(SteadyError::NoSolution {
                        x: self.grid.center(i),
                        alpha,
                        lo,
                        hi,
                    }),
                })
            })
            .collect()
    }

    /// Range the solution from `rho0` stays in, bracketed by steady states
    /// through the extreme flux levels of the data.
    pub fn value_bounds(&self, rho0: &[f64]) -> (f64, f64) {
        let levels = rho0.iter().enumerate().map(|(i, &r)| self.flux(i, r));
        let (a_lo, a_hi) = levels.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), a| (l.min(a), h.max(a)));
        let (d_lo, d_hi) = self.closure.domain();
        let extreme = |alpha: f64, branch: Branch, upper: bool| {
            self.lambda
                .iter()
                .map(|&l| steady_value(&self.closure, l, alpha, branch).unwrap_or(if upper { d_hi } else { d_lo }))
                .fold(if upper { f64::NEG_INFINITY } else { f64::INFINITY }, |acc, v| {
                    if upper {
                        acc.max(v)
                    } else {
                        acc.min(v)
                    }
                })
        };
        let data_lo = rho0.iter().copied().fold(f64::INFINITY, f64::min);
        let data_hi = rho0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = match self.closure.shape() {
            Shape::Increasing => (extreme(a_lo, Branch::Plus, false), extreme(a_hi, Branch::Plus, true)),
            Shape::Convex { .. } => (extreme(a_hi, Branch::Minus, false), extreme(a_hi, Branch::Plus, true)),
            Shape::Concave { .. } => (extreme(a_lo, Branch::Minus, false), extreme(a_lo, Branch::Plus, true)),
        };
        (lo.min(data_lo).max(d_lo), hi.max(data_hi).min(d_hi))
    }

    /// `max_i λ_i · max |h'|` over `[lo, hi]`.
    pub fn max_speed(&self, lo: f64, hi: f64) -> f64 {
        let lam = self.lambda.iter().copied().fold(0.0, f64::max);
        lam * self.closure.max_abs_slope(lo, hi)
    }

    /// `CFL · dx / L` for the value range reachable from `rho0`.
    pub fn stable_dt(&self, rho0: &[f64], cfl: f64) -> f64 {
        let (lo, hi) = self.value_bounds(rho0);
        let l = self.max_speed(lo, hi);
        if l > 0.0 {
            cfl * self.grid.dx() / l
        } else {
            f64::INFINITY
        }
    }

    fn check_len(&self, values: &[f64]) -> Result<(), FvError> {
        if values.len() != self.grid.n_cells() {
            return Err(FvError::Length {
                expected: self.grid.n_cells(),
                found: values.len(),
            });
        }
        Ok(())
    }

    /// Writes `F_{i+1/2}` into `fluxes[i]`.
    fn interface_fluxes(&self, values: &[f64], fluxes: &mut [f64]) {
        let n = values.len();
        let c = &self.closure;
        match c.shape() {
            Shape::Increasing => {
                let sup = c.sup();
                for i in 0..n {
                    let j = if i + 1 == n { 0 } else { i + 1 };
                    fluxes[i] = (self.lambda[i] * c.h(values[i])).min(self.lambda[j] * sup);
                }
            }
            _ => {
                for i in 0..n {
                    let j = if i + 1 == n { 0 } else { i + 1 };
                    fluxes[i] = godunov_flux(c, self.lambda[i], self.lambda[j], values[i], values[j]);
                }
            }
        }
    }

    fn advance(&self, values: &mut [f64], fluxes: &mut [f64], dt: f64) {
        self.interface_fluxes(values, fluxes);
        let r = dt / self.grid.dx();
        let n = values.len();
        let mut left = fluxes[n - 1];
        for i in 0..n {
            values[i] -= r * (fluxes[i] - left);
            left = fluxes[i];
        }
    }

    /// One conservative update; rejected only when the Courant number
    /// exceeds one on the current data.
    pub fn step(&self, sol: &GridSolution, dt: f64) -> Result<GridSolution, FvError> {
        self.check_len(&sol.values)?;
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(FvError::Time(dt));
        }
        let (lo, hi) = self.value_bounds(&sol.values);
        let l = self.max_speed(lo, hi);
        if dt * l > self.grid.dx() * (1.0 + 1e-12) {
            return Err(FvError::CflViolation {
                dt,
                admissible: CFL * self.grid.dx() / l,
            });
        }
        let mut values = sol.values.clone();
        let mut fluxes = vec![0.0; values.len()];
        self.advance(&mut values, &mut fluxes, dt);
        Ok(GridSolution {
            grid: self.grid,
            time: sol.time + dt,
            values,
            epsilon: self.epsilon,
        })
    }

    fn plan(&self, rho0: &[f64], t_end: f64) -> Result<(usize, f64), FvError> {
        self.check_len(rho0)?;
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(FvError::Time(t_end));
        }
        if t_end == 0.0 {
            return Ok((0, 0.0));
        }
        let dt_max = self.stable_dt(rho0, CFL);
        let steps = (t_end / dt_max).ceil().max(1.0) as usize;
        Ok((steps, t_end / steps as f64))
    }

    /// March to `t_end` with a fixed step chosen once from the data.
    pub fn solve(&self, rho0: &[f64], t_end: f64) -> Result<GridSolution, FvError> {
        let (steps, dt) = self.plan(rho0, t_end)?;
        let mut values = rho0.to_vec();
        let mut fluxes = vec![0.0; values.len()];
        for _ in 0..steps {
            self.advance(&mut values, &mut fluxes, dt);
        }
        Ok(GridSolution {
            grid: self.grid,
            time: t_end,
            values,
            epsilon: self.epsilon,
        })
    }

    /// As [`solve`](Self::solve), keeping every `record_every`-th state
    /// (the initial and final states always).
    pub fn solve_trajectory(&self, rho0: &[f64], t_end: f64, record_every: usize) -> Result<Trajectory, FvError> {
        let (steps, dt) = self.plan(rho0, t_end)?;
        let every = record_every.max(1);
        let mut values = rho0.to_vec();
        let mut fluxes = vec![0.0; values.len()];
        let mut times = vec![0.0];
        let mut states = vec![values.clone()];
        for n in 1..=steps {
            self.advance(&mut values, &mut fluxes, dt);
            if n % every == 0 || n == steps {
                times.push(n as f64 * dt);
                states.push(values.clone());
            }
        }
        Ok(Trajectory {
            grid: self.grid,
            epsilon: self.epsilon,
            times,
            states,
        })
    }

    /// Solutions at each of the increasing `times`, each segment marched
    /// with its own fixed step so snapshots land exactly.
    pub fn solve_at(&self, rho0: &[f64], times: &[f64]) -> Result<Vec<GridSolution>, FvError> {
        self.check_len(rho0)?;
        let dt_max = self.stable_dt(rho0, CFL);
        let mut values = rho0.to_vec();
        let mut fluxes = vec![0.0; values.len()];
        let mut t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &target in times {
            if !(target >= t && target.is_finite()) {
                return Err(FvError::Time(target));
            }
            let seg = target - t;
            if seg > 0.0 {
                let steps = (seg / dt_max).ceil().max(1.0) as usize;
                let dt = seg / steps as f64;
                for _ in 0..steps {
                    self.advance(&mut values, &mut fluxes, dt);
                }
            }
            t = target;
            out.push(GridSolution {
                grid: self.grid,
                time: t,
                values: values.clone(),
                epsilon: self.epsilon,
            });
        }
        Ok(out)
    }
}

/// Mollified solve of the Cauchy problem on `grid` to `t_end`.
pub fn solve(
    model: &FluxModel,
    kernel: Option<&MollifierKernel>,
    rho0: &[f64],
    t_end: f64,
    grid: Grid1D,
) -> Result<GridSolution, FvError> {
    Discretization::new(model, kernel, grid)?.solve(rho0, t_end)
}
