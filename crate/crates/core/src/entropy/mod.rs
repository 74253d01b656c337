//! Discrete adapted entropy inequality, initial-trace recovery and
//! Young-measure concentration.
//!
//! For a steady state `m = m_α^±` and a test function `J ≥ 0` the residual is
//!
//! ```text
//! ∫∫ |ρ - m| ∂_t J + sgn(ρ - m) (F(x, ρ) - α) ∂_x J  dt dx  +  ∫ |ρ_0 - m| J(0, x) dx
//! ```
//!
//! evaluated on the solver's cells, with the state `ρ^n` held on the slab
//! `[t_n, t_{n+1})` and `J` differentiated at the slab midpoint.

mod test_fn;
mod young;

pub use test_fn::{bump, bump_prime, default_library, TestFunction};
pub use young::{bin_means, young_concentration, BinStats, ConcentrationSummary, YoungMeasureEstimate};

use rayon::prelude::*;
use thiserror::Error;

use crate::flux::Shape;
use crate::fv::{Discretization, Trajectory};
use crate::steady::{Branch, SteadyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error(transparent)]
    Steady(#[from] SteadyError),
    #[error("trajectory grid has {found} cells, discretization {expected}")]
    Grid { expected: usize, found: usize },
    #[error("ensemble of {0} replicas is below the minimum of 30")]
    SmallEnsemble(usize),
    #[error("no samples")]
    Empty,
}

/// How the flux term is signed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignMode {
    /// `sgn(ρ - m)` with `sgn(0) = 0`.
    Entropy,
    /// `sgn ≡ -1`, which turns the residual into a weak-form balance.
    Negative,
}

#[inline]
fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Per-slab spatial sums, reused across test functions for one steady state.
struct SlabSums {
    /// `Σ_i |ρ^n_i - m_i| B(x_i)` and `Σ_i s_i (F_i - α) B'(x_i)` per test function.
    weights: Vec<(f64, f64)>,
}

fn check_grid(traj: &Trajectory, disc: &Discretization) -> Result<(), EntropyError> {
    if traj.grid != disc.grid() {
        return Err(EntropyError::Grid {
            expected: disc.grid().n_cells(),
            found: traj.grid.n_cells(),
        });
    }
    Ok(())
}

/// Residual against a given steady profile `m` at level `alpha`, for every
/// test function in `library`.
pub fn residuals_for_profile(
    traj: &Trajectory,
    disc: &Discretization,
    m: &[f64],
    alpha: f64,
    library: &[TestFunction],
    mode: SignMode,
) -> Result<Vec<f64>, EntropyError> {
    check_grid(traj, disc)?;
    let grid = disc.grid();
    let dx = grid.dx();
    let centers = grid.centers();
    let space: Vec<(Vec<f64>, Vec<f64>)> = library
        .iter()
        .map(|j| {
            (
                centers.iter().map(|&x| j.space_factor(x)).collect(),
                centers.iter().map(|&x| j.space_factor_dx(x)).collect(),
            )
        })
        .collect();
    let slab = |state: &[f64]| -> SlabSums {
        let abs: Vec<f64> = state.iter().zip(m).map(|(r, mm)| (r - mm).abs()).collect();
        let flux: Vec<f64> = state
            .iter()
            .zip(m)
            .enumerate()
            .map(|(i, (&r, &mm))| {
                let s = match mode {
                    SignMode::Entropy => sgn(r - mm),
                    SignMode::Negative => -1.0,
                };
                if s == 0.0 {
                    0.0
                } else {
                    s * (disc.flux(i, r) - alpha)
                }
            })
            .collect();
        SlabSums {
            weights: space
                .iter()
                .map(|(b, db)| {
                    let a: f64 = abs.iter().zip(b).map(|(u, v)| u * v).sum();
                    let f: f64 = flux.iter().zip(db).map(|(u, v)| u * v).sum();
                    (a, f)
                })
                .collect(),
        }
    };
    let mut out = vec![0.0; library.len()];
    let n = traj.states.len();
    for k in 0..n.saturating_sub(1) {
        let (t0, t1) = (traj.times[k], traj.times[k + 1]);
        let tm = 0.5 * (t0 + t1);
        if library.iter().all(|j| j.time_factor(tm) == 0.0 && j.time_factor_dt(tm) == 0.0) {
            continue;
        }
        let sums = slab(&traj.states[k]);
        for (r, (j, (a, f))) in out.iter_mut().zip(library.iter().zip(&sums.weights)) {
            *r += (t1 - t0) * dx * (j.time_factor_dt(tm) * a + j.time_factor(tm) * f);
        }
    }
    let initial = slab(&traj.states[0]);
    for (r, (j, (a, _))) in out.iter_mut().zip(library.iter().zip(&initial.weights)) {
        *r += dx * j.time_factor(0.0) * a;
    }
    Ok(out)
}

/// Discrete adapted entropy residual for one `(α, branch, J)`.
pub fn entropy_residual(
    traj: &Trajectory,
    disc: &Discretization,
    alpha: f64,
    branch: Branch,
    j: &TestFunction,
) -> Result<f64, EntropyError> {
    let m = disc.steady_profile(alpha, branch)?;
    Ok(residuals_for_profile(traj, disc, &m, alpha, std::slice::from_ref(j), SignMode::Entropy)?[0])
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualEntry {
    pub alpha: f64,
    pub branch: Branch,
    pub j_id: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    pub entries: Vec<ResidualEntry>,
    pub n_cells: usize,
    pub dx: f64,
    pub dt: f64,
}

impl EntropyReport {
    pub fn min_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(f64::INFINITY, f64::min)
    }

    /// Smallest `C ≥ 0` with every residual `≥ -C (dx + dt)`.
    pub fn fitted_constant(&self) -> f64 {
        (-self.min_residual()).max(0.0) / (self.dx + self.dt)
    }

    pub fn all_above(&self, c: f64) -> bool {
        let tol = c * (self.dx + self.dt);
        self.entries.iter().all(|e| e.residual >= -tol)
    }
}

/// Twelve levels evenly spread over `[m0, min(1.2·envelope, cap)]`.
pub fn alpha_library(m0: f64, envelope: f64, cap: f64) -> Vec<f64> {
    let hi = (1.2 * envelope).min(cap).max(m0);
    (0..12).map(|k| m0 + (hi - m0) * k as f64 / 11.0).collect()
}

/// Branches worth auditing: one for increasing closures, both otherwise.
pub fn branches_for(disc: &Discretization) -> Vec<Branch> {
    match disc.closure().shape() {
        Shape::Increasing => vec![Branch::Plus],
        _ => vec![Branch::Plus, Branch::Minus],
    }
}

/// Every `(α, branch, J)` residual; levels run in parallel.
pub fn audit(
    traj: &Trajectory,
    disc: &Discretization,
    alphas: &[f64],
    library: &[TestFunction],
) -> Result<EntropyReport, EntropyError> {
    check_grid(traj, disc)?;
    let branches = branches_for(disc);
    let jobs: Vec<(f64, Branch)> = alphas
        .iter()
        .flat_map(|&a| branches.iter().map(move |&b| (a, b)))
        .collect();
    let rows: Result<Vec<Vec<ResidualEntry>>, EntropyError> = jobs
        .par_iter()
        .map(|&(alpha, branch)| {
            let m = disc.steady_profile(alpha, branch)?;
            let r = residuals_for_profile(traj, disc, &m, alpha, library, SignMode::Entropy)?;
            Ok(library
                .iter()
                .zip(r)
                .map(|(j, residual)| ResidualEntry {
                    alpha,
                    branch,
                    j_id: j.id,
                    residual,
                })
                .collect())
        })
        .collect();
    let dt = if traj.times.len() > 1 {
        traj.times[1] - traj.times[0]
    } else {
        0.0
    };
    Ok(EntropyReport {
        entries: rows?.into_iter().flatten().collect(),
        n_cells: disc.grid().n_cells(),
        dx: disc.grid().dx(),
        dt,
    })
}

/// `∫_a^b |ρ(t_min, x) - ρ_0(x)| dx` at the recorded time nearest `t_min`.
pub fn initial_recovery(traj: &Trajectory, rho0: &[f64], t_min: f64, window: (f64, f64)) -> f64 {
    let k = traj.nearest(t_min);
    let g = traj.grid;
    traj.states[k]
        .iter()
        .zip(rho0)
        .enumerate()
        .filter(|(i, _)| {
            let x = g.center(*i);
            x >= window.0 && x < window.1
        })
        .map(|(_, (a, b))| (a - b).abs())
        .sum::<f64>()
        * g.dx()
}

/// Trajectory of an analytic profile sampled at cell centres.
pub fn sampled_trajectory<F: Fn(f64, f64) -> f64>(
    grid: crate::fv::Grid1D,
    times: Vec<f64>,
    rho: F,
) -> Trajectory {
    let states = times.iter().map(|&t| grid.sample(|x| rho(t, x))).collect();
    Trajectory {
        grid,
        epsilon: None,
        times,
        states,
    }
}
