//! Hydrodynamic-limit experiments: particle ensembles against a PDE
//! reference, ε-ladders of the mollified solver, and their reports.

pub mod commands;
pub mod config;
mod report;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::coupling::CouplingError;
use crate::entropy::{bin_means, young_concentration, ConcentrationSummary, EntropyError, YoungMeasureEstimate};
use crate::flux::{FluxError, FluxModel, MollifierKernel};
use crate::fv::{Discretization, FvError, Grid1D, PeriodicRiemann, StepProfile};
use crate::rng::{stream, Purpose};
use crate::steady::{solve_steady, Branch, SteadyError};
use crate::zrp::{
    profile_at_sites, sample_product_measure, EquilibriumTables, JumpKernel, LatticeModel, ZrpError, ZrpProcess,
};

pub use config::{BlockSchedule, ConfigError, ExperimentConfig, ProfileSpec, Study};
pub use report::{emit_epsilon_report, emit_report, emit_young, fmt_f64, CONVERGENCE_HEADER};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error(transparent)]
    Fv(#[from] FvError),
    #[error(transparent)]
    Steady(#[from] SteadyError),
    #[error(transparent)]
    Zrp(#[from] ZrpError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

/// Bin averages of the exact solution use this many midpoint samples.
const REFERENCE_SAMPLES: usize = 200;
/// Fine-grid references resolve at least this many cells.
const MIN_REFERENCE_CELLS: usize = 4000;
/// Cells per mollifier radius in the ε-study and fine references.
const CELLS_PER_EPSILON: usize = 8;

pub fn flux_model(cfg: &ExperimentConfig) -> Result<FluxModel, HarnessError> {
    Ok(FluxModel::for_rate(cfg.lambda.clone(), &cfg.rate)?)
}

/// Particle model with `N` sites, mollified at `ε = N^{-σ}` unless disabled.
pub fn lattice_model(cfg: &ExperimentConfig, n: usize) -> Result<LatticeModel, HarnessError> {
    let kernel = JumpKernel::totally_asymmetric();
    Ok(if cfg.mollify {
        LatticeModel::mollified(&cfg.lambda, n, cfg.sigma, cfg.rate.clone(), kernel)?
    } else {
        LatticeModel::raw(&cfg.lambda, n, cfg.rate.clone(), kernel)?
    })
}

impl ProfileSpec {
    /// Value at `x` against the sharp model.
    pub fn eval(&self, model: &FluxModel, x: f64) -> Result<f64, HarnessError> {
        Ok(match self {
            ProfileSpec::Constant(c) => *c,
            ProfileSpec::Piecewise(p) => p.eval(x),
            ProfileSpec::Steady(alpha) => solve_steady(model, *alpha, x, Branch::Plus)?,
            ProfileSpec::Table(v) => {
                let x = x.rem_euclid(1.0);
                v[((x * v.len() as f64) as usize).min(v.len() - 1)]
            }
        })
    }

    /// Cell values for a discretization; steady data use its frozen speeds.
    pub fn on_grid(&self, model: &FluxModel, disc: &Discretization) -> Result<Vec<f64>, HarnessError> {
        match self {
            ProfileSpec::Steady(alpha) => Ok(disc.steady_profile(*alpha, Branch::Plus)?),
            _ => disc.grid().centers().into_iter().map(|x| self.eval(model, x)).collect(),
        }
    }

    /// Site densities; steady data are exact for the lattice speeds.
    pub fn at_sites(&self, model: &FluxModel, lattice: &LatticeModel) -> Result<Vec<f64>, HarnessError> {
        match self {
            ProfileSpec::Steady(alpha) => {
                let disc = Discretization::from_speeds(lattice.speeds().to_vec(), model.closure().clone());
                Ok(disc.steady_profile(*alpha, Branch::Plus)?)
            }
            _ => {
                let n = lattice.n_sites();
                let v = profile_at_sites(n, |x| self.eval(model, x).unwrap_or(f64::NAN));
                if let Some(u) = v.iter().position(|r| !r.is_finite()) {
                    return Err(HarnessError::Invalid(format!("profile undefined at site {u}")));
                }
                Ok(v)
            }
        }
    }

    /// Piecewise-constant form, when there is one.
    pub fn step_profile(&self, model: &FluxModel) -> Option<StepProfile> {
        match self {
            ProfileSpec::Constant(c) => Some(StepProfile::constant(*c)),
            ProfileSpec::Piecewise(p) => Some(p.clone()),
            ProfileSpec::Table(v) => {
                StepProfile::new(v.iter().enumerate().map(|(k, &r)| (k as f64 / v.len() as f64, r)).collect())
            }
            ProfileSpec::Steady(alpha) => {
                model.speed().constant_pieces()?;
                let bp = model.speed().breakpoints();
                let pts: Option<Vec<(f64, f64)>> = bp
                    .iter()
                    .enumerate()
                    .map(|(k, &a)| {
                        let b = if k + 1 < bp.len() { bp[k + 1] } else { 1.0 };
                        let m = solve_steady(model, *alpha, 0.5 * (a + b), Branch::Plus).ok()?;
                        Some((a, m))
                    })
                    .collect();
                StepProfile::new(pts?)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceKind {
    ExactRiemann { interaction_time: f64 },
    /// Godunov solve with `ε = 8 dx`; `richardson` is the binned L¹ gap to
    /// the same solve on half the cells.
    FineGrid { cells: usize, epsilon: f64, richardson: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub kind: ReferenceKind,
    pub t: f64,
    /// Mean density over each of the equal bins of `[0, 1)`.
    pub bins: Vec<f64>,
}

/// Binned PDE reference at time `t`: exact wave solution when the data
/// allow it, a fine mollified solve otherwise.
pub fn hydro_reference(cfg: &ExperimentConfig, t: f64, n_bins: usize) -> Result<Reference, HarnessError> {
    let model = flux_model(cfg)?;
    if let Some(data) = cfg.profile.step_profile(&model) {
        if let Ok(exact) = PeriodicRiemann::new(model.speed(), model.closure(), &data) {
            if t <= exact.interaction_time() {
                let w = 1.0 / n_bins as f64;
                let bins = (0..n_bins)
                    .map(|b| exact.average(t, b as f64 * w, (b + 1) as f64 * w, REFERENCE_SAMPLES))
                    .collect::<Result<Vec<_>, _>>()?;
                return Ok(Reference {
                    kind: ReferenceKind::ExactRiemann {
                        interaction_time: exact.interaction_time(),
                    },
                    t,
                    bins,
                });
            }
        }
    }
    let cells = cfg.grid.max(MIN_REFERENCE_CELLS);
    let fine = |cells: usize| -> Result<(Vec<f64>, f64), HarnessError> {
        let grid = Grid1D::new(cells);
        let eps = CELLS_PER_EPSILON as f64 * grid.dx();
        let disc = Discretization::new(&model, Some(&MollifierKernel::new(eps)?), grid)?;
        let rho0 = cfg.profile.on_grid(&model, &disc)?;
        let sol = disc.solve(&rho0, t)?;
        Ok((bin_means(&sol.values, n_bins).into_iter().map(|v| v.unwrap_or(f64::NAN)).collect(), eps))
    };
    let (bins, epsilon) = fine(cells)?;
    let (coarse, _) = fine(cells / 2)?;
    let richardson = binned_l1(&bins, &coarse);
    Ok(Reference {
        kind: ReferenceKind::FineGrid {
            cells,
            epsilon,
            richardson,
        },
        t,
        bins,
    })
}

/// `Σ_b |a_b - b_b| / B`, the L¹ distance of two binned profiles.
pub fn binned_l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// One line of the convergence report.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub run_id: String,
    pub n: usize,
    /// Lattice mollifier scale, 0 for raw speeds.
    pub epsilon: f64,
    pub l: usize,
    pub m: usize,
    pub t: f64,
    pub l1_mean: f64,
    pub l1_std: f64,
    pub events_total: u64,
    pub wall_seconds: f64,
    /// Why the row has no statistics.
    pub error: Option<String>,
}

impl ConvergenceRow {
    pub fn standard_error(&self) -> f64 {
        self.l1_std / (self.m as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub reference: Option<Reference>,
}

impl ConvergenceReport {
    /// Each `l1_mean` below its predecessor, or above it by less than 1.96
    /// combined standard errors.
    pub fn decreasing_within_noise(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_none())
            && self.rows.windows(2).all(|w| {
                let band = 1.96 * (w[0].standard_error().powi(2) + w[1].standard_error().powi(2)).sqrt();
                w[1].l1_mean < w[0].l1_mean + band
            })
    }

    /// Last error over first error.
    pub fn final_ratio(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.l1_mean / a.l1_mean,
            _ => f64::NAN,
        }
    }

    /// Event count ratios between consecutive rows.
    pub fn event_growth(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| w[1].events_total as f64 / w[0].events_total as f64)
            .collect()
    }
}

/// Ensemble at one lattice size.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderPoint {
    pub n: usize,
    /// Per-replica L¹ errors.
    pub l1: Vec<f64>,
    /// Per-replica event counts.
    pub events: Vec<u64>,
    /// Block averages binned per replica, for the Young-measure estimate.
    pub young: Option<YoungMeasureEstimate>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HydroOutcome {
    pub report: ConvergenceReport,
    pub points: Vec<LadderPoint>,
}

impl HydroOutcome {
    fn concentration_ratios(&self, pick: fn(&ConcentrationSummary) -> f64) -> Vec<Option<f64>> {
        let summaries: Vec<_> = self
            .points
            .iter()
            .map(|p| p.young.as_ref().and_then(|y| young_concentration(y).ok()))
            .collect();
        summaries
            .windows(2)
            .map(|w| match (&w[0], &w[1]) {
                (Some(a), Some(b)) => Some(pick(b) / pick(a)),
                _ => None,
            })
            .collect()
    }

    /// Ratio of the bin-averaged variance between consecutive ladder
    /// points; `None` where either estimate is missing or too small.
    pub fn young_ratios(&self) -> Vec<Option<f64>> {
        self.concentration_ratios(|s| s.mean_variance)
    }

    /// As [`young_ratios`](Self::young_ratios) with the largest bin variance.
    pub fn young_max_ratios(&self) -> Vec<Option<f64>> {
        self.concentration_ratios(|s| s.max_variance)
    }

    /// Report restricted to the first `m` replicas of every ladder point.
    pub fn subensemble(&self, m: usize) -> ConvergenceReport {
        let rows = self
            .report
            .rows
            .iter()
            .zip(&self.points)
            .map(|(row, p)| {
                let mut row = row.clone();
                if row.error.is_none() {
                    let k = m.min(p.l1.len());
                    (row.l1_mean, row.l1_std) = mean_std(&p.l1[..k]);
                    row.events_total = p.events[..k].iter().sum();
                    row.m = k;
                }
                row
            })
            .collect();
        ConvergenceReport {
            rows,
            reference: self.report.reference.clone(),
        }
    }
}

struct ReplicaResult {
    l1: f64,
    events: u64,
    young: Vec<f64>,
}

fn replica_id(ladder_index: usize, replica: usize) -> u64 {
    ((ladder_index as u64) << 32) | replica as u64
}

/// Runs one replica from the product measure to `t` and bins it.
fn run_replica(
    cfg: &ExperimentConfig,
    lattice: &Arc<LatticeModel>,
    tables: &EquilibriumTables,
    densities: &[f64],
    reference: &Reference,
    l: usize,
    id: u64,
) -> Result<ReplicaResult, ZrpError> {
    let mut init = stream(cfg.seed, id, Purpose::Initial);
    let mut dynamics = stream(cfg.seed, id, Purpose::Dynamics);
    let eta = sample_product_measure(tables, densities, &mut init)?;
    let mut process = ZrpProcess::new(lattice.clone(), eta)?.with_event_budget(cfg.event_budget);
    process.run_until(reference.t, &mut dynamics)?;
    let blocks = process.configuration().block_averages(l);
    let bins: Vec<f64> = bin_means(&blocks, reference.bins.len())
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect();
    Ok(ReplicaResult {
        l1: binned_l1(&bins, &reference.bins),
        events: process.events(),
        young: bin_means(&blocks, cfg.young_bins)
            .into_iter()
            .map(|v| v.unwrap_or(f64::NAN))
            .collect(),
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// The N-ladder: `M` replicas per lattice size, each sampled from the
/// initial product measure, run to `t`, block averaged and compared with
/// the binned reference. A failing ladder point becomes an error row.
pub fn run_hydro(cfg: &ExperimentConfig) -> Result<HydroOutcome, HarnessError> {
    cfg.validate()?;
    let model = flux_model(cfg)?;
    let reference = hydro_reference(cfg, cfg.t, cfg.bins)?;
    let tables = EquilibriumTables::new(cfg.rate.clone()).map_err(ZrpError::from)?;
    let mut rows = Vec::with_capacity(cfg.n_ladder.len());
    let mut points = Vec::with_capacity(cfg.n_ladder.len());
    for (k, &n) in cfg.n_ladder.iter().enumerate() {
        let start = Instant::now();
        let l = cfg.block.radius(n);
        let mut row = ConvergenceRow {
            run_id: format!("s{}-n{}", cfg.seed, n),
            n,
            epsilon: 0.0,
            l,
            m: cfg.replicas,
            t: cfg.t,
            l1_mean: f64::NAN,
            l1_std: f64::NAN,
            events_total: 0,
            wall_seconds: 0.0,
            error: None,
        };
        let outcome = (|| -> Result<Vec<ReplicaResult>, HarnessError> {
            let lattice = Arc::new(lattice_model(cfg, n)?);
            row.epsilon = lattice.epsilon().unwrap_or(0.0);
            let densities = cfg.profile.at_sites(&model, &lattice)?;
            (0..cfg.replicas)
                .into_par_iter()
                .map(|r| run_replica(cfg, &lattice, &tables, &densities, &reference, l, replica_id(k, r)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(HarnessError::from)
        })();
        let point = match outcome {
            Ok(results) => {
                let l1: Vec<f64> = results.iter().map(|r| r.l1).collect();
                let events: Vec<u64> = results.iter().map(|r| r.events).collect();
                (row.l1_mean, row.l1_std) = mean_std(&l1);
                row.events_total = events.iter().sum();
                let profiles: Vec<Vec<f64>> = results.into_iter().map(|r| r.young).collect();
                LadderPoint {
                    n,
                    l1,
                    events,
                    young: Some(YoungMeasureEstimate::from_site_bins(&profiles)),
                }
            }
            Err(e) => {
                row.error = Some(e.to_string());
                LadderPoint {
                    n,
                    l1: Vec::new(),
                    events: Vec::new(),
                    young: None,
                }
            }
        };
        if !cfg.deterministic {
            row.wall_seconds = start.elapsed().as_secs_f64();
        }
        rows.push(row);
        points.push(point);
    }
    Ok(HydroOutcome {
        report: ConvergenceReport {
            rows,
            reference: Some(reference),
        },
        points,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub n_cells: usize,
    /// `‖ρ^ε - ρ^{ε/2}‖_{L¹}` at the horizon, the finer solution averaged
    /// onto this grid.
    pub l1_diff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonReport {
    pub t: f64,
    pub rows: Vec<EpsilonRow>,
}

impl EpsilonReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| w[1].l1_diff / w[0].l1_diff).collect()
    }

    /// Every ratio at most `max_ratio`; a ladder of vanishing differences passes.
    pub fn is_cauchy(&self, max_ratio: f64) -> bool {
        const ZERO: f64 = 1e-13;
        self.rows.windows(2).all(|w| {
            if w[0].l1_diff <= ZERO {
                w[1].l1_diff <= ZERO
            } else {
                w[1].l1_diff <= max_ratio * w[0].l1_diff
            }
        })
    }
}

/// Averages pairs of cells.
fn restrict(fine: &[f64]) -> Vec<f64> {
    fine.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}

/// Mollified solves at `ε_k = ε_0 2^{-k}` with `dx = ε_k / 8`, and the L¹
/// gaps between consecutive levels; `levels` rows.
pub fn run_epsilon_study(cfg: &ExperimentConfig) -> Result<EpsilonReport, HarnessError> {
    let model = flux_model(cfg)?;
    let base_cells = (CELLS_PER_EPSILON as f64 / cfg.epsilon0).round() as usize;
    let steady_base = match cfg.profile {
        ProfileSpec::Steady(_) => Some(MollifierKernel::new(cfg.epsilon0)?),
        _ => None,
    };
    let solutions: Vec<(f64, Vec<f64>)> = (0..=cfg.levels)
        .into_par_iter()
        .map(|k| -> Result<(f64, Vec<f64>), HarnessError> {
            let eps = cfg.epsilon0 / f64::powi(2.0, k as i32);
            let grid = Grid1D::new(base_cells << k);
            let disc = Discretization::new(&model, Some(&MollifierKernel::new(eps)?), grid)?;
            let rho0 = match &steady_base {
                // the initial datum is the steady state of the coarsest level
                Some(k0) => cfg.profile.on_grid(&model, &Discretization::new(&model, Some(k0), grid)?)?,
                None => cfg.profile.on_grid(&model, &disc)?,
            };
            Ok((eps, disc.solve(&rho0, cfg.t)?.values))
        })
        .collect::<Result<_, _>>()?;
    let rows = solutions
        .windows(2)
        .map(|w| {
            let coarse = &w[0].1;
            let fine = restrict(&w[1].1);
            let dx = 1.0 / coarse.len() as f64;
            EpsilonRow {
                epsilon: w[0].0,
                n_cells: coarse.len(),
                l1_diff: coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).sum::<f64>() * dx,
            }
        })
        .collect();
    Ok(EpsilonReport { t: cfg.t, rows })
}
