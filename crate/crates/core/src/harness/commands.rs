//! The work behind each CLI subcommand: run, write CSVs, judge.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;

use super::report::write_file;
use super::{
    emit_epsilon_report, emit_report, emit_young, flux_model, fmt_f64, lattice_model, run_epsilon_study, run_hydro,
    ExperimentConfig, HarnessError, ProfileSpec, Study,
};
use crate::coupling::{BlockSnapshot, BlockTrajectory, CoupledProcess, microscopic_entropy};
use crate::entropy::{alpha_library, audit, default_library, EntropyReport};
use crate::flux::MollifierKernel;
use crate::fv::{Discretization, Grid1D};
use crate::rng::{stream, Purpose};
use crate::steady::{envelope_alpha, solve_steady, Branch};
use crate::zrp::{sample_product_measure, EquilibriumTables, LatticeModel, ZrpError, ZrpProcess};

/// Snapshots per unit time for the microscopic entropy functional.
pub const SNAPSHOTS_PER_UNIT_TIME: f64 = 50.0;
/// Checkpoints of the discrepancy trace when no snapshots are configured.
pub const TRACE_CHECKPOINTS: usize = 10;

#[derive(Clone, Debug, Default)]
pub struct CommandOutcome {
    /// All acceptance checks of the command held.
    pub passed: bool,
    pub files: Vec<PathBuf>,
    /// Human-readable summary.
    pub lines: Vec<String>,
}

impl CommandOutcome {
    fn check(&mut self, ok: bool, what: String) {
        self.lines.push(format!("{} {what}", if ok { "PASS" } else { "FAIL" }));
        self.passed &= ok;
    }
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("discoflux-out"))
}

fn xy_csv(header: &str, xs: impl IntoIterator<Item = String>, ys: &[f64]) -> String {
    let mut s = format!("{header}\n");
    for (x, y) in xs.into_iter().zip(ys) {
        writeln!(s, "{x},{}", fmt_f64(*y)).unwrap();
    }
    s
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Mollified Godunov solve; `snapshot_XXX.csv` per output time. Checks mass.
pub fn solve(cfg: &ExperimentConfig) -> Result<CommandOutcome, HarnessError> {
    let dir = out_dir(cfg);
    let model = flux_model(cfg)?;
    let grid = Grid1D::new(cfg.grid);
    let disc = Discretization::new(&model, Some(&MollifierKernel::new(cfg.epsilon0)?), grid)?;
    let rho0 = cfg.profile.on_grid(&model, &disc)?;
    let mass0 = grid.integrate(&rho0);
    let sols = disc.solve_at(&rho0, &cfg.output_times())?;
    let mut out = CommandOutcome {
        passed: true,
        ..Default::default()
    };
    let xs = || grid.centers().into_iter().map(fmt_f64);
    for (k, sol) in sols.iter().enumerate() {
        out.files.push(write_file(&dir, &format!("snapshot_{k:03}.csv"), &xy_csv("x,rho", xs(), &sol.values))?);
    }
    let drift = sols.iter().map(|s| (s.mass() - mass0).abs()).fold(0.0, f64::max);
    out.check(drift <= 1e-12 * mass0.max(1.0), format!("mass drift {drift:.3e}"));
    out.check(sols.iter().all(|s| s.is_nonnegative()), "densities nonnegative".into());
    Ok(out)
}

/// `steady_XXX.csv` per flux level: speed and both branches at cell centres.
pub fn steady(cfg: &ExperimentConfig) -> Result<CommandOutcome, HarnessError> {
    let dir = out_dir(cfg);
    let model = flux_model(cfg)?;
    let grid = Grid1D::new(cfg.grid);
    let mut out = CommandOutcome {
        passed: true,
        ..Default::default()
    };
    for (k, &alpha) in cfg.alphas.iter().enumerate() {
        let mut s = String::from("x,lambda,m_plus,m_minus\n");
        let mut worst: f64 = 0.0;
        for x in grid.centers() {
            let lambda = model.speed().eval(x);
            let p = solve_steady(&model, alpha, x, Branch::Plus)?;
            let m = solve_steady(&model, alpha, x, Branch::Minus)?;
            worst = worst.max((lambda * model.closure().h(p) - alpha).abs());
            writeln!(s, "{},{},{},{}", fmt_f64(x), fmt_f64(lambda), fmt_f64(p), fmt_f64(m)).unwrap();
        }
        out.files.push(write_file(&dir, &format!("steady_{k:03}.csv"), &s)?);
        out.check(worst <= 1e-10 * alpha.abs().max(1.0), format!("alpha {alpha}: flux residual {worst:.3e}"));
    }
    Ok(out)
}

/// One trajectory at the first ladder size; `occupancy_k.csv` and `block_k.csv`
/// per output time. Checks particle conservation.
pub fn zrp(cfg: &ExperimentConfig) -> Result<CommandOutcome, HarnessError> {
    let dir = out_dir(cfg);
    let model = flux_model(cfg)?;
    let n = cfg.n_ladder[0];
    let lattice = Arc::new(lattice_model(cfg, n)?);
    let tables = EquilibriumTables::new(cfg.rate.clone()).map_err(ZrpError::from)?;
    let densities = cfg.profile.at_sites(&model, &lattice)?;
    let eta = sample_product_measure(&tables, &densities, &mut stream(cfg.seed, 0, Purpose::Initial))?;
    let total = eta.total_particles();
    let mut process = ZrpProcess::new(lattice, eta)?.with_event_budget(cfg.event_budget);
    let mut rng = stream(cfg.seed, 0, Purpose::Dynamics);
    let l = cfg.block.radius(n);
    let mut out = CommandOutcome {
        passed: true,
        ..Default::default()
    };
    let mut conserved = true;
    for (k, &t) in cfg.output_times().iter().enumerate() {
        process.run_until(t, &mut rng)?;
        let c = process.configuration();
        conserved &= c.total_particles() == total && c.verify_total();
        let mut s = String::from("u,eta\n");
        for (u, &e) in c.occupancy().iter().enumerate() {
            writeln!(s, "{u},{e}").unwrap();
        }
        out.files.push(write_file(&dir, &format!("occupancy_{k}.csv"), &s)?);
        let xs = (0..n).map(|u| fmt_f64(u as f64 / n as f64));
        out.files
            .push(write_file(&dir, &format!("block_{k}.csv"), &xy_csv("x,eta_l", xs, &c.block_averages(l)))?);
    }
    out.lines.push(format!("N = {n}, {} particles, {} events", total, process.events()));
    out.check(conserved, "particle count constant".into());
    Ok(out)
}

/// Per-replica result of a coupled run.
#[derive(Clone, Debug)]
pub struct CoupledReplica {
    pub discrepancy: Vec<f64>,
    pub uncoupled_pairs: Vec<u64>,
    /// One value per test function.
    pub entropy: Vec<f64>,
    pub events: u64,
}

/// η from the configured profile, ξ from the invariant measure at `alpha`,
/// run under the basic coupling to `cfg.t`. Records the discrepancy at
/// `checkpoints` and the microscopic entropy functional for each test function.
pub fn coupled_replica(
    cfg: &ExperimentConfig,
    lattice: &Arc<LatticeModel>,
    alpha: f64,
    checkpoints: &[f64],
    replica: u64,
) -> Result<CoupledReplica, HarnessError> {
    let model = flux_model(cfg)?;
    let n = lattice.n_sites();
    let tables = EquilibriumTables::new(cfg.rate.clone()).map_err(ZrpError::from)?;
    let mut init = stream(cfg.seed, replica, Purpose::Initial);
    let mut reference = stream(cfg.seed, replica, Purpose::Reference);
    let eta = sample_product_measure(&tables, &cfg.profile.at_sites(&model, lattice)?, &mut init)?;
    let xi = sample_product_measure(&tables, &ProfileSpec::Steady(alpha).at_sites(&model, lattice)?, &mut reference)?;
    let mut process = CoupledProcess::new(lattice.clone(), eta, xi)?.with_event_budget(cfg.event_budget);
    let mut rng = stream(cfg.seed, replica, Purpose::Dynamics);

    let l = cfg.block.radius(n);
    let slabs = ((SNAPSHOTS_PER_UNIT_TIME * cfg.t).ceil() as usize).max(1);
    let delta = cfg.t / slabs as f64;
    let mut traj = BlockTrajectory {
        delta,
        initial: (process.eta().block_averages(l), process.xi().block_averages(l)),
        midpoints: Vec::with_capacity(slabs),
    };
    // merged schedule: (time, is_checkpoint)
    let mut schedule: Vec<(f64, bool)> = checkpoints.iter().map(|&t| (t, true)).collect();
    schedule.extend((0..slabs).map(|k| ((k as f64 + 0.5) * delta, false)));
    schedule.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rep = CoupledReplica {
        discrepancy: Vec::new(),
        uncoupled_pairs: Vec::new(),
        entropy: Vec::new(),
        events: 0,
    };
    for (t, is_checkpoint) in schedule {
        process.run_until(t, &mut rng)?;
        if is_checkpoint {
            rep.discrepancy.push(process.discrepancy());
            rep.uncoupled_pairs.push(process.uncoupled_pairs());
        } else {
            traj.midpoints.push(BlockSnapshot {
                t,
                eta: process.eta().block_averages(l),
                xi: process.xi().block_averages(l),
            });
        }
    }
    rep.events = process.events();
    rep.entropy = default_library(cfg.t)
        .iter()
        .map(|j| microscopic_entropy(&traj, j, lattice.speeds(), model.closure()))
        .collect();
    Ok(rep)
}

pub fn trace_times(cfg: &ExperimentConfig) -> Vec<f64> {
    if cfg.snapshots.is_empty() {
        (0..=TRACE_CHECKPOINTS).map(|k| cfg.t * k as f64 / TRACE_CHECKPOINTS as f64).collect()
    } else {
        cfg.snapshots.clone()
    }
}

/// Ensemble of coupled runs; `couple_trace.csv` and `entropy_functional_J{j}.csv`.
/// Checks the ensemble discrepancy is nonincreasing within 2σ and every
/// entropy functional mean is at least −3 standard errors.
pub fn couple(cfg: &ExperimentConfig) -> Result<CommandOutcome, HarnessError> {
    let dir = out_dir(cfg);
    let n = cfg.n_ladder[0];
    let alpha = cfg.alphas[0];
    let times = trace_times(cfg);
    let lattice = Arc::new(lattice_model(cfg, n)?);
    let reps: Vec<CoupledReplica> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| coupled_replica(cfg, &lattice, alpha, &times, r as u64))
        .collect::<Result<_, _>>()?;
    let mut out = CommandOutcome {
        passed: true,
        ..Default::default()
    };
    let mut s = String::from("t,discrepancy,discrepancy_se,uncoupled_pairs\n");
    let mut stats = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let d: Vec<f64> = reps.iter().map(|r| r.discrepancy[k]).collect();
        let g: Vec<f64> = reps.iter().map(|r| r.uncoupled_pairs[k] as f64).collect();
        let (dm, dse) = mean_se(&d);
        writeln!(s, "{},{},{},{}", fmt_f64(t), fmt_f64(dm), fmt_f64(dse), fmt_f64(mean_se(&g).0)).unwrap();
        stats.push((dm, dse));
    }
    out.files.push(write_file(&dir, "couple_trace.csv", &s)?);
    let monotone = stats
        .windows(2)
        .all(|w| w[1].0 <= w[0].0 + 2.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt());
    out.check(monotone, format!("mean discrepancy nonincreasing within 2 sigma over {} checkpoints", times.len()));
    let library = default_library(cfg.t);
    let mut worst = f64::INFINITY;
    for (j, tf) in library.iter().enumerate() {
        let v: Vec<f64> = reps.iter().map(|r| r.entropy[j]).collect();
        let xs = (0..v.len()).map(|r| r.to_string());
        out.files
            .push(write_file(&dir, &format!("entropy_functional_J{}.csv", tf.id), &xy_csv("replica,value", xs, &v))?);
        let (m, se) = mean_se(&v);
        worst = worst.min(if se > 0.0 { m / se } else if m >= 0.0 { f64::INFINITY } else { f64::NEG_INFINITY });
    }
    out.check(worst >= -3.0, format!("entropy functional means >= -3 SE (worst {worst:.2} SE)"));
    Ok(out)
}

/// Fitted constants on `grid/4`, `grid/2` and `grid` cells.
pub fn audit_reports(cfg: &ExperimentConfig) -> Result<Vec<EntropyReport>, HarnessError> {
    let model = flux_model(cfg)?;
    let kernel = MollifierKernel::new(cfg.epsilon0)?;
    let library = default_library(cfg.t);
    let finest = Grid1D::new(cfg.grid);
    let probe = Discretization::new(&model, Some(&kernel), finest)?;
    let rho_probe = cfg.profile.on_grid(&model, &probe)?;
    let env = envelope_alpha(&model, &finest.centers(), &rho_probe)?;
    let cap = model.speed().lambda_lo() * model.closure().sup();
    let alphas = alpha_library(model.m0(), env, cap);
    [cfg.grid / 4, cfg.grid / 2, cfg.grid]
        .into_iter()
        .map(|n| {
            let disc = Discretization::new(&model, Some(&kernel), Grid1D::new(n))?;
            let rho0 = cfg.profile.on_grid(&model, &disc)?;
            let traj = disc.solve_trajectory(&rho0, cfg.t, 1)?;
            Ok(audit(&traj, &disc, &alphas, &library)?)
        })
        .collect()
}

/// Fitted `C` varies by less than a factor 2 across the grids.
pub fn constants_stable(reports: &[EntropyReport]) -> bool {
    let cs: Vec<f64> = reports.iter().map(|r| r.fitted_constant()).collect();
    let hi = cs.iter().copied().fold(0.0, f64::max);
    let lo = cs.iter().copied().fold(f64::INFINITY, f64::min);
    hi == 0.0 || (lo > 0.0 && hi / lo < 2.0)
}

/// Adapted entropy audit; `audit.csv` holds the finest grid's residuals.
pub fn audit_cmd(cfg: &ExperimentConfig) -> Result<CommandOutcome, HarnessError> {
    let dir = out_dir(cfg);
    let reports = audit_reports(cfg)?;
    let mut out = CommandOutcome {
        passed: true,
        ..Default::default()
    };
    let finest = reports.last().expect("three grids");
    let mut s = String::from("alpha,branch,J_id,residual\n");
    for e in &finest.entries {
        writeln!(s, "{},{},{},{}", fmt_f64(e.alpha), e.branch.tag(), e.j_id, fmt_f64(e.residual)).unwrap();
    }
    out.files.push(write_file(&dir, "audit.csv", &s)?);
    let mut summary = String::from("n_cells,dx,dt,min_residual,fitted_constant\n");
    for r in &reports {
        writeln!(
            summary,
            "{},{},{},{},{}",
            r.n_cells,
            fmt_f64(r.dx),
            fmt_f64(r.dt),
            fmt_f64(r.min_residual()),
            fmt_f64(r.fitted_constant())
        )
        .unwrap();
        out.lines.push(format!("n = {}: C = {:.4}", r.n_cells, r.fitted_constant()));
    }
    out.files.push(write_file(&dir, "audit_summary.csv", &summary)?);
    out.check(constants_stable(&reports), "fitted C varies < 2x under refinement".into());
    if let Some(tol) = cfg.audit_tolerance {
        let c = finest.fitted_constant();
        out.check(c <= tol, format!("fitted C {c:.4} <= {tol}"));
    }
    Ok(out)
}

/// The N-ladder and/or the ε-ladder, per `study`.
pub fn hydro(cfg: &ExperimentConfig) -> Result<CommandOutcome, HarnessError> {
    let dir = out_dir(cfg);
    let mut out = CommandOutcome {
        passed: true,
        ..Default::default()
    };
    if matches!(cfg.study, Study::Hydro | Study::Both) {
        let h = run_hydro(cfg)?;
        out.files.extend(emit_report(&h.report, &dir)?);
        out.files.push(emit_young(&h, &dir)?);
        for r in &h.report.rows {
            match &r.error {
                Some(e) => out.lines.push(format!("N = {}: error: {e}", r.n)),
                None => out.lines.push(format!(
                    "N = {}: L1 {:.4e} +- {:.2e}, {} events",
                    r.n, r.l1_mean, r.l1_std, r.events_total
                )),
            }
        }
        out.check(h.report.decreasing_within_noise(), "L1 error decreasing in N within 1.96 sigma".into());
        let span = cfg.n_ladder[cfg.n_ladder.len() - 1] as f64 / cfg.n_ladder[0] as f64;
        if span >= 8.0 {
            let ratio = h.report.final_ratio();
            out.check(ratio < 0.5, format!("largest-N error ratio {ratio:.3} < 0.5"));
        }
        if cfg.replicas >= 30 {
            for (k, r) in h.young_ratios().into_iter().enumerate() {
                let shown = r.map_or("undefined".to_string(), |r| format!("{r:.3}"));
                out.check(r.is_some_and(|r| r <= 0.65), format!("Young variance ratio step {k}: {shown} <= 0.65"));
            }
        }
    }
    if matches!(cfg.study, Study::Epsilon | Study::Both) {
        let e = run_epsilon_study(cfg)?;
        out.files.push(emit_epsilon_report(&e, &dir)?);
        out.check(e.is_cauchy(0.9), format!("epsilon ladder ratios [{}] <= 0.9", join3(&e.ratios())));
    }
    Ok(out)
}

/// Dispatch by subcommand name.
pub fn run(command: &str, cfg: &ExperimentConfig) -> Result<CommandOutcome, HarnessError> {
    match command {
        "solve" => solve(cfg),
        "steady" => steady(cfg),
        "zrp" => zrp(cfg),
        "couple" => couple(cfg),
        "audit" => audit_cmd(cfg),
        "hydro" => hydro(cfg),
        other => Err(HarnessError::Invalid(format!("unknown command {other:?}"))),
    }
}

fn join3(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ")
}
