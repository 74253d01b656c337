//! Basic coupling of two zero range processes sharing clocks, and the
//! microscopic entropy functional along coupled trajectories.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use crate::entropy::TestFunction;
use crate::flux::Closure;
use crate::zrp::{Configuration, JumpKernel, LatticeModel, RateIndex, ZrpError, REBUILD_EVERY};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error(transparent)]
    Zrp(#[from] ZrpError),
    #[error("order broken at site {site}, time {time}: eta = {eta} > xi = {xi}")]
    OrderBroken { site: usize, time: f64, eta: u32, xi: u32 },
    #[error("initial configurations are not ordered at site {0}")]
    NotOrdered(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    /// Both marginals move, at rate `λ min(g(η), g(ξ))`.
    Joint,
    /// `λ (g(η) - g(ξ))₊`.
    EtaOnly,
    /// `λ (g(ξ) - g(η))₊`.
    XiOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoupledOutcome {
    Event { channel: Channel, from: usize, to: usize, dt: f64 },
    Quiescent,
}

/// `N⁻¹ Σ_u |η(u) - ξ(u)|`.
pub fn discrepancy(eta: &Configuration, xi: &Configuration) -> f64 {
    eta.l1_distance(xi)
}

/// `Σ_{u, z: p(z) > 0} G_{u,u+z}`: neighbouring sites whose discrepancies
/// have opposite signs.
pub fn uncoupled_pairs(eta: &Configuration, xi: &Configuration, kernel: &JumpKernel) -> u64 {
    let n = eta.n_sites() as i64;
    let d = |u: usize| eta.eta(u) as i64 - xi.eta(u) as i64;
    let mut count = 0;
    for u in 0..eta.n_sites() {
        let du = d(u);
        if du == 0 {
            continue;
        }
        for &(z, _) in kernel.jumps() {
            let v = (u as i64 + z as i64).rem_euclid(n) as usize;
            if du * d(v) < 0 {
                count += 1;
            }
        }
    }
    count
}

/// The pair `(η_t, ξ_t)` under the basic coupling.
#[derive(Clone, Debug)]
pub struct CoupledProcess {
    model: Arc<LatticeModel>,
    eta: Configuration,
    xi: Configuration,
    joint: RateIndex,
    eta_excess: RateIndex,
    xi_excess: RateIndex,
    events: u64,
    since_rebuild: u64,
    max_events: u64,
    check_order: bool,
}

impl CoupledProcess {
    pub fn new(model: Arc<LatticeModel>, eta: Configuration, xi: Configuration) -> Result<Self, CouplingError> {
        for c in [&eta, &xi] {
            if c.n_sites() != model.n_sites() {
                return Err(ZrpError::LatticeMismatch {
                    expected: model.n_sites(),
                    found: c.n_sites(),
                }
                .into());
            }
        }
        let n = model.n_sites();
        let mut p = Self {
            model,
            eta,
            xi,
            joint: RateIndex::new(vec![0.0; n]),
            eta_excess: RateIndex::new(vec![0.0; n]),
            xi_excess: RateIndex::new(vec![0.0; n]),
            events: 0,
            since_rebuild: 0,
            max_events: u64::MAX,
            check_order: false,
        };
        let t = p.eta.sim_time().max(p.xi.sim_time());
        p.eta.set_time(t);
        p.xi.set_time(t);
        for u in 0..n {
            p.refresh(u);
        }
        p.rebuild();
        Ok(p)
    }

    /// Asserts `η ≤ ξ` at the touched sites after every event.
    pub fn with_order_check(mut self) -> Result<Self, CouplingError> {
        if let Some(u) = (0..self.eta.n_sites()).find(|&u| self.eta.eta(u) > self.xi.eta(u)) {
            return Err(CouplingError::NotOrdered(u));
        }
        self.check_order = true;
        Ok(self)
    }

    pub fn with_event_budget(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }

    pub fn eta(&self) -> &Configuration {
        &self.eta
    }

    pub fn xi(&self) -> &Configuration {
        &self.xi
    }

    pub fn model(&self) -> &LatticeModel {
        &self.model
    }

    pub fn time(&self) -> f64 {
        self.eta.sim_time()
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn discrepancy(&self) -> f64 {
        discrepancy(&self.eta, &self.xi)
    }

    pub fn uncoupled_pairs(&self) -> u64 {
        uncoupled_pairs(&self.eta, &self.xi, self.model.kernel())
    }

    /// Channel rates at site `u`: `(joint, η-only, ξ-only)`.
    pub fn channel_rates(&self, u: usize) -> (f64, f64, f64) {
        (self.joint.weight(u), self.eta_excess.weight(u), self.xi_excess.weight(u))
    }

    fn refresh(&mut self, u: usize) {
        let lam = self.model.speeds()[u];
        let g = self.model.rate();
        let (a, b) = (g.eval(self.eta.eta(u)), g.eval(self.xi.eta(u)));
        self.joint.set(u, lam * a.min(b));
        self.eta_excess.set(u, lam * (a - b).max(0.0));
        self.xi_excess.set(u, lam * (b - a).max(0.0));
    }

    fn rebuild(&mut self) {
        self.joint.rebuild();
        self.eta_excess.rebuild();
        self.xi_excess.rebuild();
        self.since_rebuild = 0;
    }

    fn total(&self) -> f64 {
        self.joint.total() + self.eta_excess.total() + self.xi_excess.total()
    }

    fn next_wait<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<f64> {
        let mut w = self.total();
        if w <= 1e-9 * self.model.speeds()[0] {
            self.rebuild();
            w = self.total();
            if w <= 0.0 {
                return None;
            }
        }
        let e: f64 = Exp1.sample(rng);
        Some(e / (self.model.n_sites() as f64 * w))
    }

    fn fire<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<(Channel, usize, usize)>, CouplingError> {
        let mut target = rng.random::<f64>() * self.total();
        let channel = if target < self.joint.total() {
            Channel::Joint
        } else {
            target -= self.joint.total();
            if target < self.eta_excess.total() {
                Channel::EtaOnly
            } else {
                target -= self.eta_excess.total();
                Channel::XiOnly
            }
        };
        let index = match channel {
            Channel::Joint => &self.joint,
            Channel::EtaOnly => &self.eta_excess,
            Channel::XiOnly => &self.xi_excess,
        };
        let Some(u) = index.find(target.min(index.total())).filter(|&u| index.weight(u) > 0.0) else {
            return Ok(None);
        };
        let v = self.model.target(u, self.model.kernel().sample(rng));
        match channel {
            Channel::Joint => {
                self.eta.transfer(u, v);
                self.xi.transfer(u, v);
            }
            Channel::EtaOnly => self.eta.transfer(u, v),
            Channel::XiOnly => self.xi.transfer(u, v),
        }
        self.refresh(u);
        self.refresh(v);
        self.events += 1;
        self.since_rebuild += 1;
        if self.since_rebuild >= REBUILD_EVERY {
            self.rebuild();
        }
        if self.check_order {
            for s in [u, v] {
                if self.eta.eta(s) > self.xi.eta(s) {
                    return Err(CouplingError::OrderBroken {
                        site: s,
                        time: self.time(),
                        eta: self.eta.eta(s),
                        xi: self.xi.eta(s),
                    });
                }
            }
        }
        Ok(Some((channel, u, v)))
    }

    fn set_time(&mut self, t: f64) {
        self.eta.set_time(t);
        self.xi.set_time(t);
    }

    /// One event of the coupled generator.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<CoupledOutcome, CouplingError> {
        let Some(dt) = self.next_wait(rng) else {
            return Ok(CoupledOutcome::Quiescent);
        };
        match self.fire(rng)? {
            Some((channel, from, to)) => {
                self.set_time(self.time() + dt);
                Ok(CoupledOutcome::Event { channel, from, to, dt })
            }
            None => Ok(CoupledOutcome::Quiescent),
        }
    }

    /// Advances both marginals to exactly `t_target`.
    pub fn run_until<R: Rng + ?Sized>(&mut self, t_target: f64, rng: &mut R) -> Result<(), CouplingError> {
        if t_target < self.time() {
            return Err(ZrpError::Invalid(format!("target time {t_target} precedes {}", self.time())).into());
        }
        while let Some(dt) = self.next_wait(rng) {
            let t = self.time() + dt;
            if t > t_target {
                break;
            }
            if self.events >= self.max_events {
                return Err(ZrpError::EventBudget {
                    events: self.events,
                    time: self.time(),
                }
                .into());
            }
            if self.fire(rng)?.is_none() {
                break;
            }
            self.set_time(t);
        }
        self.set_time(t_target);
        Ok(())
    }

    /// Discrepancy and uncoupled pairs at each checkpoint (increasing times).
    pub fn run_trace<R: Rng + ?Sized>(&mut self, times: &[f64], rng: &mut R) -> Result<DiscrepancyTrace, CouplingError> {
        let mut trace = DiscrepancyTrace::default();
        for &t in times {
            self.run_until(t, rng)?;
            trace.times.push(t);
            trace.discrepancy.push(self.discrepancy());
            trace.uncoupled_pairs.push(self.uncoupled_pairs());
        }
        Ok(trace)
    }

    /// Block averages of both marginals at `t = 0` and at the slab midpoints
    /// `(k + 1/2) Δ`, `Δ = horizon / slabs`.
    pub fn record_blocks<R: Rng + ?Sized>(
        &mut self,
        l: usize,
        horizon: f64,
        slabs: usize,
        rng: &mut R,
    ) -> Result<BlockTrajectory, CouplingError> {
        let delta = horizon / slabs as f64;
        let start = self.time();
        let initial = (self.eta.block_averages(l), self.xi.block_averages(l));
        let mut out = BlockTrajectory {
            delta,
            initial,
            midpoints: Vec::with_capacity(slabs),
        };
        for k in 0..slabs {
            let t = start + (k as f64 + 0.5) * delta;
            self.run_until(t, rng)?;
            out.midpoints.push(BlockSnapshot {
                t: t - start,
                eta: self.eta.block_averages(l),
                xi: self.xi.block_averages(l),
            });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiscrepancyTrace {
    pub times: Vec<f64>,
    pub discrepancy: Vec<f64>,
    pub uncoupled_pairs: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSnapshot {
    pub t: f64,
    pub eta: Vec<f64>,
    pub xi: Vec<f64>,
}

/// Block-averaged coupled trajectory sampled for midpoint quadrature.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTrajectory {
    pub delta: f64,
    pub initial: (Vec<f64>, Vec<f64>),
    pub midpoints: Vec<BlockSnapshot>,
}

/// Discrete microscopic entropy functional
/// `∫ N⁻¹ Σ_u [∂_s J |η^l - ξ^l| + ∂_x J λ_u |h(η^l) - h(ξ^l)|] ds + N⁻¹ Σ_u J(0) |η_0^l - ξ_0^l|`.
pub fn microscopic_entropy(traj: &BlockTrajectory, j: &TestFunction, speeds: &[f64], closure: &Closure) -> f64 {
    let n = speeds.len();
    let inv = 1.0 / n as f64;
    let xs: Vec<f64> = (0..n).map(|u| u as f64 * inv).collect();
    let space: Vec<f64> = xs.iter().map(|&x| j.space_factor(x)).collect();
    let space_dx: Vec<f64> = xs.iter().map(|&x| j.space_factor_dx(x)).collect();
    let mut total = 0.0;
    for snap in &traj.midpoints {
        let (ft, fdt) = (j.time_factor(snap.t), j.time_factor_dt(snap.t));
        if ft == 0.0 && fdt == 0.0 {
            continue;
        }
        let mut s = 0.0;
        for u in 0..n {
            let (a, b) = (snap.eta[u], snap.xi[u]);
            if a == b {
                continue;
            }
            s += fdt * space[u] * (a - b).abs() + ft * space_dx[u] * speeds[u] * (closure.h(a) - closure.h(b)).abs();
        }
        total += traj.delta * s * inv;
    }
    let (e0, x0) = &traj.initial;
    let init: f64 = (0..n).map(|u| space[u] * (e0[u] - x0[u]).abs()).sum();
    total + j.time_factor(0.0) * init * inv
}
