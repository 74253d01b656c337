use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::flux::{FluxError, MollifierKernel, RateFunction, SpeedField};

use super::{Configuration, EquilibriumTables, JumpKernel, RateIndex, ZrpError};

/// Full rebuild cadence of the rate index, in events.
pub const REBUILD_EVERY: u64 = 1_000_000;

/// Static ingredients of a zero range process on `N` sites: the per-site
/// speeds `λ_ε(u/N)`, the rate `g` and the jump law `p`.
#[derive(Clone, Debug)]
pub struct LatticeModel {
    speeds: Vec<f64>,
    rate: RateFunction,
    kernel: JumpKernel,
    epsilon: Option<f64>,
}

impl LatticeModel {
    /// Speeds mollified at scale `ε = N^{-σ}`.
    pub fn mollified(
        field: &SpeedField,
        n_sites: usize,
        sigma: f64,
        rate: RateFunction,
        kernel: JumpKernel,
    ) -> Result<Self, ZrpError> {
        let eps = (n_sites as f64).powf(-sigma);
        Self::with_epsilon(field, n_sites, eps, rate, kernel)
    }

    pub fn with_epsilon(
        field: &SpeedField,
        n_sites: usize,
        epsilon: f64,
        rate: RateFunction,
        kernel: JumpKernel,
    ) -> Result<Self, ZrpError> {
        let k = MollifierKernel::new(epsilon).map_err(|e: FluxError| ZrpError::Invalid(e.to_string()))?;
        let smooth = field.mollify(&k);
        let speeds = site_positions(n_sites).map(|x| smooth.eval(x)).collect();
        Self::from_speeds(speeds, rate, kernel).map(|m| Self {
            epsilon: Some(epsilon),
            ..m
        })
    }

    /// Raw (possibly discontinuous) speeds sampled at the sites.
    pub fn raw(field: &SpeedField, n_sites: usize, rate: RateFunction, kernel: JumpKernel) -> Result<Self, ZrpError> {
        let speeds = site_positions(n_sites).map(|x| field.eval(x)).collect();
        Self::from_speeds(speeds, rate, kernel)
    }

    pub fn from_speeds(speeds: Vec<f64>, rate: RateFunction, kernel: JumpKernel) -> Result<Self, ZrpError> {
        if speeds.is_empty() {
            return Err(ZrpError::Invalid("lattice needs at least one site".into()));
        }
        if speeds.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(ZrpError::Invalid("site speeds must be positive and finite".into()));
        }
        if kernel.range() as usize >= speeds.len() {
            return Err(ZrpError::Invalid("jump range must be smaller than the lattice".into()));
        }
        Ok(Self {
            speeds,
            rate,
            kernel,
            epsilon: None,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.speeds.len()
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn rate(&self) -> &RateFunction {
        &self.rate
    }

    pub fn kernel(&self) -> &JumpKernel {
        &self.kernel
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    #[inline]
    pub fn site_rate(&self, u: usize, eta: u32) -> f64 {
        self.speeds[u] * self.rate.eval(eta)
    }

    #[inline]
    pub(crate) fn target(&self, u: usize, z: i32) -> usize {
        let n = self.speeds.len() as i64;
        (u as i64 + z as i64).rem_euclid(n) as usize
    }
}

pub(crate) fn site_positions(n: usize) -> impl Iterator<Item = f64> {
    let inv = 1.0 / n as f64;
    (0..n).map(move |u| u as f64 * inv)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepOutcome {
    Jump { from: usize, to: usize, dt: f64 },
    /// Total rate is zero; nothing can move.
    Quiescent,
}

/// Exact event-driven simulation of the generator sped up by `N`.
#[derive(Clone, Debug)]
pub struct ZrpProcess {
    model: Arc<LatticeModel>,
    cfg: Configuration,
    index: RateIndex,
    events: u64,
    since_rebuild: u64,
    max_events: u64,
}

impl ZrpProcess {
    pub fn new(model: Arc<LatticeModel>, cfg: Configuration) -> Result<Self, ZrpError> {
        if cfg.n_sites() != model.n_sites() {
            return Err(ZrpError::LatticeMismatch {
                expected: model.n_sites(),
                found: cfg.n_sites(),
            });
        }
        let weights = (0..cfg.n_sites()).map(|u| model.site_rate(u, cfg.eta(u))).collect();
        Ok(Self {
            model,
            cfg,
            index: RateIndex::new(weights),
            events: 0,
            since_rebuild: 0,
            max_events: u64::MAX,
        })
    }

    pub fn with_event_budget(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }

    pub fn model(&self) -> &LatticeModel {
        &self.model
    }

    pub fn configuration(&self) -> &Configuration {
        &self.cfg
    }

    pub fn into_configuration(self) -> Configuration {
        self.cfg
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn time(&self) -> f64 {
        self.cfg.sim_time()
    }

    /// Incrementally maintained total rate and the value recomputed from scratch.
    pub fn total_rate(&self) -> (f64, f64) {
        (self.index.total(), self.index.exact_total())
    }

    /// Draws the next waiting time, or `None` when the process is quiescent.
    fn next_wait<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<f64> {
        let mut w = self.index.total();
        if w <= 1e-9 * self.model.speeds[0] {
            self.index.rebuild();
            w = self.index.total();
            if w <= 0.0 {
                return None;
            }
        }
        let e: f64 = Exp1.sample(rng);
        Some(e / (self.model.n_sites() as f64 * w))
    }

    fn fire<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<(usize, usize)> {
        let u = {
            let target = rng.random::<f64>() * self.index.total();
            self.index.find(target).filter(|&u| self.index.weight(u) > 0.0)?
        };
        let v = self.model.target(u, self.model.kernel.sample(rng));
        self.cfg.transfer(u, v);
        self.index.set(u, self.model.site_rate(u, self.cfg.eta(u)));
        self.index.set(v, self.model.site_rate(v, self.cfg.eta(v)));
        self.events += 1;
        self.since_rebuild += 1;
        if self.since_rebuild >= REBUILD_EVERY {
            self.index.rebuild();
            self.since_rebuild = 0;
        }
        Some((u, v))
    }

    /// One Gillespie event: exponential wait at rate `N·W`, source site
    /// chosen proportionally to its rate, displacement drawn from `p`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepOutcome {
        let Some(dt) = self.next_wait(rng) else {
            return StepOutcome::Quiescent;
        };
        match self.fire(rng) {
            Some((from, to)) => {
                self.cfg.set_time(self.cfg.sim_time() + dt);
                StepOutcome::Jump { from, to, dt }
            }
            None => StepOutcome::Quiescent,
        }
    }

    /// Advances to exactly `t_target`; the event that would overshoot is
    /// discarded, which is exact by memorylessness.
    pub fn run_until<R: Rng + ?Sized>(&mut self, t_target: f64, rng: &mut R) -> Result<(), ZrpError> {
        if t_target < self.cfg.sim_time() {
            return Err(ZrpError::Invalid(format!(
                "target time {t_target} precedes current time {}",
                self.cfg.sim_time()
            )));
        }
        while let Some(dt) = self.next_wait(rng) {
            let t = self.cfg.sim_time() + dt;
            if t > t_target {
                break;
            }
            if self.events >= self.max_events {
                return Err(ZrpError::EventBudget {
                    events: self.events,
                    time: self.cfg.sim_time(),
                });
            }
            if self.fire(rng).is_none() {
                break;
            }
            self.cfg.set_time(t);
        }
        self.cfg.set_time(t_target);
        Ok(())
    }
}

/// Independent sites with fugacity `h(ρ_u)` so that `E η(u) = ρ_u`.
pub fn sample_product_measure<R: Rng + ?Sized>(
    tables: &EquilibriumTables,
    profile: &[f64],
    rng: &mut R,
) -> Result<Configuration, ZrpError> {
    let mut cache: HashMap<u64, (f64, f64)> = HashMap::new();
    let mut occupancy = Vec::with_capacity(profile.len());
    for (site, &rho) in profile.iter().enumerate() {
        let (phi, z) = match cache.get(&rho.to_bits()) {
            Some(&v) => v,
            None => {
                let phi = tables
                    .fugacity_for_density(rho)
                    .map_err(|source| ZrpError::ProfileRange { site, rho, source })?;
                let z = tables
                    .partition_function(phi)
                    .map_err(|source| ZrpError::ProfileRange { site, rho, source })?;
                cache.insert(rho.to_bits(), (phi, z));
                (phi, z)
            }
        };
        occupancy.push(tables.sample_with_partition(phi, z, rng));
    }
    Ok(Configuration::from_occupancy(occupancy))
}

/// Profile sampled at the lattice sites `u/N`.
pub fn profile_at_sites<F: Fn(f64) -> f64>(n_sites: usize, rho: F) -> Vec<f64> {
    site_positions(n_sites).map(rho).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform_model(n: usize, rate: RateFunction) -> Arc<LatticeModel> {
        Arc::new(LatticeModel::from_speeds(vec![1.0; n], rate, JumpKernel::totally_asymmetric()).unwrap())
    }

    #[test]
    fn single_particle_moves_right() {
        let model = uniform_model(16, RateFunction::Indicator);
        let mut occ = vec![0; 16];
        occ[5] = 1;
        let mut p = ZrpProcess::new(model, Configuration::from_occupancy(occ)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        match p.step(&mut rng) {
            StepOutcome::Jump { from, to, .. } => assert_eq!((from, to), (5, 6)),
            StepOutcome::Quiescent => panic!("should move"),
        }
        assert_eq!(p.configuration().eta(6), 1);
    }

    #[test]
    fn wrap_around() {
        let model = uniform_model(4, RateFunction::Indicator);
        let mut p = ZrpProcess::new(model, Configuration::from_occupancy(vec![0, 0, 0, 1])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        p.step(&mut rng);
        assert_eq!(p.configuration().occupancy(), &[1, 0, 0, 0]);
    }

    #[test]
    fn single_clock_mean_wait() {
        // one particle, indicator g, λ ≡ 1: waits are Exp(N)
        let n = 50;
        let model = uniform_model(n, RateFunction::Indicator);
        let mut occ = vec![0; n];
        occ[0] = 1;
        let mut p = ZrpProcess::new(model, Configuration::from_occupancy(occ)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 10_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            if let StepOutcome::Jump { dt, .. } = p.step(&mut rng) {
                sum += dt;
            }
        }
        let mean = sum / draws as f64;
        assert!((mean * n as f64 - 1.0).abs() < 0.04, "mean wait {mean}");
    }

    #[test]
    fn empty_lattice_is_quiescent() {
        let model = uniform_model(8, RateFunction::Indicator);
        let mut p = ZrpProcess::new(model, Configuration::empty(8)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(p.step(&mut rng), StepOutcome::Quiescent);
        p.run_until(2.5, &mut rng).unwrap();
        assert_eq!(p.time(), 2.5);
    }

    #[test]
    fn two_equal_sources_split_evenly() {
        let n = 10;
        let model = uniform_model(n, RateFunction::Indicator);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let events = 10_000;
        let mut from_first = 0;
        for _ in 0..events {
            let mut occ = vec![0; n];
            occ[2] = 1;
            occ[7] = 1;
            let mut p = ZrpProcess::new(model.clone(), Configuration::from_occupancy(occ)).unwrap();
            if let StepOutcome::Jump { from: 2, .. } = p.step(&mut rng) {
                from_first += 1;
            }
        }
        let f = from_first as f64 / events as f64;
        assert!((f - 0.5).abs() < 0.015, "fraction {f}");
    }

    #[test]
    fn run_until_same_time_is_noop() {
        let model = uniform_model(8, RateFunction::Identity);
        let cfg = Configuration::from_occupancy(vec![1, 2, 0, 3, 0, 0, 1, 0]);
        let mut p = ZrpProcess::new(model, cfg.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        p.run_until(0.0, &mut rng).unwrap();
        assert_eq!(p.configuration(), &cfg);
        assert!(p.run_until(-1.0, &mut rng).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let model = uniform_model(32, RateFunction::Identity);
        let cfg = Configuration::from_occupancy((0..32).map(|u| (u % 3) as u32).collect());
        let run = |seed| {
            let mut p = ZrpProcess::new(model.clone(), cfg.clone()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            p.run_until(0.3, &mut rng).unwrap();
            p.into_configuration()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9).occupancy(), run(10).occupancy());
    }

    #[test]
    fn event_budget_reports_partial_run() {
        let model = uniform_model(32, RateFunction::Identity);
        let cfg = Configuration::from_occupancy(vec![3; 32]);
        let mut p = ZrpProcess::new(model, cfg).unwrap().with_event_budget(100);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        match p.run_until(10.0, &mut rng) {
            Err(ZrpError::EventBudget { events, time }) => {
                assert_eq!(events, 100);
                assert!(time < 10.0);
                assert_eq!(p.configuration().total_particles(), 96);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn product_measure_examples() {
        let tables = EquilibriumTables::new(RateFunction::Indicator).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let empty = sample_product_measure(&tables, &vec![0.0; 100], &mut rng).unwrap();
        assert_eq!(empty.total_particles(), 0);
        let n = 10_000;
        let cfg = sample_product_measure(&tables, &vec![1.0; n], &mut rng).unwrap();
        let mean = cfg.total_particles() as f64 / n as f64;
        // Var = φ/(1-φ)² = 2 at φ = 1/2; band 0.03 is above 2σ
        assert!((mean - 1.0).abs() < 0.03, "mean {mean}");
        let err = sample_product_measure(&tables, &[0.5, -1.0], &mut rng).unwrap_err();
        assert!(matches!(err, ZrpError::ProfileRange { site: 1, .. }));
    }
}
