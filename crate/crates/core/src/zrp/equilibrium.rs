//! Single-site equilibrium laws of the zero range process.
//!
//! For fugacity `φ` the site law is `ν_φ(n) = φⁿ / (Z(φ) g(n)!)` with
//! `g(n)! = g(1)⋯g(n)` and partition function `Z(φ) = Σ φⁿ / g(n)!`. The mean
//! occupation `R(φ) = φ Z'(φ)/Z(φ)` is strictly increasing; its inverse is the
//! macroscopic closure `h`.
//!
//! Series are summed in log space. When `g` is eventually constant the tail
//! beyond that index is geometric and is added in closed form, so the law is
//! available for every `φ` below the radius of convergence. Otherwise the sum
//! is truncated once the last retained term drops below `1e-14` of the
//! partial sum.

use rand::Rng;
use thiserror::Error;

use crate::flux::RateFunction;

pub const DEFAULT_CAP: u32 = 4096;
const TAIL_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("fugacity {phi} outside [0, {radius}) where the partition function converges")]
    Divergent { phi: f64, radius: f64 },
    #[error("series for fugacity {phi} not converged within truncation cap {cap}")]
    Truncated { phi: f64, cap: u32 },
    #[error("density {rho} not reachable by the mean occupation map")]
    Unreachable { rho: f64 },
    #[error("invalid rate function: {0}")]
    InvalidRate(String),
}

/// First two moments of the site law at one fugacity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiteMoments {
    pub partition: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Clone, Debug)]
pub struct EquilibriumTables {
    rate: RateFunction,
    /// `ln g(n)!` for `n = 0..=cap`.
    log_gfact: Vec<f64>,
    cap: u32,
    radius: f64,
    /// Index from which `g` is constant and that constant.
    tail: Option<(u32, f64)>,
}

impl EquilibriumTables {
    pub fn new(rate: RateFunction) -> Result<Self, EquilibriumError> {
        Self::with_cap(rate, DEFAULT_CAP)
    }

    pub fn with_cap(rate: RateFunction, cap: u32) -> Result<Self, EquilibriumError> {
        rate.validate(cap)
            .map_err(|e| EquilibriumError::InvalidRate(e.to_string()))?;
        let mut log_gfact = Vec::with_capacity(cap as usize + 1);
        log_gfact.push(0.0);
        let mut acc = 0.0;
        for n in 1..=cap {
            acc += rate.eval(n).ln();
            log_gfact.push(acc);
        }
        let tail = rate.eventual_constant().filter(|&(n0, _)| n0 <= cap);
        let radius = match tail {
            Some((_, g_inf)) => g_inf,
            None => f64::INFINITY,
        };
        Ok(Self {
            rate,
            log_gfact,
            cap,
            radius,
            tail,
        })
    }

    pub fn rate(&self) -> &RateFunction {
        &self.rate
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// Radius of convergence of `Z`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn check(&self, phi: f64) -> Result<(), EquilibriumError> {
        if !(phi >= 0.0 && phi < self.radius) {
            return Err(EquilibriumError::Divergent {
                phi,
                radius: self.radius,
            });
        }
        Ok(())
    }

    pub fn moments(&self, phi: f64) -> Result<SiteMoments, EquilibriumError> {
        self.check(phi)?;
        if phi == 0.0 {
            return Ok(SiteMoments {
                partition: 1.0,
                mean: 0.0,
                variance: 0.0,
            });
        }
        let ln_phi = phi.ln();
        let last = match self.tail {
            Some((n0, _)) => n0,
            None => self.cap,
        };
        let mut logs = Vec::with_capacity(64);
        let mut peak = f64::NEG_INFINITY;
        let mut converged = self.tail.is_some();
        for n in 0..=last {
            let lt = n as f64 * ln_phi - self.log_gfact[n as usize];
            peak = peak.max(lt);
            logs.push(lt);
            if self.tail.is_none() && n > 0 && lt < logs[n as usize - 1] {
                // terms are log-concave: once decreasing they stay decreasing
                let partial: f64 = logs.iter().map(|&l| (l - peak).exp()).sum();
                if (lt - peak).exp() < TAIL_TOL * partial {
                    converged = true;
                    break;
                }
            }
        }
        if !converged {
            return Err(EquilibriumError::Truncated { phi, cap: self.cap });
        }
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (n, &lt) in logs.iter().enumerate() {
            let a = (lt - peak).exp();
            let n = n as f64;
            s0 += a;
            s1 += n * a;
            s2 += n * n * a;
        }
        if let Some((n0, g_inf)) = self.tail {
            let r = phi / g_inf;
            let a0 = (logs[n0 as usize] - peak).exp();
            let q = 1.0 - r;
            let t0 = r / q;
            let t1 = r / (q * q);
            let t2 = r * (1.0 + r) / (q * q * q);
            let n0 = n0 as f64;
            s0 += a0 * t0;
            s1 += a0 * (n0 * t0 + t1);
            s2 += a0 * (n0 * n0 * t0 + 2.0 * n0 * t1 + t2);
        }
        let mean = s1 / s0;
        Ok(SiteMoments {
            partition: s0 * peak.exp(),
            mean,
            variance: (s2 / s0 - mean * mean).max(0.0),
        })
    }

    /// `Z(φ)`.
    pub fn partition_function(&self, phi: f64) -> Result<f64, EquilibriumError> {
        Ok(self.moments(phi)?.partition)
    }

    /// `R(φ) = φ Z'(φ) / Z(φ)`.
    pub fn mean_occupation(&self, phi: f64) -> Result<f64, EquilibriumError> {
        Ok(self.moments(phi)?.mean)
    }

    /// Closure `h(ρ) = R⁻¹(ρ)`: the fugacity whose site law has mean `rho`.
    pub fn fugacity_for_density(&self, rho: f64) -> Result<f64, EquilibriumError> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(EquilibriumError::Unreachable { rho });
        }
        if rho == 0.0 {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = if self.radius.is_finite() {
            self.radius
        } else {
            let mut hi = 1.0_f64;
            while self.mean_occupation(hi)? < rho {
                hi *= 2.0;
                if hi > 1e6 {
                    return Err(EquilibriumError::Unreachable { rho });
                }
            }
            hi
        };
        let mut phi = 0.5 * (lo + hi);
        for _ in 0..200 {
            let m = self.moments(phi)?;
            let resid = m.mean - rho;
            if resid.abs() <= 1e-14 * rho.max(1.0) {
                return Ok(phi);
            }
            if resid > 0.0 {
                hi = phi;
            } else {
                lo = phi;
            }
            // Newton on R with R'(φ) = Var/φ, kept inside the bracket
            let slope = m.variance / phi;
            let newton = phi - resid / slope;
            phi = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * hi {
                return Ok(phi);
            }
        }
        Ok(phi)
    }

    /// Draws from `ν_φ` by inverse CDF.
    pub fn sample_site<R: Rng + ?Sized>(&self, phi: f64, rng: &mut R) -> Result<u32, EquilibriumError> {
        let z = self.partition_function(phi)?;
        Ok(self.sample_with_partition(phi, z, rng))
    }

    pub(crate) fn sample_with_partition<R: Rng + ?Sized>(&self, phi: f64, partition: f64, rng: &mut R) -> u32 {
        if phi == 0.0 {
            return 0;
        }
        let u: f64 = rng.random();
        let mut p = 1.0 / partition;
        let mut cum = p;
        let mut n = 0u32;
        while cum <= u {
            n += 1;
            p *= phi / self.rate.eval(n);
            cum += p;
            if p < 1e-300 {
                break;
            }
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Independent truncated-series oracle: direct summation in linear space.
    fn series(g: &RateFunction, phi: f64, terms: u32) -> (f64, f64) {
        let (mut z, mut zp, mut a) = (1.0, 0.0, 1.0);
        for n in 1..=terms {
            a *= phi / g.eval(n);
            z += a;
            zp += n as f64 * a;
        }
        (z, zp / z)
    }

    #[test]
    fn partition_values() {
        let ind = EquilibriumTables::new(RateFunction::Indicator).unwrap();
        let id = EquilibriumTables::new(RateFunction::Identity).unwrap();
        assert_eq!(ind.partition_function(0.0).unwrap(), 1.0);
        let (z, _) = series(&RateFunction::Indicator, 0.5, 200);
        assert!((ind.partition_function(0.5).unwrap() - z).abs() < 1e-12);
        assert!((ind.partition_function(0.5).unwrap() - 2.0).abs() < 1e-12);
        let (z, _) = series(&RateFunction::Identity, 1.0, 60);
        assert!((id.partition_function(1.0).unwrap() - z).abs() < 1e-12);
        assert!((id.partition_function(1.0).unwrap() - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn mean_values() {
        let ind = EquilibriumTables::new(RateFunction::Indicator).unwrap();
        let id = EquilibriumTables::new(RateFunction::Identity).unwrap();
        assert_eq!(ind.mean_occupation(0.0).unwrap(), 0.0);
        assert!((ind.mean_occupation(0.5).unwrap() - 1.0).abs() < 1e-12);
        let (_, r) = series(&RateFunction::Identity, 0.7, 80);
        assert!((id.mean_occupation(0.7).unwrap() - r).abs() < 1e-12);
        assert!((id.mean_occupation(0.7).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn geometric_tail_near_radius() {
        let ind = EquilibriumTables::new(RateFunction::Indicator).unwrap();
        let phi = 1.0 - 1e-6;
        let m = ind.moments(phi).unwrap();
        assert!((m.partition - 1e6).abs() / 1e6 < 1e-8);
        assert!((m.mean - phi / (1.0 - phi)).abs() / m.mean < 1e-8);
        assert!(ind.moments(1.0).is_err());
        assert!(ind.moments(-0.1).is_err());
    }

    #[test]
    fn table_rate_matches_oracle() {
        let g = RateFunction::table(&[0.0, 1.0, 1.5, 2.0]).unwrap();
        let t = EquilibriumTables::new(g.clone()).unwrap();
        for phi in [0.1, 0.9, 1.7] {
            let (z, r) = series(&g, phi, 3000);
            let m = t.moments(phi).unwrap();
            assert!((m.partition - z).abs() / z < 1e-11, "phi={phi}");
            assert!((m.mean - r).abs() / r < 1e-11, "phi={phi}");
        }
    }

    #[test]
    fn variance_matches_closed_forms() {
        let ind = EquilibriumTables::new(RateFunction::Indicator).unwrap();
        let phi: f64 = 0.25;
        let v = ind.moments(phi).unwrap().variance;
        assert!((v - phi / (1.0 - phi).powi(2)).abs() < 1e-12);
        let id = EquilibriumTables::new(RateFunction::Identity).unwrap();
        assert!((id.moments(3.0).unwrap().variance - 3.0).abs() < 1e-11);
    }

    #[test]
    fn fugacity_inverts_mean() {
        let id = EquilibriumTables::new(RateFunction::Identity).unwrap();
        assert!((id.fugacity_for_density(2.0).unwrap() - 2.0).abs() < 1e-12);
        let ind = EquilibriumTables::new(RateFunction::Indicator).unwrap();
        assert!((ind.fugacity_for_density(1.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(ind.fugacity_for_density(0.0).unwrap(), 0.0);
        assert!(ind.fugacity_for_density(-1.0).is_err());
    }

    #[test]
    fn sampler_zero_fugacity() {
        let ind = EquilibriumTables::new(RateFunction::Indicator).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(ind.sample_site(0.0, &mut rng).unwrap(), 0);
        }
    }
}
