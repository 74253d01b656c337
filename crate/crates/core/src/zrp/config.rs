/// Occupation numbers `η(u)` on the periodic lattice `{0, …, N-1}` embedded
/// at `u/N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    occupancy: Vec<u32>,
    total_particles: u64,
    sim_time: f64,
}

impl Configuration {
    pub fn empty(n_sites: usize) -> Self {
        Self::from_occupancy(vec![0; n_sites])
    }

    pub fn from_occupancy(occupancy: Vec<u32>) -> Self {
        let total_particles = occupancy.iter().map(|&n| n as u64).sum();
        Self {
            occupancy,
            total_particles,
            sim_time: 0.0,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.occupancy.len()
    }

    pub fn occupancy(&self) -> &[u32] {
        &self.occupancy
    }

    #[inline]
    pub fn eta(&self, u: usize) -> u32 {
        self.occupancy[u]
    }

    pub fn total_particles(&self) -> u64 {
        self.total_particles
    }

    pub fn sim_time(&self) -> f64 {
        self.sim_time
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.sim_time = t;
    }

    /// Moves one particle from `from` to `to`; the caller guarantees `η(from) ≥ 1`.
    #[inline]
    pub(crate) fn transfer(&mut self, from: usize, to: usize) {
        debug_assert!(self.occupancy[from] > 0);
        self.occupancy[from] -= 1;
        self.occupancy[to] += 1;
    }

    /// Recounts particles and compares with the incrementally kept total.
    pub fn verify_total(&self) -> bool {
        self.occupancy.iter().map(|&n| n as u64).sum::<u64>() == self.total_particles
    }

    /// Mean of `η` over the `2l+1` sites centred at `u`, wrapping periodically.
    pub fn block_average(&self, u: usize, l: usize) -> f64 {
        let n = self.occupancy.len();
        let sum: u64 = (0..=2 * l).map(|k| self.occupancy[(u + n - l % n + k) % n] as u64).sum();
        sum as f64 / (2 * l + 1) as f64
    }

    /// `η^l(u)` for every site, by a sliding window.
    pub fn block_averages(&self, l: usize) -> Vec<f64> {
        let n = self.occupancy.len();
        if n == 0 {
            return Vec::new();
        }
        let width = (2 * l + 1) as f64;
        let mut window: i64 = (0..=2 * l).map(|k| self.occupancy[(n - l % n + k) % n] as i64).sum();
        let mut out = Vec::with_capacity(n);
        for u in 0..n {
            out.push(window as f64 / width);
            let leaving = self.occupancy[(u + n - l % n) % n] as i64;
            let entering = self.occupancy[(u + l + 1) % n] as i64;
            window += entering - leaving;
        }
        out
    }

    /// `N⁻¹ Σ_u J(u/N) η(u)`.
    pub fn empirical_pairing<F: Fn(f64) -> f64>(&self, test: F) -> f64 {
        let n = self.occupancy.len();
        if n == 0 {
            return 0.0;
        }
        let inv = 1.0 / n as f64;
        self.occupancy
            .iter()
            .enumerate()
            .map(|(u, &e)| test(u as f64 * inv) * e as f64)
            .sum::<f64>()
            * inv
    }

    /// `N⁻¹ Σ_u |η(u) - ξ(u)|`.
    pub fn l1_distance(&self, other: &Configuration) -> f64 {
        let n = self.occupancy.len();
        let s: u64 = self
            .occupancy
            .iter()
            .zip(&other.occupancy)
            .map(|(&a, &b)| a.abs_diff(b) as u64)
            .sum();
        s as f64 / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn block_average_examples() {
        let c = Configuration::from_occupancy(vec![1, 2, 3]);
        assert_eq!(c.block_average(1, 1), 2.0);
        assert_eq!(c.block_average(2, 0), 3.0);
        let c = Configuration::from_occupancy(vec![4; 10]);
        assert_eq!(c.block_average(0, 3), 4.0);
        let c = Configuration::from_occupancy(vec![1, 0, 0, 0, 5]);
        assert_eq!(c.block_average(0, 1), 2.0);
    }

    #[test]
    fn pairing_examples() {
        let c = Configuration::from_occupancy(vec![1, 0, 3, 2]);
        assert_eq!(c.empirical_pairing(|_| 1.0), c.total_particles() as f64 / 4.0);
        assert_eq!(Configuration::empty(8).empirical_pairing(|x| x + 1.0), 0.0);
    }

    #[test]
    fn transfer_keeps_count() {
        let mut c = Configuration::from_occupancy(vec![2, 0, 1]);
        c.transfer(0, 1);
        c.transfer(2, 0);
        assert_eq!(c.occupancy(), &[2, 1, 0]);
        assert!(c.verify_total());
    }

    proptest! {
        #[test]
        fn sliding_window_matches_direct(occ in prop::collection::vec(0u32..6, 3..40), l in 0usize..5) {
            let c = Configuration::from_occupancy(occ);
            let l = l.min((c.n_sites() - 1) / 2);
            let fast = c.block_averages(l);
            for u in 0..c.n_sites() {
                prop_assert!((fast[u] - c.block_average(u, l)).abs() < 1e-12);
            }
        }

        #[test]
        fn constant_configuration_block_average(c in 0u32..9, n in 3usize..30, l in 0usize..10) {
            let cfg = Configuration::from_occupancy(vec![c; n]);
            let l = l.min((n - 1) / 2);
            prop_assert_eq!(cfg.block_average(n / 2, l), c as f64);
        }
    }
}
