use rand::Rng;

use super::ZrpError;

/// Finite-range, translation-invariant jump law `p(z)` with unit mean drift.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpKernel {
    jumps: Vec<(i32, f64)>,
    cumulative: Vec<f64>,
    range: u32,
}

impl JumpKernel {
    pub fn new(jumps: &[(i32, f64)]) -> Result<Self, ZrpError> {
        let bad = |msg: String| Err(ZrpError::InvalidKernel(msg));
        if jumps.is_empty() {
            return bad("empty kernel".into());
        }
        if jumps.iter().any(|&(z, p)| !(p >= 0.0 && p.is_finite()) || (z == 0 && p > 0.0)) {
            return bad("probabilities must be nonnegative with p(0) = 0".into());
        }
        let mass: f64 = jumps.iter().map(|j| j.1).sum();
        if (mass - 1.0).abs() > 1e-12 {
            return bad(format!("total mass {mass} != 1"));
        }
        let drift: f64 = jumps.iter().map(|&(z, p)| z as f64 * p).sum();
        if (drift - 1.0).abs() > 1e-12 {
            return bad(format!("mean drift {drift} != 1"));
        }
        if !jumps.iter().any(|&(z, p)| z == 1 && p > 0.0) {
            return bad("p(1) must be positive".into());
        }
        let jumps: Vec<(i32, f64)> = jumps.iter().copied().filter(|j| j.1 > 0.0).collect();
        let mut acc = 0.0;
        let cumulative = jumps
            .iter()
            .map(|j| {
                acc += j.1;
                acc
            })
            .collect();
        let range = jumps.iter().map(|j| j.0.unsigned_abs()).max().unwrap_or(0);
        Ok(Self {
            jumps,
            cumulative,
            range,
        })
    }

    /// `p(1) = 1`.
    pub fn totally_asymmetric() -> Self {
        Self::new(&[(1, 1.0)]).expect("valid kernel")
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn jumps(&self) -> &[(i32, f64)] {
        &self.jumps
    }

    pub fn drift(&self) -> f64 {
        self.jumps.iter().map(|&(z, p)| z as f64 * p).sum()
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i32 {
        if self.jumps.len() == 1 {
            return self.jumps[0].0;
        }
        let u: f64 = rng.random::<f64>() * self.cumulative.last().unwrap();
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.jumps[k.min(self.jumps.len() - 1)].0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn axioms_enforced() {
        assert!(JumpKernel::new(&[(1, 0.5), (2, 0.5)]).is_err()); // drift 1.5
        assert!(JumpKernel::new(&[(1, 0.5)]).is_err()); // mass
        assert!(JumpKernel::new(&[(2, 0.5), (0, 0.5)]).is_err()); // p(0)
        assert!(JumpKernel::new(&[(2, 0.5), (-1, 0.0), (0, 0.0), (1, 0.0)]).is_err()); // mass and p(1)
        let k = JumpKernel::new(&[(2, 0.5), (1, 0.25), (-1, 0.25)]).unwrap();
        assert_eq!(k.range(), 2);
        assert!((k.drift() - 1.0).abs() < 1e-15);
        assert_eq!(JumpKernel::totally_asymmetric().range(), 1);
    }

    #[test]
    fn sampling_frequencies() {
        let k = JumpKernel::new(&[(2, 0.5), (1, 0.25), (-1, 0.25)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let twos = (0..n).filter(|_| k.sample(&mut rng) == 2).count();
        let f = twos as f64 / n as f64;
        assert!((f - 0.5).abs() < 4.0 * (0.25f64 / n as f64).sqrt());
    }
}
