/// Binary-indexed cumulative sums of per-site rates with `O(log N)` update
/// and sampling by cumulative inversion.
///
/// The running total is maintained incrementally; [`RateIndex::rebuild`]
/// recomputes the tree and the total from the stored weights to discard
/// accumulated rounding.
#[derive(Clone, Debug)]
pub struct RateIndex {
    weights: Vec<f64>,
    tree: Vec<f64>,
    total: f64,
    top_bit: usize,
}

impl RateIndex {
    pub fn new(weights: Vec<f64>) -> Self {
        let n = weights.len();
        let top_bit = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        let mut index = Self {
            weights,
            tree: vec![0.0; n + 1],
            total: 0.0,
            top_bit,
        };
        index.rebuild();
        index
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.total
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Linear-time rebuild of the tree and the total.
    pub fn rebuild(&mut self) {
        let n = self.weights.len();
        self.tree[1..].copy_from_slice(&self.weights);
        self.tree[0] = 0.0;
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                self.tree[parent] += self.tree[i];
            }
        }
        self.total = self.weights.iter().sum();
    }

    /// Sum of all weights recomputed from scratch.
    pub fn exact_total(&self) -> f64 {
        self.weights.iter().sum()
    }

    #[inline]
    pub fn set(&mut self, i: usize, w: f64) {
        let delta = w - self.weights[i];
        if delta == 0.0 {
            return;
        }
        self.weights[i] = w;
        self.total += delta;
        let n = self.weights.len();
        let mut k = i + 1;
        while k <= n {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    /// Sum of weights `0..i`.
    pub fn prefix(&self, i: usize) -> f64 {
        let mut k = i;
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Smallest `i` with `prefix(i + 1) > target`; `target` is typically
    /// `U · total` for uniform `U ∈ [0, 1)`. Falls back to the nearest
    /// positive-weight site when rounding lands on an empty one.
    pub fn find(&self, target: f64) -> Option<usize> {
        let n = self.weights.len();
        if n == 0 {
            return None;
        }
        let mut pos = 0;
        let mut rem = target;
        let mut step = self.top_bit;
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        let i = pos.min(n - 1);
        if self.weights[i] > 0.0 {
            return Some(i);
        }
        let below = (0..i).rev().find(|&j| self.weights[j] > 0.0);
        let above = (i + 1..n).find(|&j| self.weights[j] > 0.0);
        match (below, above) {
            (Some(b), Some(a)) => Some(if i - b <= a - i { b } else { a }),
            (b, a) => b.or(a),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn prefix_sums() {
        let idx = RateIndex::new(vec![1.0, 2.0, 0.0, 4.0, 0.5]);
        assert_eq!(idx.prefix(0), 0.0);
        assert_eq!(idx.prefix(3), 3.0);
        assert_eq!(idx.prefix(5), 7.5);
        assert_eq!(idx.total(), 7.5);
    }

    #[test]
    fn find_boundaries() {
        let idx = RateIndex::new(vec![1.0, 2.0, 0.0, 4.0]);
        assert_eq!(idx.find(0.0), Some(0));
        assert_eq!(idx.find(0.999), Some(0));
        assert_eq!(idx.find(1.0), Some(1));
        assert_eq!(idx.find(2.999), Some(1));
        assert_eq!(idx.find(3.0), Some(3));
        assert_eq!(idx.find(6.999), Some(3));
        assert_eq!(idx.find(7.5), Some(3));
        assert_eq!(RateIndex::new(vec![]).find(0.0), None);
    }

    #[test]
    fn chi_square_sampling() {
        let w = vec![1.0, 3.0, 0.0, 2.0, 4.0, 0.5, 0.5];
        let idx = RateIndex::new(w.clone());
        let total: f64 = w.iter().sum();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 200_000;
        let mut counts = vec![0usize; w.len()];
        for _ in 0..draws {
            let u: f64 = rng.random();
            counts[idx.find(u * idx.total()).unwrap()] += 1;
        }
        assert_eq!(counts[2], 0);
        let chi2: f64 = w
            .iter()
            .zip(&counts)
            .filter(|(wi, _)| **wi > 0.0)
            .map(|(wi, &c)| {
                let e = draws as f64 * wi / total;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 5 degrees of freedom, 0.1% critical value 20.52
        assert!(chi2 < 20.52, "chi2 = {chi2}");
    }

    proptest! {
        #[test]
        fn incremental_total_tracks_rebuild(
            init in prop::collection::vec(0.0f64..5.0, 1..64),
            updates in prop::collection::vec((0usize..64, 0.0f64..5.0), 0..500),
        ) {
            let mut idx = RateIndex::new(init.clone());
            for (i, w) in updates {
                let i = i % init.len();
                idx.set(i, w);
            }
            let exact = idx.exact_total();
            prop_assert!((idx.total() - exact).abs() <= 1e-9 * exact.max(1.0));
            prop_assert!((idx.prefix(idx.len()) - exact).abs() <= 1e-9 * exact.max(1.0));
            let mut rebuilt = idx.clone();
            rebuilt.rebuild();
            for k in 0..=idx.len() {
                prop_assert!((rebuilt.prefix(k) - idx.prefix(k)).abs() <= 1e-9 * exact.max(1.0));
            }
        }
    }
}
