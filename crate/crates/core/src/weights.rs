//! Binary-indexed prefix-sum structure over per-node attachment weights.
//!
//! Slots are addressed by raw node id, so appending a node extends the tree
//! by one slot in O(log n). Draws invert the prefix sum with a uniform
//! variate; point updates are O(log n).

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SampleError {
    #[error("need {needed} distinct nodes with positive weight, only {available} available")]
    Insufficient { needed: usize, available: usize },
    #[error("all weights are zero")]
    AllZero,
}

#[derive(Debug, Clone, Default)]
pub struct WeightIndex {
    weights: Vec<f64>,
    // 1-based Fenwick array; tree[0] unused.
    tree: Vec<f64>,
    positive: usize,
}

#[inline]
fn lsb(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl WeightIndex {
    pub fn new() -> Self {
        WeightIndex { weights: Vec::new(), tree: vec![0.0], positive: 0 }
    }

    /// Builds the index from a dense weight vector in O(n).
    pub fn from_weights(weights: Vec<f64>) -> Self {
        let mut w = WeightIndex { weights, tree: Vec::new(), positive: 0 };
        w.rebuild();
        w
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Number of slots with strictly positive weight.
    pub fn positive_count(&self) -> usize {
        self.positive
    }

    pub fn weight(&self, slot: usize) -> f64 {
        self.weights.get(slot).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Recomputes the tree and the positive count from the stored weights.
    pub fn rebuild(&mut self) {
        let n = self.weights.len();
        self.tree = Vec::with_capacity(n + 1);
        self.tree.push(0.0);
        self.tree.extend_from_slice(&self.weights);
        for i in 1..=n {
            let j = i + lsb(i);
            if j <= n {
                let v = self.tree[i];
                self.tree[j] += v;
            }
        }
        self.positive = self.weights.iter().filter(|&&w| w > 0.0).count();
    }

    fn prefix(&self, mut i: usize) -> f64 {
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= lsb(i);
        }
        s
    }

    /// Sum of all weights as maintained by the tree.
    pub fn total(&self) -> f64 {
        self.prefix(self.weights.len())
    }

    /// Sum of the stored weights recomputed from scratch.
    pub fn exact_total(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn push(&mut self, w: f64) {
        let i = self.weights.len() + 1;
        let below = self.prefix(i - 1) - self.prefix(i - lsb(i));
        self.weights.push(w);
        self.tree.push(w + below);
        if w > 0.0 {
            self.positive += 1;
        }
    }

    /// Sets the weight of `slot`, growing the index with zero slots if needed.
    pub fn set(&mut self, slot: usize, w: f64) {
        debug_assert!(w >= 0.0 && w.is_finite(), "invalid weight {w}");
        while self.weights.len() <= slot {
            self.push(0.0);
        }
        let old = self.weights[slot];
        if old == w {
            return;
        }
        match (old > 0.0, w > 0.0) {
            (false, true) => self.positive += 1,
            (true, false) => self.positive -= 1,
            _ => {}
        }
        self.weights[slot] = w;
        let delta = w - old;
        let mut i = slot + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += lsb(i);
        }
    }

    /// Smallest slot whose inclusive prefix sum exceeds `target`.
    fn search(&self, mut target: f64) -> usize {
        let n = self.weights.len();
        let mut pos = 0;
        let mut step = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }

    /// Draws one slot with probability proportional to its weight.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize, SampleError> {
        if self.positive == 0 {
            return Err(SampleError::AllZero);
        }
        let u: f64 = rng.random();
        let slot = self.locate(u);
        if slot < self.weights.len() && self.weights[slot] > 0.0 {
            return Ok(slot);
        }
        // Accumulated rounding in the tree landed on an empty slot; restore
        // exact partial sums and retry with the same variate.
        self.rebuild();
        let slot = self.locate(u);
        if slot < self.weights.len() && self.weights[slot] > 0.0 {
            Ok(slot)
        } else {
            // Fall back to the last positive slot at or before the landing point.
            Ok(self.weights[..slot.min(self.weights.len())]
                .iter()
                .rposition(|&w| w > 0.0)
                .or_else(|| self.weights.iter().position(|&w| w > 0.0))
                .expect("positive count is nonzero"))
        }
    }

    fn locate(&self, u: f64) -> usize {
        self.search(u * self.total())
    }

    /// Draws `m` distinct slots by sequential weighted draws without
    /// replacement. Each drawn slot's weight is zeroed for the remaining
    /// draws and restored afterwards.
    pub fn draw_distinct<R: Rng + ?Sized>(&mut self, m: usize, rng: &mut R) -> Result<Vec<usize>, SampleError> {
        if self.positive < m {
            return Err(SampleError::Insufficient { needed: m, available: self.positive });
        }
        let mut picked: Vec<(usize, f64)> = Vec::with_capacity(m);
        let mut result = Ok(());
        for _ in 0..m {
            match self.draw(rng) {
                Ok(slot) => {
                    picked.push((slot, self.weights[slot]));
                    self.set(slot, 0.0);
                }
                Err(e) => {
                    result = Err(e);
                    break;
                }
            }
        }
        for &(slot, w) in picked.iter().rev() {
            self.set(slot, w);
        }
        result.map(|_| picked.into_iter().map(|(s, _)| s).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn prefix_sums_match_naive() {
        let w: Vec<f64> = (0..37).map(|i| (i % 5) as f64 * 0.5).collect();
        let idx = WeightIndex::from_weights(w.clone());
        for i in 0..=w.len() {
            let naive: f64 = w[..i].iter().sum();
            assert!((idx.prefix(i) - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn push_matches_rebuild() {
        let mut a = WeightIndex::new();
        for i in 0..100 {
            a.set(i, (i as f64).sqrt());
        }
        let b = WeightIndex::from_weights(a.weights.clone());
        for (x, y) in a.tree.iter().zip(&b.tree) {
            assert!((x - y).abs() < 1e-9);
        }
        assert_eq!(a.positive_count(), 99);
    }

    #[test]
    fn never_draws_zero_weight_slots() {
        let mut idx = WeightIndex::from_weights(vec![0.0, 1.0, 0.0, 0.0, 2.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 6];
        for _ in 0..30_000 {
            counts[idx.draw(&mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[0] + counts[2] + counts[3] + counts[5], 0);
        let ratio = counts[4] as f64 / counts[1] as f64;
        assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn distinct_draw_restores_weights() {
        let w = vec![0.5, 0.3, 0.2, 0.0];
        let mut idx = WeightIndex::from_weights(w.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = idx.draw_distinct(3, &mut rng).unwrap();
            let mut sorted = s.clone();
            sorted.sort();
            assert_eq!(sorted, vec![0, 1, 2]);
        }
        assert_eq!(idx.weights(), &w[..]);
        assert!((idx.total() - 1.0).abs() < 1e-12);
        assert_eq!(
            idx.draw_distinct(4, &mut rng),
            Err(SampleError::Insufficient { needed: 4, available: 3 })
        );
    }

    #[test]
    fn empty_index_reports_all_zero() {
        let mut idx = WeightIndex::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(idx.draw(&mut rng), Err(SampleError::AllZero));
    }

    #[test]
    fn running_total_tracks_exact_sum_over_many_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut idx = WeightIndex::new();
        for i in 0..500 {
            idx.set(i, rng.random::<f64>() + 1.0);
        }
        for _ in 0..10_000 {
            let slot = rng.random_range(0..600);
            let w = if rng.random_bool(0.1) { 0.0 } else { rng.random::<f64>().powf(0.7) + 1.0 };
            idx.set(slot, w);
        }
        let exact = idx.exact_total();
        assert!((idx.total() - exact).abs() <= 1e-9 * exact);
    }
}
