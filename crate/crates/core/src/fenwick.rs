//! Binary indexed tree over non-negative integer weights, used to sample an
//! index with probability proportional to its weight.

#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    tree: Vec<u64>,
    total: u64,
}

impl Fenwick {
    pub(crate) fn from_weights(weights: &[u64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0u64; n + 1];
        tree[1..].copy_from_slice(weights);
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        Self {
            tree,
            total: weights.iter().sum(),
        }
    }

    pub(crate) fn total(&self) -> u64 {
        self.total
    }

    pub(crate) fn add(&mut self, index: usize, delta: i64) {
        self.total = self.total.wrapping_add_signed(delta);
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_add_signed(delta);
            i += i & i.wrapping_neg();
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    /// Requires `target < total()`.
    pub(crate) fn find(&self, mut target: u64) -> usize {
        debug_assert!(target < self.total);
        let n = self.tree.len() - 1;
        let mut pos = 0usize;
        let mut step = if n == 0 { 0 } else { 1usize << (usize::BITS - 1 - n.leading_zeros()) };
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn find_matches_linear_scan(weights in proptest::collection::vec(0u64..20, 1..64), frac in 0.0f64..1.0) {
            let fw = Fenwick::from_weights(&weights);
            let total: u64 = weights.iter().sum();
            prop_assume!(total > 0);
            let target = ((total as f64) * frac) as u64 % total;
            let mut acc = 0;
            let mut expected = 0;
            for (i, &w) in weights.iter().enumerate() {
                acc += w;
                if acc > target { expected = i; break; }
            }
            prop_assert_eq!(fw.find(target), expected);
        }

        #[test]
        fn incremental_adds_match_rebuild(ops in proptest::collection::vec((0usize..16, 0u64..10), 1..80)) {
            let mut weights = vec![0u64; 16];
            let mut fw = Fenwick::from_weights(&[0; 16]);
            for (i, w) in ops {
                fw.add(i, w as i64 - weights[i] as i64);
                weights[i] = w;
            }
            let rebuilt = Fenwick::from_weights(&weights);
            prop_assert_eq!(fw.total(), rebuilt.total());
            for t in 0..fw.total() {
                prop_assert_eq!(fw.find(t), rebuilt.find(t));
            }
        }
    }
}
