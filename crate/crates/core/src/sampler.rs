//! Fenwick-tree weighted sampler supporting removal, used for sequential
//! sampling without replacement in `O(log N)` per draw.

#[derive(Debug, Clone)]
pub(crate) struct WeightTree {
    tree: Vec<f64>,
    weights: Vec<f64>,
    live: usize,
}

impl WeightTree {
    pub(crate) fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        for (i, &w) in weights.iter().enumerate() {
            tree[i + 1] += w;
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                let v = tree[i + 1];
                tree[parent] += v;
            }
        }
        WeightTree {
            tree,
            weights: weights.to_vec(),
            live: weights.iter().filter(|&&w| w > 0.0).count(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.weights.len()
    }

    /// Number of entries with positive weight.
    pub(crate) fn live(&self) -> usize {
        self.live
    }

    pub(crate) fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub(crate) fn total(&self) -> f64 {
        let mut i = self.len();
        let mut acc = 0.0;
        while i > 0 {
            acc += self.tree[i];
            i &= i - 1;
        }
        acc
    }

    pub(crate) fn remove(&mut self, i: usize) {
        let w = self.weights[i];
        if w <= 0.0 {
            return;
        }
        self.weights[i] = 0.0;
        self.live -= 1;
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] -= w;
            j += j & j.wrapping_neg();
        }
    }

    /// Smallest live index whose cumulative weight exceeds `target`.
    pub(crate) fn find(&self, mut target: f64) -> Option<usize> {
        if self.live == 0 {
            return None;
        }
        let n = self.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        // Rounding residue can land on a removed slot or past the end.
        let pos = pos.min(n - 1);
        if self.weights[pos] > 0.0 {
            return Some(pos);
        }
        (pos..n)
            .find(|&j| self.weights[j] > 0.0)
            .or_else(|| (0..pos).rev().find(|&j| self.weights[j] > 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_and_removal() {
        let mut t = WeightTree::new(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(t.total(), 15.0);
        t.remove(2);
        assert_eq!(t.total(), 12.0);
        assert_eq!(t.live(), 4);
        t.remove(2);
        assert_eq!(t.live(), 4);
    }

    #[test]
    fn find_matches_linear_scan() {
        let w = [0.5, 0.0, 1.5, 2.0, 0.25, 0.75, 3.0];
        let mut t = WeightTree::new(&w);
        let mut live = w.to_vec();
        for removal in [3usize, 0, 6] {
            let total: f64 = live.iter().sum();
            for s in 0..200 {
                let target = total * s as f64 / 200.0;
                let mut acc = 0.0;
                let mut expect = None;
                for (j, &x) in live.iter().enumerate() {
                    acc += x;
                    if x > 0.0 && acc > target {
                        expect = Some(j);
                        break;
                    }
                }
                assert_eq!(t.find(target), expect, "target {target}");
            }
            t.remove(removal);
            live[removal] = 0.0;
        }
    }

    #[test]
    fn exhausted_tree() {
        let mut t = WeightTree::new(&[1.0]);
        assert_eq!(t.find(0.3), Some(0));
        t.remove(0);
        assert_eq!(t.find(0.0), None);
    }
}
