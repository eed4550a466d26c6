//! Greedy binary decision trees shared by the forest and the booster.
//!
//! One builder handles both uses: classification trees split on gini
//! impurity over 0/1 labels, regression trees (boosting stages) split
//! on variance over real-valued targets. Candidate thresholds are
//! midpoints between sorted unique feature values — exact search, no
//! quantile binning.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        n_samples: usize,
        impurity: f64,
    },
    Leaf {
        value: f64,
        n_samples: usize,
        impurity: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitCriterion {
    Gini,
    Variance,
}

#[derive(Debug, Clone)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features considered per split; `None` means all.
    pub features_per_split: Option<usize>,
    pub criterion: SplitCriterion,
}

/// Running sufficient statistics for either criterion.
#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Stats {
    fn add(&mut self, y: f64) {
        self.n += 1;
        self.sum += y;
        self.sum_sq += y * y;
    }

    fn remove(&mut self, y: f64) {
        self.n -= 1;
        self.sum -= y;
        self.sum_sq -= y * y;
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    fn impurity(&self, criterion: SplitCriterion) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n = self.n as f64;
        match criterion {
            SplitCriterion::Gini => {
                let p = self.sum / n;
                2.0 * p * (1.0 - p)
            }
            SplitCriterion::Variance => {
                let m = self.sum / n;
                (self.sum_sq / n - m * m).max(0.0)
            }
        }
    }
}

impl Tree {
    /// Fit on `sample_idx` (row indices into `rows`, duplicates allowed
    /// for bootstrap resamples) against per-row `targets`. Returns the
    /// tree and, for each entry of `sample_idx`, the leaf node index it
    /// landed in.
    pub fn fit(
        rows: &[Vec<f64>],
        targets: &[f64],
        sample_idx: &[usize],
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> (Tree, Vec<usize>) {
        assert!(params.max_depth >= 1);
        assert!(params.min_samples_leaf >= 1);
        let n_features = rows.first().map_or(0, |r| r.len());
        let mut tree = Tree { nodes: Vec::new() };
        let mut leaf_of = vec![usize::MAX; sample_idx.len()];
        // positions into sample_idx, so bootstrap duplicates are tracked
        let positions: Vec<usize> = (0..sample_idx.len()).collect();
        tree.grow(
            rows,
            targets,
            sample_idx,
            positions,
            0,
            params,
            n_features,
            rng,
            &mut leaf_of,
        );
        (tree, leaf_of)
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        &mut self,
        rows: &[Vec<f64>],
        targets: &[f64],
        sample_idx: &[usize],
        positions: Vec<usize>,
        depth: usize,
        params: &TreeParams,
        n_features: usize,
        rng: &mut ChaCha8Rng,
        leaf_of: &mut [usize],
    ) -> usize {
        let mut stats = Stats::default();
        for &p in &positions {
            stats.add(targets[sample_idx[p]]);
        }
        let impurity = stats.impurity(params.criterion);
        let make_leaf = |nodes: &mut Vec<Node>, leaf_of: &mut [usize]| {
            let id = nodes.len();
            nodes.push(Node::Leaf {
                value: stats.mean(),
                n_samples: positions.len(),
                impurity,
            });
            for &p in &positions {
                leaf_of[p] = id;
            }
            id
        };

        if depth >= params.max_depth
            || positions.len() < 2 * params.min_samples_leaf
            || impurity <= 0.0
        {
            return make_leaf(&mut self.nodes, leaf_of);
        }

        let candidates: Vec<usize> = match params.features_per_split {
            Some(k) if k < n_features => {
                let mut all: Vec<usize> = (0..n_features).collect();
                all.shuffle(rng);
                let mut chosen = all[..k].to_vec();
                chosen.sort_unstable();
                chosen
            }
            _ => (0..n_features).collect(),
        };

        let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
        let n_total = positions.len() as f64;
        let mut order = positions.clone();
        for &feat in &candidates {
            order.sort_by(|&a, &b| {
                rows[sample_idx[a]][feat].total_cmp(&rows[sample_idx[b]][feat])
            });
            let mut left = Stats::default();
            let mut right = stats;
            for w in 0..order.len() - 1 {
                let y = targets[sample_idx[order[w]]];
                left.add(y);
                right.remove(y);
                let xv = rows[sample_idx[order[w]]][feat];
                let xn = rows[sample_idx[order[w + 1]]][feat];
                if xv == xn {
                    continue;
                }
                if left.n < params.min_samples_leaf || right.n < params.min_samples_leaf {
                    continue;
                }
                let weighted = (left.n as f64 / n_total) * left.impurity(params.criterion)
                    + (right.n as f64 / n_total) * right.impurity(params.criterion);
                let gain = impurity - weighted;
                if gain > 1e-12 && best.map_or(true, |(g, _, _)| gain > g) {
                    best = Some((gain, feat, 0.5 * (xv + xn)));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return make_leaf(&mut self.nodes, leaf_of);
        };

        let (left_pos, right_pos): (Vec<usize>, Vec<usize>) = positions
            .iter()
            .partition(|&&p| rows[sample_idx[p]][feature] <= threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Split {
            feature,
            threshold,
            left: 0,
            right: 0,
            n_samples: positions.len(),
            impurity,
        });
        let left_id = self.grow(
            rows, targets, sample_idx, left_pos, depth + 1, params, n_features, rng, leaf_of,
        );
        let right_id = self.grow(
            rows, targets, sample_idx, right_pos, depth + 1, params, n_features, rng, leaf_of,
        );
        if let Node::Split { left, right, .. } = &mut self.nodes[id] {
            *left = left_id;
            *right = right_id;
        }
        id
    }

    pub fn leaf_for(&self, row: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match &self.nodes[self.leaf_for(row)] {
            Node::Leaf { value, .. } => *value,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Per-feature total weighted impurity decrease over this tree's
    /// accepted splits. `out` accumulates; `n_root` normalizes node
    /// sample counts to fractions of the training set.
    pub fn accumulate_impurity_decrease(&self, out: &mut [f64]) {
        let n_root = match &self.nodes[0] {
            Node::Split { n_samples, .. } | Node::Leaf { n_samples, .. } => *n_samples as f64,
        };
        for node in &self.nodes {
            if let Node::Split {
                feature,
                left,
                right,
                n_samples,
                impurity,
                ..
            } = node
            {
                let (nl, il) = node_stats(&self.nodes[*left]);
                let (nr, ir) = node_stats(&self.nodes[*right]);
                let n = *n_samples as f64;
                let weighted_child = (nl / n) * il + (nr / n) * ir;
                out[*feature] += (n / n_root) * (impurity - weighted_child);
            }
        }
    }

    pub fn feature_is_used(&self, feature: usize) -> bool {
        self.nodes
            .iter()
            .any(|n| matches!(n, Node::Split { feature: f, .. } if *f == feature))
    }
}

fn node_stats(node: &Node) -> (f64, f64) {
    match node {
        Node::Split {
            n_samples, impurity, ..
        }
        | Node::Leaf {
            n_samples, impurity, ..
        } => (*n_samples as f64, *impurity),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn threshold_data() -> (Vec<Vec<f64>>, Vec<f64>) {
        // y = 1[x > 0.5] on a grid
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 19.0]).collect();
        let targets: Vec<f64> = rows.iter().map(|r| if r[0] > 0.5 { 1.0 } else { 0.0 }).collect();
        (rows, targets)
    }

    #[test]
    fn stump_finds_the_threshold() {
        let (rows, targets) = threshold_data();
        let idx: Vec<usize> = (0..rows.len()).collect();
        let params = TreeParams {
            max_depth: 1,
            min_samples_leaf: 1,
            features_per_split: None,
            criterion: SplitCriterion::Gini,
        };
        let mut rng = rng_from_seed(0);
        let (tree, _) = Tree::fit(&rows, &targets, &idx, &params, &mut rng);
        match &tree.nodes[0] {
            Node::Split { threshold, .. } => {
                // exhaustive check: best split must sit in the gap around 0.5
                let gap = 1.0 / 19.0;
                assert!((threshold - 0.5).abs() <= gap, "threshold {threshold}");
            }
            Node::Leaf { .. } => panic!("expected a split"),
        }
        assert!((tree.predict(&[0.0]) - 0.0).abs() < 1e-12);
        assert!((tree.predict(&[1.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_node_becomes_leaf() {
        let rows = vec![vec![0.0], vec![1.0]];
        let targets = vec![1.0, 1.0];
        let params = TreeParams {
            max_depth: 5,
            min_samples_leaf: 1,
            features_per_split: None,
            criterion: SplitCriterion::Gini,
        };
        let mut rng = rng_from_seed(0);
        let (tree, leaf_of) = Tree::fit(&rows, &targets, &[0, 1], &params, &mut rng);
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(leaf_of, vec![0, 0]);
    }

    #[test]
    fn impurity_decrease_concentrates_on_split_feature() {
        let (rows, targets) = threshold_data();
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| vec![r[0], 0.25]).collect();
        let idx: Vec<usize> = (0..rows.len()).collect();
        let params = TreeParams {
            max_depth: 3,
            min_samples_leaf: 1,
            features_per_split: None,
            criterion: SplitCriterion::Gini,
        };
        let mut rng = rng_from_seed(0);
        let (tree, _) = Tree::fit(&rows, &targets, &idx, &params, &mut rng);
        let mut dec = vec![0.0; 2];
        tree.accumulate_impurity_decrease(&mut dec);
        assert!(dec[0] > 0.0);
        assert_eq!(dec[1], 0.0);
        assert!(!tree.feature_is_used(1));
    }
}
