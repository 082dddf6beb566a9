use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Matrix;
use crate::ensemble::{ForestConfig, ForestMode};

/// Node of a grown tree, stored in an arena. Internal nodes route
/// value < threshold to the left child and value >= threshold to the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf { fraction: f64, count: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

fn gini(pos: usize, total: usize) -> f64 {
    let p = pos as f64 / total as f64;
    let q = 1.0 - p;
    1.0 - p * p - q * q
}

/// Gini impurity decrease of a (left, right) child split, computed from
/// integer counts only, so the value is independent of row order.
fn gain(
    parent_gini: f64,
    n: usize,
    pos_left: usize,
    n_left: usize,
    pos_right: usize,
    n_right: usize,
) -> f64 {
    let wl = n_left as f64 / n as f64;
    let wr = n_right as f64 / n as f64;
    parent_gini - wl * gini(pos_left, n_left) - wr * gini(pos_right, n_right)
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Grower<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    cfg: &'a ForestConfig,
    max_features: usize,
    max_depth: usize,
    scratch: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> Grower<'a> {
    /// Draws `max_features` distinct candidate features by partial
    /// Fisher-Yates. The draw count never depends on the rows at the node,
    /// which keeps the generator stream aligned across permuted inputs.
    fn sample_candidates(&mut self, rng: &mut ChaCha8Rng) -> usize {
        let d = self.x.n_cols();
        self.scratch.clear();
        self.scratch.extend(0..d);
        for k in 0..self.max_features {
            let j = rng.gen_range(k..d);
            self.scratch.swap(k, j);
        }
        self.max_features
    }

    fn extra_candidate(
        &self,
        rows: &[usize],
        feature: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<(f64, usize, usize)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &r in rows {
            let v = self.x.get(r, feature);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo >= hi {
            return None; // constant feature at this node; no draw consumed
        }
        let threshold = rng.gen_range(lo..hi);
        let mut n_left = 0;
        let mut pos_left = 0;
        for &r in rows {
            if self.x.get(r, feature) < threshold {
                n_left += 1;
                pos_left += self.y[r] as usize;
            }
        }
        Some((threshold, n_left, pos_left))
    }

    fn random_forest_candidate(
        &self,
        rows: &[usize],
        feature: usize,
        parent_gini: f64,
        n_pos: usize,
    ) -> Option<BestSplit> {
        let n = rows.len();
        let mut pairs: Vec<(f64, u8)> = rows
            .iter()
            .map(|&r| (self.x.get(r, feature), self.y[r]))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let min_leaf = self.cfg.min_samples_leaf;
        let mut best: Option<BestSplit> = None;
        let mut pos_left = 0usize;
        for i in 0..n - 1 {
            pos_left += pairs[i].1 as usize;
            if pairs[i].0 == pairs[i + 1].0 {
                continue; // not a boundary between distinct values
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let g = gain(parent_gini, n, pos_left, n_left, n_pos - pos_left, n_right);
            if best.as_ref().is_none_or(|b| g > b.gain) {
                best = Some(BestSplit {
                    gain: g,
                    feature,
                    threshold: (pairs[i].0 + pairs[i + 1].0) / 2.0,
                });
            }
        }
        best
    }

    fn find_split(
        &mut self,
        rows: &[usize],
        n_pos: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<(usize, f64)> {
        let n = rows.len();
        let parent_gini = gini(n_pos, n);
        let n_candidates = self.sample_candidates(rng);
        let min_leaf = self.cfg.min_samples_leaf;

        let mut best: Option<BestSplit> = None;
        for c in 0..n_candidates {
            let feature = self.scratch[c];
            let candidate = match self.cfg.mode {
                ForestMode::Extra => {
                    self.extra_candidate(rows, feature, rng).and_then(
                        |(threshold, n_left, pos_left)| {
                            let n_right = n - n_left;
                            if n_left < min_leaf || n_right < min_leaf || n_left == 0 || n_right == 0
                            {
                                return None;
                            }
                            Some(BestSplit {
                                gain: gain(
                                    parent_gini,
                                    n,
                                    pos_left,
                                    n_left,
                                    n_pos - pos_left,
                                    n_right,
                                ),
                                feature,
                                threshold,
                            })
                        },
                    )
                }
                ForestMode::RandomForest => {
                    self.random_forest_candidate(rows, feature, parent_gini, n_pos)
                }
            };
            if let Some(c) = candidate {
                // Strict comparison: the first candidate drawn wins ties.
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        best.map(|b| (b.feature, b.threshold))
    }
}

impl Tree {
    /// Grows one CART tree over the given rows with explicit-stack
    /// recursion, so depth is bounded by memory rather than the call stack.
    pub(crate) fn grow(
        x: &Matrix,
        y: &[u8],
        rows: Vec<usize>,
        cfg: &ForestConfig,
        max_features: usize,
        rng: &mut ChaCha8Rng,
    ) -> Tree {
        let mut grower = Grower {
            x,
            y,
            cfg,
            max_features,
            max_depth: cfg.max_depth.unwrap_or(usize::MAX),
            scratch: Vec::with_capacity(x.n_cols()),
            nodes: Vec::new(),
        };
        grower.nodes.push(Node::Leaf { fraction: 0.0, count: 0 });
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, rows, 0)];

        while let Some((slot, rows, depth)) = stack.pop() {
            let n = rows.len();
            let n_pos: usize = rows.iter().map(|&r| y[r] as usize).sum();
            let make_leaf = |nodes: &mut Vec<Node>| {
                nodes[slot] = Node::Leaf {
                    fraction: n_pos as f64 / n as f64,
                    count: n as u32,
                };
            };

            if n_pos == 0 || n_pos == n || n < cfg.min_samples_split || depth >= grower.max_depth {
                make_leaf(&mut grower.nodes);
                continue;
            }
            let Some((feature, threshold)) = grower.find_split(&rows, n_pos, rng) else {
                make_leaf(&mut grower.nodes);
                continue;
            };

            let mut left_rows = Vec::new();
            let mut right_rows = Vec::new();
            for &r in &rows {
                if x.get(r, feature) < threshold {
                    left_rows.push(r);
                } else {
                    right_rows.push(r);
                }
            }
            let left = grower.nodes.len();
            grower.nodes.push(Node::Leaf { fraction: 0.0, count: 0 });
            let right = grower.nodes.len();
            grower.nodes.push(Node::Leaf { fraction: 0.0, count: 0 });
            grower.nodes[slot] = Node::Split {
                feature: feature as u32,
                threshold,
                left: left as u32,
                right: right as u32,
            };
            stack.push((right, right_rows, depth + 1));
            stack.push((left, left_rows, depth + 1));
        }

        Tree { nodes: grower.nodes }
    }

    /// Positive-class fraction of the leaf this row lands in.
    pub(crate) fn leaf_fraction(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { fraction, .. } => return *fraction,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature as usize] < *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Maximum depth of any leaf (root at depth 0).
    #[cfg(test)]
    pub(crate) fn depth(&self) -> usize {
        let mut max_depth = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((at, d)) = stack.pop() {
            match &self.nodes[at] {
                Node::Leaf { .. } => max_depth = max_depth.max(d),
                Node::Split { left, right, .. } => {
                    stack.push((*left as usize, d + 1));
                    stack.push((*right as usize, d + 1));
                }
            }
        }
        max_depth
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn grow_with(
        rows_data: &[Vec<f64>],
        y: &[u8],
        cfg: &ForestConfig,
        max_features: usize,
        seed: u64,
    ) -> Tree {
        let x = Matrix::from_rows(rows_data);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<usize> = (0..x.n_rows()).collect();
        Tree::grow(&x, y, rows, cfg, max_features, &mut rng)
    }

    #[test]
    fn pure_node_is_a_single_leaf() {
        let data: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, -(i as f64)]).collect();
        let y = vec![1u8; 6];
        let tree = grow_with(&data, &y, &ForestConfig::extra_trees(), 2, 1);
        assert_eq!(tree.n_nodes(), 1);
        assert_eq!(tree.leaf_fraction(&[3.0, 5.0]), 1.0);
    }

    #[test]
    fn separable_single_feature_reaches_training_accuracy_one() {
        let data: Vec<Vec<f64>> = (-5..5).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (-5..5).map(|i| u8::from(i >= 0)).collect();
        for mode in [ForestMode::Extra, ForestMode::RandomForest] {
            let cfg = ForestConfig { mode, ..ForestConfig::extra_trees() };
            let tree = grow_with(&data, &y, &cfg, 1, 3);
            for (row, &label) in data.iter().zip(&y) {
                let frac = tree.leaf_fraction(row);
                assert_eq!(frac, label as f64, "mode {mode:?} row {row:?}");
            }
        }
    }

    #[test]
    fn constant_features_with_mixed_labels_become_class_mean_leaf() {
        let data = vec![vec![2.0, 2.0]; 4];
        let y = vec![1, 0, 0, 0];
        let tree = grow_with(&data, &y, &ForestConfig::extra_trees(), 2, 5);
        assert_eq!(tree.n_nodes(), 1);
        assert_eq!(tree.leaf_fraction(&[2.0, 2.0]), 0.25);
    }

    #[test]
    fn max_depth_limits_growth() {
        let data: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..64).map(|i| u8::from(i % 2 == 0)).collect();
        let cfg = ForestConfig {
            max_depth: Some(2),
            ..ForestConfig::extra_trees()
        };
        let tree = grow_with(&data, &y, &cfg, 1, 9);
        assert!(tree.depth() <= 2, "depth {}", tree.depth());
    }

    #[test]
    fn min_samples_split_stops_early() {
        let data: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..8).map(|i| u8::from(i >= 4)).collect();
        let cfg = ForestConfig {
            min_samples_split: 100,
            ..ForestConfig::extra_trees()
        };
        let tree = grow_with(&data, &y, &cfg, 1, 2);
        assert_eq!(tree.n_nodes(), 1);
        assert_eq!(tree.leaf_fraction(&[0.0]), 0.5);
    }

    #[test]
    fn random_forest_mode_picks_the_clean_boundary() {
        // Feature 0 separates perfectly, feature 1 is constant.
        let data: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 7.0]).collect();
        let y: Vec<u8> = (0..10).map(|i| u8::from(i >= 5)).collect();
        let cfg = ForestConfig::random_forest();
        let tree = grow_with(&data, &y, &cfg, 2, 4);
        match tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 4.5);
            }
            _ => panic!("expected a root split"),
        }
        assert_eq!(tree.n_nodes(), 3);
    }

    #[test]
    fn gini_gain_is_zero_for_proportional_split() {
        let parent = gini(2, 4);
        assert_eq!(gain(parent, 4, 1, 2, 1, 2), 0.0);
        assert!(gain(gini(2, 4), 4, 2, 2, 0, 2) > 0.49);
    }
}
