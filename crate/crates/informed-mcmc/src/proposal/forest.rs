//! Regression forest whose leaves carry KDEs over the parameters: the
//! adaptive alternative to k-means clustering. Trees are grown on
//! bootstrap resamples with axis-aligned threshold splits scored by the
//! mean-squared-error reduction of the parameter targets.

use crate::error::{Error, Result};
use crate::parallel;
use crate::proposal::kde::{kde_fit, Kde};
use crate::rng::{derive_rng, Prng};
use crate::space::ParamSpace;
use rand::seq::SliceRandom;
use rand::Rng;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { trees: 10, max_depth: 15, min_leaf: 40 }
    }
}

#[derive(Debug, Clone)]
pub enum Node {
    Split { dim: usize, threshold: f64, left: usize, right: usize },
    Leaf { kde: Arc<Kde> },
}

#[derive(Debug, Clone)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Routes a feature vector to its leaf KDE.
    pub fn leaf(&self, feature: &[f64]) -> &Arc<Kde> {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Split { dim, threshold, left, right } => {
                    i = if feature[*dim] <= *threshold { *left } else { *right };
                }
                Node::Leaf { kde } => return kde,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + rec(nodes, *left).max(rec(nodes, *right)),
            }
        }
        rec(&self.nodes, 0)
    }

    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { kde } => Some(kde.len()),
                _ => None,
            })
            .collect()
    }
}

pub struct RegressionForest {
    pub trees: Vec<Tree>,
    pub params: ForestParams,
}

impl RegressionForest {
    /// One leaf KDE per tree for the given feature.
    pub fn select_leaves(&self, feature: &[f64]) -> Vec<Arc<Kde>> {
        self.trees.iter().map(|t| t.leaf(feature).clone()).collect()
    }
}

struct Builder<'a> {
    features: &'a [Vec<f64>],
    thetas: &'a [Vec<f64>],
    space: &'a ParamSpace,
    params: &'a ForestParams,
    n_candidates: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    /// Sum of squared errors over all target dimensions for a proposed
    /// split, computed from running sums.
    fn grow(&mut self, indices: Vec<usize>, depth: usize, rng: &mut Prng) -> Result<usize> {
        let m = indices.len();
        let can_split = depth < self.params.max_depth && m >= 2 * self.params.min_leaf;
        let best = if can_split { self.best_split(&indices, rng) } else { None };
        match best {
            Some((dim, threshold)) => {
                let (mut left, mut right) = (Vec::new(), Vec::new());
                for &i in &indices {
                    if self.features[i][dim] <= threshold {
                        left.push(i);
                    } else {
                        right.push(i);
                    }
                }
                let here = self.nodes.len();
                self.nodes.push(Node::Split { dim, threshold, left: 0, right: 0 });
                let l = self.grow(left, depth + 1, rng)?;
                let r = self.grow(right, depth + 1, rng)?;
                if let Node::Split { left, right, .. } = &mut self.nodes[here] {
                    *left = l;
                    *right = r;
                }
                Ok(here)
            }
            None => {
                let pts: Vec<Vec<f64>> = indices.iter().map(|&i| self.thetas[i].clone()).collect();
                let kde = Arc::new(kde_fit(pts, self.space)?);
                self.nodes.push(Node::Leaf { kde });
                Ok(self.nodes.len() - 1)
            }
        }
    }

    /// Best (dim, threshold) by MSE reduction among sqrt(d) random
    /// candidate dimensions; None when no split leaves both children with
    /// at least `min_leaf` points or none reduces the error.
    fn best_split(&self, indices: &[usize], rng: &mut Prng) -> Option<(usize, f64)> {
        let d = self.features[0].len();
        let t_dims = self.thetas[0].len();
        let mut dims: Vec<usize> = (0..d).collect();
        dims.shuffle(rng);
        dims.truncate(self.n_candidates.min(d));
        dims.sort_unstable(); // deterministic tie-breaking by dim order

        let min_leaf = self.params.min_leaf;
        let m = indices.len();
        let mut best: Option<(f64, usize, f64)> = None; // (reduction, dim, thr)
        for &dim in &dims {
            let mut order: Vec<usize> = indices.to_vec();
            order.sort_by(|&a, &b| self.features[a][dim].total_cmp(&self.features[b][dim]));
            // prefix sums of theta and theta^2
            let mut sum = vec![0.0; t_dims];
            let mut sumsq = vec![0.0; t_dims];
            let mut total = vec![0.0; t_dims];
            let mut totalsq = vec![0.0; t_dims];
            for &i in &order {
                for (j, v) in self.thetas[i].iter().enumerate() {
                    total[j] += v;
                    totalsq[j] += v * v;
                }
            }
            let sse = |s: &[f64], ss: &[f64], count: f64| -> f64 {
                (0..t_dims).map(|j| ss[j] - s[j] * s[j] / count).sum()
            };
            let parent_sse = sse(&total, &totalsq, m as f64);
            for (pos, &i) in order.iter().enumerate() {
                for (j, v) in self.thetas[i].iter().enumerate() {
                    sum[j] += v;
                    sumsq[j] += v * v;
                }
                let left_n = pos + 1;
                let right_n = m - left_n;
                if left_n < min_leaf || right_n < min_leaf {
                    continue;
                }
                let here = self.features[i][dim];
                let next = self.features[order[pos + 1]][dim];
                if here == next {
                    continue; // not a valid threshold between distinct values
                }
                let right_sum: Vec<f64> = (0..t_dims).map(|j| total[j] - sum[j]).collect();
                let right_sumsq: Vec<f64> = (0..t_dims).map(|j| totalsq[j] - sumsq[j]).collect();
                let reduction = parent_sse
                    - sse(&sum, &sumsq, left_n as f64)
                    - sse(&right_sum, &right_sumsq, right_n as f64);
                // the midpoint of two adjacent floats can round up to
                // `next`, which would leak its duplicates into the left
                // child; fall back to `here` so `<=` partitions exactly
                // as counted
                let mid = (here + next) / 2.0;
                let threshold = if mid < next { mid } else { here };
                if best.map_or(reduction > 1e-12, |b| reduction > b.0) {
                    best = Some((reduction, dim, threshold));
                }
            }
        }
        best.map(|(_, dim, thr)| (dim, thr))
    }
}

/// Grows the forest: each tree on its own bootstrap resample, trees built
/// in parallel with per-tree generators.
pub fn forest_fit(
    features: &[Vec<f64>],
    thetas: &[Vec<f64>],
    space: &ParamSpace,
    params: &ForestParams,
    seed: u64,
) -> Result<RegressionForest> {
    let n = features.len();
    if n != thetas.len() {
        return Err(Error::Config("feature/parameter count mismatch".into()));
    }
    if n < 2 * params.min_leaf {
        return Err(Error::Config(format!(
            "forest needs at least {} training points, got {n}",
            2 * params.min_leaf
        )));
    }
    let d = features[0].len();
    let n_candidates = (d as f64).sqrt().ceil() as usize;
    let trees: Vec<Result<Tree>> = parallel::map_indexed(params.trees, |t| {
        let mut rng = derive_rng(seed, "tree", t as u64);
        let indices: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let mut builder =
            Builder { features, thetas, space, params, n_candidates, nodes: Vec::new() };
        let root = builder.grow(indices, 0, &mut rng)?;
        debug_assert_eq!(root, 0);
        Ok(Tree { nodes: builder.nodes })
    });
    let trees = trees.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(RegressionForest { trees, params: params.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::DimSpec;

    fn line() -> ParamSpace {
        ParamSpace::single_block(vec![DimSpec::linear(-10.0, 10.0)]).unwrap()
    }

    /// Two clusters separated perfectly by feature dimension 1.
    fn two_cluster_set(n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut rng = crate::rng::rng_from_seed(3);
        let mut features = Vec::new();
        let mut thetas = Vec::new();
        for i in 0..n {
            let group = i % 2;
            let noise: f64 = rng.gen_range(-0.05..0.05);
            // dim 0 is uninformative, dim 1 separates the groups
            features.push(vec![rng.gen_range(-1.0..1.0), group as f64 + noise]);
            thetas.push(vec![if group == 0 { -5.0 } else { 5.0 } + noise]);
        }
        (features, thetas)
    }

    #[test]
    fn root_splits_on_the_separating_dimension() {
        let (features, thetas) = two_cluster_set(400);
        let params = ForestParams { trees: 5, max_depth: 15, min_leaf: 40 };
        let forest = forest_fit(&features, &thetas, &line(), &params, 11).unwrap();
        for tree in &forest.trees {
            match &tree.nodes[0] {
                Node::Split { dim, threshold, .. } => {
                    assert_eq!(*dim, 1, "root split dim");
                    assert!(*threshold > 0.05 && *threshold < 0.95);
                }
                Node::Leaf { .. } => panic!("root should split"),
            }
        }
    }

    #[test]
    fn leaf_and_depth_constraints_hold() {
        let (features, thetas) = two_cluster_set(600);
        let params = ForestParams::default();
        let forest = forest_fit(&features, &thetas, &line(), &params, 12).unwrap();
        for tree in &forest.trees {
            assert!(tree.depth() <= params.max_depth);
            for size in tree.leaf_sizes() {
                assert!(size >= params.min_leaf, "leaf size {size}");
            }
        }
    }

    #[test]
    fn selection_routes_to_matching_leaf() {
        let (features, thetas) = two_cluster_set(400);
        let params = ForestParams { trees: 10, max_depth: 15, min_leaf: 40 };
        let forest = forest_fit(&features, &thetas, &line(), &params, 13).unwrap();
        let leaves = forest.select_leaves(&[0.0, 0.0]);
        assert_eq!(leaves.len(), 10);
        // leaves selected for group 0 should put their mass near -5
        for kde in &leaves {
            let mean: f64 =
                kde.points().iter().map(|p| p[0]).sum::<f64>() / kde.len() as f64;
            assert!(mean < 0.0, "leaf mean {mean}");
        }
    }

    #[test]
    fn too_small_training_set_is_rejected() {
        let (features, thetas) = two_cluster_set(60);
        let params = ForestParams::default();
        assert!(forest_fit(&features, &thetas, &line(), &params, 1).is_err());
    }
}
