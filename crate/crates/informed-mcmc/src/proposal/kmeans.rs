//! Lloyd's k-means with k-means++ seeding, plus the cluster model that
//! attaches one KDE per surviving cluster.

use crate::error::{Error, Result};
use crate::parallel;
use crate::proposal::kde::{kde_fit, Kde};
use crate::proposal::IndependenceProposal;
use crate::rng::{rng_from_seed, Prng};
use crate::space::ParamSpace;
use rand::Rng;
use std::sync::Arc;

const MAX_ITERS: usize = 100;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first centroid uniform, the rest proportional to
/// the squared distance to the nearest chosen centroid.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut Prng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..n)].clone());
    let mut best_d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = best_d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d) in best_d2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // all remaining points coincide with a centroid
            rng.gen_range(0..n)
        };
        centroids.push(points[next].clone());
        let c = centroids.last().unwrap();
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, c);
            if d < best_d2[i] {
                best_d2[i] = d;
            }
        }
    }
    centroids
}

/// Lloyd's algorithm to an assignment fixpoint (or 100 iterations).
/// Returns centroids, assignments, and the final distortion (mean squared
/// distance to the assigned centroid). Empty clusters keep their previous
/// centroid during iteration; callers may drop them afterwards.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<usize>, f64)> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k must be in 1..={n}, got {k}")));
    }
    let d = points[0].len();
    let mut rng = rng_from_seed(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignments = vec![usize::MAX; n];
    for _ in 0..MAX_ITERS {
        let new_assignments: Vec<usize> = parallel::map_indexed(n, |i| {
            let p = &points[i];
            let mut best = 0usize;
            let mut best_d = dist2(p, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let dd = dist2(p, centroid);
                if dd < best_d {
                    best_d = dd;
                    best = c;
                }
            }
            best
        });
        let converged = new_assignments == assignments;
        assignments = new_assignments;
        if converged {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (cv, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *cv = s / counts[c] as f64;
                }
            }
        }
    }
    let distortion: f64 = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| dist2(p, &centroids[a]))
        .sum::<f64>()
        / n as f64;
    Ok((centroids, assignments, distortion))
}

/// k-means centroids in feature space with one KDE per cluster over the
/// assigned parameters. Empty clusters are dropped, so `len() <= k`.
pub struct ClusterModel {
    centroids: Vec<Vec<f64>>,
    kdes: Vec<Arc<Kde>>,
    /// training-point count per surviving cluster
    occupancy: Vec<usize>,
}

impl ClusterModel {
    pub fn fit(
        features: Vec<Vec<f64>>,
        thetas: &[Vec<f64>],
        space: &ParamSpace,
        k: usize,
        seed: u64,
    ) -> Result<Self> {
        if features.len() != thetas.len() {
            return Err(Error::Config("feature/parameter count mismatch".into()));
        }
        let (centroids, assignments, _) = kmeans(&features, k, seed)?;
        let mut members: Vec<Vec<Vec<f64>>> = vec![Vec::new(); centroids.len()];
        for (i, &a) in assignments.iter().enumerate() {
            members[a].push(thetas[i].clone());
        }
        let mut kept_centroids = Vec::new();
        let mut kdes = Vec::new();
        let mut occupancy = Vec::new();
        for (c, pts) in members.into_iter().enumerate() {
            if pts.is_empty() {
                continue;
            }
            occupancy.push(pts.len());
            kdes.push(Arc::new(kde_fit(pts, space)?));
            kept_centroids.push(centroids[c].clone());
        }
        Ok(ClusterModel { centroids: kept_centroids, kdes, occupancy })
    }

    pub fn from_parts(centroids: Vec<Vec<f64>>, kdes: Vec<Arc<Kde>>) -> Result<Self> {
        if centroids.len() != kdes.len() || centroids.is_empty() {
            return Err(Error::Config("cluster model needs matching non-empty parts".into()));
        }
        let occupancy = kdes.iter().map(|k| k.len()).collect();
        Ok(ClusterModel { centroids, kdes, occupancy })
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn kdes(&self) -> &[Arc<Kde>] {
        &self.kdes
    }

    pub fn occupancy(&self) -> &[usize] {
        &self.occupancy
    }

    /// Index of the nearest centroid.
    pub fn nearest(&self, feature: &[f64]) -> usize {
        let mut best = 0usize;
        let mut best_d = dist2(feature, &self.centroids[0]);
        for (c, centroid) in self.centroids.iter().enumerate().skip(1) {
            let d = dist2(feature, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }

    /// The KDE of the nearest cluster; no mutation, so selection is a
    /// pure function of the feature.
    pub fn select(&self, feature: &[f64]) -> Arc<dyn IndependenceProposal> {
        self.kdes[self.nearest(feature)].clone()
    }
}
