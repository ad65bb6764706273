//! Offline learning of the global proposal and its test-time selection.
//!
//! Training simulates (parameter, image) pairs from the model, featurizes
//! the images, and fits a density estimator per block of the parameter
//! space: either k-means clusters with one KDE each, or a regression
//! forest whose leaves hold KDEs. At test time the observation's features
//! select one density per block, which the informed samplers use as a
//! state-independent proposal.

pub mod forest;
pub mod io;
pub mod kde;
pub mod kmeans;

pub use forest::{forest_fit, ForestParams, RegressionForest};
pub use kde::{kde_fit, Kde};
pub use kmeans::{kmeans, ClusterModel};

use crate::error::{Error, Result};
use crate::features::FeatureExtractor;
use crate::model::GenerativeModel;
use crate::parallel;
use crate::renderers::make_observation;
use crate::rng::{derive_rng, Prng};
use crate::space::{ParamSpace, ParamVector};
use rand::Rng;
use std::ops::Range;
use std::sync::Arc;

/// A state-independent proposal density that can be sampled and evaluated;
/// the two capabilities a metropolized independence kernel needs.
pub trait IndependenceProposal: Send + Sync {
    fn dims(&self) -> usize;
    fn sample(&self, rng: &mut Prng) -> Vec<f64>;
    fn log_density(&self, x: &[f64]) -> f64;
}

/// Uniform density over a parameter-space box; the initial global
/// proposal of the regeneration sampler.
pub struct BoxUniform {
    pub space: ParamSpace,
}

impl IndependenceProposal for BoxUniform {
    fn dims(&self) -> usize {
        self.space.dims()
    }

    fn sample(&self, rng: &mut Prng) -> Vec<f64> {
        self.space.sample_uniform(rng).values
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let v = ParamVector::new(x.to_vec());
        if self.space.contains(&v) {
            -self.space.log_volume()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Equal-weight mixture of KDEs; the global proposal a regression forest
/// yields (one leaf per tree).
pub struct KdeMixture {
    pub components: Vec<Arc<Kde>>,
}

impl IndependenceProposal for KdeMixture {
    fn dims(&self) -> usize {
        self.components[0].dims()
    }

    fn sample(&self, rng: &mut Prng) -> Vec<f64> {
        let i = rng.gen_range(0..self.components.len());
        self.components[i].sample(rng)
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let logs: Vec<f64> = self.components.iter().map(|c| c.log_density(x)).collect();
        kde::logsumexp(&logs) - (self.components.len() as f64).ln()
    }
}

/// Product of independent block proposals, concatenated in block order to
/// form a full-state proposal.
pub struct ProductProposal {
    pub parts: Vec<(Range<usize>, Arc<dyn IndependenceProposal>)>,
    pub dims: usize,
}

impl IndependenceProposal for ProductProposal {
    fn dims(&self) -> usize {
        self.dims
    }

    fn sample(&self, rng: &mut Prng) -> Vec<f64> {
        let mut out = vec![0.0; self.dims];
        for (range, part) in &self.parts {
            let v = part.sample(rng);
            out[range.clone()].copy_from_slice(&v);
        }
        out
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.parts.iter().map(|(range, part)| part.log_density(&x[range.clone()])).sum()
    }
}

/// Training pairs: parameters and the features of their noisy renders.
/// Images are featurized immediately and dropped.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub thetas: Vec<ParamVector>,
    pub features: Vec<Vec<f64>>,
    pub feature_dim: usize,
}

/// Simulates `n` prior-parameter/feature pairs. Items are generated from
/// per-index generators derived from `seed`, so the result is identical
/// under any parallel schedule.
pub fn generate_training_set<M: GenerativeModel>(
    model: &M,
    extractor: &dyn FeatureExtractor,
    n: usize,
    seed: u64,
) -> Result<TrainingSet> {
    if n == 0 {
        return Err(Error::Config("training set size must be at least 1".into()));
    }
    let items: Vec<Result<(ParamVector, Vec<f64>)>> = parallel::map_indexed(n, |i| {
        let mut rng = derive_rng(seed, "train-item", i as u64);
        let theta = model.prior_sample(&mut rng);
        let obs = make_observation(model, &theta, &mut rng)?;
        let feature = extractor.extract(&obs)?;
        Ok((theta, feature))
    });
    let mut thetas = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n);
    for item in items {
        let (t, f) = item?;
        thetas.push(t);
        features.push(f);
    }
    Ok(TrainingSet { thetas, features, feature_dim: extractor.len() })
}

/// Which density estimator backs the proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    KmeansKde,
    Forest,
}

impl EstimatorKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "kmeans-kde" => Ok(EstimatorKind::KmeansKde),
            "forest" => Ok(EstimatorKind::Forest),
            other => Err(Error::Config(format!("unknown estimator '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::KmeansKde => "kmeans-kde",
            EstimatorKind::Forest => "forest",
        }
    }
}

/// One trained estimator for one block of the parameter space.
pub enum BlockEstimator {
    Clusters(ClusterModel),
    Forest(RegressionForest),
}

impl BlockEstimator {
    /// Deterministically picks the density for a feature vector.
    pub fn select(&self, feature: &[f64]) -> Arc<dyn IndependenceProposal> {
        match self {
            BlockEstimator::Clusters(cm) => cm.select(feature),
            BlockEstimator::Forest(f) => {
                Arc::new(KdeMixture { components: f.select_leaves(feature) })
            }
        }
    }

    pub fn kind(&self) -> EstimatorKind {
        match self {
            BlockEstimator::Clusters(_) => EstimatorKind::KmeansKde,
            BlockEstimator::Forest(_) => EstimatorKind::Forest,
        }
    }
}

/// A trained global proposal: one estimator per parameter block, plus the
/// bookkeeping needed to route an observation's features to them.
pub struct TrainedProposal {
    pub extractor_id: String,
    pub space: ParamSpace,
    /// (block index, feature slice, estimator), one per block.
    pub entries: Vec<(usize, Range<usize>, BlockEstimator)>,
    pub train_n: u64,
    pub train_seed: u64,
}

impl TrainedProposal {
    /// Global proposal over the full state: the single block's density,
    /// or the product of per-block densities selected independently.
    pub fn select_full(&self, feature: &[f64]) -> Result<Arc<dyn IndependenceProposal>> {
        if self.entries.len() == 1 && self.space.blocks().len() == 1 {
            let (_, range, est) = &self.entries[0];
            return Ok(est.select(&feature[range.clone()]));
        }
        let mut parts: Vec<(Range<usize>, Arc<dyn IndependenceProposal>)> = Vec::new();
        for (block, range, est) in &self.entries {
            let idx = &self.space.blocks()[*block];
            let lo = *idx.first().unwrap();
            let hi = *idx.last().unwrap() + 1;
            if idx.len() != hi - lo {
                return Err(Error::Config("non-contiguous block".into()));
            }
            parts.push((lo..hi, est.select(&feature[range.clone()])));
        }
        Ok(Arc::new(ProductProposal { parts, dims: self.space.dims() }))
    }

    /// Global proposal for one block.
    pub fn select_block(
        &self,
        block: usize,
        feature: &[f64],
    ) -> Result<Arc<dyn IndependenceProposal>> {
        let (_, range, est) = self
            .entries
            .iter()
            .find(|(b, _, _)| *b == block)
            .ok_or_else(|| Error::Config(format!("no trained proposal for block {block}")))?;
        Ok(est.select(&feature[range.clone()]))
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub n: usize,
    pub k: usize,
    pub estimator: EstimatorKind,
    pub seed: u64,
    pub forest: ForestParams,
}

/// Runs the full offline stage: simulate, featurize, cluster (or grow a
/// forest), and fit densities, independently for every parameter block.
pub fn train_proposal<M: GenerativeModel>(
    model: &M,
    extractor: &dyn FeatureExtractor,
    cfg: &TrainConfig,
) -> Result<TrainedProposal> {
    let set = generate_training_set(model, extractor, cfg.n, cfg.seed)?;
    train_proposal_from_set(model.space(), extractor, &set, cfg)
}

/// As [`train_proposal`] but from an existing training set.
pub fn train_proposal_from_set(
    space: &ParamSpace,
    extractor: &dyn FeatureExtractor,
    set: &TrainingSet,
    cfg: &TrainConfig,
) -> Result<TrainedProposal> {
    let blocks = space.blocks();
    if set.feature_dim % blocks.len() != 0 {
        return Err(Error::Config(format!(
            "feature length {} not divisible across {} blocks",
            set.feature_dim,
            blocks.len()
        )));
    }
    let per_block_feat = set.feature_dim / blocks.len();
    let mut entries = Vec::with_capacity(blocks.len());
    for (b, idx) in blocks.iter().enumerate() {
        let frange = if blocks.len() == 1 {
            0..set.feature_dim
        } else {
            b * per_block_feat..(b + 1) * per_block_feat
        };
        let feats: Vec<Vec<f64>> =
            set.features.iter().map(|f| f[frange.clone()].to_vec()).collect();
        let thetas: Vec<Vec<f64>> =
            set.thetas.iter().map(|t| idx.iter().map(|&i| t[i]).collect()).collect();
        let block_space = space.block_space(b)?;
        let est = match cfg.estimator {
            EstimatorKind::KmeansKde => BlockEstimator::Clusters(ClusterModel::fit(
                feats,
                &thetas,
                &block_space,
                cfg.k,
                crate::rng::derive_seed(cfg.seed, "kmeans-block", b as u64),
            )?),
            EstimatorKind::Forest => BlockEstimator::Forest(forest_fit(
                &feats,
                &thetas,
                &block_space,
                &cfg.forest,
                crate::rng::derive_seed(cfg.seed, "forest-block", b as u64),
            )?),
        };
        entries.push((b, frange, est));
    }
    Ok(TrainedProposal {
        extractor_id: extractor.id().to_string(),
        space: space.clone(),
        entries,
        train_n: cfg.n as u64,
        train_seed: cfg.seed,
    })
}
