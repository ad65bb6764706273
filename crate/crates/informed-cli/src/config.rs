//! Experiment configuration: one TOML file per experiment, overridable by
//! command-line flags (flags win). Desk-scale presets are the tested
//! defaults; paper-scale presets ship alongside and are accepted by the
//! same code paths.

use informed_mcmc::features::{FeatureExtractor, HogExtractor, RectExtractor};
use informed_mcmc::proposal::{EstimatorKind, ForestParams, TrainConfig};
use informed_mcmc::renderers::{RoomModel, TilesModel};
use informed_mcmc::samplers::SamplerSpec;
use informed_mcmc::Error;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub type Result<T> = std::result::Result<T, Error>;

/// Output root override; when set, relative `out_dir`s are nested below it.
pub const OUT_ROOT_ENV: &str = "INFORMED_OUT_ROOT";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    pub out_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    pub image: ImageConfig,
    #[serde(default)]
    pub features: FeaturesConfig,
    pub train: TrainSection,
    pub testset: TestsetConfig,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

fn default_seed() -> u64 {
    17
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ImageConfig {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
    /// tiles only; 0 disables the blur
    #[serde(default = "default_blur")]
    pub blur_sigma: f64,
}

fn default_noise() -> f64 {
    0.02
}

fn default_blur() -> f64 {
    1.5
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturesConfig {
    /// "hog" (room) or "rects" (tiles); empty = problem default
    pub extractor: String,
    pub hog_orientations: usize,
    pub hog_cell: usize,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig { extractor: String::new(), hog_orientations: 9, hog_cell: 20 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub n: usize,
    pub k: usize,
    #[serde(default = "default_estimator")]
    pub estimator: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_forest_trees")]
    pub forest_trees: usize,
    #[serde(default = "default_forest_depth")]
    pub forest_max_depth: usize,
    #[serde(default = "default_forest_min_leaf")]
    pub forest_min_leaf: usize,
}

fn default_estimator() -> String {
    "kmeans-kde".into()
}

fn default_forest_trees() -> usize {
    10
}

fn default_forest_depth() -> usize {
    15
}

fn default_forest_min_leaf() -> usize {
    40
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TestsetConfig {
    pub count: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub id: String,
    #[serde(default = "default_sigma")]
    pub sigma_local: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_temps")]
    pub temperatures: Vec<f64>,
    pub n_iter: usize,
    #[serde(default = "default_chains")]
    pub n_chains: usize,
    #[serde(default = "default_calibration")]
    pub reg_calibration: usize,
}

fn default_sigma() -> f64 {
    0.3
}

fn default_alpha() -> f64 {
    0.7
}

fn default_temps() -> Vec<f64> {
    vec![1.0, 3.0, 27.0]
}

fn default_chains() -> usize {
    4
}

fn default_calibration() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    pub burn_in_frac: f64,
    pub rmse_stride: usize,
    pub n_checkpoints: usize,
    pub acf_max_lag: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig { burn_in_frac: 0.2, rmse_stride: 10, n_checkpoints: 20, acf_max_lag: 100 }
    }
}

/// Flag overrides; flags win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub sampler: Option<String>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub iters: Option<usize>,
    pub chains: Option<usize>,
    pub out: Option<PathBuf>,
}

/// The two forward models behind one enum so commands stay generic.
pub enum Problem {
    Room(RoomModel),
    Tiles(TilesModel),
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("parsing config: {e}")))?;
        cfg.apply(overrides);
        cfg.resolve_out_root();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.master_seed = seed;
        }
        if let Some(ref s) = o.sampler {
            self.sampler.id = s.clone();
        }
        if let Some(a) = o.alpha {
            self.sampler.alpha = a;
        }
        if let Some(s) = o.sigma {
            self.sampler.sigma_local = s;
        }
        if let Some(i) = o.iters {
            self.sampler.n_iter = i;
        }
        if let Some(c) = o.chains {
            self.sampler.n_chains = c;
        }
        if let Some(ref out) = o.out {
            self.out_dir = out.clone();
        }
    }

    pub fn resolve_out_root(&mut self) {
        if self.out_dir.is_relative() {
            if let Ok(root) = std::env::var(OUT_ROOT_ENV) {
                if !root.is_empty() {
                    self.out_dir = PathBuf::from(root).join(&self.out_dir);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.problem != "room" && self.problem != "tiles" {
            return Err(Error::Config(format!("unknown problem '{}'", self.problem)));
        }
        let extractor = self.extractor_name();
        match (self.problem.as_str(), extractor) {
            ("room", "hog") | ("tiles", "rects") => {}
            (p, e) => {
                return Err(Error::Config(format!("extractor '{e}' does not fit problem '{p}'")))
            }
        }
        if extractor == "hog"
            && (self.image.width % self.features.hog_cell != 0
                || self.image.height % self.features.hog_cell != 0)
        {
            return Err(Error::Config(format!(
                "hog cell {} must divide the {}x{} image",
                self.features.hog_cell, self.image.width, self.image.height
            )));
        }
        if self.train.k > self.train.n {
            return Err(Error::Config("train.k must not exceed train.n".into()));
        }
        EstimatorKind::parse(&self.train.estimator)?;
        let spec = self.sampler_spec()?;
        if matches!(spec, SamplerSpec::InfBmhwg { .. }) && self.problem != "tiles" {
            return Err(Error::Config("inf-bmhwg requires the blocked tiles problem".into()));
        }
        if self.sampler.n_chains == 0 {
            return Err(Error::Config("n_chains must be at least 1".into()));
        }
        Ok(())
    }

    pub fn extractor_name(&self) -> &str {
        if self.features.extractor.is_empty() {
            if self.problem == "room" {
                "hog"
            } else {
                "rects"
            }
        } else {
            &self.features.extractor
        }
    }

    pub fn problem(&self) -> Problem {
        match self.problem.as_str() {
            "room" => Problem::Room(RoomModel::new(
                self.image.width,
                self.image.height,
                self.image.noise_sigma,
            )),
            _ => Problem::Tiles(TilesModel::with_blur(
                self.image.width,
                self.image.height,
                self.image.noise_sigma,
                self.image.blur_sigma,
            )),
        }
    }

    pub fn extractor(&self) -> Result<Box<dyn FeatureExtractor>> {
        match self.extractor_name() {
            "hog" => Ok(Box::new(HogExtractor::new(
                self.features.hog_orientations,
                self.features.hog_cell,
                self.image.width,
                self.image.height,
            )?)),
            "rects" => Ok(Box::new(RectExtractor::new(self.image.width, self.image.height))),
            other => Err(Error::Config(format!("unknown extractor '{other}'"))),
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            n: self.train.n,
            k: self.train.k,
            estimator: EstimatorKind::parse(&self.train.estimator)?,
            seed: self.train.seed,
            forest: ForestParams {
                trees: self.train.forest_trees,
                max_depth: self.train.forest_max_depth,
                min_leaf: self.train.forest_min_leaf,
            },
        })
    }

    pub fn sampler_spec(&self) -> Result<SamplerSpec> {
        let s = &self.sampler;
        let spec = match s.id.as_str() {
            "mh" => SamplerSpec::Mh { sigma: s.sigma_local },
            "mhwg" => SamplerSpec::Mhwg { sigma: s.sigma_local },
            "bmhwg" => SamplerSpec::Bmhwg { sigma: s.sigma_local },
            "pt" => SamplerSpec::Pt { sigma: s.sigma_local, temperatures: s.temperatures.clone() },
            "reg-mh" => SamplerSpec::RegMh {
                sigma: s.sigma_local,
                alpha: s.alpha,
                calibration: s.reg_calibration,
            },
            "inf-mh" => SamplerSpec::InfMh { sigma: s.sigma_local, alpha: s.alpha },
            "inf-indmh" => SamplerSpec::InfIndMh,
            "inf-bmhwg" => SamplerSpec::InfBmhwg { sigma: s.sigma_local, alpha: s.alpha },
            other => return Err(Error::Config(format!("unknown sampler '{other}'"))),
        };
        Ok(spec)
    }

    pub fn model_path(&self) -> PathBuf {
        self.out_dir.join("model.ispm")
    }

    pub fn testset_dir(&self) -> PathBuf {
        self.out_dir.join("testset")
    }

    pub fn run_dir(&self, sampler_id: &str, case: usize) -> PathBuf {
        self.out_dir.join("runs").join(sampler_id).join(format!("case_{case:03}"))
    }

    pub fn report_dir(&self, sampler_id: &str, case: usize) -> PathBuf {
        self.out_dir.join("reports").join(sampler_id).join(format!("case_{case:03}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room_toml() -> String {
        r#"
problem = "room"
out_dir = "/tmp/room-test"
master_seed = 17

[image]
width = 64
height = 64

[features]
extractor = "hog"
hog_cell = 16

[train]
n = 20000
k = 500

[testset]
count = 5
seed = 99

[sampler]
id = "inf-mh"
sigma_local = 0.3
alpha = 0.7
n_iter = 10000
"#
        .to_string()
    }

    #[test]
    fn parses_and_validates_room_config() {
        let cfg: ExperimentConfig = toml::from_str(&room_toml()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.sampler.n_chains, 4);
        assert_eq!(cfg.extractor().unwrap().len(), 144);
        assert!(matches!(cfg.sampler_spec().unwrap(), SamplerSpec::InfMh { .. }));
    }

    #[test]
    fn paper_scale_configuration_is_accepted() {
        let mut cfg: ExperimentConfig = toml::from_str(&room_toml()).unwrap();
        cfg.train.n = 300_000;
        cfg.train.k = 5_000;
        cfg.image.width = 200;
        cfg.image.height = 200;
        cfg.features.hog_cell = 20;
        cfg.testset.count = 30;
        cfg.validate().unwrap();
        assert_eq!(cfg.extractor().unwrap().len(), 900);
    }

    #[test]
    fn flags_override_the_file() {
        let mut cfg: ExperimentConfig = toml::from_str(&room_toml()).unwrap();
        let o = Overrides {
            seed: Some(5),
            sampler: Some("mh".into()),
            sigma: Some(0.5),
            iters: Some(100),
            chains: Some(2),
            alpha: None,
            out: Some(PathBuf::from("/tmp/elsewhere")),
        };
        cfg.apply(&o);
        assert_eq!(cfg.master_seed, 5);
        assert_eq!(cfg.sampler.id, "mh");
        assert_eq!(cfg.sampler.sigma_local, 0.5);
        assert_eq!(cfg.sampler.n_iter, 100);
        assert_eq!(cfg.sampler.n_chains, 2);
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/elsewhere"));
    }

    #[test]
    fn incompatible_combinations_are_rejected() {
        let mut cfg: ExperimentConfig = toml::from_str(&room_toml()).unwrap();
        cfg.sampler.id = "inf-bmhwg".into();
        assert!(cfg.validate().is_err());
        let mut cfg: ExperimentConfig = toml::from_str(&room_toml()).unwrap();
        cfg.features.hog_cell = 20; // does not divide 64
        assert!(cfg.validate().is_err());
        let mut cfg: ExperimentConfig = toml::from_str(&room_toml()).unwrap();
        cfg.train.k = cfg.train.n + 1;
        assert!(cfg.validate().is_err());
        let mut cfg: ExperimentConfig = toml::from_str(&room_toml()).unwrap();
        cfg.features.extractor = "rects".into();
        assert!(cfg.validate().is_err());
    }
}
