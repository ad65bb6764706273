//! The five pipeline commands: train, make-testset, sample, diagnose,
//! render. Each works entirely under the experiment's output directory,
//! so a fixed master seed makes the whole pipeline byte-reproducible.

use crate::config::{ExperimentConfig, Problem};
use crate::formats::{
    read_json, read_observation, read_trace_csv, write_acf_csv, write_json, write_metrics_csv,
    write_observation, write_preview, write_trace_csv, MetricRow, RunManifest, TestCase,
    TestsetManifest,
};
use informed_mcmc::diagnostics::{
    acceptance_rate, autocorrelation, enumerate_room_modes, modes_visited_curve, psrf, psrf_max,
    rmse_curve,
};
use informed_mcmc::model::GenerativeModel;
use informed_mcmc::proposal::io::{load_model, save_model};
use informed_mcmc::proposal::{train_proposal, TrainedProposal};
use informed_mcmc::renderers::make_observation;
use informed_mcmc::rng::derive_rng;
use informed_mcmc::samplers::{run_experiment, ChainSet, SamplerSpec, Trace};
use informed_mcmc::space::ParamVector;
use informed_mcmc::Error;
use sha2::{Digest, Sha256};
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub type Result<T> = std::result::Result<T, Error>;

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

/// Trains the global proposal and writes the model file plus sidecar.
/// Prints a cluster-occupancy summary.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<PathBuf> {
    ensure_dir(&cfg.out_dir)?;
    let extractor = cfg.extractor()?;
    let train_cfg = cfg.train_config()?;
    let trained = match cfg.problem() {
        Problem::Room(m) => train_proposal(&m, extractor.as_ref(), &train_cfg)?,
        Problem::Tiles(m) => train_proposal(&m, extractor.as_ref(), &train_cfg)?,
    };
    let path = cfg.model_path();
    save_model(&path, &trained)?;
    println!("model written to {}", path.display());
    for (block, _, est) in &trained.entries {
        match est {
            informed_mcmc::proposal::BlockEstimator::Clusters(cm) => {
                let occ = cm.occupancy();
                let min = occ.iter().min().unwrap();
                let max = occ.iter().max().unwrap();
                let mean = occ.iter().sum::<usize>() as f64 / occ.len() as f64;
                println!(
                    "block {block}: {} clusters, occupancy min {min} / mean {mean:.1} / max {max}",
                    cm.len()
                );
            }
            informed_mcmc::proposal::BlockEstimator::Forest(f) => {
                let leaves: Vec<usize> = f.trees.iter().map(|t| t.leaf_sizes().len()).collect();
                println!("block {block}: {} trees, leaves per tree {:?}", f.trees.len(), leaves);
            }
        }
    }
    Ok(path)
}

/// Renders prior-sampled ground truths, adds noise, and stores the
/// observations losslessly with a full-precision parameter manifest.
pub fn cmd_make_testset(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.testset_dir();
    ensure_dir(&dir)?;
    let mut cases = Vec::with_capacity(cfg.testset.count);
    match cfg.problem() {
        Problem::Room(m) => make_cases(&m, cfg, &dir, &mut cases)?,
        Problem::Tiles(m) => make_cases(&m, cfg, &dir, &mut cases)?,
    }
    let manifest = TestsetManifest {
        problem: cfg.problem.clone(),
        seed: cfg.testset.seed,
        count: cfg.testset.count,
        cases,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    println!("test set with {} cases under {}", cfg.testset.count, dir.display());
    Ok(path)
}

fn make_cases<M: GenerativeModel>(
    model: &M,
    cfg: &ExperimentConfig,
    dir: &Path,
    cases: &mut Vec<TestCase>,
) -> Result<()> {
    for i in 0..cfg.testset.count {
        let mut rng = derive_rng(cfg.testset.seed, "testcase", i as u64);
        let theta = model.prior_sample(&mut rng);
        let obs = make_observation(model, &theta, &mut rng)?;
        let name = format!("case_{i:03}.isob");
        write_observation(&dir.join(&name), &obs)?;
        cases.push(TestCase { index: i, observation: name, theta_star: theta.values });
    }
    Ok(())
}

fn load_testset(cfg: &ExperimentConfig) -> Result<TestsetManifest> {
    let path = cfg.testset_dir().join("manifest.json");
    if !path.exists() {
        return Err(Error::Config(format!(
            "test set manifest {} missing; run make-testset first",
            path.display()
        )));
    }
    read_json(&path)
}

/// Runs the configured sampler on one test case (or all) and writes
/// trace CSVs plus run manifests.
pub fn cmd_sample(
    cfg: &ExperimentConfig,
    model_path: Option<&Path>,
    case: Option<usize>,
) -> Result<Vec<PathBuf>> {
    let spec = cfg.sampler_spec()?;
    let manifest = load_testset(cfg)?;
    let trained: Option<TrainedProposal> = if spec.needs_trained_proposal() {
        let path = model_path.map(PathBuf::from).unwrap_or_else(|| cfg.model_path());
        if !path.exists() {
            return Err(Error::Config(format!(
                "sampler '{}' needs a model file; {} not found (run train first)",
                spec.id(),
                path.display()
            )));
        }
        Some(load_model(&path)?)
    } else {
        None
    };
    let model_hash = if spec.needs_trained_proposal() {
        let path = model_path.map(PathBuf::from).unwrap_or_else(|| cfg.model_path());
        Some(sha256_hex(&path)?)
    } else {
        None
    };

    let cases: Vec<&TestCase> = match case {
        Some(i) => vec![manifest
            .cases
            .get(i)
            .ok_or_else(|| Error::Config(format!("test case {i} out of range")))?],
        None => manifest.cases.iter().collect(),
    };
    let mut written = Vec::new();
    for tc in cases {
        let set = run_case(cfg, &spec, trained.as_ref(), tc)?;
        let dir = cfg.run_dir(spec.id(), tc.index);
        ensure_dir(&dir)?;
        let trace_path = dir.join("trace.csv");
        write_trace_csv(&trace_path, &set.chains, set.space.dims())?;
        let run_manifest = RunManifest {
            problem: cfg.problem.clone(),
            sampler: spec.id().to_string(),
            case: tc.index,
            master_seed: cfg.master_seed,
            n_iter: cfg.sampler.n_iter,
            n_chains: cfg.sampler.n_chains,
            sigma_local: cfg.sampler.sigma_local,
            alpha: cfg.sampler.alpha,
            temperatures: cfg.sampler.temperatures.clone(),
            model_sha256: model_hash.clone(),
            observation: tc.observation.clone(),
            renders: set.renders,
        };
        write_json(&dir.join("manifest.json"), &run_manifest)?;
        println!(
            "case {:03}: {} iterations x {} chains, {} renders -> {}",
            tc.index,
            cfg.sampler.n_iter,
            cfg.sampler.n_chains,
            set.renders,
            trace_path.display()
        );
        written.push(trace_path);
    }
    Ok(written)
}

fn run_case(
    cfg: &ExperimentConfig,
    spec: &SamplerSpec,
    trained: Option<&TrainedProposal>,
    tc: &TestCase,
) -> Result<ChainSet> {
    let obs = read_observation(&cfg.testset_dir().join(&tc.observation))?;
    match cfg.problem() {
        Problem::Room(m) => run_experiment(
            &m,
            &obs,
            spec,
            trained,
            cfg.sampler.n_iter,
            cfg.sampler.n_chains,
            cfg.master_seed,
        ),
        Problem::Tiles(m) => run_experiment(
            &m,
            &obs,
            spec,
            trained,
            cfg.sampler.n_iter,
            cfg.sampler.n_chains,
            cfg.master_seed,
        ),
    }
}

/// Metric time series computed from a run's traces.
pub struct CaseReport {
    pub checkpoints: Vec<usize>,
    pub ar: Vec<f64>,
    pub psrf_max: Vec<f64>,
    pub rmse: Vec<f64>,
    pub modes_visited: Option<Vec<usize>>,
    pub final_psrf_per_dim: Vec<f64>,
}

/// Computes diagnostics for one sampler and case and writes the report
/// files. Needs at least 2 chains for the PSRF.
pub fn cmd_diagnose(cfg: &ExperimentConfig, sampler_id: &str, case: usize) -> Result<CaseReport> {
    let manifest = load_testset(cfg)?;
    let tc = manifest
        .cases
        .get(case)
        .ok_or_else(|| Error::Config(format!("test case {case} out of range")))?;
    let run_dir = cfg.run_dir(sampler_id, case);
    let trace_path = run_dir.join("trace.csv");
    if !trace_path.exists() {
        return Err(Error::Config(format!("no traces at {}; run sample first", trace_path.display())));
    }
    let chains = read_trace_csv(&trace_path)?;
    if chains.len() < 2 {
        return Err(Error::Config("diagnostics need at least 2 chains for the psrf".into()));
    }
    let theta_star = ParamVector::new(tc.theta_star.clone());
    let report = match cfg.problem() {
        Problem::Room(m) => diagnose_case(cfg, &m, &chains, &theta_star, true)?,
        Problem::Tiles(m) => diagnose_case(cfg, &m, &chains, &theta_star, false)?,
    };

    let dir = cfg.report_dir(sampler_id, case);
    ensure_dir(&dir)?;
    let mut rows = Vec::new();
    for (i, &t) in report.checkpoints.iter().enumerate() {
        rows.push(MetricRow { metric: "acceptance_rate", checkpoint: t, value: report.ar[i] });
        rows.push(MetricRow { metric: "psrf_max", checkpoint: t, value: report.psrf_max[i] });
        rows.push(MetricRow { metric: "rmse", checkpoint: t, value: report.rmse[i] });
        if let Some(modes) = &report.modes_visited {
            rows.push(MetricRow {
                metric: "modes_visited",
                checkpoint: t,
                value: modes[i] as f64,
            });
        }
    }
    write_metrics_csv(&dir.join("metrics.csv"), &rows)?;

    // per-dimension autocorrelation of the first chain
    let space = match cfg.problem() {
        Problem::Room(m) => m.space().clone(),
        Problem::Tiles(m) => m.space().clone(),
    };
    let max_lag = cfg.diagnostics.acf_max_lag.min(chains[0].len().saturating_sub(1));
    let mut acf_rows = Vec::new();
    for d in 0..space.dims() {
        let acf = autocorrelation(&space, &chains[0], d, max_lag)?;
        acf_rows.push((d, acf.values));
    }
    write_acf_csv(&dir.join("acf.csv"), &acf_rows)?;

    let mut summary = String::new();
    summary.push_str(&format!("sampler: {sampler_id}  case: {case}\n"));
    summary.push_str(&format!("chains: {}  iterations: {}\n", chains.len(), chains[0].len() - 1));
    summary.push_str("checkpoint  acceptance  psrf_max  rmse");
    if report.modes_visited.is_some() {
        summary.push_str("  modes");
    }
    summary.push('\n');
    for (i, &t) in report.checkpoints.iter().enumerate() {
        summary.push_str(&format!(
            "{t:>10}  {:>10.4}  {:>8.4}  {:>8.5}",
            report.ar[i], report.psrf_max[i], report.rmse[i]
        ));
        if let Some(modes) = &report.modes_visited {
            summary.push_str(&format!("  {:>5}", modes[i]));
        }
        summary.push('\n');
    }
    let mut f = std::fs::File::create(dir.join("summary.txt"))?;
    f.write_all(summary.as_bytes())?;
    println!("{summary}");
    Ok(report)
}

/// Shared diagnostics across both problems.
pub fn diagnose_case<M: GenerativeModel>(
    cfg: &ExperimentConfig,
    model: &M,
    chains: &[Trace],
    theta_star: &ParamVector,
    count_modes: bool,
) -> Result<CaseReport> {
    let len = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let n_iter = len.saturating_sub(1);
    let n_cp = cfg.diagnostics.n_checkpoints.max(1);
    let checkpoints: Vec<usize> =
        (1..=n_cp).map(|i| (n_iter * i) / n_cp).filter(|&t| t >= 1).collect();
    let burn_in = ((n_iter as f64) * cfg.diagnostics.burn_in_frac) as usize;

    let mut ar = Vec::with_capacity(checkpoints.len());
    let mut psrf_series = Vec::with_capacity(checkpoints.len());
    for &t in &checkpoints {
        let pooled: f64 = chains
            .iter()
            .map(|c| acceptance_rate(c, 1..t + 1).unwrap_or(0.0))
            .sum::<f64>()
            / chains.len() as f64;
        ar.push(pooled);
        // psrf over the prefix up to t
        let prefixes: Vec<Trace> = chains
            .iter()
            .map(|c| Trace {
                thetas: c.thetas[..=t].to_vec(),
                logps: c.logps[..=t].to_vec(),
                accepted: c.accepted[..=t].to_vec(),
            })
            .collect();
        let v = if t >= 10 {
            psrf_max(model.space(), &prefixes).unwrap_or(f64::INFINITY)
        } else {
            f64::NAN
        };
        psrf_series.push(v);
    }

    let curve = rmse_curve(
        model,
        chains,
        theta_star,
        burn_in,
        cfg.diagnostics.rmse_stride,
        &checkpoints,
    )?;

    let modes = if count_modes {
        // mode enumeration is only defined for the room problem
        let room = RoomAccess::room_model(cfg)?;
        let mode_set = enumerate_room_modes(&room, theta_star)?;
        Some(modes_visited_curve(chains, &mode_set, &checkpoints))
    } else {
        None
    };

    let final_psrf_per_dim = (0..model.space().dims())
        .map(|d| psrf(model.space(), chains, d).unwrap_or(f64::INFINITY))
        .collect();

    Ok(CaseReport {
        checkpoints,
        ar,
        psrf_max: psrf_series,
        rmse: curve.values,
        modes_visited: modes,
        final_psrf_per_dim,
    })
}

struct RoomAccess;

impl RoomAccess {
    fn room_model(cfg: &ExperimentConfig) -> Result<informed_mcmc::renderers::RoomModel> {
        match cfg.problem() {
            Problem::Room(m) => Ok(m),
            Problem::Tiles(_) => Err(Error::Config("mode counting requires the room problem".into())),
        }
    }
}

/// Renders one parameter vector to an 8-bit preview image.
pub fn cmd_render(cfg: &ExperimentConfig, theta: &[f64], out: &Path) -> Result<()> {
    let theta = ParamVector::new(theta.to_vec());
    let img = match cfg.problem() {
        Problem::Room(m) => m.render(&theta)?,
        Problem::Tiles(m) => m.render(&theta)?,
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    write_preview(out, &img)?;
    println!("preview written to {}", out.display());
    Ok(())
}
