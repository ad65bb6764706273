use informed_mcmc::diagnostics::*;
use informed_mcmc::features::{FeatureExtractor, HogExtractor};
use informed_mcmc::model::GenerativeModel;
use informed_mcmc::proposal::{train_proposal, EstimatorKind, TrainConfig};
use informed_mcmc::renderers::{make_observation, RoomModel};
use informed_mcmc::rng::derive_rng;
use informed_mcmc::samplers::{run_experiment, SamplerSpec};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_train: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(20000);
    let k: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(500);
    let n_iter: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(10000);
    let n_cases: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(2);

    let model = RoomModel::new(64, 64, 0.02);
    let hog = HogExtractor::new(9, 16, 64, 64).unwrap();
    let t0 = Instant::now();
    let cfg = TrainConfig { n: n_train, k, estimator: EstimatorKind::KmeansKde, seed: 1234, forest: Default::default() };
    let trained = train_proposal(&model, &hog, &cfg).unwrap();
    println!("train: {:.1}s", t0.elapsed().as_secs_f64());

    let specs = vec![
        SamplerSpec::Mh { sigma: 0.3 },
        SamplerSpec::Mhwg { sigma: 0.3 },
        SamplerSpec::Pt { sigma: 0.3, temperatures: vec![1.0, 3.0, 27.0] },
        SamplerSpec::InfMh { sigma: 0.3, alpha: 0.7 },
        SamplerSpec::InfIndMh,
    ];
    for case in 0..n_cases {
        let mut rng = derive_rng(99, "testcase", case as u64);
        let theta_star = model.prior_sample(&mut rng);
        let obs = make_observation(&model, &theta_star, &mut rng).unwrap();
        let modes = enumerate_room_modes(&model, &theta_star).unwrap();
        println!("case {case}: modes {}", modes.len());
        for spec in &specs {
            let t1 = Instant::now();
            let set = run_experiment(&model, &obs, spec, Some(&trained), n_iter, 4, 17).unwrap();
            let ar: f64 = set.chains.iter().map(|c| acceptance_rate(c, 1..c.len()).unwrap()).sum::<f64>() / 4.0;
            let psrf = psrf_max(model.space(), &set.chains).unwrap();
            let mv = modes_visited(&set.chains, &modes, n_iter);
            let curve = rmse_curve(&model, &set.chains, &theta_star, n_iter/5, 10, &[n_iter]).unwrap();
            println!("  {:10} ar {:.4} psrf {:8.3} modes {:2} rmse {:.5} renders {} ({:.1}s)",
                spec.id(), ar, psrf, mv, curve.values[0], set.renders, t1.elapsed().as_secs_f64());
        }
    }
}
