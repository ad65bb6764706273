use informed_mcmc::diagnostics::*;
use informed_mcmc::features::RectExtractor;
use informed_mcmc::model::GenerativeModel;
use informed_mcmc::proposal::{train_proposal, EstimatorKind, TrainConfig};
use informed_mcmc::renderers::{make_observation, TilesModel};
use informed_mcmc::rng::derive_rng;
use informed_mcmc::samplers::{run_experiment, SamplerSpec};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_train: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(50000);
    let k: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(1000);
    let n_iter: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(5000);
    let n_cases: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(2);

    let model = TilesModel::new(100, 100, 0.02);
    let rects = RectExtractor::new(100, 100);
    let t0 = Instant::now();
    let cfg = TrainConfig { n: n_train, k, estimator: EstimatorKind::KmeansKde, seed: 4321, forest: Default::default() };
    let trained = train_proposal(&model, &rects, &cfg).unwrap();
    println!("train: {:.1}s", t0.elapsed().as_secs_f64());

    let specs = vec![
        SamplerSpec::Mh { sigma: 1.1 },
        SamplerSpec::Mhwg { sigma: 0.9 },
        SamplerSpec::Bmhwg { sigma: 0.7 },
        SamplerSpec::InfMh { sigma: 1.1, alpha: 0.8 },
        SamplerSpec::InfBmhwg { sigma: 0.7, alpha: 0.8 },
    ];
    for case in 0..n_cases {
        let mut rng = derive_rng(77, "testcase", case as u64);
        let theta_star = model.prior_sample(&mut rng);
        let obs = make_observation(&model, &theta_star, &mut rng).unwrap();
        println!("case {case}:");
        for spec in &specs {
            let t1 = Instant::now();
            let set = run_experiment(&model, &obs, spec, Some(&trained), n_iter, 4, 23).unwrap();
            let ar: f64 = set.chains.iter().map(|c| acceptance_rate(c, 1..c.len()).unwrap()).sum::<f64>() / 4.0;
            let psrf = psrf_max(model.space(), &set.chains).unwrap();
            let curve = rmse_curve(&model, &set.chains, &theta_star, n_iter/5, 10, &[n_iter]).unwrap();
            println!("  {:10} ar {:.4} psrf {:8.3} rmse {:.5} renders {} ({:.1}s)",
                spec.id(), ar, psrf, curve.values[0], set.renders, t1.elapsed().as_secs_f64());
        }
    }
}
