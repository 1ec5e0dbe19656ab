mod common;

use annealfe::estimators::{
    accuracy_ratio, ape, estimate, logmeanexp, run_ais, run_mais, AccuracyRatio,
};
use annealfe::mrf::exact_log_z;
use annealfe::{BipartiteModel, KernelSpec, Method, RngStream, RunConfig, Schedule};
use common::*;
use rand::Rng;
use std::f64::consts::LN_2;

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `ln mean exp(x)` with double-double accumulation.
fn logmeanexp_dd(xs: &[f64]) -> f64 {
    let shift = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut hi, mut lo) = (0.0, 0.0);
    for &x in xs {
        let (s, e) = two_sum(hi, (x - shift).exp());
        hi = s;
        lo += e;
    }
    shift + (hi + lo).ln() - (xs.len() as f64).ln()
}

#[test]
fn logmeanexp_matches_double_double_oracle() {
    let mut rng = RngStream::new(77, 0);
    for scale in [1.0, 30.0, 600.0] {
        let xs: Vec<f64> = (0..1000).map(|_| rng.random_range(-scale..scale)).collect();
        let got = logmeanexp(&xs).unwrap();
        let oracle = logmeanexp_dd(&xs);
        assert!((got - oracle).abs() <= 1e-12 * oracle.abs().max(1.0), "{got} vs {oracle}");
    }
    assert_eq!(logmeanexp(&[3.25; 17]).unwrap(), 3.25);
    assert!(logmeanexp(&[]).is_err());
    assert!(logmeanexp(&[1.0, f64::NAN]).is_err());
}

fn z_hat_stats(model: &BipartiteModel, method: Method, spec: KernelSpec, k: usize, n: usize, seed: u64) -> (f64, f64) {
    let schedule = Schedule::linear(k).unwrap();
    let r = estimate(model, &schedule, &RunConfig::new(n, method, spec, seed)).unwrap();
    let z: Vec<f64> = r.log_weights.iter().map(|w| (w + r.log_z0).exp()).collect();
    let mean = z.iter().sum::<f64>() / n as f64;
    let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

#[test]
fn sample_mean_of_z_is_unbiased() {
    let m = random_model(3, 3, 1.0, 0.8, 40);
    let exact = exact_log_z(&m, 1.0).unwrap().exp();
    for method in [Method::Ais, Method::MaisV, Method::MaisH] {
        for spec in [KernelSpec::blocked_gibbs(), KernelSpec::mh_augmented(1)] {
            let (mean, se) = z_hat_stats(&m, method, spec, 3, 100_000, 12);
            assert!((mean - exact).abs() < 3.0 * se, "{method:?} {spec:?}: {mean} vs {exact} (se {se})");
        }
    }
}

#[test]
fn mais_variance_is_lower_over_repeated_runs() {
    let m = random_model(3, 3, 1.2, 0.7, 41);
    let schedule = Schedule::linear(3).unwrap();
    let spread = |method: Method| {
        let zs: Vec<f64> = (0..200)
            .map(|run| {
                let cfg = RunConfig::new(50, method, KernelSpec::blocked_gibbs(), 1000 + run);
                estimate(&m, &schedule, &cfg).unwrap().log_z_estimate.exp()
            })
            .collect();
        let mean = zs.iter().sum::<f64>() / zs.len() as f64;
        zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (zs.len() as f64 - 1.0)
    };
    let (ais, mais) = (spread(Method::Ais), spread(Method::MaisV));
    assert!(mais <= ais, "mais {mais} ais {ais}");
}

#[test]
fn free_energy_estimates_are_upper_biased() {
    let m = random_model(4, 4, 1.0, 0.6, 42);
    let f_exact = -exact_log_z(&m, 1.0).unwrap();
    let schedule = Schedule::linear(4).unwrap();
    for method in [Method::Ais, Method::MaisV] {
        let fs: Vec<f64> = (0..200)
            .map(|run| {
                let cfg = RunConfig::new(20, method, KernelSpec::blocked_gibbs(), 5000 + run);
                estimate(&m, &schedule, &cfg).unwrap().free_energy_estimate
            })
            .collect();
        let mean = fs.iter().sum::<f64>() / 200.0;
        let se = (fs.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / 199.0 / 200.0).sqrt();
        assert!(mean >= f_exact - 3.0 * se, "{method:?}: {mean} < {f_exact} - 3 * {se}");
    }
}

#[test]
fn identical_configs_give_identical_results() {
    let m = random_model(5, 8, 1.0, 0.9, 43);
    let schedule = Schedule::linear(6).unwrap();
    for method in [Method::Ais, Method::MaisV, Method::MaisH, Method::Auto] {
        let cfg = RunConfig::new(64, method, KernelSpec::mh_augmented(2), 9);
        let a = estimate(&m, &schedule, &cfg).unwrap();
        let b = estimate(&m, &schedule, &cfg).unwrap();
        assert_eq!(a.log_weights, b.log_weights);
        assert_eq!(a.log_z_estimate.to_bits(), b.log_z_estimate.to_bits());
        let c = estimate(&m, &schedule, &RunConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.log_weights, c.log_weights);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let m = random_model(6, 9, 1.0, 0.9, 44);
    let schedule = Schedule::linear(5).unwrap();
    let cfg = RunConfig::new(300, Method::Ais, KernelSpec::blocked_gibbs(), 3);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate(&m, &schedule, &cfg).unwrap().log_weights)
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn hidden_marginal_run_is_the_visible_run_on_the_transpose() {
    let m = random_model(4, 6, 1.0, 1.1, 45);
    let schedule = Schedule::linear(5).unwrap();
    let spec = KernelSpec::mh_augmented(1);
    let h = run_mais(&m, &schedule, &RunConfig::new(100, Method::MaisH, spec, 8)).unwrap();
    let v = run_mais(&m.transposed(), &schedule, &RunConfig::new(100, Method::MaisV, spec, 8)).unwrap();
    assert_eq!(h.log_weights, v.log_weights);
    assert_eq!(h.method, Method::MaisH);
}

#[test]
fn auto_marginalizes_the_larger_layer() {
    let wide = random_model(3, 5, 1.0, 1.0, 0);
    let tall = random_model(5, 3, 1.0, 1.0, 0);
    let square = random_model(4, 4, 1.0, 1.0, 0);
    assert_eq!(Method::Auto.resolve(&wide), Method::MaisV);
    assert_eq!(Method::Auto.resolve(&tall), Method::MaisH);
    assert_eq!(Method::Auto.resolve(&square), Method::MaisV);
    assert_eq!("mais".parse::<Method>().unwrap(), Method::MaisV);
}

#[test]
fn run_result_is_internally_consistent() {
    let m = random_model(4, 5, 1.0, 0.8, 46);
    let schedule = Schedule::linear(4).unwrap();
    for method in [Method::Ais, Method::MaisV] {
        let r = estimate(&m, &schedule, &RunConfig::new(77, method, KernelSpec::blocked_gibbs(), 1)).unwrap();
        let lme = logmeanexp(&r.log_weights).unwrap();
        assert_eq!(r.free_energy_estimate, -r.log_z0 - lme);
        assert_eq!(r.log_z0, 9.0 * LN_2);
        assert_eq!(r.n_sequences, 77);
        assert!(r.effective_sample_size >= 1.0 - 1e-12 && r.effective_sample_size <= 77.0 + 1e-9);
        let json: serde_json::Value = serde_json::from_str(&r.to_json(true).unwrap()).unwrap();
        assert_eq!(json["log_weights"].as_array().unwrap().len(), 77);
        let json: serde_json::Value = serde_json::from_str(&r.to_json(false).unwrap()).unwrap();
        assert!(json.get("log_weights").is_none());
    }
}

#[test]
fn zero_model_is_exact_for_every_configuration() {
    for (nv, nh) in [(1, 1), (3, 5), (6, 2)] {
        let m = BipartiteModel::zeros(nv, nh, 1.0).unwrap();
        for k in [1, 2, 7] {
            let schedule = Schedule::linear(k).unwrap();
            for method in [Method::Ais, Method::MaisV, Method::MaisH, Method::Auto] {
                for spec in [KernelSpec::blocked_gibbs(), KernelSpec::mh_augmented(2)] {
                    for n in [1, 5, 40] {
                        let r = estimate(&m, &schedule, &RunConfig::new(n, method, spec, 4)).unwrap();
                        assert_eq!(r.per_variable_free_energy, -LN_2);
                        assert!(r.log_weights.iter().all(|&w| w == 0.0));
                    }
                }
            }
        }
    }
}

#[test]
fn ais_and_mais_entry_points_check_method() {
    let m = random_model(2, 2, 1.0, 1.0, 0);
    let schedule = Schedule::linear(2).unwrap();
    assert!(run_ais(&m, &schedule, &RunConfig::new(4, Method::MaisV, KernelSpec::blocked_gibbs(), 0)).is_err());
    assert!(run_mais(&m, &schedule, &RunConfig::new(4, Method::Ais, KernelSpec::blocked_gibbs(), 0)).is_err());
    assert!(estimate(&m, &schedule, &RunConfig::new(0, Method::Ais, KernelSpec::blocked_gibbs(), 0)).is_err());
}

#[test]
fn ape_and_ratio_hand_values() {
    let truth = -0.69759;
    let est = -0.69;
    assert!((ape(truth, est).unwrap() - 100.0 * 0.00759 / 0.69759).abs() < 1e-12);
    assert!(ape(0.0, 1.0).is_err());
    assert!(accuracy_ratio(-1.0, -0.9, -1.1).unwrap().ln().unwrap().abs() < 1e-12);
    let r = accuracy_ratio(-1.0, -0.8, -0.9).unwrap();
    assert!((r.ln().unwrap() - LN_2).abs() < 1e-12);
    assert_eq!(accuracy_ratio(-1.0, -0.8, -1.0).unwrap(), AccuracyRatio::Unbounded);
    assert_eq!(AccuracyRatio::Unbounded.ln(), None);
}
