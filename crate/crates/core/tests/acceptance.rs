//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints one PASS/FAIL line regardless of output capture.

use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use annealfe::estimators::estimate;
use annealfe::experiments::certify::{run_certify_with, CheckSelection, VARIANCE_SLACK};
use annealfe::experiments::stats::{is_non_increasing, sign_test_p, smooth3};
use annealfe::experiments::{
    run_ape_sweep, run_ape_vs_k, run_experiment, run_free_energy_table, run_lnr_distribution, to_csv,
    CertifyReport, ExperimentConfig, ExperimentKind, ExperimentOutput, ModelFamily, SweepTable,
};
use annealfe::{BipartiteModel, KernelSpec, Method, RunConfig, Schedule};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn config(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig::defaults_for(kind)
}

fn max_deviation<'a>(report: &'a CertifyReport, prefix: &'a str) -> (f64, usize, usize) {
    let checks: Vec<_> = report.named(prefix).collect();
    let worst = checks.iter().map(|c| c.max_deviation).fold(0.0, f64::max);
    let failed = checks.iter().filter(|c| !c.pass).count();
    (worst, checks.len(), failed)
}

fn tiny_theorem_batch() -> (CertifyReport, Duration) {
    let cfg = ExperimentConfig {
        model_family: ModelFamily::Gaussian,
        sizes: (3, 3),
        inv_temperatures: vec![2.0],
        k_values: vec![1, 2, 3],
        n_instances: 50,
        seed: 101,
        ..config(ExperimentKind::TheoremCertify)
    };
    let start = Instant::now();
    let report = run_certify_with(&cfg, CheckSelection { moments: true, identities: false }).unwrap();
    (report, start.elapsed())
}

fn criterion_1(report: &CertifyReport, elapsed: Duration) -> Outcome {
    let (ais, n_ais, f_ais) = max_deviation(report, "unbiasedness_ais");
    let (mais, n_mais, f_mais) = max_deviation(report, "unbiasedness_mais");
    let pass = n_ais == 150 && n_mais == 150 && f_ais + f_mais == 0 && elapsed.as_secs() < 60;
    outcome(
        pass,
        format!("max relative |E[Z] - Z| / Z: ais {ais:.2e}, mais {mais:.2e} over {n_ais}+{n_mais} checks (limit 1e-8)"),
    )
}

fn criterion_2(report: &CertifyReport, elapsed: Duration) -> Outcome {
    let (worst, n, failed) = max_deviation(report, "variance_dominance");
    outcome(
        n == 150 && failed == 0 && elapsed.as_secs() < 60,
        format!("Var[Z_AIS] >= Var[Z_mAIS] in {}/{n} instance-K pairs, worst excess {worst:.2e} (relative slack {VARIANCE_SLACK:e})", n - failed),
    )
}

fn criterion_3(report: &CertifyReport, elapsed: Duration) -> Outcome {
    let (worst, n, failed) = max_deviation(report, "bias_ordering");
    outcome(
        n == 150 && failed == 0 && elapsed.as_secs() < 60,
        format!("E[F_AIS] >= E[F_mAIS] >= F in {}/{n} instance-K pairs, worst violation {worst:.2e} (slack 1e-10)", n - failed),
    )
}

fn criterion_4() -> Outcome {
    let cfg = ExperimentConfig {
        sizes: (3, 3),
        inv_temperatures: vec![2.0],
        k_values: vec![1, 2, 3],
        n_instances: 20,
        seed: 104,
        ..config(ExperimentKind::TheoremCertify)
    };
    let start = Instant::now();
    let report = run_certify_with(&cfg, CheckSelection { moments: false, identities: true }).unwrap();
    let elapsed = start.elapsed();
    let (fact, n_fact, f_fact) = max_deviation(&report, "marginal_factorization");
    let (rb, n_rb, f_rb) = max_deviation(&report, "rao_blackwell_identity");
    let (gap, _, f_gap) = max_deviation(&report, "variance_gap");
    let pass = n_fact == 60
        && n_rb == 60
        && fact <= 1e-10
        && rb <= 1e-10
        && f_fact + f_rb + f_gap == 0
        && report.skipped.is_empty()
        && elapsed.as_secs() < 120;
    outcome(
        pass,
        format!("factorization max dev {fact:.2e}, Rao-Blackwell max dev {rb:.2e}, variance gap rel dev {gap:.2e} on 20 instances x K in 1..=3"),
    )
}

fn cell_pair<'a>(table: &'a SweepTable, kernel: &str, k: usize, inv_temp: f64) -> (&'a annealfe::experiments::sweeps::CellSummary, &'a annealfe::experiments::sweeps::CellSummary) {
    (
        table.cell("ais", kernel, k, inv_temp).expect("ais cell"),
        table.cell("mais_v", kernel, k, inv_temp).expect("mais cell"),
    )
}

fn criterion_5() -> Outcome {
    let cfg = ExperimentConfig {
        sizes: (20, 40),
        inv_temperatures: vec![0.2],
        k_values: vec![10],
        n_sequences: 1000,
        n_instances: 200,
        n_trials: 1,
        seed: 105,
        ..config(ExperimentKind::FreeEnergyTable)
    };
    let table = run_free_energy_table(&cfg).unwrap();
    let (ais, mais) = cell_pair(&table, "blocked_gibbs", 10, 0.2);
    let anchor = (ais.mean_f_true - (-0.69759)).abs();
    let d_ais = (ais.mean_f_app - ais.mean_f_true).abs();
    let d_mais = (mais.mean_f_app - mais.mean_f_true).abs();
    outcome(
        ais.n_instances >= 200 && anchor < 0.002 && d_ais < 1e-4 && d_mais < 1e-4,
        format!(
            "mean true f {:.5} (|diff from -0.69759| {anchor:.1e}), |mean f_app - mean f| ais {d_ais:.1e}, mais {d_mais:.1e} over {} instances",
            ais.mean_f_true, ais.n_instances
        ),
    )
}

fn paired_sign_test(table: &SweepTable, kernel: &str, k: usize, inv_temp: f64) -> (u64, u64, f64) {
    let pick = |method: &str| {
        let mut rows: Vec<_> = table
            .rows
            .iter()
            .filter(|r| r.method == method && r.kernel == kernel && r.k == k && r.inv_temp == inv_temp)
            .map(|r| (r.instance_index, r.ape))
            .collect();
        rows.sort_by_key(|r| r.0);
        rows
    };
    let (ais, mais) = (pick("ais"), pick("mais_v"));
    let mut wins = 0;
    let mut losses = 0;
    for (a, m) in ais.iter().zip(&mais) {
        assert_eq!(a.0, m.0);
        if m.1 < a.1 {
            wins += 1;
        } else if m.1 > a.1 {
            losses += 1;
        }
    }
    (wins, losses, sign_test_p(wins, losses))
}

fn criterion_6() -> Outcome {
    let cfg = ExperimentConfig {
        sizes: (20, 40),
        inv_temperatures: vec![1.0, 2.0, 4.0],
        k_values: vec![10, 30],
        n_sequences: 1000,
        n_instances: 100,
        seed: 106,
        ..config(ExperimentKind::ApeVsTemperature)
    };
    let table = run_ape_sweep(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for &inv_temp in &cfg.inv_temperatures {
        for &k in &cfg.k_values {
            let (ais, mais) = cell_pair(&table, "blocked_gibbs", k, inv_temp);
            let (wins, losses, p) = paired_sign_test(&table, "blocked_gibbs", k, inv_temp);
            pass &= mais.mean_ape < ais.mean_ape && p < 0.01 && ais.n_instances >= 100;
            parts.push(format!(
                "1/T={inv_temp} K={k}: {:.3}% vs {:.3}% ({wins}-{losses}, p={p:.1e})",
                mais.mean_ape, ais.mean_ape
            ));
        }
    }
    outcome(pass, format!("mean APE mAIS vs AIS: {}", parts.join("; ")))
}

fn criterion_7() -> Outcome {
    let cfg = ExperimentConfig {
        sizes: (20, 40),
        inv_temperatures: vec![1.0],
        k_values: vec![30],
        alpha_values: vec![0.5, 1.0, 2.0, 4.0],
        n_sequences: 1000,
        n_instances: 500,
        seed: 3,
        ..config(ExperimentKind::LnrDistribution)
    };
    let report = run_lnr_distribution(&cfg).unwrap();
    let medians: Vec<f64> = cfg
        .alpha_values
        .iter()
        .map(|&a| report.summary_for(a).unwrap().median)
        .collect();
    let sentinels: usize = report.summary.iter().map(|s| s.n_sentinels).sum();
    let counts_ok = report.summary.iter().all(|s| s.n_instances >= 500);
    let increasing = medians.windows(2).all(|w| w[1] > w[0]);
    outcome(
        increasing && counts_ok,
        format!(
            "median ln r for alpha {:?}: {:?} ({} sentinels)",
            cfg.alpha_values,
            medians.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>(),
            sentinels
        ),
    )
}

fn criterion_8() -> Outcome {
    let cfg = ExperimentConfig {
        model_family: ModelFamily::Hopfield,
        sizes: (20, 40),
        inv_temperatures: vec![2.0],
        k_values: vec![8, 16, 32, 64, 128],
        n_sequences: 1000,
        n_instances: 40,
        kernel: KernelSpec::mh_augmented(1),
        seed: 4,
        ..config(ExperimentKind::ApeVsK)
    };
    let table = run_ape_vs_k(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for kernel in ["blocked_gibbs", "mh_augmented:1"] {
        let curve = |method: &str| -> Vec<f64> {
            cfg.k_values
                .iter()
                .map(|&k| table.cell(method, kernel, k, 2.0).unwrap().mean_ape)
                .collect()
        };
        let (ais, mais) = (curve("ais"), curve("mais_v"));
        let ok_trend = is_non_increasing(&smooth3(&ais)) && is_non_increasing(&smooth3(&mais));
        let ok_order = ais.iter().zip(&mais).all(|(a, m)| m <= a);
        pass &= ok_trend && ok_order;
        let fmt = |xs: &[f64]| xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
        parts.push(format!("{kernel}: ais [{}] mais [{}]", fmt(&ais), fmt(&mais)));
    }
    outcome(pass, format!("mean APE over K {:?}: {}", cfg.k_values, parts.join("; ")))
}

fn criterion_9() -> Outcome {
    let mut runs = 0;
    let mut failures = 0;
    for (nv, nh) in [(1, 1), (4, 7), (9, 3), (20, 40)] {
        let model = BipartiteModel::zeros(nv, nh, 1.0).unwrap();
        for k in [1, 3, 25] {
            let schedule = Schedule::linear(k).unwrap();
            for method in [Method::Ais, Method::MaisV, Method::MaisH, Method::Auto] {
                for spec in [KernelSpec::blocked_gibbs(), KernelSpec::mh_augmented(1), KernelSpec::mh_augmented(3)] {
                    for n in [1, 10, 200] {
                        let r = estimate(&model, &schedule, &RunConfig::new(n, method, spec, 9)).unwrap();
                        let first = r.log_weights[0];
                        let zero_variance = r.log_weights.iter().all(|&w| w == first);
                        runs += 1;
                        if r.per_variable_free_energy != -LN_2 || !zero_variance {
                            failures += 1;
                        }
                    }
                }
            }
        }
    }
    outcome(
        failures == 0,
        format!("{} of {runs} zero-model runs gave f_app == -ln 2 exactly with identical weights", runs - failures),
    )
}

fn output_bytes(output: &ExperimentOutput) -> Vec<String> {
    match output {
        ExperimentOutput::Sweep(t) => vec![to_csv(&t.rows).unwrap(), to_csv(&t.summary).unwrap()],
        ExperimentOutput::Lnr(r) => vec![
            to_csv(&r.table.rows).unwrap(),
            to_csv(&r.records).unwrap(),
            to_csv(&r.kde).unwrap(),
        ],
        ExperimentOutput::Certify(c) => vec![serde_json::to_string(c).unwrap()],
    }
}

fn criterion_10() -> Outcome {
    let base = |kind| ExperimentConfig {
        sizes: (6, 8),
        inv_temperatures: vec![0.5, 2.0],
        k_values: vec![3, 9],
        n_sequences: 64,
        n_instances: 6,
        n_trials: 2,
        alpha_values: vec![0.5, 1.0],
        seed: 110,
        ..config(kind)
    };
    let configs = vec![
        base(ExperimentKind::ApeVsTemperature),
        base(ExperimentKind::FreeEnergyTable),
        base(ExperimentKind::LnrDistribution),
        ExperimentConfig {
            model_family: ModelFamily::Hopfield,
            ..base(ExperimentKind::ApeVsK)
        },
        ExperimentConfig {
            model_family: ModelFamily::Grid,
            sizes: (3, 4),
            ..base(ExperimentKind::ApeVsTemperature)
        },
        ExperimentConfig {
            sizes: (2, 3),
            ..base(ExperimentKind::TheoremCertify)
        },
    ];
    let mut identical = 0;
    for cfg in &configs {
        let runs: Vec<Vec<String>> = [1, 1, 3]
            .iter()
            .map(|&threads| {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
                pool.install(|| output_bytes(&run_experiment(cfg).unwrap()))
            })
            .collect();
        if runs[0] == runs[1] && runs[0] == runs[2] {
            identical += 1;
        }
    }
    outcome(
        identical == configs.len(),
        format!("{identical} of {} experiment kinds/families byte-identical across reruns and 1 vs 3 workers", configs.len()),
    )
}

fn report(number: usize, name: &str, start: Instant, o: Outcome) -> bool {
    println!(
        "[{}] criterion {number:>2} {name}: {} ({:.1}s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        start.elapsed().as_secs_f64()
    );
    o.pass
}

type Step = (&'static str, fn() -> Outcome);

fn main() {
    // cargo passes harness flags such as --list; answer them without running
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut all = true;

    let start = Instant::now();
    let (batch, elapsed) = tiny_theorem_batch();
    all &= report(1, "exact unbiasedness", start, criterion_1(&batch, elapsed));
    all &= report(2, "exact variance dominance", start, criterion_2(&batch, elapsed));
    all &= report(3, "exact bias ordering", start, criterion_3(&batch, elapsed));

    let steps: Vec<Step> = vec![
        ("factorization and Rao-Blackwell identities", criterion_4),
        ("free-energy table anchor", criterion_5),
        ("APE ordering across temperatures", criterion_6),
        ("ln r shift with layer ratio", criterion_7),
        ("APE convergence in K", criterion_8),
        ("zero-model exactness", criterion_9),
        ("determinism", criterion_10),
    ];
    for (i, (name, f)) in steps.into_iter().enumerate() {
        let start = Instant::now();
        all &= report(i + 4, name, start, f());
    }

    if !all {
        println!("acceptance: some criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
