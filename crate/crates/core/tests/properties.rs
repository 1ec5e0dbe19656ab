mod common;

use annealfe::annealing::{log_lambda_k, log_w_k};
use annealfe::experiments::kde::{kde_gaussian, linspace, trapezoid};
use annealfe::kernels::{exact_kernel_matrix, StateSpace};
use annealfe::logspace::{ln_2cosh, logmeanexp, LogSumExp};
use annealfe::mrf::{exact_log_z, exact_log_z_enumerating, DEFAULT_ENUMERATION_CAP};
use annealfe::oracle::{exact_estimator_moments, exact_f_expectation_n1};
use annealfe::rng::derive_seed;
use annealfe::{BipartiteModel, KernelSpec, Layer, Method, Schedule, SpinState};
use common::*;
use proptest::prelude::*;

fn model_strategy(max_v: usize, max_h: usize) -> impl Strategy<Value = BipartiteModel> {
    (1..=max_v, 1..=max_h, 0.3f64..2.0).prop_flat_map(|(nv, nh, t)| {
        (
            prop::collection::vec(-1.5f64..1.5, nv),
            prop::collection::vec(-1.5f64..1.5, nh),
            prop::collection::vec(-1.5f64..1.5, nv * nh),
        )
            .prop_map(move |(b, c, w)| BipartiteModel::from_flat(b, c, w, t).unwrap())
    })
}

fn schedule_strategy() -> impl Strategy<Value = Schedule> {
    prop::collection::vec(0.01f64..1.0, 0..4).prop_map(|mut inner| {
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        let mut betas = vec![0.0];
        betas.extend(inner.into_iter().filter(|&b| b < 1.0));
        betas.push(1.0);
        Schedule::new(betas).unwrap()
    })
}

fn spec_strategy() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![Just(KernelSpec::blocked_gibbs()), (1u32..4).prop_map(KernelSpec::mh_augmented)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn spin_index_round_trip(len in 1usize..20, raw in any::<usize>()) {
        let index = raw & ((1 << len) - 1);
        let s = SpinState::from_index(index, len, Layer::Joint);
        prop_assert_eq!(s.to_index(), index);
        prop_assert!(s.values().iter().all(|&x| x == 1 || x == -1));
    }

    #[test]
    fn logmeanexp_is_shift_equivariant_and_bounded(
        xs in prop::collection::vec(-50.0f64..50.0, 1..64),
        c in -500.0f64..500.0,
    ) {
        let base = logmeanexp(&xs).unwrap();
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        prop_assert!((logmeanexp(&shifted).unwrap() - (base + c)).abs() < 1e-9 * (1.0 + c.abs()));
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(base >= lo - 1e-12 && base <= hi + 1e-12);
    }

    #[test]
    fn streaming_log_sum_exp_merges(xs in prop::collection::vec(-30.0f64..30.0, 1..40), split in 0usize..40) {
        let split = split.min(xs.len());
        let mut whole = LogSumExp::new();
        xs.iter().for_each(|&x| whole.add(x));
        let mut a = LogSumExp::new();
        let mut b = LogSumExp::new();
        xs[..split].iter().for_each(|&x| a.add(x));
        xs[split..].iter().for_each(|&x| b.add(x));
        a.merge(&b);
        prop_assert!((a.value() - whole.value()).abs() < 1e-12 * whole.value().abs().max(1.0));
        prop_assert!((whole.value() - log_sum_exp(&xs)).abs() < 1e-12 * whole.value().abs().max(1.0));
    }

    #[test]
    fn ln_2cosh_is_even_and_accurate(x in -700.0f64..700.0) {
        prop_assert_eq!(ln_2cosh(x), ln_2cosh(-x));
        let direct = x.abs() + (1.0 + (-2.0 * x.abs()).exp()).ln();
        prop_assert!((ln_2cosh(x) - direct).abs() < 1e-12 * direct.max(1.0));
    }

    #[test]
    fn marginal_energy_matches_enumeration(m in model_strategy(4, 4), beta in 0.0f64..=1.0, raw in any::<usize>()) {
        let (nv, nh) = (m.num_visible(), m.num_hidden());
        let vi = raw % (1 << nv);
        let terms: Vec<f64> = (0..1usize << nh)
            .map(|hi| -beta * naive_energy(&m, &spins(vi, nv), &spins(hi, nh)))
            .collect();
        let e = m.marginal_energy_v(beta, &state(vi, nv, Layer::Visible)).unwrap();
        prop_assert!((e + log_sum_exp(&terms)).abs() < 1e-10);
    }

    #[test]
    fn log_z_is_layer_invariant(m in model_strategy(6, 6), beta in 0.0f64..=1.0) {
        let v = exact_log_z_enumerating(&m, beta, Layer::Visible, DEFAULT_ENUMERATION_CAP).unwrap();
        let h = exact_log_z_enumerating(&m, beta, Layer::Hidden, DEFAULT_ENUMERATION_CAP).unwrap();
        prop_assert!((v - h).abs() < 1e-10);
    }

    #[test]
    fn transposing_swaps_layers(m in model_strategy(4, 4), raw_v in any::<usize>(), raw_h in any::<usize>()) {
        let (nv, nh) = (m.num_visible(), m.num_hidden());
        let v = state(raw_v % (1 << nv), nv, Layer::Visible);
        let h = state(raw_h % (1 << nh), nh, Layer::Hidden);
        let t = m.transposed();
        let ht = SpinState::new(h.values().to_vec(), Layer::Visible).unwrap();
        let vt = SpinState::new(v.values().to_vec(), Layer::Hidden).unwrap();
        prop_assert!((m.energy(&v, &h).unwrap() - t.energy(&ht, &vt).unwrap()).abs() < 1e-12);
        prop_assert_eq!(t.transposed(), m);
    }

    #[test]
    fn weights_telescope_to_the_energy(m in model_strategy(4, 4), schedule in schedule_strategy(), raw in any::<usize>()) {
        let (nv, nh) = (m.num_visible(), m.num_hidden());
        let v = state(raw % (1 << nv), nv, Layer::Visible);
        let h = state((raw >> 8) % (1 << nh), nh, Layer::Hidden);
        let total: f64 = (1..=schedule.num_steps()).map(|k| log_w_k(&m, &schedule, k, &v, &h).unwrap()).sum();
        prop_assert!((total + m.energy(&v, &h).unwrap()).abs() < 1e-10);
        let lambda_total: f64 = (1..=schedule.num_steps()).map(|k| log_lambda_k(&m, &schedule, k, &v).unwrap()).sum();
        prop_assert!((lambda_total + m.marginal_energy_v(1.0, &v).unwrap() - m.marginal_energy_v(0.0, &v).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn kernels_are_stochastic_and_stationary(
        m in model_strategy(3, 3),
        schedule in schedule_strategy(),
        spec in spec_strategy(),
        level in 0usize..8,
    ) {
        let k = level % (schedule.num_steps() + 1);
        let beta = schedule.beta(k);
        let tau = exact_kernel_matrix(&m, &schedule, k, &spec, StateSpace::Visible).unwrap();
        prop_assert!(tau.max_row_sum_error() < 1e-12);
        prop_assert!(tau.stationarity_error(&visible_marginal(&m, beta)) < 1e-10);
        let joint = exact_kernel_matrix(&m, &schedule, k, &spec, StateSpace::Joint).unwrap();
        prop_assert!(joint.stationarity_error(&joint_distribution(&m, beta)) < 1e-10);
    }

    #[test]
    fn theorems_hold_on_random_tiny_models(
        m in model_strategy(3, 3),
        schedule in schedule_strategy(),
        spec in spec_strategy(),
    ) {
        let z = exact_log_z(&m, 1.0).unwrap().exp();
        let ais = exact_estimator_moments(&m, &schedule, &spec, Method::Ais).unwrap();
        let mais = exact_estimator_moments(&m, &schedule, &spec, Method::MaisV).unwrap();
        prop_assert!((ais.mean_z - z).abs() <= 1e-8 * z);
        prop_assert!((mais.mean_z - z).abs() <= 1e-8 * z);
        prop_assert!(ais.variance_z + 1e-12 * ais.variance_z.max(1.0) >= mais.variance_z);
        let f = -z.ln();
        let fa = exact_f_expectation_n1(&m, &schedule, &spec, Method::Ais).unwrap();
        let fm = exact_f_expectation_n1(&m, &schedule, &spec, Method::MaisV).unwrap();
        prop_assert!(fa - fm >= -1e-10 && fm - f >= -1e-10, "fa={} fm={} f={}", fa, fm, f);
    }

    #[test]
    fn kde_is_normalized(samples in prop::collection::vec(-2.0f64..2.0, 1..50), bw in 0.05f64..1.0) {
        let grid = linspace(-2.0 - 8.0 * bw, 2.0 + 8.0 * bw, 4001);
        let d = kde_gaussian(&samples, bw, &grid).unwrap();
        prop_assert!((trapezoid(&grid, &d) - 1.0).abs() < 1e-3);
        prop_assert!(d.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn seed_derivation_is_a_function_of_its_path(base in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        prop_assert_eq!(derive_seed(base, &[a, b]), derive_seed(base, &[a, b]));
        if a != b {
            prop_assert_ne!(derive_seed(base, &[a]), derive_seed(base, &[b]));
        }
    }

    #[test]
    fn schedules_reject_bad_endpoints(betas in prop::collection::vec(-0.5f64..1.5, 2..6)) {
        let valid = betas[0] == 0.0
            && *betas.last().unwrap() == 1.0
            && betas.windows(2).all(|w| w[1] > w[0]);
        prop_assert_eq!(Schedule::new(betas).is_ok(), valid);
    }
}
