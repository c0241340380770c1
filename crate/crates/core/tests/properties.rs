mod common;

use proptest::prelude::*;

use common::{candidate_partitions, fd_gradient, least_squares, random_dataset};
use waveshape::baseline::{batch_gradient, init_baseline, train_lms, LmsConfig};
use waveshape::data::{generate, permute_patterns, Dataset, Generator, SyntheticSpec};
use waveshape::grouping::{
    canonical_order, score_partition, search_exhaustive, search_greedy, GroupingConfig, TIE_TOLERANCE,
};
use waveshape::model::{fit_group, train};
use waveshape::rng::SeededRng;
use waveshape::shape::shape_change_average;

fn dataset_strategy(max_arity: usize, max_patterns: usize) -> impl Strategy<Value = Dataset> {
    (1..=max_arity, 2..=max_patterns, any::<u64>()).prop_map(|(arity, n, seed)| {
        let mut rng = SeededRng::new(seed);
        random_dataset(&mut rng, arity, n)
    })
}

fn quantized_dataset_strategy() -> impl Strategy<Value = Dataset> {
    // Coarse values make exact ties common.
    (1usize..=4, 2usize..=6, any::<u64>()).prop_map(|(arity, n, seed)| {
        let mut rng = SeededRng::new(seed);
        let rows: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|_| {
                let inputs = (0..arity).map(|_| rng.index_below(3) as f64).collect();
                (inputs, rng.index_below(3) as f64)
            })
            .collect();
        Dataset::from_rows(&rows).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn exhaustive_matches_brute_force_minimum(ds in dataset_strategy(4, 8), allow_drop in any::<bool>()) {
        let config = GroupingConfig { allow_drop, ..GroupingConfig::default() };
        let arranged = canonical_order(&ds);
        let best = candidate_partitions(ds.arity(), allow_drop)
            .iter()
            .map(|p| score_partition(p, &arranged, &config).unwrap())
            .fold(f64::INFINITY, f64::min);
        let found = search_exhaustive(&ds, &config).unwrap();
        let score = score_partition(&found, &arranged, &config).unwrap();
        prop_assert!(score <= best + TIE_TOLERANCE * best.abs().max(1.0), "{score} vs {best}");
    }

    #[test]
    fn greedy_never_beats_exhaustive(ds in dataset_strategy(5, 8), allow_drop in any::<bool>()) {
        let config = GroupingConfig { allow_drop, ..GroupingConfig::default() };
        let arranged = canonical_order(&ds);
        let ex = score_partition(&search_exhaustive(&ds, &config).unwrap(), &arranged, &config).unwrap();
        let gr = score_partition(&search_greedy(&ds, &config).unwrap(), &arranged, &config).unwrap();
        prop_assert!(gr >= ex - TIE_TOLERANCE * ex.abs().max(1.0));
    }

    #[test]
    fn search_ignores_pattern_order(ds in quantized_dataset_strategy(), seed in any::<u64>()) {
        let config = GroupingConfig::default();
        let shuffled = permute_patterns(&ds, seed);
        prop_assert_eq!(search_exhaustive(&ds, &config).unwrap(), search_exhaustive(&shuffled, &config).unwrap());
        prop_assert_eq!(search_greedy(&ds, &config).unwrap(), search_greedy(&shuffled, &config).unwrap());
    }

    #[test]
    fn duplicating_a_column_never_raises_the_optimum(ds in dataset_strategy(3, 7), pick in any::<prop::sample::Index>()) {
        let config = GroupingConfig { allow_drop: true, group_count_penalty: Some(0.05), ..GroupingConfig::default() };
        let col = pick.index(ds.arity());
        let rows: Vec<(Vec<f64>, f64)> = ds
            .patterns()
            .iter()
            .map(|p| {
                let mut inputs = p.inputs.clone();
                inputs.push(p.inputs[col]);
                (inputs, p.target)
            })
            .collect();
        let dup = Dataset::from_rows(&rows).unwrap();
        let before = score_partition(&search_exhaustive(&ds, &config).unwrap(), &canonical_order(&ds), &config).unwrap();
        let after = score_partition(&search_exhaustive(&dup, &config).unwrap(), &canonical_order(&dup), &config).unwrap();
        prop_assert!(after <= before + TIE_TOLERANCE * before.abs().max(1.0));
    }

    #[test]
    fn returned_partitions_cover_inputs(ds in dataset_strategy(6, 6), allow_drop in any::<bool>()) {
        let config = GroupingConfig { allow_drop, ..GroupingConfig::default() };
        for p in [search_exhaustive(&ds, &config).unwrap(), search_greedy(&ds, &config).unwrap()] {
            let mut seen: Vec<usize> = p.groups().iter().flat_map(|g| g.indices().to_vec()).chain(p.dropped().to_vec()).collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..ds.arity()).collect::<Vec<_>>());
            prop_assert!(!p.groups().is_empty());
        }
    }

    #[test]
    fn fitted_synapses_keep_scale_and_level(ds in dataset_strategy(4, 10)) {
        let model = train(&ds, &GroupingConfig::default()).unwrap();
        let arranged = canonical_order(&ds);
        let targets = arranged.targets();
        let target_change = shape_change_average(&targets).unwrap();
        for s in &model.synapses {
            let direct = fit_group(&s.group, &arranged, model.combine_mode).unwrap();
            prop_assert_eq!(&direct, s);
            let signal: Vec<f64> = arranged
                .patterns()
                .iter()
                .map(|p| s.group.indices().iter().map(|&i| p.inputs[i]).sum())
                .collect();
            if !s.degenerate {
                let scaled: Vec<f64> = signal.iter().map(|c| s.weight * c).collect();
                prop_assert!((shape_change_average(&scaled).unwrap() - target_change).abs() < 1e-9);
            }
            let level = signal.iter().map(|&c| s.estimate(c, model.output_mean)).sum::<f64>() / signal.len() as f64;
            prop_assert!((level - model.output_mean).abs() < 1e-9);
        }
    }

    #[test]
    fn training_ignores_pattern_order(ds in dataset_strategy(4, 9), seed in any::<u64>()) {
        let config = GroupingConfig::default();
        let a = train(&ds, &config).unwrap();
        let b = train(&permute_patterns(&ds, seed), &config).unwrap();
        prop_assert_eq!(&a, &b);
        for p in ds.patterns() {
            prop_assert_eq!(a.predict(&p.inputs).unwrap(), b.predict(&p.inputs).unwrap());
        }
    }

    #[test]
    fn error_report_is_self_consistent(ds in dataset_strategy(3, 10)) {
        let model = train(&ds, &GroupingConfig::default()).unwrap();
        let r = model.evaluate(&ds).unwrap();
        let n = r.per_pattern_error.len() as f64;
        let mae = r.per_pattern_error.iter().map(|e| e.abs()).sum::<f64>() / n;
        let mse = r.per_pattern_error.iter().map(|e| e * e).sum::<f64>() / n;
        prop_assert_eq!(r.mae, mae);
        prop_assert_eq!(r.mse, mse);
        let max_abs = r.per_pattern_error.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        prop_assert!(r.mae <= max_abs + 1e-15);
    }

    #[test]
    fn batch_gradient_matches_finite_differences(ds in dataset_strategy(4, 8), seed in any::<u64>()) {
        let model = init_baseline(ds.arity(), seed, 0.5).unwrap();
        let (gw, gb) = batch_gradient(&model, &ds).unwrap();
        let (fw, fb) = fd_gradient(&model.weights, model.bias, &ds);
        for (a, b) in gw.iter().zip(&fw).chain(std::iter::once((&gb, &fb))) {
            prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1e-3), "{a} vs {b}");
        }
    }
}

#[test]
fn presented_order_is_not_invariant() {
    // The literal per-order ratio moves with presentation order.
    use waveshape::grouping::{PatternOrder, SynapseGroup};
    let ds = Dataset::from_rows(&[(vec![0.0], 0.0), (vec![1.0], 2.0), (vec![2.0], 1.0)]).unwrap();
    let g = SynapseGroup::new(vec![0]).unwrap();
    let a = fit_group(&g, &ds, Default::default()).unwrap().weight;
    let b = fit_group(&g, &ds.reordered(&[0, 2, 1]), Default::default()).unwrap().weight;
    assert_eq!(a, 1.5);
    assert!((b - 2.0 / 3.0).abs() < 1e-15);

    let presented = GroupingConfig { pattern_order: PatternOrder::Presented, ..GroupingConfig::default() };
    let wa = train(&ds, &presented).unwrap().synapses[0].weight;
    let wb = train(&ds.reordered(&[0, 2, 1]), &presented).unwrap().synapses[0].weight;
    assert_ne!(wa, wb);
    let canonical = GroupingConfig::default();
    assert_eq!(train(&ds, &canonical).unwrap(), train(&ds.reordered(&[0, 2, 1]), &canonical).unwrap());
}

#[test]
fn lms_reaches_least_squares_on_linear_data() {
    for arity in 1..=4 {
        let spec = SyntheticSpec {
            arity,
            n_patterns: 40,
            generator: Generator::RandomLinear,
            coefficient_range: (-2.0, 2.0),
            noise_sd: 0.0,
            seed: 100 + arity as u64,
        };
        let ds = generate(&spec).unwrap();
        let (w_ls, b_ls, mse_ls) = least_squares(&ds);
        assert!(mse_ls < 1e-20);
        let start = init_baseline(arity, 1, 0.5).unwrap();
        let cfg = LmsConfig { learning_rate: 0.1, epochs: 3000, batch: false };
        let out = train_lms(&start, &ds, &cfg).unwrap();
        let final_mse = *out.mse_trajectory.last().unwrap();
        assert!(final_mse < 1e-4, "arity {arity}: {final_mse}");
        for (a, b) in out.model.weights.iter().zip(&w_ls) {
            assert!((a - b).abs() < 0.05, "arity {arity}: {a} vs {b}");
        }
        assert!((out.model.bias - b_ls).abs() < 0.05);
    }
}

#[test]
fn random_uniform_targets_leave_positive_error() {
    let spec = SyntheticSpec {
        arity: 3,
        n_patterns: 50,
        generator: Generator::RandomUniform,
        coefficient_range: (0.0, 1.0),
        noise_sd: 0.0,
        seed: 7,
    };
    let ds = generate(&spec).unwrap();
    let (_, _, mse_ls) = least_squares(&ds);
    assert!(mse_ls > 1e-3);
    let start = init_baseline(3, 1, 0.5).unwrap();
    let out = train_lms(&start, &ds, &LmsConfig::default()).unwrap();
    assert!(out.model.evaluate(&ds).unwrap().mse >= mse_ls - 1e-12);
}

#[test]
fn per_pattern_lms_depends_on_order() {
    let spec = SyntheticSpec {
        arity: 2,
        n_patterns: 10,
        generator: Generator::RandomUniform,
        coefficient_range: (0.0, 1.0),
        noise_sd: 0.0,
        seed: 3,
    };
    let ds = generate(&spec).unwrap();
    let start = init_baseline(2, 1, 0.5).unwrap();
    let cfg = LmsConfig { learning_rate: 0.1, epochs: 5, batch: false };
    let a = train_lms(&start, &ds, &cfg).unwrap().model;
    let b = train_lms(&start, &permute_patterns(&ds, 1), &cfg).unwrap().model;
    assert_ne!(a.weights, b.weights);
}
