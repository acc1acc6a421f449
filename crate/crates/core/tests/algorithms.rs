use std::sync::Mutex;

use csc::baseline::{rrr_fit, rrr_fit_all, RrrConfig};
use csc::dictlearn::{
    csc_fit, dictionary_step, init_dictionary, objective, CscConfig, Dictionary, ReductionMode,
};
use csc::encoder::{encode_all, EncoderOptions, GroupCoefficients};
use csc::evalkit::{
    default_lambda_grid, hold_two_out_cv, prediction_error, select_lambda, Metric, DEFAULT_LAMBDA_MULTIPLIERS,
};
use csc::matcore::{nuclear_norm, spectral_norm, Matrix};
use csc::{gen_dataset, Error, Group, GroupedDataset, Scenario, SimParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

mod common;
use common::randn;

fn small_structured(seed: u64) -> csc::SimulatedData {
    gen_dataset(&SimParams {
        p: 8,
        q: 6,
        groups: 12,
        n_train: 20,
        n_test: 200,
        true_dictionary_size: 8,
        rng_seed: seed,
        ..SimParams::default()
    })
    .unwrap()
}

fn small_config(seed: u64) -> CscConfig {
    CscConfig {
        k: 10,
        lambda: 0.05,
        max_alternations: 40,
        rng_seed: seed,
        ..CscConfig::default()
    }
}

#[test]
fn true_dictionary_recovers_supports() {
    let sim = gen_dataset(&SimParams {
        groups: 20,
        n_train: 200,
        n_test: 1,
        noise_sigma: 0.01,
        rng_seed: 17,
        ..SimParams::default()
    })
    .unwrap();
    let atoms = sim.truth.true_dictionary.clone().unwrap();
    let dictionary = Dictionary::new(atoms, 1.0).unwrap();
    let encoded = encode_all(&dictionary, &sim.train, 0.01, &EncoderOptions::default(), None, 1).unwrap();
    for (g, support) in sim.truth.true_supports.as_ref().unwrap().iter().enumerate() {
        let found: Vec<usize> = (0..dictionary.k())
            .filter(|&k| encoded.coefficients.alpha(g)[k] != 0.0)
            .collect();
        assert_eq!(&found, support, "group {g}");
    }
}

#[test]
fn identical_groups_get_identical_codes() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let group = Group {
        x: randn(5, 9, &mut rng),
        y: randn(4, 9, &mut rng),
    };
    let dataset = GroupedDataset::new(vec![group.clone(), group]).unwrap();
    let dictionary = init_dictionary(6, 5, 4, 1.0, 3).unwrap();
    let encoded = encode_all(&dictionary, &dataset, 0.02, &EncoderOptions::default(), None, 2).unwrap();
    assert_eq!(encoded.coefficients.alpha(0), encoded.coefficients.alpha(1));
}

#[test]
fn zero_design_group_gets_zero_code() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let dataset = GroupedDataset::new(vec![
        Group {
            x: randn(3, 6, &mut rng),
            y: randn(2, 6, &mut rng),
        },
        Group {
            x: Matrix::zeros(3, 6),
            y: randn(2, 6, &mut rng),
        },
    ])
    .unwrap();
    let dictionary = init_dictionary(4, 3, 2, 1.0, 1).unwrap();
    let encoded = encode_all(&dictionary, &dataset, 0.0, &EncoderOptions::default(), None, 1).unwrap();
    assert!(encoded.coefficients.alpha(1).iter().all(|&a| a == 0.0));
}

#[test]
fn encoding_beats_small_perturbations() {
    let sim = small_structured(5);
    let dictionary = init_dictionary(10, 8, 6, 1.0, 5).unwrap();
    let lambda = 0.05;
    let encoded = encode_all(&dictionary, &sim.train, lambda, &EncoderOptions::default(), None, 1).unwrap();
    let base = objective(&dictionary, &encoded.coefficients, &sim.train, lambda).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    for _ in 0..20 {
        let g = rng.random_range(0..sim.train.num_groups());
        let k = rng.random_range(0..dictionary.k());
        let mut rows = encoded.coefficients.as_rows().to_vec();
        rows[g][k] += if rng.random_bool(0.5) { 1e-3 } else { -1e-3 };
        let perturbed = GroupCoefficients::new(rows).unwrap();
        assert!(objective(&dictionary, &perturbed, &sim.train, lambda).unwrap() >= base);
    }
}

#[test]
fn dictionary_step_descends_and_stays_feasible() {
    for seed in 0..50 {
        let sim = small_structured(seed);
        let dictionary = init_dictionary(10, 8, 6, 0.8, seed + 100).unwrap();
        let encoded = encode_all(&dictionary, &sim.train, 0.05, &EncoderOptions::default(), None, 1).unwrap();
        let step = dictionary_step(&dictionary, &encoded.coefficients, &sim.train, 50).unwrap();
        assert!(step.smooth_after <= step.smooth_before, "seed {seed}");
        let before = objective(&dictionary, &encoded.coefficients, &sim.train, 0.0).unwrap();
        let after = objective(&step.dictionary, &encoded.coefficients, &sim.train, 0.0).unwrap();
        assert!(after <= before + 1e-12, "seed {seed}: {after} > {before}");
        step.dictionary.validate().unwrap();
    }
}

#[test]
fn huge_lambda_stops_immediately() {
    let sim = small_structured(8);
    let (model, diag) = csc_fit(&sim.train, &small_config(8).with_lambda(1e6)).unwrap();
    assert!(diag.alternations() <= 2);
    assert!(model.coefficients.as_rows().iter().flatten().all(|&a| a == 0.0));
}

#[test]
fn fit_is_feasible_and_seed_deterministic() {
    let sim = small_structured(9);
    let config = small_config(9);
    let (a, da) = csc_fit(&sim.train, &config).unwrap();
    let (b, db) = csc_fit(&sim.train, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(da, db);
    a.dictionary.validate().unwrap();
    for w in da.objective_per_alternation.windows(2) {
        assert!(w[1] <= w[0] + 1e-10);
    }
    let (c, _) = csc_fit(&sim.train, &small_config(10)).unwrap();
    assert_ne!(a.dictionary, c.dictionary);
}

#[test]
fn thread_count_and_reduction_mode() {
    let sim = small_structured(11);
    let config = small_config(11);
    let (single, d1) = csc_fit(&sim.train, &config).unwrap();
    let (ordered, d2) = csc_fit(&sim.train, &CscConfig { threads: 3, ..config.clone() }).unwrap();
    assert_eq!(single.dictionary, ordered.dictionary);
    assert_eq!(single.coefficients, ordered.coefficients);
    assert_eq!(d1, d2);

    // The tree reduction regroups floating-point sums, so agreement is up to
    // rounding. Compare the first step, before rounding can steer the
    // alternation onto a different path.
    let one_step = CscConfig {
        max_alternations: 1,
        ..config
    };
    let (_, o) = csc_fit(&sim.train, &one_step).unwrap();
    let (_, p) = csc_fit(
        &sim.train,
        &CscConfig {
            threads: 3,
            reduction: ReductionMode::Parallel,
            ..one_step
        },
    )
    .unwrap();
    let (x, y) = (o.objective_per_alternation[0], p.objective_per_alternation[0]);
    assert!((x - y).abs() <= 1e-12 * x.abs(), "{x} vs {y}");
}

/// Frank-Wolfe over the nuclear ball with exact line search: only the top
/// singular pair of the gradient is needed, no projection.
fn frank_wolfe(x: &Matrix, y: &Matrix, radius: f64, iterations: usize) -> Matrix {
    let n = x.ncols() as f64;
    let mut b = Matrix::zeros(y.nrows(), x.nrows());
    for _ in 0..iterations {
        let grad = (y - &b * x) * x.transpose() * (-2.0 / n);
        let svd = grad.clone().svd_unordered(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let top = svd
            .singular_values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let vertex = u.column(top) * vt.row(top) * (-radius);
        let dir = vertex - &b;
        let dx = &dir * x;
        let curvature = dx.norm_squared() / n;
        if curvature <= 0.0 {
            break;
        }
        let slope = grad.dot(&dir);
        let step = (-slope / (2.0 * curvature)).clamp(0.0, 1.0);
        b += dir * step;
    }
    b
}

fn ls_value(x: &Matrix, y: &Matrix, b: &Matrix) -> f64 {
    (y - b * x).norm_squared() / x.ncols() as f64
}

#[test]
fn rrr_matches_independent_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    for trial in 0..20 {
        let p = rng.random_range(1..=3);
        let q = rng.random_range(1..=3);
        let n = rng.random_range(4..10);
        let x = randn(p, n, &mut rng);
        let y = randn(q, n, &mut rng);
        let radius = rng.random_range(0.1..2.0);
        let fit = rrr_fit(&x, &y, &RrrConfig { radius, ..RrrConfig::default() }).unwrap();
        assert!(nuclear_norm(&fit.estimate).unwrap() <= radius + 1e-6);
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "trial {trial}: objective rose");
        }
        let ours = ls_value(&x, &y, &fit.estimate);

        // Duality gap of the constrained problem at our estimate.
        let grad = (&y - &fit.estimate * &x) * x.transpose() * (-2.0 / n as f64);
        let gap = grad.dot(&fit.estimate) + radius * spectral_norm(&grad).unwrap();
        assert!(gap <= 1e-4, "trial {trial}: gap {gap}");

        let oracle = ls_value(&x, &y, &frank_wolfe(&x, &y, radius, 20_000));
        assert!(ours <= oracle + 1e-4, "trial {trial}: {ours} vs oracle {oracle}");
    }
}

#[test]
fn rrr_improves_on_zero_per_group() {
    let sim = small_structured(13);
    let fits = rrr_fit_all(&sim.train, &RrrConfig { radius: 2.0, ..RrrConfig::default() }, 1).unwrap();
    for (g, (fit, group)) in fits.iter().zip(sim.train.groups()).enumerate() {
        assert!(ls_value(&group.x, &group.y, &fit.estimate) <= ls_value(&group.x, &group.y, &Matrix::zeros(6, 8)), "group {g}");
        assert!(nuclear_norm(&fit.estimate).unwrap() <= 2.0 + 1e-6);
    }
}

#[test]
fn lambda_selection_basics() {
    let sim = small_structured(14);
    let template = CscConfig {
        max_alternations: 10,
        ..small_config(14)
    };
    let single = select_lambda(&sim.train, &template, &[0.07], 3, 1).unwrap();
    assert_eq!(single.best, 0.07);
    assert_eq!(single.curve.len(), 1);

    let grid = [0.01, 0.05, 0.2];
    let a = select_lambda(&sim.train, &template, &grid, 3, 2).unwrap();
    let b = select_lambda(&sim.train, &template, &grid, 3, 2).unwrap();
    assert_eq!(a, b);
    assert!(grid.contains(&a.best));

    let anchor = (40f64.ln() / 25.0).sqrt();
    for (g, c) in default_lambda_grid(40, 25).iter().zip(DEFAULT_LAMBDA_MULTIPLIERS) {
        assert!((g - c * anchor).abs() <= 1e-15);
    }

    assert!(matches!(
        select_lambda(&sim.train, &template, &grid, 1, 0),
        Err(Error::Config(_))
    ));
    assert!(matches!(select_lambda(&sim.train, &template, &[], 3, 0), Err(Error::Config(_))));
}

#[test]
fn selected_lambda_beats_grid_endpoints() {
    let mut wins = 0;
    for seed in 0..5 {
        let sim = small_structured(seed);
        let template = small_config(seed);
        let grid = default_lambda_grid(template.k, sim.train.n());
        let selection = select_lambda(&sim.train, &template, &grid, 3, seed).unwrap();
        let test_error = |lambda: f64| {
            let (model, _) = csc_fit(&sim.train, &template.with_lambda(lambda)).unwrap();
            prediction_error(&model.estimates(), &sim.test).unwrap()
        };
        let chosen = test_error(selection.best);
        if chosen < test_error(grid[0]) && chosen < test_error(*grid.last().unwrap()) {
            wins += 1;
        }
    }
    assert!(wins >= 4, "selected lambda won on {wins} of 5 seeds");
}

#[test]
fn hold_two_out_with_perfect_fit() {
    let sim = gen_dataset(&SimParams {
        p: 5,
        q: 4,
        groups: 3,
        n_train: 12,
        n_test: 1,
        noise_sigma: 0.0,
        rng_seed: 15,
        ..SimParams::default()
    })
    .unwrap();
    let truth = sim.truth.b_star.clone();
    let report = hold_two_out_cv(&sim.train, |_| Ok(truth.clone()), 60, Metric::Euclidean, 1, 1).unwrap();
    assert_eq!(report.trials.len(), 60);
    assert_eq!(report.n_failed, 0);
    for r in &report.per_group {
        assert_eq!(r.acc_2v2, 1.0);
        assert_eq!(r.acc_1v2, 1.0);
        assert!(r.mean_squared_error < 1e-20);
        assert_eq!(r.n_trials, 60);
    }
}

#[test]
fn hold_two_out_chance_levels() {
    let sim = gen_dataset(&SimParams {
        p: 5,
        q: 6,
        groups: 1,
        n_train: 80,
        n_test: 1,
        rng_seed: 16,
        ..SimParams::default()
    })
    .unwrap();

    // The zero predictor ties every comparison, and ties are incorrect.
    let zero = hold_two_out_cv(&sim.train, |_| Ok(vec![Matrix::zeros(6, 5)]), 200, Metric::Euclidean, 2, 1).unwrap();
    assert_eq!(zero.per_group[0].acc_2v2, 0.0);

    // Flipping the sign of a random estimate maps each cosine distance d to
    // 2 - d and reverses every comparison, so chance is exactly one half.
    let rng = Mutex::new(ChaCha20Rng::seed_from_u64(17));
    let random = hold_two_out_cv(
        &sim.train,
        |_| Ok(vec![randn(6, 5, &mut rng.lock().unwrap())]),
        2000,
        Metric::CosineDistance,
        3,
        1,
    )
    .unwrap();
    let acc = random.per_group[0].acc_2v2;
    assert!((acc - 0.5).abs() <= 0.03, "2v2 {acc}");
}

#[test]
fn hold_two_out_records_failures() {
    let sim = small_structured(18);
    let calls = Mutex::new(0usize);
    let report = hold_two_out_cv(
        &sim.train,
        |train| {
            let mut c = calls.lock().unwrap();
            *c += 1;
            if *c % 3 == 0 {
                Err(Error::Numerical("injected".into()))
            } else {
                Ok(vec![Matrix::zeros(train.q(), train.p()); train.num_groups()])
            }
        },
        30,
        Metric::Euclidean,
        4,
        1,
    )
    .unwrap();
    assert_eq!(report.trials.len(), 30);
    assert_eq!(report.n_failed, 10);
    assert_eq!(report.trials.iter().filter(|t| t.failure.is_some()).count(), 10);
    assert_eq!(report.per_group[0].n_trials, 20);
}

#[test]
fn same_design_scenario_runs_end_to_end() {
    let sim = gen_dataset(&SimParams {
        scenario: Scenario::StructuredSameDesign,
        p: 6,
        q: 6,
        groups: 8,
        n_train: 30,
        n_test: 100,
        true_dictionary_size: 6,
        rng_seed: 19,
        ..SimParams::default()
    })
    .unwrap();
    let (model, diag) = csc_fit(&sim.train, &CscConfig { k: 8, ..small_config(19) }).unwrap();
    assert!(!diag.sparsity_warning);
    let zero = vec![Matrix::zeros(6, 6); 8];
    assert!(prediction_error(&model.estimates(), &sim.test).unwrap() < prediction_error(&zero, &sim.test).unwrap());
}
