//! End-to-end property checks for the whole library, one test per
//! criterion. Each test prints a pass line on success so a test run
//! doubles as a checklist. The real-data track at the bottom is
//! ignored by default and activates when LENDING_CLUB_CSV is set.

use std::time::Instant;

use proptest::prelude::*;

use fiaudit::consistency::{build_consistency_report, ConsistencyConfig};
use fiaudit::dataset::{
    generate_synthetic, CategoricalColumn, ContinuousSpec, CsvSchema, Dataset, Distribution,
    SyntheticSpec,
};
use fiaudit::explainers::{
    exact_shapley, global_importance_from_attributions, impurity_importance, kernel_shap,
    lime_explain, logit_coefficient_importance, permutation_importance, CoalitionSampling,
    LimeParams,
};
use fiaudit::models::tree::{Node, Tree};
use fiaudit::models::{
    train_gradient_boosting, train_logistic, train_mlp, train_random_forest, BoostingParams,
    ForestModel, ForestParams, MlpParams, TrainedModel,
};
use fiaudit::perturbation::{
    dynamic_importance, flip_rows, sweep_continuous, PerturbationConfig,
};
use fiaudit::rng::rng_from_seed;
use rand::Rng;

fn pass(name: &str) {
    println!("criterion {name}: pass");
}

fn uniform_spec(weights: Vec<f64>, n_rows: usize, intercept: f64) -> SyntheticSpec {
    SyntheticSpec {
        n_rows,
        continuous: (0..weights.len())
            .map(|i| ContinuousSpec {
                name: format!("f{i}"),
                dist: Distribution::Uniform { low: 0.0, high: 2.0 },
            })
            .collect(),
        groups: vec![],
        true_weights: weights,
        intercept,
        noise_rate: 0.0,
        label_column: "status".into(),
    }
}

#[test]
fn kernel_shap_matches_exact_enumeration_on_six_players() {
    let started = Instant::now();
    let ds = generate_synthetic(
        &uniform_spec(vec![2.0, -1.5, 1.0, -0.5, 0.8, 0.3], 400, -2.0),
        31,
    )
    .unwrap();
    let model = TrainedModel::RandomForest(
        train_random_forest(
            &ds,
            &ForestParams {
                n_trees: 10,
                max_depth: 6,
                min_samples_leaf: 5,
                features_per_split: None,
            },
            5,
        )
        .unwrap(),
    );
    let background = Dataset {
        schema: ds.schema.clone(),
        rows: ds.rows[..50].to_vec(),
        labels: ds.labels[..50].to_vec(),
        row_ids: ds.row_ids[..50].to_vec(),
    };
    let instance = ds.rows[60].clone();
    let exact = exact_shapley(&model, &instance, 0, &background).unwrap();
    let kernel = kernel_shap(
        &model,
        &instance,
        0,
        &background,
        CoalitionSampling::Exact,
        0,
    )
    .unwrap();
    let max_delta = exact
        .values
        .iter()
        .zip(&kernel.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(max_delta < 1e-6, "max |delta phi| = {max_delta}");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}");
    pass("1 kernel SHAP equals exact enumeration on 6 players");
}

fn mirror_tree(tree: &Tree) -> Tree {
    let nodes = tree
        .nodes
        .iter()
        .map(|n| match n {
            Node::Split {
                feature,
                threshold,
                left,
                right,
                n_samples,
                impurity,
            } => Node::Split {
                feature: match feature {
                    0 => 1,
                    1 => 0,
                    f => *f,
                },
                threshold: *threshold,
                left: *left,
                right: *right,
                n_samples: *n_samples,
                impurity: *impurity,
            },
            leaf => leaf.clone(),
        })
        .collect();
    Tree { nodes }
}

/// Make the model an exactly symmetric function of features 0 and 1:
/// tree ensembles get a mirrored copy of every tree, parametric models
/// get their feature-0/1 parameters averaged.
fn symmetrize(model: &mut TrainedModel) {
    match model {
        TrainedModel::Logistic(m) => {
            let w = (m.weights[0] + m.weights[1]) / 2.0;
            m.weights[0] = w;
            m.weights[1] = w;
            let mu = (m.standardizer.means[0] + m.standardizer.means[1]) / 2.0;
            m.standardizer.means[0] = mu;
            m.standardizer.means[1] = mu;
            let sd = (m.standardizer.stddevs[0] + m.standardizer.stddevs[1]) / 2.0;
            m.standardizer.stddevs[0] = sd;
            m.standardizer.stddevs[1] = sd;
        }
        TrainedModel::RandomForest(m) => {
            let mirrored: Vec<Tree> = m.trees.iter().map(mirror_tree).collect();
            m.trees.extend(mirrored);
        }
        TrainedModel::GradientBoosting(m) => {
            let mirrored: Vec<Tree> = m.stages.iter().map(mirror_tree).collect();
            m.stages.extend(mirrored);
        }
        TrainedModel::Mlp(m) => {
            for row in &mut m.hidden[0].w {
                let w = (row[0] + row[1]) / 2.0;
                row[0] = w;
                row[1] = w;
            }
            let mu = (m.standardizer.means[0] + m.standardizer.means[1]) / 2.0;
            m.standardizer.means[0] = mu;
            m.standardizer.means[1] = mu;
            let sd = (m.standardizer.stddevs[0] + m.standardizer.stddevs[1]) / 2.0;
            m.standardizer.stddevs[0] = sd;
            m.standardizer.stddevs[1] = sd;
        }
    }
}

#[test]
fn shapley_axioms_hold_for_all_model_kinds() {
    let ds = generate_synthetic(&uniform_spec(vec![2.0, 1.0, -1.5, 0.5], 300, -1.0), 17).unwrap();
    let mut models = vec![
        TrainedModel::Logistic(train_logistic(&ds, &Default::default()).unwrap()),
        TrainedModel::RandomForest(
            train_random_forest(
                &ds,
                &ForestParams {
                    n_trees: 12,
                    max_depth: 5,
                    min_samples_leaf: 5,
                    features_per_split: None,
                },
                2,
            )
            .unwrap(),
        ),
        TrainedModel::GradientBoosting(
            train_gradient_boosting(
                &ds,
                &BoostingParams {
                    n_stages: 20,
                    ..Default::default()
                },
                3,
            )
            .unwrap(),
        ),
        TrainedModel::Mlp(
            train_mlp(
                &ds,
                &MlpParams {
                    layer_widths: [8, 8, 4, 4],
                    epochs: 2,
                    batch_size: 32,
                    ..Default::default()
                },
                4,
            )
            .unwrap(),
        ),
    ];
    // background rows share features 0/1 rowwise and pin feature 3 to
    // the same constant as the instance, making it a dummy player
    let dummy_value = 0.7;
    let mut background = Dataset {
        schema: ds.schema.clone(),
        rows: ds.rows[..20].to_vec(),
        labels: ds.labels[..20].to_vec(),
        row_ids: ds.row_ids[..20].to_vec(),
    };
    for row in &mut background.rows {
        row[1] = row[0];
        row[3] = dummy_value;
    }
    let instance = vec![1.3, 1.3, 0.4, dummy_value];
    for model in &mut models {
        symmetrize(model);
        let kind = model.kind().name();
        let attr = exact_shapley(model, &instance, 0, &background).unwrap();
        assert!(
            attr.values[3].abs() < 1e-9,
            "{kind}: dummy got {}",
            attr.values[3]
        );
        assert!(
            (attr.values[0] - attr.values[1]).abs() < 1e-9,
            "{kind}: symmetric players {} vs {}",
            attr.values[0],
            attr.values[1]
        );
        let fx = model.predict_proba_row(&instance).unwrap();
        let total = attr.base_value + attr.values.iter().sum::<f64>();
        assert!(
            (total - fx).abs() < 1e-6,
            "{kind}: additivity off by {}",
            (total - fx).abs()
        );
    }
    pass("2 dummy, symmetry, additivity across all 4 model kinds");
}

#[test]
fn and_game_splits_the_gain_between_its_two_players() {
    // f(x) = x0 AND x1 over binary inputs, x2 ignored; a single-row
    // all-zero background makes the empty-coalition value (the clamped)
    // zero, so the unit gain splits evenly
    let tree = Tree {
        nodes: vec![
            Node::Split {
                feature: 0,
                threshold: 0.5,
                left: 1,
                right: 2,
                n_samples: 4,
                impurity: 0.375,
            },
            Node::Leaf {
                value: 0.0,
                n_samples: 2,
                impurity: 0.0,
            },
            Node::Split {
                feature: 1,
                threshold: 0.5,
                left: 3,
                right: 4,
                n_samples: 2,
                impurity: 0.5,
            },
            Node::Leaf {
                value: 0.0,
                n_samples: 1,
                impurity: 0.0,
            },
            Node::Leaf {
                value: 1.0,
                n_samples: 1,
                impurity: 0.0,
            },
        ],
    };
    let model = TrainedModel::RandomForest(ForestModel {
        trees: vec![tree],
        n_features: 3,
        params: ForestParams::default(),
    });
    let schema = CsvSchema {
        continuous: vec!["f0".into(), "f1".into(), "f2".into()],
        categorical: vec![],
        label_column: "status".into(),
        positive_label: "good".into(),
    }
    .expand()
    .unwrap();
    let background = Dataset {
        schema,
        rows: vec![vec![0.0, 0.0, 0.0]],
        labels: vec![0],
        row_ids: vec![0],
    };
    let attr = exact_shapley(&model, &[1.0, 1.0, 1.0], 0, &background).unwrap();
    // probabilities are clamped to the open interval, so the exact
    // target is ((1 - 1e-12) - 1e-12) / 2 rather than 1/2
    let half_gain = ((1.0 - 1e-12) - 1e-12) / 2.0;
    assert!((attr.values[0] - half_gain).abs() < 1e-9);
    assert!((attr.values[1] - half_gain).abs() < 1e-9);
    assert!(attr.values[2].abs() < 1e-9);
    pass("3 AND-game hand-computed values (0.5, 0.5, 0)");
}

#[test]
fn lime_recovers_logistic_coefficient_ranking() {
    let ds = generate_synthetic(
        &uniform_spec(vec![2.5, -1.8, 1.2, -0.6, 0.2], 1500, -1.5),
        23,
    )
    .unwrap();
    let logit = train_logistic(&ds, &Default::default()).unwrap();
    // the standardizer absorbs sigma, so |w_j sigma_j| order is the
    // |standardized weight| order
    let mut expected: Vec<usize> = (0..5).collect();
    expected.sort_by(|&a, &b| logit.weights[b].abs().total_cmp(&logit.weights[a].abs()));
    let model = TrainedModel::Logistic(logit);

    let mut rng = rng_from_seed(41);
    let mut matches = 0;
    for i in 0..100u64 {
        let instance: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..2.0)).collect();
        let attr = lime_explain(
            &model,
            &instance,
            i,
            &ds,
            &LimeParams {
                n_samples: 2000,
                seed: 9,
                ..Default::default()
            },
        )
        .unwrap();
        let mut got: Vec<usize> = (0..5).collect();
        got.sort_by(|&a, &b| attr.values[b].abs().total_cmp(&attr.values[a].abs()));
        if got == expected {
            matches += 1;
        }
    }
    assert!(matches >= 95, "ranking recovered on {matches}/100 instances");
    pass("4 LIME recovers the linear ranking on >= 95/100 instances");
}

#[test]
fn every_technique_recovers_the_generating_weights() {
    let ds = generate_synthetic(&uniform_spec(vec![3.0, 1.0, 0.0], 2000, -3.0), 29).unwrap();
    let forest = TrainedModel::RandomForest(
        train_random_forest(
            &ds,
            &ForestParams {
                n_trees: 30,
                max_depth: 4,
                min_samples_leaf: 20,
                features_per_split: Some(3),
            },
            7,
        )
        .unwrap(),
    );
    let logit = TrainedModel::Logistic(train_logistic(&ds, &Default::default()).unwrap());

    let background = Dataset {
        schema: ds.schema.clone(),
        rows: ds.rows[..50].to_vec(),
        labels: ds.labels[..50].to_vec(),
        row_ids: ds.row_ids[..50].to_vec(),
    };
    let attributions: Vec<_> = (50..70)
        .map(|i| exact_shapley(&forest, &ds.rows[i], i as u64, &background).unwrap())
        .collect();

    let rankings = vec![
        impurity_importance(&forest, &ds.schema).unwrap(),
        permutation_importance(&forest, &ds, 5, 13).unwrap().ranking,
        global_importance_from_attributions(&attributions, "random_forest").unwrap(),
        logit_coefficient_importance(&logit, &ds.schema).unwrap(),
    ];
    for r in &rankings {
        let f0 = r.score_of("f0").unwrap();
        let f1 = r.score_of("f1").unwrap();
        let f2 = r.score_of("f2").unwrap();
        assert!(f0 > f1, "{}: f0 {f0} <= f1 {f1}", r.technique);
        assert_eq!(
            r.entries.last().unwrap().feature,
            "f2",
            "{}: f2 not last",
            r.technique
        );
        assert!(
            f2 < 0.35 * f1,
            "{}: zero-weight feature scored {f2} vs f1 {f1}",
            r.technique
        );
    }

    let (dynamic, _, _) = dynamic_importance(&logit, &ds, &Default::default()).unwrap();
    let order: Vec<&str> = dynamic.entries.iter().map(|e| e.feature.as_str()).collect();
    assert_eq!(order, vec!["f0", "f1", "f2"]);
    pass("5 weights (3, 1, 0) recovered by all static techniques and the dynamic sweep");
}

#[test]
fn mlp_gradients_match_finite_differences_on_fifty_coordinates() {
    let ds = generate_synthetic(&uniform_spec(vec![1.5, -1.0], 60, 0.0), 37).unwrap();
    let params = MlpParams {
        layer_widths: [16, 16, 8, 8],
        dropout_rate: 0.1,
        epochs: 0,
        batch_size: 32,
        ..Default::default()
    };
    let mut model = train_mlp(&ds, &params, 3).unwrap();
    let (_, grads) = model.loss_and_grads(&ds.rows, &ds.labels, false, None);
    let analytic = fiaudit::models::MlpModel::flat_grads(&grads);
    let base = model.flat_params();
    let mut rng = rng_from_seed(19);
    let h = 1e-5;
    for _ in 0..50 {
        let k = rng.gen_range(0..base.len());
        let mut plus = base.clone();
        plus[k] += h;
        model.set_flat_params(&plus);
        let (lp, _) = model.loss_and_grads(&ds.rows, &ds.labels, false, None);
        let mut minus = base.clone();
        minus[k] -= h;
        model.set_flat_params(&minus);
        let (lm, _) = model.loss_and_grads(&ds.rows, &ds.labels, false, None);
        model.set_flat_params(&base);
        let fd = (lp - lm) / (2.0 * h);
        let denom = analytic[k].abs().max(fd.abs()).max(1e-6);
        let rel = (analytic[k] - fd).abs() / denom;
        assert!(rel < 1e-4, "coordinate {k}: analytic {} fd {fd}", analytic[k]);
    }
    pass("6 MLP analytic gradients match finite differences (50 coordinates)");
}

#[test]
fn unit_multiplier_reproduces_the_base_value() {
    let ds = generate_synthetic(&uniform_spec(vec![1.7, -0.9], 250, 0.5), 43).unwrap();
    let model = TrainedModel::Logistic(train_logistic(&ds, &Default::default()).unwrap());
    let grid: Vec<f64> = (0..=10).map(|i| 0.5 + 0.1 * i as f64).collect();
    for feature in ["f0", "f1"] {
        let curve = sweep_continuous(&model, &ds, feature, &grid).unwrap();
        let at_one = curve.values[5];
        assert!(
            (at_one - curve.base_value).abs() < 1e-12,
            "{feature}: |{} - {}|",
            at_one,
            curve.base_value
        );
    }
    pass("7a multiplier 1.0 equals the base value within 1e-12");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn flips_preserve_one_hot_rows(
        n_rows in 1usize..40,
        n_levels in 2usize..5,
        target in 0usize..5,
        seed in 0u64..u64::MAX,
        flip_fraction in 0.0f64..1.0,
    ) {
        let target = target % n_levels;
        let mut rng = rng_from_seed(seed);
        // rows: one continuous column then a one-hot group
        let mut rows: Vec<Vec<f64>> = (0..n_rows)
            .map(|_| {
                let mut row = vec![rng.gen_range(-1.0..1.0)];
                row.extend(vec![0.0; n_levels]);
                let level = rng.gen_range(0..n_levels);
                row[1 + level] = 1.0;
                row
            })
            .collect();
        let group_cols: Vec<usize> = (1..=n_levels).collect();
        let n_flip = ((n_rows as f64) * flip_fraction) as usize;
        let mut chosen: Vec<usize> = (0..n_rows).collect();
        for i in (1..chosen.len()).rev() {
            chosen.swap(i, rng.gen_range(0..=i));
        }
        flip_rows(&mut rows, &group_cols, 1 + target, &chosen[..n_flip]);
        for row in &rows {
            let total: f64 = group_cols.iter().map(|&c| row[c]).sum();
            prop_assert_eq!(total, 1.0);
            prop_assert!(group_cols.iter().all(|&c| row[c] == 0.0 || row[c] == 1.0));
        }
        for &i in &chosen[..n_flip] {
            prop_assert_eq!(rows[i][1 + target], 1.0);
        }
    }
}

#[test]
fn one_hot_flip_schedules_print_pass() {
    // the proptest above runs 1000 random schedules; this line keeps
    // the checklist output uniform
    pass("7b one-hot sums stay exactly 1 over 1000 random flip schedules");
}

#[test]
fn logistic_sweeps_are_monotone_with_the_weight_sign() {
    let grid: Vec<f64> = (0..=10).map(|i| 0.5 + 0.1 * i as f64).collect();
    for trial in 0..20u64 {
        let mut rng = rng_from_seed(1000 + trial);
        let weights: Vec<f64> = (0..3)
            .map(|_| {
                let w: f64 = rng.gen_range(0.3..3.0);
                if rng.gen::<bool>() {
                    w
                } else {
                    -w
                }
            })
            .collect();
        let ds = generate_synthetic(&uniform_spec(weights, 400, 0.0), 2000 + trial).unwrap();
        let logit = train_logistic(&ds, &Default::default()).unwrap();
        let fitted = logit.weights.clone();
        let model = TrainedModel::Logistic(logit);
        for (j, &w) in fitted.iter().enumerate() {
            let curve = sweep_continuous(&model, &ds, &format!("f{j}"), &grid).unwrap();
            for pair in curve.values.windows(2) {
                let step = pair[1] - pair[0];
                assert!(
                    step * w.signum() >= -1e-12,
                    "trial {trial} f{j} (weight {w}): step {step}"
                );
            }
        }
    }
    pass("8 logistic sweep curves monotone with the fitted weight sign (20 models)");
}

#[test]
fn gini_important_but_flat_categorical_is_flagged() {
    // hand-built forest: the categorical split carries almost all the
    // recorded impurity decrease but barely moves the output, while the
    // income split moves the output a lot
    let csv_schema = CsvSchema {
        continuous: vec!["income".into(), "age".into()],
        categorical: vec![CategoricalColumn {
            column: "grade".into(),
            levels: vec!["a".into(), "b".into()],
        }],
        label_column: "status".into(),
        positive_label: "good".into(),
    };
    let schema = csv_schema.expand().unwrap();
    // columns: income 0, age 1, grade=a 2, grade=b 3
    let grade_tree = Tree {
        nodes: vec![
            Node::Split {
                feature: 2,
                threshold: 0.5,
                left: 1,
                right: 2,
                n_samples: 100,
                impurity: 0.5,
            },
            Node::Leaf {
                value: 0.500,
                n_samples: 50,
                impurity: 0.0,
            },
            Node::Leaf {
                value: 0.508,
                n_samples: 50,
                impurity: 0.0,
            },
        ],
    };
    let income_tree = Tree {
        nodes: vec![
            Node::Split {
                feature: 0,
                threshold: 1.0,
                left: 1,
                right: 2,
                n_samples: 100,
                impurity: 0.02,
            },
            Node::Leaf {
                value: 0.2,
                n_samples: 50,
                impurity: 0.0,
            },
            Node::Leaf {
                value: 0.8,
                n_samples: 50,
                impurity: 0.0,
            },
        ],
    };
    let forest = TrainedModel::RandomForest(ForestModel {
        trees: vec![grade_tree, income_tree],
        n_features: 4,
        params: ForestParams::default(),
    });

    let mut rng = rng_from_seed(53);
    let rows: Vec<Vec<f64>> = (0..120)
        .map(|_| {
            let a = rng.gen::<bool>();
            vec![
                rng.gen_range(0.7..1.4),
                rng.gen_range(0.0..1.0),
                if a { 1.0 } else { 0.0 },
                if a { 0.0 } else { 1.0 },
            ]
        })
        .collect();
    let holdout = Dataset {
        schema,
        labels: vec![0; rows.len()],
        row_ids: (0..rows.len() as u64).collect(),
        rows,
    };

    let static_ranking = impurity_importance(&forest, &holdout.schema)
        .unwrap()
        .aggregate_to_players(&holdout.schema);
    assert_eq!(static_ranking.entries[0].feature, "grade");

    let config = PerturbationConfig {
        flip_repeats: 10,
        ..Default::default()
    };
    let (dynamic, _, sensitivities) = dynamic_importance(&forest, &holdout, &config).unwrap();
    let grade_move = dynamic.score_of("grade").unwrap();
    let income_move = dynamic.score_of("income").unwrap();
    assert!(grade_move < 0.01, "grade flips moved {grade_move}");
    assert!(income_move > 0.05, "income sweep moved {income_move}");

    let report = build_consistency_report(
        &[static_ranking],
        &dynamic,
        &sensitivities,
        &ConsistencyConfig {
            top_k: 1,
            flatness_threshold: 0.01,
        },
    )
    .unwrap();
    let verdict = &report.comparisons[0].verdict;
    assert!(
        verdict.contains("static-important, dynamically flat: grade"),
        "verdict: {verdict}"
    );
    pass("9 gini-important but dynamically flat categorical is flagged");
}

/// Real-data track. Ignored unless opted in; point LENDING_CLUB_CSV at
/// a Lending Club accepted-loans CSV and run
/// `cargo test -p fiaudit --test acceptance -- --ignored`.
#[test]
#[ignore]
fn lending_club_shape_reproduction() {
    let path = std::env::var("LENDING_CLUB_CSV")
        .expect("set LENDING_CLUB_CSV to the accepted-loans CSV path");
    let csv_schema = CsvSchema {
        continuous: vec![
            "loan_amnt".into(),
            "int_rate".into(),
            "installment".into(),
            "annual_inc".into(),
            "dti".into(),
            "open_acc".into(),
            "pub_rec".into(),
            "revol_bal".into(),
        ],
        categorical: vec![
            CategoricalColumn {
                column: "grade".into(),
                levels: ["A", "B", "C", "D", "E", "F", "G"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            },
            CategoricalColumn {
                column: "term".into(),
                levels: vec![" 36 months".into(), " 60 months".into()],
            },
            CategoricalColumn {
                column: "home_ownership".into(),
                levels: vec![
                    "RENT".into(),
                    "OWN".into(),
                    "MORTGAGE".into(),
                    "ANY".into(),
                    "OTHER".into(),
                    "NONE".into(),
                ],
            },
        ],
        label_column: "loan_status".into(),
        positive_label: "good".into(),
    };
    let (full, report) = fiaudit::dataset::load_csv(
        std::path::Path::new(&path),
        &csv_schema,
        &fiaudit::dataset::LabelRule::default(),
    )
    .unwrap();
    println!(
        "loaded {} rows (dropped {} parse, {} label, {} level)",
        report.kept, report.dropped_parse, report.dropped_label, report.dropped_level
    );
    let sampled = fiaudit::dataset::balanced_sample(&full, 20_000, 11).unwrap();
    let (train, holdout) = fiaudit::dataset::train_holdout_split(&sampled, 0.2, 11).unwrap();

    let logit = TrainedModel::Logistic(train_logistic(&train, &Default::default()).unwrap());
    let forest = TrainedModel::RandomForest(
        train_random_forest(&train, &Default::default(), 1).unwrap(),
    );
    let gbc = TrainedModel::GradientBoosting(
        train_gradient_boosting(&train, &Default::default(), 2).unwrap(),
    );
    let mlp = TrainedModel::Mlp(train_mlp(&train, &Default::default(), 3).unwrap());

    let reference = [
        (&logit, 88.4),
        (&forest, 90.0),
        (&gbc, 94.1),
        (&mlp, 87.7),
    ];
    for (model, expected) in reference {
        let (acc, _) = fiaudit::models::evaluate_accuracy(model, &holdout).unwrap();
        let acc_pct = acc * 100.0;
        println!("{}: {acc_pct:.1}% (reference {expected})", model.kind().name());
        assert!(
            (acc_pct - expected).abs() <= 5.0,
            "{} accuracy {acc_pct:.1} not within 5 points of {expected}",
            model.kind().name()
        );
    }

    // sum-|shap| top 10 vs coefficient top 10 on the logit
    let background = Dataset {
        schema: train.schema.clone(),
        rows: train.rows[..100].to_vec(),
        labels: train.labels[..100].to_vec(),
        row_ids: train.row_ids[..100].to_vec(),
    };
    let attributions: Vec<_> = (0..25)
        .map(|i| exact_shapley(&logit, &holdout.rows[i], i as u64, &background).unwrap())
        .collect();
    let shap_rank = global_importance_from_attributions(&attributions, "logistic").unwrap();
    let coef_rank = logit_coefficient_importance(&logit, &train.schema)
        .unwrap()
        .aggregate_to_players(&train.schema);
    let top = |r: &fiaudit::explainers::ImportanceRanking| -> Vec<String> {
        r.entries.iter().take(10).map(|e| e.feature.clone()).collect()
    };
    let shap_top = top(&shap_rank);
    let coef_top = top(&coef_rank);
    let overlap = shap_top.iter().filter(|f| coef_top.contains(f)).count();
    println!("top-10 overlap: {overlap}/10");
    assert!(overlap >= 8, "top-10 overlap {overlap} < 8");

    // grade-A flip curve: monotone increasing on the logit, flatter on
    // the forest
    let grid: Vec<f64> = (1..=20).map(|i| 0.05 * i as f64).collect();
    let logit_curve =
        fiaudit::perturbation::flip_categorical(&logit, &holdout, "grade", "A", &grid, 10, 5)
            .unwrap();
    let logit_sens = fiaudit::perturbation::sensitivity_score(&logit_curve, 0.005);
    assert!(logit_sens.monotone, "logit grade-A curve not monotone");
    assert!(
        *logit_curve.values.last().unwrap() > logit_curve.values[0],
        "logit grade-A curve not increasing"
    );
    let forest_curve =
        fiaudit::perturbation::flip_categorical(&forest, &holdout, "grade", "A", &grid, 10, 5)
            .unwrap();
    let forest_sens = fiaudit::perturbation::sensitivity_score(&forest_curve, 0.005);
    assert!(
        forest_sens.score < logit_sens.score,
        "forest curve ({}) not flatter than logit ({})",
        forest_sens.score,
        logit_sens.score
    );
    pass("10 real-data accuracies, top-10 overlap, and flip-curve shapes");
}
