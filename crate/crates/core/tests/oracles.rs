mod support;

use std::collections::BTreeMap;

use interview_core::aggregation::{
    aggregate_all, em_aggregate_grid, krippendorff_alpha_grid, one_vs_rest_grid, AggregationConfig,
    DistanceMetric,
};
use interview_core::corpus::RatingGrid;
use interview_core::evaluation::{
    auc_exact, modality_ablation, modality_proportions, mutual_information, pearson,
    ModalitySubset, TrialProtocol,
};
use interview_core::facial::{reconstruct_local_shape, ShapeModel, LANDMARKS};
use interview_core::features::{assemble, ExtractionConfig, Modality};
use interview_core::lexical::LdaConfig;
use interview_core::regression::{
    feature_weights, lasso_train, svr_solve, LassoParams, ModelKind, SvrParams, TrainConfig,
};
use interview_core::synthesis::{generate, oracle_check, OracleInputs, SynthConfig};
use interview_core::TraitId;
use rand::Rng;

use support::*;

fn quick_extraction() -> ExtractionConfig {
    ExtractionConfig {
        lda: LdaConfig {
            topics: 5,
            iterations: 30,
            infer_iterations: 10,
            ..LdaConfig::default()
        },
        ..ExtractionConfig::default()
    }
}

fn alternating(truth: &[f64], offsets: &[f64]) -> Vec<Vec<Option<f64>>> {
    truth
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            offsets.iter().map(|o| Some(a + sign * o)).collect()
        })
        .collect()
}

fn check_against_reference(rows: &[Vec<Option<f64>>]) -> (Vec<f64>, Vec<f64>) {
    let c = em_aggregate_grid(
        &RatingGrid::from_rows(rows).unwrap(),
        &AggregationConfig::default(),
    )
    .unwrap();
    let (y, lam) = em_reference(rows, 1e-4);
    for (got, want) in c.y.iter().zip(&y) {
        assert!((got.unwrap() - want.unwrap()).abs() < 1e-8);
    }
    for (got, want) in c.lambda.iter().zip(&lam) {
        assert!((got.unwrap() - want).abs() <= 1e-8 * want);
    }
    (c.y.into_iter().map(Option::unwrap).collect(), lam)
}

const TRUTH: [f64; 10] = [3.0, 5.0, 4.0, 6.0, 2.0, 4.0, 5.0, 3.0, 6.0, 4.0];

#[test]
fn two_rater_fixed_point_matches_reference() {
    // Two raters always carry equal residuals, so equal starting weights stay equal.
    let rows = alternating(&TRUTH, &[0.0, 2.0]);
    let (y, lam) = check_against_reference(&rows);
    assert_eq!(lam[0], lam[1]);
    for (yi, t) in y.iter().zip(TRUTH) {
        assert!((yi - (t + 1.0)).abs() < 1e-12 || (yi - (t - 1.0)).abs() < 1e-12);
    }
}

#[test]
fn exact_rater_wins_among_three() {
    let rows = alternating(&TRUTH, &[0.0, 2.0, -1.0]);
    let (y, lam) = check_against_reference(&rows);
    assert!(lam[0] > lam[1] && lam[0] > lam[2]);
    for ((yi, t), row) in y.iter().zip(TRUTH).zip(&rows) {
        let mean = row.iter().map(|v| v.unwrap()).sum::<f64>() / 3.0;
        assert!((yi - t).abs() < (mean - t).abs());
    }
}

#[test]
fn textbook_interval_alpha() {
    let rows = [[1.0, 2.0], [2.0, 2.0], [3.0, 4.0], [4.0, 4.0]]
        .map(|r| r.map(Some).to_vec())
        .to_vec();
    let got = krippendorff_alpha_grid(
        &RatingGrid::from_rows(&rows).unwrap(),
        DistanceMetric::Interval,
    )
    .unwrap();
    assert!((got - krippendorff_reference(&rows, false)).abs() < 1e-12);
    assert!((got - 31.0 / 38.0).abs() < 1e-12);
}

#[test]
fn one_vs_rest_matches_the_textbook_formula() {
    let mut r = rng(17);
    let rows: Vec<Vec<Option<f64>>> = (0..5)
        .map(|_| (0..3).map(|_| Some(r.random_range(1..=7) as f64)).collect())
        .collect();
    let grid = RatingGrid::from_rows(&rows).unwrap();
    for (j, (_, got)) in one_vs_rest_grid(&grid).into_iter().enumerate() {
        let own: Vec<f64> = rows.iter().map(|row| row[j].unwrap()).collect();
        let rest: Vec<f64> = rows
            .iter()
            .map(|row| {
                (0..3)
                    .filter(|&k| k != j)
                    .map(|k| row[k].unwrap())
                    .sum::<f64>()
                    / 2.0
            })
            .collect();
        let want = pearson_textbook(&own, &rest);
        match got {
            Some(g) => assert!((g - want).abs() < 1e-12),
            None => assert!(want.is_nan()),
        }
    }
}

#[test]
fn pearson_of_one_swap() {
    let (a, b) = ([1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 2.0, 4.0]);
    let got = pearson(&a, &b).unwrap();
    assert!((got - pearson_textbook(&a, &b)).abs() < 1e-12);
    assert!((got - 0.8).abs() < 1e-12);
}

#[test]
fn one_inversion_in_six() {
    let labels = [false, false, true, false, true, true];
    let scores = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let got = auc_exact(&labels, &scores).unwrap();
    assert_eq!(got, auc_brute(&labels, &scores));
    assert_eq!(got, 8.0 / 9.0);
}

#[test]
fn factorial_design_has_no_mutual_information() {
    let (a, b): (Vec<f64>, Vec<f64>) = (1..=4)
        .flat_map(|x| (1..=4).map(move |y| (x as f64, y as f64)))
        .unzip();
    assert_eq!(mutual_information(&a, &b).unwrap(), 0.0);
}

#[test]
fn reconstruction_is_mean_plus_basis_times_q() {
    let model = ShapeModel::demo();
    let mut r = rng(23);
    for _ in 0..10 {
        let q: Vec<f64> = (0..model.basis_dim())
            .map(|_| r.random_range(-0.1..0.1))
            .collect();
        let got = reconstruct_local_shape(&model, &q).unwrap();
        for p in 0..LANDMARKS {
            for axis in 0..2 {
                let row = 2 * p + axis;
                let want = model.mean_shape()[p][axis]
                    + (0..q.len())
                        .map(|k| model.basis(row, k) * q[k])
                        .sum::<f64>();
                assert!((got[p][axis] - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn svr_matches_the_qp_oracle() {
    let mut r = rng(29);
    for _ in 0..8 {
        let (x, y) = random_svr_instance(&mut r);
        let p = SvrParams::default();
        let s = svr_solve(&x, &y, &p).unwrap();
        let oracle = svr_qp_oracle(&x, &y, p.c, p.epsilon, 20_000);
        assert!((svr_dual(&x, &y, &s.alpha, &s.alpha_hat, p.epsilon) - oracle).abs() < 1e-4);
    }
}

#[test]
fn planted_line_is_recovered_by_svr() {
    let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 3.0]).collect();
    let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
    let s = svr_solve(
        &x,
        &y,
        &SvrParams {
            c: 1000.0,
            epsilon: 0.01,
            ..SvrParams::default()
        },
    )
    .unwrap();
    assert!((1.9..=2.1).contains(&s.w[0]) && (0.9..=1.1).contains(&s.b));
    for (r, t) in x.iter().zip(&y) {
        assert!((s.w[0] * r[0] + s.b - t).abs() <= 0.01 + 1e-3);
    }
    assert!((s.w[0] * 3.0 + s.b - 7.0).abs() < 0.1);
}

#[test]
fn planted_weight_shares_come_back_exactly() {
    let mods = [
        Modality::Prosodic,
        Modality::Lexical,
        Modality::Facial,
        Modality::Prosodic,
    ];
    let s = modality_proportions(&[0.3, -0.3, 0.2, -0.2], &mods, 20).unwrap();
    assert_eq!(s.proportions[&Modality::Prosodic], 0.5);
    assert!((s.proportions[&Modality::Lexical] - 0.3).abs() < 1e-15);
    assert!((s.proportions[&Modality::Facial] - 0.2).abs() < 1e-15);
}

#[test]
fn equal_raters_get_similar_precision() {
    let corpus = generate(&SynthConfig {
        n_interviews: 150,
        rater_sigmas: vec![1.0; 9],
        ..SynthConfig::default()
    })
    .unwrap();
    let truth = aggregate_all(
        corpus.dataset.rating_matrix().unwrap(),
        &AggregationConfig::default(),
    )
    .unwrap();
    let mut cv: Vec<f64> = truth
        .traits
        .values()
        .map(|c| {
            let lam: Vec<f64> = c.lambda.iter().map(|l| l.unwrap()).collect();
            let m = lam.iter().sum::<f64>() / lam.len() as f64;
            (lam.iter().map(|l| (l - m).powi(2)).sum::<f64>() / lam.len() as f64).sqrt() / m
        })
        .collect();
    cv.sort_by(f64::total_cmp);
    assert!(cv[cv.len() / 2] < 0.2, "coefficients of variation {cv:?}");
    assert!(
        cv.iter().all(|&c| c < 0.3),
        "coefficients of variation {cv:?}"
    );
}

#[test]
fn noise_free_corpus_passes_every_oracle_check() {
    let corpus = generate(&SynthConfig {
        n_interviews: 120,
        noise_sd: 0.0,
        ..SynthConfig::default()
    })
    .unwrap();
    let ds = &corpus.dataset;
    let ex = assemble(ds, &quick_extraction()).unwrap();
    let ratings = ds.rating_matrix().unwrap();
    let agg = AggregationConfig::default();
    let consensus = aggregate_all(ratings, &agg).unwrap();
    let rows: Vec<usize> = (0..ex.matrix.n_rows()).collect();
    let models: Vec<_> = corpus
        .truth
        .planted_weights
        .keys()
        .map(|&t| {
            let y: Vec<f64> = consensus
                .series(t, ex.matrix.ids())
                .into_iter()
                .map(Option::unwrap)
                .collect();
            lasso_train(&ex.matrix, &rows, &y, &LassoParams::default(), Some(t)).unwrap()
        })
        .collect();
    let report = oracle_check(
        &corpus.truth,
        &OracleInputs {
            features: &ex.matrix,
            ratings: Some(ratings),
            consensus: Some(&consensus),
            models: &models,
            aggregation: &agg,
        },
    )
    .unwrap();
    for c in &report.checks {
        assert!(c.passed, "{c}");
    }
}

#[test]
fn prosody_only_model_needs_only_prosody() {
    let planted = BTreeMap::from([(
        TraitId::Calm,
        BTreeMap::from([
            ("energy_mean".to_string(), 0.4),
            ("pct_breaks".to_string(), -0.3),
            ("f1_bw".to_string(), 0.3),
        ]),
    )]);
    let corpus = generate(&SynthConfig {
        n_interviews: 120,
        planted_weights: planted,
        ..SynthConfig::default()
    })
    .unwrap();
    let ex = assemble(&corpus.dataset, &quick_extraction()).unwrap();
    let truth = aggregate_all(
        corpus.dataset.rating_matrix().unwrap(),
        &AggregationConfig::default(),
    )
    .unwrap();
    let protocol = TrialProtocol {
        n_trials: 5,
        traits: vec![TraitId::Calm],
        kinds: vec![ModelKind::Lasso],
        ..TrialProtocol::default()
    };
    let subsets: Vec<ModalitySubset> = ["P", "FPL", "FL"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let rows = modality_ablation(
        &ex.matrix,
        &truth,
        &protocol,
        &TrainConfig::default(),
        &subsets,
    )
    .unwrap();
    let r = |name: &str| {
        rows.iter()
            .find(|a| a.subset.to_string() == name)
            .unwrap()
            .mean_r
            .unwrap()
    };
    assert!(
        (r("P") - r("FPL")).abs() < 0.05,
        "P {} FPL {}",
        r("P"),
        r("FPL")
    );
    assert!(r("FPL") > r("FL") + 0.3, "FPL {} FL {}", r("FPL"), r("FL"));
}

#[test]
fn heavier_planted_weight_ranks_higher() {
    let rank_of = |seed: u64, weight: f64| -> usize {
        let mut planted = SynthConfig::default().planted_weights;
        planted
            .get_mut(&TraitId::Engagement)
            .unwrap()
            .insert("We".to_string(), weight);
        let corpus = generate(&SynthConfig {
            n_interviews: 100,
            planted_weights: planted,
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let ex = assemble(&corpus.dataset, &quick_extraction()).unwrap();
        let truth = aggregate_all(
            corpus.dataset.rating_matrix().unwrap(),
            &AggregationConfig::default(),
        )
        .unwrap();
        let y: Vec<f64> = truth
            .series(TraitId::Engagement, ex.matrix.ids())
            .into_iter()
            .map(Option::unwrap)
            .collect();
        let rows: Vec<usize> = (0..y.len()).collect();
        let model = lasso_train(&ex.matrix, &rows, &y, &LassoParams::default(), None).unwrap();
        feature_weights(&model, usize::MAX)
            .iter()
            .position(|e| e.name == "We")
            .unwrap_or(usize::MAX)
    };
    let better = (0..10)
        .filter(|&seed| rank_of(seed, 0.3) < rank_of(seed, 0.12))
        .count();
    assert!(
        better >= 8,
        "heavier weight ranked higher in {better} of 10 seeds"
    );
}
