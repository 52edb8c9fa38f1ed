use loci_core::{build_try_design, grid_design, lhd_design, Model, Streams};
use loci_models::hdreg::{design_matrix, nnlasso_fit, nnlasso_kkt_violation, HdRegModel};
use loci_models::multinomial::{sample_counts, MultinomialModel};
use loci_models::npreg::{NpRegModel, RegressionFunction};
use loci_models::weibull::{mps_estimate, simulate, WeibullParams};
use nalgebra::DVector;
use proptest::prelude::*;

#[test]
fn npreg_surrogate_at_the_truth_reproduces_the_regression_model() {
    let model = NpRegModel::standard(20).unwrap();
    let streams = Streams::new(1);
    for f in [RegressionFunction::I, RegressionFunction::II, RegressionFunction::III, RegressionFunction::IV] {
        let truth = model.truth(f, 0.5);
        for k in 0..5 {
            let a = model.simulate(&truth, 20, &mut streams.rng(0, k));
            let b = model.simulate_true(f, 0.5, &mut streams.rng(0, k));
            assert!(a == b);
            assert_eq!(model.target_estimate(&a).unwrap(), model.target_estimate(&b).unwrap());
        }
    }
}

#[test]
fn mps_recovers_the_weibull_parameters_at_large_n() {
    let truth = WeibullParams::new(1.0, 1.5, 2.0).unwrap();
    let sample = simulate(&truth, 4000, &mut Streams::new(2).rng(0, 0));
    let fit = mps_estimate(&sample).unwrap().params;
    assert!((fit.tau - 2.0).abs() < 0.05, "tau {}", fit.tau);
    assert!((fit.a - 1.0).abs() < 0.1, "a {}", fit.a);
    assert!((fit.b - 1.5).abs() < 0.15, "b {}", fit.b);
}

#[test]
fn multinomial_try_points_stay_on_the_simplex() {
    let model = MultinomialModel::new(5).unwrap();
    let counts = sample_counts(&[0.4, 0.3, 0.1, 0.1, 0.1], 60, &mut Streams::new(3).rng(0, 0));
    let center = model.estimate(&counts).unwrap();
    let region = model.neighborhood(&center, 60, 0.5).unwrap();
    for unit in [grid_design(3, 4).unwrap(), lhd_design(25, 4, 9).unwrap()] {
        let d = build_try_design(&center, &region, &unit).unwrap();
        assert!(d.len() > 1);
        for p in d.points() {
            assert!((p.coords().iter().sum::<f64>() - 1.0).abs() < 1e-10);
            assert!(p.coords().iter().all(|&v| v > 0.0));
        }
    }
}

#[test]
fn hdreg_null_design_respects_nonnegativity() {
    let streams = Streams::new(4);
    let model = HdRegModel::new(design_matrix(20, 30, 0.1, &mut streams.rng(0, 0)).unwrap()).unwrap();
    let mut phi = vec![0.0; 30];
    phi[0] = 1.5;
    phi[1] = 0.8;
    phi.push(1.0);
    let y = model.simulate(&phi, 20, &mut streams.rng(0, 1));
    let center = model.estimate(&y).unwrap();
    let region = model.neighborhood(&center, 20, 0.03).unwrap();
    let d = build_try_design(&center, &region, &lhd_design(30, region.design_dims().len(), 0).unwrap()).unwrap();
    for p in d.points() {
        assert!(p.coords().iter().all(|&v| v >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nonnegative_lasso_meets_its_optimality_conditions(seed in 0u64..10_000, lambda in 0.2f64..20.0) {
        let streams = Streams::new(seed);
        let x = design_matrix(15, 25, 0.1, &mut streams.rng(0, 0)).unwrap();
        let y = DVector::from_fn(15, |i, _| x[(i, 0)] - x[(i, 1)] + 0.3 * (i as f64 - 7.0) / 7.0);
        let beta = nnlasso_fit(&x, &y, lambda).unwrap();
        prop_assert!(beta.iter().all(|&b| b >= 0.0));
        prop_assert!(nnlasso_kkt_violation(&x, &y, &beta, lambda) < 1e-4 * (1.0 + lambda));
    }
}
