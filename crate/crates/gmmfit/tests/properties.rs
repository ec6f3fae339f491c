//! Randomized invariant checks over generated models and datasets.

mod common;

use gmmfit::fitter::{fit, mm_step, update_weights, FitConfig};
use gmmfit::mixture::WEIGHT_FLOOR;
use gmmfit::{
    check_ascent, log_sum_exp, sample_dataset, DataSet, GaussianComponent, MixtureModel,
    RandomSource, SpdMatrix, SquareMat,
};
use proptest::prelude::*;

fn dataset_strategy(dim: usize) -> impl Strategy<Value = DataSet> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, dim), 3..=10)
        .prop_map(|rows| DataSet::from_rows(&rows).unwrap())
}

// Diagonal covariances are kept at 0.5 or above so no responsibility column
// can underflow to an exactly zero mass on data within ±10.
fn component_strategy(dim: usize) -> impl Strategy<Value = GaussianComponent> {
    (
        prop::collection::vec(-5.0..5.0f64, dim),
        prop::collection::vec(0.5..4.0f64, dim),
    )
        .prop_map(|(mean, diag)| {
            let cov = SpdMatrix::cholesky(&SquareMat::from_diagonal(&diag)).unwrap();
            GaussianComponent::new(mean, cov).unwrap()
        })
}

fn model_strategy(dim: usize, k: usize) -> impl Strategy<Value = MixtureModel> {
    (
        prop::collection::vec(0.05..1.0f64, k),
        prop::collection::vec(component_strategy(dim), k),
    )
        .prop_map(|(raw, comps)| {
            let total: f64 = raw.iter().sum();
            let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            MixtureModel::new(weights, comps).unwrap()
        })
}

fn instance_strategy() -> impl Strategy<Value = (MixtureModel, DataSet)> {
    (1usize..=2, 1usize..=3)
        .prop_flat_map(|(dim, k)| (model_strategy(dim, k), dataset_strategy(dim)))
}

fn instance_with_permutation() -> impl Strategy<Value = (MixtureModel, DataSet, Vec<usize>)> {
    (1usize..=2, 2usize..=3).prop_flat_map(|(dim, k)| {
        (
            model_strategy(dim, k),
            dataset_strategy(dim),
            Just((0..k).collect::<Vec<usize>>()).prop_shuffle(),
        )
    })
}

fn permute_model(m: &MixtureModel, perm: &[usize]) -> MixtureModel {
    MixtureModel::new(
        perm.iter().map(|&p| m.weights()[p]).collect(),
        perm.iter().map(|&p| m.components()[p].clone()).collect(),
    )
    .unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn log_sum_exp_between_max_and_max_plus_log_n(
        v in prop::collection::vec(-1e6..1e6f64, 1..16)
    ) {
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = log_sum_exp(&v).unwrap();
        prop_assert!(lse >= m - 1e-12);
        prop_assert!(lse <= m + (v.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn log_sum_exp_is_shift_invariant(
        v in prop::collection::vec(-100.0..100.0f64, 1..12),
        c in -50.0..50.0f64
    ) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let a = log_sum_exp(&shifted).unwrap();
        let b = log_sum_exp(&v).unwrap() + c;
        prop_assert!(close(a, b, 1e-12), "{a} vs {b}");
    }

    #[test]
    fn responsibility_rows_lie_on_the_simplex((m, d) in instance_strategy()) {
        let r = m.responsibilities(&d).unwrap();
        for i in 0..d.len() {
            let row = r.row(i);
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn updated_weights_stay_on_the_simplex((m, d) in instance_strategy()) {
        let r = m.responsibilities(&d).unwrap();
        let w = update_weights(&r);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.iter().all(|v| *v >= WEIGHT_FLOOR));
    }

    #[test]
    fn log_likelihood_ignores_component_order(
        (m, d, perm) in instance_with_permutation()
    ) {
        let a = m.log_likelihood(&d).unwrap();
        let b = permute_model(&m, &perm).log_likelihood(&d).unwrap();
        prop_assert!(close(a, b, 1e-12), "{a} vs {b}");
    }

    #[test]
    fn mm_step_is_permutation_equivariant((m, d, perm) in instance_with_permutation()) {
        let cfg = FitConfig::default();
        let (a, _) = mm_step(&m, &d, &cfg).unwrap();
        let (b, _) = mm_step(&permute_model(&m, &perm), &d, &cfg).unwrap();
        for (j, &p) in perm.iter().enumerate() {
            prop_assert!(close(b.weights()[j], a.weights()[p], 1e-12));
            for (x, y) in b.component(j).mean().iter().zip(a.component(p).mean()) {
                prop_assert!(close(*x, *y, 1e-12));
            }
            let mb = b.component(j).cov().to_matrix();
            let ma = a.component(p).cov().to_matrix();
            for (x, y) in mb.as_slice().iter().zip(ma.as_slice()) {
                prop_assert!(close(*x, *y, 1e-12));
            }
        }
    }

    #[test]
    fn step_output_satisfies_model_invariants((m, d) in instance_strategy()) {
        let cfg = FitConfig::default();
        let mut model = m;
        for _ in 0..2 {
            model = mm_step(&model, &d, &cfg).unwrap().0;
            let sum: f64 = model.weights().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(model.weights().iter().all(|v| *v >= WEIGHT_FLOOR));
            for c in model.components() {
                prop_assert!(SpdMatrix::cholesky(&c.cov().to_matrix()).is_ok());
            }
        }
    }

    #[test]
    fn sampling_is_a_pure_function_of_the_seed(
        (m, _) in instance_strategy(),
        seed in any::<u64>(),
        n in 1usize..20
    ) {
        let (da, la) = sample_dataset(&m, n, &mut RandomSource::new(seed)).unwrap();
        let (db, lb) = sample_dataset(&m, n, &mut RandomSource::new(seed)).unwrap();
        prop_assert_eq!(la, lb);
        for (ra, rb) in da.rows().zip(db.rows()) {
            prop_assert_eq!(ra, rb);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fitted_traces_ascend_and_models_stay_valid(
        (_, d) in instance_strategy(),
        k in 1usize..=2,
        seed in 0u64..1000
    ) {
        let cfg = FitConfig { max_iter: 60, seed, ..FitConfig::default() };
        let (model, trace) = fit(&d, k, &cfg).unwrap();
        prop_assert!(check_ascent(&trace));
        let sum: f64 = model.weights().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(model.weights().iter().all(|v| *v >= WEIGHT_FLOOR));
        for c in model.components() {
            prop_assert!(SpdMatrix::cholesky(&c.cov().to_matrix()).is_ok());
        }
    }
}
