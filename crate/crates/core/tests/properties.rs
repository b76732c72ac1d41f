use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use spdalign::baselines::coral;
use spdalign::covariance::{centered_scatter, empirical_covariance, pairwise_scatter};
use spdalign::gca::{adapt_features, fit, geometry_penalty, objective_eta, objective_omega, solve_geometric, weighted_objective};
use spdalign::spd::{relative_error, sharp_mean};
use spdalign::{HyperParams, Method, SpdMatrix};

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Random linear map with singular values between 1/3 and 3.
fn mixing(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let u = gaussian(rng, dim, dim).qr().q();
    let v = gaussian(rng, dim, dim).qr().q();
    let s = DVector::from_fn(dim, |_, _| 3f64.powf(rng.random_range(-1.0..1.0)));
    u * DMatrix::from_diagonal(&s) * v
}

fn domains(seed: u64, dim: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix_s = mixing(&mut rng, dim);
    let mix_t = mixing(&mut rng, dim);
    let n = rng.random_range(3 * dim..6 * dim);
    let m = rng.random_range(3 * dim..6 * dim);
    let source = gaussian(&mut rng, n, dim) * mix_s;
    let target = gaussian(&mut rng, m, dim) * mix_t;
    (source, target)
}

/// A point on the geodesic through `a` in a random symmetric direction.
fn perturb(a: &SpdMatrix, rng: &mut ChaCha8Rng, step: f64) -> SpdMatrix {
    let dim = a.dim();
    let e = gaussian(rng, dim, dim);
    let e = (&e + e.transpose()) * (0.5 * step);
    let root = a.sqrt();
    let inner = SpdMatrix::new(e.symmetric_eigen().recompose_exp()).unwrap();
    inner.congruence(root.as_matrix()).unwrap()
}

trait Exp {
    fn recompose_exp(self) -> DMatrix<f64>;
}

impl Exp for nalgebra::linalg::SymmetricEigen<f64, nalgebra::Dyn> {
    fn recompose_exp(mut self) -> DMatrix<f64> {
        self.eigenvalues.apply(|l| *l = l.exp());
        let m = self.recompose();
        (&m + m.transpose()) * 0.5
    }
}

fn params_at(t: f64) -> HyperParams {
    HyperParams {
        t,
        ..HyperParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn midpoint_matches_target_scatter(seed in any::<u64>(), dim in 2usize..8) {
        let (source, target) = domains(seed, dim);
        let p = params_at(0.5);
        let model = fit(Method::Gca1, &source, &target, &p).unwrap();
        let adapted = adapt_features(&model, &source).unwrap();
        let a_s = pairwise_scatter(&source, p.eps).unwrap();
        let a_t = pairwise_scatter(&target, p.eps).unwrap();
        let a = model.metric().unwrap().as_matrix();
        let moved = a * a_s.as_matrix() * a;
        prop_assert!(relative_error(&moved, a_t.as_matrix()) <= 1e-6);
        let raw_s = centered_scatter(&source);
        let raw_adapted = centered_scatter(&adapted);
        prop_assert!(relative_error(&raw_adapted, &(a * raw_s * a)) <= 1e-10);
    }

    #[test]
    fn coral_and_gca1_both_match_target_covariance(seed in any::<u64>(), dim in 2usize..8) {
        let (source, target) = domains(seed, dim);
        let eps = HyperParams::default().eps;
        let c_t = empirical_covariance(&target, eps).unwrap();
        let c_s = empirical_covariance(&source, eps).unwrap();
        let w = coral(&source, &target, eps).unwrap().matrix().clone();
        let coral_cov = &w * c_s.as_matrix() * w.transpose();
        prop_assert!(relative_error(&coral_cov, c_t.as_matrix()) <= 1e-8);

        // pairwise scatter is twice the covariance, so GCA1 at t = 1/2
        // solves the same matching problem
        let a = fit(Method::Gca1, &source, &target, &params_at(0.5)).unwrap();
        let a = a.metric().unwrap().as_matrix();
        prop_assert!(relative_error(&(a * c_s.as_matrix() * a), c_t.as_matrix()) <= 1e-5);
    }

    #[test]
    fn optimal_omega_is_twice_the_source_trace(seed in any::<u64>(), dim in 2usize..8) {
        let (source, target) = domains(seed, dim);
        let sol = solve_geometric(Method::Gca1, &source, &target, &params_at(0.5)).unwrap();
        let omega = objective_omega(&sol.metric, &sol.source_matrix, &sol.target_matrix);
        let twice = 2.0 * sol.metric.trace_product(sol.source_matrix.as_matrix());
        prop_assert!((omega - twice).abs() <= 1e-10 * omega);
    }

    #[test]
    fn swapping_domains_inverts_the_midpoint(seed in any::<u64>(), dim in 2usize..8) {
        let (source, target) = domains(seed, dim);
        let p = params_at(0.5);
        let forward = fit(Method::Gca1, &source, &target, &p).unwrap();
        let backward = fit(Method::Gca1, &target, &source, &p).unwrap();
        let inv = forward.metric().unwrap().inverse();
        let e = relative_error(backward.metric().unwrap().as_matrix(), inv.as_matrix());
        prop_assert!(e <= 1e-9, "error {e:e}");
    }

    #[test]
    fn common_translation_leaves_gca1_unchanged(seed in any::<u64>(), dim in 2usize..8, shift in -50.0f64..50.0) {
        let (source, target) = domains(seed, dim);
        let p = params_at(0.3);
        let base = fit(Method::Gca1, &source, &target, &p).unwrap();
        let moved = fit(Method::Gca1, &source.add_scalar(shift), &target.add_scalar(shift), &p).unwrap();
        let e = relative_error(base.metric().unwrap().as_matrix(), moved.metric().unwrap().as_matrix());
        prop_assert!(e <= 1e-8);
    }

    #[test]
    fn weighted_mean_beats_nearby_points(seed in any::<u64>(), dim in 2usize..6, t in 0.05f64..0.95) {
        let (source, target) = domains(seed, dim);
        let sol = solve_geometric(Method::Gca1, &source, &target, &params_at(t)).unwrap();
        let best = weighted_objective(&sol.metric, &sol.source_matrix, &sol.target_matrix, t);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..100 {
            let probe = perturb(&sol.metric, &mut rng, 0.05);
            let value = weighted_objective(&probe, &sol.source_matrix, &sol.target_matrix, t);
            prop_assert!(value >= best - 1e-10 * best.abs().max(1.0));
        }
    }
}

#[test]
fn geodesic_midpoint_minimizes_omega() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..10 {
        let (source, target) = domains(seed, 5);
        let sol = solve_geometric(Method::Gca1, &source, &target, &params_at(0.5)).unwrap();
        let best = objective_omega(&sol.metric, &sol.source_matrix, &sol.target_matrix);
        for _ in 0..50 {
            let probe = perturb(&sol.metric, &mut rng, 0.1);
            assert!(objective_omega(&probe, &sol.source_matrix, &sol.target_matrix) >= best * (1.0 - 1e-12));
        }
    }
}

#[test]
fn gca3_is_a_local_minimum_of_eta() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let p = params_at(0.5);
    for seed in 0..5 {
        let (source, target) = domains(seed, 4);
        let sol = solve_geometric(Method::Gca3, &source, &target, &p).unwrap();
        let a_s = pairwise_scatter(&source, p.eps).unwrap();
        let penalty = geometry_penalty(&source, &target, &p).unwrap();
        let best = objective_eta(&sol.metric, &a_s, &sol.target_matrix, &penalty);
        for _ in 0..50 {
            let probe = perturb(&sol.metric, &mut rng, 1e-3);
            assert!(objective_eta(&probe, &a_s, &sol.target_matrix, &penalty) >= best * (1.0 - 1e-12));
        }
    }
}

#[test]
fn endpoints_of_the_adapted_metric() {
    let (source, target) = domains(1, 4);
    let a_s = pairwise_scatter(&source, 1e-6).unwrap();
    let a_t = pairwise_scatter(&target, 1e-6).unwrap();
    let m0 = fit(Method::Gca1, &source, &target, &params_at(0.0)).unwrap();
    let m1 = fit(Method::Gca1, &source, &target, &params_at(1.0)).unwrap();
    assert!(relative_error(m0.metric().unwrap().as_matrix(), a_s.inverse().as_matrix()) <= 1e-10);
    assert!(relative_error(m1.metric().unwrap().as_matrix(), a_t.as_matrix()) <= 1e-10);
    let mid = sharp_mean(&a_s.inverse(), &a_t, 0.5).unwrap();
    let m = fit(Method::Gca1, &source, &target, &params_at(0.5)).unwrap();
    assert_eq!(m.metric().unwrap().as_matrix(), mid.as_matrix());
}

