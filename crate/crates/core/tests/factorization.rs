mod common;

use common::{arb_ratings, rating_table, scale};
use ndarray::Array2;
use noniid_core::baseline::{mf_gradient, mf_objective, train_mf, MfConfig, RatingMatrixView};
use noniid_core::coupled::{cmf_gradient, cmf_objective, train_cmf, train_cmf_with_graphs, CmfConfig, CouplingGraph};
use noniid_core::similarity::ObjectSimMatrix;
use noniid_core::store::{Rating, RatingTable, Side};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

fn random_sims(rng: &mut ChaCha8Rng, side: Side, ids: &[String]) -> ObjectSimMatrix {
    let n = ids.len();
    let mut values = vec![0.0; n * n];
    for a in 0..n {
        values[a * n + a] = 1.0;
        for b in a + 1..n {
            // some exact zeros so the graph drops pairs
            let s = if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() };
            values[a * n + b] = s;
            values[b * n + a] = s;
        }
    }
    ObjectSimMatrix::from_dense(side, ids.to_vec(), values).unwrap()
}

/// Central differences of `f` at every coordinate of `x`.
fn numeric_gradient(x: &Array2<f64>, f: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
    let h = 1e-5;
    let mut g = Array2::zeros(x.raw_dim());
    let mut probe = x.clone();
    for idx in ndarray::indices(x.raw_dim()) {
        let orig = probe[idx];
        probe[idx] = orig + h;
        let up = f(&probe);
        probe[idx] = orig - h;
        let down = f(&probe);
        probe[idx] = orig;
        g[idx] = (up - down) / (2.0 * h);
    }
    g
}

fn relative_error(analytic: &Array2<f64>, numeric: &Array2<f64>) -> f64 {
    let diff = (analytic - numeric).mapv(|d| d * d).sum().sqrt();
    let scale = numeric.mapv(|d| d * d).sum().sqrt().max(analytic.mapv(|d| d * d).sum().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn arb_view() -> impl Strategy<Value = RatingTable> {
    (2usize..7, 2usize..7)
        .prop_flat_map(|(u, i)| arb_ratings(u, i, 0.6))
        .prop_filter("non-empty", |r| !r.is_empty())
        .prop_map(rating_table)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mf_gradient_matches_finite_differences(table in arb_view(), seed in any::<u64>(), k in 1usize..4) {
        let view = RatingMatrixView::from_table(&table).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = uniform(&mut rng, view.n_users(), k);
        let q = uniform(&mut rng, view.n_items(), k);
        let lambda = rng.random_range(0.0..2.0);
        let (gp, gq) = mf_gradient(&view, &p, &q, lambda);
        let np = numeric_gradient(&p, |p| mf_objective(&view, p, &q, lambda));
        let nq = numeric_gradient(&q, |q| mf_objective(&view, &p, q, lambda));
        prop_assert!(relative_error(&gp, &np) < 1e-4);
        prop_assert!(relative_error(&gq, &nq) < 1e-4);
    }

    #[test]
    fn cmf_gradient_matches_finite_differences(table in arb_view(), seed in any::<u64>(), k in 1usize..4) {
        let view = RatingMatrixView::from_table(&table).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users = random_sims(&mut rng, Side::User, view.user_ids());
        let items = random_sims(&mut rng, Side::Item, view.item_ids());
        let mut cfg = CmfConfig::default();
        cfg.mf.regularization = rng.random_range(0.0..2.0);
        cfg.alpha = rng.random_range(0.0..3.0);
        cfg.beta = rng.random_range(0.0..3.0);
        cfg.top_m = rng.random_range(1..6);
        let ug = CouplingGraph::build(&view, &users, cfg.top_m).unwrap();
        let ig = CouplingGraph::build(&view, &items, cfg.top_m).unwrap();
        let p = uniform(&mut rng, view.n_users(), k);
        let q = uniform(&mut rng, view.n_items(), k);
        let (gp, gq) = cmf_gradient(&view, &p, &q, &cfg, &ug, &ig).unwrap();
        let np = numeric_gradient(&p, |p| cmf_objective(&view, p, &q, &cfg, &ug, &ig).unwrap());
        let nq = numeric_gradient(&q, |q| cmf_objective(&view, &p, q, &cfg, &ug, &ig).unwrap());
        prop_assert!(relative_error(&gp, &np) < 1e-4);
        prop_assert!(relative_error(&gq, &nq) < 1e-4);
    }

    #[test]
    fn zero_strength_cmf_is_bitwise_mf(table in arb_view(), seed in any::<u64>()) {
        let view = RatingMatrixView::from_table(&table).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users = random_sims(&mut rng, Side::User, view.user_ids());
        let items = random_sims(&mut rng, Side::Item, view.item_ids());
        let mf = MfConfig { factors: 3, epochs: 15, seed, ..MfConfig::default() };
        let cfg = CmfConfig { mf, alpha: 0.0, beta: 0.0, top_m: 3 };
        let plain = train_mf(&view, &mf).unwrap();
        let coupled = train_cmf(&view, &users, &items, &cfg).unwrap();
        let bits = |a: ndarray::ArrayView2<f64>| a.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(plain.p()), bits(coupled.core().p()));
        prop_assert_eq!(bits(plain.item_factors()), bits(coupled.core().item_factors()));
        for u in 0..view.n_users() {
            for i in 0..view.n_items() {
                prop_assert_eq!(plain.predict_at(u, i).to_bits(), coupled.predict_at(u, i).to_bits());
                let r = plain.predict_at(u, i);
                prop_assert!((1.0..=5.0).contains(&r));
            }
        }
    }
}

#[test]
fn smoothness_shrinks_as_alpha_grows() {
    // users 0 and 1 are fully similar but rate the shared items differently
    let ratings = vec![
        Rating::new("u0", "i0", 5.0),
        Rating::new("u0", "i1", 4.0),
        Rating::new("u0", "i2", 1.0),
        Rating::new("u1", "i0", 1.0),
        Rating::new("u1", "i1", 2.0),
        Rating::new("u1", "i2", 5.0),
        Rating::new("u2", "i0", 3.0),
        Rating::new("u2", "i2", 4.0),
    ];
    let view = RatingMatrixView::new(
        &ratings,
        scale(),
        &["u0".into(), "u1".into(), "u2".into()],
        &["i0".into(), "i1".into(), "i2".into()],
    )
    .unwrap();
    #[rustfmt::skip]
    let users = ObjectSimMatrix::from_dense(
        Side::User,
        view.user_ids().to_vec(),
        vec![1.0, 1.0, 0.2,
             1.0, 1.0, 0.2,
             0.2, 0.2, 1.0],
    )
    .unwrap();
    let items = ObjectSimMatrix::from_dense(Side::Item, view.item_ids().to_vec(), vec![
        1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0,
    ])
    .unwrap();
    let ug = CouplingGraph::build(&view, &users, 2).unwrap();
    let ig = CouplingGraph::build(&view, &items, 2).unwrap();
    let mf = MfConfig {
        factors: 3,
        learning_rate: 0.01,
        regularization: 0.05,
        epochs: 400,
        seed: 7,
    };
    let mut last = f64::INFINITY;
    let mut last_gap = f64::INFINITY;
    for alpha in [0.0, 0.1, 1.0, 10.0] {
        let cfg = CmfConfig { mf, alpha, beta: 0.0, top_m: 2 };
        let model = train_cmf_with_graphs(&view, &ug, &ig, &cfg).unwrap();
        let smooth = ug.smoothness(model.core().p());
        let p = model.core().p();
        let gap = (&p.row(0) - &p.row(1)).mapv(|d| d * d).sum().sqrt();
        assert!(smooth <= last, "alpha {alpha}: {smooth} > {last}");
        assert!(gap <= last_gap, "alpha {alpha}: {gap} > {last_gap}");
        last = smooth;
        last_gap = gap;
    }
}

#[test]
fn toy_loss_never_rises_at_small_steps() {
    let ratings = ["a", "b"]
        .iter()
        .flat_map(|u| ["x", "y"].map(|i| Rating::new(*u, i, 3.0)))
        .collect();
    let view = RatingMatrixView::from_table(&rating_table(ratings)).unwrap();
    for eta in [0.001, 0.005, 0.01] {
        for seed in 0..10 {
            let cfg = MfConfig {
                factors: 1,
                learning_rate: eta,
                regularization: 1e-4,
                epochs: 500,
                seed,
            };
            let model = train_mf(&view, &cfg).unwrap();
            // once converged, successive losses differ only by rounding
            for w in model.loss_trace().windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "eta {eta} seed {seed}: {} -> {}", w[0], w[1]);
            }
        }
    }
}
