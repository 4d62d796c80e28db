use covert_core::covert_rates::user_capacity;
use covert_core::presets::{example1_model, example2_model, random_degraded_model};
use covert_core::{
    gamma_star, max_l2_given_l1, maximize_weighted, pareto_boundary, rate_pair, OptimizerConfig,
    Weight,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quick() -> OptimizerConfig {
    OptimizerConfig {
        restarts: 8,
        local_iters: 1500,
        ..OptimizerConfig::default()
    }
}

#[test]
fn same_seed_same_boundary() {
    let m = example1_model();
    let a = pareto_boundary(&m, 6, &quick()).unwrap();
    let b = pareto_boundary(&m, 6, &quick()).unwrap();
    assert_eq!(a.points, b.points);
    assert_eq!(a.params, b.params);
}

#[test]
fn reported_points_are_reproduced_by_their_designs() {
    let m = example1_model();
    let front = pareto_boundary(&m, 8, &quick()).unwrap();
    for (p, d) in front.points.iter().zip(&front.params) {
        let r = rate_pair(&m, d).unwrap();
        assert!(
            (r.l1 - p.l1).abs() <= 1e-9 && (r.l2 - p.l2).abs() <= 1e-9,
            "{p:?} vs {r:?}"
        );
    }
}

#[test]
fn boundary_is_monotone_and_spans_the_axes() {
    let m = example1_model();
    let front = pareto_boundary(&m, 10, &quick()).unwrap();
    let pts = &front.points;
    for w in pts.windows(2) {
        assert!(w[0].l1 > w[1].l1 && w[0].l2 < w[1].l2, "{w:?}");
    }
    let first = pts.first().unwrap();
    let last = pts.last().unwrap();
    assert!((first.l1 - front.meta.l1_star).abs() < 1e-9);
    assert!((last.l2 - front.meta.l2_star).abs() < 1e-9);
    // Every sample sits on or above the time-sharing line.
    for p in pts {
        assert!(p.l1 / front.meta.l1_star + p.l2 / front.meta.l2_star >= 1.0 - 1e-9);
    }
}

#[test]
fn constrained_search_meets_its_target() {
    let m = example1_model();
    for target in [0.1, 0.25, 0.4] {
        let (r, d) = max_l2_given_l1(&m, target, &quick()).unwrap();
        assert!(r.l1 >= target - 1e-8, "{target}: {r:?}");
        assert_eq!(rate_pair(&m, &d).unwrap(), r);
    }
    assert!(max_l2_given_l1(&m, 0.5, &quick()).is_err());
}

#[test]
fn weighted_extremes_recover_the_capacities() {
    let m = example1_model();
    let (r, _) = maximize_weighted(&m, Weight::Infinite, &quick()).unwrap();
    let l2s = user_capacity(&m, 2).unwrap().value;
    assert!((r.l2 - l2s).abs() < 1e-9);
    let (r, _) = maximize_weighted(&m, Weight::Finite(0.0), &quick()).unwrap();
    let l1s = user_capacity(&m, 1).unwrap().value;
    assert!((r.l1 - l1s).abs() < 1e-9);
}

#[test]
fn gamma_never_falls_below_time_sharing() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..8 {
        let m = random_degraded_model(&mut rng, 3, 3, 3, 3);
        let g = gamma_star(&m, &quick()).unwrap();
        assert!(g.value >= 1.0 - 1e-6, "{}", g.value);
        let r = rate_pair(&m, &g.params).unwrap();
        assert!((r.l1 / g.l1_star + r.l2 / g.l2_star - g.value).abs() < 1e-9);
    }
}

#[test]
fn binary_family_gamma_is_above_one_when_users_differ() {
    let g = gamma_star(&example2_model(0.5), &quick()).unwrap();
    assert!(g.value > 1.01, "{}", g.value);
}
