use covert_core::presets::{example1_model, random_degraded_model};
use covert_core::validation::{null_row_in_hull, Condition};
use covert_core::{check_conditions, find_degrading_channel, Channel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn row_sums_ok(w: &Channel) -> bool {
    w.rows()
        .all(|r| r.iter().all(|&v| v >= 0.0) && (r.iter().sum::<f64>() - 1.0).abs() < 1e-9)
}

#[test]
fn example_is_degraded_but_not_reversed() {
    let m = example1_model();
    let cert = find_degrading_channel(m.p1(), m.p2()).unwrap();
    assert!(cert.feasible && cert.residual <= 1e-9);
    assert!(row_sums_ok(cert.w.as_ref().unwrap()));

    let rev = find_degrading_channel(m.p2(), m.p1()).unwrap();
    assert!(!rev.feasible && rev.w.is_none());
    assert!(rev.residual > 1e-3);
}

#[test]
fn zero_in_warden_null_row_is_reported() {
    let p = Channel::from_rows(vec![vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
    let q = Channel::from_rows(vec![vec![1.0, 0.0], vec![0.3, 0.7]]).unwrap();
    let m = covert_core::BcWardenModel::new(p.clone(), p, q, 0).unwrap();
    let rep = check_conditions(&m);
    assert!(!rep.cond_b && rep.cond_a && rep.cond_c_user1);
    assert_eq!(rep.violations.len(), 1);
    assert_eq!(rep.violations[0].condition, Condition::WardenContinuity);
    assert_eq!(
        (rep.violations[0].input, rep.violations[0].output),
        (1, Some(1))
    );
}

/// Distance from `target` to the segment `[a, b]`, sampled every 1e-3.
fn segment_distance(a: &[f64], b: &[f64], target: &[f64]) -> f64 {
    (0..=1000)
        .map(|i| {
            let t = i as f64 / 1000.0;
            a.iter()
                .zip(b)
                .zip(target)
                .map(|((x, y), z)| (t * x + (1.0 - t) * y - z).abs())
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn pmf(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, len).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_degraded_models_are_certified(seed in any::<u64>(), nx in 2usize..=3, ny1 in 2usize..=4, ny2 in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_degraded_model(&mut rng, nx, ny1, ny2, 3);
        prop_assert!(check_conditions(&m).all_hold());
        let cert = find_degrading_channel(m.p1(), m.p2()).unwrap();
        prop_assert!(cert.feasible);
        prop_assert!(cert.residual <= 1e-9);
        let w = cert.w.unwrap();
        prop_assert!(row_sums_ok(&w));
        let recomposed = m.p1().compose(&w).unwrap();
        prop_assert!(recomposed.max_abs_diff(m.p2()).unwrap() <= 1e-9);
    }

    #[test]
    fn mixtures_of_other_rows_are_in_the_hull(a in pmf(4), b in pmf(4), t in 0.0f64..=1.0) {
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let q = Channel::from_rows(vec![mix, a, b]).unwrap();
        prop_assert!(null_row_in_hull(&q, 0));
    }

    #[test]
    fn hull_test_agrees_with_grid_oracle(a in pmf(3), b in pmf(3), z in pmf(3)) {
        let d = segment_distance(&a, &b, &z);
        let q = Channel::from_rows(vec![z, a, b]).unwrap();
        let in_hull = null_row_in_hull(&q, 0);
        // The grid is within 2e-3 (ℓ₁) of any point on the segment.
        if d > 2e-3 {
            prop_assert!(!in_hull, "grid distance {d} but reported inside");
        }
        if in_hull {
            prop_assert!(d <= 2e-3);
        }
    }

    #[test]
    fn removing_null_support_never_restores_continuity(p in pmf(3), q1 in pmf(3), q2 in pmf(3), drop in 0usize..3) {
        let mut q0 = p.clone();
        q0[drop] = 0.0;
        let s: f64 = q0.iter().sum();
        q0.iter_mut().for_each(|v| *v /= s);
        let full = Channel::from_rows(vec![p.clone(), q1.clone(), q2.clone()]).unwrap();
        let thinned = Channel::from_rows(vec![q0, q1, q2]).unwrap();
        let users = Channel::identity(3).unwrap();
        let m_full = covert_core::BcWardenModel::new(users.clone(), users.clone(), full, 0).unwrap();
        let m_thin = covert_core::BcWardenModel::new(users.clone(), users, thinned, 0).unwrap();
        prop_assert!(check_conditions(&m_full).cond_b);
        prop_assert!(!check_conditions(&m_thin).cond_b);
    }
}
