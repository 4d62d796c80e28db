//! The two worked models used throughout the tests, benches and CLI fixtures,
//! plus a sampler of random degraded models.

use rand::Rng;

use crate::channel_model::{BcWardenModel, Channel};
use crate::region_optimizer::{FamilyFile, PostChannel};
use crate::validation::check_conditions;

pub fn example1_p1() -> Vec<Vec<f64>> {
    vec![
        vec![0.2, 0.28, 0.28, 0.24],
        vec![0.05, 0.1, 0.45, 0.4],
        vec![0.07, 0.37, 0.4, 0.16],
    ]
}

pub fn example1_p2() -> Vec<Vec<f64>> {
    vec![
        vec![0.1884, 0.324, 0.232, 0.2556],
        vec![0.0515, 0.215, 0.331, 0.4025],
        vec![0.0744, 0.399, 0.326, 0.2006],
    ]
}

pub fn example1_q() -> Vec<Vec<f64>> {
    vec![
        vec![0.20, 0.19, 0.36, 0.25],
        vec![0.01, 0.37, 0.17, 0.45],
        vec![0.42, 0.35, 0.05, 0.18],
    ]
}

/// The post-channel that maps the strong user's output onto the weak user's.
pub fn example1_w() -> Vec<Vec<f64>> {
    vec![
        vec![0.9, 0.1, 0.0, 0.0],
        vec![0.02, 0.8, 0.12, 0.06],
        vec![0.01, 0.2, 0.7, 0.09],
        vec![0.0, 0.1, 0.01, 0.89],
    ]
}

/// Ternary input, quaternary outputs, `x0 = 0`.
pub fn example1_model() -> BcWardenModel {
    BcWardenModel::new(
        Channel::from_rows(example1_p1()).expect("valid preset"),
        Channel::from_rows(example1_p2()).expect("valid preset"),
        Channel::from_rows(example1_q()).expect("valid preset"),
        0,
    )
    .expect("valid preset")
}

/// Binary input: BSC(0.2) to user 1, BSC(0.4) to the warden, user 2 sees
/// user 1's output through `[[0.9, 0.1], [c, 1 - c]]`.
pub fn example2_family() -> FamilyFile {
    FamilyFile {
        x0: 0,
        p1: Channel::bsc(0.2).expect("valid preset").to_rows(),
        q: Channel::bsc(0.4).expect("valid preset").to_rows(),
        post_channel: PostChannel::SecondRow {
            first_row: [0.9, 0.1],
        },
        param: "c".to_string(),
        values: (0..=10).map(|i| i as f64 / 10.0).collect(),
    }
}

pub fn example2_model(c: f64) -> BcWardenModel {
    use crate::region_optimizer::ModelFamily;
    example2_family().model(c).expect("valid preset")
}

/// Row drawn from Dirichlet(1, …, 1), floored away from zero so that every
/// support condition holds.
pub(crate) fn random_row(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len)
        .map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3)
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

fn random_channel(rng: &mut impl Rng, inputs: usize, outputs: usize) -> Channel {
    let rows = (0..inputs).map(|_| random_row(rng, outputs)).collect();
    Channel::from_rows(rows).expect("normalised rows")
}

/// Random model with `P2 = P1 · W` and `x0 = 0`, redrawn until all the
/// regularity conditions hold.
pub fn random_degraded_model(
    rng: &mut impl Rng,
    inputs: usize,
    outputs1: usize,
    outputs2: usize,
    warden_outputs: usize,
) -> BcWardenModel {
    assert!(
        inputs >= 2,
        "need a zero symbol and at least one other input"
    );
    loop {
        let p1 = random_channel(rng, inputs, outputs1);
        let w = random_channel(rng, outputs1, outputs2);
        let q = random_channel(rng, inputs, warden_outputs);
        let p2 = p1.compose(&w).expect("matching alphabets");
        let model = BcWardenModel::new(p1, p2, q, 0).expect("valid by construction");
        if check_conditions(&model).all_hold() {
            return model;
        }
    }
}
