//! Shared inputs for the criterion benches.

use covert_core::presets::{example1_model, example2_model};
use covert_core::{BcWardenModel, Channel, Distribution, OptimizerConfig, SuperpositionParams};

pub fn ternary() -> BcWardenModel {
    example1_model()
}

pub fn binary() -> BcWardenModel {
    example2_model(0.5)
}

/// Reduced multi-start budget so a single solve fits a bench iteration.
pub fn light_config() -> OptimizerConfig {
    OptimizerConfig {
        restarts: 8,
        local_iters: 1500,
        ..OptimizerConfig::default()
    }
}

/// An interior design with `|B| = 2` for the ternary model.
pub fn ternary_design() -> SuperpositionParams {
    SuperpositionParams::new(
        0.4,
        Distribution::new(vec![0.0, 0.7, 0.3]).expect("pmf"),
        Distribution::new(vec![0.6, 0.4]).expect("pmf"),
        Channel::from_rows(vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.2, 0.7]]).expect("rows"),
    )
    .expect("consistent dimensions")
}
