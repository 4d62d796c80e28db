use std::path::PathBuf;

use covert_core::presets::{example1_model, random_degraded_model};
use covert_core::{load_model, save_model, CovertError};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

#[test]
fn example_fixture_matches_preset() {
    let m = load_model(fixture("example1.json")).unwrap();
    assert_eq!(m, example1_model());
}

#[test]
fn bad_fixtures_are_rejected_with_context() {
    let err = load_model(fixture("bad_row_sum.json")).unwrap_err();
    assert!(matches!(err, CovertError::InChannel { .. }), "{err}");
    assert!(err.to_string().contains("row"), "{err}");

    let err = load_model(fixture("malformed.json")).unwrap_err();
    assert!(matches!(err, CovertError::Parse(_)), "{err}");

    let err = load_model(fixture("does_not_exist.json")).unwrap_err();
    assert!(matches!(err, CovertError::Io { .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn save_then_load_is_identity(seed in any::<u64>(), nx in 2usize..=3, ny in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_degraded_model(&mut rng, nx, ny, 3, ny);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&model, &path).unwrap();
        prop_assert_eq!(load_model(&path).unwrap(), model);
    }
}
