mod common;

use rsform::turrittin::{reduce_linear_system, replay_residual, TurrittinError};

#[test]
fn corpus_reduces_with_exact_replay() {
    for (name, sys) in common::linear_corpus() {
        let red = reduce_linear_system(&sys).unwrap_or_else(|e| panic!("{name}: {e}"));
        red.form.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        let res = replay_residual(&sys, &red.certificate, &red.form.system()).unwrap();
        assert_eq!(res, 0.0, "{name}");
        assert!(red.rank_trace.iter().all(|(b, a)| a <= b), "{name}");
    }
}

#[test]
fn non_gaussian_spectrum_is_rejected() {
    let err = reduce_linear_system(&common::cyclic_three()).unwrap_err();
    assert!(matches!(err, TurrittinError::Irrational(_)));
}
