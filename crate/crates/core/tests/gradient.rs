mod common;

use common::gradcheck::check;
use sugmine::model::Variant;

#[test]
fn every_variant_matches_finite_differences() {
    for v in Variant::ALL {
        let (bad, _) = check(v, false);
        assert!(bad.is_empty(), "{bad:?}");
    }
}

#[test]
fn bidirectional_matches_finite_differences() {
    for v in [Variant::Hybrid, Variant::LstmOnly] {
        let (bad, _) = check(v, true);
        assert!(bad.is_empty(), "{bad:?}");
    }
}
