mod common;

use proptest::prelude::*;

use common::*;
use skewbm::report::AnalysisReport;
use skewbm::specfile::{parse_spec, Num};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_identities_hold(spec in smooth_spec_strategy()) {
        prop_assert_eq!(profile_properties(&spec), Ok(()));
    }

    #[test]
    fn measure_survives_the_density_round_trip(spec in smooth_spec_strategy()) {
        prop_assert_eq!(roundtrip(&spec), Ok(()));
    }

    #[test]
    fn verdicts_ignore_the_scale_of_the_constants(spec in barrier_spec_strategy()) {
        prop_assert_eq!(scale_invariant(&spec), Ok(()));
    }

    #[test]
    fn reports_round_trip_through_json(spec in barrier_spec_strategy()) {
        let m = measure(spec);
        let r = skewbm::report::analyze(&m, "h").unwrap();
        prop_assert_eq!(AnalysisReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn rationals_parse_to_the_rounded_quotient(p in -10_000i64..10_000, q in 1i64..10_000) {
        prop_assert_eq!(Num::parse(&format!("{p}/{q}")).unwrap().0, p as f64 / q as f64);
    }

    #[test]
    fn spec_hash_ignores_number_spelling(k in -1000i64..1000, w in 1i64..99) {
        let a = parse_spec(&format!("[[atoms]]\nlocation = {k}\nweight = {}\n", w as f64 / 100.0)).unwrap();
        let b = parse_spec(&format!("[[atoms]]\nweight = \"{w}/100\"\nlocation = \"{k}\"\n")).unwrap();
        prop_assert_eq!(a.hash(), b.hash());
    }
}
