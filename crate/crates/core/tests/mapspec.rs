mod common;

use blowdyn::germ::random_germ;
use blowdyn::mapspec::{parse_map_spec, MapSpec, MapSpecError};
use common::*;
use proptest::prelude::*;

const BLOCK: &str = r#""dim":2,"blocks":[{"mu":2,"lambda":"1"}]"#;

fn spec(terms: &str, options: &str) -> String {
    format!(r#"{{{BLOCK},"terms":[{terms}]{options}}}"#)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn germs_round_trip_through_json(s in structure(5), seed in any::<u64>(), degree in 2u32..=3) {
        let f = random_germ(&mut rng(seed), &s, degree, 0.3);
        let text = MapSpec::from_germ(&f).to_json();
        prop_assert_eq!(parse_map_spec(&text).unwrap(), f);
    }

    #[test]
    fn stated_linear_terms_change_nothing(seed in any::<u64>()) {
        let f = random_germ(&mut rng(seed), &blowdyn::partition::JordanStructure::unipotent_block(2).unwrap(), 3, 0.5);
        let mut m = MapSpec::from_germ(&f);
        for (j, e) in [(1, vec![1, 0]), (1, vec![0, 1]), (2, vec![0, 1])] {
            m.terms.push(blowdyn::mapspec::TermSpec { j, exp: e, coeff: "1".into() });
        }
        prop_assert_eq!(m.to_germ().unwrap(), f);
    }
}

#[test]
fn contradicting_linear_term_is_rejected() {
    let e = parse_map_spec(&spec(r#"{"j":2,"exp":[1,0],"coeff":"1"}"#, "")).unwrap_err();
    assert!(matches!(e, MapSpecError::JordanMismatch { row: 2, col: 1, .. }), "{e:?}");
}

#[test]
fn duplicates_and_constants_are_rejected() {
    let dup = r#"{"j":1,"exp":[2,0],"coeff":"1"},{"j":1,"exp":[2,0],"coeff":"2"}"#;
    assert!(parse_map_spec(&spec(dup, "")).is_err());
    assert!(parse_map_spec(&spec(r#"{"j":1,"exp":[0,0],"coeff":"1"}"#, "")).is_err());
    assert!(parse_map_spec(&spec(r#"{"j":3,"exp":[2,0],"coeff":"1"}"#, "")).is_err());
}

#[test]
fn options_constrain_the_terms() {
    let cubic = r#"{"j":1,"exp":[3,0],"coeff":"1"}"#;
    assert!(parse_map_spec(&spec(cubic, r#","options":{"degree_cap":2}"#)).is_err());
    assert!(parse_map_spec(&spec(cubic, r#","options":{"degree_cap":3}"#)).is_ok());
    let complex = r#"{"j":1,"exp":[2,0],"coeff":"1+2i"}"#;
    assert!(parse_map_spec(&spec(complex, r#","options":{"field":"rational"}"#)).is_err());
    let f = parse_map_spec(&spec(complex, "")).unwrap();
    assert_eq!(f.a11(1), q("1+2i"));
}

#[test]
fn dimension_must_match_the_blocks() {
    assert!(parse_map_spec(r#"{"dim":3,"blocks":[{"mu":2,"lambda":"1"}],"terms":[]}"#).is_err());
}

#[test]
fn decimal_coefficients_are_exact() {
    let f = parse_map_spec(&spec(r#"{"j":2,"exp":[2,0],"coeff":"0.25"}"#, "")).unwrap();
    assert_eq!(f.a11(2), q("1/4"));
}
