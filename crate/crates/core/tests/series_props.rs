mod common;

use blowdyn::scalar::{GaussRational, Scalar};
use blowdyn::series::{Monomial, TruncatedSeries};
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn ring_axioms_hold(t in ring_triple()) {
        ring_axioms(&t)?;
    }

    #[test]
    fn composition_is_associative(t in compose_triple()) {
        composition_associates(&t)?;
    }

    #[test]
    fn reciprocal_is_inverse(u in unit()) {
        reciprocal_inverts(&u)?;
    }

    #[test]
    fn monomial_division_undoes_multiplication(t in divisible_pair()) {
        monomial_division_inverts(&t)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, ..ProptestConfig::default() })]

    #[test]
    fn evaluation_is_a_ring_map(t in ring_triple(), p in proptest::collection::vec(small_rational(), 3)) {
        let [a, b, _] = &t;
        let pt = &p[..a.nvars()];
        // evaluation only commutes with products below the cap
        let cap = a.cap();
        let (lo_a, lo_b) = (a.truncate(cap / 2), b.truncate(cap / 2));
        let (lo_a, lo_b) = (lo_a.polynomial_with_cap(cap), lo_b.polynomial_with_cap(cap));
        prop_assert_eq!(a.add(b).unwrap().eval(pt), a.eval(pt).add(&b.eval(pt)));
        prop_assert_eq!(lo_a.mul(&lo_b).unwrap().eval(pt), lo_a.eval(pt).mul(&lo_b.eval(pt)));
    }

    #[test]
    fn leibniz_rule(t in ring_triple()) {
        let [a, b, _] = &t;
        for i in 0..a.nvars() {
            let lhs = a.mul(b).unwrap().derivative(i);
            let rhs = a.derivative(i).mul(&b.truncate(a.cap() - 1)).unwrap().add(&a.truncate(a.cap() - 1).mul(&b.derivative(i)).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn powers_agree_with_repeated_products(u in unit(), e in 0u32..5) {
        let mut acc = TruncatedSeries::one(u.nvars(), u.cap());
        for _ in 0..e {
            acc = acc.mul(&u).unwrap();
        }
        prop_assert_eq!(u.pow(e), acc);
    }

    #[test]
    fn identity_map_is_neutral(t in compose_triple()) {
        let (f, g, _) = &t;
        let id = blowdyn::series::PolyMap::identity(g.dim(), g.cap());
        prop_assert_eq!(&f.compose(&id).unwrap(), f);
        let id_in = blowdyn::series::PolyMap::identity(g.nvars(), g.cap());
        prop_assert_eq!(&g.compose(&id_in).unwrap(), g);
    }
}

#[test]
fn geometric_series() {
    let one_minus_x = TruncatedSeries::<GaussRational>::one(1, 6).sub(&TruncatedSeries::var(1, 6, 0)).unwrap();
    let r = one_minus_x.reciprocal().unwrap();
    for d in 0..=6u8 {
        assert_eq!(r.coeff(&Monomial::new(&[d])), GaussRational::one());
    }
}

#[test]
fn zero_constant_is_not_a_unit() {
    assert!(TruncatedSeries::<GaussRational>::var(2, 3, 1).reciprocal().is_err());
}

#[test]
fn indivisible_term_is_reported() {
    let s = TruncatedSeries::from_terms(2, 3, [(&[1u8, 0][..], q("1")), (&[0u8, 1][..], q("2"))]);
    assert!(s.monomial_divide(&Monomial::new(&[1, 0])).is_err());
}
