#![allow(dead_code)]

use blowdyn::germ::InputGerm;
use blowdyn::partition::JordanStructure;
use blowdyn::scalar::{GaussRational, Scalar};
use blowdyn::series::{Monomial, PolyMap, TruncatedSeries};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn q(s: &str) -> GaussRational {
    s.parse().unwrap()
}

pub fn small_rational() -> impl Strategy<Value = GaussRational> {
    (-6i64..=6, 1i64..=4).prop_map(|(p, d)| GaussRational::ratio(p, d))
}

pub fn small_gauss() -> impl Strategy<Value = GaussRational> {
    (small_rational(), prop_oneof![3 => Just(GaussRational::zero()), 1 => small_rational()])
        .prop_map(|(re, im)| re.add(&im.mul(&GaussRational::i())))
}

pub fn exponent(nvars: usize, cap: u32) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..=cap as u8, nvars).prop_filter("degree within cap", move |e| e.iter().map(|&x| x as u32).sum::<u32>() <= cap)
}

/// Random series with up to `max_terms` terms; `min_degree` drops lower terms.
pub fn series(nvars: usize, cap: u32, max_terms: usize, min_degree: u32) -> impl Strategy<Value = TruncatedSeries<GaussRational>> {
    proptest::collection::vec((exponent(nvars, cap), small_gauss()), 0..=max_terms).prop_map(move |terms| {
        let mut s = TruncatedSeries::zero(nvars, cap);
        for (e, c) in terms {
            let m = Monomial::new(&e);
            if m.degree() >= min_degree {
                s.add_term(m, c);
            }
        }
        s
    })
}

pub fn unit_series(nvars: usize, cap: u32) -> impl Strategy<Value = TruncatedSeries<GaussRational>> {
    (series(nvars, cap, 6, 1), small_gauss().prop_filter("nonzero", |c| !c.is_zero())).prop_map(move |(s, c)| {
        let mut s = s;
        s.add_term(Monomial::ONE, c);
        s
    })
}

pub fn poly_map(nout: usize, nvars: usize, cap: u32) -> impl Strategy<Value = PolyMap<GaussRational>> {
    proptest::collection::vec(series(nvars, cap, 5, 1), nout).prop_map(PolyMap::new)
}

/// `(nvars, cap)` pairs used by the series suites.
pub fn shape() -> impl Strategy<Value = (usize, u32)> {
    (1usize..=3, 2u32..=5)
}

pub fn ring_triple() -> impl Strategy<Value = [TruncatedSeries<GaussRational>; 3]> {
    shape().prop_flat_map(|(n, c)| [series(n, c, 6, 0), series(n, c, 6, 0), series(n, c, 6, 0)])
}

pub fn compose_triple() -> impl Strategy<Value = (PolyMap<GaussRational>, PolyMap<GaussRational>, PolyMap<GaussRational>)> {
    (1usize..=3, 1usize..=3, 2u32..=4).prop_flat_map(|(n, m, c)| (poly_map(1, n, c), poly_map(n, m, c), poly_map(m, m, c)))
}

pub fn unit() -> impl Strategy<Value = TruncatedSeries<GaussRational>> {
    shape().prop_flat_map(|(n, c)| unit_series(n, c))
}

pub fn divisible_pair() -> impl Strategy<Value = (TruncatedSeries<GaussRational>, Vec<u8>)> {
    shape().prop_flat_map(|(n, c)| (series(n, c, 6, 0), exponent(n, c)))
}

fn ok(b: bool, what: &str) -> Result<(), TestCaseError> {
    if b {
        Ok(())
    } else {
        Err(TestCaseError::fail(what.to_string()))
    }
}

pub fn ring_axioms(t: &[TruncatedSeries<GaussRational>; 3]) -> Result<(), TestCaseError> {
    let [a, b, c] = t;
    let (n, cap) = (a.nvars(), a.cap());
    let zero = TruncatedSeries::zero(n, cap);
    let one = TruncatedSeries::one(n, cap);
    ok(a.add(b).unwrap() == b.add(a).unwrap(), "addition commutes")?;
    ok(a.add(&b.add(c).unwrap()).unwrap() == a.add(b).unwrap().add(c).unwrap(), "addition associates")?;
    ok(a.add(&zero).unwrap() == *a && a.sub(a).unwrap().is_zero(), "additive identity and inverse")?;
    ok(a.mul(b).unwrap() == b.mul(a).unwrap(), "multiplication commutes")?;
    ok(a.mul(&b.mul(c).unwrap()).unwrap() == a.mul(b).unwrap().mul(c).unwrap(), "multiplication associates")?;
    ok(a.mul(&one).unwrap() == *a, "multiplicative identity")?;
    ok(a.mul(&b.add(c).unwrap()).unwrap() == a.mul(b).unwrap().add(&a.mul(c).unwrap()).unwrap(), "distributivity")?;
    Ok(())
}

pub fn composition_associates(t: &(PolyMap<GaussRational>, PolyMap<GaussRational>, PolyMap<GaussRational>)) -> Result<(), TestCaseError> {
    let (f, g, h) = t;
    let left = f.compose(&g.compose(h).unwrap()).unwrap();
    let right = f.compose(g).unwrap().compose(h).unwrap();
    ok(left == right, "(f∘g)∘h = f∘(g∘h)")
}

pub fn reciprocal_inverts(u: &TruncatedSeries<GaussRational>) -> Result<(), TestCaseError> {
    let r = u.reciprocal().unwrap();
    ok(u.mul(&r).unwrap() == TruncatedSeries::one(u.nvars(), u.cap()), "u · (1/u) = 1")?;
    ok(r.reciprocal().unwrap() == *u, "1/(1/u) = u")
}

pub fn monomial_division_inverts(t: &(TruncatedSeries<GaussRational>, Vec<u8>)) -> Result<(), TestCaseError> {
    let (s, e) = t;
    let m = Monomial::new(e);
    let d = m.degree();
    let back = s.mul_monomial(&m, &GaussRational::one()).monomial_divide(&m).unwrap();
    ok(back == s.truncate(s.cap() - d), "(s·w^m)/w^m = s below the lowered cap")?;
    let has_indivisible = s.terms().any(|(t, _)| !m.divides(t));
    ok(s.monomial_divide(&m).is_err() == has_indivisible, "division fails exactly on an indivisible term")
}

/// Gaussian rationals with real part only, for the rational-λ structures.
pub fn random_real_structure<R: rand::Rng>(rng: &mut R, n: usize) -> JordanStructure {
    loop {
        let s = blowdyn::germ::random_structure(rng, n);
        let lambda: Vec<GaussRational> = s.lambda().iter().map(|l| GaussRational::real(l.re.clone())).collect();
        if let Ok(t) = JordanStructure::new(s.mu().to_vec(), lambda) {
            return t;
        }
    }
}

/// Germ with only the `z_1²` coefficients given per component.
pub fn a11_germ(s: &JordanStructure, a: &[(usize, GaussRational)]) -> InputGerm {
    let n = s.n();
    let terms: Vec<(usize, Vec<u8>, GaussRational)> = a
        .iter()
        .map(|(j, c)| {
            let mut e = vec![0u8; n];
            e[0] = 2;
            (*j, e, c.clone())
        })
        .collect();
    InputGerm::with_terms(s.clone(), &terms).unwrap()
}

/// `a = c·b` for a nonzero `c`.
pub fn proportional(a: &[GaussRational], b: &[GaussRational]) -> bool {
    let Some(p) = b.iter().position(|x| !x.is_zero()) else {
        return a.iter().all(Scalar::is_zero);
    };
    let Some(c) = a[p].div(&b[p]) else {
        return false;
    };
    !c.is_zero() && a.iter().zip(b).all(|(x, y)| *x == c.mul(y))
}

/// Random Jordan structure on `2..=max_n` variables, Gaussian eigenvalues allowed.
pub fn structure(max_n: usize) -> impl Strategy<Value = JordanStructure> {
    (any::<u64>(), 2usize..=max_n).prop_map(|(seed, n)| blowdyn::germ::random_structure(&mut rng(seed), n))
}

/// Structure together with one of its stages.
pub fn structure_and_stage(max_n: usize) -> impl Strategy<Value = (JordanStructure, usize)> {
    structure(max_n).prop_flat_map(|s| {
        let ell = s.ell();
        (Just(s), 1..=ell)
    })
}

pub fn nonzero_point(n: usize) -> impl Strategy<Value = Vec<GaussRational>> {
    proptest::collection::vec(small_gauss().prop_filter("nonzero", |c| !c.is_zero()), n)
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// All partitions of `n` with first part at least 2, in decreasing order.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(left: usize, max: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(acc.clone());
            return;
        }
        for p in (1..=left.min(max)).rev() {
            acc.push(p);
            go(left - p, p, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out.retain(|p| p[0] >= 2);
    out
}
