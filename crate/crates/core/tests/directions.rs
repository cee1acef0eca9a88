mod common;

use blowdyn::dynamics::chardir::{exact2d, numeric, structured, NumericOptions};
use blowdyn::dynamics::classify::epsilon_eta;
use blowdyn::dynamics::hakim::hakim_matrix_in_chart;
use blowdyn::dynamics::{parabolic_classification, projective_distance, ChartQuadraticForm};
use blowdyn::germ::{random_germ, InputGerm};
use blowdyn::lifting::lift_final;
use blowdyn::normalform::{conjugate_germ, invariants_2d, random_conjugator};
use blowdyn::partition::JordanStructure;
use blowdyn::scalar::{GaussRational, Scalar};
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;

/// `d(P̂)_[v] − id` in the chart `x_p = 1` by central differences.
fn hakim_by_differences(q: &ChartQuadraticForm<Complex64>, v: &[Complex64], p: usize) -> Vec<Vec<Complex64>> {
    let x: Vec<Complex64> = v.iter().map(|c| c / v[p]).collect();
    let others: Vec<usize> = (0..x.len()).filter(|&i| i != p).collect();
    let proj = |y: &[Complex64]| {
        let py = q.eval(y);
        others.iter().map(|&i| py[i] / py[p]).collect::<Vec<_>>()
    };
    let h = 1e-6;
    let mut cols = Vec::new();
    for &j in &others {
        let (mut up, mut down) = (x.clone(), x.clone());
        up[j] += h;
        down[j] -= h;
        let (a, b) = (proj(&up), proj(&down));
        cols.push(a.iter().zip(&b).map(|(s, t)| (s - t) / (2.0 * h)).collect::<Vec<_>>());
    }
    (0..others.len())
        .map(|r| (0..others.len()).map(|c| cols[c][r] - if r == c { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn unipotent(mu: &[usize]) -> JordanStructure {
    JordanStructure::from_ints(mu, &vec![1; mu.len()]).unwrap()
}

/// Unipotent structure with `μ_1 > μ_2`.
fn generic_structure() -> impl Strategy<Value = JordanStructure> {
    (2usize..=6).prop_flat_map(|n| proptest::sample::select(partitions(n))).prop_filter("μ1 > μ2", |mu| mu.len() == 1 || mu[0] > mu[1]).prop_map(|mu| unipotent(&mu))
}

/// Two-dimensional germ with `a^2_11 = 0` and small random coefficients elsewhere.
fn nongeneric_2d() -> impl Strategy<Value = InputGerm> {
    proptest::collection::vec(small_rational(), 7).prop_map(|c| {
        let terms = vec![
            (1, vec![2, 0], c[0].clone()),
            (1, vec![1, 1], c[1].clone()),
            (1, vec![0, 2], c[2].clone()),
            (2, vec![1, 1], c[3].clone()),
            (2, vec![0, 2], c[4].clone()),
            (2, vec![3, 0], c[5].clone()),
            (1, vec![3, 0], c[6].clone()),
        ];
        InputGerm::with_terms(unipotent(&[2]), &terms).unwrap()
    })
}

/// `z ↦ F(t z)/t`: degree-`d` coefficients pick up `t^{d−1}`.
fn rescale(f: &InputGerm, t: &GaussRational) -> InputGerm {
    let terms: Vec<_> = f
        .nonlinear_terms()
        .into_iter()
        .map(|(j, e, c)| {
            let d: u32 = e.iter().map(|&x| x as u32).sum();
            (j, e, c.mul(&t.pow(d - 1)))
        })
        .collect();
    InputGerm::with_terms(f.structure().clone(), &terms).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    #[test]
    fn hakim_matrix_is_the_projective_derivative(s in generic_structure(), seed in any::<u64>()) {
        let mut f = random_germ(&mut rng(seed), &s, 2, 0.5);
        if !f.is_generic() {
            f = a11_germ(&s, &[(s.mu1(), q("1"))]);
        }
        let l = lift_final(&f, 3).unwrap();
        let qf = ChartQuadraticForm::from_map(&l.map);
        let d = structured(&qf, &l.table.divisor).unwrap();
        let v = d.exact.unwrap().v;
        let p = (0..v.len()).max_by(|&a, &b| v[a].to_c64().norm().total_cmp(&v[b].to_c64().norm())).unwrap();
        let exact = hakim_matrix_in_chart(&qf, &v, p).unwrap().matrix;
        let vc: Vec<Complex64> = v.iter().map(Scalar::to_c64).collect();
        let fd = hakim_by_differences(&qf.to_c64(), &vc, p);
        let scale = fd.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
        for (r, row) in fd.iter().enumerate() {
            for (c, z) in row.iter().enumerate() {
                prop_assert!((exact[(r, c)].to_c64() - z).norm() <= 1e-6 * scale, "entry ({}, {}): {} vs {}", r, c, exact[(r, c)], z);
            }
        }
    }

    #[test]
    fn structured_direction_is_exact_and_allowable(s in generic_structure(), seed in any::<u64>()) {
        let f = random_germ(&mut rng(seed), &s, 3, 0.4);
        prop_assume!(f.is_generic());
        let l = lift_final(&f, 3).unwrap();
        let qf = ChartQuadraticForm::from_map(&l.map);
        let d = structured(&qf, &l.table.divisor).unwrap();
        let ex = d.exact.clone().unwrap();
        prop_assert_eq!(ex.lambda.clone(), GaussRational::one());
        let pv = qf.eval(&ex.v);
        prop_assert_eq!(pv, ex.v.clone());
        prop_assert!(d.allowable && !d.degenerate);
        prop_assert_eq!(d.residual, 0.0);
    }

    #[test]
    fn numeric_search_finds_every_exact_direction(c in proptest::collection::vec(small_rational(), 6)) {
        let qf = ChartQuadraticForm::from_triples(2, &[
            (1, 1, 1, c[0].clone()), (1, 1, 2, c[1].clone()), (1, 2, 2, c[2].clone()),
            (2, 1, 1, c[3].clone()), (2, 1, 2, c[4].clone()), (2, 2, 2, c[5].clone()),
        ]);
        let exact = match exact2d(&qf, &[]) {
            Ok(e) => e,
            // identically characteristic forms have no isolated directions
            Err(_) => return Ok(()),
        };
        let found = numeric(&qf.to_c64(), &[], NumericOptions::default()).unwrap();
        for d in exact.iter().filter(|d| !d.degenerate) {
            let best = found.iter().map(|g| projective_distance(&g.v, &d.v)).fold(f64::INFINITY, f64::min);
            prop_assert!(best < 1e-8, "{:?} missed, closest {}", d.v, best);
        }
    }

    #[test]
    fn epsilon_and_eta_scale_with_the_coordinates(f in nongeneric_2d(), t in small_rational()) {
        prop_assume!(!t.is_zero());
        let (e, h) = epsilon_eta(&f);
        let (e2, h2) = epsilon_eta(&rescale(&f, &t));
        prop_assert_eq!(e2, e.mul(&t));
        prop_assert_eq!(h2, h.mul(&t).mul(&t));
        let (a, b) = (parabolic_classification(&f).unwrap(), parabolic_classification(&rescale(&f, &t)).unwrap());
        prop_assert_eq!(a.curves(), b.curves());
    }

    #[test]
    fn xi_survives_conjugation(f in nongeneric_2d(), seed in any::<u64>()) {
        let before = invariants_2d(&f).unwrap();
        prop_assume!(!before.epsilon.is_zero());
        let g = conjugate_germ(&f, &random_conjugator(&mut rng(seed), 2)).unwrap();
        let after = invariants_2d(&g).unwrap();
        prop_assert_eq!(&after.xi, &before.xi);
        prop_assert!(before.xi_agrees() && after.xi_agrees());
    }
}

#[test]
fn fatou_direction_and_spectrum() {
    let f = InputGerm::fatou();
    let l = lift_final(&f, 3).unwrap();
    let qf = ChartQuadraticForm::from_map(&l.map);
    let d = structured(&qf, &l.table.divisor).unwrap();
    assert_eq!(d.exact.unwrap().v, vec![q("3"), q("2")]);
    let spec = d.hakim_spectrum.unwrap();
    assert_eq!(spec.len(), 1);
    assert!((spec[0] - Complex64::new(-6.0, 0.0)).norm() < 1e-12);
}

#[test]
fn equal_top_blocks_are_left_unresolved() {
    let f = a11_germ(&unipotent(&[2, 2]), &[(2, q("1")), (4, q("1"))]);
    assert!(parabolic_classification(&f).unwrap().curves().is_none());
}

#[test]
fn numeric_mode_refuses_large_dimensions() {
    let s = unipotent(&[7]);
    let l = lift_final(&a11_germ(&s, &[(7, q("1"))]), 3).unwrap();
    let qf = ChartQuadraticForm::from_map(&l.map).to_c64();
    assert!(numeric(&qf, &l.table.divisor, NumericOptions::default()).is_err());
}

/// With `η = s²`, the derivative of the induced projective map at the two
/// non-degenerate directions is twice the printed closed form `∓2√η/(ε ± √η)`.
#[test]
fn two_dimensional_hakim_values_are_twice_the_printed_form() {
    use blowdyn::dynamics::hakim::printed_hakim_2d;
    use blowdyn::lifting::lift;
    for (a, b, s) in [("1", "0", "1/2"), ("2", "-1", "3"), ("-1/2", "1/3", "1"), ("1", "1", "1")] {
        let (a, b, s) = (q(a), q(b), q(s));
        let d = a.sub(&b);
        let e = s.mul(&s).sub(&d.mul(&d)).div(&GaussRational::from_int(2)).unwrap();
        let terms = vec![(1, vec![2, 0], a.clone()), (2, vec![1, 1], b.add(&b)), (2, vec![3, 0], e)];
        let f = InputGerm::with_terms(unipotent(&[2]), &terms).unwrap();
        let (eps, eta) = epsilon_eta(&f);
        assert_eq!(eta, s.mul(&s));
        let l = lift(&f, 1, 3).unwrap();
        let qf = ChartQuadraticForm::from_map(&l.map);
        let mut got: Vec<Complex64> = exact2d(&qf, &l.table.divisor)
            .unwrap()
            .into_iter()
            .filter(|d| d.allowable && !d.degenerate)
            .map(|d| {
                let v: Vec<Complex64> = d.exact.unwrap().v.iter().map(Scalar::to_c64).collect();
                let p = if v[0].norm() >= v[1].norm() { 0 } else { 1 };
                hakim_by_differences(&qf.to_c64(), &v, p)[0][0]
            })
            .collect();
        let (ec, sc) = (eps.to_c64(), s.to_c64());
        let mut printed: Vec<Complex64> =
            [true, false].iter().filter(|&&plus| (ec + if plus { sc } else { -sc }).norm() > 0.0).map(|&plus| printed_hakim_2d(ec, sc, plus)).collect();
        let key = |z: &Complex64| (z.re * 1e9).round() as i64;
        got.sort_by_key(key);
        printed.sort_by_key(key);
        assert_eq!(got.len(), printed.len(), "a = {a}, b = {b}, s = {s}");
        for (g, p) in got.iter().zip(&printed) {
            assert!((g - 2.0 * p).norm() < 1e-6, "a = {a}, b = {b}, s = {s}: {g} vs printed {p}");
        }
    }
}
