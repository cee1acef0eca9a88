use blowdyn::dynamics::regularity::projective_limit;
use blowdyn::dynamics::{cesaro_limit, projective_distance, regularity_classify, RegularityOptions, StageVerdict};
use blowdyn::partition::JordanStructure;
use blowdyn::scalar::BigComplex;
use num_complex::Complex64;
use proptest::prelude::*;

fn coefficient() -> impl Strategy<Value = f64> {
    (0.5f64..3.0, any::<bool>()).prop_map(|(x, neg)| if neg { -x } else { x })
}

fn big(v: &[f64]) -> Vec<BigComplex> {
    v.iter().map(|&x| BigComplex::from_f64(x, 0.0, 128)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// `z_j = c_j / k^{μ_1+j−1}` on one block: regular through the whole tower.
    #[test]
    fn power_profiles_are_regular(c in proptest::collection::vec(coefficient(), 2..=4)) {
        let n = c.len();
        let s = JordanStructure::unipotent_block(n).unwrap();
        let pts: Vec<Vec<BigComplex>> = (500..2500)
            .map(|k| {
                let k = k as f64;
                big(&c.iter().enumerate().map(|(j, cj)| cj / k.powi((n + j) as i32)).collect::<Vec<_>>())
            })
            .collect();
        let rep = regularity_classify(&pts, &s, &[], RegularityOptions::default()).unwrap();
        prop_assert!(rep.converges_to_origin);
        prop_assert_eq!(rep.stages[0].verdict, StageVerdict::Regular);
        prop_assert!(rep.stages.iter().all(|st| matches!(st.verdict, StageVerdict::Regular | StageVerdict::SecondKind | StageVerdict::FirstKind)), "{:?}", rep.stages);
    }

    /// Multiplying each sample by a phase leaves the projective limit unchanged.
    #[test]
    fn limits_ignore_phases(v in proptest::collection::vec(coefficient(), 2..=4), theta in 0.0f64..6.0) {
        let pts: Vec<Vec<Complex64>> = (1..=200)
            .map(|k| {
                let ph = Complex64::from_polar(1.0 / k as f64, theta * k as f64);
                v.iter().enumerate().map(|(j, x)| ph * (x + 1.0 / (k as f64 * (j + 2) as f64))).collect()
            })
            .collect();
        let target: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let lim = projective_limit(&pts, 0.05, 50).unwrap().expect("converges");
        prop_assert!(projective_distance(&lim, &target) < 1e-2);
    }

    /// `w_{k+1} = w_k (1 + c w_k)` started in the attracting direction.
    #[test]
    fn cesaro_recovers_the_coefficient(re in -2.0f64..-0.2, im in -1.0f64..1.0) {
        let c = Complex64::new(re, im);
        let mut w = vec![-0.3 / c];
        for k in 0..10_000 {
            let x = w[k];
            w.push(x * (1.0 + c * x));
        }
        let u: Vec<Complex64> = w.iter().map(|x| c * x).collect();
        let est = cesaro_limit(&w, &u, 50).unwrap();
        prop_assert!(est.consistent, "{:?}", est);
    }
}

#[test]
fn short_traces_are_refused() {
    let pts = vec![vec![Complex64::new(1.0, 0.0)]; 10];
    assert!(projective_limit(&pts, 1e-3, 50).is_err());
}
