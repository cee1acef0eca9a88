mod common;

use blowdyn::blowup::{apply_chart_step, chart_step, compare_with_printed, ChartTable};
use blowdyn::partition::JordanStructure;
use blowdyn::scalar::{GaussRational, Scalar};
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn inverse_undoes_forward((s, k) in structure_and_stage(6), seed in any::<u64>()) {
        let t = ChartTable::new(&s, k).unwrap();
        let w = point_from_seed(seed, s.n());
        let z = t.pi_forward(&w);
        prop_assert_eq!(t.pi_inverse(&z).unwrap(), w);
    }

    #[test]
    fn forward_undoes_inverse((s, k) in structure_and_stage(6), seed in any::<u64>()) {
        let t = ChartTable::new(&s, k).unwrap();
        let z = point_from_seed(seed, s.n());
        let w = t.pi_inverse(&z).unwrap();
        prop_assert_eq!(t.pi_forward(&w), z);
    }

    #[test]
    fn stages_compose_step_by_step((s, k) in structure_and_stage(6), seed in any::<u64>()) {
        let w = point_from_seed(seed, s.n());
        let direct = ChartTable::new(&s, k).unwrap().pi_forward(&w);
        let mut u = w;
        for step in (1..=k).rev() {
            u = apply_chart_step(&s, step, &u).unwrap();
        }
        prop_assert_eq!(direct, u);
    }

    #[test]
    fn forward_series_evaluates_to_forward_map((s, k) in structure_and_stage(5), seed in any::<u64>()) {
        let t = ChartTable::new(&s, k).unwrap();
        let cap = t.forward.iter().map(|r| r.iter().sum::<u32>()).max().unwrap();
        let w = point_from_seed(seed, s.n());
        let series = t.forward_series::<GaussRational>(cap);
        let evaluated: Vec<GaussRational> = series.components.iter().map(|c| c.eval(&w)).collect();
        prop_assert_eq!(evaluated, t.pi_forward(&w));
    }

    #[test]
    fn tables_are_unimodular_and_nonnegative((s, k) in structure_and_stage(7)) {
        let t = ChartTable::new(&s, k).unwrap();
        let n = s.n();
        let f = blowdyn::linalg::Matrix::from_fn(n, n, |i, j| GaussRational::from_int(t.forward[i][j] as i64));
        let det = f.charpoly()[0].clone();
        prop_assert!(det == GaussRational::one() || det == GaussRational::from_int(-1));
        let product: Vec<Vec<i64>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|h| t.forward[i][h] as i64 * t.inverse[h][j] as i64).sum()).collect())
            .collect();
        for (i, row) in product.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                prop_assert_eq!(x, (i == j) as i64);
            }
        }
    }
}

fn point_from_seed(seed: u64, n: usize) -> Vec<GaussRational> {
    let mut r = rng(seed);
    (0..n).map(|_| blowdyn::germ::random_rational(&mut r, true)).collect()
}

#[test]
fn every_unipotent_structure_matches_the_printed_tables() {
    for n in 2..=8 {
        for mu in partitions(n) {
            let s = JordanStructure::from_ints(&mu, &vec![1; mu.len()]).unwrap();
            for k in 1..=s.ell() {
                let bad = compare_with_printed(&s, k).unwrap();
                assert!(bad.is_empty(), "mu = {mu:?}, stage {k}: {bad:?}");
            }
        }
    }
}

#[test]
fn first_step_is_the_standard_chart() {
    let s = JordanStructure::from_ints(&[3, 1], &[1, 2]).unwrap();
    assert_eq!(chart_step(&s, 1).unwrap(), vec![vec![1, 0, 0, 0], vec![1, 1, 0, 0], vec![1, 0, 1, 0], vec![1, 0, 0, 1]]);
}

#[test]
fn divisor_points_are_detected() {
    let s = JordanStructure::from_ints(&[2, 2], &[1, 1]).unwrap();
    let t = ChartTable::new(&s, s.ell()).unwrap();
    let mut w = vec![q("1"); 4];
    assert!(!t.on_singular_divisor(&w));
    w[t.divisor[0] - 1] = GaussRational::zero();
    assert!(t.on_singular_divisor(&w));
}

#[test]
fn stage_zero_and_past_the_end_are_rejected() {
    let s = JordanStructure::from_ints(&[2], &[1]).unwrap();
    assert!(ChartTable::new(&s, 0).is_err());
    assert!(ChartTable::new(&s, s.ell() + 1).is_err());
}
