//! Canonical blow-up charts.
//!
//! Each chart step writes the coordinates of chart `k−1` as monomials in the
//! coordinates `w` of chart `k`. Folding the steps gives `z = π_k(w)`, again a
//! monomial map, whose integer inverse exponent matrix yields `π_k^{-1}`.
//! Tables are indexed from 0 in storage; the index sets they expose are
//! 1-based like those of [`crate::partition`].

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::partition::{JordanStructure, PartitionError};
use crate::scalar::{GaussRational, Scalar};
use crate::series::{Monomial, PolyMap, TruncatedSeries};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BlowupError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("stage {k} outside 1..={max}")]
    StageOutOfRange { k: usize, max: usize },
    #[error("z_{index} = 0 lies over the singular divisor")]
    ZeroCoordinate { index: usize },
}

/// Exponent matrix of one chart step at stage `k`; row `h` lists the exponents
/// of `w` in the `h`-th coordinate of chart `k−1`.
pub fn chart_step(s: &JordanStructure, k: usize) -> Result<Vec<Vec<u32>>, BlowupError> {
    check_stage(s, k)?;
    let n = s.n();
    let mut rows = vec![vec![0u32; n]; n];
    for (h, row) in rows.iter_mut().enumerate() {
        row[h] = 1;
    }
    let mu1 = s.mu1();
    if k == 1 {
        for row in rows.iter_mut().skip(1) {
            row[0] = 1;
        }
    } else if k <= mu1 {
        let prev = s.splitting(k - 1)?;
        // h in {1} ∪ (P''_{k-1} \ {k}) picks up a factor w_k
        let kk = k - 1;
        rows[0][kk] = 1;
        for &h in &prev.double_primed {
            if h != k {
                rows[h - 1][kk] = 1;
            }
        }
    } else {
        let nu = s.nu();
        rows[0][nu[1] + s.mu()[1] - 1] = 1;
    }
    Ok(rows)
}

/// Applies [`chart_step`] to a point.
pub fn apply_chart_step<C: Scalar>(s: &JordanStructure, k: usize, w: &[C]) -> Result<Vec<C>, BlowupError> {
    let rows = chart_step(s, k)?;
    Ok(rows.iter().map(|r| eval_monomial(r, w)).collect())
}

fn check_stage(s: &JordanStructure, k: usize) -> Result<(), BlowupError> {
    let max = s.ell();
    if k == 0 || k > max {
        return Err(BlowupError::StageOutOfRange { k, max });
    }
    Ok(())
}

fn eval_monomial<C: Scalar>(exps: &[u32], w: &[C]) -> C {
    exps.iter().zip(w).fold(C::one(), |acc, (&e, x)| if e == 0 { acc } else { acc.mul(&x.pow(e)) })
}

fn mat_mul(a: &[Vec<u32>], b: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let n = b[0].len();
    a.iter().map(|row| (0..n).map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum()).collect()).collect()
}

/// Monomial tables of `π_k` and its inverse in the canonical charts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartTable {
    pub stage: usize,
    /// `forward[h][j]`: exponent of `w_{j+1}` in `z_{h+1}`.
    pub forward: Vec<Vec<u32>>,
    /// `inverse[j][h]`: exponent of `z_{h+1}` in `w_{j+1}`.
    pub inverse: Vec<Vec<i32>>,
    /// `P'_{k1}`, the chart coordinates cutting out the singular divisor.
    pub divisor: Vec<usize>,
    /// `z` coordinates occurring in a denominator of the inverse.
    pub required_nonzero: Vec<usize>,
}

impl ChartTable {
    /// Builds the table by folding the chart steps `1..=k`.
    pub fn new(s: &JordanStructure, k: usize) -> Result<Self, BlowupError> {
        check_stage(s, k)?;
        let mut forward = chart_step(s, 1)?;
        for step in 2..=k {
            forward = mat_mul(&forward, &chart_step(s, step)?);
        }
        let inverse = integer_inverse(&forward);
        let n = s.n();
        let required_nonzero = (0..n).filter(|&h| inverse.iter().any(|row| row[h] < 0)).map(|h| h + 1).collect();
        Ok(ChartTable { stage: k, forward, inverse, divisor: s.divisor_indices(k)?, required_nonzero })
    }

    pub fn n(&self) -> usize {
        self.forward.len()
    }

    /// `z = π_k(w)`.
    pub fn pi_forward<C: Scalar>(&self, w: &[C]) -> Vec<C> {
        self.forward.iter().map(|r| eval_monomial(r, w)).collect()
    }

    /// `w = π_k^{-1}(z)`.
    pub fn pi_inverse<C: Scalar>(&self, z: &[C]) -> Result<Vec<C>, BlowupError> {
        if let Some(&h) = self.required_nonzero.iter().find(|&&h| z[h - 1].is_zero()) {
            return Err(BlowupError::ZeroCoordinate { index: h });
        }
        Ok(self
            .inverse
            .iter()
            .map(|row| {
                let mut num = C::one();
                let mut den = C::one();
                for (&e, x) in row.iter().zip(z) {
                    if e > 0 {
                        num = num.mul(&x.pow(e as u32));
                    } else if e < 0 {
                        den = den.mul(&x.pow((-e) as u32));
                    }
                }
                num.div(&den).expect("required coordinates are nonzero")
            })
            .collect())
    }

    /// Whether `w` lies on the singular divisor `π_k^{-1}(O)`.
    pub fn on_singular_divisor<C: Scalar>(&self, w: &[C]) -> bool {
        self.divisor.iter().any(|&h| w[h - 1].is_zero())
    }

    /// `π_k` as a map of truncated series, exact up to `cap`.
    pub fn forward_series<C: Scalar>(&self, cap: u32) -> PolyMap<C> {
        let n = self.n();
        let comps = self
            .forward
            .iter()
            .map(|r| {
                let exps: Vec<u8> = r.iter().map(|&e| e as u8).collect();
                TruncatedSeries::monomial(n, cap, Monomial::new(&exps), C::one())
            })
            .collect();
        PolyMap::new(comps)
    }

    /// Forward exponent row of `z_h` (1-based `h`) as a monomial.
    pub fn forward_monomial(&self, h: usize) -> Monomial {
        let exps: Vec<u8> = self.forward[h - 1].iter().map(|&e| e as u8).collect();
        Monomial::new(&exps)
    }
}

fn integer_inverse(m: &[Vec<u32>]) -> Vec<Vec<i32>> {
    let n = m.len();
    let q = Matrix::from_fn(n, n, |i, j| GaussRational::from_int(m[i][j] as i64));
    let inv = q.inverse().expect("chart exponent matrices are unimodular");
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let e = &inv[(i, j)];
                    assert!(e.is_real() && e.re.is_integer(), "non-integral inverse exponent");
                    i32::try_from(e.re.to_integer()).expect("small exponent")
                })
                .collect()
        })
        .collect()
}

/// Closed-form forward table of `π_k`, indexed like [`ChartTable::forward`].
pub fn printed_forward(s: &JordanStructure, k: usize) -> Result<Vec<Vec<u32>>, BlowupError> {
    check_stage(s, k)?;
    let n = s.n();
    let nu = s.nu();
    let mu1 = s.mu1();
    let mut rows = vec![vec![0u32; n]; n];
    let top = k > mu1;
    let kk = if top { mu1 } else { k };
    let sp = s.splitting(kk)?;
    // index μ_2+μ_2 taken literally; it equals ν_2+μ_2 whenever μ_1 = μ_2
    let tail = if top { s.mu()[1] + s.mu()[1] } else { 0 };
    for j in 1..=n {
        let row = &mut rows[j - 1];
        row[0] += 1;
        if let Some(l) = sp.per_block.iter().position(|b| b.contains(&j)) {
            let t = if l == 0 { j } else { j - nu[l] };
            for h in 2..=t {
                row[h - 1] += 2;
            }
            for h in t + 1..=kk {
                row[h - 1] += 1;
            }
            if l > 0 {
                row[j - 1] += 1;
            }
            if top {
                row[nu[1] + s.mu()[1] - 1] += 1;
            }
        } else {
            for h in 2..=kk {
                row[h - 1] += 2;
            }
            if top {
                row[tail - 1] += 2;
            } else {
                row[j - 1] += 1;
            }
        }
    }
    Ok(rows)
}

/// Closed-form inverse table of `π_k^{-1}`, indexed like [`ChartTable::inverse`].
pub fn printed_inverse(s: &JordanStructure, k: usize) -> Result<Vec<Vec<i32>>, BlowupError> {
    check_stage(s, k)?;
    let n = s.n();
    let nu = s.nu();
    let mu1 = s.mu1();
    let top = k > mu1;
    let kk = if top { mu1 } else { k };
    let sp = s.splitting(kk)?;
    // the divisor of w_1 is z_k below the top stage and z_{ν_2+μ_2} at k = μ_1 + 1
    let w1_den = if top { nu[1] + s.mu()[1] } else { k };
    let mut rows = vec![vec![0i32; n]; n];
    rows[0][0] += 2;
    rows[0][w1_den - 1] -= 1;
    for j in 2..=n {
        let row = &mut rows[j - 1];
        row[j - 1] += 1;
        match sp.per_block.iter().position(|b| b.contains(&j)) {
            Some(0) => row[j - 2] -= 1,
            Some(l) => row[j - nu[l] - 1] -= 1,
            None => row[kk - 1] -= 1,
        }
    }
    Ok(rows)
}

/// One disagreement between a printed table and the generated one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartMismatch {
    pub stage: usize,
    pub table: String,
    /// 1-based row index.
    pub row: usize,
    pub printed: Vec<i64>,
    pub generated: Vec<i64>,
}

/// Compares the printed closed forms with the fold of the chart steps.
pub fn compare_with_printed(s: &JordanStructure, k: usize) -> Result<Vec<ChartMismatch>, BlowupError> {
    let table = ChartTable::new(s, k)?;
    let mut out = Vec::new();
    let pf = printed_forward(s, k)?;
    for (j, (p, g)) in pf.iter().zip(&table.forward).enumerate() {
        if p != g {
            out.push(ChartMismatch {
                stage: k,
                table: "forward".into(),
                row: j + 1,
                printed: p.iter().map(|&e| e as i64).collect(),
                generated: g.iter().map(|&e| e as i64).collect(),
            });
        }
    }
    let pi = printed_inverse(s, k)?;
    for (j, (p, g)) in pi.iter().zip(&table.inverse).enumerate() {
        if p != g {
            out.push(ChartMismatch {
                stage: k,
                table: "inverse".into(),
                row: j + 1,
                printed: p.iter().map(|&e| e as i64).collect(),
                generated: g.iter().map(|&e| e as i64).collect(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(mu: &[usize]) -> JordanStructure {
        JordanStructure::from_ints(mu, &vec![1; mu.len()]).unwrap()
    }

    #[test]
    fn chart_step_examples() {
        let s = st(&[2]);
        assert_eq!(chart_step(&s, 1).unwrap(), vec![vec![1, 0], vec![1, 1]]);
        assert_eq!(chart_step(&s, 2).unwrap(), vec![vec![1, 1], vec![0, 1]]);
        let s = JordanStructure::from_ints(&[2, 2], &[2, 3]).unwrap();
        let top = chart_step(&s, 3).unwrap();
        assert_eq!(top[0], vec![1, 0, 0, 1]);
        assert_eq!(top[1], vec![0, 1, 0, 0]);
    }

    #[test]
    fn forward_and_inverse_examples() {
        let s = st(&[2]);
        let t = ChartTable::new(&s, 2).unwrap();
        assert_eq!(t.forward, vec![vec![1, 1], vec![1, 2]]);
        assert_eq!(t.inverse, vec![vec![2, -1], vec![-1, 1]]);
        let q = |n| GaussRational::from_int(n);
        assert_eq!(t.pi_forward(&[q(2), q(3)]), vec![q(6), q(18)]);
        assert_eq!(t.pi_inverse(&[q(6), q(18)]).unwrap(), vec![q(2), q(3)]);
        assert_eq!(t.pi_inverse(&[q(1), q(0)]), Err(BlowupError::ZeroCoordinate { index: 2 }));
        let t = ChartTable::new(&st(&[3]), 3).unwrap();
        assert_eq!(t.forward, vec![vec![1, 1, 1], vec![1, 2, 1], vec![1, 2, 2]]);
    }

    #[test]
    fn divisor_examples() {
        let q = |n| GaussRational::from_int(n);
        let t = ChartTable::new(&st(&[3]), 3).unwrap();
        assert!(t.on_singular_divisor(&[q(0), q(1), q(1)]));
        assert!(t.on_singular_divisor(&[q(1), q(1), q(0)]));
        assert!(!t.on_singular_divisor(&[q(1), q(1), q(1)]));
        let t = ChartTable::new(&st(&[2, 1]), 2).unwrap();
        assert!(t.on_singular_divisor(&[q(1), q(0), q(5)]));
    }
}
