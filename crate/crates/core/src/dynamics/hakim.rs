//! The matrix `A_[v] = d(P̂_2)_[v] − id` at a non-degenerate characteristic direction.

use num_complex::Complex64;

use super::{argmax_modulus, ChartQuadraticForm, DynamicsError};
use crate::linalg::Matrix;
use crate::scalar::{GaussRational, Scalar};

/// `A_[v]` written in the affine chart `v_p = 1` of `P^{n−1}`; rows and columns
/// follow the coordinates other than `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct HakimMatrix<C: Scalar> {
    pub chart: usize,
    pub lambda: C,
    pub matrix: Matrix<C>,
}

/// Computes `A_[v]` in the chart of the largest-modulus coordinate of `v`.
pub fn hakim_matrix<C: Scalar>(q: &ChartQuadraticForm<C>, v: &[C]) -> Result<HakimMatrix<C>, DynamicsError> {
    let c64: Vec<Complex64> = v.iter().map(Scalar::to_c64).collect();
    hakim_matrix_in_chart(q, v, argmax_modulus(&c64))
}

/// Computes `A_[v]` in the affine chart `x_p = 1` (0-based `p`, `v_p ≠ 0`).
///
/// With `P(v) = λ v` and `v_p = 1`, the derivative of
/// `x ↦ (P_i(x)/P_p(x))_{i≠p}` at `v` is `(∂_j P_i − v_i ∂_j P_p)/λ`.
pub fn hakim_matrix_in_chart<C: Scalar>(q: &ChartQuadraticForm<C>, v: &[C], p: usize) -> Result<HakimMatrix<C>, DynamicsError> {
    let n = q.n();
    let vp = v[p].clone();
    let Some(inv) = vp.recip() else {
        return Err(DynamicsError::PreconditionViolated(format!("v_{} = 0 cannot fix the chart", p + 1)));
    };
    let x: Vec<C> = v.iter().map(|c| c.mul(&inv)).collect();
    let px = q.eval(&x);
    let lambda = px[p].clone();
    if lambda.is_zero() {
        return Err(DynamicsError::DegenerateDirection);
    }
    let d = q.differential(&x);
    let others: Vec<usize> = (0..n).filter(|&i| i != p).collect();
    let matrix = Matrix::from_fn(n - 1, n - 1, |a, b| {
        let (i, j) = (others[a], others[b]);
        let entry = d[(i, j)].sub(&x[i].mul(&d[(p, j)])).div(&lambda).expect("λ ≠ 0");
        if a == b {
            entry.sub(&C::one())
        } else {
            entry
        }
    });
    // λ for the original representative scales with v_p
    Ok(HakimMatrix { chart: p, lambda: lambda.mul(&vp), matrix })
}

impl HakimMatrix<GaussRational> {
    pub fn spectrum(&self) -> Vec<Complex64> {
        self.matrix.eigenvalues(&[]).all_c64()
    }
}

impl HakimMatrix<Complex64> {
    pub fn spectrum(&self) -> Vec<Complex64> {
        self.matrix.numeric_eigenvalues()
    }
}

/// Closed form `∓2√η/(ε ± √η)` for the two directions `v_±` of a
/// two-dimensional non-generic germ. The derivative of the induced
/// projective map is exactly twice this (see the tests).
pub fn printed_hakim_2d(eps: Complex64, sqrt_eta: Complex64, plus: bool) -> Complex64 {
    if plus {
        -2.0 * sqrt_eta / (eps + sqrt_eta)
    } else {
        2.0 * sqrt_eta / (eps - sqrt_eta)
    }
}
