//! Parabolic-curve counts and predicted orbit asymptotics.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::chardir::{exact2d, numeric, structured, CharDirection, NumericOptions};
use super::{ChartQuadraticForm, DynamicsError};
use crate::germ::InputGerm;
use crate::lifting::{lift, lifted_linear_part};
use crate::scalar::{GaussRational, Scalar};

/// Outcome of [`parabolic_classification`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Classification {
    /// `a^{μ_1}_{11} ≠ 0`, `μ_2 < μ_1`: one curve tangent to `e_1`.
    Generic { curves: usize, direction: CharDirection, asymptotics: Vec<AsymptoticRow> },
    /// `n = 2`, `a^2_{11} = 0`, `(ε, η) ≠ (0, 0)`.
    NonGeneric2d {
        epsilon: GaussRational,
        eta: GaussRational,
        curves: usize,
        /// Allowable non-degenerate directions found at stage 1.
        directions: Vec<CharDirection>,
    },
    /// One block, `a^{μ_1}_{11} = 0 ≠ a^{μ_1−1}_{11}`: stage `μ_1 − 1` suffices.
    EarlyDiagonal { curves: usize, stage: usize, direction: CharDirection },
    Unresolved { reason: String },
}

impl Classification {
    pub fn curves(&self) -> Option<usize> {
        match self {
            Classification::Generic { curves, .. }
            | Classification::NonGeneric2d { curves, .. }
            | Classification::EarlyDiagonal { curves, .. } => Some(*curves),
            Classification::Unresolved { .. } => None,
        }
    }
}

fn require_unipotent(germ: &InputGerm) -> Result<(), DynamicsError> {
    if germ.structure().is_unipotent() {
        Ok(())
    } else {
        Err(DynamicsError::UnsupportedSpectrum)
    }
}

/// `ε = a^1_{11} + a^2_{12}` and `η = (a^1_{11} − a^2_{12})² + 2 a^2_{111}`
/// of a two-dimensional germ, where `a^2_{12}` is half the `z_1 z_2`
/// coefficient of `f_2` and `a^2_{111}` the `z_1³` coefficient.
pub fn epsilon_eta(germ: &InputGerm) -> (GaussRational, GaussRational) {
    let a111 = germ.coefficient(1, &[2, 0]);
    let a212 = germ.coefficient(2, &[1, 1]).div(&GaussRational::from_int(2)).expect("2 ≠ 0");
    let c3 = germ.coefficient(2, &[3, 0]);
    let eps = a111.add(&a212);
    let d = a111.sub(&a212);
    let eta = d.mul(&d).add(&c3.add(&c3));
    (eps, eta)
}

/// Counts parabolic curves following the case analysis for unipotent germs.
pub fn parabolic_classification(germ: &InputGerm) -> Result<Classification, DynamicsError> {
    require_unipotent(germ)?;
    let s = germ.structure();
    let mu1 = s.mu1();
    if germ.is_generic() {
        if s.top_blocks_equal() {
            return Ok(Classification::Unresolved {
                reason: "μ_2 = μ_1: the last lift has no allowable non-degenerate characteristic direction".into(),
            });
        }
        let l = lift(germ, s.ell(), 3)?;
        let q = ChartQuadraticForm::from_map(&l.map);
        let direction = structured(&q, &l.table.divisor)?;
        let asymptotics = expected_asymptotics(germ)?;
        return Ok(Classification::Generic { curves: 1, direction, asymptotics });
    }
    if s.n() == 2 {
        let (epsilon, eta) = epsilon_eta(germ);
        if epsilon.is_zero() && eta.is_zero() {
            return Ok(Classification::Unresolved { reason: "ε = η = 0".into() });
        }
        let curves = if eta.is_zero() || eta == epsilon.mul(&epsilon) { 1 } else { 2 };
        let l = lift(germ, 1, 3)?;
        let q = ChartQuadraticForm::from_map(&l.map);
        let directions: Vec<CharDirection> =
            exact2d(&q, &l.table.divisor)?.into_iter().filter(|d| d.allowable && !d.degenerate).collect();
        return Ok(Classification::NonGeneric2d { epsilon, eta, curves, directions });
    }
    if s.rho() == 1 && mu1 >= 3 && !germ.a11(mu1 - 1).is_zero() {
        let stage = mu1 - 1;
        let l = lift(germ, stage, 3)?;
        let lin = lifted_linear_part(&l);
        if !lin.diagonalizable || !lin.matrix.is_diagonal() || lin.matrix.diagonal().iter().any(|x| *x != GaussRational::one()) {
            return Ok(Classification::Unresolved { reason: format!("stage {stage} lift is not tangent to the identity") });
        }
        let q = ChartQuadraticForm::from_map(&l.map);
        let found = match structured(&q, &l.table.divisor) {
            Ok(d) => Some(d),
            Err(_) if s.n() <= 6 => numeric(&q.to_c64(), &l.table.divisor, NumericOptions::default())?
                .into_iter()
                .find(|d| d.allowable && !d.degenerate),
            Err(_) => None,
        };
        return Ok(match found {
            Some(direction) => Classification::EarlyDiagonal { curves: 1, stage, direction },
            None => Classification::Unresolved { reason: format!("no allowable non-degenerate direction at stage {stage}") },
        });
    }
    Ok(Classification::Unresolved { reason: "non-generic germ outside the covered cases".into() })
}

/// Predicted `z^k_j ≈ c_j / k^{m_j}` along the parabolic curve of a generic germ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    /// Coordinate, 1-based.
    pub j: usize,
    pub exponent: u32,
    /// Closed-form constant; `None` when only `o(k^{-m})` is known.
    pub constant: Option<GaussRational>,
    pub upper_bound_only: bool,
    /// Exponent read from the forward chart monomial of `z_j`.
    pub derived_exponent: u32,
    /// `Π_i (−v_i/λ)^{M_ji}` with `v` the allowable direction of the last lift.
    pub derived_constant: Option<GaussRational>,
}

impl AsymptoticRow {
    /// Closed form and derivation agree (both absent counts as agreement).
    pub fn consistent(&self) -> bool {
        self.exponent == self.derived_exponent && self.constant == self.derived_constant
    }
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * k)
}

fn binomial(n: u32, k: u32) -> BigInt {
    factorial(n) / (factorial(k) * factorial(n - k))
}

fn int(x: BigInt) -> GaussRational {
    GaussRational::real(BigRational::from_integer(x))
}

fn sign(e: u32) -> GaussRational {
    if e.is_multiple_of(2) {
        GaussRational::one()
    } else {
        GaussRational::from_int(-1)
    }
}

/// Exponents and constants along the parabolic curve of a generic unipotent
/// germ, from the closed form and, independently, from the allowable
/// direction of the last lift pushed through the chart monomials.
pub fn expected_asymptotics(germ: &InputGerm) -> Result<Vec<AsymptoticRow>, DynamicsError> {
    require_unipotent(germ)?;
    let s = germ.structure();
    if !germ.is_generic() || s.top_blocks_equal() {
        return Err(DynamicsError::NonGeneric);
    }
    let mu1 = s.mu1() as u32;
    let a = germ.a11(s.mu1());
    let common = int(BigInt::from(2 * mu1 - 1) * binomial(2 * mu1 - 2, mu1 - 1)).div(&a).expect("generic");

    let l = lift(germ, s.ell(), 3)?;
    let q = ChartQuadraticForm::from_map(&l.map);
    let dir = structured(&q, &l.table.divisor)?;
    let ex = dir.exact.expect("structured directions are exact");
    let ratio: Vec<GaussRational> = ex.v.iter().map(|x| x.div(&ex.lambda).expect("λ ≠ 0").neg()).collect();

    let nu = s.nu();
    let mut rows = Vec::new();
    for j in 1..=s.n() {
        let l_idx = s.block_of(j);
        let (exponent, constant, upper) = if l_idx == 0 {
            let e = mu1 + j as u32 - 1;
            let c = sign(e).mul(&common).mul(&int(factorial(mu1 + j as u32 - 2)));
            (e, Some(c), false)
        } else {
            let t = (j - nu[l_idx]) as u32;
            let mul = s.mu()[l_idx] as u32;
            let e = mu1 + t;
            if mul + 1 < mu1 {
                (e, None, true)
            } else {
                let aj = germ.a11(nu[l_idx] + s.mu()[l_idx]);
                let c = sign(e)
                    .mul(&aj)
                    .mul(&int(BigInt::from(mul + t)))
                    .mul(&common)
                    .mul(&int(factorial(mu1 + t - 2)));
                (e, Some(c), false)
            }
        };
        let row = &l.table.forward[j - 1];
        let derived_exponent: u32 = row.iter().sum();
        let derived_constant = row
            .iter()
            .zip(&ratio)
            .filter(|(e, _)| **e > 0)
            .try_fold(GaussRational::one(), |acc, (e, r)| (!r.is_zero()).then(|| acc.mul(&r.pow(*e))));
        rows.push(AsymptoticRow { j, exponent, constant, upper_bound_only: upper, derived_exponent, derived_constant });
    }
    Ok(rows)
}
