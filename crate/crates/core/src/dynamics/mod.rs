//! Dynamics of maps tangent to the identity after diagonalization:
//! characteristic directions, Hakim matrices, parabolic-curve counts, orbit
//! asymptotics and regular orbits.

use num_complex::Complex64;

use crate::lifting::LiftError;
use crate::linalg::Matrix;
use crate::scalar::{GaussRational, Scalar};
use crate::series::{Monomial, PolyMap};

pub mod chardir;
pub mod classify;
pub mod hakim;
pub mod orbit;
pub mod regularity;

pub use chardir::{allowable_filter, characteristic_directions, CharDirection, Mode};
pub use classify::{expected_asymptotics, parabolic_classification, AsymptoticRow, Classification};
pub use hakim::{hakim_matrix, HakimMatrix};
pub use orbit::{asymptotic_fit, orbit_iterate, profile_seed, pullback_seed, AsymptoticFit, InverseMap, OrbitTrace};
pub use regularity::{allowable_directions, cesaro_limit, regularity_classify, OrbitClass, RegularityOptions, RegularityReport, StageVerdict};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error("no allowable non-degenerate characteristic direction")]
    NoAllowableDirection,
    #[error("direction is degenerate (λ = 0)")]
    DegenerateDirection,
    #[error("{mode} mode needs {need}, got n = {n}")]
    Dimension { mode: &'static str, need: &'static str, n: usize },
    #[error("quadratic form does not have the expected shape: {0}")]
    StructureViolation(String),
    #[error("every direction is characteristic")]
    Dicritical,
    #[error("spectrum of dF_O is not {{1}}")]
    UnsupportedSpectrum,
    #[error("germ is not generic: a^{{μ1}}_11 = 0")]
    NonGeneric,
    #[error("orbit tail does not converge to the origin")]
    NonConvergent,
    #[error("not enough samples: need {need}, have {have}")]
    InsufficientData { need: usize, have: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

/// A `C^n`-valued quadratic form `P_2(v)_j = Σ_{h,k} A^j_{hk} v_h v_k` with
/// symmetric `A^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartQuadraticForm<C: Scalar> {
    pub components: Vec<Matrix<C>>,
}

impl<C: Scalar> ChartQuadraticForm<C> {
    /// Reads the degree-two terms of every component.
    pub fn from_map(map: &PolyMap<C>) -> Self {
        let n = map.nvars();
        let two = C::from_i64(2);
        let components = map
            .components
            .iter()
            .map(|c| {
                let mut a = Matrix::zeros(n, n);
                for (m, v) in c.terms() {
                    if m.degree() != 2 {
                        continue;
                    }
                    let idx: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, m.exp(i) as usize)).collect();
                    let (h, k) = (idx[0], idx[1]);
                    if h == k {
                        a[(h, h)] = v.clone();
                    } else {
                        let half = v.div(&two).expect("2 is invertible");
                        a[(h, k)] = half.clone();
                        a[(k, h)] = half;
                    }
                }
                a
            })
            .collect();
        ChartQuadraticForm { components }
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.components.iter().all(|a| (0..a.rows()).all(|i| (0..a.cols()).all(|j| a[(i, j)] == a[(j, i)])))
    }

    /// Coefficient of `w_h w_k` in component `j` (0-based indices), as it
    /// appears in the polynomial.
    pub fn coefficient(&self, j: usize, h: usize, k: usize) -> C {
        let a = &self.components[j][(h, k)];
        if h == k {
            a.clone()
        } else {
            a.add(a)
        }
    }

    pub fn eval(&self, v: &[C]) -> Vec<C> {
        self.components
            .iter()
            .map(|a| {
                let av = a.mul_vec(v);
                av.iter().zip(v).fold(C::zero(), |acc, (x, y)| acc.add(&x.mul(y)))
            })
            .collect()
    }

    /// `dP_2` at `v`: entry `(j, i)` is `∂P_j/∂v_i = 2 Σ_k A^j_{ik} v_k`.
    pub fn differential(&self, v: &[C]) -> Matrix<C> {
        let n = self.n();
        let two = C::from_i64(2);
        let rows: Vec<Vec<C>> = self.components.iter().map(|a| a.mul_vec(v).iter().map(|x| x.mul(&two)).collect()).collect();
        Matrix::from_fn(n, n, |j, i| rows[j][i].clone())
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D + Copy) -> ChartQuadraticForm<D> {
        ChartQuadraticForm { components: self.components.iter().map(|a| a.map(f)).collect() }
    }

    pub fn to_c64(&self) -> ChartQuadraticForm<Complex64> {
        self.map_coeffs(Scalar::to_c64)
    }

    /// The form as a polynomial map with cap 2.
    pub fn to_map(&self) -> PolyMap<C> {
        let n = self.n();
        let comps = (0..n)
            .map(|j| {
                let mut s = crate::series::TruncatedSeries::zero(n, 2);
                for h in 0..n {
                    for k in h..n {
                        let c = self.coefficient(j, h, k);
                        if !c.is_zero() {
                            s.add_term(Monomial::var(h).mul(&Monomial::var(k)), c);
                        }
                    }
                }
                s
            })
            .collect();
        PolyMap::new(comps)
    }
}

impl ChartQuadraticForm<GaussRational> {
    /// Builds the form from triples `(j, h, k, c)`, where `c` is the
    /// coefficient of `w_h w_k` in component `j` (1-based).
    pub fn from_triples(n: usize, triples: &[(usize, usize, usize, GaussRational)]) -> Self {
        let mut s: Vec<crate::series::TruncatedSeries<GaussRational>> =
            (0..n).map(|_| crate::series::TruncatedSeries::zero(n, 2)).collect();
        for (j, h, k, c) in triples {
            s[j - 1].add_term(Monomial::var(h - 1).mul(&Monomial::var(k - 1)), c.clone());
        }
        Self::from_map(&PolyMap::new(s))
    }
}

/// `1 − |⟨a, b⟩| / (‖a‖ ‖b‖)`, zero iff `[a] = [b]`.
pub fn projective_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let dot: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    (1.0 - dot.norm() / (na * nb)).max(0.0)
}

/// Scales `v` so that its largest-modulus entry (first one on ties) is 1.
pub fn normalize_max(v: &[Complex64]) -> (Vec<Complex64>, Complex64) {
    let p = argmax_modulus(v);
    let c = v[p];
    (v.iter().map(|x| x / c).collect(), c)
}

pub(crate) fn argmax_modulus(v: &[Complex64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.norm() > v[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    best
}
