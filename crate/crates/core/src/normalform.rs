//! Quadratic normal form for germs with `dF_O = J_n` (eigenvalue 1).
//!
//! Quadratic forms are symmetric matrices `A` with `φ(z) = zᵀAz`; a
//! [`QuadraticTuple`] holds one per component. Conjugators are degree-two
//! polynomial automorphisms `χ(z) = J_(α) z + Q_2(z)` commuting with `J` to
//! first order.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::ChartQuadraticForm;
use crate::germ::{random_rational, InputGerm};
use crate::linalg::Matrix;
use crate::partition::JordanStructure;
use crate::scalar::{GaussRational, Scalar};
use crate::series::{PolyMap, SeriesError, TruncatedSeries};

/// `P_2 = (φ_1, …, φ_n)` as symmetric matrices.
pub type QuadraticTuple = ChartQuadraticForm<GaussRational>;

type Q = GaussRational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NormalFormError {
    #[error("linear part is not a single unipotent Jordan block")]
    NotJordan,
    #[error("a^2_11 ≠ 0: the invariants ε, η, Ξ need a non-generic germ")]
    GenericInput,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("reduction did not reach the target shape: {0}")]
    Shape(String),
}

fn ceil_half(n: usize) -> usize {
    n.div_ceil(2)
}

/// `J' = J − I`, the nilpotent shift `z ↦ (z_2, …, z_n, 0)`.
fn shift_matrix(n: usize) -> Matrix<Q> {
    Matrix::from_fn(n, n, |i, j| if j == i + 1 { Q::one() } else { Q::zero() })
}

/// `J_(α)`: upper triangular Toeplitz with first row `α`.
pub fn toeplitz(alpha: &[Q]) -> Matrix<Q> {
    let n = alpha.len();
    Matrix::from_fn(n, n, |i, j| if j >= i { alpha[j - i].clone() } else { Q::zero() })
}

/// Matrix of `ψ∘J' + Ψ∘(I⊕J') + Ψ∘(J'⊕I)` for `ψ(z) = zᵀBz`.
pub fn shift_operator(b: &Matrix<Q>) -> Matrix<Q> {
    let s = shift_matrix(b.rows());
    let st = s.transpose();
    st.mul(b).mul(&s).add(&b.mul(&s)).add(&st.mul(b))
}

/// `φ∘M` for a linear map `M`.
fn substitute(a: &Matrix<Q>, m: &Matrix<Q>) -> Matrix<Q> {
    m.transpose().mul(a).mul(m)
}

/// Output of [`eliminate_offdiagonal`]: `reduced = φ − shift_operator(psi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    pub psi: Matrix<Q>,
    pub reduced: Matrix<Q>,
}

/// Symmetric unknowns `b_{ij}`, 1-based; index 0 stands for an absent term.
/// An unknown is either designated by one equation or free (then 0); free
/// unknowns may still be designated by a later row, so values are resolved
/// only at the end.
struct SymUnknowns {
    n: usize,
    /// Per slot: `b = (a − Σ others) / mult`.
    eqs: Vec<Option<(Q, Vec<usize>, i64)>>,
}

impl SymUnknowns {
    fn new(n: usize) -> Self {
        SymUnknowns { n, eqs: vec![None; n * n] }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i == 0 || j == 0 || i > self.n || j > self.n {
            return None;
        }
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        Some((a - 1) * self.n + (b - 1))
    }

    /// Designates `b_{target}` by `a − b_{h−1,k−1} − b_{h,k−1} − b_{h−1,k} = 0`.
    fn solve(&mut self, a: &Q, h: usize, k: usize, target: (usize, usize)) {
        let t = self.slot(target.0, target.1).expect("target is an unknown");
        assert!(self.eqs[t].is_none(), "b_{target:?} designated twice");
        let mut mult = 0;
        let mut others = Vec::new();
        for (i, j) in [(h - 1, k - 1), (h, k - 1), (h - 1, k)] {
            match self.slot(i, j) {
                Some(s) if s == t => mult += 1,
                Some(s) => others.push(s),
                None => {}
            }
        }
        assert!(mult > 0, "target must occur in the equation");
        self.eqs[t] = Some((a.clone(), others, mult));
    }

    fn value(&self, slot: usize, memo: &mut Vec<Option<Q>>, depth: usize) -> Q {
        if let Some(v) = &memo[slot] {
            return v.clone();
        }
        assert!(depth <= self.n * self.n, "cyclic elimination equations");
        let v = match &self.eqs[slot] {
            None => Q::zero(),
            Some((a, others, mult)) => {
                let rest = others.iter().fold(a.clone(), |acc, &s| acc.sub(&self.value(s, memo, depth + 1)));
                rest.div(&Q::from_int(*mult)).expect("nonzero multiplicity")
            }
        };
        memo[slot] = Some(v.clone());
        v
    }

    fn into_matrix(self) -> Matrix<Q> {
        let n = self.n;
        let mut memo = vec![None; n * n];
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let s = self.slot(i + 1, j + 1).expect("in range");
                m[(i, j)] = self.value(s, &mut memo, 0);
            }
        }
        m
    }
}

/// Kills the off-diagonal entries of `φ` and its diagonal beyond `⌈n/2⌉`,
/// row by row; unknowns left free are set to 0.
pub fn eliminate_offdiagonal(phi: &Matrix<Q>) -> Elimination {
    let n = phi.rows();
    let m = ceil_half(n);
    let mut b = SymUnknowns::new(n);
    for h in 1..=n {
        for k in h..=n {
            let a = &phi[(h - 1, k - 1)];
            if h == 1 {
                if k > 1 {
                    b.solve(a, 1, k, (1, k - 1));
                }
            } else if h <= m {
                if k == h {
                    continue;
                } else if k <= n - h + 1 {
                    b.solve(a, h, k, (h, k - 1));
                } else {
                    b.solve(a, h, k, (h - 1, k));
                }
            } else {
                b.solve(a, h, k, (h - 1, k));
            }
        }
    }
    let psi = b.into_matrix();
    let reduced = phi.sub(&shift_operator(&psi));
    Elimination { psi, reduced }
}

/// `φ` is diagonal with nonzero entries only in the first `⌈n/2⌉` places.
pub fn has_eliminated_shape(a: &Matrix<Q>) -> bool {
    let n = a.rows();
    let m = ceil_half(n);
    (0..n).all(|i| (0..n).all(|j| a[(i, j)].is_zero() || (i == j && i < m)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalReduction {
    pub alpha: Vec<Q>,
    pub psi: Matrix<Q>,
    pub reduced: Matrix<Q>,
    /// First index with `ε_j ≠ 0`, 1-based.
    pub j0: Option<usize>,
}

/// Reduces a diagonal form to `α_0² ε_{j0} z_{j0}²` (or 0 when `j0 > ⌈n/2⌉`)
/// via `φ∘J_(α) − shift_operator(ψ)`. Free `α` entries are 0, `α_0 = 1`.
///
/// Each `α_{2(h−j0)}` enters the `h`-th diagonal entry of the eliminated form
/// affinely, so it is fixed by evaluating that entry at three values.
pub fn reduce_diagonal_tail(phi: &Matrix<Q>) -> Result<DiagonalReduction, NormalFormError> {
    let n = phi.rows();
    let m = ceil_half(n);
    if !phi.is_diagonal() {
        return Err(NormalFormError::Shape("reduce_diagonal_tail needs a diagonal form".into()));
    }
    let mut alpha = vec![Q::zero(); n];
    alpha[0] = Q::one();
    let j0 = (1..=n).find(|&j| !phi[(j - 1, j - 1)].is_zero());
    let entry = |alpha: &[Q], h: usize| eliminate_offdiagonal(&substitute(phi, &toeplitz(alpha))).reduced[(h - 1, h - 1)].clone();
    if let Some(j0) = j0.filter(|&j| j <= m) {
        for h in j0 + 1..=m {
            let t = 2 * (h - j0);
            let at = |x: i64| {
                let mut a = alpha.clone();
                a[t] = Q::from_int(x);
                entry(&a, h)
            };
            let (c0, c1, c2) = (at(0), at(1), at(2));
            let slope = c1.sub(&c0);
            if c2.sub(&c1) != slope || slope.is_zero() {
                return Err(NormalFormError::Shape(format!("entry {h} is not affine in α_{t}")));
            }
            alpha[t] = c0.neg().div(&slope).expect("nonzero slope");
        }
    }
    let e = eliminate_offdiagonal(&substitute(phi, &toeplitz(&alpha)));
    let mut target = Matrix::zeros(n, n);
    if let Some(j) = j0.filter(|&j| j <= m) {
        target[(j - 1, j - 1)] = alpha[0].mul(&alpha[0]).mul(&phi[(j - 1, j - 1)]);
    }
    if e.reduced != target {
        return Err(NormalFormError::Shape(format!("diagonal tail not reduced: {:?}", e.reduced)));
    }
    Ok(DiagonalReduction { alpha, psi: e.psi, reduced: e.reduced, j0 })
}

/// `χ(z) = J_(α) z + (zᵀB_1z, …, zᵀB_nz)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conjugator {
    pub linear: Matrix<Q>,
    pub quadratic: Vec<Matrix<Q>>,
}

impl Conjugator {
    pub fn identity(n: usize) -> Self {
        Conjugator { linear: Matrix::identity(n), quadratic: vec![Matrix::zeros(n, n); n] }
    }

    pub fn n(&self) -> usize {
        self.linear.rows()
    }

    /// Jet of `self ∘ other` up to degree two.
    pub fn then(&self, other: &Conjugator) -> Conjugator {
        let n = self.n();
        let quadratic = (0..n)
            .map(|j| {
                let mut acc = substitute(&self.quadratic[j], &other.linear);
                for i in 0..n {
                    acc = acc.add(&other.quadratic[i].scale(&self.linear[(j, i)]));
                }
                acc
            })
            .collect();
        Conjugator { linear: self.linear.mul(&other.linear), quadratic }
    }

    pub fn to_map(&self, cap: u32) -> PolyMap<Q> {
        let n = self.n();
        let q = ChartQuadraticForm { components: self.quadratic.clone() }.to_map();
        let comps = (0..n)
            .map(|j| {
                let mut s = q.components[j].polynomial_with_cap(cap);
                for i in 0..n {
                    if !self.linear[(j, i)].is_zero() {
                        s.add_term(crate::series::Monomial::var(i), self.linear[(j, i)].clone());
                    }
                }
                s
            })
            .collect();
        PolyMap::new(comps)
    }

    /// `χ^{-1}` to degree `cap`, by the fixed point `y = L^{-1}(z − Q_2(y))`.
    pub fn inverse_map(&self, cap: u32) -> Result<PolyMap<Q>, NormalFormError> {
        let n = self.n();
        let linv = self.linear.inverse().map_err(|_| NormalFormError::NotJordan)?;
        let q = ChartQuadraticForm { components: self.quadratic.clone() }.to_map().polynomial_with_cap(cap);
        let apply = |m: &Matrix<Q>, v: &PolyMap<Q>| -> Result<PolyMap<Q>, SeriesError> {
            let comps = (0..n)
                .map(|j| {
                    (0..n).try_fold(TruncatedSeries::zero(n, cap), |acc, i| acc.add(&v.components[i].scale(&m[(j, i)])))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(PolyMap::new(comps))
        };
        let id = PolyMap::identity(n, cap);
        let base = apply(&linv, &id)?;
        let mut y = base.clone();
        for _ in 1..cap {
            let qy = q.compose(&y)?;
            y = base.sub(&apply(&linv, &qy)?)?;
        }
        Ok(y)
    }

    /// `χ^{-1} ∘ F ∘ χ` to the cap of `f` (at least 3).
    pub fn conjugate(&self, f: &PolyMap<Q>) -> Result<PolyMap<Q>, NormalFormError> {
        let cap = f.cap().max(3);
        let chi = self.to_map(cap);
        let inv = self.inverse_map(cap)?;
        Ok(inv.compose(&f.polynomial_with_cap(cap).compose(&chi)?)?)
    }
}

/// Quadratic part of `χ^{-1}∘F∘χ` when `F` has linear part `J`:
/// `L^{-1}[J Q_2 − Q_2∘J + P_2∘L]`.
pub fn conjugate_quadratic(p2: &QuadraticTuple, chi: &Conjugator) -> QuadraticTuple {
    let n = p2.n();
    let j = toeplitz(&(0..n).map(|i| if i < 2 { Q::one() } else { Q::zero() }).collect::<Vec<_>>());
    let linv = chi.linear.inverse().expect("J_(α) is invertible");
    let bracket: Vec<Matrix<Q>> = (0..n)
        .map(|i| {
            let mut b = chi.quadratic[i].sub(&substitute(&chi.quadratic[i], &j)).add(&substitute(&p2.components[i], &chi.linear));
            if i + 1 < n {
                b = b.add(&chi.quadratic[i + 1]);
            }
            b
        })
        .collect();
    let components = (0..n)
        .map(|r| (0..n).fold(Matrix::zeros(n, n), |acc, i| acc.add(&bracket[i].scale(&linv[(r, i)]))))
        .collect();
    ChartQuadraticForm { components }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormResult {
    /// `χ^{-1}∘F∘χ`, computed by series composition.
    pub normalized: PolyMap<Q>,
    /// Quadratic part produced by the reduction.
    pub quadratic: QuadraticTuple,
    pub conjugator: Conjugator,
    pub alpha: Vec<Q>,
    /// `epsilon[h][k]`: coefficient of `z_{k+1}²` in `φ̃_{h+1}`.
    pub epsilon: Vec<Vec<Q>>,
    /// Index of the square surviving in `φ̃_n`, 1-based.
    pub j0: Option<usize>,
}

impl NormalFormResult {
    /// Quadratic part of the series conjugation equals the reduction's output.
    pub fn conjugation_identity_holds(&self) -> bool {
        ChartQuadraticForm::from_map(&self.normalized) == self.quadratic
    }

    /// `φ̃_1, …, φ̃_{n−1}` diagonal, `φ̃_n` a single square `z_{j0}²` with
    /// `j0 ≤ ⌈n/2⌉`, no `z_k²` with `k > ⌈n/2⌉`.
    pub fn has_normal_shape(&self) -> bool {
        let n = self.quadratic.n();
        let last = &self.quadratic.components[n - 1];
        let nonzero_last = (0..n).filter(|&k| !last[(k, k)].is_zero()).count();
        self.quadratic.components.iter().all(has_eliminated_shape) && nonzero_last <= 1
    }
}

fn require_jordan(germ: &InputGerm) -> Result<(), NormalFormError> {
    let s = germ.structure();
    if s.rho() == 1 && s.is_unipotent() {
        Ok(())
    } else {
        Err(NormalFormError::NotJordan)
    }
}

/// Reduces the quadratic part: eliminate in `φ_n`, reduce its diagonal tail,
/// then eliminate in `φ_{n−1}, …, φ_1`.
pub fn normal_form(germ: &InputGerm) -> Result<NormalFormResult, NormalFormError> {
    require_jordan(germ)?;
    let n = germ.n();
    let mut p2 = ChartQuadraticForm::from_map(germ.map());
    let mut chi = Conjugator::identity(n);
    let mut step = |p2: &mut QuadraticTuple, c: Conjugator| {
        *p2 = conjugate_quadratic(p2, &c);
        chi = chi.then(&c);
    };

    let single = |slot: usize, psi: Matrix<Q>| {
        let mut c = Conjugator::identity(n);
        c.quadratic[slot] = psi;
        c
    };
    let e = eliminate_offdiagonal(&p2.components[n - 1]);
    step(&mut p2, single(n - 1, e.psi));
    let d = reduce_diagonal_tail(&p2.components[n - 1])?;
    let mut c = single(n - 1, d.psi);
    c.linear = toeplitz(&d.alpha);
    step(&mut p2, c);
    for h in (0..n - 1).rev() {
        let e = eliminate_offdiagonal(&p2.components[h]);
        step(&mut p2, single(h, e.psi));
    }

    let normalized = chi.conjugate(germ.map())?;
    let epsilon = p2.components.iter().map(|a| (0..n).map(|k| a[(k, k)].clone()).collect()).collect();
    let last = &p2.components[n - 1];
    let j0 = (1..=n).find(|&k| !last[(k - 1, k - 1)].is_zero());
    let result = NormalFormResult { normalized, quadratic: p2, conjugator: chi, alpha: d.alpha, epsilon, j0 };
    if !result.has_normal_shape() {
        return Err(NormalFormError::Shape(format!("{:?}", result.quadratic)));
    }
    Ok(result)
}

/// `(ε^1_1, …, ε^1_n) = P̃_2(e_1)`.
pub fn epsilon_vector(nf: &NormalFormResult) -> Vec<Q> {
    nf.epsilon.iter().map(|row| row[0].clone()).collect()
}

/// Projective invariants of a two-dimensional germ with `a^2_11 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invariants2d {
    pub epsilon: Q,
    pub eta: Q,
    /// `η/ε²` from the raw coefficients.
    pub xi: Option<Q>,
    /// `1 + 2 P̃_3(e_1)_2 / (ε̃^1_1)²` read off the computed normal form.
    pub xi_normal_form: Option<Q>,
}

impl Invariants2d {
    pub fn xi_agrees(&self) -> bool {
        self.xi == self.xi_normal_form
    }
}

pub fn invariants_2d(germ: &InputGerm) -> Result<Invariants2d, NormalFormError> {
    require_jordan(germ)?;
    if germ.n() != 2 {
        return Err(NormalFormError::NotJordan);
    }
    if !germ.coefficient(2, &[2, 0]).is_zero() {
        return Err(NormalFormError::GenericInput);
    }
    let (epsilon, eta) = crate::dynamics::classify::epsilon_eta(germ);
    let xi = (!epsilon.is_zero()).then(|| eta.div(&epsilon.mul(&epsilon)).expect("ε ≠ 0"));
    let nf = normal_form(germ)?;
    let e11 = nf.normalized.components[0].coeff_of(&[2, 0]);
    let eta2 = nf.normalized.components[1].coeff_of(&[3, 0]);
    let two = Q::from_int(2);
    let xi_normal_form = (!e11.is_zero()).then(|| Q::one().add(&two.mul(&eta2).div(&e11.mul(&e11)).expect("ε̃ ≠ 0")));
    Ok(Invariants2d { epsilon, eta, xi, xi_normal_form })
}

/// Random conjugator preserving `J`: `α_0 ≠ 0`, random `α` and quadratic part.
pub fn random_conjugator<R: Rng>(rng: &mut R, n: usize) -> Conjugator {
    let alpha: Vec<Q> = (0..n).map(|i| random_rational(rng, i == 0)).collect();
    let quadratic = (0..n)
        .map(|_| {
            let mut b = Matrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let x = random_rational(rng, false);
                    b[(i, j)] = x.clone();
                    b[(j, i)] = x;
                }
            }
            b
        })
        .collect();
    Conjugator { linear: toeplitz(&alpha), quadratic }
}

/// `χ^{-1}∘F∘χ` as a germ with the same Jordan structure.
pub fn conjugate_germ(germ: &InputGerm, chi: &Conjugator) -> Result<InputGerm, NormalFormError> {
    let map = chi.conjugate(germ.map())?;
    let s: JordanStructure = germ.structure().clone();
    InputGerm::new(s, map).map_err(|e| NormalFormError::Shape(e.to_string()))
}
