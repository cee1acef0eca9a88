//! Lifting a germ through the blow-up sequence as exact truncated series.
//!
//! In the chart at stage `k` write `z_h = w^{m_h}` for the forward monomials
//! and split `m_h = a_h + b_h`, where `a_h` collects the exponents of the
//! divisor coordinates `P'_{k1}`. The lift exists exactly when every
//! `f_h(π_k(w))` is divisible by `w^{a_h}`; with `q_h` the quotient and `E` the
//! inverse exponent table,
//!
//! ```text
//! g̃_i = w_i^{[i ∈ P'_{k1}]} · Π_h q_h^{E_ih}
//! ```
//!
//! Negative exponents need `q_h` to be a unit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blowup::{BlowupError, ChartTable};
use crate::germ::InputGerm;
use crate::linalg::{EigenReport, Matrix};
use crate::partition::JordanStructure;
use crate::scalar::{GaussRational, Scalar};
use crate::series::{Monomial, PolyMap, SeriesError, TruncatedSeries};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LiftError {
    #[error(transparent)]
    Blowup(#[from] BlowupError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("degree cap {0} too small, need at least 3")]
    CapTooSmall(u32),
    #[error("f{component}∘π is not divisible by the divisor monomial at stage {stage}: the germ is degenerate there ({source})")]
    DivisionObstruction { stage: usize, component: usize, source: SeriesError },
    #[error("quotient for z{component} at stage {stage} is not a unit")]
    NotAUnit { stage: usize, component: usize },
}

/// The chart expression of the lift at stage `k`, centred at `e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMap {
    pub structure: JordanStructure,
    pub stage: usize,
    pub table: ChartTable,
    pub map: PolyMap<GaussRational>,
}

impl LiftedMap {
    pub fn cap(&self) -> u32 {
        self.map.cap()
    }

    pub fn linear_part(&self) -> Matrix<GaussRational> {
        Matrix::from_rows(self.map.linear_part())
    }

    /// Degree-two homogeneous part of every component.
    pub fn quadratic_part(&self) -> PolyMap<GaussRational> {
        self.map.homogeneous(2)
    }

    /// Whether the stage is the last one, where the linear part is diagonal.
    pub fn is_final(&self) -> bool {
        self.stage == self.structure.ell()
    }
}

fn divisor_part(m: &Monomial, divisor: &[usize]) -> Monomial {
    let mut e = [0u8; crate::series::MAX_VARS];
    for &h in divisor {
        e[h - 1] = m.exp(h - 1);
    }
    Monomial::new(&e)
}

/// `f_h(π_k(w)) / w^{a_h}` exact up to degree `cap`.
fn quotient(germ: &InputGerm, table: &ChartTable, h: usize, cap: u32) -> Result<TruncatedSeries<GaussRational>, LiftError> {
    let a = divisor_part(&table.forward_monomial(h), &table.divisor);
    let big = cap + a.degree();
    let f = germ.map().components[h - 1].polynomial_with_cap(big);
    let pi = table.forward_series::<GaussRational>(big);
    let fp = f.compose(&pi.components)?;
    fp.monomial_divide(&a)
        .map_err(|source| LiftError::DivisionObstruction { stage: table.stage, component: h, source })
}

/// Lifts `germ` to stage `k`, exact up to total degree `cap`.
pub fn lift(germ: &InputGerm, k: usize, cap: u32) -> Result<LiftedMap, LiftError> {
    if cap < 3 {
        return Err(LiftError::CapTooSmall(cap));
    }
    let s = germ.structure();
    let table = ChartTable::new(s, k)?;
    let n = s.n();
    let q: Vec<_> = (1..=n).into_par_iter().map(|h| quotient(germ, &table, h, cap)).collect::<Result<_, _>>()?;
    let mut recips: Vec<Option<TruncatedSeries<GaussRational>>> = vec![None; n];
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let mut g = if table.divisor.contains(&(i + 1)) {
            TruncatedSeries::var(n, cap, i)
        } else {
            TruncatedSeries::one(n, cap)
        };
        for h in 0..n {
            let e = table.inverse[i][h];
            if e > 0 {
                g = g.mul(&q[h].pow(e as u32))?;
            } else if e < 0 {
                if recips[h].is_none() {
                    let r = q[h].reciprocal().map_err(|_| LiftError::NotAUnit { stage: k, component: h + 1 })?;
                    recips[h] = Some(r);
                }
                g = g.mul(&recips[h].as_ref().unwrap().pow((-e) as u32))?;
            }
        }
        comps.push(g);
    }
    Ok(LiftedMap { structure: s.clone(), stage: k, table, map: PolyMap::new(comps) })
}

/// Lift to the last stage `ℓ(M)`.
pub fn lift_final(germ: &InputGerm, cap: u32) -> Result<LiftedMap, LiftError> {
    lift(germ, germ.structure().ell(), cap)
}

/// Outcome of [`semiconjugacy_check`]; lists hold failing components (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemiconjugacyReport {
    pub stage: usize,
    pub cap: u32,
    /// `π_k∘G̃_k = F∘π_k` truncated at `cap`.
    pub literal_failures: Vec<usize>,
    /// Same identity after cancelling `w^{a_h}` on both sides, at `cap − 1`.
    pub reduced_failures: Vec<usize>,
}

impl SemiconjugacyReport {
    pub fn holds(&self) -> bool {
        self.literal_failures.is_empty() && self.reduced_failures.is_empty()
    }
}

/// Verifies the lift against the germ.
///
/// The literal identity at cap `D` is trivially true for components whose
/// forward monomial has degree above `D`, so the identity is also checked
/// after dividing both sides by `w^{a_h}`: the divisor coordinates of
/// `G̃` must each carry a factor `w_i`, and the cofactors must multiply back
/// to `f_h∘π / w^{a_h}` up to degree `D − 1`.
pub fn semiconjugacy_check(germ: &InputGerm, lifted: &LiftedMap) -> Result<SemiconjugacyReport, LiftError> {
    let cap = lifted.cap();
    let t = &lifted.table;
    let n = t.n();
    let g = &lifted.map.components;

    let pi = t.forward_series::<GaussRational>(cap);
    let lhs = pi.compose(&lifted.map)?;
    let rhs = germ.map().polynomial_with_cap(cap).compose(&pi)?;
    let literal_failures = (0..n).filter(|&h| lhs.components[h] != rhs.components[h]).map(|h| h + 1).collect();

    let mut reduced_failures = Vec::new();
    let mut cof = Vec::with_capacity(n);
    for i in 0..n {
        if t.divisor.contains(&(i + 1)) {
            match g[i].monomial_divide(&Monomial::var(i)) {
                Ok(u) => cof.push(u),
                Err(_) => {
                    reduced_failures.push(i + 1);
                    cof.push(TruncatedSeries::zero(n, cap - 1));
                }
            }
        } else {
            cof.push(g[i].truncate(cap - 1));
        }
    }
    if reduced_failures.is_empty() {
        for h in 1..=n {
            let mut prod = TruncatedSeries::one(n, cap - 1);
            for (i, &e) in t.forward[h - 1].iter().enumerate() {
                if e > 0 {
                    prod = prod.mul(&cof[i].pow(e))?;
                }
            }
            let q = quotient(germ, t, h, cap - 1)?;
            if prod != q {
                reduced_failures.push(h);
            }
        }
    }
    Ok(SemiconjugacyReport { stage: lifted.stage, cap, literal_failures, reduced_failures })
}

/// Eigenvalues of the final lifted linear part with multiplicities:
/// `λ̃_1` once, `1` with multiplicity `μ_1 − 1`, and `λ_l/λ_1` with
/// multiplicity `μ_l`, merged when equal.
pub fn expected_eigenvalues(s: &JordanStructure) -> Vec<(GaussRational, usize)> {
    let lam = s.lambda();
    let mu = s.mu();
    let l1 = &lam[0];
    let tilde = if s.top_blocks_equal() { l1.mul(l1).div(&lam[1]).expect("nonzero eigenvalue") } else { l1.clone() };
    let mut raw = vec![(tilde, 1), (GaussRational::one(), mu[0] - 1)];
    for l in 1..s.rho() {
        raw.push((lam[l].div(l1).expect("nonzero eigenvalue"), mu[l]));
    }
    merge_multiset(raw)
}

/// Adds up multiplicities of equal values, dropping zero counts, sorted by
/// the display string for a stable order.
pub fn merge_multiset(raw: Vec<(GaussRational, usize)>) -> Vec<(GaussRational, usize)> {
    let mut out: Vec<(GaussRational, usize)> = Vec::new();
    for (v, m) in raw {
        if m == 0 {
            continue;
        }
        match out.iter_mut().find(|(w, _)| *w == v) {
            Some(e) => e.1 += m,
            None => out.push((v, m)),
        }
    }
    out.sort_by_key(|(v, _)| v.to_string());
    out
}

/// How diagonalizability was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// Squarefree minimal polynomial over the Gaussian rationals.
    Exact,
    /// Numerical rank of `A − λ` at threshold `1e-8`.
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPartReport {
    pub matrix: Matrix<GaussRational>,
    pub spectrum: EigenReport,
    pub diagonalizable: bool,
    pub certificate: Certificate,
    /// Expected multiset at the last stage, `None` at earlier stages.
    pub expected: Option<Vec<(GaussRational, usize)>>,
}

impl LinearPartReport {
    /// Exact spectrum equals the expected multiset.
    pub fn matches_expected(&self) -> Option<bool> {
        let exp = self.expected.as_ref()?;
        if !self.spectrum.numeric.is_empty() {
            return Some(false);
        }
        Some(merge_multiset(self.spectrum.exact.clone()) == *exp)
    }
}

/// Linear part at `e_k`, its spectrum and a diagonalizability certificate.
pub fn lifted_linear_part(lifted: &LiftedMap) -> LinearPartReport {
    let matrix = lifted.linear_part();
    let expected = lifted.is_final().then(|| expected_eigenvalues(&lifted.structure));
    let extra: Vec<GaussRational> = expected.iter().flatten().map(|(v, _)| v.clone()).collect();
    let spectrum = matrix.eigenvalues(&extra);
    let (diagonalizable, certificate) = match matrix.is_diagonalizable(&spectrum) {
        Some(d) => (d, Certificate::Exact),
        None => (crate::linalg::numeric_diagonalizable(&matrix.to_c64(), 1e-8), Certificate::Numeric),
    };
    LinearPartReport { matrix, spectrum, diagonalizable, certificate, expected }
}

/// Degree-two coefficients of every component at `e_k`.
pub fn lifted_quadratic_part(lifted: &LiftedMap) -> crate::dynamics::ChartQuadraticForm<GaussRational> {
    crate::dynamics::ChartQuadraticForm::from_map(&lifted.map)
}

/// Row families of the displayed degree-two expansion at the last stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "row")]
pub enum DisplayRow {
    First,
    Middle,
    Last,
    BlockInterior { block: usize },
    /// `j = ν_l+μ_l` with `μ_l < μ_1 − 1` (top blocks unequal). The cross
    /// term is written with `w_{μ_l+1}`; this is the row whose index is in doubt.
    BlockEndShort { block: usize },
    /// `j = ν_l+μ_l` with `μ_l = μ_1 − 1`.
    BlockEndAdjacent { block: usize },
    /// `j = ν_2+μ_2` when `μ_1 = μ_2`.
    SecondBlockEnd,
    /// `j = ν_l+μ_l`, `μ_l < μ_1 = μ_2`. Displayed as linear only; the lift
    /// also carries `−(λ_l/λ_1²) w_{μ_l+1} w_j`.
    BlockEndBelow { block: usize },
    /// `j = ν_l+μ_l`, `μ_l = μ_1 = μ_2`, `l ≥ 3`.
    BlockEndEqual { block: usize },
}

impl DisplayRow {
    /// Rows whose closed-form index is questionable.
    pub fn is_ambiguous(&self) -> bool {
        matches!(self, DisplayRow::BlockEndShort { .. })
    }
}

struct Builder {
    n: usize,
    s: TruncatedSeries<GaussRational>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Builder { n, s: TruncatedSeries::zero(n, 2) }
    }
    fn lin(mut self, i: usize, c: GaussRational) -> Self {
        self.s.add_term(Monomial::var(i - 1), c);
        self
    }
    fn quad(mut self, i: usize, j: usize, c: GaussRational) -> Self {
        let _ = self.n;
        self.s.add_term(Monomial::var(i - 1).mul(&Monomial::var(j - 1)), c);
        self
    }
}

/// The displayed degree `≤ 2` part of every component of the final lift,
/// evaluated on the coefficients of `germ`.
pub fn displayed_expansion(germ: &InputGerm) -> Vec<(DisplayRow, TruncatedSeries<GaussRational>)> {
    let s = germ.structure();
    let n = s.n();
    let mu = s.mu();
    let nu = s.nu();
    let lam = s.lambda();
    let mu1 = mu[0];
    let l1 = lam[0].clone();
    let q = |x: &GaussRational, y: &GaussRational| x.div(y).expect("nonzero eigenvalue");
    let one = GaussRational::one();
    let inv1 = q(&one, &l1);
    let l1sq = l1.mul(&l1);
    let mut rows: Vec<Option<(DisplayRow, TruncatedSeries<GaussRational>)>> = vec![None; n];
    let equal = s.top_blocks_equal();

    // first block
    if equal {
        let l2 = lam[1].clone();
        let a2 = germ.a11(nu[1] + mu[1]);
        let b = Builder::new(n)
            .lin(1, q(&l1sq, &l2))
            .quad(1, 1, q(&l1sq, &l2.mul(&l2)).mul(&a2).neg())
            .quad(1, 2, q(&l1.mul(&GaussRational::from_int(2)), &l2));
        rows[0] = Some((DisplayRow::First, b.s));
    } else {
        let a = germ.a11(mu1);
        let b = Builder::new(n).lin(1, l1.clone()).quad(1, 1, a.neg()).quad(1, 2, GaussRational::from_int(2));
        rows[0] = Some((DisplayRow::First, b.s));
    }
    for j in 2..mu1 {
        let b = Builder::new(n).lin(j, one.clone()).quad(j, j, inv1.neg()).quad(j, j + 1, inv1.clone());
        rows[j - 1] = Some((DisplayRow::Middle, b.s));
    }
    let mut last = Builder::new(n).lin(mu1, one.clone()).quad(mu1, mu1, inv1.neg());
    if !equal {
        last = last.quad(1, mu1, q(&germ.a11(mu1), &l1));
    }
    rows[mu1 - 1] = Some((DisplayRow::Last, last.s));

    for l in 1..s.rho() {
        let ll = lam[l].clone();
        let ratio = q(&ll, &l1);
        let cross = q(&ll, &l1sq).neg();
        let end = nu[l] + mu[l];
        for j in nu[l] + 1..end {
            let t = j - nu[l] + 1;
            let b = Builder::new(n).lin(j, ratio.clone()).quad(t, j, cross.clone()).quad(t, j + 1, inv1.clone());
            rows[j - 1] = Some((DisplayRow::BlockInterior { block: l + 1 }, b.s));
        }
        let j = end;
        let (row, b) = if !equal {
            if mu[l] + 1 < mu1 {
                let b = Builder::new(n).lin(j, ratio.clone()).quad(mu[l] + 1, j, cross.clone());
                (DisplayRow::BlockEndShort { block: l + 1 }, b)
            } else {
                let b = Builder::new(n)
                    .lin(j, ratio.clone())
                    .quad(1, mu1, q(&germ.a11(j), &l1))
                    .quad(mu1, j, cross.clone());
                (DisplayRow::BlockEndAdjacent { block: l + 1 }, b)
            }
        } else if l == 1 {
            let b = Builder::new(n).lin(j, ratio.clone()).quad(1, j, q(&germ.a11(j), &l1));
            (DisplayRow::SecondBlockEnd, b)
        } else if mu[l] < mu1 {
            (DisplayRow::BlockEndBelow { block: l + 1 }, Builder::new(n).lin(j, ratio.clone()))
        } else {
            let b = Builder::new(n).lin(j, ratio.clone()).quad(1, nu[1] + mu[1], q(&germ.a11(j), &l1));
            (DisplayRow::BlockEndEqual { block: l + 1 }, b)
        };
        rows[j - 1] = Some((row, b.s));
    }
    rows.into_iter().map(|r| r.expect("every row assigned")).collect()
}

/// One coefficient where the computed lift and the display disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayMismatch {
    /// Component index, 1-based.
    pub j: usize,
    pub row: DisplayRow,
    pub exponents: Vec<u8>,
    pub displayed: GaussRational,
    pub computed: GaussRational,
}

/// Compares every degree-one and degree-two coefficient of the final lift
/// with [`displayed_expansion`].
pub fn compare_with_display(germ: &InputGerm, lifted: &LiftedMap) -> Vec<DisplayMismatch> {
    let n = germ.n();
    let mut out = Vec::new();
    for (j, (row, shown)) in displayed_expansion(germ).into_iter().enumerate() {
        let got = lifted.map.components[j].truncate(2);
        let mut monos: Vec<Monomial> = shown.terms().map(|(m, _)| *m).chain(got.terms().map(|(m, _)| *m)).collect();
        monos.sort();
        monos.dedup();
        for m in monos {
            if m.degree() == 0 {
                continue;
            }
            let (d, c) = (shown.coeff(&m), got.coeff(&m));
            if d != c {
                out.push(DisplayMismatch { j: j + 1, row, exponents: m.exps(n).to_vec(), displayed: d, computed: c });
            }
        }
    }
    out
}

/// Degree-zero check on the exceptional divisor at stage 1: restricted to
/// `w_1 = 0`, the lift must be the projective action of `dF_O` in the chart
/// `[1 : w_2 : … : w_n]`.
pub fn exceptional_action_consistent(lifted: &LiftedMap) -> Result<bool, LiftError> {
    if lifted.stage != 1 {
        return Err(LiftError::Blowup(BlowupError::StageOutOfRange { k: lifted.stage, max: 1 }));
    }
    let n = lifted.table.n();
    let cap = lifted.cap();
    let jm = lifted.structure.jordan_matrix();
    let v: Vec<TruncatedSeries<GaussRational>> =
        (0..n).map(|i| if i == 0 { TruncatedSeries::one(n, cap) } else { TruncatedSeries::var(n, cap, i) }).collect();
    let jv: Vec<TruncatedSeries<GaussRational>> = (0..n)
        .map(|i| {
            let mut acc = TruncatedSeries::zero(n, cap);
            for (k, vk) in v.iter().enumerate() {
                acc = acc.add(&vk.scale(&jm[(i, k)])).expect("same shape");
            }
            acc
        })
        .collect();
    let inv = jv[0].reciprocal()?;
    for i in 0..n {
        let mut restricted = TruncatedSeries::zero(n, cap);
        for (m, c) in lifted.map.components[i].terms().filter(|(m, _)| m.exp(0) == 0) {
            restricted.add_term(*m, c.clone());
        }
        let expected = if i == 0 { TruncatedSeries::zero(n, cap) } else { jv[i].mul(&inv)? };
        if restricted != expected {
            return Ok(false);
        }
    }
    Ok(true)
}

/// For a single block with `a^{μ_1}_{11} = 0 ≠ a^{μ_1−1}_{11}`, the linear
/// part is already diagonalizable at stage `μ_1 − 1`. Returns `None` when the
/// hypotheses do not hold.
pub fn early_diagonalization(germ: &InputGerm, cap: u32) -> Result<Option<LinearPartReport>, LiftError> {
    let s = germ.structure();
    let mu1 = s.mu1();
    if s.rho() != 1 || mu1 < 3 || !germ.a11(mu1).is_zero() || germ.a11(mu1 - 1).is_zero() {
        return Ok(None);
    }
    let l = lift(germ, mu1 - 1, cap)?;
    Ok(Some(lifted_linear_part(&l)))
}
