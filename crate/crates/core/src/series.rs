//! Truncated multivariate power series.
//!
//! A [`TruncatedSeries`] stores every coefficient of total degree at most its
//! cap `D`. Operations between series with different variable counts or caps
//! are rejected instead of truncating silently; use [`TruncatedSeries::truncate`]
//! or [`TruncatedSeries::polynomial_with_cap`] to align them first.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::Scalar;

/// Largest supported number of variables.
pub const MAX_VARS: usize = 16;

/// Exponent vector of a monomial in at most [`MAX_VARS`] variables.
///
/// Ordered by total degree first; within a degree, higher powers of
/// lower-indexed variables come first (`x1^2 < x1 x2 < x2^2`).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: [u8; MAX_VARS],
}

impl Monomial {
    pub const ONE: Monomial = Monomial { exps: [0; MAX_VARS] };

    pub fn new(exps: &[u8]) -> Self {
        assert!(exps.len() <= MAX_VARS, "at most {MAX_VARS} variables");
        let mut m = Monomial::ONE;
        m.exps[..exps.len()].copy_from_slice(exps);
        m
    }

    /// The monomial `x_i` (0-based).
    pub fn var(i: usize) -> Self {
        let mut m = Monomial::ONE;
        m.exps[i] = 1;
        m
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&e| e as u32).sum()
    }

    pub fn exp(&self, i: usize) -> u8 {
        self.exps[i]
    }

    pub fn exps(&self, nvars: usize) -> &[u8] {
        &self.exps[..nvars]
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = *self;
        for (a, b) in m.exps.iter_mut().zip(other.exps.iter()) {
            *a = a.checked_add(*b).expect("monomial exponent overflow");
        }
        m
    }

    /// `self / other` when `other` divides `self`.
    pub fn checked_div(&self, other: &Monomial) -> Option<Monomial> {
        let mut m = *self;
        for (a, b) in m.exps.iter_mut().zip(other.exps.iter()) {
            *a = a.checked_sub(*b)?;
        }
        Some(m)
    }

    pub fn pow(&self, e: u8) -> Monomial {
        let mut m = *self;
        for a in m.exps.iter_mut() {
            *a = a.checked_mul(e).expect("monomial exponent overflow");
        }
        m
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(other.exps.iter()).all(|(a, b)| a <= b)
    }

    fn render(&self, nvars: usize, var: &str) -> String {
        let mut out = Vec::new();
        for i in 0..nvars {
            match self.exps[i] {
                0 => {}
                1 => out.push(format!("{var}{}", i + 1)),
                e => out.push(format!("{var}{}^{e}", i + 1)),
            }
        }
        out.join("*")
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.exps.iter().rposition(|&e| e != 0).map_or(0, |p| p + 1);
        write!(f, "{:?}", &self.exps[..last])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeriesError {
    #[error("operands have {left} and {right} variables")]
    VariableMismatch { left: usize, right: usize },
    #[error("operands have degree caps {left} and {right}")]
    CapMismatch { left: u32, right: u32 },
    #[error("constant term is zero, series is not a unit")]
    NotAUnit,
    #[error("term {term:?} is not divisible by {divisor:?}")]
    DivisionObstruction { term: Vec<u8>, divisor: Vec<u8> },
    #[error("inner series must have zero constant term")]
    NonzeroConstant,
    #[error("expected {expected} inner series, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("too many variables: {0}")]
    TooManyVariables(usize),
}

/// A power series in `nvars` variables with all coefficients of degree `<= cap`.
#[derive(Clone, PartialEq)]
pub struct TruncatedSeries<C> {
    nvars: usize,
    cap: u32,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Scalar> TruncatedSeries<C> {
    pub fn zero(nvars: usize, cap: u32) -> Self {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} variables");
        TruncatedSeries { nvars, cap, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, cap: u32, c: C) -> Self {
        Self::monomial(nvars, cap, Monomial::ONE, c)
    }

    pub fn one(nvars: usize, cap: u32) -> Self {
        Self::constant(nvars, cap, C::one())
    }

    /// The coordinate function `x_i` (0-based).
    pub fn var(nvars: usize, cap: u32, i: usize) -> Self {
        assert!(i < nvars);
        Self::monomial(nvars, cap, Monomial::var(i), C::one())
    }

    pub fn monomial(nvars: usize, cap: u32, m: Monomial, c: C) -> Self {
        let mut s = Self::zero(nvars, cap);
        s.add_term(m, c);
        s
    }

    /// Builds a series from `(exponents, coefficient)` pairs, dropping terms above the cap.
    pub fn from_terms<'a, I>(nvars: usize, cap: u32, terms: I) -> Self
    where
        I: IntoIterator<Item = (&'a [u8], C)>,
    {
        let mut s = Self::zero(nvars, cap);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            s.add_term(Monomial::new(e), c);
        }
        s
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Nonzero terms in graded order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn coeff_of(&self, exps: &[u8]) -> C {
        self.coeff(&Monomial::new(exps))
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&Monomial::ONE)
    }

    /// Lowest degree carrying a nonzero coefficient.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().next().map(Monomial::degree)
    }

    /// Highest degree carrying a nonzero coefficient.
    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    /// Adds `c·m` in place, ignoring terms above the cap.
    pub fn add_term(&mut self, m: Monomial, c: C) {
        if m.degree() > self.cap || c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                let s = v.add(&c);
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn check(&self, other: &Self) -> Result<(), SeriesError> {
        if self.nvars != other.nvars {
            return Err(SeriesError::VariableMismatch { left: self.nvars, right: other.nvars });
        }
        if self.cap != other.cap {
            return Err(SeriesError::CapMismatch { left: self.cap, right: other.cap });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.neg());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        self.scale(&C::one().neg())
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(self.nvars, self.cap);
        if c.is_zero() {
            return out;
        }
        for (m, v) in &self.terms {
            out.terms.insert(*m, v.mul(c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut acc: BTreeMap<Monomial, C> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            let da = ma.degree();
            for (mb, cb) in &other.terms {
                if da + mb.degree() > self.cap {
                    break;
                }
                let m = ma.mul(mb);
                let p = ca.mul(cb);
                match acc.get_mut(&m) {
                    Some(v) => *v = v.add(&p),
                    None => {
                        acc.insert(m, p);
                    }
                }
            }
        }
        acc.retain(|_, v| !v.is_zero());
        TruncatedSeries { nvars: self.nvars, cap: self.cap, terms: acc }
    }

    /// Multiplies by a single term `c·m`.
    pub fn mul_monomial(&self, m: &Monomial, c: &C) -> Self {
        let mut out = Self::zero(self.nvars, self.cap);
        for (mm, v) in &self.terms {
            let p = mm.mul(m);
            if p.degree() <= self.cap {
                out.add_term(p, v.mul(c));
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.nvars, self.cap);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        acc
    }

    /// Multiplicative inverse of a series with nonzero constant term.
    pub fn reciprocal(&self) -> Result<Self, SeriesError> {
        let c0 = self.constant_term();
        let inv0 = c0.recip().ok_or(SeriesError::NotAUnit)?;
        // u = c0 (1 + r) with r of positive order
        let mut r = self.scale(&inv0);
        r.terms.remove(&Monomial::ONE);
        let minus_r = r.neg();
        let mut acc = Self::one(self.nvars, self.cap);
        let mut power = Self::one(self.nvars, self.cap);
        for _ in 0..self.cap {
            power = power.mul_unchecked(&minus_r);
            if power.is_zero() {
                break;
            }
            for (m, c) in &power.terms {
                acc.add_term(*m, c.clone());
            }
        }
        Ok(acc.scale(&inv0))
    }

    /// Drops every term above `cap`. Raising the cap is not allowed here.
    pub fn truncate(&self, cap: u32) -> Self {
        assert!(cap <= self.cap, "truncate cannot raise the cap ({} -> {cap})", self.cap);
        let terms = self.terms.iter().filter(|(m, _)| m.degree() <= cap).map(|(m, c)| (*m, c.clone())).collect();
        TruncatedSeries { nvars: self.nvars, cap, terms }
    }

    /// Reinterprets the stored terms as an exact polynomial with a new cap.
    ///
    /// Only valid when the series is known to be a polynomial, for instance an
    /// input germ; terms above a lowered cap are dropped.
    pub fn polynomial_with_cap(&self, cap: u32) -> Self {
        let terms = self.terms.iter().filter(|(m, _)| m.degree() <= cap).map(|(m, c)| (*m, c.clone())).collect();
        TruncatedSeries { nvars: self.nvars, cap, terms }
    }

    /// Homogeneous component of degree `d`.
    pub fn homogeneous(&self, d: u32) -> Self {
        let terms = self.terms.iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (*m, c.clone())).collect();
        TruncatedSeries { nvars: self.nvars, cap: self.cap, terms }
    }

    /// Divides every term by `w^m`, lowering the cap by `|m|`.
    pub fn monomial_divide(&self, m: &Monomial) -> Result<Self, SeriesError> {
        let d = m.degree();
        if d > self.cap {
            return Err(SeriesError::CapMismatch { left: self.cap, right: d });
        }
        let mut out = Self::zero(self.nvars, self.cap - d);
        for (mm, c) in &self.terms {
            let q = mm.checked_div(m).ok_or_else(|| SeriesError::DivisionObstruction {
                term: mm.exps(self.nvars).to_vec(),
                divisor: m.exps(self.nvars).to_vec(),
            })?;
            out.terms.insert(q, c.clone());
        }
        Ok(out)
    }

    /// Partial derivative in variable `i`; the cap drops by one.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars, self.cap.saturating_sub(1));
        for (m, c) in &self.terms {
            let e = m.exp(i);
            if e == 0 {
                continue;
            }
            let mut q = *m;
            q.exps[i] -= 1;
            out.add_term(q, c.mul(&C::from_i64(e as i64)));
        }
        out
    }

    /// Evaluates the truncation as a polynomial at `point`.
    pub fn eval(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.nvars);
        let maxe = self.terms.keys().map(|m| m.exps.iter().copied().max().unwrap_or(0)).max().unwrap_or(0);
        let powers: Vec<Vec<C>> = point
            .iter()
            .map(|x| {
                let mut v = Vec::with_capacity(maxe as usize + 1);
                v.push(C::one());
                for k in 1..=maxe as usize {
                    let next = v[k - 1].mul(x);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, p) in powers.iter().enumerate() {
                let e = m.exps[i];
                if e > 0 {
                    t = t.mul(&p[e as usize]);
                }
            }
            acc = acc.add(&t);
        }
        acc
    }

    /// Substitutes `inner` for the variables: `self(inner_1, ..., inner_n)`.
    ///
    /// The result lives in the variables of `inner` with the common cap of the
    /// inner series, which must not exceed `self.cap`.
    pub fn compose(&self, inner: &[TruncatedSeries<C>]) -> Result<Self, SeriesError> {
        if inner.len() != self.nvars {
            return Err(SeriesError::ArityMismatch { expected: self.nvars, got: inner.len() });
        }
        let Some(first) = inner.first() else {
            return Ok(self.clone());
        };
        let (nv, cap) = (first.nvars, first.cap);
        for s in inner {
            if s.nvars != nv {
                return Err(SeriesError::VariableMismatch { left: nv, right: s.nvars });
            }
            if s.cap != cap {
                return Err(SeriesError::CapMismatch { left: cap, right: s.cap });
            }
            if !s.constant_term().is_zero() {
                return Err(SeriesError::NonzeroConstant);
            }
        }
        if self.cap < cap {
            return Err(SeriesError::CapMismatch { left: self.cap, right: cap });
        }
        if inner.iter().all(|s| s.len() <= 1) {
            return Ok(self.compose_monomials(inner, nv, cap));
        }
        let orders: Vec<u32> = inner.iter().map(|s| s.order().unwrap_or(u32::MAX / 64)).collect();
        let mut cache: Vec<Vec<TruncatedSeries<C>>> = inner.iter().map(|s| vec![Self::one(nv, cap), s.clone()]).collect();
        let mut out = Self::zero(nv, cap);
        for (m, c) in &self.terms {
            let low: u64 = (0..self.nvars).map(|i| m.exps[i] as u64 * orders[i] as u64).sum();
            if low > cap as u64 {
                continue;
            }
            let mut t = Self::constant(nv, cap, c.clone());
            for i in 0..self.nvars {
                let e = m.exps[i] as usize;
                if e == 0 {
                    continue;
                }
                while cache[i].len() <= e {
                    let next = cache[i].last().unwrap().mul_unchecked(&inner[i]);
                    cache[i].push(next);
                }
                t = t.mul_unchecked(&cache[i][e]);
            }
            for (mm, cc) in t.terms {
                out.add_term(mm, cc);
            }
        }
        Ok(out)
    }

    fn compose_monomials(&self, inner: &[TruncatedSeries<C>], nv: usize, cap: u32) -> Self {
        let parts: Vec<Option<(Monomial, C)>> =
            inner.iter().map(|s| s.terms.iter().next().map(|(m, c)| (*m, c.clone()))).collect();
        let mut out = Self::zero(nv, cap);
        'terms: for (m, c) in &self.terms {
            let mut mono = Monomial::ONE;
            let mut coeff = c.clone();
            for (i, part) in parts.iter().enumerate() {
                let e = m.exps[i];
                if e == 0 {
                    continue;
                }
                let Some((pm, pc)) = part else {
                    continue 'terms;
                };
                let d = mono.degree() as u64 + pm.degree() as u64 * e as u64;
                if d > cap as u64 {
                    continue 'terms;
                }
                mono = mono.mul(&pm.pow(e));
                coeff = coeff.mul(&pc.pow(e as u32));
            }
            out.add_term(mono, coeff);
        }
        out
    }

    /// Maps coefficients into another field.
    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D) -> TruncatedSeries<D> {
        let mut out = TruncatedSeries::zero(self.nvars, self.cap);
        for (m, c) in &self.terms {
            out.add_term(*m, f(c));
        }
        out
    }

    /// Human readable rendering in variables `{var}1, {var}2, ...`.
    pub fn render(&self, var: &str) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mono = m.render(self.nvars, var);
                if mono.is_empty() {
                    format!("({c})")
                } else {
                    format!("({c})*{mono}")
                }
            })
            .collect();
        parts.join(" + ")
    }
}

impl<C: Scalar> fmt::Debug for TruncatedSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O({})", self.render("x"), self.cap + 1)
    }
}

/// A tuple of series sharing variables and cap, read as a map `C^n -> C^m`.
#[derive(Clone, PartialEq)]
pub struct PolyMap<C> {
    pub components: Vec<TruncatedSeries<C>>,
}

impl<C: Scalar> fmt::Debug for PolyMap<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.components.iter()).finish()
    }
}

impl<C: Scalar> PolyMap<C> {
    pub fn new(components: Vec<TruncatedSeries<C>>) -> Self {
        if let Some(f) = components.first() {
            assert!(components.iter().all(|c| c.nvars() == f.nvars() && c.cap() == f.cap()));
        }
        PolyMap { components }
    }

    pub fn identity(n: usize, cap: u32) -> Self {
        PolyMap { components: (0..n).map(|i| TruncatedSeries::var(n, cap, i)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn nvars(&self) -> usize {
        self.components.first().map_or(0, |c| c.nvars())
    }

    pub fn cap(&self) -> u32 {
        self.components.first().map_or(0, |c| c.cap())
    }

    pub fn truncate(&self, cap: u32) -> Self {
        PolyMap { components: self.components.iter().map(|c| c.truncate(cap)).collect() }
    }

    pub fn polynomial_with_cap(&self, cap: u32) -> Self {
        PolyMap { components: self.components.iter().map(|c| c.polynomial_with_cap(cap)).collect() }
    }

    pub fn homogeneous(&self, d: u32) -> Self {
        PolyMap { components: self.components.iter().map(|c| c.homogeneous(d)).collect() }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &PolyMap<C>) -> Result<Self, SeriesError> {
        let comps = self.components.iter().map(|c| c.compose(&inner.components)).collect::<Result<_, _>>()?;
        Ok(PolyMap { components: comps })
    }

    pub fn sub(&self, other: &PolyMap<C>) -> Result<Self, SeriesError> {
        let comps = self.components.iter().zip(&other.components).map(|(a, b)| a.sub(b)).collect::<Result<_, _>>()?;
        Ok(PolyMap { components: comps })
    }

    pub fn eval(&self, point: &[C]) -> Vec<C> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    /// Jacobian of the polynomial truncation, `jac[i][j] = ∂_j f_i`.
    pub fn jacobian(&self) -> Vec<Vec<TruncatedSeries<C>>> {
        self.components.iter().map(|c| (0..c.nvars()).map(|j| c.derivative(j)).collect()).collect()
    }

    /// Coefficient matrix of the degree-one part.
    pub fn linear_part(&self) -> Vec<Vec<C>> {
        let n = self.nvars();
        self.components.iter().map(|c| (0..n).map(|j| c.coeff(&Monomial::var(j))).collect()).collect()
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D + Copy) -> PolyMap<D> {
        PolyMap { components: self.components.iter().map(|c| c.map_coeffs(f)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }
}
