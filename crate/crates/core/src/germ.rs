//! Input germs: polynomial maps whose linear part is a Jordan matrix.

use rand::Rng;

use crate::partition::{JordanStructure, PartitionError};
use crate::scalar::{GaussRational, Scalar};
use crate::series::{Monomial, PolyMap, TruncatedSeries};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GermError {
    #[error(transparent)]
    Structure(#[from] PartitionError),
    #[error("map has {got} components in {nvars} variables, structure needs {n}")]
    Dimension { n: usize, got: usize, nvars: usize },
    #[error("component {j} has a nonzero constant term")]
    NonzeroConstant { j: usize },
    #[error("linear coefficient of z{col} in f{row} is {found}, Jordan form requires {expected}")]
    JordanMismatch { row: usize, col: usize, expected: GaussRational, found: GaussRational },
}

/// A germ `F` with `dF_O` in Jordan form, treated as the polynomial map it
/// stores (a jet is iterated as if it were the whole map).
#[derive(Debug, Clone, PartialEq)]
pub struct InputGerm {
    structure: JordanStructure,
    map: PolyMap<GaussRational>,
}

impl InputGerm {
    pub fn new(structure: JordanStructure, map: PolyMap<GaussRational>) -> Result<Self, GermError> {
        let n = structure.n();
        if map.dim() != n || map.nvars() != n {
            return Err(GermError::Dimension { n, got: map.dim(), nvars: map.nvars() });
        }
        for (j, c) in map.components.iter().enumerate() {
            if !c.constant_term().is_zero() {
                return Err(GermError::NonzeroConstant { j: j + 1 });
            }
        }
        let lin = map.linear_part();
        let jordan = structure.jordan_matrix();
        for (i, row) in lin.iter().enumerate() {
            for (j, found) in row.iter().enumerate() {
                let expected = &jordan[(i, j)];
                if found != expected {
                    return Err(GermError::JordanMismatch {
                        row: i + 1,
                        col: j + 1,
                        expected: expected.clone(),
                        found: found.clone(),
                    });
                }
            }
        }
        let cap = map.components.iter().filter_map(|c| c.max_degree()).max().unwrap_or(1).max(2);
        Ok(InputGerm { structure, map: map.polynomial_with_cap(cap) })
    }

    /// Jordan linear part plus the given higher-order terms `(j, exponents, coeff)`
    /// with 1-based component `j`.
    pub fn with_terms(structure: JordanStructure, terms: &[(usize, Vec<u8>, GaussRational)]) -> Result<Self, GermError> {
        let n = structure.n();
        let degree = terms.iter().map(|(_, e, _)| e.iter().map(|&x| x as u32).sum::<u32>()).max().unwrap_or(2).max(2);
        let mut comps = jordan_components(&structure, degree);
        for (j, e, c) in terms {
            if *j == 0 || *j > n || e.len() != n {
                return Err(GermError::Dimension { n, got: *j, nvars: e.len() });
            }
            comps[j - 1].add_term(Monomial::new(e), c.clone());
        }
        Self::new(structure, PolyMap::new(comps))
    }

    /// `(z1 + z2, z2 + z1²)`.
    pub fn fatou() -> Self {
        let s = JordanStructure::unipotent_block(2).expect("valid structure");
        Self::with_terms(s, &[(2, vec![2, 0], GaussRational::one())]).expect("valid germ")
    }

    pub fn structure(&self) -> &JordanStructure {
        &self.structure
    }

    pub fn map(&self) -> &PolyMap<GaussRational> {
        &self.map
    }

    pub fn n(&self) -> usize {
        self.structure.n()
    }

    /// Highest degree present (at least 2).
    pub fn degree(&self) -> u32 {
        self.map.cap()
    }

    /// Coefficient of `z^exps` in `f_j` (1-based `j`).
    pub fn coefficient(&self, j: usize, exps: &[u8]) -> GaussRational {
        self.map.components[j - 1].coeff_of(exps)
    }

    /// `a^j_{11}`, the coefficient of `z1²` in `f_j`.
    pub fn a11(&self, j: usize) -> GaussRational {
        let mut e = vec![0u8; self.n()];
        e[0] = 2;
        self.coefficient(j, &e)
    }

    /// `a^{μ_1}_{11} ≠ 0`.
    pub fn is_generic(&self) -> bool {
        !self.a11(self.structure.mu1()).is_zero()
    }

    /// Nonlinear terms `(j, exponents, coeff)` in graded order.
    pub fn nonlinear_terms(&self) -> Vec<(usize, Vec<u8>, GaussRational)> {
        let n = self.n();
        let mut out = Vec::new();
        for (j, c) in self.map.components.iter().enumerate() {
            for (m, v) in c.terms() {
                if m.degree() >= 2 {
                    out.push((j + 1, m.exps(n).to_vec(), v.clone()));
                }
            }
        }
        out
    }

    /// Evaluates `F` at a point in any coefficient field.
    pub fn eval<C: Scalar>(&self, z: &[C]) -> Vec<C> {
        self.map.map_coeffs(C::from_gauss).eval(z)
    }
}

fn jordan_components(s: &JordanStructure, cap: u32) -> Vec<TruncatedSeries<GaussRational>> {
    let n = s.n();
    let j = s.jordan_matrix();
    (0..n)
        .map(|i| {
            let mut c = TruncatedSeries::zero(n, cap);
            for k in 0..n {
                c.add_term(Monomial::var(k), j[(i, k)].clone());
            }
            c
        })
        .collect()
}

/// Small random rational `p/q` with `|p| ≤ 4`, `1 ≤ q ≤ 3`; zero is excluded
/// when `nonzero` is set.
pub fn random_rational<R: Rng>(rng: &mut R, nonzero: bool) -> GaussRational {
    loop {
        let p: i64 = rng.gen_range(-4..=4);
        let q: i64 = rng.gen_range(1..=3);
        if p != 0 || !nonzero {
            return GaussRational::ratio(p, q);
        }
    }
}

/// Random germ with structure `s`: every monomial of degree `2..=degree` in
/// every component gets a random rational coefficient with probability `density`.
pub fn random_germ<R: Rng>(rng: &mut R, s: &JordanStructure, degree: u32, density: f64) -> InputGerm {
    let n = s.n();
    let mut terms = Vec::new();
    for j in 1..=n {
        for d in 2..=degree {
            for e in exponents_of_degree(n, d) {
                if rng.gen_bool(density) {
                    terms.push((j, e, random_rational(rng, true)));
                }
            }
        }
    }
    InputGerm::with_terms(s.clone(), &terms).expect("random germ respects the structure")
}

/// Random partition of `n` with `μ_1 ≥ 2` and random nonzero rational eigenvalues.
pub fn random_structure<R: Rng>(rng: &mut R, n: usize) -> JordanStructure {
    assert!(n >= 2);
    let mut mu = Vec::new();
    let mut left = n;
    let first = rng.gen_range(2..=n);
    mu.push(first);
    left -= first;
    while left > 0 {
        let m = rng.gen_range(1..=left.min(*mu.last().unwrap()));
        mu.push(m);
        left -= m;
    }
    let lambda = mu
        .iter()
        .map(|_| {
            let re = random_rational(rng, true);
            if rng.gen_bool(0.25) {
                re.add(&random_rational(rng, false).mul(&GaussRational::i()))
            } else {
                re
            }
        })
        .collect();
    JordanStructure::new(mu, lambda).expect("valid random structure")
}

/// All exponent vectors of total degree `d` in `n` variables, in graded order.
pub fn exponents_of_degree(n: usize, d: u32) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; n];
    fn rec(i: usize, left: u32, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        let n = cur.len();
        if i == n - 1 {
            cur[i] = left as u8;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e as u8;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, d, &mut cur, &mut out);
    out
}
