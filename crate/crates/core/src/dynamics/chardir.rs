//! Solving `P_2(v) = λ v`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hakim::hakim_matrix;
use super::{normalize_max, projective_distance, ChartQuadraticForm, DynamicsError};
use crate::linalg::Matrix;
use crate::partition::JordanStructure;
use crate::scalar::{GaussRational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact2d,
    Structured,
    Numeric,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact2d" => Ok(Mode::Exact2d),
            "structured" => Ok(Mode::Structured),
            "numeric" => Ok(Mode::Numeric),
            _ => Err(format!("unknown mode {s:?}, expected exact2d, structured or numeric")),
        }
    }
}

/// Exact representative and eigenvalue, when available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDirection {
    pub v: Vec<GaussRational>,
    pub lambda: GaussRational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharDirection {
    /// Representative with `‖v‖_∞ = 1`, the largest entry equal to 1.
    pub v: Vec<Complex64>,
    pub lambda: Complex64,
    pub exact: Option<ExactDirection>,
    pub degenerate: bool,
    pub allowable: bool,
    pub hakim_spectrum: Option<Vec<Complex64>>,
    /// `max_j |P_2(v)_j − λ v_j|` for the normalized representative.
    pub residual: f64,
}

const ZERO_TOL: f64 = 1e-10;

impl CharDirection {
    fn from_exact(q: &ChartQuadraticForm<GaussRational>, v: Vec<GaussRational>, divisor: &[usize]) -> Self {
        let pv = q.eval(&v);
        let p = v.iter().position(|x| !x.is_zero()).expect("nonzero direction");
        let lambda = pv[p].div(&v[p]).expect("nonzero entry");
        let residual_exact = pv.iter().zip(&v).all(|(a, b)| *a == lambda.mul(b));
        let allowable = divisor.iter().all(|&h| !v[h - 1].is_zero());
        let degenerate = lambda.is_zero();
        let hakim_spectrum = if degenerate { None } else { hakim_matrix(q, &v).ok().map(|h| h.spectrum()) };
        let c: Vec<Complex64> = v.iter().map(Scalar::to_c64).collect();
        let (vn, s) = normalize_max(&c);
        let mut d = CharDirection {
            v: vn,
            lambda: lambda.to_c64() * s,
            exact: Some(ExactDirection { v, lambda }),
            degenerate,
            allowable,
            hakim_spectrum,
            residual: 0.0,
        };
        d.residual = if residual_exact { 0.0 } else { residual(&q.to_c64(), &d.v, d.lambda) };
        d
    }

    fn from_numeric(q: &ChartQuadraticForm<Complex64>, v: &[Complex64], divisor: &[usize]) -> Self {
        let (vn, _) = normalize_max(v);
        let pv = q.eval(&vn);
        let p = super::argmax_modulus(&vn);
        let lambda = pv[p];
        let degenerate = lambda.norm() < 1e-8;
        let allowable = divisor.iter().all(|&h| vn[h - 1].norm() > ZERO_TOL);
        let hakim_spectrum = if degenerate { None } else { hakim_matrix(q, &vn).ok().map(|h| h.spectrum()) };
        let residual = residual(q, &vn, lambda);
        CharDirection { v: vn, lambda, exact: None, degenerate, allowable, hakim_spectrum, residual }
    }

    /// Whether every Hakim eigenvalue has real part at most `tol`.
    pub fn hakim_nonpositive(&self, tol: f64) -> Option<bool> {
        self.hakim_spectrum.as_ref().map(|s| s.iter().all(|z| z.re <= tol))
    }
}

fn residual(q: &ChartQuadraticForm<Complex64>, v: &[Complex64], lambda: Complex64) -> f64 {
    q.eval(v).iter().zip(v).map(|(p, x)| (p - lambda * x).norm()).fold(0.0, f64::max)
}

/// Characteristic directions of `q`. `divisor` lists the 1-based coordinates
/// that must be nonzero for a direction to be allowable.
pub fn characteristic_directions(
    q: &ChartQuadraticForm<GaussRational>,
    mode: Mode,
    divisor: &[usize],
) -> Result<Vec<CharDirection>, DynamicsError> {
    match mode {
        Mode::Exact2d => exact2d(q, divisor),
        Mode::Structured => structured(q, divisor).map(|d| vec![d]),
        Mode::Numeric => numeric(&q.to_c64(), divisor, NumericOptions::default()),
    }
}

/// Keeps the directions with `v_h ≠ 0` for every `h` in the last-stage
/// divisor `P'_{ℓ,1}` of `s`.
pub fn allowable_filter(dirs: &[CharDirection], s: &JordanStructure) -> Vec<CharDirection> {
    let divisor = s.divisor_indices(s.ell()).expect("last stage exists");
    dirs.iter()
        .filter(|d| match &d.exact {
            Some(e) => divisor.iter().all(|&h| !e.v[h - 1].is_zero()),
            None => divisor.iter().all(|&h| d.v[h - 1].norm() > ZERO_TOL),
        })
        .cloned()
        .collect()
}

/// `n = 2`: directions `(1, t)` solve `Q_2(1,t) − t Q_1(1,t) = 0`, and
/// `(0, 1)` is characteristic when `Q_1` has no `w_2²` term.
pub fn exact2d(q: &ChartQuadraticForm<GaussRational>, divisor: &[usize]) -> Result<Vec<CharDirection>, DynamicsError> {
    if q.n() != 2 {
        return Err(DynamicsError::Dimension { mode: "exact2d", need: "n = 2", n: q.n() });
    }
    let c = |j, h, k| q.coefficient(j, h, k);
    // Q_1(1,t) = a + b t + c t², Q_2(1,t) = d + e t + f t²
    let (a, b, cc) = (c(0, 0, 0), c(0, 0, 1), c(0, 1, 1));
    let (d, e, f) = (c(1, 0, 0), c(1, 0, 1), c(1, 1, 1));
    if !cc.is_zero() {
        return Err(DynamicsError::StructureViolation("w2² appears in the first component, the slope equation is cubic".into()));
    }
    // slope polynomial d + (e − a) t + (f − b) t²
    let p0 = d;
    let p1 = e.sub(&a);
    let p2 = f.sub(&b);
    let mut out = Vec::new();
    let mut numeric_roots: Vec<Complex64> = Vec::new();
    if p2.is_zero() {
        if p1.is_zero() {
            if p0.is_zero() {
                return Err(DynamicsError::Dicritical);
            }
        } else {
            let t = p0.neg().div(&p1).expect("nonzero");
            out.push(CharDirection::from_exact(q, vec![GaussRational::one(), t], divisor));
        }
    } else {
        let disc = p1.mul(&p1).sub(&GaussRational::from_int(4).mul(&p2).mul(&p0));
        let two_a = p2.add(&p2);
        match disc.sqrt() {
            Some(r) => {
                for s in [r.clone(), r.neg()] {
                    let t = p1.neg().add(&s).div(&two_a).expect("nonzero");
                    if out.iter().all(|d: &CharDirection| d.exact.as_ref().map(|e| &e.v[1]) != Some(&t)) {
                        out.push(CharDirection::from_exact(q, vec![GaussRational::one(), t], divisor));
                    }
                }
            }
            None => {
                let r = principal_sqrt(disc.to_c64());
                for s in [r, -r] {
                    numeric_roots.push((-p1.to_c64() + s) / two_a.to_c64());
                }
            }
        }
    }
    let qc = q.to_c64();
    for t in numeric_roots {
        out.push(CharDirection::from_numeric(&qc, &[Complex64::new(1.0, 0.0), t], divisor));
    }
    out.push(CharDirection::from_exact(q, vec![GaussRational::zero(), GaussRational::one()], divisor));
    Ok(sort_directions(out))
}

/// Principal square root: non-negative real part, and positive imaginary
/// part on the negative real axis.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.re == 0.0 && r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// The triangular solve for the unique allowable non-degenerate direction of
/// a diagonalized lift, normalized to `λ = 1`.
///
/// Divisor rows must be divisible by their own coordinate; dividing gives a
/// linear system. The remaining rows are then solved one coordinate at a
/// time, each row being affine in its own coordinate once the others are known.
pub fn structured(q: &ChartQuadraticForm<GaussRational>, divisor: &[usize]) -> Result<CharDirection, DynamicsError> {
    let n = q.n();
    let d0: Vec<usize> = divisor.iter().map(|h| h - 1).collect();
    let lambda = GaussRational::one();
    let mut rows = Vec::new();
    for &j in &d0 {
        let a = &q.components[j];
        for h in 0..n {
            for k in 0..n {
                if h != j && k != j && !a[(h, k)].is_zero() {
                    return Err(DynamicsError::StructureViolation(format!("row {} is not divisible by w{}", j + 1, j + 1)));
                }
            }
        }
        let coeffs: Vec<GaussRational> = (0..n).map(|k| q.coefficient(j, j, k)).collect();
        if let Some(k) = (0..n).find(|k| !coeffs[*k].is_zero() && !d0.contains(k)) {
            return Err(DynamicsError::StructureViolation(format!("row {} involves w{} off the divisor", j + 1, k + 1)));
        }
        rows.push(d0.iter().map(|&k| coeffs[k].clone()).collect::<Vec<_>>());
    }
    let m = Matrix::from_rows(rows);
    let rhs = vec![lambda.clone(); d0.len()];
    if m.rank() < d0.len() {
        // either no solution or a family; decide via the augmented rank
        let aug = Matrix::from_fn(d0.len(), d0.len() + 1, |i, k| if k < d0.len() { m[(i, k)].clone() } else { lambda.clone() });
        if aug.rank() > m.rank() {
            return Err(DynamicsError::NoAllowableDirection);
        }
        return Err(DynamicsError::StructureViolation("divisor system does not determine v".into()));
    }
    let sol = m.solve(&rhs).map_err(|_| DynamicsError::NoAllowableDirection)?;
    if sol.iter().any(Scalar::is_zero) {
        return Err(DynamicsError::NoAllowableDirection);
    }
    let mut v: Vec<Option<GaussRational>> = vec![None; n];
    for (&j, x) in d0.iter().zip(sol) {
        v[j] = Some(x);
    }
    loop {
        let mut progress = false;
        let mut pending = false;
        for j in 0..n {
            if v[j].is_some() {
                continue;
            }
            pending = true;
            let a = &q.components[j];
            if !a[(j, j)].is_zero() {
                continue;
            }
            let involved_known =
                (0..n).all(|h| h == j || v[h].is_some() || (0..n).all(|k| a[(h, k)].is_zero()));
            if !involved_known {
                continue;
            }
            let val = |h: usize| v[h].clone().unwrap_or_else(GaussRational::zero);
            let mut b = GaussRational::zero();
            let mut c = GaussRational::zero();
            for h in 0..n {
                for k in 0..n {
                    let x = &a[(h, k)];
                    if x.is_zero() {
                        continue;
                    }
                    if h == j {
                        b = b.add(&x.mul(&val(k)));
                    } else if k == j {
                        b = b.add(&x.mul(&val(h)));
                    } else {
                        c = c.add(&x.mul(&val(h)).mul(&val(k)));
                    }
                }
            }
            // (b − λ) v_j + c = 0
            let den = lambda.sub(&b);
            if den.is_zero() {
                if c.is_zero() {
                    return Err(DynamicsError::StructureViolation(format!("w{} is not determined", j + 1)));
                }
                return Err(DynamicsError::NoAllowableDirection);
            }
            v[j] = Some(c.div(&den).expect("nonzero"));
            progress = true;
        }
        if !pending {
            break;
        }
        if !progress {
            return Err(DynamicsError::StructureViolation("rows off the divisor are not triangular".into()));
        }
    }
    let v: Vec<GaussRational> = v.into_iter().map(|x| x.expect("solved")).collect();
    let d = CharDirection::from_exact(q, v, divisor);
    if d.residual != 0.0 {
        return Err(DynamicsError::StructureViolation("solution does not satisfy P(v) = λv".into()));
    }
    Ok(d)
}

/// Settings for the Newton multistart.
#[derive(Debug, Clone, Copy)]
pub struct NumericOptions {
    pub starts_per_chart: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub dedup: f64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions { starts_per_chart: 96, seed: 0x5eed, max_iter: 80, dedup: 1e-6 }
    }
}

/// Newton's method on `P(x) − λ x = 0` in each affine chart `x_p = 1`, from a
/// deterministic set of starts; solutions are merged up to projective
/// distance `dedup` and sorted.
pub fn numeric(q: &ChartQuadraticForm<Complex64>, divisor: &[usize], opts: NumericOptions) -> Result<Vec<CharDirection>, DynamicsError> {
    let n = q.n();
    if !(2..=6).contains(&n) {
        return Err(DynamicsError::Dimension { mode: "numeric", need: "2 ≤ n ≤ 6", n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = Vec::new();
    for p in 0..n {
        for _ in 0..opts.starts_per_chart {
            let x: Vec<Complex64> = (0..n)
                .map(|i| if i == p { Complex64::new(1.0, 0.0) } else { Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)) })
                .collect();
            starts.push((p, x));
        }
    }
    let found: Vec<Vec<Complex64>> = starts.par_iter().filter_map(|(p, x)| newton(q, *p, x.clone(), opts.max_iter)).collect();
    let mut uniq: Vec<Vec<Complex64>> = Vec::new();
    for v in found {
        if uniq.iter().all(|u| projective_distance(u, &v) > opts.dedup) {
            uniq.push(v);
        }
    }
    let dirs = uniq.iter().map(|v| CharDirection::from_numeric(q, v, divisor)).collect();
    Ok(sort_directions(dirs))
}

fn newton(q: &ChartQuadraticForm<Complex64>, p: usize, mut x: Vec<Complex64>, max_iter: usize) -> Option<Vec<Complex64>> {
    let n = q.n();
    let mut lambda = q.eval(&x)[p];
    for _ in 0..max_iter {
        let px = q.eval(&x);
        let f: Vec<Complex64> = (0..n).map(|i| px[i] - lambda * x[i]).collect();
        let norm = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = x.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if norm < 1e-14 * scale * scale {
            return (x.iter().all(|z| z.norm() < 10.0)).then_some(x);
        }
        // unknowns: x_i (i ≠ p) and λ
        let d = q.differential(&x);
        let jac = DMatrix::from_fn(n, n, |i, c| {
            if c == p {
                -x[i]
            } else {
                d[(i, c)] - if i == c { lambda } else { Complex64::new(0.0, 0.0) }
            }
        });
        let rhs = DVector::from_iterator(n, f.iter().map(|z| -z));
        let step = jac.lu().solve(&rhs)?;
        for c in 0..n {
            if c == p {
                lambda += step[c];
            } else {
                x[c] += step[c];
            }
        }
        if x.iter().any(|z| !z.is_finite() || z.norm() > 1e6) {
            return None;
        }
    }
    None
}

fn sort_directions(mut dirs: Vec<CharDirection>) -> Vec<CharDirection> {
    let key = |d: &CharDirection| {
        let mut k = vec![if d.allowable { 0.0 } else { 1.0 }, if d.degenerate { 1.0 } else { 0.0 }];
        for z in &d.v {
            k.push((z.re * 1e8).round());
            k.push((z.im * 1e8).round());
        }
        k
    };
    dirs.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal));
    dirs
}
