//! High-precision orbits and power-law fits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::classify::expected_asymptotics;
use super::DynamicsError;
use crate::germ::InputGerm;
use crate::scalar::{BigComplex, GaussRational, Scalar};
use crate::linalg::Matrix;
use crate::series::{PolyMap, TruncatedSeries};

/// Default escape radius.
pub const DIVERGENCE_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitTrace {
    pub points: Vec<Vec<BigComplex>>,
    pub precision: usize,
    /// Index `k` of the first point; asymptotic fits use `k = start + i`.
    pub start: usize,
    /// Set when some iterate left the ball of radius `R` (the trace stops there).
    pub diverged: bool,
    /// Per point: some coordinate is exactly zero.
    pub zero_flags: Vec<bool>,
}

impl OrbitTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_c64(&self) -> Vec<Vec<Complex64>> {
        self.points.iter().map(|p| p.iter().map(Scalar::to_c64).collect()).collect()
    }

    /// Index of sample `i`.
    pub fn k(&self, i: usize) -> usize {
        self.start + i
    }
}

fn max_modulus(z: &[Complex64]) -> f64 {
    z.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Iterates the polynomial map of `germ` `steps` times from `z0` at
/// `precision` bits. `start` is the index attached to `z0`.
pub fn orbit_iterate(germ: &InputGerm, z0: &[BigComplex], steps: usize, precision: usize, start: usize) -> OrbitTrace {
    let map: PolyMap<BigComplex> = germ.map().map_coeffs(|q: &GaussRational| BigComplex::from_gauss_prec(q, precision));
    let mut z: Vec<BigComplex> = z0.iter().map(|x| x.with_precision(precision)).collect();
    let mut points = Vec::with_capacity(steps + 1);
    let mut zero_flags = Vec::with_capacity(steps + 1);
    let mut diverged = false;
    for i in 0..=steps {
        zero_flags.push(z.iter().any(Scalar::is_zero));
        points.push(z.clone());
        if i == steps {
            break;
        }
        let next = map.eval(&z);
        let c: Vec<Complex64> = next.iter().map(Scalar::to_c64).collect();
        if c.iter().any(|x| !x.is_finite()) || max_modulus(&c) > DIVERGENCE_RADIUS {
            diverged = true;
            break;
        }
        z = next;
    }
    OrbitTrace { points, precision, start, diverged, zero_flags }
}

/// The predicted profile `z_j = c_j / k0^{m_j}` of a generic germ; rows with
/// no known constant are seeded with 0.
pub fn profile_seed(germ: &InputGerm, k0: usize, precision: usize) -> Result<Vec<BigComplex>, DynamicsError> {
    let rows = expected_asymptotics(germ)?;
    let k = GaussRational::from_int(k0 as i64);
    Ok(rows
        .iter()
        .map(|r| {
            let c = r.constant.clone().or_else(|| r.derived_constant.clone()).unwrap_or_else(GaussRational::zero);
            let v = c.div(&k.pow(r.exponent)).expect("k0 > 0");
            BigComplex::from_gauss_prec(&v, precision)
        })
        .collect())
}

/// `F^{-1}` near the origin by the fixed point `z = J^{-1}(w − N(z))`, where
/// `N` collects the terms of degree at least two.
pub struct InverseMap {
    jinv: Matrix<BigComplex>,
    nonlinear: PolyMap<BigComplex>,
    precision: usize,
}

impl InverseMap {
    pub fn new(germ: &InputGerm, precision: usize) -> Self {
        let to_big = |q: &GaussRational| BigComplex::from_gauss_prec(q, precision);
        let jinv = germ.structure().jordan_matrix().inverse().expect("Jordan matrices are invertible").map(to_big);
        let n = germ.n();
        let comps = germ
            .map()
            .components
            .iter()
            .map(|c| {
                let mut s = TruncatedSeries::zero(n, c.cap());
                for (m, v) in c.terms().filter(|(m, _)| m.degree() >= 2) {
                    s.add_term(*m, to_big(v));
                }
                s
            })
            .collect();
        InverseMap { jinv, nonlinear: PolyMap::new(comps), precision }
    }

    pub fn apply(&self, w: &[BigComplex]) -> Option<Vec<BigComplex>> {
        let scale = w.iter().map(|x| x.to_c64().norm()).fold(0.0, f64::max);
        let tol = scale * 2f64.powi(8 - self.precision as i32);
        let mut z = self.jinv.mul_vec(w);
        for _ in 0..4 * self.precision {
            let nz = self.nonlinear.eval(&z);
            let rhs: Vec<BigComplex> = w.iter().zip(&nz).map(|(a, b)| a.sub(b)).collect();
            let next = self.jinv.mul_vec(&rhs);
            let step = next.iter().zip(&z).map(|(a, b)| a.sub(b).to_c64().norm()).fold(0.0, f64::max);
            z = next;
            if !step.is_finite() {
                return None;
            }
            if step <= tol {
                return Some(z);
            }
        }
        None
    }
}

/// Seeds on the profile at `k_far` and pulls back to `k0` with `F^{-1}`.
/// Transverse errors of the profile contract under `F^{-1}`, so the result
/// lies much closer to the parabolic curve than [`profile_seed`] at `k0`.
pub fn pullback_seed(germ: &InputGerm, k0: usize, k_far: usize, precision: usize) -> Result<Vec<BigComplex>, DynamicsError> {
    if k_far <= k0 || k0 == 0 {
        return Err(DynamicsError::PreconditionViolated(format!("need 0 < k0 < k_far, got {k0}, {k_far}")));
    }
    let inv = InverseMap::new(germ, precision);
    let mut z = profile_seed(germ, k_far, precision)?;
    for _ in k0..k_far {
        z = inv.apply(&z).ok_or(DynamicsError::NonConvergent)?;
    }
    Ok(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    /// Coordinate, 1-based.
    pub j: usize,
    /// `−` slope of `log |z_j|` against `log k`.
    pub exponent: f64,
    /// Exponent used for the constant: the nearest integer when within
    /// [`EXPONENT_SNAP`], the raw fit otherwise.
    pub exponent_used: f64,
    /// Median of `k^m z^k_j` over the window (real and imaginary parts separately).
    pub constant: Complex64,
    /// Sample indices `[from, to)` of the window.
    pub window: (usize, usize),
    /// Largest deviation of `log |z_j|` from the fitted line.
    pub residual: f64,
    /// `residual < POWER_LAW_THRESHOLD`.
    pub power_law: bool,
}

pub const EXPONENT_SNAP: f64 = 0.05;
pub const POWER_LAW_THRESHOLD: f64 = 1e-4;

/// Power-law fit of coordinate `j` (1-based) on samples `window.0..window.1`.
pub fn asymptotic_fit(trace: &[Vec<Complex64>], start: usize, j: usize, window: (usize, usize)) -> Result<AsymptoticFit, DynamicsError> {
    let (a, b) = window;
    if b > trace.len() || b < a + 3 {
        return Err(DynamicsError::InsufficientData { need: a + 3, have: trace.len() });
    }
    if max_modulus(&trace[b - 1]) >= max_modulus(&trace[a]) {
        return Err(DynamicsError::NonConvergent);
    }
    let pts: Vec<(f64, f64)> = (a..b)
        .filter(|&i| trace[i][j - 1].norm() > 0.0)
        .map(|i| (((start + i) as f64).ln(), trace[i][j - 1].norm().ln()))
        .collect();
    if pts.len() < 3 {
        return Err(DynamicsError::InsufficientData { need: 3, have: pts.len() });
    }
    let nf = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let residual = pts.iter().map(|p| (p.1 - (icept + slope * p.0)).abs()).fold(0.0, f64::max);
    let exponent = -slope;
    let exponent_used = if (exponent - exponent.round()).abs() < EXPONENT_SNAP { exponent.round() } else { exponent };
    let mut re: Vec<f64> = Vec::new();
    let mut im: Vec<f64> = Vec::new();
    for i in a..b {
        let k = (start + i) as f64;
        let c = trace[i][j - 1] * k.powf(exponent_used);
        re.push(c.re);
        im.push(c.im);
    }
    let constant = Complex64::new(median(&mut re), median(&mut im));
    Ok(AsymptoticFit { j, exponent, exponent_used, constant, window, residual, power_law: residual < POWER_LAW_THRESHOLD })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
