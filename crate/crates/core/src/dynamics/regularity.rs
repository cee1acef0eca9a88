//! Regular orbits: projective convergence of the successive lifts of a
//! sequence through the blow-up tower.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::chardir::structured;
use super::{projective_distance, ChartQuadraticForm, DynamicsError};
use crate::blowup::{chart_step, ChartTable};
use crate::germ::InputGerm;
use crate::lifting::lift;
use crate::partition::JordanStructure;
use crate::scalar::{BigComplex, Scalar};

/// Thresholds for the convergence tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityOptions {
    /// Projective distance below which two classes are identified.
    pub tau: f64,
    /// Samples per window.
    pub window: usize,
    /// Tolerance for matching the last limit with a characteristic direction.
    pub match_tol: f64,
}

impl Default for RegularityOptions {
    fn default() -> Self {
        RegularityOptions { tau: 1e-3, window: 50, match_tol: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageVerdict {
    /// Stage 0 only: `[z^k]` converges.
    Regular,
    FirstKind,
    SecondKind,
    NotRegular,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitClass {
    Standard,
    RegularNonstandard,
    Irregular,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub verdict: StageVerdict,
    /// Limit of `[w]` for the chart-`stage` lift `w` when it was computed
    /// and found convergent, scaled so the largest entry is 1.
    pub limit: Option<Vec<Complex64>>,
    /// Index (1-based) of the centre `e_r` compared against, stages `r ≥ 1`.
    pub center: Option<usize>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub stages: Vec<StageReport>,
    pub classification: OrbitClass,
    /// Distance from the last limit to the nearest supplied direction.
    pub direction_distance: Option<f64>,
    pub converges_to_origin: bool,
    pub options: RegularityOptions,
}

/// Column of `chart_step(s, r)` carrying the extra factor: the centre `e_r`.
fn step_center(s: &JordanStructure, r: usize) -> Option<usize> {
    let rows = chart_step(s, r).ok()?;
    (0..rows.len()).find(|&c| rows.iter().enumerate().any(|(h, row)| h != c && row[c] == 1))
}

fn unit_aligned(x: &[Complex64], reference: &[Complex64]) -> Option<Vec<Complex64>> {
    let norm: f64 = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    let dot: Complex64 = x.iter().zip(reference).map(|(a, b)| a.conj() * b).sum();
    let phase = if dot.norm() > 0.0 { dot / dot.norm() } else { Complex64::new(1.0, 0.0) };
    Some(x.iter().map(|c| c * phase / norm).collect())
}

fn mean(v: &[Vec<Complex64>]) -> Vec<Complex64> {
    let n = v[0].len();
    let m = v.len() as f64;
    (0..n).map(|j| v.iter().map(|x| x[j]).sum::<Complex64>() / m).collect()
}

/// Cauchy test for `[x^k]` on the last two windows: the window means agree
/// within `tau` and every sample of the last window lies within `tau` of its
/// mean. Returns the limit estimate, or `None` if the test fails.
pub fn projective_limit(points: &[Vec<Complex64>], tau: f64, window: usize) -> Result<Option<Vec<Complex64>>, DynamicsError> {
    let have = points.len();
    if window == 0 || have < 2 * window {
        return Err(DynamicsError::InsufficientData { need: 2 * window.max(1), have });
    }
    let reference = points[have - 1].clone();
    let mut aligned = Vec::with_capacity(2 * window);
    for p in &points[have - 2 * window..] {
        match unit_aligned(p, &reference) {
            Some(u) => aligned.push(u),
            None => return Ok(None),
        }
    }
    let (a, b) = aligned.split_at(window);
    let (ma, mb) = (mean(a), mean(b));
    if projective_distance(&ma, &mb) >= tau || b.iter().any(|x| projective_distance(x, &mb) >= tau) {
        return Ok(None);
    }
    Ok(Some(super::normalize_max(&mb).0))
}

fn basis(n: usize, i: usize) -> Vec<Complex64> {
    (0..n).map(|j| if j == i { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect()
}

fn lift_points(s: &JordanStructure, r: usize, points: &[Vec<BigComplex>]) -> Result<Vec<Vec<Complex64>>, String> {
    let table = ChartTable::new(s, r).map_err(|e| e.to_string())?;
    points
        .iter()
        .map(|z| table.pi_inverse(z).map(|w| w.iter().map(Scalar::to_c64).collect()).map_err(|e| e.to_string()))
        .collect()
}

/// Classifies the tail of `points` (`z^k` for consecutive `k`) with respect to
/// the blow-up tower of `s`, comparing the last limit with `directions`.
pub fn regularity_classify(
    points: &[Vec<BigComplex>],
    s: &JordanStructure,
    directions: &[Vec<Complex64>],
    opts: RegularityOptions,
) -> Result<RegularityReport, DynamicsError> {
    let need = 2 * opts.window;
    if points.len() < need {
        return Err(DynamicsError::InsufficientData { need, have: points.len() });
    }
    let tail = &points[points.len() - need..];
    let n = s.n();
    let norm = |z: &Vec<BigComplex>| z.iter().map(|c| c.to_c64().norm()).fold(0.0, f64::max);
    let converges_to_origin = norm(&tail[need - 1]) < norm(&tail[0]);

    let z: Vec<Vec<Complex64>> = tail.iter().map(|p| p.iter().map(Scalar::to_c64).collect()).collect();
    let mut stages = Vec::new();
    let mut limit = projective_limit(&z, opts.tau, opts.window)?;
    stages.push(StageReport {
        stage: 0,
        verdict: if limit.is_some() { StageVerdict::Regular } else { StageVerdict::NotRegular },
        limit: limit.clone(),
        center: None,
        note: None,
    });
    let mut first_kind = false;
    for r in 1..=s.ell() {
        let center = step_center(s, r);
        let prev = stages.last().expect("stage 0 present").verdict;
        let (verdict, lim, note) = if first_kind {
            (StageVerdict::FirstKind, None, None)
        } else if matches!(prev, StageVerdict::NotRegular | StageVerdict::Inconclusive) {
            (prev, None, None)
        } else {
            let c = center.expect("every step has a centre");
            let l = limit.as_ref().expect("previous stage converged");
            if projective_distance(l, &basis(n, c)) >= opts.tau {
                first_kind = true;
                (StageVerdict::FirstKind, None, None)
            } else {
                match lift_points(s, r, tail) {
                    Err(e) => (StageVerdict::Inconclusive, None, Some(e)),
                    Ok(w) => match projective_limit(&w, opts.tau, opts.window)? {
                        Some(v) => (StageVerdict::SecondKind, Some(v), None),
                        None => (StageVerdict::NotRegular, None, None),
                    },
                }
            }
        };
        limit = lim.clone();
        stages.push(StageReport { stage: r, verdict, limit: lim, center: center.map(|c| c + 1), note });
    }

    let last = stages.last().expect("nonempty");
    let direction_distance = last
        .limit
        .as_ref()
        .and_then(|l| directions.iter().map(|d| projective_distance(l, d)).min_by(|a, b| a.total_cmp(b)));
    let any = |v: StageVerdict| stages.iter().any(|st| st.verdict == v);
    let classification = if !converges_to_origin || any(StageVerdict::NotRegular) {
        OrbitClass::Irregular
    } else if any(StageVerdict::Inconclusive) {
        OrbitClass::Inconclusive
    } else if last.verdict == StageVerdict::SecondKind && direction_distance.is_some_and(|d| d < opts.match_tol) {
        OrbitClass::Standard
    } else {
        OrbitClass::RegularNonstandard
    };
    Ok(RegularityReport { stages, classification, direction_distance, converges_to_origin, options: opts })
}

/// Allowable non-degenerate characteristic directions of the last lift of a
/// generic germ, as complex vectors.
pub fn allowable_directions(germ: &InputGerm) -> Result<Vec<Vec<Complex64>>, DynamicsError> {
    let s = germ.structure();
    let l = lift(germ, s.ell(), 3)?;
    let q = ChartQuadraticForm::from_map(&l.map);
    let d = structured(&q, &l.table.divisor)?;
    Ok(vec![d.v.clone()])
}

/// Estimate of `lim 1/(k w^k)` for `w^{k+1} = w^k (1 + u^k)` with
/// `u^k / w^k → c`; the limit should be `−c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CesaroEstimate {
    pub k: usize,
    /// `1/(k w^k)` at the last sample.
    pub limit: Complex64,
    /// Mean of `u^k / w^k` over the last window.
    pub c: Complex64,
    /// `|limit + c| ≤ 0.02 |c|`.
    pub consistent: bool,
}

pub const CESARO_REL_TOL: f64 = 0.02;

/// `w[k]` and `u[k]` are indexed by `k` from 0.
pub fn cesaro_limit(w: &[Complex64], u: &[Complex64], window: usize) -> Result<CesaroEstimate, DynamicsError> {
    let n = w.len().min(u.len());
    if n < 4 || window == 0 || window > n {
        return Err(DynamicsError::InsufficientData { need: window.max(4), have: n });
    }
    if w[..n].iter().any(|x| *x == Complex64::new(0.0, 0.0)) {
        return Err(DynamicsError::PreconditionViolated("w^k = 0".into()));
    }
    let k = n - 1;
    if w[k].norm() >= 0.9 * w[k / 2].norm() {
        return Err(DynamicsError::PreconditionViolated("w^k does not tend to 0".into()));
    }
    let limit = 1.0 / (k as f64 * w[k]);
    let c = (n - window..n).map(|i| u[i] / w[i]).sum::<Complex64>() / window as f64;
    let consistent = (limit + c).norm() <= CESARO_REL_TOL * c.norm();
    Ok(CesaroEstimate { k, limit, c, consistent })
}
