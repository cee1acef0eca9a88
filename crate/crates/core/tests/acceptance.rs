//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion.
//!
//! Exits nonzero when a criterion fails unless it is listed in [`KNOWN_RED`];
//! set `BLOWDYN_STRICT=1` to fail on those as well.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use blowdyn::dynamics::chardir::{numeric, structured, NumericOptions};
use blowdyn::dynamics::regularity::StageVerdict;
use blowdyn::dynamics::{
    allowable_directions, asymptotic_fit, cesaro_limit, orbit_iterate, parabolic_classification, profile_seed, projective_distance, pullback_seed,
    regularity_classify, ChartQuadraticForm, Classification, OrbitClass, RegularityOptions,
};
use blowdyn::germ::{random_germ, InputGerm};
use blowdyn::lifting::{compare_with_display, lift, lifted_linear_part, semiconjugacy_check};
use blowdyn::normalform::{conjugate_germ, epsilon_vector, normal_form, random_conjugator};
use blowdyn::partition::JordanStructure;
use blowdyn::scalar::{BigComplex, GaussRational, Scalar};
use common::*;

// Tolerances and budgets, as stated by the criteria.
const SEMICONJ_CAP: u32 = 4;
const SEMICONJ_GERMS: usize = 50;
const SEMICONJ_BUDGET: Duration = Duration::from_secs(60);
const EIGEN_STRUCTURES: usize = 50;
const EIGEN_MAX_N: usize = 7;
const NUMERIC_AGREEMENT: f64 = 1e-8;
const FIT_EXPONENT_TOL: f64 = 0.02;
const FIT_CONSTANT_REL: f64 = 0.05;
const FATOU_K0: usize = 50;
const FATOU_K_FAR: usize = 100_000;
const FATOU_STEPS: usize = 5000;
const FATOU_PREC: usize = 128;
const FATOU_BUDGET: Duration = Duration::from_secs(10);
const HAKIM_RE_TOL: f64 = 1e-8;
const HAKIM_BUDGET: Duration = Duration::from_secs(30);
const DIRECTION_MATCH: f64 = 1e-4;
const CESARO_K: usize = 10_000;
const CESARO_REL: f64 = 0.02;
const NORMAL_FORM_GERMS: usize = 100;
const SERIES_CASES: u32 = 1000;
const SEED: u64 = 0xacce;

/// Criteria expected to fail, with the reason printed next to them.
const KNOWN_RED: &[(usize, &str)] = &[(
    6,
    "A_[v] computed from its definition d(P̂_2)_[v] − id is twice the printed closed form; at η = ε² it is −2, not −1",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn main() -> ExitCode {
    let criteria: Vec<(usize, &str, fn() -> Outcome)> = vec![
        (1, "semiconjugacy of every stage", c1_semiconjugacy),
        (2, "eigenvalues of the last lift", c2_eigenvalues),
        (3, "displayed expansion coefficients", c3_display),
        (4, "closed-form allowable direction", c4_direction),
        (5, "Fatou orbit asymptotics", c5_fatou),
        (6, "two-dimensional classification table", c6_classification),
        (7, "Hakim spectra for one block, n = 2..10", c7_hakim),
        (8, "regular orbits are standard", c8_regularity),
        (9, "normal form shape and ε-vector", c9_normal_form),
        (10, "series engine properties", c10_series),
    ];
    let strict = std::env::var("BLOWDYN_STRICT").is_ok_and(|v| v == "1");
    let mut unexpected = 0;
    for (id, name, f) in criteria {
        let t0 = Instant::now();
        let o = f();
        let secs = t0.elapsed().as_secs_f64();
        let known = KNOWN_RED.iter().find(|(k, _)| *k == id);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag}  {name} [{secs:.2} s]: {}", o.detail);
        if !o.pass {
            match known {
                Some((_, why)) if !strict => println!("             known red: {why}"),
                _ => unexpected += 1,
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn structures(list: &[&[usize]]) -> Vec<JordanStructure> {
    list.iter().map(|mu| JordanStructure::from_ints(mu, &vec![1; mu.len()]).unwrap()).collect()
}

fn c1_semiconjugacy() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checked = 0;
    let mut failures = Vec::new();
    for s in structures(&[&[2], &[3], &[2, 1], &[2, 2], &[3, 2], &[2, 2, 1]]) {
        for _ in 0..SEMICONJ_GERMS {
            let f = random_germ(&mut rng, &s, 3, 0.3);
            for k in 1..=s.ell() {
                let ok = lift(&f, k, SEMICONJ_CAP).and_then(|l| semiconjugacy_check(&f, &l)).map(|r| r.holds()).unwrap_or(false);
                checked += 1;
                if !ok {
                    failures.push(format!("μ = {:?}, stage {k}", s.mu()));
                }
            }
        }
    }
    let el = t0.elapsed();
    let pass = failures.is_empty() && el < SEMICONJ_BUDGET;
    outcome(pass, format!("{checked} lifts exact at cap {SEMICONJ_CAP}, {} failures, {:.1} s of {} s", failures.len(), el.as_secs_f64(), SEMICONJ_BUDGET.as_secs()))
}

fn c2_eigenvalues() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut bad = Vec::new();
    let mut equal_top = 0;
    for i in 0..EIGEN_STRUCTURES {
        let n = 2 + i % (EIGEN_MAX_N - 1);
        let s = random_real_structure(&mut rng, n);
        equal_top += s.top_blocks_equal() as usize;
        let f = random_germ(&mut rng, &s, 2, 0.5);
        let ok = lift(&f, s.ell(), 3).map(|l| lifted_linear_part(&l).matches_expected() == Some(true)).unwrap_or(false);
        if !ok {
            bad.push(format!("{:?}/{:?}", s.mu(), s.lambda().iter().map(|x| x.to_string()).collect::<Vec<_>>()));
        }
    }
    outcome(bad.is_empty(), format!("{EIGEN_STRUCTURES} structures (n ≤ {EIGEN_MAX_N}, {equal_top} with μ1 = μ2), mismatches {bad:?}"))
}

fn c3_display() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut hard = 0;
    let mut ambiguous = 0;
    let mut germs = 0;
    let mut first_hard = None;
    for mu in [&[2][..], &[3], &[4], &[3, 1], &[3, 2], &[4, 2], &[4, 3, 1], &[5, 2, 1], &[4, 1, 1]] {
        let s = JordanStructure::from_ints(mu, &vec![1; mu.len()]).unwrap();
        for _ in 0..10 {
            let f = random_germ(&mut rng, &s, 2, 0.6);
            let l = lift(&f, s.ell(), 3).unwrap();
            germs += 1;
            for m in compare_with_display(&f, &l) {
                if m.row.is_ambiguous() {
                    ambiguous += 1;
                } else {
                    hard += 1;
                    first_hard.get_or_insert(format!("{m:?}"));
                }
            }
        }
    }
    let mut detail = format!("{germs} germs, {hard} mismatches in unambiguous rows, {ambiguous} in the doubtful j = ν_l+μ_l rows (reported)");
    if let Some(m) = first_hard {
        detail.push_str(&format!("; first: {m}"));
    }
    outcome(hard == 0, detail)
}

/// Closed form of the allowable direction, with `λ = 1`.
fn closed_form_direction(f: &InputGerm) -> Vec<GaussRational> {
    let s = f.structure();
    let mu1 = s.mu1();
    let a = f.a11(mu1);
    let mut v = vec![GaussRational::zero(); s.n()];
    v[0] = GaussRational::from_int(2 * mu1 as i64 - 1).div(&a).unwrap();
    for j in 2..=mu1 {
        v[j - 1] = GaussRational::from_int((mu1 + j - 2) as i64);
    }
    for (&nu, &mul) in s.nu().iter().zip(s.mu()).skip(1) {
        for h in 1..=mul {
            v[nu + h - 1] = if mul + 1 == mu1 {
                f.a11(nu + mul).div(&a).unwrap().mul(&GaussRational::from_int((mul + h) as i64))
            } else {
                GaussRational::zero()
            };
        }
    }
    v
}

fn c4_direction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut exact_ok = 0;
    let mut exact_bad = Vec::new();
    let mut numeric_checked = 0;
    let mut numeric_bad = 0;
    let mut worst: f64 = 0.0;
    let shapes: &[&[usize]] = &[&[2], &[3], &[4], &[5], &[6], &[3, 1], &[3, 2], &[4, 3], &[4, 2], &[5, 4], &[5, 3], &[6, 5], &[6, 2], &[4, 3, 2], &[4, 3, 3], &[5, 4, 1], &[3, 2, 1]];
    for mu in shapes {
        let s = JordanStructure::from_ints(mu, &vec![1; mu.len()]).unwrap();
        for _ in 0..4 {
            let mut f = random_germ(&mut rng, &s, 2, 0.4);
            while !f.is_generic() {
                f = random_germ(&mut rng, &s, 2, 0.4);
            }
            let l = lift(&f, s.ell(), 3).unwrap();
            let q = ChartQuadraticForm::from_map(&l.map);
            let expected = closed_form_direction(&f);
            match structured(&q, &l.table.divisor) {
                Ok(d) => {
                    let got = d.exact.as_ref().map(|e| e.v.clone()).unwrap_or_default();
                    if proportional(&got, &expected) {
                        exact_ok += 1;
                    } else {
                        exact_bad.push(format!("μ = {mu:?}"));
                    }
                    if s.n() <= 6 {
                        numeric_checked += 1;
                        let dirs = numeric(&q.to_c64(), &l.table.divisor, NumericOptions::default()).unwrap_or_default();
                        let best = dirs.iter().map(|x| projective_distance(&x.v, &d.v)).fold(f64::INFINITY, f64::min);
                        worst = worst.max(best);
                        if best >= NUMERIC_AGREEMENT {
                            numeric_bad += 1;
                        }
                    }
                }
                Err(e) => exact_bad.push(format!("μ = {mu:?}: {e}")),
            }
        }
    }
    let pass = exact_bad.is_empty() && numeric_bad == 0;
    outcome(
        pass,
        format!(
            "{exact_ok} exact matches, failures {exact_bad:?}; numeric agreement on {numeric_checked} (n ≤ 6), worst distance {worst:.1e}, tol {NUMERIC_AGREEMENT:.0e}"
        ),
    )
}

fn c5_fatou() -> Outcome {
    let t0 = Instant::now();
    let f = InputGerm::fatou();
    let z0 = match pullback_seed(&f, FATOU_K0, FATOU_K_FAR, FATOU_PREC) {
        Ok(z) => z,
        Err(e) => return outcome(false, format!("seed failed: {e}")),
    };
    let tr = orbit_iterate(&f, &z0, FATOU_STEPS, FATOU_PREC, FATOU_K0);
    if tr.diverged {
        return outcome(false, format!("orbit left the ball after {} samples", tr.len()));
    }
    let c = tr.to_c64();
    let n = c.len();
    let mut pass = true;
    let mut parts = Vec::new();
    for (j, m, cst) in [(1, 2.0, 6.0), (2, 3.0, -12.0)] {
        match asymptotic_fit(&c, tr.start, j, (n / 2, n)) {
            Ok(fit) => {
                let rel = (fit.constant - Complex64::new(cst, 0.0)).norm() / f64::abs(cst);
                pass &= (fit.exponent - m).abs() <= FIT_EXPONENT_TOL && rel <= FIT_CONSTANT_REL;
                parts.push(format!("z{j}: exponent {:.4} (want {m} ± {FIT_EXPONENT_TOL}), constant {:.4} (want {cst} ± 5%)", fit.exponent, fit.constant.re));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("z{j}: {e}"));
            }
        }
    }
    let el = t0.elapsed();
    pass &= el < FATOU_BUDGET;
    let bare = orbit_iterate(&f, &profile_seed(&f, FATOU_K0, FATOU_PREC).unwrap(), FATOU_STEPS, FATOU_PREC, FATOU_K0);
    parts.push(format!(
        "seed: profile at k = {FATOU_K_FAR} pulled back to k0 = {FATOU_K0} ({:.2} s of {} s); bare profile seed at k0 {}",
        el.as_secs_f64(),
        FATOU_BUDGET.as_secs(),
        if bare.diverged { format!("escapes at k = {}", bare.k(bare.len())) } else { "stays bounded".into() }
    ));
    outcome(pass, parts.join("; "))
}

fn nongeneric(a: i64, b: i64, e: GaussRational) -> InputGerm {
    let s = JordanStructure::unipotent_block(2).unwrap();
    InputGerm::with_terms(
        s,
        &[(1, vec![2, 0], GaussRational::from_int(a)), (2, vec![1, 1], GaussRational::from_int(2 * b)), (2, vec![3, 0], e), (1, vec![0, 2], GaussRational::ratio(1, 3))],
    )
    .unwrap()
}

fn c6_classification() -> Outcome {
    let mut table_bad = Vec::new();
    let mut counted = [0usize; 4];
    let mut special_m1 = Vec::new();
    let mut special_0 = Vec::new();
    for a in -2i64..=2 {
        for b in -2i64..=2 {
            let eps = a + b;
            let d2 = (a - b) * (a - b);
            // η = d² + 2e: generic values, η = ε² (e = 2ab) and η = 0 (e = −d²/2)
            let es = [GaussRational::from_int(1), GaussRational::ratio(-7, 3), GaussRational::from_int(2 * a * b), GaussRational::ratio(-d2, 2)];
            for e in es {
                let f = nongeneric(a, b, e.clone());
                let eta = GaussRational::from_int(d2).add(&e.add(&e));
                let epsq = GaussRational::from_int(eps * eps);
                let expect = if eps == 0 && eta.is_zero() {
                    None
                } else if eta.is_zero() || eta == epsq {
                    Some(1)
                } else {
                    Some(2)
                };
                let idx = match expect {
                    None => 3,
                    Some(1) if eta.is_zero() => 2,
                    Some(1) => 1,
                    _ => 0,
                };
                counted[idx] += 1;
                let cls = match parabolic_classification(&f) {
                    Ok(c) => c,
                    Err(err) => {
                        table_bad.push(format!("(a, b, e) = ({a}, {b}, {e}): {err}"));
                        continue;
                    }
                };
                if cls.curves() != expect {
                    table_bad.push(format!("(a, b, e) = ({a}, {b}, {e}): {:?} curves, want {expect:?}", cls.curves()));
                }
                if let Classification::NonGeneric2d { directions, curves, .. } = &cls {
                    if directions.len() != *curves {
                        table_bad.push(format!("(a, b, e) = ({a}, {b}, {e}): {} allowable directions for {curves} curves", directions.len()));
                    }
                    let spectra: Vec<f64> = directions.iter().filter_map(|d| d.hakim_spectrum.as_ref()).map(|s| s[0].re).collect();
                    if eps != 0 && eta == epsq {
                        special_m1.extend(spectra);
                    } else if eps != 0 && eta.is_zero() {
                        special_0.extend(spectra);
                    }
                }
            }
        }
    }
    let m1_ok = !special_m1.is_empty() && special_m1.iter().all(|x| (x + 1.0).abs() < 1e-12);
    let z_ok = !special_0.is_empty() && special_0.iter().all(|x| x.abs() < 1e-12);
    let uniq = |v: &[f64]| {
        let mut u: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
        u.sort();
        u.dedup();
        u
    };
    outcome(
        table_bad.is_empty() && m1_ok && z_ok,
        format!(
            "table cases (2, 1@ε², 1@0, unresolved) = {counted:?}, mismatches {table_bad:?}; A at η = ε²: {:?} (want -1) {}; A at η = 0: {:?} (want 0) {}",
            uniq(&special_m1),
            if m1_ok { "ok" } else { "MISMATCH" },
            uniq(&special_0),
            if z_ok { "ok" } else { "MISMATCH" },
        ),
    )
}

fn c7_hakim() -> Outcome {
    let t0 = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut bad = Vec::new();
    for n in 2..=10 {
        let s = JordanStructure::unipotent_block(n).unwrap();
        let f = a11_germ(&s, &[(n, GaussRational::one())]);
        let res = lift(&f, s.ell(), 3).map_err(|e| e.to_string()).and_then(|l| {
            let q = ChartQuadraticForm::from_map(&l.map);
            structured(&q, &l.table.divisor).map_err(|e| e.to_string())
        });
        match res.map(|d| d.hakim_spectrum) {
            Ok(Some(spec)) => {
                let m = spec.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
                worst = worst.max(m);
                if m > HAKIM_RE_TOL {
                    bad.push(format!("n = {n}: max Re {m:.3e}"));
                }
            }
            Ok(None) => bad.push(format!("n = {n}: degenerate")),
            Err(e) => bad.push(format!("n = {n}: {e}")),
        }
    }
    let el = t0.elapsed();
    outcome(
        bad.is_empty() && el < HAKIM_BUDGET,
        format!("largest real part {worst:.3e} (tol {HAKIM_RE_TOL:.0e}), failures {bad:?}, {:.2} s of {} s", el.as_secs_f64(), HAKIM_BUDGET.as_secs()),
    )
}

fn c8_regularity() -> Outcome {
    let f = InputGerm::fatou();
    let mut parts = Vec::new();
    let positive = (|| {
        let z0 = pullback_seed(&f, FATOU_K0, FATOU_K_FAR, FATOU_PREC).ok()?;
        let tr = orbit_iterate(&f, &z0, FATOU_STEPS, FATOU_PREC, FATOU_K0);
        let dirs = allowable_directions(&f).ok()?;
        regularity_classify(&tr.points, f.structure(), &dirs, RegularityOptions::default()).ok()
    })();
    let pos_ok = match &positive {
        Some(r) => {
            let d = r.direction_distance.unwrap_or(f64::INFINITY);
            let n_regular = r.stages.iter().all(|s| matches!(s.verdict, StageVerdict::Regular | StageVerdict::SecondKind));
            parts.push(format!("Fatou orbit {:?}, all stages regular: {n_regular}, stage-ℓ distance {d:.2e}", r.classification));
            r.classification == OrbitClass::Standard && n_regular && d < DIRECTION_MATCH
        }
        None => {
            parts.push("Fatou orbit could not be classified".into());
            false
        }
    };
    let prec = 64;
    let osc: Vec<Vec<BigComplex>> = (1..=2000)
        .map(|k| {
            let r = 1.0 / (k as f64 + 10.0);
            let t = k as f64 * 0.7;
            vec![BigComplex::from_f64(r * t.cos(), 0.0, prec), BigComplex::from_f64(r * t.sin(), 0.0, prec)]
        })
        .collect();
    let neg = regularity_classify(&osc, f.structure(), &[], RegularityOptions::default());
    let neg_ok = match &neg {
        Ok(r) => {
            parts.push(format!("oscillating orbit stage 0 {:?}, class {:?}", r.stages[0].verdict, r.classification));
            r.stages[0].verdict == StageVerdict::NotRegular
        }
        Err(e) => {
            parts.push(format!("oscillating orbit: {e}"));
            false
        }
    };
    let c = Complex64::new(-0.5, 0.5);
    let mut w = vec![Complex64::new(0.3, 0.1)];
    let mut u = Vec::new();
    for k in 0..CESARO_K {
        let uk = c * w[k];
        u.push(uk);
        w.push(w[k] * (1.0 + uk));
    }
    u.push(c * w[CESARO_K]);
    let ces = cesaro_limit(&w, &u, 50);
    let ces_ok = match &ces {
        Ok(e) => {
            let rel = (e.limit + c).norm() / c.norm();
            parts.push(format!("1/(k w^k) at k = {} is {:.4}, −c = {:.4}, relative error {rel:.2e} (tol {CESARO_REL})", e.k, e.limit, -c));
            rel < CESARO_REL
        }
        Err(err) => {
            parts.push(format!("Cesàro estimate: {err}"));
            false
        }
    };
    outcome(pos_ok && neg_ok && ces_ok, parts.join("; "))
}

fn c9_normal_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let mut shape_bad = 0;
    let mut proj_bad = 0;
    let mut total = 0;
    for n in 2..=4 {
        let s = JordanStructure::unipotent_block(n).unwrap();
        for _ in 0..NORMAL_FORM_GERMS {
            total += 1;
            let f = random_germ(&mut rng, &s, 3, 0.4);
            let Ok(nf) = normal_form(&f) else {
                shape_bad += 1;
                continue;
            };
            if !nf.has_normal_shape() || !nf.conjugation_identity_holds() {
                shape_bad += 1;
            }
            let chi = random_conjugator(&mut rng, n);
            let ok = conjugate_germ(&f, &chi)
                .ok()
                .and_then(|g| normal_form(&g).ok())
                .is_some_and(|ng| proportional(&epsilon_vector(&ng), &epsilon_vector(&nf)));
            proj_bad += (!ok) as usize;
        }
    }
    outcome(shape_bad == 0 && proj_bad == 0, format!("{total} germs: {shape_bad} shape failures, {proj_bad} ε-vectors not proportional"))
}

fn run_suite<S: proptest::strategy::Strategy>(
    name: &str,
    salt: u8,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), proptest::test_runner::TestCaseError>,
) -> Result<String, String> {
    let mut seed = [0u8; 32];
    seed[0] = salt;
    seed[1..9].copy_from_slice(&SEED.to_le_bytes());
    let config = Config { cases: SERIES_CASES, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &seed));
    runner.run(&strategy, test).map(|_| format!("{name} ×{SERIES_CASES}")).map_err(|e| format!("{name}: {e}"))
}

fn c10_series() -> Outcome {
    let results = [
        run_suite("ring axioms", 1, ring_triple(), |t| ring_axioms(&t)),
        run_suite("composition associativity", 2, compose_triple(), |t| composition_associates(&t)),
        run_suite("reciprocal", 3, unit(), |u| reciprocal_inverts(&u)),
        run_suite("monomial division", 4, divisible_pair(), |t| monomial_division_inverts(&t)),
    ];
    let pass = results.iter().all(Result::is_ok);
    let parts: Vec<String> = results.into_iter().map(|r| r.unwrap_or_else(|e| format!("FAILED {e}"))).collect();
    outcome(pass, parts.join(", "))
}
