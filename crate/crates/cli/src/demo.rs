//! `fatou-demo`: F(z) = (z1 + z2, z2 + z1²) end to end.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::Result;
use num_complex::Complex64;
use serde::Serialize;

use blowdyn::dynamics::chardir::structured;
use blowdyn::dynamics::{
    allowable_directions, asymptotic_fit, orbit_iterate, profile_seed, projective_distance, pullback_seed, regularity_classify, ChartQuadraticForm,
    OrbitClass, RegularityOptions,
};
use blowdyn::germ::InputGerm;
use blowdyn::lifting::{lift, semiconjugacy_check};

pub const K0: usize = 50;
pub const K_FAR: usize = 100_000;
pub const STEPS: usize = 5000;
pub const PREC: usize = 128;

#[derive(Debug, Serialize)]
pub struct Row {
    pub check: String,
    pub expected: String,
    pub value: String,
    pub tolerance: String,
    /// `None` for informational rows.
    pub pass: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct DemoTable {
    pub rows: Vec<Row>,
    pub elapsed_s: f64,
}

fn row(check: &str, expected: impl ToString, value: impl ToString, tolerance: &str, pass: Option<bool>) -> Row {
    Row { check: check.into(), expected: expected.to_string(), value: value.to_string(), tolerance: tolerance.into(), pass }
}

pub fn run() -> Result<DemoTable> {
    let t0 = Instant::now();
    let f = InputGerm::fatou();
    let s = f.structure();
    let mut rows = Vec::new();

    for k in 1..=s.ell() {
        let l = lift(&f, k, 4)?;
        let rep = semiconjugacy_check(&f, &l)?;
        rows.push(row(&format!("semiconjugacy, stage {k}, cap 4"), "exact", if rep.holds() { "exact" } else { "fails" }, "0", Some(rep.holds())));
    }

    let l = lift(&f, s.ell(), 3)?;
    let q = ChartQuadraticForm::from_map(&l.map);
    let d = structured(&q, &l.table.divisor)?;
    let target = [Complex64::new(3.0, 0.0), Complex64::new(2.0, 0.0)];
    let dist = projective_distance(&d.v, &target);
    rows.push(row("allowable direction", "[3 : 2]", format!("[{:.6} : {:.6}]", d.v[0].re, d.v[1].re), "1e-12", Some(dist < 1e-12)));
    if let Some(spec) = &d.hakim_spectrum {
        let worst = spec.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let shown: Vec<String> = spec.iter().map(|z| format!("{:.6}", z.re)).collect();
        rows.push(row("Hakim spectrum, max real part", "≤ 0", shown.join(", "), "1e-8", Some(worst <= 1e-8)));
    }

    let z0 = pullback_seed(&f, K0, K_FAR, PREC)?;
    let tr = orbit_iterate(&f, &z0, STEPS, PREC, K0);
    rows.push(row("curve seed orbit stays bounded", STEPS + 1, tr.len(), "0", Some(!tr.diverged && tr.len() == STEPS + 1)));
    let c = tr.to_c64();
    let n = c.len();
    for (j, m, cst) in [(1usize, 2.0, 6.0), (2, 3.0, -12.0)] {
        match asymptotic_fit(&c, tr.start, j, (n / 2, n)) {
            Ok(fit) => {
                rows.push(row(&format!("exponent of z{j}"), m, format!("{:.5}", fit.exponent), "0.02", Some((fit.exponent - m).abs() <= 0.02)));
                let rel = (fit.constant - Complex64::new(cst, 0.0)).norm() / cst.abs();
                rows.push(row(&format!("constant of z{j}"), cst, format!("{:.5}", fit.constant.re), "5%", Some(rel <= 0.05)));
            }
            Err(e) => rows.push(row(&format!("fit of z{j}"), "power law", e, "", Some(false))),
        }
    }

    let dirs = allowable_directions(&f)?;
    let rep = regularity_classify(&tr.points, s, &dirs, RegularityOptions::default())?;
    rows.push(row("orbit class", "Standard", format!("{:?}", rep.classification), "", Some(rep.classification == OrbitClass::Standard)));
    if let Some(dd) = rep.direction_distance {
        rows.push(row("stage limit vs allowable direction", 0, format!("{dd:.3e}"), "1e-4", Some(dd < 1e-4)));
    }

    let bare = orbit_iterate(&f, &profile_seed(&f, K0, PREC)?, STEPS, PREC, K0);
    let fate = if bare.diverged { format!("escapes at k = {}", bare.k(bare.len())) } else { "bounded".into() };
    rows.push(row("bare profile seed (transversally repelling)", "-", fate, "", None));

    Ok(DemoTable { rows, elapsed_s: t0.elapsed().as_secs_f64() })
}

pub fn render(t: &DemoTable) -> String {
    let w = t.rows.iter().map(|r| r.check.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for r in &t.rows {
        let tag = match r.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        let pad = w - r.check.chars().count();
        let _ = writeln!(out, "{tag}  {}{}  expected {}  got {}  tol {}", r.check, " ".repeat(pad), r.expected, r.value, r.tolerance);
    }
    let _ = writeln!(out, "elapsed {:.2} s", t.elapsed_s);
    out
}
