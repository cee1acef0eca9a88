use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use blowdyn::blowup::{compare_with_printed, ChartTable};
use blowdyn::dynamics::{
    allowable_directions, asymptotic_fit, characteristic_directions, orbit_iterate, parabolic_classification, profile_seed, pullback_seed,
    regularity_classify, AsymptoticFit, ChartQuadraticForm, Mode, OrbitTrace, RegularityOptions,
};
use blowdyn::germ::{random_germ, InputGerm};
use blowdyn::lifting::{lift, semiconjugacy_check};
use blowdyn::mapspec::{LiftedMapDoc, MapSpec, MapSpecError, SCHEMA};
use blowdyn::normalform::{epsilon_vector, invariants_2d, normal_form, NormalFormError};
use blowdyn::partition::JordanStructure;
use blowdyn::scalar::{format_float, parse_float, BigComplex, GaussRational};
use blowdyn::series::PolyMap;

mod demo;

#[derive(Parser)]
#[command(name = "blowdyn", version, about = "Blow-up towers and parabolic dynamics of germs with a Jordan fixed point")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structure data and splitting table of a Jordan type.
    Partition {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        lambda: String,
    },
    /// Forward and inverse monomial tables of every chart.
    Charts {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        lambda: String,
    },
    /// Lifts a germ to stage K and writes the chart map as JSON.
    Lift {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        stage: usize,
        #[arg(long, default_value_t = 4)]
        degree: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Characteristic directions of a lift with Hakim spectra.
    Chardirs {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        mode: Option<Mode>,
        /// Defaults to the last stage of the tower.
        #[arg(long)]
        stage: Option<usize>,
    },
    /// ε, η, Ξ and the curve count.
    Invariants {
        #[arg(long)]
        map: PathBuf,
    },
    /// Quadratic normal form of a germ with a single Jordan block.
    Normalform {
        #[arg(long)]
        map: PathBuf,
    },
    /// Iterates the germ and writes the orbit as CSV.
    Orbit {
        #[arg(long)]
        map: PathBuf,
        /// `z1,z2,…`, `profile:K0` or `curve:K0[:KFAR]`.
        #[arg(long)]
        start: String,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        prec: Option<usize>,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Regularity report of an orbit CSV.
    Classify {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        tau: f64,
        #[arg(long, default_value_t = 50)]
        window: usize,
        #[arg(long, default_value_t = 1e-4)]
        match_tol: f64,
    },
    /// The Fatou example end to end.
    FatouDemo {
        #[arg(long)]
        json: bool,
    },
    /// A random germ as a map spec.
    Random {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value_t = 3)]
        degree: u32,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
}

/// Input problems exit with 2, everything else with 1.
struct Failure {
    kind: &'static str,
    code: u8,
    message: String,
}

fn classify_error(e: &anyhow::Error) -> Failure {
    let message = format!("{e:#}");
    let (kind, code) = if let Some(m) = e.downcast_ref::<MapSpecError>() {
        match m {
            MapSpecError::Json(_) | MapSpecError::Schema { .. } => ("schema_error", 2),
            MapSpecError::JordanMismatch { .. } => ("jordan_mismatch", 2),
            MapSpecError::Structure(_) => ("structure_error", 2),
        }
    } else if e.downcast_ref::<std::io::Error>().is_some() {
        ("io_error", 2)
    } else if e.downcast_ref::<InputError>().is_some() {
        ("input_error", 2)
    } else {
        ("computation_error", 1)
    };
    Failure { kind, code, message }
}

#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_err(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InputError(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = json!({ "schema": SCHEMA, "error": { "kind": "usage_error", "message": e.to_string().trim_end() } });
            eprintln!("{err}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let f = classify_error(&e);
            eprintln!("{}", json!({ "schema": SCHEMA, "error": { "kind": f.kind, "message": f.message } }));
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Partition { mu, lambda } => emit(partition_cmd(&parse_structure(&mu, &lambda)?)),
        Command::Charts { mu, lambda } => emit(charts_cmd(&parse_structure(&mu, &lambda)?)?),
        Command::Lift { map, stage, degree, out } => emit(lift_cmd(&load(&map)?.1, stage, degree, out.as_deref())?),
        Command::Chardirs { map, mode, stage } => emit(chardirs_cmd(&load(&map)?.1, mode, stage)?),
        Command::Invariants { map } => emit(invariants_cmd(&load(&map)?.1)?),
        Command::Normalform { map } => emit(normalform_cmd(&load(&map)?.1)?),
        Command::Orbit { map, start, steps, prec, csv } => {
            let (spec, germ) = load(&map)?;
            emit(orbit_cmd(&germ, &start, steps, prec.unwrap_or(spec.precision_bits()), &csv)?)
        }
        Command::Classify { map, csv, tau, window, match_tol } => {
            let (spec, germ) = load(&map)?;
            let opts = RegularityOptions { tau, window, match_tol };
            emit(classify_cmd(&germ, &csv, spec.precision_bits(), opts)?)
        }
        Command::FatouDemo { json } => {
            let table = demo::run()?;
            if json {
                emit(serde_json::to_value(&table)?)
            } else {
                out(demo::render(&table).trim_end())
            }
        }
        Command::Random { mu, lambda, degree, density, seed } => {
            let s = parse_structure(&mu, &lambda)?;
            if !(0.0..=1.0).contains(&density) {
                return Err(input_err(format!("density {density} outside [0, 1]")));
            }
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let germ = random_germ(&mut rng, &s, degree, density);
            out(&MapSpec::from_germ(&germ).to_json())
        }
    }
}

fn emit(v: Value) -> Result<()> {
    out(&serde_json::to_string_pretty(&v)?)
}

/// Writes to stdout; a closed pipe is not an error.
fn out(text: &str) -> Result<()> {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{text}").and_then(|_| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn load(path: &Path) -> Result<(MapSpec, InputGerm)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = MapSpec::from_json(&text)?;
    let germ = spec.to_germ()?;
    Ok((spec, germ))
}

fn parse_structure(mu: &str, lambda: &str) -> Result<JordanStructure> {
    let mu: Vec<usize> = mu
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| input_err(format!("--mu: cannot parse {t:?}"))))
        .collect::<Result<_>>()?;
    let lambda: Vec<GaussRational> = lambda
        .split(',')
        .map(|t| t.trim().parse::<GaussRational>().map_err(|e| input_err(format!("--lambda: {e}"))))
        .collect::<Result<_>>()?;
    if mu.len() != lambda.len() {
        return Err(input_err(format!("--mu has {} blocks, --lambda has {}", mu.len(), lambda.len())));
    }
    Ok(JordanStructure::new(mu, lambda).map_err(MapSpecError::Structure)?)
}

fn partition_cmd(s: &JordanStructure) -> Value {
    json!({
        "schema": SCHEMA,
        "mu": s.mu(),
        "lambda": s.lambda(),
        "n": s.n(),
        "rho": s.rho(),
        "ell": s.ell(),
        "nu": s.nu(),
        "flags": s.flags(),
        "splittings": s.splittings(),
    })
}

fn charts_cmd(s: &JordanStructure) -> Result<Value> {
    let mut charts = Vec::new();
    for k in 1..=s.ell() {
        let t = ChartTable::new(s, k)?;
        let printed = compare_with_printed(s, k)?;
        charts.push(json!({ "chart": t, "printed_mismatches": printed }));
    }
    Ok(json!({ "schema": SCHEMA, "mu": s.mu(), "lambda": s.lambda(), "charts": charts }))
}

fn lift_cmd(germ: &InputGerm, stage: usize, degree: u32, out: Option<&Path>) -> Result<Value> {
    let l = lift(germ, stage, degree)?;
    let report = semiconjugacy_check(germ, &l)?;
    let doc = LiftedMapDoc::from_lifted(&l);
    let text = doc.to_json();
    if LiftedMapDoc::from_json(&text)?.to_lifted()? != l {
        bail!("lifted map does not survive a JSON round trip");
    }
    match out {
        Some(p) => {
            fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
            Ok(json!({ "schema": SCHEMA, "stage": stage, "cap": degree, "out": p, "terms": doc.terms.len(), "semiconjugacy": report }))
        }
        None => Ok(json!({ "schema": SCHEMA, "lifted": doc, "semiconjugacy": report })),
    }
}

fn chardirs_cmd(germ: &InputGerm, mode: Option<Mode>, stage: Option<usize>) -> Result<Value> {
    let s = germ.structure();
    let stage = stage.unwrap_or(s.ell());
    let mode = mode.unwrap_or(if s.n() == 2 { Mode::Exact2d } else { Mode::Structured });
    let l = lift(germ, stage, 3)?;
    let q = ChartQuadraticForm::from_map(&l.map);
    let dirs = characteristic_directions(&q, mode, &l.table.divisor)?;
    Ok(json!({ "schema": SCHEMA, "stage": stage, "mode": mode, "divisor": l.table.divisor, "directions": dirs }))
}

fn invariants_cmd(germ: &InputGerm) -> Result<Value> {
    let invariants = match invariants_2d(germ) {
        Ok(inv) => Some(json!({
            "epsilon": inv.epsilon,
            "eta": inv.eta,
            "xi": inv.xi,
            "xi_normal_form": inv.xi_normal_form,
            "xi_agrees": inv.xi_agrees(),
        })),
        Err(NormalFormError::GenericInput | NormalFormError::NotJordan) => None,
        Err(e) => return Err(e.into()),
    };
    let classification = parabolic_classification(germ)?;
    Ok(json!({
        "schema": SCHEMA,
        "generic": germ.is_generic(),
        "invariants": invariants,
        "curves": classification.curves(),
        "classification": classification,
    }))
}

fn terms_json(map: &PolyMap<GaussRational>) -> Vec<Value> {
    let n = map.nvars();
    let mut out = Vec::new();
    for (j, c) in map.components.iter().enumerate() {
        for (m, v) in c.terms() {
            out.push(json!({ "j": j + 1, "exp": m.exps(n), "coeff": v }));
        }
    }
    out
}

fn normalform_cmd(germ: &InputGerm) -> Result<Value> {
    let nf = normal_form(germ)?;
    let linear: Vec<Vec<GaussRational>> = nf.conjugator.linear.to_rows();
    Ok(json!({
        "schema": SCHEMA,
        "alpha": nf.alpha,
        "epsilon": nf.epsilon,
        "epsilon_vector": epsilon_vector(&nf),
        "j0": nf.j0,
        "normal_shape": nf.has_normal_shape(),
        "conjugation_identity": nf.conjugation_identity_holds(),
        "conjugator": { "linear": linear, "quadratic": nf.conjugator.quadratic.iter().map(|m| m.to_rows()).collect::<Vec<_>>() },
        "normalized": terms_json(&nf.normalized),
    }))
}

enum Seed {
    Point(Vec<BigComplex>),
    Profile(usize),
    Curve(usize, usize),
}

const DEFAULT_K_FAR: usize = 100_000;

fn parse_seed(s: &str, n: usize, prec: usize) -> Result<Seed> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| input_err(format!("--start: cannot parse {t:?} as an index")));
    if let Some(rest) = s.strip_prefix("profile:") {
        return Ok(Seed::Profile(num(rest)?));
    }
    if let Some(rest) = s.strip_prefix("curve:") {
        let mut it = rest.split(':');
        let k0 = num(it.next().unwrap_or(""))?;
        let far = it.next().map(num).transpose()?.unwrap_or(DEFAULT_K_FAR.max(k0 + 1));
        return Ok(Seed::Curve(k0, far));
    }
    let z: Vec<BigComplex> = s
        .split(',')
        .map(|t| BigComplex::parse(t.trim(), prec).ok_or_else(|| input_err(format!("--start: cannot parse {t:?}"))))
        .collect::<Result<_>>()?;
    if z.len() != n {
        return Err(input_err(format!("--start has {} coordinates, the map has {n}", z.len())));
    }
    Ok(Seed::Point(z))
}

fn write_csv(path: &Path, tr: &OrbitTrace, n: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["k".to_string()];
    for j in 1..=n {
        header.push(format!("re_z{j}"));
        header.push(format!("im_z{j}"));
    }
    w.write_record(&header)?;
    for (i, p) in tr.points.iter().enumerate() {
        let mut rec = vec![tr.k(i).to_string()];
        for z in p {
            rec.push(format_float(&z.re));
            rec.push(format_float(&z.im));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace written by `orbit`; returns the first index and the points.
fn read_csv(path: &Path, prec: usize) -> Result<(usize, Vec<Vec<BigComplex>>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let width = r.headers()?.len();
    if width < 3 || width % 2 == 0 {
        return Err(input_err(format!("{}: expected columns k, re_z1, im_z1, …", path.display())));
    }
    let mut start = None;
    let mut points = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| {
            parse_float(&rec[c], prec).ok_or_else(|| input_err(format!("{}: row {}: bad number {:?}", path.display(), line + 2, &rec[c])))
        };
        if start.is_none() {
            start = Some(rec[0].trim().parse::<usize>().map_err(|_| input_err(format!("{}: bad index {:?}", path.display(), &rec[0])))?);
        }
        let mut p = Vec::with_capacity(width / 2);
        for j in 0..width / 2 {
            p.push(BigComplex::new(field(1 + 2 * j)?, field(2 + 2 * j)?, prec));
        }
        points.push(p);
    }
    Ok((start.unwrap_or(0), points))
}

fn fits(trace: &OrbitTrace, n: usize) -> Vec<AsymptoticFit> {
    let c = trace.to_c64();
    let len = c.len();
    if trace.diverged || len < 20 {
        return Vec::new();
    }
    (1..=n).filter_map(|j| asymptotic_fit(&c, trace.start, j, (len / 2, len)).ok()).collect()
}

fn orbit_cmd(germ: &InputGerm, start: &str, steps: usize, prec: usize, csv: &Path) -> Result<Value> {
    if prec < 24 {
        return Err(input_err(format!("--prec {prec} is below 24 bits")));
    }
    let n = germ.n();
    let t0 = Instant::now();
    let (z0, k0, seed) = match parse_seed(start, n, prec)? {
        Seed::Point(z) => (z, 0, json!({ "kind": "point" })),
        Seed::Profile(k0) => (profile_seed(germ, k0, prec)?, k0, json!({ "kind": "profile", "k0": k0 })),
        Seed::Curve(k0, far) => (pullback_seed(germ, k0, far, prec)?, k0, json!({ "kind": "curve", "k0": k0, "k_far": far })),
    };
    let tr = orbit_iterate(germ, &z0, steps, prec, k0);
    write_csv(csv, &tr, n)?;
    Ok(json!({
        "schema": SCHEMA,
        "csv": csv,
        "precision_bits": prec,
        "seed": seed,
        "samples": tr.len(),
        "diverged": tr.diverged,
        "zero_hits": tr.zero_flags.iter().filter(|&&b| b).count(),
        "fits": fits(&tr, n),
        "elapsed_s": t0.elapsed().as_secs_f64(),
    }))
}

fn classify_cmd(germ: &InputGerm, csv: &Path, prec: usize, opts: RegularityOptions) -> Result<Value> {
    let (_, points) = read_csv(csv, prec)?;
    if points.first().is_some_and(|p| p.len() != germ.n()) {
        return Err(input_err(format!("{} has {} coordinates, the map has {}", csv.display(), points[0].len(), germ.n())));
    }
    let directions = if germ.is_generic() && !germ.structure().top_blocks_equal() { allowable_directions(germ)? } else { Vec::new() };
    let report = regularity_classify(&points, germ.structure(), &directions, opts)?;
    let mut v = serde_json::to_value(&report)?;
    v.as_object_mut().ok_or_else(|| anyhow!("report is not an object"))?.insert("schema".into(), json!(SCHEMA));
    Ok(v)
}
