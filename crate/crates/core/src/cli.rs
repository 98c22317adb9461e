//! Problem files, JSON reports, and the `measys` commands.
//!
//! Exit codes: 0 when everything passed, 1 for a failed check or an
//! inconsistent system, 2 for unusable input.

use crate::blocksystem::{self, BlockSystem, PointKind};
use crate::checks::{self, Check, Suite};
use crate::coefficients::{self, MeasureMatrix, Problem, Tolerances};
use crate::error::{Error, Result};
use crate::fuzz;
use crate::l2::L2Function;
use crate::linalg::{c, CMat, CVec};
use crate::propagation::PiecewiseSolution;
use crate::solutions;
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::PathBuf;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

type Complex = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityPiece {
    pub from: f64,
    pub to: f64,
    pub matrix: Vec<Vec<Complex>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub x: f64,
    pub matrix: Vec<Vec<Complex>>,
}

/// An empty `density` list means zero density.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default)]
    pub density: Vec<DensityPiece>,
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsPiece {
    pub from: f64,
    pub to: f64,
    pub vector: Vec<Complex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsAtom {
    pub x: f64,
    pub vector: Vec<Complex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsSpec {
    pub pieces: Vec<RhsPiece>,
    #[serde(default)]
    pub atom_values: Vec<RhsAtom>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_sing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_solve: Option<f64>,
}

/// JSON problem description. Complex numbers are `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    #[serde(rename = "J")]
    pub j: Vec<Vec<Complex>>,
    pub interval: [f64; 2],
    pub q: MeasureSpec,
    pub w: MeasureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<RhsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forced_partition_points: Vec<f64>,
}

/// A problem file turned into library objects.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub problem: Problem,
    pub f: Option<L2Function>,
    pub window: (f64, f64),
    pub forced: Vec<f64>,
    pub tolerances: Tolerances,
}

fn parse_matrix(key: &str, rows: &[Vec<Complex>], n: usize) -> Result<CMat> {
    if rows.len() != n {
        return Err(Error::Parse(format!(
            "{key}: expected {n} rows, found {}",
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Parse(format!(
                "{key}: row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
    }
    Ok(CMat::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

fn parse_vector(key: &str, v: &[Complex], n: usize) -> Result<CVec> {
    if v.len() != n {
        return Err(Error::Parse(format!(
            "{key}: expected {n} entries, found {}",
            v.len()
        )));
    }
    Ok(CVec::from_iterator(n, v.iter().map(|z| c(z[0], z[1]))))
}

fn check_tiling(key: &str, spans: &[(f64, f64)], interval: (f64, f64)) -> Result<()> {
    let mut at = interval.0;
    for (k, &(from, to)) in spans.iter().enumerate() {
        if from != at {
            return Err(Error::Parse(format!(
                "{key}[{k}]: piece starts at {from} but the previous one ends at {at}"
            )));
        }
        if to <= from {
            return Err(Error::Parse(format!(
                "{key}[{k}]: empty or reversed piece [{from}, {to}]"
            )));
        }
        at = to;
    }
    if at != interval.1 {
        return Err(Error::Parse(format!(
            "{key}: pieces end at {at}, expected {}",
            interval.1
        )));
    }
    Ok(())
}

fn parse_measure(
    key: &str,
    spec: &MeasureSpec,
    n: usize,
    interval: (f64, f64),
) -> Result<MeasureMatrix> {
    let mut m = if spec.density.is_empty() {
        MeasureMatrix::zero(n, interval)
    } else {
        let spans: Vec<_> = spec.density.iter().map(|p| (p.from, p.to)).collect();
        check_tiling(&format!("{key}.density"), &spans, interval)?;
        let mut bp = vec![interval.0];
        bp.extend(spans.iter().map(|s| s.1));
        let values = spec
            .density
            .iter()
            .enumerate()
            .map(|(k, p)| parse_matrix(&format!("{key}.density[{k}].matrix"), &p.matrix, n))
            .collect::<Result<Vec<_>>>()?;
        MeasureMatrix::new(n, interval, bp, values, Vec::new())?
    };
    for (k, a) in spec.atoms.iter().enumerate() {
        if m.atoms().iter().any(|(x, _)| *x == a.x) {
            return Err(Error::Parse(format!(
                "{key}.atoms[{k}]: duplicate atom at {}",
                a.x
            )));
        }
        m = m.with_atom(
            a.x,
            parse_matrix(&format!("{key}.atoms[{k}].matrix"), &a.matrix, n)?,
        );
    }
    Ok(m)
}

fn parse_rhs(spec: &RhsSpec, n: usize) -> Result<L2Function> {
    if spec.pieces.is_empty() {
        return Err(Error::Parse(
            "f.pieces: at least one piece is required".into(),
        ));
    }
    let spans: Vec<_> = spec.pieces.iter().map(|p| (p.from, p.to)).collect();
    let support = (spans[0].0, spans[spans.len() - 1].1);
    check_tiling("f.pieces", &spans, support)?;
    let mut bp = vec![support.0];
    bp.extend(spans.iter().map(|s| s.1));
    let values = spec
        .pieces
        .iter()
        .enumerate()
        .map(|(k, p)| parse_vector(&format!("f.pieces[{k}].vector"), &p.vector, n))
        .collect::<Result<Vec<_>>>()?;
    let atoms = spec
        .atom_values
        .iter()
        .enumerate()
        .map(|(k, a)| {
            Ok((
                a.x,
                parse_vector(&format!("f.atom_values[{k}].vector"), &a.vector, n)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    L2Function::new(n, bp, values, atoms).map_err(|e| Error::Parse(format!("f: {e}")))
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(&self) -> Result<Loaded> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Parse("n: must be positive".into()));
        }
        let interval = (self.interval[0], self.interval[1]);
        if !(interval.0 < interval.1) {
            return Err(Error::Parse(format!(
                "interval: [{}, {}] is empty",
                interval.0, interval.1
            )));
        }
        let j = parse_matrix("J", &self.j, n)?;
        let q = parse_measure("q", &self.q, n, interval)?;
        let w = parse_measure("w", &self.w, n, interval)?;
        let problem = Problem::new(j, q, w)?;
        let f = self.f.as_ref().map(|spec| parse_rhs(spec, n)).transpose()?;
        let window = self.window.map_or(interval, |w| (w[0], w[1]));
        if !(window.0 < window.1 && window.0 >= interval.0 && window.1 <= interval.1) {
            return Err(Error::Parse(format!(
                "window: [{}, {}] must be a nonempty part of the interval",
                window.0, window.1
            )));
        }
        let mut tolerances = Tolerances::default();
        if let Some(t) = &self.tolerances {
            tolerances.sing = t.tol_sing.unwrap_or(tolerances.sing);
            tolerances.rank = t.tol_rank.unwrap_or(tolerances.rank);
            tolerances.solve = t.tol_solve.unwrap_or(tolerances.solve);
        }
        Ok(Loaded {
            problem,
            f,
            window,
            forced: self.forced_partition_points.clone(),
            tolerances,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Validate,
    Analyze,
    Solve,
    Kernel,
    Compact,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Validate => "validate",
            Mode::Analyze => "analyze",
            Mode::Solve => "solve",
            Mode::Kernel => "kernel",
            Mode::Compact => "compact",
            Mode::Verify => "verify",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        <Mode as ValueEnum>::from_str(s, false)
            .map_err(|_| Error::InvalidArgument(format!("unknown mode '{s}'")))
    }
}

/// Command-line arguments of the `measys` binary.
#[derive(Debug, Clone, Parser)]
#[command(
    name = "measys",
    version,
    about = "Linear systems Ju' + qu = wf with measure coefficients"
)]
pub struct Args {
    #[arg(value_enum)]
    pub mode: Mode,
    /// Problem file (JSON).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Report destination; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, PartialEq, clap::Args)]
pub struct Options {
    /// Seed for the random verify instances.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of sample points for solution values.
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    #[arg(long)]
    pub tol_sing: Option<f64>,
    #[arg(long)]
    pub tol_rank: Option<f64>,
    /// Comma-separated suites: cbbc, wronskian, lift, functional, lagrange, t0.
    #[arg(long, value_delimiter = ',')]
    pub checks: Option<Vec<String>>,
    /// Number of random instances added to `verify`.
    #[arg(long, default_value_t = 0)]
    pub random: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 101,
            tol_sing: None,
            tol_rank: None,
            checks: None,
            random: 0,
        }
    }
}

impl Options {
    fn echo(&self) -> Value {
        json!({
            "seed": self.seed,
            "samples": self.samples,
            "tol_sing": self.tol_sing,
            "tol_rank": self.tol_rank,
            "checks": self.checks,
            "random": self.random,
        })
    }

    fn suites(&self) -> Result<Vec<Suite>> {
        match &self.checks {
            None => Ok(Suite::ALL.to_vec()),
            Some(names) => names.iter().map(|s| s.parse()).collect(),
        }
    }
}

/// A finished command: the report text (newline-terminated JSON) and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub exit_code: i32,
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    version: &'static str,
    input: Value,
    options: Value,
    results: Value,
    checks: Vec<Check>,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl Report {
    fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Parse(_)
        | Error::MissingRhs
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch(_)
        | Error::OutOfInterval { .. }
        | Error::EmptyWindow(..)
        | Error::NotRepresentable(_)
        | Error::WindowMismatch => EXIT_INPUT,
        _ => EXIT_FAIL,
    }
}

fn cjson(z: crate::linalg::C64) -> Value {
    json!([z.re, z.im])
}

pub fn vector_json(v: &CVec) -> Value {
    Value::Array(v.iter().map(|&z| cjson(z)).collect())
}

pub fn matrix_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| cjson(m[(i, j)])).collect()))
            .collect(),
    )
}

fn columns_json(m: &CMat) -> Value {
    Value::Array(
        m.column_iter()
            .map(|col| vector_json(&col.into_owned()))
            .collect(),
    )
}

/// `count` evenly spaced points of `window`, both ends included.
pub fn sample_grid(window: (f64, f64), count: usize) -> Vec<f64> {
    let (lo, hi) = window;
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|k| {
                if k + 1 == count {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

fn samples_json(u: &PiecewiseSolution, grid: &[f64]) -> Result<Value> {
    Ok(Value::Array(
        grid.iter()
            .map(|&x| u.sample(x).map(|v| vector_json(&v)))
            .collect::<Result<Vec<_>>>()?,
    ))
}

fn kind_name(kind: PointKind) -> &'static str {
    match kind {
        PointKind::Singular => "singular",
        PointKind::Forced => "forced",
        PointKind::Padded => "padded",
    }
}

fn partition_json(bs: &BlockSystem) -> Value {
    json!({
        "points": bs.partition.points(),
        "kinds": bs.partition.kinds().iter().map(|&k| kind_name(k)).collect::<Vec<_>>(),
        "N": bs.interior_count(),
    })
}

fn apply_overrides(loaded: &mut Loaded, opts: &Options) {
    if let Some(t) = opts.tol_sing {
        loaded.tolerances.sing = t;
    }
    if let Some(t) = opts.tol_rank {
        loaded.tolerances.rank = t;
    }
}

fn validation(loaded: &Loaded) -> Result<(Vec<Check>, bool)> {
    let report = coefficients::validate(&loaded.problem, loaded.tolerances.structure)?;
    Ok((report.checks, report.pass))
}

fn system(loaded: &Loaded) -> Result<BlockSystem> {
    blocksystem::assemble_window(
        &loaded.problem,
        loaded.window,
        &loaded.forced,
        &loaded.tolerances,
    )
}

struct Body {
    results: Value,
    checks: Vec<Check>,
    pass: bool,
}

fn cmd_validate(loaded: &Loaded) -> Result<Body> {
    let (checks, pass) = validation(loaded)?;
    Ok(Body {
        results: json!({ "n": loaded.problem.dim() }),
        checks,
        pass,
    })
}

fn cmd_analyze(loaded: &Loaded) -> Result<Body> {
    let statuses = blocksystem::classify_atoms(&loaded.problem, loaded.window, &loaded.tolerances);
    let atoms: Vec<Value> = statuses
        .iter()
        .map(|s| {
            json!({
                "x": s.x,
                "sigma_min": s.sigma_min,
                "sigma_max": s.sigma_max,
                "ratio": if s.sigma_max > 0.0 { s.sigma_min / s.sigma_max } else { 0.0 },
                "singular": s.singular,
                "borderline": s.borderline,
            })
        })
        .collect();
    let warnings: Vec<String> = statuses
        .iter()
        .filter(|s| s.borderline)
        .map(|s| format!("atom at {} is nearly singular (sigma_min/sigma_max = {:e}); it is treated as regular", s.x, s.sigma_min / s.sigma_max))
        .collect();
    let singular: Vec<f64> = statuses
        .iter()
        .filter(|s| s.singular)
        .map(|s| s.x)
        .collect();
    let bs = system(loaded)?;
    let ker = bs.kernel().ncols();
    let coker = bs.cokernel().ncols();
    Ok(Body {
        results: json!({
            "window": [loaded.window.0, loaded.window.1],
            "atoms": atoms,
            "singular_points": singular,
            "partition": partition_json(&bs),
            "dim_ker_B": ker,
            "dim_ker_B_adjoint": coker,
            "warnings": warnings,
        }),
        checks: Vec::new(),
        pass: true,
    })
}

fn cmd_solve(loaded: &Loaded, opts: &Options) -> Result<Body> {
    let f = loaded.f.as_ref().ok_or(Error::MissingRhs)?;
    let bs = system(loaded)?;
    let mv = bs.moments(f)?;
    let set = solutions::solve_system(&bs, &mv)?;
    let grid = sample_grid(loaded.window, opts.samples);
    let particular = set
        .particular
        .as_ref()
        .map(|u| samples_json(u, &grid))
        .transpose()?;
    let basis = set
        .kernel_basis
        .iter()
        .map(|u| samples_json(u, &grid))
        .collect::<Result<Vec<_>>>()?;
    let tol = bs.tolerances.solve * (1.0 + crate::linalg::vnorm(&mv.rhs));
    Ok(Body {
        results: json!({
            "partition": partition_json(&bs),
            "consistent": set.consistent,
            "residual": set.residual,
            "coefficients": vector_json(&set.coefficients),
            "grid": grid,
            "particular": particular,
            "kernel_dim": set.kernel_dim(),
            "kernel_basis": basis,
        }),
        checks: vec![Check::upper_bound(
            "solve: residual of the block system",
            set.residual,
            tol,
        )],
        pass: set.consistent,
    })
}

fn cmd_kernel(loaded: &Loaded, opts: &Options) -> Result<Body> {
    let bs = system(loaded)?;
    let vectors = bs.kernel();
    let grid = sample_grid(loaded.window, opts.samples);
    let samples = vectors
        .column_iter()
        .map(|col| samples_json(&bs.reconstruct(&col.into_owned(), None)?, &grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(Body {
        results: json!({
            "partition": partition_json(&bs),
            "dim_ker_B": vectors.ncols(),
            "basis": columns_json(&vectors),
            "grid": grid,
            "samples": samples,
        }),
        checks: vec![Check::count(
            "kernel: dim ker B >= n",
            vectors.ncols().max(bs.n()),
            vectors.ncols(),
        )],
        pass: vectors.ncols() >= bs.n(),
    })
}

fn cmd_compact(loaded: &Loaded, opts: &Options) -> Result<Body> {
    let bs = system(loaded)?;
    let compact = solutions::compact_support_solutions(&bs)?;
    let grid = sample_grid(loaded.window, opts.samples);
    let mut checks = Vec::new();
    let mut items = Vec::new();
    for (k, cs) in compact.iter().enumerate() {
        let scale = crate::linalg::fro(&bs.b).max(1.0) * (1.0 + crate::linalg::vnorm(&cs.tilde));
        checks.push(Check::upper_bound(
            format!("compact[{k}]: endpoint coefficients (relative)"),
            cs.endpoint_defect / scale,
            10.0 * bs.tolerances.rank,
        ));
        items.push(json!({
            "u_hat": vector_json(&cs.hat),
            "u_tilde": vector_json(&cs.tilde),
            "endpoint_defect": cs.endpoint_defect,
            "partition_values": Value::Array(cs.solution.partition_values()?.iter().map(vector_json).collect()),
            "samples": samples_json(&cs.solution, &grid)?,
        }));
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(Body {
        results: json!({
            "partition": partition_json(&bs),
            "dim_ker_B_adjoint": compact.len(),
            "grid": grid,
            "solutions": items,
        }),
        checks,
        pass,
    })
}

fn prefixed(label: &str, checks: Vec<Check>) -> Vec<Check> {
    checks
        .into_iter()
        .map(|mut c| {
            c.name = format!("[{label}] {}", c.name);
            c
        })
        .collect()
}

fn verify_one(
    label: &str,
    bs: Result<BlockSystem>,
    f: Option<&L2Function>,
    suites: &[Suite],
    seed: u64,
    index: usize,
) -> (Value, Vec<Check>) {
    match bs {
        Ok(bs) => {
            let mut rng = fuzz::rng_for(seed ^ 0xA5A5_A5A5_A5A5_A5A5, index);
            let checks = checks::run_suites(&bs, f, suites, &mut rng);
            let summary = json!({
                "instance": label,
                "n": bs.n(),
                "N": bs.interior_count(),
                "partition": bs.partition.points(),
                "pass": checks.iter().all(|c| c.pass),
            });
            (summary, prefixed(label, checks))
        }
        Err(e) => (
            json!({ "instance": label, "pass": false }),
            vec![Check::errored(format!("[{label}] assemble"), &e)],
        ),
    }
}

fn cmd_verify(loaded: Option<&Loaded>, opts: &Options) -> Result<Body> {
    let suites = opts.suites()?;
    let mut summaries = Vec::new();
    let mut checks = Vec::new();
    if let Some(loaded) = loaded {
        let (valid, pass) = validation(loaded)?;
        if pass {
            let (s, c) = verify_one(
                "file",
                system(loaded),
                loaded.f.as_ref(),
                &suites,
                opts.seed,
                usize::MAX,
            );
            summaries.push(s);
            checks.extend(c);
        } else {
            checks.extend(prefixed("file", valid));
            summaries.push(json!({ "instance": "file", "pass": false }));
        }
    }
    for i in 0..opts.random {
        let inst = fuzz::random_instance(opts.seed, i);
        let mut tol = Tolerances::default();
        if let Some(t) = opts.tol_sing {
            tol.sing = t;
        }
        if let Some(t) = opts.tol_rank {
            tol.rank = t;
        }
        let bs = blocksystem::assemble_window(&inst.problem, inst.window, &[], &tol);
        let (s, c) = verify_one(&format!("random {i}"), bs, None, &suites, opts.seed, i);
        summaries.push(s);
        checks.extend(c);
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(Body {
        results: json!({
            "seed": opts.seed,
            "random": opts.random,
            "suites": suites.iter().map(|s| s.name()).collect::<Vec<_>>(),
            "instances": summaries,
        }),
        checks,
        pass,
    })
}

/// Runs `mode` on the problem text `input` (absent only for `verify --random N`).
pub fn execute(mode: Mode, input: Option<&str>, opts: &Options) -> Outcome {
    let parsed = input.map(ProblemFile::from_json).transpose();
    let echo = match &parsed {
        Ok(Some(file)) => serde_json::to_value(file).unwrap_or(Value::Null),
        _ => Value::Null,
    };
    let body = (|| {
        let file = parsed?;
        let mut loaded = file.as_ref().map(ProblemFile::load).transpose()?;
        if let Some(l) = loaded.as_mut() {
            apply_overrides(l, opts);
        }
        if mode == Mode::Verify {
            if loaded.is_none() && opts.random == 0 {
                return Err(Error::InvalidArgument(
                    "verify needs --input or --random N".into(),
                ));
            }
            return cmd_verify(loaded.as_ref(), opts);
        }
        let loaded = loaded
            .ok_or_else(|| Error::InvalidArgument(format!("{} needs --input", mode.name())))?;
        if mode != Mode::Validate {
            let (checks, pass) = validation(&loaded)?;
            if !pass {
                return Ok(Body {
                    results: Value::Null,
                    checks,
                    pass,
                });
            }
        }
        match mode {
            Mode::Validate => cmd_validate(&loaded),
            Mode::Analyze => cmd_analyze(&loaded),
            Mode::Solve => cmd_solve(&loaded, opts),
            Mode::Kernel => cmd_kernel(&loaded, opts),
            Mode::Compact => cmd_compact(&loaded, opts),
            Mode::Verify => unreachable!(),
        }
    })();
    let (report, exit_code) = match body {
        Ok(b) => {
            let code = if b.pass { EXIT_PASS } else { EXIT_FAIL };
            (
                Report {
                    command: mode.name(),
                    version: VERSION,
                    input: echo,
                    options: opts.echo(),
                    results: b.results,
                    checks: b.checks,
                    pass: b.pass,
                    error: None,
                },
                code,
            )
        }
        Err(e) => (
            Report {
                command: mode.name(),
                version: VERSION,
                input: echo,
                options: opts.echo(),
                results: Value::Null,
                checks: Vec::new(),
                pass: false,
                error: Some(e.to_string()),
            },
            exit_code_for(&e),
        ),
    };
    Outcome {
        report: report.render(),
        exit_code,
    }
}

/// Entry point of the binary: reads `--input`, writes the report, returns the exit code.
pub fn run(args: &Args) -> i32 {
    let text = match &args.input {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("measys: cannot read {}: {e}", path.display());
                return EXIT_INPUT;
            }
        },
        None => None,
    };
    let outcome = execute(args.mode, text.as_deref(), &args.options);
    let written = match &args.output {
        Some(path) => std::fs::write(path, &outcome.report),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(outcome.report.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("measys: cannot write report: {e}");
        return EXIT_INPUT;
    }
    outcome.exit_code
}

#[cfg(test)]
mod tests {
    use super::*;

    const DELTA_PRIME: &str = r#"{
        "n": 2,
        "J": [[[0,0],[-1,0]],[[1,0],[0,0]]],
        "interval": [-1, 1],
        "q": {"atoms": [{"x": 0, "matrix": [[[0,0],[0,0]],[[0,0],[-2,0]]]}]},
        "w": {"density": [{"from": -1, "to": 1, "matrix": [[[1,0],[0,0]],[[0,0],[1,0]]]}]}
    }"#;

    #[test]
    fn parses_and_validates() {
        let out = execute(Mode::Validate, Some(DELTA_PRIME), &Options::default());
        assert_eq!(out.exit_code, 0, "{}", out.report);
        assert!(out.report.ends_with('\n'));
    }

    #[test]
    fn analyze_pads_regular_problem() {
        let out = execute(Mode::Analyze, Some(DELTA_PRIME), &Options::default());
        let v: Value = serde_json::from_str(&out.report).unwrap();
        assert_eq!(v["results"]["singular_points"], json!([]));
        assert_eq!(v["results"]["partition"]["N"], json!(2));
    }

    #[test]
    fn non_square_j_is_a_parse_error() {
        let text = DELTA_PRIME.replace(
            "[[[0,0],[-1,0]],[[1,0],[0,0]]]",
            "[[[0,0],[-1,0],[0,0]],[[1,0],[0,0]]]",
        );
        let out = execute(Mode::Validate, Some(&text), &Options::default());
        assert_eq!(out.exit_code, EXIT_INPUT);
        assert!(out.report.contains("J: row 0"), "{}", out.report);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = DELTA_PRIME.replacen("\"n\": 2,", "\"n\": 2, \"colour\": 1,", 1);
        let out = execute(Mode::Validate, Some(&text), &Options::default());
        assert_eq!(out.exit_code, EXIT_INPUT);
        assert!(out.report.contains("colour"));
    }

    #[test]
    fn density_must_tile_interval() {
        let text = DELTA_PRIME.replace("\"from\": -1, \"to\": 1", "\"from\": -1, \"to\": 0.5");
        let out = execute(Mode::Validate, Some(&text), &Options::default());
        assert_eq!(out.exit_code, EXIT_INPUT);
    }

    #[test]
    fn solve_without_rhs() {
        let out = execute(Mode::Solve, Some(DELTA_PRIME), &Options::default());
        assert_eq!(out.exit_code, EXIT_INPUT);
        assert!(
            out.report.contains("right-hand side") || out.report.contains("f"),
            "{}",
            out.report
        );
    }

    #[test]
    fn sample_grid_includes_ends() {
        assert_eq!(sample_grid((0.0, 1.0), 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(sample_grid((0.0, 1.0), 101).len(), 101);
    }
}
