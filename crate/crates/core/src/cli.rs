//! Command-line front end. Every number in the input and output files is a
//! rational string such as `"3/4"`; only `export` writes decimals.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::certificate::{CoboundaryCertificate, StageSummary};
use crate::error::Error;
use crate::function::{HybridFunction, SampledFunction, StepFunction, StepPiece};
use crate::interval::{Interval, IntervalSet};
use crate::pipeline::{decompose_domain, solve_full, PipelineConfig};
use crate::rational::{DenominatorGuard, Rat};
use crate::rearrange::{partial_sums, rearrange_matrix, rearrange_zero_sum, Tier};
use crate::tower::{solve_tower, TowerMode};
use crate::verify::{apply_mutation, mutation_battery, orbit, verify_certificate, VerifyMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "coboundary", version, about = "Solve and verify f = g∘T − g with interval exchanges")]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Allowed relative growth of ‖g‖ over ‖f‖.
    #[arg(long, global = true, value_name = "RAT")]
    pub epsilon: Option<Rat>,
    /// Target sup-norm residual for the tower solver.
    #[arg(long, global = true, value_name = "RAT")]
    pub delta: Option<Rat>,
    #[arg(long, global = true)]
    pub depth_max: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Seed for the verifier's mutation self-test.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Extra slack for numeric verification and for inexact roots.
    #[arg(long, global = true, value_name = "RAT")]
    pub tolerance: Option<Rat>,
    /// Write here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Exact,
    Faithful,
}

impl From<ModeArg> for TowerMode {
    fn from(m: ModeArg) -> TowerMode {
        match m {
            ModeArg::Exact => TowerMode::Exact,
            ModeArg::Faithful => TowerMode::Faithful,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem spec and write a certificate.
    Solve { spec: PathBuf },
    /// Check a certificate; exits 1 if it does not hold.
    Verify {
        certificate: PathBuf,
        /// Also check pointwise on the sample grid, allowing --tolerance.
        #[arg(long)]
        numeric: bool,
        /// Additionally confirm that this many tampered copies are rejected.
        #[arg(long, default_value_t = 0)]
        mutations: usize,
    },
    /// Write the block decomposition of a problem spec.
    Decompose { spec: PathBuf },
    /// Run the tower solver on the whole domain and write its per-stage ledger.
    TowerTrace { spec: PathBuf },
    /// Rearrange a zero-sum vector or the rows of a zero-row-sum matrix.
    LemmaRearrange {
        /// Comma-separated entries, e.g. "2,-1,-1".
        #[arg(long, conflicts_with = "matrix")]
        vector: Option<String>,
        /// Rows separated by ';', entries by ',', e.g. "1,-1;2,-2".
        #[arg(long)]
        matrix: Option<String>,
        /// JSON file with {"vector": [...]} or {"matrix": [[...]]}.
        file: Option<PathBuf>,
    },
    /// Write the orbit of a point under a certificate's T as CSV.
    Orbit {
        certificate: PathBuf,
        #[arg(long)]
        x: Rat,
        #[arg(long, default_value_t = 16)]
        steps: usize,
    },
    /// Sample f, g and T(x) − x on an equispaced grid and write CSV.
    Export {
        certificate: PathBuf,
        #[arg(long, default_value_t = 256)]
        points: usize,
        #[arg(long, default_value_t = 12)]
        digits: usize,
    },
}

/// Sampled data, given explicitly or as samples of an affine function.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampledSpec {
    Explicit(SampledFunction),
    Affine {
        lo: Rat,
        hi: Rat,
        n: usize,
        slope: Rat,
        intercept: Rat,
    },
}

impl SampledSpec {
    pub fn build(&self) -> crate::Result<SampledFunction> {
        match self {
            SampledSpec::Explicit(s) => {
                s.validate()?;
                Ok(s.clone())
            }
            SampledSpec::Affine {
                lo,
                hi,
                n,
                slope,
                intercept,
            } => {
                if *n == 0 || lo >= hi {
                    return Err(Error::Malformed(format!(
                        "affine samples need n > 0 and lo < hi, got n = {n} on [{lo}, {hi}]"
                    )));
                }
                SampledFunction::from_fn(lo, hi, *n, slope.abs(), |t| slope * t + intercept)
            }
        }
    }
}

/// Input file for `solve`, `decompose` and `tower-trace`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    /// Union of `[lo, hi)` pairs; defaults to `[0, 1)`.
    #[serde(default)]
    pub domain: Option<Vec<(Rat, Rat)>>,
    #[serde(default)]
    pub step: Vec<StepPiece>,
    #[serde(default)]
    pub sampled: Option<SampledSpec>,
    #[serde(default)]
    pub eps: Option<Rat>,
    #[serde(default)]
    pub delta: Option<Rat>,
    #[serde(default)]
    pub mode: Option<ModeArg>,
    #[serde(default)]
    pub depth_max: Option<usize>,
}

impl ProblemSpec {
    pub fn function(&self) -> crate::Result<HybridFunction> {
        let domain = match &self.domain {
            Some(pairs) => IntervalSet::new(pairs.iter().map(|(a, b)| Interval::new(a.clone(), b.clone())).collect()),
            None => IntervalSet::unit(),
        };
        let step = StepFunction::new(self.step.clone())?;
        let sampled = self.sampled.as_ref().map(SampledSpec::build).transpose()?;
        HybridFunction::new(domain, step, sampled)
    }
}

struct Settings {
    eps: Rat,
    delta: Rat,
    cfg: PipelineConfig,
}

fn settings(opts: &GlobalOpts, spec: Option<&ProblemSpec>) -> crate::Result<Settings> {
    let pick = |flag: &Option<Rat>, file: Option<&Option<Rat>>, default: Rat| {
        flag.clone().or_else(|| file.and_then(|f| f.clone())).unwrap_or(default)
    };
    let eps = pick(&opts.epsilon, spec.map(|s| &s.eps), Rat::new(1, 10));
    let delta = pick(&opts.delta, spec.map(|s| &s.delta), Rat::new(1, 1000));
    if !eps.is_positive() || !delta.is_positive() {
        return Err(Error::Precondition(format!("ε and δ must be positive, got ε = {eps}, δ = {delta}")));
    }
    let mut cfg = PipelineConfig::default();
    if let Some(m) = opts.mode.or_else(|| spec.and_then(|s| s.mode)) {
        cfg.tower.mode = m.into();
    }
    if let Some(d) = opts.depth_max.or_else(|| spec.and_then(|s| s.depth_max)) {
        cfg.tower.depth_max = d;
    }
    if let Some(t) = &opts.tolerance {
        cfg.tolerance = t.clone();
        cfg.tower.carve.tolerance = t.clone();
    }
    cfg.tower.guard = DenominatorGuard::from_env()?;
    Ok(Settings { eps, delta, cfg })
}

/// Failure of a command: exit code plus message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e.root() {
            Error::Resource(_) | Error::SearchExhausted(_) => EXIT_RESOURCE,
            Error::Invariant(_) => EXIT_VERIFY_FAILED,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn invalid(message: String) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message,
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{what} {}: {e}", path.display())))
}

fn emit(opts: &GlobalOpts, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure {
        code: EXIT_RESOURCE,
        message: format!("write failed: {e}"),
    };
    match &opts.output {
        Some(p) => fs::write(p, text).map_err(io),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(io)?;
            out.flush().map_err(io)
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn parse_list(s: &str) -> Result<Vec<Rat>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse::<Rat>().map_err(|e| invalid(format!("bad entry {x:?}: {e}"))))
        .collect()
}

#[derive(Debug, Deserialize)]
struct RearrangeInput {
    #[serde(default)]
    vector: Option<Vec<Rat>>,
    #[serde(default)]
    matrix: Option<Vec<Vec<Rat>>>,
}

#[derive(Debug, Serialize)]
struct VectorRearrangement {
    input: Vec<Rat>,
    /// One-based positions of the input entries, in the new order.
    permutation: Vec<usize>,
    rearranged: Vec<Rat>,
    partial_sums: Vec<Rat>,
    bound: Rat,
}

#[derive(Debug, Serialize)]
struct MatrixOutput {
    input: Vec<Vec<Rat>>,
    permutations: Vec<Vec<usize>>,
    tiers: Vec<Tier>,
    column_partials: Vec<Vec<Rat>>,
    bound: Rat,
}

#[derive(Debug, Serialize)]
struct LevelTrace {
    n: usize,
    cells: usize,
    cell_measure: Rat,
    bound: Rat,
    eps_n: Rat,
}

#[derive(Debug, Serialize)]
struct TowerTrace {
    schedule: Vec<usize>,
    levels: Vec<LevelTrace>,
    stages: Vec<StageSummary>,
    shift: Rat,
    residual: Rat,
    norm_f: Rat,
    norm_g: Rat,
    converged: bool,
}

#[derive(Debug, Serialize)]
struct MutationSummary {
    tried: usize,
    rejected: usize,
    accepted: Vec<String>,
}

fn run_command(cli: &Cli) -> Result<i32, Failure> {
    let opts = &cli.opts;
    match &cli.command {
        Command::Solve { spec } => {
            let spec: ProblemSpec = read_json(spec, "problem spec")?;
            let s = settings(opts, Some(&spec))?;
            let f = spec.function()?;
            let cert = solve_full(&f, &s.eps, &s.delta, &s.cfg)?;
            emit(opts, &(cert.to_json() + "\n"))?;
            if !cert.converged {
                eprintln!(
                    "residual {} is above δ = {} after depth {}",
                    cert.residual_bound, s.delta, s.cfg.tower.depth_max
                );
                return Ok(EXIT_RESOURCE);
            }
            Ok(EXIT_OK)
        }
        Command::Verify {
            certificate,
            numeric,
            mutations,
        } => {
            let text = fs::read_to_string(certificate).map_err(|e| invalid(format!("cannot read {}: {e}", certificate.display())))?;
            let cert = CoboundaryCertificate::from_json(&text)?;
            let mode = if *numeric { VerifyMode::Numeric } else { VerifyMode::Exact };
            let tol = opts.tolerance.clone().unwrap_or_else(|| Rat::new(1, 1_000_000_000));
            let report = verify_certificate(&cert, mode, &tol)?;
            let mut out = serde_json::to_value(&report).expect("serializable");
            let mut pass = report.pass;
            if *mutations > 0 {
                let battery = mutation_battery(&cert, *mutations, opts.seed);
                let mut accepted = Vec::new();
                for m in &battery {
                    if verify_certificate(&apply_mutation(&cert, m), mode, &tol)?.pass {
                        accepted.push(format!("{m:?}"));
                    }
                }
                pass &= accepted.is_empty();
                let summary = MutationSummary {
                    tried: battery.len(),
                    rejected: battery.len() - accepted.len(),
                    accepted,
                };
                out["mutations"] = serde_json::to_value(summary).expect("serializable");
            }
            emit(opts, &to_json(&out))?;
            if !pass {
                for f in &report.identity_check.failures {
                    eprintln!("identity: {f}");
                }
                for f in &report.measure_check.failures {
                    eprintln!("measure: {f}");
                }
                if !report.norm_check.pass {
                    eprintln!("norm: ‖g‖ = {} exceeds {}", report.norm_check.norm_g, report.norm_check.bound);
                }
                return Ok(EXIT_VERIFY_FAILED);
            }
            Ok(EXIT_OK)
        }
        Command::Decompose { spec } => {
            let spec: ProblemSpec = read_json(spec, "problem spec")?;
            let s = settings(opts, Some(&spec))?;
            let dec = decompose_domain(&spec.function()?, &s.cfg)?;
            emit(opts, &to_json(&dec))?;
            Ok(EXIT_OK)
        }
        Command::TowerTrace { spec } => {
            let spec: ProblemSpec = read_json(spec, "problem spec")?;
            let s = settings(opts, Some(&spec))?;
            let f = spec.function()?;
            let sol = solve_tower(&f.domain, &f.surrogate(), &s.eps, &s.delta, &s.cfg.tower)?;
            let trace = TowerTrace {
                schedule: sol.schedule.clone(),
                levels: sol
                    .tower
                    .levels
                    .iter()
                    .map(|l| LevelTrace {
                        n: l.n,
                        cells: l.len(),
                        cell_measure: l.cell_measure.clone(),
                        bound: l.bound.clone(),
                        eps_n: l.eps_n.clone(),
                    })
                    .collect(),
                stages: sol.summaries,
                shift: sol.shift,
                residual: sol.residual,
                norm_f: sol.norm_f,
                norm_g: sol.norm_g,
                converged: sol.converged,
            };
            emit(opts, &to_json(&trace))?;
            Ok(EXIT_OK)
        }
        Command::LemmaRearrange { vector, matrix, file } => {
            let (vector, matrix) = match (vector, matrix, file) {
                (Some(v), _, _) => (Some(parse_list(v)?), None),
                (_, Some(m), _) => (None, Some(m.split(';').map(parse_list).collect::<Result<Vec<_>, _>>()?)),
                (_, _, Some(p)) => {
                    let input: RearrangeInput = read_json(p, "rearrangement input")?;
                    (input.vector, input.matrix)
                }
                _ => return Err(invalid("give --vector, --matrix or an input file".into())),
            };
            if let Some(a) = vector {
                let p = rearrange_zero_sum(&a)?;
                let rearranged = p.apply(&a);
                let out = VectorRearrangement {
                    permutation: p.one_based(),
                    partial_sums: partial_sums(&rearranged),
                    bound: a.iter().map(Rat::abs).max().unwrap_or_default(),
                    rearranged,
                    input: a,
                };
                emit(opts, &to_json(&out))?;
            } else if let Some(a) = matrix {
                let r = rearrange_matrix(&a)?;
                let out = MatrixOutput {
                    permutations: r.permutations.iter().map(|p| p.one_based()).collect(),
                    column_partials: r.column_partials(&a),
                    tiers: r.tiers.clone(),
                    bound: r.bound.clone(),
                    input: a,
                };
                emit(opts, &to_json(&out))?;
            } else {
                return Err(invalid("input file has neither \"vector\" nor \"matrix\"".into()));
            }
            Ok(EXIT_OK)
        }
        Command::Orbit { certificate, x, steps } => {
            let text = fs::read_to_string(certificate).map_err(|e| invalid(format!("cannot read {}: {e}", certificate.display())))?;
            let cert = CoboundaryCertificate::from_json(&text)?;
            let o = orbit(&cert.t, x, *steps);
            let mut csv = String::from("step,x\n");
            for (i, p) in o.points.iter().enumerate() {
                csv.push_str(&format!("{i},{p}\n"));
            }
            emit(opts, &csv)?;
            if let Some(msg) = &o.truncated {
                eprintln!("orbit truncated: {msg}");
            }
            Ok(EXIT_OK)
        }
        Command::Export {
            certificate,
            points,
            digits,
        } => {
            let text = fs::read_to_string(certificate).map_err(|e| invalid(format!("cannot read {}: {e}", certificate.display())))?;
            let cert = CoboundaryCertificate::from_json(&text)?;
            emit(opts, &export_csv(&cert, *points, *digits)?)?;
            Ok(EXIT_OK)
        }
    }
}

/// `x,f,g,displacement` on `points` equispaced points of the domain's hull,
/// keeping those inside the domain.
pub fn export_csv(cert: &CoboundaryCertificate, points: usize, digits: usize) -> crate::Result<String> {
    let f = cert.f.surrogate();
    let hull = cert.f.domain.hull().ok_or_else(|| Error::Precondition("empty domain".into()))?;
    let n = points.max(1);
    let step = hull.length() / Rat::from_int(n as i64);
    let mut csv = String::from("x,f,g,displacement\n");
    for i in 0..n {
        let x = &hull.lo + &step * Rat::from_int(i as i64);
        let (Some(fx), Some(gx), Ok(tx)) = (f.value_at(&x), cert.g.value_at(&x), cert.t.apply(&x)) else {
            continue;
        };
        csv.push_str(&format!(
            "{},{},{},{}\n",
            x.to_decimal(digits),
            fx.to_decimal(digits),
            gx.to_decimal(digits),
            (tx - &x).to_decimal(digits)
        ));
    }
    Ok(csv)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match run_command(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_spec_forms() {
        let s: ProblemSpec =
            serde_json::from_str(r#"{"step": [{"lo": "0", "hi": "1/4", "value": "3/4"}, {"lo": "1/4", "hi": "1", "value": "-1/4"}]}"#)
                .unwrap();
        let f = s.function().unwrap();
        assert!(f.is_step());
        assert_eq!(f.domain, IntervalSet::unit());

        let s: ProblemSpec =
            serde_json::from_str(r#"{"sampled": {"lo": "0", "hi": "1", "n": 8, "slope": "1", "intercept": "-1/2"}}"#).unwrap();
        let f = s.function().unwrap();
        assert_eq!(f.sampled_part.unwrap().grid.len(), 9);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::NonzeroSum(Rat::one())).code, EXIT_INVALID);
        assert_eq!(Failure::from(Error::Resource("x".into()).in_block("B0")).code, EXIT_RESOURCE);
        assert_eq!(run(["coboundary", "lemma-rearrange", "--vector", "2,-1,-1"]), EXIT_OK);
        assert_eq!(run(["coboundary", "lemma-rearrange", "--vector", "2,-1"]), EXIT_INVALID);
        assert_eq!(run(["coboundary", "frobnicate"]), EXIT_INVALID);
    }
}
