//! The `latred` command line: generation, reductions, solvers and verification.
//!
//! Exit codes: 0 success, 2 promise violation, 3 budget exceeded, 64 usage
//! error, 65 malformed or out-of-contract data, 66 unreadable or unwritable
//! file.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::exactmath::{ExactScalar, PNorm};
use crate::gapsat::{pad_to_width3, reduce_3sat_to_2sat, PaddingReport};
use crate::lattice::{LatticeBasis, LatticeInstanceJson, SuccessiveMinima, Witness};
use crate::reductions::{
    chain_from_2sat, cvp_to_sivp, full_chain, sat_to_cvp, AlphaChoice, AlphaConfig, Chain,
    ChainParams,
};
use crate::satcore::{parse_dimacs_str, random_cnf, GapSatInstance, Promise, VariableRemap};
use crate::solvers::{decide_sivp, solve_cvp, successive_minima, EnumBudget, SivpAnswer};
use crate::verify::{check_gap_preservation, GapReport, Violation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_FILE: i32 = 66;

/// Environment variable overriding the default enumeration node cap.
pub const BUDGET_ENV: &str = "LATRED_BUDGET_NODES";

#[derive(Debug, Parser)]
#[command(
    name = "latred",
    version,
    about = "Exact workbench for the Gap-3SAT to gap-SIVP reduction chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit a random k-CNF in DIMACS format.
    Gen(GenArgs),
    /// Run one reduction step, or the whole chain.
    Reduce(ReduceArgs),
    /// Solve a lattice instance exactly.
    Solve(SolveArgs),
    /// Re-check every stage of a chain manifest.
    Verify(VerifyArgs),
    /// Reduce a CNF all the way to gap-SIVP and verify it.
    Chain(ChainArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    vars: usize,
    #[arg(long)]
    clauses: usize,
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReduceStep {
    Sat3to2,
    Sat2cvp,
    Cvp2sivp,
    Chain,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolveKind {
    Cvp,
    Sivp,
    Minima,
}

/// Gap parameters for SAT inputs. JSON inputs keep their own values unless
/// a flag is given; DIMACS inputs default to δ = 7/8, ε = 1, UNKNOWN.
#[derive(Debug, Args)]
struct GapArgs {
    #[arg(long)]
    delta: Option<ExactScalar>,
    #[arg(long)]
    epsilon: Option<ExactScalar>,
    #[arg(long)]
    promise: Option<Promise>,
    /// Pad clauses shorter than three literals with fresh variables.
    #[arg(long)]
    pad: bool,
}

#[derive(Debug, Args)]
struct AlphaArgs {
    /// Initial denominator used to round α.
    #[arg(long, default_value = "1000000")]
    denominator: ExactScalar,
    /// Allowed relative excess of the rounded α^p.
    #[arg(long, default_value = "1e-6")]
    slack: ExactScalar,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    /// Enumeration node cap; overrides LATRED_BUDGET_NODES.
    #[arg(long)]
    budget_nodes: Option<u64>,
}

#[derive(Debug, Args)]
struct ReduceArgs {
    step: ReduceStep,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Norm exponent: 1..=10 (or "inf" where supported).
    #[arg(long, default_value = "2")]
    p: PNorm,
    #[command(flatten)]
    gap: GapArgs,
    #[command(flatten)]
    alpha: AlphaArgs,
}

#[derive(Debug, Args)]
struct SolveArgs {
    kind: SolveKind,
    #[arg(long = "in")]
    input: PathBuf,
    /// Overrides the instance's own p.
    #[arg(long)]
    p: Option<PNorm>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    chain: PathBuf,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Debug, Args)]
struct ChainArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "2")]
    p: PNorm,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    gap: GapArgs,
    #[command(flatten)]
    alpha: AlphaArgs,
    #[command(flatten)]
    budget: BudgetArgs,
}

/// File names of the stages, relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFiles {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sat3: Option<String>,
    pub sat2: String,
    pub cvp: String,
    pub sivp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<String>,
}

/// Everything needed to reload and re-check a chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub source: String,
    pub alpha_config: AlphaConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remap: Option<VariableRemap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<PaddingReport>,
    pub files: ManifestFiles,
    pub params: ChainParams,
}

#[derive(Debug, Serialize)]
struct SolveReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    answer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dist_pow: Option<ExactScalar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_pows: Option<Vec<ExactScalar>>,
    witnesses: Vec<Witness>,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn file(path: &Path, err: std::io::Error) -> Self {
        Failure {
            code: EXIT_FILE,
            message: format!("{}: {err}", path.display()),
        }
    }

    fn violation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VIOLATION,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match &err {
            Error::BudgetExceeded { .. } | Error::RankTooLarge { .. } | Error::TooLarge { .. } => {
                EXIT_BUDGET
            }
            Error::Io(_) => EXIT_FILE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Runs with the process arguments and prints diagnostics to stderr.
pub fn run() -> i32 {
    run_with(std::env::args_os())
}

/// Runs with explicit arguments (the first is the program name).
pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("latred: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Reduce(a) => reduce(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Chain(a) => chain(a),
    }
}

fn budget(args: &BudgetArgs) -> CliResult<EnumBudget> {
    let mut b = EnumBudget::default();
    if let Some(n) = args.budget_nodes {
        b.max_nodes = n;
    } else if let Ok(v) = std::env::var(BUDGET_ENV) {
        b.max_nodes = v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("{BUDGET_ENV}={v:?} is not a node count")))?;
    }
    Ok(b)
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::file(path, e))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| Failure::file(path, e))
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| Failure {
        code: EXIT_DATA,
        message: format!("{}: {e}", path.display()),
    })
}

fn alpha_config(a: &AlphaArgs) -> AlphaConfig {
    AlphaConfig {
        denominator: a.denominator.clone(),
        slack: a.slack.clone(),
    }
}

/// A SAT input with whatever bookkeeping loading it produced.
struct LoadedSat {
    instance: GapSatInstance,
    remap: Option<VariableRemap>,
    padding: Option<PaddingReport>,
}

/// Reads a GapSatInstance JSON file or a DIMACS file.
fn load_sat(path: &Path, gap: &GapArgs) -> CliResult<LoadedSat> {
    let text = read(path)?;
    let (formula, delta, epsilon, promise, remap) = if text.trim_start().starts_with('{') {
        let inst: GapSatInstance = from_json(&text, path)?;
        (inst.formula, inst.delta, inst.epsilon, inst.promise, None)
    } else {
        let parsed = parse_dimacs_str(&text)?;
        let remap = (!parsed.remap.is_identity()).then_some(parsed.remap);
        (
            parsed.formula,
            ExactScalar::ratio(7, 8),
            ExactScalar::one(),
            Promise::Unknown,
            remap,
        )
    };
    let (formula, padding) = if gap.pad {
        let (f, report) = pad_to_width3(&formula)?;
        (f, Some(report))
    } else {
        (formula, None)
    };
    let instance = GapSatInstance::new(
        formula,
        gap.delta.clone().unwrap_or(delta),
        gap.epsilon.clone().unwrap_or(epsilon),
        gap.promise.unwrap_or(promise),
    )?;
    Ok(LoadedSat {
        instance,
        remap,
        padding,
    })
}

fn load_lattice(path: &Path) -> CliResult<LatticeInstanceJson> {
    from_json(&read(path)?, path)
}

fn gen(a: GenArgs) -> CliResult<()> {
    let formula = random_cnf(a.vars, a.clauses, a.width, a.seed)?;
    let text = format!(
        "c latred gen vars={} clauses={} width={} seed={}\n{}",
        a.vars,
        a.clauses,
        a.width,
        a.seed,
        formula.to_dimacs()
    );
    match &a.out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn reduce(a: ReduceArgs) -> CliResult<()> {
    match a.step {
        ReduceStep::Sat3to2 => {
            let sat = load_sat(&a.input, &a.gap)?;
            let out = reduce_3sat_to_2sat(&sat.instance)?;
            write(&a.out, &to_json(&out)?)
        }
        ReduceStep::Sat2cvp => {
            let sat = load_sat(&a.input, &a.gap)?;
            let out = sat_to_cvp(&sat.instance, a.p)?;
            write(&a.out, &to_json(&LatticeInstanceJson::from(&out))?)
        }
        ReduceStep::Cvp2sivp => {
            let cvp = load_lattice(&a.input)?.to_bounded_cvp()?;
            let (sivp, alpha) = cvp_to_sivp(&cvp, &alpha_config(&a.alpha))?;
            write(&a.out, &to_json(&LatticeInstanceJson::from(&sivp))?)?;
            print!("{}", to_json(&alpha)?);
            Ok(())
        }
        ReduceStep::Chain => {
            let (chain, manifest) = build_chain(&a.input, a.p, &a.gap, &a.alpha, &a.out, false)?;
            write_chain(&a.out, &chain, &manifest)
        }
    }
}

/// Builds the chain for `input` and a manifest naming its files next to
/// `manifest_path`. Stage files are `<stem>.<stage>.json`, or plain
/// `<stage>.json` when `plain_names` is set.
fn build_chain(
    input: &Path,
    p: PNorm,
    gap: &GapArgs,
    alpha: &AlphaArgs,
    manifest_path: &Path,
    plain_names: bool,
) -> CliResult<(Chain, Manifest)> {
    let sat = load_sat(input, gap)?;
    let config = alpha_config(alpha);
    let chain = if sat.instance.formula.width() <= 2 && !gap.pad {
        chain_from_2sat(&sat.instance, p, &config)?
    } else {
        full_chain(&sat.instance, p, &config)?
    };
    let prefix = if plain_names {
        String::new()
    } else {
        let stem = manifest_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "chain".into());
        format!("{stem}.")
    };
    let name = |stage: &str| format!("{prefix}{stage}.json");
    let manifest = Manifest {
        source: input.display().to_string(),
        alpha_config: config,
        remap: sat.remap,
        padding: sat.padding,
        files: ManifestFiles {
            sat3: chain.sat3.as_ref().map(|_| name("sat3")),
            sat2: name("sat2"),
            cvp: name("cvp"),
            sivp: name("sivp"),
            verify: None,
        },
        params: chain.params(),
    };
    Ok((chain, manifest))
}

fn sibling(manifest_path: &Path, name: &str) -> PathBuf {
    manifest_path
        .parent()
        .map_or_else(|| PathBuf::from(name), |d| d.join(name))
}

fn write_chain(manifest_path: &Path, chain: &Chain, manifest: &Manifest) -> CliResult<()> {
    let files = &manifest.files;
    if let (Some(name), Some(sat3)) = (&files.sat3, &chain.sat3) {
        write(&sibling(manifest_path, name), &to_json(sat3)?)?;
    }
    write(&sibling(manifest_path, &files.sat2), &to_json(&chain.sat2)?)?;
    write(
        &sibling(manifest_path, &files.cvp),
        &to_json(&LatticeInstanceJson::from(&chain.cvp))?,
    )?;
    write(
        &sibling(manifest_path, &files.sivp),
        &to_json(&LatticeInstanceJson::from(&chain.sivp))?,
    )?;
    write(manifest_path, &to_json(manifest)?)
}

fn solve(a: SolveArgs) -> CliResult<()> {
    let budget = budget(&a.budget)?;
    let inst = load_lattice(&a.input)?;
    let p = a.p.or(inst.p).ok_or_else(|| {
        Failure::from(Error::InvalidParameter(
            "no norm: give --p or set \"p\"".into(),
        ))
    })?;
    let report = match a.kind {
        SolveKind::Cvp => {
            let basis = inst.basis()?;
            let target = inst
                .target
                .clone()
                .ok_or_else(|| Error::InvalidParameter("instance is missing \"target\"".into()))?;
            let sol = solve_cvp(&basis, &target, p, &budget)?;
            let answer = match &inst.r_pow {
                Some(_) => {
                    let cvp = LatticeInstanceJson {
                        p: Some(p),
                        ..inst.clone()
                    }
                    .to_cvp()?;
                    Some(format!("{:?}", cvp.classify(&sol.dist_pow)).to_uppercase())
                }
                None => None,
            };
            SolveReport {
                answer,
                dist_pow: Some(sol.dist_pow),
                lambda_pows: None,
                witnesses: vec![sol.witness],
            }
        }
        SolveKind::Sivp => {
            let sivp = LatticeInstanceJson { p: Some(p), ..inst }.to_sivp()?;
            let decision = decide_sivp(&sivp, &budget)?;
            let minima = successive_minima(&sivp.basis, p, &budget)?;
            minima_report(Some(answer_name(decision)), minima)
        }
        SolveKind::Minima => {
            let basis: LatticeBasis = inst.basis()?;
            let minima = successive_minima(&basis, p, &budget)?;
            minima_report(None, minima)
        }
    };
    print!("{}", to_json(&report)?);
    Ok(())
}

fn answer_name(a: SivpAnswer) -> String {
    match a {
        SivpAnswer::Yes => "YES",
        SivpAnswer::No => "NO",
        SivpAnswer::Inconclusive => "INCONCLUSIVE",
    }
    .to_string()
}

fn minima_report(answer: Option<String>, minima: SuccessiveMinima) -> SolveReport {
    SolveReport {
        answer,
        dist_pow: None,
        lambda_pows: Some(minima.values_pow),
        witnesses: minima.witnesses,
    }
}

/// Reloads a chain from its manifest.
fn load_manifest(path: &Path) -> CliResult<(Manifest, Chain)> {
    let manifest: Manifest = from_json(&read(path)?, path)?;
    let files = &manifest.files;
    let load = |name: &str| -> CliResult<GapSatInstance> {
        let p = sibling(path, name);
        from_json(&read(&p)?, &p)
    };
    let sat3 = files.sat3.as_deref().map(load).transpose()?;
    let sat2 = load(&files.sat2)?;
    let cvp = load_lattice(&sibling(path, &files.cvp))?.to_bounded_cvp()?;
    let sivp = load_lattice(&sibling(path, &files.sivp))?.to_sivp()?;
    let params = &manifest.params;
    let alpha = AlphaChoice {
        alpha_pow_required: params.alpha_pow_required.clone(),
        alpha_rat: params.alpha_rat.clone(),
        alpha_rat_pow: params.alpha_rat_pow.clone(),
        denominator: params.alpha_denominator.clone(),
    };
    let chain = Chain::from_parts(sat3, sat2, cvp, sivp, alpha);
    Ok((manifest, chain))
}

/// Runs the gap checks and adds a violation when the recorded parameters do
/// not match the reloaded stages.
fn verify_chain(manifest: &Manifest, chain: &Chain, budget: &EnumBudget) -> CliResult<GapReport> {
    let mut report = check_gap_preservation(chain, budget)?;
    let recomputed = chain.params();
    if recomputed != manifest.params {
        report.violations.push(Violation {
            stage: "manifest".into(),
            message: "recorded parameters differ from the ones implied by the stage files".into(),
        });
    }
    Ok(report)
}

fn finish_report(report: &GapReport) -> CliResult<()> {
    if report.is_consistent() {
        Ok(())
    } else {
        let first = &report.violations[0];
        Err(Failure::violation(format!(
            "{} violation(s); first in {}: {}",
            report.violations.len(),
            first.stage,
            first.message
        )))
    }
}

fn verify(a: VerifyArgs) -> CliResult<()> {
    let budget = budget(&a.budget)?;
    let (manifest, chain) = load_manifest(&a.chain)?;
    let report = verify_chain(&manifest, &chain, &budget)?;
    let text = to_json(&report)?;
    if let Some(out) = &a.out {
        write(out, &text)?;
    }
    print!("{text}");
    finish_report(&report)
}

fn chain(a: ChainArgs) -> CliResult<()> {
    let budget = budget(&a.budget)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Failure::file(&a.out_dir, e))?;
    let manifest_path = a.out_dir.join("manifest.json");
    let (chain, mut manifest) = build_chain(&a.input, a.p, &a.gap, &a.alpha, &manifest_path, true)?;
    manifest.files.verify = Some("verify.json".into());
    write_chain(&manifest_path, &chain, &manifest)?;
    let report = verify_chain(&manifest, &chain, &budget)?;
    write(&a.out_dir.join("verify.json"), &to_json(&report)?)?;
    finish_report(&report)
}
