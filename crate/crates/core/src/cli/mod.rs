//! Command-line front end: argument parsing, experiment execution, result
//! rows and replay.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 bad configuration,
//! 3 budget exceeded, 4 I/O failure.

pub mod rows;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::amplify::{amplify_traced, lift_modular_density, lift_vector_density, AmplifyConfig, Crippled, WeakSolver};
use crate::analysis::{exact_divergences, monte_carlo_moments, sd_bound_check, Q};
use crate::combin::binomial;
use crate::error::{Error, Result};
use crate::groups::{make_spec, parse_ratio, GroupFamily, GroupSpec};
use crate::instances::{sample, verify, Dist, Instance, ResidueInstance, DEFAULT_ENUM_BUDGET, DEFAULT_SUBSET_BUDGET};
use crate::pke::{
    correctness_sweep, decrypt, decryption_weight, distinguisher_harness, encrypt, hybrid_sample, keygen, rank_attacker,
    shuffle_rows, Ciphertext, HybridSample, PkeKeyPair, PkeParams,
};
use crate::reductions::{ksum_to_vector, search_from_decision, vector_to_targeted, ExactDecision, ExactTargeted};
use crate::seed::{derive_seed, rng_from_seed, PathSegment};
use crate::solvers::{
    brute_force, density_subsample, gauss_kxor, kshift_rounds, kshift_solve, meet_in_the_middle, KSumSolver, SolverResult,
};
pub use rows::{ResultRow, SCHEMA_VERSION};

/// Largest number of carry vectors `reduce --kind k2v` will enumerate.
pub const MAX_CARRY_VECTORS: u64 = 1_000_000;

#[derive(Parser, Debug, Clone)]
#[command(name = "sparse-ksum", version, about = "Planted k-SUM and k-XOR experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Root seed; required by every randomized command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Enumeration / search cap.
    #[arg(long, global = true, env = "SPARSE_KSUM_BUDGET")]
    pub budget: Option<u128>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (stdout when absent).
    #[arg(short = 'o', long = "output", global = true)]
    pub output: Option<PathBuf>,
    /// Where to write result rows for single-artifact commands.
    #[arg(long, global = true)]
    pub row_out: Option<PathBuf>,
    /// Print the execution plan and exit.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Sample an instance.
    Gen(GenArgs),
    /// Run a solver on an instance.
    Solve(SolveArgs),
    /// Run one of the reductions.
    Reduce(ReduceArgs),
    /// Amplify a weak solver.
    Amplify(AmplifyArgs),
    /// Moments and divergences of the instance distributions.
    Stats(StatsArgs),
    /// The bit encryption scheme.
    Pke(PkeArgs),
    /// Re-run a result row and compare its metrics.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GenArgs {
    #[arg(long, default_value = "xor")]
    pub family: String,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub k: usize,
    /// Density as `3/4`, `0.7` or `1`; ignored when --m is given.
    #[arg(long, default_value = "1")]
    pub delta: String,
    #[arg(long, default_value_t = 2)]
    pub q: u32,
    #[arg(long)]
    pub m: Option<u32>,
    /// d0, d1 or dell:L.
    #[arg(long, default_value = "d1")]
    pub dist: String,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// brute, mitm or gauss.
    #[arg(long, default_value = "mitm")]
    pub solver: String,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceKind {
    S2d,
    K2v,
    V2t,
    Subsample,
    Kshift,
}

#[derive(Args, Debug, Clone)]
pub struct ReduceArgs {
    #[arg(long, value_enum)]
    pub kind: ReduceKind,
    /// Instance JSON; for k2v a residue instance, generated from --q/--m/--r/--k when absent.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rounds_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub round_multiplier: f64,
    #[arg(long)]
    pub target_delta: Option<f64>,
    #[arg(long)]
    pub k1: Option<usize>,
    #[arg(long)]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftKind {
    None,
    Vector,
    Modular,
}

#[derive(Args, Debug, Clone)]
pub struct AmplifyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "1/5")]
    pub gamma: String,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Multiplier on the outer round count.
    #[arg(long, default_value_t = 1.0)]
    pub rounds_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub obf_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lift_scale: f64,
    /// mitm, gauss or crippled:P (MITM failing with probability P).
    #[arg(long, default_value = "mitm")]
    pub weak: String,
    #[arg(long)]
    pub trace: bool,
    #[arg(long, value_enum, default_value = "none")]
    pub lift: LiftKind,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatsKind {
    Moments,
    Divergence,
    Sdbound,
}

#[derive(Args, Debug, Clone)]
pub struct StatsArgs {
    #[arg(value_enum)]
    pub kind: StatsKind,
    /// Comma-separated `key=value` with keys r, k, m, q; `|` separates alternatives.
    #[arg(long)]
    pub grid: String,
    #[arg(long, default_value = "xor")]
    pub family: String,
    /// Distributions for `moments`.
    #[arg(long, default_value = "d0,d1")]
    pub dist: String,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// ℓ values for `divergence` (default 0..=C(r,k)).
    #[arg(long)]
    pub ell: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct PkeArgs {
    #[command(subcommand)]
    pub action: PkeAction,
}

#[derive(Subcommand, Debug, Clone)]
pub enum PkeAction {
    Keygen {
        /// `r=..,eta=..,k=..,m=..,ell=..` (or eps=.. instead of ell).
        #[arg(long)]
        params: String,
    },
    Enc {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        bit: u8,
    },
    Dec {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        ct: PathBuf,
    },
    CorrectnessSweep {
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 64)]
        r: usize,
        #[arg(long, default_value_t = 32)]
        m: usize,
        /// Comma-separated ℓ values; defaults to the value derived from eps.
        #[arg(long)]
        ell: Option<String>,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
    },
    HybridExperiment {
        #[arg(long)]
        params: String,
        #[arg(long, default_value_t = 0)]
        from: usize,
        /// Defaults to ℓ.
        #[arg(long)]
        to: Option<usize>,
        /// sk, rank or zero.
        #[arg(long, default_value = "sk")]
        attacker: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Hand the attacker row-shuffled ciphertexts.
        #[arg(long)]
        shuffle: bool,
    },
}

#[derive(Args, Debug, Clone)]
pub struct ReplayArgs {
    /// Result row file (JSON object, JSON array or CSV).
    #[arg(long)]
    pub row: PathBuf,
}

/// Everything needed to run one command, as resolved from the arguments.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub budget: Option<u128>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub trials: Option<u64>,
    /// Parameter sets, one per result row, in output order.
    pub cells: Vec<BTreeMap<String, String>>,
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    /// A single JSON artifact (instance, key, run record).
    pub artifact: Option<String>,
    /// Short text for stdout when there is no artifact.
    pub text: Option<String>,
    /// True for commands whose main output is the rows themselves.
    pub grid: bool,
    pub failures: usize,
    pub inputs: Vec<PathBuf>,
}

struct Ctx {
    argv: Vec<String>,
    seed: Option<u64>,
    budget: Option<u128>,
}

impl Ctx {
    fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("this command is randomized and needs --seed".into()))
    }

    fn enum_budget(&self) -> u128 {
        self.budget.unwrap_or(DEFAULT_ENUM_BUDGET)
    }

    fn subset_budget(&self) -> u128 {
        self.budget.unwrap_or(DEFAULT_SUBSET_BUDGET)
    }

    fn row(&self) -> ResultRow {
        ResultRow::new(&self.argv, self.seed)
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } | Error::Intractable(_) => 3,
        Error::Io(_) => 4,
        _ => 2,
    }
}

/// Parses `args` (program name first), runs, writes outputs and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let raw: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(&cli, &raw) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Drops output-only flags so the remaining arguments reproduce the run,
/// and pins the effective budget.
fn replay_argv(raw: &[String], budget: Option<u128>) -> Vec<String> {
    const WITH_VALUE: [&str; 6] = ["-o", "--output", "--row-out", "--format", "--threads", "--budget"];
    let mut out = Vec::new();
    let mut skip = false;
    for a in raw {
        if skip {
            skip = false;
            continue;
        }
        if WITH_VALUE.contains(&a.as_str()) {
            skip = true;
            continue;
        }
        if a == "--dry-run" || WITH_VALUE.iter().any(|f| f.starts_with("--") && a.starts_with(&format!("{f}="))) {
            continue;
        }
        if a.starts_with("-o") && a.len() > 2 && !a.starts_with("--") {
            continue;
        }
        out.push(a.clone());
    }
    if let Some(b) = budget {
        out.push("--budget".into());
        out.push(b.to_string());
    }
    out
}

fn default_format(cmd: &Command) -> Format {
    match cmd {
        Command::Stats(_) => Format::Csv,
        Command::Pke(PkeArgs { action: PkeAction::CorrectnessSweep { .. } | PkeAction::HybridExperiment { .. } }) => Format::Csv,
        _ => Format::Json,
    }
}

/// Runs a parsed command line and writes its outputs.
pub fn run(cli: &Cli, raw: &[String]) -> Result<i32> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let format = g.format.unwrap_or_else(|| default_format(&cli.command));
    let ctx = Ctx { argv: replay_argv(raw, g.budget), seed: g.seed, budget: g.budget };
    if g.dry_run {
        let plan = plan(cli, &ctx, format)?;
        println!("{}", serde_json::to_string_pretty(&plan)?);
        return Ok(0);
    }
    let out = execute(&cli.command, &ctx)?;
    for p in [&g.output, &g.row_out].into_iter().flatten() {
        if out.inputs.iter().any(|i| same_file(i, p)) {
            return Err(Error::Config(format!("refusing to overwrite input file {}", p.display())));
        }
    }
    let rows_text = || -> Result<String> {
        Ok(match format {
            Format::Csv => rows::rows_to_csv(&out.rows)?,
            Format::Json => serde_json::to_string_pretty(&out.rows)? + "\n",
        })
    };
    if out.grid {
        emit(g.output.as_deref(), &rows_text()?)?;
    } else {
        match (&out.artifact, &out.text) {
            (Some(a), _) => emit(g.output.as_deref(), a)?,
            (None, Some(t)) => emit(g.output.as_deref(), &format!("{t}\n"))?,
            (None, None) => {}
        }
        if let Some(p) = &g.row_out {
            rows::write_atomic(p, &rows_text()?)?;
        }
    }
    if out.failures > 0 {
        eprintln!("{} check(s) failed", out.failures);
        return Ok(1);
    }
    Ok(0)
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => rows::write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Gen(_) => "gen",
        Command::Solve(_) => "solve",
        Command::Reduce(_) => "reduce",
        Command::Amplify(_) => "amplify",
        Command::Stats(_) => "stats",
        Command::Pke(_) => "pke",
        Command::Replay(_) => "replay",
    }
}

fn plan(cli: &Cli, ctx: &Ctx, format: Format) -> Result<ExperimentConfig> {
    let (cells, trials) = match &cli.command {
        Command::Stats(a) => (stats_cells(a)?.into_iter().map(|c| c.params).collect(), Some(a.trials)),
        Command::Pke(PkeArgs { action: PkeAction::CorrectnessSweep { eta, k, eps, r, m, ell, trials } }) => {
            let cells = sweep_params(*eta, *k, *eps, *r, *m, ell.as_deref())?.iter().map(pke_params_map).collect();
            (cells, Some(*trials))
        }
        Command::Pke(PkeArgs { action: PkeAction::HybridExperiment { trials, .. } }) => (vec![BTreeMap::new()], Some(*trials)),
        _ => (vec![BTreeMap::new()], None),
    };
    if let (Some(t), n) = (trials, cells.len()) {
        let need = t as u128 * n as u128;
        if need > ctx.enum_budget() {
            return Err(Error::BudgetExceeded { needed: need, budget: ctx.enum_budget() });
        }
    }
    Ok(ExperimentConfig {
        command: command_name(&cli.command).into(),
        argv: ctx.argv.clone(),
        seed: ctx.seed,
        budget: ctx.budget,
        threads: cli.global.threads,
        output: cli.global.output.clone(),
        format,
        trials,
        cells,
    })
}

fn execute(cmd: &Command, ctx: &Ctx) -> Result<RunOutput> {
    match cmd {
        Command::Gen(a) => gen(a, ctx),
        Command::Solve(a) => solve(a, ctx),
        Command::Reduce(a) => reduce(a, ctx),
        Command::Amplify(a) => amplify_cmd(a, ctx),
        Command::Stats(a) => stats(a, ctx),
        Command::Pke(a) => pke(a, ctx),
        Command::Replay(a) => replay(a),
    }
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<(T, String)> {
    let text = std::fs::read_to_string(path)?;
    let value = serde_json::from_str(&text)?;
    Ok((value, sha256_hex(&text)))
}

fn pretty<T: Serialize>(x: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(x)? + "\n")
}

fn parse_dist(s: &str) -> Result<Dist> {
    match s.trim().to_ascii_lowercase().as_str() {
        "d0" => Ok(Dist::D0),
        "d1" => Ok(Dist::D1),
        other => match other.strip_prefix("dell:") {
            Some(l) => Ok(Dist::DEll(l.parse().map_err(|_| Error::Config(format!("bad ℓ in {s:?}")))?)),
            None => Err(Error::Config(format!("unknown distribution {s:?}; use d0, d1 or dell:L"))),
        },
    }
}

fn dist_label(d: Dist) -> String {
    match d {
        Dist::D0 => "d0".into(),
        Dist::D1 => "d1".into(),
        Dist::DEll(l) => format!("dell:{l}"),
    }
}

fn join(idx: &[usize]) -> String {
    idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn ratio_str(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn ratio_f64(x: &Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

fn gen(a: &GenArgs, ctx: &Ctx) -> Result<RunOutput> {
    let seed = ctx.seed()?;
    let family: GroupFamily = a.family.parse()?;
    let spec = match a.m {
        Some(m) => GroupSpec::new(family, m, a.q)?,
        None => make_spec(a.r, a.k, parse_ratio(&a.delta)?, family, a.q)?,
    };
    let dist = parse_dist(&a.dist)?;
    let inst = sample(&spec, a.r, a.k, dist, seed, ctx.subset_budget())?;
    let artifact = pretty(&inst)?;
    let mut row = ctx
        .row()
        .param("family", spec.family)
        .param("r", a.r)
        .param("k", a.k)
        .param("m", spec.m)
        .param("q", spec.q)
        .param("dist", dist_label(dist));
    row.metric("density", format!("{:.6}", spec.density(a.r, a.k)));
    row.metric("planted", inst.planted.as_ref().map(|p| join(p.indices())).unwrap_or_default());
    row.metric("instance_sha256", sha256_hex(&artifact));
    Ok(RunOutput { rows: vec![row], artifact: Some(artifact), ..Default::default() })
}

fn mitm_solver(budget: u128) -> impl Fn(&Instance, u64) -> SolverResult + Sync {
    move |inst: &Instance, _seed: u64| meet_in_the_middle(inst, budget).expect("meet-in-the-middle budget")
}

fn solver_outcome_metrics(row: &mut ResultRow, inst: &Instance, res: &SolverResult) -> Result<usize> {
    let verified = match res.solution() {
        Some(s) => verify(inst, s)?,
        None => false,
    };
    row.metric("found", res.outcome.is_found());
    row.metric("solution", res.solution().map(|s| join(s.indices())).unwrap_or_default());
    row.metric("verified", verified);
    row.metric("subsets_examined", res.subsets_examined);
    row.metric("time_nanos", res.wall_nanos);
    if let Some(p) = &inst.planted {
        row.metric("planted_recovered", res.solution() == Some(p));
    }
    Ok(usize::from(res.outcome.is_found() && !verified))
}

fn solve(a: &SolveArgs, ctx: &Ctx) -> Result<RunOutput> {
    let (inst, hash): (Instance, String) = read_json(&a.input)?;
    let res = match a.solver.as_str() {
        "brute" => brute_force(&inst, ctx.subset_budget())?,
        "mitm" => meet_in_the_middle(&inst, ctx.subset_budget())?,
        "gauss" => gauss_kxor(&inst, ctx.seed()?, ctx.subset_budget())?,
        other => return Err(Error::Config(format!("unknown solver {other:?}; use brute, mitm or gauss"))),
    };
    let mut row = ctx.row().param("solver", &a.solver).param("input_sha256", hash);
    let failures = solver_outcome_metrics(&mut row, &inst, &res)?;
    Ok(RunOutput { rows: vec![row], artifact: Some(pretty(&res)?), failures, inputs: vec![a.input.clone()], ..Default::default() })
}

#[derive(Serialize)]
struct CarryReport {
    q: u32,
    m: u32,
    k: usize,
    candidates: u64,
    planted: Option<Vec<usize>>,
    /// Carry vectors whose instance has the planted set as a solution.
    hits: Vec<Vec<u32>>,
}

fn reduce(a: &ReduceArgs, ctx: &Ctx) -> Result<RunOutput> {
    let seed = ctx.seed()?;
    let need = |name: &str| Error::Config(format!("--kind {:?} needs --{name}", a.kind));
    if a.kind == ReduceKind::K2v {
        let (q, m) = (a.q.ok_or(need("q"))?, a.m.ok_or(need("m"))?);
        let (inst, hash, inputs) = match &a.input {
            Some(p) => {
                let (inst, h): (ResidueInstance, String) = read_json(p)?;
                (inst, h, vec![p.clone()])
            }
            None => {
                let (r, k) = (a.r.ok_or(need("r"))?, a.k.ok_or(need("k"))?);
                let modulus = (q as u64).checked_pow(m).ok_or_else(|| Error::Config(format!("{q}^{m} overflows")))?;
                let inst = ResidueInstance::planted(modulus, r, k, &mut rng_from_seed(seed));
                (inst, String::new(), vec![])
            }
        };
        let total = (inst.k as u64).checked_pow(m).unwrap_or(u64::MAX);
        if total > MAX_CARRY_VECTORS {
            return Err(Error::BudgetExceeded { needed: total as u128, budget: MAX_CARRY_VECTORS as u128 });
        }
        let planted = inst.planted.as_ref().map(|p| p.indices().to_vec());
        let mut hits = Vec::new();
        for (v, y) in ksum_to_vector(&inst, q, m)? {
            if planted.as_ref().is_some_and(|p| y.sums_to_zero(p)) {
                hits.push(v);
            }
        }
        let mut row = ctx.row().param("kind", "k2v").param("q", q).param("m", m).param("input_sha256", hash);
        row.metric("candidates", total);
        row.metric("planted_hits", hits.len());
        let failures = usize::from(planted.is_some() && hits.is_empty());
        let report = CarryReport { q, m, k: inst.k, candidates: total, planted, hits };
        return Ok(RunOutput { rows: vec![row], artifact: Some(pretty(&report)?), failures, inputs, ..Default::default() });
    }
    let path = a.input.as_ref().ok_or(need("in"))?;
    let (inst, hash): (Instance, String) = read_json(path)?;
    let mut row = ctx.row().param("input_sha256", hash);
    let mitm = mitm_solver(ctx.subset_budget());
    let (artifact, failures) = match a.kind {
        ReduceKind::S2d => {
            let oracle = ExactDecision { budget: ctx.subset_budget() };
            let run = search_from_decision(&inst, &oracle, a.gamma, a.rounds_scale, seed);
            row = row.param("kind", "s2d").param("gamma", a.gamma).param("rounds_scale", a.rounds_scale);
            row.metric("rounds", run.state.rounds_completed);
            row.metric("yes_answers", run.answers.iter().filter(|&&b| b).count());
            let f = solver_outcome_metrics(&mut row, &inst, &run.result)?;
            (pretty(&run)?, f)
        }
        ReduceKind::V2t => {
            let run = vector_to_targeted(&inst, &ExactTargeted, a.round_multiplier, seed);
            row = row.param("kind", "v2t").param("round_multiplier", a.round_multiplier);
            row.metric("answer", run.answer);
            row.metric("rounds_used", run.rounds_used);
            (pretty(&run)?, 0)
        }
        ReduceKind::Subsample => {
            let delta = a.target_delta.ok_or(need("target-delta"))?;
            let res = density_subsample(&inst, delta, &mitm, seed)?;
            row = row.param("kind", "subsample").param("target_delta", delta);
            let f = solver_outcome_metrics(&mut row, &inst, &res)?;
            (pretty(&res)?, f)
        }
        ReduceKind::Kshift => {
            let k1 = a.k1.ok_or(need("k1"))?;
            let rounds = a.rounds.unwrap_or_else(|| kshift_rounds(inst.r(), k1, inst.k).min(10_000) as u64);
            let res = kshift_solve(&inst, k1, &mitm, rounds, seed)?;
            row = row.param("kind", "kshift").param("k1", k1).param("rounds", rounds);
            let f = solver_outcome_metrics(&mut row, &inst, &res)?;
            (pretty(&res)?, f)
        }
        ReduceKind::K2v => unreachable!(),
    };
    Ok(RunOutput { rows: vec![row], artifact: Some(artifact), failures, inputs: vec![path.clone()], ..Default::default() })
}

fn amplify_cmd(a: &AmplifyArgs, ctx: &Ctx) -> Result<RunOutput> {
    let seed = ctx.seed()?;
    let (inst, hash): (Instance, String) = read_json(&a.input)?;
    let gamma = parse_ratio(&a.gamma)?;
    let mut cfg = AmplifyConfig::new(inst.r(), inst.k, gamma)?;
    if let Some(alpha) = a.alpha {
        cfg = cfg.with_alpha(inst.r(), alpha);
    }
    let cfg = cfg.scaled(a.obf_scale, a.rounds_scale, a.lift_scale);
    let budget = ctx.subset_budget();
    let mitm = mitm_solver(budget);
    let gauss = move |i: &Instance, s: u64| {
        gauss_kxor(i, s, budget).unwrap_or_else(|_| SolverResult::not_found(0, std::time::Instant::now()))
    };
    let crippled;
    let inner: &dyn KSumSolver = match a.weak.as_str() {
        "mitm" => &mitm,
        "gauss" => &gauss,
        w => match w.strip_prefix("crippled:").map(str::parse::<f64>) {
            Some(Ok(p)) if (0.0..=1.0).contains(&p) => {
                crippled = Crippled { inner: mitm_solver(budget), fail_prob: p };
                &crippled
            }
            _ => return Err(Error::Config(format!("unknown weak solver {w:?}; use mitm, gauss or crippled:P"))),
        },
    };
    let weak = WeakSolver::new(inner, *gamma.numer() as f64 / *gamma.denom() as f64);
    let mut row = ctx
        .row()
        .param("input_sha256", hash)
        .param("gamma", gamma)
        .param("weak", &a.weak)
        .param("rounds_scale", a.rounds_scale)
        .param("obf_scale", a.obf_scale)
        .param("lift", format!("{:?}", a.lift).to_lowercase());
    row.metric("alpha", format!("{:.6}", cfg.alpha));
    row.metric("obf_rounds", cfg.obf_rounds);
    row.metric("walk_steps", cfg.walk_steps);
    row.metric("outer_rounds", cfg.outer_rounds);
    row.metric("lift_rounds", cfg.lift_rounds);
    let (artifact, res) = match a.lift {
        LiftKind::None => {
            let run = amplify_traced(&inst, &weak, &cfg, seed, a.trace);
            row.metric("rounds_used", run.rounds_used);
            row.metric("in_general_regime", run.in_general_regime);
            (pretty(&run)?, run.result)
        }
        LiftKind::Vector | LiftKind::Modular => {
            let amp = |i: &Instance, s: u64| crate::amplify::amplify(i, &weak, &cfg, s);
            let res = if a.lift == LiftKind::Vector {
                lift_vector_density(&inst, &amp, &cfg, seed)?
            } else {
                lift_modular_density(&inst, &amp, &cfg, seed)?
            };
            (pretty(&res)?, res)
        }
    };
    let failures = solver_outcome_metrics(&mut row, &inst, &res)?;
    Ok(RunOutput { rows: vec![row], artifact: Some(artifact), failures, inputs: vec![a.input.clone()], ..Default::default() })
}

struct StatsCell {
    spec: GroupSpec,
    r: usize,
    k: usize,
    dist: Option<Dist>,
    ell: Option<u64>,
    params: BTreeMap<String, String>,
}

fn parse_grid(grid: &str) -> Result<Vec<BTreeMap<String, u64>>> {
    let mut axes: Vec<(String, Vec<u64>)> = Vec::new();
    for part in grid.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, vals) = part.split_once('=').ok_or_else(|| Error::Config(format!("bad grid entry {part:?}")))?;
        let key = key.trim().to_string();
        if !["r", "k", "m", "q"].contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown grid key {key:?}; use r, k, m, q")));
        }
        let vals = vals
            .split('|')
            .map(|v| v.trim().parse::<u64>().map_err(|_| Error::Config(format!("bad grid value {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        axes.push((key, vals));
    }
    for key in ["r", "k", "m"] {
        if !axes.iter().any(|(k, _)| k == key) {
            return Err(Error::Config(format!("grid needs {key}")));
        }
    }
    let mut cells = vec![BTreeMap::new()];
    for (key, vals) in &axes {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                vals.iter().map(move |&v| {
                    let mut c = c.clone();
                    c.insert(key.clone(), v);
                    c
                })
            })
            .collect();
    }
    let order = |c: &BTreeMap<String, u64>| (c["r"], c["k"], c["m"], c.get("q").copied().unwrap_or(2));
    cells.sort_by_key(order);
    cells.dedup();
    Ok(cells)
}

fn stats_cells(a: &StatsArgs) -> Result<Vec<StatsCell>> {
    let family: GroupFamily = a.family.parse()?;
    let mut out = Vec::new();
    for g in parse_grid(&a.grid)? {
        let (r, k, m, q) = (g["r"] as usize, g["k"] as usize, g["m"] as u32, g.get("q").copied().unwrap_or(2) as u32);
        let spec = GroupSpec::new(family, m, q)?;
        let base: BTreeMap<String, String> = [
            ("family".to_string(), spec.family.to_string()),
            ("r".into(), r.to_string()),
            ("k".into(), k.to_string()),
            ("m".into(), m.to_string()),
            ("q".into(), spec.q.to_string()),
        ]
        .into_iter()
        .collect();
        let cell = |dist: Option<Dist>, ell: Option<u64>| {
            let mut params = base.clone();
            if let Some(d) = dist {
                params.insert("dist".into(), dist_label(d));
            }
            if let Some(l) = ell {
                params.insert("ell".into(), l.to_string());
            }
            StatsCell { spec, r, k, dist, ell, params }
        };
        match a.kind {
            StatsKind::Moments => {
                for d in a.dist.split(',') {
                    let d = parse_dist(d)?;
                    if matches!(d, Dist::DEll(_)) {
                        return Err(Error::Config("moments are defined for d0 and d1".into()));
                    }
                    out.push(cell(Some(d), None));
                }
            }
            StatsKind::Divergence => {
                let ells: Vec<u64> = match &a.ell {
                    Some(s) => s
                        .split(',')
                        .map(|v| v.trim().parse().map_err(|_| Error::Config(format!("bad ℓ {v:?}"))))
                        .collect::<Result<_>>()?,
                    None => (0..=binomial(r as u64, k as u64) as u64).collect(),
                };
                for l in ells {
                    out.push(cell(None, Some(l)));
                }
            }
            StatsKind::Sdbound => out.push(cell(None, None)),
        }
    }
    Ok(out)
}

fn cell_seed(root: u64, kind: &str, params: &BTreeMap<String, String>) -> u64 {
    let key = params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",");
    derive_seed(root, &[PathSegment::Label("stats"), PathSegment::Label(kind), PathSegment::Label(&key)])
}

fn stats(a: &StatsArgs, ctx: &Ctx) -> Result<RunOutput> {
    let cells = stats_cells(a)?;
    if a.kind == StatsKind::Moments {
        let need = a.trials as u128 * cells.len() as u128;
        if need > ctx.enum_budget() {
            return Err(Error::BudgetExceeded { needed: need, budget: ctx.enum_budget() });
        }
    }
    let root = if a.kind == StatsKind::Moments { Some(ctx.seed()?) } else { None };
    let mut rows = Vec::new();
    let mut failures = 0;
    for c in &cells {
        let mut row = ResultRow::new(&ctx.argv, ctx.seed);
        row.params = c.params.clone();
        let pass = match a.kind {
            StatsKind::Moments => {
                let dist = c.dist.expect("moments cell has a distribution");
                let seed = cell_seed(root.unwrap(), "moments", &c.params);
                let rep = monte_carlo_moments(&c.spec, c.r, c.k, dist, a.trials, seed)?;
                row.metric("trials", a.trials);
                row.metric("cell_seed", seed);
                row.metric("mean_exact", ratio_str(&rep.mean));
                row.metric("mean_empirical", format!("{:.6}", rep.empirical_mean));
                row.metric("z_mean", format!("{:.4}", rep.z_mean));
                row.metric("var_exact", ratio_str(&rep.variance));
                row.metric("var_is_bound", rep.variance_is_bound);
                row.metric("var_empirical", format!("{:.6}", rep.empirical_variance));
                if !rep.variance_is_bound {
                    row.metric("z_var", format!("{:.4}", rep.z_variance));
                }
                let var_ok = if rep.variance_is_bound {
                    rep.empirical_variance <= 1.5 * ratio_f64(&rep.variance)
                } else {
                    rep.z_variance.abs() <= 4.0
                };
                rep.z_mean.abs() <= 4.0 && var_ok
            }
            StatsKind::Divergence => {
                let ell = c.ell.expect("divergence cell has ℓ");
                let rep = exact_divergences(&c.spec, c.r, c.k, ell, ctx.enum_budget())?;
                row.metric("sd_exact", ratio_str(&rep.sd_dell_d1));
                row.metric("sd_bound", ratio_str(&rep.pr_d1_above));
                row.metric("sd_product", ratio_str(&rep.sd_product));
                row.metric("sd_product_equal", rep.sd_dell_d1 == rep.sd_product);
                row.metric("renyi_exact", ratio_str(&rep.renyi_dell_d0));
                row.metric("renyi_formula", ratio_str(&rep.renyi_formula));
                row.metric("ell_attained", rep.ell_attained);
                let renyi_ok = if rep.ell_attained {
                    rep.renyi_dell_d0 == rep.renyi_formula
                } else {
                    rep.renyi_dell_d0 <= rep.renyi_formula
                };
                rep.sd_dell_d1 <= rep.pr_d1_above && renyi_ok
            }
            StatsKind::Sdbound => {
                let rep = sd_bound_check(&c.spec, c.r, c.k, ctx.enum_budget())?;
                row.metric("sd_exact", ratio_str(&rep.sd));
                row.metric("pr_d0_zero", ratio_str(&rep.pr_d0_zero));
                row.metric("bound", ratio_str(&rep.bound));
                row.metric("sd_f64", format!("{:.6}", ratio_f64(&rep.sd)));
                row.metric("bound_f64", format!("{:.6}", ratio_f64(&rep.bound)));
                rep.bound_holds
            }
        };
        row.metric("pass", pass);
        failures += usize::from(!pass);
        rows.push(row);
    }
    Ok(RunOutput { rows, grid: true, failures, ..Default::default() })
}

#[derive(Serialize, Deserialize)]
struct KeyFile {
    params: PkeParams,
    key: PkeKeyPair,
}

#[derive(Serialize, Deserialize)]
struct CiphertextFile {
    params: PkeParams,
    ciphertext: Ciphertext,
}

fn pke_params_map(p: &PkeParams) -> BTreeMap<String, String> {
    [
        ("r".to_string(), p.r.to_string()),
        ("eta".into(), p.eta.to_string()),
        ("k".into(), p.k.to_string()),
        ("m".into(), p.m.to_string()),
        ("ell".into(), p.ell.to_string()),
    ]
    .into_iter()
    .collect()
}

fn sweep_params(eta: f64, k: usize, eps: f64, r: usize, m: usize, ell: Option<&str>) -> Result<Vec<PkeParams>> {
    match ell {
        None => Ok(vec![PkeParams::for_target(r, eta, k, m, eps)?]),
        Some(list) => list
            .split(',')
            .map(|v| {
                let l = v.trim().parse().map_err(|_| Error::Config(format!("bad ℓ {v:?}")))?;
                PkeParams::new(r, eta, k, m, l)
            })
            .collect(),
    }
}

fn pke(a: &PkeArgs, ctx: &Ctx) -> Result<RunOutput> {
    match &a.action {
        PkeAction::Keygen { params } => {
            let params = PkeParams::parse(params)?;
            let key = keygen(&params, ctx.seed()?)?;
            let artifact = pretty(&KeyFile { params, key })?;
            let mut row = ctx.row();
            row.params = pke_params_map(&params);
            row.metric("key_sha256", sha256_hex(&artifact));
            Ok(RunOutput { rows: vec![row], artifact: Some(artifact), ..Default::default() })
        }
        PkeAction::Enc { key, bit } => {
            if *bit > 1 {
                return Err(Error::Config(format!("bit must be 0 or 1, got {bit}")));
            }
            let (kf, hash): (KeyFile, String) = read_json(key)?;
            let ct = encrypt(&kf.key.pk, *bit == 1, &kf.params, ctx.seed()?)?;
            let artifact = pretty(&CiphertextFile { params: kf.params, ciphertext: ct })?;
            let mut row = ctx.row().param("key_sha256", hash).param("bit", bit);
            row.metric("ciphertext_sha256", sha256_hex(&artifact));
            Ok(RunOutput { rows: vec![row], artifact: Some(artifact), inputs: vec![key.clone()], ..Default::default() })
        }
        PkeAction::Dec { key, ct } => {
            let (kf, kh): (KeyFile, String) = read_json(key)?;
            let (cf, ch): (CiphertextFile, String) = read_json(ct)?;
            let bit = decrypt(&kf.key.sk, &cf.ciphertext, &kf.params)?;
            let mut row = ctx.row().param("key_sha256", kh).param("ciphertext_sha256", ch);
            row.metric("weight", decryption_weight(&kf.key.sk, &cf.ciphertext.c));
            row.metric("bit", u8::from(bit));
            Ok(RunOutput {
                rows: vec![row],
                text: Some(u8::from(bit).to_string()),
                inputs: vec![key.clone(), ct.clone()],
                ..Default::default()
            })
        }
        PkeAction::CorrectnessSweep { eta, k, eps, r, m, ell, trials } => {
            let seed = ctx.seed()?;
            let mut rows = Vec::new();
            let mut failures = 0;
            for params in sweep_params(*eta, *k, *eps, *r, *m, ell.as_deref())? {
                let rep = correctness_sweep(&params, *trials, derive_seed(seed, &["sweep".into(), (params.ell as u64).into()]))?;
                let mut row = ResultRow::new(&ctx.argv, ctx.seed);
                row.params = pke_params_map(&params);
                row.params.insert("eps".into(), eps.to_string());
                row.metric("trials", trials);
                row.metric("errors_0", rep.errors_0);
                row.metric("errors_1", rep.errors_1);
                row.metric("error_rate_0", format!("{:.6}", rep.error_rate_0));
                row.metric("error_rate_1", format!("{:.6}", rep.error_rate_1));
                row.metric("bound", format!("{:.6}", rep.bound));
                let slack = 2.0 * rep.bound + 3.0 * (rep.bound * (1.0 - rep.bound) / *trials as f64).sqrt();
                let pass = rep.error_rate_0 <= slack && rep.error_rate_1 <= slack;
                row.metric("pass", pass);
                failures += usize::from(!pass);
                rows.push(row);
            }
            Ok(RunOutput { rows, grid: true, failures, ..Default::default() })
        }
        PkeAction::HybridExperiment { params, from, to, attacker, trials, shuffle } => {
            let seed = ctx.seed()?;
            let params = PkeParams::parse(params)?;
            let to = to.unwrap_or(params.ell);
            let view = |h: HybridSample, s: u64| if *shuffle { HybridSample { c: shuffle_rows(&h.c, s), ..h } } else { h };
            let side = |i: usize| {
                move |s: u64| hybrid_sample(i, true, &params, s).map(|h| view(h, s ^ 0x5eed)).expect("hybrid parameters")
            };
            let adv = match attacker.as_str() {
                "sk" => distinguisher_harness(
                    side(*from),
                    side(to),
                    |h: &HybridSample| decryption_weight(h.sk.as_ref().unwrap(), &h.c) as f64 <= params.threshold(),
                    *trials,
                    seed,
                )?,
                "rank" => distinguisher_harness(side(*from), side(to), |h: &HybridSample| rank_attacker(&h.pk, &h.c), *trials, seed)?,
                "zero" => distinguisher_harness(side(*from), side(to), |_: &HybridSample| false, *trials, seed)?,
                other => return Err(Error::Config(format!("unknown attacker {other:?}; use sk, rank or zero"))),
            };
            let mut row = ResultRow::new(&ctx.argv, ctx.seed);
            row.params = pke_params_map(&params);
            row.params.insert("from".into(), from.to_string());
            row.params.insert("to".into(), to.to_string());
            row.params.insert("attacker".into(), attacker.clone());
            row.metric("trials", trials);
            row.metric("ones_from", adv.ones_a);
            row.metric("ones_to", adv.ones_b);
            row.metric("advantage", format!("{:.6}", adv.advantage));
            row.metric("ci_low", format!("{:.6}", adv.ci.0));
            row.metric("ci_high", format!("{:.6}", adv.ci.1));
            Ok(RunOutput { rows: vec![row], grid: true, ..Default::default() })
        }
    }
}

/// Result of comparing one stored row with its recomputation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplayCheck {
    pub params: BTreeMap<String, String>,
    pub matched: bool,
    /// (metric, stored, recomputed) for every difference.
    pub differences: Vec<(String, String, String)>,
}

/// Re-runs the command recorded in each row and compares metrics.
pub fn replay_rows(stored: &[ResultRow]) -> Result<Vec<ReplayCheck>> {
    let mut out = Vec::new();
    let mut cache: BTreeMap<Vec<String>, Vec<ResultRow>> = BTreeMap::new();
    for row in stored {
        if row.schema_version != SCHEMA_VERSION {
            return Err(Error::VersionMismatch { found: row.schema_version, expected: SCHEMA_VERSION });
        }
        if !cache.contains_key(&row.argv) {
            let argv: Vec<String> = std::iter::once("sparse-ksum".to_string()).chain(row.argv.iter().cloned()).collect();
            let cli = Cli::try_parse_from(&argv).map_err(|e| Error::Config(format!("row arguments do not parse: {e}")))?;
            if matches!(cli.command, Command::Replay(_)) {
                return Err(Error::Config("cannot replay a replay".into()));
            }
            let ctx = Ctx { argv: row.argv.clone(), seed: cli.global.seed, budget: cli.global.budget };
            cache.insert(row.argv.clone(), execute(&cli.command, &ctx)?.rows);
        }
        let fresh = cache[&row.argv].iter().find(|r| r.params == row.params);
        let check = match fresh {
            None => ReplayCheck { params: row.params.clone(), matched: false, differences: vec![] },
            Some(f) => {
                let (a, b) = (row.stable_metrics(), f.stable_metrics());
                let keys: std::collections::BTreeSet<&str> = a.keys().chain(b.keys()).copied().collect();
                let differences: Vec<(String, String, String)> = keys
                    .into_iter()
                    .filter(|k| a.get(k) != b.get(k))
                    .map(|k| (k.to_string(), a.get(k).unwrap_or(&"").to_string(), b.get(k).unwrap_or(&"").to_string()))
                    .collect();
                ReplayCheck { params: row.params.clone(), matched: differences.is_empty(), differences }
            }
        };
        out.push(check);
    }
    Ok(out)
}

fn replay(a: &ReplayArgs) -> Result<RunOutput> {
    let stored = rows::read_rows(&a.row)?;
    let checks = replay_rows(&stored)?;
    let failures = checks.iter().filter(|c| !c.matched).count();
    Ok(RunOutput { artifact: Some(pretty(&checks)?), failures, inputs: vec![a.row.clone()], ..Default::default() })
}
