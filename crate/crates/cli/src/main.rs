use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use griddefense_core::cas::{enumerate_cas, merge_cas_lists, CasList, StopRule};
use griddefense_core::dcopf::solve_dcopf;
use griddefense_core::grid::{apply_configuration, parse_configuration, parse_grid, GridCase};
use griddefense_core::oracle::brute_force_trilevel;
use griddefense_core::protect::{enumerate_optimal_protections_with, optimal_protection_with, ProtectionPlan, TieBreak};
use griddefense_core::report::{compute_metrics, SweepReport};
use griddefense_core::Error;

const EXIT_INPUT: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_GUARD: u8 = 3;

#[derive(Parser)]
#[command(name = "griddefense", version, about = "Critical attack scenarios and protection planning for power grids")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank the critical attack scenarios of a grid.
    Enumerate(EnumerateArgs),
    /// Choose protected components for each budget from CAS list files.
    Protect(ProtectArgs),
    /// Enumerate and protect in one pass.
    Sweep(SweepArgs),
    /// Brute-force defender-attacker-defender reference solution.
    Oracle(OracleArgs),
    /// Check a grid file (and optional configuration overrides).
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    grid: PathBuf,
    /// Configuration override file; repeat to study several configurations.
    #[arg(long)]
    config: Vec<PathBuf>,
}

#[derive(Args)]
struct StopArgs {
    #[arg(long)]
    zmax: usize,
    /// Scenario cap, or `unbounded`.
    #[arg(long, default_value = "500", value_parser = parse_max_scenarios)]
    max_scenarios: MaxScenarios,
    /// Stop when the next scenario sheds strictly less than this (MW).
    #[arg(long, default_value_t = 0.0)]
    min_lost_load: f64,
}

impl StopArgs {
    fn rule(&self) -> StopRule {
        StopRule {
            max_scenarios: self.max_scenarios.0,
            min_lost_load_mw: self.min_lost_load,
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    /// Comma-separated protection budgets, e.g. `1,2,3` or `1..5`.
    #[arg(long, default_value = "1..5", value_parser = parse_budgets)]
    budgets: Budgets,
    #[arg(long, value_enum, default_value_t = TieBreakArg::Extended)]
    tie_break: TieBreakArg,
    /// Also list up to N equally good protection plans per budget.
    #[arg(long, default_value_t = 0)]
    alternatives: usize,
    /// Output directory for report.json, report.csv and plans.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format printed to stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write 0 for every runtime so reports are reproducible byte for byte.
    #[arg(long)]
    no_timings: bool,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    stop: StopArgs,
    /// CAS list file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the dispatch under the worst-case attack to this file.
    #[arg(long)]
    dump_dispatch: Option<PathBuf>,
}

#[derive(Args)]
struct ProtectArgs {
    /// CAS list file; repeat to merge several lists.
    #[arg(long, required = true)]
    cas: Vec<PathBuf>,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    stop: StopArgs,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    xmax: usize,
    #[arg(long)]
    zmax: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the dispatch under the oracle's worst attack to this file.
    #[arg(long)]
    dump_dispatch: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieBreakArg {
    Consecutive,
    Extended,
}

impl From<TieBreakArg> for TieBreak {
    fn from(t: TieBreakArg) -> Self {
        match t {
            TieBreakArg::Consecutive => TieBreak::Consecutive,
            TieBreakArg::Extended => TieBreak::Extended,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug)]
struct Budgets(Vec<usize>);

#[derive(Clone, Copy, Debug)]
struct MaxScenarios(Option<usize>);

fn parse_max_scenarios(s: &str) -> Result<MaxScenarios, String> {
    if s.eq_ignore_ascii_case("unbounded") {
        return Ok(MaxScenarios(None));
    }
    s.parse()
        .map(|n| MaxScenarios(Some(n)))
        .map_err(|_| format!("expected a count or `unbounded`, got `{s}`"))
}

fn parse_budgets(s: &str) -> Result<Budgets, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid budget `{t}`"));
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
                if a > b {
                    return Err(format!("empty budget range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("no budgets given".into());
    }
    Ok(Budgets(out))
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_grid(path: &Path) -> anyhow::Result<GridCase> {
    parse_grid(&read(path)?).with_context(|| format!("in grid file {}", path.display()))
}

/// The study cases: the grid as is, or once per configuration file.
fn load_cases(args: &GridArgs) -> anyhow::Result<Vec<GridCase>> {
    let grid = load_grid(&args.grid)?;
    if args.config.is_empty() {
        return Ok(vec![grid]);
    }
    args.config
        .iter()
        .map(|p| {
            let cfg = parse_configuration(&read(p)?).with_context(|| format!("in configuration file {}", p.display()))?;
            apply_configuration(&grid, &cfg).with_context(|| format!("applying {}", p.display()))
        })
        .collect()
}

fn enumerate_cases(cases: &[GridCase], stop: &StopArgs) -> anyhow::Result<CasList> {
    let lists = cases
        .iter()
        .map(|g| enumerate_cas(g, stop.zmax, stop.rule()))
        .collect::<Result<Vec<_>, _>>()?;
    if lists.len() == 1 {
        Ok(lists.into_iter().next().unwrap())
    } else {
        Ok(merge_cas_lists(&lists)?)
    }
}

fn dump_dispatch(grid: &GridCase, attack: &griddefense_core::AttackVector, path: &Path) -> anyhow::Result<()> {
    let dispatch = solve_dcopf(grid, attack)?;
    let doc = json!({ "attack": attack, "dispatch": dispatch });
    write(path, &serde_json::to_string_pretty(&doc)?)
}

fn cmd_enumerate(args: &EnumerateArgs) -> anyhow::Result<()> {
    let cases = load_cases(&args.grid)?;
    let list = enumerate_cases(&cases, &args.stop)?;
    if let Some(path) = &args.dump_dispatch {
        let Some(top) = list.records.first() else {
            bail!("no scenario to dump: the CAS list is empty");
        };
        let label = top.configuration_label.split('+').next().unwrap_or_default();
        let grid = cases
            .iter()
            .find(|g| g.configuration_label == label)
            .unwrap_or(&cases[0]);
        dump_dispatch(grid, &top.components, path)?;
    }
    emit(args.out.as_deref(), &list.to_json())
}

fn plan_json(plan: &ProtectionPlan, alternatives: Option<&[ProtectionPlan]>) -> anyhow::Result<Value> {
    let mut v = serde_json::to_value(plan)?;
    if let Some(alts) = alternatives {
        v["alternatives"] = alts
            .iter()
            .map(|a| serde_json::to_value(a).map(|x| x["protected"].clone()))
            .collect::<Result<Vec<_>, _>>()?
            .into();
    }
    Ok(v)
}

fn run_plans(cas: &CasList, args: &PlanArgs) -> anyhow::Result<()> {
    let mode = TieBreak::from(args.tie_break);
    let timed: Vec<(ProtectionPlan, f64)> = args
        .budgets
        .0
        .par_iter()
        .map(|&b| {
            let start = Instant::now();
            let plan = optimal_protection_with(cas, b, mode);
            (plan, start.elapsed().as_secs_f64())
        })
        .collect();
    let (plans, runtimes): (Vec<_>, Vec<_>) = timed.into_iter().unzip();
    let runtimes: Vec<f64> = if args.no_timings { vec![0.0; runtimes.len()] } else { runtimes };
    let report: SweepReport = compute_metrics(cas, &plans)?.with_runtimes(&runtimes);

    let plan_docs = plans
        .iter()
        .map(|p| {
            if args.alternatives == 0 {
                return plan_json(p, None);
            }
            let alts = enumerate_optimal_protections_with(cas, p.budget, args.alternatives + 1, mode);
            let others: Vec<ProtectionPlan> = alts.into_iter().filter(|a| a != p).take(args.alternatives).collect();
            plan_json(p, Some(&others))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            write(&dir.join("report.json"), &report.to_json())?;
            write(&dir.join("report.csv"), &report.to_csv())?;
            write(&dir.join("plans.json"), &serde_json::to_string_pretty(&plan_docs)?)?;
        }
        None => match args.format {
            Format::Json => println!("{}", report.to_json()),
            Format::Csv => print!("{}", report.to_csv()),
        },
    }
    Ok(())
}

fn cmd_protect(args: &ProtectArgs) -> anyhow::Result<()> {
    let lists = args
        .cas
        .iter()
        .map(|p| CasList::from_json(&read(p)?).with_context(|| format!("in CAS file {}", p.display())))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let cas = if lists.len() == 1 { lists.into_iter().next().unwrap() } else { merge_cas_lists(&lists)? };
    run_plans(&cas, &args.plan)
}

fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<()> {
    let cases = load_cases(&args.grid)?;
    let cas = enumerate_cases(&cases, &args.stop)?;
    if let Some(dir) = &args.plan.out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        write(&dir.join("cas.json"), &cas.to_json())?;
    }
    run_plans(&cas, &args.plan)
}

fn cmd_oracle(args: &OracleArgs) -> anyhow::Result<()> {
    let cases = load_cases(&args.grid)?;
    if cases.len() != 1 {
        bail!("the oracle takes at most one configuration file");
    }
    let result = brute_force_trilevel(&cases[0], args.xmax, args.zmax)?;
    if let Some(path) = &args.dump_dispatch {
        dump_dispatch(&cases[0], &result.worst_attack, path)?;
    }
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&result)?)
}

fn cmd_validate(args: &ValidateArgs) -> anyhow::Result<()> {
    let text = read(&args.grid.grid)?;
    if let Err(err) = parse_grid(&text) {
        if let Error::Invalid(diagnostics) = &err {
            for d in diagnostics {
                eprintln!("{d}");
            }
        }
        return Err(err).with_context(|| format!("in grid file {}", args.grid.grid.display()));
    }
    for case in load_cases(&args.grid)? {
        println!(
            "{} [{}]: {} buses, {} branches, {} generators, {} attackable, demand {} MW",
            case.name,
            case.configuration_label,
            case.buses.len(),
            case.branches.len(),
            case.generators.len(),
            case.attackable_components().len(),
            griddefense_core::cas::snap_mw(case.total_demand_mw())
        );
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Numerical(_)) => EXIT_NUMERICAL,
        Some(Error::GuardExceeded { .. }) => EXIT_GUARD,
        _ => EXIT_INPUT,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build()?;
    pool.install(|| match &cli.command {
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Protect(a) => cmd_protect(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Validate(a) => cmd_validate(a),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
