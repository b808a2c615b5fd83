//! Subcommands. Each writes its primary output to `out` and notes to `err`
//! and returns the exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fixplan_core::io::{model_to_json, parse_model, parse_plan, plan_to_json, to_json, Model};
use fixplan_core::oracle::{exact_expected_cost, monte_carlo, ExecPlan};
use fixplan_core::{
    evaluate_plan, exact_dp, generate_tree, independent_start, is_locally_optimal, local_search, optimal_strategy,
    plan_system, strategy_cost, CostReport, Flat, GenRanges, HierPlan, SearchOptions, Strategy, StrategyFile, Tree,
    Warning, DEFAULT_ENUMERATION_LIMIT,
};
use serde::Serialize;

use crate::bench::{run_bench, BenchConfig};
use crate::session::{PlanEntry, SessionStore};
use crate::{exit, CliError};

#[derive(Debug, Parser)]
#[command(name = "fixplan", version, about = "Plan, check and simulate minimum-expected-cost repairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute an optimal strategy (flat model) or plan (tree model).
    Plan(PlanArgs),
    /// Expected cost of a given strategy or plan.
    Cost(CostArgs),
    /// Check a replacement order for adjacent-exchange optimality.
    Check(CheckArgs),
    /// Estimate a strategy's or plan's cost by simulation.
    Simulate(SimulateArgs),
    /// Generate a random full k-ary tree model.
    Gen(GenArgs),
    /// Time the tree planner on generated models.
    Bench(BenchArgs),
    /// Serve interactive repair sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Ratio sort (on marginal priors for joint tables).
    Sort,
    /// Adjacent-exchange local search from the ratio order.
    Local,
    /// Exact dynamic program over subsets.
    Dp,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Sequencing method for flat models; joint tables default to `dp`.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Explain tie-breaking choices.
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, conflicts_with = "plan", required_unless_present = "plan")]
    pub strategy: Option<PathBuf>,
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub strategy: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, conflicts_with = "plan", required_unless_present = "plan")]
    pub strategy: Option<PathBuf>,
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Include worlds where nothing is broken.
    #[arg(long)]
    pub unconditional: bool,
    /// Accepted for symmetry; output is always JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Children per internal node.
    #[arg(long, short = 'k')]
    pub branching: usize,
    /// Depth in edges; the tree has k^depth leaves.
    #[arg(long)]
    pub depth: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leaf failure probability interval, `lo,hi`.
    #[arg(long, value_parser = parse_range, default_value = "0.01,0.2")]
    pub p_range: (f64, f64),
    /// Replacement cost interval, `lo,hi`.
    #[arg(long, value_parser = parse_range, default_value = "1,100")]
    pub c_range: (f64, f64),
    /// Inspection cost as a fraction of replacement cost, `lo,hi`.
    #[arg(long, value_parser = parse_range, default_value = "0.05,0.5")]
    pub d_range: (f64, f64),
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Branching factors, comma separated.
    #[arg(long, short = 'k', value_delimiter = ',', default_values_t = vec![3, 4, 5])]
    pub branching: Vec<usize>,
    /// Depths, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![3, 4, 5])]
    pub depths: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Model the plans refer to.
    #[arg(long)]
    pub model: PathBuf,
    /// Plan or strategy files; the plan id is the file stem. Without any,
    /// the model is planned on startup under its own file stem.
    #[arg(long)]
    pub plan: Vec<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err("expected lo <= hi".into());
    }
    Ok((lo, hi))
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

/// Reads and validates a model, echoing warnings to `err`.
pub fn load_model(path: &Path, err: &mut dyn Write) -> Result<Model<f64>, CliError> {
    let text = read(path)?;
    let validated = parse_model::<f64>(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    print_warnings(&validated.warnings, err);
    Ok(validated.model)
}

fn print_warnings(warnings: &[Warning], err: &mut dyn Write) {
    for w in warnings {
        let _ = writeln!(err, "warning: {w}");
    }
}

pub fn load_strategy(path: &Path) -> Result<Strategy, CliError> {
    let text = read(path)?;
    let file: StrategyFile = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: invalid strategy: {e}", path.display())))?;
    Ok(file.into())
}

pub fn load_plan(path: &Path) -> Result<HierPlan<f64>, CliError> {
    let text = read(path)?;
    parse_plan(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

/// A plan or strategy file paired with its model, ready to execute.
pub fn executable(model: &Model<f64>, plan_file: &Path) -> Result<ExecPlan<f64>, CliError> {
    let text = read(plan_file)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", plan_file.display())))?;
    let is_tree_plan = value.get("node").is_some();
    match (model, is_tree_plan) {
        (Model::Hier(tree), true) => Ok(ExecPlan::from_hier(tree, &load_plan(plan_file)?)?),
        (Model::Flat(flat), false) => Ok(ExecPlan::from_flat(flat, &load_strategy(plan_file)?)?),
        (Model::Hier(_), false) => Err(CliError::validation("a tree model needs a plan file, not a strategy")),
        (Model::Flat(_), true) => Err(CliError::validation("a flat model needs a strategy file, not a plan")),
    }
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::validation(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(CliError::from),
    }
}

/// Report stream: `out` when the artifact went to a file, `err` otherwise.
fn report_stream<'a>(to_file: bool, out: &'a mut dyn Write, err: &'a mut dyn Write) -> &'a mut dyn Write {
    if to_file {
        out
    } else {
        err
    }
}

#[derive(Debug, Serialize)]
struct Report {
    method: &'static str,
    ec: f64,
    ecf: f64,
}

fn emit_report(report: &Report, json: bool, to: &mut dyn Write) -> Result<(), CliError> {
    if json {
        to.write_all(to_json(report).as_bytes())?;
    } else {
        writeln!(to, "method: {}", report.method)?;
        writeln!(to, "ec:  {:.6}", report.ec)?;
        writeln!(to, "ecf: {:.6}", report.ecf)?;
    }
    Ok(())
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    match cli.command {
        Command::Plan(a) => cmd_plan(&a, out, err),
        Command::Cost(a) => cmd_cost(&a, out, err),
        Command::Check(a) => cmd_check(&a, out, err),
        Command::Simulate(a) => cmd_simulate(&a, out, err),
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
        Command::Serve(_) => Err(CliError::validation("serve runs from the binary entry point")),
    }
}

/// Plans a flat model; returns the strategy file, its cost and the method.
pub fn plan_flat(
    flat: &Flat,
    method: Option<Method>,
    err: &mut dyn Write,
) -> Result<(StrategyFile, CostReport<f64>, &'static str), CliError> {
    let inspectable = flat.components().iter().any(|c| c.d.is_some());
    match (flat.joint(), method) {
        (None, None | Some(Method::Sort)) => {
            let report = optimal_strategy(flat, None, &SearchOptions::default())?;
            let method = if inspectable { "inspection subset search" } else { "ratio sort" };
            Ok((report.to_file(), report.cost, method))
        }
        (joint, m) => {
            if inspectable {
                let _ = writeln!(err, "note: inspection costs are ignored by the dependent-failure methods");
            }
            let table = match joint {
                Some(t) => t.clone(),
                None => flat.independent_joint(DEFAULT_ENUMERATION_LIMIT)?,
            };
            let costs = flat.costs();
            let m = m.unwrap_or(if table.len() <= DEFAULT_ENUMERATION_LIMIT { Method::Dp } else { Method::Local });
            let (seq, name) = match m {
                Method::Sort => (independent_start(&table, &costs)?, "ratio sort on marginal priors"),
                Method::Local => {
                    let start = independent_start(&table, &costs)?;
                    (local_search(&table, &costs, &start)?.sequence, "local search")
                }
                Method::Dp => (exact_dp(&table, &costs)?.0, "subset dynamic program"),
            };
            let strategy = Strategy::replace_only(seq);
            let cost = strategy_cost(&strategy, flat)?;
            let file = StrategyFile {
                ec: Some(cost.ec),
                ecf: Some(cost.ecf),
                ..StrategyFile::from(&strategy)
            };
            Ok((file, cost, name))
        }
    }
}

fn cmd_plan(a: &PlanArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    let model = load_model(&a.model, err)?;
    let (text, report) = match &model {
        Model::Flat(flat) => {
            let (file, cost, method) = plan_flat(flat, a.method, err)?;
            (
                to_json(&file),
                Report {
                    method,
                    ec: cost.ec,
                    ecf: cost.ecf,
                },
            )
        }
        Model::Hier(tree) => {
            if a.method.is_some() {
                let _ = writeln!(err, "note: --method applies to flat models only");
            }
            let planned = plan_system(tree, &SearchOptions::default())?;
            print_warnings(&planned.warnings, err);
            if a.verbose {
                let _ = writeln!(
                    err,
                    "note: a component is repaired through its parts only when that is strictly cheaper than \
                     replacing it; exact ties are replaced"
                );
            }
            let plan = planned.plan;
            (
                plan_to_json(&plan),
                Report {
                    method: "bottom-up tree planning",
                    ec: plan.ec,
                    ecf: plan.h,
                },
            )
        }
    };
    write_output(a.out.as_deref(), &text, out)?;
    emit_report(&report, a.json, report_stream(a.out.is_some(), out, err))?;
    Ok(exit::OK)
}

fn cmd_cost(a: &CostArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    let model = load_model(&a.model, err)?;
    let report = match (&model, &a.strategy, &a.plan) {
        (Model::Flat(flat), Some(s), _) => {
            let cost = strategy_cost(&load_strategy(s)?, flat)?;
            Report {
                method: "strategy",
                ec: cost.ec,
                ecf: cost.ecf,
            }
        }
        (Model::Hier(tree), _, Some(p)) => {
            let plan = evaluate_plan(&load_plan(p)?, tree)?;
            Report {
                method: "plan",
                ec: plan.ec,
                ecf: plan.h,
            }
        }
        (Model::Flat(_), None, _) => return Err(CliError::validation("a flat model needs --strategy")),
        (Model::Hier(_), _, None) => return Err(CliError::validation("a tree model needs --plan")),
    };
    emit_report(&report, a.json, out)?;
    Ok(exit::OK)
}

#[derive(Debug, Serialize)]
struct PairReport {
    pair: usize,
    first: String,
    second: String,
    lhs: f64,
    rhs: f64,
    holds: bool,
}

#[derive(Debug, Serialize)]
struct CheckReport {
    optimal: bool,
    first_violation: Option<usize>,
    pairs: Vec<PairReport>,
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    let Model::Flat(flat) = load_model(&a.model, err)? else {
        return Err(CliError::validation("check applies to flat models"));
    };
    let strategy = load_strategy(&a.strategy)?;
    if !strategy.inspect.is_empty() {
        return Err(CliError::validation("check applies to replacement-only orders (empty inspect list)"));
    }
    let table = flat.distribution(DEFAULT_ENUMERATION_LIMIT)?;
    let seq = strategy.sequence();
    let verdict = is_locally_optimal(&seq, &table, &flat.costs())?;
    let report = CheckReport {
        optimal: verdict.is_optimal(),
        first_violation: verdict.first_violation().map(|j| j + 1),
        pairs: verdict
            .pairs
            .iter()
            .map(|p| PairReport {
                pair: p.position + 1,
                first: seq.order[p.position].to_string(),
                second: seq.order[p.position + 1].to_string(),
                lhs: p.lhs,
                rhs: p.rhs,
                holds: p.holds,
            })
            .collect(),
    };
    if a.json {
        out.write_all(to_json(&report).as_bytes())?;
    } else {
        for p in &report.pairs {
            let mark = if p.holds {
                "ok"
            } else if report.first_violation == Some(p.pair) {
                "VIOLATED  <- first violation"
            } else {
                "VIOLATED"
            };
            writeln!(
                out,
                "pair {} ({}, {}): {:.6} <= {:.6}  {mark}",
                p.pair, p.first, p.second, p.lhs, p.rhs
            )?;
        }
        match report.first_violation {
            None => writeln!(out, "locally optimal")?,
            Some(j) => writeln!(out, "not locally optimal: exchanging pair {j} lowers the expected cost")?,
        }
    }
    Ok(if report.optimal { exit::OK } else { exit::CHECK_FAILED })
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    mean: f64,
    stderr: f64,
    samples: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic: Option<f64>,
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    let model = load_model(&a.model, err)?;
    let path = a.strategy.as_ref().or(a.plan.as_ref()).expect("clap requires one");
    let exec = executable(&model, path)?;
    let conditional = !a.unconditional;
    let analytic = match &model {
        Model::Flat(flat) => strategy_cost(&load_strategy(path)?, flat).ok(),
        Model::Hier(tree) => evaluate_plan(&load_plan(path)?, tree).ok().map(|p| CostReport { ec: p.ec, ecf: p.h }),
    }
    .map(|c| if conditional { c.ecf } else { c.ec });
    let est = monte_carlo(&exec, a.samples, a.seed, conditional)?;
    let report = SimulateReport {
        mean: est.mean,
        stderr: est.stderr,
        samples: est.samples,
        seed: est.seed,
        analytic,
    };
    out.write_all(to_json(&report).as_bytes())?;
    Ok(exit::OK)
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    if a.branching == 0 || a.depth == 0 {
        return Err(CliError::validation("branching and depth must be at least 1"));
    }
    let ranges = GenRanges {
        p: a.p_range,
        c: a.c_range,
        d_fraction: a.d_range,
    };
    if ranges.p.0 < 0.0 || ranges.p.1 > 1.0 {
        return Err(CliError::validation("probability range must lie in [0, 1]"));
    }
    let leaves = (a.branching as f64).powi(a.depth as i32);
    if leaves > 5e6 {
        return Err(CliError {
            code: exit::LIMITS,
            message: format!("{leaves} leaves is too many; lower the branching factor or the depth"),
        });
    }
    let tree: Tree = generate_tree(a.branching, a.depth, a.seed, &ranges);
    write_output(a.out.as_deref(), &model_to_json(&Model::Hier(tree)), out)?;
    Ok(exit::OK)
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    if a.repetitions == 0 || a.branching.contains(&0) || a.depths.contains(&0) {
        return Err(CliError::validation("branching, depths and repetitions must be at least 1"));
    }
    let report = run_bench(&BenchConfig {
        branching: a.branching.clone(),
        depths: a.depths.clone(),
        repetitions: a.repetitions,
        seed: a.seed,
    })?;
    if a.json {
        out.write_all(to_json(&report).as_bytes())?;
    } else {
        out.write_all(report.render().as_bytes())?;
    }
    Ok(exit::OK)
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plan".into())
}

/// Loads the model and plans named by `serve` into a session store.
pub fn build_store(a: &ServeArgs, err: &mut dyn Write) -> Result<SessionStore, CliError> {
    let model = load_model(&a.model, err)?;
    let mut entries = Vec::new();
    if a.plan.is_empty() {
        let exec = match &model {
            Model::Flat(flat) => {
                let (file, _, _) = plan_flat(flat, None, err)?;
                ExecPlan::from_flat(flat, &file.into())?
            }
            Model::Hier(tree) => {
                let planned = plan_system(tree, &SearchOptions::default())?;
                print_warnings(&planned.warnings, err);
                ExecPlan::from_hier(tree, &planned.plan)?
            }
        };
        entries.push(entry(file_stem(&a.model), exec)?);
    }
    for path in &a.plan {
        let id = file_stem(path);
        if entries.iter().any(|e: &PlanEntry| e.id == id) {
            return Err(CliError::validation(format!("duplicate plan id `{id}`")));
        }
        entries.push(entry(id, executable(&model, path)?)?);
    }
    Ok(SessionStore::new(entries))
}

fn entry(id: String, exec: ExecPlan<f64>) -> Result<PlanEntry, CliError> {
    let ecf = exact_expected_cost(&exec).map(|r| r.ecf).unwrap_or(f64::NAN);
    Ok(PlanEntry { id, exec, ecf })
}
