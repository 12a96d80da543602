//! Command line runner for the measure lab: loads an experiment file,
//! runs one analysis, and writes the result under the output directory as
//! JSON or CSV with exact lowest-terms fractions.
//!
//! Exit codes: 0 on success, 2 on input validation failures, 3 when an
//! enumeration budget was exhausted.

mod emit;
mod experiment;

use clap::{Parser, Subcommand};
use emit::{frac, frac_csv, write_json, write_text};
use keisler_core::dependence::{dependence_rank, vc_of_space, DependenceError};
use keisler_core::empirics::{
    check_fim_certificate, fim_certificate_search, fim_implies_dependent_experiment, gc_trial,
    trial_rng, EmpiricsError, EventFamily,
};
use keisler_core::logic::{EvalError, ParseError};
use keisler_core::measure::MeasureError;
use keisler_core::morley::{commutes, epsilon_chain_verify, morley_product, MorleyError};
use keisler_core::scenario::{
    run_scenario, scenario_names, FieldValue, ScenarioError, ScenarioParams, ScenarioReport,
};
use keisler_core::typespace::TypeError;
use keisler_core::weight::Weight;
use keisler_core::{rat, GcRun, Measure, Rat};
use serde_json::{json, Value};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Budget(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Budget(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<TypeError> for CliError {
    fn from(e: TypeError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<MorleyError> for CliError {
    fn from(e: MorleyError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<DependenceError> for CliError {
    fn from(e: DependenceError) -> Self {
        match e {
            DependenceError::Budget { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<EmpiricsError> for CliError {
    fn from(e: EmpiricsError) -> Self {
        match e {
            EmpiricsError::Dependence(d) => d.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Dependence(d) => d.into(),
            ScenarioError::Empirics(inner) => inner.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "keisler-lab",
    version,
    about = "Exact measure experiments on finite first-order structures"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Shattering summary of the experiment's type space.
    Vc {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Cap on enumeration nodes before giving up with exit code 3.
        #[arg(long)]
        budget_tuples: Option<u64>,
    },
    /// Alternation-set masses and ratios for k = 1..k-max.
    Dep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        budget_tuples: Option<u64>,
    },
    /// Product of the left and right measures through realization.
    Morley {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Both product orders side by side.
    Commute {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sampling deviation table over the experiment's sizes.
    Gc {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Approximation-event search, certificate, and exact verdicts.
    Fim {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        budget_tuples: Option<u64>,
    },
    /// Run a named built-in experiment panel.
    Scenario {
        /// One of the built-in names; see --list.
        name: Option<String>,
        #[arg(long)]
        list: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Cube dimension for bernoulli-cube.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        budget_tuples: Option<u64>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.cmd) {
        eprintln!("error: {e}");
        process::exit(e.code());
    }
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Vc {
            spec,
            out,
            budget_tuples,
        } => run_vc(&spec, &out, budget_tuples),
        Cmd::Dep {
            spec,
            out,
            k_max,
            budget_tuples,
        } => run_dep(&spec, &out, k_max, budget_tuples),
        Cmd::Morley { spec, out } => run_morley(&spec, &out),
        Cmd::Commute { spec, out } => run_commute(&spec, &out),
        Cmd::Gc {
            spec,
            out,
            trials,
            seed,
        } => run_gc(&spec, &out, trials, seed),
        Cmd::Fim {
            spec,
            out,
            seed,
            k_max,
            budget_tuples,
        } => run_fim(&spec, &out, seed, k_max, budget_tuples),
        Cmd::Scenario {
            name,
            list,
            out,
            m,
            seed,
            trials,
            budget_tuples,
        } => run_scenario_cmd(name, list, &out, m, seed, trials, budget_tuples),
    }
}

fn run_vc(spec: &Path, out: &Path, budget: Option<u64>) -> Result<(), CliError> {
    let bench = experiment::load(spec)?;
    let report = vc_of_space(&bench.space, None, budget.unwrap_or(bench.budget))?;
    let growth: Vec<Value> = report
        .growth
        .iter()
        .map(|&(n, count)| json!([n, count]))
        .collect();
    let value = json!({
        "vc_dim": report.vc_dim,
        "nip_threshold": report.nip_threshold,
        "exhaustive": report.exhaustive,
        "witness": report.witness,
        "growth": growth,
        "distinct_rows": report.distinct_rows,
        "distinct_columns": report.distinct_columns,
    });
    let path = write_json(out, "vc.json", &value)?;
    println!(
        "vc_dim {} (nip threshold {}); wrote {}",
        report.vc_dim,
        report.nip_threshold,
        path.display()
    );
    Ok(())
}

fn run_dep(
    spec: &Path,
    out: &Path,
    k_max: Option<usize>,
    budget: Option<u64>,
) -> Result<(), CliError> {
    let bench = experiment::load(spec)?;
    let mu = bench.subject()?;
    let rank = dependence_rank(
        mu,
        k_max.unwrap_or(bench.k_max),
        None,
        budget.unwrap_or(bench.budget),
    )?;
    let mut csv = String::from(
        "k,dk_mass_num,dk_mass_den,ratio_num,ratio_den,tuple_count,total_tuples,\
         distinct_rows,column_count,empty_by_column_bound,zero_by_monotonicity,\
         uniform_fast_path,rank\n",
    );
    let rank_text = rank
        .rank
        .map(|r| r.to_string())
        .unwrap_or_else(|| "none".to_string());
    for r in &rank.reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.k,
            frac_csv(&r.dk_mass),
            frac_csv(&r.ratio),
            r.tuple_count,
            r.total_tuples,
            r.distinct_rows,
            r.column_count,
            r.empty_by_column_bound,
            r.zero_by_monotonicity,
            r.uniform_fast_path,
            rank_text,
        ));
    }
    let path = write_text(out, "dep.csv", &csv)?;
    println!("dependence rank {rank_text}; wrote {}", path.display());
    Ok(())
}

fn run_morley(spec: &Path, out: &Path) -> Result<(), CliError> {
    let bench = experiment::load(spec)?;
    let left = bench.left()?;
    let right = bench.right()?;
    let eval = morley_product(left, right, &bench.chi)?;
    let fibers: Vec<Value> = eval
        .fibers
        .iter()
        .enumerate()
        .map(|(atom, fiber)| {
            json!({
                "atom": atom,
                "right_weight": frac(right.weight(atom)),
                "fiber": frac(fiber),
            })
        })
        .collect();
    // With an epsilon on file, also walk the error chain between the two
    // product orders at the first epsilon. A chain can be impossible to
    // build (no realized stand-in for a limit atom); that is reported in
    // place rather than failing the product run.
    let chain = match bench.epsilons.first() {
        None => Value::Null,
        Some(eps) => match epsilon_chain_verify(left, right, &bench.chi, eps, bench.denom_cap) {
            Err(e) => json!({ "error": e.to_string() }),
            Ok(chain) => {
                let steps: Vec<Value> = chain
                    .steps
                    .iter()
                    .map(|s| {
                        json!({
                            "label": s.label,
                            "gap": frac(&s.gap),
                            "bound": frac(&s.bound),
                            "within": s.within,
                        })
                    })
                    .collect();
                json!({
                    "epsilon": frac(eps),
                    "steps": steps,
                    "middle_gap": frac(&chain.middle_gap),
                    "middle_exact": chain.middle_exact,
                    "endpoint_gap": frac(&chain.endpoint_gap),
                    "total_error": frac(&chain.total_error),
                    "bound": frac(&chain.bound),
                    "within": chain.within,
                })
            }
        },
    };
    let value = json!({
        "value": frac(&eval.value),
        "reversed_value": frac(&eval.reversed_value),
        "order_invariant": eval.order_invariant,
        "fiber_well_defined": eval.fiber_well_defined(),
        "fibers": fibers,
        "chain": chain,
    });
    let path = write_json(out, "morley.json", &value)?;
    let (num, den) = eval.value.fraction_parts();
    println!("product value {num}/{den}; wrote {}", path.display());
    Ok(())
}

fn run_commute(spec: &Path, out: &Path) -> Result<(), CliError> {
    let bench = experiment::load(spec)?;
    let left = bench.left()?;
    let right = bench.right()?;
    let report = commutes(left, right, &bench.chi)?;
    let value = json!({
        "forward": frac(&report.forward),
        "backward": frac(&report.backward),
        "commutes": report.commutes,
        "forward_order_invariant": report.forward_eval.order_invariant,
        "backward_order_invariant": report.backward_eval.order_invariant,
    });
    let path = write_json(out, "commute.json", &value)?;
    println!(
        "{}; wrote {}",
        if report.commutes {
            "products commute"
        } else {
            "products do not commute"
        },
        path.display()
    );
    Ok(())
}

/// Worker count for the sampling table, from KEISLER_LAB_THREADS. Results
/// are identical for every cap: each (size, trial) cell draws from its own
/// stream and the table is assembled in index order.
fn thread_cap() -> usize {
    std::env::var("KEISLER_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

fn gc_table(
    mu: &Measure,
    events: &EventFamily,
    sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<GcRun, CliError> {
    let masses: Vec<Rat> = events.masses(mu);
    let cells: Vec<(usize, usize)> = (0..sizes.len())
        .flat_map(|si| (0..trials).map(move |t| (si, t)))
        .collect();
    let threads = thread_cap().min(cells.len().max(1));
    let run_cell = |&(si, t): &(usize, usize)| -> Result<Rat, EmpiricsError> {
        let mut rng = trial_rng(seed, si, t);
        let (dev, _) = gc_trial(mu, events, &masses, sizes[si], &mut rng, 0)?;
        Ok(dev)
    };
    let flat: Vec<Rat> = if threads <= 1 {
        cells.iter().map(run_cell).collect::<Result<_, _>>()?
    } else {
        let chunk = cells.len().div_ceil(threads);
        std::thread::scope(|scope| {
            let handles: Vec<_> = cells
                .chunks(chunk)
                .map(|part| {
                    scope.spawn(move || part.iter().map(run_cell).collect::<Result<Vec<_>, _>>())
                })
                .collect();
            let mut all = Vec::with_capacity(cells.len());
            for handle in handles {
                all.extend(handle.join().expect("sampling worker panicked")?);
            }
            Ok::<_, EmpiricsError>(all)
        })?
    };
    let mut deviations: Vec<Vec<Rat>> = vec![Vec::with_capacity(trials); sizes.len()];
    for ((si, _), dev) in cells.iter().zip(flat) {
        deviations[*si].push(dev);
    }
    let summaries = sizes
        .iter()
        .enumerate()
        .map(|(si, &n)| {
            let sum: Rat = deviations[si].iter().cloned().sum();
            keisler_core::empirics::GcSummary {
                n,
                mean: sum / rat(trials as i64, 1),
                max: deviations[si].iter().cloned().max().expect("trials >= 1"),
            }
        })
        .collect();
    Ok(GcRun {
        sizes: sizes.to_vec(),
        trials,
        seed,
        deviations,
        hull_deviations: None,
        summaries,
    })
}

fn run_gc(
    spec: &Path,
    out: &Path,
    trials: Option<usize>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let bench = experiment::load(spec)?;
    let mu = bench.subject()?;
    let events = EventFamily::instance_columns(&bench.space, None)?;
    let trials = trials.unwrap_or(bench.trials);
    if trials == 0 {
        return Err(CliError::Validation("trials must be at least 1".into()));
    }
    let run = gc_table(
        mu,
        &events,
        &bench.sizes,
        trials,
        seed.unwrap_or(bench.seed),
    )?;
    let mut csv = String::from("n,trial,sup_dev_num,sup_dev_den\n");
    for (si, n) in run.sizes.iter().enumerate() {
        for (t, dev) in run.deviations[si].iter().enumerate() {
            csv.push_str(&format!("{n},{t},{}\n", frac_csv(dev)));
        }
        csv.push_str(&format!("{n},mean,{}\n", frac_csv(&run.summaries[si].mean)));
        csv.push_str(&format!("{n},max,{}\n", frac_csv(&run.summaries[si].max)));
    }
    let path = write_text(out, "gc.csv", &csv)?;
    let last = run.summaries.last().expect("at least one size");
    let (num, den) = last.mean.fraction_parts();
    println!(
        "mean deviation {num}/{den} at n = {}; wrote {}",
        last.n,
        path.display()
    );
    Ok(())
}

fn run_fim(
    spec: &Path,
    out: &Path,
    seed: Option<u64>,
    k_max: Option<usize>,
    budget: Option<u64>,
) -> Result<(), CliError> {
    let bench = experiment::load(spec)?;
    let mu = bench.subject()?;
    if bench.epsilons.is_empty() {
        return Err(CliError::Validation(
            "fim needs an epsilons line in the experiment file".into(),
        ));
    }
    let events = EventFamily::instance_columns(&bench.space, None)?;
    let (cert, searches) = fim_certificate_search(
        mu,
        &events,
        &bench.epsilons,
        bench.n_max,
        bench.samples,
        seed.unwrap_or(bench.seed),
    )?;
    let verdicts = check_fim_certificate(mu, &events, &cert)?;
    let report = fim_implies_dependent_experiment(
        mu,
        &events,
        &cert,
        k_max.unwrap_or(bench.k_max),
        budget.unwrap_or(bench.budget),
    )?;

    let searches_json: Vec<Value> = searches
        .iter()
        .map(|s| {
            json!({
                "epsilon": frac(&s.epsilon),
                "found": s.found,
                "n": s.n,
                "mass": frac(&s.mass),
                "exhaustive": s.exhaustive,
                "ci_halfwidth": s.ci_halfwidth,
                "event_tuples": s.event_tuples.len(),
                "formula_size": s.formula_size.map(|v| v.to_string()),
            })
        })
        .collect();
    let entries_json: Vec<Value> = cert
        .entries
        .iter()
        .map(|e| {
            json!({
                "epsilon": frac(&e.epsilon),
                "n": e.n,
                "event": e.event,
            })
        })
        .collect();
    let verdicts_json: Vec<Value> = verdicts
        .iter()
        .map(|v| {
            json!({
                "epsilon": frac(&v.epsilon),
                "n": v.n,
                "mass": frac(&v.mass),
                "worst_deviation": frac(&v.worst_deviation),
                "worst_tuple": v.worst_tuple,
                "mass_ok": v.mass_ok,
                "deviation_ok": v.deviation_ok,
                "valid": v.valid,
            })
        })
        .collect();
    let ratios: Vec<Value> = report
        .rank
        .reports
        .iter()
        .map(|r| json!({ "k": r.k, "ratio": frac(&r.ratio) }))
        .collect();
    let value = json!({
        "searches": searches_json,
        "certificate": { "entries": entries_json },
        "verdicts": verdicts_json,
        "masses_certified": report.masses_certified,
        "rank": report.rank.rank,
        "ratios": ratios,
    });
    let path = write_json(out, "fim.json", &value)?;
    println!(
        "{} of {} ladder entries valid; wrote {}",
        verdicts.iter().filter(|v| v.valid).count(),
        verdicts.len(),
        path.display()
    );
    Ok(())
}

fn field_json(value: &FieldValue) -> Value {
    match value {
        FieldValue::Fraction { num, den } => json!({ "num": num, "den": den }),
        FieldValue::Int(i) => json!(i),
        FieldValue::Text(t) => json!(t),
        FieldValue::Flag(b) => json!(b),
    }
}

fn scenario_json(report: &ScenarioReport, params: &ScenarioParams) -> Value {
    let fields: Vec<Value> = report
        .fields
        .iter()
        .map(|(name, v)| json!({ "name": name, "value": field_json(v) }))
        .collect();
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|(name, ok)| json!({ "name": name, "pass": ok }))
        .collect();
    json!({
        "name": report.name,
        "params": {
            "m": params.m,
            "seed": params.seed,
            "trials": params.trials,
            "sizes": params.sizes,
            "budget": params.budget,
        },
        "fields": fields,
        "checks": checks,
        "all_checks_pass": report.all_checks_pass(),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_scenario_cmd(
    name: Option<String>,
    list: bool,
    out: &Path,
    m: Option<usize>,
    seed: Option<u64>,
    trials: Option<usize>,
    budget: Option<u64>,
) -> Result<(), CliError> {
    if list {
        for n in scenario_names() {
            println!("{n}");
        }
        return Ok(());
    }
    let name = name.ok_or_else(|| {
        CliError::Validation("scenario needs a name (or --list to see them)".into())
    })?;
    let mut params = ScenarioParams::default();
    if let Some(m) = m {
        params.m = m;
    }
    if let Some(seed) = seed {
        params.seed = seed;
    }
    if let Some(trials) = trials {
        params.trials = trials;
    }
    if let Some(budget) = budget {
        params.budget = budget;
    }
    let report = run_scenario(&name, &params)?;
    let value = scenario_json(&report, &params);
    let path = write_json(out, &format!("scenario-{name}.json"), &value)?;
    let passed = report.checks.iter().filter(|(_, ok)| *ok).count();
    println!(
        "scenario {name}: {passed}/{} checks passed; wrote {}",
        report.checks.len(),
        path.display()
    );
    Ok(())
}
