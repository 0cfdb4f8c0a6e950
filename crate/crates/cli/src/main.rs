//! `emdarp`: validate, export, solve, check, generate and plot instances.

mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context as _;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use emdarp_core::error::Error;
use emdarp_core::generator::{generate, BatteryPreset, GenConfig};
use emdarp_core::graph::{expand_graph, ExpandedGraph};
use emdarp_core::instance::{load_instance, Instance};
use emdarp_core::io::{decode_solution, mps_string, run_external, ExternalConfig, Solution, SOLVER_CMD_ENV};
use emdarp_core::milp::{build_model_on, compute_big_m, MilpModel};
use emdarp_core::plan::RoutePlan;
use emdarp_core::solver::{branch_and_bound, BnbConfig, SolveStatus};
use emdarp_core::validator::{validate, DEFAULT_TOL};

const EXIT_VALIDATION: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_LIMIT: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "emdarp", version, about = "Electric dial-a-ride modeling and solving toolkit")]
struct Cli {
    /// Output style on stdout.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Builtin,
    External,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Typical,
    Highdischarge,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance document against its schema and invariants.
    Validate { instance: PathBuf },
    /// Export the MILP as free-format MPS.
    Build {
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace the derived big-M values.
        #[arg(long)]
        big_m: Option<f64>,
    },
    /// Solve an instance and write the route plan.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Engine::Builtin)]
        engine: Engine,
        /// Route plan output (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Variable values in solution-file form.
        #[arg(long)]
        solution_out: Option<PathBuf>,
        #[arg(long)]
        node_limit: Option<u64>,
        /// Wall-clock limit in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Search threads; more than one gives up run-to-run reproducibility on ties.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Command template with {model} and {solution}; defaults to $EMDARP_SOLVER_CMD.
        #[arg(long)]
        solver_cmd: Option<String>,
        /// JSON file with `timeout_secs` and `exit_codes`.
        #[arg(long)]
        solver_config: Option<PathBuf>,
        #[arg(long)]
        big_m: Option<f64>,
    },
    /// Validate a route plan against an instance.
    Check {
        instance: PathBuf,
        plan: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a seeded random instance.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        requests: usize,
        #[arg(long, default_value_t = 2)]
        agents: usize,
        #[arg(long, default_value_t = 1)]
        stations: usize,
        #[arg(long, default_value_t = 1)]
        dups: usize,
        #[arg(long, value_enum, default_value_t = Preset::Typical)]
        preset: Preset,
        #[arg(long, overrides_with = "no_selective")]
        selective: bool,
        #[arg(long)]
        no_selective: bool,
        #[arg(long, overrides_with = "closed")]
        open: bool,
        #[arg(long)]
        closed: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw an instance, and optionally a plan, as SVG.
    Plot {
        instance: PathBuf,
        plan: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Error carrying its process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = match error.downcast_ref::<Error>() {
            Some(Error::Validation { .. } | Error::Parse(_)) => EXIT_VALIDATION,
            _ => EXIT_IO,
        };
        Failure { code, error }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Validate { instance } => cmd_validate(cli.format, instance),
        Command::Build { instance, out, big_m } => cmd_build(cli.format, instance, out, *big_m),
        Command::Solve { .. } => cmd_solve(cli.format, &cli.command),
        Command::Check { instance, plan, tol, out } => cmd_check(cli.format, instance, plan, *tol, out.as_deref()),
        Command::Gen { .. } => cmd_gen(cli.format, &cli.command),
        Command::Plot { instance, plan, out } => cmd_plot(instance, plan.as_deref(), out),
    }
}

fn read_instance(path: &Path, big_m: Option<f64>) -> Result<(Instance, ExpandedGraph), Failure> {
    let mut inst = load_instance(path).map_err(|e| {
        let code = match e {
            Error::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        Failure { code, error: e.into() }
    })?;
    if big_m.is_some() {
        inst.config.weights.big_m_override = big_m;
        inst.validate()?;
    }
    let g = expand_graph(&inst)?;
    Ok((inst, g))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(|error| Failure { code: EXIT_IO, error })
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable output"));
}

fn cmd_validate(format: Format, path: &Path) -> Outcome {
    let (inst, g) = read_instance(path, None)?;
    let big_m = compute_big_m(&inst, &g)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        valid: bool,
        requests: usize,
        agents: usize,
        stations: usize,
        visits_per_station: usize,
        nodes: usize,
        arcs: usize,
        horizon: f64,
        warnings: &'a [String],
    }
    let s = Summary {
        valid: true,
        requests: g.num_requests(),
        agents: g.num_agents(),
        stations: g.num_stations(),
        visits_per_station: g.num_visits(),
        nodes: g.num_nodes(),
        arcs: g.arcs().len(),
        horizon: big_m.horizon,
        warnings: &big_m.warnings,
    };
    match format {
        Format::Json => print_json(&s),
        Format::Text => {
            println!("{}: valid", path.display());
            println!(
                "requests {}  agents {}  stations {} x {}  nodes {}  arcs {}",
                s.requests, s.agents, s.stations, s.visits_per_station, s.nodes, s.arcs
            );
            println!("horizon {:.3}", s.horizon);
            for w in s.warnings {
                println!("warning: {w}");
            }
        }
    }
    Ok(0)
}

fn build(inst: &Instance, g: &ExpandedGraph) -> Result<MilpModel, Failure> {
    Ok(build_model_on(inst, g)?)
}

fn cmd_build(format: Format, path: &Path, out: &Path, big_m: Option<f64>) -> Outcome {
    let (inst, g) = read_instance(path, big_m)?;
    let model = build(&inst, &g)?;
    write(out, &mps_string(&model))?;
    let stats = model.stats();
    match format {
        Format::Json => print_json(&serde_json::json!({ "out": out, "stats": stats, "warnings": model.warnings })),
        Format::Text => {
            println!("wrote {}", out.display());
            println!(
                "variables {}  binary {}  integer {}  x {}  rows {}",
                stats.variables, stats.binaries, stats.integers, stats.x_count, stats.constraints
            );
            println!("{:<8} {:>8} {:>8}", "family", "groups", "rows");
            let mut rows: Vec<_> = stats.families.iter().collect();
            rows.sort_by_key(|(tag, _)| (tag.parse::<u32>().unwrap_or(u32::MAX), tag.as_str()));
            for (tag, f) in rows {
                println!("{tag:<8} {:>8} {:>8}", f.groups, f.rows);
            }
            for w in &model.warnings {
                println!("warning: {w}");
            }
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct SolveReport<'a> {
    engine: &'static str,
    status: SolveStatus,
    objective: Option<f64>,
    bound: Option<f64>,
    gap: Option<f64>,
    nodes: Option<u64>,
    seconds: Option<f64>,
    plan: Option<&'a RoutePlan>,
}

fn cmd_solve(format: Format, cmd: &Command) -> Outcome {
    let Command::Solve {
        instance,
        engine,
        out,
        solution_out,
        node_limit,
        time_limit,
        threads,
        solver_cmd,
        solver_config,
        big_m,
    } = cmd
    else {
        unreachable!()
    };
    let (inst, g) = read_instance(instance, *big_m)?;
    let time_limit = time_limit
        .map(|s| Duration::try_from_secs_f64(s).context("--time-limit must be a non-negative number of seconds"))
        .transpose()?;

    let (report, model_values) = match engine {
        Engine::Builtin => {
            let cfg =
                BnbConfig { node_limit: *node_limit, time_limit, deterministic: *threads <= 1, threads: *threads };
            let res = branch_and_bound(&inst, &g, &cfg);
            let finite = |x: f64| x.is_finite().then_some(x);
            (
                SolveReport {
                    engine: "builtin",
                    status: res.status,
                    objective: finite(res.objective),
                    bound: finite(res.bound),
                    gap: finite(res.gap),
                    nodes: Some(res.nodes),
                    seconds: Some(res.seconds),
                    plan: None,
                },
                res.plan,
            )
        }
        Engine::External => {
            let template = solver_cmd
                .clone()
                .or_else(|| std::env::var(SOLVER_CMD_ENV).ok())
                .with_context(|| format!("--engine external needs --solver-cmd or ${SOLVER_CMD_ENV}"))?;
            let mut config = match solver_config {
                Some(p) => ExternalConfig::load(p)?,
                None => ExternalConfig::default(),
            };
            if let Some(t) = time_limit {
                config.timeout = Some(t);
            }
            let model = build(&inst, &g)?;
            let solution = run_external(&model, &template, &config)?;
            let plan = match solution.status {
                SolveStatus::Optimal | SolveStatus::Feasible => Some(decode_solution(&inst, &g, &model, &solution)?),
                _ => None,
            };
            if let Some(path) = solution_out {
                write(path, &solution.to_text(Some(&model)))?;
            }
            (
                SolveReport {
                    engine: "external",
                    status: solution.status,
                    objective: plan.as_ref().map(|p| p.objective),
                    bound: None,
                    gap: None,
                    nodes: None,
                    seconds: None,
                    plan: None,
                },
                plan,
            )
        }
    };

    let plan = model_values;
    if let Some(p) = &plan {
        if let Some(path) = out {
            write(path, &p.to_json())?;
        }
        if *engine == Engine::Builtin {
            if let Some(path) = solution_out {
                let model = build(&inst, &g)?;
                let values = emdarp_core::io::encode_plan(&inst, &g, &model, p)?;
                let sol =
                    Solution::from_vector(&model, &values, report.status, emdarp_core::io::SolutionSource::Builtin);
                write(path, &sol.to_text(Some(&model)))?;
            }
        }
    }
    let report = SolveReport { plan: plan.as_ref(), ..report };
    match format {
        Format::Json => print_json(&report),
        Format::Text => {
            println!("status {}", status_name(report.status));
            if let Some(p) = &plan {
                println!("{}", p.display(&inst, &g));
            }
            if let (Some(b), Some(gap)) = (report.bound, report.gap) {
                println!("bound {b:.6}  gap {:.2}%", 100.0 * gap);
            }
            if let (Some(n), Some(s)) = (report.nodes, report.seconds) {
                println!("nodes {n}  seconds {s:.3}");
            }
        }
    }
    Ok(match report.status {
        SolveStatus::Optimal => 0,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::Feasible | SolveStatus::Unknown => EXIT_LIMIT,
    })
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Feasible => "feasible",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unknown => "unknown",
    }
}

fn cmd_check(format: Format, inst_path: &Path, plan_path: &Path, tol: f64, out: Option<&Path>) -> Outcome {
    let (inst, g) = read_instance(inst_path, None)?;
    let text = std::fs::read_to_string(plan_path)
        .with_context(|| format!("reading {}", plan_path.display()))
        .map_err(|error| Failure { code: EXIT_IO, error })?;
    let plan = RoutePlan::from_json(&text)
        .with_context(|| format!("parsing {}", plan_path.display()))
        .map_err(|error| Failure { code: EXIT_VALIDATION, error })?;
    let report = validate(&inst, &g, &plan, tol).map_err(|e| Failure { code: EXIT_VALIDATION, error: e.into() })?;
    if let Some(path) = out {
        write(path, &report.to_json())?;
    }
    match format {
        Format::Json => print_json(&report),
        Format::Text => {
            println!("{:<20} {:>8} {:>8}", "check", "rows", "violated");
            for (name, c) in &report.families {
                println!("{name:<20} {:>8} {:>8}", c.checked, c.violated);
            }
            for v in &report.violations {
                println!(
                    "violation {} {:?}: lhs {:.6} rhs {:.6} by {:.3e}",
                    v.check, v.index, v.lhs, v.rhs, v.magnitude
                );
            }
            println!(
                "objective {:.6} (reported {:.6}, delta {:.3e})",
                report.recomputed_objective, plan.objective, report.objective_delta
            );
            println!("{}", if report.is_clean() { "clean" } else { "violations found" });
        }
    }
    Ok(if report.is_clean() { 0 } else { EXIT_VALIDATION })
}

fn cmd_gen(format: Format, cmd: &Command) -> Outcome {
    let Command::Gen {
        seed,
        requests,
        agents,
        stations,
        dups,
        preset,
        selective: _,
        no_selective,
        open,
        closed: _,
        out,
    } = cmd
    else {
        unreachable!()
    };
    let cfg = GenConfig {
        seed: *seed,
        n_requests: *requests,
        n_agents: *agents,
        n_stations: *stations,
        duplicate_visits: *dups,
        preset: match preset {
            Preset::Typical => BatteryPreset::Typical,
            Preset::Highdischarge => BatteryPreset::HighDischarge,
        },
        selective: !no_selective,
        open_vrp: *open,
        ..GenConfig::default()
    };
    let inst = generate(&cfg).map_err(|e| Failure { code: EXIT_IO, error: e.into() })?;
    write(out, &inst.to_json())?;
    match format {
        Format::Json => print_json(&serde_json::json!({ "out": out, "config": cfg })),
        Format::Text => println!("wrote {}", out.display()),
    }
    Ok(0)
}

fn cmd_plot(inst_path: &Path, plan_path: Option<&Path>, out: &Path) -> Outcome {
    let (inst, g) = read_instance(inst_path, None)?;
    let plan = match plan_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(|error| Failure { code: EXIT_IO, error })?;
            let plan = RoutePlan::from_json(&text).map_err(|e| Failure { code: EXIT_VALIDATION, error: e.into() })?;
            if plan.agents.len() != g.num_agents() || plan.requests.len() != g.num_requests() {
                return Err(Failure {
                    code: EXIT_VALIDATION,
                    error: anyhow::anyhow!("plan does not match the instance"),
                });
            }
            Some(plan)
        }
        None => None,
    };
    write(out, &plot::render_svg(&inst, &g, plan.as_ref(), &plot::PlotSpec::default()))?;
    Ok(0)
}
