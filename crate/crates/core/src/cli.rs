//! Command-line front end. Exit codes are the machine contract:
//!
//! * `0` success (optimal, or a clean validation)
//! * `1` usage, input or validation failure, or a limit hit with no solution
//! * `2` a limit stopped the search after a solution was found
//! * `3` the instance admits no delivery plan

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::energy::energy_matrix;
use crate::fmt::format_sig;
use crate::instance::{generate_instance, parse_instance, render_instance, Instance};
use crate::model::{build_model, ObjectiveKind};
use crate::pipeline::{compare_objectives, solve_instance, Method, SolveOutcome};
use crate::solution::Solution;
use crate::solver::{export_lp, export_mps, SolveLimits, SolveStatus};
use crate::validate::{check_feasibility, recompute_objective, TSV_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_LIMIT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "massflow", version, about = "Energy-aware tow-train delivery planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Energy,
    Distance,
}

impl From<ObjectiveArg> for ObjectiveKind {
    fn from(a: ObjectiveArg) -> Self {
        match a {
            ObjectiveArg::Energy => ObjectiveKind::Energy,
            ObjectiveArg::Distance => ObjectiveKind::Distance,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Bb,
    Oracle,
}

impl From<MethodArg> for Method {
    fn from(a: MethodArg) -> Self {
        match a {
            MethodArg::Bb => Method::BranchAndBound,
            MethodArg::Oracle => Method::Oracle,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExportFormat {
    Mps,
    Lp,
    EnergyCsv,
}

#[derive(Debug, clap::Args)]
struct LimitArgs {
    /// Wall-clock limit for branch-and-bound, in seconds.
    #[arg(long, value_parser = positive_f64)]
    time_limit: Option<f64>,
    /// Maximum number of branch-and-bound nodes.
    #[arg(long)]
    node_limit: Option<usize>,
}

impl LimitArgs {
    fn limits(&self) -> SolveLimits {
        let mut l = SolveLimits::default();
        if let Some(t) = self.time_limit {
            l.time_limit = t;
        }
        if let Some(n) = self.node_limit {
            l.node_limit = n;
        }
        l
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number of seconds, got '{s}'")),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an instance and report the plan.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "energy")]
        objective: ObjectiveArg,
        #[arg(long, value_enum, default_value = "bb")]
        method: MethodArg,
        #[command(flatten)]
        limits: LimitArgs,
        /// Where to write the solution JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve under both objectives and compare their energy.
    Compare {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "bb")]
        method: MethodArg,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Write the model (MPS or LP) or the arc energy table (CSV).
    Export {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(long, value_enum, default_value = "energy")]
        objective: ObjectiveArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a solution file against an instance.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        stations: usize,
        #[arg(long)]
        periods: usize,
        /// Demand profile: uniform or periodic.
        #[arg(long, default_value = "uniform")]
        profile: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Configures `env_logger` from `MASSFLOW_LOG` (quiet, info or debug; info
/// when unset). Logs go to standard error.
pub fn init_logging() {
    let value = std::env::var("MASSFLOW_LOG").unwrap_or_default();
    let level = match value.as_str() {
        "quiet" => log::LevelFilter::Off,
        "debug" => log::LevelFilter::Debug,
        _ => log::LevelFilter::Info,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    if !matches!(value.as_str(), "" | "quiet" | "info" | "debug") {
        log::warn!("MASSFLOW_LOG='{value}' not recognized, using info");
    }
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

/// Runs one command line. Output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_FAILURE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve { instance, objective, method, limits, out: path } => {
            cmd_solve(&instance, objective.into(), method.into(), &limits.limits(), path.as_deref(), out)
        }
        Command::Compare { instance, method, limits } => cmd_compare(&instance, method.into(), &limits.limits(), out),
        Command::Export { instance, format, objective, out: path } => {
            cmd_export(&instance, format, objective.into(), path.as_deref(), out)
        }
        Command::Validate { instance, solution } => cmd_validate(&instance, &solution, out),
        Command::Gen { seed, stations, periods, profile, out: path } => {
            cmd_gen(seed, stations, periods, &profile, path.as_deref(), out)
        }
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(Failure::from),
    }
}

fn status_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::Feasible => EXIT_LIMIT,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::Limit => EXIT_FAILURE,
    }
}

fn unit(kind: ObjectiveKind) -> &'static str {
    match kind {
        ObjectiveKind::Energy => "J",
        ObjectiveKind::Distance => "m",
    }
}

/// What `solve` reports: the human-readable part first, then `key=value`
/// lines after a `[result]` marker.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub n: usize,
    pub nt: usize,
    pub outcome: SolveOutcome,
}

impl RunReport {
    pub fn objective(&self) -> Option<f64> {
        self.outcome.solution.as_ref().map(|s| s.objective_value)
    }

    pub fn render(&self) -> String {
        let o = &self.outcome;
        let mut s = String::new();
        let _ = writeln!(s, "instance: {} stations, {} periods", self.n, self.nt);
        let _ = writeln!(s, "objective: {} ({}), method {}", o.kind, unit(o.kind), o.method);
        let _ = writeln!(s, "status: {}", o.status);
        for v in &o.infeasibility {
            let _ = writeln!(s, "  {v}");
        }
        if let Some(sol) = &o.solution {
            let _ = writeln!(s, "objective value: {} {}", format_sig(sol.objective_value, 10), unit(o.kind));
            let tours = sol.tours();
            let _ = writeln!(s, "tours: {}", tours.len());
            for tour in &tours {
                let stops: Vec<String> = tour.stops.iter().map(|i| format!("{i}")).collect();
                let _ = writeln!(
                    s,
                    "  period {}: stops {} ({} boxes, departs at {} kg)",
                    tour.period,
                    stops.join(" "),
                    tour.boxes,
                    format_sig(tour.departure_mass, 10)
                );
            }
        }
        if let Some(e) = o.energy {
            let _ = writeln!(s, "recomputed energy: {} J", format_sig(e, 10));
        }
        if let Some(st) = &o.stats {
            let _ = writeln!(
                s,
                "search: {} nodes, {} LP iterations, bound {}, gap {}, {:.3} s",
                st.nodes_explored,
                st.lp_iterations,
                format_sig(st.best_bound, 10),
                format_sig(st.gap(), 3),
                st.wall_time
            );
        }

        s.push_str("[result]\n");
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "nt={}", self.nt);
        let _ = writeln!(s, "objective_kind={}", o.kind);
        let _ = writeln!(s, "method={}", o.method);
        let _ = writeln!(s, "status={}", o.status);
        if let Some(sol) = &o.solution {
            let _ = writeln!(s, "objective={}", sol.objective_value);
            let _ = writeln!(s, "tour_count={}", sol.tour_count());
            for t in 1..=sol.nt() {
                let stops: Vec<String> = (1..=sol.n()).filter(|&i| sol.stop(i, t)).map(|i| i.to_string()).collect();
                let _ = writeln!(s, "stops_t{t}={}", stops.join(","));
            }
        }
        if let Some(e) = o.energy {
            let _ = writeln!(s, "energy_j={e}");
        }
        if let Some(st) = &o.stats {
            let _ = writeln!(s, "nodes={}", st.nodes_explored);
            let _ = writeln!(s, "lp_iterations={}", st.lp_iterations);
            let _ = writeln!(s, "best_bound={}", st.best_bound);
            let _ = writeln!(s, "best_incumbent={}", st.best_incumbent);
            let _ = writeln!(s, "wall_time_s={:.6}", st.wall_time);
        }
        s
    }
}

fn cmd_solve(
    path: &Path,
    kind: ObjectiveKind,
    method: Method,
    limits: &SolveLimits,
    solution_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let inst = load_instance(path)?;
    let outcome = solve_instance(&inst, kind, method, limits)?;
    if let (Some(p), Some(sol)) = (solution_path, &outcome.solution) {
        std::fs::write(p, sol.to_json()).map_err(|e| Failure(format!("cannot write {}: {e}", p.display())))?;
    }
    let code = status_code(outcome.status);
    let report = RunReport { n: inst.n(), nt: inst.nt, outcome };
    out.write_all(report.render().as_bytes())?;
    Ok(code)
}

fn cmd_compare(path: &Path, method: Method, limits: &SolveLimits, out: &mut dyn Write) -> Result<i32, Failure> {
    let inst = load_instance(path)?;
    let r = compare_objectives(&inst, method, limits)?;
    let tours = |o: &SolveOutcome| o.solution.as_ref().map_or(0, Solution::tour_count);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "energy-optimal run:   {} J over {} tours ({})",
        format_sig(r.energy_of_energy_run, 10),
        tours(&r.energy_run),
        r.energy_run.status
    );
    let _ = writeln!(
        s,
        "distance-optimal run: {} J over {} tours ({})",
        format_sig(r.energy_of_distance_run, 10),
        tours(&r.distance_run),
        r.distance_run.status
    );
    let _ = writeln!(s, "energy ratio (distance / energy): {}", format_sig(r.ratio, 6));
    s.push_str("[result]\n");
    let _ = writeln!(s, "energy_run_status={}", r.energy_run.status);
    let _ = writeln!(s, "distance_run_status={}", r.distance_run.status);
    let _ = writeln!(s, "energy_of_energy_run={}", r.energy_of_energy_run);
    let _ = writeln!(s, "energy_of_distance_run={}", r.energy_of_distance_run);
    let _ = writeln!(s, "ratio={}", r.ratio);
    let _ = writeln!(s, "tours_energy_run={}", tours(&r.energy_run));
    let _ = writeln!(s, "tours_distance_run={}", tours(&r.distance_run));
    out.write_all(s.as_bytes())?;
    Ok(status_code(r.energy_run.status).max(status_code(r.distance_run.status)))
}

fn cmd_export(
    path: &Path,
    format: ExportFormat,
    kind: ObjectiveKind,
    target: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let inst = load_instance(path)?;
    let em = energy_matrix(&inst);
    let text = match format {
        ExportFormat::EnergyCsv => em.to_csv(),
        ExportFormat::Mps => export_mps(&build_model(&inst, &em, kind)?)?,
        ExportFormat::Lp => export_lp(&build_model(&inst, &em, kind)?),
    };
    emit(target, &text, out)?;
    Ok(EXIT_OK)
}

fn cmd_validate(inst_path: &Path, sol_path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let inst = load_instance(inst_path)?;
    let text =
        std::fs::read_to_string(sol_path).map_err(|e| Failure(format!("cannot read {}: {e}", sol_path.display())))?;
    let sol = Solution::from_json(&text).map_err(|e| Failure(format!("{}: {e}", sol_path.display())))?;
    let violations = check_feasibility(&inst, &sol)?;
    let em = energy_matrix(&inst);
    let recomputed = recompute_objective(&inst, &em, &sol, sol.kind);
    let objective_ok = (recomputed - sol.objective_value).abs() <= 1e-6 * recomputed.abs().max(1.0);

    let mut s = String::new();
    if !violations.is_empty() {
        let _ = writeln!(s, "{TSV_HEADER}");
        for v in &violations {
            let _ = writeln!(s, "{}", v.tsv());
        }
    }
    s.push_str("[result]\n");
    let _ = writeln!(s, "violations={}", violations.len());
    let _ = writeln!(s, "objective_reported={}", sol.objective_value);
    let _ = writeln!(s, "objective_recomputed={recomputed}");
    let _ = writeln!(s, "objective_consistent={objective_ok}");
    out.write_all(s.as_bytes())?;
    Ok(if violations.is_empty() && objective_ok { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_gen(
    seed: u64,
    stations: usize,
    periods: usize,
    profile: &str,
    target: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let inst = generate_instance(seed, stations, periods, profile)?;
    emit(target, &render_instance(&inst), out)?;
    Ok(EXIT_OK)
}
