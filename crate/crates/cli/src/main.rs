use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use liftpath::bound::{lp_bound, BoundError, DEFAULT_MAX_PATH_LEN};
use liftpath::driver::{certify, solve, SolveConfig, SolveStatus};
use liftpath::instance::{active_st_paths, parse_instance, parse_solution, write_solution};
use liftpath::milp::Family;
use liftpath::oracle::{brute_force_optimum, OracleError, DEFAULT_ORACLE_LIMIT};
use liftpath::reductions::mcf::{decide_mcf, parse_mcf, reduce_mcf};
use liftpath::reductions::sat::{decide_3sat, parse_dimacs, reduce_3sat};
use liftpath::reductions::DecideError;
use liftpath::scalar::format_sig;
use liftpath::tracking::{score_assignment, track, CostTable, TrackingConfig, TrackingError};
use liftpath::Instance;

const USAGE: u8 = 1;
const INPUT: u8 = 2;
const NEGATIVE: u8 = 3;
const LIMIT: u8 = 4;

/// Lifted disjoint paths solver.
///
/// Results go to stdout, logs to stderr (set RUST_LOG to change verbosity).
/// Exit codes: 0 success, 1 usage error, 2 input error, 3 negative decision,
/// 4 resource limit reached.
#[derive(Parser)]
#[command(name = "liftpath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance by branch-and-cut and print the solution file.
    Solve {
        instance: PathBuf,
        /// Write the JSON-lines round trace here instead of stderr.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Solve a small instance by exhaustive enumeration.
    Oracle {
        instance: PathBuf,
        /// Largest number of feasible solutions to enumerate.
        #[arg(long, default_value_t = DEFAULT_ORACLE_LIMIT)]
        limit: usize,
    },
    /// Print the LP relaxation bound under the chosen inequality families.
    Bound {
        instance: PathBuf,
        /// Comma-separated family names; all families when omitted.
        #[arg(long, value_delimiter = ',')]
        families: Vec<Family>,
        /// Longest path enumerated for path-based families.
        #[arg(long, default_value_t = DEFAULT_MAX_PATH_LEN)]
        max_path_len: usize,
    },
    /// Build a lifted disjoint paths instance from a 3-SAT formula or a
    /// multicommodity flow network.
    Reduce {
        kind: Problem,
        input: PathBuf,
        /// Output instance file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decide a 3-SAT formula or a multicommodity flow network through its
    /// reduction. Exits 0 when the answer is yes and 3 when it is no.
    Decide {
        kind: Problem,
        input: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Two-step multiple object tracking from a pairwise cost file.
    Track {
        costs: PathBuf,
        /// Frames per first-step interval.
        #[arg(long, default_value_t = 50)]
        interval_len: u32,
        /// Base edges kept per detection and direction, by cost.
        #[arg(long = "K", default_value_t = 3)]
        k: usize,
        /// Largest frame gap bridged by an edge.
        #[arg(long, default_value_t = 20)]
        max_gap_frames: u32,
        /// Lifted edges with |cost| below this are dropped.
        #[arg(long, default_value_t = 0.05)]
        lift_epsilon: f64,
        /// Frame rate used to space the lifted edges.
        #[arg(long, default_value_t = 10.0)]
        fps: f64,
        /// Threads solving first-step intervals.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Second-step iterations before giving up.
        #[arg(long, default_value_t = 20)]
        max_iterations: usize,
        /// Score the tracks against the `gt` lines and print the metrics.
        #[arg(long)]
        metrics: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check an instance file, and a solution file against it when given.
    Validate { instance: PathBuf, solution: Option<PathBuf> },
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem {
    Sat,
    Mcf,
}

#[derive(Args)]
struct SolverArgs {
    /// Separation rounds before stopping.
    #[arg(long, default_value_t = 100)]
    max_rounds: usize,
    /// Branch-and-bound nodes per master solve.
    #[arg(long, default_value_t = 100_000)]
    node_limit: usize,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Skip the symmetric cut inequalities during separation.
    #[arg(long)]
    no_symmetric: bool,
    /// Force the lifted flow inequalities on or off; by default they are
    /// used when the instance has frames.
    #[arg(long)]
    lifted_flow: Option<bool>,
}

impl SolverArgs {
    fn config(&self) -> Result<SolveConfig, Failure> {
        if self.max_rounds == 0 {
            return Err(Failure::usage("--max-rounds must be at least 1"));
        }
        let time_limit = match self.time_limit {
            None => None,
            Some(s) if s.is_finite() && s >= 0.0 => Some(Duration::from_secs_f64(s)),
            Some(s) => return Err(Failure::usage(format!("invalid --time-limit {s}"))),
        };
        Ok(SolveConfig {
            max_cut_rounds: self.max_rounds,
            ilp_node_limit: self.node_limit,
            include_symmetric: !self.no_symmetric,
            include_lifted_flow: self.lifted_flow,
            time_limit,
        })
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(msg: impl Display) -> Self {
        Failure { code: USAGE, message: msg.to_string() }
    }

    fn input(path: &Path, msg: impl Display) -> Self {
        Failure { code: INPUT, message: format!("{}: {msg}", path.display()) }
    }

    fn limit(msg: impl Display) -> Self {
        Failure { code: LIMIT, message: msg.to_string() }
    }

    fn negative() -> Self {
        Failure { code: NEGATIVE, message: String::new() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(path, e))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    parse_instance(&read(path)?).map_err(|e| Failure::input(path, e))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::input(Path::new("<stdout>"), e))
        }
    }
}

fn decide_failure(e: DecideError) -> Failure {
    match e {
        DecideError::Limit(_) => Failure::limit(e),
        DecideError::Solve(_) => Failure { code: INPUT, message: e.to_string() },
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve { instance, trace, solver } => {
            let config = solver.config()?;
            let inst = load_instance(&instance)?;
            let out = solve(&inst, &config).map_err(|e| Failure::input(&instance, e))?;
            let paths = active_st_paths(&inst, &out.solution).expect("solver output is a flow");
            emit(None, &write_solution(out.solution.objective, &paths))?;
            let lines = out.trace_json_lines();
            match trace {
                Some(p) => fs::write(&p, lines).map_err(|e| Failure::input(&p, e))?,
                None => eprint!("{lines}"),
            }
            log::info!("{} after {} rounds", out.status, out.rounds_used);
            if out.status != SolveStatus::Optimal {
                return Err(Failure::limit(format!("stopped with status {}; the solution is feasible but not proven optimal", out.status)));
            }
        }
        Command::Oracle { instance, limit } => {
            let inst = load_instance(&instance)?;
            let sol = brute_force_optimum(&inst, limit).map_err(|e| match e {
                OracleError::TooLarge(_) | OracleError::LimitExceeded(_) => Failure::limit(e),
            })?;
            let paths = active_st_paths(&inst, &sol).expect("oracle output is a flow");
            emit(None, &write_solution(sol.objective, &paths))?;
        }
        Command::Bound { instance, families, max_path_len } => {
            let inst = load_instance(&instance)?;
            let families = if families.is_empty() { Family::ALL.to_vec() } else { families };
            let b = lp_bound(&inst, &families, max_path_len).map_err(|e| match e {
                BoundError::PathLenTooLarge(_) | BoundError::Unsupported(_) => Failure::usage(e),
                BoundError::BudgetExceeded(_) => Failure::limit(e),
                _ => Failure::input(&instance, e),
            })?;
            emit(None, &format!("{}\n", format_sig(b.value)))?;
        }
        Command::Reduce { kind, input, output } => {
            let text = read(&input)?;
            let inst = match kind {
                Problem::Sat => reduce_3sat(&parse_dimacs(&text).map_err(|e| Failure::input(&input, e))?).to_text(),
                Problem::Mcf => reduce_mcf(&parse_mcf(&text).map_err(|e| Failure::input(&input, e))?).to_text(),
            };
            emit(output.as_deref(), &inst)?;
        }
        Command::Decide { kind, input, solver } => {
            let config = solver.config()?;
            let text = read(&input)?;
            let yes = match kind {
                Problem::Sat => {
                    let formula = parse_dimacs(&text).map_err(|e| Failure::input(&input, e))?;
                    let d = decide_3sat(&formula, &config).map_err(decide_failure)?;
                    let mut out = format!(
                        "{}\noptimum {}\n",
                        if d.satisfiable { "satisfiable" } else { "unsatisfiable" },
                        format_sig(d.optimum)
                    );
                    if let Some(a) = &d.assignment {
                        out.push_str("assignment");
                        for (i, v) in a.iter().enumerate() {
                            let lit = i as i64 + 1;
                            out.push_str(&format!(" {}", if *v { lit } else { -lit }));
                        }
                        out.push('\n');
                    }
                    emit(None, &out)?;
                    d.satisfiable
                }
                Problem::Mcf => {
                    let problem = parse_mcf(&text).map_err(|e| Failure::input(&input, e))?;
                    let d = decide_mcf(&problem, &config).map_err(decide_failure)?;
                    emit(
                        None,
                        &format!("{}\noptimum {}\n", if d.feasible { "feasible" } else { "infeasible" }, format_sig(d.optimum)),
                    )?;
                    d.feasible
                }
            };
            if !yes {
                return Err(Failure::negative());
            }
        }
        Command::Track {
            costs,
            interval_len,
            k,
            max_gap_frames,
            lift_epsilon,
            fps,
            jobs,
            max_iterations,
            metrics,
            solver,
        } => {
            if interval_len == 0 || k == 0 || jobs == 0 || max_iterations == 0 {
                return Err(Failure::usage("--interval-len, --K, --jobs and --max-iterations must be positive"));
            }
            if !(fps > 0.0 && fps.is_finite()) || !(lift_epsilon >= 0.0) {
                return Err(Failure::usage("--fps must be positive and --lift-epsilon non-negative"));
            }
            let config = TrackingConfig {
                interval_len,
                k,
                max_gap_frames,
                lift_epsilon,
                fps,
                jobs,
                max_iterations,
                solve: solver.config()?,
            };
            let table = CostTable::parse(&read(&costs)?).map_err(|e| Failure::input(&costs, e))?;
            let result = track(&table, &config).map_err(|e| match e {
                TrackingError::Limit { .. } | TrackingError::SecondStepLimit(_) => Failure::limit(e),
                _ => Failure::input(&costs, e),
            })?;
            let tracks = result.tracks();
            let mut out = tracks.to_text();
            out.push_str(&format!("objective {}\n", format_sig(tracks.objective)));
            if metrics {
                if table.truth().is_empty() {
                    return Err(Failure::input(&costs, "--metrics needs `gt` lines"));
                }
                let m = score_assignment(&tracks.tracks, table.truth());
                for (name, v) in [
                    ("idf1", m.idf1),
                    ("idp", m.idp),
                    ("idr", m.idr),
                    ("mota", m.mota),
                    ("link_precision", m.link_precision),
                    ("link_recall", m.link_recall),
                ] {
                    out.push_str(&format!("metric {name} {}\n", format_sig(v)));
                }
                for (name, v) in [
                    ("id_switches", m.id_switches),
                    ("false_positives", m.false_positives),
                    ("misses", m.misses),
                ] {
                    out.push_str(&format!("metric {name} {v}\n"));
                }
            }
            emit(None, &out)?;
        }
        Command::Validate { instance, solution } => {
            let inst = load_instance(&instance)?;
            if let Some(path) = solution {
                let text = read(&path)?;
                let (sol, stated) = parse_solution(&inst, &text).map_err(|e| Failure::input(&path, e))?;
                let cert = certify(&inst, &sol);
                if let Some(v) = cert.violations.first() {
                    return Err(Failure::input(&path, v));
                }
                if (stated - sol.objective).abs() > 1e-6 * sol.objective.abs().max(1.0) {
                    let line = text
                        .lines()
                        .position(|l| l.split_whitespace().next() == Some("objective"))
                        .map_or(1, |i| i + 1);
                    return Err(Failure::input(
                        &path,
                        format!("line {line}: stated objective {} but the paths cost {}", format_sig(stated), format_sig(sol.objective)),
                    ));
                }
            }
            emit(None, "ok\n")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
