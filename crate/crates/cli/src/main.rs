//! `weakbmo` command-line front end.
//!
//! Every command prints JSON (or CSV for sweeps) on standard output. Exit
//! codes: 0 on success, 1 on invalid flags or input, 2 when a numerical
//! procedure fails to converge.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use weakbmo::bellman::{mu_critical, BellmanEvaluator};
use weakbmo::extremal::{exp_average, ExtremalSpec};
use weakbmo::geometry::{check_axioms, Domain};
use weakbmo::induction::{induct, verify_main_inequality, InductionOptions, Verdict};
use weakbmo::mlcf::{compare_comb, counterexample_report, solve, CombWindow, EdgeData, SolveOptions, TwoDiskWindow};
use weakbmo::oscillation::{membership_a, norm_report, DEFAULT_K_MAX};
use weakbmo::{CombDomain, PlanePoint, StepFunction, TwoDiskDomain};

#[derive(Parser, Debug)]
#[command(name = "weakbmo", version, about = "Weak BMO laboratory: norms, Bellman functions, extremals and grid solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Oscillation norms and class membership of a step function file.
    #[command(allow_negative_numbers = true)]
    Norms {
        file: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 10)]
        dyadic_depth: u32,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        k_max: usize,
    },
    /// Closed-form Bellman function commands.
    Bellman {
        #[command(subcommand)]
        command: BellmanCommand,
    },
    /// Closed-form Bellman function at a point (same as `bellman eval`).
    #[command(allow_negative_numbers = true)]
    BellmanEval(EvalArgs),
    /// Critical exponent of the comb domain.
    #[command(allow_negative_numbers = true)]
    MuCrit {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        epsilon: f64,
    },
    /// Writes the truncated extremal step function as JSON.
    #[command(allow_negative_numbers = true)]
    Extremal {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        epsilon: f64,
        /// Number of geometric pieces; defaults to a tail mass below 1e-12.
        #[arg(long)]
        pieces: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exponential average of the extremal function against the vertex value.
    #[command(allow_negative_numbers = true)]
    Sharpness {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        pieces: Option<usize>,
    },
    /// Bellman induction and verdict for a step function file.
    #[command(allow_negative_numbers = true)]
    Induct {
        file: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 60)]
        max_depth: usize,
        #[arg(long, default_value_t = 1e-12)]
        mass_tol: f64,
        /// Trace CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid solver for the minimal locally concave function.
    #[command(allow_negative_numbers = true)]
    Mlcf {
        #[arg(long, value_enum)]
        domain: DomainKind,
        /// Cells per side.
        #[arg(long)]
        grid: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        /// Data on the vertical window edges of the comb.
        #[arg(long, value_enum, default_value_t = EdgeMode::Constant)]
        edge: EdgeMode,
        /// Half-width of the comb window in lattice periods.
        #[arg(long, default_value_t = 1)]
        periods: u32,
        #[arg(long)]
        stencil_radius: Option<usize>,
        /// Field CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-disk counterexample report.
    #[command(allow_negative_numbers = true)]
    Counterexample {
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
    },
    /// Structural axiom report for a domain.
    #[command(allow_negative_numbers = true)]
    Axioms {
        #[arg(long, value_enum, default_value_t = DomainKind::Comb)]
        domain: DomainKind,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
    },
    /// CSV of a scalar report over a list of parameter values.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        #[arg(long, value_enum, default_value_t = SweepReport::Vertex0)]
        report: SweepReport,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum BellmanCommand {
    #[command(allow_negative_numbers = true)]
    Eval(EvalArgs),
}

#[derive(clap::Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    x1: f64,
    #[arg(long)]
    x2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DomainKind {
    Comb,
    TwoDisk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EdgeMode {
    ClosedForm,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    Lambda,
    Epsilon,
    Mu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepReport {
    Vertex0,
    MuCrit,
}

/// Failure classes, mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Invalid(String),
    Numerical(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl From<weakbmo::Error> for Failure {
    fn from(e: weakbmo::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn positive(flag: &str, v: f64) -> Outcome {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("--{flag} must be positive, got {v}")))
    }
}

fn non_negative(flag: &str, v: f64) -> Outcome {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("--{flag} must be non-negative, got {v}")))
    }
}

fn at_least(flag: &str, v: usize, min: usize) -> Outcome {
    if v >= min {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("--{flag} must be at least {min}, got {v}")))
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Failure::Invalid(format!("file not found: {}", path.display())),
        _ => Failure::Invalid(format!("cannot read {}: {e}", path.display())),
    })
}

fn read_step_function(path: &Path) -> Result<StepFunction, Failure> {
    let text = read_input(path)?;
    StepFunction::from_json(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))
}

/// Writes to stdout; a closed pipe (say, into `head`) is not an error.
fn print_stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(value: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Invalid(e.to_string()))?;
    print_stdout(&format!("{text}\n"));
    Ok(())
}

fn evaluator(lambda: f64, epsilon: f64, mu: f64) -> Result<BellmanEvaluator, Failure> {
    positive("lambda", lambda)?;
    positive("epsilon", epsilon)?;
    non_negative("mu", mu)?;
    Ok(BellmanEvaluator::new(CombDomain::new(lambda, epsilon)?, mu)?)
}

fn extremal_spec(lambda: f64, epsilon: f64, pieces: Option<usize>) -> Result<ExtremalSpec, Failure> {
    positive("lambda", lambda)?;
    positive("epsilon", epsilon)?;
    Ok(match pieces {
        Some(n) => {
            at_least("pieces", n, 1)?;
            ExtremalSpec::new(lambda, epsilon, n)?
        }
        None => ExtremalSpec::with_default_pieces(lambda, epsilon)?,
    })
}

fn bellman_eval(args: &EvalArgs) -> Outcome {
    let ev = evaluator(args.lambda, args.epsilon, args.mu)?;
    let p = PlanePoint::new(args.x1, args.x2);
    if !p.is_finite() {
        return Err(Failure::Invalid("--x1 and --x2 must be finite".into()));
    }
    let e = ev.evaluate(&p)?;
    emit(&json!({
        "value": e.value,
        "segment": {"u": e.segment.u, "vertex_n": e.segment.vertex_n},
    }))
}

fn sweep_value(report: SweepReport, lambda: f64, epsilon: f64, mu: f64) -> Result<f64, Failure> {
    Ok(match report {
        SweepReport::MuCrit => {
            positive("lambda", lambda)?;
            positive("epsilon", epsilon)?;
            mu_critical(lambda, epsilon)?
        }
        SweepReport::Vertex0 => evaluator(lambda, epsilon, mu)?.vertex_value(0),
    })
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Norms {
            file,
            lambda,
            epsilon,
            dyadic_depth,
            k_max,
        } => {
            positive("lambda", lambda)?;
            positive("epsilon", epsilon)?;
            at_least("k-max", k_max, 1)?;
            let f = read_step_function(&file)?;
            let report = norm_report(&f, lambda, dyadic_depth, k_max)?;
            let membership = membership_a(&f, &CombDomain::new(lambda, epsilon)?, false)?;
            emit(&json!({"norms": report, "membership": membership}))
        }
        Command::Bellman {
            command: BellmanCommand::Eval(args),
        } => bellman_eval(&args),
        Command::BellmanEval(args) => bellman_eval(&args),
        Command::MuCrit { lambda, epsilon } => {
            positive("lambda", lambda)?;
            positive("epsilon", epsilon)?;
            print_stdout(&format!("{}\n", mu_critical(lambda, epsilon)?));
            Ok(())
        }
        Command::Extremal {
            lambda,
            epsilon,
            pieces,
            out,
        } => {
            let spec = extremal_spec(lambda, epsilon, pieces)?;
            write_output(&out, &spec.build().to_json())?;
            emit(&json!({
                "pieces": spec.n_pieces(),
                "ratio": spec.ratio(),
                "tail_mass": spec.tail_mass(),
                "out": out.display().to_string(),
            }))
        }
        Command::Sharpness {
            lambda,
            epsilon,
            mu,
            pieces,
        } => {
            non_negative("mu", mu)?;
            let spec = extremal_spec(lambda, epsilon, pieces)?;
            let avg = exp_average(&spec, mu)?;
            let closed_form = if avg.divergent {
                None
            } else {
                Some(evaluator(lambda, epsilon, mu)?.vertex_value(0))
            };
            emit(&json!({
                "series": avg.value,
                "closed_form": closed_form,
                "diff": closed_form.map(|c| avg.value - c),
                "tail_bound": avg.tail_bound,
                "divergent": avg.divergent,
                "ratio": avg.ratio,
            }))
        }
        Command::Induct {
            file,
            lambda,
            epsilon,
            mu,
            max_depth,
            mass_tol,
            out,
        } => {
            let ev = evaluator(lambda, epsilon, mu)?;
            non_negative("mass-tol", mass_tol)?;
            let opts = InductionOptions { max_depth, mass_tol };
            let f = read_step_function(&file)?;
            let report = verify_main_inequality(&f, &ev, &opts)?;
            if let Some(path) = out {
                let csv = if report.verdict == Verdict::Skipped {
                    String::from("generation,a,b,x1,x2,leaf,bellman_sum\n")
                } else {
                    induct(&f.lift(), &ev, &opts)?.to_csv()
                };
                write_output(&path, &csv)?;
            }
            emit(&report)
        }
        Command::Mlcf {
            domain,
            grid,
            tol,
            max_iters,
            mu,
            lambda,
            epsilon,
            edge,
            periods,
            stencil_radius,
            out,
        } => {
            at_least("grid", grid, 2)?;
            positive("tol", tol)?;
            at_least("max-iters", max_iters, 1)?;
            at_least("periods", periods as usize, 1)?;
            if let Some(r) = stencil_radius {
                at_least("stencil-radius", r, 1)?;
            }
            let opts = SolveOptions {
                tol,
                max_iters,
                stencil_radius,
                ..SolveOptions::new(grid)
            };
            let (solution, details) = match domain {
                DomainKind::Comb => {
                    let ev = evaluator(lambda, epsilon, mu)?;
                    let data = match edge {
                        EdgeMode::ClosedForm => EdgeData::ClosedForm,
                        EdgeMode::Constant => EdgeData::Constant(None),
                    };
                    let window = CombWindow::with_periods(ev, data, periods);
                    let (sol, cmp) = compare_comb(&window, &opts)?;
                    let probe = sol.field.query(&window, &ev.domain().vertex(0))?;
                    (sol, json!({"comparison": cmp, "probe": {"x1": 0.0, "x2": epsilon * epsilon, "value": probe}}))
                }
                DomainKind::TwoDisk => {
                    let window = TwoDiskWindow::default();
                    let sol = solve(&window, &opts)?;
                    let p = PlanePoint::new(0.0, -0.8);
                    let probe = sol.field.query(&window, &p)?;
                    (sol, json!({"probe": {"x1": p.x1, "x2": p.x2, "value": probe}}))
                }
            };
            if let Some(path) = out {
                write_output(&path, &solution.field.to_csv())?;
            }
            let mut summary = json!({
                "domain": match domain { DomainKind::Comb => "comb", DomainKind::TwoDisk => "two-disk" },
                "cells": grid,
                "iterations": solution.iterations,
                "residual": solution.residual,
                "directions": solution.directions,
            });
            if let (Some(s), Some(d)) = (summary.as_object_mut(), details.as_object()) {
                s.extend(d.clone());
            }
            emit(&summary)
        }
        Command::Counterexample { grid, tol, max_iters } => {
            at_least("grid", grid, 2)?;
            positive("tol", tol)?;
            at_least("max-iters", max_iters, 1)?;
            let opts = SolveOptions {
                tol,
                max_iters,
                ..SolveOptions::new(grid)
            };
            emit(&counterexample_report(&opts)?)
        }
        Command::Axioms {
            domain,
            lambda,
            epsilon,
        } => {
            let dom = match domain {
                DomainKind::Comb => {
                    positive("lambda", lambda)?;
                    positive("epsilon", epsilon)?;
                    Domain::Comb(CombDomain::new(lambda, epsilon)?)
                }
                DomainKind::TwoDisk => Domain::TwoDisk(TwoDiskDomain::default()),
            };
            emit(&json!({"domain": dom.descriptor(), "report": check_axioms(&dom)}))
        }
        Command::Sweep {
            param,
            values,
            report,
            lambda,
            epsilon,
            mu,
            out,
        } => {
            let (name, column) = (
                match param {
                    SweepParam::Lambda => "lambda",
                    SweepParam::Epsilon => "epsilon",
                    SweepParam::Mu => "mu",
                },
                match report {
                    SweepReport::Vertex0 => "vertex0",
                    SweepReport::MuCrit => "mu_crit",
                },
            );
            let mut csv = format!("{name},{column}\n");
            for &v in &values {
                let (l, e, m) = match param {
                    SweepParam::Lambda => (v, epsilon, mu),
                    SweepParam::Epsilon => (lambda, v, mu),
                    SweepParam::Mu => (lambda, epsilon, v),
                };
                let r = sweep_value(report, l, e, m)?;
                csv.push_str(&format!("{v:.16e},{r:.16e}\n"));
            }
            match out {
                Some(path) => write_output(&path, &csv),
                None => {
                    print_stdout(&csv);
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, msg) = match &f {
                Failure::Invalid(m) => ("error", m),
                Failure::Numerical(m) => ("numerical failure", m),
            };
            eprintln!("{kind}: {msg}");
            ExitCode::from(f.exit_code())
        }
    }
}
