//! `pltlf`: command-line front end.
//!
//! Exit codes: 0 yes/success, 1 no/unsat/violation, 2 error.

use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use pltlf::automaton::{TreeAutomaton, WitnessNode};
use pltlf::formula::{parse_formula, parse_trace, Formula, Valuation};
use pltlf::fragment::{build_lphi_with_jobs, MonitorState, Pltlf0Formula, ScenarioTable};
use pltlf::mining::{mine, EventLog, TemplateCatalog};
use pltlf::rational::{fmt_fraction, int, parse_probability, to_f64, Rational};
use pltlf::weighted::{build_weighted, TraceNFA, WeightedAutomaton};
use serde_json::{json, Value};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "pltlf",
    version,
    about = "Reasoner for probabilistic LTL over finite traces"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Worker threads for scenario checks. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
    /// Add wall-clock time to the output envelope.
    #[arg(long, global = true)]
    timing: bool,
    /// Indent JSON output.
    #[arg(long, global = true)]
    pretty: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decide satisfiability of a PLTLf formula.
    Sat { formula: String },
    /// Print a witness tree for a satisfiable formula.
    Model { formula: String },
    /// The largest trace probability and some traces reaching it.
    Mlt {
        formula: String,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
    },
    /// Probability of a trace, or of the traces accepted by an automaton.
    Prob {
        formula: String,
        /// Steps separated by `;`, propositions by `,`, `-` for the empty step.
        #[arg(
            long,
            required_unless_present = "nfa",
            conflicts_with = "nfa",
            allow_hyphen_values = true
        )]
        trace: Option<String>,
        /// Trace automaton in JSON.
        #[arg(long)]
        nfa: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
    },
    /// Best probability among the extensions of a prefix.
    Prefix {
        formula: String,
        #[arg(long, allow_hyphen_values = true)]
        prefix: String,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
    },
    /// Satisfiability of a constraint file.
    P0Sat { file: PathBuf },
    /// Scenarios, their maximal probabilities and the linear system.
    P0Scenarios { file: PathBuf },
    /// Read one step per stdin line and report the most likely scenario.
    P0Monitor {
        file: PathBuf,
        /// Plain LTLf property the scenario must also leave room for.
        #[arg(long)]
        property: Option<String>,
    },
    /// Mine constraints from a CSV event log and print them in constraint-file form.
    Mine {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_parser = parse_support)]
        min_support: Rational,
        /// Comma separated template names; all known templates by default.
        #[arg(long, value_delimiter = ',')]
        templates: Vec<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sat { .. } => "sat",
            Command::Model { .. } => "model",
            Command::Mlt { .. } => "mlt",
            Command::Prob { .. } => "prob",
            Command::Prefix { .. } => "prefix",
            Command::P0Sat { .. } => "p0-sat",
            Command::P0Scenarios { .. } => "p0-scenarios",
            Command::P0Monitor { .. } => "p0-monitor",
            Command::Mine { .. } => "mine",
        }
    }
}

fn parse_support(s: &str) -> Result<Rational, String> {
    parse_probability(s).map_err(|e| e.to_string())
}

type Failure = String;

/// What a command produced: a JSON payload or text printed as is.
enum Output {
    Json {
        status: &'static str,
        result: Value,
        code: u8,
    },
    Text(String),
    /// Already streamed; only the exit code is left.
    Done(u8),
}

fn rat(r: &Rational) -> Value {
    json!({ "value": fmt_fraction(r), "decimal": to_f64(r) })
}

fn formula_arg(text: &str) -> Result<Formula, Failure> {
    parse_formula(text).map_err(|e| format!("formula {e}"))
}

fn trace_arg(text: &str) -> Result<Vec<Valuation>, Failure> {
    parse_trace(text).map_err(|e| format!("trace: {e}"))
}

fn node_json(n: &WitnessNode) -> Value {
    let mut v = json!({ "valuation": n.valuation.to_string() });
    if let Some(q) = n.state {
        v["state"] = json!(q);
    }
    if let Some(p) = &n.probability {
        v["probability"] = rat(p);
    }
    if !n.is_leaf() {
        v["children"] = n.children.iter().map(node_json).collect();
    }
    v
}

fn automaton(f: &Formula, jobs: usize) -> Result<TreeAutomaton, Failure> {
    let a = TreeAutomaton::new(f).map_err(|e| e.to_string())?;
    if jobs > 1 {
        a.precompute(jobs);
    }
    Ok(a)
}

fn weighted(text: &str, jobs: usize) -> Result<WeightedAutomaton, Failure> {
    let a = automaton(&formula_arg(text)?, jobs)?;
    Ok(build_weighted(&a))
}

fn load_p0(path: &Path, jobs: usize) -> Result<ScenarioTable, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let phi: Pltlf0Formula = text
        .parse()
        .map_err(|e| format!("{}: {e}", path.display()))?;
    info!(
        "{} constraints, {} scenarios",
        phi.len(),
        phi.scenario_count()
    );
    build_lphi_with_jobs(&phi, jobs).map_err(|e| e.to_string())
}

fn traces_json(w: &WeightedAutomaton, traces: &[pltlf::formula::Trace]) -> Result<Value, Failure> {
    traces
        .iter()
        .map(|t| {
            let p = w.trace_probability(t.steps()).map_err(|e| e.to_string())?;
            Ok(json!({ "trace": t.to_string(), "probability": rat(&p) }))
        })
        .collect::<Result<Vec<_>, Failure>>()
        .map(Value::Array)
}

fn yes_no(yes: bool, result: Value) -> Output {
    if yes {
        Output::Json {
            status: "sat",
            result,
            code: 0,
        }
    } else {
        Output::Json {
            status: "unsat",
            result,
            code: 1,
        }
    }
}

fn ok(result: Value) -> Output {
    Output::Json {
        status: "ok",
        result,
        code: 0,
    }
}

fn run(cmd: &Command, global: &Global) -> Result<Output, Failure> {
    let jobs = global.jobs as usize;
    match cmd {
        Command::Sat { formula } => {
            let a = automaton(&formula_arg(formula)?, jobs)?;
            let sat = !a.is_empty();
            Ok(yes_no(
                sat,
                json!({ "formula": formula, "satisfiable": sat }),
            ))
        }
        Command::Model { formula } => {
            let a = automaton(&formula_arg(formula)?, jobs)?;
            let model = a.witness_model();
            let sat = model.is_some();
            let model = model.map(|m| node_json(&m.root));
            Ok(yes_no(
                sat,
                json!({ "formula": formula, "satisfiable": sat, "model": model }),
            ))
        }
        Command::Mlt {
            formula,
            count,
            max_len,
        } => {
            let w = weighted(formula, jobs)?;
            let norm = w.norm();
            let traces = w
                .mlt_acceptor()
                .enumerate(*count, *max_len)
                .map_err(|e| e.to_string())?;
            let result = json!({ "formula": formula, "norm": rat(&norm), "traces": traces_json(&w, &traces)? });
            Ok(yes_no(!traces.is_empty(), result))
        }
        Command::Prob {
            formula,
            trace,
            nfa,
            count,
            max_len,
        } => {
            let w = weighted(formula, jobs)?;
            if let Some(text) = trace {
                let t = trace_arg(text)?;
                let p = w.trace_probability(&t).map_err(|e| e.to_string())?;
                return Ok(ok(
                    json!({ "formula": formula, "trace": text, "probability": rat(&p) }),
                ));
            }
            let path = nfa.as_ref().expect("clap requires --trace or --nfa");
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let nfa = TraceNFA::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            let (p, acc) = w.language_probability(&nfa).map_err(|e| e.to_string())?;
            let best = acc.enumerate(*count, *max_len).map_err(|e| e.to_string())?;
            Ok(ok(
                json!({ "formula": formula, "probability": rat(&p), "traces": traces_json(&w, &best)? }),
            ))
        }
        Command::Prefix {
            formula,
            prefix,
            count,
            max_len,
        } => {
            let w = weighted(formula, jobs)?;
            let t = trace_arg(prefix)?;
            let (p, acc) = w.prefix_extension_query(&t).map_err(|e| e.to_string())?;
            let best = acc.enumerate(*count, *max_len).map_err(|e| e.to_string())?;
            let result = json!({
                "formula": formula,
                "prefix": prefix,
                "probability": rat(&p),
                "extensions": traces_json(&w, &best)?,
            });
            Ok(ok(result))
        }
        Command::P0Sat { file } => {
            let table = load_p0(file, jobs)?;
            let sat = table.is_satisfiable();
            let witness = table.witness().map(|x| {
                (0..table.len())
                    .filter(|&i| x[i] != int(0))
                    .map(|i| json!({ "scenario": table.formula().label(i), "weight": rat(&x[i]) }))
                    .collect::<Vec<_>>()
            });
            // scenarios with weight 0 are left out of the witness
            Ok(yes_no(
                sat,
                json!({ "satisfiable": sat, "witness": witness }),
            ))
        }
        Command::P0Scenarios { file } => {
            let table = load_p0(file, jobs)?;
            let phi = table.formula();
            let scenarios: Vec<Value> = (0..table.len())
                .map(|i| {
                    json!({
                        "index": i,
                        "label": phi.label(i),
                        "description": phi.describe(i),
                        "satisfiable": table.scenario_satisfiable(i),
                        "max": table.max(i).map(rat),
                    })
                })
                .collect();
            let result = json!({
                "satisfiable": table.is_satisfiable(),
                "scenarios": scenarios,
                "system": table.system().to_string(),
            });
            Ok(yes_no(table.is_satisfiable(), result))
        }
        Command::P0Monitor { file, property } => {
            let table = Arc::new(load_p0(file, jobs)?);
            let state = match property {
                Some(p) => MonitorState::with_property(table, &formula_arg(p)?),
                None => MonitorState::new(table),
            }
            .map_err(|e| e.to_string())?;
            monitor(state, global.pretty).map(Output::Done)
        }
        Command::Mine {
            log,
            min_support,
            templates,
        } => {
            let events = EventLog::load(log).map_err(|e| format!("{}: {e}", log.display()))?;
            let catalog = if templates.is_empty() {
                TemplateCatalog::default()
            } else {
                TemplateCatalog::select(templates).map_err(|e| e.to_string())?
            };
            let mined = mine(&events, min_support, &catalog).map_err(|e| e.to_string())?;
            debug!("{} constraints mined", mined.constraints.len());
            Ok(Output::Text(mined.render()))
        }
    }
}

fn print_json(v: &Value, pretty: bool) {
    let text = if pretty {
        serde_json::to_string_pretty(v)
    } else {
        serde_json::to_string(v)
    };
    println!("{}", text.expect("JSON values always serialize"));
}

/// Streams one JSON line per step, starting with the empty prefix. Exit 1 if
/// the final prefix is a violation.
fn monitor(mut state: MonitorState, pretty: bool) -> Result<u8, Failure> {
    let emit = |s: &MonitorState| {
        let mut event = serde_json::to_value(s.event()).expect("events serialize");
        event["probability"] = rat(&s.probability());
        print_json(&event, pretty);
        let _ = std::io::stdout().flush();
    };
    emit(&state);
    for (n, line) in std::io::stdin().lock().lines().enumerate() {
        let line = line.map_err(|e| format!("stdin: {e}"))?;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let steps = parse_trace(text).map_err(|e| format!("stdin line {}: {e}", n + 1))?;
        if steps.len() != 1 {
            return Err(format!(
                "stdin line {}: expected one step, got {}",
                n + 1,
                steps.len()
            ));
        }
        state = state.step(&steps[0]);
        emit(&state);
    }
    Ok(u8::from(state.violated()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("PLTLF_LOG")).init();
    let cli = Cli::parse();
    let start = Instant::now();
    let name = cli.command.name();
    match run(&cli.command, &cli.global) {
        Ok(Output::Json {
            status,
            result,
            code,
        }) => {
            let mut envelope = json!({ "command": name, "status": status, "result": result });
            if cli.global.timing {
                envelope["timing_ms"] = json!(start.elapsed().as_millis() as u64);
            }
            print_json(&envelope, cli.global.pretty);
            ExitCode::from(code)
        }
        Ok(Output::Text(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(Output::Done(code)) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
