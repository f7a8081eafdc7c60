use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use infdiag::inference::{OrderMode, Plan};
use infdiag::{
    builtin_example, compare_orders, complexity, d_separated, export_dot, gen_random, model_io, posterior, refactor,
    reverse_arc, save, sum_out, validate, Diagram, Error, Evidence,
};

#[derive(Parser)]
#[command(name = "infdiag", version, about = "Author influence diagrams causally, query them diagnostically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exhaustive,
    GreedySample,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file and list every violated invariant
    Validate { file: PathBuf },
    /// Posterior distribution of a node given evidence
    Query {
        file: PathBuf,
        #[arg(long)]
        target: String,
        /// NAME=OUTCOME[,NAME=OUTCOME...]
        #[arg(long, default_value = "")]
        evidence: String,
        /// Also print the executed transform plan
        #[arg(long)]
        explain: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Reverse one arc
    Reverse {
        file: PathBuf,
        /// FROM:TO
        #[arg(long)]
        arc: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-express the model under a new variable order
    Refactor {
        file: PathBuf,
        /// Comma-separated permutation of all node names
        #[arg(long)]
        order: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Marginalize a node out of the model
    Sumout {
        file: PathBuf,
        #[arg(long)]
        node: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Arc and free-parameter counts
    Metrics {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Rank elimination orders for a query by arcs added
    Orders {
        file: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, default_value = "")]
        evidence: String,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Print at most this many plans
        #[arg(long, default_value_t = 10)]
        limit: usize,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Graphviz DOT rendering
    ExportDot { file: PathBuf },
    /// Write one of the bundled example models
    Example {
        name: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a seeded random model
    GenRandom {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        max_outcomes: usize,
        #[arg(long)]
        density: f64,
        #[arg(long)]
        det_fraction: f64,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Graphical (d-separation) independence test
    Independent {
        file: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Comma-separated conditioning set
        #[arg(long, default_value = "")]
        given: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

enum Failure {
    Engine(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

type CmdResult = std::result::Result<String, Failure>;

/// Rounds to 12 significant digits; the shortest representation of the
/// rounded value is what gets printed.
fn round12(p: f64) -> f64 {
    format!("{p:.11e}").parse().unwrap()
}

fn read_model(path: &Path) -> std::result::Result<Diagram, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(infdiag::load(&text)?)
}

fn emit_model(diagram: &Diagram, output: Option<&Path>) -> CmdResult {
    let mut text = save(diagram);
    text.push('\n');
    match output {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

fn plan_json(plan: &Plan) -> serde_json::Value {
    json!({
        "total_added_arcs": plan.total_added_arcs,
        "total_parameters_touched": plan.total_parameters_touched,
        "steps": plan.steps.iter().map(|s| json!({"step": s.kind.to_string(), "added_arcs": s.added_arcs})).collect::<Vec<_>>(),
    })
}

fn plan_text(plan: &Plan, out: &mut String) {
    let _ = writeln!(
        out,
        "plan: {} steps, {} arcs added, {} parameters touched",
        plan.steps.len(),
        plan.total_added_arcs,
        plan.total_parameters_touched
    );
    for s in &plan.steps {
        let _ = writeln!(out, "  {} +{}", s.kind, s.added_arcs);
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Validate { file } => {
            let text = std::fs::read_to_string(&file).map_err(|e| Failure::Io(format!("{}: {e}", file.display())))?;
            let diagram = model_io::load_unchecked(&text)?;
            let report = validate(&diagram);
            if report.is_valid() {
                Ok(format!("valid: {} nodes, {} arcs\n", diagram.len(), diagram.arc_count()))
            } else {
                for v in report.violations.iter().skip(1) {
                    eprintln!("{v}");
                }
                Err(report.into_result().unwrap_err().into())
            }
        }
        Command::Query {
            file,
            target,
            evidence,
            explain,
            format,
        } => {
            let diagram = read_model(&file)?;
            let evidence: Evidence = evidence.parse()?;
            let (dist, plan) = posterior(&diagram, &target, &evidence)?;
            let node = diagram.require(&target)?;
            let mut out = String::new();
            match format {
                Format::Text => {
                    for (label, p) in node.outcomes.iter().zip(&dist) {
                        let _ = writeln!(out, "{label}\t{}", round12(*p));
                    }
                    if explain {
                        plan_text(&plan, &mut out);
                    }
                }
                Format::Json => {
                    let mut doc = json!({
                        "target": target,
                        "evidence": evidence.iter().map(|(n, o)| (n.to_string(), json!(o))).collect::<serde_json::Map<_, _>>(),
                        "distribution": node.outcomes.iter().zip(&dist)
                            .map(|(label, p)| json!({"outcome": label, "probability": round12(*p)}))
                            .collect::<Vec<_>>(),
                    });
                    if explain {
                        doc["plan"] = plan_json(&plan);
                    }
                    out = serde_json::to_string_pretty(&doc).unwrap();
                    out.push('\n');
                }
            }
            Ok(out)
        }
        Command::Reverse { file, arc, output } => {
            let diagram = read_model(&file)?;
            let (from, to) = arc
                .split_once(':')
                .ok_or_else(|| Error::InvalidParameters(format!("arc `{arc}` is not FROM:TO")))?;
            emit_model(&reverse_arc(&diagram, from, to)?, output.as_deref())
        }
        Command::Refactor { file, order, output } => {
            let diagram = read_model(&file)?;
            emit_model(&refactor(&diagram, &split_list(&order))?, output.as_deref())
        }
        Command::Sumout { file, node, output } => {
            let diagram = read_model(&file)?;
            emit_model(&sum_out(&diagram, &node)?, output.as_deref())
        }
        Command::Metrics { file, format } => {
            let m = complexity(&read_model(&file)?);
            Ok(match format {
                Format::Text => format!("arcs\t{}\nfree_parameters\t{}\n", m.arc_count, m.free_parameter_count),
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&json!({"arc_count": m.arc_count, "free_parameter_count": m.free_parameter_count})).unwrap()
                ),
            })
        }
        Command::Orders {
            file,
            target,
            evidence,
            mode,
            limit,
            format,
        } => {
            let diagram = read_model(&file)?;
            let evidence: Evidence = evidence.parse()?;
            let mode = match mode {
                Mode::Exhaustive => OrderMode::Exhaustive,
                Mode::GreedySample => OrderMode::GreedySample,
            };
            let ranked = compare_orders(&diagram, &target, &evidence, mode)?;
            let mut out = String::new();
            match format {
                Format::Text => {
                    let _ = writeln!(out, "{} candidate plans", ranked.len());
                    for (rank, (plan, peak)) in ranked.iter().take(limit).enumerate() {
                        let _ = writeln!(
                            out,
                            "#{} added_arcs={} parameters_touched={} peak_arcs={} peak_parameters={}",
                            rank + 1,
                            plan.total_added_arcs,
                            plan.total_parameters_touched,
                            peak.arc_count,
                            peak.free_parameter_count
                        );
                        let _ = writeln!(out, "  {}", plan.encoding().join(" "));
                    }
                }
                Format::Json => {
                    let plans: Vec<_> = ranked
                        .iter()
                        .take(limit)
                        .map(|(plan, peak)| {
                            let mut v = plan_json(plan);
                            v["peak_arc_count"] = json!(peak.arc_count);
                            v["peak_free_parameter_count"] = json!(peak.free_parameter_count);
                            v
                        })
                        .collect();
                    out = serde_json::to_string_pretty(&json!({"candidates": ranked.len(), "plans": plans})).unwrap();
                    out.push('\n');
                }
            }
            Ok(out)
        }
        Command::ExportDot { file } => Ok(export_dot(&read_model(&file)?)),
        Command::Example { name, output } => emit_model(&builtin_example(&name)?, output.as_deref()),
        Command::GenRandom {
            nodes,
            max_outcomes,
            density,
            det_fraction,
            seed,
            output,
        } => emit_model(&gen_random(nodes, max_outcomes, density, det_fraction, seed)?, output.as_deref()),
        Command::Independent { file, a, b, given, format } => {
            let diagram = read_model(&file)?;
            let given: BTreeSet<String> = split_list(&given).into_iter().map(str::to_string).collect();
            let separated = d_separated(&diagram, &a, &b, &given)?;
            Ok(match format {
                Format::Text => format!("{separated}\n"),
                Format::Json => format!("{}\n", json!({"a": a, "b": b, "given": given, "d_separated": separated})),
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Engine(e)) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: IoError: {msg}");
            ExitCode::from(1)
        }
    }
}
