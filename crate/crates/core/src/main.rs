use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rdrqa::engine::{parse_corpus, parse_script, stats_of, AnswerOutcome, Engine, EngineError};
use rdrqa::language::Language;
use rdrqa::scrdr::RuleDraft;

/// Ontology-based question answering over a Ripple Down Rules tree.
#[derive(Debug, Parser)]
#[command(name = "rdrqa", version)]
struct Cli {
    /// Engine configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Use the bundled configuration for this language when --config is absent.
    #[arg(long, global = true, default_value = "vi")]
    lang: Language,
    /// Treat input as word/TAG tokens (auto-detected by default).
    #[arg(long, global = true, conflicts_with = "raw")]
    pretagged: bool,
    /// Treat input as plain text even if it looks tagged.
    #[arg(long, global = true)]
    raw: bool,
    /// Print JSON instead of a text summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Annotate a question and show its rule path and representation.
    Analyze { question: String },
    /// Answer a question against the ontology.
    Answer {
        question: String,
        /// Selections for clarification prompts, used in order.
        #[arg(long = "select")]
        select: Vec<String>,
    },
    /// Knowledge base maintenance.
    Kb {
        #[command(subcommand)]
        command: KbCommand,
    },
    /// Score a JSONL corpus of questions with expected representations.
    Eval {
        corpus: PathBuf,
    },
    /// Summarize the ontology.
    Ontology,
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

#[derive(Debug, Subcommand)]
enum KbCommand {
    /// Add an exception rule for a misclassified question.
    AddRule(AddRule),
    /// Node count, depth, layer and structure histograms.
    Stats,
    /// Show the evaluation path of a question.
    Path { question: String },
    /// Rebuild a tree from an acquisition script (JSONL).
    Replay {
        script: PathBuf,
        /// Write the tree here instead of printing it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct AddRule {
    /// The case the rule is written for.
    #[arg(long)]
    question: String,
    /// Rule draft file: {"rule_text", "extra", "conclusion", "id"}.
    #[arg(long)]
    draft: PathBuf,
    /// Check the rule without changing the tree.
    #[arg(long)]
    dry_run: bool,
}

enum Failure {
    Input(String),
    Setup(String),
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Setup(e.to_string())
        }
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Setup(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("output types serialize"));
}

fn bundled_config(lang: Language) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("data/config/{}.json", lang.code()))
}

fn print_outcome(outcome: &AnswerOutcome, json: bool) {
    if json {
        print_json(outcome);
        return;
    }
    match outcome {
        AnswerOutcome::Answered { answer, ir, path, .. } => {
            println!("representation: {ir}");
            println!("path: {}", path.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("-"));
            println!("answer: {}", answer.text);
        }
        AnswerOutcome::Pending { choice, ir, .. } => {
            println!("representation: {ir}");
            println!("which `{}` did you mean ({})? rerun with --select:", choice.term, choice.context);
            for c in &choice.candidates {
                println!("  {c}");
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let pretagged = if cli.pretagged {
        Some(true)
    } else if cli.raw {
        Some(false)
    } else {
        None
    };
    let config = cli.config.clone().unwrap_or_else(|| bundled_config(cli.lang));
    let engine = Engine::load(&config)?;
    match cli.command {
        Command::Analyze { question } => {
            let a = engine.analyze(&question, pretagged)?;
            if cli.json {
                print_json(&a);
            } else {
                println!("chunks: {}", a.bracketed);
                let path: Vec<String> = a.evaluation.path.iter().map(|n| n.to_string()).collect();
                println!("path: {} (last fired {})", path.join("-"), a.evaluation.last_fired);
                match a.ir() {
                    Some(ir) => println!("representation: {ir}"),
                    None => println!("representation: none"),
                }
            }
        }
        Command::Answer { question, select } => {
            let mut outcome = engine.answer(&question, pretagged)?;
            let mut picks = select.into_iter();
            while let AnswerOutcome::Pending { session, choice, .. } = &outcome {
                let Some(pick) = picks.next() else { break };
                outcome = engine.choose(session, &choice.choice_id, &pick)?;
            }
            print_outcome(&outcome, cli.json);
        }
        Command::Kb { command } => match command {
            KbCommand::AddRule(args) => {
                let draft: RuleDraft = serde_json::from_str(&read(&args.draft)?)
                    .map_err(|e| Failure::Input(format!("{}: {e}", args.draft.display())))?;
                let insertion = engine.add_rule(&args.question, pretagged, &draft, args.dry_run)?;
                print_json(&insertion);
            }
            KbCommand::Stats => {
                let stats = engine.kb_stats();
                if cli.json {
                    print_json(&stats);
                } else {
                    println!("nodes: {}", stats.nodes);
                    println!("max depth: {}", stats.max_depth);
                    for (layer, n) in &stats.layers {
                        println!("layer {layer}: {n}");
                    }
                    for (s, n) in &stats.structures {
                        println!("structure {s}: {n}");
                    }
                }
            }
            KbCommand::Path { question } => {
                let a = engine.analyze(&question, pretagged)?;
                print_json(&a.evaluation);
            }
            KbCommand::Replay { script, out } => {
                let steps = parse_script(&read(&script)?)?;
                let kb = engine.replay(&steps)?;
                match out {
                    Some(path) => {
                        kb.persist(&path).map_err(|e| Failure::Setup(e.to_string()))?;
                        let stats = stats_of(&kb);
                        println!("wrote {} nodes to {}", stats.nodes, path.display());
                    }
                    None => println!("{}", kb.to_json_string()),
                }
            }
        },
        Command::Eval { corpus } => {
            let items = parse_corpus(&read(&corpus)?)?;
            let report = engine.evaluate_corpus(&items);
            if cli.json {
                print_json(&report);
            } else {
                for c in &report.cases {
                    let mark = match c.correct {
                        Some(true) => "ok  ",
                        Some(false) => "FAIL",
                        None => "--  ",
                    };
                    let ir = c.ir.as_ref().map(|i| i.to_string()).unwrap_or_else(|| "none".into());
                    println!("{mark} {} {ir}", c.id);
                    if let Some(d) = &c.detail {
                        println!("     {d}");
                    }
                }
                println!("accuracy: {}/{} ({:.1}%)", report.correct, report.scored, report.accuracy * 100.0);
                println!("nodes: {}, max depth: {}", report.stats.nodes, report.stats.max_depth);
                let layers: Vec<String> = report.stats.layers.iter().map(|(l, n)| format!("{l}:{n}")).collect();
                println!("layers: {}", layers.join(" "));
                let structures: Vec<String> =
                    report.stats.structures.iter().map(|(s, n)| format!("{s}:{n}")).collect();
                println!("structures: {}", structures.join(" "));
            }
        }
        Command::Ontology => print_json(&engine.ontology_summary()),
        Command::Serve { addr } => {
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Setup(e.to_string()))?;
            eprintln!("listening on {addr}");
            runtime
                .block_on(rdrqa::service::serve(Arc::new(engine), &addr))
                .map_err(|e| Failure::Setup(e.to_string()))?;
        }
    }
    Ok(())
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
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Setup(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
