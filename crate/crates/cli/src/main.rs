use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tabling_core::checker::{
    check_correctness, check_fusion_condition, diff_semantics, show_set, CheckReport, DiffReport, Strategy, Verdict,
};
use tabling_core::fixpoint::{Divergence, EvalConfig, Outcome};
use tabling_core::greedy::stratified_greedy_semantics;
use tabling_core::reference::stratified_reference_semantics;
use tabling_core::strata::{stratify, Stratification};
use tabling_core::{parse_program, AnswerTable, Error, Interpretation, Program};

const OK: u8 = 0;
const FOUND: u8 = 1;
const DIVERGED: u8 = 2;
const STATIC_ERROR: u8 = 3;
const RUNTIME_ERROR: u8 = 4;

#[derive(Parser)]
#[command(name = "tabling", version, about = "Evaluate logic programs with answer subsumption")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the answers of a program.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Engine::Greedy)]
        engine: Engine,
    },
    /// Search for inputs on which greedy aggregation loses answers.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = StrategyArg::Exhaustive)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..=24))]
        max_atoms: u64,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Check the commuting-square form instead.
        #[arg(long)]
        fusion: bool,
    },
    /// Run both engines and compare their answers.
    Diff {
        #[command(flatten)]
        common: Common,
    },
    /// Print the evaluation strata.
    Strata {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    file: PathBuf,
    #[arg(long, default_value_t = EvalConfig::default().fuel as u64, value_parser = clap::value_parser!(u64).range(1..))]
    fuel: u64,
    #[arg(long, default_value_t = EvalConfig::default().max_facts)]
    max_facts: usize,
    #[arg(long, default_value_t = EvalConfig::default().max_derivations)]
    max_derivations: usize,
    #[arg(long)]
    json: bool,
    /// Disable incremental rule evaluation.
    #[arg(long)]
    naive: bool,
}

impl Common {
    fn config(&self) -> EvalConfig {
        EvalConfig {
            fuel: self.fuel as usize,
            max_facts: self.max_facts,
            max_derivations: self.max_derivations,
            naive: self.naive,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Reference,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Exhaustive,
    Sampled,
    Trace,
}

/// What a command prints and how it exits.
struct Report {
    text: String,
    json: Value,
    code: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Eval { common, .. }
        | Command::Check { common, .. }
        | Command::Diff { common }
        | Command::Strata { common } => common,
    };
    let report = load(&common.file).and_then(|program| run(&cli.command, &program));
    let report = report.unwrap_or_else(|failure| failure);
    if common.json {
        println!("{}", serde_json::to_string_pretty(&report.json).expect("json values serialize"));
    } else if report.code >= STATIC_ERROR {
        eprint!("{}", report.text);
    } else {
        print!("{}", report.text);
    }
    ExitCode::from(report.code)
}

fn load(path: &PathBuf) -> Result<Program, Report> {
    let text = fs::read_to_string(path).map_err(|e| Report {
        text: format!("error (io): {}: {e}\n", path.display()),
        json: json!({"status": "error", "kind": "io", "detail": format!("{}: {e}", path.display())}),
        code: STATIC_ERROR,
    })?;
    parse_program(&text).map_err(error_report)
}

fn error_report(e: Error) -> Report {
    Report {
        text: format!("error ({}): {e}\n", e.kind()),
        json: json!({"status": "error", "kind": e.kind(), "detail": e.to_string()}),
        code: if e.is_static() { STATIC_ERROR } else { RUNTIME_ERROR },
    }
}

fn run(command: &Command, program: &Program) -> Result<Report, Report> {
    match command {
        Command::Eval { common, engine } => {
            let config = common.config();
            let outcome = match engine {
                Engine::Reference => stratified_reference_semantics(program, &config),
                Engine::Greedy => stratified_greedy_semantics(program, &config),
            }
            .map_err(error_report)?;
            Ok(eval_report(engine_name(*engine), &outcome))
        }
        Command::Check {
            common,
            strategy,
            max_atoms,
            samples,
            seed,
            fusion,
        } => {
            let strategy = match strategy {
                StrategyArg::Exhaustive => Strategy::Exhaustive {
                    max_atoms: *max_atoms as usize,
                },
                StrategyArg::Sampled => Strategy::Sampled {
                    samples: *samples as usize,
                    seed: *seed,
                },
                StrategyArg::Trace => Strategy::Trace,
            };
            let check = if *fusion { check_fusion_condition } else { check_correctness };
            let report = check(program, strategy, &common.config()).map_err(error_report)?;
            Ok(check_report(&report))
        }
        Command::Diff { common } => {
            let report = diff_semantics(program, &common.config()).map_err(error_report)?;
            Ok(diff_report(&report))
        }
        Command::Strata { .. } => Ok(strata_report(&stratify(program))),
    }
}

fn engine_name(engine: Engine) -> &'static str {
    match engine {
        Engine::Reference => "reference",
        Engine::Greedy => "greedy",
    }
}

fn atom_list(atoms: &Interpretation) -> Vec<String> {
    atoms.iter().map(|a| a.to_string()).collect()
}

fn table_json(table: &AnswerTable) -> Value {
    Value::Array(
        table
            .iter()
            .map(|(k, v)| json!({"key": k.to_string(), "value": v.to_string()}))
            .collect(),
    )
}

fn divergence_json(d: &Divergence) -> Value {
    json!({
        "stratum": d.stratum,
        "predicates": d.predicates.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "limit": d.limit.to_string(),
        "fuel": d.fuel,
        "known_atoms": d.partial.len(),
    })
}

fn eval_report(engine: &str, outcome: &Outcome) -> Report {
    match outcome {
        Outcome::Converged(model) => {
            let mut text = String::new();
            for atom in &model.answers {
                text.push_str(&format!("{atom}.\n"));
            }
            Report {
                text,
                json: json!({"status": "ok", "engine": engine, "answers": atom_list(&model.answers)}),
                code: OK,
            }
        }
        Outcome::Diverged(d) => Report {
            text: format!("diverged: {d}\n"),
            json: json!({"status": "diverged", "engine": engine, "divergence": divergence_json(d)}),
            code: DIVERGED,
        },
    }
}

fn check_report(report: &CheckReport) -> Report {
    let mut text = format!(
        "strategy: {}\nuniverse: {} atoms{}\nsubsets checked: {}\n",
        report.strategy,
        report.universe.len(),
        if report.universe_complete { "" } else { " (incomplete)" },
        report.subsets_checked
    );
    let mut json = json!({
        "strategy": report.strategy.to_string(),
        "universe": atom_list(&report.universe),
        "universe_complete": report.universe_complete,
        "subsets_checked": report.subsets_checked,
    });
    let code = match &report.verdict {
        Verdict::NoViolationFound => {
            text.push_str("no violation found\n");
            json["status"] = json!("no_violation");
            OK
        }
        Verdict::Violation(v) => {
            text.push_str(&format!(
                "violation in stratum {}\n  witness: {}\n  lhs: {}\n  rhs: {}\n",
                v.stratum,
                show_set(&v.witness),
                v.lhs,
                v.rhs
            ));
            json["status"] = json!("violation");
            json["stratum"] = json!(v.stratum);
            json["witness"] = json!(atom_list(&v.witness));
            json["lhs"] = table_json(&v.lhs);
            json["rhs"] = table_json(&v.rhs);
            FOUND
        }
        Verdict::Inconclusive(reason) => {
            text.push_str(&format!("inconclusive: {reason}\n"));
            json["status"] = json!("inconclusive");
            json["reason"] = json!(reason);
            DIVERGED
        }
    };
    Report { text, json, code }
}

fn outcome_text(name: &str, outcome: &Outcome) -> String {
    match outcome {
        Outcome::Converged(model) => {
            let mut text = format!("{name}:\n");
            for atom in &model.answers {
                text.push_str(&format!("  {atom}.\n"));
            }
            text
        }
        Outcome::Diverged(d) => format!("{name}: diverged: {d}\n"),
    }
}

fn outcome_json(outcome: &Outcome) -> Value {
    match outcome {
        Outcome::Converged(model) => json!({"status": "ok", "answers": atom_list(&model.answers)}),
        Outcome::Diverged(d) => json!({"status": "diverged", "divergence": divergence_json(d)}),
    }
}

fn diff_report(report: &DiffReport) -> Report {
    let mut text = outcome_text("reference", &report.reference);
    text.push_str(&outcome_text("greedy", &report.greedy));
    if !report.differences.is_empty() {
        text.push_str("differences:\n");
        for d in &report.differences {
            text.push_str(&format!("  {}: reference {}, greedy {}\n", d.key, d.reference, d.greedy));
        }
    }
    text.push_str(if report.equal { "equal\n" } else { "different\n" });
    let differences: Vec<Value> = report
        .differences
        .iter()
        .map(|d| json!({"key": d.key.to_string(), "reference": d.reference.to_string(), "greedy": d.greedy.to_string()}))
        .collect();
    Report {
        text,
        json: json!({
            "status": if report.equal { "equal" } else { "different" },
            "reference": outcome_json(&report.reference),
            "greedy": outcome_json(&report.greedy),
            "differences": differences,
        }),
        code: if report.equal {
            OK
        } else if report.reference.model().is_none() || report.greedy.model().is_none() {
            DIVERGED
        } else {
            FOUND
        },
    }
}

fn strata_report(strata: &Stratification) -> Report {
    let list: Vec<Value> = strata
        .strata
        .iter()
        .zip(&strata.uses)
        .map(|(preds, uses)| {
            json!({
                "predicates": preds.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                "uses": uses.iter().collect::<Vec<_>>(),
            })
        })
        .collect();
    Report {
        text: strata.to_string(),
        json: json!({"status": "ok", "strata": list}),
        code: OK,
    }
}
