//! `quilt`: compile a Quil program for a target chip.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use quilt_core::addresser::SearchMode;
use quilt_core::chipspec::{load_chip, ChipSpecification, CostMode};
use quilt_core::frontend::{parse_program, MemoryKind};
use quilt_core::pipeline::{run_pipeline, CompileConfig, CompileOutput, CompileReport};
use quilt_core::rules::Registry;
use quilt_core::sim::{verify_compiled, VerifyMode};

const VERIFY_TOLERANCE: f64 = 1e-7;
const VERIFY_SAMPLES: usize = 3;

const EXIT_USAGE: u8 = 1;
const EXIT_COMPILE: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cost {
    Duration,
    Fidelity,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Search {
    Greedy,
    #[value(name = "a-star")]
    AStar,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Stats {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "quilt", version, about = "Optimizing compiler for a Quil subset")]
struct Cli {
    /// Program to compile; standard input when absent or "-".
    input: Option<PathBuf>,
    /// Write the compiled program here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Chip description (JSON). Defaults to a fully connected chip over the program's qubits.
    #[arg(long)]
    isa: Option<PathBuf>,
    #[arg(long, value_enum)]
    cost: Option<Cost>,
    #[arg(long, value_enum)]
    search: Option<Search>,
    /// Weight of each further pending gate in the routing heuristic.
    #[arg(long, default_value_t = 0.5)]
    discount: f64,
    /// Largest qubit count the compressor resynthesizes at once.
    #[arg(long, default_value_t = quilt_core::compressor::DEFAULT_COMPRESSION_LIMIT)]
    compression_limit: usize,
    /// Assume the program starts from |0...0> and allow state-preserving rewrites.
    #[arg(long)]
    enable_state_prep_reductions: bool,
    /// Print a per-rule trace to standard error.
    #[arg(long)]
    verbose: bool,
    /// Simulate input and output and fail if they differ.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Print compilation statistics to standard error.
    #[arg(long, value_enum)]
    stats: Option<Stats>,
    /// List the rewrite rules and exit.
    #[arg(long)]
    list_rules: bool,
    /// Turn off a rewrite rule by name; may be repeated.
    #[arg(long = "disable-rule", value_name = "RULE")]
    disable_rule: Vec<String>,
    /// Start from the identity placement instead of placing qubits lazily.
    #[arg(long)]
    naive_rewiring: bool,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("quilt: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let chip_file = cli
        .isa
        .as_ref()
        .map(|p| fs::read_to_string(p).map_err(|e| fail(EXIT_USAGE, format!("cannot read {}: {e}", p.display()))))
        .transpose()?;
    let given_chip = chip_file
        .map(|text| load_chip(&text).map_err(|e| fail(EXIT_USAGE, format!("bad chip description: {e}"))))
        .transpose()?;

    if cli.list_rules {
        return list_rules(given_chip.as_ref());
    }

    let source = read_input(cli.input.as_ref())?;
    let cfg = CompileConfig {
        cost: cli.cost.map(|c| match c {
            Cost::Duration => CostMode::Duration,
            Cost::Fidelity => CostMode::Fidelity,
        }),
        search: cli.search.map(|s| match s {
            Search::Greedy => SearchMode::Greedy,
            Search::AStar => SearchMode::AStar,
        }),
        discount: cli.discount,
        compression_limit: cli.compression_limit,
        state_prep: cli.enable_state_prep_reductions,
        verbose: cli.verbose,
        seed: cli.seed,
        naive_rewiring: cli.naive_rewiring,
        disabled_rules: cli.disable_rule.clone(),
        ..CompileConfig::default()
    };
    cfg.validate().map_err(|e| fail(EXIT_USAGE, e.message))?;
    let registry = Registry::default();
    if let Some(bad) = cli.disable_rule.iter().find(|r| !registry.is_known(r)) {
        return Err(fail(EXIT_USAGE, format!("unknown rule {bad}; see --list-rules")));
    }

    let chip = match given_chip {
        Some(chip) => chip,
        None => default_chip(&source)?,
    };
    let compiled = run_pipeline(&source, &chip, &cfg);
    if cli.verbose {
        if let Ok(out) = &compiled {
            for line in &out.trace {
                eprintln!("{line}");
            }
        }
    }
    let out = compiled.map_err(|e| fail(EXIT_COMPILE, e.to_string()))?;

    match &cli.output {
        Some(path) => fs::write(path, &out.text).map_err(|e| fail(EXIT_USAGE, format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(out.text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| fail(EXIT_USAGE, format!("cannot write output: {e}")))?;
        }
    }
    if let Some(kind) = cli.stats {
        eprint!("{}", render_stats(&out.report, kind));
    }
    if cli.verify {
        verify(&source, &out, cli.enable_state_prep_reductions)?;
    }
    Ok(())
}

fn read_input(path: Option<&PathBuf>) -> Result<String, Failure> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            fs::read_to_string(p).map_err(|e| fail(EXIT_USAGE, format!("cannot read {}: {e}", p.display())))
        }
        _ => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| fail(EXIT_USAGE, format!("cannot read standard input: {e}")))?;
            Ok(s)
        }
    }
}

/// Every pair linked among qubits 0..=max used by the program.
fn default_chip(source: &str) -> Result<ChipSpecification, Failure> {
    let program = parse_program(source).map_err(|e| fail(EXIT_COMPILE, format!("parse error at line {}: {}", e.line, e.message)))?;
    let n = program.qubits().last().map_or(0, |&q| q + 1);
    let links: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    Ok(ChipSpecification::with_defaults(n, &links))
}

fn list_rules(chip: Option<&ChipSpecification>) -> Result<(), Failure> {
    let registry = Registry::default();
    let classes = chip.map(|c| registry.classify(c));
    let mut stdout = io::stdout().lock();
    for rule in registry.all() {
        let mut line = rule.name().to_string();
        if let Some(class) = classes.as_ref().and_then(|m| m.get(rule.name())) {
            line.push_str(&format!("\t{class}"));
        }
        if rule.state_aware() {
            line.push_str("\tstate-aware");
        }
        // a closed pipe (as with `| head`) just ends the listing
        if writeln!(stdout, "{line}").is_err() {
            break;
        }
    }
    Ok(())
}

fn render_stats(report: &CompileReport, kind: Stats) -> String {
    match kind {
        Stats::Json => serde_json::to_string_pretty(report).expect("reports serialize") + "\n",
        Stats::Text => {
            let map = |m: &BTreeMap<usize, usize>| m.iter().map(|(l, p)| format!("{l}->{p}")).collect::<Vec<_>>().join(" ");
            let mut s = String::new();
            s.push_str(&format!("instructions: {}\n", report.instruction_count));
            s.push_str(&format!("two-qubit gates: {}\n", report.two_qubit_count));
            s.push_str(&format!("depth: {}\n", report.depth));
            s.push_str(&format!("duration estimate: {}\n", report.duration_estimate));
            s.push_str(&format!("swaps: {}\n", report.swap_count));
            s.push_str(&format!("blocks: {}\n", report.blocks));
            s.push_str(&format!("cost: {}, search: {}\n", report.cost_mode, report.search_mode));
            s.push_str(&format!("initial rewiring: {}\n", map(&report.initial_rewiring)));
            s.push_str(&format!("final rewiring: {}\n", map(&report.final_rewiring)));
            for (name, n) in &report.gate_counts {
                s.push_str(&format!("gate {name}: {n}\n"));
            }
            for (stage, ms) in &report.timings_ms {
                s.push_str(&format!("time {stage}: {ms:.3} ms\n"));
            }
            s
        }
    }
}

/// Compare input and output by simulation. Symbolic parameters are checked
/// at a few fixed sample values.
fn verify(source: &str, out: &CompileOutput, state_prep: bool) -> Result<(), Failure> {
    let mode = if state_prep { VerifyMode::State } else { VerifyMode::Unitary };
    let reals: Vec<String> = parse_program(source)
        .map(|p| p.declarations.into_iter().filter(|d| d.kind == MemoryKind::Real).map(|d| d.name).collect())
        .unwrap_or_default();
    let samples = if reals.is_empty() { 1 } else { VERIFY_SAMPLES };
    for s in 0..samples {
        let env: BTreeMap<String, f64> = reals
            .iter()
            .enumerate()
            .map(|(k, name)| (name.clone(), 0.1 + 0.37 * ((k + 1) * (s + 1)) as f64))
            .collect();
        match verify_compiled(source, out, &env, mode, VERIFY_TOLERANCE) {
            Ok(true) => {}
            Ok(false) => return Err(fail(EXIT_VERIFY, format!("verification failed: output differs from input for {env:?}"))),
            Err(e) => return Err(fail(EXIT_VERIFY, format!("cannot verify: {e}"))),
        }
    }
    eprintln!("verified ({} up to global phase, tolerance {VERIFY_TOLERANCE:e})", if state_prep { "state" } else { "unitary" });
    Ok(())
}
