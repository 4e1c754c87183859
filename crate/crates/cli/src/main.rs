//! `lriparse` command line: parse, evaluate and benchmark word lattices.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser as ClapParser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use lriparse::corpus;
use lriparse::engine::{EngineError, Models, ParserConfig};
use lriparse::eval::{self, EvalError};
use lriparse::models::{BigramModel, CategoryTrigram, ModelError};
use lriparse::oracle::chart_scores;
use lriparse::parallel::{gain_percent, parallel_parse, WorkerConfig};
use lriparse::report::{self, BenchRow, Format, ParseReport, Timing};
use lriparse::{load_lattice, parse_grammar, parse_lattice, Grammar, GrammarError, Lattice, LatticeError, Weights};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Lattices generated for `bench` when none are given.
const BENCH_RANDOM_LATTICES: usize = 10;

#[derive(Debug, ClapParser)]
#[command(name = "lriparse", version, about = "Incremental chart parsing of speech word lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse lattices and report the best result and chart statistics.
    Parse(ParseArgs),
    /// Parse lattices and score them against reference transcripts.
    Eval(EvalArgs),
    /// Compare sequential and parallel parsing time per lattice.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Structured,
}

#[derive(Debug, Args)]
struct Common {
    /// Grammar file.
    #[arg(long)]
    grammar: Option<PathBuf>,
    /// Lattice file; repeat for several.
    #[arg(long = "lattice")]
    lattices: Vec<PathBuf>,
    /// Bigram model file (flat model if absent).
    #[arg(long)]
    bigram: Option<PathBuf>,
    /// Category trigram file for prosodic boundary scoring.
    #[arg(long)]
    trigram: Option<PathBuf>,
    /// Weights for acoustic, bigram, prosody and grammar scores.
    #[arg(long, value_parser = parse_weights, default_value = "1,1,1,1")]
    weights: Weights,
    /// Agenda beam width in log units, or `inf` to disable the beam.
    #[arg(long, value_parser = parse_beam, default_value = "8")]
    beam_offset: f64,
    #[arg(long, value_enum, default_value = "on")]
    prosody: Switch,
    /// Restrict recognizer output to words the chart can consume.
    #[arg(long, value_enum, default_value = "off")]
    predict: Switch,
    /// Ignore feature constraints.
    #[arg(long)]
    skeleton: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    /// Leave out the timing section.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct ParseArgs {
    #[command(flatten)]
    common: Common,
    /// Worker threads; more than one selects the parallel parser.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    workers: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    task_batch: u32,
    /// Exit with status 3 when a lattice yields no result.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Reference transcripts, one line per lattice.
    #[arg(long = "ref")]
    reference: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 2)]
    workers: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    task_batch: u32,
    #[arg(long, value_enum, default_value = "on")]
    metrics: Switch,
    /// Seed for the random corpus used when no lattices are given.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_weights(s: &str) -> Result<Weights, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("{p:?} is not a number")))
        .collect::<Result<_, _>>()?;
    let [acoustic, bigram, prosody, grammar] = parts[..] else {
        return Err("expected four comma-separated weights a,b,p,g".into());
    };
    if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err("weights must be finite and non-negative".into());
    }
    Ok(Weights { acoustic, bigram, prosody, grammar })
}

fn parse_beam(s: &str) -> Result<f64, String> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err("beam offset must be a positive number or `inf`".into()),
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("grammar {path}: {source}")]
    Grammar { path: PathBuf, source: GrammarError },
    #[error("lattice {path}: {source}")]
    Lattice { path: PathBuf, source: LatticeError },
    #[error("model {path}: {source}")]
    Model { path: PathBuf, source: ModelError },
    #[error("engine: lattice {name}: {source}")]
    Engine { name: String, source: EngineError },
    #[error("eval: {0}")]
    Eval(#[from] EvalError),
    #[error("parse: lattice {0} has no result")]
    NoResult(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } | CliError::Grammar { .. } | CliError::Lattice { .. } | CliError::Model { .. } => {
                EXIT_VALIDATION
            }
            CliError::Engine { source, .. } | CliError::Eval(EvalError::Engine(source)) => engine_code(source),
            CliError::Eval(_) => EXIT_VALIDATION,
            CliError::NoResult(_) => EXIT_RUNTIME,
        }
    }
}

fn engine_code(e: &EngineError) -> u8 {
    match e {
        EngineError::UnknownWord(_) | EngineError::EmptyLattice | EngineError::Lattice(_) | EngineError::Prosody(_) => {
            EXIT_VALIDATION
        }
        _ => EXIT_RUNTIME,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn lattice_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

struct Inputs {
    grammar: Grammar,
    models: Models,
    lattices: Vec<(String, Lattice)>,
    config: ParserConfig,
}

impl Common {
    fn config(&self) -> ParserConfig {
        ParserConfig {
            weights: self.weights,
            beam_offset: self.beam_offset,
            prosody: self.prosody.on(),
            predict: self.predict.on(),
            skeleton: self.skeleton,
        }
    }

    fn format(&self) -> Format {
        match self.format {
            OutputFormat::Text => Format::Text,
            OutputFormat::Structured => Format::Structured,
        }
    }

    fn models(&self) -> Result<Models, CliError> {
        let bigram = match &self.bigram {
            Some(p) => BigramModel::parse(&read(p)?).map_err(|source| CliError::Model { path: p.clone(), source })?,
            None => BigramModel::flat(),
        };
        let trigram = match &self.trigram {
            Some(p) => {
                Some(CategoryTrigram::parse(&read(p)?).map_err(|source| CliError::Model { path: p.clone(), source })?)
            }
            None => None,
        };
        Ok(Models { bigram, trigram })
    }

    fn grammar(&self) -> Result<Grammar, CliError> {
        let path = self.grammar.as_ref().ok_or_else(|| CliError::Usage("--grammar is required".into()))?;
        parse_grammar(&read(path)?).map_err(|source| CliError::Grammar { path: path.clone(), source })
    }

    fn lattices(&self) -> Result<Vec<(String, Lattice)>, CliError> {
        self.lattices
            .iter()
            .map(|p| {
                let l = load_lattice(&read(p)?).map_err(|source| CliError::Lattice { path: p.clone(), source })?;
                Ok((lattice_name(p), l))
            })
            .collect()
    }

    fn inputs(&self) -> Result<Inputs, CliError> {
        if self.lattices.is_empty() {
            return Err(CliError::Usage("at least one --lattice is required".into()));
        }
        Ok(Inputs { grammar: self.grammar()?, models: self.models()?, lattices: self.lattices()?, config: self.config() })
    }

    fn timing(&self, t: Timing) -> Option<Timing> {
        (!self.no_timing).then_some(t)
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn cmd_parse(args: &ParseArgs) -> Result<String, CliError> {
    let inp = args.common.inputs()?;
    let workers = WorkerConfig {
        worker_count: args.workers as usize,
        task_batch: args.task_batch as usize,
        metrics_enabled: false,
    };
    let mut reports = Vec::new();
    let mut timing = Timing::default();
    let mut empty = None;
    for (name, lat) in &inp.lattices {
        let started = Instant::now();
        let result = if workers.worker_count > 1 {
            parallel_parse(lat, &inp.grammar, &inp.models, &inp.config, &workers).map(|(r, _)| r)
        } else {
            parse_lattice(lat, &inp.grammar, &inp.models, &inp.config)
        }
        .map_err(|source| CliError::Engine { name: name.clone(), source })?;
        timing.push(format!("{name}.parse_ms"), ms(started));
        if result.best.is_none() && empty.is_none() {
            empty = Some(name.clone());
        }
        reports.push(ParseReport::new(name, &inp.config, workers.worker_count, &result));
    }
    let out = report::render_parse(&reports, args.common.timing(timing).as_ref(), args.common.format());
    match empty {
        Some(name) if args.strict => {
            print!("{out}");
            Err(CliError::NoResult(name))
        }
        _ => Ok(out),
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<String, CliError> {
    let inp = args.common.inputs()?;
    let references = eval::parse_references(&read(&args.reference)?);
    let started = Instant::now();
    let result = eval::evaluate_corpus(&inp.lattices, &references, &inp.grammar, &inp.models, &inp.config)?;
    let mut timing = Timing::default();
    timing.push("eval_ms", ms(started));
    Ok(report::render_eval(&result, &inp.config, args.common.timing(timing).as_ref(), args.common.format()))
}

fn cmd_bench(args: &BenchArgs) -> Result<String, CliError> {
    if args.workers < 2 {
        return Err(CliError::Usage("bench needs --workers 2 or more".into()));
    }
    if !args.metrics.on() {
        return Err(CliError::Usage("bench needs --metrics on".into()));
    }
    let common = &args.common;
    let (grammar, lattices) = match (&common.grammar, common.lattices.is_empty()) {
        (Some(_), false) => (common.grammar()?, common.lattices()?),
        (None, true) => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let grammar = corpus::random_grammar(&mut rng);
            let lattices = (0..BENCH_RANDOM_LATTICES)
                .map(|i| (format!("random{i:02}"), corpus::random_lattice(&mut rng, Some(&grammar))))
                .collect();
            (grammar, lattices)
        }
        _ => return Err(CliError::Usage("bench takes --grammar with --lattice, or neither".into())),
    };
    let models = common.models()?;
    let config = common.config();
    let workers = WorkerConfig {
        worker_count: args.workers as usize,
        task_batch: args.task_batch as usize,
        metrics_enabled: true,
    };
    let mut rows = Vec::new();
    for (name, lat) in &lattices {
        let engine = |source| CliError::Engine { name: name.clone(), source };
        let started = Instant::now();
        let seq = parse_lattice(lat, &grammar, &models, &config).map_err(engine)?;
        let seq_time = started.elapsed();
        let started = Instant::now();
        let (par, metrics) = parallel_parse(lat, &grammar, &models, &config, &workers).map_err(engine)?;
        let par_time = started.elapsed();
        rows.push(BenchRow {
            lattice: name.clone(),
            best: eval::covered_string(&seq).map(|w| w.join(" ")).unwrap_or_else(|_| "<none>".into()),
            edges: seq.stats.total,
            sequential_ms: seq_time.as_secs_f64() * 1e3,
            parallel_ms: par_time.as_secs_f64() * 1e3,
            gain_percent: gain_percent(seq_time, par_time),
            parallel_matches: chart_scores(&seq.chart) == chart_scores(&par.chart),
            metrics: metrics.expect("metrics were enabled"),
        });
    }
    Ok(report::render_bench(&rows, workers.worker_count, workers.task_batch, &config, common.format()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Parse(a) => cmd_parse(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_flag() {
        let w = parse_weights("1,0,0.5,2").unwrap();
        assert_eq!((w.acoustic, w.bigram, w.prosody, w.grammar), (1.0, 0.0, 0.5, 2.0));
        assert!(parse_weights("1,1,1").is_err());
        assert!(parse_weights("1,x,1,1").is_err());
        assert!(parse_weights("1,-1,1,1").is_err());
        assert!(parse_weights("1,inf,1,1").is_err());
    }

    #[test]
    fn beam_flag() {
        assert_eq!(parse_beam("inf"), Ok(f64::INFINITY));
        assert_eq!(parse_beam("4.5"), Ok(4.5));
        assert!(parse_beam("0").is_err());
        assert!(parse_beam("-1").is_err());
        assert!(parse_beam("nan").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::Eval(EvalError::CountMismatch { lattices: 3, references: 2 }).exit_code(), EXIT_VALIDATION);
        let e = CliError::Engine { name: "x".into(), source: EngineError::UnknownWord("w".into()) };
        assert_eq!(e.exit_code(), EXIT_VALIDATION);
        let e = CliError::Engine { name: "x".into(), source: EngineError::OutOfOrder { expected: 1, got: 2 } };
        assert_eq!(e.exit_code(), EXIT_RUNTIME);
        assert_eq!(CliError::NoResult("x".into()).exit_code(), EXIT_RUNTIME);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
