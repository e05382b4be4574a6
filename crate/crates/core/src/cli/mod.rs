//! Command-line entry points.
//!
//! Exit statuses: 0 success, 1 runtime error, 2 configuration or usage
//! error, 130 interrupted.

pub mod config;
pub mod report;

use crate::data::{format as data_format, generate};
use crate::error::{Error, Result};
use crate::evolution::{
    run_search, EvaluatorKind, Evaluator, HistoryEntry, NeuralEvaluator, RunOptions, SearchMode, SearchSpace, SurrogateEvaluator,
};
use crate::graph::compile::{compile, CompileOptions, ComputationGraph};
use crate::graph::{classify_fusion, to_dot, to_graph_json};
use crate::space::{seed_genome, unimodal_seed, Genome, SeedKind, Vocabulary};
use crate::train::{train_candidate, FitnessResult, ModelConfig, Precision, Routing, MODALITY_NAMES};
use clap::{Args, Parser, Subcommand};
use config::{parse_overrides, resolve, RunConfig, SNAPSHOT_FILE};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERRUPTED: i32 = 130;

/// Set by the interrupt handler; searches checkpoint and stop when it is.
pub static STOP: AtomicBool = AtomicBool::new(false);

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const LOG_FILE: &str = "candidates.jsonl";

#[derive(Parser, Debug)]
#[command(name = "mufasa", version, about = "Multimodal fusion architecture search")]
pub struct Cli {
    /// TOML configuration with [search], [train], [model], [data] and [vocab] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "mufasa-out")]
    pub out: PathBuf,
    /// Seed for search, training and data generation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Continue the search checkpointed in --out.
    #[arg(long, global = true)]
    pub resume: bool,
    #[arg(long, global = true, value_parser = ["neural", "surrogate"])]
    pub evaluator: Option<String>,
    #[arg(long, global = true, value_parser = ["sync", "async"])]
    pub mode: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GenomeArg {
    /// Genome file; defaults to a seed genome.
    #[arg(long)]
    pub genome: Option<PathBuf>,
    /// Seed genome to use without --genome.
    #[arg(long, default_value = "hybrid", value_parser = ["early", "hybrid", "late", "unimodal"])]
    pub seed_genome: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run an architecture search.
    Search {
        /// section.key=value overrides.
        overrides: Vec<String>,
    },
    /// Compile a genome and print its graph summary.
    Compile {
        #[command(flatten)]
        genome: GenomeArg,
        overrides: Vec<String>,
    },
    /// Train and score one genome.
    TrainOne {
        #[command(flatten)]
        genome: GenomeArg,
        overrides: Vec<String>,
    },
    /// Write a genome's graph in DOT format.
    ExportDot {
        #[command(flatten)]
        genome: GenomeArg,
        overrides: Vec<String>,
    },
    /// Generate a synthetic dataset file.
    GenData { overrides: Vec<String> },
    /// Summarize candidate logs of one or more searches.
    Report {
        /// Candidate logs, or search output directories.
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
}

enum Outcome {
    Done,
    Interrupted,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (program name first) and runs the command. `env` supplies
/// the environment variables consulted for overrides.
pub fn run<I, T>(args: I, env: Vec<(String, String)>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli, env) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::Interrupted) => {
            eprintln!("interrupted; state saved in {}", cli.out.display());
            EXIT_INTERRUPTED
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn flag_overrides(cli: &Cli) -> Vec<(String, String)> {
    let mut o = Vec::new();
    if let Some(s) = cli.seed {
        for key in ["search.seed", "train.seed", "data.seed"] {
            o.push((key.to_string(), s.to_string()));
        }
    }
    if let Some(w) = cli.workers {
        o.push(("search.workers".into(), w.to_string()));
    }
    if let Some(e) = &cli.evaluator {
        o.push(("search.evaluator".into(), format!("{e:?}")));
    }
    if let Some(m) = &cli.mode {
        o.push(("search.mode".into(), format!("{m:?}")));
    }
    o
}

fn resolved(cli: &Cli, env: Vec<(String, String)>, extra: &[String]) -> Result<RunConfig> {
    let mut overrides = flag_overrides(cli);
    overrides.extend(parse_overrides(extra)?);
    resolve(cli.config.as_deref(), env, &overrides)
}

fn prepare_out(dir: &Path, cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(SNAPSHOT_FILE), cfg.to_toml())?;
    Ok(())
}

fn load_genome(arg: &GenomeArg, vocab: &Vocabulary) -> Result<Genome> {
    match &arg.genome {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
            let (g, dims) = Genome::from_text(&text)?;
            if dims != vocab.relative_dims {
                return Err(Error::Config(format!(
                    "genome uses relative dimensions {dims:?}, configuration has {:?}",
                    vocab.relative_dims
                )));
            }
            Ok(g)
        }
        None if arg.seed_genome == "unimodal" => unimodal_seed(vocab),
        None => seed_genome(arg.seed_genome.parse::<SeedKind>()?, 3, vocab),
    }
}

/// Routing for a genome: three-modality genomes keep the configured
/// routing, single-modality genomes read the concatenated embeddings.
fn model_for(cfg: &RunConfig, g: &Genome) -> Result<ModelConfig> {
    let mut model = cfg.model.clone();
    if g.num_modalities() == 1 {
        model.routing = Routing::Concatenated;
    } else if model.routing == Routing::Concatenated {
        model.routing = Routing::PerModality;
    }
    if g.num_modalities() != model.graph_modalities() {
        return Err(Error::Config(format!("genome has {} modalities, the model provides {}", g.num_modalities(), model.graph_modalities())));
    }
    Ok(model)
}

fn compile_for(cfg: &RunConfig, g: &Genome, vocab: &Vocabulary) -> Result<ComputationGraph> {
    let model = model_for(cfg, g)?;
    compile(g, vocab, &model.graph_widths(), cfg.data.seq_len, &CompileOptions { max_width: cfg.train.max_width })
}

fn graph_summary(graph: &ComputationGraph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nodes: {}", graph.nodes.len());
    let _ = writeln!(s, "parameters: {}", graph.parameter_count);
    let _ = writeln!(s, "output width: {}", graph.output_width());
    let report = classify_fusion(graph);
    for m in 0..graph.num_modalities() {
        let kinds: Vec<String> = report.strategies(m).iter().map(|k| format!("{k:?}").to_lowercase()).collect();
        let name = if graph.num_modalities() == MODALITY_NAMES.len() { MODALITY_NAMES[m] } else { "joint" };
        let _ = writeln!(s, "fusion of modality {m} ({name}): {}", kinds.join(", "));
    }
    s
}

fn execute(cli: &Cli, env: Vec<(String, String)>) -> Result<Outcome> {
    match &cli.command {
        Command::Search { overrides } => search(cli, resolved(cli, env, overrides)?),
        Command::Compile { genome, overrides } => {
            let cfg = resolved(cli, env, overrides)?;
            let vocab = cfg.vocabulary()?;
            let g = load_genome(genome, &vocab)?;
            let graph = compile_for(&cfg, &g, &vocab)?;
            prepare_out(&cli.out, &cfg)?;
            fs::write(cli.out.join("graph.json"), to_graph_json(&graph))?;
            print!("{}", graph_summary(&graph));
            Ok(Outcome::Done)
        }
        Command::ExportDot { genome, overrides } => {
            let cfg = resolved(cli, env, overrides)?;
            let vocab = cfg.vocabulary()?;
            let g = load_genome(genome, &vocab)?;
            let graph = compile_for(&cfg, &g, &vocab)?;
            prepare_out(&cli.out, &cfg)?;
            let path = cli.out.join("graph.dot");
            fs::write(&path, to_dot(&graph))?;
            println!("wrote {}", path.display());
            Ok(Outcome::Done)
        }
        Command::TrainOne { genome, overrides } => {
            let cfg = resolved(cli, env, overrides)?;
            let vocab = cfg.vocabulary()?;
            let g = load_genome(genome, &vocab)?;
            let model = model_for(&cfg, &g)?;
            let ds = generate(&cfg.data)?;
            prepare_out(&cli.out, &cfg)?;
            let result = match cfg.train.precision {
                Precision::F32 => train_one::<f32>(&cli.out, &g, &vocab, &ds, &model, &cfg)?,
                Precision::F64 => train_one::<f64>(&cli.out, &g, &vocab, &ds, &model, &cfg)?,
            };
            fs::write(cli.out.join("fitness.json"), serde_json::to_string_pretty(&result)? + "\n")?;
            let loss: String = result.train_loss_curve.iter().enumerate().map(|(i, l)| format!("{}\t{l}\n", i + 1)).collect();
            fs::write(cli.out.join("loss.tsv"), format!("step\tloss\n{loss}"))?;
            match &result.rejected {
                Some(r) => println!("rejected: {r}"),
                None => println!(
                    "validation recall@{k}: {:.4}  test recall@{k}: {:.4}  parameters: {}  steps: {}  {:.1}s",
                    result.fitness,
                    result.test_recall.unwrap_or(f64::NAN),
                    result.parameter_count,
                    result.steps_run,
                    result.wall_time,
                    k = cfg.train.recall_k
                ),
            }
            Ok(Outcome::Done)
        }
        Command::GenData { overrides } => {
            let cfg = resolved(cli, env, overrides)?;
            let ds = generate(&cfg.data)?;
            prepare_out(&cli.out, &cfg)?;
            let path = cli.out.join("dataset.txt");
            data_format::save(&ds, &path)?;
            println!(
                "wrote {} ({} train, {} validation, {} test)",
                path.display(),
                ds.train.len(),
                ds.validation.len(),
                ds.test.len()
            );
            Ok(Outcome::Done)
        }
        Command::Report { logs } => {
            let mut inputs = Vec::new();
            for p in logs {
                let file = if p.is_dir() { p.join(LOG_FILE) } else { p.clone() };
                let text = fs::read_to_string(&file).map_err(|e| Error::Config(format!("reading {}: {e}", file.display())))?;
                inputs.push((p.display().to_string(), text));
            }
            let rep = report::summarize(&inputs);
            let cfg = resolved(cli, env, &[])?;
            prepare_out(&cli.out, &cfg)?;
            fs::write(cli.out.join("report.txt"), rep.to_table())?;
            fs::write(cli.out.join("report_series.tsv"), rep.series())?;
            print!("{}", rep.to_table());
            Ok(Outcome::Done)
        }
    }
}

fn train_one<T: crate::tensor::Scalar>(
    out: &Path,
    g: &Genome,
    vocab: &Vocabulary,
    ds: &crate::data::Dataset,
    model: &ModelConfig,
    cfg: &RunConfig,
) -> Result<FitnessResult> {
    let (result, trained) = train_candidate::<T>(g, vocab, ds, model, &cfg.train)?;
    if let Some(t) = trained {
        t.store.save(&out.join("params.bin"))?;
    }
    Ok(result)
}

fn search(cli: &Cli, cfg: RunConfig) -> Result<Outcome> {
    let out = &cli.out;
    let non_empty = out.is_dir() && fs::read_dir(out)?.next().is_some();
    if non_empty && !cli.resume {
        return Err(Error::Config(format!("{} is not empty; pass --resume to continue a search there", out.display())));
    }
    if cli.resume && !out.join(CHECKPOINT_FILE).is_file() {
        return Err(Error::Config(format!("no checkpoint in {}", out.display())));
    }
    let vocab = cfg.vocabulary()?;
    let seed = cfg.search.seed_genome(&vocab)?;
    let model = model_for(&cfg, &seed)?;
    if cfg.search.space == SearchSpace::Unimodal && model.routing != Routing::Concatenated {
        return Err(Error::Internal("unimodal search without concatenated routing".into()));
    }
    let evaluator: Box<dyn Evaluator> = match cfg.search.evaluator {
        EvaluatorKind::Surrogate => Box::new(SurrogateEvaluator { vocab: vocab.clone() }),
        EvaluatorKind::Neural => Box::new(NeuralEvaluator::new(vocab.clone(), generate(&cfg.data)?, model.clone(), cfg.train.clone())),
    };
    prepare_out(out, &cfg)?;
    let progress = |h: &HistoryEntry| {
        eprintln!(
            "candidate {} of {}: fitness {:.4}{}",
            h.individual.created_at.map_or(0, |c| c + 1),
            cfg.search.candidates,
            h.individual.fitness,
            h.evaluation.rejected.as_deref().map(|r| format!(" (rejected: {r})")).unwrap_or_default()
        );
    };
    let opts = RunOptions {
        checkpoint: Some(out.join(CHECKPOINT_FILE)),
        log: Some(out.join(LOG_FILE)),
        resume: cli.resume,
        stop: Some(&STOP),
        halt_after: None,
        progress: Some(&progress),
    };
    let outcome = run_search(&cfg.search, &vocab, evaluator.as_ref(), &opts)?;
    if let Some(best) = &outcome.best {
        fs::write(out.join("best_genome.json"), best.genome.to_text(&vocab))?;
        let graph = compile_for(&cfg, &best.genome, &vocab)?;
        fs::write(out.join("best.dot"), to_dot(&graph))?;
        fs::write(out.join("best_graph.json"), to_graph_json(&graph))?;
        let mut summary = format!(
            "candidates: {}\nbest id: {}\nbest fitness: {}\nmode: {:?}\n",
            outcome.history.len(),
            best.id,
            best.fitness,
            cfg.search.mode
        );
        summary.push_str(&graph_summary(&graph));
        fs::write(out.join("summary.txt"), &summary)?;
        print!("{summary}");
    }
    if outcome.interrupted || STOP.load(Ordering::SeqCst) && outcome.history.len() < cfg.search.candidates {
        return Ok(Outcome::Interrupted);
    }
    if cfg.search.mode == SearchMode::Async {
        eprintln!("asynchronous mode: candidate order depends on evaluation timing");
    }
    Ok(Outcome::Done)
}
