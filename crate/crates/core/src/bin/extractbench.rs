use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use extractbench::embedding::BackendKind;
use extractbench::harness::{
    compare_reports, evaluate, load_tasks, score_single, ChatGenerator, EvalSettings, EvaluationReport,
    GenerationClient, HarnessError, ReplayGenerator, RunConfig,
};
use extractbench::pipeline::{
    augment_corpus, chunk_document, extract_corpus, holdout_split, load_corpus, ApproxTokenCounter, AugmentSource,
    ChatExtractor, ChunkExtractor, FieldPool, MockExtractor, PipelineError,
};
use extractbench::schema::ParseMode;
use extractbench::template::PromptTemplate;
use extractbench::training::{inverse_plant, simulate_kl, KlControllerState};

#[derive(Parser)]
#[command(name = "extractbench", version, about = "Score, evaluate and prepare schema-guided extraction data")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// strict | lenient
    #[arg(long, global = true)]
    parse_mode: Option<ParseMode>,
    /// deterministic | remote
    #[arg(long, global = true)]
    embedder: Option<BackendKind>,
}

#[derive(Subcommand)]
enum Command {
    /// Score one prediction against a gold output; prints the breakdown as JSON.
    Score {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        prediction: PathBuf,
    },
    /// Generate and score a task set; prints the report as JSON.
    Evaluate {
        #[arg(long)]
        tasks: PathBuf,
        /// Replay predictions (JSONL of task_id, prediction). Without it the
        /// configured chat endpoint is called.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        model_name: Option<String>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a corpus into overlapping chunks; prints JSONL.
    Chunk {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Extract a corpus chunk by chunk and emit token-budgeted examples as JSONL.
    Augment {
        #[arg(long)]
        corpus: PathBuf,
        /// Replay extractor responses from this directory instead of calling
        /// the chat endpoint.
        #[arg(long)]
        mock_dir: Option<PathBuf>,
        /// Draws per document.
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Seeded holdout split of a JSONL file.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        holdout: Option<usize>,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
    /// Run the adaptive KL controller against a toy plant.
    SimulateKl {
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        /// inverse (D = k/β) or linear (D = k·β)
        #[arg(long, default_value = "inverse")]
        plant: String,
        #[arg(long, default_value_t = 2.5)]
        k: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
    /// Compare reports against the first one.
    Compare {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
    },
}

enum CliError {
    /// Unreadable or malformed input; exit code 2.
    Input(String),
    /// Anything else; exit code 1.
    Runtime(String),
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Scoring { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::ExtractorFailure { .. } | PipelineError::TokenizerUnavailable(_) => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn load_config(global: &GlobalOpts) -> Result<RunConfig, CliError> {
    let mut cfg = match &global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
        cfg.augmentation.rng_seed = seed;
    }
    if let Some(w) = global.workers {
        cfg.workers = w;
    }
    if let Some(m) = global.parse_mode {
        cfg.parse_mode = m;
    }
    if let Some(e) = global.embedder {
        cfg.embedder = e;
    }
    Ok(cfg)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

fn jsonl<T: serde::Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("record serializes"));
        out.push('\n');
    }
    out
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli.global)?;
    match cli.command {
        Command::Score { schema, gold, prediction } => {
            let embedder = cfg.build_embedder()?;
            let breakdown = score_single(&schema, &gold, &prediction, &cfg.similarity, cfg.parse_mode, &embedder)?;
            let text = serde_json::to_string_pretty(&breakdown).expect("breakdown serializes");
            write_out(None, &format!("{text}\n"))
        }
        Command::Evaluate {
            tasks,
            predictions,
            model_name,
            out,
        } => {
            let tasks = load_tasks(&tasks)?;
            let embedder = cfg.build_embedder()?;
            let generator: Box<dyn GenerationClient> = match predictions {
                Some(p) => Box::new(ReplayGenerator::load(&p)?),
                None => Box::new(ChatGenerator::new(cfg.build_chat_client()?)),
            };
            let settings = EvalSettings {
                model_name: model_name.unwrap_or_else(|| cfg.model_name.clone()),
                similarity: cfg.similarity,
                parse_mode: cfg.parse_mode,
                template: PromptTemplate::v1(),
            };
            let report = evaluate(&tasks, generator.as_ref(), &settings, &embedder, cfg.workers)?;
            eprintln!(
                "{}: {} tasks, mean reward {:.4}, JSON validity {:.1}%, {} generation failure(s)",
                report.model_name,
                report.task_count,
                report.mean_reward,
                report.json_validity * 100.0,
                report.failures
            );
            write_out(out.as_deref(), &format!("{}\n", report.to_json_pretty()))
        }
        Command::Chunk { corpus } => {
            let docs = load_corpus(&corpus)?;
            let mut chunks = Vec::new();
            for doc in &docs {
                chunks.extend(chunk_document(&doc.doc_id, &doc.text, &cfg.chunking)?);
            }
            write_out(None, &jsonl(&chunks))
        }
        Command::Augment { corpus, mock_dir, draws } => {
            let docs = load_corpus(&corpus)?;
            let extractor: Box<dyn ChunkExtractor> = match mock_dir {
                Some(dir) => Box::new(MockExtractor::new(dir)),
                None => Box::new(ChatExtractor::new(cfg.build_chat_client()?)),
            };
            let extracted = extract_corpus(&docs, &cfg.chunking, extractor.as_ref(), cfg.workers)?;
            let mut sources = Vec::new();
            for doc in extracted {
                match doc.result {
                    Ok(memory) => sources.push(AugmentSource {
                        pool: FieldPool::from_memory(&memory, doc.chunks.len()),
                        doc_id: doc.doc_id,
                        chunks: doc.chunks,
                    }),
                    Err(e) => eprintln!("skipping document `{}`: {e}", doc.doc_id),
                }
            }
            let draws = draws.unwrap_or(cfg.draws_per_doc);
            let outcomes = augment_corpus(
                &sources,
                draws,
                &cfg.augmentation,
                &PromptTemplate::v1(),
                &ApproxTokenCounter,
                cfg.workers,
            )?;
            let examples: Vec<_> = outcomes.iter().filter_map(|o| o.example()).collect();
            eprintln!(
                "{} document(s), {} draw(s), {} example(s), {} skipped",
                sources.len(),
                outcomes.len(),
                examples.len(),
                outcomes.len() - examples.len()
            );
            write_out(None, &jsonl(examples))
        }
        Command::Split {
            input,
            holdout,
            train_out,
            test_out,
        } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
            let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
            let (train, test) = holdout_split(lines, holdout.unwrap_or(cfg.holdout), cfg.seed)?;
            eprintln!("{} train, {} test", train.len(), test.len());
            let join = |v: Vec<&str>| v.iter().map(|l| format!("{l}\n")).collect::<String>();
            write_out(Some(&train_out), &join(train))?;
            write_out(Some(&test_out), &join(test))
        }
        Command::SimulateKl { beta, plant, k, steps } => {
            if !(beta > 0.0) || !(k > 0.0) {
                return Err(CliError::Input("beta and k must be positive".into()));
            }
            let state = KlControllerState::new(beta);
            let trace = match plant.as_str() {
                "inverse" => simulate_kl(state, inverse_plant(k), steps),
                "linear" => simulate_kl(state, move |b| k * b, steps),
                other => return Err(CliError::Input(format!("unknown plant `{other}` (expected inverse|linear)"))),
            };
            let mut out = String::from("step  beta          observed_kl   in_band\n");
            for s in &trace {
                out.push_str(&format!("{:>4}  {:<12.6e}  {:<12.6e}  {}\n", s.step, s.beta, s.observed_dkl, s.in_band));
            }
            write_out(None, &out)
        }
        Command::Compare { reports } => {
            let loaded = reports
                .iter()
                .map(|p| EvaluationReport::load(p))
                .collect::<Result<Vec<_>, _>>()?;
            let table = compare_reports(&loaded)?;
            write_out(None, &table.render())
        }
    }
}
