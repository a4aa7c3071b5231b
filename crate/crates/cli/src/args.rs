use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "srkbqa", version, about = "Subgraph retrieval and reasoning over knowledge bases")]
pub struct Cli {
    /// Seed for shuffling, negative sampling and initialization.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Flat JSON file with the command's config fields.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,

    /// Where to write the run manifest (default: next to --out).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Intern a TSV triple file into a KB artifact.
    Ingest(IngestArgs),
    /// Generate a synthetic KB with planted multi-hop questions.
    Synth(SynthArgs),
    /// Pre-train the path retriever on weak or pseudo labels.
    Pretrain(PretrainArgs),
    /// Train the reasoner on subgraphs from a frozen retriever.
    TrainReasoner(StageArgs),
    /// Alternate reasoner and retriever updates end to end.
    Finetune(StageArgs),
    /// Rank relation paths for every question.
    Retrieve(RetrieveArgs),
    /// Coverage and QA metrics, optionally against the PPR baseline.
    Eval(EvalArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Synth(_) => "synth",
            Command::Pretrain(_) => "pretrain",
            Command::TrainReasoner(_) => "train-reasoner",
            Command::Finetune(_) => "finetune",
            Command::Retrieve(_) => "retrieve",
            Command::Eval(_) => "eval",
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Tab-separated head, relation, tail lines.
    #[arg(long, alias = "kb")]
    pub triples: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Do not add `__inv` relations.
    #[arg(long)]
    pub no_inverses: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub entities: Option<usize>,
    #[arg(long)]
    pub relations: Option<usize>,
    #[arg(long)]
    pub questions: Option<usize>,
    /// How many of the last questions go to test.jsonl.
    #[arg(long, default_value_t = 100)]
    pub test_questions: usize,
}

#[derive(Debug, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Also write a checkpoint after every epoch into this directory.
    #[arg(long)]
    pub epoch_checkpoints: Option<PathBuf>,
    /// Write (epoch, metric, value) rows here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    /// KB artifact or TSV triples.
    #[arg(long)]
    pub kb: PathBuf,
    /// QA pairs for weak supervision.
    #[arg(long, required_unless_present = "tuples")]
    pub qa: Option<PathBuf>,
    /// Distant-supervision tuples for pseudo labels instead of QA pairs.
    #[arg(long, conflicts_with = "qa")]
    pub tuples: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Give relations their own token table.
    #[arg(long)]
    pub separate_towers: bool,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct RetrievalFlags {
    /// Beam width per topic entity.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub max_hops: Option<usize>,
    /// Keep relations at or below 0.5 in the beam.
    #[arg(long)]
    pub no_threshold_stop: bool,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[arg(long)]
    pub kb: PathBuf,
    #[arg(long)]
    pub qa: PathBuf,
    /// Checkpoint from the previous stage.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Reasoner propagation steps (train-reasoner only).
    #[arg(long)]
    pub steps: Option<usize>,
    #[command(flatten)]
    pub retrieval: RetrievalFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub kb: PathBuf,
    #[arg(long)]
    pub qa: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// JSON-lines output (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub retrieval: RetrievalFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Sr,
    Ppr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Coverage {
    Trees,
    Leaves,
    Merged,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub kb: PathBuf,
    #[arg(long)]
    pub qa: PathBuf,
    /// Needed for SR coverage and QA metrics.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Hits@K cut-offs; the beam width is the largest.
    #[arg(long, value_delimiter = ',', default_value = "1,10")]
    pub k: Vec<usize>,
    #[arg(long)]
    pub max_hops: Option<usize>,
    #[arg(long)]
    pub no_threshold_stop: bool,
    #[arg(long, value_enum, default_value_t = Baseline::Sr)]
    pub baseline: Baseline,
    /// PPR subgraph budget.
    #[arg(long, default_value_t = 50)]
    pub max_entities: usize,
    #[arg(long, value_enum, default_value_t = Coverage::Trees)]
    pub coverage: Coverage,
    /// Answer threshold for F1; searched on --validation when given.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    /// Report file (stdout always gets it too).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write (k, metric, value) rows here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Per-question predicted answers as JSON lines (needs a reasoner).
    #[arg(long)]
    pub answers: Option<PathBuf>,
    /// Cap on answers listed per question.
    #[arg(long, default_value_t = 5)]
    pub top: usize,
}
