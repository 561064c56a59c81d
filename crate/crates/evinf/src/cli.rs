//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evinf_core::training::{PretrainObjective, SelectionCriterion, TargetMode};
use evinf_core::Split;

use crate::config::ExperimentConfig;
use crate::experiment::SystemKind;

#[derive(Debug, Parser)]
#[command(name = "evinf", version, about = "Evidence inference over clinical trial reports")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a dataset from annotation CSVs and an article directory.
    Ingest(IngestArgs),
    /// Generate a templated corpus with planted evidence sentences.
    Synth(SynthArgs),
    /// Strip and segment article files into processed documents.
    Preprocess(PreprocessArgs),
    /// Evaluate the rule-based baseline on a split.
    Heuristics(HeuristicsArgs),
    /// Train a linear or neural system.
    Train(TrainArgs),
    /// Pretrain the attention of a neural model on evidence masks.
    PretrainAttn(PretrainArgs),
    /// Evaluate a trained run, the rule baseline or the majority baseline.
    Eval(EvalArgs),
    /// Krippendorff's alpha over the annotation labels.
    Agreement(AgreementArgs),
    /// Finite-difference checks of every analytic gradient.
    Gradcheck(GradcheckArgs),
    /// Train once per seed and aggregate test metrics.
    MultiRun(MultiRunArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Annotation rows (one per answer).
    #[arg(long)]
    pub annotations: PathBuf,
    /// Prompt texts keyed by prompt id; else read from the annotation file.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// Directory of article files.
    #[arg(long)]
    pub articles: PathBuf,
    /// Directory with train/validation/test article id lists.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    /// Seed for an 80/10/10 article split when no id lists are given.
    #[arg(long, conflicts_with = "splits")]
    pub split_seed: Option<u64>,
    /// Keep invalid prompts and rejected answers.
    #[arg(long)]
    pub no_filter: bool,
    /// Fail unless the split counts equal the published ones.
    #[arg(long)]
    pub expect_published: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub articles: usize,
    #[arg(long, default_value_t = 4)]
    pub prompts_per_article: usize,
    #[arg(long, default_value_t = 12)]
    pub filler_sentences: usize,
    #[arg(long, default_value_t = 24)]
    pub name_pool: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// An article file or a directory of them.
    #[arg(long)]
    pub input: PathBuf,
    /// Extra abbreviations, one per line, that never end a sentence.
    #[arg(long)]
    pub abbreviations: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalFlags {
    /// Restrict inputs to the gold evidence spans.
    #[arg(long)]
    pub oracle_spans: bool,
    /// Hide the intervention, comparator and outcome.
    #[arg(long)]
    pub ablate_prompt: bool,
    /// Hide the article.
    #[arg(long)]
    pub ablate_article: bool,
}

#[derive(Debug, Args)]
pub struct HeuristicsArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[command(flatten)]
    pub flags: EvalFlags,
    /// Direction lexicon with [increase] and [decrease] sections.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Stopwords, one per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Directory for the manifest and reports.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PretrainFlag {
    None,
    Tokenwise,
    Balanced,
    Mass,
}

impl PretrainFlag {
    pub fn objective(self) -> Option<PretrainObjective> {
        match self {
            PretrainFlag::None => None,
            PretrainFlag::Tokenwise => Some(PretrainObjective::TokenwiseBce),
            PretrainFlag::Balanced => Some(PretrainObjective::BalancedTokenwiseBce),
            PretrainFlag::Mass => Some(PretrainObjective::EvidenceMass),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CriterionFlag {
    Auc,
    Entropy,
    Mass,
}

impl From<CriterionFlag> for SelectionCriterion {
    fn from(c: CriterionFlag) -> Self {
        match c {
            CriterionFlag::Auc => SelectionCriterion::TokenAuc,
            CriterionFlag::Entropy => SelectionCriterion::Entropy,
            CriterionFlag::Mass => SelectionCriterion::EvidenceMass,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetFlag {
    Binary,
    Uniform,
}

impl From<TargetFlag> for TargetMode {
    fn from(t: TargetFlag) -> Self {
        match t {
            TargetFlag::Binary => TargetMode::BinaryOnes,
            TargetFlag::Uniform => TargetMode::UniformOverEvidence,
        }
    }
}

/// Data, configuration file and overrides shared by training commands.
#[derive(Clone, Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// TOML configuration; flags below take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate for end-task training.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub pretrain_lr: Option<f64>,
    #[arg(long)]
    pub pretrain_epochs: Option<usize>,
    #[arg(long)]
    pub pretrain_batch_size: Option<usize>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    #[arg(long)]
    pub vocab_cap: Option<usize>,
    /// Word vectors in `token v1 ... vk` text format.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Attention selection criterion for pretraining.
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionFlag>,
    /// Pretraining targets for token-wise objectives.
    #[arg(long, value_enum)]
    pub target: Option<TargetFlag>,
}

impl ExperimentArgs {
    /// Configuration file (or defaults) with flag overrides applied.
    pub fn resolve(&self) -> crate::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.set_seed(s);
        }
        let set = |dst: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut cfg.train.max_epochs, self.epochs);
        set(&mut cfg.train.patience, self.patience);
        set(&mut cfg.train.batch_size, self.batch_size);
        set(&mut cfg.train.pretrain_epochs, self.pretrain_epochs);
        set(&mut cfg.train.pretrain_batch_size, self.pretrain_batch_size);
        set(&mut cfg.model.embedding_dim, self.embedding_dim);
        set(&mut cfg.model.hidden, self.hidden);
        set(&mut cfg.model.max_tokens, self.max_tokens);
        set(&mut cfg.vocab_cap, self.vocab_cap);
        if let Some(lr) = self.lr {
            cfg.train.adam.lr = lr;
        }
        if let Some(lr) = self.pretrain_lr {
            cfg.train.pretrain_adam.lr = lr;
        }
        if let Some(e) = &self.embeddings {
            cfg.embeddings = Some(e.clone());
        }
        if let Some(c) = self.criterion {
            cfg.train.criterion = c.into();
        }
        if let Some(t) = self.target {
            cfg.train.target_mode = t.into();
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// lr, pipeline-lr, or a neural variant such as cond-attn.
    #[arg(long)]
    pub variant: SystemKind,
    /// Attention pretraining before end-task training.
    #[arg(long, value_enum)]
    pub pretrain: Option<PretrainFlag>,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Output directory for the manifest, logs, checkpoint and reports.
    #[arg(long)]
    pub run_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    /// A neural variant with attention.
    #[arg(long)]
    pub variant: SystemKind,
    #[arg(long, value_enum, default_value = "tokenwise")]
    pub objective: PretrainFlag,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long)]
    pub run_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// `majority`, `heuristics`, or a run directory written by train.
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[command(flatten)]
    pub flags: EvalFlags,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Only prompts of this split.
    #[arg(long)]
    pub split: Option<Split>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Random seeds per component.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MultiRunArgs {
    #[arg(long)]
    pub variant: SystemKind,
    #[arg(long, value_enum)]
    pub pretrain: Option<PretrainFlag>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', conflicts_with = "runs")]
    pub seeds: Vec<u64>,
    /// Use seeds 0..runs.
    #[arg(long)]
    pub runs: Option<u64>,
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long)]
    pub run_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
