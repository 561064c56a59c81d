//! Training and evaluation of every system, and their on-disk form.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use evinf_core::eval::{evaluate_model, EvalOptions, EvidenceSystem, LrSystem, NeuralSystem, PipelineLrSystem};
use evinf_core::linear::{lr_train, LinearModel, PipelineLr, SEGMENTS};
use evinf_core::models::{Model, Variant};
use evinf_core::numerics::{parse_word_vectors, seeded_rng, Embeddings};
use evinf_core::training::{
    build_examples, build_lr_examples, build_vocabulary, nested_split, pipeline_examples, pretrain_attention, train,
    RunSummary,
};
use evinf_core::eval::MetricsReport;
use evinf_core::{Dataset, Split, Vocabulary};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{read_bytes, read_to_string, write_bytes, CliError, Result};

pub const VOCAB_FILE: &str = "vocab.json";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LR_FILE: &str = "lr.json";
pub const PIPELINE_LR_FILE: &str = "pipeline_lr.json";

/// Anything `train` can fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    Lr,
    PipelineLr,
    Neural(Variant),
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemKind::Lr => f.write_str("lr"),
            SystemKind::PipelineLr => f.write_str("pipeline-lr"),
            SystemKind::Neural(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for SystemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lr" => Ok(SystemKind::Lr),
            "pipeline-lr" => Ok(SystemKind::PipelineLr),
            other => other.parse::<Variant>().map(SystemKind::Neural).map_err(|_| {
                let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
                format!("unknown system {other:?}; expected lr, pipeline-lr or one of {}", names.join(", "))
            }),
        }
    }
}

#[derive(Clone, Debug)]
pub enum TrainedSystem {
    Lr(LinearModel),
    PipelineLr(PipelineLr),
    Neural(Box<Model>),
}

/// A fitted system with its vocabulary and training logs.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub system: TrainedSystem,
    pub vocab: Vocabulary,
    pub pretrain: Option<RunSummary>,
    pub train: Option<RunSummary>,
}

/// Fresh model for `variant`, with pretrained word vectors when configured.
pub fn build_model(config: &ExperimentConfig, variant: Variant, vocab: &Vocabulary) -> Result<Model> {
    let mut mc = config.model.clone();
    mc.variant = variant;
    match &config.embeddings {
        None => Ok(Model::new(mc, vocab.len())?),
        Some(path) => {
            let path = crate::resolve_input(path);
            let vectors = parse_word_vectors(&read_to_string(&path)?).map_err(|e| CliError::data(&path, e))?;
            let mut rng = seeded_rng(mc.seed ^ 0xe3b);
            let emb = Embeddings::from_pretrained(vocab, &vectors, mc.embedding_std, &mut rng);
            Ok(Model::with_embeddings(mc, emb)?)
        }
    }
}

/// Fit `kind` on the training split. Neural models hold out a nested dev
/// split for early stopping and, when configured, pretrain attention first.
/// With `pretrain_only` the end-task training is skipped.
pub fn train_system(dataset: &Dataset, config: &ExperimentConfig, kind: SystemKind, pretrain_only: bool) -> Result<TrainOutcome> {
    config.validate()?;
    let vocab = build_vocabulary(dataset, config.vocab_cap)?;
    let no_examples = || CliError::Data("no labelled training prompts".into());
    let (system, pretrain, trained) = match kind {
        SystemKind::Lr => {
            let examples = build_lr_examples(dataset, dataset.prompts_in(Split::Train), &vocab);
            if examples.is_empty() {
                return Err(no_examples());
            }
            (TrainedSystem::Lr(lr_train(&examples, 3, SEGMENTS * vocab.len(), &config.lr)?), None, None)
        }
        SystemKind::PipelineLr => {
            let examples = pipeline_examples(dataset, dataset.prompts_in(Split::Train));
            if examples.is_empty() {
                return Err(no_examples());
            }
            (TrainedSystem::PipelineLr(PipelineLr::train(&examples, &vocab, &config.pipeline_lr)?), None, None)
        }
        SystemKind::Neural(variant) => {
            let mut model = build_model(config, variant, &vocab)?;
            let split = nested_split(dataset, config.train.nested_dev_fraction, config.train.seed)?;
            let max_tokens = config.model.max_tokens;
            let train_ex = build_examples(dataset, split.train_prompts(dataset), &vocab, max_tokens);
            let dev_ex = build_examples(dataset, split.dev_prompts(dataset), &vocab, max_tokens);
            if train_ex.is_empty() || dev_ex.is_empty() {
                return Err(no_examples());
            }
            let pretrain = match config.pretrain {
                Some(objective) => {
                    let mut tc = config.train.clone();
                    tc.objective = objective;
                    Some(pretrain_attention(&mut model, &train_ex, &dev_ex, &tc)?)
                }
                None if pretrain_only => return Err(CliError::Usage("no pretraining objective configured".into())),
                None => None,
            };
            let trained = if pretrain_only { None } else { Some(train(&mut model, &train_ex, &dev_ex, &config.train)?) };
            if !model.is_finite() {
                return Err(CliError::Numerical("model weights are not finite after training".into()));
            }
            (TrainedSystem::Neural(Box::new(model)), pretrain, trained)
        }
    };
    Ok(TrainOutcome { system, vocab, pretrain, train: trained })
}

impl TrainedSystem {
    pub fn name(&self) -> String {
        match self {
            TrainedSystem::Lr(_) => "lr".into(),
            TrainedSystem::PipelineLr(_) => "pipeline-lr".into(),
            TrainedSystem::Neural(m) => m.variant().name().into(),
        }
    }

    pub fn evaluator<'a>(&'a self, vocab: &'a Vocabulary) -> Box<dyn EvidenceSystem + 'a> {
        match self {
            TrainedSystem::Lr(model) => Box::new(LrSystem { model, vocab }),
            TrainedSystem::PipelineLr(model) => Box::new(PipelineLrSystem { model, vocab }),
            TrainedSystem::Neural(model) => Box::new(NeuralSystem { model, vocab }),
        }
    }

    /// Write the vocabulary and model files into `dir`; returns their paths.
    pub fn save(&self, vocab: &Vocabulary, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        let vocab_path = dir.join(VOCAB_FILE);
        write_bytes(&vocab_path, serde_json::to_vec(vocab).expect("vocabulary serializes"))?;
        let model_path = match self {
            TrainedSystem::Lr(m) => {
                let p = dir.join(LR_FILE);
                write_bytes(&p, serde_json::to_vec(m).expect("model serializes"))?;
                p
            }
            TrainedSystem::PipelineLr(m) => {
                let p = dir.join(PIPELINE_LR_FILE);
                write_bytes(&p, serde_json::to_vec(m).expect("model serializes"))?;
                p
            }
            TrainedSystem::Neural(m) => {
                let p = dir.join(CHECKPOINT_FILE);
                write_bytes(&p, m.to_bytes(vocab.fingerprint()))?;
                p
            }
        };
        Ok(vec![vocab_path, model_path])
    }

    /// Load whichever model file `dir` holds, checked against its vocabulary.
    pub fn load(dir: &Path) -> Result<(TrainedSystem, Vocabulary)> {
        let vocab_path = dir.join(VOCAB_FILE);
        let mut vocab: Vocabulary =
            serde_json::from_slice(&read_bytes(&vocab_path)?).map_err(|e| CliError::data(&vocab_path, e))?;
        vocab.reindex();
        let ckpt = dir.join(CHECKPOINT_FILE);
        let lr = dir.join(LR_FILE);
        let plr = dir.join(PIPELINE_LR_FILE);
        let system = if ckpt.is_file() {
            let model = Model::from_bytes(&read_bytes(&ckpt)?, Some(vocab.fingerprint())).map_err(|e| CliError::data(&ckpt, e))?;
            TrainedSystem::Neural(Box::new(model))
        } else if lr.is_file() {
            TrainedSystem::Lr(serde_json::from_slice(&read_bytes(&lr)?).map_err(|e| CliError::data(&lr, e))?)
        } else if plr.is_file() {
            TrainedSystem::PipelineLr(serde_json::from_slice(&read_bytes(&plr)?).map_err(|e| CliError::data(&plr, e))?)
        } else {
            return Err(CliError::data(dir, "no model file in run directory"));
        };
        Ok((system, vocab))
    }
}

/// One evaluation result, as written to `report.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub system: String,
    pub split: Split,
    pub options: EvalOptions,
    pub report: MetricsReport,
}

/// Evaluate on every requested split that has labelled prompts.
pub fn evaluate_splits(
    system: &dyn EvidenceSystem,
    dataset: &Dataset,
    splits: &[Split],
    options: &EvalOptions,
) -> Result<Vec<EvalRecord>> {
    let gold = dataset.gold_labels();
    let mut out = Vec::new();
    for &split in splits {
        if !dataset.prompts_in(split).any(|p| gold.contains_key(&p.prompt_id)) {
            log::warn!("{} split has no labelled prompts; skipped", split.name());
            continue;
        }
        let report = evaluate_model(system, dataset, split, options)?;
        out.push(EvalRecord { system: system.name(), split, options: *options, report });
    }
    Ok(out)
}

/// Human-readable rendering of evaluation records.
pub fn render_records(records: &[EvalRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let mut flags = Vec::new();
        if r.options.oracle_spans {
            flags.push("oracle spans");
        }
        if r.options.ablate_prompt {
            flags.push("no prompt");
        }
        if r.options.ablate_article {
            flags.push("no article");
        }
        let suffix = if flags.is_empty() { String::new() } else { format!(" [{}]", flags.join(", ")) };
        out += &format!("== {} on {}{} ({} prompts, {} excluded)\n", r.system, r.split.name(), suffix, r.report.evaluated, r.report.excluded);
        out += &evinf_core::eval::format_table(&[(r.system.clone(), r.report.clone())]);
        out += &evinf_core::eval::format_per_class(&r.report);
        out += "\n";
    }
    out
}

pub fn records_jsonl(records: &[EvalRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use evinf_core::corpus::{generate_synthetic, SynthConfig};

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.model.embedding_dim = 6;
        cfg.model.hidden = 4;
        cfg.model.classifier_hidden = 4;
        cfg.model.attention_hidden = 4;
        cfg.train.max_epochs = 1;
        cfg.train.patience = 1;
        cfg.train.pretrain_epochs = 1;
        cfg
    }

    #[test]
    fn system_names_round_trip() {
        let mut kinds = vec![SystemKind::Lr, SystemKind::PipelineLr];
        kinds.extend(Variant::ALL.iter().map(|&v| SystemKind::Neural(v)));
        for k in kinds {
            assert_eq!(k.to_string().parse::<SystemKind>().unwrap(), k);
        }
        assert!("bert".parse::<SystemKind>().is_err());
    }

    #[test]
    fn trained_systems_reload_with_identical_predictions() {
        let ds = generate_synthetic(&SynthConfig { articles: 20, ..SynthConfig::default() }).unwrap().dataset;
        let cfg = tiny_config();
        for kind in [SystemKind::Lr, SystemKind::PipelineLr, SystemKind::Neural(Variant::CondAttn)] {
            let out = train_system(&ds, &cfg, kind, false).unwrap();
            let dir = tempfile::tempdir().unwrap();
            out.system.save(&out.vocab, dir.path()).unwrap();
            let (back, vocab) = TrainedSystem::load(dir.path()).unwrap();
            let opts = EvalOptions::default();
            let a = evaluate_splits(out.system.evaluator(&out.vocab).as_ref(), &ds, &[Split::Test], &opts).unwrap();
            let b = evaluate_splits(back.evaluator(&vocab).as_ref(), &ds, &[Split::Test], &opts).unwrap();
            assert_eq!(a, b, "{kind}");
        }
    }

    #[test]
    fn pretrain_only_needs_an_objective() {
        let ds = generate_synthetic(&SynthConfig { articles: 20, ..SynthConfig::default() }).unwrap().dataset;
        let err = train_system(&ds, &tiny_config(), SystemKind::Neural(Variant::Attn), true).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let mut cfg = tiny_config();
        cfg.pretrain = Some(evinf_core::training::PretrainObjective::TokenwiseBce);
        let out = train_system(&ds, &cfg, SystemKind::Neural(Variant::Attn), true).unwrap();
        assert!(out.pretrain.is_some() && out.train.is_none());
    }

    #[test]
    fn unlabelled_splits_are_skipped() {
        let ds = generate_synthetic(&SynthConfig { articles: 10, ..SynthConfig::default() }).unwrap().dataset;
        let stripped = Dataset::new(ds.articles.clone(), ds.prompts.clone(), Vec::new()).unwrap();
        let m = evinf_core::eval::Majority(evinf_core::Label::NoSigDiff);
        assert!(evaluate_splits(&m, &stripped, &Split::ALL, &EvalOptions::default()).unwrap().is_empty());
    }
}
