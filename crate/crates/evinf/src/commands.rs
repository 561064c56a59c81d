//! Command implementations.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;
use evinf_core::corpus::{
    dataset_agreement, filter_valid, generate_synthetic, ingest, published_split_counts, verify_split_counts, Article,
    SynthConfig,
};
use evinf_core::eval::{EvalOptions, EvidenceSystem, Majority};
use evinf_core::heuristics::{parse_word_list, DirectionLexicon, Heuristics};
use evinf_core::models::selfcheck::{check_gradients, GradTarget};
use evinf_core::numerics::seeded_rng;
use evinf_core::preprocess::SentenceSplitter;
use evinf_core::training::{aggregate, RunSummary};
use evinf_core::{Dataset, ProcessedDocument, Split};
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::cli::{
    AgreementArgs, Cli, Command, EvalArgs, EvalFlags, ExperimentArgs, GradcheckArgs, HeuristicsArgs, IngestArgs,
    MultiRunArgs, PreprocessArgs, PretrainArgs, ReplayArgs, SynthArgs, TrainArgs,
};
use crate::config::ExperimentConfig;
use crate::dataset::{load_dataset, save_dataset, DocumentLine};
use crate::error::{read_to_string, write_bytes, CliError, Result};
use crate::experiment::{
    evaluate_splits, records_jsonl, render_records, train_system, EvalRecord, SystemKind, TrainOutcome, TrainedSystem,
};
use crate::manifest::{hash_path, RunManifest};
use crate::resolve_input;
use crate::sources::{list_article_files, read_annotations, read_prompts, read_split_ids, to_raw_rows, ArticleStore};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Parse `argv`, run the command and return the process exit code.
pub fn main_with(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(cli.command, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command, argv: &[String]) -> Result<()> {
    match command {
        Command::Ingest(a) => cmd_ingest(a, argv),
        Command::Synth(a) => cmd_synth(a, argv),
        Command::Preprocess(a) => cmd_preprocess(a, argv),
        Command::Heuristics(a) => cmd_heuristics(a, argv),
        Command::Train(a) => cmd_train(a, argv),
        Command::PretrainAttn(a) => cmd_pretrain(a, argv),
        Command::Eval(a) => cmd_eval(a, argv),
        Command::Agreement(a) => cmd_agreement(a, argv),
        Command::Gradcheck(a) => cmd_gradcheck(a, argv),
        Command::MultiRun(a) => cmd_multi_run(a, argv),
        Command::Replay(a) => cmd_replay(a),
    }
}

/// A manifest that is written before the command does any work and
/// completed with output hashes once it succeeds.
struct Recorder {
    manifest: RunManifest,
    path: Option<PathBuf>,
}

impl Recorder {
    fn new(command: &str, argv: &[String], path: Option<PathBuf>) -> Self {
        Recorder { manifest: RunManifest::new(command, argv), path }
    }

    /// Manifest beside a single output file.
    fn beside(command: &str, argv: &[String], out: &Path) -> Self {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        Recorder::new(command, argv, Some(out.with_file_name(name)))
    }

    /// Manifest inside an output directory, or on stderr without one.
    fn in_dir(command: &str, argv: &[String], dir: Option<&Path>) -> Self {
        Recorder::new(command, argv, dir.map(|d| d.join(MANIFEST_FILE)))
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.manifest.input(path)
    }

    fn start(&self) -> Result<()> {
        match &self.path {
            Some(p) => self.manifest.write(p),
            None => {
                eprintln!("{}", self.manifest.to_json());
                Ok(())
            }
        }
    }

    fn finish(mut self, outputs: &[PathBuf]) -> Result<()> {
        for o in outputs {
            self.manifest.output(o);
        }
        self.manifest.complete()?;
        match &self.path {
            Some(p) => self.manifest.write(p),
            None => Ok(()),
        }
    }
}

fn options(flags: &EvalFlags) -> EvalOptions {
    EvalOptions { oracle_spans: flags.oracle_spans, ablate_prompt: flags.ablate_prompt, ablate_article: flags.ablate_article }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}

/// Print the report and, given a directory, write `report.txt` and
/// `report.jsonl` there.
fn emit_records(records: &[EvalRecord], dir: Option<&Path>) -> Result<Vec<PathBuf>> {
    let text = render_records(records);
    print!("{text}");
    let Some(dir) = dir else { return Ok(Vec::new()) };
    let txt = dir.join("report.txt");
    let jsonl = dir.join("report.jsonl");
    write_bytes(&txt, &text)?;
    write_bytes(&jsonl, records_jsonl(records))?;
    Ok(vec![txt, jsonl])
}

fn cmd_ingest(a: IngestArgs, argv: &[String]) -> Result<()> {
    let annotations = resolve_input(&a.annotations);
    let articles_dir = resolve_input(&a.articles);
    let prompts_path = a.prompts.as_deref().map(resolve_input);
    let splits_dir = a.splits.as_deref().map(resolve_input);
    let mut rec = Recorder::beside("ingest", argv, &a.out);
    rec.input(&annotations)?;
    for p in prompts_path.iter().chain(&splits_dir) {
        rec.input(p)?;
    }
    rec.manifest.seeds.extend(a.split_seed);
    rec.start()?;

    let prompts = match &prompts_path {
        Some(p) => Some(read_prompts(std::fs::File::open(p).map_err(|e| CliError::io(p, e))?, p)?),
        None => None,
    };
    let file = std::fs::File::open(&annotations).map_err(|e| CliError::io(&annotations, e))?;
    let (rows, row_errors) = read_annotations(file, &annotations, prompts.as_ref())?;
    for (line, msg) in &row_errors {
        log::warn!("{}:{line}: {msg}", annotations.display());
    }

    let store = ArticleStore::new(&articles_dir)?;
    let splitter = SentenceSplitter::default();
    let mut ids: Vec<String> = rows.iter().map(|r| r.article_id.clone()).collect();
    ids.sort();
    ids.dedup();
    let mut docs: BTreeMap<String, ProcessedDocument> = BTreeMap::new();
    for id in &ids {
        match store.load(id, &splitter)? {
            Some(doc) => {
                docs.insert(id.clone(), doc);
            }
            None => log::warn!("no article file for {id}"),
        }
    }
    let splits: BTreeMap<String, Split> = match &splits_dir {
        Some(dir) => read_split_ids(dir)?,
        None => random_splits(docs.keys().cloned().collect(), a.split_seed.unwrap_or(0)),
    };
    let mut articles = BTreeMap::new();
    for (id, doc) in docs {
        match splits.get(&id) {
            Some(&split) => {
                articles.insert(id, Article { doc, split });
            }
            None => log::warn!("article {id} is in no split; dropped"),
        }
    }
    let texts = articles.iter().map(|(id, art)| (id.clone(), art.doc.text.clone())).collect();
    let outcome = ingest(&to_raw_rows(&rows, &texts), articles)?;
    for e in &outcome.errors {
        log::warn!("row {}: {}", rows.get(e.row).map_or(0, |r| r.line), e.message);
    }
    let dataset = if a.no_filter { outcome.dataset } else { filter_valid(&outcome.dataset) };
    let expected = a.expect_published.then(published_split_counts);
    let report = verify_split_counts(&dataset, expected.as_ref());
    eprintln!(
        "ingested {} rows ({} unparsed, {} rejected, {} realigned)",
        rows.len() + row_errors.len(),
        row_errors.len(),
        outcome.errors.len(),
        outcome.realigned
    );
    for (split, c) in &report.counts {
        eprintln!(
            "{:>5}: {} prompts, {} articles, labels -1/0/+1 = {}/{}/{}",
            split.name(),
            c.prompts,
            c.articles,
            c.labels[0],
            c.labels[1],
            c.labels[2]
        );
    }
    let mismatches: Vec<String> = report
        .checks
        .iter()
        .filter(|(_, e, got)| e != got)
        .map(|(name, e, got)| format!("{name}: expected {e}, found {got}"))
        .collect();
    if !mismatches.is_empty() {
        return Err(CliError::Data(format!("split counts differ from the published corpus: {}", mismatches.join("; "))));
    }
    save_dataset(&dataset, &a.out)?;
    rec.finish(&[a.out])
}

/// Shuffle article ids and cut 80/10/10 into train, dev and test.
fn random_splits(mut ids: Vec<String>, seed: u64) -> BTreeMap<String, Split> {
    ids.shuffle(&mut seeded_rng(seed));
    let n = ids.len();
    let dev_start = n * 8 / 10;
    let test_start = n * 9 / 10;
    ids.into_iter()
        .enumerate()
        .map(|(i, id)| {
            let split = if i < dev_start {
                Split::Train
            } else if i < test_start {
                Split::Dev
            } else {
                Split::Test
            };
            (id, split)
        })
        .collect()
}

fn cmd_synth(a: SynthArgs, argv: &[String]) -> Result<()> {
    let mut rec = Recorder::beside("synth", argv, &a.out);
    rec.manifest.seeds.push(a.seed);
    rec.start()?;
    let cfg = SynthConfig {
        articles: a.articles,
        prompts_per_article: a.prompts_per_article,
        filler_sentences: a.filler_sentences,
        name_pool: a.name_pool,
        seed: a.seed,
    };
    let corpus = generate_synthetic(&cfg)?;
    save_dataset(&corpus.dataset, &a.out)?;
    eprintln!("wrote {} articles, {} prompts", corpus.dataset.articles.len(), corpus.dataset.prompts.len());
    rec.finish(&[a.out])
}

fn cmd_preprocess(a: PreprocessArgs, argv: &[String]) -> Result<()> {
    let input = resolve_input(&a.input);
    let abbreviations = a.abbreviations.as_deref().map(resolve_input);
    let mut rec = Recorder::beside("preprocess", argv, &a.out);
    rec.input(&input)?;
    if let Some(p) = &abbreviations {
        rec.input(p)?;
    }
    rec.start()?;
    let mut splitter = SentenceSplitter::default();
    if let Some(p) = &abbreviations {
        for word in parse_word_list(&read_to_string(p)?) {
            splitter = splitter.with_abbreviation(&word);
        }
    }
    let mut out = Vec::new();
    let files = list_article_files(&input)?;
    for (id, path) in &files {
        let doc = ProcessedDocument::from_text(&ArticleStore::read_text(path)?, &splitter);
        let line = DocumentLine { id: id.clone(), text: doc.text, sentences: doc.sentences };
        serde_json::to_writer(&mut out, &line).expect("document serializes");
        out.push(b'\n');
    }
    write_bytes(&a.out, out)?;
    eprintln!("processed {} documents", files.len());
    rec.finish(&[a.out])
}

fn cmd_heuristics(a: HeuristicsArgs, argv: &[String]) -> Result<()> {
    let data = resolve_input(&a.data);
    let lexicon = a.lexicon.as_deref().map(resolve_input);
    let stopwords = a.stopwords.as_deref().map(resolve_input);
    let mut rec = Recorder::in_dir("heuristics", argv, a.out_dir.as_deref());
    rec.input(&data)?;
    for p in lexicon.iter().chain(&stopwords) {
        rec.input(p)?;
    }
    rec.start()?;
    let dataset = load_dataset(&data)?;
    let mut h = Heuristics::default();
    if let Some(p) = &lexicon {
        h.lexicon = DirectionLexicon::parse(&read_to_string(p)?).map_err(|e| CliError::data(p, e))?;
    }
    if let Some(p) = &stopwords {
        h.stopwords = parse_word_list(&read_to_string(p)?);
    }
    let records = evaluate_splits(&h, &dataset, &[a.split], &options(&a.flags))?;
    let outputs = emit_records(&records, a.out_dir.as_deref())?;
    rec.finish(&outputs)
}

/// Record the experiment inputs and resolve the configuration.
fn experiment_inputs(rec: &mut Recorder, e: &ExperimentArgs) -> Result<(Dataset, ExperimentConfig)> {
    let data = resolve_input(&e.data);
    rec.input(&data)?;
    if let Some(c) = &e.config {
        let c = resolve_input(c);
        rec.manifest.config_path = Some(c.display().to_string());
        rec.input(&c)?;
    }
    let cfg = ExperimentArgs { config: e.config.as_deref().map(resolve_input), ..e.clone() }.resolve()?;
    if let Some(emb) = &cfg.embeddings {
        rec.input(&resolve_input(emb))?;
    }
    rec.manifest.seeds.push(cfg.train.seed);
    cfg.validate()?;
    rec.start()?;
    Ok((load_dataset(&data)?, cfg))
}

fn epochs_jsonl(outcome: &TrainOutcome) -> String {
    #[derive(Serialize)]
    struct Line<'a, T> {
        phase: &'a str,
        #[serde(flatten)]
        record: T,
    }
    let mut out = String::new();
    for (phase, summary) in [("pretrain", &outcome.pretrain), ("train", &outcome.train)] {
        for r in summary.iter().flat_map(|s| &s.epochs) {
            out += &serde_json::to_string(&Line { phase, record: r }).expect("epoch serializes");
            out.push('\n');
        }
    }
    out
}

/// Write the configuration, model, logs and dev/test reports of a run.
fn write_run(dir: &Path, cfg: &ExperimentConfig, outcome: &TrainOutcome, dataset: &Dataset) -> Result<Vec<PathBuf>> {
    #[derive(Serialize)]
    struct Summary<'a> {
        system: String,
        vocabulary: usize,
        pretrain: Option<&'a RunSummary>,
        train: Option<&'a RunSummary>,
    }
    let config_path = dir.join("config.toml");
    write_bytes(&config_path, cfg.to_toml())?;
    let mut outputs = vec![config_path];
    outputs.extend(outcome.system.save(&outcome.vocab, dir)?);
    let epochs = dir.join("epochs.jsonl");
    write_bytes(&epochs, epochs_jsonl(outcome))?;
    let summary = dir.join("summary.json");
    let s = Summary {
        system: outcome.system.name(),
        vocabulary: outcome.vocab.len(),
        pretrain: outcome.pretrain.as_ref(),
        train: outcome.train.as_ref(),
    };
    write_bytes(&summary, to_json(&s))?;
    outputs.extend([epochs, summary]);
    let evaluator = outcome.system.evaluator(&outcome.vocab);
    let records = evaluate_splits(evaluator.as_ref(), dataset, &[Split::Dev, Split::Test], &EvalOptions::default())?;
    outputs.extend(emit_records(&records, Some(dir))?);
    Ok(outputs)
}

fn cmd_train(a: TrainArgs, argv: &[String]) -> Result<()> {
    let mut rec = Recorder::in_dir("train", argv, Some(&a.run_dir));
    let (dataset, mut cfg) = experiment_inputs(&mut rec, &a.experiment)?;
    if let Some(flag) = a.pretrain {
        cfg.pretrain = flag.objective();
    }
    if cfg.pretrain.is_some() && !matches!(a.variant, SystemKind::Neural(v) if v.attention().is_some()) {
        return Err(CliError::Usage(format!("{} has no attention to pretrain", a.variant)));
    }
    let outcome = train_system(&dataset, &cfg, a.variant, false)?;
    let outputs = write_run(&a.run_dir, &cfg, &outcome, &dataset)?;
    rec.finish(&outputs)
}

fn cmd_pretrain(a: PretrainArgs, argv: &[String]) -> Result<()> {
    let mut rec = Recorder::in_dir("pretrain-attn", argv, Some(&a.run_dir));
    let (dataset, mut cfg) = experiment_inputs(&mut rec, &a.experiment)?;
    if !matches!(a.variant, SystemKind::Neural(v) if v.attention().is_some()) {
        return Err(CliError::Usage(format!("{} has no attention to pretrain", a.variant)));
    }
    cfg.pretrain = a.objective.objective();
    if cfg.pretrain.is_none() {
        return Err(CliError::Usage("pretrain-attn needs an objective other than none".into()));
    }
    let outcome = train_system(&dataset, &cfg, a.variant, true)?;
    if let Some(s) = &outcome.pretrain {
        eprintln!("best dev {:?} {:.4} at epoch {}", cfg.train.criterion, s.best_score, s.best_epoch);
    }
    let outputs = write_run(&a.run_dir, &cfg, &outcome, &dataset)?;
    rec.finish(&outputs)
}

fn cmd_eval(a: EvalArgs, argv: &[String]) -> Result<()> {
    let data = resolve_input(&a.data);
    let mut rec = Recorder::in_dir("eval", argv, a.out_dir.as_deref());
    rec.input(&data)?;
    let run_dir = match a.model.as_str() {
        "majority" | "heuristics" => None,
        dir => Some(resolve_input(Path::new(dir))),
    };
    if let Some(dir) = &run_dir {
        rec.input(dir)?;
    }
    rec.start()?;
    let dataset = load_dataset(&data)?;
    let opts = options(&a.flags);
    let records = match (&run_dir, a.model.as_str()) {
        (Some(dir), _) => {
            let (system, vocab) = TrainedSystem::load(dir)?;
            let evaluator = system.evaluator(&vocab);
            evaluate_splits(evaluator.as_ref(), &dataset, &[a.split], &opts)?
        }
        (None, "majority") => {
            let m = Majority::fit(&dataset, Split::Train)?;
            evaluate_splits(&m as &dyn EvidenceSystem, &dataset, &[a.split], &opts)?
        }
        (None, _) => evaluate_splits(&Heuristics::default(), &dataset, &[a.split], &opts)?,
    };
    let outputs = emit_records(&records, a.out_dir.as_deref())?;
    rec.finish(&outputs)
}

fn cmd_agreement(a: AgreementArgs, argv: &[String]) -> Result<()> {
    let data = resolve_input(&a.data);
    let mut rec = Recorder::in_dir("agreement", argv, a.out_dir.as_deref());
    rec.input(&data)?;
    rec.start()?;
    let mut dataset = load_dataset(&data)?;
    if let Some(split) = a.split {
        let prompts: Vec<_> = dataset.prompts_in(split).cloned().collect();
        let ids: std::collections::BTreeSet<u64> = prompts.iter().map(|p| p.prompt_id).collect();
        let records = dataset.records.iter().filter(|r| ids.contains(&r.prompt_id)).cloned().collect();
        dataset = Dataset::new(dataset.articles, prompts, records)?;
    }
    let alpha = dataset_agreement(&dataset)?;
    println!("krippendorff alpha: {alpha:.4} over {} prompts", dataset.prompts.len());
    let mut outputs = Vec::new();
    if let Some(dir) = &a.out_dir {
        let p = dir.join("agreement.json");
        write_bytes(&p, to_json(&serde_json::json!({ "alpha": alpha, "prompts": dataset.prompts.len() })))?;
        outputs.push(p);
    }
    rec.finish(&outputs)
}

#[derive(Serialize)]
struct GradLine {
    target: String,
    seeds: u64,
    max_relative_error: f64,
    worst_seed: u64,
    passed: bool,
}

fn cmd_gradcheck(a: GradcheckArgs, argv: &[String]) -> Result<()> {
    let mut rec = Recorder::in_dir("gradcheck", argv, a.out_dir.as_deref());
    rec.manifest.seeds = (0..a.seeds).collect();
    rec.start()?;
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be positive".into()));
    }
    let mut lines = Vec::new();
    for target in GradTarget::all() {
        let mut worst = (0.0f64, 0u64);
        let mut passed = true;
        for seed in 0..a.seeds {
            let r = check_gradients(target, seed)?;
            passed &= r.passed();
            if r.max_relative_error > worst.0 || r.max_relative_error.is_nan() {
                worst = (r.max_relative_error, seed);
            }
        }
        let line = GradLine {
            target: target.name(),
            seeds: a.seeds,
            max_relative_error: worst.0,
            worst_seed: worst.1,
            passed,
        };
        println!(
            "{} {:<28} max rel err {:.3e} (seed {})",
            if passed { "PASS" } else { "FAIL" },
            line.target,
            line.max_relative_error,
            line.worst_seed
        );
        lines.push(line);
    }
    let mut outputs = Vec::new();
    if let Some(dir) = &a.out_dir {
        let p = dir.join("gradcheck.json");
        write_bytes(&p, to_json(&lines))?;
        outputs.push(p);
    }
    rec.finish(&outputs)?;
    let failed: Vec<&str> = lines.iter().filter(|l| !l.passed).map(|l| l.target.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("gradient check failed for {}", failed.join(", "))))
    }
}

fn cmd_multi_run(a: MultiRunArgs, argv: &[String]) -> Result<()> {
    let seeds: Vec<u64> = match a.runs {
        Some(n) => (0..n).collect(),
        None => a.seeds.clone(),
    };
    if seeds.is_empty() {
        return Err(CliError::Usage("give --seeds or --runs".into()));
    }
    let mut rec = Recorder::in_dir("multi-run", argv, Some(&a.run_dir));
    let (dataset, mut cfg) = experiment_inputs(&mut rec, &a.experiment)?;
    rec.manifest.seeds = seeds.clone();
    rec.start()?;
    if let Some(flag) = a.pretrain {
        cfg.pretrain = flag.objective();
    }
    let mut outputs = Vec::new();
    let mut reports = Vec::new();
    for &seed in &seeds {
        let mut c = cfg.clone();
        c.set_seed(seed);
        log::info!("seed {seed}");
        let outcome = train_system(&dataset, &c, a.variant, false)?;
        let evaluator = outcome.system.evaluator(&outcome.vocab);
        let records = evaluate_splits(evaluator.as_ref(), &dataset, &[a.split], &EvalOptions::default())?;
        let Some(record) = records.into_iter().next() else {
            return Err(CliError::Data(format!("{} split has no labelled prompts", a.split.name())));
        };
        let p = a.run_dir.join(format!("seed-{seed}.jsonl"));
        write_bytes(&p, records_jsonl(std::slice::from_ref(&record)))?;
        outputs.push(p);
        reports.push(record.report);
    }
    let agg = aggregate(&seeds, &reports)?;
    let text = format!("{} on {} over {} runs\n{}", a.variant, a.split.name(), seeds.len(), agg.render());
    print!("{text}");
    let txt = a.run_dir.join("aggregate.txt");
    let json = a.run_dir.join("aggregate.json");
    write_bytes(&txt, &text)?;
    write_bytes(&json, to_json(&agg))?;
    outputs.extend([txt, json]);
    rec.finish(&outputs)
}

/// Re-run a recorded command from its working directory and compare the
/// new output hashes with the recorded ones.
fn cmd_replay(a: ReplayArgs) -> Result<()> {
    let manifest = RunManifest::load(&a.manifest)?;
    if manifest.command == "replay" || manifest.argv.len() < 2 {
        return Err(CliError::data(&a.manifest, "manifest holds no replayable command"));
    }
    let exe = std::env::current_exe().map_err(|e| CliError::io(Path::new("evinf"), e))?;
    let mut cmd = std::process::Command::new(&exe);
    cmd.args(&manifest.argv[1..]).current_dir(&manifest.cwd);
    match &manifest.data_root {
        Some(root) => cmd.env(crate::DATA_ROOT_ENV, root),
        None => cmd.env_remove(crate::DATA_ROOT_ENV),
    };
    eprintln!("replaying: {}", manifest.argv.join(" "));
    let status = cmd.status().map_err(|e| CliError::io(&exe, e))?;
    if !status.success() {
        return Err(CliError::Data(format!("replayed command exited with {status}")));
    }
    let Some(produced) = &manifest.produced else {
        eprintln!("no recorded output hashes to compare");
        return Ok(());
    };
    let mut differing = Vec::new();
    for art in produced {
        let path = Path::new(&manifest.cwd).join(&art.path);
        let now = hash_path(&path)?;
        let same = now == art.sha256;
        println!("{} {}", if same { "same" } else { "DIFF" }, art.path);
        if !same {
            differing.push(art.path.clone());
        }
    }
    let _ = std::io::stdout().flush();
    if differing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Data(format!("replay produced different outputs: {}", differing.join(", "))))
    }
}
