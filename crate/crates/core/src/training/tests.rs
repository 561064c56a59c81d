use super::*;
use crate::corpus::{generate_synthetic, Dataset, SynthConfig};
use crate::models::{ModelConfig, Variant};
use crate::preprocess::Vocabulary;

fn corpus(articles: usize) -> Dataset {
    generate_synthetic(&SynthConfig { articles, seed: 5, ..SynthConfig::default() }).unwrap().dataset
}

struct Setup {
    vocab: Vocabulary,
    train: Vec<Example>,
    dev: Vec<Example>,
}

fn setup(d: &Dataset) -> Setup {
    let vocab = build_vocabulary(d, 5000).unwrap();
    let split = nested_split(d, 0.1, 1).unwrap();
    let train = build_examples(d, split.train_prompts(d), &vocab, 4096);
    let dev = build_examples(d, split.dev_prompts(d), &vocab, 4096);
    Setup { vocab, train, dev }
}

fn small_model(variant: Variant, vocab: &Vocabulary, seed: u64) -> Model {
    let cfg = ModelConfig { variant, embedding_dim: 8, hidden: 8, classifier_hidden: 8, attention_hidden: 8, seed, ..Default::default() };
    Model::new(cfg, vocab.len()).unwrap()
}

#[test]
fn targets() {
    let mask = [true, false, true, true, false, true];
    let u = make_targets(&mask, TargetMode::UniformOverEvidence);
    assert_eq!(u.values, vec![0.25, 0.0, 0.25, 0.25, 0.0, 0.25]);
    let b = make_targets(&mask, TargetMode::BinaryOnes);
    assert_eq!(b.values, vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
    assert!(!b.degenerate);
    let e = make_targets(&[false; 3], TargetMode::UniformOverEvidence);
    assert_eq!(e.values, vec![0.0; 3]);
    assert!(e.degenerate);
}

#[test]
fn balanced_sampler_is_balanced() {
    let mut rng = seeded_rng(1);
    for n in 1..40 {
        let mask: Vec<bool> = (0..n).map(|i| i % 7 == 3).collect();
        let s = balanced_sample(&mask, &mut rng);
        let pos = s.iter().filter(|&&i| mask[i]).count();
        let neg = s.len() - pos;
        assert_eq!(pos, mask.iter().filter(|&&b| b).count());
        assert_eq!(neg, pos.min(n - pos));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn early_stopping_with_patience_one() {
    let mut s = EarlyStopping::new(1);
    s.observe(1, 0.5);
    assert!(!s.should_stop());
    s.observe(2, 0.4);
    assert!(s.should_stop());
    assert_eq!(s.best_epoch, 1);
}

#[test]
fn criteria_on_simple_maps() {
    let one_hot = vec![vec![0.0, 1.0, 0.0, 0.0]];
    let mask = vec![vec![false, true, false, false]];
    assert_eq!(selection_criterion(&one_hot, &mask, SelectionCriterion::Entropy), Some(0.0));
    assert_eq!(selection_criterion(&one_hot, &mask, SelectionCriterion::EvidenceMass), Some(1.0));
    assert_eq!(selection_criterion(&one_hot, &mask, SelectionCriterion::TokenAuc), Some(1.0));
    let uniform = vec![vec![0.25; 4]];
    let half = vec![vec![true, true, false, false]];
    assert_eq!(selection_criterion(&uniform, &half, SelectionCriterion::EvidenceMass), Some(0.5));
    assert_eq!(selection_criterion(&uniform, &half, SelectionCriterion::TokenAuc), Some(0.5));
    assert!(SelectionCriterion::Entropy.better(0.1, 0.2));
    assert!(SelectionCriterion::TokenAuc.better(0.3, 0.2));
}

#[test]
fn criteria_match_direct_recomputation() {
    let mut rng = seeded_rng(9);
    for _ in 0..20 {
        let n = rng.gen_range(2..12);
        let raw: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.gen_range(0.01..1.0)).collect()).collect();
        let alphas: Vec<Vec<f64>> = raw.iter().map(|r| r.iter().map(|v| v / r.iter().sum::<f64>()).collect()).collect();
        let masks: Vec<Vec<bool>> = (0..3).map(|k| (0..n).map(|i| (i + k) % 3 == 0).collect()).collect();
        let direct_mass = alphas
            .iter()
            .zip(&masks)
            .map(|(a, m)| a.iter().zip(m).filter(|p| *p.1).map(|p| p.0).sum::<f64>())
            .sum::<f64>()
            / 3.0;
        let got = selection_criterion(&alphas, &masks, SelectionCriterion::EvidenceMass).unwrap();
        assert!((got - direct_mass).abs() < 1e-12);
        let direct_entropy =
            alphas.iter().map(|a| -a.iter().map(|p| p * p.ln()).sum::<f64>()).sum::<f64>() / 3.0;
        let got = selection_criterion(&alphas, &masks, SelectionCriterion::Entropy).unwrap();
        assert!((got - direct_entropy).abs() < 1e-12);
    }
}

#[test]
fn nested_split_is_disjoint_and_seeded() {
    let d = corpus(30);
    let a = nested_split(&d, 0.1, 4).unwrap();
    assert_eq!(a, nested_split(&d, 0.1, 4).unwrap());
    assert!(a.train.is_disjoint(&a.dev));
    let train_articles = d.articles.values().filter(|x| x.split == crate::corpus::Split::Train).count();
    assert_eq!(a.train.len() + a.dev.len(), train_articles);
    assert!(!a.dev.is_empty());
}

#[test]
fn training_is_deterministic_and_restores_best() {
    let d = corpus(20);
    let s = setup(&d);
    let cfg = TrainConfig { max_epochs: 3, patience: 3, seed: 2, ..TrainConfig::default() };
    let mut a = small_model(Variant::CondAttn, &s.vocab, 3);
    let mut b = a.clone();
    let ra = train(&mut a, &s.train, &s.dev, &cfg).unwrap();
    let rb = train(&mut b, &s.train, &s.dev, &cfg).unwrap();
    assert_eq!(a.to_bytes(1), b.to_bytes(1));
    assert_eq!(ra, rb);
    let best = ra.epochs.iter().filter_map(|e| e.dev_f1).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(ra.best_score, best);
    let (report, _) = evaluate_examples(&a, &s.dev).unwrap();
    assert_eq!(report.f1, best);
}

#[test]
fn pretraining_moves_only_encoder_and_attention() {
    let d = corpus(12);
    let s = setup(&d);
    for objective in [PretrainObjective::TokenwiseBce, PretrainObjective::BalancedTokenwiseBce, PretrainObjective::EvidenceMass] {
        let cfg = TrainConfig { pretrain_epochs: 2, patience: 2, objective, ..TrainConfig::default() };
        let mut m = small_model(Variant::CondTokenwiseAttn, &s.vocab, 4);
        let before = m.clone();
        pretrain_attention(&mut m, &s.train, &s.dev, &cfg).unwrap();
        assert_eq!(m.hidden, before.hidden);
        assert_eq!(m.output, before.output);
        assert_eq!(m.embeddings, before.embeddings);
    }
}

#[test]
fn pretraining_requires_attention_and_evidence() {
    let d = corpus(12);
    let mut s = setup(&d);
    let cfg = TrainConfig::default();
    let mut vanilla = small_model(Variant::Vanilla, &s.vocab, 1);
    assert!(pretrain_attention(&mut vanilla, &s.train, &s.dev, &cfg).is_err());
    s.train.iter_mut().for_each(|e| e.evidence = None);
    let mut m = small_model(Variant::CondAttn, &s.vocab, 1);
    assert!(matches!(pretrain_attention(&mut m, &s.train, &s.dev, &cfg), Err(Error::MissingData(_))));
}

#[test]
fn one_mass_step_raises_evidence_mass() {
    let d = corpus(6);
    let s = setup(&d);
    let mut m = small_model(Variant::CondAttn, &s.vocab, 8);
    let ex = s.train.iter().find(|e| e.evidence.is_some()).unwrap();
    let mask = ex.evidence.clone().unwrap();
    let before = evidence_mass(m.forward(&ex.input).unwrap().alpha.as_ref().unwrap(), &mask);
    let trace = m.forward(&ex.input).unwrap();
    let g: Vec<f64> = mask.iter().map(|&b| if b { -1.0 } else { 0.0 }).collect();
    m.zero_grad();
    m.backward(&trace, &OutputGrads { alpha: Some(g), ..Default::default() });
    let mut adam = Adam::new(AdamConfig { lr: 0.01, ..AdamConfig::default() });
    adam.step(&mut m.parameters_mut(ParamGroup::EncoderAttention));
    let after = evidence_mass(m.forward(&ex.input).unwrap().alpha.as_ref().unwrap(), &mask);
    assert!(after > before, "{before} -> {after}");
}

#[test]
fn aggregation() {
    let r = |f1: f64| MetricsReport { f1, precision: f1, recall: f1, ..Default::default() };
    let one = aggregate(&[1], &[r(0.4)]).unwrap();
    assert_eq!((one.f1.mean, one.f1.min, one.f1.max), (0.4, 0.4, 0.4));
    let a = aggregate(&[1, 2, 3], &[r(0.2), r(0.5), r(0.8)]).unwrap();
    let b = aggregate(&[3, 1, 2], &[r(0.8), r(0.2), r(0.5)]).unwrap();
    assert_eq!(a.f1, b.f1);
    assert!((a.f1.mean - 0.5).abs() < 1e-12);
    assert_eq!(a.render().lines().count(), 3);
    assert!(aggregate(&[], &[]).is_err());
    let (reports, agg) = multi_run(&[5, 6], |s| Ok(r(s as f64 / 10.0))).unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(agg.f1.max, 0.6);
}

#[test]
fn config_validation() {
    assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
    assert!(TrainConfig { patience: 60, ..Default::default() }.validate().is_err());
    assert!(TrainConfig::default().validate().is_ok());
    assert_eq!(majority_label([Label::NoSigDiff, Label::SigIncreased, Label::NoSigDiff]), Some(Label::NoSigDiff));
}
