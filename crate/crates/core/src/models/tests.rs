use super::selfcheck::{check_gradients, check_model_on, random_input, small_model, GradTarget, Objective};
use super::*;
use crate::numerics::{cross_entropy, Tensor2};
use crate::preprocess::SentenceSplitter;

/// Small model with frozen embeddings.
fn small(variant: Variant, seed: u64) -> Model {
    let mut m = small_model(variant, seed);
    m.embeddings.table.trainable = false;
    m
}

#[test]
fn every_target_passes_grad_check_over_seeds() {
    for target in GradTarget::all() {
        for seed in 0..20 {
            let report = check_gradients(target, seed).unwrap();
            assert!(report.passed(), "{} seed {seed}: {report:?}", target.name());
        }
    }
}

#[test]
fn ablated_inputs_pass_grad_check() {
    for variant in [Variant::CondAttn, Variant::Vanilla] {
        let model = small_model(variant, 3);
        let mut input = random_input(3, 4);
        input.ablate_prompt = true;
        let report = check_model_on(&model, &input, &Objective::new(3, 4, 2)).unwrap();
        assert!(report.passed(), "{variant}: {report:?}");
    }
}


#[test]
fn prompt_encoding_is_a_mean() {
    let m = small(Variant::CondAttn, 1);
    assert_eq!(m.encode_field(&[5]), m.embeddings.lookup(5));
    assert_eq!(m.encode_field(&[5, 5]), m.encode_field(&[5]));
    assert_eq!(m.encode_field(&[]), vec![0.0; 3]);
    assert_eq!(m.encode_field(&[OOV_ID]), vec![0.0; 3]);
    let both = m.encode_field(&[4, 6]);
    for k in 0..3 {
        let mean = (m.embeddings.lookup(4)[k] + m.embeddings.lookup(6)[k]) / 2.0;
        assert!((both[k] - mean).abs() < 1e-15);
    }
}

#[test]
fn article_encoding_properties() {
    let m = small(Variant::Attn, 2);
    let h = m.encode_article(&[3]).unwrap();
    assert_eq!(h.len(), 1);
    let ids = [3, 4, 5, 6, 7];
    let full = m.encode_article(&ids).unwrap();
    for k in 1..=ids.len() {
        assert_eq!(m.encode_article(&ids[..k]).unwrap(), full[..k]);
    }
    assert!(m.encode_article(&[]).is_err());
    let mut z = m.clone();
    z.gru = Gru::zeros(3, 4);
    assert!(z.encode_article(&ids).unwrap().iter().flatten().all(|&v| v == 0.0));
}

fn zero(p: &mut Parameter) {
    p.value.fill(0.0);
}

#[test]
fn zero_scorers_attend_uniformly() {
    for variant in [Variant::Attn, Variant::CondAttn, Variant::TokenwiseAttn, Variant::CondTokenwiseAttn] {
        let mut m = small(variant, 4);
        for p in m.scorer.as_mut().unwrap().parameters_mut() {
            zero(p);
        }
        let t = m.forward(&random_input(4, 6)).unwrap();
        for a in t.alpha.unwrap() {
            assert!((a - 1.0 / 6.0).abs() < 1e-12);
        }
        if let Some(p) = t.token_probs {
            assert!(p.iter().all(|&v| v == 0.5));
        }
    }
}

#[test]
fn attention_sums_to_one_and_ignores_shifts() {
    let m = small(Variant::CondAttn, 5);
    let input = random_input(5, 7);
    let t = m.forward(&input).unwrap();
    let alpha = t.alpha.unwrap();
    assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    let mut shifted = m.clone();
    if let Some(Scorer::Conditional { bv, .. }) = &mut shifted.scorer {
        bv.value.values_mut()[0] += 3.7;
    }
    let alpha2 = shifted.forward(&input).unwrap().alpha.unwrap();
    for (a, b) in alpha.iter().zip(alpha2) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn plain_attention_ignores_the_prompt() {
    let m = small(Variant::Attn, 6);
    let a = random_input(6, 6);
    let mut b = a.clone();
    b.intervention = vec![9, 10];
    b.outcome = vec![];
    assert_eq!(m.forward(&a).unwrap().alpha, m.forward(&b).unwrap().alpha);
}

#[test]
fn conditional_attention_without_prompt_weights_is_prompt_free() {
    let mut m = small(Variant::CondAttn, 7);
    if let Some(Scorer::Conditional { wp, .. }) = &mut m.scorer {
        zero(wp);
    }
    let a = random_input(7, 6);
    let mut b = a.clone();
    b.comparator = vec![2, 3, 4];
    assert_eq!(m.forward(&a).unwrap().alpha, m.forward(&b).unwrap().alpha);
}

#[test]
fn duplicated_states_keep_weight_ratios() {
    let m = small(Variant::Attn, 8);
    let states = m.encode_article(&[2, 3, 4]).unwrap();
    let scorer = m.scorer.as_ref().unwrap();
    let a = softmax(&scorer.forward(&states, &[]).scores);
    let dup = vec![states[0].clone(), states[1].clone(), states[1].clone(), states[2].clone()];
    let b = softmax(&scorer.forward(&dup, &[]).scores);
    assert!((b[1] / b[0] - a[1] / a[0]).abs() < 1e-12);
    assert!((b[1] - b[2]).abs() < 1e-15);
    assert!((b[3] / b[0] - a[2] / a[0]).abs() < 1e-12);
}

#[test]
fn tokenwise_scores_match_hand_computation() {
    let states = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![-1.0, 2.0]];
    let scorer = Scorer::Plain {
        w: Parameter::new(Tensor2::from_vec(1, 2, vec![0.5, -1.0]).unwrap()),
        b: Parameter::new(Tensor2::from_vec(1, 1, vec![0.25]).unwrap()),
    };
    let s = scorer.forward(&states, &[]).scores;
    let expected = [0.75, -0.75, -0.25, -2.25];
    for (a, b) in s.iter().zip(expected) {
        assert!((a - b).abs() < 1e-15);
    }
    let p: Vec<f64> = s.iter().map(|&v| sigmoid(v)).collect();
    assert!((p[0] - 1.0 / (1.0 + (-0.75f64).exp())).abs() < 1e-15);
    assert!(p.windows(2).all(|w| w[0] > 0.0 && w[0] < 1.0));
    assert!(p[0] > p[2] && p[2] > p[1] && p[1] > p[3]);
}

#[test]
fn context_vector_cases() {
    let h = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 9.0]];
    assert_eq!(context_vector(&h, &[0.0, 1.0, 0.0]), vec![3.0, 4.0]);
    let u = context_vector(&h, &[1.0 / 3.0; 3]);
    assert!((u[0] - 3.0).abs() < 1e-12 && (u[1] - 5.0).abs() < 1e-12);
    let a = context_vector(&h, &[0.2, 0.3, 0.5]);
    let b = context_vector(&h, &[0.6, 0.1, 0.3]);
    let mix = context_vector(&h, &[0.4, 0.2, 0.4]);
    for k in 0..2 {
        assert!((mix[k] - 0.5 * (a[k] + b[k])).abs() < 1e-12);
    }
}

#[test]
fn zero_classifier_is_uniform() {
    for variant in Variant::ALL {
        let mut m = small(variant, 9);
        for p in m.output.parameters_mut() {
            zero(p);
        }
        let t = m.forward(&random_input(9, 5)).unwrap();
        assert!(t.logits.iter().all(|&l| l == 0.0));
        assert!(t.probs.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
    }
}

#[test]
fn vanilla_has_no_attention() {
    let m = small(Variant::Vanilla, 1);
    assert!(m.scorer.is_none());
    assert!(m.forward(&random_input(1, 4)).unwrap().alpha.is_none());
}

#[test]
fn tagger_behaviour() {
    let mut m = small(Variant::PipelineNeural, 10);
    let input = random_input(10, 6);
    let t = m.forward(&input).unwrap();
    let mut other = input.clone();
    other.intervention = vec![7];
    assert_eq!(t.sentence_probs, m.forward(&other).unwrap().sentence_probs);
    for p in m.tagger.as_mut().unwrap().parameters_mut() {
        zero(p);
    }
    let t = m.forward(&input).unwrap();
    assert!(t.sentence_probs.unwrap().iter().all(|&p| p == 0.5));
    // Nothing above 0.5, so the first sentence is the fallback.
    assert_eq!(t.selected, vec![0]);
    let mut empty = input.clone();
    empty.sentences.push(6..6);
    assert_eq!(m.forward(&empty).unwrap().sentence_probs.unwrap().len(), 3);
}

#[test]
fn both_ablations_give_constant_predictions() {
    for variant in Variant::ALL {
        let m = small(variant, 11);
        let mut outs = Vec::new();
        for s in 0..4 {
            let mut input = random_input(100 + s, 3 + s as usize);
            input.ablate_prompt = true;
            input.ablate_article = true;
            outs.push(m.forward(&input).unwrap().logits);
        }
        assert!(outs.windows(2).all(|w| w[0] == w[1]), "{variant}");
    }
}

#[test]
fn probabilities_sum_to_one_for_all_variants() {
    for variant in Variant::ALL {
        let p = small(variant, 12).forward(&random_input(12, 8)).unwrap().probs;
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn checkpoints_round_trip() {
    for variant in Variant::ALL {
        let m = small(variant, 13);
        let bytes = m.to_bytes(42);
        assert_eq!(bytes, m.to_bytes(42));
        let back = Model::from_bytes(&bytes, Some(42)).unwrap();
        assert_eq!(back.parameters(), m.parameters());
        assert_eq!(back.config, m.config);
        assert!(Model::from_bytes(&bytes, Some(7)).is_err());
        assert!(Model::from_bytes(&bytes[..bytes.len() - 1], None).is_err());
        assert!(Model::from_bytes(b"garbage", None).is_err());
    }
}

#[test]
fn inputs_truncate_and_restrict() {
    let doc = ProcessedDocument::from_text("One two three. Four five six. Seven eight.", &SentenceSplitter::default());
    let vocab = Vocabulary::build(doc.surfaces(), 100).unwrap();
    let prompt = IcoPrompt {
        prompt_id: 1,
        article_id: "a".into(),
        intervention: "two".into(),
        comparator: "nine".into(),
        outcome: "".into(),
    };
    let input = ModelInput::new(&doc, &prompt, &vocab, 5);
    assert_eq!(input.tokens.len(), 5);
    assert_eq!(input.truncated, doc.tokens.len() - 5);
    assert_eq!(input.sentences, vec![0..4, 4..5]);
    assert_eq!(input.comparator, vec![OOV_ID]);
    let mask = [false, true, false, false, true];
    let r = input.restrict(&mask);
    assert_eq!(r.tokens, vec![input.tokens[1], input.tokens[4]]);
    assert_eq!(r.sentences, vec![0..1, 1..2]);
    let full_mask = vec![true; doc.tokens.len()];
    assert_eq!(truncate_mask(&full_mask, &input).len(), 5);
}

#[test]
fn variant_names_round_trip() {
    for v in Variant::ALL {
        assert_eq!(v.name().parse::<Variant>().unwrap(), v);
    }
    assert!("nope".parse::<Variant>().is_err());
}

#[test]
fn frozen_embeddings_are_untouched_by_adam() {
    let mut m = small(Variant::CondAttn, 14);
    let before = m.embeddings.table.value.clone();
    let input = random_input(14, 5);
    let mut adam = crate::numerics::Adam::new(Default::default());
    for _ in 0..3 {
        let t = m.forward(&input).unwrap();
        m.backward(&t, &OutputGrads { logits: Some(cross_entropy(&t.logits, 0).1), ..Default::default() });
        adam.step(&mut m.parameters_mut(ParamGroup::All));
    }
    assert_eq!(m.embeddings.table.value, before);
}
