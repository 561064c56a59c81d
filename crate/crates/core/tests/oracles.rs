//! Brute-force oracles for alignment and agreement.

use evinf_core::corpus::{krippendorff_alpha, levenshtein, locate_rationale, Alignment, AlignmentConfig};
use evinf_core::numerics::seeded_rng;
use rand::Rng;

const ALPHABET: &[u8] = b"abcdefghij klmnop";

fn random_text<R: Rng>(rng: &mut R, len: usize) -> String {
    (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char).collect()
}

/// Best window over every (offset, length) pair in the length band, ranked
/// by similarity, then earliest start, then length closest to the
/// rationale, then shorter.
fn brute_force(text: &str, rationale: &str, tolerance: f64) -> (usize, usize, f64) {
    let n = rationale.len();
    let lo = ((n as f64 * (1.0 - tolerance)).floor() as usize).max(1);
    let hi = (n as f64 * (1.0 + tolerance)).ceil() as usize;
    let mut best: Option<(usize, usize, usize, usize)> = None;
    for start in 0..text.len() {
        for len in lo..=hi.min(text.len() - start) {
            let d = levenshtein(&text[start..start + len], rationale);
            let denom = len.max(n);
            let better = match best {
                None => true,
                Some((bs, bl, bd, bden)) => {
                    let (x, y) = (d * bden, bd * denom);
                    x < y
                        || (x == y
                            && (start, len.abs_diff(n), len) < (bs, bl.abs_diff(n), bl))
                }
            };
            if better {
                best = Some((start, len, d, denom));
            }
        }
    }
    let (s, l, d, den) = best.unwrap();
    (s, s + l, 1.0 - d as f64 / den as f64)
}

#[test]
fn substituted_rationale_matches_exhaustive_window_search() {
    let mut rng = seeded_rng(11);
    let cfg = AlignmentConfig::default();
    for _ in 0..60 {
        let len = rng.gen_range(80..200);
        let text = random_text(&mut rng, len);
        let start = rng.gen_range(0..len - 40);
        let mut target: Vec<u8> = text.as_bytes()[start..start + 40].to_vec();
        let pos = rng.gen_range(0..40);
        target[pos] = if target[pos] == b'z' { b'y' } else { b'z' };
        let rationale = String::from_utf8(target).unwrap();
        let (bs, be, score) = brute_force(&text, &rationale, cfg.length_tolerance);
        match locate_rationale(&text, &rationale, &cfg).unwrap() {
            Alignment::Found { start: s, end: e, score: got } => {
                assert_eq!((s, e), (bs, be));
                assert!((got - score).abs() < 1e-12);
            }
            other => panic!("expected a window, got {other:?}"),
        }
    }
}

#[test]
fn exact_substrings_recover_exact_offsets() {
    let mut rng = seeded_rng(12);
    for _ in 0..200 {
        let text = random_text(&mut rng, 150);
        let start = rng.gen_range(0..120);
        let end = start + rng.gen_range(5..30);
        let got = locate_rationale(&text, &text[start..end], &AlignmentConfig::default()).unwrap();
        match got {
            Alignment::Found { start: s, end: e, score } => {
                assert_eq!(&text[s..e], &text[start..end]);
                assert_eq!(score, 1.0);
            }
            other => panic!("{other:?}"),
        }
    }
}

/// Pairwise definition: D_o averages within-unit disagreement over pairable
/// values, D_e over all pairs of pairable values.
fn pairwise_alpha(units: &[Vec<u8>]) -> Option<f64> {
    let pairable: Vec<&Vec<u8>> = units.iter().filter(|u| u.len() >= 2).collect();
    let values: Vec<u8> = pairable.iter().flat_map(|u| u.iter().copied()).collect();
    let n = values.len() as f64;
    let mut d_o = 0.0;
    for u in &pairable {
        let mut disagree = 0.0;
        for (i, a) in u.iter().enumerate() {
            for (j, b) in u.iter().enumerate() {
                if i != j && a != b {
                    disagree += 1.0;
                }
            }
        }
        d_o += disagree / (u.len() as f64 - 1.0);
    }
    d_o /= n;
    let mut d_e = 0.0;
    for (i, a) in values.iter().enumerate() {
        for (j, b) in values.iter().enumerate() {
            if i != j && a != b {
                d_e += 1.0;
            }
        }
    }
    d_e /= n * (n - 1.0);
    (d_e > 0.0).then(|| 1.0 - d_o / d_e)
}

#[test]
fn alpha_matches_pairwise_oracle() {
    let mut rng = seeded_rng(13);
    let mut checked = 0;
    while checked < 50 {
        let n_units = rng.gen_range(2..8);
        let units: Vec<Vec<u8>> =
            (0..n_units).map(|_| (0..rng.gen_range(0..5)).map(|_| rng.gen_range(0..3)).collect()).collect();
        let Some(want) = pairwise_alpha(&units) else { continue };
        let got = krippendorff_alpha(&units).unwrap();
        assert!((got - want).abs() < 1e-9, "{units:?}: {got} vs {want}");
        checked += 1;
    }
}

#[test]
fn alpha_of_hand_example() {
    let units = vec![vec!['a', 'a'], vec!['a', 'b'], vec!['b', 'b'], vec!['b', 'b']];
    let want = pairwise_alpha(&units.iter().map(|u| u.iter().map(|&c| c as u8).collect()).collect::<Vec<_>>()).unwrap();
    assert!((krippendorff_alpha(&units).unwrap() - want).abs() < 1e-9);
    // 8 values: a = 3, b = 5. D_o = 2/8, D_e = 30/56.
    assert!((want - (1.0 - (2.0 / 8.0) / (30.0 / 56.0))).abs() < 1e-12);
}
