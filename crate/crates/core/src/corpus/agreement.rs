use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{Dataset, Label};
use crate::error::{Error, Result};

/// Krippendorff's alpha for nominal data.
///
/// Each unit holds the labels it received; missing ratings are simply
/// absent. Units with fewer than two labels are not pairable and are
/// ignored. Uses the coincidence matrix:
///
/// ```text
/// o_ck  = Σ_u (number of c-k pairs in u) / (m_u - 1)
/// alpha = 1 - (n - 1) · Σ_{c≠k} o_ck / Σ_{c≠k} n_c n_k
/// ```
pub fn krippendorff_alpha<L: Ord + Clone, S: AsRef<[L]>>(units: &[S]) -> Result<f64> {
    if units.len() < 2 {
        return Err(Error::InvalidConfig("agreement needs at least two units".into()));
    }
    let mut categories: BTreeMap<L, usize> = BTreeMap::new();
    for u in units {
        for l in u.as_ref() {
            let next = categories.len();
            categories.entry(l.clone()).or_insert(next);
        }
    }
    let k = categories.len();
    let mut coincidence = alloc::vec![0.0f64; k * k];
    let mut pairable = 0usize;
    for u in units {
        let values = u.as_ref();
        let m = values.len();
        if m < 2 {
            continue;
        }
        pairable += 1;
        let mut counts = alloc::vec![0usize; k];
        for l in values {
            counts[categories[l]] += 1;
        }
        let w = 1.0 / (m - 1) as f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for d in 0..k {
                let pairs = if c == d { counts[c] * (counts[c] - 1) } else { counts[c] * counts[d] };
                coincidence[c * k + d] += pairs as f64 * w;
            }
        }
    }
    if pairable == 0 {
        return Err(Error::InvalidConfig("agreement needs a unit with at least two labels".into()));
    }
    let marginals: Vec<f64> = (0..k).map(|c| (0..k).map(|d| coincidence[c * k + d]).sum()).collect();
    let n: f64 = marginals.iter().sum();
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            if c != d {
                observed += coincidence[c * k + d];
                expected += marginals[c] * marginals[d];
            }
        }
    }
    if expected == 0.0 {
        return Err(Error::DegenerateAgreement);
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

/// Alpha over prompts as units, using every record's label.
pub fn dataset_agreement(dataset: &Dataset) -> Result<f64> {
    let mut units: BTreeMap<u64, Vec<Label>> = BTreeMap::new();
    for r in &dataset.records {
        if let Some(l) = r.label {
            units.entry(r.prompt_id).or_default().push(l);
        }
    }
    let units: Vec<Vec<Label>> = units.into_values().collect();
    krippendorff_alpha(&units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn perfect_agreement_is_one() {
        let units = vec![vec!["a", "a", "a"], vec!["b", "b"], vec!["a", "a"]];
        assert!((krippendorff_alpha(&units).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_category_is_degenerate() {
        let units = vec![vec![1, 1], vec![1, 1, 1]];
        assert_eq!(krippendorff_alpha(&units), Err(Error::DegenerateAgreement));
    }

    #[test]
    fn needs_pairable_units() {
        assert!(krippendorff_alpha(&[vec![1]]).is_err());
        assert!(krippendorff_alpha(&[vec![1], vec![2]]).is_err());
    }

    #[test]
    fn hand_computed_example() {
        // Units (a,a),(a,b),(b,b),(b,b): o_aa = 2, o_ab = o_ba = 1, o_bb = 4,
        // n_a = 3, n_b = 5, n = 8 → alpha = 1 - 7·2 / (2·15) = 8/15.
        let units = vec![vec!['a', 'a'], vec!['a', 'b'], vec!['b', 'b'], vec!['b', 'b']];
        assert!((krippendorff_alpha(&units).unwrap() - 8.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_units_are_ignored() {
        let base = vec![vec![0, 0], vec![0, 1], vec![1, 1]];
        let mut with_missing = base.clone();
        with_missing.push(vec![1]);
        assert_eq!(krippendorff_alpha(&base).unwrap(), krippendorff_alpha(&with_missing).unwrap());
    }
}
