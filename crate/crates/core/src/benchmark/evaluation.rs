use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Largest number of true groups [`error_rate`] accepts.
pub const MAX_GROUPS: usize = 8;

/// Misclassification rate under the best one-to-one matching of predicted
/// cluster ids to true group ids. Unlabeled items and items in unmatched
/// clusters count as errors.
///
/// The matching is solved exactly by dynamic programming over subsets of the
/// true groups, which handles any number of predicted clusters.
pub fn error_rate(predicted: &[Option<usize>], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} truth labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("no items to score"));
    }
    let mut groups: Vec<usize> = truth.to_vec();
    groups.sort_unstable();
    groups.dedup();
    if groups.len() > MAX_GROUPS {
        return Err(Error::Unsupported(format!(
            "{} true groups; at most {MAX_GROUPS} are supported",
            groups.len()
        )));
    }
    let group_index: BTreeMap<usize, usize> = groups.iter().enumerate().map(|(i, &g)| (g, i)).collect();

    // contingency counts per predicted cluster
    let mut table: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (p, t) in predicted.iter().zip(truth) {
        if let Some(p) = p {
            table.entry(*p).or_insert_with(|| vec![0; groups.len()])[group_index[t]] += 1;
        }
    }

    let full = 1usize << groups.len();
    let mut best = vec![0usize; full];
    for counts in table.values() {
        let prev = best.clone();
        for mask in 0..full {
            for (g, &c) in counts.iter().enumerate() {
                if mask & (1 << g) == 0 {
                    let next = mask | (1 << g);
                    best[next] = best[next].max(prev[mask] + c);
                }
            }
        }
    }
    let matched = best.into_iter().max().unwrap_or(0);
    Ok(1.0 - matched as f64 / truth.len() as f64)
}
