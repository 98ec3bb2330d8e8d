//! Keeping one articulation variant per gloss.
//!
//! Annotation corpora can record several distinct articulations of the
//! same sign. For subset experiments only the best-attested articulation
//! of each gloss is kept.

use std::collections::BTreeMap;

use crate::sample::RawSample;

/// For each gloss, retains the articulation with the most samples, ties
/// broken by the smallest articulation id. Sample order is preserved.
pub fn select_dominant_articulation(samples: &[RawSample]) -> Vec<RawSample> {
    let mut counts: BTreeMap<&str, BTreeMap<u32, usize>> = BTreeMap::new();
    for sample in samples {
        *counts
            .entry(&sample.label)
            .or_default()
            .entry(sample.articulation_id)
            .or_default() += 1;
    }
    let winners: BTreeMap<&str, u32> = counts
        .iter()
        .map(|(&label, by_articulation)| {
            let (&winner, _) = by_articulation
                .iter()
                .max_by(|(id_a, count_a), (id_b, count_b)| {
                    count_a.cmp(count_b).then(id_b.cmp(id_a))
                })
                .expect("every counted gloss has at least one articulation");
            (label, winner)
        })
        .collect();
    samples
        .iter()
        .filter(|sample| winners[sample.label.as_str()] == sample.articulation_id)
        .cloned()
        .collect()
}
