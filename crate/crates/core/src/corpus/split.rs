use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::types::ReviewPairComment;
use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitUnit {
    /// Each RPC is placed independently.
    Rpc,
    /// All RPCs of one review pair land in the same part.
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub ratios: (f64, f64, f64),
    pub unit: SplitUnit,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            seed: 42,
            ratios: (0.8, 0.1, 0.1),
            unit: SplitUnit::Rpc,
        }
    }
}

impl SplitSpec {
    pub fn new(seed: u64, ratios: (f64, f64, f64), unit: SplitUnit) -> Result<Self, CorpusError> {
        let spec = SplitSpec { seed, ratios, unit };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let (a, b, c) = self.ratios;
        for r in [a, b, c] {
            if !(r > 0.0 && r < 1.0) {
                return Err(CorpusError::InvalidSplit(format!("fraction {r} outside (0, 1)")));
            }
        }
        if (a + b + c - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidSplit(format!(
                "fractions sum to {} instead of 1",
                a + b + c
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

/// Part sizes by largest remainder: each is within one of `n * ratio` and they sum to `n`.
fn part_sizes(n: usize, ratios: (f64, f64, f64)) -> [usize; 3] {
    let ideal = [ratios.0 * n as f64, ratios.1 * n as f64, ratios.2 * n as f64];
    let mut sizes = ideal.map(|x| x.floor() as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| {
        let fi = ideal[i] - ideal[i].floor();
        let fj = ideal[j] - ideal[j].floor();
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Deterministically shuffles groups of items (grouped by `key`) and deals them into
/// train/validation/test by group count.
pub fn partition<T, K, F>(items: Vec<T>, key: F, spec: &SplitSpec) -> Result<Split<T>, CorpusError>
where
    K: Ord,
    F: Fn(&T) -> K,
{
    spec.validate()?;
    let mut groups: BTreeMap<K, Vec<T>> = BTreeMap::new();
    for item in items {
        groups.entry(key(&item)).or_default().push(item);
    }
    let mut groups: Vec<Vec<T>> = groups.into_values().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    groups.shuffle(&mut rng);
    let [n_train, n_val, _] = part_sizes(groups.len(), spec.ratios);
    let mut iter = groups.into_iter();
    let train = iter.by_ref().take(n_train).flatten().collect();
    let validation = iter.by_ref().take(n_val).flatten().collect();
    let test = iter.flatten().collect();
    Ok(Split {
        train,
        validation,
        test,
    })
}

pub fn split_dataset(
    rpcs: &[ReviewPairComment],
    spec: &SplitSpec,
) -> Result<Split<ReviewPairComment>, CorpusError> {
    let items = rpcs.to_vec();
    match spec.unit {
        SplitUnit::Rpc => partition(items, |r| r.rpc_id.clone(), spec),
        SplitUnit::Pair => partition(items, |r| r.pair_id.clone(), spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn rpc(i: usize, pair: usize) -> ReviewPairComment {
        ReviewPairComment {
            rpc_id: format!("rpc{i}"),
            pair_id: format!("pair{pair}"),
            comment_a_id: format!("a{i}"),
            comment_b_id: format!("b{i}"),
            shared_opposed_aspects: BTreeSet::new(),
            gold_label: None,
        }
    }

    #[test]
    fn exact_ratio_on_one_hundred() {
        let rpcs: Vec<_> = (0..100).map(|i| rpc(i, i)).collect();
        let split = split_dataset(&rpcs, &SplitSpec::default()).unwrap();
        assert_eq!(
            (split.train.len(), split.validation.len(), split.test.len()),
            (80, 10, 10)
        );
    }

    #[test]
    fn seven_items_enumerated_against_ideal_sizes() {
        // oracle: every size must be within one of 7 * ratio, and the parts must cover 7
        let rpcs: Vec<_> = (0..7).map(|i| rpc(i, i)).collect();
        for seed in 0..20 {
            let spec = SplitSpec::new(seed, (0.8, 0.1, 0.1), SplitUnit::Rpc).unwrap();
            let split = split_dataset(&rpcs, &spec).unwrap();
            let sizes = [split.train.len(), split.validation.len(), split.test.len()];
            for (size, ideal) in sizes.iter().zip([5.6, 0.7, 0.7]) {
                assert!((*size as f64 - ideal).abs() <= 1.0, "{sizes:?}");
            }
            assert_eq!(sizes.iter().sum::<usize>(), 7);
        }
    }

    #[test]
    fn pair_unit_keeps_siblings_together() {
        let mut rpcs: Vec<_> = (0..30).map(|i| rpc(i, i)).collect();
        rpcs.push(rpc(100, 5));
        for seed in 0..10 {
            let spec = SplitSpec::new(seed, (0.8, 0.1, 0.1), SplitUnit::Pair).unwrap();
            let split = split_dataset(&rpcs, &spec).unwrap();
            let part_of = |id: &str| {
                [&split.train, &split.validation, &split.test]
                    .iter()
                    .position(|p| p.iter().any(|r| r.rpc_id == id))
                    .unwrap()
            };
            assert_eq!(part_of("rpc5"), part_of("rpc100"));
        }
    }

    #[test]
    fn same_seed_same_split() {
        let rpcs: Vec<_> = (0..50).map(|i| rpc(i, i / 3)).collect();
        let spec = SplitSpec::new(7, (0.6, 0.2, 0.2), SplitUnit::Pair).unwrap();
        assert_eq!(split_dataset(&rpcs, &spec).unwrap(), split_dataset(&rpcs, &spec).unwrap());
    }

    #[test]
    fn invalid_ratios_are_rejected() {
        assert!(SplitSpec::new(0, (0.8, 0.2, 0.0), SplitUnit::Rpc).is_err());
        assert!(SplitSpec::new(0, (0.8, 0.1, 0.2), SplitUnit::Rpc).is_err());
    }

    proptest::proptest! {
        #[test]
        fn split_is_a_partition(n in 0usize..200, seed in 0u64..1000, groups in 1usize..40) {
            let rpcs: Vec<_> = (0..n).map(|i| rpc(i, i % groups)).collect();
            for unit in [SplitUnit::Rpc, SplitUnit::Pair] {
                let spec = SplitSpec::new(seed, (0.8, 0.1, 0.1), unit).unwrap();
                let split = split_dataset(&rpcs, &spec).unwrap();
                let mut ids: Vec<_> = split.train.iter().chain(&split.validation).chain(&split.test)
                    .map(|r| r.rpc_id.clone()).collect();
                ids.sort();
                let mut expected: Vec<_> = rpcs.iter().map(|r| r.rpc_id.clone()).collect();
                expected.sort();
                proptest::prop_assert_eq!(ids, expected);
            }
        }
    }
}
