use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// Explicit `(n_train, n_test)`; overrides `train_fraction`. Rows beyond
    /// `n_train + n_test` are left out of both splits.
    #[serde(default)]
    pub fixed_sizes: Option<(usize, usize)>,
}

impl SplitSpec {
    pub fn fraction(train_fraction: f64, seed: u64) -> Self {
        SplitSpec {
            train_fraction,
            seed,
            fixed_sizes: None,
        }
    }

    fn sizes(&self, n: usize) -> Result<(usize, usize), DataError> {
        match self.fixed_sizes {
            Some((tr, te)) => {
                if tr + te > n {
                    return Err(DataError::InvalidSplit(format!(
                        "fixed sizes ({tr}, {te}) exceed {n} rows"
                    )));
                }
                if tr == 0 || te == 0 {
                    return Err(DataError::InvalidSplit(
                        "split sizes must be positive".into(),
                    ));
                }
                Ok((tr, te))
            }
            None => {
                let f = self.train_fraction;
                if !(f > 0.0 && f < 1.0) {
                    return Err(DataError::InvalidSplit(format!(
                        "train_fraction {f} outside (0, 1)"
                    )));
                }
                let tr = (n as f64 * f).round() as usize;
                if tr == 0 || tr >= n {
                    return Err(DataError::InvalidSplit(format!(
                        "{n} rows cannot be split with fraction {f}"
                    )));
                }
                Ok((tr, n - tr))
            }
        }
    }
}

/// Shuffles row indices under `spec.seed` and cuts them into train and test.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), DataError> {
    let (idx_train, idx_test) = split_indices(ds.n_rows(), spec)?;
    Ok((ds.select_rows(&idx_train), ds.select_rows(&idx_test)))
}

/// Like [`split`], also returning the rows left out of both splits, if any.
pub fn split_with_rest(
    ds: &Dataset,
    spec: &SplitSpec,
) -> Result<(Dataset, Dataset, Option<Dataset>), DataError> {
    let (idx_train, idx_test) = split_indices(ds.n_rows(), spec)?;
    let mut used = vec![false; ds.n_rows()];
    for &i in idx_train.iter().chain(&idx_test) {
        used[i] = true;
    }
    let rest: Vec<usize> = (0..ds.n_rows()).filter(|&i| !used[i]).collect();
    let rest = (!rest.is_empty()).then(|| ds.select_rows(&rest));
    Ok((ds.select_rows(&idx_train), ds.select_rows(&idx_test), rest))
}

pub(crate) fn split_indices(
    n: usize,
    spec: &SplitSpec,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    let (n_train, n_test) = spec.sizes(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let test = order[n_train..n_train + n_test].to_vec();
    order.truncate(n_train);
    Ok((order, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;
    use proptest::prelude::*;

    fn seq(n: usize) -> Dataset {
        Dataset::new(
            vec![Column::numeric("x")],
            (0..n).map(|i| i as f64).collect(),
            Some((0..n).map(|i| (i % 2) as u8).collect()),
            None,
        )
        .unwrap()
    }

    #[test]
    fn fraction_sizes() {
        let (tr, te) = split(&seq(10), &SplitSpec::fraction(0.7, 1)).unwrap();
        assert_eq!((tr.n_rows(), te.n_rows()), (7, 3));
    }

    #[test]
    fn deterministic_for_seed() {
        let a = split_indices(10, &SplitSpec::fraction(0.7, 1)).unwrap();
        let b = split_indices(10, &SplitSpec::fraction(0.7, 1)).unwrap();
        assert_eq!(a, b);
        let c = split_indices(10, &SplitSpec::fraction(0.7, 2)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn oversized_fixed_split_fails() {
        let spec = SplitSpec {
            train_fraction: 0.5,
            seed: 0,
            fixed_sizes: Some((7000, 7000)),
        };
        assert!(matches!(
            split_indices(10_000, &spec),
            Err(DataError::InvalidSplit(_))
        ));
    }

    #[test]
    fn rest_holds_the_unused_rows() {
        let spec = SplitSpec {
            train_fraction: 0.5,
            seed: 4,
            fixed_sizes: Some((3, 2)),
        };
        let (tr, te, rest) = split_with_rest(&seq(10), &spec).unwrap();
        let rest = rest.unwrap();
        assert_eq!(rest.n_rows(), 5);
        let mut ids: Vec<u64> = [tr.row_ids(), te.row_ids(), rest.row_ids()].concat();
        ids.sort_unstable();
        assert_eq!(ids, (0..10).collect::<Vec<u64>>());
        assert!(split_with_rest(&seq(10), &SplitSpec::fraction(0.5, 1))
            .unwrap()
            .2
            .is_none());
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 2usize..300, f in 0.05f64..0.95, seed in any::<u64>()) {
            let spec = SplitSpec::fraction(f, seed);
            if let Ok((tr, te)) = split_indices(n, &spec) {
                let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            }
        }
    }
}
