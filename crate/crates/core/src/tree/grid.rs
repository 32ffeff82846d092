use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Criterion, TreeError, TreeParams};
use crate::seeds;

/// Hyperparameter grid: every (depth, criterion, seed) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub depths: Vec<usize>,
    pub criteria: Vec<Criterion>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_min_samples_split")]
    pub min_samples_split: usize,
    #[serde(default)]
    pub leaf_penalty_lambda: f64,
}

fn default_min_samples_split() -> usize {
    2
}

impl Default for ParamGrid {
    /// Depths 2..=12, both criteria, 12 seeds: 264 cells.
    fn default() -> Self {
        ParamGrid {
            depths: (2..=12).collect(),
            criteria: vec![Criterion::Gini, Criterion::Entropy],
            seeds: (0..12).collect(),
            min_samples_split: 2,
            leaf_penalty_lambda: 0.0,
        }
    }
}

impl ParamGrid {
    pub fn size(&self) -> usize {
        self.depths.len() * self.criteria.len() * self.seeds.len()
    }

    pub fn validate(&self) -> Result<(), TreeError> {
        if self.size() == 0 {
            return Err(TreeError::InvalidParams("grid has an empty axis".into()));
        }
        for c in self.cells() {
            c.validate()?;
        }
        Ok(())
    }

    /// All cells in (depth, criterion, seed) order.
    pub fn cells(&self) -> Vec<TreeParams> {
        let mut out = Vec::with_capacity(self.size());
        for &max_depth in &self.depths {
            for &criterion in &self.criteria {
                for &seed in &self.seeds {
                    out.push(TreeParams {
                        max_depth,
                        criterion,
                        seed,
                        min_samples_split: self.min_samples_split,
                        leaf_penalty_lambda: self.leaf_penalty_lambda,
                    });
                }
            }
        }
        out
    }
}

/// Draws `n` distinct grid cells uniformly without replacement.
pub fn sample_grid(
    grid: &ParamGrid,
    n: usize,
    master_seed: u64,
) -> Result<Vec<TreeParams>, TreeError> {
    grid.validate()?;
    if n == 0 {
        return Err(TreeError::InvalidParams("cannot sample zero cells".into()));
    }
    if n > grid.size() {
        return Err(TreeError::GridTooSmall {
            size: grid.size(),
            requested: n,
        });
    }
    let mut cells = grid.cells();
    cells.shuffle(&mut ChaCha8Rng::seed_from_u64(seeds::mix(
        master_seed,
        seeds::STREAM_GRID,
    )));
    cells.truncate(n);
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_253() -> ParamGrid {
        ParamGrid {
            depths: (2..=12).collect(),
            criteria: vec![Criterion::Gini],
            seeds: (0..23).collect(),
            ..ParamGrid::default()
        }
    }

    #[test]
    fn default_grid_exceeds_253() {
        assert_eq!(ParamGrid::default().size(), 264);
    }

    #[test]
    fn full_draw_is_a_permutation() {
        let g = grid_253();
        assert_eq!(g.size(), 253);
        let drawn = sample_grid(&g, 253, 5).unwrap();
        assert_ne!(drawn, g.cells(), "expected a shuffled order");
        let mut a: Vec<(usize, u64)> = drawn.iter().map(|p| (p.max_depth, p.seed)).collect();
        let mut b: Vec<(usize, u64)> = g.cells().iter().map(|p| (p.max_depth, p.seed)).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn single_draw_and_oversize() {
        let g = grid_253();
        let one = sample_grid(&g, 1, 9).unwrap();
        assert!(g.cells().contains(&one[0]));
        assert!(matches!(
            sample_grid(&g, 254, 9),
            Err(TreeError::GridTooSmall { .. })
        ));
        assert_eq!(
            sample_grid(&g, 10, 9).unwrap(),
            sample_grid(&g, 10, 9).unwrap()
        );
    }
}
