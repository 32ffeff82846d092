use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use super::{Column, ComponentTags, DataError, Dataset};

/// One axis-aligned 2-D Gaussian with a fixed label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: [f64; 2],
    /// Per-axis standard deviation.
    pub std: [f64; 2],
    pub label: u8,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_points: usize,
    pub seed: u64,
    #[serde(default = "default_components")]
    pub components: Vec<GaussianComponent>,
}

fn default_components() -> Vec<GaussianComponent> {
    let c = |m: f64, label: u8| GaussianComponent {
        mean: [m, m],
        std: [1.0, 1.0],
        label,
        weight: 0.25,
    };
    vec![c(0.0, 0), c(5.0, 0), c(5.0, 1), c(10.0, 1)]
}

impl SyntheticSpec {
    /// Four unit Gaussians at (0,0)->0, (5,5)->0, (5,5)->1, (10,10)->1 with
    /// equal weights: half the mass lies in the mixed-label overlap.
    pub fn default_mixture(n_points: usize, seed: u64) -> Self {
        SyntheticSpec {
            n_points,
            seed,
            components: default_components(),
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::InvalidSynthetic(m));
        if self.components.is_empty() || self.components.len() > u8::MAX as usize {
            return bad(format!("{} components", self.components.len()));
        }
        let mut total = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return bad(format!("component {i} weight {}", c.weight));
            }
            if c.label > 1 {
                return bad(format!("component {i} label {}", c.label));
            }
            if c.std.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                return bad(format!("component {i} std {:?}", c.std));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("weights sum to {total}, not 1"));
        }
        Ok(())
    }

    /// Components whose distribution coincides with a positively weighted
    /// component of the other label; their rows have true conflict 0.5.
    pub fn overlap_components(&self) -> Vec<u8> {
        let cs = &self.components;
        (0..cs.len())
            .filter(|&i| {
                cs.iter().enumerate().any(|(j, o)| {
                    j != i
                        && o.weight > 0.0
                        && cs[i].weight > 0.0
                        && o.label != cs[i].label
                        && o.mean == cs[i].mean
                        && o.std == cs[i].std
                })
            })
            .map(|i| i as u8)
            .collect()
    }
}

/// Draws `spec.n_points` rows; returns the dataset (tagged with the
/// generating component) and the per-row ground-truth conflict ratio.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, Vec<f64>), DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pick = WeightedIndex::new(spec.components.iter().map(|c| c.weight))
        .map_err(|e| DataError::InvalidSynthetic(e.to_string()))?;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let overlap = spec.overlap_components();

    let n = spec.n_points;
    let mut values = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    let mut component = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let k = pick.sample(&mut rng);
        let c = &spec.components[k];
        for axis in 0..2 {
            let z: f64 = std_normal.sample(&mut rng);
            values.push(c.mean[axis] + c.std[axis] * z);
        }
        labels.push(c.label);
        component.push(k as u8);
        truth.push(if overlap.contains(&(k as u8)) {
            0.5
        } else {
            0.0
        });
    }
    let ds = Dataset::new(
        vec![Column::numeric("x1"), Column::numeric("x2")],
        values,
        Some(labels),
        None,
    )?
    .with_label_name("y")
    .with_tags(ComponentTags {
        component,
        overlap_components: overlap,
    })?;
    Ok((ds, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_overlap_is_the_middle_pair() {
        assert_eq!(
            SyntheticSpec::default_mixture(1, 0).overlap_components(),
            vec![1, 2]
        );
    }

    #[test]
    fn about_half_the_rows_conflict() {
        let n = 8000;
        let (ds, truth) = generate_synthetic(&SyntheticSpec::default_mixture(n, 11)).unwrap();
        assert_eq!(ds.n_rows(), n);
        let half = truth.iter().filter(|&&t| t == 0.5).count() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((half - n as f64 / 2.0).abs() <= 3.0 * sd, "{half}");
    }

    #[test]
    fn zero_middle_weight_means_no_conflict() {
        let mut spec = SyntheticSpec::default_mixture(500, 1);
        spec.components[0].weight = 0.5;
        spec.components[1].weight = 0.0;
        spec.components[2].weight = 0.0;
        spec.components[3].weight = 0.5;
        let (_, truth) = generate_synthetic(&spec).unwrap();
        assert!(truth.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn far_component_rows_are_label_one_without_conflict() {
        let (ds, truth) = generate_synthetic(&SyntheticSpec::default_mixture(400, 5)).unwrap();
        let tags = ds.tags().unwrap();
        let labels = ds.labels().unwrap();
        let mut seen = 0;
        for i in 0..ds.n_rows() {
            if tags.component[i] == 3 {
                seen += 1;
                assert_eq!(labels[i], 1);
                assert_eq!(truth[i], 0.0);
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let mut spec = SyntheticSpec::default_mixture(10, 0);
        spec.components[0].weight = 0.5;
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate_synthetic(&SyntheticSpec::default_mixture(100, 9)).unwrap();
        let b = generate_synthetic(&SyntheticSpec::default_mixture(100, 9)).unwrap();
        assert_eq!(a, b);
    }
}
