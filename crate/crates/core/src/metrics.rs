//! Conflict ratios, delta-ambiguity and conflict distance.
//!
//! For a set R and row x with n1 members predicting 1 and n0 predicting 0,
//! the conflict ratio is `min(n0, n1) / |R|`, in [0, 0.5]. The
//! delta-ambiguity of R on a dataset is the fraction of rows whose
//! conflict ratio is strictly greater than delta.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::data::Dataset;
use crate::rashomon::{predictions_matrix, PredictionMatrix, RashomonError, RashomonSet};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("profile has no rows")]
    EmptyProfile,
    #[error("delta {0} outside [0, 0.5]")]
    DeltaOutOfRange(f64),
    #[error("profiles cover different datasets ({0} vs {1})")]
    FingerprintMismatch(String, String),
    #[error("dataset carries no component tags")]
    MissingTags,
    #[error(transparent)]
    Rashomon(#[from] RashomonError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Conflict of one row. Vote counts are absent for ground-truth profiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictRecord {
    pub row_id: u64,
    pub n0: Option<u32>,
    pub n1: Option<u32>,
    /// `min(n0, n1) / |R|`, correctly rounded from the exact counts.
    pub conflict: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConflictProfile {
    set_size: Option<usize>,
    fingerprint: String,
    records: Vec<ConflictRecord>,
}

impl ConflictProfile {
    /// Profile from positive-vote counts over a set of `set_size` members.
    pub fn from_votes(
        fingerprint: String,
        row_ids: &[u64],
        positive_votes: &[u32],
        set_size: usize,
    ) -> Self {
        assert!(set_size > 0, "conflict ratios need a nonempty set");
        assert_eq!(row_ids.len(), positive_votes.len());
        let size = set_size as u32;
        let records = row_ids
            .iter()
            .zip(positive_votes)
            .map(|(&row_id, &n1)| {
                let n0 = size - n1;
                ConflictRecord {
                    row_id,
                    n0: Some(n0),
                    n1: Some(n1),
                    conflict: f64::from(n0.min(n1)) / f64::from(size),
                }
            })
            .collect();
        ConflictProfile {
            set_size: Some(set_size),
            fingerprint,
            records,
        }
    }

    /// Profile from known conflict values (no votes), e.g. ground truth.
    pub fn from_conflicts(fingerprint: String, row_ids: &[u64], conflicts: &[f64]) -> Self {
        assert_eq!(row_ids.len(), conflicts.len());
        let records = row_ids
            .iter()
            .zip(conflicts)
            .map(|(&row_id, &c)| {
                assert!((0.0..=0.5).contains(&c), "conflict {c} outside [0, 0.5]");
                ConflictRecord {
                    row_id,
                    n0: None,
                    n1: None,
                    conflict: c,
                }
            })
            .collect();
        ConflictProfile {
            set_size: None,
            fingerprint,
            records,
        }
    }

    /// |R|, or `None` for profiles not derived from a set.
    pub fn set_size(&self) -> Option<usize> {
        self.set_size
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn records(&self) -> &[ConflictRecord] {
        &self.records
    }

    pub fn conflicts(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.conflict).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes `row_id,n0,n1,conflict` rows; vote columns are left empty
    /// when unknown.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row_id,n0,n1,conflict")?;
        let opt = |v: Option<u32>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.records {
            writeln!(w, "{},{},{},{}", r.row_id, opt(r.n0), opt(r.n1), r.conflict)?;
        }
        Ok(())
    }
}

/// c_R(x) for every row of `ds`, from the prediction matrix.
pub fn conflict_profile(rs: &RashomonSet, ds: &Dataset) -> Result<ConflictProfile, MetricsError> {
    let m = predictions_matrix(rs, ds)?;
    Ok(profile_from_matrix(&m, ds))
}

pub fn profile_from_matrix(m: &PredictionMatrix, ds: &Dataset) -> ConflictProfile {
    ConflictProfile::from_votes(
        ds.fingerprint(),
        ds.row_ids(),
        &m.positive_votes(),
        m.n_members(),
    )
}

fn check_delta(delta: f64) -> Result<(), MetricsError> {
    if (0.0..=0.5).contains(&delta) {
        Ok(())
    } else {
        Err(MetricsError::DeltaOutOfRange(delta))
    }
}

/// A_delta: fraction of rows with conflict strictly above `delta`.
pub fn ambiguity(profile: &ConflictProfile, delta: f64) -> Result<f64, MetricsError> {
    check_delta(delta)?;
    if profile.is_empty() {
        return Err(MetricsError::EmptyProfile);
    }
    let above = profile
        .records
        .iter()
        .filter(|r| r.conflict > delta)
        .count();
    Ok(above as f64 / profile.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbiguityCurve {
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
}

impl AmbiguityCurve {
    pub fn at(&self, delta: f64) -> Option<f64> {
        self.deltas
            .iter()
            .position(|&d| d == delta)
            .map(|i| self.values[i])
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.deltas.iter().copied().zip(self.values.iter().copied())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "delta,ambiguity")?;
        for (d, v) in self.points() {
            writeln!(w, "{d},{v}")?;
        }
        Ok(())
    }
}

/// 0, 0.025, ..., 0.5
pub fn default_deltas() -> Vec<f64> {
    (0..=20).map(|i| f64::from(i) / 40.0).collect()
}

/// A_delta at each requested delta, sorted ascending.
pub fn ambiguity_curve(
    profile: &ConflictProfile,
    deltas: &[f64],
) -> Result<AmbiguityCurve, MetricsError> {
    for &d in deltas {
        check_delta(d)?;
    }
    if profile.is_empty() {
        return Err(MetricsError::EmptyProfile);
    }
    let mut deltas = deltas.to_vec();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let mut sorted = profile.conflicts();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let values = deltas
        .iter()
        .map(|&d| {
            let at_or_below = sorted.partition_point(|&c| c <= d);
            (sorted.len() - at_or_below) as f64 / n
        })
        .collect();
    Ok(AmbiguityCurve { deltas, values })
}

/// Mean absolute difference of per-row conflicts over a shared dataset.
pub fn distance(p1: &ConflictProfile, p2: &ConflictProfile) -> Result<f64, MetricsError> {
    if p1.fingerprint != p2.fingerprint || p1.len() != p2.len() {
        return Err(MetricsError::FingerprintMismatch(
            p1.fingerprint.clone(),
            p2.fingerprint.clone(),
        ));
    }
    if p1.is_empty() {
        return Err(MetricsError::EmptyProfile);
    }
    let total: f64 = p1
        .records
        .iter()
        .zip(&p2.records)
        .map(|(a, b)| (a.conflict - b.conflict).abs())
        .sum();
    Ok(total / p1.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile(votes: &[u32], size: usize) -> ConflictProfile {
        let ids: Vec<u64> = (0..votes.len() as u64).collect();
        ConflictProfile::from_votes("fp".into(), &ids, votes, size)
    }

    fn values(cs: &[f64]) -> ConflictProfile {
        let ids: Vec<u64> = (0..cs.len() as u64).collect();
        ConflictProfile::from_conflicts("fp".into(), &ids, cs)
    }

    #[test]
    fn conflict_examples() {
        let p = profile(&[10, 5, 3], 10);
        assert_eq!(p.records()[0].conflict, 0.0);
        assert_eq!(p.records()[1].conflict, 0.5);
        let p = profile(&[3], 5);
        assert_eq!(p.records()[0].conflict, 0.4);
        assert_eq!(p.records()[0].n0, Some(2));
    }

    #[test]
    fn ambiguity_examples() {
        let p = values(&[0.0, 0.1, 0.3, 0.5]);
        assert_eq!(ambiguity(&p, 0.2).unwrap(), 0.5);
        assert_eq!(ambiguity(&values(&[0.0, 0.0]), 0.0).unwrap(), 0.0);
        assert_eq!(ambiguity(&p, 0.5).unwrap(), 0.0);
        assert!(matches!(
            ambiguity(&p, 0.6),
            Err(MetricsError::DeltaOutOfRange(_))
        ));
        assert!(matches!(
            ambiguity(&values(&[]), 0.1),
            Err(MetricsError::EmptyProfile)
        ));
    }

    #[test]
    fn strict_inequality_at_delta() {
        // 3 of 10 votes is exactly 0.3: not counted at delta = 0.3
        let p = profile(&[3], 10);
        assert_eq!(ambiguity(&p, 0.3).unwrap(), 0.0);
        assert_eq!(ambiguity(&p, 0.275).unwrap(), 1.0);
    }

    #[test]
    fn curve_examples() {
        let p = values(&[0.0, 0.1, 0.3, 0.5]);
        let c = ambiguity_curve(&p, &[0.0]).unwrap();
        assert_eq!(c.values, vec![ambiguity(&p, 0.0).unwrap()]);
        let truth: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { 0.5 } else { 0.0 })
            .collect();
        let c = ambiguity_curve(&values(&truth), &default_deltas()).unwrap();
        for (d, v) in c.points() {
            assert_eq!(v, if d < 0.5 { 0.5 } else { 0.0 });
        }
        assert_eq!(default_deltas().len(), 21);
        assert_eq!(default_deltas()[12], 0.3);
    }

    #[test]
    fn distance_examples() {
        let a = values(&[0.5, 0.0]);
        let b = values(&[0.0, 0.5]);
        assert_eq!(distance(&a, &a).unwrap(), 0.0);
        assert_eq!(distance(&a, &b).unwrap(), 0.5);
        let other = ConflictProfile::from_conflicts("other".into(), &[0, 1], &[0.0, 0.0]);
        assert!(matches!(
            distance(&a, &other),
            Err(MetricsError::FingerprintMismatch(..))
        ));
    }

    #[test]
    fn csv_exports() {
        let mut out = Vec::new();
        profile(&[1, 2], 4).write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "row_id,n0,n1,conflict\n0,3,1,0.25\n1,2,2,0.5\n"
        );
        let mut out = Vec::new();
        values(&[0.5]).write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "row_id,n0,n1,conflict\n0,,,0.5\n"
        );
        let mut out = Vec::new();
        ambiguity_curve(&values(&[0.5, 0.0]), &[0.0, 0.5])
            .unwrap()
            .write_csv(&mut out)
            .unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "delta,ambiguity\n0,0.5\n0.5,0\n"
        );
    }

    proptest! {
        #[test]
        fn curve_matches_pointwise_and_is_monotone(
            votes in prop::collection::vec(0u32..=9, 1..80),
            deltas in prop::collection::vec(0.0f64..=0.5, 1..10),
        ) {
            let p = profile(&votes, 9);
            let c = ambiguity_curve(&p, &deltas).unwrap();
            for (d, v) in c.points() {
                prop_assert_eq!(v, ambiguity(&p, d).unwrap());
            }
            for w in c.values.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }

        #[test]
        fn flipping_all_votes_keeps_conflict(votes in prop::collection::vec(0u32..=12, 1..50)) {
            let flipped: Vec<u32> = votes.iter().map(|v| 12 - v).collect();
            prop_assert_eq!(profile(&votes, 12).conflicts(), profile(&flipped, 12).conflicts());
        }
    }
}
