use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Member, Provenance, RashomonError, RashomonSet, Score, SetKind, ThresholdSource};
use crate::data::Column;
use crate::tree::DecisionTree;

pub const SET_FORMAT: &str = "multiplicity-rashomon-set";
const SET_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";
const BASELINE_FILE: &str = "baseline.json";
const MEMBER_DIR: &str = "members";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    kind: SetKind,
    epsilon: f64,
    score: Score,
    threshold: f64,
    threshold_source: ThresholdSource,
    candidate_count: usize,
    config_hash: String,
    #[serde(default)]
    warnings: Vec<String>,
    features: Vec<Column>,
    baseline: MemberEntry,
    members: Vec<MemberEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MemberEntry {
    file: String,
    score: f64,
    accuracy: f64,
    leaves: usize,
    provenance: Provenance,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> RashomonError {
    RashomonError::Persist(format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), RashomonError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Writes `rs` to `dir`: a manifest, the baseline tree and one file per
/// member. Existing member files in `dir` are replaced.
pub fn save_set(rs: &RashomonSet, dir: &Path) -> Result<(), RashomonError> {
    let members_dir = dir.join(MEMBER_DIR);
    if members_dir.exists() {
        fs::remove_dir_all(&members_dir).map_err(|e| io_err(&members_dir, e))?;
    }
    fs::create_dir_all(&members_dir).map_err(|e| io_err(&members_dir, e))?;
    let entry = |m: &Member, file: String| MemberEntry {
        file,
        score: m.score,
        accuracy: m.accuracy,
        leaves: m.tree.leaf_count(),
        provenance: m.provenance.clone(),
    };
    write(&dir.join(BASELINE_FILE), &rs.baseline.tree.to_json())?;
    let mut entries = Vec::with_capacity(rs.members.len());
    for (i, m) in rs.members.iter().enumerate() {
        let file = format!("{MEMBER_DIR}/m{i:06}.json");
        write(&dir.join(&file), &m.tree.to_json())?;
        entries.push(entry(m, file));
    }
    let manifest = Manifest {
        format: SET_FORMAT.into(),
        version: SET_VERSION,
        kind: rs.kind,
        epsilon: rs.epsilon,
        score: rs.score,
        threshold: rs.threshold,
        threshold_source: rs.threshold_source,
        candidate_count: rs.candidate_count,
        config_hash: rs.config_hash.clone(),
        warnings: rs.warnings.clone(),
        features: rs.features.clone(),
        baseline: entry(&rs.baseline, BASELINE_FILE.into()),
        members: entries,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| io_err(dir, e))?;
    write(&dir.join(MANIFEST), &(text + "\n"))
}

pub fn load_set(dir: &Path) -> Result<RashomonSet, RashomonError> {
    let mpath = dir.join(MANIFEST);
    let text = fs::read_to_string(&mpath).map_err(|e| io_err(&mpath, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| io_err(&mpath, e))?;
    if manifest.format != SET_FORMAT || manifest.version != SET_VERSION {
        return Err(io_err(
            &mpath,
            format!(
                "unsupported format {} v{}",
                manifest.format, manifest.version
            ),
        ));
    }
    let names: Vec<String> = manifest.features.iter().map(|c| c.name.clone()).collect();
    let load = |e: MemberEntry| -> Result<Member, RashomonError> {
        let path = dir.join(&e.file);
        let text = fs::read_to_string(&path).map_err(|err| io_err(&path, err))?;
        let tree = DecisionTree::from_json(&text)?;
        if tree.feature_names() != names.as_slice() {
            return Err(io_err(&path, "tree features differ from the manifest"));
        }
        if tree.leaf_count() != e.leaves {
            return Err(io_err(&path, "leaf count differs from the manifest"));
        }
        Ok(Member {
            tree,
            score: e.score,
            accuracy: e.accuracy,
            provenance: e.provenance,
        })
    };
    let baseline = load(manifest.baseline)?;
    let members = manifest
        .members
        .into_iter()
        .map(load)
        .collect::<Result<Vec<_>, _>>()?;
    if members.is_empty() {
        return Err(io_err(&mpath, "set has no members"));
    }
    Ok(RashomonSet {
        kind: manifest.kind,
        baseline,
        epsilon: manifest.epsilon,
        score: manifest.score,
        threshold: manifest.threshold,
        threshold_source: manifest.threshold_source,
        members,
        candidate_count: manifest.candidate_count,
        features: manifest.features,
        config_hash: manifest.config_hash,
        warnings: manifest.warnings,
    })
}
