use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DatasetError, FoldTag, WindowSample};

pub const MAX_SPLIT_ATTEMPTS: usize = 10_000;

/// Participant-disjoint test groups; each group's windows cover labels 1–5.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub seed: u64,
    /// `groups[f]` lists the test participants of fold `f`, sorted.
    pub groups: Vec<Vec<String>>,
}

impl FoldSplit {
    pub fn k(&self) -> usize {
        self.groups.len()
    }

    /// Content-derived id shared by every transform fitted under this split.
    pub fn split_id(&self) -> u64 {
        let bytes = serde_json::to_vec(&self.groups).expect("groups serialize");
        let digest = Sha256::digest(&bytes);
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes")) | 1
    }

    pub fn tag(&self, fold: usize) -> FoldTag {
        FoldTag { split_id: self.split_id(), fold }
    }

    pub fn is_test(&self, fold: usize, participant: &str) -> bool {
        self.groups[fold].iter().any(|p| p == participant)
    }

    /// `(train, test)` window indices for `fold`.
    pub fn indices(&self, fold: usize, windows: &[WindowSample]) -> (Vec<usize>, Vec<usize>) {
        (0..windows.len()).partition(|&i| !self.is_test(fold, &windows[i].participant_id))
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        let mut map = BTreeMap::new();
        for (f, g) in self.groups.iter().enumerate() {
            map.insert(f.to_string(), g.clone());
        }
        let doc = serde_json::json!({ "seed": self.seed, "folds": map });
        std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")
    }

    pub fn read_json(path: &Path) -> Result<Self, DatasetError> {
        #[derive(Deserialize)]
        struct Doc {
            seed: u64,
            folds: BTreeMap<String, Vec<String>>,
        }
        let text = std::fs::read_to_string(path).map_err(|e| DatasetError::Store(e.to_string()))?;
        let doc: Doc = serde_json::from_str(&text).map_err(|e| DatasetError::Store(e.to_string()))?;
        let mut groups: Vec<(usize, Vec<String>)> = Vec::new();
        for (k, v) in doc.folds {
            let idx = k.parse::<usize>().map_err(|e| DatasetError::Store(e.to_string()))?;
            groups.push((idx, v));
        }
        groups.sort();
        Ok(FoldSplit { seed: doc.seed, groups: groups.into_iter().map(|(_, g)| g).collect() })
    }
}

/// Seeded rejection sampling over participant partitions until every test
/// group covers all five labels.
pub fn make_folds(windows: &[WindowSample], k: usize, seed: u64) -> Result<FoldSplit, DatasetError> {
    let pairs: Vec<(&str, u8)> = windows.iter().map(|w| (w.participant_id.as_str(), w.label)).collect();
    make_folds_from_labels(&pairs, k, seed)
}

pub fn make_folds_from_labels(pairs: &[(&str, u8)], k: usize, seed: u64) -> Result<FoldSplit, DatasetError> {
    let mut labels: BTreeMap<&str, BTreeSet<u8>> = BTreeMap::new();
    for &(p, l) in pairs {
        labels.entry(p).or_default().insert(l);
    }
    let participants: Vec<&str> = labels.keys().copied().collect();
    if k < 2 || participants.len() < k {
        return Err(DatasetError::InfeasibleSplit(format!("{} participants cannot form {k} folds", participants.len())));
    }
    let corpus: BTreeSet<u8> = labels.values().flatten().copied().collect();
    if corpus.len() < 5 {
        return Err(DatasetError::InfeasibleSplit("corpus does not contain all five labels".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = participants.clone();
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        order.shuffle(&mut rng);
        let mut groups: Vec<Vec<String>> = vec![Vec::new(); k];
        for (i, p) in order.iter().enumerate() {
            groups[i % k].push(p.to_string());
        }
        let covered = groups.iter().all(|g| g.iter().flat_map(|p| labels[p.as_str()].iter()).collect::<BTreeSet<_>>().len() == 5);
        if covered {
            for g in groups.iter_mut() {
                g.sort();
            }
            return Ok(FoldSplit { seed, groups });
        }
    }
    Err(DatasetError::InfeasibleSplit(format!("no label-covering partition in {MAX_SPLIT_ATTEMPTS} draws")))
}
