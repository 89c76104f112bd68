//! Consolidation of free-text labels (names, clothing descriptions) into
//! a small set of clusters, so that near-duplicate spellings feed models
//! as one category.
//!
//! Labels are mapped to a representation (phonetic code or lowercased
//! text), pairwise dissimilarity is 1 minus Jaro-Winkler similarity of the
//! representations, and agglomerative clustering over that matrix yields
//! the dendrogram. k comes from the caller or from the elbow rule on the
//! within-cluster medoid cost curve. Each cluster is summarized by its
//! medoid, and unseen labels join the cluster of the nearest medoid.

pub mod jaro;
pub mod linkage;
pub mod soundex;

pub use jaro::{jaro, jaro_winkler, DEFAULT_PREFIX_SCALE};
pub use linkage::{agglomerate, cut, elbow_k, medoid_cost, within_cost, Linkage, Merge};
pub use soundex::{soundex, soundex_phrase, SoundexCode};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric dissimilarity matrix with zero diagonal, entries in [0, 1].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn zeros(labels: Vec<String>) -> DistanceMatrix {
        let n = labels.len();
        DistanceMatrix { labels, d: vec![0.0; n * n] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.len() + j]
    }

    /// Sets d(i, j) and its mirror. The diagonal stays zero.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert_ne!(i, j, "diagonal is fixed at zero");
        assert!((0.0..=1.0).contains(&v), "dissimilarity {v} outside [0, 1]");
        let n = self.len();
        self.d[i * n + j] = v;
        self.d[j * n + i] = v;
    }
}

/// How a label is represented before string comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceMode {
    /// Per-word phonetic codes joined by spaces; robust to misspellings
    /// that preserve sound.
    SoundexJw,
    /// The lowercased label itself.
    RawJw,
}

impl DistanceMode {
    pub fn parse(s: &str) -> Result<DistanceMode> {
        match s {
            "soundex-jw" => Ok(DistanceMode::SoundexJw),
            "raw-jw" => Ok(DistanceMode::RawJw),
            other => Err(Error::config(format!(
                "unknown distance mode {other:?} (want soundex-jw or raw-jw)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistanceMode::SoundexJw => "soundex-jw",
            DistanceMode::RawJw => "raw-jw",
        }
    }
}

pub fn representation(label: &str, mode: DistanceMode) -> String {
    match mode {
        DistanceMode::SoundexJw => soundex_phrase(label),
        DistanceMode::RawJw => label.to_lowercase(),
    }
}

/// Pairwise dissimilarity 1 − JW(rep_i, rep_j). Labels must be distinct.
pub fn distance_matrix(
    labels: &[String],
    mode: DistanceMode,
    prefix_scale: f64,
) -> Result<DistanceMatrix> {
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::Cluster(format!("duplicate label {l:?}")));
        }
    }
    let reps: Vec<String> = labels.iter().map(|l| representation(l, mode)).collect();
    let mut d = DistanceMatrix::zeros(labels.to_vec());
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            d.set(i, j, 1.0 - jaro_winkler(&reps[i], &reps[j], prefix_scale));
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub mode: DistanceMode,
    pub linkage: Linkage,
    pub prefix_scale: f64,
    /// Fixed cluster count; None selects k by the elbow rule.
    pub k: Option<usize>,
    /// Upper end of the elbow search (inclusive).
    pub k_max: usize,
}

impl Default for ClusterOptions {
    fn default() -> ClusterOptions {
        ClusterOptions {
            mode: DistanceMode::SoundexJw,
            linkage: Linkage::Average,
            prefix_scale: DEFAULT_PREFIX_SCALE,
            k: None,
            k_max: 10,
        }
    }
}

/// Fitted label-consolidation model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterModel {
    pub mode: DistanceMode,
    pub linkage: Linkage,
    pub prefix_scale: f64,
    pub k: usize,
    pub labels: Vec<String>,
    /// 1-based cluster id per training label.
    pub assignment: Vec<usize>,
    /// Training-label index of each cluster's medoid (index c−1).
    pub medoids: Vec<u32>,
    pub merges: Vec<Merge>,
    /// Within-cost curve W(1..=k_max) when k came from the elbow rule.
    pub elbow_curve: Option<Vec<f64>>,
}

impl ClusterModel {
    pub fn fit(labels: &[String], options: &ClusterOptions) -> Result<ClusterModel> {
        if labels.is_empty() {
            return Err(Error::Cluster("no labels to cluster".into()));
        }
        let base = ClusterModel {
            mode: options.mode,
            linkage: options.linkage,
            prefix_scale: options.prefix_scale,
            k: 1,
            labels: labels.to_vec(),
            assignment: vec![1],
            medoids: vec![0],
            merges: Vec::new(),
            elbow_curve: None,
        };
        if labels.len() == 1 {
            if options.k.unwrap_or(1) != 1 {
                return Err(Error::Cluster("a single label only supports k = 1".into()));
            }
            return Ok(base);
        }

        let d = distance_matrix(labels, options.mode, options.prefix_scale)?;
        let merges = agglomerate(&d, options.linkage)?;
        let (k, elbow_curve) = match options.k {
            Some(k) => {
                if k < 1 || k > labels.len() {
                    return Err(Error::Cluster(format!(
                        "k = {k} outside 1..={}",
                        labels.len()
                    )));
                }
                (k, None)
            }
            None => {
                let (k, curve) = elbow_k(&d, &merges, options.k_max.min(labels.len()))?;
                (k, Some(curve))
            }
        };
        let assignment = cut(labels.len(), &merges, k)?;
        let mut groups: Vec<Vec<u32>> = vec![Vec::new(); k];
        for (leaf, &c) in assignment.iter().enumerate() {
            groups[c - 1].push(leaf as u32);
        }
        let medoids = groups.iter().map(|g| medoid_cost(&d, g).0).collect();
        Ok(ClusterModel { k, assignment, medoids, merges, elbow_curve, ..base })
    }

    pub fn medoid_label(&self, cluster: usize) -> &str {
        &self.labels[self.medoids[cluster - 1] as usize]
    }

    /// Cluster for any label: training labels keep their fitted cluster,
    /// unseen labels join the nearest medoid (lowest cluster id on ties).
    pub fn assign(&self, label: &str) -> usize {
        if let Some(i) = self.labels.iter().position(|l| l == label) {
            return self.assignment[i];
        }
        let rep = representation(label, self.mode);
        let mut best = (1usize, f64::INFINITY);
        for c in 1..=self.k {
            let medoid_rep = representation(self.medoid_label(c), self.mode);
            let dist = 1.0 - jaro_winkler(&rep, &medoid_rep, self.prefix_scale);
            if dist < best.1 {
                best = (c, dist);
            }
        }
        best.0
    }
}
