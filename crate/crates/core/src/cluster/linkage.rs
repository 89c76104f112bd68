//! Agglomerative hierarchical clustering over a precomputed distance
//! matrix, dendrogram cutting, and elbow-method selection of k.
//!
//! Cluster distances are recomputed directly from the original matrix at
//! every step (no incremental update formula), with a fixed summation
//! order: the smaller-id cluster's members drive the outer loop, ascending.
//! That makes the whole procedure bit-reproducible by any independent
//! implementation of the same definitions. Intended for label-consolidation
//! scale (hundreds to a few thousand items), not large point sets.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::DistanceMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Linkage {
    Average,
    Complete,
    Single,
}

impl Linkage {
    pub fn parse(s: &str) -> Result<Linkage> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(Error::config(format!(
                "unknown linkage {other:?} (want average, complete, or single)"
            ))),
        }
    }
}

/// One merge step. Leaves are clusters 0..n−1; merge i creates cluster
/// n+i. `a < b` are the merged cluster ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Distance between two clusters, directly from the original matrix.
/// `a` must be the smaller-id cluster's (sorted) member list.
fn cluster_distance(d: &DistanceMatrix, a: &[u32], b: &[u32], linkage: Linkage) -> f64 {
    match linkage {
        Linkage::Average => {
            let mut s = 0.0;
            for &x in a {
                for &y in b {
                    s += d.get(x as usize, y as usize);
                }
            }
            s / (a.len() * b.len()) as f64
        }
        Linkage::Complete => {
            let mut m = f64::NEG_INFINITY;
            for &x in a {
                for &y in b {
                    m = m.max(d.get(x as usize, y as usize));
                }
            }
            m
        }
        Linkage::Single => {
            let mut m = f64::INFINITY;
            for &x in a {
                for &y in b {
                    m = m.min(d.get(x as usize, y as usize));
                }
            }
            m
        }
    }
}

/// Full merge sequence (n−1 merges). Ties break toward the smallest
/// (min id, max id) pair.
pub fn agglomerate(d: &DistanceMatrix, linkage: Linkage) -> Result<Vec<Merge>> {
    let n = d.len();
    if n < 2 {
        return Err(Error::Cluster(format!("need at least 2 items to cluster, got {n}")));
    }

    struct Active {
        id: usize,
        members: Vec<u32>,
    }
    // ids only grow, so pushing merged clusters keeps this sorted by id
    let mut active: Vec<Active> = (0..n).map(|i| Active { id: i, members: vec![i as u32] }).collect();
    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            cache.insert((i, j), d.get(i, j));
        }
    }

    let mut merges = Vec::with_capacity(n - 1);
    while active.len() > 1 {
        // scan in ascending (id_a, id_b); strict < keeps the first minimum
        let mut best: Option<(f64, usize, usize)> = None;
        for p in 0..active.len() {
            for q in p + 1..active.len() {
                let key = (active[p].id, active[q].id);
                let dist = cache[&key];
                if best.map_or(true, |(bd, _, _)| dist < bd) {
                    best = Some((dist, p, q));
                }
            }
        }
        let (height, p, q) = best.expect("at least one pair");
        let id_a = active[p].id;
        let id_b = active[q].id;
        let new_id = n + merges.len();

        let b_cluster = active.remove(q);
        let a_cluster = active.remove(p);
        let mut members = a_cluster.members;
        members.extend_from_slice(&b_cluster.members);
        members.sort_unstable();
        merges.push(Merge { a: id_a, b: id_b, height, size: members.len() });

        for other in &active {
            // other.id < new_id always, so other's members lead the loop
            let dist = cluster_distance(d, &other.members, &members, linkage);
            cache.insert((other.id, new_id), dist);
        }
        active.push(Active { id: new_id, members });
    }
    Ok(merges)
}

/// Cut the merge sequence at k clusters. Returns 1-based cluster ids per
/// leaf, numbered in order of each cluster's smallest member.
pub fn cut(n: usize, merges: &[Merge], k: usize) -> Result<Vec<usize>> {
    if k < 1 || k > n {
        return Err(Error::Cluster(format!("cannot cut {n} leaves into {k} clusters")));
    }
    let mut owner: HashMap<usize, Vec<u32>> = (0..n).map(|i| (i, vec![i as u32])).collect();
    for (step, m) in merges.iter().take(n - k).enumerate() {
        let mut a = owner.remove(&m.a).expect("cluster id present");
        let b = owner.remove(&m.b).expect("cluster id present");
        a.extend_from_slice(&b);
        a.sort_unstable();
        owner.insert(n + step, a);
    }
    let mut clusters: Vec<Vec<u32>> = owner.into_values().collect();
    clusters.sort_by_key(|c| c[0]);
    let mut assignment = vec![0usize; n];
    for (idx, members) in clusters.iter().enumerate() {
        for &m in members {
            assignment[m as usize] = idx + 1;
        }
    }
    Ok(assignment)
}

/// Medoid of a member set: the member minimizing the summed distance to
/// the others (smallest index on ties). Returns (medoid, summed cost).
pub fn medoid_cost(d: &DistanceMatrix, members: &[u32]) -> (u32, f64) {
    let mut best: Option<(u32, f64)> = None;
    for &c in members {
        let cost: f64 = members.iter().map(|&x| d.get(x as usize, c as usize)).sum();
        if best.map_or(true, |(_, bc)| cost < bc) {
            best = Some((c, cost));
        }
    }
    best.expect("non-empty member set")
}

/// Within-cluster medoid cost of a k-cut.
pub fn within_cost(d: &DistanceMatrix, n: usize, merges: &[Merge], k: usize) -> Result<f64> {
    let assignment = cut(n, merges, k)?;
    let mut groups: Vec<Vec<u32>> = vec![Vec::new(); k];
    for (leaf, &c) in assignment.iter().enumerate() {
        groups[c - 1].push(leaf as u32);
    }
    Ok(groups.iter().map(|g| medoid_cost(d, g).1).sum())
}

/// Elbow rule: choose k in 2..k_max−1 maximizing the second difference
/// W(k−1) − 2W(k) + W(k+1) of the within-cost curve. Returns the chosen k
/// and the curve W(1..=k_max).
pub fn elbow_k(d: &DistanceMatrix, merges: &[Merge], k_max: usize) -> Result<(usize, Vec<f64>)> {
    let n = d.len();
    if k_max < 3 {
        return Err(Error::Cluster(format!(
            "elbow needs k_max of at least 3 (second difference), got {k_max}"
        )));
    }
    if k_max > n {
        return Err(Error::Cluster(format!("k_max {k_max} exceeds the {n} labels")));
    }
    let curve: Vec<f64> = (1..=k_max)
        .map(|k| within_cost(d, n, merges, k))
        .collect::<Result<_>>()?;
    let mut best_k = 2;
    let mut best_second_diff = f64::NEG_INFINITY;
    for k in 2..k_max {
        let second_diff = curve[k - 2] - 2.0 * curve[k - 1] + curve[k];
        if second_diff > best_second_diff {
            best_second_diff = second_diff;
            best_k = k;
        }
    }
    Ok((best_k, curve))
}
