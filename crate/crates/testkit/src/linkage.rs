//! Reference agglomerative clustering: every candidate pair's distance is
//! recomputed from the original matrix at every round (no cache, no
//! incremental update), so equality with a cached implementation checks
//! that caching never changes a result. Summation order for average
//! linkage follows the stated rule: the smaller-id cluster's members,
//! ascending, drive the outer loop.

use proxyforest_core::cluster::{DistanceMatrix, Linkage, Merge};

fn pair_distance(d: &DistanceMatrix, small: &[u32], large: &[u32], linkage: Linkage) -> f64 {
    match linkage {
        Linkage::Average => {
            let mut s = 0.0;
            for &x in small {
                for &y in large {
                    s += d.get(x as usize, y as usize);
                }
            }
            s / (small.len() * large.len()) as f64
        }
        Linkage::Complete => {
            let mut m = f64::NEG_INFINITY;
            for &x in small {
                for &y in large {
                    m = m.max(d.get(x as usize, y as usize));
                }
            }
            m
        }
        Linkage::Single => {
            let mut m = f64::INFINITY;
            for &x in small {
                for &y in large {
                    m = m.min(d.get(x as usize, y as usize));
                }
            }
            m
        }
    }
}

/// Full merge sequence by exhaustive search. Clusters are kept as
/// (id, sorted members) in ascending id order; merge i creates id n+i;
/// ties break toward the first pair in ascending (id_a, id_b) scan order.
pub fn ref_agglomerate(d: &DistanceMatrix, linkage: Linkage) -> Vec<Merge> {
    let n = d.len();
    assert!(n >= 2, "need at least 2 items");
    let mut clusters: Vec<(usize, Vec<u32>)> = (0..n).map(|i| (i, vec![i as u32])).collect();
    let mut merges: Vec<Merge> = Vec::new();

    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for p in 0..clusters.len() {
            for q in p + 1..clusters.len() {
                let dist = pair_distance(d, &clusters[p].1, &clusters[q].1, linkage);
                if best.map_or(true, |(bd, _, _)| dist < bd) {
                    best = Some((dist, p, q));
                }
            }
        }
        let (height, p, q) = best.unwrap();
        let (id_b, members_b) = clusters.remove(q);
        let (id_a, members_a) = clusters.remove(p);
        let mut members = members_a;
        members.extend(members_b);
        members.sort_unstable();
        merges.push(Merge { a: id_a, b: id_b, height, size: members.len() });
        clusters.push((n + merges.len() - 1, members));
    }
    merges
}

/// Replay the first n−k merges and label the surviving clusters 1..=k in
/// order of smallest member.
pub fn ref_cut(n: usize, merges: &[Merge], k: usize) -> Vec<usize> {
    assert!((1..=n).contains(&k));
    let mut sets: Vec<(usize, Vec<u32>)> = (0..n).map(|i| (i, vec![i as u32])).collect();
    for (step, m) in merges.iter().take(n - k).enumerate() {
        let pa = sets.iter().position(|(id, _)| *id == m.a).unwrap();
        let members_a = sets.remove(pa).1;
        let pb = sets.iter().position(|(id, _)| *id == m.b).unwrap();
        let mut members = sets.remove(pb).1;
        members.extend(members_a);
        members.sort_unstable();
        sets.push((n + step, members));
    }
    sets.sort_by_key(|(_, members)| members[0]);
    let mut assignment = vec![0usize; n];
    for (label, (_, members)) in sets.iter().enumerate() {
        for &i in members {
            assignment[i as usize] = label + 1;
        }
    }
    assignment
}
