#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use graphsum::summary_graph::{EdgeList, NodeId, SummaryGraph};
use rand::seq::SliceRandom;
use rand::Rng;

/// Erdos-Renyi G(n, p) on vertices `0..n`, isolated vertices kept.
pub fn gnp<R: Rng>(n: usize, p: f64, rng: &mut R) -> EdgeList {
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    EdgeList::from_dense(n, edges).unwrap()
}

/// `m` distinct uniformly random edges on `n` vertices.
pub fn gnm<R: Rng>(n: usize, m: usize, rng: &mut R) -> EdgeList {
    let mut seen = HashSet::with_capacity(m);
    while seen.len() < m {
        let u = rng.gen_range(0..n as u32);
        let v = rng.gen_range(0..n as u32);
        if u != v {
            seen.insert((u.min(v), u.max(v)));
        }
    }
    let mut edges: Vec<_> = seen.into_iter().collect();
    edges.sort_unstable();
    EdgeList::from_dense(n, edges).unwrap()
}

/// Random block assignment of `0..n` into at most `n` blocks.
pub fn random_partition<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let blocks = rng.gen_range(1..=n);
    let mut part: Vec<usize> = (0..n).map(|_| rng.gen_range(0..blocks)).collect();
    part.shuffle(rng);
    part
}

/// Applies `partition` to a fresh summary by merging block members in turn.
/// Vertex `v` starts as supernode `v`.
pub fn summarize_by_partition(g: &SummaryGraph, partition: &[usize]) -> SummaryGraph {
    let mut s = g.clone();
    let mut head: HashMap<usize, NodeId> = HashMap::new();
    for (v, &block) in partition.iter().enumerate() {
        let id = NodeId(v as u32);
        match head.get(&block) {
            Some(&h) => {
                let z = s.merge(h, id).unwrap();
                head.insert(block, z);
            }
            None => {
                head.insert(block, id);
            }
        }
    }
    s
}

/// Sum over ordered vertex pairs `u != v` of `|A_uv - Ahat_uv|`, with
/// `Ahat` the block edge density, computed straight from the partition.
pub fn brute_re(n: usize, edges: &[(u32, u32)], partition: &[usize]) -> f64 {
    let adjacent: HashSet<(u32, u32)> = edges.iter().copied().collect();
    let mut size: HashMap<usize, f64> = HashMap::new();
    for &b in partition {
        *size.entry(b).or_default() += 1.0;
    }
    let mut block_edges: HashMap<(usize, usize), f64> = HashMap::new();
    for &(u, v) in edges {
        let (a, b) = (partition[u as usize], partition[v as usize]);
        *block_edges.entry((a.min(b), a.max(b))).or_default() += 1.0;
    }
    let mut total = 0.0;
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let (a, b) = (partition[u], partition[v]);
            let key = (a.min(b), a.max(b));
            let pairs = if a == b {
                size[&a] * (size[&a] - 1.0) / 2.0
            } else {
                size[&a] * size[&b]
            };
            let density = block_edges.get(&key).copied().unwrap_or(0.0) / pairs;
            let (lo, hi) = (u.min(v) as u32, u.max(v) as u32);
            let actual = if adjacent.contains(&(lo, hi)) { 1.0 } else { 0.0 };
            total += (actual - density).abs();
        }
    }
    total
}

pub fn path3() -> SummaryGraph {
    SummaryGraph::from_edge_list(&[(1, 2), (2, 3)]).unwrap()
}

/// Star with centre 0 and three leaves.
pub fn star3() -> SummaryGraph {
    SummaryGraph::from_edge_list(&[(0, 1), (0, 2), (0, 3)]).unwrap()
}
