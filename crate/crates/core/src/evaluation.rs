//! Reconstruction error and structural queries answered from a summary.
//!
//! A summary reconstructs the adjacency matrix as block densities: inside
//! supernode `i` every off-diagonal cell is `pi_i = e_i / C(n_i, 2)`, between
//! `i` and `j` every cell is `pi_ij = e_ij / (n_i n_j)`. Everything here is
//! read-only over a frozen summary.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::summary_graph::{pairs_within, ratio, NodeId, SummaryGraph};

/// Vertex count above which [`build_report`] skips the quadratic oracle by
/// default.
pub const DEFAULT_ORACLE_LIMIT: usize = 5000;

/// Closed-form l1 reconstruction error, from supernode and superedge stats
/// only:
/// `sum_i (4 e_i - 4 e_i^2 / C(n_i,2)) + sum_{i != j} (2 e_ij - 2 e_ij^2 / (n_i n_j))`.
pub fn re_closed(g: &SummaryGraph) -> f64 {
    let mut re = 0.0;
    for &a in g.alive_nodes() {
        let node = g.node_unchecked(a);
        let e = node.internal_edges() as f64;
        re += 4.0 * e - 4.0 * ratio(e * e, pairs_within(node.size()));
    }
    for (a, b, e) in g.superedges() {
        let e = e as f64;
        let cells = (g.node_unchecked(a).size() * g.node_unchecked(b).size()) as f64;
        // Both orders of the pair.
        re += 2.0 * (2.0 * e - 2.0 * e * e / cells);
    }
    re
}

/// Closed-form squared l2 error. Every block with density `p` over `N`
/// cells holding `e` ones contributes `e (1 - p)`, which makes this exactly
/// half of [`re_closed`] up to rounding.
pub fn re_l2_squared_closed(g: &SummaryGraph) -> f64 {
    let mut total = 0.0;
    for &a in g.alive_nodes() {
        let node = g.node_unchecked(a);
        let e = node.internal_edges() as f64;
        total += 2.0 * e * (1.0 - node.density());
    }
    for (a, b, e) in g.superedges() {
        let e = e as f64;
        let cells = (g.node_unchecked(a).size() * g.node_unchecked(b).size()) as f64;
        total += 2.0 * e * (1.0 - e / cells);
    }
    total
}

/// Adjacency lists of a graph that has not been merged yet, where supernode
/// `v` is vertex `v`.
fn original_adjacency(original: &SummaryGraph) -> Result<Vec<Vec<u32>>> {
    if original.alive_count() != original.vertex_count()
        || original.id_bound() != original.vertex_count()
    {
        return Err(Error::InvalidConfig(
            "reference graph must be the unmerged original".into(),
        ));
    }
    Ok((0..original.vertex_count() as u32)
        .map(|v| {
            original
                .entries(NodeId(v))
                .iter()
                .map(|e| e.neighbor.0)
                .collect()
        })
        .collect())
}

/// Per-vertex view of a summary: owner supernode of each vertex plus
/// superedge lookups. Requires retained membership.
#[derive(Debug)]
pub struct Reconstruction<'a> {
    summary: &'a SummaryGraph,
    owner: Vec<NodeId>,
    cross: HashMap<(NodeId, NodeId), u64>,
    cross_total: HashMap<NodeId, u64>,
}

impl<'a> Reconstruction<'a> {
    pub fn new(summary: &'a SummaryGraph) -> Result<Self> {
        let owner = summary.membership()?;
        let mut cross = HashMap::new();
        let mut cross_total: HashMap<NodeId, u64> = HashMap::new();
        for (a, b, e) in summary.superedges() {
            cross.insert((a, b), e);
            *cross_total.entry(a).or_default() += e;
            *cross_total.entry(b).or_default() += e;
        }
        Ok(Reconstruction {
            summary,
            owner,
            cross,
            cross_total,
        })
    }

    fn owner_of(&self, v: u32) -> Result<NodeId> {
        self.owner
            .get(v as usize)
            .copied()
            .ok_or(Error::UnknownVertex(v as u64))
    }

    /// `A-bar(u, v)` for dense vertex ids.
    pub fn expected_adjacency(&self, u: u32, v: u32) -> Result<f64> {
        let (i, j) = (self.owner_of(u)?, self.owner_of(v)?);
        if u == v {
            return Ok(0.0);
        }
        let g = self.summary;
        if i == j {
            return Ok(g.node_unchecked(i).density());
        }
        let e = self.cross.get(&(i.min(j), i.max(j))).copied().unwrap_or(0);
        let cells = (g.node_unchecked(i).size() * g.node_unchecked(j).size()) as f64;
        Ok(e as f64 / cells)
    }

    /// Row sum of `A-bar` for `v`: the average degree inside `v`'s supernode,
    /// `(2 e_i + sum_j e_ij) / n_i`.
    pub fn degree_estimate(&self, v: u32) -> Result<f64> {
        let i = self.owner_of(v)?;
        let node = self.summary.node_unchecked(i);
        let cross = self.cross_total.get(&i).copied().unwrap_or(0);
        Ok((2 * node.internal_edges() + cross) as f64 / node.size() as f64)
    }

    /// Degree-proportional centrality `d-bar(v) / 2|E|`.
    pub fn centrality_estimate(&self, v: u32) -> Result<f64> {
        let d = self.degree_estimate(v)?;
        Ok(ratio(d, 2.0 * self.summary.edge_count() as f64))
    }
}

/// Brute-force `(sum |A-bar - A|, sum |A-bar - A|^2)` over all ordered
/// vertex pairs. Quadratic; refuses graphs above `oracle_limit` vertices.
pub fn re_brute_both(
    original: &SummaryGraph,
    summary: &SummaryGraph,
    oracle_limit: usize,
) -> Result<(f64, f64)> {
    let n = original.vertex_count();
    if n > oracle_limit {
        return Err(Error::OracleLimit {
            vertices: n,
            limit: oracle_limit,
        });
    }
    if summary.vertex_count() != n {
        return Err(Error::InvalidConfig(
            "summary and original disagree on |V|".into(),
        ));
    }
    let adjacency = original_adjacency(original)?;
    let recon = Reconstruction::new(summary)?;
    let mut row = vec![0.0f64; n];
    let (mut l1, mut l2) = (0.0, 0.0);
    for u in 0..n as u32 {
        for &v in &adjacency[u as usize] {
            row[v as usize] = 1.0;
        }
        for v in 0..n as u32 {
            let d = (recon.expected_adjacency(u, v)? - row[v as usize]).abs();
            l1 += d;
            l2 += d * d;
        }
        for &v in &adjacency[u as usize] {
            row[v as usize] = 0.0;
        }
    }
    Ok((l1, l2))
}

/// Brute-force l1 reconstruction error.
pub fn re_brute(original: &SummaryGraph, summary: &SummaryGraph, oracle_limit: usize) -> Result<f64> {
    re_brute_both(original, summary, oracle_limit).map(|(l1, _)| l1)
}

/// Sum of `weight(u, v, w)` over all triangles of an undirected graph given
/// as adjacency lists with a per-edge value, using degree ordering so each
/// triangle is found once in `O(m^1.5)`.
fn for_each_triangle<F>(adjacency: &[Vec<(u32, f64)>], mut visit: F)
where
    F: FnMut(u32, u32, u32, f64, f64, f64),
{
    let n = adjacency.len();
    let rank = |v: u32| (adjacency[v as usize].len(), v);
    let forward: Vec<Vec<(u32, f64)>> = (0..n as u32)
        .map(|u| {
            adjacency[u as usize]
                .iter()
                .copied()
                .filter(|&(v, _)| rank(v) > rank(u))
                .collect()
        })
        .collect();
    let mut mark: Vec<Option<f64>> = vec![None; n];
    for u in 0..n as u32 {
        for &(v, w_uv) in &forward[u as usize] {
            mark[v as usize] = Some(w_uv);
        }
        for &(v, w_uv) in &forward[u as usize] {
            for &(w, w_vw) in &forward[v as usize] {
                if let Some(w_uw) = mark[w as usize] {
                    visit(u, v, w, w_uv, w_vw, w_uw);
                }
            }
        }
        for &(v, _) in &forward[u as usize] {
            mark[v as usize] = None;
        }
    }
}

/// Exact triangle count of the unmerged original graph.
pub fn triangle_count_exact(original: &SummaryGraph) -> Result<u64> {
    let adjacency: Vec<Vec<(u32, f64)>> = original_adjacency(original)?
        .into_iter()
        .map(|l| l.into_iter().map(|v| (v, 1.0)).collect())
        .collect();
    let mut count = 0u64;
    for_each_triangle(&adjacency, |_, _, _, _, _, _| count += 1);
    Ok(count)
}

fn choose3(n: u64) -> f64 {
    let n = n as f64;
    n * (n - 1.0) * (n - 2.0) / 6.0
}

/// Expected number of triangles under the reconstruction: triangles inside
/// one supernode, with two corners in one supernode and one in another, and
/// across three supernodes (enumerated over supergraph triangles only).
pub fn triangle_estimate(g: &SummaryGraph) -> f64 {
    let alive = g.alive_nodes();
    let mut local = vec![u32::MAX; g.id_bound()];
    for (i, a) in alive.iter().enumerate() {
        local[a.index()] = i as u32;
    }
    let size = |i: u32| g.node_unchecked(alive[i as usize]).size();
    let density = |i: u32| g.node_unchecked(alive[i as usize]).density();

    let mut total = 0.0;
    for i in 0..alive.len() as u32 {
        total += choose3(size(i)) * density(i).powi(3);
    }
    let mut adjacency: Vec<Vec<(u32, f64)>> = vec![Vec::new(); alive.len()];
    for (a, b, e) in g.superedges() {
        let (i, j) = (local[a.index()], local[b.index()]);
        let (ni, nj) = (size(i), size(j));
        let p = e as f64 / (ni * nj) as f64;
        total += p * p
            * (pairs_within(ni) * nj as f64 * density(i) + pairs_within(nj) * ni as f64 * density(j));
        adjacency[i as usize].push((j, p));
        adjacency[j as usize].push((i, p));
    }
    for_each_triangle(&adjacency, |i, j, l, p_ij, p_jl, p_il| {
        total += (size(i) * size(j) * size(l)) as f64 * p_ij * p_jl * p_il;
    });
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryErrorReport {
    pub re_l1: f64,
    /// `re_l1 / |V|`.
    pub re_l1_normalized: f64,
    pub re_l2_squared: f64,
    /// Brute-force l1 error, when the graph is under the oracle limit.
    pub re_brute: Option<f64>,
    pub degree_err_avg: Option<f64>,
    pub degree_err_std: Option<f64>,
    pub centrality_err_avg: Option<f64>,
    pub centrality_err_std: Option<f64>,
    pub triangles_exact: Option<u64>,
    pub triangles_estimate: f64,
    /// `(estimate - exact) / exact`.
    pub triangle_relative_err: Option<f64>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    pub oracle_limit: usize,
    /// Skips recounting when the original's triangle count is already known.
    pub exact_triangles: Option<u64>,
    pub elapsed_seconds: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            oracle_limit: DEFAULT_ORACLE_LIMIT,
            exact_triangles: None,
            elapsed_seconds: 0.0,
        }
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Error figures of `summary` against the unmerged `original`. Query errors
/// need retained membership and are left empty otherwise. When the brute
/// oracle runs, it must agree with the closed form.
pub fn build_report(
    original: &SummaryGraph,
    summary: &SummaryGraph,
    options: &ReportOptions,
) -> Result<QueryErrorReport> {
    let re_l1 = re_closed(summary);
    let n = summary.vertex_count();
    let mut report = QueryErrorReport {
        re_l1,
        re_l1_normalized: re_l1 / n as f64,
        re_l2_squared: re_l2_squared_closed(summary),
        re_brute: None,
        degree_err_avg: None,
        degree_err_std: None,
        centrality_err_avg: None,
        centrality_err_std: None,
        triangles_exact: None,
        triangles_estimate: triangle_estimate(summary),
        triangle_relative_err: None,
        elapsed_seconds: options.elapsed_seconds,
    };
    let adjacency = original_adjacency(original)?;
    if summary.retains_members() {
        if n <= options.oracle_limit {
            let brute = re_brute(original, summary, options.oracle_limit)?;
            if (brute - re_l1).abs() > 1e-9 * brute.abs().max(1.0) {
                return Err(Error::OracleMismatch {
                    closed: re_l1,
                    brute,
                });
            }
            report.re_brute = Some(brute);
        }
        let recon = Reconstruction::new(summary)?;
        let two_m = 2.0 * summary.edge_count() as f64;
        let mut degree_err = Vec::with_capacity(n);
        let mut centrality_err = Vec::with_capacity(n);
        for v in 0..n as u32 {
            let truth = adjacency[v as usize].len() as f64;
            let est = recon.degree_estimate(v)?;
            degree_err.push((est - truth).abs());
            centrality_err.push((ratio(est, two_m) - ratio(truth, two_m)).abs());
        }
        let (avg, std) = mean_std(&degree_err);
        report.degree_err_avg = Some(avg);
        report.degree_err_std = Some(std);
        let (avg, std) = mean_std(&centrality_err);
        report.centrality_err_avg = Some(avg);
        report.centrality_err_std = Some(std);
    }
    let exact = match options.exact_triangles {
        Some(t) => t,
        None => triangle_count_exact(original)?,
    };
    report.triangles_exact = Some(exact);
    report.triangle_relative_err = Some(if exact == 0 {
        if report.triangles_estimate == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (report.triangles_estimate - exact as f64) / exact as f64
    });
    Ok(report)
}
