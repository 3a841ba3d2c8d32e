//! The evolving supergraph.
//!
//! Supernodes are addressed by [`NodeId`]. Ids are never reused: the `t`-th
//! merge creates node `|V| + t`, so the id space is bounded by `2|V| - 1`.
//! Adjacency is kept as one list per supernode; each entry stores the index
//! of its twin entry in the neighbor's list (the mirror), which lets a merge
//! rewrite the neighbor side in constant time per neighbor.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `n choose 2` as a float.
#[inline]
pub fn pairs_within(n: u64) -> f64 {
    (n as f64) * (n.saturating_sub(1) as f64) / 2.0
}

/// `x / y`, with `0 / 0` taken as 0.
#[inline]
pub(crate) fn ratio(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        x / y
    }
}

const UNSET: u32 = u32::MAX;

/// One class of the vertex partition.
#[derive(Debug, Clone)]
pub struct SuperNode {
    size: u64,
    internal_edges: u64,
    d_value: f64,
    min_label: u64,
    members: Option<Vec<u32>>,
    alive: bool,
}

impl SuperNode {
    /// Number of original vertices (`n_i`).
    pub fn size(&self) -> u64 {
        self.size
    }

    /// Number of original edges with both ends inside (`e_i`).
    pub fn internal_edges(&self) -> u64 {
        self.internal_edges
    }

    /// Cached `sum over neighbors i of e_ai^2 / n_i`.
    pub fn d_value(&self) -> f64 {
        self.d_value
    }

    /// Smallest original label among the members. Used for canonical output order.
    pub fn min_label(&self) -> u64 {
        self.min_label
    }

    /// Dense ids of the member vertices, if membership is retained.
    pub fn members(&self) -> Option<&[u32]> {
        self.members.as_deref()
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    /// Density of the block induced by this supernode.
    pub fn density(&self) -> f64 {
        ratio(self.internal_edges as f64, pairs_within(self.size))
    }
}

/// Adjacency entry: `neighbor` is reached through `cross_edges` original
/// edges; `mirror` is the index of the reverse entry in the neighbor's list.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AdjEntry {
    pub(crate) neighbor: NodeId,
    pub(crate) cross_edges: u64,
    pub(crate) mirror: u32,
}

/// A simple undirected edge list over dense vertex ids `0..labels.len()`.
///
/// Self-loops and duplicate edges (in either orientation) are removed and the
/// remaining edges are stored as sorted `(lo, hi)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    labels: Vec<u64>,
    edges: Vec<(u32, u32)>,
}

impl EdgeList {
    /// Builds from raw labelled pairs, assigning dense ids in order of first
    /// appearance.
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let mut index = std::collections::HashMap::new();
        let mut labels = Vec::new();
        let mut dense = |label: u64, labels: &mut Vec<u64>| -> u32 {
            *index.entry(label).or_insert_with(|| {
                labels.push(label);
                (labels.len() - 1) as u32
            })
        };
        let mut edges = Vec::new();
        for (u, v) in pairs {
            let du = dense(u, &mut labels);
            let dv = dense(v, &mut labels);
            edges.push((du, dv));
        }
        let mut list = EdgeList { labels, edges };
        list.canonicalize();
        list
    }

    /// Builds over vertices `0..vertex_count` labelled by their own index.
    /// Vertices without edges are kept as isolated vertices.
    pub fn from_dense<I>(vertex_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let edges: Vec<(u32, u32)> = edges.into_iter().collect();
        if let Some(&(u, v)) = edges
            .iter()
            .find(|&&(u, v)| u as usize >= vertex_count || v as usize >= vertex_count)
        {
            return Err(Error::UnknownVertex(u.max(v) as u64));
        }
        let mut list = EdgeList {
            labels: (0..vertex_count as u64).collect(),
            edges,
        };
        list.canonicalize();
        Ok(list)
    }

    /// Builds from already dense edges with an explicit label per vertex.
    pub fn with_labels<I>(labels: Vec<u64>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut list = Self::from_dense(labels.len(), edges)?;
        list.labels = labels;
        Ok(list)
    }

    fn canonicalize(&mut self) {
        self.edges.retain(|&(u, v)| u != v);
        for e in &mut self.edges {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        self.edges.sort_unstable();
        self.edges.dedup();
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Original label of each dense vertex.
    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }
}

/// What a merge did, for callers that maintain per-node side structures.
#[derive(Debug, Clone, Default)]
pub struct MergeRecord {
    pub merged: Option<NodeId>,
    pub left: Option<NodeId>,
    pub right: Option<NodeId>,
    pub left_size: u64,
    pub right_size: u64,
    /// `e_ab` of the merged pair.
    pub shared_edges: u64,
    /// One entry per neighbor of the merged node, in adjacency order.
    pub neighbors: Vec<NeighborChange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborChange {
    pub node: NodeId,
    pub from_left: u64,
    pub from_right: u64,
}

/// Supernode stats used when assembling a graph from serialized parts.
#[derive(Debug, Clone)]
pub struct NodeParts {
    pub size: u64,
    pub internal_edges: u64,
    pub min_label: u64,
    pub members: Option<Vec<u32>>,
}

/// Mutable weighted supergraph.
#[derive(Debug, Clone)]
pub struct SummaryGraph {
    nodes: Vec<SuperNode>,
    adjacency: Vec<Vec<AdjEntry>>,
    alive: Vec<NodeId>,
    alive_pos: Vec<u32>,
    vertex_count: usize,
    edge_count: u64,
    labels: Vec<u64>,
    retain_members: bool,
    slot: Vec<u32>,
    last_merge_touches: usize,
}

impl SummaryGraph {
    /// Builds the trivial summary of a labelled edge list, retaining members.
    pub fn from_edge_list(pairs: &[(u64, u64)]) -> Result<Self> {
        Self::from_edges(&EdgeList::from_pairs(pairs.iter().copied()), true)
    }

    /// Every vertex becomes a singleton supernode and every edge a superedge
    /// of multiplicity one.
    pub fn from_edges(list: &EdgeList, retain_members: bool) -> Result<Self> {
        if list.vertex_count() == 0 {
            return Err(Error::EmptyGraph);
        }
        let nodes = list
            .labels()
            .iter()
            .enumerate()
            .map(|(v, &label)| SuperNode {
                size: 1,
                internal_edges: 0,
                d_value: 0.0,
                min_label: label,
                members: retain_members.then(|| vec![v as u32]),
                alive: true,
            })
            .collect();
        let superedges: Vec<(u32, u32, u64)> =
            list.edges().iter().map(|&(u, v)| (u, v, 1)).collect();
        Ok(Self::assemble(
            nodes,
            &superedges,
            list.vertex_count(),
            list.edge_count() as u64,
            list.labels().to_vec(),
            retain_members,
        ))
    }

    /// Assembles a summary from supernode stats and unordered superedges,
    /// validating every structural invariant.
    pub fn from_parts(
        vertex_count: usize,
        edge_count: u64,
        labels: Vec<u64>,
        parts: Vec<NodeParts>,
        superedges: &[(u32, u32, u64)],
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidSummary(msg));
        if parts.is_empty() {
            return Err(Error::EmptyGraph);
        }
        if labels.len() != vertex_count {
            return bad(format!(
                "{} labels for {} vertices",
                labels.len(),
                vertex_count
            ));
        }
        let retain = parts[0].members.is_some();
        if parts.iter().any(|p| p.members.is_some() != retain) {
            return bad("member lists present for some supernodes only".into());
        }
        let mut total_size = 0u64;
        let mut total_edges = 0u64;
        for (i, p) in parts.iter().enumerate() {
            if p.size == 0 {
                return bad(format!("supernode {i} is empty"));
            }
            let cap = p.size * (p.size - 1) / 2;
            if p.internal_edges > cap {
                return bad(format!(
                    "supernode {i} has {} internal edges, at most {cap} possible",
                    p.internal_edges
                ));
            }
            if let Some(m) = &p.members {
                if m.len() as u64 != p.size {
                    return bad(format!(
                        "supernode {i} lists {} members but has size {}",
                        m.len(),
                        p.size
                    ));
                }
            }
            total_size += p.size;
            total_edges += p.internal_edges;
        }
        if total_size != vertex_count as u64 {
            return bad(format!(
                "supernode sizes sum to {total_size}, expected {vertex_count}"
            ));
        }
        if retain {
            let mut seen = vec![false; vertex_count];
            for p in &parts {
                for &v in p.members.as_deref().unwrap_or_default() {
                    match seen.get_mut(v as usize) {
                        Some(s) if !*s => *s = true,
                        Some(_) => return bad(format!("vertex {} listed twice", labels[v as usize])),
                        None => return bad(format!("member {v} out of range")),
                    }
                }
            }
        }
        let mut seen_pairs = std::collections::HashSet::new();
        for &(i, j, e) in superedges {
            let (ni, nj) = match (parts.get(i as usize), parts.get(j as usize)) {
                (Some(a), Some(b)) if i != j => (a.size, b.size),
                _ => return bad(format!("superedge ({i}, {j}) has invalid endpoints")),
            };
            if e == 0 || e > ni * nj {
                return bad(format!(
                    "superedge ({i}, {j}) carries {e} edges, allowed 1..={}",
                    ni * nj
                ));
            }
            if !seen_pairs.insert((i.min(j), i.max(j))) {
                return bad(format!("duplicate superedge ({i}, {j})"));
            }
            total_edges += e;
        }
        if total_edges != edge_count {
            return bad(format!(
                "edge conservation violated: {total_edges} edges accounted, header says {edge_count}"
            ));
        }
        let nodes = parts
            .into_iter()
            .map(|p| SuperNode {
                size: p.size,
                internal_edges: p.internal_edges,
                d_value: 0.0,
                min_label: p.min_label,
                members: p.members,
                alive: true,
            })
            .collect();
        Ok(Self::assemble(
            nodes,
            superedges,
            vertex_count,
            edge_count,
            labels,
            retain,
        ))
    }

    fn assemble(
        mut nodes: Vec<SuperNode>,
        superedges: &[(u32, u32, u64)],
        vertex_count: usize,
        edge_count: u64,
        labels: Vec<u64>,
        retain_members: bool,
    ) -> Self {
        let n = nodes.len();
        let mut adjacency: Vec<Vec<AdjEntry>> = vec![Vec::new(); n];
        for &(i, j, e) in superedges {
            let pos_i = adjacency[i as usize].len() as u32;
            let pos_j = adjacency[j as usize].len() as u32;
            adjacency[i as usize].push(AdjEntry {
                neighbor: NodeId(j),
                cross_edges: e,
                mirror: pos_j,
            });
            adjacency[j as usize].push(AdjEntry {
                neighbor: NodeId(i),
                cross_edges: e,
                mirror: pos_i,
            });
        }
        for a in 0..n {
            nodes[a].d_value = adjacency[a]
                .iter()
                .map(|x| {
                    let e = x.cross_edges as f64;
                    e * e / nodes[x.neighbor.index()].size as f64
                })
                .sum();
        }
        SummaryGraph {
            nodes,
            adjacency,
            alive: (0..n as u32).map(NodeId).collect(),
            alive_pos: (0..n as u32).collect(),
            vertex_count,
            edge_count,
            labels,
            retain_members,
            slot: vec![UNSET; n],
            last_merge_touches: 0,
        }
    }

    /// `|V|` of the original graph.
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// `|E|` of the original graph.
    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    /// Current number of supernodes, `n(t)`.
    pub fn alive_count(&self) -> usize {
        self.alive.len()
    }

    /// Alive supernodes, in no particular (but deterministic) order.
    pub fn alive_nodes(&self) -> &[NodeId] {
        &self.alive
    }

    /// One past the largest id ever allocated.
    pub fn id_bound(&self) -> usize {
        self.nodes.len()
    }

    /// Upper bound on ids this graph can ever allocate.
    pub fn max_id_bound(&self) -> usize {
        self.nodes.len() + self.alive.len().saturating_sub(1)
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn retains_members(&self) -> bool {
        self.retain_members
    }

    pub fn node(&self, id: NodeId) -> Option<&SuperNode> {
        self.nodes.get(id.index())
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.node(id).is_some_and(|n| n.alive)
    }

    fn alive_node(&self, id: NodeId) -> Result<&SuperNode> {
        match self.nodes.get(id.index()) {
            Some(n) if n.alive => Ok(n),
            _ => Err(Error::DeadNode(id)),
        }
    }

    /// Number of superedges at `id`.
    pub fn degree(&self, id: NodeId) -> Result<usize> {
        self.alive_node(id)?;
        Ok(self.adjacency[id.index()].len())
    }

    /// Alive neighbors of `id` with the number of original edges to each.
    pub fn neighbors(&self, id: NodeId) -> Result<impl Iterator<Item = (NodeId, u64)> + '_> {
        self.alive_node(id)?;
        Ok(self.adjacency[id.index()]
            .iter()
            .map(|e| (e.neighbor, e.cross_edges)))
    }

    #[inline]
    pub(crate) fn entries(&self, id: NodeId) -> &[AdjEntry] {
        &self.adjacency[id.index()]
    }

    #[inline]
    pub(crate) fn node_unchecked(&self, id: NodeId) -> &SuperNode {
        &self.nodes[id.index()]
    }

    /// `e_ab`, found by scanning the shorter of the two lists.
    pub fn cross_edges(&self, a: NodeId, b: NodeId) -> Result<u64> {
        self.alive_node(a)?;
        self.alive_node(b)?;
        Ok(self.cross_edges_unchecked(a, b))
    }

    pub(crate) fn cross_edges_unchecked(&self, a: NodeId, b: NodeId) -> u64 {
        let (scan, target) = if self.adjacency[a.index()].len() <= self.adjacency[b.index()].len()
        {
            (a, b)
        } else {
            (b, a)
        };
        self.adjacency[scan.index()]
            .iter()
            .find(|e| e.neighbor == target)
            .map_or(0, |e| e.cross_edges)
    }

    /// Unordered superedges `(a, b, e_ab)` with `a < b`.
    pub fn superedges(&self) -> impl Iterator<Item = (NodeId, NodeId, u64)> + '_ {
        self.alive.iter().flat_map(move |&a| {
            self.adjacency[a.index()]
                .iter()
                .filter(move |e| a < e.neighbor)
                .map(move |e| (a, e.neighbor, e.cross_edges))
        })
    }

    pub fn superedge_count(&self) -> usize {
        self.alive
            .iter()
            .map(|a| self.adjacency[a.index()].len())
            .sum::<usize>()
            / 2
    }

    /// Neighbor-list entries written by the most recent merge.
    pub fn last_merge_touches(&self) -> usize {
        self.last_merge_touches
    }

    /// `D_a` recomputed from the adjacency list.
    pub fn recompute_d(&self, id: NodeId) -> Result<f64> {
        self.alive_node(id)?;
        Ok(self.adjacency[id.index()]
            .iter()
            .map(|e| {
                let x = e.cross_edges as f64;
                x * x / self.nodes[e.neighbor.index()].size as f64
            })
            .sum())
    }

    /// Supernode owning each original vertex.
    pub fn membership(&self) -> Result<Vec<NodeId>> {
        if !self.retain_members {
            return Err(Error::MembersNotRetained);
        }
        let mut owner = vec![NodeId(UNSET); self.vertex_count];
        for &a in &self.alive {
            for &v in self.nodes[a.index()].members.as_deref().unwrap_or_default() {
                owner[v as usize] = a;
            }
        }
        Ok(owner)
    }

    /// Merges `a` and `b` into a fresh supernode and returns its id.
    pub fn merge(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let mut record = MergeRecord::default();
        self.merge_recorded(a, b, &mut record)
    }

    /// Like [`merge`](Self::merge), also reporting the per-neighbor edge
    /// counts that went into the merged node.
    pub fn merge_recorded(
        &mut self,
        a: NodeId,
        b: NodeId,
        record: &mut MergeRecord,
    ) -> Result<NodeId> {
        if a == b || !self.is_alive(a) || !self.is_alive(b) {
            return Err(Error::InvalidMergePair(a, b));
        }
        let z = NodeId(self.nodes.len() as u32);
        let na = self.nodes[a.index()].size;
        let nb = self.nodes[b.index()].size;
        let nz = na + nb;
        let (naf, nbf, nzf) = (na as f64, nb as f64, nz as f64);

        record.neighbors.clear();
        record.merged = Some(z);
        record.left = Some(a);
        record.right = Some(b);
        record.left_size = na;
        record.right_size = nb;
        record.shared_edges = 0;

        if self.slot.len() <= z.index() {
            self.slot.resize(z.index() + 1, UNSET);
        }
        let a_list = std::mem::take(&mut self.adjacency[a.index()]);
        let b_list = std::mem::take(&mut self.adjacency[b.index()]);
        self.adjacency.push(Vec::with_capacity(a_list.len() + b_list.len()));
        let mut touches = 0usize;
        let mut shared = 0u64;

        for e in &a_list {
            if e.neighbor == b {
                shared = e.cross_edges;
                continue;
            }
            let x = e.neighbor.index();
            let idx = self.adjacency[z.index()].len() as u32;
            self.slot[x] = idx;
            let back = &mut self.adjacency[x][e.mirror as usize];
            back.neighbor = z;
            back.mirror = idx;
            touches += 1;
            self.adjacency[z.index()].push(*e);
            record.neighbors.push(NeighborChange {
                node: e.neighbor,
                from_left: e.cross_edges,
                from_right: 0,
            });
        }

        for e in &b_list {
            if e.neighbor == a {
                continue;
            }
            let x = e.neighbor.index();
            let idx = self.slot[x];
            if idx != UNSET {
                let entry = &mut self.adjacency[z.index()][idx as usize];
                entry.cross_edges += e.cross_edges;
                let back = entry.mirror as usize;
                self.adjacency[x][back].cross_edges += e.cross_edges;
                record.neighbors[idx as usize].from_right = e.cross_edges;
                touches += self.remove_entry(e.neighbor, e.mirror);
            } else {
                let idx = self.adjacency[z.index()].len() as u32;
                self.slot[x] = idx;
                let back = &mut self.adjacency[x][e.mirror as usize];
                back.neighbor = z;
                back.mirror = idx;
                touches += 1;
                self.adjacency[z.index()].push(*e);
                record.neighbors.push(NeighborChange {
                    node: e.neighbor,
                    from_left: 0,
                    from_right: e.cross_edges,
                });
            }
        }

        let mut dz = 0.0;
        for change in &record.neighbors {
            let x = change.node.index();
            self.slot[x] = UNSET;
            let (ea, eb) = (change.from_left as f64, change.from_right as f64);
            let ez = ea + eb;
            let node = &mut self.nodes[x];
            node.d_value += ez * ez / nzf - ea * ea / naf - eb * eb / nbf;
            dz += ez * ez / node.size as f64;
        }
        record.shared_edges = shared;

        let members = if self.retain_members {
            let mut ma = self.nodes[a.index()].members.take().unwrap_or_default();
            let mut mb = self.nodes[b.index()].members.take().unwrap_or_default();
            if ma.len() < mb.len() {
                std::mem::swap(&mut ma, &mut mb);
            }
            ma.extend_from_slice(&mb);
            Some(ma)
        } else {
            None
        };
        let merged = SuperNode {
            size: nz,
            internal_edges: self.nodes[a.index()].internal_edges
                + self.nodes[b.index()].internal_edges
                + shared,
            d_value: dz,
            min_label: self.nodes[a.index()]
                .min_label
                .min(self.nodes[b.index()].min_label),
            members,
            alive: true,
        };
        for dead in [a, b] {
            let node = &mut self.nodes[dead.index()];
            node.alive = false;
            node.d_value = 0.0;
            self.remove_alive(dead);
        }
        self.nodes.push(merged);
        self.alive_pos.push(self.alive.len() as u32);
        self.alive.push(z);
        self.last_merge_touches = touches;

        #[cfg(debug_assertions)]
        self.debug_check_local(z);

        Ok(z)
    }

    /// Removes entry `pos` from `x`'s list by swap-remove, fixing the mirror
    /// of the entry that moves into `pos`. Returns entries written.
    fn remove_entry(&mut self, x: NodeId, pos: u32) -> usize {
        let list = &mut self.adjacency[x.index()];
        let last = list.len() as u32 - 1;
        list.swap_remove(pos as usize);
        if pos == last {
            return 1;
        }
        let moved = list[pos as usize];
        // The moved entry may point at the node being built; its list is
        // already in `adjacency`.
        self.adjacency[moved.neighbor.index()][moved.mirror as usize].mirror = pos;
        2
    }

    fn remove_alive(&mut self, id: NodeId) {
        let pos = self.alive_pos[id.index()];
        self.alive.swap_remove(pos as usize);
        if let Some(&moved) = self.alive.get(pos as usize) {
            self.alive_pos[moved.index()] = pos;
        }
        self.alive_pos[id.index()] = UNSET;
    }

    #[cfg(debug_assertions)]
    fn debug_check_local(&self, z: NodeId) {
        for (i, e) in self.adjacency[z.index()].iter().enumerate() {
            let back = &self.adjacency[e.neighbor.index()][e.mirror as usize];
            debug_assert_eq!(back.neighbor, z, "mirror of {z}->{} is stale", e.neighbor);
            debug_assert_eq!(back.mirror as usize, i);
            debug_assert_eq!(back.cross_edges, e.cross_edges);
        }
    }

    /// Full structural audit: mirrors, bounds, edge conservation, cached `D`
    /// values (relative tolerance 1e-9) and membership. Linear in the size
    /// of the summary.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let alive_flags = self.nodes.iter().filter(|n| n.alive).count();
        if alive_flags != self.alive.len() {
            return Err(format!(
                "alive list has {} entries, {} nodes flagged alive",
                self.alive.len(),
                alive_flags
            ));
        }
        let mut size_total = 0u64;
        let mut internal_total = 0u64;
        let mut cross_total = 0u64;
        let mut seen = vec![false; self.nodes.len()];
        for (pos, &a) in self.alive.iter().enumerate() {
            let node = &self.nodes[a.index()];
            if !node.alive || self.alive_pos[a.index()] as usize != pos {
                return Err(format!("alive bookkeeping broken at {a}"));
            }
            size_total += node.size;
            internal_total += node.internal_edges;
            if node.internal_edges > node.size * (node.size - 1) / 2 {
                return Err(format!("{a}: internal edges exceed C(n, 2)"));
            }
            let mut d = 0.0;
            for (i, e) in self.adjacency[a.index()].iter().enumerate() {
                let x = e.neighbor;
                let other = self
                    .nodes
                    .get(x.index())
                    .filter(|n| n.alive)
                    .ok_or_else(|| format!("{a} lists dead neighbor {x}"))?;
                if x == a {
                    return Err(format!("{a} lists itself"));
                }
                if seen[x.index()] {
                    return Err(format!("{a} lists {x} twice"));
                }
                seen[x.index()] = true;
                if e.cross_edges == 0 || e.cross_edges > node.size * other.size {
                    return Err(format!("{a}-{x}: cross edge count {} out of range", e.cross_edges));
                }
                let back = self.adjacency[x.index()]
                    .get(e.mirror as usize)
                    .ok_or_else(|| format!("{a}-{x}: mirror index out of range"))?;
                if back.neighbor != a || back.mirror as usize != i || back.cross_edges != e.cross_edges
                {
                    return Err(format!("{a}-{x}: mirror mismatch"));
                }
                cross_total += e.cross_edges;
                let c = e.cross_edges as f64;
                d += c * c / other.size as f64;
            }
            for e in &self.adjacency[a.index()] {
                seen[e.neighbor.index()] = false;
            }
            let tol = 1e-9 * d.abs().max(node.d_value.abs()).max(f64::MIN_POSITIVE);
            if (d - node.d_value).abs() > tol {
                return Err(format!("{a}: cached D {} differs from {}", node.d_value, d));
            }
        }
        if size_total != self.vertex_count as u64 {
            return Err(format!("sizes sum to {size_total}, expected {}", self.vertex_count));
        }
        if !cross_total.is_multiple_of(2) || internal_total + cross_total / 2 != self.edge_count {
            return Err(format!(
                "edge conservation: {internal_total} internal + {}/2 cross != {}",
                cross_total, self.edge_count
            ));
        }
        if self.retain_members {
            let mut covered = vec![false; self.vertex_count];
            for &a in &self.alive {
                let node = &self.nodes[a.index()];
                let members = node
                    .members
                    .as_ref()
                    .ok_or_else(|| format!("{a} lost its members"))?;
                if members.len() as u64 != node.size {
                    return Err(format!("{a}: member count != size"));
                }
                let mut min_label = u64::MAX;
                for &v in members {
                    if std::mem::replace(&mut covered[v as usize], true) {
                        return Err(format!("vertex {v} in two supernodes"));
                    }
                    min_label = min_label.min(self.labels[v as usize]);
                }
                if min_label != node.min_label {
                    return Err(format!("{a}: stale min label"));
                }
            }
        }
        Ok(())
    }
}
