//! Greedy pair merging driven by weighted sampling.
//!
//! Each iteration draws `s` candidate pairs, two weighted node draws per
//! pair, scores every candidate by how much merging it would change the l1
//! reconstruction error, and merges the best one. A node's sampling weight
//! is the reciprocal of its own error contribution, so nodes whose merge is
//! likely to be cheap are drawn more often.
//!
//! The score of `(a, b)` is `RE(before) - RE(after)`:
//!
//! ```text
//! score = - 4 e_a^2 / C(n_a,2) - 4 D_a / n_a + 4 e_ab^2 / (n_a n_b)
//!         - 4 e_b^2 / C(n_b,2) - 4 D_b / n_b
//!         + 4 (e_a + e_b + e_ab)^2 / C(n_a + n_b, 2)
//!         + 4 / (n_a + n_b) * (D_a - e_ab^2 / n_b + D_b - e_ab^2 / n_a + 2 X)
//! ```
//!
//! where `D_a = sum_{i != a} e_ai^2 / n_i` is cached on every supernode and
//! `X = sum_{i != a, b} e_ai e_bi / n_i` is the only term that needs both
//! neighbor lists. In sketch mode `X` comes from count-min sketches of the
//! vectors `(e_ai / sqrt(n_i))_i`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cm_sketch::{CountMinSketch, HashFamily};
use crate::error::{Error, Result};
use crate::sampling_tree::SamplingTree;
use crate::summary_graph::{pairs_within, ratio, MergeRecord, NodeId, SummaryGraph};

/// How many candidate pairs to draw when `n(t)` supernodes remain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleRule {
    /// `log2 n`
    LogN,
    /// `5 log2 n`
    FiveLogN,
    /// `(log2 n)^2`
    LogSquaredN,
    Fixed(usize),
}

impl SampleRule {
    /// `max(1, ceil(rule(n)))`.
    pub fn sample_size(&self, n: usize) -> usize {
        let lg = (n.max(1) as f64).log2();
        let s = match *self {
            SampleRule::LogN => lg,
            SampleRule::FiveLogN => 5.0 * lg,
            SampleRule::LogSquaredN => lg * lg,
            SampleRule::Fixed(s) => s as f64,
        };
        (s.ceil() as usize).max(1)
    }
}

impl fmt::Display for SampleRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleRule::LogN => f.write_str("logn"),
            SampleRule::FiveLogN => f.write_str("5logn"),
            SampleRule::LogSquaredN => f.write_str("log2n"),
            SampleRule::Fixed(s) => write!(f, "fixed:{s}"),
        }
    }
}

impl FromStr for SampleRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logn" => Ok(SampleRule::LogN),
            "5logn" => Ok(SampleRule::FiveLogN),
            "log2n" => Ok(SampleRule::LogSquaredN),
            _ => {
                let n = s
                    .strip_prefix("fixed:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "sample rule must be logn, 5logn, log2n or fixed:N with N >= 1, got {s:?}"
                        ))
                    })?;
                Ok(SampleRule::Fixed(n))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    Exact,
    Sketch { width: usize, depth: usize },
}

impl fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreMode::Exact => f.write_str("exact"),
            ScoreMode::Sketch { width, depth } => write!(f, "sketch(w={width},d={depth})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummarizerConfig {
    pub target_k: usize,
    pub sample_rule: SampleRule,
    pub score_mode: ScoreMode,
    pub seed: u64,
    pub max_resample_attempts: usize,
}

impl SummarizerConfig {
    pub fn new(target_k: usize) -> Self {
        SummarizerConfig {
            target_k,
            sample_rule: SampleRule::LogN,
            score_mode: ScoreMode::Exact,
            seed: 0,
            max_resample_attempts: 64,
        }
    }

    pub fn with_sample_rule(mut self, rule: SampleRule) -> Self {
        self.sample_rule = rule;
        self
    }

    pub fn with_score_mode(mut self, mode: ScoreMode) -> Self {
        self.score_mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, alive: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.target_k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.target_k > alive {
            return bad(format!("k = {} exceeds the {alive} supernodes", self.target_k));
        }
        if self.sample_rule == SampleRule::Fixed(0) {
            return bad("fixed sample size must be at least 1".into());
        }
        if self.max_resample_attempts == 0 {
            return bad("max_resample_attempts must be at least 1".into());
        }
        if let ScoreMode::Sketch { width, depth } = self.score_mode {
            if width == 0 || depth == 0 {
                return Err(Error::ZeroSketchDimensions { width, depth });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub a: NodeId,
    pub b: NodeId,
    pub score: f64,
    pub approx: bool,
}

/// `f(a)`: minus the share of the reconstruction error attributable to `a`'s
/// own block and its superedges. Always `<= 0`.
pub fn node_cost(g: &SummaryGraph, a: NodeId) -> f64 {
    let node = g.node_unchecked(a);
    let e = node.internal_edges() as f64;
    let n = node.size() as f64;
    -4.0 * ratio(e * e, pairs_within(node.size())) - 4.0 * node.d_value() / n
}

/// Sampling weight `-1 / f(a)`, or 0 when `f(a) = 0`.
pub fn node_weight(g: &SummaryGraph, a: NodeId) -> f64 {
    let f = node_cost(g, a);
    if f == 0.0 {
        0.0
    } else {
        -1.0 / f
    }
}

struct PairStats {
    na: u64,
    ea: f64,
    da: f64,
    nb: u64,
    eb: f64,
    db: f64,
    eab: f64,
}

impl PairStats {
    fn new(g: &SummaryGraph, a: NodeId, b: NodeId, eab: u64) -> Self {
        let (x, y) = (g.node_unchecked(a), g.node_unchecked(b));
        PairStats {
            na: x.size(),
            ea: x.internal_edges() as f64,
            da: x.d_value(),
            nb: y.size(),
            eb: y.internal_edges() as f64,
            db: y.d_value(),
            eab: eab as f64,
        }
    }

    /// Score given the cross term `X = sum_{i != a,b} e_ai e_bi / n_i`.
    fn score(&self, cross: f64) -> f64 {
        let (na, nb) = (self.na as f64, self.nb as f64);
        let nz = na + nb;
        let block = |e: f64, n: u64| ratio(e * e, pairs_within(n));
        let eab2 = self.eab * self.eab;
        let merged_internal = self.ea + self.eb + self.eab;
        -4.0 * block(self.ea, self.na) - 4.0 * self.da / na + 4.0 * eab2 / (na * nb)
            - 4.0 * block(self.eb, self.nb)
            - 4.0 * self.db / nb
            + 4.0 * block(merged_internal, self.na + self.nb)
            + 4.0 / nz * ((self.da - eab2 / nb) + (self.db - eab2 / na) + 2.0 * cross)
    }
}

fn check_pair(g: &SummaryGraph, a: NodeId, b: NodeId) -> Result<()> {
    if a == b || !g.is_alive(a) || !g.is_alive(b) {
        Err(Error::InvalidMergePair(a, b))
    } else {
        Ok(())
    }
}

/// Exact scorer with a reusable scratch array indexed by node id.
#[derive(Debug, Default, Clone)]
pub struct PairScorer {
    marks: Vec<u64>,
}

impl PairScorer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Exact `RE(before) - RE(after merging a and b)`. Marks `b`'s
    /// neighbors, then walks `a`'s list.
    pub fn score_exact(&mut self, g: &SummaryGraph, a: NodeId, b: NodeId) -> Result<f64> {
        check_pair(g, a, b)?;
        if self.marks.len() < g.id_bound() {
            self.marks.resize(g.id_bound(), 0);
        }
        let (a, b) = if g.entries(a).len() <= g.entries(b).len() {
            (b, a)
        } else {
            (a, b)
        };
        for e in g.entries(b) {
            self.marks[e.neighbor.index()] = e.cross_edges;
        }
        let mut eab = 0;
        let mut cross = 0.0;
        for e in g.entries(a) {
            let i = e.neighbor;
            if i == b {
                eab = e.cross_edges;
                continue;
            }
            let m = self.marks[i.index()];
            if m != 0 {
                cross += (e.cross_edges as f64) * (m as f64) / g.node_unchecked(i).size() as f64;
            }
        }
        for e in g.entries(b) {
            self.marks[e.neighbor.index()] = 0;
        }
        Ok(PairStats::new(g, a, b, eab).score(cross))
    }
}

/// One-off exact score. Allocates scratch proportional to the id space; use
/// [`PairScorer`] in loops.
pub fn score_exact(g: &SummaryGraph, a: NodeId, b: NodeId) -> Result<f64> {
    PairScorer::new().score_exact(g, a, b)
}

/// Count-min sketch of every alive supernode's neighbor vector
/// `(e_ai / sqrt(n_i))_i`, all drawn from one hash family.
#[derive(Debug, Clone)]
pub struct SketchStore {
    family: Arc<HashFamily>,
    sketches: Vec<Option<CountMinSketch>>,
}

impl SketchStore {
    pub fn build<R: Rng + ?Sized>(
        g: &SummaryGraph,
        width: usize,
        depth: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let family = Arc::new(HashFamily::new(width, depth, rng)?);
        let mut sketches = vec![None; g.id_bound()];
        for &a in g.alive_nodes() {
            let mut s = CountMinSketch::new(family.clone());
            for e in g.entries(a) {
                let n = g.node_unchecked(e.neighbor).size() as f64;
                s.update(e.neighbor.0 as u64, e.cross_edges as f64 / n.sqrt());
            }
            sketches[a.index()] = Some(s);
        }
        Ok(SketchStore { family, sketches })
    }

    pub fn family(&self) -> &Arc<HashFamily> {
        &self.family
    }

    pub fn get(&self, id: NodeId) -> Option<&CountMinSketch> {
        self.sketches.get(id.index()).and_then(Option::as_ref)
    }

    /// Brings the store in line with a merge that already happened in the
    /// graph: the merged node gets the cell-wise sum of its parents minus
    /// their mutual coordinates, and each neighbor swaps the parents'
    /// coordinates for the merged one.
    pub fn apply_merge(&mut self, record: &MergeRecord) -> Result<()> {
        let (Some(a), Some(b), Some(z)) = (record.left, record.right, record.merged) else {
            return Err(Error::InvalidConfig("empty merge record".into()));
        };
        let sa = (record.left_size as f64).sqrt();
        let sb = (record.right_size as f64).sqrt();
        let sz = ((record.left_size + record.right_size) as f64).sqrt();
        let mut merged = self
            .sketches
            .get_mut(a.index())
            .and_then(Option::take)
            .ok_or(Error::DeadNode(a))?;
        let other = self
            .sketches
            .get_mut(b.index())
            .and_then(Option::take)
            .ok_or(Error::DeadNode(b))?;
        merged.add_assign(&other)?;
        if record.shared_edges > 0 {
            let eab = record.shared_edges as f64;
            merged.update(b.0 as u64, -eab / sb);
            merged.update(a.0 as u64, -eab / sa);
        }
        for change in &record.neighbors {
            let s = self
                .sketches
                .get_mut(change.node.index())
                .and_then(Option::as_mut)
                .ok_or(Error::DeadNode(change.node))?;
            if change.from_left > 0 {
                s.update(a.0 as u64, -(change.from_left as f64) / sa);
            }
            if change.from_right > 0 {
                s.update(b.0 as u64, -(change.from_right as f64) / sb);
            }
            s.update(
                z.0 as u64,
                (change.from_left + change.from_right) as f64 / sz,
            );
        }
        if self.sketches.len() <= z.index() {
            self.sketches.resize(z.index() + 1, None);
        }
        self.sketches[z.index()] = Some(merged);
        Ok(())
    }
}

/// Score with the cross term replaced by its sketch estimate. Never below
/// the exact score; the excess is `8 / (n_a + n_b)` times the inner-product
/// overestimate.
pub fn score_approx(
    g: &SummaryGraph,
    a: NodeId,
    b: NodeId,
    sketches: &SketchStore,
) -> Result<f64> {
    check_pair(g, a, b)?;
    let sa = sketches.get(a).ok_or(Error::DeadNode(a))?;
    let sb = sketches.get(b).ok_or(Error::DeadNode(b))?;
    let eab = g.cross_edges_unchecked(a, b);
    let (own, theirs) = if eab > 0 {
        let e = eab as f64;
        let na = g.node_unchecked(a).size() as f64;
        let nb = g.node_unchecked(b).size() as f64;
        (Some((b.0 as u64, e / nb.sqrt())), Some((a.0 as u64, e / na.sqrt())))
    } else {
        (None, None)
    };
    let cross = sa
        .inner_product_estimate_excluding(own, sb, theirs)?
        .max(0.0);
    Ok(PairStats::new(g, a, b, eab).score(cross))
}

/// Draws `s` candidate pairs. Each pair is two independent weighted draws;
/// a repeated or dead node is redrawn, at most `max_attempts` times per
/// pair. With fewer than two positive-weight nodes the draws fall back to
/// uniform over the alive nodes.
pub fn sample_pairs<R: Rng + ?Sized>(
    g: &SummaryGraph,
    tree: &SamplingTree,
    s: usize,
    rng: &mut R,
    max_attempts: usize,
) -> Result<Vec<(NodeId, NodeId)>> {
    let alive = g.alive_nodes();
    if alive.len() < 2 {
        return Err(Error::DegenerateWeights);
    }
    let mut pairs = Vec::with_capacity(s);
    if tree.positive_leaves() < 2 {
        for _ in 0..s {
            let i = rng.gen_range(0..alive.len());
            let mut j = rng.gen_range(0..alive.len() - 1);
            if j >= i {
                j += 1;
            }
            pairs.push((alive[i], alive[j]));
        }
        return Ok(pairs);
    }
    for _ in 0..s {
        let mut attempts = 0;
        let mut draw = |rng: &mut R, exclude: Option<NodeId>| -> Result<NodeId> {
            loop {
                let v = NodeId(tree.sample(rng)?);
                if Some(v) != exclude && g.is_alive(v) {
                    return Ok(v);
                }
                attempts += 1;
                if attempts > max_attempts {
                    return Err(Error::DegenerateWeights);
                }
            }
        };
        let a = draw(rng, None)?;
        let b = draw(rng, Some(a))?;
        pairs.push((a, b));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub merges: usize,
    pub pairs_scored: usize,
    pub uniform_fallbacks: usize,
}

/// The merge loop and everything it keeps in sync with the graph.
#[derive(Debug)]
pub struct Summarizer {
    graph: SummaryGraph,
    config: SummarizerConfig,
    tree: SamplingTree,
    sketches: Option<SketchStore>,
    scorer: PairScorer,
    rng: ChaCha8Rng,
    record: MergeRecord,
    stats: RunStats,
}

impl Summarizer {
    pub fn new(graph: SummaryGraph, config: SummarizerConfig) -> Result<Self> {
        config.validate(graph.alive_count())?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let weights: Vec<(u32, f64)> = graph
            .alive_nodes()
            .iter()
            .map(|&a| (a.0, node_weight(&graph, a)))
            .collect();
        let tree = SamplingTree::build(&weights)?;
        let sketches = match config.score_mode {
            ScoreMode::Exact => None,
            ScoreMode::Sketch { width, depth } => {
                Some(SketchStore::build(&graph, width, depth, &mut rng)?)
            }
        };
        Ok(Summarizer {
            graph,
            config,
            tree,
            sketches,
            scorer: PairScorer::new(),
            rng,
            record: MergeRecord::default(),
            stats: RunStats::default(),
        })
    }

    pub fn graph(&self) -> &SummaryGraph {
        &self.graph
    }

    pub fn tree(&self) -> &SamplingTree {
        &self.tree
    }

    pub fn sketches(&self) -> Option<&SketchStore> {
        self.sketches.as_ref()
    }

    pub fn stats(&self) -> RunStats {
        self.stats
    }

    pub fn into_graph(self) -> SummaryGraph {
        self.graph
    }

    pub fn is_done(&self) -> bool {
        self.graph.alive_count() <= self.config.target_k
    }

    /// Scores `a` and `b` the way the loop would.
    pub fn score(&mut self, a: NodeId, b: NodeId) -> Result<ScoredPair> {
        let (score, approx) = match &self.sketches {
            None => (self.scorer.score_exact(&self.graph, a, b)?, false),
            Some(store) => (score_approx(&self.graph, a, b, store)?, true),
        };
        Ok(ScoredPair { a, b, score, approx })
    }

    /// One iteration: sample, score, merge the best pair, refresh weights
    /// and sketches. Returns the merged pair.
    pub fn step(&mut self) -> Result<ScoredPair> {
        let s = self.config.sample_rule.sample_size(self.graph.alive_count());
        if self.tree.positive_leaves() < 2 {
            self.stats.uniform_fallbacks += 1;
        }
        let pairs = sample_pairs(
            &self.graph,
            &self.tree,
            s,
            &mut self.rng,
            self.config.max_resample_attempts,
        )?;
        let mut best: Option<ScoredPair> = None;
        for (a, b) in pairs {
            let candidate = self.score(a, b)?;
            if best.is_none_or(|p| candidate.score > p.score) {
                best = Some(candidate);
            }
        }
        self.stats.pairs_scored += s;
        let best = best.ok_or(Error::DegenerateWeights)?;

        let z = self
            .graph
            .merge_recorded(best.a, best.b, &mut self.record)?;
        self.tree.delete(best.a.0)?;
        self.tree.delete(best.b.0)?;
        self.tree.insert(z.0, node_weight(&self.graph, z))?;
        for change in &self.record.neighbors {
            self.tree
                .update_weight(change.node.0, node_weight(&self.graph, change.node))?;
        }
        if let Some(store) = &mut self.sketches {
            store.apply_merge(&self.record)?;
        }
        self.stats.merges += 1;
        Ok(best)
    }

    /// Merges until `target_k` supernodes remain.
    pub fn run(&mut self) -> Result<RunStats> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(self.stats)
    }
}

/// Summarizes `g` down to `cfg.target_k` supernodes.
pub fn summarize(g: SummaryGraph, cfg: &SummarizerConfig) -> Result<SummaryGraph> {
    let mut summarizer = Summarizer::new(g, cfg.clone())?;
    summarizer.run()?;
    Ok(summarizer.into_graph())
}
