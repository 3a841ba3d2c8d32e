//! Sum tree for weighted sampling over a changing population.
//!
//! Leaves live in a fixed array of `capacity` slots padded to a power of two;
//! every internal node holds the sum of its two children. A draw walks one
//! root-to-leaf path, and a weight change rewrites one leaf-to-root path, so
//! both are `O(log capacity)`. Freed slots are handed out again lowest index
//! first.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;

use crate::error::{Error, Result};

const UNSET: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct SamplingTree {
    /// Heap layout: root at 1, children of `i` at `2i` and `2i + 1`, leaf
    /// slot `s` at `slots + s`.
    sums: Vec<f64>,
    slots: usize,
    capacity: usize,
    slot_vertex: Vec<u32>,
    leaf_of: Vec<u32>,
    free: BinaryHeap<Reverse<u32>>,
    positive: usize,
    last_visits: usize,
}

fn check_weight(vertex: u32, weight: f64) -> Result<()> {
    if weight >= 0.0 && weight.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeWeight { vertex, weight })
    }
}

/// Largest float strictly below a positive `x`.
fn just_below(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    f64::from_bits(x.to_bits() - 1)
}

impl SamplingTree {
    /// Builds a tree with one leaf per entry, in list order, bottom-up in
    /// linear time.
    pub fn build(weights: &[(u32, f64)]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let capacity = weights.len();
        let slots = capacity.next_power_of_two();
        let mut sums = vec![0.0; 2 * slots];
        let mut slot_vertex = vec![UNSET; slots];
        let max_vertex = weights.iter().map(|&(v, _)| v).max().unwrap_or(0);
        let mut leaf_of = vec![UNSET; max_vertex as usize + 1];
        let mut positive = 0;
        for (slot, &(vertex, weight)) in weights.iter().enumerate() {
            check_weight(vertex, weight)?;
            if leaf_of[vertex as usize] != UNSET {
                return Err(Error::DuplicateLeaf(vertex));
            }
            leaf_of[vertex as usize] = slot as u32;
            slot_vertex[slot] = vertex;
            sums[slots + slot] = weight;
            positive += usize::from(weight > 0.0);
        }
        for i in (1..slots).rev() {
            sums[i] = sums[2 * i] + sums[2 * i + 1];
        }
        Ok(SamplingTree {
            sums,
            slots,
            capacity,
            slot_vertex,
            leaf_of,
            free: BinaryHeap::new(),
            positive,
            last_visits: 0,
        })
    }

    /// Sum of all leaf weights.
    pub fn total(&self) -> f64 {
        self.sums[1]
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Tree height, `ceil(log2(capacity))`.
    pub fn height(&self) -> usize {
        self.slots.trailing_zeros() as usize
    }

    /// Number of occupied leaves.
    pub fn len(&self) -> usize {
        self.capacity - self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of occupied leaves with positive weight.
    pub fn positive_leaves(&self) -> usize {
        self.positive
    }

    pub fn contains(&self, vertex: u32) -> bool {
        self.slot_of(vertex).is_some()
    }

    pub fn weight(&self, vertex: u32) -> Option<f64> {
        self.slot_of(vertex).map(|s| self.sums[self.slots + s])
    }

    /// Tree nodes visited by the last draw or mutation.
    pub fn last_visits(&self) -> usize {
        self.last_visits
    }

    /// Occupied leaves as `(vertex, weight)` in slot order.
    pub fn leaves(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        (0..self.capacity).filter_map(move |s| {
            let v = self.slot_vertex[s];
            (v != UNSET).then(|| (v, self.sums[self.slots + s]))
        })
    }

    fn slot_of(&self, vertex: u32) -> Option<usize> {
        match self.leaf_of.get(vertex as usize) {
            Some(&s) if s != UNSET => Some(s as usize),
            _ => None,
        }
    }

    /// Returns the vertex whose cumulative range `[lo, lo + w)` contains `r`,
    /// ranges laid out in slot order.
    pub fn get_leaf(&self, r: f64) -> Result<u32> {
        self.get_leaf_traced(r).map(|(v, _)| v)
    }

    /// [`get_leaf`](Self::get_leaf) that also reports the number of tree
    /// nodes visited.
    pub fn get_leaf_traced(&self, r: f64) -> Result<(u32, usize)> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        if !(0.0..total).contains(&r) {
            return Err(Error::SamplePointOutOfRange { point: r, total });
        }
        let mut r = r;
        let mut node = 1;
        let mut visits = 1;
        while node < self.slots {
            let left = self.sums[2 * node];
            let right = self.sums[2 * node + 1];
            if r < left {
                node *= 2;
            } else if right > 0.0 {
                // Rounding in the sums can push `r` just past the right
                // subtree; clamp it back in.
                r = (r - left).min(just_below(right));
                node = 2 * node + 1;
            } else {
                r = just_below(left);
                node *= 2;
            }
            visits += 1;
        }
        let vertex = self.slot_vertex[node - self.slots];
        debug_assert!(vertex != UNSET, "descent ended on an empty slot");
        Ok((vertex, visits))
    }

    /// Draws a vertex with probability proportional to its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u32> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        let mut r = rng.gen::<f64>() * total;
        if r >= total {
            r = just_below(total);
        }
        self.get_leaf(r)
    }

    /// Replaces a leaf weight and refreshes its ancestors.
    pub fn update_weight(&mut self, vertex: u32, weight: f64) -> Result<()> {
        check_weight(vertex, weight)?;
        let slot = self.slot_of(vertex).ok_or(Error::UnknownLeaf(vertex))?;
        self.set_slot(slot, weight);
        Ok(())
    }

    /// Zeroes the leaf of `vertex` and frees its slot.
    pub fn delete(&mut self, vertex: u32) -> Result<()> {
        let slot = self.slot_of(vertex).ok_or(Error::UnknownLeaf(vertex))?;
        self.set_slot(slot, 0.0);
        self.slot_vertex[slot] = UNSET;
        self.leaf_of[vertex as usize] = UNSET;
        self.free.push(Reverse(slot as u32));
        Ok(())
    }

    /// Binds the lowest free slot to `vertex`.
    pub fn insert(&mut self, vertex: u32, weight: f64) -> Result<()> {
        check_weight(vertex, weight)?;
        if self.contains(vertex) {
            return Err(Error::DuplicateLeaf(vertex));
        }
        let Reverse(slot) = self.free.pop().ok_or(Error::TreeFull)?;
        let slot = slot as usize;
        if self.leaf_of.len() <= vertex as usize {
            self.leaf_of.resize(vertex as usize + 1, UNSET);
        }
        self.leaf_of[vertex as usize] = slot as u32;
        self.slot_vertex[slot] = vertex;
        self.set_slot(slot, weight);
        Ok(())
    }

    fn set_slot(&mut self, slot: usize, weight: f64) {
        let mut node = self.slots + slot;
        let old = self.sums[node];
        if old > 0.0 {
            self.positive -= 1;
        }
        if weight > 0.0 {
            self.positive += 1;
        }
        self.sums[node] = weight;
        let mut visits = 1;
        while node > 1 {
            node /= 2;
            // Recomputed from the children rather than shifted by a delta,
            // so sums never accumulate drift across updates.
            self.sums[node] = self.sums[2 * node] + self.sums[2 * node + 1];
            visits += 1;
        }
        self.last_visits = visits;
    }

    /// Verifies the parent-sum invariant within `1e-9 * total`.
    pub fn check_sums(&self) -> std::result::Result<(), String> {
        let tol = 1e-9 * self.total().abs();
        for i in 1..self.slots {
            let expect = self.sums[2 * i] + self.sums[2 * i + 1];
            if (self.sums[i] - expect).abs() > tol {
                return Err(format!("node {i}: {} != {}", self.sums[i], expect));
            }
        }
        for s in 0..self.slots {
            let w = self.sums[self.slots + s];
            if w < 0.0 {
                return Err(format!("slot {s} has negative weight {w}"));
            }
            if self.slot_vertex[s] == UNSET && w != 0.0 {
                return Err(format!("free slot {s} carries weight {w}"));
            }
        }
        Ok(())
    }
}
