//! One level of an interpolation search tree and the whole-subtree
//! operations on it: ideal construction, interpolation lookup and flatten.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::Config;
use crate::key::Key;
use crate::prim;

/// Child pointer; `None` is an empty subtree.
pub type Link<K> = Option<Box<Node<K>>>;

/// Interval `[lo, hi]` of coordinates a node interpolates over.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted bounds [{lo}, {hi}]");
        Bounds { lo, hi }
    }

    /// Bounds spanning exactly the coordinates of the given sorted keys.
    pub fn spanning<K: Key>(keys: &[K]) -> Option<Self> {
        Some(Bounds::new(keys.first()?.coord(), keys.last()?.coord()))
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub(crate) fn degenerate(&self) -> bool {
        self.hi.partial_cmp(&self.lo) != Some(core::cmp::Ordering::Greater)
            || !(self.hi - self.lo).is_finite()
    }
}

/// A node of the tree.
///
/// Internal nodes hold the sampled representatives `rep`, `rep.len() + 1`
/// children and the interpolation table `id`. Leaves hold every key of their
/// subtree in `rep` and have neither children nor table (both vectors empty).
/// Deleted representatives stay in place with `marked` set until the subtree
/// is rebuilt.
#[derive(Clone, Debug)]
pub struct Node<K> {
    pub(crate) rep: Vec<K>,
    pub(crate) marked: Vec<bool>,
    pub(crate) children: Vec<Link<K>>,
    pub(crate) id: Vec<u32>,
    pub(crate) bounds: Bounds,
    pub(crate) c_ops: usize,
    pub(crate) s_init: usize,
    pub(crate) s_live: usize,
}

/// Where a key falls inside one node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Located {
    /// Number of representatives strictly below the key; also the child slot.
    pub slot: usize,
    /// Set when the key equals `rep[slot]`, marked or not.
    pub found_at_rep: Option<usize>,
}

impl<K: Key> Node<K> {
    pub fn rep(&self) -> &[K] {
        &self.rep
    }

    pub fn marked(&self) -> &[bool] {
        &self.marked
    }

    /// Child subtrees; empty for a leaf.
    pub fn children(&self) -> &[Link<K>] {
        &self.children
    }

    pub fn child(&self, slot: usize) -> Option<&Node<K>> {
        self.children.get(slot).and_then(|c| c.as_deref())
    }

    /// Interpolation table; empty for a leaf.
    pub fn id(&self) -> &[u32] {
        &self.id
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// Updates routed through this node since its last rebuild.
    pub fn c_ops(&self) -> usize {
        self.c_ops
    }

    /// Live size right after the last rebuild.
    pub fn s_init(&self) -> usize {
        self.s_init
    }

    /// Current live size of the subtree.
    pub fn s_live(&self) -> usize {
        self.s_live
    }

    pub fn is_leaf(&self) -> bool {
        self.id.is_empty()
    }

    pub fn marked_count(&self) -> usize {
        self.marked.iter().filter(|&&m| m).count()
    }

    /// Bounds of the subtree in `slot`.
    pub(crate) fn child_bounds(&self, slot: usize) -> Bounds {
        child_bounds(&self.rep, self.bounds, slot)
    }

    /// Finds the slot of `key` using the interpolation table as a first guess.
    ///
    /// The table entry for the bucket containing `coord(key)` brackets the
    /// answer; the bracket is checked with exact comparisons and searched by
    /// bisection. If floating-point rounding produced a wrong bracket the
    /// search falls back to the whole representative array.
    pub fn locate_child(&self, key: K) -> Located {
        let slot = self.rank_of(key);
        let found_at_rep = (slot < self.rep.len() && self.rep[slot] == key).then_some(slot);
        Located { slot, found_at_rep }
    }

    fn rank_of(&self, key: K) -> usize {
        let rep = &self.rep;
        if self.id.len() <= 1 || self.bounds.degenerate() {
            return rep.partition_point(|r| *r < key);
        }
        let m = self.id.len();
        let Bounds { lo, hi } = self.bounds;
        let t = (key.coord() - lo) * m as f64 / (hi - lo);
        let bucket = if t.is_nan() || t <= 1.0 {
            1
        } else if t >= m as f64 {
            m
        } else {
            let floor = t as usize;
            if (floor as f64) < t {
                floor + 1
            } else {
                floor
            }
        };
        let upper = self.id[bucket - 1] as usize;
        let lower = if bucket >= 2 {
            self.id[bucket - 2] as usize
        } else {
            0
        };
        let lower_ok = lower == 0 || rep[lower - 1] < key;
        let upper_ok = upper == rep.len() || rep[upper] >= key;
        if lower <= upper && lower_ok && upper_ok {
            lower + rep[lower..upper].partition_point(|r| *r < key)
        } else {
            rep.partition_point(|r| *r < key)
        }
    }
}

pub(crate) fn child_bounds<K: Key>(rep: &[K], bounds: Bounds, slot: usize) -> Bounds {
    let lo = if slot == 0 {
        bounds.lo
    } else {
        rep[slot - 1].coord()
    };
    let hi = if slot == rep.len() {
        bounds.hi
    } else {
        rep[slot].coord()
    };
    Bounds::new(lo, hi)
}

/// Interpolation table for `rep` over `bounds` with `m` buckets.
///
/// Entry `i - 1` (for `i` in `1..=m`) is the number of representatives whose
/// coordinate lies strictly below the threshold `lo + i * (hi - lo) / m`,
/// which is the index `j` with `rep[j] < t_i <= rep[j + 1]` in 1-based terms.
pub fn compute_id<K: Key>(rep: &[K], bounds: Bounds, m: usize) -> Vec<u32> {
    assert!(m >= 1, "interpolation table needs at least one entry");
    let Bounds { lo, hi } = bounds;
    let width = hi - lo;
    let threshold = |i: usize| lo + i as f64 * width / m as f64;
    if m <= prim::DEFAULT_GRAIN {
        let mut out = Vec::with_capacity(m);
        let mut j = 0;
        for i in 1..=m {
            let t = threshold(i);
            while j < rep.len() && rep[j].coord() < t {
                j += 1;
            }
            out.push(j as u32);
        }
        return out;
    }
    let thresholds = prim::tabulate(m, prim::DEFAULT_GRAIN, |i| threshold(i + 1));
    prim::rank_by(&thresholds, rep, |r, t| r.coord() < *t, prim::DEFAULT_GRAIN)
        .into_iter()
        .map(|j| j as u32)
        .collect()
}

/// Builds an ideal subtree over strictly increasing `keys`.
///
/// With `s = floor(sqrt(n))` the representatives are the keys at 1-based
/// positions `s, 2s, ..` strictly below `n`; the gaps between them become
/// ideal children, built in parallel for large inputs.
pub fn build_ideal<K: Key>(keys: &[K], bounds: Bounds, config: &Config) -> Link<K> {
    debug_assert!(
        keys.windows(2).all(|w| w[0] < w[1]),
        "keys must be strictly increasing"
    );
    if keys.is_empty() {
        return None;
    }
    Some(Box::new(build_node(keys, bounds, config)))
}

fn build_node<K: Key>(keys: &[K], bounds: Bounds, config: &Config) -> Node<K> {
    let n = keys.len();
    if n <= config.leaf_cutoff {
        return Node {
            rep: keys.to_vec(),
            marked: vec![false; n],
            children: Vec::new(),
            id: Vec::new(),
            bounds,
            c_ops: 0,
            s_init: n,
            s_live: n,
        };
    }
    let step = n.isqrt();
    let k = (n - 1) / step;
    let rep: Vec<K> = (1..=k).map(|j| keys[j * step - 1]).collect();
    let grain = if n > config.grain { 1 } else { usize::MAX };
    let children = prim::tabulate(k + 1, grain, |slot| {
        let start = slot * step;
        let end = if slot == k { n } else { (slot + 1) * step - 1 };
        if start >= end {
            None
        } else {
            let b = child_bounds(&rep, bounds, slot);
            Some(Box::new(build_node(&keys[start..end], b, config)))
        }
    });
    let m = if bounds.degenerate() {
        1
    } else {
        config.table_len(n)
    };
    let id = compute_id(&rep, bounds, m);
    Node {
        marked: vec![false; k],
        rep,
        children,
        id,
        bounds,
        c_ops: 0,
        s_init: n,
        s_live: n,
    }
}

/// Live keys of a subtree in sorted order.
///
/// Per node, an exclusive scan over the interleaved sizes
/// `[|T_0|, live(rep_0), |T_1|, .., |T_k|]` gives every child and every live
/// representative its offset in the output; children then fill their
/// disjoint ranges in parallel.
pub fn flatten<K: Key>(node: Option<&Node<K>>, grain: usize) -> Vec<K> {
    let Some(node) = node else {
        return Vec::new();
    };
    if node.s_live == 0 {
        return Vec::new();
    }
    let mut out = vec![node.rep[0]; node.s_live];
    flatten_into(node, &mut out, grain.max(1));
    out
}

fn flatten_into<K: Key>(node: &Node<K>, out: &mut [K], grain: usize) {
    debug_assert_eq!(out.len(), node.s_live);
    if out.len() <= grain {
        let mut cursor = 0;
        write_seq(node, out, &mut cursor);
        debug_assert_eq!(cursor, out.len());
        return;
    }
    let k = node.rep.len();
    let sizes = prim::tabulate(2 * k + 1, usize::MAX, |i| {
        if i % 2 == 0 {
            node.child(i / 2).map_or(0, |c| c.s_live as u64)
        } else {
            u64::from(!node.marked[i / 2])
        }
    });
    let (offsets, total) = prim::scan_exclusive(&sizes);
    debug_assert_eq!(total as usize, out.len());

    let mut pieces: Vec<(usize, &mut [K])> = Vec::with_capacity(2 * k + 1);
    let mut rest = out;
    for i in 0..2 * k + 1 {
        let len = if i + 1 < sizes.len() {
            (offsets[i + 1] - offsets[i]) as usize
        } else {
            rest.len()
        };
        let (head, tail) = rest.split_at_mut(len);
        if len > 0 {
            pieces.push((i, head));
        }
        rest = tail;
    }
    prim::for_each_mut(&mut pieces, 1, &|_, (i, piece): &mut (usize, &mut [K])| {
        if *i % 2 == 1 {
            piece[0] = node.rep[*i / 2];
        } else if let Some(child) = node.child(*i / 2) {
            flatten_into(child, piece, grain);
        }
    });
}

fn write_seq<K: Key>(node: &Node<K>, out: &mut [K], cursor: &mut usize) {
    for j in 0..=node.rep.len() {
        if let Some(child) = node.child(j) {
            write_seq(child, out, cursor);
        }
        if j < node.rep.len() && !node.marked[j] {
            out[*cursor] = node.rep[j];
            *cursor += 1;
        }
    }
}

/// Number of nodes on the longest root-to-leaf path.
pub fn depth<K: Key>(node: Option<&Node<K>>) -> usize {
    node.map_or(0, |n| {
        1 + n
            .children
            .iter()
            .map(|c| depth(c.as_deref()))
            .max()
            .unwrap_or(0)
    })
}
