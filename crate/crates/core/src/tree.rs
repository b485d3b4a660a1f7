//! The tree handle and its single-operation paths.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::{self, Write};

use crate::batch::{Batch, BatchResult, Op};
use crate::config::{Config, ConfigError};
use crate::instrument::{Counters, Tally, Totals};
use crate::key::Key;
use crate::node::{self, build_ideal, Bounds, Link, Node};

/// An ordered set of distinct keys stored as an interpolation search tree.
///
/// Mutation is single-writer: `insert`, `remove` and `execute_batch` take
/// `&mut self` and parallelise internally.
#[derive(Debug)]
pub struct Tree<K> {
    pub(crate) root: Link<K>,
    pub(crate) config: Config,
    pub(crate) totals: Totals,
}

impl<K: Key> Default for Tree<K> {
    fn default() -> Self {
        Tree::new()
    }
}

impl<K: Key> Tree<K> {
    pub fn new() -> Self {
        Tree {
            root: None,
            config: Config::default(),
            totals: Totals::default(),
        }
    }

    pub fn with_config(config: Config) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Tree {
            root: None,
            config,
            totals: Totals::default(),
        })
    }

    /// Builds an ideal tree over strictly increasing keys.
    pub fn from_sorted(keys: &[K], config: Config) -> Result<Self, ConfigError> {
        let mut tree = Tree::with_config(config)?;
        tree.root = Bounds::spanning(keys).and_then(|b| build_ideal(keys, b, &tree.config));
        Ok(tree)
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn root(&self) -> Option<&Node<K>> {
        self.root.as_deref()
    }

    pub fn len(&self) -> usize {
        self.root.as_ref().map_or(0, |r| r.s_live)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn depth(&self) -> usize {
        node::depth(self.root())
    }

    /// Live keys in ascending order.
    pub fn to_vec(&self) -> Vec<K> {
        node::flatten(self.root(), self.config.grain)
    }

    pub fn counters(&self) -> Counters {
        self.totals.snapshot()
    }

    pub fn reset_counters(&self) {
        self.totals.reset()
    }

    /// True iff `key` is present and not deleted.
    pub fn contains(&self, key: K) -> bool {
        let mut visited = 0;
        let mut cur = self.root();
        let mut found = false;
        while let Some(n) = cur {
            visited += 1;
            let loc = n.locate_child(key);
            if let Some(j) = loc.found_at_rep {
                found = !n.marked[j];
                break;
            }
            cur = n.child(loc.slot);
        }
        let mut t = Tally::default();
        t.visit(visited);
        self.totals.add(t);
        found
    }

    /// Inserts `key`; returns true iff it was not live before.
    pub fn insert(&mut self, key: K) -> bool {
        let mut t = Tally::default();
        let changed = update_one(
            &mut self.root,
            key,
            Update::Insert,
            None,
            true,
            &self.config,
            &mut t,
        );
        self.totals.add(t);
        changed
    }

    /// Deletes `key` by marking it; returns true iff it was live.
    pub fn remove(&mut self, key: K) -> bool {
        let mut t = Tally::default();
        let changed = update_one(
            &mut self.root,
            key,
            Update::Delete,
            None,
            true,
            &self.config,
            &mut t,
        );
        if self.root.as_ref().is_some_and(|r| r.s_live == 0) {
            self.root = None;
        }
        self.totals.add(t);
        changed
    }

    /// Prepares and executes `ops` as one batch.
    pub fn apply(&mut self, ops: &[Op<K>]) -> BatchResult {
        let batch = crate::batch::prepare_batch(ops);
        self.execute_batch(&batch)
    }

    /// Applies a prepared batch. Outcomes equal a sequential replay of the
    /// raw operations in input order.
    pub fn execute_batch(&mut self, batch: &Batch<K>) -> BatchResult {
        let was_live = crate::exec::run(self, batch.entries());
        batch.resolve(&was_live)
    }

    /// Deterministic text rendering, one node per line in pre-order:
    /// indentation and depth, child slot, representative count, bounds,
    /// `c_ops/s_init/s_live`, and number of marked representatives.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        if let Some(root) = self.root() {
            dump_node(root, 1, 0, &mut out);
        }
        out
    }

    /// Checks every structural invariant, returning the first violation.
    pub fn validate(&self) -> Result<(), Violation> {
        let Some(root) = self.root() else {
            return Ok(());
        };
        if root.s_live == 0 {
            return Err(Violation::new(&[], "root present with no live keys"));
        }
        let mut path = Vec::new();
        validate_node(root, None, None, &self.config, &mut path)?;
        Ok(())
    }

    /// Breaks the size bookkeeping of the root. Exists only to exercise
    /// failure paths of [`Tree::validate`] in self-tests.
    #[doc(hidden)]
    pub fn debug_corrupt(&mut self) {
        if let Some(root) = self.root.as_mut() {
            root.s_live += 1;
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Update {
    Insert,
    Delete,
}

/// Sequential update along one root-to-leaf path.
///
/// Each visited node counts the update; the first node whose count reaches
/// its rebuild threshold is rebuilt as an ideal subtree with the update
/// applied. A root receiving an insert outside its bounds is always rebuilt.
fn update_one<K: Key>(
    link: &mut Link<K>,
    key: K,
    op: Update,
    bounds: Option<Bounds>,
    is_root: bool,
    config: &Config,
    t: &mut Tally,
) -> bool {
    let Some(node) = link.as_mut() else {
        if op == Update::Delete {
            return false;
        }
        let b = bounds.unwrap_or_else(|| Bounds::new(key.coord(), key.coord()));
        *link = build_ideal(&[key], b, config);
        t.rebuild(1);
        return true;
    };
    t.visit(1);
    node.c_ops += 1;
    let out_of_bounds = is_root && op == Update::Insert && !node.bounds.contains(key.coord());
    if out_of_bounds || config.needs_rebuild(node.c_ops, node.s_init) {
        return rebuild_with(link, key, op, is_root, config, t);
    }
    let loc = node.locate_child(key);
    let changed = if let Some(j) = loc.found_at_rep {
        let live = !node.marked[j];
        match op {
            Update::Insert => {
                node.marked[j] = false;
                !live
            }
            Update::Delete => {
                node.marked[j] = true;
                live
            }
        }
    } else {
        if node.children.is_empty() {
            if op == Update::Delete {
                return false;
            }
            node.children.resize_with(node.rep.len() + 1, || None);
        }
        let b = node.child_bounds(loc.slot);
        update_one(
            &mut node.children[loc.slot],
            key,
            op,
            Some(b),
            false,
            config,
            t,
        )
    };
    if changed {
        match op {
            Update::Insert => node.s_live += 1,
            Update::Delete => node.s_live -= 1,
        }
    }
    changed
}

fn rebuild_with<K: Key>(
    link: &mut Link<K>,
    key: K,
    op: Update,
    is_root: bool,
    config: &Config,
    t: &mut Tally,
) -> bool {
    let node = link.as_ref().expect("rebuild of empty subtree");
    let mut keys = node::flatten(Some(node), config.grain);
    let pos = keys.partition_point(|k| *k < key);
    let present = pos < keys.len() && keys[pos] == key;
    let changed = match op {
        Update::Insert if !present => {
            keys.insert(pos, key);
            true
        }
        Update::Delete if present => {
            keys.remove(pos);
            true
        }
        _ => false,
    };
    let bounds = if is_root {
        Bounds::spanning(&keys).unwrap_or(node.bounds)
    } else {
        node.bounds
    };
    t.rebuild(keys.len());
    *link = build_ideal(&keys, bounds, config);
    changed
}

fn dump_node<K: Key>(n: &Node<K>, depth: usize, slot: usize, out: &mut String) {
    let _ = writeln!(
        out,
        "{:indent$}d={} slot={} k={} bounds=[{}, {}] ops={}/{}/{} marked={}{}",
        "",
        depth,
        slot,
        n.rep.len(),
        n.bounds.lo,
        n.bounds.hi,
        n.c_ops,
        n.s_init,
        n.s_live,
        n.marked_count(),
        if n.is_leaf() { " leaf" } else { "" },
        indent = 2 * (depth - 1),
    );
    for (j, c) in n.children.iter().enumerate() {
        if let Some(c) = c {
            dump_node(c, depth + 1, j, out);
        }
    }
}

/// A broken structural invariant, located by the child-slot path from the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: Vec<usize>,
    pub what: String,
}

impl Violation {
    fn new(path: &[usize], what: impl Into<String>) -> Self {
        Violation {
            path: path.to_vec(),
            what: what.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {:?}: {}", self.path, self.what)
    }
}

impl core::error::Error for Violation {}

/// Largest node for which the interpolation table is re-derived by brute force.
pub const BRUTE_FORCE_ID_LIMIT: usize = 64;

/// Returns the subtree's live count, checking it against `s_live`.
fn validate_node<K: Key>(
    n: &Node<K>,
    lower: Option<K>,
    upper: Option<K>,
    config: &Config,
    path: &mut Vec<usize>,
) -> Result<usize, Violation> {
    let err = |path: &[usize], what: String| Err(Violation::new(path, what));
    let k = n.rep.len();
    if n.marked.len() != k {
        return err(
            path,
            format!("{} marks for {} representatives", n.marked.len(), k),
        );
    }
    if !matches!(
        n.bounds.lo.partial_cmp(&n.bounds.hi),
        Some(Ordering::Less | Ordering::Equal)
    ) {
        return err(
            path,
            format!("inverted bounds [{}, {}]", n.bounds.lo, n.bounds.hi),
        );
    }
    if n.rep.windows(2).any(|w| w[0] >= w[1]) {
        return err(path, "representatives not strictly increasing".into());
    }
    for r in &n.rep {
        if lower.is_some_and(|l| *r <= l) || upper.is_some_and(|u| *r >= u) {
            return err(path, format!("key {r:?} outside its bracket"));
        }
        if !n.bounds.contains(r.coord()) {
            return err(
                path,
                format!(
                    "key {r:?} outside bounds [{}, {}]",
                    n.bounds.lo, n.bounds.hi
                ),
            );
        }
    }
    if n.is_leaf() {
        if n.s_init > config.leaf_cutoff {
            return err(path, format!("leaf rebuilt at size {}", n.s_init));
        }
    } else {
        if n.s_init <= config.leaf_cutoff {
            return err(
                path,
                format!("internal node rebuilt at leaf size {}", n.s_init),
            );
        }
        // k is fixed between rebuilds, so the size bounds hold against s_init.
        let root_n = libm::sqrt(n.s_init as f64);
        if (k as f64) < root_n / 2.0 || (k as f64) > 2.0 * root_n {
            return err(
                path,
                format!("k={} outside [sqrt(n)/2, 2 sqrt(n)] for n={}", k, n.s_init),
            );
        }
        let m = if n.bounds.degenerate() {
            1
        } else {
            config.table_len(n.s_init)
        };
        if n.id.len() != m {
            return err(
                path,
                format!("table has {} entries, expected {}", n.id.len(), m),
            );
        }
        if k <= BRUTE_FORCE_ID_LIMIT && !id_matches_brute_force(&n.rep, n.bounds, &n.id) {
            return err(
                path,
                "interpolation table disagrees with bracket predicate".into(),
            );
        }
    }
    if n.c_ops > 0 && config.needs_rebuild(n.c_ops, n.s_init) {
        return err(
            path,
            format!(
                "{} ops reached the rebuild threshold of size {}",
                n.c_ops, n.s_init
            ),
        );
    }
    if (!n.is_leaf() || !n.children.is_empty()) && n.children.len() != k + 1 {
        return err(
            path,
            format!("{} children for {} representatives", n.children.len(), k),
        );
    }

    let mut live = n.marked.iter().filter(|&&m| !m).count();
    for (j, c) in n.children.iter().enumerate() {
        if let Some(c) = c {
            let lo = if j == 0 { lower } else { Some(n.rep[j - 1]) };
            let hi = if j == k { upper } else { Some(n.rep[j]) };
            let cb = n.child_bounds(j);
            if c.bounds != cb {
                return err(
                    path,
                    format!(
                        "child {j} bounds [{}, {}] differ from bracket",
                        c.bounds.lo, c.bounds.hi
                    ),
                );
            }
            path.push(j);
            live += validate_node(c, lo, hi, config, path)?;
            path.pop();
        }
    }
    if live != n.s_live {
        return err(
            path,
            format!("s_live={} but subtree holds {} live keys", n.s_live, live),
        );
    }
    Ok(live)
}

/// Brute-force check of `id[i-1] = j  iff  rep[j] < t_i <= rep[j+1]` with
/// 1-based `j` and infinite sentinels.
fn id_matches_brute_force<K: Key>(rep: &[K], bounds: Bounds, id: &[u32]) -> bool {
    let m = id.len();
    let at = |j: usize| -> f64 {
        if j == 0 {
            f64::NEG_INFINITY
        } else if j > rep.len() {
            f64::INFINITY
        } else {
            rep[j - 1].coord()
        }
    };
    (1..=m).all(|i| {
        let t = bounds.lo + i as f64 * (bounds.hi - bounds.lo) / m as f64;
        let j = id[i - 1] as usize;
        j <= rep.len() && at(j) < t && t <= at(j + 1)
    })
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<Tree<i64>>();
    check::<Box<Node<u64>>>();
}
