//! Batched execution.
//!
//! At every node the batch slice destined for the subtree is either pushed
//! down (answering operations that hit a representative in place) or, once
//! the node's update count plus the incoming updates reach the rebuild
//! threshold, the subtree is flattened, merged with the batch and rebuilt
//! ideal. Children with non-empty sub-batches are processed in parallel.

use alloc::vec;
use alloc::vec::Vec;

use crate::batch::{Entry, OpKind};
use crate::config::Config;
use crate::instrument::Tally;
use crate::key::Key;
use crate::node::{self, build_ideal, Bounds, Link, Node};
use crate::prim;
use crate::tree::Tree;

struct Ctx<'a> {
    config: &'a Config,
    /// `updates[i]` = update entries among the first `i` entries.
    updates: &'a [u64],
}

impl Ctx<'_> {
    fn updates_in(&self, base: usize, len: usize) -> usize {
        (self.updates[base + len] - self.updates[base]) as usize
    }

    fn parallel(&self, len: usize) -> bool {
        len > self.config.grain
    }
}

/// Executes distinct sorted entries against the tree; returns, per entry,
/// whether its key was live before the batch.
pub(crate) fn run<K: Key>(tree: &mut Tree<K>, entries: &[Entry<K>]) -> Vec<bool> {
    debug_assert!(
        entries.windows(2).all(|w| w[0].key < w[1].key),
        "batch not sorted"
    );
    let mut was_live = vec![false; entries.len()];
    if entries.is_empty() {
        return was_live;
    }
    let flags = prim::tabulate(entries.len(), prim::DEFAULT_GRAIN, |i| {
        u64::from(entries[i].kind.is_update())
    });
    let (mut updates, total) = prim::scan_exclusive(&flags);
    updates.push(total);
    let ctx = Ctx {
        config: &tree.config,
        updates: &updates,
    };
    let (_, tally) = exec(&mut tree.root, entries, 0, &mut was_live, None, &ctx);
    if tree.root.as_ref().is_some_and(|r| r.s_live == 0) {
        tree.root = None;
    }
    tree.totals.add(tally);
    was_live
}

/// `bounds` is `None` exactly at the root, whose bounds track its keys.
fn exec<K: Key>(
    link: &mut Link<K>,
    entries: &[Entry<K>],
    base: usize,
    was_live: &mut [bool],
    bounds: Option<Bounds>,
    ctx: &Ctx<'_>,
) -> (isize, Tally) {
    let mut tally = Tally::default();
    if entries.is_empty() {
        return (0, tally);
    }
    tally.visit(entries.len());
    let u = ctx.updates_in(base, entries.len());
    let Some(node) = link.as_mut() else {
        was_live.fill(false);
        if u == 0 {
            return (0, tally);
        }
        let keys = inserted_keys(entries, ctx);
        let b = bounds.or_else(|| Bounds::spanning(&keys));
        if let Some(b) = b {
            tally.rebuild(keys.len());
            *link = build_ideal(&keys, b, ctx.config);
        }
        return (keys.len() as isize, tally);
    };

    let forced = bounds.is_none() && root_must_grow(node, entries);
    if forced || (u > 0 && ctx.config.needs_rebuild(node.c_ops + u, node.s_init)) {
        let before = node.s_live;
        let rebuilt = rebuild(node, entries, was_live, bounds.is_none(), ctx);
        let after = rebuilt.as_ref().map_or(0, |n| n.s_live);
        tally.rebuild(after);
        *link = rebuilt;
        return (after as isize - before as isize, tally);
    }

    node.c_ops += u;
    let pos = prim::rank_by(entries, &node.rep, |r, e| *r < e.key, ctx.config.grain);
    let delta = if node.children.is_empty() && u == 0 {
        // Probe-only batch at a leaf.
        for (i, e) in entries.iter().enumerate() {
            let j = pos[i];
            was_live[i] = j < node.rep.len() && node.rep[j] == e.key && !node.marked[j];
        }
        0
    } else {
        if node.children.is_empty() {
            node.children.resize_with(node.rep.len() + 1, || None);
        }
        let Node {
            rep,
            marked,
            children,
            bounds: own,
            ..
        } = &mut **node;
        let (d, t) = route(
            Slots {
                rep,
                own: *own,
                first: 0,
            },
            marked,
            children,
            entries,
            &pos,
            base,
            was_live,
            ctx,
        );
        tally = tally.merge(t);
        d
    };
    node.s_live = (node.s_live as isize + delta) as usize;
    (delta, tally)
}

#[derive(Clone, Copy)]
struct Slots<'a, K> {
    rep: &'a [K],
    own: Bounds,
    /// Child slot index of `children[0]` in the node.
    first: usize,
}

/// Distributes `entries` over a contiguous range of child slots, halving
/// the range until one slot remains.
#[allow(clippy::too_many_arguments)]
fn route<K: Key>(
    slots: Slots<'_, K>,
    marked: &mut [bool],
    children: &mut [Link<K>],
    entries: &[Entry<K>],
    pos: &[usize],
    base: usize,
    was_live: &mut [bool],
    ctx: &Ctx<'_>,
) -> (isize, Tally) {
    if entries.is_empty() {
        return (0, Tally::default());
    }
    if children.len() == 1 {
        let slot = slots.first;
        let mut entries = entries;
        let mut was_live = &mut *was_live;
        let mut delta = 0isize;
        // Only the last entry of a slot can equal the representative above it.
        if let (Some(last), Some(mark)) = (entries.last(), marked.first_mut()) {
            if last.key == slots.rep[slot] {
                let n = entries.len() - 1;
                let live = !*mark;
                was_live[n] = live;
                match last.kind {
                    OpKind::Insert if !live => {
                        *mark = false;
                        delta += 1;
                    }
                    OpKind::Delete if live => {
                        *mark = true;
                        delta -= 1;
                    }
                    _ => {}
                }
                entries = &entries[..n];
                was_live = &mut was_live[..n];
            }
        }
        let b = node::child_bounds(slots.rep, slots.own, slot);
        let (d, t) = exec(&mut children[0], entries, base, was_live, Some(b), ctx);
        return (delta + d, t);
    }

    let mid = children.len() / 2;
    let cut = slots.first + mid;
    let split = pos.partition_point(|&p| p < cut);
    let (cl, cr) = children.split_at_mut(mid);
    let (ml, mr) = marked.split_at_mut(mid.min(marked.len()));
    let (el, er) = entries.split_at(split);
    let (pl, pr) = pos.split_at(split);
    let (wl, wr) = was_live.split_at_mut(split);
    let right = Slots {
        first: cut,
        ..slots
    };
    let ((dl, tl), (dr, tr)) = prim::join_if(
        ctx.parallel(entries.len()),
        || route(slots, ml, cl, el, pl, base, wl, ctx),
        || route(right, mr, cr, er, pr, base + split, wr, ctx),
    );
    (dl + dr, tl.merge(tr))
}

/// A root must be rebuilt when an insert falls outside its bounds.
fn root_must_grow<K: Key>(node: &Node<K>, entries: &[Entry<K>]) -> bool {
    let first = entries.iter().find(|e| e.kind == OpKind::Insert);
    let last = entries.iter().rev().find(|e| e.kind == OpKind::Insert);
    first
        .into_iter()
        .chain(last)
        .any(|e| !node.bounds.contains(e.key.coord()))
}

fn inserted_keys<K: Key>(entries: &[Entry<K>], ctx: &Ctx<'_>) -> Vec<K> {
    let ins = prim::filter_with(entries, |e| e.kind == OpKind::Insert, ctx.config.grain);
    prim::tabulate(ins.len(), ctx.config.grain, |i| ins[i].key)
}

#[derive(Clone, Copy)]
enum Tagged<K> {
    Old(K),
    Insert(K),
    Delete(K),
}

impl<K: Key> Tagged<K> {
    fn key(self) -> K {
        match self {
            Tagged::Old(k) | Tagged::Insert(k) | Tagged::Delete(k) => k,
        }
    }
}

/// Flatten, merge with the batch, and rebuild ideal.
fn rebuild<K: Key>(
    node: &Node<K>,
    entries: &[Entry<K>],
    was_live: &mut [bool],
    is_root: bool,
    ctx: &Ctx<'_>,
) -> Link<K> {
    let grain = ctx.config.grain;
    let flat = node::flatten(Some(node), grain);
    let pos = prim::rank_by(entries, &flat, |f, e| *f < e.key, grain);
    prim::for_each_mut(was_live, grain, &|i, w: &mut bool| {
        *w = pos[i] < flat.len() && flat[pos[i]] == entries[i].key;
    });

    let old = prim::tabulate(flat.len(), grain, |i| Tagged::Old(flat[i]));
    let ups = prim::filter_with(entries, |e| e.kind.is_update(), grain);
    let ups = prim::tabulate(ups.len(), grain, |i| match ups[i].kind {
        OpKind::Insert => Tagged::Insert(ups[i].key),
        _ => Tagged::Delete(ups[i].key),
    });
    let merged = prim::merge_by(&old, &ups, |a, b| a.key() < b.key(), grain);
    // Ties place the old key directly before the operation on it.
    let kept = prim::pack_with(
        &merged,
        |i, t| match *t {
            Tagged::Old(k) => !matches!(merged.get(i + 1), Some(Tagged::Delete(d)) if *d == k),
            Tagged::Insert(k) => {
                !matches!(i.checked_sub(1).map(|p| merged[p]), Some(Tagged::Old(o)) if o == k)
            }
            Tagged::Delete(_) => false,
        },
        grain,
    );
    let keys = prim::tabulate(kept.len(), grain, |i| kept[i].key());
    let bounds = if is_root {
        Bounds::spanning(&keys)?
    } else {
        node.bounds
    };
    build_ideal(&keys, bounds, ctx.config)
}
