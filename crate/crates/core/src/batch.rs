//! Batches of set operations.
//!
//! A batch means the same thing as replaying its operations one at a time in
//! input order. [`prepare_batch`] sorts the raw operations and collapses each
//! key's chain into one [`Entry`]: the net update (last writer wins) or a
//! plain membership probe. The outcome of every raw operation is then a
//! function of a single unknown, whether the key was live before the batch,
//! which the tree reports per entry.

use alloc::vec;
use alloc::vec::Vec;

use crate::key::Key;
use crate::prim;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Insert,
    Delete,
    Contains,
}

impl OpKind {
    pub fn is_update(self) -> bool {
        !matches!(self, OpKind::Contains)
    }
}

/// One raw operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Op<K> {
    pub key: K,
    pub kind: OpKind,
}

impl<K> Op<K> {
    pub fn insert(key: K) -> Self {
        Op {
            key,
            kind: OpKind::Insert,
        }
    }

    pub fn delete(key: K) -> Self {
        Op {
            key,
            kind: OpKind::Delete,
        }
    }

    pub fn contains(key: K) -> Self {
        Op {
            key,
            kind: OpKind::Contains,
        }
    }
}

/// The net effect of a batch on one key.
///
/// `kind` is the last update of the key's chain, or `Contains` when the chain
/// holds no update. `origin` is the raw index of that operation (the first one
/// for a probe).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Entry<K> {
    pub key: K,
    pub kind: OpKind,
    pub origin: usize,
}

/// Outcome of one raw operation in terms of the key's pre-batch liveness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resolution {
    Fixed(bool),
    WasLive,
    WasAbsent,
}

impl Resolution {
    #[inline]
    pub fn eval(self, was_live: bool) -> bool {
        match self {
            Resolution::Fixed(v) => v,
            Resolution::WasLive => was_live,
            Resolution::WasAbsent => !was_live,
        }
    }
}

/// A prepared batch: entries with strictly increasing keys, plus for every
/// raw operation the entry it maps to and how to derive its outcome.
#[derive(Clone, Debug)]
pub struct Batch<K> {
    entries: Vec<Entry<K>>,
    slots: Vec<(u32, Resolution)>,
}

impl<K: Key> Batch<K> {
    pub fn entries(&self) -> &[Entry<K>] {
        &self.entries
    }

    /// Number of raw operations.
    pub fn raw_len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Entry index and resolution of raw operation `origin`.
    pub fn slot(&self, origin: usize) -> (usize, Resolution) {
        let (e, r) = self.slots[origin];
        (e as usize, r)
    }

    /// Number of update entries.
    pub fn update_count(&self) -> usize {
        self.entries.iter().filter(|e| e.kind.is_update()).count()
    }

    /// Expands per-entry pre-batch liveness into per-operation outcomes.
    pub fn resolve(&self, was_live: &[bool]) -> BatchResult {
        assert_eq!(was_live.len(), self.entries.len());
        BatchResult {
            outcomes: prim::tabulate(self.slots.len(), prim::DEFAULT_GRAIN, |o| {
                let (e, r) = self.slots[o];
                r.eval(was_live[e as usize])
            }),
        }
    }
}

/// Per-operation outcomes in raw input order: insert reports "newly
/// inserted", delete "was live", contains "is member".
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BatchResult {
    pub outcomes: Vec<bool>,
}

impl BatchResult {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.outcomes
    }
}

#[derive(Clone, Copy)]
struct Pending<K> {
    key: K,
    kind: OpKind,
    origin: usize,
    resolution: Resolution,
    // Only meaningful on the first element of each run.
    net: OpKind,
    net_origin: usize,
}

/// Sorts and conflict-resolves a raw operation sequence.
pub fn prepare_batch<K: Key>(raw: &[Op<K>]) -> Batch<K> {
    assert!(raw.len() <= u32::MAX as usize, "batch too large");
    let grain = prim::DEFAULT_GRAIN;
    let mut ops = prim::tabulate(raw.len(), grain, |i| Pending {
        key: raw[i].key,
        kind: raw[i].kind,
        origin: i,
        resolution: Resolution::Fixed(false),
        net: OpKind::Contains,
        net_origin: i,
    });
    prim::sort_unstable_by_key(&mut ops, |p| (p.key, p.origin));

    prim::for_each_run_mut(
        &mut ops,
        &|a: &Pending<K>, b: &Pending<K>| a.key == b.key,
        grain,
        &|run| {
            // None until the first update; afterwards the known liveness.
            let mut state: Option<bool> = None;
            let mut net = (OpKind::Contains, run[0].origin);
            for p in run.iter_mut() {
                p.resolution = match (p.kind, state) {
                    (OpKind::Insert, None) => Resolution::WasAbsent,
                    (OpKind::Insert, Some(s)) => Resolution::Fixed(!s),
                    (_, None) => Resolution::WasLive,
                    (_, Some(s)) => Resolution::Fixed(s),
                };
                match p.kind {
                    OpKind::Insert => state = Some(true),
                    OpKind::Delete => state = Some(false),
                    OpKind::Contains => {}
                }
                if p.kind.is_update() {
                    net = (p.kind, p.origin);
                }
            }
            run[0].net = net.0;
            run[0].net_origin = net.1;
        },
    );

    let heads: Vec<u64> = prim::tabulate(ops.len(), grain, |i| {
        u64::from(i == 0 || ops[i - 1].key != ops[i].key)
    });
    let (run_index, _) = prim::scan_exclusive(&heads);
    let head_ops = prim::pack_with(&ops, |i, _| heads[i] == 1, grain);
    let entries = prim::tabulate(head_ops.len(), grain, |e| Entry {
        key: head_ops[e].key,
        kind: head_ops[e].net,
        origin: head_ops[e].net_origin,
    });

    let mut slots = vec![(0u32, Resolution::Fixed(false)); raw.len()];
    for (i, p) in ops.iter().enumerate() {
        let entry = run_index[i] + heads[i] - 1;
        slots[p.origin] = (entry as u32, p.resolution);
    }
    Batch { entries, slots }
}
