//! Optional operation counters.
//!
//! Recursive operations accumulate a [`Tally`] per task and merge them at
//! joins; the tree folds the result into its totals once per call. Without
//! the `instrument` feature `Tally` is zero-sized and every method is a no-op.

/// Snapshot of the counters accumulated since the last reset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    /// Nodes touched by searches, plus (node, operation) pairs routed in batches.
    pub nodes_visited: u64,
    /// Subtree (re)builds triggered by updates.
    pub rebuilds: u64,
    /// Total live size of the subtrees produced by those rebuilds.
    pub rebuilt_keys: u64,
}

#[cfg(feature = "instrument")]
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Tally(Counters);

#[cfg(not(feature = "instrument"))]
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Tally {}

impl Tally {
    #[inline(always)]
    #[allow(unused_variables)]
    pub(crate) fn visit(&mut self, nodes: usize) {
        #[cfg(feature = "instrument")]
        {
            self.0.nodes_visited += nodes as u64;
        }
    }

    #[inline(always)]
    #[allow(unused_variables)]
    pub(crate) fn rebuild(&mut self, size: usize) {
        #[cfg(feature = "instrument")]
        {
            self.0.rebuilds += 1;
            self.0.rebuilt_keys += size as u64;
        }
    }

    #[inline(always)]
    #[allow(unused_variables)]
    pub(crate) fn merge(self, other: Tally) -> Tally {
        #[cfg(feature = "instrument")]
        {
            Tally(Counters {
                nodes_visited: self.0.nodes_visited + other.0.nodes_visited,
                rebuilds: self.0.rebuilds + other.0.rebuilds,
                rebuilt_keys: self.0.rebuilt_keys + other.0.rebuilt_keys,
            })
        }
        #[cfg(not(feature = "instrument"))]
        {
            Tally {}
        }
    }
}

/// Running totals stored in a tree.
#[derive(Debug, Default)]
pub(crate) struct Totals {
    #[cfg(feature = "instrument")]
    visited: core::sync::atomic::AtomicU64,
    #[cfg(feature = "instrument")]
    rebuilds: core::sync::atomic::AtomicU64,
    #[cfg(feature = "instrument")]
    rebuilt_keys: core::sync::atomic::AtomicU64,
}

impl Totals {
    #[inline(always)]
    #[allow(unused_variables)]
    pub(crate) fn add(&self, t: Tally) {
        #[cfg(feature = "instrument")]
        {
            use core::sync::atomic::Ordering::Relaxed;
            self.visited.fetch_add(t.0.nodes_visited, Relaxed);
            self.rebuilds.fetch_add(t.0.rebuilds, Relaxed);
            self.rebuilt_keys.fetch_add(t.0.rebuilt_keys, Relaxed);
        }
    }

    pub(crate) fn snapshot(&self) -> Counters {
        #[cfg(feature = "instrument")]
        {
            use core::sync::atomic::Ordering::Relaxed;
            Counters {
                nodes_visited: self.visited.load(Relaxed),
                rebuilds: self.rebuilds.load(Relaxed),
                rebuilt_keys: self.rebuilt_keys.load(Relaxed),
            }
        }
        #[cfg(not(feature = "instrument"))]
        {
            Counters::default()
        }
    }

    pub(crate) fn reset(&self) {
        #[cfg(feature = "instrument")]
        {
            use core::sync::atomic::Ordering::Relaxed;
            self.visited.store(0, Relaxed);
            self.rebuilds.store(0, Relaxed);
            self.rebuilt_keys.store(0, Relaxed);
        }
    }
}
