//! Parallel batched interpolation search tree.
//!
//! An ordered set of distinct keys whose nodes hold about `sqrt(n)` sampled
//! representatives plus an interpolation table that maps the key's position
//! on the real line to a nearby representative. Under smooth key
//! distributions searches touch `O(log log n)` nodes.
//!
//! Updates come one at a time ([`Tree::insert`], [`Tree::remove`]) or as
//! batches ([`Tree::apply`], [`Tree::execute_batch`]) executed with fork-join
//! parallelism. Deleted keys are tombstoned; a subtree is rebuilt as an
//! ideal tree once the updates routed through it since its last rebuild
//! reach a fixed fraction of its size.
//!
//! ```
//! use batch_ist::{Op, Tree};
//!
//! let mut tree = Tree::<i64>::new();
//! let out = tree.apply(&[Op::insert(3), Op::insert(1), Op::contains(3), Op::delete(1)]);
//! assert_eq!(out.outcomes, vec![true, true, true, true]);
//! assert_eq!(tree.to_vec(), vec![3]);
//! ```
//!
//! The crate is `no_std` (with `alloc`) when the default `parallel` feature is
//! disabled; all primitives then run sequentially with identical results.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod batch;
mod config;
mod exec;
pub mod instrument;
mod key;
pub mod node;
pub mod prim;
mod tree;

pub use batch::{prepare_batch, Batch, BatchResult, Entry, Op, OpKind, Resolution};
pub use config::{Config, ConfigError};
pub use instrument::Counters;
pub use key::{FloatKey, Key};
pub use node::{build_ideal, compute_id, depth, flatten, Bounds, Located, Node};
pub use tree::{Tree, Violation, BRUTE_FORCE_ID_LIMIT};
