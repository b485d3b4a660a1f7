//! Fork-join primitives: scan, filter/pack, rank, merge and parallel-for.
//!
//! Every primitive splits its input into blocks of at most `grain` elements,
//! processes the blocks with [`join`], and writes each output slot from exactly
//! one task. Results are therefore identical for any thread count, including
//! the sequential build without the `parallel` feature.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

/// Leaf size below which primitives stop splitting.
pub const DEFAULT_GRAIN: usize = 2048;

/// Runs two closures, potentially in parallel, and returns both results.
#[cfg(feature = "parallel")]
#[inline]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    rayon::join(a, b)
}

/// Runs two closures, potentially in parallel, and returns both results.
#[cfg(not(feature = "parallel"))]
#[inline]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    (a(), b())
}

/// Like [`join`], but runs sequentially when `parallel` is false.
#[inline]
pub(crate) fn join_if<A, B, RA, RB>(parallel: bool, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    if parallel {
        join(a, b)
    } else {
        (a(), b())
    }
}

/// Invokes `body` once for every index in `range`.
///
/// The range is halved recursively until it holds at most `grain` indices,
/// which then run sequentially.
pub fn parallel_for<F>(range: Range<usize>, grain: usize, body: &F)
where
    F: Fn(usize) + Sync,
{
    let grain = grain.max(1);
    if range.len() <= grain {
        range.for_each(body);
        return;
    }
    let mid = range.start + range.len() / 2;
    join(
        || parallel_for(range.start..mid, grain, body),
        || parallel_for(mid..range.end, grain, body),
    );
}

/// Applies `f(index, item)` to every element of `items` by binary splitting.
pub fn for_each_mut<T, F>(items: &mut [T], grain: usize, f: &F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    fn go<T: Send, F: Fn(usize, &mut T) + Sync>(
        items: &mut [T],
        offset: usize,
        grain: usize,
        f: &F,
    ) {
        if items.len() <= grain {
            for (i, x) in items.iter_mut().enumerate() {
                f(offset + i, x);
            }
            return;
        }
        let mid = items.len() / 2;
        let (lo, hi) = items.split_at_mut(mid);
        join(
            || go(lo, offset, grain, f),
            || go(hi, offset + mid, grain, f),
        );
    }
    go(items, 0, grain.max(1), f)
}

/// Builds `[f(0), f(1), .., f(n-1)]`.
#[cfg(feature = "parallel")]
pub fn tabulate<T, F>(n: usize, grain: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if n <= grain {
        return (0..n).map(f).collect();
    }
    (0..n)
        .into_par_iter()
        .with_min_len(grain.max(1))
        .map(f)
        .collect()
}

/// Builds `[f(0), f(1), .., f(n-1)]`.
#[cfg(not(feature = "parallel"))]
pub fn tabulate<T, F>(n: usize, _grain: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sorts `xs` by `key`. Equal keys may be reordered.
#[cfg(feature = "parallel")]
pub fn sort_unstable_by_key<T, K, F>(xs: &mut [T], key: F)
where
    T: Send,
    K: Ord,
    F: Fn(&T) -> K + Sync,
{
    use rayon::prelude::*;
    xs.par_sort_unstable_by_key(key)
}

/// Sorts `xs` by `key`. Equal keys may be reordered.
#[cfg(not(feature = "parallel"))]
pub fn sort_unstable_by_key<T, K, F>(xs: &mut [T], key: F)
where
    T: Send,
    K: Ord,
    F: Fn(&T) -> K + Sync,
{
    xs.sort_unstable_by_key(key)
}

/// Splits `out` into consecutive chunks of the given lengths.
fn split_by_lengths<'a, T>(mut out: &'a mut [T], lens: &[usize]) -> Vec<&'a mut [T]> {
    let mut chunks = Vec::with_capacity(lens.len());
    for &len in lens {
        let (head, tail) = core::mem::take(&mut out).split_at_mut(len);
        chunks.push(head);
        out = tail;
    }
    debug_assert!(out.is_empty());
    chunks
}

fn block_ranges(n: usize, grain: usize) -> Vec<Range<usize>> {
    let grain = grain.max(1);
    (0..n.div_ceil(grain))
        .map(|b| b * grain..((b + 1) * grain).min(n))
        .collect()
}

/// Exclusive prefix sums: `out[i] = xs[0] + .. + xs[i-1]`, plus the grand total.
pub fn scan_exclusive(xs: &[u64]) -> (Vec<u64>, u64) {
    scan_exclusive_with(xs, DEFAULT_GRAIN)
}

/// [`scan_exclusive`] with an explicit grain.
pub fn scan_exclusive_with(xs: &[u64], grain: usize) -> (Vec<u64>, u64) {
    let grain = grain.max(2);
    if xs.len() <= grain {
        let mut out = Vec::with_capacity(xs.len());
        let mut acc = 0u64;
        for &x in xs {
            out.push(acc);
            acc += x;
        }
        return (out, acc);
    }
    let blocks = block_ranges(xs.len(), grain);
    let sums = tabulate(blocks.len(), 1, |b| {
        xs[blocks[b].clone()].iter().sum::<u64>()
    });
    let (offsets, total) = scan_exclusive_with(&sums, grain);

    let mut out = vec![0u64; xs.len()];
    let mut chunks: Vec<&mut [u64]> = out.chunks_mut(grain).collect();
    for_each_mut(&mut chunks, 1, &|b, chunk: &mut &mut [u64]| {
        let mut acc = offsets[b];
        for (o, &x) in chunk.iter_mut().zip(&xs[blocks[b].clone()]) {
            *o = acc;
            acc += x;
        }
    });
    (out, total)
}

/// Keeps the elements satisfying `keep`, preserving their order.
pub fn filter<T, F>(xs: &[T], keep: F) -> Vec<T>
where
    T: Clone + Send + Sync,
    F: Fn(&T) -> bool + Sync,
{
    pack_with(xs, |_, x| keep(x), DEFAULT_GRAIN)
}

/// [`filter`] with an explicit grain.
pub fn filter_with<T, F>(xs: &[T], keep: F, grain: usize) -> Vec<T>
where
    T: Clone + Send + Sync,
    F: Fn(&T) -> bool + Sync,
{
    pack_with(xs, |_, x| keep(x), grain)
}

/// Stable filter whose predicate also sees the element's index, so it may
/// inspect neighbours.
pub fn pack_with<T, F>(xs: &[T], keep: F, grain: usize) -> Vec<T>
where
    T: Clone + Send + Sync,
    F: Fn(usize, &T) -> bool + Sync,
{
    let grain = grain.max(1);
    if xs.len() <= grain {
        return xs
            .iter()
            .enumerate()
            .filter(|(i, x)| keep(*i, x))
            .map(|(_, x)| x.clone())
            .collect();
    }
    let blocks = block_ranges(xs.len(), grain);
    let counts = tabulate(blocks.len(), 1, |b| {
        blocks[b].clone().filter(|&i| keep(i, &xs[i])).count()
    });
    let Some(first_block) = counts.iter().position(|&c| c > 0) else {
        return Vec::new();
    };
    let filler = blocks[first_block]
        .clone()
        .find(|&i| keep(i, &xs[i]))
        .map(|i| xs[i].clone())
        .expect("block reported a kept element");
    let total: usize = counts.iter().sum();

    let mut out = vec![filler; total];
    let mut chunks = split_by_lengths(&mut out, &counts);
    for_each_mut(&mut chunks, 1, &|b, chunk: &mut &mut [T]| {
        let mut slots = chunk.iter_mut();
        for i in blocks[b].clone() {
            if keep(i, &xs[i]) {
                *slots.next().expect("count mismatch") = xs[i].clone();
            }
        }
    });
    out
}

/// Smallest position `p >= start` such that `!before(&b[p])`, found by
/// galloping from `start`. `before` must be true on a prefix of `b`.
fn gallop<B>(b: &[B], start: usize, before: impl Fn(&B) -> bool) -> usize {
    if start >= b.len() || !before(&b[start]) {
        return start;
    }
    let mut lo = start + 1;
    let mut step = 1;
    let hi = loop {
        let probe = start + step;
        if probe >= b.len() {
            break b.len();
        }
        if !before(&b[probe]) {
            break probe;
        }
        lo = probe + 1;
        step *= 2;
    };
    lo + b[lo..hi].partition_point(before)
}

/// For each `a[i]`, the smallest `k` with `a[i] <= b[k]`, where `k = len(b)`
/// plays the role of the `+inf` sentinel.
///
/// Both inputs must be sorted non-decreasing. The result is non-decreasing.
pub fn rank<T>(a: &[T], b: &[T]) -> Vec<usize>
where
    T: PartialOrd + Sync,
{
    rank_by(a, b, |y, x| y < x, DEFAULT_GRAIN)
}

/// Generalised [`rank`]: `out[i]` is the number of leading elements of `b`
/// for which `b_before_a(b[k], a[i])` holds.
///
/// `b_before_a` must be monotone: true on a prefix of `b` for each `a[i]`,
/// with that prefix growing along `a`.
pub fn rank_by<A, B, F>(a: &[A], b: &[B], b_before_a: F, grain: usize) -> Vec<usize>
where
    A: Sync,
    B: Sync,
    F: Fn(&B, &A) -> bool + Sync,
{
    let grain = grain.max(1);
    let mut out = vec![0usize; a.len()];
    let mut chunks: Vec<&mut [usize]> = out.chunks_mut(grain).collect();
    for_each_mut(&mut chunks, 1, &|blk, chunk: &mut &mut [usize]| {
        let start = blk * grain;
        let mut p = 0;
        for (o, x) in chunk.iter_mut().zip(&a[start..]) {
            p = gallop(b, p, |y| b_before_a(y, x));
            *o = p;
        }
    });
    debug_assert!(
        out.windows(2).all(|w| w[0] <= w[1]),
        "rank input not sorted"
    );
    out
}

/// Stable merge of two sorted slices; on ties elements of `a` come first.
pub fn merge<T>(a: &[T], b: &[T]) -> Vec<T>
where
    T: Ord + Clone + Send + Sync,
{
    merge_by(a, b, |x, y| x < y, DEFAULT_GRAIN)
}

/// [`merge`] with a strict-weak-order `less` and an explicit grain.
///
/// The longer input is cut into blocks; [`rank_by`] places each block
/// boundary in the other input, which yields disjoint output ranges that are
/// merged independently.
pub fn merge_by<T, F>(a: &[T], b: &[T], less: F, grain: usize) -> Vec<T>
where
    T: Clone + Send + Sync,
    F: Fn(&T, &T) -> bool + Sync,
{
    let grain = grain.max(1);
    let filler = match (a.first(), b.first()) {
        (Some(x), _) | (None, Some(x)) => x.clone(),
        (None, None) => return Vec::new(),
    };
    if a.len() + b.len() <= grain {
        let mut out = Vec::with_capacity(a.len() + b.len());
        merge_seq(a, b, &less, &mut out);
        return out;
    }

    // Cut points (ai, bi) into `a` and `b`; block t owns a[ai_t..ai_{t+1}) and
    // b[bi_t..bi_{t+1}).
    let (a_cuts, b_cuts): (Vec<usize>, Vec<usize>) = if a.len() >= b.len() {
        let a_cuts: Vec<usize> = (0..a.len().div_ceil(grain)).map(|t| t * grain).collect();
        let heads: Vec<&T> = a_cuts.iter().map(|&i| &a[i]).collect();
        // b elements strictly below a block's head go before it.
        let mut b_cuts = rank_by(&heads, b, |y, x| less(y, *x), grain);
        b_cuts[0] = 0;
        (a_cuts, b_cuts)
    } else {
        let b_cuts: Vec<usize> = (0..b.len().div_ceil(grain)).map(|t| t * grain).collect();
        let heads: Vec<&T> = b_cuts.iter().map(|&j| &b[j]).collect();
        // a elements at or below a block's head go before it.
        let mut a_cuts = rank_by(&heads, a, |x, y| !less(*y, x), grain);
        a_cuts[0] = 0;
        (a_cuts, b_cuts)
    };
    let blocks = a_cuts.len();
    let a_end = |t: usize| {
        if t + 1 < blocks {
            a_cuts[t + 1]
        } else {
            a.len()
        }
    };
    let b_end = |t: usize| {
        if t + 1 < blocks {
            b_cuts[t + 1]
        } else {
            b.len()
        }
    };
    let lens: Vec<usize> = (0..blocks)
        .map(|t| (a_end(t) - a_cuts[t]) + (b_end(t) - b_cuts[t]))
        .collect();

    let mut out = vec![filler; a.len() + b.len()];
    let mut chunks = split_by_lengths(&mut out, &lens);
    for_each_mut(&mut chunks, 1, &|t, chunk: &mut &mut [T]| {
        let xa = &a[a_cuts[t]..a_end(t)];
        let xb = &b[b_cuts[t]..b_end(t)];
        let (mut i, mut j) = (0, 0);
        for slot in chunk.iter_mut() {
            let take_b = i == xa.len() || (j < xb.len() && less(&xb[j], &xa[i]));
            if take_b {
                *slot = xb[j].clone();
                j += 1;
            } else {
                *slot = xa[i].clone();
                i += 1;
            }
        }
    });
    out
}

fn merge_seq<T: Clone, F: Fn(&T, &T) -> bool>(a: &[T], b: &[T], less: &F, out: &mut Vec<T>) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if less(&b[j], &a[i]) {
            out.push(b[j].clone());
            j += 1;
        } else {
            out.push(a[i].clone());
            i += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Calls `f` on each maximal run of adjacent elements related by `same_run`,
/// processing distinct runs in parallel.
pub fn for_each_run_mut<T, S, F>(items: &mut [T], same_run: &S, grain: usize, f: &F)
where
    T: Send,
    S: Fn(&T, &T) -> bool + Sync,
    F: Fn(&mut [T]) + Sync,
{
    if items.len() <= grain.max(1) {
        for run in items.chunk_by_mut(|x, y| same_run(x, y)) {
            f(run);
        }
        return;
    }
    let half = items.len() / 2;
    let mut mid = half;
    while mid < items.len() && same_run(&items[mid - 1], &items[mid]) {
        mid += 1;
    }
    if mid == items.len() {
        mid = half;
        while mid > 0 && same_run(&items[mid - 1], &items[mid]) {
            mid -= 1;
        }
    }
    if mid == 0 || mid == items.len() {
        f(items);
        return;
    }
    let (lo, hi) = items.split_at_mut(mid);
    join(
        || for_each_run_mut(lo, same_run, grain, f),
        || for_each_run_mut(hi, same_run, grain, f),
    );
}
