//! Keys and their interpolation coordinate.

use core::cmp::Ordering;
use core::fmt;

/// A totally ordered key with a position on the real line.
///
/// `coord` must be monotone: `x < y` implies `coord(x) <= coord(y)`.
/// The tree only uses coordinates to guess a position; every routing decision
/// is confirmed with `Ord`, so coordinates that collapse distinct keys (large
/// 64-bit integers) cost time but never correctness.
pub trait Key: Copy + Ord + Send + Sync + fmt::Debug {
    fn coord(self) -> f64;
}

macro_rules! int_key {
    ($($t:ty),*) => {$(
        impl Key for $t {
            #[inline]
            fn coord(self) -> f64 {
                self as f64
            }
        }
    )*};
}

int_key!(i8, i16, i32, i64, u8, u16, u32, u64, usize, isize);

/// A finite `f64` usable as a key.
///
/// NaN is rejected at construction and `-0.0` is folded into `0.0`, so the
/// derived order is a total order that agrees with `<` on the values.
#[derive(Clone, Copy, PartialEq)]
pub struct FloatKey(f64);

impl FloatKey {
    pub fn new(x: f64) -> Option<Self> {
        if x.is_nan() {
            None
        } else if x == 0.0 {
            Some(FloatKey(0.0))
        } else {
            Some(FloatKey(x))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Eq for FloatKey {}

impl PartialOrd for FloatKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FloatKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Debug for FloatKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

impl Key for FloatKey {
    #[inline]
    fn coord(self) -> f64 {
        self.0
    }
}
