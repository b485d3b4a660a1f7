use core::fmt;

use crate::prim::DEFAULT_GRAIN;

/// Tuning parameters of a [`Tree`](crate::Tree).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Config {
    /// Exponent of the interpolation table size: a subtree of `n` keys gets
    /// `floor(n^alpha)` table entries. Must lie in `[0.5, 1)`.
    pub alpha: f64,
    /// A subtree is rebuilt once the updates routed through it since its last
    /// rebuild reach `rebuild_ratio` times its size at that rebuild.
    pub rebuild_ratio: f64,
    /// Subtrees with at most this many keys are stored as a plain sorted
    /// node without children or table.
    pub leaf_cutoff: usize,
    /// Work below this many elements runs sequentially.
    pub grain: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            alpha: 0.5,
            rebuild_ratio: 0.25,
            leaf_cutoff: 3,
            grain: DEFAULT_GRAIN,
        }
    }
}

impl Config {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_rebuild_ratio(mut self, ratio: f64) -> Self {
        self.rebuild_ratio = ratio;
        self
    }

    pub fn with_leaf_cutoff(mut self, cutoff: usize) -> Self {
        self.leaf_cutoff = cutoff;
        self
    }

    pub fn with_grain(mut self, grain: usize) -> Self {
        self.grain = grain;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.alpha >= 0.5 && self.alpha < 1.0) {
            return Err(ConfigError::Alpha(self.alpha));
        }
        if !(self.rebuild_ratio > 0.0 && self.rebuild_ratio <= 1.0) {
            return Err(ConfigError::RebuildRatio(self.rebuild_ratio));
        }
        if self.leaf_cutoff == 0 {
            return Err(ConfigError::LeafCutoff);
        }
        if self.grain == 0 {
            return Err(ConfigError::Grain);
        }
        Ok(())
    }

    /// Interpolation table length for a subtree of `n` keys (at least 1).
    pub fn table_len(&self, n: usize) -> usize {
        let m = if self.alpha == 0.5 {
            n.isqrt()
        } else {
            libm::floor(libm::pow(n as f64, self.alpha)) as usize
        };
        m.max(1)
    }

    pub(crate) fn needs_rebuild(&self, ops: usize, size_at_rebuild: usize) -> bool {
        ops as f64 >= self.rebuild_ratio * size_at_rebuild as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConfigError {
    Alpha(f64),
    RebuildRatio(f64),
    LeafCutoff,
    Grain,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Alpha(a) => write!(f, "alpha must lie in [0.5, 1), got {a}"),
            ConfigError::RebuildRatio(r) => write!(f, "rebuild ratio must lie in (0, 1], got {r}"),
            ConfigError::LeafCutoff => f.write_str("leaf cutoff must be at least 1"),
            ConfigError::Grain => f.write_str("grain must be at least 1"),
        }
    }
}

impl core::error::Error for ConfigError {}
