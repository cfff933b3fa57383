//! Per-site event rates held in fixed point.
//!
//! Each rate is rounded once to a multiple of `2^-48` and stored as an
//! integer, so the running total is exact: after any sequence of updates it
//! equals the sum of the leaves, independently of update order. Updates are
//! O(1); drawing a site proportionally to its rate scans the leaves.

/// Fractional bits of the fixed-point representation.
pub const FRACTION_BITS: i32 = 48;

const ONE: f64 = (1u64 << FRACTION_BITS) as f64;

/// `rate` rounded to the fixed-point grid.
///
/// # Panics
/// If `rate` is negative, not finite, or too large to represent.
pub fn to_fixed(rate: f64) -> u128 {
    let scaled = (rate * ONE).round();
    assert!(
        scaled >= 0.0 && scaled < 2f64.powi(120),
        "rate {rate} outside the representable range"
    );
    scaled as u128
}

/// Nearest-ish `f64` to a fixed-point value; splitting into 64-bit halves is
/// much cheaper than a full `u128` conversion and is deterministic.
#[inline]
pub fn from_fixed(value: u128) -> f64 {
    let hi = (value >> 64) as u64 as f64;
    let lo = value as u64 as f64;
    (hi * 18_446_744_073_709_551_616.0 + lo) / ONE
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateTable {
    leaves: Vec<u128>,
    total: u128,
}

impl RateTable {
    pub fn new(leaves: Vec<u128>) -> Self {
        let total = leaves.iter().sum();
        Self { leaves, total }
    }

    pub fn from_rates(rates: &[f64]) -> Self {
        Self::new(rates.iter().map(|&r| to_fixed(r)).collect())
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn leaves(&self) -> &[u128] {
        &self.leaves
    }

    #[inline]
    pub fn get(&self, i: usize) -> u128 {
        self.leaves[i]
    }

    #[inline]
    pub fn total_fixed(&self) -> u128 {
        self.total
    }

    #[inline]
    pub fn total(&self) -> f64 {
        from_fixed(self.total)
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: u128) {
        let old = std::mem::replace(&mut self.leaves[i], value);
        self.total = self.total - old + value;
    }

    /// Leaf whose cumulative range contains `u * total`, for `u` in `[0, 1)`.
    /// Never returns a zero leaf while the total is positive.
    pub fn search(&self, u: f64) -> usize {
        let target = ((u * self.total as f64) as u128).min(self.total.saturating_sub(1));
        let mut cumulative = 0u128;
        for (i, &leaf) in self.leaves.iter().enumerate() {
            cumulative += leaf;
            if target < cumulative {
                return i;
            }
        }
        self.leaves.len() - 1
    }
}
