//! Small shared helpers.

/// Ceiling of log2(x) for x >= 1; 0 for x in {0, 1}.
pub fn ceil_log2(x: u128) -> u64 {
    if x <= 1 {
        return 0;
    }
    128 - (x - 1).leading_zeros() as u64
}
