//! Trial-range execution.

use core::ops::Range;

/// Runs a counting kernel over the trial range `0..trials` and sums the
/// per-range counts.
///
/// Implementations may split the range however they like. Counts are integers
/// and the kernel draws each trial from its own stream, so the sum does not
/// depend on the split.
pub trait Executor {
    fn count(&self, trials: u64, kernel: &(dyn Fn(Range<u64>) -> u64 + Sync)) -> u64;
}

/// Runs the whole range on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn count(&self, trials: u64, kernel: &(dyn Fn(Range<u64>) -> u64 + Sync)) -> u64 {
        kernel(0..trials)
    }
}

/// Splits `0..trials` into at most `parts` contiguous, nearly equal ranges.
pub fn partition(trials: u64, parts: usize) -> impl Iterator<Item = Range<u64>> {
    let parts = (parts.max(1) as u64).min(trials.max(1));
    let base = trials / parts;
    let extra = trials % parts;
    (0..parts).map(move |i| {
        let start = i * base + i.min(extra);
        let len = base + u64::from(i < extra);
        start..start + len
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn partition_covers_range_exactly() {
        for trials in [0u64, 1, 7, 8, 100, 1001] {
            for parts in [1usize, 3, 8, 2000] {
                let ranges: Vec<_> = partition(trials, parts).collect();
                let mut next = 0;
                for r in &ranges {
                    assert_eq!(r.start, next);
                    next = r.end;
                }
                assert_eq!(next, trials);
            }
        }
    }
}
