//! Multi-threaded trial execution.

use std::num::NonZeroUsize;
use std::ops::Range;

use coopbeam_core::exec::{partition, Executor};

/// Splits each Monte Carlo point's trials over scoped worker threads.
///
/// Counts are summed in a fixed order and each trial owns its random
/// stream, so results do not depend on the worker count.
#[derive(Debug, Clone, Copy)]
pub struct Threaded {
    workers: NonZeroUsize,
}

impl Threaded {
    pub fn new(workers: usize) -> Self {
        Self { workers: NonZeroUsize::new(workers).unwrap_or(NonZeroUsize::MIN) }
    }

    pub fn workers(&self) -> usize {
        self.workers.get()
    }
}

impl Executor for Threaded {
    fn count(&self, trials: u64, kernel: &(dyn Fn(Range<u64>) -> u64 + Sync)) -> u64 {
        if self.workers.get() == 1 || trials < 2 {
            return kernel(0..trials);
        }
        std::thread::scope(|s| {
            let handles: Vec<_> = partition(trials, self.workers.get()).map(|r| s.spawn(move || kernel(r))).collect();
            handles.into_iter().map(|h| h.join().expect("trial worker panicked")).sum()
        })
    }
}
