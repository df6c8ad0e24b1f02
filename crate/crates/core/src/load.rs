//! Even work division across a fixed number of workers.
//!
//! `Q` items are split over `V` workers as `U = Q / V` items each, with the
//! `W = Q % V` leftover items handed one apiece to the first `W` workers.
//! Every parallel phase in the crate (scanning, slot advance, candidate
//! growth, finalization, merging) partitions its work this way.

use std::ops::Range;
use std::thread;

/// Per-worker item counts: the first `Q % V` workers take `Q / V + 1`.
pub fn split_sizes(total: usize, workers: usize) -> Vec<usize> {
    let workers = workers.max(1);
    let base = total / workers;
    let extra = total % workers;
    (0..workers)
        .map(|w| base + usize::from(w < extra))
        .collect()
}

/// Contiguous per-worker ranges partitioning `0..total`.
pub fn split_ranges(total: usize, workers: usize) -> Vec<Range<usize>> {
    let mut start = 0;
    split_sizes(total, workers)
        .into_iter()
        .map(|len| {
            let range = start..start + len;
            start += len;
            range
        })
        .collect()
}

/// Runs `job` once per worker range and returns the results in worker order.
///
/// A single worker runs inline; otherwise each range gets a scoped thread.
pub fn run_split<T, F>(total: usize, workers: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, Range<usize>) -> T + Sync,
{
    let ranges = split_ranges(total, workers);
    if ranges.len() == 1 {
        return vec![job(0, ranges[0].clone())];
    }
    thread::scope(|scope| {
        let handles: Vec<_> = ranges
            .into_iter()
            .enumerate()
            .map(|(worker, range)| {
                let job = &job;
                scope.spawn(move || job(worker, range))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Splits `data` into per-worker mutable chunks and runs `job` on each.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], workers: usize, job: F)
where
    T: Send,
    F: Fn(&mut [T]) + Sync,
{
    let sizes = split_sizes(data.len(), workers);
    if sizes.len() == 1 {
        job(data);
        return;
    }
    thread::scope(|scope| {
        let mut rest = data;
        for len in sizes {
            let (chunk, tail) = rest.split_at_mut(len);
            rest = tail;
            let job = &job;
            scope.spawn(move || job(chunk));
        }
    });
}
