//! Fixtures shared by the benchmarks.

use gbe_core::synth::{benchmark_schedule, generate};
use gbe_core::WeeklyDataset;

/// The three-phase synthetic benchmark: 40 items, 300 baskets per week, 8 weeks per phase.
pub fn benchmark_dataset(seed: u64) -> WeeklyDataset {
    let schedule = benchmark_schedule(40, 8, 0.6, 0.02);
    generate(&schedule, 40, 300, seed)
        .expect("benchmark schedule is valid")
        .0
}

/// A deterministic sparse graph on `n` nodes: a ring plus chords every `stride` nodes.
pub fn ring_with_chords(n: usize, stride: usize) -> (Vec<usize>, Vec<(usize, usize)>) {
    let nodes: Vec<usize> = (0..n).collect();
    let mut edges: Vec<(usize, usize)> = (0..n)
        .map(|i| (i.min((i + 1) % n), i.max((i + 1) % n)))
        .collect();
    edges.extend((0..n).step_by(stride).filter_map(|i| {
        let j = (i + n / 2) % n;
        (i < j).then_some((i, j))
    }));
    edges.sort_unstable();
    edges.dedup();
    (nodes, edges)
}
