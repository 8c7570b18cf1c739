//! Trial-level execution: data-parallel map over independent sub-seeded tasks
//! with a sequential fallback.
//!
//! Results are collected in index order, so the parallel and sequential paths
//! return identical vectors; parallelism never alters output bytes.

/// Maps `f` over `0..n` in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn par_map<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Sequential build: same signature, same output order.
#[cfg(not(feature = "parallel"))]
pub fn par_map<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    seq_map(n, f)
}

/// Always-sequential map, kept available for benchmarking against the
/// parallel path.
pub fn seq_map<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_and_seq_agree_in_order() {
        let f = |i: usize| (i * i) as u64;
        assert_eq!(par_map(100, f), seq_map(100, f));
    }
}
