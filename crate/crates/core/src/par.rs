//! Thin dispatch layer over rayon.
//!
//! Every data-parallel kernel in the crate goes through these helpers so the
//! sequential fallback (build without the `rayon` feature) and the
//! parallel path share one implementation. Reductions split the index range
//! into fixed-size chunks and combine the partial sums in chunk order, so the
//! result does not depend on the number of worker threads.

#[cfg(feature = "rayon")]
use rayon::prelude::*;

/// Chunk length used for deterministic reductions and row blocks.
pub const CHUNK: usize = 4096;

/// Execution strategy for the kernels that expose both paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "rayon") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `out[i] = f(i)` for every index.
pub fn fill<F>(exec: Execution, out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    match exec {
        #[cfg(feature = "rayon")]
        Execution::Parallel => out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i)),
        _ => out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i)),
    }
}

/// `out[i] = f(i, out[i])` for every index.
pub fn update<F>(exec: Execution, out: &mut [f64], f: F)
where
    F: Fn(usize, f64) -> f64 + Sync + Send,
{
    match exec {
        #[cfg(feature = "rayon")]
        Execution::Parallel => out
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, o)| *o = f(i, *o)),
        _ => out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i, *o)),
    }
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum<F>(exec: Execution, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    };
    let parts: Vec<f64> = map(exec, chunks, partial);
    parts.iter().sum()
}

/// Collects `f(i)` for `0..n` in index order.
pub fn map<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "rayon")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_identical_across_strategies() {
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let a = sum(Execution::Sequential, 100_003, f);
        let b = sum(Execution::Parallel, 100_003, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn fill_and_update() {
        let mut v = vec![0.0; 10];
        fill(Execution::default(), &mut v, |i| i as f64);
        update(Execution::default(), &mut v, |i, x| x + i as f64);
        assert_eq!(v[9], 18.0);
    }
}
