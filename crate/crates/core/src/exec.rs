//! Choice of execution strategy for data-parallel loops.

/// How batched work (Monte-Carlo realizations, parameter sweeps) is run.
///
/// Results never depend on the strategy: work is split into fixed-size
/// chunks whose partial sums are reduced in chunk order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon pool; `workers = None` uses the global pool. Falls back to
    /// sequential execution when the `parallel` feature is disabled.
    #[default]
    Parallel,
    ParallelWith {
        workers: usize,
    },
}

impl Execution {
    /// Maps each index of `0..n_chunks` through `f` and returns the results in
    /// index order.
    pub fn map_chunks<T, F>(self, n_chunks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n_chunks).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n_chunks).into_par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Execution::ParallelWith { workers } => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new()
                    .num_threads(workers.max(1))
                    .build()
                {
                    Ok(pool) => pool.install(|| (0..n_chunks).into_par_iter().map(f).collect()),
                    Err(_) => (0..n_chunks).map(f).collect(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel | Execution::ParallelWith { .. } => (0..n_chunks).map(f).collect(),
        }
    }
}
