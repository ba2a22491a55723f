//! Row-parallel map with a serial fallback, plus a fixed-shape reduction.
//!
//! Results are always collected in index order and summed with
//! [`pairwise_sum`], so the outcome does not depend on the thread count or on
//! whether the `parallel` feature is enabled.

/// How many worker threads grid evaluations may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    Serial,
    /// Explicit worker count; `Threads(1)` behaves like `Serial`.
    Threads(usize),
    /// The global rayon pool (all cores).
    #[default]
    Auto,
}

impl Parallelism {
    pub fn from_threads(threads: Option<usize>) -> Self {
        match threads {
            None | Some(0) => Parallelism::Auto,
            Some(1) => Parallelism::Serial,
            Some(n) => Parallelism::Threads(n),
        }
    }
}

/// `(0..n).map(f)` evaluated under `par`, in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, par: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match par {
        Parallelism::Serial | Parallelism::Threads(0 | 1) => (0..n).map(f).collect(),
        Parallelism::Auto => (0..n).into_par_iter().map(f).collect(),
        Parallelism::Threads(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            Err(_) => (0..n).map(f).collect(),
        },
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, _par: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

const PAIRWISE_LEAF: usize = 8;

/// Sum with a fixed binary reduction tree over the slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_LEAF {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
