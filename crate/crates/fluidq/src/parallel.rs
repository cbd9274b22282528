//! Data-parallel map helpers.
//!
//! Density levels, quadrature nodes, and parameter sweeps are independent
//! work items; with the `parallel` feature (default) they fan out over a
//! rayon pool, otherwise they run sequentially through the identical code
//! path. The explicit `*_seq` forms exist so benchmarks can compare the two
//! executions directly. Output order always matches input order, so results
//! are deterministic either way.

use crate::error::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map_seq<T, U, I, F>(items: I, f: F) -> Vec<U>
where
    I: IntoIterator<Item = T>,
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

pub fn try_map_seq<T, U, I, F>(items: I, f: F) -> Result<Vec<U>>
where
    I: IntoIterator<Item = T>,
    F: Fn(T) -> Result<U>,
{
    items.into_iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map<T, U, I, F>(items: I, f: F) -> Vec<U>
where
    I: IntoIterator<Item = T>,
    T: Send,
    U: Send,
    F: Fn(T) -> U + Send + Sync,
{
    let items: Vec<T> = items.into_iter().collect();
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, U, I, F>(items: I, f: F) -> Vec<U>
where
    I: IntoIterator<Item = T>,
    T: Send,
    U: Send,
    F: Fn(T) -> U + Send + Sync,
{
    map_seq(items, f)
}

#[cfg(feature = "parallel")]
pub fn try_map<T, U, I, F>(items: I, f: F) -> Result<Vec<U>>
where
    I: IntoIterator<Item = T>,
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U> + Send + Sync,
{
    let items: Vec<T> = items.into_iter().collect();
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn try_map<T, U, I, F>(items: I, f: F) -> Result<Vec<U>>
where
    I: IntoIterator<Item = T>,
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U> + Send + Sync,
{
    try_map_seq(items, f)
}

/// Runs `f` inside a pool capped at `threads` workers when given (and the
/// `parallel` feature is enabled); otherwise runs it as-is.
#[cfg(feature = "parallel")]
pub fn with_thread_cap<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(t) if t > 0 => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_thread_cap<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}
