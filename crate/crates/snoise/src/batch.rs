//! Path batches. Each path draws from its own `(seed, path_index, tag)`
//! streams, so results are identical for any thread count.

use rayon::prelude::*;

use crate::Result;

/// `f(0), …, f(n-1)` evaluated in parallel, returned in index order. The
/// first error by index wins.
pub fn map_paths<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..n as u64).into_par_iter().map(f).collect()
}
