//! Thin dispatch between rayon and sequential iteration.
//!
//! With the `parallel` feature disabled (or `parallel == false`) every helper
//! degrades to plain sequential iteration, so results are identical either
//! way; callers keep their own deterministic merge order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map_vec<T, U, F>(parallel: bool, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return items.into_par_iter().map(f).collect();
    }
    let _ = parallel;
    items.into_iter().map(f).collect()
}

pub(crate) fn map_slice<T, U, F>(parallel: bool, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

pub(crate) fn map_indices<U, F>(parallel: bool, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Whether the crate was built with rayon support.
pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}
