//! Ordered data-parallel map. With the `parallel` feature off everything
//! runs on the calling thread; results are identical either way because the
//! output is always collected in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

pub(crate) fn map_indexed_sequential<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}
