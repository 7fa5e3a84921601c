//! Data-parallel map helpers.
//!
//! With the `parallel` feature (default) the dispatching functions fan work
//! out over rayon; without it they fall back to the sequential versions.
//! Results are collected in input order either way, so callers are
//! deterministic regardless of worker count. The `_seq` variants are always
//! available so benchmarks can compare both code paths in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..count`, preserving index order.
#[cfg(feature = "parallel")]
pub fn map_range<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Map `f` over `0..count`, preserving index order.
#[cfg(not(feature = "parallel"))]
pub fn map_range<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    map_range_seq(count, f)
}

/// Sequential version of [`map_range`].
pub fn map_range_seq<U, F>(count: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..count).map(f).collect()
}

/// Map `f` over a slice, preserving element order.
#[cfg(feature = "parallel")]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Map `f` over a slice, preserving element order.
#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    map_slice_seq(items, f)
}

/// Sequential version of [`map_slice`].
pub fn map_slice_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispatch_matches_sequential_order() {
        let squares = map_range(100, |i| i * i);
        assert_eq!(squares, map_range_seq(100, |i| i * i));

        let data: Vec<i64> = (0..50).collect();
        assert_eq!(map_slice(&data, |x| x * 3), map_slice_seq(&data, |x| x * 3));
    }
}
