//! Order-preserving map over independent work items. With the `parallel`
//! feature the items are spread over the rayon pool in fixed-size chunks;
//! without it they run sequentially. Either way the output vector is in input
//! order, and each item must derive any randomness from its own index, so the
//! result is identical for every thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Items per rayon task. Fixed so the split does not depend on the pool size.
pub const CHUNK: usize = 4;

#[cfg(feature = "parallel")]
pub fn map_indexed<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    items
        .par_iter()
        .with_min_len(CHUNK)
        .enumerate()
        .map(|(i, t)| f(i, t))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// `map_indexed` over `0..n`.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    let idx: Vec<usize> = (0..n).collect();
    map_indexed(&idx, |_, &i| f(i))
}

/// True when the crate was built with rayon support.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let out = map_range(37, |i| i * i);
        assert_eq!(out, (0..37).map(|i| i * i).collect::<Vec<_>>());
    }
}
