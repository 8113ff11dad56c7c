//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over the rayon pool;
//! without it the same chunks run in order on the calling thread. Chunk
//! boundaries and the order of reductions are identical in both builds, so
//! outputs are bit-for-bit the same.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Rows per work unit for batch operations.
pub const ROW_CHUNK: usize = 2048;

/// Paths per work unit for path simulations.
pub const PATH_CHUNK: usize = 64;

/// Calls `f(chunk_index, chunk)` on consecutive `chunk_len` pieces of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk_len = chunk_len.max(1);
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

/// Maps every chunk of `0..n` to a value; results come back in chunk order.
pub fn map_chunks<R, F>(n: usize, chunk_len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, Range<usize>) -> R + Sync + Send,
{
    let chunk_len = chunk_len.max(1);
    let n_chunks = n.div_ceil(chunk_len);
    let range = |i: usize| i * chunk_len..((i + 1) * chunk_len).min(n);
    #[cfg(feature = "parallel")]
    {
        (0..n_chunks).into_par_iter().map(|i| f(i, range(i))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_chunks).map(|i| f(i, range(i))).collect()
    }
}

/// Runs two closures, concurrently when the feature allows.
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::join(a, b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (a(), b())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_chunks_covers_range_in_order() {
        let parts = map_chunks(10, 3, |i, r| (i, r));
        assert_eq!(parts.len(), 4);
        assert_eq!(parts[0], (0, 0..3));
        assert_eq!(parts[3], (3, 9..10));
        assert!(map_chunks(0, 3, |_, r| r).is_empty());
    }

    #[test]
    fn chunk_mut_sees_every_element() {
        let mut v = vec![0usize; 11];
        for_each_chunk_mut(&mut v, 4, |i, c| c.iter_mut().for_each(|x| *x = i));
        assert_eq!(v, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2]);
    }
}
