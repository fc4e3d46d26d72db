//! Data-parallel map helpers. The `parallel` feature routes index sweeps
//! through rayon; the sequential path is always compiled and the reduction
//! is by index, so results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over 0..n sequentially.
pub fn map_indexed_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U + Sync,
    U: Send,
{
    (0..n).map(f).collect()
}

/// Map `f` over 0..n with rayon.
#[cfg(feature = "parallel")]
pub fn map_indexed_par<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U + Sync + Send,
    U: Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over 0..n, parallel when the feature is enabled.
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U + Sync + Send,
    U: Send,
{
    #[cfg(feature = "parallel")]
    {
        map_indexed_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(n, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_and_seq_agree() {
        let f = |i: usize| (i as f64).sqrt();
        let a = map_indexed_seq(100, f);
        let b = map_indexed(100, f);
        assert_eq!(a, b);
    }
}
