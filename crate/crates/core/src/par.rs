//! Element-parallel maps with results collected in index order, so that any
//! subsequent sequential reduction is independent of the thread count.

#[cfg(feature = "parallel")]
const PAR_THRESHOLD: usize = 4096;

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if n >= PAR_THRESHOLD {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Configures the global thread pool from `LOGDP_THREADS` when set. Returns
/// the thread count in effect, or `None` without the `parallel` feature.
pub fn configure_threads_from_env() -> Option<usize> {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = std::env::var("LOGDP_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
            // a second initialisation attempt is harmless
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Some(rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        None
    }
}
