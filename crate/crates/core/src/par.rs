//! Data-parallel map over independent jobs. With the `parallel` feature the
//! work runs on a rayon pool of `jobs` threads; otherwise, or with
//! `jobs <= 1`, it runs in order on the calling thread. Results always come
//! back in input order.

#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;

    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running sequentially");
            items.iter().map(f).collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs > 1 {
        log::debug!("built without the `parallel` feature; ignoring jobs={jobs}");
    }
    items.iter().map(f).collect()
}

/// Worker count used when the caller asks for "all cores".
pub fn available_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
