//! Order-preserving batch map over independent jobs.

/// Maps `f` over `items` on the calling thread.
pub fn map_sequential<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Maps `f` over `items` on a dedicated pool of `threads` workers.
#[cfg(feature = "parallel")]
pub fn map_parallel<T, U, F>(items: Vec<T>, threads: usize, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| items.into_par_iter().map(f).collect())
}

/// Parallel when built with the `parallel` feature and `threads > 1`,
/// sequential otherwise. Output order always matches input order.
pub fn map<T, U, F>(items: Vec<T>, threads: usize, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if threads > 1 {
        return map_parallel(items, threads, f);
    }
    let _ = threads;
    map_sequential(items, f)
}

/// Worker count suggested by the platform.
pub fn available_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
