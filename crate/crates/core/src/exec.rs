//! Serial or thread-pool execution of per-cell element loops.
//!
//! Parallel runs stay deterministic for a fixed thread count: cell ranges
//! are chunked in index order and partial results are combined in chunk
//! order, so the only synchronization point is the final ordered merge.

use rayon::prelude::*;

pub enum ExecMode {
    Serial,
    Parallel(rayon::ThreadPool),
}

impl ExecMode {
    pub fn new(threads: usize) -> ExecMode {
        if threads <= 1 {
            ExecMode::Serial
        } else {
            ExecMode::Parallel(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .expect("thread pool"),
            )
        }
    }

    /// Map over item indices, preserving order.
    pub fn map<T: Send>(&self, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        match self {
            ExecMode::Serial => (0..n).map(f).collect(),
            ExecMode::Parallel(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
        }
    }

    /// Map with a per-worker scratch value, preserving order.
    pub fn map_with<S, T: Send>(
        &self,
        n: usize,
        init: impl Fn() -> S + Sync + Send,
        f: impl Fn(&mut S, usize) -> T + Sync + Send,
    ) -> Vec<T> {
        match self {
            ExecMode::Serial => {
                let mut scratch = init();
                (0..n).map(|i| f(&mut scratch, i)).collect()
            }
            ExecMode::Parallel(pool) => {
                pool.install(|| (0..n).into_par_iter().map_init(&init, |s, i| f(s, i)).collect())
            }
        }
    }

    /// Fold per-item contributions into a shared accumulator. The closure
    /// must only add into the slice it is given.
    pub fn accumulate(&self, n: usize, out: &mut [f64], fold: impl Fn(usize, &mut [f64]) + Sync + Send) {
        match self {
            ExecMode::Serial => {
                for i in 0..n {
                    fold(i, out);
                }
            }
            ExecMode::Parallel(pool) => {
                if n == 0 {
                    return;
                }
                let n_chunks = (pool.current_num_threads() * 4).min(n);
                let chunk = n.div_ceil(n_chunks);
                let len = out.len();
                let parts: Vec<Vec<f64>> = pool.install(|| {
                    (0..n_chunks)
                        .into_par_iter()
                        .map(|c| {
                            let mut local = vec![0.0; len];
                            for i in c * chunk..((c + 1) * chunk).min(n) {
                                fold(i, &mut local);
                            }
                            local
                        })
                        .collect()
                });
                for part in parts {
                    for (o, v) in out.iter_mut().zip(part) {
                        *o += v;
                    }
                }
            }
        }
    }

    /// Max-reduction over item indices.
    pub fn max(&self, n: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
        match self {
            ExecMode::Serial => (0..n).map(f).fold(f64::NEG_INFINITY, f64::max),
            ExecMode::Parallel(pool) => pool.install(|| {
                (0..n)
                    .into_par_iter()
                    .map(f)
                    .reduce(|| f64::NEG_INFINITY, f64::max)
            }),
        }
    }
}
