//! Execution policy and deterministic random sub-streams.
//!
//! Every (realization, carrier) pair owns a ChaCha stream derived from the
//! master seed and its indices, so results do not depend on how work is
//! split between threads. Parallel maps always return results in index
//! order and reductions are done sequentially over that order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

/// Random stream for `(realization, carrier)` under `seed`.
pub fn stream_rng(seed: u64, realization: u32, carrier: u32) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((realization as u64) << 32) | carrier as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Rayon's current pool. Falls back to sequential when the `parallel`
    /// feature is disabled.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f)` collected in index order.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Run `op` on a pool with `workers` threads (`None` = rayon default).
/// Without the `parallel` feature this simply calls `op`.
pub fn with_workers<R: Send>(workers: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = workers {
        match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => return pool.install(op),
            Err(e) => log::warn!("could not build a {n}-thread pool ({e}); using the global pool"),
        }
    }
    let _ = workers;
    op()
}
