//! Chunked data-parallel evaluation.
//!
//! Per-sample reductions are split into fixed-size chunks whose partial
//! results are combined left to right. The chunk boundaries do not depend on
//! the thread count, so the parallel and serial paths produce bitwise
//! identical sums.

use std::sync::atomic::{AtomicBool, Ordering};

/// Number of samples per reduction chunk.
pub const CHUNK: usize = 512;

static FORCE_SERIAL: AtomicBool = AtomicBool::new(false);

/// Force serial evaluation at runtime (the `--deterministic` switch).
///
/// Results are identical either way; this only pins execution to the
/// calling thread.
pub fn set_serial(serial: bool) {
    FORCE_SERIAL.store(serial, Ordering::SeqCst);
}

pub fn is_serial() -> bool {
    !cfg!(feature = "parallel") || FORCE_SERIAL.load(Ordering::SeqCst)
}

/// Splits `0..n` into `CHUNK`-sized ranges.
pub fn chunks(n: usize) -> Vec<std::ops::Range<usize>> {
    (0..n.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(n))
        .collect()
}

/// Maps `f` over the chunks of `0..n`, returning results in chunk order.
pub fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    map_items(chunks(n), f)
}

/// Maps `f` over `items`, in parallel unless serial mode is active. Output
/// order always matches input order.
pub fn map_items<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !is_serial() && items.len() > 1 {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
    }
    items.into_iter().map(f).collect()
}
