//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers run on rayon unless the process-wide
//! mode has been switched to [`Exec::Sequential`]. Without the feature they are
//! plain iterators. Results are always returned in index order, so callers get
//! identical output under either mode.

use std::sync::atomic::{AtomicU8, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

static MODE: AtomicU8 = AtomicU8::new(1);

/// Select the execution mode for subsequent helper calls.
pub fn set_mode(mode: Exec) {
    MODE.store(matches!(mode, Exec::Parallel) as u8, Ordering::SeqCst);
}

pub fn mode() -> Exec {
    if cfg!(feature = "parallel") && MODE.load(Ordering::SeqCst) == 1 {
        Exec::Parallel
    } else {
        Exec::Sequential
    }
}

/// Size the global worker pool; `1` switches to sequential execution. Only
/// the first call can size the pool, later ones just pick the mode.
pub fn set_threads(n: usize) -> crate::Result<()> {
    if n == 0 {
        return Err(crate::Error::Domain("thread count must be positive".into()));
    }
    set_mode(if n == 1 { Exec::Sequential } else { Exec::Parallel });
    #[cfg(feature = "parallel")]
    if n > 1 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Run `f` under `mode`, restoring the previous mode afterwards.
pub fn with_mode<R>(mode: Exec, f: impl FnOnce() -> R) -> R {
    let prev = MODE.load(Ordering::SeqCst);
    set_mode(mode);
    let out = f();
    MODE.store(prev, Ordering::SeqCst);
    out
}

/// Evaluate `f(i)` for `i in 0..n`, in order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode() == Exec::Parallel && n > 1 {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Evaluate `f` on each item, in order.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_range(items.len(), |i| f(&items[i]))
}
