//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs on
//! the rayon pool; without it every map is sequential. Output order always
//! matches input order, so results do not depend on the execution mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Like [`Execution::map`] for fallible closures; the first error in
    /// input order is returned.
    pub fn try_map<T, U, E, F>(self, items: &[T], f: F) -> Result<Vec<U>, E>
    where
        T: Sync,
        U: Send,
        E: Send,
        F: Fn(&T) -> Result<U, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}
