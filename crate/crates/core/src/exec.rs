//! Execution strategy for the crate's data-parallel loops.
//!
//! Every parallel loop in the crate maps an indexed collection to an ordered
//! `Vec`, and any reduction afterwards happens sequentially in index order.
//! Results are therefore bit-identical between [`Execution::Sequential`] and
//! [`Execution::Parallel`], and independent of the thread count.

/// How a data-parallel loop is run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is compiled in, otherwise
    /// falls back to sequential iteration.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Maps `f` over consecutive chunks of `items`, preserving order.
    pub fn map_chunks<T, U, F>(self, items: &[T], chunk: usize, f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&[T]) -> U + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_chunks(chunk).map(f).collect();
        }
        items.chunks(chunk).map(f).collect()
    }

    /// Like [`Execution::map`] but short-circuits on the first error in index order.
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
