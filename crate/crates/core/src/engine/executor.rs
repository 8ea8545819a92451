/// How worker tasks inside a phase are scheduled.
///
/// `Sequential` is the reference: every result the engine produces is
/// identical under `Parallel`. Without the `parallel` feature, `Parallel`
/// falls back to sequential execution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Executor {
    Sequential,
    Parallel,
}

impl Default for Executor {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Executor::Parallel
        } else {
            Executor::Sequential
        }
    }
}

impl Executor {
    /// Applies `f` to every item with its index, returning results in input order.
    pub fn map_indexed<T, R, F>(self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Executor::Parallel => {
                use rayon::prelude::*;
                items.into_par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
            }
            _ => items.into_iter().enumerate().map(|(i, t)| f(i, t)).collect(),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Executor::Parallel
    }
}
