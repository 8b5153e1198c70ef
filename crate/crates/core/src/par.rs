//! Data-parallel iteration that degrades to sequential iteration when the
//! `parallel` feature is off.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub trait MaybeParIter: IntoParallelIterator + IntoIterator {
    type Iter;
    fn maybe_par_iter(self) -> <Self as MaybeParIter>::Iter;
}

#[cfg(feature = "parallel")]
impl<I: IntoParallelIterator + IntoIterator> MaybeParIter for I {
    type Iter = <Self as IntoParallelIterator>::Iter;

    fn maybe_par_iter(self) -> <Self as MaybeParIter>::Iter {
        self.into_par_iter()
    }
}

#[cfg(not(feature = "parallel"))]
pub trait MaybeParIter: IntoIterator {
    type Iter;
    fn maybe_par_iter(self) -> <Self as MaybeParIter>::Iter;
}

#[cfg(not(feature = "parallel"))]
impl<I: IntoIterator> MaybeParIter for I {
    type Iter = <Self as IntoIterator>::IntoIter;

    fn maybe_par_iter(self) -> <Self as MaybeParIter>::Iter {
        self.into_iter()
    }
}

/// Applies `f` to every item with its index, in parallel when requested and
/// compiled in. Results keep item order either way.
pub fn map_indexed<T, R, F>(items: &mut [T], parallel: bool, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut T) -> R + Sync + Send,
{
    if parallel {
        items
            .maybe_par_iter()
            .enumerate()
            .map(|(i, t)| f(i, t))
            .collect()
    } else {
        items.iter_mut().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}
