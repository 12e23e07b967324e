//! Execution mode for the data-parallel kernels.
//!
//! Every parallel map collects its results in index order and the caller
//! reduces sequentially, so results do not depend on the thread count.

/// Selects the parallel or the sequential path of a kernel.
///
/// Without the `parallel` feature both variants run sequentially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Evaluates `f` on `0..len`, returning results in index order.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..len).map(f).collect(),
            Exec::Parallel => par_map(len, f),
        }
    }

    /// Evaluates `f` on each item, returning results in input order.
    pub fn map_items<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        self.map(items.len(), |i| f(&items[i]))
    }

    /// Integer sum of `f` over `0..len`; exact, so order does not matter.
    pub fn sum_i128<F>(self, len: usize, f: F) -> i128
    where
        F: Fn(usize) -> i128 + Sync + Send,
    {
        self.map(len, f).into_iter().sum()
    }

    /// Float sum of `f` over `0..len`, reduced sequentially in index order.
    pub fn sum_f64<F>(self, len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        self.map(len, f).into_iter().sum()
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let a = Exec::Sequential.map(1000, |i| i * i);
        let b = Exec::Parallel.map(1000, |i| i * i);
        assert_eq!(a, b);
        assert_eq!(a[31], 961);
        let s = Exec::Parallel.sum_f64(100, |i| 0.1 * i as f64);
        let t = Exec::Sequential.sum_f64(100, |i| 0.1 * i as f64);
        assert_eq!(s.to_bits(), t.to_bits());
    }
}
