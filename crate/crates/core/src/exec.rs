//! Point-batch execution. Every batch in the crate goes through these helpers
//! so the `parallel` feature can be switched off without touching call sites.
//! Results are always collected in index order, so output does not depend on
//! the policy.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecPolicy {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise falls back
    /// to sequential evaluation.
    #[default]
    Parallel,
}

impl ExecPolicy {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecPolicy::Parallel
    }
}

pub fn map_range<T, F>(policy: ExecPolicy, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = policy;
    (0..n).map(f).collect()
}

pub fn try_map_range<T, F>(policy: ExecPolicy, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = policy;
    (0..n).map(f).collect()
}

pub fn map_slice<S, T, F>(policy: ExecPolicy, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_range(policy, items.len(), |i| f(&items[i]))
}

pub fn try_map_slice<S, T, F>(policy: ExecPolicy, items: &[S], f: F) -> Result<Vec<T>>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> Result<T> + Sync + Send,
{
    try_map_range(policy, items.len(), |i| f(&items[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree_and_keep_order() {
        let seq = map_range(ExecPolicy::Sequential, 1000, |i| (i as f64).sqrt());
        let par = map_range(ExecPolicy::Parallel, 1000, |i| (i as f64).sqrt());
        assert_eq!(seq, par);
    }

    #[test]
    fn first_error_is_reported() {
        let r: Result<Vec<usize>> = try_map_range(ExecPolicy::Sequential, 10, |i| {
            if i == 3 {
                Err(crate::Error::Study("boom".into()))
            } else {
                Ok(i)
            }
        });
        assert!(r.is_err());
    }
}
