//! Batch checking of many independent histories.
//!
//! Each check is pure and internally sequential; batches fan out across
//! threads with rayon when the `parallel` feature is enabled (the
//! default). With the feature off, or with `parallel = false`, the batch
//! runs sequentially on the calling thread.

use std::collections::BTreeMap;

use crate::checker::{check, CheckError, CheckOptions, Verdict};
use crate::histories::Execution;
use crate::interval::IntervalSpec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over the items, in parallel when asked and compiled in.
pub fn map_items<T, U, F>(items: &[T], parallel: bool, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            return items.par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Checks every execution against the same spec binding.
pub fn check_many(
    executions: &[Execution],
    specs: &BTreeMap<String, IntervalSpec>,
    opts: &CheckOptions,
    parallel: bool,
) -> Vec<Result<Verdict, CheckError>> {
    map_items(executions, parallel, |e| check(e, specs, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{bind_all, Condition};
    use crate::objects::{builtin_spec, BuiltinObjectId};
    use crate::sim::fuzz_write_snapshot;

    #[test]
    fn parallel_and_sequential_agree() {
        let spec = builtin_spec(&BuiltinObjectId::new("write_snapshot", 3)).unwrap();
        let execs: Vec<Execution> = fuzz_write_snapshot(3, 3, 8)
            .into_iter()
            .map(|t| t.execution)
            .collect();
        let specs = bind_all(&execs[0], &spec);
        let opts = CheckOptions::new(Condition::IntervalLinearizable);
        let seq: Vec<bool> = check_many(&execs, &specs, &opts, false)
            .into_iter()
            .map(|v| v.unwrap().ok)
            .collect();
        let par: Vec<bool> = check_many(&execs, &specs, &opts, true)
            .into_iter()
            .map(|v| v.unwrap().ok)
            .collect();
        assert_eq!(seq, par);
        assert!(seq.iter().all(|b| *b));
    }
}
