//! Deterministic parallel row evaluation with an operation budget.
//!
//! Rows are evaluated in parallel chunks, then accounted for in input order.
//! A row is kept only if the running operation total, including that row,
//! stays within the budget, so the kept prefix does not depend on the number
//! of worker threads.

use rayon::prelude::*;

use crate::setops;

const CHUNK: usize = 256;

#[derive(Debug, Clone)]
pub struct RunOutcome<T> {
    pub rows: Vec<T>,
    pub truncated: bool,
    pub ops: u64,
}

pub fn run_rows<I, T, F>(items: &[I], budget: Option<u64>, f: F) -> RunOutcome<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync,
{
    let mut rows = Vec::with_capacity(items.len());
    let mut total = 0u64;
    for chunk in items.chunks(CHUNK) {
        let done: Vec<(T, u64)> = chunk
            .par_iter()
            .map(|item| {
                setops::reset_ops();
                let row = f(item);
                (row, setops::ops())
            })
            .collect();
        for (row, ops) in done {
            total += ops;
            if budget.is_some_and(|b| total > b) {
                return RunOutcome {
                    rows,
                    truncated: true,
                    ops: total - ops,
                };
            }
            rows.push(row);
        }
    }
    RunOutcome {
        rows,
        truncated: false,
        ops: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_cuts_a_prefix() {
        let items: Vec<u64> = (0..1000).collect();
        let full = run_rows(&items, None, |&x| x * 2);
        assert_eq!(full.rows.len(), 1000);
        assert!(!full.truncated);
        assert_eq!(full.rows[999], 1998);
    }
}
