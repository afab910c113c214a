use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts design evaluations (one mean fitness) and simulator runs (one
/// replicate). Slots are claimed atomically, so concurrent evaluations can
/// never overshoot `design_evals_max`.
#[derive(Debug)]
pub struct BudgetLedger {
    design_evals_used: AtomicU64,
    design_evals_max: u64,
    sim_runs_used: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub design_evals_used: u64,
    pub design_evals_max: u64,
    pub sim_runs_used: u64,
}

impl BudgetLedger {
    pub fn new(design_evals_max: u64) -> Self {
        BudgetLedger { design_evals_used: AtomicU64::new(0), design_evals_max, sim_runs_used: AtomicU64::new(0) }
    }

    pub fn remaining(&self) -> u64 {
        self.design_evals_max - self.design_evals_used.load(Ordering::SeqCst)
    }

    pub fn design_evals_used(&self) -> u64 {
        self.design_evals_used.load(Ordering::SeqCst)
    }

    pub fn sim_runs_used(&self) -> u64 {
        self.sim_runs_used.load(Ordering::SeqCst)
    }

    pub fn design_evals_max(&self) -> u64 {
        self.design_evals_max
    }

    pub(crate) fn try_acquire(&self) -> Result<()> {
        let max = self.design_evals_max;
        self.design_evals_used
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |used| (used < max).then_some(used + 1))
            .map(|_| ())
            .map_err(|used| Error::BudgetExhausted { used, max })
    }

    /// Gives back a slot whose evaluation failed.
    pub(crate) fn release(&self) {
        self.design_evals_used.fetch_sub(1, Ordering::SeqCst);
    }

    pub(crate) fn record_sim_runs(&self, runs: u64) {
        self.sim_runs_used.fetch_add(runs, Ordering::SeqCst);
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            design_evals_used: self.design_evals_used(),
            design_evals_max: self.design_evals_max,
            sim_runs_used: self.sim_runs_used(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn never_exceeds_max_under_contention() {
        let ledger = BudgetLedger::new(1000);
        let granted = AtomicU64::new(0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    while ledger.try_acquire().is_ok() {
                        granted.fetch_add(1, Ordering::SeqCst);
                        ledger.record_sim_runs(5);
                    }
                });
            }
        });
        assert_eq!(granted.load(Ordering::SeqCst), 1000);
        let snap = ledger.snapshot();
        assert_eq!(snap.design_evals_used, 1000);
        assert_eq!(snap.sim_runs_used, 5000);
        assert!(matches!(ledger.try_acquire(), Err(Error::BudgetExhausted { used: 1000, max: 1000 })));
    }

    #[test]
    fn release_returns_slot() {
        let ledger = BudgetLedger::new(1);
        ledger.try_acquire().unwrap();
        assert_eq!(ledger.remaining(), 0);
        ledger.release();
        assert_eq!(ledger.remaining(), 1);
    }
}
