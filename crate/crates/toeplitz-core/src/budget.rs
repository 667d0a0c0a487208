//! Memory budget for window materializations.
//!
//! The budget bounds the size of any single materialization (window, period,
//! factor table), read once per process from `TOEPLITZ_MEM_BUDGET` in bytes
//! (default 1 GiB). Exceeding it is a hard error so desk-scale runs stay
//! desk-scale instead of swapping.

use crate::error::{Error, Result};
use std::sync::OnceLock;

pub const DEFAULT_BUDGET: u64 = 1 << 30;

static BUDGET: OnceLock<u64> = OnceLock::new();

pub fn budget_bytes() -> u64 {
    *BUDGET.get_or_init(|| {
        std::env::var("TOEPLITZ_MEM_BUDGET")
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_BUDGET)
    })
}

/// Check a single allocation of `bytes` against the budget.
pub fn charge(bytes: u64) -> Result<()> {
    let budget = budget_bytes();
    if bytes > budget {
        return Err(Error::BudgetExceeded {
            needed: bytes,
            budget,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_budget_allows_small_charges() {
        assert!(charge(1024).is_ok());
        assert!(charge(u64::MAX).is_err());
    }
}
