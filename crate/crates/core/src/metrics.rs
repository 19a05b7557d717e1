//! Rank metrics over 1-based ranks.

use crate::error::{IacnError, Result};

fn check(ranks: &[usize]) -> Result<()> {
    if ranks.is_empty() {
        return Err(IacnError::Empty("no ranks to score".into()));
    }
    if ranks.contains(&0) {
        return Err(IacnError::InvalidArgument(
            "ranks are 1-based; got 0".into(),
        ));
    }
    Ok(())
}

/// Mean reciprocal rank.
pub fn mrr(ranks: &[usize]) -> Result<f64> {
    check(ranks)?;
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

/// Fraction of ranks within the top `k`.
pub fn recall_at_k(ranks: &[usize], k: usize) -> Result<f64> {
    check(ranks)?;
    Ok(ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64)
}
