//! Rows, datasets, distributions, predicates and the isolation event.

mod distribution;
mod predicate;
mod row;
mod weight;

pub use distribution::{min_entropy, sample_dataset, Distribution, DistributionKind};
pub use predicate::{Dyadic, Expr, HashCut, Pattern, Predicate};
pub use row::{Dataset, Row, MAX_WIDTH};
pub use weight::{
    analytic_weight, enumerate_weight, monte_carlo_weight, predicate_weight, WeightBudget,
    WeightEstimate, WeightMethod,
};

use crate::{Error, Result};

/// `p` isolates a row of `x` when exactly one row satisfies it.
pub fn isolates(p: &Predicate, x: &Dataset) -> Result<bool> {
    Ok(p.isolated_row(x)?.is_some())
}

/// `σ(x) = (x_σ(0), …, x_σ(n−1))` with zero-based indices.
pub fn permute_dataset(x: &Dataset, sigma: &[usize]) -> Result<Dataset> {
    let n = x.len();
    if sigma.len() != n {
        return Err(Error::input(format!(
            "permutation of length {} for {n} rows",
            sigma.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in sigma {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::input("not a permutation of the row indices"));
        }
    }
    Ok(Dataset::from_parts_unchecked(
        x.width(),
        sigma.iter().map(|&i| x.rows()[i]).collect(),
    ))
}
