//! Reconstruction from counts: the slice-and-bits attack, its masked
//! variant, and the full singling-out attack on released bits.

use super::{AttackOutput, Outcome};
use crate::domain::Predicate;
use crate::mechanisms::BitMatrix;
use crate::{Error, Result};

/// `⌊2^m / n⌋`.
fn slice_width(m: u32, n: u64) -> u128 {
    if m < 128 {
        (1u128 << m) / n as u128
    } else if n.is_power_of_two() {
        1u128 << (128 - n.trailing_zeros())
    } else {
        u128::MAX / n as u128
    }
}

fn check_plan(n: u64, m: u32, r: u32) -> Result<()> {
    let need = 64 - (n.max(1) - 1).leading_zeros() + 1;
    if n < 1 || m > 128 || m < need {
        return Err(Error::parameter(format!(
            "counting attack with n={n} needs {need} <= m <= 128, got m={m}"
        )));
    }
    if r < 1 || r as u64 > n {
        return Err(Error::parameter(format!(
            "repetitions must satisfy 1 <= r <= n, got r={r}"
        )));
    }
    Ok(())
}

/// Slice `j` (from 1): `x ∈ [(j−1)s, js)` with `s = ⌊2^m/n⌋`.
fn slice(m: u32, n: u64, j: u32) -> Result<Predicate> {
    let s = slice_width(m, n);
    if j == 1 {
        Predicate::threshold(m, s)
    } else {
        let lo = s * (j as u128 - 1);
        Predicate::interval(m, lo, lo + s - 1)
    }
}

/// For each repetition, a slice `q₀` followed by `q₀ ∧ x[i]` for `i = 1..=m`.
pub fn counting_attack_queries(n: u64, m: u32, r: u32) -> Result<Vec<Predicate>> {
    check_plan(n, m, r)?;
    let mut out = Vec::with_capacity(r as usize * (m as usize + 1));
    for j in 1..=r {
        let q0 = slice(m, n, j)?;
        out.push(q0.clone());
        for i in 1..=m {
            out.push(Predicate::and(m, [q0.clone(), Predicate::bit_test(m, i, true)?])?);
        }
    }
    Ok(out)
}

/// First repetition whose slice count is exactly 1 yields
/// `q₀ ∧ ⋀ (x[i] = y_i)`; otherwise the attack aborts.
pub fn counting_attack_reconstruct(counts: &[u64], queries: &[Predicate], m: u32) -> Result<AttackOutput> {
    let block = m as usize + 1;
    if queries.is_empty() || !queries.len().is_multiple_of(block) {
        return Err(Error::input(format!(
            "query plan of length {} is not a multiple of m+1={block}",
            queries.len()
        )));
    }
    if counts.len() != queries.len() {
        return Ok(AttackOutput::aborted(format!(
            "{} counts for {} queries",
            counts.len(),
            queries.len()
        )));
    }
    for (c, q) in counts.chunks_exact(block).zip(queries.chunks_exact(block)) {
        if c[0] != 1 {
            continue;
        }
        let mut parts = vec![q[0].clone()];
        for (i, &y) in c[1..].iter().enumerate() {
            parts.push(Predicate::bit_test(m, i as u32 + 1, y >= 1)?);
        }
        return Ok(AttackOutput::single(Predicate::and(m, parts)?));
    }
    Ok(AttackOutput::aborted("no slice isolates a row"))
}

/// Rounds noisy counts to the nearest non-negative integer.
pub fn round_counts(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.round().max(0.0) as u64).collect()
}

/// Queries `(q*, q₀∨q*, q₁∨q*, …, q_m∨q*)` per repetition with `q*` the
/// parity of all bits; every count is about `n/2`.
pub fn masked_counting_attack(n: u64, m: u32, r: u32) -> Result<Vec<Predicate>> {
    let star = Predicate::parity(m)?;
    let mut out = vec![star.clone()];
    for q in counting_attack_queries(n, m, r)? {
        out.push(Predicate::or(m, [q, star.clone()])?);
    }
    Ok(out)
}

/// With `c* = |x_{q*}|`: a slice whose masked count is `c* + 1` holds one
/// row outside `q*`, and `count(q_i ∨ q*) − c*` is its bit `i`.
pub fn masked_counting_reconstruct(
    counts: &[Option<u64>],
    queries: &[Predicate],
    m: u32,
) -> Result<AttackOutput> {
    let block = m as usize + 1;
    if queries.len() < 1 + block || !(queries.len() - 1).is_multiple_of(block) {
        return Err(Error::input("masked query plan has the wrong length"));
    }
    if counts.len() != queries.len() {
        return Ok(AttackOutput::aborted("counts do not match the query plan"));
    }
    let Some(star) = counts[0] else {
        return Ok(AttackOutput::aborted("parity count was suppressed"));
    };
    for (c, q) in counts[1..].chunks_exact(block).zip(queries[1..].chunks_exact(block)) {
        if c[0] != Some(star + 1) {
            continue;
        }
        let crate::domain::Expr::Or { args } = q[0].expr() else {
            return Err(Error::input("masked slice query is not a disjunction"));
        };
        let slice = Predicate::new(m, args[0].clone())?;
        let mut parts = vec![slice];
        for (i, ci) in c[1..].iter().enumerate() {
            let Some(ci) = *ci else {
                return Ok(AttackOutput::aborted("a bit count was suppressed"));
            };
            parts.push(Predicate::bit_test(m, i as u32 + 1, ci > star)?);
        }
        parts.push(Predicate::parity(m)?.not());
        return Ok(AttackOutput::single(Predicate::and(m, parts)?));
    }
    Ok(AttackOutput::aborted("no slice isolates a row outside the parity mask"))
}

/// `x[1..m]` as released bits.
pub fn bit_queries(width: u32, m: u32) -> Result<Vec<Predicate>> {
    (1..=m).map(|i| Predicate::bit_test(width, i, true)).collect()
}

/// One conjunction `⋀ (x[i] = row_j[i])` per released row; aborts on a
/// repeated row.
pub fn full_pso_attack(matrix: &BitMatrix, width: u32) -> Result<AttackOutput> {
    let mut seen = std::collections::HashSet::with_capacity(matrix.n());
    for r in matrix.rows() {
        if !seen.insert(r) {
            return Ok(AttackOutput::aborted("two released rows coincide"));
        }
    }
    let preds = matrix
        .rows()
        .iter()
        .map(|r| {
            let parts = r
                .iter()
                .enumerate()
                .map(|(i, &b)| Predicate::bit_test(width, i as u32 + 1, b))
                .collect::<Result<Vec<_>>>()?;
            Predicate::and(width, parts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttackOutput {
        outcome: Outcome::Full(preds),
        anchor: None,
    })
}
