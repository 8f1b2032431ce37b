//! Counting, predicate-release and Laplace-noised counting mechanisms.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::MechanismOutput;
use crate::domain::{Dataset, Predicate};
use crate::{Error, Result};

/// `n × |Q|` matrix with entry `(i, j) = q_j(x_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<Vec<bool>>,
}

impl BitMatrix {
    pub fn new(cols: usize, rows: Vec<Vec<bool>>) -> Result<Self> {
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::input(format!("bit matrix rows must all have {cols} columns")));
        }
        Ok(BitMatrix { cols, rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.cols];
        for r in &self.rows {
            for (s, &b) in sums.iter_mut().zip(r) {
                *s += b as u64;
            }
        }
        sums
    }
}

/// `|{i : q(x_i) = 1}|`.
pub fn count_mech(q: &Predicate, x: &Dataset) -> Result<u64> {
    Ok(q.count_matches(x)? as u64)
}

pub fn multi_count_mech(queries: &[Predicate], x: &Dataset) -> Result<Vec<u64>> {
    queries.iter().map(|q| count_mech(q, x)).collect()
}

/// Releases every query's value on every row, in row order.
pub fn predicate_mech(queries: &[Predicate], x: &Dataset) -> Result<BitMatrix> {
    for q in queries {
        if q.width() != x.width() {
            return Err(Error::input(format!(
                "{}-bit query on a {}-bit dataset",
                q.width(),
                x.width()
            )));
        }
    }
    let rows = x
        .rows()
        .iter()
        .map(|&r| queries.iter().map(|q| q.eval(r)).collect())
        .collect();
    Ok(BitMatrix {
        cols: queries.len(),
        rows,
    })
}

/// Replaces counts below `threshold` with `None`.
pub fn suppress_low(counts: &[u64], threshold: u64) -> Vec<Option<u64>> {
    counts
        .iter()
        .map(|&c| (c >= threshold).then_some(c))
        .collect()
}

/// One Laplace(0, `scale`) draw by inverse CDF.
///
/// `u = (⌊v / 2^11⌋ + 1/2) / 2^53` for a uniform 64-bit `v`, so `u ∈ (0, 1)`;
/// the draw is `scale·ln(2u)` when `u < 1/2`, else `−scale·ln(2(1 − u))`.
pub fn laplace_noise<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    if u < 0.5 {
        scale * (2.0 * u).ln()
    } else {
        -scale * (2.0 * (1.0 - u)).ln()
    }
}

/// Counts plus independent Laplace(1/ε) noise per query; `ε = ∞` is exact.
pub fn laplace_count_mech<R: Rng + ?Sized>(
    queries: &[Predicate],
    x: &Dataset,
    epsilon_per_query: f64,
    rng: &mut R,
) -> Result<MechanismOutput> {
    if epsilon_per_query.is_nan() || epsilon_per_query <= 0.0 {
        return Err(Error::parameter(format!(
            "epsilon per query must be positive or infinite, got {epsilon_per_query}"
        )));
    }
    let counts = multi_count_mech(queries, x)?;
    if epsilon_per_query.is_infinite() {
        return Ok(MechanismOutput::Counts(counts));
    }
    let scale = 1.0 / epsilon_per_query;
    Ok(MechanismOutput::NoisyCounts {
        values: counts
            .iter()
            .map(|&c| c as f64 + laplace_noise(scale, rng))
            .collect(),
        epsilon_per_query,
        total_epsilon: queries.len() as f64 * epsilon_per_query,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ds(width: u32, rows: &[u128]) -> Dataset {
        Dataset::new(width, rows.to_vec()).unwrap()
    }

    #[test]
    fn counts() {
        let x = ds(4, &[5, 5, 5]);
        assert_eq!(count_mech(&Predicate::equality(4, 5).unwrap(), &x).unwrap(), 3);
        assert_eq!(count_mech(&Predicate::threshold(4, 0).unwrap(), &x).unwrap(), 0);
        let x = ds(4, &[1, 2, 3]);
        assert_eq!(count_mech(&Predicate::threshold(4, 3).unwrap(), &x).unwrap(), 2);
        assert!(multi_count_mech(&[], &x).unwrap().is_empty());
        let q = Predicate::parity(4).unwrap();
        let c = multi_count_mech(&[q.clone(), q.not()], &x).unwrap();
        assert_eq!(c[0] + c[1], 3);
    }

    #[test]
    fn bit_release() {
        let x = ds(3, &[0b101, 0b010]);
        let qs: Vec<_> = (1..=3).map(|i| Predicate::bit_test(3, i, true).unwrap()).collect();
        let m = predicate_mech(&qs, &x).unwrap();
        assert_eq!(m.rows(), &[vec![true, false, true], vec![false, true, false]]);
        assert_eq!(m.column_sums(), multi_count_mech(&qs, &x).unwrap());
        let all = Predicate::and(3, []).unwrap();
        let m = predicate_mech(&[all], &ds(3, &[1, 2, 3])).unwrap();
        assert!(m.rows().iter().all(|r| r == &[true]));
    }

    #[test]
    fn infinite_epsilon_is_exact() {
        let x = ds(8, &[1, 2, 3, 200]);
        let qs = vec![Predicate::threshold(8, 3).unwrap()];
        let out = laplace_count_mech(&qs, &x, f64::INFINITY, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out, MechanismOutput::Counts(vec![2]));
        assert!(laplace_count_mech(&qs, &x, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn laplace_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws: Vec<f64> = (0..100_000).map(|_| laplace_noise(1.0, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / 1e5;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 1e5;
        assert!(mean.abs() <= 0.05, "mean {mean}");
        assert!((var - 2.0).abs() <= 0.1, "variance {var}");
    }

    #[test]
    fn masking() {
        assert_eq!(suppress_low(&[0, 4, 5, 9], 5), vec![None, None, Some(5), Some(9)]);
    }
}
