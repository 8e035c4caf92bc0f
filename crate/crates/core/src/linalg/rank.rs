use itertools::Itertools;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::bareiss;
use super::matrix::{DiagonalMatrix, Matrix};
use super::scalar::{Backend, Rational, Scalar};
use crate::combinat::binomial;
use crate::error::{Error, Result};

/// Cap on the number of index subsets a brute-force routine may enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget(pub u128);

impl Default for Budget {
    fn default() -> Self {
        Budget(1_000_000)
    }
}

impl Budget {
    pub fn check(self, what: &str, count: u128) -> Result<()> {
        if count > self.0 {
            Err(Error::Budget { what: what.to_string(), count, budget: self.0 })
        } else {
            Ok(())
        }
    }
}

/// Singular-value threshold rule for floating-point rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum TolerancePolicy {
    /// `c * sigma_max * max(rows, cols) * eps`.
    Relative(f64),
    Absolute(f64),
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy::Relative(1.0)
    }
}

impl TolerancePolicy {
    pub fn threshold(self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        match self {
            TolerancePolicy::Relative(c) => c * sigma_max * rows.max(cols) as f64 * f64::EPSILON,
            TolerancePolicy::Absolute(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankResult {
    pub rank: usize,
    pub backend: Backend,
    pub tolerance: Option<f64>,
    pub singular_values: Option<Vec<f64>>,
}

pub fn rank_exact(m: &Matrix<Rational>) -> RankResult {
    RankResult {
        rank: bareiss::rank_rational(m.data(), m.rows(), m.cols()),
        backend: Backend::Exact,
        tolerance: None,
        singular_values: None,
    }
}

pub fn rank_float(m: &Matrix<f64>, policy: TolerancePolicy) -> Result<RankResult> {
    if !m.is_finite() {
        return Err(Error::Domain("rank_float needs finite entries".into()));
    }
    let mut sv: Vec<f64> = m.to_nalgebra().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let tol = policy.threshold(sigma_max, m.rows(), m.cols());
    let rank = sv.iter().filter(|&&s| s > tol).count();
    Ok(RankResult { rank, backend: Backend::Float, tolerance: Some(tol), singular_values: Some(sv) })
}

/// Determinant of the `(rows, cols)` submatrix.
pub fn minor<S: Scalar>(m: &Matrix<S>, rows: &[usize], cols: &[usize]) -> Result<S> {
    if rows.len() != cols.len() {
        return Err(Error::Shape(format!(
            "minor needs |I| = |J|, got {} and {}",
            rows.len(),
            cols.len()
        )));
    }
    if rows.iter().any(|&i| i >= m.rows()) || cols.iter().any(|&j| j >= m.cols()) {
        return Err(Error::Shape("minor index out of range".into()));
    }
    let s = rows.len();
    let entries: Vec<S> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| m.get(i, j).clone()))
        .collect();
    Ok(S::determinant(&entries, s))
}

/// Largest `r` such that every `r` columns are linearly independent.
///
/// Independence of every `r`-subset implies it for smaller subsets, so the
/// search runs downward from the rank and stops at the first `r` that holds.
pub fn kruskal_rank(m: &Matrix<Rational>, budget: Budget) -> Result<usize> {
    let cols = m.cols();
    if (0..cols).any(|j| (0..m.rows()).all(|i| m.get(i, j).is_zero())) {
        return Ok(0);
    }
    let rank = rank_exact(m).rank;
    for r in (1..=rank).rev() {
        budget.check(&format!("C({cols}, {r}) column subsets"), binomial(cols as u64, r as u64))?;
        let all_independent = (0..cols)
            .combinations(r)
            .all(|subset| rank_exact(&m.select_columns(&subset)).rank == r);
        if all_independent {
            return Ok(r);
        }
    }
    Ok(0)
}

/// Sum of squared order-`r` minors; nonzero exactly when the rank is at least `r`.
pub fn rank_condition_value(m: &Matrix<Rational>, r: usize, budget: Budget) -> Result<Rational> {
    let (rows, cols) = m.shape();
    if r == 0 {
        return Ok(Rational::from_i64(1));
    }
    if r > rows.min(cols) {
        return Ok(Rational::zero());
    }
    budget.check(
        &format!("C({rows}, {r}) * C({cols}, {r}) minors"),
        binomial(rows as u64, r as u64).saturating_mul(binomial(cols as u64, r as u64)),
    )?;
    let mut total = Rational::zero();
    for i in (0..rows).combinations(r) {
        for j in (0..cols).combinations(r) {
            let v = minor(m, &i, &j)?;
            total += &v * &v;
        }
    }
    Ok(total)
}

/// Expands the `(I, J)` minor of `A D B^T` over inner index sets `S`:
/// `sum_S (prod_{l in S} D_l) det_{I,S}(A) det_{J,S}(B)`.
pub fn cauchy_binet_diag_expand(
    a: &Matrix<Rational>,
    d: &DiagonalMatrix<Rational>,
    b: &Matrix<Rational>,
    rows: &[usize],
    cols: &[usize],
    budget: Budget,
) -> Result<Rational> {
    let inner = d.len();
    if a.cols() != inner || b.cols() != inner {
        return Err(Error::Shape(format!(
            "inner dimensions {}, {}, {} disagree",
            a.cols(),
            inner,
            b.cols()
        )));
    }
    if rows.len() != cols.len() {
        return Err(Error::Shape("minor needs |I| = |J|".into()));
    }
    let s = rows.len();
    if s > inner {
        return Ok(Rational::zero());
    }
    budget.check(&format!("C({inner}, {s}) inner subsets"), binomial(inner as u64, s as u64))?;
    let mut total = Rational::zero();
    for subset in (0..inner).combinations(s) {
        let weight: Rational = subset.iter().map(|&l| d.diag[l].clone()).product();
        if weight.is_zero() {
            continue;
        }
        let da = minor(a, rows, &subset)?;
        if da.is_zero() {
            continue;
        }
        total += weight * da * minor(b, cols, &subset)?;
    }
    Ok(total)
}
