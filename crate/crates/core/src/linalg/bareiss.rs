//! Fraction-free elimination over the integers.
//!
//! Rational input is first cleared of denominators row by row; scaling a
//! row by a nonzero integer changes neither the rank nor, up to the known
//! factor, the determinant. Every division inside the elimination is exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::scalar::Rational;

/// Row-major integer matrix plus the per-row factors used to clear denominators.
struct Cleared {
    data: Vec<BigInt>,
    row_scale: Vec<BigInt>,
}

fn clear_denominators(entries: &[Rational], rows: usize, cols: usize) -> Cleared {
    let mut data = Vec::with_capacity(rows * cols);
    let mut row_scale = Vec::with_capacity(rows);
    for i in 0..rows {
        let row = &entries[i * cols..(i + 1) * cols];
        let lcm = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        for v in row {
            data.push(v.numer() * (&lcm / v.denom()));
        }
        row_scale.push(lcm);
    }
    Cleared { data, row_scale }
}

/// Rank of a `rows x cols` rational matrix given row-major.
pub fn rank_rational(entries: &[Rational], rows: usize, cols: usize) -> usize {
    let Cleared { mut data, .. } = clear_denominators(entries, rows, cols);
    rank_integer_in_place(&mut data, rows, cols)
}

/// Bareiss elimination with full pivoting on the first nonzero entry of the
/// trailing block (column-major scan). Destroys `a`.
pub fn rank_integer_in_place(a: &mut [BigInt], rows: usize, cols: usize) -> usize {
    let mut prev = BigInt::one();
    let limit = rows.min(cols);
    let mut r = 0;
    while r < limit {
        let Some((pi, pj)) = (r..cols)
            .flat_map(|j| (r..rows).map(move |i| (i, j)))
            .find(|&(i, j)| !a[i * cols + j].is_zero())
        else {
            break;
        };
        if pi != r {
            for j in 0..cols {
                a.swap(r * cols + j, pi * cols + j);
            }
        }
        if pj != r {
            for i in 0..rows {
                a.swap(i * cols + r, i * cols + pj);
            }
        }
        eliminate_below(a, rows, cols, r, &prev);
        prev = a[r * cols + r].clone();
        r += 1;
    }
    r
}

fn eliminate_below(a: &mut [BigInt], rows: usize, cols: usize, r: usize, prev: &BigInt) {
    let (head, tail) = a.split_at_mut((r + 1) * cols);
    let pivot_row = &head[r * cols..];
    let pivot = &pivot_row[r];
    let unit_prev = prev.is_one();
    for row in tail.chunks_mut(cols).take(rows - r - 1) {
        let lead = std::mem::take(&mut row[r]);
        for j in r + 1..cols {
            let mut t = pivot * &row[j];
            if !lead.is_zero() && !pivot_row[j].is_zero() {
                t -= &lead * &pivot_row[j];
            }
            row[j] = if unit_prev { t } else { t / prev };
        }
    }
}

/// Determinant of an `n x n` rational matrix, row-major.
pub fn det_rational(entries: &[Rational], n: usize) -> Rational {
    if n == 0 {
        return Rational::one();
    }
    let Cleared { mut data, row_scale } = clear_denominators(entries, n, n);
    let det = det_integer_in_place(&mut data, n);
    let scale = row_scale.iter().fold(BigInt::one(), |acc, s| acc * s);
    BigRational::new(det, scale)
}

/// Bareiss determinant with row pivoting. Destroys `a`.
pub fn det_integer_in_place(a: &mut [BigInt], n: usize) -> BigInt {
    let mut prev = BigInt::one();
    let mut negate = false;
    for r in 0..n {
        let Some(pi) = (r..n).find(|&i| !a[i * n + r].is_zero()) else {
            return BigInt::zero();
        };
        if pi != r {
            for j in 0..n {
                a.swap(r * n + j, pi * n + j);
            }
            negate = !negate;
        }
        eliminate_below(a, n, n, r, &prev);
        prev = a[r * n + r].clone();
    }
    let det = a[n * n - 1].clone();
    if negate {
        -det
    } else {
        det
    }
}
