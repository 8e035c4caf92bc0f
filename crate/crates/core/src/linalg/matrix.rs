use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::scalar::{Rational, Scalar};

/// Dense row-major matrix over a scalar backend.
///
/// Both dimensions are at least one; a matrix is never resized after
/// construction, so all algebra below returns fresh values.
#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

/// Diagonal matrix stored as its diagonal; `D_l` is `diag[l]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalMatrix<S> {
    pub diag: Vec<S>,
}

impl<S: Scalar> DiagonalMatrix<S> {
    pub fn new(diag: Vec<S>) -> Self {
        Self { diag }
    }

    pub fn identity(n: usize) -> Self {
        Self { diag: vec![S::one(); n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }
}

impl<S: Scalar> Matrix<S> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be non-empty, got {rows}x{cols}");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.into_iter().flatten().collect())
    }

    /// Convenience for tests and fixtures.
    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let rows = rows.iter().map(|r| r.iter().map(|&v| S::from_i64(v)).collect()).collect();
        Self::from_rows(rows).expect("well-formed fixture")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| S::zero())
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| S::one())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(S::zero(), |acc, l| acc + self.get(i, l).clone() * other.get(l, j).clone())
        }))
    }

    /// `self * other^T`, the shape every decomposition in this crate targets.
    pub fn matmul_transpose(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Shape(format!(
                "cannot form {}x{} times transpose of {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.rows, |i, j| {
            self.row(i)
                .iter()
                .zip(other.row(j))
                .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
        }))
    }

    /// `self * diag(d) * other^T`.
    pub fn scaled_product(&self, d: &DiagonalMatrix<S>, other: &Self) -> Result<Self> {
        if self.cols != d.len() || other.cols != d.len() {
            return Err(Error::Shape(format!(
                "inner dimensions {}, {}, {} disagree",
                self.cols,
                d.len(),
                other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.rows, |i, j| {
            let (a, b) = (self.row(i), other.row(j));
            (0..d.len()).fold(S::zero(), |acc, l| {
                acc + a[l].clone() * d.diag[l].clone() * b[l].clone()
            })
        }))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() * b.clone())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "shape mismatch {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|a| a.clone() * c.clone())
    }

    /// Entrywise k-th power; `k = 0` yields the all-ones matrix.
    pub fn hadamard_power(&self, k: u32) -> Self {
        self.map(|a| a.powu(k))
    }

    /// Column-wise Kronecker product. Row `(i1, i2)` of the result sits at
    /// `i1 * other.rows() + i2`, so the first factor's index changes slower.
    pub fn khatri_rao(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Shape(format!(
                "Khatri-Rao factors need equal column counts, got {} and {}",
                self.cols, other.cols
            )));
        }
        let b = other.rows;
        Ok(Self::from_fn(self.rows * b, self.cols, |r, j| {
            self.get(r / b, j).clone() * other.get(r % b, j).clone()
        }))
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len().max(1), cols.len().max(1), |i, j| {
            if rows.is_empty() || cols.is_empty() {
                S::zero()
            } else {
                self.get(rows[i], cols[j]).clone()
            }
        })
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let all: Vec<usize> = (0..self.rows).collect();
        self.select(&all, cols)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|a| a.to_f64())
    }

    /// Stacks `blocks` along the diagonal; off-diagonal blocks are zero.
    pub fn block_diagonal(blocks: &[Self]) -> Result<Self> {
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        if blocks.is_empty() {
            return Err(Error::Shape("block_diagonal needs at least one block".into()));
        }
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.set(r0 + i, c0 + j, b.get(i, j).clone());
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        Ok(out)
    }

    /// Horizontal concatenation.
    pub fn hstack(blocks: &[Self]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::Shape("hstack needs equal row counts".into()));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut offsets = Vec::new();
        let mut acc = 0;
        for b in blocks {
            offsets.push(acc);
            acc += b.cols;
        }
        Ok(Self::from_fn(rows, cols, |i, j| {
            let k = offsets.partition_point(|&o| o <= j) - 1;
            blocks[k].get(i, j - offsets[k]).clone()
        }))
    }
}

impl Matrix<f64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

/// Serialized as `{rows, cols, data}` with row-major data.
impl serde::Serialize for Matrix<f64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Matrix", 3)?;
        st.serialize_field("rows", &self.rows())?;
        st.serialize_field("cols", &self.cols())?;
        st.serialize_field("data", self.data())?;
        st.end()
    }
}

impl Matrix<Rational> {
    pub fn to_exact_string(&self) -> String {
        to_text(self, |v| v.to_string())
    }
}

impl<S: Scalar + fmt::Display> fmt::Display for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_text(self, |v| v.to_string()))
    }
}

impl<S: Scalar> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str("; ")?;
            }
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v:?}")?;
            }
        }
        f.write_str("]")
    }
}

/// Serializes to the fixture text format: a `rows cols` header, then one
/// line of whitespace-separated entries per row.
pub fn to_text<S: Scalar>(m: &Matrix<S>, fmt_entry: impl Fn(&S) -> String) -> String {
    let mut out = format!("{} {}\n", m.rows, m.cols);
    for i in 0..m.rows {
        let line: Vec<String> = m.row(i).iter().map(&fmt_entry).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses the fixture text format. Lines starting with `#` are ignored and
/// entries may be spread over lines freely after the header.
pub fn parse_text<S: Scalar>(text: &str) -> Result<Matrix<S>> {
    let mut tokens = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace);
    let mut dim = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what} in header")))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let data = tokens
        .map(|t| S::parse_entry(t).ok_or_else(|| Error::Parse(format!("bad entry {t:?}"))))
        .collect::<Result<Vec<S>>>()?;
    Matrix::from_vec(rows, cols, data).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = Matrix<Rational>;

    #[test]
    fn hadamard_power_examples() {
        let m = Q::from_i64_rows(&[&[2]]);
        assert_eq!(m.hadamard_power(3), Q::from_i64_rows(&[&[8]]));
        let m = Q::from_i64_rows(&[&[1, 2], &[3, 4]]);
        assert_eq!(m.hadamard_power(2), Q::from_i64_rows(&[&[1, 4], &[9, 16]]));
        assert_eq!(m.hadamard_power(0), Q::ones(2, 2));
    }

    #[test]
    fn khatri_rao_examples() {
        let p = Q::from_i64_rows(&[&[1], &[2]]);
        let q = Q::from_i64_rows(&[&[3], &[4]]);
        assert_eq!(p.khatri_rao(&q).unwrap(), Q::from_i64_rows(&[&[3], &[4], &[6], &[8]]));

        let m = Q::from_i64_rows(&[&[1, 2, 3], &[4, 5, 6]]);
        assert_eq!(Q::ones(1, 3).khatri_rao(&m).unwrap(), m);
        assert_eq!(Q::ones(3, 3).khatri_rao(&m).unwrap().shape(), (6, 3));
        assert!(matches!(Q::ones(2, 2).khatri_rao(&m), Err(Error::Shape(_))));
    }

    #[test]
    fn text_format_round_trip() {
        let text = "# fixture\n2 3\n1 -2/3 4\n0 5 1/2\n";
        let m: Q = parse_text(text).unwrap();
        assert_eq!(m.get(0, 1), &Rational::new((-2).into(), 3.into()));
        let again: Q = parse_text(&m.to_exact_string()).unwrap();
        assert_eq!(again, m);

        let f: Matrix<f64> = parse_text("1 2\n0.5 1e-3").unwrap();
        assert_eq!(f.data(), &[0.5, 1e-3]);

        assert!(matches!(parse_text::<Rational>("2 2\n1 2 3"), Err(Error::Parse(_))));
        assert!(matches!(parse_text::<Rational>("2 x"), Err(Error::Parse(_))));
    }

    #[test]
    fn block_helpers() {
        let a = Q::from_i64_rows(&[&[1, 2]]);
        let b = Q::from_i64_rows(&[&[3], &[4]]);
        let bd = Q::block_diagonal(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(bd, Q::from_i64_rows(&[&[1, 2, 0], &[0, 0, 3], &[0, 0, 4]]));
        let h = Q::hstack(&[a.clone(), Q::from_i64_rows(&[&[9]])]).unwrap();
        assert_eq!(h, Q::from_i64_rows(&[&[1, 2, 9]]));
        assert!(Q::from_vec(0, 1, vec![]).is_err());
    }
}
