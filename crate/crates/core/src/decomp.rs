//! Explicit `left * diag * right^T` factorizations of Hadamard powers,
//! Hadamard polynomials and their Khatri-Rao products with `B^T`.
//!
//! Inputs are `A` (`m x d`) and `B` (`n x d`); every builder returns factors
//! whose product is the target exactly over the rationals.

use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::combinat::{enumerate_lambda, enumerate_lambda_upto, multinomial, SupportFilter, WeakComposition};
use crate::error::{Error, Result};
use crate::linalg::{Budget, DiagonalMatrix, Matrix, Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionKind {
    HadamardPower,
    Poly,
    KhatriPower,
    KhatriPoly,
    TensorDirectSum,
}

impl DecompositionKind {
    pub const ALL: [DecompositionKind; 5] = [
        DecompositionKind::HadamardPower,
        DecompositionKind::Poly,
        DecompositionKind::KhatriPower,
        DecompositionKind::KhatriPoly,
        DecompositionKind::TensorDirectSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecompositionKind::HadamardPower => "hadamard-power",
            DecompositionKind::Poly => "poly",
            DecompositionKind::KhatriPower => "khatri-power",
            DecompositionKind::KhatriPoly => "khatri-poly",
            DecompositionKind::TensorDirectSum => "tensor-directsum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// What an inner column of a decomposition stands for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnLabel {
    Composition(WeakComposition),
    /// Khatri-Rao column `(l, k)`; its right factor is `b_l o B~_k`.
    Fiber { coordinate: usize, composition: WeakComposition },
    /// Coordinate of a flattened tensor power `x^{(x) degree}`.
    Tensor { degree: usize, index: Vec<usize> },
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnLabel::Composition(c) => write!(f, "{c}"),
            ColumnLabel::Fiber { coordinate, composition } => write!(f, "({coordinate},{composition})"),
            ColumnLabel::Tensor { degree, index } => write!(f, "t{degree}{index:?}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub left: Matrix<Rational>,
    pub diag: DiagonalMatrix<Rational>,
    pub right: Matrix<Rational>,
    pub labels: Vec<ColumnLabel>,
    pub kind: DecompositionKind,
}

impl Decomposition {
    fn new(
        left: Matrix<Rational>,
        diag: Vec<Rational>,
        right: Matrix<Rational>,
        labels: Vec<ColumnLabel>,
        kind: DecompositionKind,
    ) -> Self {
        debug_assert_eq!(left.cols(), diag.len());
        debug_assert_eq!(right.cols(), diag.len());
        debug_assert_eq!(labels.len(), diag.len());
        Self { left, diag: DiagonalMatrix::new(diag), right, labels, kind }
    }

    pub fn inner_dim(&self) -> usize {
        self.diag.len()
    }

    pub fn reconstruct(&self) -> Matrix<Rational> {
        self.left.scaled_product(&self.diag, &self.right).expect("factor shapes are consistent by construction")
    }

    pub fn dump(&self) -> DecompositionDump {
        DecompositionDump {
            kind: self.kind,
            left_shape: self.left.shape(),
            right_shape: self.right.shape(),
            inner_dim: self.inner_dim(),
            labels: self.labels.iter().map(ToString::to_string).collect(),
            diag: self.diag.diag.iter().map(ToString::to_string).collect(),
        }
    }
}

/// Debug dump; entries are rendered as exact strings.
#[derive(Debug, Serialize)]
pub struct DecompositionDump {
    pub kind: DecompositionKind,
    pub left_shape: (usize, usize),
    pub right_shape: (usize, usize),
    pub inner_dim: usize,
    pub labels: Vec<String>,
    pub diag: Vec<String>,
}

/// True iff `left * diag * right^T` equals `target` exactly.
pub fn verify_reconstruction(dec: &Decomposition, target: &Matrix<Rational>) -> bool {
    dec.left.rows() == target.rows() && dec.right.rows() == target.cols() && dec.reconstruct() == *target
}

fn check_inner(a: &Matrix<Rational>, b: &Matrix<Rational>) -> Result<usize> {
    if a.cols() != b.cols() {
        return Err(Error::Shape(format!("A has {} columns but B has {}", a.cols(), b.cols())));
    }
    Ok(a.cols())
}

/// `prod_l x[i, l]^{k_l}` for every row `i` and composition `k`.
fn monomial_columns(x: &Matrix<Rational>, comps: &[WeakComposition]) -> Matrix<Rational> {
    let cols = comps.len().max(1);
    Matrix::from_fn(x.rows(), cols, |i, c| {
        comps.get(c).map_or_else(Rational::zero, |k| {
            k.parts().iter().enumerate().fold(Rational::one(), |acc, (l, &p)| acc * x.get(i, l).powu(p))
        })
    })
}

fn inner_for_power(k: usize, d: usize) -> (Vec<WeakComposition>, Vec<Rational>) {
    let comps = enumerate_lambda(d, k);
    let diag = comps.iter().map(|c| Rational::from_integer(multinomial(c).into())).collect();
    (comps, diag)
}

fn inner_for_poly(coeffs: &SupportFilter, d: usize) -> (Vec<WeakComposition>, Vec<Rational>) {
    let comps = enumerate_lambda_upto(d, coeffs.max_degree(), Some(coeffs));
    let diag = comps
        .iter()
        .map(|c| coeffs.coefficient(c.degree() as usize) * Rational::from_integer(multinomial(c).into()))
        .collect();
    (comps, diag)
}

// With an empty index set the factors still need one column; a zero
// diagonal entry keeps the product equal to the zero target.
fn pad_empty(comps: &[WeakComposition], diag: &mut Vec<Rational>, labels: &mut Vec<ColumnLabel>, d: usize) {
    if comps.is_empty() {
        diag.push(Rational::zero());
        labels.push(ColumnLabel::Composition(WeakComposition::new(vec![0; d])));
    }
}

fn hadamard_like(
    a: &Matrix<Rational>,
    b: &Matrix<Rational>,
    comps: Vec<WeakComposition>,
    mut diag: Vec<Rational>,
    kind: DecompositionKind,
) -> Decomposition {
    let d = a.cols();
    let left = monomial_columns(a, &comps);
    let right = monomial_columns(b, &comps);
    let mut labels: Vec<ColumnLabel> = comps.iter().cloned().map(ColumnLabel::Composition).collect();
    pad_empty(&comps, &mut diag, &mut labels, d);
    Decomposition::new(left, diag, right, labels, kind)
}

/// `(A B^T)^(k) = A~ D B~^T` with inner index set the weak compositions of `k`.
pub fn decompose_hadamard_power(a: &Matrix<Rational>, b: &Matrix<Rational>, k: usize) -> Result<Decomposition> {
    let d = check_inner(a, b)?;
    let (comps, diag) = inner_for_power(k, d);
    Ok(hadamard_like(a, b, comps, diag, DecompositionKind::HadamardPower))
}

/// `sum_k c_k (A B^T)^(k)` with inner indices `k` of degree `<= K` and `c_|k| != 0`.
pub fn decompose_poly(a: &Matrix<Rational>, b: &Matrix<Rational>, coeffs: &SupportFilter) -> Result<Decomposition> {
    let d = check_inner(a, b)?;
    let (comps, diag) = inner_for_poly(coeffs, d);
    Ok(hadamard_like(a, b, comps, diag, DecompositionKind::Poly))
}

fn khatri_like(
    a: &Matrix<Rational>,
    b: &Matrix<Rational>,
    comps: Vec<WeakComposition>,
    base_diag: Vec<Rational>,
    kind: DecompositionKind,
) -> Result<Decomposition> {
    let d = a.cols();
    let a_tilde = monomial_columns(a, &comps);
    let b_tilde = monomial_columns(b, &comps);
    let left = Matrix::block_diagonal(&vec![a_tilde; d])?;

    let blocks: Vec<Matrix<Rational>> = (0..d)
        .map(|l| Matrix::from_fn(b.rows(), b_tilde.cols(), |i, c| b.get(i, l).clone() * b_tilde.get(i, c).clone()))
        .collect();
    let right = Matrix::hstack(&blocks)?;

    let mut diag = Vec::with_capacity(right.cols());
    let mut labels = Vec::with_capacity(right.cols());
    for l in 0..d {
        if comps.is_empty() {
            diag.push(Rational::zero());
            labels.push(ColumnLabel::Fiber { coordinate: l, composition: WeakComposition::new(vec![0; d]) });
        }
        for (c, w) in comps.iter().zip(&base_diag) {
            diag.push(w.clone());
            labels.push(ColumnLabel::Fiber { coordinate: l, composition: c.clone() });
        }
    }
    Ok(Decomposition::new(left, diag, right, labels, kind))
}

/// `B^T (.) (A B^T)^(k) = A_bar D B_bar^T` with `A_bar` the `d`-fold block
/// diagonal of `A~` and columns of `B_bar` labelled `(l, k)`, `l` slower.
pub fn decompose_khatri_power(a: &Matrix<Rational>, b: &Matrix<Rational>, k: usize) -> Result<Decomposition> {
    let d = check_inner(a, b)?;
    let (comps, diag) = inner_for_power(k, d);
    khatri_like(a, b, comps, diag, DecompositionKind::KhatriPower)
}

pub fn decompose_khatri_poly(a: &Matrix<Rational>, b: &Matrix<Rational>, coeffs: &SupportFilter) -> Result<Decomposition> {
    let d = check_inner(a, b)?;
    let (comps, diag) = inner_for_poly(coeffs, d);
    khatri_like(a, b, comps, diag, DecompositionKind::KhatriPoly)
}

/// Row-major flattening of `x^{(x) degree}`: entry at multi-index
/// `(i_1..i_degree)` (first index slowest) is `prod_t x[i_t]`.
fn tensor_power(x: &[Rational], degree: usize) -> Vec<Rational> {
    let mut out = vec![Rational::one()];
    for _ in 0..degree {
        out = out.iter().flat_map(|p| x.iter().map(move |v| p * v)).collect();
    }
    out
}

fn multi_index(mut flat: usize, d: usize, degree: usize) -> Vec<usize> {
    let mut idx = vec![0; degree];
    for slot in idx.iter_mut().rev() {
        *slot = flat % d;
        flat /= d;
    }
    idx
}

fn tensor_width(coeffs: &SupportFilter, d: usize, shift: usize, budget: Budget) -> Result<usize> {
    let width: u128 = coeffs.active_degrees().map(|k| (d as u128).saturating_pow((k + shift) as u32)).sum();
    budget.check("direct-sum embedding width", width)?;
    Ok(width as usize)
}

/// Direct-sum tensor embedding of `B^T (.) sum_k c_k (A B^T)^(k)`.
///
/// Row `(i1, i2)` of `left` is `(+)_k c_k e_{i1} (x) a_{i2}^{(x) k}`, row `j`
/// of `right` is `(+)_k b_j^{(x) (k+1)}`, over degrees with `c_k != 0`.
/// Tensors are stored unsymmetrized, so inner products are plain dot
/// products. The diagonal is the identity.
pub fn decompose_tensor_directsum(
    a: &Matrix<Rational>,
    b: &Matrix<Rational>,
    coeffs: &SupportFilter,
    budget: Budget,
) -> Result<Decomposition> {
    let d = check_inner(a, b)?;
    let (m, n) = (a.rows(), b.rows());
    let width = tensor_width(coeffs, d, 1, budget)?;

    let mut left_rows = Vec::with_capacity(m * d);
    for i1 in 0..d {
        for i2 in 0..m {
            let row: Vec<Rational> = coeffs
                .active_degrees()
                .flat_map(|k| {
                    let c = coeffs.coefficient(k);
                    let tail = tensor_power(a.row(i2), k);
                    (0..d).flat_map(move |e| {
                        let scale = if e == i1 { c.clone() } else { Rational::zero() };
                        tail.iter().map(move |t| &scale * t).collect::<Vec<_>>()
                    })
                })
                .collect();
            left_rows.push(row);
        }
    }
    let right_rows: Vec<Vec<Rational>> = (0..n)
        .map(|j| coeffs.active_degrees().flat_map(|k| tensor_power(b.row(j), k + 1)).collect())
        .collect();
    let labels: Vec<ColumnLabel> = coeffs
        .active_degrees()
        .flat_map(|k| (0..d.pow(k as u32 + 1)).map(move |f| ColumnLabel::Tensor { degree: k + 1, index: multi_index(f, d, k + 1) }))
        .collect();

    finish_directsum(left_rows, right_rows, labels, width, d)
}

/// The plain variant without the Khatri-Rao factor:
/// `<(+)_k c_k a_i^{(x) k}, (+)_k b_j^{(x) k}> = sum_k c_k <a_i, b_j>^k`.
pub fn decompose_tensor_directsum_plain(
    a: &Matrix<Rational>,
    b: &Matrix<Rational>,
    coeffs: &SupportFilter,
    budget: Budget,
) -> Result<Decomposition> {
    let d = check_inner(a, b)?;
    let width = tensor_width(coeffs, d, 0, budget)?;
    let left_rows: Vec<Vec<Rational>> = (0..a.rows())
        .map(|i| {
            coeffs
                .active_degrees()
                .flat_map(|k| {
                    let c = coeffs.coefficient(k);
                    tensor_power(a.row(i), k).into_iter().map(move |t| &c * t)
                })
                .collect()
        })
        .collect();
    let right_rows: Vec<Vec<Rational>> = (0..b.rows())
        .map(|j| coeffs.active_degrees().flat_map(|k| tensor_power(b.row(j), k)).collect())
        .collect();
    let labels: Vec<ColumnLabel> = coeffs
        .active_degrees()
        .flat_map(|k| (0..d.pow(k as u32)).map(move |f| ColumnLabel::Tensor { degree: k, index: multi_index(f, d, k) }))
        .collect();
    finish_directsum(left_rows, right_rows, labels, width, d)
}

fn finish_directsum(
    mut left_rows: Vec<Vec<Rational>>,
    mut right_rows: Vec<Vec<Rational>>,
    mut labels: Vec<ColumnLabel>,
    width: usize,
    d: usize,
) -> Result<Decomposition> {
    let mut diag = vec![Rational::one(); width];
    if width == 0 {
        left_rows.iter_mut().chain(right_rows.iter_mut()).for_each(|r| r.push(Rational::zero()));
        diag.push(Rational::zero());
        labels.push(ColumnLabel::Tensor { degree: 0, index: Vec::new() });
    }
    let _ = d;
    Ok(Decomposition::new(
        Matrix::from_rows(left_rows)?,
        diag,
        Matrix::from_rows(right_rows)?,
        labels,
        DecompositionKind::TensorDirectSum,
    ))
}

/// `sum_k c_k M^(k)`, entrywise.
pub fn hadamard_polynomial<S: Scalar>(m: &Matrix<S>, coeffs: &SupportFilter) -> Matrix<S> {
    let cs: Vec<(u32, S)> = coeffs.active_degrees().map(|k| (k as u32, S::from_rational(&coeffs.coefficient(k)))).collect();
    m.map(|x| cs.iter().fold(S::zero(), |acc, (k, c)| acc + c.clone() * x.powu(*k)))
}

/// `(A B^T)^(k)`.
pub fn target_hadamard_power<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>, k: u32) -> Result<Matrix<S>> {
    Ok(a.matmul_transpose(b)?.hadamard_power(k))
}

pub fn target_poly<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>, coeffs: &SupportFilter) -> Result<Matrix<S>> {
    Ok(hadamard_polynomial(&a.matmul_transpose(b)?, coeffs))
}

/// `B^T (.) (A B^T)^(k)`, shape `md x n`.
pub fn target_khatri_power<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>, k: u32) -> Result<Matrix<S>> {
    b.transpose().khatri_rao(&target_hadamard_power(a, b, k)?)
}

pub fn target_khatri_poly<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>, coeffs: &SupportFilter) -> Result<Matrix<S>> {
    b.transpose().khatri_rao(&target_poly(a, b, coeffs)?)
}
