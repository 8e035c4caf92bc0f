use serde::{Deserialize, Serialize};

use super::Activation;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `h(W, b, v; X) = psi(X^T W + 1 b^T) v` with `W: d x m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsJson", into = "ParamsJson")]
pub struct NetworkParams {
    pub w: Matrix<f64>,
    pub b: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParamsJson {
    d: usize,
    m: usize,
    /// Row-major `d x m`.
    w: Vec<f64>,
    b: Vec<f64>,
    v: Vec<f64>,
}

impl From<NetworkParams> for ParamsJson {
    fn from(p: NetworkParams) -> Self {
        let (d, m) = p.w.shape();
        ParamsJson { d, m, w: p.w.into_data(), b: p.b, v: p.v }
    }
}

impl TryFrom<ParamsJson> for NetworkParams {
    type Error = Error;

    fn try_from(j: ParamsJson) -> Result<Self> {
        NetworkParams::new(Matrix::from_vec(j.d, j.m, j.w)?, j.b, j.v)
    }
}

impl NetworkParams {
    pub fn new(w: Matrix<f64>, b: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let m = w.cols();
        if b.len() != m || v.len() != m {
            return Err(Error::Shape(format!("W has {m} neurons but |b| = {}, |v| = {}", b.len(), v.len())));
        }
        Ok(Self { w, b, v })
    }

    pub fn input_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn width(&self) -> usize {
        self.w.cols()
    }

    fn check_data(&self, x: &Matrix<f64>) -> Result<()> {
        if x.rows() != self.input_dim() {
            return Err(Error::Shape(format!("X has {} rows, W has {}", x.rows(), self.input_dim())));
        }
        Ok(())
    }

    /// Pre-activations `W^T X + b 1^T`, shape `m x n`.
    pub fn preactivations(&self, x: &Matrix<f64>) -> Result<Matrix<f64>> {
        self.check_data(x)?;
        let z = self.w.transpose().matmul(x)?;
        Ok(Matrix::from_fn(z.rows(), z.cols(), |i, j| z.get(i, j) + self.b[i]))
    }
}

pub fn forward(params: &NetworkParams, x: &Matrix<f64>, act: &Activation) -> Result<Vec<f64>> {
    let z = params.preactivations(x)?;
    Ok((0..z.cols()).map(|j| (0..z.rows()).map(|i| act.value(*z.get(i, j)) * params.v[i]).sum()).collect())
}

/// Transposed Jacobian of `h` in `vec(W)`: `diag(v) psi'(W^T X + b 1^T) (.) X`,
/// shape `md x n`. Row `i*d + t` is the derivative in `W[t, i]`.
pub fn jacobian_wrt_w(params: &NetworkParams, x: &Matrix<f64>, act: &Activation) -> Result<Matrix<f64>> {
    let z = params.preactivations(x)?;
    let scaled = Matrix::from_fn(z.rows(), z.cols(), |i, j| params.v[i] * act.derivative(*z.get(i, j)));
    scaled.khatri_rao(x)
}

/// Transposed Jacobian in all parameters `(vec W, b, v)`, shape `(md + 2m) x n`.
pub fn full_jacobian(params: &NetworkParams, x: &Matrix<f64>, act: &Activation) -> Result<Matrix<f64>> {
    let z = params.preactivations(x)?;
    let (m, n) = z.shape();
    let jw = jacobian_wrt_w(params, x, act)?;
    let jb = Matrix::from_fn(m, n, |i, j| params.v[i] * act.derivative(*z.get(i, j)));
    let jv = Matrix::from_fn(m, n, |i, j| act.value(*z.get(i, j)));
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(jw.rows() + 2 * m);
    for block in [&jw, &jb, &jv] {
        rows.extend((0..block.rows()).map(|r| block.row(r).to_vec()));
    }
    Matrix::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::SupportFilter;

    fn x23() -> Matrix<f64> {
        Matrix::from_rows(vec![vec![0.5, -1.0, 2.0], vec![1.5, 0.25, -0.75]]).unwrap()
    }

    fn params() -> NetworkParams {
        let w = Matrix::from_rows(vec![vec![0.3, -0.2, 0.7], vec![-0.4, 0.9, 0.1]]).unwrap();
        NetworkParams::new(w, vec![0.1, -0.3, 0.2], vec![1.0, -2.0, 0.5]).unwrap()
    }

    // independent scalar-loop evaluation of the displayed formula
    fn reference_forward(p: &NetworkParams, x: &Matrix<f64>, act: &Activation) -> Vec<f64> {
        let (d, n) = x.shape();
        let mut out = vec![0.0; n];
        for (j, o) in out.iter_mut().enumerate() {
            for i in 0..p.width() {
                let mut z = p.b[i];
                for t in 0..d {
                    z += x.get(t, j) * p.w.get(t, i);
                }
                *o += act.value(z) * p.v[i];
            }
        }
        out
    }

    #[test]
    fn forward_matches_scalar_reference() {
        let (p, x) = (params(), x23());
        let got = forward(&p, &x, &Activation::Tanh).unwrap();
        let want = reference_forward(&p, &x, &Activation::Tanh);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_output_weights() {
        let mut p = params();
        p.v = vec![0.0; 3];
        assert!(forward(&p, &x23(), &Activation::Tanh).unwrap().iter().all(|&h| h == 0.0));
        assert_eq!(jacobian_wrt_w(&p, &x23(), &Activation::Tanh).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn linear_case() {
        let id = Activation::Polynomial(SupportFilter::from_i64(&[0, 1]));
        let w = Matrix::from_rows(vec![vec![2.0], vec![-1.0]]).unwrap();
        let p = NetworkParams::new(w, vec![0.0], vec![3.0]).unwrap();
        let x = x23();
        let h = forward(&p, &x, &id).unwrap();
        assert_eq!(h, vec![3.0 * (1.0 - 1.5), 3.0 * (-2.0 - 0.25), 3.0 * (4.0 + 0.75)]);
        let j = jacobian_wrt_w(&p, &x, &id).unwrap();
        assert_eq!(j, x.scale(&3.0));
    }

    #[test]
    fn full_jacobian_shape_and_blocks() {
        let (p, x) = (params(), x23());
        let j = full_jacobian(&p, &x, &Activation::Logistic).unwrap();
        assert_eq!(j.shape(), (2 * 3 + 2 * 3, 3));
        let jw = jacobian_wrt_w(&p, &x, &Activation::Logistic).unwrap();
        assert_eq!(j.row(5), jw.row(5));
    }

    #[test]
    fn params_json_round_trip() {
        let p = params();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.starts_with("{\"d\":2,\"m\":3,"));
        let back: NetworkParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<NetworkParams>(r#"{"d":1,"m":2,"w":[1,2],"b":[0],"v":[1,1]}"#).is_err());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let x = Matrix::<f64>::ones(3, 2);
        assert!(matches!(forward(&params(), &x, &Activation::Tanh), Err(Error::Shape(_))));
    }
}
