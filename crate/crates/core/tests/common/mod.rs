#![allow(dead_code)]

use genrank::linalg::Matrix;
use genrank::network::{forward, standard_normal_matrix, Activation, NetworkParams};
use genrank::seed::{derive_seed, rng};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut g = rng(seed);
    (0..n).map(|_| g.sample(StandardNormal)).collect()
}

/// Random `(params, X)` with `W, b` shrunk by `scale`.
pub fn random_instance(d: usize, m: usize, n: usize, scale: f64, seed: u64) -> (NetworkParams, Matrix<f64>) {
    let w = standard_normal_matrix(d, m, derive_seed(seed, &[0])).scale(&scale);
    let b = gaussian_vec(m, derive_seed(seed, &[1])).into_iter().map(|x| x * scale).collect();
    let v = gaussian_vec(m, derive_seed(seed, &[2]));
    let x = standard_normal_matrix(d, n, derive_seed(seed, &[3]));
    (NetworkParams::new(w, b, v).unwrap(), x)
}

/// Central differences of `forward` in `vec(W)` (neuron-major), as an
/// `md x n` matrix.
pub fn fd_jacobian_wrt_w(p: &NetworkParams, x: &Matrix<f64>, act: &Activation, h: f64) -> Matrix<f64> {
    let (d, m) = p.w.shape();
    let n = x.cols();
    let mut out = Matrix::zeros(m * d, n);
    for i in 0..m {
        for t in 0..d {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.w.set(t, i, p.w.get(t, i) + h);
            minus.w.set(t, i, p.w.get(t, i) - h);
            let fp = forward(&plus, x, act).unwrap();
            let fm = forward(&minus, x, act).unwrap();
            for j in 0..n {
                out.set(i * d + t, j, (fp[j] - fm[j]) / (2.0 * h));
            }
        }
    }
    out
}

/// `max |a - b| / max(max |a|, 1e-300)`.
pub fn relative_error(analytic: &Matrix<f64>, numeric: &Matrix<f64>) -> f64 {
    let diff = analytic.sub(numeric).unwrap().max_abs();
    diff / analytic.max_abs().max(1e-300)
}

pub fn fd_activations() -> Vec<Activation> {
    vec![Activation::Tanh, Activation::Logistic, Activation::Arctan, Activation::Gelu, Activation::cubic()]
}
