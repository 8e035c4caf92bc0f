use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{Activation, PhiReading};
use crate::error::{Error, Result};
use crate::linalg::{rank_float, Matrix, TolerancePolicy};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitConfig {
    /// Scaled pre-activations stay within `safety * r` of the center.
    pub safety: f64,
    pub reading: PhiReading,
    pub tolerance: TolerancePolicy,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { safety: 0.5, reading: PhiReading::Recentered, tolerance: TolerancePolicy::default() }
    }
}

#[derive(Debug, Clone)]
pub struct InitRank {
    pub rank: usize,
    pub rho: f64,
    /// Unscaled draw; the tested point is `w0 / rho`.
    pub w0: Matrix<f64>,
    pub warnings: Vec<String>,
}

impl InitRank {
    pub fn scaled_w0(&self) -> Matrix<f64> {
        self.w0.scale(&(1.0 / self.rho))
    }
}

pub fn standard_normal_matrix(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
    let mut rng = seed::rng(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Smallest `rho >= 1` with `|W0^T X / rho| <= safety * r` entrywise.
pub fn scale_factor(w0: &Matrix<f64>, x: &Matrix<f64>, radius: f64, safety: f64) -> Result<f64> {
    if radius.is_infinite() {
        return Ok(1.0);
    }
    let peak = w0.transpose().matmul(x)?.max_abs();
    Ok((peak / (safety * radius)).max(1.0))
}

/// `phi(Z) (.) X` for `Z = W^T X`, the Jacobian at `b = eta 1`, `v = 1`
/// under the recentred reading.
pub fn phi_khatri(w: &Matrix<f64>, x: &Matrix<f64>, act: &Activation, reading: PhiReading) -> Result<Matrix<f64>> {
    w.transpose().matmul(x)?.map(|&z| act.phi(z, reading)).khatri_rao(x)
}

/// Draws `W0 ~ N(0, 1)` (`d x m`), scales it into the convergence interval
/// of the activation at its center and reports the rank of
/// `phi(W0^T X / rho) (.) X`.
pub fn rank_at_initialization(
    x: &Matrix<f64>,
    m: usize,
    act: &Activation,
    seed: u64,
    cfg: &InitConfig,
) -> Result<InitRank> {
    if m == 0 {
        return Err(Error::Precondition("width m must be positive".into()));
    }
    let mut warnings = Vec::new();
    for j in 0..x.cols() {
        if x.column(j).iter().all(|&v| v == 0.0) {
            warnings.push(format!("data column {j} is zero; the rank cannot reach n"));
        }
    }
    let w0 = standard_normal_matrix(x.rows(), m, seed);
    let rho = scale_factor(&w0, x, act.radius(), cfg.safety)?;
    let j = phi_khatri(&w0.scale(&(1.0 / rho)), x, act, cfg.reading)?;
    let rank = rank_float(&j, cfg.tolerance)?.rank;
    Ok(InitRank { rank, rho, w0, warnings })
}
