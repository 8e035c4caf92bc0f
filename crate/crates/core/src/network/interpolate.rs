//! Width-doubling interpolation. A half-width network is driven by damped
//! Gauss-Newton from its initialization `W0` toward
//! `F(W0) + eps (y - F(W0))`; pairing the solution with a frozen copy of
//! `W0` and output weights `[v0/eps; -(1-eps) v0/eps]` recovers `y`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::capacity::capacity_verdict;
use super::init::{phi_khatri, scale_factor, standard_normal_matrix};
use super::model::{forward, jacobian_wrt_w, NetworkParams};
use super::{Activation, PhiReading};
use crate::error::{Error, Result};
use crate::linalg::{rank_float, Matrix, TolerancePolicy};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Inner-solve stopping rule on `||residual||_inf`.
    pub tol: f64,
    /// Required `||h - y||_inf` of the assembled network.
    pub final_tol: f64,
    pub max_iters: usize,
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub max_restarts: usize,
    pub min_epsilon: f64,
    pub safety: f64,
    pub reading: PhiReading,
    pub rank_tolerance: TolerancePolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            final_tol: 1e-6,
            max_iters: 200,
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.3,
            max_restarts: 5,
            min_epsilon: 1.0 / 1024.0,
            safety: 0.5,
            reading: PhiReading::Recentered,
            rank_tolerance: TolerancePolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub restart: usize,
    pub epsilon: f64,
    pub iter: usize,
    pub lambda: f64,
    pub residual: f64,
}

pub fn trace_to_json_lines(trace: &[TraceEntry]) -> String {
    trace.iter().map(|e| serde_json::to_string(e).expect("trace entries serialize") + "\n").collect()
}

#[derive(Debug, Clone)]
pub struct Interpolation {
    pub params: NetworkParams,
    /// `||forward(params) - y||_inf`.
    pub residual: f64,
    pub epsilon: f64,
    pub restarts: usize,
    pub seed: u64,
    pub trace: Vec<TraceEntry>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

struct HalfProblem<'a> {
    x: &'a Matrix<f64>,
    act: &'a Activation,
    b: Vec<f64>,
    v0: Vec<f64>,
}

impl HalfProblem<'_> {
    fn params(&self, w: Matrix<f64>) -> NetworkParams {
        NetworkParams { w, b: self.b.clone(), v: self.v0.clone() }
    }

    fn residual(&self, w: &Matrix<f64>, target: &[f64]) -> Result<Vec<f64>> {
        let h = forward(&self.params(w.clone()), self.x, self.act)?;
        Ok(h.iter().zip(target).map(|(a, b)| a - b).collect())
    }

    /// Levenberg-Marquardt on the underdetermined system `F(W) = target`:
    /// `delta = -J^T (J J^T + lambda I)^{-1} r`.
    fn solve(
        &self,
        w_start: &Matrix<f64>,
        target: &[f64],
        cfg: &SolverConfig,
        log: &mut dyn FnMut(usize, f64, f64),
    ) -> Result<Option<Matrix<f64>>> {
        let (d, h) = w_start.shape();
        let n = target.len();
        let mut w = w_start.clone();
        let mut r = self.residual(&w, target)?;
        let mut lambda = cfg.lambda0;
        for iter in 0..cfg.max_iters {
            let norm = inf_norm(&r);
            log(iter, lambda, norm);
            if norm < cfg.tol {
                return Ok(Some(w));
            }
            let jt = jacobian_wrt_w(&self.params(w.clone()), self.x, self.act)?.to_nalgebra();
            let gram = jt.transpose() * &jt + DMatrix::identity(n, n) * lambda;
            let rv = DVector::from_column_slice(&r);
            let Some(chol) = gram.cholesky() else {
                lambda *= cfg.lambda_up;
                continue;
            };
            let step = &jt * chol.solve(&rv);
            let trial = Matrix::from_fn(d, h, |t, i| w.get(t, i) - step[i * d + t]);
            let r_trial = self.residual(&trial, target)?;
            let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
            if r_trial.iter().all(|v| v.is_finite()) && sq(&r_trial) < sq(&r) {
                w = trial;
                r = r_trial;
                lambda = (lambda * cfg.lambda_down).max(1e-15);
            } else {
                lambda *= cfg.lambda_up;
                if lambda > 1e15 {
                    break;
                }
            }
        }
        let norm = inf_norm(&r);
        log(cfg.max_iters, lambda, norm);
        Ok((norm < cfg.tol).then_some(w))
    }
}

/// `[W W0]`, `b = eta 1_m`, `v = [v0/eps; -(1-eps) v0/eps]`.
pub fn assemble(w: &Matrix<f64>, w0: &Matrix<f64>, eta: f64, v0: &[f64], epsilon: f64) -> Result<NetworkParams> {
    let full = Matrix::hstack(&[w.clone(), w0.clone()])?;
    let m = full.cols();
    let v: Vec<f64> =
        v0.iter().map(|x| x / epsilon).chain(v0.iter().map(|x| -(1.0 - epsilon) * x / epsilon)).collect();
    NetworkParams::new(full, vec![eta; m], v)
}

fn check_inputs(x: &Matrix<f64>, y: &[f64], m: usize) -> Result<()> {
    if m % 2 == 1 {
        return Err(Error::Precondition(format!("width m = {m} is odd; the paired construction needs m even")));
    }
    if m == 0 {
        return Err(Error::Precondition("width m must be positive".into()));
    }
    if y.len() != x.cols() {
        return Err(Error::Shape(format!("y has {} entries, X has {} columns", y.len(), x.cols())));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite data".into()));
    }
    Ok(())
}

/// Fits `h(W, b, v; X) = y` with width `m` after checking the capacity
/// verdict for `(m, n, d)`.
pub fn interpolate(
    x: &Matrix<f64>,
    y: &[f64],
    m: usize,
    act: &Activation,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Interpolation> {
    check_inputs(x, y, m)?;
    let verdict = capacity_verdict(m, x.cols(), x.rows(), act);
    if !verdict.surjective_predicted {
        return Err(Error::Refused(Box::new(verdict)));
    }
    interpolate_unchecked(x, y, m, act, seed, cfg)
}

/// As [`interpolate`], without consulting the capacity verdict.
pub fn interpolate_unchecked(
    x: &Matrix<f64>,
    y: &[f64],
    m: usize,
    act: &Activation,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Interpolation> {
    check_inputs(x, y, m)?;
    let (d, n) = x.shape();
    let half = m / 2;
    let eta = act.center();
    let problem = HalfProblem { x, act, b: vec![eta; half], v0: vec![1.0; half] };
    let mut trace = Vec::new();
    let mut last_failure = String::from("no attempt made");

    for restart in 0..=cfg.max_restarts {
        let attempt_seed = derive_seed(seed, &[restart as u64]);
        let raw = standard_normal_matrix(d, half, attempt_seed);
        let rho = scale_factor(&raw, x, act.radius(), cfg.safety)?;
        let w0 = raw.scale(&(1.0 / rho));

        let rank = rank_float(&phi_khatri(&w0, x, act, cfg.reading)?, cfg.rank_tolerance)?.rank;
        if rank < n {
            last_failure = format!("restart {restart}: Jacobian rank {rank} < n = {n} at initialization");
            continue;
        }

        let f0 = forward(&problem.params(w0.clone()), x, act)?;
        let mut epsilon = 1.0;
        while epsilon >= cfg.min_epsilon {
            let target: Vec<f64> = f0.iter().zip(y).map(|(f, t)| f + epsilon * (t - f)).collect();
            let mut log = |iter, lambda, residual| trace.push(TraceEntry { restart, epsilon, iter, lambda, residual });
            if let Some(w) = problem.solve(&w0, &target, cfg, &mut log)? {
                let params = assemble(&w, &w0, eta, &problem.v0, epsilon)?;
                let h = forward(&params, x, act)?;
                let residual = inf_norm(&h.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
                if residual < cfg.final_tol {
                    return Ok(Interpolation { params, residual, epsilon, restarts: restart, seed: attempt_seed, trace });
                }
                last_failure = format!("restart {restart}: assembled residual {residual:e} at eps = {epsilon}");
            } else {
                last_failure = format!("restart {restart}: no convergence down to eps = {epsilon}");
            }
            epsilon /= 2.0;
        }
    }
    Err(Error::Convergence { restarts: cfg.max_restarts, reason: last_failure, trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiOutputMode {
    /// One independent interpolation per output over `m/q` neurons each.
    SplitNeurons,
    /// Random hidden layer, output weights by least squares.
    SolveV,
}

/// `Y = psi(X^T W + 1 b^T) V` with `V: m x q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiOutputFit {
    pub w: Matrix<f64>,
    pub b: Vec<f64>,
    pub v: Matrix<f64>,
    pub residual: f64,
}

pub fn forward_multi(w: &Matrix<f64>, b: &[f64], v: &Matrix<f64>, x: &Matrix<f64>, act: &Activation) -> Result<Matrix<f64>> {
    let z = w.transpose().matmul(x)?;
    if b.len() != z.rows() {
        return Err(Error::Shape(format!("|b| = {} but width is {}", b.len(), z.rows())));
    }
    Matrix::from_fn(z.cols(), z.rows(), |j, i| act.value(z.get(i, j) + b[i])).matmul(v)
}

pub fn interpolate_multioutput(
    x: &Matrix<f64>,
    y: &Matrix<f64>,
    m: usize,
    act: &Activation,
    mode: MultiOutputMode,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<MultiOutputFit> {
    let (d, n) = x.shape();
    let q = y.cols();
    if y.rows() != n {
        return Err(Error::Shape(format!("Y has {} rows, X has {n} columns", y.rows())));
    }
    let (w, b, v) = match mode {
        MultiOutputMode::SplitNeurons => {
            if !m.is_multiple_of(q) {
                return Err(Error::Precondition(format!("q = {q} does not divide m = {m}")));
            }
            let per = m / q;
            if per * d < 2 * n {
                return Err(Error::Precondition(format!("(m/q) d = {} < 2n = {}", per * d, 2 * n)));
            }
            let mut blocks = Vec::with_capacity(q);
            let mut b = Vec::with_capacity(m);
            let mut v = Matrix::zeros(m, q);
            for c in 0..q {
                let fit = interpolate(x, &y.column(c), per, act, derive_seed(seed, &[c as u64]), cfg)?;
                for (i, vi) in fit.params.v.iter().enumerate() {
                    v.set(c * per + i, c, *vi);
                }
                b.extend_from_slice(&fit.params.b);
                blocks.push(fit.params.w);
            }
            (Matrix::hstack(&blocks)?, b, v)
        }
        MultiOutputMode::SolveV => {
            if m < n {
                return Err(Error::Precondition(format!("solve_V needs m >= n, got m = {m}, n = {n}")));
            }
            solve_v(x, y, m, act, seed, cfg)?
        }
    };
    let fitted = forward_multi(&w, &b, &v, x, act)?;
    let residual = fitted.sub(y)?.max_abs();
    Ok(MultiOutputFit { w, b, v, residual })
}

// The hidden layer is drawn at unit scale: for activations analytic on all
// of R the full-rank statement holds without shrinking toward the center.
fn solve_v(
    x: &Matrix<f64>,
    y: &Matrix<f64>,
    m: usize,
    act: &Activation,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<(Matrix<f64>, Vec<f64>, Matrix<f64>)> {
    let (d, n) = x.shape();
    let eta = act.center();
    for restart in 0..=cfg.max_restarts {
        let w = standard_normal_matrix(d, m, derive_seed(seed, &[restart as u64]));
        let b = vec![eta; m];
        let z = w.transpose().matmul(x)?;
        let features = Matrix::from_fn(n, m, |j, i| act.value(z.get(i, j) + eta));
        if rank_float(&features, cfg.rank_tolerance)?.rank < n {
            continue;
        }
        let svd = features.to_nalgebra().svd(true, true);
        let v = svd.solve(&y.to_nalgebra(), 0.0).map_err(|e| Error::Domain(e.to_string()))?;
        return Ok((w, b, Matrix::from_nalgebra(&v)));
    }
    Err(Error::Convergence {
        restarts: cfg.max_restarts,
        reason: format!("hidden features never reached rank n = {n}"),
        trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::seed::rng(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn assembly_matches_direct_formula() {
        let x = standard_normal_matrix(3, 5, 1);
        let w = standard_normal_matrix(3, 2, 2);
        let w0 = standard_normal_matrix(3, 2, 3);
        let v0 = vec![1.0, 1.0];
        let eps = 0.25;
        let act = Activation::Tanh;
        let full = assemble(&w, &w0, 0.0, &v0, eps).unwrap();
        let h = forward(&full, &x, &act).unwrap();
        let fw = forward(&NetworkParams::new(w, vec![0.0; 2], v0.clone()).unwrap(), &x, &act).unwrap();
        let fw0 = forward(&NetworkParams::new(w0, vec![0.0; 2], v0).unwrap(), &x, &act).unwrap();
        for j in 0..5 {
            let direct = fw[j] / eps - (1.0 - eps) / eps * fw0[j];
            assert!((h[j] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn unmoved_half_reproduces_initial_output() {
        let x = standard_normal_matrix(2, 3, 4);
        let w0 = standard_normal_matrix(2, 2, 5);
        let act = Activation::Tanh;
        let f0 = forward(&NetworkParams::new(w0.clone(), vec![0.0; 2], vec![1.0; 2]).unwrap(), &x, &act).unwrap();
        for eps in [1.0, 0.5, 0.125] {
            let p = assemble(&w0, &w0, 0.0, &[1.0, 1.0], eps).unwrap();
            let h = forward(&p, &x, &act).unwrap();
            assert!(h.iter().zip(&f0).all(|(a, b)| (a - b).abs() < 1e-12));
        }
        // opposite output weights cancel exactly
        let p = NetworkParams::new(Matrix::hstack(&[w0.clone(), w0]).unwrap(), vec![0.0; 4], vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        assert!(forward(&p, &x, &act).unwrap().iter().all(|&h| h == 0.0));
    }

    #[test]
    fn single_point_fit() {
        let x = Matrix::from_rows(vec![vec![0.7]]).unwrap();
        let cfg = SolverConfig { tol: 1e-12, ..SolverConfig::default() };
        let fit = interpolate(&x, &[0.3], 2, &Activation::Tanh, 11, &cfg).unwrap();
        assert!(fit.residual < 1e-10, "{}", fit.residual);
        assert_eq!(fit.params.width(), 2);
    }

    #[test]
    fn desk_scale_fit() {
        let x = standard_normal_matrix(4, 10, 21);
        let y = gaussian_vec(10, 22);
        let fit = interpolate(&x, &y, 6, &Activation::Tanh, 23, &SolverConfig::default()).unwrap();
        assert!(fit.residual < 1e-6);
        let h = forward(&fit.params, &x, &Activation::Tanh).unwrap();
        let again = inf_norm(&h.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert_eq!(again, fit.residual);
        assert!(!trace_to_json_lines(&fit.trace).is_empty());
    }

    #[test]
    fn preconditions() {
        let x = standard_normal_matrix(4, 10, 1);
        let y = vec![0.0; 10];
        let cfg = SolverConfig::default();
        assert!(matches!(interpolate(&x, &y, 5, &Activation::Tanh, 0, &cfg), Err(Error::Precondition(_))));
        let x2 = standard_normal_matrix(2, 9, 1);
        match interpolate(&x2, &[0.0; 9], 2, &Activation::Tanh, 0, &cfg) {
            Err(Error::Refused(v)) => assert_eq!(v.reason, super::super::CapacityReason::SardParamCount),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn solve_v_square_system() {
        let x = standard_normal_matrix(3, 6, 31);
        let y = Matrix::from_vec(6, 1, gaussian_vec(6, 32)).unwrap();
        let fit = interpolate_multioutput(&x, &y, 6, &Activation::Tanh, MultiOutputMode::SolveV, 33, &SolverConfig::default())
            .unwrap();
        assert!(fit.residual < 1e-8, "{}", fit.residual);
    }

    #[test]
    fn split_neurons_two_outputs() {
        let x = standard_normal_matrix(4, 6, 41);
        let y = Matrix::from_vec(6, 2, gaussian_vec(12, 42)).unwrap();
        let fit =
            interpolate_multioutput(&x, &y, 8, &Activation::Tanh, MultiOutputMode::SplitNeurons, 43, &SolverConfig::default())
                .unwrap();
        assert!(fit.residual < 1e-6, "{}", fit.residual);
        // block-diagonal output weights
        for i in 0..4 {
            assert_eq!(*fit.v.get(i, 1), 0.0);
            assert_eq!(*fit.v.get(i + 4, 0), 0.0);
        }
        let bad = interpolate_multioutput(&x, &y, 7, &Activation::Tanh, MultiOutputMode::SplitNeurons, 0, &SolverConfig::default());
        assert!(matches!(bad, Err(Error::Precondition(_))));
    }

    #[test]
    fn split_with_one_output_is_plain_interpolation() {
        let x = standard_normal_matrix(4, 5, 51);
        let y = gaussian_vec(5, 52);
        let ym = Matrix::from_vec(5, 1, y.clone()).unwrap();
        let cfg = SolverConfig::default();
        let multi = interpolate_multioutput(&x, &ym, 4, &Activation::Tanh, MultiOutputMode::SplitNeurons, 53, &cfg).unwrap();
        let single = interpolate(&x, &y, 4, &Activation::Tanh, derive_seed(53, &[0]), &cfg).unwrap();
        assert_eq!(multi.w, single.params.w);
        assert_eq!(multi.v.column(0), single.params.v);
    }
}
