//! Predicted generic ranks and their randomized empirical check.
//!
//! A trial samples `(A, B)`, builds the law's target matrix and compares its
//! rank with the prediction. Integer sampling feeds the exact backend;
//! Gaussian sampling feeds the float backend and is for demonstration only.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinat::{multiset_count, SupportFilter};
use crate::decomp::{target_hadamard_power, target_khatri_power, target_khatri_poly, target_poly};
use crate::error::{Error, Result};
use crate::linalg::{kruskal_rank, rank_exact, rank_float, Backend, Budget, Matrix, Rational, Scalar, TolerancePolicy};
use crate::network::Activation;
use crate::seed::{derive_seed, label_hash, rng};

#[derive(Debug, Clone)]
pub enum RankLaw {
    /// `A B^T`.
    Matmul { d: usize },
    /// `(A B^T)^(k)`.
    HadamardPower { d: usize, k: usize },
    /// `sum_k c_k (A B^T)^(k)`.
    Poly { d: usize, coeffs: SupportFilter },
    /// `B^T (.) (A B^T)^(k)`.
    KhatriPower { d: usize, k: usize },
    /// `B^T (.) sum_k c_k (A B^T)^(k)`.
    KhatriPoly { d: usize, coeffs: SupportFilter },
    /// `phi(A B^T)` with `phi(x) = psi(eta + x)`.
    Analytic { d: usize, activation: Activation },
    /// `B^T (.) phi(A B^T)`.
    AnalyticKhatri { d: usize, activation: Activation },
    /// `B^T (.) sum_k c_k (A B^T)^(k)` with block-diagonal `B`.
    ZhangBlockdiag { d: usize, coeffs: SupportFilter },
}

impl RankLaw {
    pub const NAMES: [&'static str; 8] = [
        "matmul",
        "hadamard-power",
        "poly",
        "khatri-power",
        "khatri-poly",
        "analytic",
        "analytic-khatri",
        "zhang-blockdiag",
    ];

    /// Builds a law from its CLI name; `k`, `coeffs` or `activation` must be
    /// present when the law needs them.
    pub fn from_parts(
        name: &str,
        d: usize,
        k: Option<usize>,
        coeffs: Option<&SupportFilter>,
        activation: Option<&Activation>,
    ) -> Result<Self> {
        let need_k = || k.ok_or_else(|| Error::Parse(format!("law {name} needs k")));
        let need_c = || coeffs.cloned().ok_or_else(|| Error::Parse(format!("law {name} needs coefficients")));
        let need_a = || activation.cloned().ok_or_else(|| Error::Parse(format!("law {name} needs an activation")));
        if d == 0 {
            return Err(Error::Parse("d must be positive".into()));
        }
        Ok(match name.replace('_', "-").as_str() {
            "matmul" => RankLaw::Matmul { d },
            "hadamard-power" => RankLaw::HadamardPower { d, k: need_k()? },
            "poly" => RankLaw::Poly { d, coeffs: need_c()? },
            "khatri-power" => RankLaw::KhatriPower { d, k: need_k()? },
            "khatri-poly" => RankLaw::KhatriPoly { d, coeffs: need_c()? },
            "analytic" => RankLaw::Analytic { d, activation: need_a()? },
            "analytic-khatri" => RankLaw::AnalyticKhatri { d, activation: need_a()? },
            "zhang-blockdiag" => RankLaw::ZhangBlockdiag { d, coeffs: need_c()? },
            other => return Err(Error::Parse(format!("unknown law {other:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            RankLaw::Matmul { .. } => "matmul",
            RankLaw::HadamardPower { .. } => "hadamard-power",
            RankLaw::Poly { .. } => "poly",
            RankLaw::KhatriPower { .. } => "khatri-power",
            RankLaw::KhatriPoly { .. } => "khatri-poly",
            RankLaw::Analytic { .. } => "analytic",
            RankLaw::AnalyticKhatri { .. } => "analytic-khatri",
            RankLaw::ZhangBlockdiag { .. } => "zhang-blockdiag",
        }
    }

    pub fn d(&self) -> usize {
        match self {
            RankLaw::Matmul { d }
            | RankLaw::HadamardPower { d, .. }
            | RankLaw::Poly { d, .. }
            | RankLaw::KhatriPower { d, .. }
            | RankLaw::KhatriPoly { d, .. }
            | RankLaw::Analytic { d, .. }
            | RankLaw::AnalyticKhatri { d, .. }
            | RankLaw::ZhangBlockdiag { d, .. } => *d,
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            RankLaw::HadamardPower { k, .. } | RankLaw::KhatriPower { k, .. } => Some(*k),
            _ => None,
        }
    }

    /// Coefficient list or activation name, whichever parametrizes the law.
    pub fn coeffs_label(&self) -> Option<String> {
        match self {
            RankLaw::Poly { coeffs, .. } | RankLaw::KhatriPoly { coeffs, .. } | RankLaw::ZhangBlockdiag { coeffs, .. } => {
                Some(coeffs.label())
            }
            RankLaw::Analytic { activation, .. } | RankLaw::AnalyticKhatri { activation, .. } => Some(activation.name()),
            _ => None,
        }
    }

    pub fn is_khatri(&self) -> bool {
        matches!(
            self,
            RankLaw::KhatriPower { .. } | RankLaw::KhatriPoly { .. } | RankLaw::AnalyticKhatri { .. } | RankLaw::ZhangBlockdiag { .. }
        )
    }

    /// Row count of the target: `m`, or `md` for Khatri-Rao laws.
    pub fn target_rows(&self, m: usize) -> usize {
        if self.is_khatri() {
            m * self.d()
        } else {
            m
        }
    }

    /// Stable text used to derive per-cell seeds.
    pub fn descriptor(&self) -> String {
        format!(
            "{}|d={}|k={}|c={}",
            self.name(),
            self.d(),
            self.k().map_or(String::new(), |k| k.to_string()),
            self.coeffs_label().unwrap_or_default()
        )
    }
}

fn clamp(v: u128) -> usize {
    usize::try_from(v).unwrap_or(usize::MAX)
}

fn support_sum(coeffs: &SupportFilter, d: usize, shift: usize) -> u128 {
    coeffs.active_degrees().map(|k| multiset_count(d, k + shift)).fold(0, u128::saturating_add)
}

pub fn predicted_rank(law: &RankLaw, m: usize, n: usize) -> Result<usize> {
    let d = law.d();
    Ok(match law {
        RankLaw::Matmul { .. } => m.min(n).min(d),
        RankLaw::HadamardPower { k, .. } => m.min(n).min(clamp(multiset_count(d, *k))),
        RankLaw::Poly { coeffs, .. } => m.min(n).min(clamp(support_sum(coeffs, d, 0))),
        RankLaw::KhatriPower { k, .. } => (m * d).min(n).min(clamp(multiset_count(d, k + 1))),
        RankLaw::KhatriPoly { coeffs, .. } => (m * d).min(n).min(clamp(support_sum(coeffs, d, 1))),
        RankLaw::Analytic { activation, .. } => match activation.as_polynomial() {
            Some(c) => m.min(n).min(clamp(support_sum(c, d, 0))),
            None => m.min(n),
        },
        RankLaw::AnalyticKhatri { activation, .. } => match activation.as_polynomial() {
            Some(c) => (m * d).min(n).min(clamp(support_sum(c, d, 1))),
            None => (m * d).min(n),
        },
        RankLaw::ZhangBlockdiag { coeffs, .. } => {
            if !n.is_multiple_of(d) {
                return Err(Error::Constraint(format!("block-diagonal B needs d | n, got d = {d}, n = {n}")));
            }
            (m * d).min(n).min(d * coeffs.active_degrees().count())
        }
    })
}

/// Smallest `K` with `sum_{k<=K} 1{c_k != 0} C(k+d-1+s, k+s) >= target`,
/// where `s = 1` for Khatri-Rao targets and `0` otherwise.
pub fn analytic_truncation_degree(
    d: usize,
    target: u128,
    coeffs: impl IntoIterator<Item = Rational>,
    khatri: bool,
) -> Result<usize> {
    let shift = usize::from(khatri);
    let mut reached = 0u128;
    let mut last = 0;
    for (k, c) in coeffs.into_iter().enumerate() {
        last = k;
        if !num_traits::Zero::is_zero(&c) {
            reached = reached.saturating_add(multiset_count(d, k + shift));
        }
        if reached >= target {
            return Ok(k);
        }
    }
    Err(Error::Insufficient { target, reached, max_degree: last })
}

/// Highest Taylor degree an activation's coefficient stream is searched to.
pub const MAX_TRUNCATION_DEGREE: usize = 512;

/// Taylor coefficients of `psi(eta + x)` as a stream: finite for
/// polynomials, otherwise generated lazily up to [`MAX_TRUNCATION_DEGREE`].
pub fn activation_stream(act: &Activation) -> impl Iterator<Item = Rational> + '_ {
    let len = act.as_polynomial().map_or(MAX_TRUNCATION_DEGREE + 1, |c| c.coefficients.len());
    let mut cache: Vec<Rational> = Vec::new();
    (0..len).map(move |k| {
        if k >= cache.len() {
            cache = act.taylor_value((2 * k + 8).min(len - 1));
        }
        cache[k].clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "range")]
pub enum Sampler {
    /// Uniform integers in `[-R, R]`.
    Integer(i64),
    Gaussian,
}

impl Sampler {
    pub fn label(&self) -> String {
        match self {
            Sampler::Integer(r) => format!("integer({r})"),
            Sampler::Gaussian => "gaussian".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampledPair {
    Exact(Matrix<Rational>, Matrix<Rational>),
    Float(Matrix<f64>, Matrix<f64>),
}

fn draw<S: Scalar>(rows: usize, cols: usize, sample: &mut impl FnMut() -> S) -> Matrix<S> {
    Matrix::from_fn(rows, cols, |_, _| sample())
}

/// `A: m x d`, `B: n x d`, fully determined by `seed`.
pub fn sample_generic_pair(m: usize, n: usize, d: usize, sampler: Sampler, seed: u64) -> Result<SampledPair> {
    let mut g = rng(seed);
    match sampler {
        Sampler::Integer(r) => {
            if r < 1 {
                return Err(Error::Precondition(format!("sampler range R = {r} must be at least 1")));
            }
            let mut s = || Rational::from_i64(g.random_range(-r..=r));
            Ok(SampledPair::Exact(draw(m, d, &mut s), draw(n, d, &mut s)))
        }
        Sampler::Gaussian => {
            let mut s = || g.sample::<f64, _>(StandardNormal);
            Ok(SampledPair::Float(draw(m, d, &mut s), draw(n, d, &mut s)))
        }
    }
}

/// Zeroes every entry of `B` outside its block-diagonal pattern: row `j`
/// keeps only column `j / (n/d)`.
fn block_diagonalize<S: Scalar>(b: &Matrix<S>) -> Matrix<S> {
    let (n, d) = b.shape();
    let block = n / d;
    Matrix::from_fn(n, d, |j, l| if j / block == l { b.get(j, l).clone() } else { S::zero() })
}

/// Everything a trial needs that does not depend on the sample.
#[derive(Debug, Clone)]
struct CellPlan {
    law: RankLaw,
    /// Truncated coefficients for the analytic laws.
    truncation: Option<(usize, SupportFilter)>,
}

impl CellPlan {
    fn new(law: &RankLaw, m: usize, n: usize) -> Result<Self> {
        let truncation = match law {
            RankLaw::Analytic { activation, d } | RankLaw::AnalyticKhatri { activation, d } => {
                let khatri = law.is_khatri();
                let target = if khatri { (m * d).min(n) } else { m.min(n) };
                let k = analytic_truncation_degree(*d, target as u128, activation_stream(activation), khatri)?;
                Some((k, SupportFilter::new(activation.taylor_value(k))))
            }
            _ => None,
        };
        Ok(Self { law: law.clone(), truncation })
    }

    fn poly_coeffs(&self) -> Option<&SupportFilter> {
        match &self.law {
            RankLaw::Poly { coeffs, .. } | RankLaw::KhatriPoly { coeffs, .. } | RankLaw::ZhangBlockdiag { coeffs, .. } => {
                Some(coeffs)
            }
            _ => self.truncation.as_ref().map(|(_, c)| c),
        }
    }

    fn target<S: Scalar>(&self, a: &Matrix<S>, b: &Matrix<S>) -> Result<Matrix<S>> {
        match &self.law {
            RankLaw::Matmul { .. } => a.matmul_transpose(b),
            RankLaw::HadamardPower { k, .. } => target_hadamard_power(a, b, *k as u32),
            RankLaw::KhatriPower { k, .. } => target_khatri_power(a, b, *k as u32),
            RankLaw::Poly { .. } | RankLaw::Analytic { .. } => target_poly(a, b, self.poly_coeffs().expect("poly law")),
            RankLaw::KhatriPoly { .. } | RankLaw::AnalyticKhatri { .. } => {
                target_khatri_poly(a, b, self.poly_coeffs().expect("poly law"))
            }
            RankLaw::ZhangBlockdiag { coeffs, .. } => target_khatri_poly(a, &block_diagonalize(b), coeffs),
        }
    }

    /// Float targets evaluate analytic activations directly instead of
    /// through their truncation.
    fn float_target(&self, a: &Matrix<f64>, b: &Matrix<f64>) -> Result<Matrix<f64>> {
        match &self.law {
            RankLaw::Analytic { activation, .. } => {
                let eta = activation.center();
                Ok(a.matmul_transpose(b)?.map(|&z| activation.value(eta + z)))
            }
            RankLaw::AnalyticKhatri { activation, .. } => {
                let eta = activation.center();
                b.transpose().khatri_rao(&a.matmul_transpose(b)?.map(|&z| activation.value(eta + z)))
            }
            _ => self.target(a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub sampler: Sampler,
    pub master_seed: u64,
    pub check_kruskal: bool,
    pub kruskal_budget: Budget,
    pub tolerance: TolerancePolicy,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            sampler: Sampler::Integer(100),
            master_seed: 0,
            check_kruskal: false,
            kruskal_budget: Budget::default(),
            tolerance: TolerancePolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub rank: usize,
    pub kruskal: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub law: String,
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub k: Option<usize>,
    pub coeffs: Option<String>,
    pub predicted: usize,
    pub trials: usize,
    pub backend: Backend,
    pub sampler: String,
    pub cell_seed: u64,
    pub truncation_degree: Option<usize>,
    /// Histogram: rank value to number of trials.
    pub empirical_ranks: BTreeMap<usize, usize>,
    pub kruskal_checked: bool,
    pub kruskal_ranks: BTreeMap<usize, usize>,
    pub mismatches: Vec<TrialOutcome>,
}

pub const CSV_HEADER: &str = "law,m,n,d,k,coeffs,predicted,min_empirical,max_empirical,mismatches,trials,kruskal_checked,cell_seed,mismatch_seeds";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl RankReport {
    pub fn min_empirical(&self) -> Option<usize> {
        self.empirical_ranks.keys().next().copied()
    }

    pub fn max_empirical(&self) -> Option<usize> {
        self.empirical_ranks.keys().next_back().copied()
    }

    pub fn matches(&self) -> usize {
        self.trials - self.mismatches.len()
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
        let mut seeds = String::new();
        for (i, t) in self.mismatches.iter().enumerate() {
            if i > 0 {
                seeds.push(';');
            }
            let _ = write!(seeds, "{}", t.seed);
        }
        [
            self.law.clone(),
            self.m.to_string(),
            self.n.to_string(),
            self.d.to_string(),
            opt(self.k),
            csv_field(self.coeffs.as_deref().unwrap_or("")),
            self.predicted.to_string(),
            opt(self.min_empirical()),
            opt(self.max_empirical()),
            self.mismatches.len().to_string(),
            self.trials.to_string(),
            self.kruskal_checked.to_string(),
            self.cell_seed.to_string(),
            seeds,
        ]
        .join(",")
    }
}

/// Seed of the grid cell `(law, m, n)` under `master`.
pub fn cell_seed(law: &RankLaw, m: usize, n: usize, master: u64) -> u64 {
    derive_seed(master, &[label_hash(&law.descriptor()), m as u64, n as u64])
}

pub fn trial_seed(cell_seed: u64, trial: usize) -> u64 {
    derive_seed(cell_seed, &[trial as u64])
}

/// Replays one trial from its seed.
pub fn run_trial(law: &RankLaw, m: usize, n: usize, seed: u64, cfg: &ExperimentConfig) -> Result<TrialOutcome> {
    let plan = CellPlan::new(law, m, n)?;
    run_planned(&plan, m, n, 0, seed, cfg)
}

fn run_planned(plan: &CellPlan, m: usize, n: usize, trial: usize, seed: u64, cfg: &ExperimentConfig) -> Result<TrialOutcome> {
    let d = plan.law.d();
    let (rank, kruskal) = match sample_generic_pair(m, n, d, cfg.sampler, seed)? {
        SampledPair::Exact(a, b) => {
            let t = plan.target(&a, &b)?;
            let kruskal = if cfg.check_kruskal { Some(kruskal_rank(&t, cfg.kruskal_budget)?) } else { None };
            (rank_exact(&t).rank, kruskal)
        }
        SampledPair::Float(a, b) => {
            let t = plan.float_target(&a, &b)?;
            let kruskal = if cfg.check_kruskal {
                let exact = t.map(|&x| crate::linalg::rational_from_f64(x));
                Some(kruskal_rank(&exact, cfg.kruskal_budget)?)
            } else {
                None
            };
            (rank_float(&t, cfg.tolerance)?.rank, kruskal)
        }
    };
    Ok(TrialOutcome { trial, seed, rank, kruskal })
}

/// Runs `cfg.trials` independent trials of `law` on an `m x n` cell.
/// Trials run in parallel; the report does not depend on scheduling.
pub fn empirical_rank_experiment(law: &RankLaw, m: usize, n: usize, cfg: &ExperimentConfig) -> Result<RankReport> {
    let predicted = predicted_rank(law, m, n)?;
    let plan = CellPlan::new(law, m, n)?;
    let cell = cell_seed(law, m, n, cfg.master_seed);
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_planned(&plan, m, n, t, trial_seed(cell, t), cfg))
        .collect::<Result<_>>()?;

    let mut empirical_ranks = BTreeMap::new();
    let mut kruskal_ranks = BTreeMap::new();
    let mut mismatches = Vec::new();
    for o in outcomes {
        *empirical_ranks.entry(o.rank).or_insert(0) += 1;
        if let Some(kr) = o.kruskal {
            *kruskal_ranks.entry(kr).or_insert(0) += 1;
        }
        if o.rank != predicted || o.kruskal.is_some_and(|kr| kr != predicted) {
            mismatches.push(o);
        }
    }
    Ok(RankReport {
        law: law.name().to_string(),
        m,
        n,
        d: law.d(),
        k: law.k(),
        coeffs: law.coeffs_label(),
        predicted,
        trials: cfg.trials,
        backend: match cfg.sampler {
            Sampler::Integer(_) => Backend::Exact,
            Sampler::Gaussian => Backend::Float,
        },
        sampler: cfg.sampler.label(),
        cell_seed: cell,
        truncation_degree: plan.truncation.as_ref().map(|(k, _)| *k),
        empirical_ranks,
        kruskal_checked: cfg.check_kruskal,
        kruskal_ranks,
        mismatches,
    })
}
