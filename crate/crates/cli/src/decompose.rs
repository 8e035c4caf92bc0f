use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use genrank::combinat::SupportFilter;
use genrank::decomp::*;
use genrank::linalg::{Budget, Matrix, Rational, Scalar};
use genrank::seed::{derive_seed, label_hash, rng};

use crate::args::{DecomposeArgs, Format};
use crate::failure::{Failure, Outcome};
use crate::output::emit;

pub const CSV_VERSION_LINE: &str = "# genrank decompose-verify csv v1";

#[derive(Debug, Clone, Copy)]
struct Bounds {
    max_d: usize,
    max_k: usize,
    max_m: usize,
    max_n: usize,
    range: i64,
}

#[derive(Debug, Serialize)]
struct Instance {
    kind: &'static str,
    index: usize,
    seed: u64,
    a: String,
    b: String,
    k: usize,
    coeffs: String,
}

/// Everything needed to reproduce a failed check by hand.
#[derive(Debug, Serialize)]
struct FailureDump {
    instance: Instance,
    decomposition: DecompositionDump,
    target: String,
    reconstruction: String,
}

#[derive(Debug, Serialize)]
struct KindSummary {
    kind: &'static str,
    instances: usize,
    failures: usize,
    max_inner_dim: usize,
}

fn draw(rows: usize, cols: usize, range: i64, g: &mut impl Rng) -> Matrix<Rational> {
    Matrix::from_fn(rows, cols, |_, _| Rational::from_i64(g.random_range(-range..=range)))
}

fn build(kind: DecompositionKind, a: &Matrix<Rational>, b: &Matrix<Rational>, k: usize, c: &SupportFilter) -> genrank::Result<(Decomposition, Matrix<Rational>)> {
    Ok(match kind {
        DecompositionKind::HadamardPower => (decompose_hadamard_power(a, b, k)?, target_hadamard_power(a, b, k as u32)?),
        DecompositionKind::Poly => (decompose_poly(a, b, c)?, target_poly(a, b, c)?),
        DecompositionKind::KhatriPower => (decompose_khatri_power(a, b, k)?, target_khatri_power(a, b, k as u32)?),
        DecompositionKind::KhatriPoly => (decompose_khatri_poly(a, b, c)?, target_khatri_poly(a, b, c)?),
        // The direct sum reproduces the Khatri-Rao polynomial target.
        DecompositionKind::TensorDirectSum => {
            (decompose_tensor_directsum(a, b, c, Budget::default())?, target_khatri_poly(a, b, c)?)
        }
    })
}

fn check(kind: DecompositionKind, index: usize, master: u64, bounds: Bounds, inject_fault: bool) -> Outcome<(usize, Option<FailureDump>)> {
    let seed = derive_seed(master, &[label_hash(kind.name()), index as u64]);
    let mut g = rng(seed);
    let d = g.random_range(1..=bounds.max_d);
    let (m, n) = (g.random_range(1..=bounds.max_m), g.random_range(1..=bounds.max_n));
    let a = draw(m, d, bounds.range, &mut g);
    let b = draw(n, d, bounds.range, &mut g);
    let k = g.random_range(0..=bounds.max_k);
    let coeffs: Vec<i64> = (0..=k).map(|_| g.random_range(-3..=3)).collect();
    let c = SupportFilter::from_i64(&coeffs);

    let (mut dec, target) = build(kind, &a, &b, k, &c)?;
    if inject_fault {
        // Perturb a term whose rank-one factor is nonzero so the fault shows.
        let zero = Rational::from_i64(0);
        let live = |l: usize| dec.left.column(l).iter().any(|x| *x != zero) && dec.right.column(l).iter().any(|x| *x != zero);
        let one = Rational::from_i64(1);
        let l = match (0..dec.inner_dim()).find(|&l| live(l)) {
            Some(l) => l,
            None => {
                // Every term vanishes; give the first one nonzero factors.
                if dec.left.column(0).iter().all(|x| *x == zero) {
                    dec.left.set(0, 0, one.clone());
                }
                if dec.right.column(0).iter().all(|x| *x == zero) {
                    dec.right.set(0, 0, one.clone());
                }
                0
            }
        };
        dec.diag.diag[l] = dec.diag.diag[l].clone() + one;
    }
    let inner = dec.inner_dim();
    if verify_reconstruction(&dec, &target) {
        return Ok((inner, None));
    }
    let dump = FailureDump {
        instance: Instance { kind: kind.name(), index, seed, a: a.to_exact_string(), b: b.to_exact_string(), k, coeffs: c.label() },
        target: target.to_exact_string(),
        reconstruction: dec.reconstruct().to_exact_string(),
        decomposition: dec.dump(),
    };
    Ok((inner, Some(dump)))
}

fn parse_kinds(spec: Option<&str>) -> Outcome<Vec<DecompositionKind>> {
    let Some(spec) = spec else { return Ok(DecompositionKind::ALL.to_vec()) };
    let kinds = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| DecompositionKind::parse(s).ok_or_else(|| Failure::Usage(format!("unknown decomposition kind {s:?}"))))
        .collect::<Outcome<Vec<_>>>()?;
    if kinds.is_empty() {
        return Err(Failure::Usage("no decomposition kinds selected".into()));
    }
    Ok(kinds)
}

pub fn run(args: &DecomposeArgs) -> Outcome {
    let kinds = parse_kinds(args.kinds.as_deref())?;
    let trials = args.trials.unwrap_or(50);
    let bounds = Bounds {
        max_d: args.max_d.unwrap_or(4),
        max_k: args.max_k.unwrap_or(4),
        max_m: args.max_m.unwrap_or(6),
        max_n: args.max_n.unwrap_or(6),
        range: args.range.unwrap_or(5),
    };
    if trials == 0 || bounds.max_d == 0 || bounds.max_m == 0 || bounds.max_n == 0 || bounds.range < 0 {
        return Err(Failure::Usage("instance counts, dimensions and range must be positive".into()));
    }
    let master = args.common.seed.unwrap_or(0);
    let inject = args.inject_fault.unwrap_or(false);

    let jobs: Vec<(DecompositionKind, usize)> = kinds.iter().flat_map(|&k| (0..trials).map(move |i| (k, i))).collect();
    let results = jobs
        .par_iter()
        .map(|&(kind, i)| check(kind, i, master, bounds, inject))
        .collect::<Outcome<Vec<_>>>()?;

    let mut summaries: Vec<KindSummary> =
        kinds.iter().map(|k| KindSummary { kind: k.name(), instances: 0, failures: 0, max_inner_dim: 0 }).collect();
    let mut dumps = Vec::new();
    for (&(kind, _), (inner, dump)) in jobs.iter().zip(results) {
        let s = summaries.iter_mut().find(|s| s.kind == kind.name()).expect("kind summarized");
        s.instances += 1;
        s.max_inner_dim = s.max_inner_dim.max(inner);
        if let Some(d) = dump {
            s.failures += 1;
            dumps.push(d);
        }
    }

    let body = match args.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = format!("{CSV_VERSION_LINE}\nkind,instances,failures,max_inner_dim,seed\n");
            for k in &summaries {
                s.push_str(&format!("{},{},{},{},{master}\n", k.kind, k.instances, k.failures, k.max_inner_dim));
            }
            s
        }
        Format::Json => {
            let doc = serde_json::json!({ "format": "genrank decompose-verify json v1", "seed": master, "kinds": summaries });
            serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n"
        }
    };
    emit(args.common.out.as_deref(), &body)?;

    if let Some(first) = dumps.first() {
        eprintln!("{}", serde_json::to_string_pretty(first).expect("dump serializes"));
        return Err(Failure::Verification(format!("{} of {} reconstructions are not exact", dumps.len(), jobs.len())));
    }
    eprintln!("decompose-verify: {} reconstructions exact", jobs.len());
    Ok(())
}
