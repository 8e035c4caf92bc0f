use std::path::Path;

use serde::Serialize;

use genrank::linalg::{parse_text, Matrix};
use genrank::network::{
    capacity_verdict, forward, interpolate_multioutput, interpolate_unchecked, standard_normal_matrix, trace_to_json_lines,
    CapacityReason, MultiOutputMode,
};
use genrank::seed::derive_seed;
use genrank::{Activation, NetworkParams, PhiReading, SolverConfig};

use crate::args::{Format, InterpolateArgs, MultiMode, Reading};
use crate::failure::{Failure, Outcome};
use crate::output::emit;

struct Problem {
    x: Matrix<f64>,
    /// `n x q`.
    y: Matrix<f64>,
    m: usize,
}

#[derive(Serialize)]
struct SingleReport<'a> {
    activation: String,
    residual: f64,
    epsilon: f64,
    restarts: usize,
    /// Seed of the successful restart.
    seed: u64,
    params: &'a NetworkParams,
}

#[derive(Serialize)]
struct MultiReport<'a> {
    activation: String,
    mode: MultiMode,
    residual: f64,
    w: &'a Matrix<f64>,
    b: &'a [f64],
    v: &'a Matrix<f64>,
}

fn read_matrix(path: &Path) -> Outcome<Matrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_text(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_random(spec: &str) -> Outcome<(usize, usize, usize)> {
    let parts: Vec<usize> = spec
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Usage(format!("--random expects d,n,m: {e}")))?;
    match parts[..] {
        [d, n, m] if d > 0 && n > 0 && m > 0 => Ok((d, n, m)),
        _ => Err(Failure::Usage(format!("--random expects three positive counts d,n,m, got {spec:?}"))),
    }
}

fn load(args: &InterpolateArgs, seed: u64) -> Outcome<Problem> {
    if let Some(spec) = &args.random {
        if args.x.is_some() || args.y.is_some() {
            return Err(Failure::Usage("--random excludes --x and --y".into()));
        }
        let (d, n, m) = parse_random(spec)?;
        let x = standard_normal_matrix(d, n, derive_seed(seed, &[0]));
        let y = standard_normal_matrix(n, 1, derive_seed(seed, &[1]));
        return Ok(Problem { x, y, m });
    }
    let (Some(xp), Some(yp)) = (&args.x, &args.y) else {
        return Err(Failure::Usage("give --random d,n,m or both --x and --y".into()));
    };
    let m = args.width.ok_or_else(|| Failure::Usage("--width is required with --x/--y".into()))?;
    let x = read_matrix(xp)?;
    let mut y = read_matrix(yp)?;
    let n = x.cols();
    if y.rows() == 1 && y.cols() == n && n != 1 {
        y = y.transpose();
    }
    if y.rows() != n {
        return Err(Failure::Usage(format!("y has shape {:?}; expected {n} x q or 1 x {n}", y.shape())));
    }
    Ok(Problem { x, y, m })
}

pub fn run(args: &InterpolateArgs) -> Outcome {
    if args.common.format == Some(Format::Csv) {
        return Err(Failure::Usage("interpolate writes JSON only".into()));
    }
    let seed = args.common.seed.unwrap_or(0);
    let act = Activation::parse(args.act.as_deref().unwrap_or("tanh"))?;
    let cfg = SolverConfig {
        final_tol: args.tol.unwrap_or(1e-6),
        max_restarts: args.max_restarts.unwrap_or(5),
        reading: match args.reading.unwrap_or(Reading::Recentered) {
            Reading::Recentered => PhiReading::Recentered,
            Reading::ConstantShift => PhiReading::ConstantShift,
        },
        ..SolverConfig::default()
    };
    let p = load(args, seed)?;
    let (d, n) = p.x.shape();
    let q = p.y.cols();
    let force = args.force.unwrap_or(false);

    // The per-output width is what each interpolation actually sees.
    let mode = args.multi.unwrap_or(MultiMode::SplitNeurons);
    let per_output = if q > 1 && mode == MultiMode::SplitNeurons { p.m / q } else { p.m };
    if q == 1 || mode == MultiMode::SplitNeurons {
        let verdict = capacity_verdict(per_output, n, d, &act);
        let blocked = !verdict.surjective_predicted && (!force || verdict.reason == CapacityReason::MOdd);
        if blocked {
            println!("{}", serde_json::to_string_pretty(&verdict).expect("verdict serializes"));
            return Err(Failure::Refused(verdict.summary()));
        }
        if !verdict.surjective_predicted {
            eprintln!("warning: forcing past a negative verdict: {}", verdict.summary());
        }
    }

    let out = args.common.out.as_deref();
    if q == 1 {
        let result = interpolate_unchecked(&p.x, &p.y.column(0), p.m, &act, seed, &cfg);
        let fit = match result {
            Ok(fit) => fit,
            Err(genrank::Error::Convergence { restarts, reason, trace }) => {
                write_trace(args.trace.as_deref(), &trace_to_json_lines(&trace))?;
                return Err(Failure::Verification(format!("no convergence after {restarts} restarts: {reason}")));
            }
            Err(e) => return Err(e.into()),
        };
        write_trace(args.trace.as_deref(), &trace_to_json_lines(&fit.trace))?;
        // Recompute from the written parameters so the report is self-checking.
        let h = forward(&fit.params, &p.x, &act)?;
        let residual = h.iter().zip(p.y.column(0)).fold(0.0f64, |a, (u, t)| a.max((u - t).abs()));
        let report = SingleReport {
            activation: act.name(),
            residual,
            epsilon: fit.epsilon,
            restarts: fit.restarts,
            seed: fit.seed,
            params: &fit.params,
        };
        finish(out, &serde_json::to_string_pretty(&report).expect("report serializes"), residual, cfg.final_tol)
    } else {
        let lib_mode = match mode {
            MultiMode::SplitNeurons => MultiOutputMode::SplitNeurons,
            MultiMode::SolveV => MultiOutputMode::SolveV,
        };
        let fit = interpolate_multioutput(&p.x, &p.y, p.m, &act, lib_mode, seed, &cfg)?;
        let report = MultiReport { activation: act.name(), mode, residual: fit.residual, w: &fit.w, b: &fit.b, v: &fit.v };
        finish(out, &serde_json::to_string_pretty(&report).expect("report serializes"), fit.residual, cfg.final_tol)
    }
}

fn write_trace(path: Option<&Path>, lines: &str) -> Outcome {
    if let Some(p) = path {
        std::fs::write(p, lines)?;
    }
    Ok(())
}

/// Parameters go to `--out` (residual on stdout) or, without it, to stdout
/// (residual on stderr).
fn finish(out: Option<&Path>, json: &str, residual: f64, tol: f64) -> Outcome {
    emit(out, &format!("{json}\n"))?;
    let line = format!("residual {residual:e}");
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    if residual < tol {
        Ok(())
    } else {
        Err(Failure::Verification(format!("residual {residual:e} is not below {tol:e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_spec_parses() {
        assert_eq!(parse_random("4,10,6").unwrap(), (4, 10, 6));
        assert_eq!(parse_random("4,10").unwrap_err().code(), 2);
        assert_eq!(parse_random("4,0,6").unwrap_err().code(), 2);
        assert_eq!(parse_random("a,b,c").unwrap_err().code(), 2);
    }
}
