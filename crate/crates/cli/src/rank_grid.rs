use rayon::prelude::*;
use serde::Serialize;

use genrank::combinat::SupportFilter;
use genrank::generic_rank::{
    empirical_rank_experiment, predicted_rank, run_trial, ExperimentConfig, RankLaw, RankReport, TrialOutcome, CSV_HEADER,
};
use genrank::linalg::Budget;
use genrank::{Activation, Sampler};

use crate::args::{Format, Grid, RankGridArgs, SamplerKind};
use crate::failure::{Failure, Outcome};
use crate::output::emit;

pub const CSV_VERSION_LINE: &str = "# genrank rank-grid csv v1";
pub const JSON_VERSION: &str = "genrank rank-grid json v1";

const DEFAULT_LAW: &str = "hadamard-power";

#[derive(Debug, Clone)]
pub struct Cell {
    pub law: RankLaw,
    pub m: usize,
    pub n: usize,
}

#[derive(Debug, Serialize)]
struct Settings {
    law: String,
    d: String,
    k: Option<String>,
    m: String,
    n: String,
    coeffs: Option<String>,
    activation: Option<String>,
    max_md: Option<usize>,
    trials: usize,
    sampler: String,
    seed: u64,
    kruskal: bool,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    format: &'static str,
    settings: &'a Settings,
    cells: &'a [RankReport],
}

fn grid_or(g: &Option<Grid>, default: &str) -> Grid {
    g.clone().unwrap_or_else(|| default.parse().expect("default grid parses"))
}

/// Expands the arguments into grid cells in output order: law (d, then k),
/// then m, then n.
pub fn plan_cells(args: &RankGridArgs) -> Outcome<Vec<Cell>> {
    let name = args.law.as_deref().unwrap_or(DEFAULT_LAW);
    if !RankLaw::NAMES.contains(&name) {
        return Err(Failure::Usage(format!("unknown law {name:?}; expected one of {}", RankLaw::NAMES.join(", "))));
    }
    let coeffs = args.coeffs.as_deref().map(SupportFilter::parse).transpose()?;
    let activation = args.activation.as_deref().map(Activation::parse).transpose()?;
    let needs_k = matches!(name, "hadamard-power" | "khatri-power");
    let ks: Vec<Option<usize>> =
        if needs_k { grid_or(&args.k, "1..3").0.into_iter().map(Some).collect() } else { vec![None] };

    let (ds, ms, ns) = (grid_or(&args.d, "1..3"), grid_or(&args.m, "2..8"), grid_or(&args.n, "2..8"));
    let mut cells = Vec::new();
    for &d in &ds.0 {
        for &k in &ks {
            let law = RankLaw::from_parts(name, d, k, coeffs.as_ref(), activation.as_ref())?;
            for &m in &ms.0 {
                if m == 0 || d == 0 || args.max_md.is_some_and(|cap| m * d > cap) {
                    continue;
                }
                for &n in &ns.0 {
                    if n == 0 || (name == "zhang-blockdiag" && !n.is_multiple_of(d)) {
                        continue;
                    }
                    cells.push(Cell { law: law.clone(), m, n });
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(Failure::Usage("the grid has no cells".into()));
    }
    Ok(cells)
}

fn experiment_config(args: &RankGridArgs) -> Outcome<ExperimentConfig> {
    let sampler = match args.sampler.unwrap_or(SamplerKind::Integer) {
        SamplerKind::Integer => Sampler::Integer(args.range.unwrap_or(100)),
        SamplerKind::Gaussian => Sampler::Gaussian,
    };
    let trials = args.trials.unwrap_or(100);
    if trials == 0 {
        return Err(Failure::Usage("--trials must be positive".into()));
    }
    Ok(ExperimentConfig {
        trials,
        sampler,
        master_seed: args.common.seed.unwrap_or(0),
        check_kruskal: args.kruskal.unwrap_or(false),
        kruskal_budget: args.kruskal_budget.map_or_else(Budget::default, |b| Budget(b.into())),
        ..ExperimentConfig::default()
    })
}

pub fn run(args: &RankGridArgs) -> Outcome {
    let cells = plan_cells(args)?;
    let cfg = experiment_config(args)?;
    let format = args.common.format.unwrap_or(Format::Csv);
    let strict = args.common.strict.unwrap_or(false);

    if let Some(seed) = args.replay {
        return replay(&cells, seed, &cfg, format, args, strict);
    }

    let reports: Vec<RankReport> = cells
        .par_iter()
        .map(|c| empirical_rank_experiment(&c.law, c.m, c.n, &cfg))
        .collect::<Result<_, _>>()?;

    let body = match format {
        Format::Csv => {
            let mut s = format!("{CSV_VERSION_LINE}\n{CSV_HEADER}\n");
            for r in &reports {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let settings = settings(args, &cfg);
            let doc = JsonReport { format: JSON_VERSION, settings: &settings, cells: &reports };
            serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
        }
    };
    emit(args.common.out.as_deref(), &body)?;

    let bad: Vec<&RankReport> = reports.iter().filter(|r| !r.mismatches.is_empty()).collect();
    let trials: usize = bad.iter().map(|r| r.mismatches.len()).sum();
    eprintln!("rank-grid: {} cells, {} with mismatches ({trials} trials)", reports.len(), bad.len());
    if strict && !bad.is_empty() {
        return Err(Failure::Verification(format!("{} of {} cells deviate from the predicted rank", bad.len(), reports.len())));
    }
    Ok(())
}

fn settings(args: &RankGridArgs, cfg: &ExperimentConfig) -> Settings {
    Settings {
        law: args.law.clone().unwrap_or_else(|| DEFAULT_LAW.into()),
        d: grid_or(&args.d, "1..3").to_string(),
        k: args.k.as_ref().map(ToString::to_string),
        m: grid_or(&args.m, "2..8").to_string(),
        n: grid_or(&args.n, "2..8").to_string(),
        coeffs: args.coeffs.clone(),
        activation: args.activation.clone(),
        max_md: args.max_md,
        trials: cfg.trials,
        sampler: cfg.sampler.label(),
        seed: cfg.master_seed,
        kruskal: cfg.check_kruskal,
    }
}

#[derive(Serialize)]
struct Replay<'a> {
    law: String,
    m: usize,
    n: usize,
    predicted: usize,
    sampler: String,
    #[serde(flatten)]
    outcome: &'a TrialOutcome,
}

fn replay(cells: &[Cell], seed: u64, cfg: &ExperimentConfig, format: Format, args: &RankGridArgs, strict: bool) -> Outcome {
    let [cell] = cells else {
        return Err(Failure::Usage(format!("--replay needs a single-cell grid, got {} cells", cells.len())));
    };
    let outcome = run_trial(&cell.law, cell.m, cell.n, seed, cfg)?;
    let predicted = predicted_rank(&cell.law, cell.m, cell.n)?;
    let r = Replay { law: cell.law.descriptor(), m: cell.m, n: cell.n, predicted, sampler: cfg.sampler.label(), outcome: &outcome };
    let body = match format {
        Format::Json => serde_json::to_string_pretty(&r).expect("replay serializes") + "\n",
        Format::Csv => format!(
            "law,m,n,predicted,seed,rank,kruskal\n{},{},{},{},{},{},{}\n",
            r.law,
            r.m,
            r.n,
            predicted,
            seed,
            outcome.rank,
            outcome.kruskal.map_or(String::new(), |k| k.to_string())
        ),
    };
    emit(args.common.out.as_deref(), &body)?;
    let matched = outcome.rank == predicted && outcome.kruskal.is_none_or(|k| k == predicted);
    if strict && !matched {
        return Err(Failure::Verification(format!("rank {} differs from predicted {predicted}", outcome.rank)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(law: &str, d: &str, m: &str, n: &str) -> RankGridArgs {
        RankGridArgs {
            law: Some(law.into()),
            d: Some(d.parse().unwrap()),
            m: Some(m.parse().unwrap()),
            n: Some(n.parse().unwrap()),
            coeffs: Some("0,0,0,1".into()),
            ..RankGridArgs::default()
        }
    }

    #[test]
    fn default_grid_has_441_cells() {
        assert_eq!(plan_cells(&RankGridArgs::default()).unwrap().len(), 3 * 3 * 7 * 7);
    }

    #[test]
    fn zhang_cells_need_d_dividing_n() {
        let cells = plan_cells(&args("zhang-blockdiag", "2", "4", "3..8")).unwrap();
        assert!(cells.iter().all(|c| c.n % 2 == 0));
        assert_eq!(cells.len(), 3);
        assert_eq!(plan_cells(&args("zhang-blockdiag", "2", "4", "3")).unwrap_err().code(), 2);
    }

    #[test]
    fn bad_law_and_empty_grid_are_usage_errors() {
        assert_eq!(plan_cells(&args("nope", "1", "2", "2")).unwrap_err().code(), 2);
        assert_eq!(plan_cells(&args("poly", "1", "", "2")).unwrap_err().code(), 2);
        let mut a = args("poly", "1", "2", "2");
        a.coeffs = None;
        assert_eq!(plan_cells(&a).unwrap_err().code(), 2);
    }

    #[test]
    fn max_md_prunes_cells() {
        let mut a = args("khatri-power", "3", "2..8", "2");
        a.max_md = Some(12);
        let cells = plan_cells(&a).unwrap();
        assert!(cells.iter().all(|c| c.m * 3 <= 12));
    }
}
