use genrank::network::capacity_verdict;
use genrank::Activation;

use crate::args::{CapacityArgs, Format};
use crate::failure::{Failure, Outcome};
use crate::output::emit;

pub fn run(args: &CapacityArgs) -> Outcome {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| Failure::Usage(format!("--{flag} is required")));
    let (m, n, d) = (need(args.m, "m")?, need(args.n, "n")?, need(args.d, "d")?);
    let act = Activation::parse(args.act.as_deref().unwrap_or("tanh"))?;
    let verdict = capacity_verdict(m, n, d, &act);

    let body = match args.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let doc = serde_json::json!({
                "m": m, "n": n, "d": d,
                "activation": act.name(),
                "summary": verdict.summary(),
                "verdict": verdict,
            });
            serde_json::to_string_pretty(&doc).expect("verdict serializes") + "\n"
        }
        Format::Csv => {
            let mut s = String::from("key,value\n");
            s.push_str(&format!("surjective_predicted,{}\n", verdict.surjective_predicted));
            let reason = serde_json::to_value(verdict.reason).expect("reason serializes");
            s.push_str(&format!("reason,{}\n", reason.as_str().unwrap_or_default()));
            let degree = verdict.degree_condition_holds.map_or(String::new(), |b| b.to_string());
            s.push_str(&format!("degree_condition_holds,{degree}\n"));
            for (k, v) in &verdict.bound_values {
                s.push_str(&format!("{k},{v}\n"));
            }
            s
        }
    };
    emit(args.common.out.as_deref(), &body)?;
    if args.common.strict.unwrap_or(false) && !verdict.surjective_predicted {
        return Err(Failure::Refused(verdict.summary()));
    }
    Ok(())
}
