use std::path::PathBuf;

use allocplan::optimal::{
    corollary2_bounds, minmax_allocation, optimal_allocation_closed_form, optimal_allocation_general,
    Corollary2Bounds, GroupScaling, Method, ScalingModel,
};
use allocplan::PopulationSpec;
use clap::{Args, ValueEnum};
use serde::Serialize;

use super::fit::read_fits;
use crate::error::{invalid, CliResult};
use crate::output::{json_document, parse_list, read_json, Sink};
use crate::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Population,
    Minmax,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Population prevalences, comma separated
    #[arg(long)]
    pub gamma: String,
    /// Fit JSON file(s); groups are taken in file order
    #[arg(long, conflicts_with_all = ["sigma2", "p"])]
    pub model: Vec<PathBuf>,
    /// Group-specific scale sigma_g^2, comma separated
    #[arg(long, requires = "p")]
    pub sigma2: Option<String>,
    /// Exponent: one shared value or one per group
    #[arg(long, requires = "sigma2")]
    pub p: Option<String>,
    #[arg(long, value_enum, default_value_t = Objective::Population)]
    pub objective: Objective,
    /// Planned training-set size
    #[arg(long)]
    pub n: Option<f64>,
}

#[derive(Serialize)]
struct AllocationDoc {
    objective: Objective,
    alpha_star: Vec<f64>,
    objective_value: f64,
    method: Method,
    degenerate: bool,
    n: Option<f64>,
    bounds: Option<Corollary2Bounds>,
}

pub fn run(args: OptimizeArgs, format: Option<Format>, sink: &Sink) -> CliResult<()> {
    if matches!(format, Some(Format::Csv)) {
        return Err(invalid("optimize writes JSON only"));
    }
    let pop = PopulationSpec::new(parse_list("gamma", &args.gamma)?)?;
    let k = pop.groups();
    let (model, shared) = if !args.model.is_empty() {
        let mut groups = Vec::new();
        for path in &args.model {
            for f in read_fits(read_json(path)?)? {
                groups.push(f.scaling()?);
            }
        }
        (ScalingModel::new(groups)?, None)
    } else {
        let sigma2 = parse_list("sigma2", args.sigma2.as_deref().ok_or_else(|| invalid("need --model or --sigma2/--p"))?)?;
        let p = parse_list("p", args.p.as_deref().unwrap_or_default())?;
        let p = match p.len() {
            1 => vec![p[0]; sigma2.len()],
            n if n == sigma2.len() => p,
            _ => return Err(invalid("--p needs one value or one per group")),
        };
        let groups = sigma2
            .iter()
            .zip(&p)
            .map(|(&s, &p)| GroupScaling::group_only(s, p))
            .collect::<allocplan::Result<Vec<_>>>()?;
        let shared = p.iter().all(|&x| x == p[0]).then(|| (sigma2.clone(), p[0]));
        (ScalingModel::new(groups)?, shared)
    };
    if model.groups() != k {
        return Err(invalid(format!("gamma has {k} groups, the model has {}", model.groups())));
    }
    if let Some(n) = args.n {
        if !(n > 0.0) || !n.is_finite() {
            return Err(invalid("--n must be > 0"));
        }
    }
    let result = match args.objective {
        Objective::Minmax => {
            if k != 2 {
                return Err(invalid(format!("minmax needs exactly two groups, got {k}")));
            }
            let n = args.n.ok_or_else(|| invalid("minmax needs --n"))?;
            minmax_allocation(&model, n)?
        }
        Objective::Population => match (&shared, args.n) {
            (Some((sigma2, p)), _) => optimal_allocation_closed_form(&pop, sigma2, *p)?,
            (None, Some(n)) => optimal_allocation_general(&model, &pop, n)?,
            (None, None) => return Err(invalid("group-specific exponents or fitted models need --n")),
        },
    };
    let bounds = match &shared {
        Some((s, p)) if k == 2 && pop.gamma()[0] < 0.5 && s[0] > 0.0 && s[1] > 0.0 => {
            Some(corollary2_bounds(pop.gamma()[0], s[0], s[1], *p)?)
        }
        _ => None,
    };
    let doc = AllocationDoc {
        objective: args.objective,
        alpha_star: result.alpha.weights().to_vec(),
        objective_value: result.objective_value,
        method: result.method,
        degenerate: result.degenerate,
        n: args.n,
        bounds,
    };
    sink.emit("allocation.json", &json_document(&doc)?)
}
