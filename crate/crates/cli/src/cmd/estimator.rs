use std::path::PathBuf;

use allocplan::estimator::{
    estimator_mean, estimator_variance, implicit_target, iw_weights, monte_carlo_estimator, optimal_pair,
    GaussianLoss, GroupLossMoments, LossSampler, WeightedEstimatorSpec,
};
use allocplan::{Allocation, Error, PopulationSpec};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CliResult};
use crate::output::{json_document, parse_list, read_json, Sink};
use crate::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightsArg {
    /// Importance weights gamma_g / alpha_g (needs --gamma)
    Iw,
    /// Weights given with --w
    Custom,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// Training allocation, comma separated
    #[arg(long)]
    pub alpha: String,
    #[arg(long, value_enum, default_value_t = WeightsArg::Custom)]
    pub weights: WeightsArg,
    /// Population prevalences, for importance weights
    #[arg(long)]
    pub gamma: Option<String>,
    /// Per-group weights for --weights custom
    #[arg(long)]
    pub w: Option<String>,
    /// JSON file {"mean": [..], "variance": [..]}
    #[arg(long, conflicts_with_all = ["mean", "variance"])]
    pub moments: Option<PathBuf>,
    #[arg(long, requires = "variance")]
    pub mean: Option<String>,
    #[arg(long, requires = "mean")]
    pub variance: Option<String>,
    /// Training-set size
    #[arg(long)]
    pub n: u64,
    /// Also simulate the estimator this many times (Gaussian losses)
    #[arg(long)]
    pub mc_trials: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentsFile {
    mean: Vec<f64>,
    variance: Vec<f64>,
}

#[derive(Serialize)]
struct McDoc {
    trials: usize,
    mean: f64,
    variance: f64,
    mean_se: f64,
    variance_se: f64,
}

#[derive(Serialize)]
struct EstimatorDoc {
    weights: Vec<f64>,
    alpha: Vec<f64>,
    n: u64,
    mean: f64,
    variance: f64,
    gamma_prime: Vec<f64>,
    c: f64,
    w_star: Option<Vec<f64>>,
    alpha_star: Option<Vec<f64>>,
    variance_after: Option<f64>,
    zero_variance_group: Option<usize>,
    iw_high_variance: Option<bool>,
    mc: Option<McDoc>,
}

pub fn run(args: EstimatorArgs, seed: u64, format: Option<Format>, sink: &Sink) -> CliResult<()> {
    if matches!(format, Some(Format::Csv)) {
        return Err(invalid("estimator writes JSON only"));
    }
    let alpha = Allocation::new(parse_list("alpha", &args.alpha)?)?;
    let (weights, iw_high_variance) = match args.weights {
        WeightsArg::Iw => {
            let gamma = args.gamma.as_deref().ok_or_else(|| invalid("--weights iw needs --gamma"))?;
            let iw = iw_weights(&PopulationSpec::new(parse_list("gamma", gamma)?)?, &alpha)?;
            if iw.high_variance {
                eprintln!("warning: importance weight ratio {} exceeds 5", iw.max_ratio);
            }
            (iw.weights, Some(iw.high_variance))
        }
        WeightsArg::Custom => {
            let w = args.w.as_deref().ok_or_else(|| invalid("--weights custom needs --w"))?;
            (parse_list("w", w)?, None)
        }
    };
    let moments = match (&args.moments, &args.mean, &args.variance) {
        (Some(path), _, _) => {
            let f: MomentsFile =
                serde_json::from_value(read_json(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            GroupLossMoments::new(f.mean, f.variance)?
        }
        (None, Some(m), Some(v)) => GroupLossMoments::new(parse_list("mean", m)?, parse_list("variance", v)?)?,
        _ => return Err(invalid("give --moments or --mean and --variance")),
    };
    let spec = WeightedEstimatorSpec::new(weights, alpha, args.n)?;
    let target = implicit_target(&spec);
    let mean = estimator_mean(&spec, &moments)?;
    let variance = estimator_variance(&spec, &moments)?;
    let (w_star, alpha_star, variance_after, zero_variance_group) = match optimal_pair(&spec, &moments) {
        Ok(pair) => {
            let after = estimator_variance(&pair.spec(args.n)?, &moments)?;
            (Some(pair.w_star), Some(pair.alpha_star.weights().to_vec()), Some(after), None)
        }
        Err(Error::ZeroVarianceGroup(g)) => (None, None, None, Some(g)),
        Err(e) => return Err(e.into()),
    };
    let mc = match args.mc_trials {
        Some(trials) => {
            let samplers = GaussianLoss::from_moments(&moments);
            let refs: Vec<&dyn LossSampler> = samplers.iter().map(|s| s as &dyn LossSampler).collect();
            let s = monte_carlo_estimator(&spec, &refs, trials, seed)?;
            Some(McDoc {
                trials: s.trials,
                mean: s.mean,
                variance: s.variance,
                mean_se: s.mean_se,
                variance_se: s.variance_se,
            })
        }
        None => None,
    };
    let doc = EstimatorDoc {
        weights: spec.weights.clone(),
        alpha: spec.alpha.weights().to_vec(),
        n: spec.n,
        mean,
        variance,
        gamma_prime: target.gamma_prime,
        c: target.c,
        w_star,
        alpha_star,
        variance_after,
        zero_variance_group,
        iw_high_variance,
        mc,
    };
    sink.emit("estimator.json", &json_document(&doc)?)
}
