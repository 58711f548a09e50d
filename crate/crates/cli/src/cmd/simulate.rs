use std::path::PathBuf;

use allocplan::optimal::{GroupScaling, ScalingModel};
use allocplan::presets;
use allocplan::rng::derive_seed;
use allocplan::synthetic::{empirical_group_risk, power_law_loss_oracle, predict_ols_group_risk, LinearGroupModel};
use allocplan::GroupCounts;
use clap::{Args, ValueEnum};
use serde::Serialize;

use super::fit::read_fits;
use crate::error::{invalid, CliResult};
use crate::observations;
use crate::output::{json_document, parse_counts, parse_list, read_json, Sink};
use crate::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Two-group linear model fitted by least squares with group intercepts
    Linear,
    /// Per-group scaling curves plus Gaussian noise
    Powerlaw,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Monte Carlo trials (linear) or replicates per design point (powerlaw)
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Label noise (linear) or loss noise (powerlaw) standard deviation
    #[arg(long)]
    pub noise_sd: Option<f64>,

    /// Linear: feature dimension; beta defaults to all ones
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    /// Linear: shared coefficients, comma separated
    #[arg(long)]
    pub beta: Option<String>,
    /// Linear: group intercepts, comma separated (default 0,0)
    #[arg(long)]
    pub intercepts: Option<String>,
    /// Linear: total training size
    #[arg(long)]
    pub n: Option<u64>,
    /// Linear: sizes of group A, comma separated; group B gets the rest
    #[arg(long)]
    pub n_g: Option<String>,
    /// Linear: feature draws per group when scoring each fit
    #[arg(long, default_value_t = 1000)]
    pub eval_size: usize,

    /// Powerlaw: fit JSON file with one fit per group
    #[arg(long, conflicts_with = "sigma2")]
    pub scaling: Option<PathBuf>,
    /// Powerlaw: per-group sigma^2, comma separated
    #[arg(long, requires_all = ["p", "tau2", "q", "delta"])]
    pub sigma2: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub tau2: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    /// Powerlaw: a design point "n_A,n_B,.."; repeatable
    #[arg(long, conflicts_with = "design")]
    pub counts: Vec<String>,
    /// Powerlaw: a named subsampling design preset
    #[arg(long)]
    pub design: Option<String>,
    /// Powerlaw: group labels for the CSV (default A, B, ..)
    #[arg(long)]
    pub labels: Option<String>,
}

#[derive(Serialize)]
struct RiskRow {
    n_g: u64,
    n: u64,
    empirical: f64,
    predicted: f64,
    ratio: f64,
    empirical_other_group: f64,
}

#[derive(Serialize)]
struct RiskDoc {
    dim: usize,
    noise_sd: f64,
    trials: usize,
    eval_size: usize,
    rows: Vec<RiskRow>,
}

pub fn run(args: SimulateArgs, seed: u64, format: Option<Format>, sink: &Sink) -> CliResult<()> {
    if args.trials < 1 {
        return Err(invalid("--trials must be >= 1"));
    }
    match args.model {
        ModelKind::Linear => {
            if matches!(format, Some(Format::Csv)) {
                return Err(invalid("the linear simulation writes JSON only"));
            }
            linear(&args, seed, sink)
        }
        ModelKind::Powerlaw => {
            if matches!(format, Some(Format::Json)) {
                return Err(invalid("the powerlaw simulation writes CSV only"));
            }
            powerlaw(&args, seed, sink)
        }
    }
}

fn linear(args: &SimulateArgs, seed: u64, sink: &Sink) -> CliResult<()> {
    let beta = match &args.beta {
        Some(b) => parse_list("beta", b)?,
        None => vec![1.0; args.dim],
    };
    let intercepts = match &args.intercepts {
        Some(c) => parse_list("intercepts", c)?,
        None => vec![0.0, 0.0],
    };
    if intercepts.len() != 2 {
        return Err(invalid("the linear simulation uses two groups"));
    }
    let noise_sd = args.noise_sd.unwrap_or(1.0);
    let model = LinearGroupModel::new(beta, intercepts, noise_sd, None)?;
    let n = args.n.ok_or_else(|| invalid("--model linear needs --n"))?;
    let sizes = parse_counts("n-g", args.n_g.as_deref().ok_or_else(|| invalid("--model linear needs --n-g"))?)?;
    let mut rows = Vec::new();
    for (i, &n_g) in sizes.iter().enumerate() {
        if n_g < 1 || n_g >= n {
            return Err(invalid(format!("--n-g {n_g} must lie in [1, n)")));
        }
        let predicted = predict_ols_group_risk(&model, n_g, n)?.per_group_risk;
        let counts = GroupCounts::new(vec![n_g, n - n_g]);
        let risks = empirical_group_risk(&model, &counts, args.eval_size, args.trials, derive_seed(seed, i as u64))?;
        rows.push(RiskRow {
            n_g,
            n,
            empirical: risks[0],
            predicted,
            ratio: risks[0] / predicted,
            empirical_other_group: risks[1],
        });
    }
    let doc = RiskDoc {
        dim: model.dim(),
        noise_sd,
        trials: args.trials,
        eval_size: args.eval_size,
        rows,
    };
    sink.emit("risks.json", &json_document(&doc)?)
}

fn scaling_model(args: &SimulateArgs) -> CliResult<ScalingModel> {
    if let Some(path) = &args.scaling {
        let groups = read_fits(read_json(path)?)?
            .iter()
            .map(|f| f.scaling())
            .collect::<CliResult<Vec<_>>>()?;
        return Ok(ScalingModel::new(groups)?);
    }
    let list = |name: &str, v: &Option<String>| -> CliResult<Vec<f64>> {
        parse_list(name, v.as_deref().ok_or_else(|| invalid(format!("--model powerlaw needs --{name}")))?)
    };
    let (s, p, t, q, d) = (
        list("sigma2", &args.sigma2)?,
        list("p", &args.p)?,
        list("tau2", &args.tau2)?,
        list("q", &args.q)?,
        list("delta", &args.delta)?,
    );
    let k = s.len();
    if [&p, &t, &q, &d].iter().any(|v| v.len() != k) {
        return Err(invalid("--sigma2, --p, --tau2, --q and --delta need one value per group"));
    }
    let groups = (0..k)
        .map(|g| GroupScaling::new(s[g], p[g], t[g], q[g], d[g], 1))
        .collect::<allocplan::Result<Vec<_>>>()?;
    Ok(ScalingModel::new(groups)?)
}

fn powerlaw(args: &SimulateArgs, seed: u64, sink: &Sink) -> CliResult<()> {
    let model = scaling_model(args)?;
    let k = model.groups();
    let points: Vec<GroupCounts> = match &args.design {
        Some(name) => presets::design(name)?.counts()?,
        None if !args.counts.is_empty() => args
            .counts
            .iter()
            .map(|c| parse_counts("counts", c).map(GroupCounts::new))
            .collect::<CliResult<_>>()?,
        None => return Err(invalid("--model powerlaw needs --counts or --design")),
    };
    if let Some(bad) = points.iter().find(|c| c.groups() != k) {
        return Err(invalid(format!(
            "design point {:?} has {} groups, the model has {k}",
            bad.per_group(),
            bad.groups()
        )));
    }
    let labels: Vec<String> = match &args.labels {
        Some(l) => l.split(',').map(|s| s.trim().to_string()).collect(),
        None => (0..k)
            .map(|g| if k <= 26 { char::from(b'A' + g as u8).to_string() } else { format!("g{g}") })
            .collect(),
    };
    if labels.len() != k || labels.iter().any(|l| l.is_empty() || l.contains(',')) {
        return Err(invalid("--labels needs one non-empty label per group, without commas"));
    }
    let noise_sd = args.noise_sd.unwrap_or(0.0);
    let mut rows = Vec::new();
    for (i, counts) in points.iter().enumerate() {
        let point_seed = derive_seed(seed, i as u64);
        for r in 0..args.trials {
            for mut obs in power_law_loss_oracle(&model, counts, noise_sd, derive_seed(point_seed, r as u64))? {
                obs.seed_tag = Some(r as u64);
                rows.push(obs);
            }
        }
    }
    sink.emit("observations.csv", &observations::write(&labels, &rows))
}
