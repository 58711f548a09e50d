use std::path::PathBuf;

use allocplan::fit::{fit_diagnostics, fit_group_scaling, FitOptions, FitResult, ParamStderr, Selection, Terms};
use allocplan::optimal::GroupScaling;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CliResult};
use crate::observations;
use crate::output::{json_document, Sink};
use crate::Format;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SelectionArg {
    Bic,
    LeastSquares,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Observations CSV with header group,n_g,n,loss[,seed_tag]
    pub observations: PathBuf,
    /// Fit only this group label (default: every group)
    #[arg(long)]
    pub group: Option<String>,
    /// Ignore observations with n_g below this
    #[arg(long, default_value_t = 1)]
    pub m_min: u64,
    /// Multi-start count per candidate model
    #[arg(long, default_value_t = allocplan::fit::DEFAULT_STARTS)]
    pub starts: usize,
    /// How the reported model is chosen among nested candidates
    #[arg(long, value_enum, default_value_t = SelectionArg::Bic)]
    pub selection: SelectionArg,
}

/// One fitted group as written to and read from fit JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitRecord {
    pub group: String,
    pub sigma2: f64,
    pub p: f64,
    pub tau2: f64,
    pub q: f64,
    pub delta: f64,
    pub m_min: u64,
    #[serde(default = "full_terms")]
    pub terms: Terms,
    #[serde(default = "no_stderr")]
    pub stderr: ParamStderr,
    #[serde(default)]
    pub sse: f64,
    #[serde(default)]
    pub n_used: usize,
    #[serde(default)]
    pub n_excluded: usize,
    #[serde(default)]
    pub r_squared: Option<f64>,
    #[serde(default)]
    pub flagged: Vec<String>,
}

fn full_terms() -> Terms {
    Terms::FULL
}

fn no_stderr() -> ParamStderr {
    ParamStderr {
        sigma2: None,
        p: None,
        tau2: None,
        q: None,
        delta: None,
    }
}

impl FitRecord {
    fn new(label: &str, fit: &FitResult, r_squared: f64, flagged: Vec<String>) -> Self {
        let p = &fit.params;
        Self {
            group: label.to_string(),
            sigma2: p.sigma2,
            p: p.p,
            tau2: p.tau2,
            q: p.q,
            delta: p.delta,
            m_min: p.m_min,
            terms: fit.terms,
            stderr: fit.stderr,
            sse: fit.residual_sse,
            n_used: fit.n_observations_used,
            n_excluded: fit.excluded_below_mg,
            r_squared: Some(r_squared),
            flagged,
        }
    }

    pub fn scaling(&self) -> CliResult<GroupScaling> {
        Ok(GroupScaling::new(self.sigma2, self.p, self.tau2, self.q, self.delta, self.m_min.max(1))?)
    }
}

#[derive(Serialize)]
struct FitSet<'a> {
    fits: &'a [FitRecord],
}

/// Reads a fit JSON document: a single fit or `{"fits": [...]}`.
pub fn read_fits(value: serde_json::Value) -> CliResult<Vec<FitRecord>> {
    let fits = match value.get("fits") {
        Some(list) => serde_json::from_value(list.clone()),
        None => serde_json::from_value(value).map(|f| vec![f]),
    };
    fits.map_err(|e| invalid(format!("not a fit document: {e}")))
}

pub fn run(args: FitArgs, seed: u64, format: Option<Format>, sink: &Sink) -> CliResult<()> {
    let table = observations::read(&args.observations)?;
    let groups: Vec<usize> = match &args.group {
        Some(label) => vec![table
            .group_of(label)
            .ok_or_else(|| invalid(format!("group '{label}' does not appear in the observations")))?
            .0],
        None => (0..table.labels.len()).collect(),
    };
    let opts = FitOptions {
        m_min: args.m_min,
        starts: args.starts,
        seed,
        selection: match args.selection {
            SelectionArg::Bic => Selection::Bic,
            SelectionArg::LeastSquares => Selection::LeastSquares,
        },
    };
    let mut records = Vec::new();
    for g in groups {
        let fit = fit_group_scaling(&table.observations, allocplan::GroupId(g), opts)?;
        let diag = fit_diagnostics(&fit, &table.observations);
        records.push(FitRecord::new(&table.labels[g], &fit, diag.r_squared, diag.flagged));
    }
    match format.unwrap_or(Format::Json) {
        Format::Json => {
            let bytes = if args.group.is_some() {
                json_document(&records[0])?
            } else {
                json_document(&FitSet { fits: &records })?
            };
            sink.emit("fit.json", &bytes)
        }
        Format::Csv => {
            let mut out = String::from("group,sigma2,p,tau2,q,delta,sse,n_used,n_excluded\n");
            for r in &records {
                out.push_str(&format!(
                    "{},{:?},{:?},{:?},{:?},{:?},{:?},{},{}\n",
                    r.group, r.sigma2, r.p, r.tau2, r.q, r.delta, r.sse, r.n_used, r.n_excluded
                ));
            }
            sink.emit("fit.csv", out.as_bytes())
        }
    }
}
