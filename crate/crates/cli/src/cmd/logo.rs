use std::path::PathBuf;

use allocplan::harness::leave_one_group_out;
use allocplan::presets::{self, LogoScenario};
use clap::Args;
use serde::Serialize;

use crate::error::{invalid, CliResult};
use crate::output::{json_document, read_json, Sink};
use crate::Format;

#[derive(Debug, Args)]
pub struct LogoArgs {
    /// JSON config: {groups, counts, evaluator, trials, seed?}
    pub config: Option<PathBuf>,
    /// Use a named preset instead of a config file
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
}

#[derive(Serialize)]
struct LogoDoc<'a> {
    groups: &'a [String],
    trials: usize,
    percent_change: &'a [Vec<f64>],
    standard_error: &'a [Vec<Option<f64>>],
}

pub fn run(args: LogoArgs, seed: Option<u64>, format: Option<Format>, sink: &Sink) -> CliResult<()> {
    let scenario: LogoScenario = match (&args.config, &args.preset) {
        (Some(path), _) => serde_json::from_value(read_json(path)?).map_err(|e| invalid(format!("logo config: {e}")))?,
        (None, Some(name)) => presets::logo(name)?,
        (None, None) => return Err(invalid("give a config file or --preset")),
    };
    let counts = scenario.counts()?;
    let evaluator = scenario.evaluator()?;
    let m = leave_one_group_out(evaluator.as_ref(), &counts, scenario.trials, seed.unwrap_or(scenario.seed))?;
    match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("withheld");
            for label in &scenario.groups {
                out.push(',');
                out.push_str(label);
            }
            out.push('\n');
            for (label, row) in scenario.groups.iter().zip(&m.percent_change) {
                out.push_str(label);
                for v in row {
                    out.push_str(&format!(",{v:?}"));
                }
                out.push('\n');
            }
            sink.emit("logo_matrix.csv", out.as_bytes())?;
            sink.emit_secondary(
                "logo_matrix.json",
                &json_document(&LogoDoc {
                    groups: &scenario.groups,
                    trials: m.trials,
                    percent_change: &m.percent_change,
                    standard_error: &m.standard_error,
                })?,
            )?;
            Ok(())
        }
        Format::Json => sink.emit(
            "logo_matrix.json",
            &json_document(&LogoDoc {
                groups: &scenario.groups,
                trials: m.trials,
                percent_change: &m.percent_change,
                standard_error: &m.standard_error,
            })?,
        ),
    }
}
