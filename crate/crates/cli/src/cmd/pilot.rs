use std::path::PathBuf;

use allocplan::harness::run_pilot_workflow;
use allocplan::presets::{self, PilotScenario};
use clap::Args;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{invalid, CliResult};
use crate::output::{json_document, merge, read_json, Sink};
use crate::svg;
use crate::Format;

#[derive(Debug, Args)]
pub struct PilotArgs {
    /// JSON config: {"preset"?, "evaluator"?, "config"?}
    pub config: Option<PathBuf>,
    /// Start from a named preset (overridden by the config file)
    #[arg(long)]
    pub preset: Option<String>,
    /// Also write report.svg (needs --output-dir)
    #[arg(long)]
    pub svg: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PilotFile {
    preset: Option<String>,
    evaluator: Option<Value>,
    config: Option<Map<String, Value>>,
}

/// Resolves a preset plus overrides into a validated scenario.
pub fn scenario(file: Option<Value>, preset: Option<&str>) -> CliResult<PilotScenario> {
    let file: PilotFile = match file {
        Some(v) => serde_json::from_value(v).map_err(|e| invalid(format!("pilot config: {e}")))?,
        None => PilotFile {
            preset: None,
            evaluator: None,
            config: None,
        },
    };
    let name = file.preset.as_deref().or(preset);
    let mut base = match name {
        Some(n) => presets::pilot_value(n)?,
        None => Value::Object(Map::new()),
    };
    let mut overrides = Map::new();
    if let Some(e) = file.evaluator {
        overrides.insert("evaluator".into(), e);
    }
    if let Some(c) = file.config {
        overrides.insert("config".into(), Value::Object(c));
    }
    merge(&mut base, overrides, &["config"]);
    let scenario: PilotScenario = serde_json::from_value(base).map_err(|e| invalid(format!("pilot config: {e}")))?;
    scenario.config.validate()?;
    Ok(scenario)
}

pub fn run(args: PilotArgs, seed: Option<u64>, format: Option<Format>, sink: &Sink) -> CliResult<()> {
    if matches!(format, Some(Format::Csv)) {
        return Err(invalid("pilot writes JSON only"));
    }
    if args.config.is_none() && args.preset.is_none() {
        return Err(invalid("give a config file or --preset"));
    }
    let file = args.config.as_deref().map(read_json).transpose()?;
    let mut scenario = scenario(file, args.preset.as_deref())?;
    if let Some(s) = seed {
        scenario.config.seed = s;
    }
    let evaluator = scenario.evaluator.build()?;
    let report = run_pilot_workflow(&scenario.config, evaluator.as_ref())?;
    sink.emit("pilot_report.json", &json_document(&report)?)?;
    if args.svg && !sink.emit_secondary("report.svg", svg::pilot_chart(&report).as_bytes())? {
        eprintln!("--svg ignored: no --output-dir");
    }
    Ok(())
}
