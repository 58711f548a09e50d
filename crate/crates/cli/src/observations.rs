//! The observations CSV: header `group,n_g,n,loss[,seed_tag]`.

use std::path::Path;

use allocplan::fit::LossObservation;
use allocplan::GroupId;

use crate::error::{invalid, CliResult};

const REQUIRED: [&str; 4] = ["group", "n_g", "n", "loss"];
const OPTIONAL: &str = "seed_tag";

/// Observations with their group labels; labels are numbered in order of
/// first appearance.
#[derive(Debug)]
pub struct ObservationTable {
    pub labels: Vec<String>,
    pub observations: Vec<LossObservation>,
}

impl ObservationTable {
    pub fn group_of(&self, label: &str) -> Option<GroupId> {
        self.labels.iter().position(|l| l == label).map(GroupId)
    }
}

pub fn read(path: &Path) -> CliResult<ObservationTable> {
    let text = crate::output::read_to_string(path)?;
    parse(&text).map_err(|e| match e {
        crate::error::CliError::Validation(m) => invalid(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> CliResult<ObservationTable> {
    if text.trim().is_empty() {
        return Err(invalid("empty file"));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| invalid(format!("line 1: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect::<Vec<_>>();
    let mut index = [usize::MAX; 4];
    for (slot, name) in index.iter_mut().zip(REQUIRED) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| invalid(format!("line 1: missing column '{name}'")))?;
    }
    let seed_col = headers.iter().position(|h| h == OPTIONAL);
    if let Some(extra) = headers.iter().find(|h| !REQUIRED.contains(&h.as_str()) && h.as_str() != OPTIONAL) {
        return Err(invalid(format!("line 1: unknown column '{extra}'")));
    }
    let mut labels: Vec<String> = Vec::new();
    let mut observations = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            invalid(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).map(str::trim).unwrap_or("");
        let label = field(index[0]);
        if label.is_empty() {
            return Err(invalid(format!("line {line}: empty group label")));
        }
        let int = |i: usize, name: &str| {
            field(i)
                .parse::<u64>()
                .map_err(|_| invalid(format!("line {line}: column '{name}' must be a non-negative integer")))
        };
        let n_g = int(index[1], "n_g")?;
        let n = int(index[2], "n")?;
        let loss: f64 = field(index[3])
            .parse()
            .map_err(|_| invalid(format!("line {line}: column 'loss' must be a number")))?;
        let seed_tag = match seed_col.map(field) {
            None | Some("") => None,
            Some(_) => Some(int(seed_col.unwrap(), OPTIONAL)?),
        };
        let g = match labels.iter().position(|l| l == label) {
            Some(g) => g,
            None => {
                labels.push(label.to_string());
                labels.len() - 1
            }
        };
        let o = LossObservation::new(GroupId(g), n_g, n, loss, seed_tag)
            .map_err(|e| invalid(format!("line {line}: {e}")))?;
        observations.push(o);
    }
    if observations.is_empty() {
        return Err(invalid("no observation rows"));
    }
    Ok(ObservationTable { labels, observations })
}

pub fn write(labels: &[String], observations: &[LossObservation]) -> Vec<u8> {
    let mut out = String::from("group,n_g,n,loss,seed_tag\n");
    for o in observations {
        let tag = o.seed_tag.map(|t| t.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{:?},{}\n", labels[o.group.0], o.n_g, o.n, o.loss, tag));
    }
    out.into_bytes()
}
