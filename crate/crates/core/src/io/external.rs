//! Runs an external MILP solver on an exported model.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::Deserialize;

use super::mps::write_mps;
use super::solution::{parse_solution, Solution, SolutionSource};
use crate::error::{Error, Result};
use crate::milp::MilpModel;
use crate::solver::SolveStatus;

/// Environment variable holding the default command template.
pub const SOLVER_CMD_ENV: &str = "EMDARP_SOLVER_CMD";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalConfig {
    /// Wall-clock limit for the solver process.
    #[serde(default, rename = "timeout_secs", with = "secs")]
    pub timeout: Option<Duration>,
    /// Status to report for a nonzero exit code.
    #[serde(default)]
    pub exit_codes: BTreeMap<i32, SolveStatus>,
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer};

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        let v = Option::<f64>::deserialize(d)?;
        v.map(|s| Duration::try_from_secs_f64(s).map_err(serde::de::Error::custom)).transpose()
    }
}

impl ExternalConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::External(format!("config {}: {e}", path.display())))
    }
}

/// Writes `model` to a temporary MPS file, runs `template` with `{model}` and
/// `{solution}` replaced by the file paths, and parses the solution file.
///
/// A timed-out run reports [`SolveStatus::Unknown`] and ignores any partial
/// output.
pub fn run_external(model: &MilpModel, template: &str, config: &ExternalConfig) -> Result<Solution> {
    if !template.contains("{model}") || !template.contains("{solution}") {
        return Err(Error::External(format!("command template `{template}` needs {{model}} and {{solution}}")));
    }
    let dir = tempfile::tempdir().map_err(|e| Error::External(format!("temporary directory: {e}")))?;
    let model_path = dir.path().join("model.mps");
    let solution_path = dir.path().join("solution.sol");
    write_mps(model, &model_path)?;

    let args: Vec<String> = template
        .split_whitespace()
        .map(|a| {
            a.replace("{model}", &model_path.to_string_lossy()).replace("{solution}", &solution_path.to_string_lossy())
        })
        .collect();
    let (program, rest) = args.split_first().ok_or_else(|| Error::External("empty command template".into()))?;
    let mut child = Command::new(program)
        .args(rest)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| Error::External(format!("failed to start `{program}`: {e}")))?;

    let started = Instant::now();
    let exit = loop {
        match child.try_wait().map_err(|e| Error::External(format!("waiting for `{program}`: {e}")))? {
            Some(status) => break status,
            None if config.timeout.is_some_and(|t| started.elapsed() >= t) => {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(unknown());
            }
            None => std::thread::sleep(Duration::from_millis(5)),
        }
    };

    let mapped = exit.code().filter(|&c| c != 0).and_then(|c| config.exit_codes.get(&c).copied());
    if !solution_path.exists() {
        return match (exit.success(), mapped) {
            (false, Some(status)) => Ok(Solution { status, ..unknown() }),
            (false, None) => Ok(unknown()),
            (true, _) => Err(Error::External(format!("`{program}` exited successfully but wrote no solution file"))),
        };
    }
    let mut solution = parse_solution(&solution_path, Some(model))?;
    if let Some(status) = mapped {
        solution.status = status;
    }
    Ok(solution)
}

fn unknown() -> Solution {
    Solution {
        values: BTreeMap::new(),
        objective_reported: None,
        status: SolveStatus::Unknown,
        source: SolutionSource::External,
    }
}
