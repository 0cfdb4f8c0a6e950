//! Solver solution files: one `name value` pair per line.
//!
//! Lines starting with `#` are ignored. Two optional header lines may precede
//! the values: `objective <v>` and `status optimal|feasible|infeasible|unknown`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::milp::MilpModel;
use crate::solver::SolveStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionSource {
    Builtin,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub values: BTreeMap<String, f64>,
    pub objective_reported: Option<f64>,
    pub status: SolveStatus,
    pub source: SolutionSource,
}

impl Solution {
    /// Parses solution text. With a model, names it does not declare are
    /// rejected.
    pub fn parse(text: &str, model: Option<&MilpModel>) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut objective = None;
        let mut status = None;
        let mut seen_value = false;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |message: String| Error::SolutionFormat { line, message };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err(format!("expected `name value`, found `{trimmed}`")));
            };
            if !seen_value && name == "status" && status.is_none() {
                status = Some(match value.to_ascii_lowercase().as_str() {
                    "optimal" => SolveStatus::Optimal,
                    "feasible" => SolveStatus::Feasible,
                    "infeasible" => SolveStatus::Infeasible,
                    "unknown" => SolveStatus::Unknown,
                    other => return Err(err(format!("unknown status `{other}`"))),
                });
                continue;
            }
            let v: f64 = value.parse().map_err(|_| err(format!("`{value}` is not a number")))?;
            if !seen_value && name == "objective" && objective.is_none() {
                objective = Some(v);
                continue;
            }
            seen_value = true;
            if model.is_some_and(|m| m.lookup(name).is_none()) {
                return Err(err(format!("unknown variable `{name}`")));
            }
            if values.insert(name.to_string(), v).is_some() {
                return Err(err(format!("duplicate variable `{name}`")));
            }
        }
        let status = status.unwrap_or(if values.is_empty() { SolveStatus::Unknown } else { SolveStatus::Feasible });
        Ok(Self { values, objective_reported: objective, status, source: SolutionSource::External })
    }

    /// Dense value vector in model order; missing variables default to zero
    /// and are listed in the returned warnings.
    pub fn to_vector(&self, model: &MilpModel) -> (Vec<f64>, Vec<String>) {
        let mut warnings = Vec::new();
        let values = model
            .variables()
            .iter()
            .map(|v| match self.values.get(&v.name) {
                Some(&x) => x,
                None => {
                    warnings.push(format!("no value for {}; assuming 0", v.name));
                    0.0
                }
            })
            .collect();
        (values, warnings)
    }

    pub fn from_vector(model: &MilpModel, values: &[f64], status: SolveStatus, source: SolutionSource) -> Self {
        Self {
            values: model.variables().iter().zip(values).map(|(v, &x)| (v.name.clone(), x)).collect(),
            objective_reported: Some(model.objective_value(values)),
            status,
            source,
        }
    }

    /// Text form readable by [`Solution::parse`]; variables in model order when
    /// a model is given.
    pub fn to_text(&self, model: Option<&MilpModel>) -> String {
        let mut out = String::new();
        let status = match self.status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unknown => "unknown",
        };
        writeln!(out, "status {status}").unwrap();
        if let Some(o) = self.objective_reported {
            writeln!(out, "objective {o}").unwrap();
        }
        match model {
            Some(m) => {
                for v in m.variables() {
                    if let Some(x) = self.values.get(&v.name) {
                        writeln!(out, "{} {x}", v.name).unwrap();
                    }
                }
            }
            None => {
                for (name, x) in &self.values {
                    writeln!(out, "{name} {x}").unwrap();
                }
            }
        }
        out
    }
}

pub fn parse_solution(path: impl AsRef<Path>, model: Option<&MilpModel>) -> Result<Solution> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Solution::parse(&text, model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Domain, VarClass};

    #[test]
    fn two_entries() {
        let s = Solution::parse("x_0_1_2 1\nT 42.5", None).unwrap();
        assert_eq!(s.values.len(), 2);
        assert_eq!(s.values["T"], 42.5);
        assert_eq!(s.status, SolveStatus::Feasible);
    }

    #[test]
    fn comments_and_header() {
        let s = Solution::parse("# produced by hand\nstatus optimal\nobjective 3\n\n# again\nT 3\n", None).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.objective_reported, Some(3.0));
        assert_eq!(s.values.len(), 1);
    }

    #[test]
    fn duplicate_reports_its_line() {
        let err = Solution::parse("T 1\nT 2", None).unwrap_err();
        assert!(matches!(err, Error::SolutionFormat { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_name_against_model() {
        let mut m = MilpModel::new("m");
        m.add_variable("T", VarClass::MissionDuration, vec![], 0.0, f64::INFINITY, Domain::Continuous);
        let err = Solution::parse("T 1\n# x\nbogus 2\n", Some(&m)).unwrap_err();
        assert!(matches!(err, Error::SolutionFormat { line: 3, .. }), "{err}");
        let err = Solution::parse("T one\n", Some(&m)).unwrap_err();
        assert!(err.to_string().contains("not a number"));
    }

    #[test]
    fn missing_values_default_to_zero() {
        let mut m = MilpModel::new("m");
        m.add_variable("a", VarClass::Generic, vec![], 0.0, 1.0, Domain::Continuous);
        m.add_variable("b", VarClass::Generic, vec![], 0.0, 1.0, Domain::Continuous);
        let s = Solution::parse("b 0.5\n", Some(&m)).unwrap();
        let (v, w) = s.to_vector(&m);
        assert_eq!(v, vec![0.0, 0.5]);
        assert_eq!(w.len(), 1);
        let back = Solution::parse(&s.to_text(Some(&m)), Some(&m)).unwrap();
        assert_eq!(back.values, s.values);
    }
}
