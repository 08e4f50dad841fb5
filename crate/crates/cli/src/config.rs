//! JSON run configuration. Every field is optional; command-line flags
//! override whatever the file sets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tfbs_core::analysis::{MeasureTime, Schedule};
use tfbs_core::l1::HistoryForm;
use tfbs_core::model::{CallDemo, CustomProblem, ProblemOptions, PROBLEM_KEYS};
use tfbs_core::solver::{BoundaryTreatment, Scheme, SolverOptions};
use tfbs_core::weights::BSource;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Named(String),
    Pairs(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<String>,
    pub scheme: Option<Scheme>,
    pub boundary: Option<BoundaryTreatment>,
    pub alpha: Option<Vec<f64>>,
    pub schedule: Option<ScheduleSpec>,
    #[serde(rename = "M")]
    pub intervals: Option<usize>,
    #[serde(rename = "N")]
    pub steps: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub verbatim_history: Option<bool>,
    pub regenerate_b: Option<bool>,
    pub stability_report: Option<bool>,
    pub measure_time: Option<MeasureTime>,
    pub custom: Option<CustomProblem>,
    pub call_demo: Option<CallDemo>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` win.
    pub fn merged(self, over: RunConfig) -> Self {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            problem,
            scheme,
            boundary,
            alpha,
            schedule,
            intervals,
            steps,
            out_dir,
            formats,
            verbatim_history,
            regenerate_b,
            stability_report,
            measure_time,
            custom,
            call_demo
        )
    }

    pub fn problem_key(&self) -> Result<&str, CliError> {
        let key = self.problem.as_deref().unwrap_or("example1");
        if !PROBLEM_KEYS.contains(&key) {
            return Err(CliError::Validation(format!(
                "unknown problem '{key}' (expected one of {})",
                PROBLEM_KEYS.join(", ")
            )));
        }
        Ok(key)
    }

    pub fn problem_options(&self) -> ProblemOptions {
        ProblemOptions {
            custom: self.custom.clone(),
            call_demo: self.call_demo,
        }
    }

    pub fn alphas(&self) -> Result<Vec<f64>, CliError> {
        let a = self.alpha.clone().unwrap_or_else(|| vec![0.5]);
        if a.is_empty() {
            return Err(CliError::Validation("alpha list is empty".into()));
        }
        if let Some(bad) = a.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
            return Err(CliError::Validation(format!(
                "alpha {bad} is outside (0, 1]"
            )));
        }
        Ok(a)
    }

    pub fn single_alpha(&self) -> Result<f64, CliError> {
        match self.alphas()?.as_slice() {
            [a] => Ok(*a),
            _ => Err(CliError::Validation(
                "this command takes a single alpha".into(),
            )),
        }
    }

    pub fn mesh(&self) -> Result<(usize, usize), CliError> {
        match (self.intervals, self.steps) {
            (Some(m), Some(n)) => Ok((m, n)),
            _ => Err(CliError::Validation("both M and N are required".into())),
        }
    }

    pub fn schedule(&self) -> Result<Schedule, CliError> {
        let s = match &self.schedule {
            None => return Err(CliError::Validation("a schedule is required".into())),
            Some(ScheduleSpec::Named(n)) => Schedule::named(n),
            Some(ScheduleSpec::Pairs(p)) => Schedule::explicit(p.clone()),
        };
        s.map_err(CliError::from)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            scheme: self.scheme.unwrap_or_default(),
            boundary: self.boundary.unwrap_or_default(),
            history: if self.verbatim_history.unwrap_or(false) {
                HistoryForm::Verbatim
            } else {
                HistoryForm::Corrected
            },
            b_source: if self.regenerate_b.unwrap_or(false) {
                BSource::Regenerated
            } else {
                BSource::Tabulated
            },
        }
    }

    pub fn formats(&self) -> Vec<Format> {
        self.formats
            .clone()
            .unwrap_or_else(|| vec![Format::Csv, Format::Json])
    }
}

/// `"10x10,20x100"` → `[(10, 10), (20, 100)]`; anything else is a name.
pub fn parse_schedule(text: &str) -> Result<ScheduleSpec, String> {
    if !text.contains('x') {
        return Ok(ScheduleSpec::Named(text.to_string()));
    }
    text.split(',')
        .map(|pair| {
            let (m, n) = pair
                .trim()
                .split_once('x')
                .ok_or_else(|| format!("bad mesh pair '{pair}', expected MxN"))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|e| format!("bad mesh pair '{pair}': {e}"))
            };
            Ok((parse(m)?, parse(n)?))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(ScheduleSpec::Pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig =
            serde_json::from_str(r#"{"problem": "example2", "alpha": [0.3, 0.5], "M": 10}"#)
                .unwrap();
        let flags = RunConfig {
            alpha: Some(vec![0.7]),
            ..Default::default()
        };
        let c = file.merged(flags);
        assert_eq!(c.problem.as_deref(), Some("example2"));
        assert_eq!(c.alpha, Some(vec![0.7]));
        assert_eq!(c.intervals, Some(10));
    }

    #[test]
    fn schedules_parse() {
        assert_eq!(
            parse_schedule("table2").unwrap(),
            ScheduleSpec::Named("table2".into())
        );
        assert_eq!(
            parse_schedule("10x10, 20x100").unwrap(),
            ScheduleSpec::Pairs(vec![(10, 10), (20, 100)])
        );
        assert!(parse_schedule("10x").is_err());
        let c: RunConfig = serde_json::from_str(r#"{"schedule": [[80, 10], [80, 20]]}"#).unwrap();
        assert_eq!(c.schedule().unwrap().pairs.len(), 2);
    }

    #[test]
    fn validation() {
        let c = RunConfig {
            alpha: Some(vec![1.5]),
            problem: Some("nope".into()),
            ..Default::default()
        };
        assert!(c.alphas().is_err());
        assert!(c.problem_key().is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
