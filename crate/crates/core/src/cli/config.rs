//! Run configuration: one strict JSON document per run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metro::Method;
use crate::model::{ModelKind, ModelParams};
use crate::scan::{uniform_times, SeriesOptions, StateSpec, TWindow};

/// An axis given either by explicit values or as a range with `points` or `step`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl AxisSpec {
    pub fn range(start: f64, end: f64, points: usize) -> Self {
        AxisSpec {
            start: Some(start),
            end: Some(end),
            points: Some(points),
            ..Default::default()
        }
    }

    pub fn values(values: Vec<f64>) -> Self {
        AxisSpec {
            values: Some(values),
            ..Default::default()
        }
    }

    pub fn resolve(&self, name: &str) -> Result<Vec<f64>> {
        let bad = |msg: &str| Error::Config(format!("axis `{name}`: {msg}"));
        let ranged = self.start.is_some() || self.end.is_some() || self.points.is_some() || self.step.is_some();
        let axis = match (&self.values, ranged) {
            (Some(_), true) => return Err(bad("give either `values` or a range, not both")),
            (Some(v), false) => v.clone(),
            (None, false) => return Err(bad("empty specification")),
            (None, true) => {
                let (Some(start), Some(end)) = (self.start, self.end) else {
                    return Err(bad("a range needs `start` and `end`"));
                };
                match (self.points, self.step) {
                    (Some(_), Some(_)) => return Err(bad("give `points` or `step`, not both")),
                    (None, None) => return Err(bad("a range needs `points` or `step`")),
                    (Some(0), None) => return Err(bad("`points` must be positive")),
                    (Some(1), None) => vec![start],
                    (Some(n), None) => (0..n)
                        .map(|k| start + (end - start) * k as f64 / (n - 1) as f64)
                        .collect(),
                    (None, Some(step)) => {
                        if !(step > 0.0) || !step.is_finite() {
                            return Err(bad("`step` must be positive"));
                        }
                        let span = (end - start) / step;
                        let n = span.round();
                        if !(n >= 0.0) || (span - n).abs() > 1e-9 * n.max(1.0) {
                            return Err(bad("`end - start` must be a whole number of steps"));
                        }
                        (0..=n as usize).map(|k| start + step * k as f64).collect()
                    }
                }
            }
        };
        if axis.is_empty() {
            return Err(bad("no values"));
        }
        if axis.iter().any(|x| !x.is_finite()) {
            return Err(bad("values must be finite"));
        }
        if axis.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("values must be strictly increasing"));
        }
        Ok(axis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelKind,
    pub params: ModelParams,
    pub initial_state: StateSpec,
    pub method: Method,
    /// Evaluation times; defaults to the first-peak window.
    pub times: Option<AxisSpec>,
    /// Interaction sweep; defaults to `[0, 4]` in steps of `0.04`.
    pub u_axis: Option<AxisSpec>,
    /// Chain lengths for the scaling table; defaults to `2..=6`.
    pub m_axis: Option<Vec<usize>>,
    pub window: TWindow,
    pub steps_per_period: usize,
    pub gamma_step: Option<f64>,
    /// Output directory, overridden by `--out`.
    pub out_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelKind::Effective,
            params: ModelParams::default(),
            initial_state: StateSpec::Fock,
            method: Method::Generator,
            times: None,
            u_axis: None,
            m_axis: None,
            window: TWindow::default(),
            steps_per_period: SeriesOptions::default().steps_per_period,
            gamma_step: None,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params
            .validate()
            .map_err(|e| Error::Config(format!("params: {e}")))?;
        if self.window.points < 5 {
            return Err(Error::Config("window.points must be at least 5".into()));
        }
        if let Some(t) = self.window.t_end {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Config("window.t_end must be positive".into()));
            }
        }
        if self.steps_per_period == 0 {
            return Err(Error::Config("steps_per_period must be positive".into()));
        }
        if let Some(s) = self.gamma_step {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Config("gamma_step must be positive".into()));
            }
        }
        if let Some(t) = &self.times {
            if t.resolve("times")?[0] < 0.0 {
                return Err(Error::Config("axis `times`: values must be non-negative".into()));
            }
        }
        if let Some(u) = &self.u_axis {
            u.resolve("u_axis")?;
        }
        if let Some(m) = &self.m_axis {
            if m.is_empty() || m.iter().any(|&x| x < 2) {
                return Err(Error::Config("m_axis must be non-empty with every M at least 2".into()));
            }
        }
        if let StateSpec::Occupations(occ) = &self.initial_state {
            let total: u64 = occ.iter().map(|&n| n as u64).sum();
            if occ.len() != self.params.n_modes || total != self.params.n_particles as u64 {
                return Err(Error::Config(format!(
                    "initial_state occupations {occ:?} do not describe N={} particles on M={} sites",
                    self.params.n_particles, self.params.n_modes
                )));
            }
        }
        Ok(())
    }

    pub fn series_options(&self) -> SeriesOptions {
        SeriesOptions {
            steps_per_period: self.steps_per_period,
            gamma_step: self.gamma_step,
        }
    }

    pub fn time_axis(&self) -> Result<Vec<f64>> {
        match &self.times {
            Some(t) => t.resolve("times"),
            None => Ok(uniform_times(self.window.end_for(self.params.n_modes), self.window.points)),
        }
    }

    pub fn interaction_axis(&self) -> Result<Vec<f64>> {
        match &self.u_axis {
            Some(u) => u.resolve("u_axis"),
            None => Ok((0..=100).map(|k| 0.04 * k as f64).collect()),
        }
    }

    pub fn mode_axis(&self) -> Vec<usize> {
        self.m_axis.clone().unwrap_or_else(|| (2..=6).collect())
    }

    /// Canonical JSON of the resolved configuration, the input to the provenance hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.interaction_axis().unwrap().len(), 101);
        assert_eq!(c.time_axis().unwrap().len(), 400);
        assert_eq!(*c.time_axis().unwrap().last().unwrap(), 4.5);
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = RunConfig::from_json(r#"{"modle": "tilt"}"#).unwrap_err();
        assert!(matches!(&e, Error::Config(m) if m.contains("modle")), "{e}");
        let e = RunConfig::from_json(r#"{"params": {"gama": 1}}"#).unwrap_err();
        assert!(e.to_string().contains("gama"));
        let e = RunConfig::from_json(r#"{"times": {"start": 0, "stop": 1}}"#).unwrap_err();
        assert!(e.to_string().contains("stop"));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn full_document() {
        let c = RunConfig::from_json(
            r#"{
                "model": "tilt",
                "params": {"J": 0, "U": 0, "N": 2, "M": 3, "K": "first-order"},
                "initial_state": {"occupations": [1, 0, 1]},
                "method": "finite-difference",
                "times": {"start": 0.5, "end": 2, "step": 0.5},
                "u_axis": {"values": [0, 1]},
                "m_axis": [2, 3],
                "window": {"points": 50},
                "steps_per_period": 80,
                "gamma_step": 1e-4,
                "out_dir": "out"
            }"#,
        )
        .unwrap();
        assert_eq!(c.model, ModelKind::Tilt);
        assert_eq!(c.time_axis().unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(c.interaction_axis().unwrap(), vec![0.0, 1.0]);
        let round = RunConfig::from_json(&c.canonical_json()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn axis_rules() {
        assert_eq!(AxisSpec::range(0.0, 1.0, 3).resolve("a").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(AxisSpec::range(2.0, 9.0, 1).resolve("a").unwrap(), vec![2.0]);
        assert!(AxisSpec::values(vec![]).resolve("a").is_err());
        assert!(AxisSpec::values(vec![1.0, 1.0]).resolve("a").is_err());
        let both = AxisSpec { points: Some(3), step: Some(0.1), start: Some(0.0), end: Some(1.0), values: None };
        assert!(both.resolve("a").is_err());
        let uneven = AxisSpec { step: Some(0.3), start: Some(0.0), end: Some(1.0), ..Default::default() };
        assert!(uneven.resolve("a").is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for text in [
            r#"{"params": {"M": 1}}"#,
            r#"{"params": {"J": -1}}"#,
            r#"{"window": {"points": 2}}"#,
            r#"{"times": {"values": [-1, 1]}}"#,
            r#"{"initial_state": {"occupations": [1, 1, 0]}}"#,
            r#"{"m_axis": [1, 2]}"#,
            r#"{"method": "magic"}"#,
            r#"{"steps_per_period": 0}"#,
            "{",
        ] {
            let e = RunConfig::from_json(text).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{text}: {e}");
        }
    }
}
