use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelSpec;

/// What a sweep computes at each grid point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    ExactOnly,
    Quantum,
    Both,
    Ff,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_only" | "exact" => Ok(Mode::ExactOnly),
            "quantum" => Ok(Mode::Quantum),
            "both" => Ok(Mode::Both),
            "ff" => Ok(Mode::Ff),
            _ => Err(Error::Config(format!(
                "unknown mode `{s}` (expected exact_only, quantum, both or ff)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingKind {
    Heisenberg,
    GapGeneral,
    GapFf,
    FfVsGeneral,
}

impl FromStr for ScalingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heisenberg" => Ok(ScalingKind::Heisenberg),
            "gap_general" => Ok(ScalingKind::GapGeneral),
            "gap_ff" => Ok(ScalingKind::GapFf),
            "ff_vs_general" => Ok(ScalingKind::FfVsGeneral),
            _ => Err(Error::Config(format!(
                "unknown scaling study `{s}` (expected heisenberg, gap_general, gap_ff or ff_vs_general)"
            ))),
        }
    }
}

/// Either explicit `values` or an inclusive `start`/`stop`/`step` range.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl Grid {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values: Some(values), ..Self::default() }
    }

    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        Self { values: None, start: Some(start), stop: Some(stop), step: Some(step) }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match (&self.values, self.start, self.stop, self.step) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(h)) => {
                if !(h > 0.0) || !(b >= a) {
                    return Err(Error::Config(format!("bad grid range {a}..{b} step {h}")));
                }
                let n = ((b - a) / h + 1e-9).floor() as usize + 1;
                (0..n).map(|i| a + i as f64 * h).collect()
            }
            _ => {
                return Err(Error::Config(
                    "grid needs either `values` or all of `start`, `stop`, `step`".into(),
                ))
            }
        };
        if pts.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if pts.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("grid contains non-finite values".into()));
        }
        Ok(pts)
    }
}

/// Output file names, relative to the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
}

fn default_csv() -> String {
    "sweep.csv".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Self { csv: default_csv(), svg: None, json: None }
    }
}

/// Parameters of a scaling study; unset lists fall back to the study's defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub kind: ScalingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_values: Option<Vec<usize>>,
}

impl ScalingSpec {
    pub fn new(kind: ScalingKind) -> Self {
        Self { kind, eps_values: None, gaps: None, r_values: None }
    }
}

/// The experiment file: `model`, `grid`, `eps`, `seeds`, `mode`, `n_runs`,
/// `outputs` and an optional `scaling` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub mode: Mode,
    /// Median over this many amplitude-estimation runs; 1 is a raw run.
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingSpec>,
}

fn default_eps() -> f64 {
    0.05
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_runs() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec) -> Self {
        Self {
            model,
            grid: None,
            eps: default_eps(),
            seeds: default_seeds(),
            mode: Mode::default(),
            n_runs: default_runs(),
            outputs: Outputs::default(),
            scaling: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.eps > 0.0 && self.eps <= 0.5) {
            return Err(Error::Config(format!("eps must lie in (0, 1/2], got {}", self.eps)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.n_runs == 0 || self.n_runs % 2 == 0 {
            return Err(Error::Config(format!("n_runs must be odd, got {}", self.n_runs)));
        }
        if let Some(g) = &self.grid {
            g.points()?;
        }
        for name in [Some(&self.outputs.csv), self.outputs.svg.as_ref(), self.outputs.json.as_ref()]
            .into_iter()
            .flatten()
        {
            if name.is_empty() {
                return Err(Error::Config("output file names must not be empty".into()));
            }
        }
        Ok(())
    }

    /// Grid points, or the model's own `lambda` when no grid is given.
    pub fn lambdas(&self) -> Result<Vec<f64>> {
        match &self.grid {
            Some(g) => g.points(),
            None => Ok(vec![self.model.lambda]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
eps = 0.05
seeds = [1, 2, 3]
mode = "both"

[model]
family = "tfim"
n_qubits = 4

[grid]
start = 0.2
stop = 1.6
step = 0.1

[outputs]
csv = "tfim.csv"
svg = "tfim.svg"
"#;

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.mode, Mode::Both);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        let pts = cfg.lambdas().unwrap();
        assert_eq!(pts.len(), 15);
        assert!((pts[14] - 1.6).abs() < 1e-12);
        assert_eq!(cfg.outputs.svg.as_deref(), Some("tfim.svg"));
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let bad = SAMPLE.replace("mode = \"both\"", "mode = \"both\"\ncolour = 3");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))));
        let bad = SAMPLE.replace("step = 0.1", "step = 0.1\nstride = 2");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))));
        let bad = SAMPLE.replace("n_qubits = 4", "n_qubits = 4\nspin = 1");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_values_are_errors() {
        for (from, to) in [
            ("eps = 0.05", "eps = 0.0"),
            ("seeds = [1, 2, 3]", "seeds = []"),
            ("mode = \"both\"", "mode = \"fast\""),
            ("step = 0.1", "step = -0.1"),
            ("n_qubits = 4", "n_qubits = 40"),
        ] {
            let bad = SAMPLE.replace(from, to);
            assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))), "{to}");
        }
    }

    #[test]
    fn single_point_grid() {
        let g = Grid::from_values(vec![0.7]);
        assert_eq!(g.points().unwrap(), vec![0.7]);
        assert!(Grid::default().points().is_err());
    }

    #[test]
    fn mode_and_kind_names() {
        assert_eq!("ff".parse::<Mode>().unwrap(), Mode::Ff);
        assert_eq!("gap_ff".parse::<ScalingKind>().unwrap(), ScalingKind::GapFf);
        assert!("other".parse::<ScalingKind>().is_err());
    }
}
