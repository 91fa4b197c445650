//! Experiment configuration, result rows and CSV output.
//!
//! The protocols themselves live in [`experiments`]; random fields and noise
//! in [`grf`] and [`noise`].

pub mod experiments;
pub mod grf;
pub mod noise;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::estimator::{k_n, MaskGranularity};
use crate::grid::GridSpec;
use crate::potentials::TORUS_POTENTIALS;
use crate::solver::SolverConfig;
use crate::sphere::{SpherePotential, SphereGridSpec};
use crate::{Error, Result};

pub use grf::GrfSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Accuracy,
    Masking,
    Timegen,
    Convergence,
    Lowerbound,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Accuracy => "accuracy",
            ExperimentKind::Masking => "masking",
            ExperimentKind::Timegen => "timegen",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Lowerbound => "lowerbound",
        }
    }

    /// Stream coordinate of the experiment's per-trial draws. Masking shares
    /// the accuracy coordinate so that `p = 0` reproduces accuracy bitwise.
    pub fn stream_id(self) -> u64 {
        match self {
            ExperimentKind::Accuracy | ExperimentKind::Masking => 1,
            ExperimentKind::Timegen => 3,
            ExperimentKind::Convergence => 4,
            ExperimentKind::Lowerbound => 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub rel_level: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { rel_level: 1e-3 }
    }
}

/// A declarative experiment description, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub potential: String,
    pub params: Option<Value>,
    pub grid: GridSpec,
    pub sphere_grid: SphereGridSpec,
    pub solver: SolverConfig,
    pub budget: usize,
    pub grf: GrfSpec,
    pub noise: NoiseSpec,
    pub mask_p: Vec<f64>,
    pub mask_granularity: MaskGranularity,
    pub q_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub s_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Accuracy,
            potential: "free_particle".into(),
            params: None,
            grid: GridSpec::default(),
            sphere_grid: SphereGridSpec::default(),
            solver: SolverConfig::default(),
            budget: 1089,
            grf: GrfSpec::default(),
            noise: NoiseSpec::default(),
            mask_p: vec![0.1, 0.2],
            mask_granularity: MaskGranularity::PerDataset,
            q_list: vec![1, 2, 4, 8, 16],
            n_list: vec![9, 25, 81, 289, 1089],
            s_list: vec![0.5, 1.0, 2.0],
            eps_list: vec![1e-2],
            trials: 100,
            seed: 0,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.as_ref().display())))?;
        ExperimentConfig::from_json(&text)
    }

    pub fn is_sphere(&self) -> bool {
        SpherePotential::is_sphere_name(&self.potential)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.q_list.is_empty() || self.q_list[0] < 1 || self.q_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("q_list must be nonempty, strictly ascending and start at ≥ 1"));
        }
        let d = self.grid.d;
        for &n in &self.n_list {
            k_n(n, d)?;
        }
        if self.experiment == ExperimentKind::Convergence && self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("n_list must be strictly ascending"));
        }
        if !(self.noise.rel_level >= 0.0 && self.noise.rel_level.is_finite()) {
            return Err(Error::config("noise.rel_level must be finite and nonnegative"));
        }
        for &p in &self.mask_p {
            noise::check_probability(p)?;
        }
        if self.s_list.iter().any(|&s| !(s > 0.0)) || self.eps_list.iter().any(|&e| !(e >= 0.0)) {
            return Err(Error::config("s_list needs s > 0 and eps_list eps ≥ 0"));
        }
        self.solver.validate()?;
        if !self.is_sphere() && !TORUS_POTENTIALS.contains(&self.potential.as_str()) && !matches!(self.potential.as_str(), "free" | "double_slit" | "constant") {
            return Err(Error::config(format!("unknown potential `{}`", self.potential)));
        }
        if self.is_sphere() && !matches!(self.experiment, ExperimentKind::Accuracy | ExperimentKind::Masking | ExperimentKind::Timegen) {
            return Err(Error::config("sphere potentials support accuracy, masking and timegen only"));
        }
        self.grid.build()?;
        Ok(())
    }
}

/// One line of a results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub potential: String,
    pub param_name: String,
    pub param_value: f64,
    pub mean_rel_err: f64,
    pub std_rel_err: f64,
    pub trials: usize,
    pub seconds: f64,
}

impl ResultRow {
    pub fn from_errors(experiment: &str, potential: &str, param_name: &str, param_value: f64, errors: &[f64], seconds: f64) -> Self {
        let (mean, std) = mean_std(errors);
        ResultRow {
            experiment: experiment.into(),
            potential: potential.into(),
            param_name: param_name.into(),
            param_value,
            mean_rel_err: mean,
            std_rel_err: std,
            trials: errors.len(),
            seconds,
        }
    }
}

/// Sample mean and standard deviation (divisor `len − 1`; zero for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn write_rows(rows: &[ResultRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rows(r: impl std::io::Read) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn save_rows(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows(rows, std::fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_statistics() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "timegen", "potential": "paul_trap"}"#).unwrap();
        assert_eq!(cfg.q_list, vec![1, 2, 4, 8, 16]);
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.solver.t_final, 0.1);
        for bad in [
            r#"{"trials": 0}"#,
            r#"{"q_list": [4, 2]}"#,
            r#"{"n_list": [4]}"#,
            r#"{"potential": "nonsense"}"#,
            r#"{"mask_p": [1.5]}"#,
            r#"{"unknown_field": 1}"#,
            r#"{"experiment": "convergence", "potential": "coulomb"}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
        let sphere = ExperimentConfig::from_json(r#"{"potential": "dipole", "solver": {"T": 0.2, "dt": 0.002}}"#).unwrap();
        assert!(sphere.is_sphere());
        assert_eq!(sphere.solver.steps(), 100);
    }

    #[test]
    fn csv_roundtrip_and_header() {
        let rows = vec![ResultRow::from_errors("accuracy", "free_particle", "noise", 1e-3, &[1.0, 3.0], 0.5)];
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("experiment,potential,param_name,param_value,mean_rel_err,std_rel_err,trials,seconds\n"));
        assert_eq!(read_rows(&buf[..]).unwrap(), rows);
    }
}
