//! Effective configuration: defaults, then config file, then flags.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{CliError, CliResult};

/// The resolved configuration echoed into every JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub k: usize,
    pub nsigma: f64,
    pub speed_floor: f64,
    pub cond_threshold: f64,
    pub classify_tol: f64,
    pub softening: f64,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    pub rank_tol: f64,
    pub null_weight_threshold: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            k: 1,
            nsigma: 3.0,
            speed_floor: 1e-3,
            cond_threshold: 1e6,
            classify_tol: 1e-6,
            softening: 1.0,
            dt: 1e-3,
            steps: 10_000,
            seed: 0,
            rank_tol: 1e-9,
            null_weight_threshold: 1e-3,
        }
    }
}

/// File representation: every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    k: Option<usize>,
    nsigma: Option<f64>,
    speed_floor: Option<f64>,
    cond_threshold: Option<f64>,
    classify_tol: Option<f64>,
    softening: Option<f64>,
    dt: Option<f64>,
    steps: Option<usize>,
    seed: Option<u64>,
    rank_tol: Option<f64>,
    null_weight_threshold: Option<f64>,
}

impl Config {
    /// Load from an explicit path, else from $KINEFLOW_CONFIG, else
    /// defaults.
    pub fn load(explicit: Option<&Path>) -> CliResult<Config> {
        let mut config = Config::default();
        let path = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os("KINEFLOW_CONFIG").map(std::path::PathBuf::from),
        };
        if let Some(path) = path {
            let text = std::fs::read_to_string(&path).map_err(|e| {
                CliError::Input(format!("cannot read config {}: {e}", path.display()))
            })?;
            let file: ConfigFile = serde_json::from_str(&text).map_err(|e| {
                CliError::Input(format!("config {}: {e}", path.display()))
            })?;
            config.apply_file(file);
        }
        config.validate()?;
        Ok(config)
    }

    fn apply_file(&mut self, f: ConfigFile) {
        if let Some(v) = f.k {
            self.k = v;
        }
        if let Some(v) = f.nsigma {
            self.nsigma = v;
        }
        if let Some(v) = f.speed_floor {
            self.speed_floor = v;
        }
        if let Some(v) = f.cond_threshold {
            self.cond_threshold = v;
        }
        if let Some(v) = f.classify_tol {
            self.classify_tol = v;
        }
        if let Some(v) = f.softening {
            self.softening = v;
        }
        if let Some(v) = f.dt {
            self.dt = v;
        }
        if let Some(v) = f.steps {
            self.steps = v;
        }
        if let Some(v) = f.seed {
            self.seed = v;
        }
        if let Some(v) = f.rank_tol {
            self.rank_tol = v;
        }
        if let Some(v) = f.null_weight_threshold {
            self.null_weight_threshold = v;
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let positive = [
            ("nsigma", self.nsigma),
            ("speed_floor", self.speed_floor),
            ("cond_threshold", self.cond_threshold),
            ("classify_tol", self.classify_tol),
            ("dt", self.dt),
            ("rank_tol", self.rank_tol),
            ("null_weight_threshold", self.null_weight_threshold),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(CliError::Input(format!("config {name} = {value} must be positive")));
            }
        }
        if self.softening < 0.0 || !self.softening.is_finite() {
            return Err(CliError::Input(format!(
                "config softening = {} must be >= 0",
                self.softening
            )));
        }
        if self.k == 0 {
            return Err(CliError::Input("config k must be >= 1".into()));
        }
        Ok(())
    }
}
