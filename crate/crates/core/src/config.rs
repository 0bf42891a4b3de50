//! Run configuration: one JSON document describing a reproducible run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bands::{default_kgrid, DEFAULT_TOL_FLAT};
use crate::dynamics::PacketSpec;
use crate::error::{Error, Result};
use crate::fiber::SolverOptions;
use crate::field::{FieldRealization, FieldSpec};
use crate::grid::{Grid1D, KGrid};
use crate::io::read_two_column;
use crate::verify::Tolerances;

fn default_n_max() -> usize {
    3
}

fn default_n_k() -> usize {
    101
}

fn default_tol_flat() -> f64 {
    DEFAULT_TOL_FLAT
}

fn default_horizon() -> f64 {
    200.0
}

fn default_n_times() -> usize {
    64
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub packet: PacketSpec,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Number of log-spaced sample times in `[1, horizon]`.
    #[serde(default = "default_n_times")]
    pub n_times: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub field: FieldSpec,
    pub grid: Grid1D,
    /// Explicit k-window; when absent it is derived from the field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kgrid: Option<KGrid>,
    /// k-points of the derived window.
    #[serde(default = "default_n_k")]
    pub n_k: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_tol_flat")]
    pub tol_flat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(field: FieldSpec, grid: Grid1D) -> Self {
        RunConfig {
            field,
            grid,
            kgrid: None,
            n_k: default_n_k(),
            n_max: default_n_max(),
            tol_flat: DEFAULT_TOL_FLAT,
            seed: None,
            solver: SolverOptions::default(),
            dynamics: None,
            tolerances: Tolerances::default(),
            out_dir: default_out_dir(),
        }
    }

    /// Parse a config file. Tabulated covariances or profiles may point to a
    /// two-column CSV with `{"kind": "tabulated", "file": "..."}`, resolved
    /// relative to the config; the table is inlined so the echo stands alone.
    pub fn from_path(path: &Path) -> Result<Self> {
        let config = Self::from_path_unchecked(path)?;
        config.validate()?;
        Ok(config)
    }

    /// [`RunConfig::from_path`] without [`RunConfig::validate`], for callers
    /// that apply overrides first.
    pub fn from_path_unchecked(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        inline_tables(&mut value, None, base)?;
        serde_json::from_value(value).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        if self.field.is_random() && self.seed.is_none() {
            return Err(Error::MissingSeed);
        }
        if self.kgrid.is_none() && self.n_k < 2 {
            return Err(Error::InvalidArgument(format!(
                "n_k must be at least 2, got {}",
                self.n_k
            )));
        }
        if !(self.tol_flat >= 0.0 && self.tol_flat.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tol_flat must be non-negative, got {}",
                self.tol_flat
            )));
        }
        if let Some(d) = &self.dynamics {
            d.packet.validate()?;
            if !(d.horizon >= 1.0 && d.horizon.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "horizon must be at least 1, got {}",
                    d.horizon
                )));
            }
            if d.n_times == 0 {
                return Err(Error::InvalidArgument("n_times must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn kgrid_for(&self, field: &FieldRealization) -> Result<KGrid> {
        match self.kgrid {
            Some(k) => Ok(k),
            None => default_kgrid(field, self.n_max, self.n_k),
        }
    }
}

fn inline_tables(value: &mut Value, key: Option<&str>, base: &Path) -> Result<()> {
    match value {
        Value::Object(map) => {
            let tabulated = map.get("kind").and_then(Value::as_str) == Some("tabulated");
            if tabulated {
                if let Some(file) = map.get("file").and_then(Value::as_str) {
                    let (xs, ys) = read_two_column(&base.join(file))?;
                    let abscissa = match key {
                        Some("covariance") => "lags",
                        Some("profile") => "offsets",
                        _ => {
                            return Err(Error::InvalidSpec(format!(
                                "table file {file} must sit under `covariance` or `profile`"
                            )))
                        }
                    };
                    map.remove("file");
                    map.insert(abscissa.into(), xs.into());
                    map.insert("values".into(), ys.into());
                }
            }
            for (k, v) in map.iter_mut() {
                inline_tables(v, Some(k.as_str()), base)?;
            }
        }
        Value::Array(items) => {
            for v in items {
                inline_tables(v, key, base)?;
            }
        }
        _ => {}
    }
    Ok(())
}
