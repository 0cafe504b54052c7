//! Run configuration: a single JSON document describing the matrix, the
//! potential, the measure, the schedule and the output formats.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use ruelle_core::potential::{Potential, TabulatedFunction};
use ruelle_core::shift::{MarkovMeasure, TransitionMatrix};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub matrix: MatrixSource,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub measure: MeasureSpec,
    #[serde(default)]
    pub schedule: Schedule,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSource {
    #[serde(default)]
    pub inline: Option<InlineMatrix>,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
pub struct InlineMatrix {
    pub n: usize,
    pub rows: Vec<Vec<u8>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant {
        value: [f64; 2],
    },
    Geometric {
        r: f64,
        #[serde(default = "default_scale2")]
        scale2: f64,
    },
    Table {
        #[serde(default)]
        path: Option<PathBuf>,
        #[serde(default)]
        inline: Option<serde_json::Value>,
    },
}

fn default_scale2() -> f64 {
    0.5
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureSpec {
    #[default]
    #[serde(rename = "parry")]
    Parry,
    #[serde(untagged)]
    Custom { path: PathBuf },
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub m_min: usize,
    pub m_max: usize,
    pub q_min: usize,
    pub q_max: usize,
    /// Truncation degree of zeta series.
    pub series_degree: usize,
    /// Birkhoff-sum tolerance.
    pub birkhoff_tol: f64,
    /// Relative eigenvalue clustering tolerance.
    pub cluster_tol: f64,
    /// Quadrature depth offset: E_m integrates at depth m + quad_extra.
    pub quad_extra: usize,
    /// Depth used to certify max Re f.
    pub b1_depth: usize,
    /// Number of random samples per inequality family in `verify`.
    pub samples: usize,
    /// Seed for sampled checks.
    pub seed: u64,
    /// Counting-bound exponent alpha.
    pub alpha: f64,
    /// Counting/rank radius R; defaults to 1.25 e^{h_top}.
    pub big_r: Option<f64>,
    /// Geometric profile theta_m = theta_d * theta_r^m.
    pub theta_d: f64,
    pub theta_r: f64,
    /// Demuth-type counting constant; calibrated on f == 0 when absent.
    pub c_alpha: Option<f64>,
    /// Scale factor applied to C2 before verification (diagnostic knob).
    pub c2_scale: f64,
    /// Number of product-evaluation grid points.
    pub z_grid: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            m_min: 2,
            m_max: 7,
            q_min: 1,
            q_max: 8,
            series_degree: 12,
            birkhoff_tol: 1e-10,
            cluster_tol: 1e-8,
            quad_extra: 4,
            b1_depth: 8,
            samples: 100,
            seed: 7,
            alpha: 1.0,
            big_r: None,
            theta_d: 1.0,
            theta_r: 0.5,
            c_alpha: None,
            c2_scale: 1.0,
            z_grid: 20,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let s = &self.schedule;
        if s.m_min > s.m_max || s.q_min > s.q_max {
            return Err(CliError::Config(format!(
                "empty schedule: m {}..{}, q {}..{}",
                s.m_min, s.m_max, s.q_min, s.q_max
            )));
        }
        if s.q_min < 1 {
            return Err(CliError::Config("q range must start at 1".into()));
        }
        for (name, value) in [
            ("birkhoff-tol", s.birkhoff_tol),
            ("cluster-tol", s.cluster_tol),
        ] {
            if value <= 0.0 {
                return Err(CliError::Config(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !(0.0 < s.theta_r && s.theta_r < 1.0) || s.theta_d <= 0.0 {
            return Err(CliError::Config(format!(
                "theta profile needs d > 0 and r in (0,1), got d = {}, r = {}",
                s.theta_d, s.theta_r
            )));
        }
        if self.matrix.inline.is_none() && self.matrix.path.is_none() {
            return Err(CliError::Config(
                "matrix needs either inline rows or a path".into(),
            ));
        }
        Ok(())
    }

    pub fn build_matrix(&self) -> Result<TransitionMatrix, CliError> {
        match (&self.matrix.inline, &self.matrix.path) {
            (Some(inline), _) => {
                if inline.rows.len() != inline.n {
                    return Err(CliError::Config(format!(
                        "inline matrix declares n = {} but has {} rows",
                        inline.n,
                        inline.rows.len()
                    )));
                }
                TransitionMatrix::new(&inline.rows).map_err(CliError::Compute)
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read matrix {}: {e}", path.display()))
                })?;
                TransitionMatrix::from_json(&text).map_err(CliError::Compute)
            }
            (None, None) => unreachable!("validated"),
        }
    }

    /// The configured potential; f == 0 when the config omits one.
    pub fn build_potential(&self, a: &TransitionMatrix) -> Result<Potential, CliError> {
        match &self.potential {
            None => Ok(Potential::constant(0.0, 0.0)),
            Some(PotentialSpec::Constant { value }) => {
                Ok(Potential::Constant(Complex64::new(value[0], value[1])))
            }
            Some(PotentialSpec::Geometric { r, scale2 }) => {
                Potential::geometric(*r, *scale2).map_err(CliError::Compute)
            }
            Some(PotentialSpec::Table { path, inline }) => {
                let text = match (path, inline) {
                    (Some(p), _) => std::fs::read_to_string(p).map_err(|e| {
                        CliError::Config(format!("cannot read table {}: {e}", p.display()))
                    })?,
                    (None, Some(v)) => v.to_string(),
                    (None, None) => {
                        return Err(CliError::Config(
                            "table potential needs a path or inline values".into(),
                        ))
                    }
                };
                TabulatedFunction::from_json(&text, a)
                    .map(Potential::Table)
                    .map_err(CliError::Compute)
            }
        }
    }

    pub fn build_measure(&self, a: &TransitionMatrix) -> Result<MarkovMeasure, CliError> {
        match &self.measure {
            MeasureSpec::Parry => Ok(MarkovMeasure::parry(a)),
            MeasureSpec::Custom { path } => {
                #[derive(Deserialize)]
                struct MeasureFile {
                    stationary: Vec<f64>,
                    stochastic: Vec<Vec<f64>>,
                }
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read measure {}: {e}", path.display()))
                })?;
                let file: MeasureFile = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("measure parse error: {e}")))?;
                MarkovMeasure::new(file.stationary, &file.stochastic, a).map_err(CliError::Compute)
            }
        }
    }

    /// Depth at which analytic potentials are projected for spectra.
    pub fn projection_depth(&self) -> usize {
        self.schedule.m_max
    }
}
