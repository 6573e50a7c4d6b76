//! Strict JSON configuration.
//!
//! Every section and key is optional; omitted ones take their defaults, so
//! `{}` is the full desk-scale setup. Unknown keys are rejected. Geometry
//! lengths are given in centimetres (`*_cm`) and converted to metres here;
//! everything else is SI.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::carrier::{ForceModel, DEFAULT_DETECTOR_DISTANCE, DEFAULT_MASS};
use crate::experiment::SimConfig;
use crate::magnetostatics::{GridSpec, QuadratureConfig, SgdParams};
use crate::math::Vec3;
use crate::moment::{MomentParams, TorqueModel, TorqueTable};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config value `{key}`: {message}")]
    Validation { key: String, message: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn invalid<T>(key: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Validation { key: key.to_string(), message: message.into() })
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(key, format!("must be positive and finite, got {v}"))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(key, format!("must be non-negative and finite, got {v}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub w_cm: f64,
    pub h_t_cm: f64,
    pub b_height_cm: f64,
    pub h_cm: f64,
    #[serde(rename = "T_cm")]
    pub t_cm: f64,
    pub b_t_cm: f64,
    #[serde(rename = "L_cm")]
    pub l_cm: f64,
    pub standoff_cm: f64,
    pub tip_half_angle: f64,
    /// A/m.
    pub magnetization: [f64; 3],
    pub with_tip: bool,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        // literal centimetres so the echoed config reads cleanly; `params()`
        // reproduces `SgdParams::default()` exactly
        let p = SgdParams::default();
        Self {
            w_cm: 1.0,
            h_t_cm: 1.75,
            b_height_cm: 1.5,
            h_cm: 0.75,
            t_cm: 0.05,
            b_t_cm: 0.05,
            l_cm: 3.5,
            standoff_cm: 1.0,
            tip_half_angle: p.tip_half_angle,
            magnetization: p.magnetization.into(),
            with_tip: p.with_tip,
        }
    }
}

impl GeometryConfig {
    pub fn params(&self) -> SgdParams {
        const CM: f64 = 1e-2;
        SgdParams {
            width: self.w_cm * CM,
            top_height: self.h_t_cm * CM,
            bottom_height: self.b_height_cm * CM,
            tip_length: self.h_cm * CM,
            tip: self.t_cm * CM,
            bottom_top: self.b_t_cm * CM,
            length: self.l_cm * CM,
            tip_half_angle: self.tip_half_angle,
            magnetization: Vec3::from(self.magnetization),
            standoff: self.standoff_cm * CM,
            with_tip: self.with_tip,
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for (k, v) in [
            ("geometry.w_cm", self.w_cm),
            ("geometry.h_t_cm", self.h_t_cm),
            ("geometry.b_height_cm", self.b_height_cm),
            ("geometry.h_cm", self.h_cm),
            ("geometry.T_cm", self.t_cm),
            ("geometry.b_t_cm", self.b_t_cm),
            ("geometry.L_cm", self.l_cm),
            ("geometry.standoff_cm", self.standoff_cm),
        ] {
            positive(k, v)?;
        }
        if !self.magnetization.iter().all(|m| m.is_finite()) {
            return invalid("geometry.magnetization", "components must be finite");
        }
        self.params().validate_shape().or_else(|e| invalid("geometry", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    /// Target grid spacing, m.
    pub grid_spacing: f64,
    pub quadrature: QuadratureConfig,
    /// Grid cache file; relative paths resolve against the output directory.
    pub cache_path: PathBuf,
    /// Evaluate the field by quadrature at every step instead of through the grid.
    pub direct: bool,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            grid_spacing: 2e-4,
            quadrature: QuadratureConfig::default(),
            cache_path: PathBuf::from("field_grid.sgfg"),
            direct: false,
        }
    }
}

impl FieldConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        positive("field.grid_spacing", self.grid_spacing)?;
        positive("field.quadrature.rel_tol", self.quadrature.rel_tol)?;
        positive("field.quadrature.near_field_factor", self.quadrature.near_field_factor)?;
        if self.quadrature.max_depth == 0 {
            return invalid("field.quadrature.max_depth", "must be at least 1");
        }
        if self.cache_path.as_os_str().is_empty() {
            return invalid("field.cache_path", "must not be empty");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorqueKind {
    Classical,
    SemiClassicalTanh,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentConfig {
    /// J/T.
    pub mu: f64,
    /// kg·m².
    pub inertia: f64,
    /// N·m·s.
    pub damping: f64,
    pub torque_model: TorqueKind,
    /// Used by `semi_classical_tanh`.
    pub sharpness: f64,
    /// `beta,tmm` CSV used by `custom`.
    pub table: Option<PathBuf>,
    /// rad/s.
    pub initial_phi_dot: f64,
    pub initial_theta_dot: f64,
}

impl Default for MomentConfig {
    fn default() -> Self {
        Self {
            mu: MomentParams::DEFAULT_MU,
            inertia: MomentParams::DEFAULT_INERTIA,
            damping: MomentParams::DEFAULT_DAMPING,
            torque_model: TorqueKind::SemiClassicalTanh,
            sharpness: 2.0,
            table: None,
            initial_phi_dot: 0.0,
            initial_theta_dot: 0.0,
        }
    }
}

impl MomentConfig {
    pub fn torque_model(&self) -> Result<TorqueModel, ConfigError> {
        match self.torque_model {
            TorqueKind::Classical => Ok(TorqueModel::Classical),
            TorqueKind::SemiClassicalTanh => {
                positive("moment.sharpness", self.sharpness)?;
                Ok(TorqueModel::SemiClassicalTanh { sharpness: self.sharpness })
            }
            TorqueKind::Custom => match &self.table {
                None => invalid("moment.table", "required when torque_model is `custom`"),
                Some(path) => TorqueTable::load(path)
                    .map(TorqueModel::Custom)
                    .or_else(|e| invalid("moment.table", e.to_string())),
            },
        }
    }

    pub fn params(&self) -> Result<MomentParams, ConfigError> {
        positive("moment.mu", self.mu)?;
        positive("moment.inertia", self.inertia)?;
        non_negative("moment.damping", self.damping)?;
        for (k, v) in [("moment.initial_phi_dot", self.initial_phi_dot), ("moment.initial_theta_dot", self.initial_theta_dot)] {
            if !v.is_finite() {
                return invalid(k, "must be finite");
            }
        }
        Ok(MomentParams {
            mu: self.mu,
            inertia: self.inertia,
            damping: self.damping,
            torque_model: self.torque_model()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceKind {
    FullForce,
    DriftAware,
    ZOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForceConfig {
    pub model: ForceKind,
    /// Gaussian lateral suppression for `z_only`.
    pub suppression: bool,
    /// Suppression width, m; `null` measures it from the field.
    pub sigma_y: Option<f64>,
}

impl Default for ForceConfig {
    fn default() -> Self {
        Self { model: ForceKind::ZOnly, suppression: true, sigma_y: None }
    }
}

impl ForceConfig {
    pub fn needs_measured_sigma(&self) -> bool {
        self.model == ForceKind::ZOnly && self.suppression && self.sigma_y.is_none()
    }

    /// `measured_sigma` fills in a null `sigma_y`.
    pub fn model(&self, measured_sigma: Option<f64>) -> Result<ForceModel, ConfigError> {
        Ok(match self.model {
            ForceKind::FullForce => ForceModel::FullForce,
            ForceKind::DriftAware => ForceModel::DriftAware,
            ForceKind::ZOnly if !self.suppression => ForceModel::ZOnly { suppression: false, sigma_y: f64::INFINITY },
            ForceKind::ZOnly => {
                let Some(sigma_y) = self.sigma_y.or(measured_sigma) else {
                    return invalid("force.sigma_y", "not given and could not be measured from the field");
                };
                positive("force.sigma_y", sigma_y)?;
                ForceModel::ZOnly { suppression: true, sigma_y }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub phi_steps: usize,
    pub reps_per_phi: usize,
    /// m/s.
    pub vx_mean: f64,
    pub vx_sigma: f64,
    /// m.
    pub beam_half_width: f64,
    /// s.
    pub dt_fast: f64,
    pub substeps: usize,
    pub seed: u64,
    /// m.
    pub detector_distance: f64,
    /// kg.
    pub mass: f64,
    pub theta_bands: usize,
    pub histogram_bins: usize,
    /// Worker count; `null` uses every available core.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            phi_steps: s.phi_steps,
            reps_per_phi: s.reps_per_phi,
            vx_mean: s.vx_mean,
            vx_sigma: s.vx_sigma,
            beam_half_width: s.beam_half_width,
            dt_fast: s.dt_fast,
            substeps: s.substeps,
            seed: s.seed,
            detector_distance: DEFAULT_DETECTOR_DISTANCE,
            mass: DEFAULT_MASS,
            theta_bands: s.theta_bands,
            histogram_bins: s.histogram_bins,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.phi_steps < 2 {
            return invalid("experiment.phi_steps", format!("must be at least 2, got {}", self.phi_steps));
        }
        if self.reps_per_phi < 1 {
            return invalid("experiment.reps_per_phi", "must be at least 1");
        }
        if self.substeps < 100 {
            return invalid("experiment.substeps", format!("must be at least 100, got {}", self.substeps));
        }
        positive("experiment.vx_mean", self.vx_mean)?;
        non_negative("experiment.vx_sigma", self.vx_sigma)?;
        non_negative("experiment.beam_half_width", self.beam_half_width)?;
        positive("experiment.dt_fast", self.dt_fast)?;
        positive("experiment.detector_distance", self.detector_distance)?;
        positive("experiment.mass", self.mass)?;
        if self.theta_bands < 1 {
            return invalid("experiment.theta_bands", "must be at least 1");
        }
        if self.histogram_bins < 1 {
            return invalid("experiment.histogram_bins", "must be at least 1");
        }
        if self.threads == Some(0) {
            return invalid("experiment.threads", "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Dump trajectories of the first this-many runs.
    pub trajectories: usize,
    /// Keep every n-th slow step in trajectory dumps.
    pub trajectory_decimation: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("sgspin_out"), trajectories: 0, trajectory_decimation: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub geometry: GeometryConfig,
    pub field: FieldConfig,
    pub moment: MomentConfig,
    pub force: ForceConfig,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

impl ConfigFile {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let c: ConfigFile = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.geometry.validate()?;
        self.field.validate()?;
        self.moment.params()?;
        if let Some(s) = self.force.sigma_y {
            positive("force.sigma_y", s)?;
        }
        self.experiment.validate()?;
        if self.output.trajectory_decimation < 1 {
            return invalid("output.trajectory_decimation", "must be at least 1");
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::corridor(&self.geometry.params(), self.field.grid_spacing)
    }

    pub fn cache_path(&self) -> PathBuf {
        self.output.dir.join(&self.field.cache_path)
    }

    pub fn sim_config(&self, measured_sigma: Option<f64>) -> Result<SimConfig, ConfigError> {
        let e = &self.experiment;
        let c = SimConfig {
            phi_steps: e.phi_steps,
            reps_per_phi: e.reps_per_phi,
            vx_mean: e.vx_mean,
            vx_sigma: e.vx_sigma,
            beam_half_width: e.beam_half_width,
            dt_fast: e.dt_fast,
            substeps: e.substeps,
            seed: e.seed,
            force_model: self.force.model(measured_sigma)?,
            moment: self.moment.params()?,
            geometry: self.geometry.params(),
            detector_distance: e.detector_distance,
            mass: e.mass,
            initial_phi_dot: self.moment.initial_phi_dot,
            initial_theta_dot: self.moment.initial_theta_dot,
            theta_bands: e.theta_bands,
            histogram_bins: e.histogram_bins,
        };
        c.validate().or_else(|err| invalid("experiment", err.to_string()))?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default_setup() {
        let c = ConfigFile::from_json("{}").unwrap();
        assert_eq!(c, ConfigFile::default());
        assert_eq!(c.geometry.params(), SgdParams::default());
        let s = c.sim_config(Some(1e-3)).unwrap();
        assert_eq!(s.phi_steps, 101);
        assert_eq!(s.reps_per_phi, 100);
        assert_eq!(s.moment, MomentParams::default());
        assert_eq!(s.force_model, ForceModel::ZOnly { suppression: true, sigma_y: 1e-3 });
    }

    #[test]
    fn negative_tip_is_rejected_by_key() {
        match ConfigFile::from_json(r#"{"geometry":{"T_cm":-1}}"#) {
            Err(ConfigError::Validation { key, .. }) => assert_eq!(key, "geometry.T_cm"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_bad_syntax() {
        assert!(matches!(
            ConfigFile::from_json(r#"{"geometry":{"T":1}}"#),
            Err(ConfigError::Parse { .. })
        ));
        assert!(matches!(ConfigFile::from_json(r#"{"extra":1}"#), Err(ConfigError::Parse { .. })));
        match ConfigFile::from_json("{\n  \"moment\": {\"mu\": }\n}") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn effective_config_round_trips() {
        let text = r#"{"geometry":{"L_cm":3.0,"magnetization":[0,0,1.5e6]},
            "moment":{"torque_model":"classical","damping":0.0},
            "force":{"model":"full_force"},
            "experiment":{"seed":42,"phi_steps":5,"dt_fast":3.3e-10,"threads":2}}"#;
        let c = ConfigFile::from_json(text).unwrap();
        let again = ConfigFile::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_json(), again.to_json());
        assert_eq!(again.geometry.params().length, 0.03);
    }

    #[test]
    fn zero_magnetization_is_accepted() {
        let c = ConfigFile::from_json(r#"{"geometry":{"magnetization":[0,0,0]}}"#).unwrap();
        assert!(c.geometry.params().is_unmagnetized());
    }

    #[test]
    fn sigma_resolution() {
        let c = ConfigFile::default();
        assert!(c.force.needs_measured_sigma());
        assert!(matches!(c.sim_config(None), Err(ConfigError::Validation { .. })));
        let fixed = ForceConfig { sigma_y: Some(2e-3), ..ForceConfig::default() };
        assert!(!fixed.needs_measured_sigma());
        assert_eq!(fixed.model(Some(1.0)).unwrap(), ForceModel::ZOnly { suppression: true, sigma_y: 2e-3 });
    }

    #[test]
    fn custom_table_needs_a_readable_file() {
        let r = ConfigFile::from_json(r#"{"moment":{"torque_model":"custom"}}"#);
        assert!(matches!(r, Err(ConfigError::Validation { ref key, .. }) if key == "moment.table"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "beta,tmm\n0,0\n1.5707963267948966,1\n3.141592653589793,0\n").unwrap();
        let text = format!(r#"{{"moment":{{"torque_model":"custom","table":{}}}}}"#, serde_json::to_string(&path).unwrap());
        let c = ConfigFile::from_json(&text).unwrap();
        assert!(matches!(c.moment.torque_model().unwrap(), TorqueModel::Custom(_)));
    }

    #[test]
    fn bad_experiment_values_name_their_key() {
        for (text, key) in [
            (r#"{"experiment":{"substeps":10}}"#, "experiment.substeps"),
            (r#"{"experiment":{"phi_steps":1}}"#, "experiment.phi_steps"),
            (r#"{"moment":{"inertia":0}}"#, "moment.inertia"),
            (r#"{"field":{"grid_spacing":-1}}"#, "field.grid_spacing"),
            (r#"{"force":{"sigma_y":0}}"#, "force.sigma_y"),
        ] {
            match ConfigFile::from_json(text) {
                Err(ConfigError::Validation { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
