//! The solver configuration file: a single JSON document with sections for
//! the drying model, the process constants, the annealing schedule, sweep
//! grids, simulation inputs, and the reference-optimizer grid.
//!
//! Temperatures in the file (and in every emitted CSV) are Celsius; the
//! library works in kelvin internally. Unknown keys anywhere in the file
//! are an error.

use crate::error::AppError;
use drypath_core::anneal::AnnealSchedule;
use drypath_core::kinetics::{kelvin_from_celsius, KineticsConstants, MoistureState, Technology};
use drypath_core::oracle::GridSpec;
use drypath_core::process::{DryingModel, ProcessConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub model: ModelSection,
    pub process: ProcessSection,
    pub schedule: ScheduleSection,
    pub sweep: SweepSection,
    pub simulate: Option<SimulateSection>,
    pub oracle: OracleSection,
}

/// Fitted drying-curve constants (see the library defaults).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub x0_dry: f64,
    pub k0_coeffs: [f64; 3],
    pub k1_coeffs: [f64; 3],
    pub m0_coeffs: [f64; 3],
    pub m1_coeffs: [f64; 3],
    pub negate_k0: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let kc = KineticsConstants::default();
        ModelSection {
            x0_dry: kc.x0_dry,
            k0_coeffs: kc.k0_coeffs,
            k1_coeffs: kc.k1_coeffs,
            m0_coeffs: kc.m0_coeffs,
            m1_coeffs: kc.m1_coeffs,
            negate_k0: kc.negate_k0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessSection {
    pub alpha: f64,
    pub rho_air: f64,
    pub area_m2: f64,
    pub v_air: f64,
    pub c_p: f64,
    pub ambient_c: f64,
    pub p_us_w: f64,
    pub x_d: f64,
    pub penalty_weight: f64,
    pub t_min: f64,
    pub temp_lo_c: f64,
    pub temp_hi_c: f64,
    pub stages: usize,
    /// Initial dry-basis moisture; defaults to the drying curve's start.
    pub x0_dry_basis: Option<f64>,
    /// Per-stage allowed technologies (labels "HA" / "HAUS"); defaults to
    /// both at every stage.
    pub allowed: Option<Vec<Vec<String>>>,
}

impl Default for ProcessSection {
    fn default() -> Self {
        let cfg = ProcessConfig::default();
        ProcessSection {
            alpha: cfg.alpha,
            rho_air: cfg.rho_air,
            area_m2: cfg.area,
            v_air: cfg.v_air,
            c_p: cfg.c_p,
            ambient_c: cfg.ambient_k - 273.15,
            p_us_w: cfg.p_us,
            x_d: cfg.x_d,
            penalty_weight: cfg.penalty_weight,
            t_min: cfg.t_min,
            temp_lo_c: cfg.temp_bounds.0 - 273.15,
            temp_hi_c: cfg.temp_bounds.1 - 273.15,
            stages: cfg.stages,
            x0_dry_basis: None,
            allowed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub beta_min: Option<f64>,
    pub zeta: f64,
    pub p_max: f64,
    pub max_outer_iters: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        let s = AnnealSchedule::default();
        ScheduleSection {
            beta_min: s.beta_min,
            zeta: s.zeta,
            p_max: s.p_max,
            max_outer_iters: s.max_outer_iters,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub m_values: Vec<usize>,
    pub alpha_values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            m_values: vec![1, 2, 3, 4, 5, 6],
            alpha_values: vec![0.5, 0.2, 0.1, 1.0 / 15.0, 0.05, 0.04],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Technology sequence, e.g. "HAUS-HA-HAUS".
    pub path: String,
    pub stages: Vec<SimStage>,
    #[serde(default = "default_samples_per_stage")]
    pub samples_per_stage: usize,
}

fn default_samples_per_stage() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimStage {
    pub time_min: f64,
    pub temp_c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub t_points: usize,
    pub temp_points: usize,
    pub multistarts: usize,
    pub t_hi_min: f64,
    pub descent_seeds: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        let g = GridSpec::default();
        OracleSection {
            t_points: g.t_points,
            temp_points: g.temp_points,
            multistarts: g.multistarts,
            t_hi_min: g.t_hi,
            descent_seeds: g.descent_seeds,
        }
    }
}

impl FileConfig {
    /// Loads a config file (defaults when `path` is `None`) and applies
    /// dotted-path overrides like `process.alpha=0.2`. Unknown keys fail,
    /// both in the file and in override paths.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<FileConfig, AppError> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    AppError::Config(format!("cannot read {}: {e}", p.display()))
                })?;
                // Deserialize the typed config first so syntax and schema
                // errors carry line/column positions.
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| AppError::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str::<serde_json::Value>(&text)
                    .map_err(|e| AppError::Config(format!("{}: {e}", p.display())))?
            }
            None => serde_json::to_value(FileConfig::default())
                .expect("default config serializes"),
        };

        for entry in overrides {
            let (key, raw) = entry.split_once('=').ok_or_else(|| {
                AppError::Config(format!("override {entry:?} is not of the form key=value"))
            })?;
            let parsed: serde_json::Value = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            set_dotted(&mut value, key, parsed)?;
        }

        serde_json::from_value::<FileConfig>(value)
            .map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn kinetics(&self) -> KineticsConstants {
        KineticsConstants {
            x0_dry: self.model.x0_dry,
            k0_coeffs: self.model.k0_coeffs,
            k1_coeffs: self.model.k1_coeffs,
            m0_coeffs: self.model.m0_coeffs,
            m1_coeffs: self.model.m1_coeffs,
            negate_k0: self.model.negate_k0,
        }
    }

    pub fn process(&self) -> ProcessConfig {
        ProcessConfig {
            alpha: self.process.alpha,
            rho_air: self.process.rho_air,
            area: self.process.area_m2,
            v_air: self.process.v_air,
            c_p: self.process.c_p,
            ambient_k: kelvin_from_celsius(self.process.ambient_c),
            p_us: self.process.p_us_w,
            x_d: self.process.x_d,
            penalty_weight: self.process.penalty_weight,
            t_min: self.process.t_min,
            temp_bounds: (
                kelvin_from_celsius(self.process.temp_lo_c),
                kelvin_from_celsius(self.process.temp_hi_c),
            ),
            stages: self.process.stages,
        }
    }

    pub fn schedule(&self) -> AnnealSchedule {
        AnnealSchedule {
            beta_min: self.schedule.beta_min,
            zeta: self.schedule.zeta,
            p_max: self.schedule.p_max,
            max_outer_iters: self.schedule.max_outer_iters,
        }
    }

    pub fn grid_spec(&self, seed: u64) -> GridSpec {
        GridSpec {
            t_points: self.oracle.t_points,
            temp_points: self.oracle.temp_points,
            multistarts: self.oracle.multistarts,
            t_hi: self.oracle.t_hi_min,
            descent_seeds: self.oracle.descent_seeds,
            seed,
        }
    }

    /// Per-stage allowed technology sets for the configured stage count.
    pub fn allowed_sets(&self) -> Result<Vec<Vec<Technology>>, AppError> {
        match &self.process.allowed {
            None => Ok(vec![Technology::ALL.to_vec(); self.process.stages]),
            Some(sets) => {
                if sets.len() != self.process.stages {
                    return Err(AppError::Config(format!(
                        "process.allowed has {} entries but process.stages is {}",
                        sets.len(),
                        self.process.stages
                    )));
                }
                sets.iter()
                    .enumerate()
                    .map(|(stage, labels)| {
                        labels
                            .iter()
                            .map(|l| {
                                Technology::from_label(l).ok_or_else(|| {
                                    AppError::Config(format!(
                                        "unknown technology {l:?} in process.allowed[{stage}]"
                                    ))
                                })
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }

    /// Builds the validated drying model from the config.
    pub fn build_model(&self) -> Result<DryingModel, AppError> {
        let mut model = DryingModel::new(self.process(), self.kinetics())?;
        if let Some(x0) = self.process.x0_dry_basis {
            model = model.with_initial_state(MoistureState::from_dry_basis(x0)?);
        }
        Ok(model)
    }
}

fn set_dotted(
    value: &mut serde_json::Value,
    key: &str,
    new: serde_json::Value,
) -> Result<(), AppError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(AppError::Config(format!("invalid override path {key:?}")));
    }
    let mut cursor = value;
    for part in &parts[..parts.len() - 1] {
        cursor = cursor
            .as_object_mut()
            .ok_or_else(|| AppError::Config(format!("override path {key:?} crosses a non-object")))?
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    let last = parts.last().expect("non-empty path");
    cursor
        .as_object_mut()
        .ok_or_else(|| AppError::Config(format!("override path {key:?} crosses a non-object")))?
        .insert(last.to_string(), new);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_json() {
        let cfg = FileConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: FileConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<FileConfig>(r#"{"process": {"alhpa": 0.5}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("alhpa"), "{err}");
    }

    #[test]
    fn overrides_apply_with_dotted_paths() {
        let cfg = FileConfig::load(
            None,
            &[
                "process.alpha=0.2".to_string(),
                "process.stages=3".to_string(),
                "sweep.m_values=[1,2]".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.process.alpha, 0.2);
        assert_eq!(cfg.process.stages, 3);
        assert_eq!(cfg.sweep.m_values, vec![1, 2]);
    }

    #[test]
    fn override_with_unknown_key_fails() {
        let err = FileConfig::load(None, &["process.alhpa=0.2".to_string()]).unwrap_err();
        assert!(matches!(err, AppError::Config(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn celsius_converts_to_kelvin() {
        let cfg = FileConfig::default();
        let p = cfg.process();
        assert!((p.ambient_k - 298.15).abs() < 1e-12);
        assert!((p.temp_bounds.0 - 303.15).abs() < 1e-12);
        assert!((p.temp_bounds.1 - 343.15).abs() < 1e-12);
    }

    #[test]
    fn restricted_technology_sets_parse() {
        let cfg = FileConfig::load(
            None,
            &[
                "process.stages=2".to_string(),
                r#"process.allowed=[["HAUS"],["HA","HAUS"]]"#.to_string(),
            ],
        )
        .unwrap();
        let sets = cfg.allowed_sets().unwrap();
        assert_eq!(sets[0], vec![Technology::HotAirUltrasound]);
        assert_eq!(sets[1].len(), 2);

        let bad = FileConfig::load(
            None,
            &[
                "process.stages=2".to_string(),
                r#"process.allowed=[["IR"],["HA"]]"#.to_string(),
            ],
        )
        .unwrap();
        assert!(bad.allowed_sets().is_err());
    }
}
