//! Pipeline configuration and its TOML file form.
//!
//! Angles are degrees in the file and radians everywhere else.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::features::{FeatureError, FeatureKind, KindTable, SequenceKind};
use crate::mesh::HygieneConfig;
use crate::rules::{RuleError, RuleTable};
use crate::sequence::{SequenceConfig, SequenceError};
use crate::speed::{ContactClass, DraftSpec, SpeedMapConfig, SpeedMapError};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Speed(#[from] SpeedMapError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Kinds(#[from] FeatureError),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config file {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Which colored meshes to write next to the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExportToggles {
    pub speed: bool,
    /// One file per swept direction.
    pub chi: bool,
    pub features: bool,
}

impl ExportToggles {
    pub fn all() -> Self {
        Self {
            speed: true,
            chi: true,
            features: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KindOverride {
    pub class: ContactClass,
    pub sequence: SequenceKind,
    pub kind: Option<FeatureKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub hygiene: HygieneConfig,
    pub speed: SpeedMapConfig,
    pub sequence: SequenceConfig,
    /// Speed-map regions below this area are merged into a neighbour.
    pub min_region_area: f64,
    pub exports: ExportToggles,
    /// Replaces the built-in tool and strategy table.
    pub rules_file: Option<PathBuf>,
    pub kind_overrides: Vec<KindOverride>,
    pub report_version: u32,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            output_dir: output_dir.into(),
            hygiene: HygieneConfig::default(),
            speed: SpeedMapConfig::default(),
            sequence: SequenceConfig::default(),
            min_region_area: 0.0,
            exports: ExportToggles::default(),
            rules_file: None,
            kind_overrides: Vec::new(),
            report_version: REPORT_SCHEMA_VERSION,
        }
    }

    /// Checks every component config and loads the rule and kind tables.
    /// Touches no file other than the rules file.
    pub fn validate(&self) -> Result<(RuleTable, KindTable), ConfigError> {
        self.speed.validate()?;
        self.sequence.validate()?;
        let h = &self.hygiene;
        if !(h.weld_epsilon.is_finite() && h.weld_epsilon >= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "weld epsilon must be non-negative, got {}",
                h.weld_epsilon
            )));
        }
        if !(h.degenerate_area_epsilon.is_finite() && h.degenerate_area_epsilon >= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "degenerate area epsilon must be non-negative, got {}",
                h.degenerate_area_epsilon
            )));
        }
        if !(self.min_region_area.is_finite() && self.min_region_area >= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "min region area must be non-negative, got {}",
                self.min_region_area
            )));
        }
        if self.report_version != REPORT_SCHEMA_VERSION {
            return Err(ConfigError::Invalid(format!(
                "unsupported report version {} (this build writes {REPORT_SCHEMA_VERSION})",
                self.report_version
            )));
        }
        let rules = match &self.rules_file {
            Some(path) => RuleTable::load(path)?,
            None => RuleTable::default(),
        };
        let mut kinds = KindTable::default();
        for o in &self.kind_overrides {
            kinds.set(o.class, o.sequence, o.kind)?;
        }
        Ok((rules, kinds))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub output_dir: Option<PathBuf>,
    pub min_region_area: Option<f64>,
    pub rules_file: Option<PathBuf>,
    #[serde(default)]
    pub speed: SpeedSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub export: ExportSection,
    #[serde(default, rename = "kind")]
    pub kinds: Vec<KindEntry>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedSection {
    pub draft_angle_deg: Option<f64>,
    pub delta_draft: Option<f64>,
    pub eps_h: Option<f64>,
    pub eps_d: Option<f64>,
    pub band_qh: Option<f64>,
    pub band_qv: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub start_deg: Option<f64>,
    pub range_deg: Option<f64>,
    pub step_deg: Option<f64>,
    pub chi_tol_deg: Option<f64>,
    pub oriented_threshold: Option<f64>,
    pub refinement_step_deg: Option<f64>,
    pub projection_epsilon: Option<f64>,
    pub delta_constancy_tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub weld_epsilon: Option<f64>,
    pub degenerate_area_epsilon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportSection {
    pub speed: Option<bool>,
    pub chi: Option<bool>,
    pub features: Option<bool>,
}

/// `kind = "none"` drops the facets from every feature.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KindEntry {
    pub class: ContactClass,
    pub sequence: SequenceKind,
    pub kind: String,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut file = Self::parse(&text, path)?;
        if let (Some(rules), Some(dir)) = (&file.rules_file, path.parent()) {
            if rules.is_relative() {
                file.rules_file = Some(dir.join(rules));
            }
        }
        Ok(file)
    }

    /// Writes every value present in the file over `cfg`.
    pub fn apply(&self, cfg: &mut PipelineConfig) -> Result<(), ConfigError> {
        let s = &self.speed;
        match (s.draft_angle_deg, s.delta_draft) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "draft_angle_deg and delta_draft are mutually exclusive".into(),
                ))
            }
            (Some(a), None) => cfg.speed.draft = DraftSpec::AngleFromVertical(a.to_radians()),
            (None, Some(d)) => cfg.speed.draft = DraftSpec::Delta(d),
            (None, None) => {}
        }
        set(&mut cfg.speed.eps_h, s.eps_h);
        set(&mut cfg.speed.eps_d, s.eps_d);
        set(&mut cfg.speed.qh, s.band_qh);
        set(&mut cfg.speed.qv, s.band_qv);

        let w = &self.sweep;
        let sweep = &mut cfg.sequence.sweep;
        set(&mut sweep.theta_start, w.start_deg.map(f64::to_radians));
        set(&mut sweep.theta_range, w.range_deg.map(f64::to_radians));
        set(&mut sweep.theta_step, w.step_deg.map(f64::to_radians));
        set(&mut sweep.chi_alignment_tolerance, w.chi_tol_deg.map(f64::to_radians));
        set(&mut sweep.oriented_fraction_threshold, w.oriented_threshold);
        set(&mut sweep.projection_epsilon, w.projection_epsilon);
        if let Some(r) = w.refinement_step_deg {
            sweep.refinement_step = Some(r.to_radians());
        }
        set(&mut cfg.sequence.delta_constancy_tolerance, w.delta_constancy_tolerance);

        set(&mut cfg.hygiene.weld_epsilon, self.mesh.weld_epsilon);
        set(
            &mut cfg.hygiene.degenerate_area_epsilon,
            self.mesh.degenerate_area_epsilon,
        );
        set(&mut cfg.min_region_area, self.min_region_area);
        set(&mut cfg.exports.speed, self.export.speed);
        set(&mut cfg.exports.chi, self.export.chi);
        set(&mut cfg.exports.features, self.export.features);
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(rules) = &self.rules_file {
            cfg.rules_file = Some(rules.clone());
        }
        for k in &self.kinds {
            let kind = match k.kind.as_str() {
                "none" => None,
                name => Some(name.parse::<FeatureKind>().map_err(ConfigError::Invalid)?),
            };
            cfg.kind_overrides.push(KindOverride {
                class: k.class,
                sequence: k.sequence,
                kind,
            });
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
