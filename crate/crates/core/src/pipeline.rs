//! End-to-end run: load, classify, sequence, extract, plan, export, report.

use std::path::PathBuf;

use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::export::{self, ExportError};
use crate::features::{extract_features, FeatureError, MachiningFeature};
use crate::mesh::{load_stl, MeshError, TriangleMesh};
use crate::report::{emit_report, Report, ReportError, ReportInputs};
use crate::rules::{build_plan, ProcessPlan, RuleError};
use crate::sequence::{direction_scan, sequence_map, SequenceError, SequenceMap};
use crate::speed::{speed_map, SpeedMap, SpeedMapError};

pub const REPORT_FILE: &str = "report.json";
pub const SPEED_FILE: &str = "speed_map.ply";
pub const FEATURES_FILE: &str = "features.ply";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("[config] {0}")]
    Config(#[from] ConfigError),
    #[error("[mesh_core] {0}")]
    Mesh(#[from] MeshError),
    #[error("[speed_map] {0}")]
    Speed(#[from] SpeedMapError),
    #[error("[sequence_map] {0}")]
    Sequence(#[from] SequenceError),
    #[error("[feature_extract] {0}")]
    Feature(#[from] FeatureError),
    #[error("[process_rules] {0}")]
    Rules(#[from] RuleError),
    #[error("[export] {0}")]
    Export(#[from] ExportError),
    #[error("[report] {0}")]
    Report(#[from] ReportError),
    #[error("[config] cannot use output directory {path}: {source}")]
    OutputDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub const INPUT: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INTERNAL: i32 = 3;

    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::OutputDir { .. } => Self::CONFIG,
            PipelineError::Mesh(_) => Self::INPUT,
            PipelineError::Export(ExportError::UnwritableOutput { .. })
            | PipelineError::Report(ReportError::UnwritableOutput { .. }) => Self::CONFIG,
            _ => Self::INTERNAL,
        }
    }
}

/// In-memory results of a run and the files written.
#[derive(Debug)]
pub struct PipelineOutput {
    pub mesh: TriangleMesh,
    pub speed: SpeedMap,
    pub sequences: SequenceMap,
    pub features: Vec<MachiningFeature>,
    pub plan: ProcessPlan,
    pub report: Report,
    pub written: Vec<PathBuf>,
}

pub fn chi_file_name(index: usize, theta: f64) -> String {
    let deg = theta.to_degrees();
    let label = if (deg - deg.round()).abs() < 1e-9 {
        format!("{}", deg.round() as i64)
    } else {
        format!("{deg:.3}").replace('.', "p")
    };
    format!("chi_{index:02}_{label}deg.ply")
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let (rules, kinds) = cfg.validate()?;
    if !cfg.input.is_file() {
        return Err(MeshError::UnreadableFile {
            path: cfg.input.clone(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        }
        .into());
    }
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| PipelineError::OutputDir {
        path: cfg.output_dir.clone(),
        source,
    })?;

    let mesh = load_stl(&cfg.input, &cfg.hygiene)?;
    let speed = speed_map(&mesh, &cfg.speed, cfg.min_region_area)?;
    let sequences = sequence_map(&mesh, &speed, &cfg.sequence)?;
    let features = extract_features(&mesh, &speed, &sequences, &kinds)?;
    let plan = build_plan(&features, &rules)?;

    let mut written = Vec::new();
    if cfg.exports.speed {
        let path = cfg.output_dir.join(SPEED_FILE);
        export::write_colored_ply(&mesh, &export::speed_map_colors(&speed), &path)?;
        written.push(path);
    }
    if cfg.exports.chi {
        let scan = direction_scan(&mesh, &cfg.sequence.sweep);
        for (k, map) in scan.maps.iter().enumerate() {
            let path = cfg.output_dir.join(chi_file_name(k, map.theta));
            export::write_colored_ply(&mesh, &export::chi_colors(map), &path)?;
            written.push(path);
        }
    }
    if cfg.exports.features {
        let path = cfg.output_dir.join(FEATURES_FILE);
        export::write_colored_ply(&mesh, &export::feature_colors(mesh.facet_count(), &features), &path)?;
        written.push(path);
    }

    let report = Report::build(ReportInputs {
        config: cfg,
        mesh: &mesh,
        speed: Some(&speed),
        sequences: Some(&sequences),
        features: &features,
        plan: &plan,
    })?;
    let path = cfg.output_dir.join(REPORT_FILE);
    emit_report(&report, &path)?;
    written.push(path);

    Ok(PipelineOutput {
        mesh,
        speed,
        sequences,
        features,
        plan,
        report,
        written,
    })
}
