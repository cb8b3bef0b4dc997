//! JSON report: configuration echo, mesh hygiene, per-stage summaries and
//! one record per feature with its process plan entry.
//!
//! Keys are frozen per `schema_version`. Maps are ordered so a report is a
//! pure function of its inputs. Angles are degrees.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::features::{FeatureKind, MachiningFeature};
use crate::mesh::{MeshDiagnostics, TriangleMesh};
use crate::rules::{PlanEntry, ProcessPlan, Strategy, Tool};
use crate::sequence::SequenceMap;
use crate::speed::{ContactClass, DraftSpec, SpeedMap};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    UnwritableOutput {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("feature {0} has no plan entry")]
    MissingPlanEntry(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub generator: String,
    pub config: ConfigEcho,
    pub mesh: MeshSummary,
    pub speed_map: Option<SpeedSummary>,
    pub sequences: Option<SequenceSummary>,
    pub feature_count: usize,
    pub counts_by_kind: BTreeMap<FeatureKind, usize>,
    pub area_by_kind: BTreeMap<FeatureKind, f64>,
    pub features: Vec<FeatureRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub draft_angle_deg: Option<f64>,
    pub delta_draft: f64,
    pub eps_h: f64,
    pub eps_d: f64,
    pub band_qh: f64,
    pub band_qv: f64,
    pub sweep_start_deg: f64,
    pub sweep_range_deg: f64,
    pub sweep_step_deg: f64,
    pub sweep_directions: usize,
    pub refinement_step_deg: Option<f64>,
    pub chi_tol_deg: f64,
    pub oriented_threshold: f64,
    pub projection_epsilon: f64,
    pub delta_constancy_tolerance: f64,
    pub min_region_area: f64,
    pub weld_epsilon: f64,
    pub degenerate_area_epsilon: f64,
    pub custom_rules: bool,
    pub kind_overrides: usize,
}

impl ConfigEcho {
    pub fn new(cfg: &PipelineConfig) -> Self {
        let sweep = &cfg.sequence.sweep;
        Self {
            draft_angle_deg: match cfg.speed.draft {
                DraftSpec::AngleFromVertical(a) => Some(a.to_degrees()),
                DraftSpec::Delta(_) => None,
            },
            delta_draft: cfg.speed.delta_draft(),
            eps_h: cfg.speed.eps_h,
            eps_d: cfg.speed.eps_d,
            band_qh: cfg.speed.qh,
            band_qv: cfg.speed.qv,
            sweep_start_deg: sweep.theta_start.to_degrees(),
            sweep_range_deg: sweep.theta_range.to_degrees(),
            sweep_step_deg: sweep.theta_step.to_degrees(),
            sweep_directions: sweep.thetas().len(),
            refinement_step_deg: sweep.refinement_step.map(f64::to_degrees),
            chi_tol_deg: sweep.chi_alignment_tolerance.to_degrees(),
            oriented_threshold: sweep.oriented_fraction_threshold,
            projection_epsilon: sweep.projection_epsilon,
            delta_constancy_tolerance: cfg.sequence.delta_constancy_tolerance,
            min_region_area: cfg.min_region_area,
            weld_epsilon: cfg.hygiene.weld_epsilon,
            degenerate_area_epsilon: cfg.hygiene.degenerate_area_epsilon,
            custom_rules: cfg.rules_file.is_some(),
            kind_overrides: cfg.kind_overrides.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshSummary {
    pub facets: usize,
    pub vertices: usize,
    pub total_area: f64,
    pub diagnostics: MeshDiagnostics,
}

impl MeshSummary {
    pub fn new(mesh: &TriangleMesh) -> Self {
        Self {
            facets: mesh.facet_count(),
            vertices: mesh.vertices().len(),
            total_area: mesh.total_area(),
            diagnostics: *mesh.diagnostics(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergedRegion {
    pub first_facet: usize,
    pub facet_count: usize,
    pub area: f64,
    pub into_region: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedSummary {
    pub facets_by_class: BTreeMap<ContactClass, usize>,
    pub area_by_class: BTreeMap<ContactClass, f64>,
    pub region_count: usize,
    pub merged_regions: Vec<MergedRegion>,
}

impl SpeedSummary {
    pub fn new(mesh: &TriangleMesh, speed: &SpeedMap) -> Self {
        let mut facets_by_class = BTreeMap::new();
        let mut area_by_class = BTreeMap::new();
        for (f, &c) in speed.classes.iter().enumerate() {
            *facets_by_class.entry(c).or_insert(0) += 1;
            *area_by_class.entry(c).or_insert(0.0) += mesh.area(f);
        }
        Self {
            facets_by_class,
            area_by_class,
            region_count: speed.segmentation.regions.len(),
            merged_regions: speed
                .segmentation
                .merges
                .iter()
                .map(|m| MergedRegion {
                    first_facet: m.first_facet,
                    facet_count: m.facet_count,
                    area: m.area,
                    into_region: m.into,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionVerdict {
    pub region: usize,
    pub class: ContactClass,
    pub area: f64,
    pub verdict: &'static str,
    pub theta_deg: Option<f64>,
    pub best_score: Option<f64>,
    pub valid_area_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceSummary {
    pub simple_region_count: usize,
    pub regions: Vec<RegionVerdict>,
}

impl SequenceSummary {
    pub fn new(speed: &SpeedMap, seq: &SequenceMap) -> Self {
        let regions = speed
            .segmentation
            .regions
            .iter()
            .zip(&seq.verdicts)
            .zip(&seq.orientations)
            .map(|((r, v), o)| RegionVerdict {
                region: r.id,
                class: speed.region_class(r.id),
                area: r.area,
                verdict: v.name(),
                theta_deg: v.theta().map(f64::to_degrees),
                best_score: o.best.map(|b| b.score),
                valid_area_fraction: o.valid_area_fraction,
            })
            .collect();
        Self {
            simple_region_count: seq.simple.segmentation.regions.len(),
            regions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedTool {
    pub tool: Tool,
    pub reason: String,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRecord {
    pub id: usize,
    pub kind: FeatureKind,
    pub facet_count: usize,
    pub area: f64,
    pub mean_delta: f64,
    pub min_delta: f64,
    pub max_delta: f64,
    pub privileged_theta_deg: Option<f64>,
    pub contains_horizontal_core: bool,
    pub horizontal_only: bool,
    pub classes: Vec<ContactClass>,
    pub neighbors: Vec<usize>,
    pub tool: Tool,
    pub alternate_tools: Vec<Tool>,
    pub excluded_tools: Vec<ExcludedTool>,
    pub corner_radius_note: bool,
    pub strategy: &'static str,
    pub strategy_theta_deg: Option<f64>,
    pub rule_trace: Vec<String>,
}

impl FeatureRecord {
    pub fn new(f: &MachiningFeature, plan: &PlanEntry) -> Self {
        Self {
            id: f.id,
            kind: f.kind,
            facet_count: f.region.facets.len(),
            area: f.region.area,
            mean_delta: f.mean_delta,
            min_delta: f.min_delta,
            max_delta: f.max_delta,
            privileged_theta_deg: f.privileged_theta.map(f64::to_degrees),
            contains_horizontal_core: f.contains_horizontal_core,
            horizontal_only: f.horizontal_only,
            classes: f.classes.iter().copied().collect(),
            neighbors: f.neighbors.iter().copied().collect(),
            tool: plan.tool.tool,
            alternate_tools: plan.tool.alternates.clone(),
            excluded_tools: plan
                .tool
                .excluded
                .iter()
                .map(|e| ExcludedTool {
                    tool: e.tool,
                    reason: e.reason.clone(),
                    rule: e.rule.clone(),
                })
                .collect(),
            corner_radius_note: plan.tool.corner_radius_note,
            strategy: plan.strategy.strategy.kind().as_str(),
            strategy_theta_deg: match plan.strategy.strategy {
                Strategy::ParallelPlanes { theta } => Some(theta.to_degrees()),
                _ => None,
            },
            rule_trace: plan.rule_trace.clone(),
        }
    }
}

/// Everything a report is built from. The maps are optional so a report can
/// be produced for a mesh that never reached them.
pub struct ReportInputs<'a> {
    pub config: &'a PipelineConfig,
    pub mesh: &'a TriangleMesh,
    pub speed: Option<&'a SpeedMap>,
    pub sequences: Option<&'a SequenceMap>,
    pub features: &'a [MachiningFeature],
    pub plan: &'a ProcessPlan,
}

impl Report {
    pub fn build(inputs: ReportInputs<'_>) -> Result<Self, ReportError> {
        let mut features: Vec<&MachiningFeature> = inputs.features.iter().collect();
        features.sort_by_key(|f| f.id);
        let mut counts_by_kind = BTreeMap::new();
        let mut area_by_kind = BTreeMap::new();
        let mut records = Vec::with_capacity(features.len());
        for f in features {
            let entry = inputs
                .plan
                .entries
                .iter()
                .find(|e| e.feature_id == f.id)
                .ok_or(ReportError::MissingPlanEntry(f.id))?;
            *counts_by_kind.entry(f.kind).or_insert(0) += 1;
            *area_by_kind.entry(f.kind).or_insert(0.0) += f.region.area;
            records.push(FeatureRecord::new(f, entry));
        }
        Ok(Self {
            schema_version: inputs.config.report_version,
            generator: concat!("hsmdie ", env!("CARGO_PKG_VERSION")).to_string(),
            config: ConfigEcho::new(inputs.config),
            mesh: MeshSummary::new(inputs.mesh),
            speed_map: inputs.speed.map(|s| SpeedSummary::new(inputs.mesh, s)),
            sequences: inputs
                .speed
                .zip(inputs.sequences)
                .map(|(s, q)| SequenceSummary::new(s, q)),
            feature_count: records.len(),
            counts_by_kind,
            area_by_kind,
            features: records,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn emit_report(report: &Report, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    std::fs::write(path, report.to_json()).map_err(|source| ReportError::UnwritableOutput {
        path: path.to_path_buf(),
        source,
    })
}
