//! Machined-surface sequence maps.
//!
//! Two maps are built on top of the speed map:
//!
//! * the simple-sequence map groups connected facets whose delta is constant
//!   (within a tolerance). Such surfaces can be chained in planes
//!   perpendicular to the tool axis.
//! * the oriented-sequence sweep tests a fan of candidate planar directions
//!   `theta` in the XY plane. For each facet, `chi` is the acute angle between
//!   the candidate line and the XY projection of the facet normal. A region
//!   whose normals mostly lie in one vertical plane is oriented along it.
//!
//! Directions are lines, so every angle here lives in `[0, π)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{grow_regions, Region, Segmentation, TriangleMesh};
use crate::speed::SpeedMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum SequenceType {
    Simple,
    /// Privileged direction angle in `[0, π)`, radians.
    Oriented {
        theta: f64,
    },
    Indifferent,
}

impl SequenceType {
    pub fn name(&self) -> &'static str {
        match self {
            SequenceType::Simple => "simple",
            SequenceType::Oriented { .. } => "oriented",
            SequenceType::Indifferent => "indifferent",
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self {
            SequenceType::Oriented { theta } => Some(*theta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub theta_start: f64,
    pub theta_range: f64,
    pub theta_step: f64,
    /// A facet is aligned with a direction when `chi` is at most this, radians.
    pub chi_alignment_tolerance: f64,
    /// Minimum area fraction of aligned facets for an oriented verdict.
    pub oriented_fraction_threshold: f64,
    /// Normals with a shorter XY projection have no planar direction.
    pub projection_epsilon: f64,
    /// Step of the optional second pass around the best direction, radians.
    pub refinement_step: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            theta_start: 0.0,
            theta_range: FRAC_PI_2,
            theta_step: PI / 18.0,
            chi_alignment_tolerance: PI / 18.0,
            oriented_fraction_threshold: 0.9,
            projection_epsilon: 1e-6,
            refinement_step: None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SequenceError {
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error("speed map was computed on a different mesh")]
    MapMismatch,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SequenceError> {
        let bad = |m: String| Err(SequenceError::InvalidConfig(m));
        if !(self.theta_step.is_finite() && self.theta_step > 0.0) {
            return bad(format!("theta_step must be positive, got {}", self.theta_step));
        }
        if !(self.theta_range.is_finite() && self.theta_range >= self.theta_step) {
            return bad(format!(
                "theta_range ({}) must be at least theta_step ({})",
                self.theta_range, self.theta_step
            ));
        }
        if !self.theta_start.is_finite() {
            return bad("theta_start must be finite".into());
        }
        if !(self.chi_alignment_tolerance > 0.0 && self.chi_alignment_tolerance <= FRAC_PI_2) {
            return bad(format!(
                "chi alignment tolerance must lie in (0, π/2], got {}",
                self.chi_alignment_tolerance
            ));
        }
        if !(self.oriented_fraction_threshold > 0.0 && self.oriented_fraction_threshold <= 1.0) {
            return bad(format!(
                "oriented fraction threshold must lie in (0, 1], got {}",
                self.oriented_fraction_threshold
            ));
        }
        if !(self.projection_epsilon >= 0.0 && self.projection_epsilon.is_finite()) {
            return bad(format!(
                "projection_epsilon must be non-negative, got {}",
                self.projection_epsilon
            ));
        }
        if let Some(r) = self.refinement_step {
            if !(r.is_finite() && r > 0.0 && r <= self.theta_step) {
                return bad(format!("refinement_step must lie in (0, theta_step], got {r}"));
            }
        }
        Ok(())
    }

    /// Candidate directions: `floor(range / step) + 1` angles from `theta_start`.
    pub fn thetas(&self) -> Vec<f64> {
        let count = (self.theta_range / self.theta_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| self.theta_start + k as f64 * self.theta_step)
            .collect()
    }
}

/// Tolerances of both sequence maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceConfig {
    pub sweep: SweepConfig,
    /// Largest deviation from the area-weighted mean delta still counted as constant.
    pub delta_constancy_tolerance: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            sweep: SweepConfig::default(),
            delta_constancy_tolerance: 0.02,
        }
    }
}

impl SequenceConfig {
    pub fn validate(&self) -> Result<(), SequenceError> {
        self.sweep.validate()?;
        let t = self.delta_constancy_tolerance;
        if !(t.is_finite() && t > 0.0) {
            return Err(SequenceError::InvalidConfig(format!(
                "delta constancy tolerance must be positive, got {t}"
            )));
        }
        Ok(())
    }
}

pub fn normalize_theta(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// Acute angle between the line at `theta` and the XY projection of `normal`,
/// or `None` when the projection is shorter than `projection_epsilon`.
pub fn chi(normal: &Vector3<f64>, theta: f64, projection_epsilon: f64) -> Option<f64> {
    let len = normal.x.hypot(normal.y);
    if len < projection_epsilon || len == 0.0 {
        return None;
    }
    let along = (normal.x * theta.cos() + normal.y * theta.sin()).abs() / len;
    Some(along.min(1.0).acos())
}

/// Chi of every facet for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMap {
    pub theta: f64,
    pub chi: Vec<Option<f64>>,
}

pub fn compute_chi(mesh: &TriangleMesh, theta: f64, cfg: &SweepConfig) -> ChiMap {
    ChiMap {
        theta,
        chi: mesh
            .normals()
            .iter()
            .map(|n| chi(n, theta, cfg.projection_epsilon))
            .collect(),
    }
}

/// Chi maps for every swept direction.
#[derive(Debug, Clone)]
pub struct DirectionScan {
    pub thetas: Vec<f64>,
    pub maps: Vec<ChiMap>,
}

impl DirectionScan {
    pub fn projection_valid(&self, facet: usize) -> bool {
        self.maps.first().is_some_and(|m| m.chi[facet].is_some())
    }
}

pub fn direction_scan(mesh: &TriangleMesh, cfg: &SweepConfig) -> DirectionScan {
    let thetas = cfg.thetas();
    let maps = thetas.iter().map(|&t| compute_chi(mesh, t, cfg)).collect();
    DirectionScan { thetas, maps }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionScore {
    /// Normalized to `[0, π)`.
    pub theta: f64,
    /// Area fraction of valid facets aligned with `theta`, in `[0, 1]`.
    pub score: f64,
    /// Area-weighted mean chi over valid facets, radians.
    pub mean_chi: f64,
}

impl DirectionScore {
    /// Higher score wins; equal scores go to the lower mean chi. A full tie
    /// keeps the direction swept first.
    fn beats(&self, other: &DirectionScore) -> bool {
        const SCORE_TIE: f64 = 1e-12;
        const CHI_TIE: f64 = 1e-9;
        if (self.score - other.score).abs() > SCORE_TIE {
            return self.score > other.score;
        }
        if (self.mean_chi - other.mean_chi).abs() > CHI_TIE {
            return self.mean_chi < other.mean_chi;
        }
        false
    }
}

/// Scores one direction over a facet set. `None` when no facet has a valid projection.
pub fn score_direction(mesh: &TriangleMesh, facets: &[usize], theta: f64, cfg: &SweepConfig) -> Option<DirectionScore> {
    let (mut valid, mut aligned, mut chi_sum) = (0.0, 0.0, 0.0);
    for &f in facets {
        if let Some(c) = chi(&mesh.normal(f), theta, cfg.projection_epsilon) {
            let a = mesh.area(f);
            valid += a;
            chi_sum += a * c;
            if c <= cfg.chi_alignment_tolerance {
                aligned += a;
            }
        }
    }
    (valid > 0.0).then(|| DirectionScore {
        theta: normalize_theta(theta),
        score: aligned / valid,
        mean_chi: chi_sum / valid,
    })
}

/// Oriented-sweep outcome for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOrientation {
    pub region: usize,
    /// Area fraction of the region with a valid normal projection.
    pub valid_area_fraction: f64,
    /// Best direction of the coarse sweep.
    pub coarse: Option<DirectionScore>,
    /// Best direction after refinement (equal to `coarse` without refinement).
    pub best: Option<DirectionScore>,
    /// `Oriented` or `Indifferent`.
    pub verdict: SequenceType,
}

fn best_of(
    mesh: &TriangleMesh,
    facets: &[usize],
    thetas: impl Iterator<Item = f64>,
    cfg: &SweepConfig,
) -> Option<DirectionScore> {
    let mut best: Option<DirectionScore> = None;
    for t in thetas {
        if let Some(s) = score_direction(mesh, facets, t, cfg) {
            if best.as_ref().is_none_or(|b| s.beats(b)) {
                best = Some(s);
            }
        }
    }
    best
}

pub fn orient_region(mesh: &TriangleMesh, region: &Region, cfg: &SweepConfig) -> RegionOrientation {
    let valid_area: f64 = region
        .facets
        .iter()
        .filter(|&&f| chi(&mesh.normal(f), 0.0, cfg.projection_epsilon).is_some())
        .map(|&f| mesh.area(f))
        .sum();
    let valid_area_fraction = if region.area > 0.0 {
        valid_area / region.area
    } else {
        0.0
    };

    let coarse = best_of(mesh, &region.facets, cfg.thetas().into_iter(), cfg);
    let best = match (coarse, cfg.refinement_step) {
        (Some(c), Some(step)) => {
            let m = (cfg.theta_step / step + 1e-9).floor() as i64;
            best_of(mesh, &region.facets, (-m..=m).map(|k| c.theta + k as f64 * step), cfg)
        }
        _ => coarse,
    };
    let verdict = match best {
        Some(b) if b.score >= cfg.oriented_fraction_threshold => SequenceType::Oriented { theta: b.theta },
        _ => SequenceType::Indifferent,
    };
    RegionOrientation {
        region: region.id,
        valid_area_fraction,
        coarse,
        best,
        verdict,
    }
}

/// Runs the direction sweep on every region.
pub fn oriented_sweep(mesh: &TriangleMesh, regions: &[Region], cfg: &SweepConfig) -> Vec<RegionOrientation> {
    regions.iter().map(|r| orient_region(mesh, r, cfg)).collect()
}

/// Connected regions of constant delta.
#[derive(Debug, Clone)]
pub struct SimpleSequenceMap {
    pub tolerance: f64,
    /// Regions grown on delta bins of width `tolerance`; the label is the bin index.
    pub segmentation: Segmentation<i64>,
    /// Area-weighted mean delta per region.
    pub mean_delta: Vec<f64>,
}

fn delta_bin(delta: f64, tolerance: f64) -> i64 {
    ((delta + 1.0) / tolerance).floor() as i64
}

/// Groups facets into constant-delta sequences. Every facet of a region lies
/// within `tolerance` of the region's area-weighted mean delta.
pub fn simple_sequence_map(mesh: &TriangleMesh, speed: &SpeedMap, tolerance: f64) -> SimpleSequenceMap {
    let labels: Vec<i64> = speed.criteria.iter().map(|c| delta_bin(c.delta, tolerance)).collect();
    let segmentation = grow_regions(mesh, &labels, 0.0);
    let mean_delta = segmentation
        .regions
        .iter()
        .map(|r| speed.mean_delta(mesh, &r.facets))
        .collect();
    SimpleSequenceMap {
        tolerance,
        segmentation,
        mean_delta,
    }
}

/// True when every facet's delta is within `tolerance` of the area-weighted mean.
pub fn is_delta_constant(mesh: &TriangleMesh, speed: &SpeedMap, facets: &[usize], tolerance: f64) -> bool {
    let mean = speed.mean_delta(mesh, facets);
    facets.iter().all(|&f| (speed.delta(f) - mean).abs() <= tolerance)
}

/// Sequence verdicts for the regions of a speed map.
#[derive(Debug, Clone)]
pub struct SequenceMap {
    pub config: SequenceConfig,
    /// Verdict per speed-map region.
    pub verdicts: Vec<SequenceType>,
    pub orientations: Vec<RegionOrientation>,
    pub simple: SimpleSequenceMap,
    pub(crate) mesh_fingerprint: u64,
}

impl SequenceMap {
    pub fn is_for(&self, mesh: &TriangleMesh) -> bool {
        self.mesh_fingerprint == mesh.fingerprint()
    }
}

/// Assigns a sequence verdict to every speed-map region.
///
/// A region aligned with one swept direction is `Oriented`; otherwise it is
/// `Simple` when its delta is constant and `Indifferent` when not.
pub fn sequence_map(mesh: &TriangleMesh, speed: &SpeedMap, cfg: &SequenceConfig) -> Result<SequenceMap, SequenceError> {
    cfg.validate()?;
    if !speed.is_for(mesh) {
        return Err(SequenceError::MapMismatch);
    }
    let simple = simple_sequence_map(mesh, speed, cfg.delta_constancy_tolerance);
    let regions = &speed.segmentation.regions;
    let orientations = oriented_sweep(mesh, regions, &cfg.sweep);
    let verdicts = regions
        .iter()
        .zip(&orientations)
        .map(|(r, o)| match o.verdict {
            SequenceType::Oriented { .. } => o.verdict,
            _ if is_delta_constant(mesh, speed, &r.facets, cfg.delta_constancy_tolerance) => SequenceType::Simple,
            _ => SequenceType::Indifferent,
        })
        .collect();
    Ok(SequenceMap {
        config: *cfg,
        verdicts,
        orientations,
        simple,
        mesh_fingerprint: mesh.fingerprint(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mesh::HygieneConfig;
    use crate::speed::{speed_map, SpeedMapConfig};
    use nalgebra::Point3;

    fn mesh(soup: &[crate::mesh::Triangle]) -> TriangleMesh {
        TriangleMesh::from_triangles(soup, &HygieneConfig::default()).unwrap()
    }

    #[test]
    fn chi_basics() {
        let x = Vector3::x();
        assert_eq!(chi(&x, 0.0, 1e-6), Some(0.0));
        assert!((chi(&x, FRAC_PI_2, 1e-6).unwrap() - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(chi(&Vector3::z(), 0.3, 1e-6), None);
        // Line symmetry: opposite projections give the same chi.
        assert_eq!(chi(&-x, 0.0, 1e-6), Some(0.0));
    }

    #[test]
    fn sweep_defaults_give_ten_directions() {
        let t = SweepConfig::default().thetas();
        assert_eq!(t.len(), 10);
        assert!((t[9] - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn sweep_config_validation() {
        let bad = [
            SweepConfig {
                theta_step: 0.0,
                ..Default::default()
            },
            SweepConfig {
                theta_range: 0.01,
                ..Default::default()
            },
            SweepConfig {
                oriented_fraction_threshold: 0.0,
                ..Default::default()
            },
            SweepConfig {
                chi_alignment_tolerance: 2.0,
                ..Default::default()
            },
            SweepConfig {
                refinement_step: Some(1.0),
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(SweepConfig::default().validate().is_ok());
    }

    #[test]
    fn single_vertical_facet_is_oriented_at_zero() {
        let o = Point3::origin();
        let m = mesh(&[[o, Point3::new(0.0, 1.0, 0.0), Point3::new(0.0, 0.0, 1.0)]]);
        assert!((m.normal(0) - Vector3::x()).norm() < 1e-12);
        let region = Region {
            id: 0,
            facets: vec![0],
            area: m.area(0),
            boundary: vec![],
        };
        let r = orient_region(&m, &region, &SweepConfig::default());
        assert_eq!(r.verdict, SequenceType::Oriented { theta: 0.0 });
        assert_eq!(r.best.unwrap().score, 1.0);
    }

    #[test]
    fn horizontal_region_has_no_direction() {
        let m = mesh(&fixtures::flat_plate(4.0, 2));
        let region = Region {
            id: 0,
            facets: (0..8).collect(),
            area: 16.0,
            boundary: vec![],
        };
        let r = orient_region(&m, &region, &SweepConfig::default());
        assert_eq!(r.best, None);
        assert_eq!(r.valid_area_fraction, 0.0);
        assert_eq!(r.verdict, SequenceType::Indifferent);
    }

    #[test]
    fn refinement_recovers_off_grid_direction() {
        let soup = fixtures::GabledRoof::standard(33f64.to_radians()).build();
        let m = mesh(&soup.triangles);
        let roof: Vec<usize> = (0..m.facet_count()).filter(|&f| soup.parts[f] < 2).collect();
        let region = Region {
            id: 0,
            area: roof.iter().map(|&f| m.area(f)).sum(),
            facets: roof,
            boundary: vec![],
        };
        let coarse = orient_region(&m, &region, &SweepConfig::default());
        assert!((coarse.best.unwrap().theta - 30f64.to_radians()).abs() < 1e-9);
        let cfg = SweepConfig {
            refinement_step: Some(1f64.to_radians()),
            ..Default::default()
        };
        let fine = orient_region(&m, &region, &cfg);
        assert!((fine.best.unwrap().theta - 33f64.to_radians()).abs() < 1e-9);
        assert!(fine.best.unwrap().score >= coarse.best.unwrap().score);
    }

    #[test]
    fn hemisphere_simple_regions_are_single_rings() {
        // 9° rings: neighbouring ring deltas differ by more than the 0.02 bin.
        let m = mesh(&fixtures::hemisphere(50.0, 10, 24));
        let speed = speed_map(&m, &SpeedMapConfig::default(), 0.0).unwrap();
        let simple = simple_sequence_map(&m, &speed, 0.02);
        assert_eq!(simple.segmentation.regions.len(), 10);
        for (r, mean) in simple.segmentation.regions.iter().zip(&simple.mean_delta) {
            assert!(r.facets.len() <= 48);
            for &f in &r.facets {
                assert!((speed.delta(f) - mean).abs() <= 0.02);
            }
        }
    }

    #[test]
    fn drafted_pocket_verdicts_are_simple() {
        let soup = fixtures::DraftedPocket::standard().build();
        let m = mesh(&soup.triangles);
        let speed = speed_map(&m, &SpeedMapConfig::default(), 0.0).unwrap();
        let seq = sequence_map(&m, &speed, &SequenceConfig::default()).unwrap();
        assert!(seq.verdicts.iter().all(|v| *v == SequenceType::Simple));
        // Top, floor and the wall ring are each one constant-delta sequence.
        assert_eq!(seq.simple.segmentation.regions.len(), 3);
    }

    #[test]
    fn mismatched_maps_are_rejected() {
        let a = mesh(&fixtures::unit_cube());
        let b = mesh(&fixtures::flat_plate(1.0, 1));
        let speed = speed_map(&a, &SpeedMapConfig::default(), 0.0).unwrap();
        assert_eq!(
            sequence_map(&b, &speed, &SequenceConfig::default()).unwrap_err(),
            SequenceError::MapMismatch
        );
    }
}
