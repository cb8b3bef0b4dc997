//! Cutting-speed map.
//!
//! The tool axis is fixed along +Z (3-axis milling). For each facet the
//! criterion `delta = cos(beta)` is the cosine of the angle between the tool
//! axis and the facet's outward normal, i.e. the normal's Z component. Facets
//! near `delta = 1` are cut with the tool tip (end contact, low effective
//! cutting speed); facets near the draft-wall value are cut with the flank.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{grow_regions, Segmentation, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedCriterion {
    /// Cosine of the inclination angle, in `[-1, 1]`.
    pub delta: f64,
    /// Inclination between tool axis and facet normal, radians in `[0, π]`.
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactClass {
    Horizontal,
    QuasiHorizontal,
    Draft,
    QuasiVertical,
    Transition,
    /// Faces away from the tool axis; unreachable on a 3-axis machine.
    Undercut,
}

impl ContactClass {
    pub const ALL: [ContactClass; 6] = [
        ContactClass::Horizontal,
        ContactClass::QuasiHorizontal,
        ContactClass::Draft,
        ContactClass::QuasiVertical,
        ContactClass::Transition,
        ContactClass::Undercut,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ContactClass::Horizontal => "horizontal",
            ContactClass::QuasiHorizontal => "quasi_horizontal",
            ContactClass::Draft => "draft",
            ContactClass::QuasiVertical => "quasi_vertical",
            ContactClass::Transition => "transition",
            ContactClass::Undercut => "undercut",
        }
    }

    /// End contact happens at the tool tip, flank contact on its periphery.
    pub fn contact(self) -> Option<ContactRegime> {
        match self {
            ContactClass::Horizontal | ContactClass::QuasiHorizontal => Some(ContactRegime::End),
            ContactClass::Draft | ContactClass::QuasiVertical => Some(ContactRegime::Flank),
            ContactClass::Transition => Some(ContactRegime::Mixed),
            ContactClass::Undercut => None,
        }
    }
}

impl fmt::Display for ContactClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactRegime {
    End,
    Flank,
    Mixed,
}

/// How the target delta of a drafted wall is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DraftSpec {
    /// Die draft angle measured from vertical, radians. `delta_draft = sin(angle)`.
    AngleFromVertical(f64),
    /// Target delta supplied directly.
    Delta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedMapConfig {
    pub draft: DraftSpec,
    /// Half-width of the Horizontal band around `delta = 1`.
    pub eps_h: f64,
    /// Half-width of the Draft band around `delta_draft`.
    pub eps_d: f64,
    /// Half-width of the QuasiHorizontal band around `delta = 1`.
    pub qh: f64,
    /// Half-width of the QuasiVertical band around `delta_draft`.
    pub qv: f64,
}

impl Default for SpeedMapConfig {
    fn default() -> Self {
        Self {
            draft: DraftSpec::AngleFromVertical(5f64.to_radians()),
            eps_h: 0.015,
            eps_d: 0.015,
            qh: 0.15,
            qv: 0.15,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SpeedMapError {
    #[error("invalid speed map config: {0}")]
    InvalidConfig(String),
    #[error(
        "speed bands overlap: quasi-horizontal band starts at delta {qh_low} but quasi-vertical band reaches {qv_high}"
    )]
    ConfigOverlap { qh_low: f64, qv_high: f64 },
}

impl SpeedMapConfig {
    pub fn delta_draft(&self) -> f64 {
        match self.draft {
            DraftSpec::AngleFromVertical(phi) => phi.sin(),
            DraftSpec::Delta(d) => d,
        }
    }

    /// Checks band ordering. The quasi-vertical band around the draft value
    /// must end strictly below where the quasi-horizontal band begins, so no
    /// delta can sit in both.
    pub fn validate(&self) -> Result<(), SpeedMapError> {
        let bad = |msg: String| Err(SpeedMapError::InvalidConfig(msg));
        for (name, v) in [
            ("eps_h", self.eps_h),
            ("eps_d", self.eps_d),
            ("qh", self.qh),
            ("qv", self.qv),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.eps_h >= self.qh {
            return bad(format!("eps_h ({}) must be smaller than qh ({})", self.eps_h, self.qh));
        }
        if self.eps_d >= self.qv {
            return bad(format!("eps_d ({}) must be smaller than qv ({})", self.eps_d, self.qv));
        }
        if let DraftSpec::AngleFromVertical(phi) = self.draft {
            if !(phi.is_finite() && phi > 0.0 && phi < std::f64::consts::FRAC_PI_2) {
                return bad(format!("draft angle must lie in (0°, 90°), got {}°", phi.to_degrees()));
            }
        }
        let dd = self.delta_draft();
        if !(dd.is_finite() && dd > 0.0 && dd < 1.0) {
            return bad(format!("delta_draft must lie in (0, 1), got {dd}"));
        }
        let qh_low = 1.0 - self.qh;
        let qv_high = dd + self.qv;
        if qv_high >= qh_low {
            return Err(SpeedMapError::ConfigOverlap { qh_low, qv_high });
        }
        Ok(())
    }
}

/// Per-facet `delta` and `beta`.
pub fn compute_delta(mesh: &TriangleMesh) -> Vec<SpeedCriterion> {
    mesh.normals()
        .iter()
        .map(|n| {
            let delta = n.z.clamp(-1.0, 1.0);
            SpeedCriterion {
                delta,
                beta: delta.acos(),
            }
        })
        .collect()
}

/// Vertical facets whose delta is this close below zero are rounding noise,
/// not undercuts.
pub const UNDERCUT_TOLERANCE: f64 = 1e-9;

/// Rule order matters: the first matching band wins.
pub fn classify_delta(delta: f64, cfg: &SpeedMapConfig) -> ContactClass {
    let dd = cfg.delta_draft();
    if delta < -UNDERCUT_TOLERANCE {
        ContactClass::Undercut
    } else if (delta - 1.0).abs() <= cfg.eps_h {
        ContactClass::Horizontal
    } else if (delta - 1.0).abs() <= cfg.qh {
        ContactClass::QuasiHorizontal
    } else if (delta - dd).abs() <= cfg.eps_d {
        ContactClass::Draft
    } else if (delta - dd).abs() <= cfg.qv {
        ContactClass::QuasiVertical
    } else {
        ContactClass::Transition
    }
}

pub fn classify_facets(criteria: &[SpeedCriterion], cfg: &SpeedMapConfig) -> Result<Vec<ContactClass>, SpeedMapError> {
    cfg.validate()?;
    Ok(criteria.iter().map(|c| classify_delta(c.delta, cfg)).collect())
}

/// The cutting-speed distribution map: per-facet criterion and class plus the
/// connected regions of equal class.
#[derive(Debug, Clone)]
pub struct SpeedMap {
    pub config: SpeedMapConfig,
    pub criteria: Vec<SpeedCriterion>,
    pub classes: Vec<ContactClass>,
    pub segmentation: Segmentation<ContactClass>,
    pub(crate) mesh_fingerprint: u64,
}

impl SpeedMap {
    pub fn delta(&self, facet: usize) -> f64 {
        self.criteria[facet].delta
    }

    pub fn region_class(&self, region: usize) -> ContactClass {
        self.segmentation.labels[region]
    }

    /// Facet count per class, in [`ContactClass::ALL`] order.
    pub fn class_counts(&self) -> [usize; 6] {
        let mut counts = [0; 6];
        for c in &self.classes {
            counts[*c as usize] += 1;
        }
        counts
    }

    /// Area-weighted mean delta over a set of facets.
    pub fn mean_delta(&self, mesh: &TriangleMesh, facets: &[usize]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for &f in facets {
            num += mesh.area(f) * self.delta(f);
            den += mesh.area(f);
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    pub fn is_for(&self, mesh: &TriangleMesh) -> bool {
        self.mesh_fingerprint == mesh.fingerprint() && self.classes.len() == mesh.facet_count()
    }
}

pub fn speed_map(mesh: &TriangleMesh, cfg: &SpeedMapConfig, min_region_area: f64) -> Result<SpeedMap, SpeedMapError> {
    let criteria = compute_delta(mesh);
    let classes = classify_facets(&criteria, cfg)?;
    let segmentation = grow_regions(mesh, &classes, min_region_area);
    // Merging small regions relabels their facets; keep the per-facet view in step.
    let classes = if segmentation.merges.is_empty() {
        classes
    } else {
        segmentation
            .facet_region
            .iter()
            .map(|&r| segmentation.labels[r])
            .collect()
    };
    Ok(SpeedMap {
        config: *cfg,
        criteria,
        classes,
        segmentation,
        mesh_fingerprint: mesh.fingerprint(),
    })
}
