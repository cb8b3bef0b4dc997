//! Machining features: the speed map and the sequence verdicts superposed.
//!
//! Each speed-map region gets a feature kind from a (contact class, sequence
//! type) table. Adjacent regions of the same kind are then merged, so a
//! feature is a maximal connected set of facets sharing a kind (and, for
//! oriented floors, a privileged direction). Undercut facets belong to no
//! feature.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{grow_regions, Region, TriangleMesh};
use crate::sequence::{SequenceMap, SequenceType};
use crate::speed::{ContactClass, SpeedMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Flank,
    SimpleFloor,
    OrientedFloor,
    IndifferentFloor,
    Transition,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::Flank,
        FeatureKind::SimpleFloor,
        FeatureKind::OrientedFloor,
        FeatureKind::IndifferentFloor,
        FeatureKind::Transition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Flank => "flank",
            FeatureKind::SimpleFloor => "simple_floor",
            FeatureKind::OrientedFloor => "oriented_floor",
            FeatureKind::IndifferentFloor => "indifferent_floor",
            FeatureKind::Transition => "transition",
        }
    }

    pub fn is_floor(self) -> bool {
        matches!(
            self,
            FeatureKind::SimpleFloor | FeatureKind::OrientedFloor | FeatureKind::IndifferentFloor
        )
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

/// Sequence verdict without its direction, used as a table key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    Simple,
    Oriented,
    Indifferent,
}

impl SequenceKind {
    pub const ALL: [SequenceKind; 3] = [SequenceKind::Simple, SequenceKind::Oriented, SequenceKind::Indifferent];
}

impl From<&SequenceType> for SequenceKind {
    fn from(s: &SequenceType) -> Self {
        match s {
            SequenceType::Simple => SequenceKind::Simple,
            SequenceType::Oriented { .. } => SequenceKind::Oriented,
            SequenceType::Indifferent => SequenceKind::Indifferent,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("speed map and sequence map index different meshes")]
    MapMismatch,
    #[error("invalid kind table: {0}")]
    InvalidKindTable(String),
}

/// Maps (contact class, sequence kind) to a feature kind; `None` leaves the
/// facets out of every feature.
#[derive(Debug, Clone, PartialEq)]
pub struct KindTable {
    entries: BTreeMap<(ContactClass, SequenceKind), Option<FeatureKind>>,
}

impl Default for KindTable {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        for class in ContactClass::ALL {
            for seq in SequenceKind::ALL {
                entries.insert((class, seq), default_kind(class, seq));
            }
        }
        Self { entries }
    }
}

fn default_kind(class: ContactClass, seq: SequenceKind) -> Option<FeatureKind> {
    use ContactClass as C;
    match (class, seq) {
        (C::Undercut, _) => None,
        (C::Draft | C::QuasiVertical, _) => Some(FeatureKind::Flank),
        (C::Horizontal, _) => Some(FeatureKind::SimpleFloor),
        (C::QuasiHorizontal, SequenceKind::Simple) => Some(FeatureKind::SimpleFloor),
        (C::QuasiHorizontal, SequenceKind::Oriented) => Some(FeatureKind::OrientedFloor),
        (C::QuasiHorizontal, SequenceKind::Indifferent) => Some(FeatureKind::IndifferentFloor),
        (C::Transition, _) => Some(FeatureKind::Transition),
    }
}

impl KindTable {
    pub fn lookup(&self, class: ContactClass, seq: SequenceKind) -> Option<FeatureKind> {
        self.entries[&(class, seq)]
    }

    /// Replaces one entry. An oriented floor needs a direction, so it can
    /// only come from an oriented verdict.
    pub fn set(
        &mut self,
        class: ContactClass,
        seq: SequenceKind,
        kind: Option<FeatureKind>,
    ) -> Result<(), FeatureError> {
        if kind == Some(FeatureKind::OrientedFloor) && seq != SequenceKind::Oriented {
            return Err(FeatureError::InvalidKindTable(format!(
                "{class} with a {seq:?} verdict cannot map to oriented_floor"
            )));
        }
        self.entries.insert((class, seq), kind);
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (ContactClass, SequenceKind, Option<FeatureKind>)> + '_ {
        self.entries.iter().map(|(&(c, s), &k)| (c, s, k))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachiningFeature {
    pub id: usize,
    pub kind: FeatureKind,
    pub region: Region,
    /// Area-weighted mean delta.
    pub mean_delta: f64,
    pub min_delta: f64,
    pub max_delta: f64,
    /// Present exactly for oriented floors, radians in `[0, π)`.
    pub privileged_theta: Option<f64>,
    /// A floor that holds Horizontal facets next to non-Horizontal ones, or
    /// that borders Horizontal facets.
    pub contains_horizontal_core: bool,
    /// All member facets are Horizontal.
    pub horizontal_only: bool,
    pub classes: BTreeSet<ContactClass>,
    /// Speed-map regions merged into this feature.
    pub source_regions: Vec<usize>,
    pub neighbors: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct FeatureLabel {
    kind: FeatureKind,
    theta_bits: u64,
}

/// Superposes the two maps into machining features.
pub fn extract_features(
    mesh: &TriangleMesh,
    speed: &SpeedMap,
    sequences: &SequenceMap,
    table: &KindTable,
) -> Result<Vec<MachiningFeature>, FeatureError> {
    if !speed.is_for(mesh) || !sequences.is_for(mesh) || sequences.verdicts.len() != speed.segmentation.regions.len() {
        return Err(FeatureError::MapMismatch);
    }

    let region_labels: Vec<Option<FeatureLabel>> = speed
        .segmentation
        .labels
        .iter()
        .zip(&sequences.verdicts)
        .map(|(&class, verdict)| {
            table.lookup(class, verdict.into()).map(|kind| FeatureLabel {
                kind,
                theta_bits: match (kind, verdict) {
                    (FeatureKind::OrientedFloor, SequenceType::Oriented { theta }) => theta.to_bits(),
                    _ => 0,
                },
            })
        })
        .collect();
    let facet_labels: Vec<Option<FeatureLabel>> = speed
        .segmentation
        .facet_region
        .iter()
        .map(|&r| region_labels[r])
        .collect();

    Ok(features_from_labels(mesh, speed, &facet_labels))
}

fn features_from_labels(
    mesh: &TriangleMesh,
    speed: &SpeedMap,
    facet_labels: &[Option<FeatureLabel>],
) -> Vec<MachiningFeature> {
    let seg = grow_regions(mesh, facet_labels, 0.0);

    // Feature ids skip the unassigned (undercut) regions but keep the
    // smallest-facet ordering of the segmentation.
    let mut feature_of_region = vec![None; seg.regions.len()];
    let mut next = 0;
    for (r, label) in seg.labels.iter().enumerate() {
        if label.is_some() {
            feature_of_region[r] = Some(next);
            next += 1;
        }
    }
    let feature_of_facet = |f: usize| feature_of_region[seg.region_of(f)];

    let mut features = Vec::with_capacity(next);
    for (r, region) in seg.regions.iter().enumerate() {
        let (Some(label), Some(id)) = (seg.labels[r], feature_of_region[r]) else {
            continue;
        };
        let classes: BTreeSet<ContactClass> = region.facets.iter().map(|&f| speed.classes[f]).collect();
        let source_regions: BTreeSet<usize> = region.facets.iter().map(|&f| speed.segmentation.region_of(f)).collect();
        let neighbors: BTreeSet<usize> = region
            .boundary
            .iter()
            .filter_map(|e| e.across.and_then(feature_of_facet))
            .filter(|&n| n != id)
            .collect();
        let borders_horizontal = region
            .boundary
            .iter()
            .filter_map(|e| e.across)
            .any(|f| speed.classes[f] == ContactClass::Horizontal);
        let horizontal_only = classes.len() == 1 && classes.contains(&ContactClass::Horizontal);
        let mixed_horizontal = classes.contains(&ContactClass::Horizontal) && !horizontal_only;
        let (min_delta, max_delta) = region
            .facets
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &f| {
                (lo.min(speed.delta(f)), hi.max(speed.delta(f)))
            });

        let mut region = region.clone();
        region.id = id;
        features.push(MachiningFeature {
            id,
            kind: label.kind,
            mean_delta: speed.mean_delta(mesh, &region.facets),
            min_delta,
            max_delta,
            privileged_theta: (label.kind == FeatureKind::OrientedFloor).then(|| f64::from_bits(label.theta_bits)),
            contains_horizontal_core: label.kind.is_floor() && (mixed_horizontal || borders_horizontal),
            horizontal_only,
            classes,
            source_regions: source_regions.into_iter().collect(),
            neighbors,
            region,
        });
    }
    features
}

/// Extraction applied to an existing feature set: regrows features from their
/// own kinds. Used to check that merging is already complete.
pub fn reextract(mesh: &TriangleMesh, speed: &SpeedMap, features: &[MachiningFeature]) -> Vec<MachiningFeature> {
    let mut labels = vec![None; mesh.facet_count()];
    for feat in features {
        let label = FeatureLabel {
            kind: feat.kind,
            theta_bits: feat.privileged_theta.map_or(0, f64::to_bits),
        };
        for &f in &feat.region.facets {
            labels[f] = Some(label);
        }
    }
    features_from_labels(mesh, speed, &labels)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureSummary {
    pub id: usize,
    pub kind: FeatureKind,
    pub facet_count: usize,
    pub area: f64,
    pub mean_delta: f64,
    pub min_delta: f64,
    pub max_delta: f64,
    pub privileged_theta_deg: Option<f64>,
    pub contains_horizontal_core: bool,
    pub neighbors: Vec<usize>,
    pub boundary_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FeatureReport {
    pub feature_count: usize,
    pub counts_by_kind: BTreeMap<FeatureKind, usize>,
    pub area_by_kind: BTreeMap<FeatureKind, f64>,
    pub total_area: f64,
    pub features: Vec<FeatureSummary>,
}

/// Structured summary, ordered by feature id.
pub fn feature_report(features: &[MachiningFeature]) -> FeatureReport {
    let mut sorted: Vec<&MachiningFeature> = features.iter().collect();
    sorted.sort_by_key(|f| f.id);
    let mut report = FeatureReport {
        feature_count: sorted.len(),
        ..Default::default()
    };
    for f in sorted {
        *report.counts_by_kind.entry(f.kind).or_default() += 1;
        *report.area_by_kind.entry(f.kind).or_default() += f.region.area;
        report.total_area += f.region.area;
        report.features.push(FeatureSummary {
            id: f.id,
            kind: f.kind,
            facet_count: f.region.facets.len(),
            area: f.region.area,
            mean_delta: f.mean_delta,
            min_delta: f.min_delta,
            max_delta: f.max_delta,
            privileged_theta_deg: f.privileged_theta.map(f64::to_degrees),
            contains_horizontal_core: f.contains_horizontal_core,
            neighbors: f.neighbors.iter().copied().collect(),
            boundary_edges: f.region.boundary.len(),
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mesh::{HygieneConfig, Triangle};
    use crate::sequence::{sequence_map, SequenceConfig};
    use crate::speed::{speed_map, SpeedMapConfig};

    fn run(soup: &[Triangle]) -> (TriangleMesh, SpeedMap, Vec<MachiningFeature>) {
        let mesh = TriangleMesh::from_triangles(soup, &HygieneConfig::default()).unwrap();
        let speed = speed_map(&mesh, &SpeedMapConfig::default(), 0.0).unwrap();
        let seq = sequence_map(&mesh, &speed, &SequenceConfig::default()).unwrap();
        let features = extract_features(&mesh, &speed, &seq, &KindTable::default()).unwrap();
        (mesh, speed, features)
    }

    #[test]
    fn default_table_matches_hand_transcription() {
        use ContactClass as C;
        use FeatureKind as K;
        use SequenceKind as S;
        let expected: [(C, [Option<K>; 3]); 6] = [
            (C::Horizontal, [Some(K::SimpleFloor); 3]),
            (
                C::QuasiHorizontal,
                [Some(K::SimpleFloor), Some(K::OrientedFloor), Some(K::IndifferentFloor)],
            ),
            (C::Draft, [Some(K::Flank); 3]),
            (C::QuasiVertical, [Some(K::Flank); 3]),
            (C::Transition, [Some(K::Transition); 3]),
            (C::Undercut, [None; 3]),
        ];
        let table = KindTable::default();
        for (class, row) in expected {
            for (seq, kind) in [S::Simple, S::Oriented, S::Indifferent].into_iter().zip(row) {
                assert_eq!(table.lookup(class, seq), kind, "{class} {seq:?}");
            }
        }
    }

    #[test]
    fn oriented_floor_needs_oriented_verdict() {
        let mut t = KindTable::default();
        assert!(t
            .set(
                ContactClass::Transition,
                SequenceKind::Simple,
                Some(FeatureKind::OrientedFloor)
            )
            .is_err());
        assert!(t
            .set(
                ContactClass::Transition,
                SequenceKind::Simple,
                Some(FeatureKind::SimpleFloor)
            )
            .is_ok());
    }

    #[test]
    fn drafted_pocket_features() {
        let pocket = fixtures::DraftedPocket::standard();
        let (_, _, features) = run(&pocket.build().triangles);
        assert_eq!(features.len(), 3);
        let floors: Vec<_> = features.iter().filter(|f| f.kind == FeatureKind::SimpleFloor).collect();
        let flank: Vec<_> = features.iter().filter(|f| f.kind == FeatureKind::Flank).collect();
        assert_eq!(floors.len(), 2);
        assert_eq!(flank.len(), 1);
        for floor in floors {
            assert_eq!(floor.neighbors, BTreeSet::from([flank[0].id]));
            assert!(floor.horizontal_only);
            assert!(!floor.contains_horizontal_core);
        }
        assert_eq!(flank[0].neighbors.len(), 2);
        let report = feature_report(&features);
        assert!((report.total_area - pocket.analytic_area()).abs() < 1e-9 * pocket.analytic_area());
    }

    #[test]
    fn gabled_roof_gives_oriented_floor() {
        let (_, _, features) = run(&fixtures::GabledRoof::standard(0.0).build().triangles);
        let oriented: Vec<_> = features
            .iter()
            .filter(|f| f.kind == FeatureKind::OrientedFloor)
            .collect();
        assert_eq!(oriented.len(), 1);
        assert!(oriented[0].privileged_theta.unwrap().abs() < 1e-9);
        assert!(features
            .iter()
            .all(|f| (f.kind == FeatureKind::OrientedFloor) == f.privileged_theta.is_some()));
    }

    #[test]
    fn coarse_hemisphere_cap_and_transition_band() {
        // 15° rings: the single quasi-horizontal ring has constant delta and
        // no privileged direction, so it joins the cap as a simple floor.
        let (_, _, features) = run(&fixtures::hemisphere(50.0, 6, 24));
        let kinds: Vec<FeatureKind> = features.iter().map(|f| f.kind).collect();
        assert_eq!(
            kinds,
            vec![FeatureKind::SimpleFloor, FeatureKind::Transition, FeatureKind::Flank]
        );
        assert!(features[0].neighbors.contains(&features[1].id));
        assert!(features[0].contains_horizontal_core);
        assert!(!features[0].horizontal_only);
    }

    #[test]
    fn neighbor_graph_is_symmetric_and_loop_free() {
        for soup in [
            fixtures::hemisphere(30.0, 20, 32),
            fixtures::GabledRoof::standard(0.4).build().triangles,
            fixtures::DraftedPocket::standard().build().triangles,
        ] {
            let (_, _, features) = run(&soup);
            for f in &features {
                assert!(!f.neighbors.contains(&f.id));
                for &n in &f.neighbors {
                    assert!(features[n].neighbors.contains(&f.id));
                }
            }
        }
    }

    #[test]
    fn reextraction_is_idempotent() {
        for soup in [
            fixtures::hemisphere(30.0, 20, 32),
            fixtures::DraftedPocket::standard().build().triangles,
        ] {
            let (mesh, speed, features) = run(&soup);
            assert_eq!(reextract(&mesh, &speed, &features), features);
        }
    }

    #[test]
    fn undercut_facets_are_excluded() {
        let (mesh, _, features) = run(&fixtures::flat_plate(10.0, 3));
        assert_eq!(features.len(), 1);
        assert_eq!(features[0].region.facets.len(), mesh.facet_count() - 2);
        assert!(features[0].neighbors.is_empty());
    }

    #[test]
    fn empty_report() {
        let r = feature_report(&[]);
        assert_eq!(r.feature_count, 0);
        assert!(r.features.is_empty());
        assert_eq!(r.total_area, 0.0);
    }
}
