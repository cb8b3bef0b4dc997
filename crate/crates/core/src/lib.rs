//! Decomposition of forging-die meshes into machining features for 3-axis
//! high speed finishing.
//!
//! The pipeline reads an STL model, classifies every facet by the angle
//! between its normal and the tool axis ([`speed`]), groups facets that can
//! be chained in horizontal or vertical planes ([`sequence`]), superposes
//! both into machining features ([`features`]) and associates a cutting tool
//! and a strategy with each feature ([`rules`]).
//!
//! ```
//! use hsmdie::{fixtures::DraftedPocket, HygieneConfig, TriangleMesh};
//! use hsmdie::{extract_features, sequence_map, speed_map, FeatureKind, KindTable};
//!
//! let soup = DraftedPocket::standard().build();
//! let mesh = TriangleMesh::from_triangles(&soup.triangles, &HygieneConfig::default()).unwrap();
//! let speed = speed_map(&mesh, &Default::default(), 0.0).unwrap();
//! let seq = sequence_map(&mesh, &speed, &Default::default()).unwrap();
//! let features = extract_features(&mesh, &speed, &seq, &KindTable::default()).unwrap();
//! let floors = features.iter().filter(|f| f.kind == FeatureKind::SimpleFloor).count();
//! assert_eq!((features.len(), floors), (3, 2));
//! ```

pub mod config;
pub mod export;
pub mod features;
pub mod fixtures;
pub mod mesh;
pub mod pipeline;
pub mod report;
pub mod rules;
pub mod sequence;
pub mod speed;

pub use config::{ConfigError, ConfigFile, ExportToggles, PipelineConfig};
pub use features::{extract_features, FeatureKind, KindTable, MachiningFeature, SequenceKind};
pub use mesh::{grow_regions, load_stl, HygieneConfig, MeshDiagnostics, MeshError, Region, Segmentation, TriangleMesh};
pub use pipeline::{run_pipeline, PipelineError, PipelineOutput};
pub use report::{emit_report, Report};
pub use rules::{build_plan, ProcessPlan, RuleTable, Strategy, Tool};
pub use sequence::{sequence_map, SequenceConfig, SequenceMap, SequenceType, SweepConfig};
pub use speed::{speed_map, ContactClass, DraftSpec, SpeedMap, SpeedMapConfig};
