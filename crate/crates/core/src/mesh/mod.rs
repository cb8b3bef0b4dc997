//! Indexed triangle mesh with recomputed unit normals and edge adjacency.
//!
//! Every mesh goes through the same hygiene pass regardless of where the
//! triangles came from: degenerate facets are dropped, coincident vertices are
//! welded, normals and areas are recomputed from the vertex winding
//! (counter-clockwise = outward) and edge adjacency is built. After
//! construction a [`TriangleMesh`] is immutable.
//!
//! Units are millimetres throughout.

mod adjacency;
mod region;
pub mod stl;

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adjacency::EdgeAdjacency;
pub use region::{grow_regions, BoundaryEdge, Region, RegionMerge, Segmentation};
pub use stl::load_stl;

/// A raw triangle, three corners in file order.
pub type Triangle = [Point3<f64>; 3];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("unreadable file {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed STL: {0}")]
    MalformedStl(String),
    #[error("empty mesh: no non-degenerate facets")]
    EmptyMesh,
}

/// Tolerances of the hygiene pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HygieneConfig {
    /// Vertices closer than this (mm) are merged.
    pub weld_epsilon: f64,
    /// Facets with a smaller area (mm²) are dropped.
    pub degenerate_area_epsilon: f64,
}

impl Default for HygieneConfig {
    fn default() -> Self {
        Self {
            weld_epsilon: 1e-6,
            degenerate_area_epsilon: 1e-12,
        }
    }
}

/// What the hygiene pass did to the input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshDiagnostics {
    pub input_facets: usize,
    /// Facets removed because their area was below the degenerate threshold
    /// or because welding collapsed two of their corners.
    pub dropped_degenerate: usize,
    /// Number of input corners that were merged into an existing vertex.
    pub welded_corners: usize,
    /// Edges shared by more than two facets. No adjacency is recorded across them.
    pub non_manifold_edges: usize,
}

#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    facets: Vec<[usize; 3]>,
    normals: Vec<Vector3<f64>>,
    areas: Vec<f64>,
    adjacency: Vec<EdgeAdjacency>,
    diagnostics: MeshDiagnostics,
    fingerprint: u64,
}

impl TriangleMesh {
    /// Builds a mesh from a triangle soup.
    pub fn from_triangles(triangles: &[Triangle], hygiene: &HygieneConfig) -> Result<Self, MeshError> {
        let mut diagnostics = MeshDiagnostics {
            input_facets: triangles.len(),
            ..Default::default()
        };

        let mut welder = Welder::new(hygiene.weld_epsilon);
        let mut facets = Vec::with_capacity(triangles.len());
        for tri in triangles {
            if triangle_area(tri) < hygiene.degenerate_area_epsilon || !tri.iter().all(is_finite) {
                diagnostics.dropped_degenerate += 1;
                continue;
            }
            let idx = [welder.insert(tri[0]), welder.insert(tri[1]), welder.insert(tri[2])];
            if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
                diagnostics.dropped_degenerate += 1;
                continue;
            }
            facets.push(idx);
        }
        diagnostics.welded_corners = welder.merged;
        let vertices = welder.vertices;

        // Welding moves corners onto the representative vertex, so the area
        // test is repeated on the welded geometry.
        let mut kept = Vec::with_capacity(facets.len());
        let mut normals = Vec::with_capacity(facets.len());
        let mut areas = Vec::with_capacity(facets.len());
        for f in facets {
            let tri = [vertices[f[0]], vertices[f[1]], vertices[f[2]]];
            let cross = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
            let area = 0.5 * cross.norm();
            if area < hygiene.degenerate_area_epsilon {
                diagnostics.dropped_degenerate += 1;
                continue;
            }
            kept.push(f);
            normals.push(cross / cross.norm());
            areas.push(area);
        }
        if kept.is_empty() {
            return Err(MeshError::EmptyMesh);
        }

        let (adjacency, non_manifold) = adjacency::build_adjacency(&kept);
        diagnostics.non_manifold_edges = non_manifold;

        let fingerprint = fingerprint(&vertices, &kept);
        Ok(Self {
            vertices,
            facets: kept,
            normals,
            areas,
            adjacency,
            diagnostics,
            fingerprint,
        })
    }

    /// Builds a mesh from shared vertices and index triples. The same hygiene
    /// pass as [`TriangleMesh::from_triangles`] is applied.
    pub fn from_indexed(
        vertices: &[Point3<f64>],
        facets: &[[usize; 3]],
        hygiene: &HygieneConfig,
    ) -> Result<Self, MeshError> {
        let soup: Vec<Triangle> = facets
            .iter()
            .map(|f| [vertices[f[0]], vertices[f[1]], vertices[f[2]]])
            .collect();
        Self::from_triangles(&soup, hygiene)
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[[usize; 3]] {
        &self.facets
    }

    pub fn facet_count(&self) -> usize {
        self.facets.len()
    }

    /// Unit outward normal of each facet. This is the material direction.
    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn normal(&self, facet: usize) -> Vector3<f64> {
        self.normals[facet]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn area(&self, facet: usize) -> f64 {
        self.areas[facet]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn adjacency(&self) -> &[EdgeAdjacency] {
        &self.adjacency
    }

    /// Facets sharing a full manifold edge with `facet`.
    pub fn neighbors(&self, facet: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[facet].iter().flatten().copied()
    }

    pub fn triangle(&self, facet: usize) -> Triangle {
        let f = self.facets[facet];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    pub fn centroid(&self, facet: usize) -> Point3<f64> {
        let [a, b, c] = self.triangle(facet);
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }

    /// Vertex pair of local edge `edge` (0..3) of `facet`, sorted ascending.
    pub fn edge_key(&self, facet: usize, edge: usize) -> (usize, usize) {
        let f = self.facets[facet];
        let (a, b) = (f[edge], f[(edge + 1) % 3]);
        (a.min(b), a.max(b))
    }

    pub fn diagnostics(&self) -> &MeshDiagnostics {
        &self.diagnostics
    }

    /// Hash of the welded geometry, used to check that derived maps were
    /// computed on this mesh.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

pub(crate) fn triangle_area(tri: &Triangle) -> f64 {
    0.5 * (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm()
}

fn is_finite(p: &Point3<f64>) -> bool {
    p.coords.iter().all(|c| c.is_finite())
}

fn fingerprint(vertices: &[Point3<f64>], facets: &[[usize; 3]]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    vertices.len().hash(&mut h);
    for v in vertices {
        for c in v.coords.iter() {
            c.to_bits().hash(&mut h);
        }
    }
    facets.hash(&mut h);
    h.finish()
}

/// Grid-hashed vertex welder. The first vertex seen in a neighbourhood
/// becomes the representative, so results depend only on input order.
struct Welder {
    epsilon: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    vertices: Vec<Point3<f64>>,
    merged: usize,
}

impl Welder {
    fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            cells: HashMap::new(),
            vertices: Vec::new(),
            merged: 0,
        }
    }

    fn cell(&self, p: &Point3<f64>) -> [i64; 3] {
        if self.epsilon > 0.0 {
            [
                (p.x / self.epsilon).floor() as i64,
                (p.y / self.epsilon).floor() as i64,
                (p.z / self.epsilon).floor() as i64,
            ]
        } else {
            [p.x.to_bits() as i64, p.y.to_bits() as i64, p.z.to_bits() as i64]
        }
    }

    fn insert(&mut self, p: Point3<f64>) -> usize {
        let c = self.cell(&p);
        let reach = if self.epsilon > 0.0 { 1 } else { 0 };
        let eps2 = self.epsilon * self.epsilon;
        let mut best: Option<usize> = None;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    let key = [c[0] + dx, c[1] + dy, c[2] + dz];
                    if let Some(ids) = self.cells.get(&key) {
                        for &id in ids {
                            let d2 = (self.vertices[id] - p).norm_squared();
                            let hit = if self.epsilon > 0.0 { d2 <= eps2 } else { d2 == 0.0 };
                            if hit && best.is_none_or(|b| id < b) {
                                best = Some(id);
                            }
                        }
                    }
                }
            }
        }
        if let Some(id) = best {
            self.merged += 1;
            return id;
        }
        let id = self.vertices.len();
        self.vertices.push(p);
        self.cells.entry(c).or_default().push(id);
        id
    }
}
