//! Shared inputs for the criterion benches.

use hsmdie::fixtures::{hemisphere, DraftedPocket};
use hsmdie::{HygieneConfig, TriangleMesh};

pub fn pocket_mesh() -> TriangleMesh {
    let soup = DraftedPocket::dense().build();
    TriangleMesh::from_triangles(&soup.triangles, &HygieneConfig::default()).expect("fixture is valid")
}

pub fn hemisphere_mesh() -> TriangleMesh {
    TriangleMesh::from_triangles(&hemisphere(50.0, 40, 64), &HygieneConfig::default()).expect("fixture is valid")
}
