//! Colored mesh export as ASCII PLY with one RGB triple per face.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use thiserror::Error;

use crate::features::MachiningFeature;
use crate::mesh::TriangleMesh;
use crate::sequence::ChiMap;
use crate::speed::{ContactClass, SpeedMap, SpeedMapConfig};

pub type Rgb = [u8; 3];

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    UnwritableOutput {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("expected {expected} face colors, got {got}")]
    ColorCountMismatch { expected: usize, got: usize },
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PLY: {0}")]
    MalformedPly(String),
}

/// Geometry and face colors as read back from a PLY file.
#[derive(Debug, Clone, PartialEq)]
pub struct ColoredMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
    pub colors: Vec<Rgb>,
}

pub const HORIZONTAL_RGB: Rgb = [139, 0, 0];
pub const QUASI_HORIZONTAL_RGB: Rgb = [255, 0, 0];
pub const DRAFT_RGB: Rgb = [0, 0, 139];
pub const QUASI_VERTICAL_RGB: Rgb = [0, 0, 255];
pub const UNDERCUT_RGB: Rgb = [0, 0, 0];
pub const INVALID_CHI_RGB: Rgb = [255, 255, 0];

/// Transition facets blend from blue (steep end) to red (flat end).
pub fn class_color(class: ContactClass, delta: f64, cfg: &SpeedMapConfig) -> Rgb {
    match class {
        ContactClass::Horizontal => HORIZONTAL_RGB,
        ContactClass::QuasiHorizontal => QUASI_HORIZONTAL_RGB,
        ContactClass::Draft => DRAFT_RGB,
        ContactClass::QuasiVertical => QUASI_VERTICAL_RGB,
        ContactClass::Undercut => UNDERCUT_RGB,
        ContactClass::Transition => {
            let lo = cfg.delta_draft() + cfg.qv;
            let hi = 1.0 - cfg.qh;
            let t = ((delta - lo) / (hi - lo)).clamp(0.0, 1.0);
            [(255.0 * t).round() as u8, 0, (255.0 * (1.0 - t)).round() as u8]
        }
    }
}

pub fn speed_map_colors(speed: &SpeedMap) -> Vec<Rgb> {
    speed
        .classes
        .iter()
        .zip(&speed.criteria)
        .map(|(&c, s)| class_color(c, s.delta, &speed.config))
        .collect()
}

/// Gray ramp: white at `chi = 0`, black at `chi = π/2`.
pub fn chi_colors(map: &ChiMap) -> Vec<Rgb> {
    map.chi
        .iter()
        .map(|c| match c {
            Some(chi) => {
                let g = (255.0 * (1.0 - chi / std::f64::consts::FRAC_PI_2))
                    .round()
                    .clamp(0.0, 255.0) as u8;
                [g, g, g]
            }
            None => INVALID_CHI_RGB,
        })
        .collect()
}

/// Distinct hue per feature id; facets outside every feature stay black.
pub fn feature_colors(facet_count: usize, features: &[MachiningFeature]) -> Vec<Rgb> {
    let mut colors = vec![UNDERCUT_RGB; facet_count];
    for f in features {
        let c = feature_color(f.id);
        for &i in &f.region.facets {
            colors[i] = c;
        }
    }
    colors
}

pub fn feature_color(id: usize) -> Rgb {
    const GOLDEN: f64 = 0.618_033_988_749_895;
    let h = (0.1 + id as f64 * GOLDEN).fract() * 6.0;
    let (s, v) = (0.65, 0.95);
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |u: f64| (255.0 * (u + m)).round() as u8;
    [q(r), q(g), q(b)]
}

pub fn to_ply(mesh: &TriangleMesh, colors: &[Rgb]) -> Result<String, ExportError> {
    if colors.len() != mesh.facet_count() {
        return Err(ExportError::ColorCountMismatch {
            expected: mesh.facet_count(),
            got: colors.len(),
        });
    }
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\ncomment hsmdie colored mesh\n");
    let _ = writeln!(out, "element vertex {}", mesh.vertices().len());
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    let _ = writeln!(out, "element face {}", mesh.facet_count());
    out.push_str("property list uchar int vertex_indices\n");
    out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n");
    for v in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
    }
    for (f, c) in mesh.facets().iter().zip(colors) {
        let _ = writeln!(out, "3 {} {} {} {} {} {}", f[0], f[1], f[2], c[0], c[1], c[2]);
    }
    Ok(out)
}

pub fn write_colored_ply(mesh: &TriangleMesh, colors: &[Rgb], path: impl AsRef<Path>) -> Result<(), ExportError> {
    let path = path.as_ref();
    let text = to_ply(mesh, colors)?;
    std::fs::write(path, text).map_err(|source| ExportError::UnwritableOutput {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads the subset of ASCII PLY that [`to_ply`] writes: triangles with a
/// per-face `red green blue`.
pub fn parse_ply(text: &str) -> Result<ColoredMesh, ExportError> {
    let bad = |m: &str| ExportError::MalformedPly(m.to_string());
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(bad("missing magic"));
    }
    let mut vertex_count = None;
    let mut face_count = None;
    let mut face_props = Vec::new();
    let mut in_face = false;
    for line in lines.by_ref() {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "ascii", _] => {}
            ["format", ..] => return Err(bad("only ascii format is supported")),
            ["comment", ..] | [] => {}
            ["element", "vertex", n] => {
                vertex_count = Some(n.parse::<usize>().map_err(|_| bad("vertex count"))?);
                in_face = false;
            }
            ["element", "face", n] => {
                face_count = Some(n.parse::<usize>().map_err(|_| bad("face count"))?);
                in_face = true;
            }
            ["element", ..] => return Err(bad("unexpected element")),
            ["property", "list", _, _, name] if in_face => face_props.push(name.to_string()),
            ["property", _, name] if in_face => face_props.push(name.to_string()),
            ["property", ..] => {}
            ["end_header"] => break,
            _ => return Err(ExportError::MalformedPly(format!("unexpected header line {line:?}"))),
        }
    }
    let vertex_count = vertex_count.ok_or_else(|| bad("no vertex element"))?;
    let face_count = face_count.ok_or_else(|| bad("no face element"))?;
    let expected = ["vertex_indices", "red", "green", "blue"];
    if face_props != expected {
        return Err(ExportError::MalformedPly(format!("face properties {face_props:?}")));
    }

    let mut body = lines.filter(|l| !l.trim().is_empty());
    let mut vertices = Vec::with_capacity(vertex_count);
    for _ in 0..vertex_count {
        let line = body.next().ok_or_else(|| bad("truncated vertex list"))?;
        let xyz: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad("vertex coordinate"))?;
        if xyz.len() != 3 {
            return Err(bad("vertex record needs 3 values"));
        }
        vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
    }
    let mut faces = Vec::with_capacity(face_count);
    let mut colors = Vec::with_capacity(face_count);
    for _ in 0..face_count {
        let line = body.next().ok_or_else(|| bad("truncated face list"))?;
        let w: Vec<usize> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad("face record"))?;
        if w.len() != 7 || w[0] != 3 {
            return Err(bad("face record must be a colored triangle"));
        }
        if w[1..4].iter().any(|&i| i >= vertex_count) {
            return Err(bad("vertex index out of range"));
        }
        if w[4..].iter().any(|&c| c > 255) {
            return Err(bad("color component out of range"));
        }
        faces.push([w[1], w[2], w[3]]);
        colors.push([w[4] as u8, w[5] as u8, w[6] as u8]);
    }
    Ok(ColoredMesh {
        vertices,
        faces,
        colors,
    })
}

pub fn read_colored_ply(path: impl AsRef<Path>) -> Result<ColoredMesh, ExportError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ExportError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    parse_ply(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mesh::HygieneConfig;
    use crate::speed::speed_map;

    #[test]
    fn single_facet_format() {
        let tri = [[Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)]];
        let mesh = TriangleMesh::from_triangles(&tri, &HygieneConfig::default()).unwrap();
        let text = to_ply(&mesh, &[[255, 0, 0]]).unwrap();
        let body: Vec<&str> = text.split("end_header\n").nth(1).unwrap().lines().collect();
        assert_eq!(body.len(), 4);
        assert!(body[3].starts_with("3 "));
        assert!(body[3].ends_with("255 0 0"));
    }

    #[test]
    fn cube_speed_palette() {
        let mesh = TriangleMesh::from_triangles(&fixtures::unit_cube(), &HygieneConfig::default()).unwrap();
        let speed = speed_map(&mesh, &SpeedMapConfig::default(), 0.0).unwrap();
        let colors = speed_map_colors(&speed);
        let count = |c: Rgb| colors.iter().filter(|&&x| x == c).count();
        assert_eq!(count(HORIZONTAL_RGB), 2);
        assert_eq!(count(UNDERCUT_RGB), 2);
        for (i, c) in colors.iter().enumerate() {
            let nz = mesh.normal(i).z;
            if nz > 0.5 {
                assert_eq!(*c, HORIZONTAL_RGB);
            } else if nz < -0.5 {
                assert_eq!(*c, UNDERCUT_RGB);
            }
        }
    }

    #[test]
    fn round_trip() {
        let mesh = TriangleMesh::from_triangles(&fixtures::unit_cube(), &HygieneConfig::default()).unwrap();
        let colors: Vec<Rgb> = (0..mesh.facet_count()).map(|i| [i as u8, 255 - i as u8, 7]).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.ply");
        write_colored_ply(&mesh, &colors, &path).unwrap();
        let back = read_colored_ply(&path).unwrap();
        assert_eq!(back.colors, colors);
        assert_eq!(back.faces, mesh.facets());
        assert_eq!(back.vertices, mesh.vertices());
    }

    #[test]
    fn transition_gradient_endpoints() {
        let cfg = SpeedMapConfig::default();
        let lo = cfg.delta_draft() + cfg.qv;
        let hi = 1.0 - cfg.qh;
        assert_eq!(class_color(ContactClass::Transition, lo, &cfg), [0, 0, 255]);
        assert_eq!(class_color(ContactClass::Transition, hi, &cfg), [255, 0, 0]);
    }

    #[test]
    fn chi_ramp() {
        let map = ChiMap {
            theta: 0.0,
            chi: vec![Some(0.0), Some(std::f64::consts::FRAC_PI_2), None],
        };
        assert_eq!(chi_colors(&map), vec![[255; 3], [0; 3], INVALID_CHI_RGB]);
    }

    #[test]
    fn wrong_color_count_and_bad_dir() {
        let mesh = TriangleMesh::from_triangles(&fixtures::unit_cube(), &HygieneConfig::default()).unwrap();
        assert!(matches!(
            to_ply(&mesh, &[]),
            Err(ExportError::ColorCountMismatch { .. })
        ));
        let colors = vec![[0; 3]; mesh.facet_count()];
        let err = write_colored_ply(&mesh, &colors, "/nonexistent-dir/x.ply").unwrap_err();
        assert!(matches!(err, ExportError::UnwritableOutput { .. }));
    }

    #[test]
    fn feature_hues_differ() {
        let c: Vec<Rgb> = (0..8).map(feature_color).collect();
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                assert_ne!(c[i], c[j]);
            }
        }
    }
}
