//! STL reading and writing, binary and ASCII.
//!
//! Binary layout: 80-byte header, little-endian `u32` facet count, then one
//! 50-byte record per facet (normal, three corners as `f32` triples, `u16`
//! attribute). ASCII is the usual `solid / facet normal / outer loop / vertex`
//! grammar, parsed token by token so line breaks and indentation don't matter.
//!
//! Stored normals are read but never used; [`TriangleMesh`] recomputes them.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use super::{HygieneConfig, MeshError, Triangle, TriangleMesh};

const HEADER_LEN: usize = 80;
const RECORD_LEN: usize = 50;

/// Reads an STL file of either encoding and builds the mesh.
pub fn load_stl(path: impl AsRef<Path>, hygiene: &HygieneConfig) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| MeshError::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })?;
    let triangles = parse_stl(&bytes)?;
    TriangleMesh::from_triangles(&triangles, hygiene)
}

/// Decodes STL bytes into a triangle soup.
///
/// Input starting with the `solid` keyword is tried as ASCII first; if that
/// fails the binary decoder gets a chance, since plenty of binary exporters
/// also start their header with `solid`.
pub fn parse_stl(bytes: &[u8]) -> Result<Vec<Triangle>, MeshError> {
    if looks_ascii(bytes) {
        match parse_ascii(bytes) {
            Ok(tris) => Ok(tris),
            Err(ascii_err) => match parse_binary(bytes) {
                Ok(tris) => Ok(tris),
                Err(bin_err) => Err(if std::str::from_utf8(bytes).is_ok() {
                    ascii_err
                } else {
                    bin_err
                }),
            },
        }
    } else {
        parse_binary(bytes)
    }
}

fn looks_ascii(bytes: &[u8]) -> bool {
    let start = bytes
        .iter()
        .position(|b| !b.is_ascii_whitespace())
        .unwrap_or(bytes.len());
    bytes[start..].starts_with(b"solid")
}

pub fn parse_binary(bytes: &[u8]) -> Result<Vec<Triangle>, MeshError> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(MeshError::MalformedStl(format!(
            "truncated header: {} bytes, need at least {}",
            bytes.len(),
            HEADER_LEN + 4
        )));
    }
    let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN + 4..];
    let expected = count
        .checked_mul(RECORD_LEN)
        .ok_or_else(|| MeshError::MalformedStl(format!("facet count {count} overflows")))?;
    if body.len() < expected {
        return Err(MeshError::MalformedStl(format!(
            "truncated facet record {}: header declares {count} facets but only {} bytes of records follow",
            body.len() / RECORD_LEN,
            body.len()
        )));
    }
    if body.len() > expected {
        return Err(MeshError::MalformedStl(format!(
            "facet count mismatch: header declares {count} facets, file holds {} record bytes",
            body.len()
        )));
    }

    let read_f32 = |rec: &[u8], i: usize| f32::from_le_bytes(rec[i * 4..i * 4 + 4].try_into().unwrap()) as f64;
    Ok(body
        .chunks_exact(RECORD_LEN)
        .map(|rec| {
            let corner = |k: usize| {
                Point3::new(
                    read_f32(rec, 3 + 3 * k),
                    read_f32(rec, 4 + 3 * k),
                    read_f32(rec, 5 + 3 * k),
                )
            };
            [corner(0), corner(1), corner(2)]
        })
        .collect())
}

pub fn parse_ascii(bytes: &[u8]) -> Result<Vec<Triangle>, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| MeshError::MalformedStl(format!("not UTF-8 text: {e}")))?;
    let mut tokens = Tokens {
        inner: text.split_ascii_whitespace(),
        consumed: 0,
    };
    let mut triangles = Vec::new();

    tokens.expect("solid")?;
    loop {
        // Solid name: any tokens up to the first `facet` or `endsolid`.
        let mut tok = tokens.next_or_eof("facet or endsolid")?;
        while tok != "facet" && tok != "endsolid" {
            tok = tokens.next_or_eof("facet or endsolid")?;
        }
        while tok == "facet" {
            tokens.expect("normal")?;
            for _ in 0..3 {
                tokens.number()?;
            }
            tokens.expect("outer")?;
            tokens.expect("loop")?;
            let mut corners = [Point3::origin(); 3];
            for c in corners.iter_mut() {
                tokens.expect("vertex")?;
                *c = Point3::new(tokens.number()?, tokens.number()?, tokens.number()?);
            }
            tokens.expect("endloop")?;
            tokens.expect("endfacet")?;
            triangles.push(corners);
            tok = tokens.next_or_eof("facet or endsolid")?;
        }
        if tok != "endsolid" {
            return Err(tokens.unexpected("facet or endsolid", tok));
        }
        // Optional trailing name, then either EOF or another solid.
        let mut rest = tokens.inner.clone();
        match rest.next() {
            None => break,
            Some("solid") => {
                tokens.next_or_eof("solid")?;
            }
            Some(_) => {
                tokens.next_or_eof("solid name")?;
                match tokens.inner.clone().next() {
                    None => break,
                    Some("solid") => {
                        tokens.next_or_eof("solid")?;
                    }
                    Some(other) => return Err(tokens.unexpected("end of file or solid", other)),
                }
            }
        }
    }
    Ok(triangles)
}

struct Tokens<'a> {
    inner: std::str::SplitAsciiWhitespace<'a>,
    consumed: usize,
}

impl<'a> Tokens<'a> {
    fn next_or_eof(&mut self, wanted: &str) -> Result<&'a str, MeshError> {
        self.consumed += 1;
        self.inner
            .next()
            .ok_or_else(|| MeshError::MalformedStl(format!("unexpected end of file, expected {wanted}")))
    }

    fn expect(&mut self, keyword: &str) -> Result<(), MeshError> {
        let tok = self.next_or_eof(keyword)?;
        if tok == keyword {
            Ok(())
        } else {
            Err(self.unexpected(keyword, tok))
        }
    }

    fn number(&mut self) -> Result<f64, MeshError> {
        let tok = self.next_or_eof("number")?;
        // STL coordinates are single precision; parsing as f32 keeps ASCII and
        // binary encodings of the same model bit-identical.
        tok.parse::<f32>()
            .map(f64::from)
            .map_err(|_| self.unexpected("number", tok))
    }

    fn unexpected(&self, wanted: &str, got: &str) -> MeshError {
        MeshError::MalformedStl(format!("token {}: expected {wanted}, found {got:?}", self.consumed))
    }
}

/// Encodes triangles as binary STL with freshly computed normals.
pub fn to_binary(triangles: &[Triangle]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + RECORD_LEN * triangles.len());
    let mut header = [b' '; HEADER_LEN];
    header[..12].copy_from_slice(b"hsmdie model");
    out.extend_from_slice(&header);
    out.extend_from_slice(&(triangles.len() as u32).to_le_bytes());
    for tri in triangles {
        let mut put = |v: f64| out.extend_from_slice(&(v as f32).to_le_bytes());
        file_normal(tri).into_iter().for_each(&mut put);
        for p in tri {
            put(p.x);
            put(p.y);
            put(p.z);
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

/// Encodes triangles as ASCII STL. Coordinates are written at single
/// precision with round-trip formatting.
pub fn to_ascii(name: &str, triangles: &[Triangle]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "solid {name}");
    for tri in triangles {
        let n = file_normal(tri);
        let _ = writeln!(
            s,
            "  facet normal {:e} {:e} {:e}",
            n[0] as f32, n[1] as f32, n[2] as f32
        );
        s.push_str("    outer loop\n");
        for p in tri {
            let _ = writeln!(s, "      vertex {:e} {:e} {:e}", p.x as f32, p.y as f32, p.z as f32);
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    let _ = writeln!(s, "endsolid {name}");
    s
}

pub fn write_binary(path: impl AsRef<Path>, triangles: &[Triangle]) -> std::io::Result<()> {
    std::fs::File::create(path)?.write_all(&to_binary(triangles))
}

pub fn write_ascii(path: impl AsRef<Path>, name: &str, triangles: &[Triangle]) -> std::io::Result<()> {
    std::fs::write(path, to_ascii(name, triangles))
}

fn file_normal(tri: &Triangle) -> [f64; 3] {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let len = n.norm();
    if len > 0.0 {
        [n.x / len, n.y / len, n.z / len]
    } else {
        [0.0; 3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn cube_f32() -> Vec<Triangle> {
        fixtures::unit_cube()
    }

    #[test]
    fn binary_cube_welds_to_eight_vertices() {
        let bytes = to_binary(&cube_f32());
        assert_eq!(bytes.len(), 84 + 12 * 50);
        let mesh = TriangleMesh::from_triangles(&parse_stl(&bytes).unwrap(), &HygieneConfig::default()).unwrap();
        assert_eq!(mesh.facet_count(), 12);
        assert_eq!(mesh.vertices().len(), 8);
        for f in 0..12 {
            assert_eq!(mesh.neighbors(f).count(), 3);
        }
        assert_eq!(mesh.diagnostics().non_manifold_edges, 0);
    }

    #[test]
    fn ascii_and_binary_decode_identically() {
        let soup = fixtures::hemisphere(3.7, 4, 9);
        let a = parse_stl(to_ascii("hemi", &soup).as_bytes()).unwrap();
        let b = parse_stl(&to_binary(&soup)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ascii_single_triangle_whitespace_insensitive() {
        let text = "solid t\nfacet normal 0 0 0\n outer loop\n\tvertex 0 0 0\nvertex 1 0 0 vertex 0 1 0\n endloop endfacet\nendsolid t\n";
        let tris = parse_stl(text.as_bytes()).unwrap();
        assert_eq!(tris.len(), 1);
        let mesh = TriangleMesh::from_triangles(&tris, &HygieneConfig::default()).unwrap();
        assert_eq!(mesh.facet_count(), 1);
        assert_eq!(mesh.neighbors(0).count(), 0);
        assert_eq!(mesh.normal(0), nalgebra::Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn ascii_without_solid_name_and_with_multiple_solids() {
        let one =
            "solid\nfacet normal 0 0 1 outer loop vertex 0 0 0 vertex 1 0 0 vertex 0 1 0 endloop endfacet\nendsolid\n";
        let two = format!("{one}solid b\nfacet normal 0 0 1 outer loop vertex 5 0 0 vertex 6 0 0 vertex 5 1 0 endloop endfacet\nendsolid b\n");
        assert_eq!(parse_stl(one.as_bytes()).unwrap().len(), 1);
        assert_eq!(parse_stl(two.as_bytes()).unwrap().len(), 2);
    }

    #[test]
    fn ascii_errors_are_malformed() {
        for bad in [
            "solid x\nfacet normal 0 0 1 outer loop vertex 0 0 0 vertex 1 0 0 endloop endfacet endsolid",
            "solid x\nfacet normal 0 0 1 outer loop vertex 0 0 zero vertex 1 0 0 vertex 0 1 0 endloop endfacet endsolid",
            "solid x\nfacet normal 0 0 1 outer loop vertex 0 0 0 vertex 1 0 0 vertex 0 1 0 endloop endfacet",
        ] {
            assert!(matches!(parse_stl(bad.as_bytes()), Err(MeshError::MalformedStl(_))), "{bad}");
        }
    }

    #[test]
    fn truncated_binary_is_malformed() {
        let bytes = to_binary(&cube_f32());
        let err = parse_stl(&bytes[..bytes.len() - 7]).unwrap_err();
        assert!(
            matches!(err, MeshError::MalformedStl(ref m) if m.contains("truncated")),
            "{err}"
        );
        let err = parse_stl(&bytes[..50]).unwrap_err();
        assert!(
            matches!(err, MeshError::MalformedStl(ref m) if m.contains("header")),
            "{err}"
        );
    }

    #[test]
    fn facet_count_mismatch_is_malformed() {
        let mut bytes = to_binary(&cube_f32());
        bytes[80..84].copy_from_slice(&11u32.to_le_bytes());
        let err = parse_stl(&bytes).unwrap_err();
        assert!(
            matches!(err, MeshError::MalformedStl(ref m) if m.contains("mismatch")),
            "{err}"
        );
    }

    #[test]
    fn binary_header_starting_with_solid_still_decodes() {
        let mut bytes = to_binary(&cube_f32());
        bytes[..5].copy_from_slice(b"solid");
        assert_eq!(parse_stl(&bytes).unwrap().len(), 12);
    }

    #[test]
    fn degenerate_record_is_dropped_and_reported() {
        let mut soup = cube_f32();
        soup.push([
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.5, 0.5, 0.5),
            Point3::new(1.0, 1.0, 1.0),
        ]);
        let tris = parse_stl(&to_binary(&soup)).unwrap();
        assert_eq!(tris.len(), 13);
        let mesh = TriangleMesh::from_triangles(&tris, &HygieneConfig::default()).unwrap();
        assert_eq!(mesh.facet_count(), 12);
        assert_eq!(mesh.diagnostics().dropped_degenerate, 1);
    }

    #[test]
    fn missing_file_is_unreadable() {
        let err = load_stl("/definitely/not/here.stl", &HygieneConfig::default()).unwrap_err();
        assert!(matches!(err, MeshError::UnreadableFile { .. }));
    }
}
