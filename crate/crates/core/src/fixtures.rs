//! Analytic test geometries.
//!
//! Each generator returns a triangle soup with outward winding. The labelled
//! fixtures also carry the face each triangle was generated from, which is
//! the ground truth their classification is checked against. Facet order is
//! preserved by [`TriangleMesh::from_triangles`](crate::TriangleMesh::from_triangles)
//! as long as nothing is dropped, so `parts[i]` describes facet `i`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Point3, Rotation3, Vector3};

use crate::mesh::Triangle;

/// A triangle soup with the generating face of every triangle.
#[derive(Debug, Clone)]
pub struct LabeledSoup {
    pub triangles: Vec<Triangle>,
    pub parts: Vec<usize>,
    pub part_names: &'static [&'static str],
}

impl LabeledSoup {
    pub fn part_name(&self, facet: usize) -> &'static str {
        self.part_names[self.parts[facet]]
    }

    pub fn rotated_z(&self, angle: f64, translation: Vector3<f64>) -> Self {
        Self {
            triangles: rotate_z(&self.triangles, angle, translation),
            ..self.clone()
        }
    }
}

fn push_oriented(out: &mut Vec<Triangle>, tri: Triangle, outward: Vector3<f64>) {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    if n.dot(&outward) < 0.0 {
        out.push([tri[0], tri[2], tri[1]]);
    } else {
        out.push(tri);
    }
}

fn push_quad(out: &mut Vec<Triangle>, q: [Point3<f64>; 4], outward: Vector3<f64>) {
    push_oriented(out, [q[0], q[1], q[2]], outward);
    push_oriented(out, [q[0], q[2], q[3]], outward);
}

/// `cells + 1` evenly spaced values with exact endpoints.
fn lin(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    (0..=cells)
        .map(|i| {
            if i == cells {
                hi
            } else {
                lo + (hi - lo) * i as f64 / cells as f64
            }
        })
        .collect()
}

fn lerp(a: Point3<f64>, b: Point3<f64>, t: f64) -> Point3<f64> {
    a + (b - a) * t
}

/// Rigid rotation about +Z followed by a translation.
pub fn rotate_z(triangles: &[Triangle], angle: f64, translation: Vector3<f64>) -> Vec<Triangle> {
    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), angle);
    triangles.iter().map(|t| t.map(|p| rot * p + translation)).collect()
}

/// Axis-aligned unit cube `[0, 1]³`, 12 facets.
pub fn unit_cube() -> Vec<Triangle> {
    let c = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
    let faces: [([Point3<f64>; 4], Vector3<f64>); 6] = [
        (
            [c(0., 0., 1.), c(1., 0., 1.), c(1., 1., 1.), c(0., 1., 1.)],
            Vector3::z(),
        ),
        (
            [c(0., 0., 0.), c(0., 1., 0.), c(1., 1., 0.), c(1., 0., 0.)],
            -Vector3::z(),
        ),
        (
            [c(1., 0., 0.), c(1., 1., 0.), c(1., 1., 1.), c(1., 0., 1.)],
            Vector3::x(),
        ),
        (
            [c(0., 0., 0.), c(0., 0., 1.), c(0., 1., 1.), c(0., 1., 0.)],
            -Vector3::x(),
        ),
        (
            [c(0., 1., 0.), c(0., 1., 1.), c(1., 1., 1.), c(1., 1., 0.)],
            Vector3::y(),
        ),
        (
            [c(0., 0., 0.), c(1., 0., 0.), c(1., 0., 1.), c(0., 0., 1.)],
            -Vector3::y(),
        ),
    ];
    let mut out = Vec::with_capacity(12);
    for (q, n) in faces {
        push_quad(&mut out, q, n);
    }
    out
}

/// Zero-thickness square plate in the `z = 0` plane: an upward grid of
/// `cells x cells` quads over a downward face of two triangles. The first
/// `2 * cells²` facets face up.
pub fn flat_plate(size: f64, cells: usize) -> Vec<Triangle> {
    let xs = lin(0.0, size, cells);
    let mut out = Vec::new();
    for i in 0..cells {
        for j in 0..cells {
            let p = |a: usize, b: usize| Point3::new(xs[a], xs[b], 0.0);
            push_quad(
                &mut out,
                [p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1)],
                Vector3::z(),
            );
        }
    }
    // Opposite diagonal to the top grid so no interior edge is shared.
    let p = |x: f64, y: f64| Point3::new(x, y, 0.0);
    push_oriented(&mut out, [p(0.0, 0.0), p(size, 0.0), p(0.0, size)], -Vector3::z());
    push_oriented(&mut out, [p(size, 0.0), p(size, size), p(0.0, size)], -Vector3::z());
    out
}

/// Upper hemisphere of `radius` centred at the origin, open at the equator.
///
/// `rings` latitude bands of equal polar-angle width; the first band is a
/// fan of `segments` triangles around the pole, the others are planar
/// trapezoids split into two triangles. Facet count: `segments * (2 * rings - 1)`.
pub fn hemisphere(radius: f64, rings: usize, segments: usize) -> Vec<Triangle> {
    let vertex = |ring: usize, seg: usize| {
        let polar = FRAC_PI_2 * ring as f64 / rings as f64;
        let azimuth = 2.0 * PI * (seg % segments) as f64 / segments as f64;
        Point3::new(
            radius * polar.sin() * azimuth.cos(),
            radius * polar.sin() * azimuth.sin(),
            radius * polar.cos(),
        )
    };
    let pole = Point3::new(0.0, 0.0, radius);
    let mut out = Vec::with_capacity(segments * (2 * rings - 1));
    for j in 0..segments {
        let tri = [pole, vertex(1, j), vertex(1, j + 1)];
        let c = (tri[0].coords + tri[1].coords + tri[2].coords) / 3.0;
        push_oriented(&mut out, tri, c);
    }
    for i in 1..rings {
        for j in 0..segments {
            let q = [vertex(i, j), vertex(i + 1, j), vertex(i + 1, j + 1), vertex(i, j + 1)];
            let c = q.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords);
            push_quad(&mut out, q, c);
        }
    }
    out
}

/// Part index, top edge, bottom edge, outward normal hint.
type WallStrip = (usize, Vec<Point3<f64>>, Vec<Point3<f64>>, Vector3<f64>);

/// Rectangular drafted pocket sunk into a flat die face.
///
/// The surface is open: a flat top face with a rectangular opening, four walls
/// drafted `draft` radians off vertical, and a flat floor `depth` below the top.
/// The top face sits at `z = 0`.
#[derive(Debug, Clone, Copy)]
pub struct DraftedPocket {
    /// Outer extent of the top face along X and Y, mm.
    pub outer: [f64; 2],
    /// Opening of the pocket at the top face, mm.
    pub opening: [f64; 2],
    pub depth: f64,
    /// Wall draft angle measured from vertical, radians.
    pub draft: f64,
    /// Cells along each side of the opening (also used for the floor).
    pub cells: usize,
    /// Cells across the rim between the opening and the outer edge.
    pub rim_cells: usize,
    /// Cells down each wall.
    pub depth_cells: usize,
}

impl DraftedPocket {
    pub const PARTS: &'static [&'static str] = &["top", "floor", "wall+x", "wall-x", "wall+y", "wall-y"];

    /// 120 x 100 mm die face, 60 x 40 x 20 mm pocket, 5° draft, ~1k facets.
    pub fn standard() -> Self {
        Self {
            outer: [120.0, 100.0],
            opening: [60.0, 40.0],
            depth: 20.0,
            draft: 5f64.to_radians(),
            cells: 10,
            rim_cells: 4,
            depth_cells: 5,
        }
    }

    /// Same geometry scaled up in tessellation to roughly 10k facets.
    pub fn dense() -> Self {
        Self {
            cells: 32,
            rim_cells: 12,
            depth_cells: 16,
            ..Self::standard()
        }
    }

    fn inset(&self) -> f64 {
        self.depth * self.draft.tan()
    }

    /// Exact surface area of the analytic faces.
    pub fn analytic_area(&self) -> f64 {
        let [l, w] = self.outer;
        let [a, b] = self.opening;
        let s = self.inset();
        let slant = self.depth / self.draft.cos();
        let top = l * w - a * b;
        let floor = (a - 2.0 * s) * (b - 2.0 * s);
        let walls = 2.0 * (a - s) * slant + 2.0 * (b - s) * slant;
        top + floor + walls
    }

    pub fn analytic_part_area(&self, part: &str) -> f64 {
        let [l, w] = self.outer;
        let [a, b] = self.opening;
        let s = self.inset();
        let slant = self.depth / self.draft.cos();
        match part {
            "top" => l * w - a * b,
            "floor" => (a - 2.0 * s) * (b - 2.0 * s),
            "wall+x" | "wall-x" => (b - s) * slant,
            "wall+y" | "wall-y" => (a - s) * slant,
            _ => panic!("unknown part {part}"),
        }
    }

    pub fn build(&self) -> LabeledSoup {
        let [l, w] = self.outer;
        let [a, b] = self.opening;
        let (ha, hb) = (a / 2.0, b / 2.0);
        let s = self.inset();
        let h = self.depth;
        let n = self.cells;

        let breaks = |outer: f64, open: f64| {
            let mut v = lin(-outer / 2.0, -open / 2.0, self.rim_cells);
            v.pop();
            v.extend(lin(-open / 2.0, open / 2.0, n));
            v.pop();
            v.extend(lin(open / 2.0, outer / 2.0, self.rim_cells));
            v
        };
        let xs = breaks(l, a);
        let ys = breaks(w, b);

        let mut tris = Vec::new();
        let mut parts = Vec::new();
        let mut emit = |tris: &mut Vec<Triangle>, part: usize, q: [Point3<f64>; 4], outward: Vector3<f64>| {
            push_quad(tris, q, outward);
            parts.extend([part, part]);
        };

        // Top face, skipping cells inside the opening.
        for i in 0..xs.len() - 1 {
            for j in 0..ys.len() - 1 {
                let (cx, cy) = ((xs[i] + xs[i + 1]) / 2.0, (ys[j] + ys[j + 1]) / 2.0);
                if cx.abs() < ha && cy.abs() < hb {
                    continue;
                }
                let p = |u: usize, v: usize| Point3::new(xs[u], ys[v], 0.0);
                emit(
                    &mut tris,
                    0,
                    [p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1)],
                    Vector3::z(),
                );
            }
        }

        // Floor.
        let fx = lin(-(ha - s), ha - s, n);
        let fy = lin(-(hb - s), hb - s, n);
        for i in 0..n {
            for j in 0..n {
                let p = |u: usize, v: usize| Point3::new(fx[u], fy[v], -h);
                emit(
                    &mut tris,
                    1,
                    [p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1)],
                    Vector3::z(),
                );
            }
        }

        // Walls: top edge on the opening, bottom edge on the floor rim.
        let (c, sn) = (self.draft.cos(), self.draft.sin());
        let tx = lin(-ha, ha, n);
        let ty = lin(-hb, hb, n);
        let walls: [WallStrip; 4] = [
            (
                2,
                ty.iter().map(|&y| Point3::new(ha, y, 0.0)).collect(),
                fy.iter().map(|&y| Point3::new(ha - s, y, -h)).collect(),
                Vector3::new(-c, 0.0, sn),
            ),
            (
                3,
                ty.iter().map(|&y| Point3::new(-ha, y, 0.0)).collect(),
                fy.iter().map(|&y| Point3::new(-(ha - s), y, -h)).collect(),
                Vector3::new(c, 0.0, sn),
            ),
            (
                4,
                tx.iter().map(|&x| Point3::new(x, hb, 0.0)).collect(),
                fx.iter().map(|&x| Point3::new(x, hb - s, -h)).collect(),
                Vector3::new(0.0, -c, sn),
            ),
            (
                5,
                tx.iter().map(|&x| Point3::new(x, -hb, 0.0)).collect(),
                fx.iter().map(|&x| Point3::new(x, -(hb - s), -h)).collect(),
                Vector3::new(0.0, c, sn),
            ),
        ];
        let m = self.depth_cells;
        for (part, top, bottom, outward) in walls {
            let grid = |u: usize, t: usize| {
                if t == m {
                    bottom[u]
                } else {
                    lerp(top[u], bottom[u], t as f64 / m as f64)
                }
            };
            for u in 0..n {
                for t in 0..m {
                    emit(
                        &mut tris,
                        part,
                        [grid(u, t), grid(u + 1, t), grid(u + 1, t + 1), grid(u, t + 1)],
                        outward,
                    );
                }
            }
        }

        LabeledSoup {
            triangles: tris,
            parts,
            part_names: Self::PARTS,
        }
    }
}

/// Closed triangular prism with a gabled roof.
///
/// Unrotated, the ridge runs along Y at `x = 0`, so the slope normals project
/// onto ±X. Rotating by `azimuth` about Z moves the projection direction to
/// `azimuth` (mod π).
#[derive(Debug, Clone, Copy)]
pub struct GabledRoof {
    /// Ridge length, mm.
    pub length: f64,
    /// Eave-to-eave width, mm.
    pub width: f64,
    /// Roof slope from horizontal, radians.
    pub slope: f64,
    pub azimuth: f64,
    pub translation: Vector3<f64>,
    pub cells_along: usize,
    pub cells_across: usize,
}

impl GabledRoof {
    pub const PARTS: &'static [&'static str] = &["slope-left", "slope-right", "gable-front", "gable-back", "bottom"];

    /// 80 x 40 mm prism with 20° slopes.
    pub fn standard(azimuth: f64) -> Self {
        Self {
            length: 80.0,
            width: 40.0,
            slope: 20f64.to_radians(),
            azimuth,
            translation: Vector3::zeros(),
            cells_along: 16,
            cells_across: 6,
        }
    }

    pub fn build(&self) -> LabeledSoup {
        let hw = self.width / 2.0;
        let hl = self.length / 2.0;
        let tan = self.slope.tan();
        let (sn, c) = (self.slope.sin(), self.slope.cos());
        let ys = lin(-hl, hl, self.cells_along);
        let xl = lin(-hw, 0.0, self.cells_across);
        let xr = lin(0.0, hw, self.cells_across);
        let zl = |x: f64| (x + hw) * tan;
        let zr = |x: f64| (hw - x) * tan;

        let mut tris = Vec::new();
        let mut parts = Vec::new();
        for i in 0..self.cells_across {
            for j in 0..self.cells_along {
                let p = |u: usize, v: usize| Point3::new(xl[u], ys[v], zl(xl[u]));
                push_quad(
                    &mut tris,
                    [p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1)],
                    Vector3::new(-sn, 0.0, c),
                );
                parts.extend([0, 0]);
            }
        }
        for i in 0..self.cells_across {
            for j in 0..self.cells_along {
                let p = |u: usize, v: usize| Point3::new(xr[u], ys[v], zr(xr[u]));
                push_quad(
                    &mut tris,
                    [p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1)],
                    Vector3::new(sn, 0.0, c),
                );
                parts.extend([1, 1]);
            }
        }
        for (part, y, outward) in [(2, -hl, -Vector3::y()), (3, hl, Vector3::y())] {
            let mid = Point3::new(0.0, y, 0.0);
            let mut chain: Vec<Point3<f64>> = xl.iter().map(|&x| Point3::new(x, y, zl(x))).collect();
            chain.extend(xr.iter().skip(1).map(|&x| Point3::new(x, y, zr(x))));
            for w in chain.windows(2) {
                push_oriented(&mut tris, [mid, w[0], w[1]], outward);
                parts.push(part);
            }
        }
        let bx = [-hw, 0.0, hw];
        for i in 0..2 {
            for j in 0..self.cells_along {
                let p = |u: usize, v: usize| Point3::new(bx[u], ys[v], 0.0);
                push_quad(
                    &mut tris,
                    [p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1)],
                    -Vector3::z(),
                );
                parts.extend([4, 4]);
            }
        }

        LabeledSoup {
            triangles: rotate_z(&tris, self.azimuth, self.translation),
            parts,
            part_names: Self::PARTS,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{HygieneConfig, TriangleMesh};

    fn closed(soup: &[Triangle]) -> bool {
        let mesh = TriangleMesh::from_triangles(soup, &HygieneConfig::default()).unwrap();
        (0..mesh.facet_count()).all(|f| mesh.neighbors(f).count() == 3)
    }

    #[test]
    fn closed_fixtures_are_watertight() {
        assert!(closed(&unit_cube()));
        assert!(closed(&flat_plate(10.0, 1)));
        assert!(closed(&GabledRoof::standard(0.3).build().triangles));
    }

    #[test]
    fn pocket_is_connected_and_open_only_at_outer_rim() {
        let pocket = DraftedPocket::standard();
        let soup = pocket.build();
        assert!(soup.triangles.len() >= 1000);
        let mesh = TriangleMesh::from_triangles(&soup.triangles, &HygieneConfig::default()).unwrap();
        assert_eq!(mesh.facet_count(), soup.triangles.len());
        let border_edges: usize = mesh
            .adjacency()
            .iter()
            .map(|a| a.iter().filter(|n| n.is_none()).count())
            .sum();
        let rim = 2 * (2 * pocket.rim_cells + pocket.cells) * 2;
        assert_eq!(border_edges, rim);
        assert!((mesh.total_area() - pocket.analytic_area()).abs() < 1e-9 * pocket.analytic_area());
    }

    #[test]
    fn hemisphere_facet_count_and_orientation() {
        let soup = hemisphere(10.0, 5, 12);
        assert_eq!(soup.len(), 12 * 9);
        let mesh = TriangleMesh::from_triangles(&soup, &HygieneConfig::default()).unwrap();
        for f in 0..mesh.facet_count() {
            assert!(mesh.normal(f).dot(&mesh.centroid(f).coords) > 0.0);
        }
    }
}
