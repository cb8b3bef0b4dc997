use std::collections::{BTreeSet, VecDeque};

use super::TriangleMesh;

/// An edge on the rim of a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    /// Sorted vertex pair.
    pub vertices: (usize, usize),
    /// Facet inside the region owning the edge.
    pub facet: usize,
    /// Facet on the other side, `None` on a mesh border or non-manifold edge.
    pub across: Option<usize>,
}

/// A connected set of facets.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: usize,
    /// Member facets, ascending.
    pub facets: Vec<usize>,
    /// Sum of member facet areas, mm².
    pub area: f64,
    pub boundary: Vec<BoundaryEdge>,
}

impl Region {
    pub fn contains(&self, facet: usize) -> bool {
        self.facets.binary_search(&facet).is_ok()
    }
}

/// A region that was folded into a larger neighbour because it was smaller
/// than the minimum region area.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMerge {
    /// Smallest facet index of the absorbed region.
    pub first_facet: usize,
    pub facet_count: usize,
    pub area: f64,
    /// Final id of the region that absorbed it.
    pub into: usize,
}

/// Result of region growing over a per-facet labelling.
#[derive(Debug, Clone)]
pub struct Segmentation<L> {
    pub regions: Vec<Region>,
    /// Label of each region, parallel to `regions`.
    pub labels: Vec<L>,
    /// Region id of each facet.
    pub facet_region: Vec<usize>,
    pub merges: Vec<RegionMerge>,
}

impl<L: Copy> Segmentation<L> {
    pub fn region_of(&self, facet: usize) -> usize {
        self.facet_region[facet]
    }

    pub fn label(&self, region: usize) -> L {
        self.labels[region]
    }

    /// Ids of regions sharing a boundary edge with `region`.
    pub fn region_neighbors(&self, region: usize) -> BTreeSet<usize> {
        self.regions[region]
            .boundary
            .iter()
            .filter_map(|e| e.across.map(|f| self.facet_region[f]))
            .collect()
    }
}

/// Splits the facets into maximal edge-connected components of equal label.
///
/// Region ids follow the smallest member facet index. When
/// `min_region_area > 0`, regions below that area are folded into their
/// largest-area adjacent region (smallest first, ties by id) and take its label.
pub fn grow_regions<L: Copy + Eq>(mesh: &TriangleMesh, labels: &[L], min_region_area: f64) -> Segmentation<L> {
    let n = mesh.facet_count();
    assert_eq!(labels.len(), n, "one label per facet");

    const UNSET: usize = usize::MAX;
    let mut facet_region = vec![UNSET; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if facet_region[seed] != UNSET {
            continue;
        }
        let id = members.len();
        let label = labels[seed];
        facet_region[seed] = id;
        queue.push_back(seed);
        let mut facets = Vec::new();
        while let Some(f) = queue.pop_front() {
            facets.push(f);
            for nb in mesh.neighbors(f) {
                if facet_region[nb] == UNSET && labels[nb] == label {
                    facet_region[nb] = id;
                    queue.push_back(nb);
                }
            }
        }
        members.push(facets);
    }
    let mut region_labels: Vec<L> = members.iter().map(|m| labels[m[0]]).collect();

    let mut merges = Vec::new();
    if min_region_area > 0.0 {
        merge_small_regions(
            mesh,
            &mut members,
            &mut region_labels,
            &mut facet_region,
            min_region_area,
            &mut merges,
        );
    }

    // Renumber by smallest member facet.
    let mut alive: Vec<usize> = (0..members.len()).filter(|&r| !members[r].is_empty()).collect();
    for m in members.iter_mut() {
        m.sort_unstable();
    }
    alive.sort_by_key(|&r| members[r][0]);
    let mut remap = vec![UNSET; members.len()];
    for (new, &old) in alive.iter().enumerate() {
        remap[old] = new;
    }
    for r in facet_region.iter_mut() {
        *r = remap[*r];
    }

    let mut regions = Vec::with_capacity(alive.len());
    let mut out_labels = Vec::with_capacity(alive.len());
    for (id, &old) in alive.iter().enumerate() {
        let facets = std::mem::take(&mut members[old]);
        let area = facets.iter().map(|&f| mesh.area(f)).sum();
        let mut boundary = Vec::new();
        for &f in &facets {
            for (k, across) in mesh.adjacency()[f].iter().enumerate() {
                if across.is_none_or(|a| facet_region[a] != id) {
                    boundary.push(BoundaryEdge {
                        vertices: mesh.edge_key(f, k),
                        facet: f,
                        across: *across,
                    });
                }
            }
        }
        regions.push(Region {
            id,
            facets,
            area,
            boundary,
        });
        out_labels.push(region_labels[old]);
    }
    for m in merges.iter_mut() {
        m.into = facet_region[m.into];
    }

    Segmentation {
        regions,
        labels: out_labels,
        facet_region,
        merges,
    }
}

fn merge_small_regions<L: Copy>(
    mesh: &TriangleMesh,
    members: &mut [Vec<usize>],
    labels: &mut [L],
    facet_region: &mut [usize],
    min_area: f64,
    merges: &mut Vec<RegionMerge>,
) {
    let mut areas: Vec<f64> = members.iter().map(|m| m.iter().map(|&f| mesh.area(f)).sum()).collect();
    let mut isolated = vec![false; members.len()];
    loop {
        let candidate = (0..members.len())
            .filter(|&r| !members[r].is_empty() && !isolated[r] && areas[r] < min_area)
            .min_by(|&a, &b| areas[a].total_cmp(&areas[b]).then(a.cmp(&b)));
        let Some(small) = candidate else { break };

        let neighbours: BTreeSet<usize> = members[small]
            .iter()
            .flat_map(|&f| mesh.neighbors(f))
            .map(|nb| facet_region[nb])
            .filter(|&r| r != small)
            .collect();
        let Some(target) = neighbours
            .into_iter()
            .max_by(|&a, &b| areas[a].total_cmp(&areas[b]).then(b.cmp(&a)))
        else {
            isolated[small] = true;
            continue;
        };

        let moved = std::mem::take(&mut members[small]);
        for &f in &moved {
            facet_region[f] = target;
        }
        merges.push(RegionMerge {
            first_facet: *moved.iter().min().expect("regions are non-empty"),
            facet_count: moved.len(),
            area: areas[small],
            // Resolved to a final id once renumbering is done.
            into: moved[0],
        });
        areas[target] += areas[small];
        areas[small] = 0.0;
        labels[small] = labels[target];
        members[target].extend(moved);
    }
}
