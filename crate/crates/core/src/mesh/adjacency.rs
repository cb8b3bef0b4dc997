use std::collections::HashMap;

/// Neighbour across each local edge of a facet. Local edge `k` runs from
/// corner `k` to corner `(k + 1) % 3`; `None` marks a border or non-manifold edge.
pub type EdgeAdjacency = [Option<usize>; 3];

/// Links facets that share an edge (keyed by sorted vertex pair) with exactly
/// one other facet. Returns the adjacency and the number of non-manifold edges.
pub(crate) fn build_adjacency(facets: &[[usize; 3]]) -> (Vec<EdgeAdjacency>, usize) {
    let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::with_capacity(facets.len() * 3 / 2);
    for (fi, f) in facets.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edges.entry((a.min(b), a.max(b))).or_default().push((fi, k));
        }
    }

    let mut adjacency = vec![[None; 3]; facets.len()];
    let mut non_manifold = 0;
    for incident in edges.values() {
        match incident.as_slice() {
            [(fa, ka), (fb, kb)] => {
                adjacency[*fa][*ka] = Some(*fb);
                adjacency[*fb][*kb] = Some(*fa);
            }
            [_] => {}
            _ => non_manifold += 1,
        }
    }
    (adjacency, non_manifold)
}
