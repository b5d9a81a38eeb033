//! Patch adjacency graphs, random-sequential greedy coloring and the
//! color-class split, plus the even-split baseline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scenario::{Patch, PatchSet};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NeighborhoodRule {
    /// Patches sharing an edge.
    Four,
    /// Patches sharing an edge or a corner (king moves).
    #[default]
    Eight,
}

impl NeighborhoodRule {
    fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            NeighborhoodRule::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            NeighborhoodRule::Eight => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
        }
    }

    pub fn adjacent(self, a: (u32, u32), b: (u32, u32)) -> bool {
        let dx = (a.0 as i64 - b.0 as i64).abs();
        let dy = (a.1 as i64 - b.1 as i64).abs();
        match self {
            NeighborhoodRule::Four => dx + dy == 1,
            NeighborhoodRule::Eight => dx.max(dy) == 1,
        }
    }
}

/// Undirected graph over the patches of one image. Vertex `i` is
/// `patches.patches[i]`.
#[derive(Debug, Clone)]
pub struct AdjacencyGraph {
    pub vertices: Vec<u64>,
    adjacency: Vec<Vec<usize>>,
    pub rule: NeighborhoodRule,
}

impl AdjacencyGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v)` vertex-index pairs with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Builds a graph from explicit vertex-index edges. Used for tests and
    /// for non-grid inputs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v || adjacency[u].contains(&v) {
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for ns in &mut adjacency {
            ns.sort_unstable();
        }
        Self {
            vertices: (0..n as u64).collect(),
            adjacency,
            rule: NeighborhoodRule::Eight,
        }
    }
}

pub fn build_graph(patches: &PatchSet, rule: NeighborhoodRule) -> Result<AdjacencyGraph> {
    if patches.is_empty() {
        return Err(Error::EmptyPatchSet);
    }
    let w = patches.grid_width;
    let h = patches.grid_height;
    let mut grid = vec![usize::MAX; w * h];
    for (i, p) in patches.patches.iter().enumerate() {
        grid[p.y as usize * w + p.x as usize] = i;
    }
    let adjacency = patches
        .patches
        .iter()
        .map(|p| {
            let mut ns: Vec<usize> = rule
                .offsets()
                .iter()
                .filter_map(|&(dx, dy)| {
                    let x = p.x as i64 + dx;
                    let y = p.y as i64 + dy;
                    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                        return None;
                    }
                    let j = grid[y as usize * w + x as usize];
                    (j != usize::MAX).then_some(j)
                })
                .collect();
            ns.sort_unstable();
            ns
        })
        .collect();
    Ok(AdjacencyGraph {
        vertices: patches.patches.iter().map(|p| p.patch_id).collect(),
        adjacency,
        rule,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringResult {
    pub color_of: BTreeMap<u64, usize>,
    /// Number of colors used, i.e. the fragment count.
    pub chi: usize,
}

impl ColoringResult {
    /// Colors aligned with the graph's vertex order.
    pub fn colors(&self, graph: &AdjacencyGraph) -> Vec<usize> {
        graph.vertices.iter().map(|id| self.color_of[id]).collect()
    }

    pub fn is_proper(&self, graph: &AdjacencyGraph) -> bool {
        let colors = self.colors(graph);
        graph.edges().all(|(u, v)| colors[u] != colors[v])
    }
}

/// Random-sequential greedy coloring: vertices are visited in a seeded
/// Fisher-Yates permutation and each takes the smallest color not used by an
/// already-colored neighbor.
pub fn greedy_color_rs(graph: &AdjacencyGraph, seed: u64) -> ColoringResult {
    let mut order: Vec<usize> = (0..graph.len()).collect();
    seed::shuffle(&mut order, &mut seed::rng(seed));
    greedy_color_ordered(graph, &order)
}

/// Greedy smallest-available coloring in an explicit vertex order.
pub fn greedy_color_ordered(graph: &AdjacencyGraph, order: &[usize]) -> ColoringResult {
    let n = graph.len();
    assert_eq!(order.len(), n, "order must list every vertex once");
    let mut color = vec![usize::MAX; n];
    let mut taken: Vec<bool> = Vec::new();
    let mut chi = 0;
    for &v in order {
        taken.clear();
        taken.resize(graph.degree(v) + 1, false);
        for &u in graph.neighbors(v) {
            let c = color[u];
            if c < taken.len() {
                taken[c] = true;
            }
        }
        let c = taken.iter().position(|&t| !t).unwrap();
        color[v] = c;
        chi = chi.max(c + 1);
    }
    ColoringResult {
        color_of: graph.vertices.iter().copied().zip(color).collect(),
        chi,
    }
}

/// One split sub-dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub image_id: String,
    pub fragment_index: usize,
    /// Sorted by patch id.
    pub patches: Vec<Patch>,
    pub size_bytes: u64,
}

impl Fragment {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
}

fn assemble(set: &PatchSet, groups: Vec<Vec<Patch>>) -> Vec<Fragment> {
    let bpp = set.bytes_per_patch();
    groups
        .into_iter()
        .enumerate()
        .map(|(k, mut patches)| {
            patches.sort_by_key(|p| p.patch_id);
            Fragment {
                image_id: set.image_id.clone(),
                fragment_index: k,
                size_bytes: patches.len() as u64 * bpp,
                patches,
            }
        })
        .collect()
}

/// Fragment `k` holds exactly the patches of color `k`.
pub fn split_by_color(patches: &PatchSet, coloring: &ColoringResult) -> Result<Vec<Fragment>> {
    let mut groups = vec![Vec::new(); coloring.chi];
    for p in &patches.patches {
        let &c = coloring
            .color_of
            .get(&p.patch_id)
            .ok_or(Error::IncompleteColoring(p.patch_id))?;
        if c >= coloring.chi {
            return Err(Error::IncompleteColoring(p.patch_id));
        }
        groups[c].push(*p);
    }
    Ok(assemble(patches, groups))
}

/// Even split: seeded shuffle, then round-robin into `k` fragments.
pub fn baseline_even_split(patches: &PatchSet, k: usize, seed: u64) -> Result<Vec<Fragment>> {
    if k == 0 || k > patches.len() {
        return Err(Error::KTooLarge {
            k,
            patches: patches.len(),
        });
    }
    let mut order = patches.patches.clone();
    seed::shuffle(&mut order, &mut seed::rng(seed));
    let mut groups = vec![Vec::with_capacity(order.len() / k + 1); k];
    for (i, p) in order.into_iter().enumerate() {
        groups[i % k].push(p);
    }
    Ok(assemble(patches, groups))
}

/// Seed for coloring one image, independent of the order images are
/// processed in.
pub fn image_seed(master: u64, stage: &str, image_id: &str) -> u64 {
    seed::derive(master, &[stage, image_id])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{create_patches, BinaryMask, PatchSpec};

    fn grid(rows: &[&str]) -> PatchSet {
        create_patches(&BinaryMask::from_rows(rows).unwrap(), PatchSpec::default(), "g").unwrap()
    }

    /// Brute-force edge list by pairwise coordinate comparison.
    fn pairwise_edges(set: &PatchSet, rule: NeighborhoodRule) -> Vec<(usize, usize)> {
        let ps = &set.patches;
        let mut out = Vec::new();
        for i in 0..ps.len() {
            for j in i + 1..ps.len() {
                if rule.adjacent((ps[i].x, ps[i].y), (ps[j].x, ps[j].y)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn single_patch_graph() {
        let g = build_graph(&grid(&["1"]), NeighborhoodRule::Eight).unwrap();
        assert_eq!((g.len(), g.edge_count()), (1, 0));
        assert_eq!(greedy_color_rs(&g, 5).chi, 1);
    }

    #[test]
    fn square_four_rule() {
        let g = build_graph(&grid(&["11", "11"]), NeighborhoodRule::Four).unwrap();
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn three_by_three_eight_rule() {
        let set = grid(&["111", "111", "111"]);
        let g = build_graph(&set, NeighborhoodRule::Eight).unwrap();
        let oracle = pairwise_edges(&set, NeighborhoodRule::Eight);
        assert_eq!(oracle.len(), 20);
        assert_eq!(g.edges().collect::<Vec<_>>(), oracle);
        assert_eq!(g.degree(4), 8);
    }

    #[test]
    fn edges_match_pairwise_oracle_on_ragged_mask() {
        let set = grid(&["10110", "11011", "01110", "10001"]);
        for rule in [NeighborhoodRule::Four, NeighborhoodRule::Eight] {
            let g = build_graph(&set, rule).unwrap();
            assert_eq!(g.edges().collect::<Vec<_>>(), pairwise_edges(&set, rule));
        }
    }

    #[test]
    fn path_of_three_needs_two_colors_in_every_order() {
        // a-b-c worked by hand: b first gives b=0, a=c=1; any other order
        // colors an end vertex 0 first, then b=1 and the other end 0.
        let g = AdjacencyGraph::from_edges(3, &[(0, 1), (1, 2)]);
        let orders = [
            ([0, 1, 2], [0, 1, 0]),
            ([0, 2, 1], [0, 1, 0]),
            ([1, 0, 2], [1, 0, 1]),
            ([1, 2, 0], [1, 0, 1]),
            ([2, 0, 1], [0, 1, 0]),
            ([2, 1, 0], [0, 1, 0]),
        ];
        for (order, expected) in orders {
            let c = greedy_color_ordered(&g, &order);
            assert_eq!(c.chi, 2);
            assert_eq!(c.colors(&g), expected, "order {order:?}");
        }
        for s in 0..50 {
            let c = greedy_color_rs(&g, s);
            assert_eq!(c.chi, 2);
            assert!(c.is_proper(&g));
        }
    }

    #[test]
    fn full_grid_chi_bounds_over_seeds() {
        let set = grid(&["111", "111", "111"]);
        let g = build_graph(&set, NeighborhoodRule::Eight).unwrap();
        for s in 0..100 {
            let c = greedy_color_rs(&g, s);
            assert!(c.is_proper(&g));
            assert!((4..=9).contains(&c.chi), "chi = {}", c.chi);
        }
    }

    #[test]
    fn coloring_is_deterministic_per_seed() {
        let set = grid(&["1111", "1111", "1111"]);
        let g = build_graph(&set, NeighborhoodRule::Eight).unwrap();
        assert_eq!(greedy_color_rs(&g, 11), greedy_color_rs(&g, 11));
    }

    #[test]
    fn isolated_vertices_take_color_zero() {
        let set = grid(&["101", "000", "101"]);
        let g = build_graph(&set, NeighborhoodRule::Eight).unwrap();
        let c = greedy_color_rs(&g, 3);
        assert_eq!(c.chi, 1);
        assert!(c.color_of.values().all(|&k| k == 0));
    }

    #[test]
    fn split_single_patch() {
        let set = grid(&["1"]);
        let g = build_graph(&set, NeighborhoodRule::Eight).unwrap();
        let frags = split_by_color(&set, &greedy_color_rs(&g, 0)).unwrap();
        assert_eq!(frags.len(), 1);
        assert_eq!(frags[0].patches, set.patches);
        assert_eq!(frags[0].size_bytes, 150_528);
    }

    #[test]
    fn split_path_sizes() {
        let set = grid(&["111"]);
        let g = build_graph(&set, NeighborhoodRule::Four).unwrap();
        let c = greedy_color_rs(&g, 9);
        let mut sizes: Vec<_> = split_by_color(&set, &c).unwrap().iter().map(Fragment::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2]);
    }

    #[test]
    fn split_rejects_incomplete_coloring() {
        let set = grid(&["11"]);
        let coloring = ColoringResult {
            color_of: [(0, 0)].into_iter().collect(),
            chi: 1,
        };
        assert!(matches!(
            split_by_color(&set, &coloring),
            Err(Error::IncompleteColoring(1))
        ));
    }

    #[test]
    fn even_split_sizes() {
        let set = grid(&["11111", "11111"]);
        let sizes = |k| {
            let mut s: Vec<_> = baseline_even_split(&set, k, 4)
                .unwrap()
                .iter()
                .map(Fragment::len)
                .collect();
            s.sort();
            s
        };
        assert_eq!(sizes(5), vec![2; 5]);
        assert_eq!(sizes(3), vec![3, 3, 4]);
        assert_eq!(
            baseline_even_split(&set, 3, 4).unwrap(),
            baseline_even_split(&set, 3, 4).unwrap()
        );
        assert!(matches!(baseline_even_split(&set, 11, 4), Err(Error::KTooLarge { .. })));
        assert!(baseline_even_split(&set, 0, 4).is_err());
    }

    #[test]
    fn empty_patch_set_has_no_graph() {
        let mut set = grid(&["1"]);
        set.patches.clear();
        assert!(matches!(
            build_graph(&set, NeighborhoodRule::Eight),
            Err(Error::EmptyPatchSet)
        ));
    }
}
