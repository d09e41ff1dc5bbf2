//! Hierarchical convexity-driven cell clustering.
//!
//! Greedy agglomeration over the cell adjacency graph: each step merges the
//! edge with the lowest cost, where a merge producing a convex union is
//! charged only a size-balancing term in (0, 1] and a concave union is
//! charged its concavity plus one. Convex merges therefore always run out
//! before the first concave merge is accepted.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{convex_hull, hull_volume, CellComplex, Point3, PointCloud, PointGrid};
use crate::segment::cluster::Cluster;

/// Concavity tolerance factor: a hull-minus-volume deficit below this
/// fraction of the object's bounding-box volume counts as convex.
const TOL_CONVEX_REL: f64 = 1e-6;

/// One node of the merge hierarchy. Leaves carry the initial clusters;
/// internal nodes are appended in merge order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MergeNode {
    pub id: u32,
    /// (left, right) for internal nodes, None for leaves.
    pub children: Option<(u32, u32)>,
    /// Sorted cell indices covered by this node.
    pub cell_ids: Vec<u32>,
    pub hull_volume: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MergeStep {
    pub parent: u32,
    pub a: u32,
    pub b: u32,
    pub cost: f64,
}

/// Output of the hierarchical merge: a flat labelling at the requested part
/// count plus the full hierarchy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentationResult {
    pub cell_labels: Vec<u32>,
    /// Per-cloud-point labels; filled by the pipeline, empty out of `htc`.
    pub point_labels: Vec<u32>,
    pub tree: Vec<MergeNode>,
    pub merge_log: Vec<MergeStep>,
    pub n_parts: u32,
    pub hull_evals: u64,
}

/// Edge cost: concave unions pay their concavity plus one, convex unions a
/// size-balancing term that favours merging small clusters first.
pub fn htc_edge_cost(
    hullvol_union: f64,
    vol_union: f64,
    size_i: usize,
    size_j: usize,
    n_total: usize,
    tol_convex: f64,
) -> f64 {
    let concavity = hullvol_union - vol_union;
    if concavity > tol_convex {
        concavity + 1.0
    } else {
        let (si, sj, n) = (size_i as f64, size_j as f64, n_total as f64);
        (si * si + sj * sj) / (n * n)
    }
}

/// Label each cell by the cluster of the cloud point nearest its centroid.
/// Exact ties go to the lower cluster id.
pub fn assign_cells(
    complex: &CellComplex,
    clusters: &[Cluster],
    cloud: &PointCloud,
) -> Result<Vec<u32>> {
    if clusters.is_empty() {
        return Err(Error::InvalidParameter("no clusters given".into()));
    }
    let mut point_cluster = vec![u32::MAX; cloud.len()];
    for (ci, c) in clusters.iter().enumerate() {
        for &m in &c.member_ids {
            point_cluster[m as usize] = ci as u32;
        }
    }
    if point_cluster.contains(&u32::MAX) {
        return Err(Error::InvalidParameter(
            "clusters do not cover the cloud".into(),
        ));
    }
    let grid = PointGrid::build(cloud.positions());
    let k = 16.min(cloud.len());
    let labels = complex
        .cells
        .iter()
        .map(|cell| {
            let near = grid.k_nearest(&cell.centroid, k, None);
            let best = (cell.centroid - cloud.positions()[near[0]]).norm_squared();
            near.iter()
                .filter(|&&i| (cell.centroid - cloud.positions()[i]).norm_squared() <= best)
                .map(|&i| point_cluster[i])
                .min()
                .expect("nonempty candidate set")
        })
        .collect();
    Ok(labels)
}

/// Node state during the merge loop.
struct NodeState {
    cells: Vec<u32>,
    volume: f64,
    hull_verts: Vec<Point3>,
    alive: bool,
    stamp: u32,
    neighbors: BTreeSet<u32>,
}

struct EdgeEntry {
    cost: f64,
    size_sum: usize,
    a: u32,
    b: u32,
    stamp_a: u32,
    stamp_b: u32,
    hull_volume: f64,
    hull_verts: Vec<Point3>,
}

impl PartialEq for EdgeEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key() == other.cmp_key()
    }
}
impl Eq for EdgeEntry {}

impl EdgeEntry {
    fn cmp_key(&self) -> (u64, usize, u32, u32) {
        // total order on finite nonnegative costs via the bit pattern
        (self.cost.to_bits(), self.size_sum, self.a, self.b)
    }
}

impl PartialOrd for EdgeEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EdgeEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want the cheapest edge on top
        other.cmp_key().cmp(&self.cmp_key())
    }
}

fn dedup_points(points: &mut Vec<Point3>) {
    points.sort_by(|p, q| {
        (p.x.to_bits(), p.y.to_bits(), p.z.to_bits()).cmp(&(q.x.to_bits(), q.y.to_bits(), q.z.to_bits()))
    });
    points.dedup_by(|p, q| p == q);
}

/// Convex hull of a merged vertex set; returns (hull vertices, volume).
/// Degenerate inputs count as convex with the given fallback volume.
fn hull_of(points: &[Point3], fallback_volume: f64, evals: &mut u64) -> (Vec<Point3>, f64) {
    match convex_hull(points) {
        Ok(mesh) => {
            *evals += 1;
            let vol = hull_volume(&mesh).unwrap_or(fallback_volume);
            (mesh.vertices().to_vec(), vol)
        }
        Err(_) => (points.to_vec(), fallback_volume),
    }
}

/// Run the greedy merge to a single root (per component) and cut the
/// recorded hierarchy at `target_parts`.
pub fn htc(
    complex: &CellComplex,
    initial_cell_labels: &[u32],
    target_parts: usize,
) -> Result<SegmentationResult> {
    let n_cells = complex.len();
    if initial_cell_labels.len() != n_cells {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} cells",
            initial_cell_labels.len(),
            n_cells
        )));
    }
    if target_parts < 1 {
        return Err(Error::InvalidParameter("target_parts must be >= 1".into()));
    }
    let tol_convex = TOL_CONVEX_REL * complex.bbox_volume();

    // leaves: one node per distinct initial label, in ascending label order
    let mut label_cells: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (cell, &label) in initial_cell_labels.iter().enumerate() {
        label_cells.entry(label).or_default().push(cell as u32);
    }
    let label_to_node: BTreeMap<u32, u32> = label_cells
        .keys()
        .enumerate()
        .map(|(node, &label)| (label, node as u32))
        .collect();

    let mut hull_evals = 0u64;
    let mut nodes: Vec<NodeState> = Vec::with_capacity(2 * label_cells.len());
    let mut tree: Vec<MergeNode> = Vec::with_capacity(2 * label_cells.len());
    for cells in label_cells.values() {
        let volume: f64 = cells.iter().map(|&c| complex.cells[c as usize].volume).sum();
        let (hull_verts, hull_vol) = if cells.len() == 1 {
            // a single box cell is its own hull
            (
                complex.cells[cells[0] as usize].corners.to_vec(),
                volume,
            )
        } else {
            let mut verts: Vec<Point3> = cells
                .iter()
                .flat_map(|&c| complex.cells[c as usize].corners.iter().copied())
                .collect();
            dedup_points(&mut verts);
            hull_of(&verts, volume, &mut hull_evals)
        };
        let id = nodes.len() as u32;
        nodes.push(NodeState {
            cells: cells.clone(),
            volume,
            hull_verts,
            alive: true,
            stamp: 0,
            neighbors: BTreeSet::new(),
        });
        tree.push(MergeNode {
            id,
            children: None,
            cell_ids: cells.clone(),
            hull_volume: hull_vol,
            volume,
        });
    }
    let n_leaves = nodes.len();

    // node adjacency from face-sharing cells
    for &(ca, cb) in &complex.adjacency {
        let na = label_to_node[&initial_cell_labels[ca as usize]];
        let nb = label_to_node[&initial_cell_labels[cb as usize]];
        if na != nb {
            nodes[na as usize].neighbors.insert(nb);
            nodes[nb as usize].neighbors.insert(na);
        }
    }

    // connectivity check
    {
        let mut parent: Vec<u32> = (0..n_leaves as u32).collect();
        fn find(parent: &mut [u32], mut i: u32) -> u32 {
            while parent[i as usize] != i {
                parent[i as usize] = parent[parent[i as usize] as usize];
                i = parent[i as usize];
            }
            i
        }
        for a in 0..n_leaves as u32 {
            let neighbors: Vec<u32> = nodes[a as usize].neighbors.iter().copied().collect();
            for b in neighbors {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra as usize] = rb;
                }
            }
        }
        let components: BTreeSet<u32> = (0..n_leaves as u32).map(|i| find(&mut parent, i)).collect();
        if components.len() > target_parts {
            return Err(Error::DisconnectedComplex {
                components: components.len(),
                target_parts,
            });
        }
    }

    let n_total: usize = n_cells;
    let mut heap: BinaryHeap<EdgeEntry> = BinaryHeap::new();
    let eval_edge = |nodes: &[NodeState], a: u32, b: u32, evals: &mut u64| -> EdgeEntry {
        let (na, nb) = (&nodes[a as usize], &nodes[b as usize]);
        let mut verts = na.hull_verts.clone();
        verts.extend_from_slice(&nb.hull_verts);
        dedup_points(&mut verts);
        let vol_union = na.volume + nb.volume;
        let (hull_verts, hull_vol) = hull_of(&verts, vol_union, evals);
        let cost = htc_edge_cost(
            hull_vol,
            vol_union,
            na.cells.len(),
            nb.cells.len(),
            n_total,
            tol_convex,
        );
        EdgeEntry {
            cost,
            size_sum: na.cells.len() + nb.cells.len(),
            a,
            b,
            stamp_a: na.stamp,
            stamp_b: nb.stamp,
            hull_volume: hull_vol,
            hull_verts,
        }
    };

    let mut initial_edges: BTreeSet<(u32, u32)> = BTreeSet::new();
    for a in 0..n_leaves as u32 {
        for &b in &nodes[a as usize].neighbors {
            if a < b {
                initial_edges.insert((a, b));
            }
        }
    }
    for (a, b) in initial_edges {
        let entry = eval_edge(&nodes, a, b, &mut hull_evals);
        heap.push(entry);
    }

    let mut merge_log = Vec::new();
    while let Some(entry) = heap.pop() {
        let (a, b) = (entry.a, entry.b);
        if !nodes[a as usize].alive
            || !nodes[b as usize].alive
            || nodes[a as usize].stamp != entry.stamp_a
            || nodes[b as usize].stamp != entry.stamp_b
        {
            continue;
        }
        // merge a and b into a new node
        let new_id = nodes.len() as u32;
        let mut cells = nodes[a as usize].cells.clone();
        cells.extend_from_slice(&nodes[b as usize].cells);
        cells.sort_unstable();
        let volume = nodes[a as usize].volume + nodes[b as usize].volume;
        let mut neighbors: BTreeSet<u32> = nodes[a as usize]
            .neighbors
            .union(&nodes[b as usize].neighbors)
            .copied()
            .collect();
        neighbors.remove(&a);
        neighbors.remove(&b);
        nodes[a as usize].alive = false;
        nodes[b as usize].alive = false;
        nodes[a as usize].stamp += 1;
        nodes[b as usize].stamp += 1;
        for &nb in &neighbors {
            let set = &mut nodes[nb as usize].neighbors;
            set.remove(&a);
            set.remove(&b);
            set.insert(new_id);
        }
        nodes.push(NodeState {
            cells: cells.clone(),
            volume,
            hull_verts: entry.hull_verts,
            alive: true,
            stamp: 0,
            neighbors: neighbors.clone(),
        });
        tree.push(MergeNode {
            id: new_id,
            children: Some((a, b)),
            cell_ids: cells,
            hull_volume: entry.hull_volume,
            volume,
        });
        merge_log.push(MergeStep {
            parent: new_id,
            a,
            b,
            cost: entry.cost,
        });
        for nb in neighbors {
            let e = eval_edge(&nodes, new_id.min(nb), new_id.max(nb), &mut hull_evals);
            heap.push(e);
        }
    }

    let cell_labels = cut_hierarchy(&tree, target_parts)?;
    let n_parts = cell_labels.iter().copied().max().unwrap_or(0) + 1;
    Ok(SegmentationResult {
        cell_labels,
        point_labels: Vec::new(),
        tree,
        merge_log,
        n_parts,
        hull_evals,
    })
}

/// Undo the most recent merges of a recorded hierarchy until `k` subtrees
/// remain, then label cells by subtree.
pub fn cut_hierarchy(tree: &[MergeNode], k: usize) -> Result<Vec<u32>> {
    let n_leaves = tree.iter().filter(|n| n.children.is_none()).count();
    if n_leaves == 0 {
        return Err(Error::EmptyGrid);
    }
    // roots: nodes that are nobody's child
    let mut is_child = vec![false; tree.len()];
    for node in tree {
        if let Some((a, b)) = node.children {
            is_child[a as usize] = true;
            is_child[b as usize] = true;
        }
    }
    let roots: BTreeSet<u32> = tree
        .iter()
        .filter(|n| !is_child[n.id as usize])
        .map(|n| n.id)
        .collect();
    if k < roots.len() || k > n_leaves {
        return Err(Error::KOutOfRange {
            k,
            min: roots.len(),
            max: n_leaves,
        });
    }
    let mut active = roots;
    while active.len() < k {
        // the most recent remaining merge is the largest internal id
        let expand = active
            .iter()
            .rev()
            .copied()
            .find(|&id| tree[id as usize].children.is_some())
            .expect("k <= leaves guarantees an expandable node");
        active.remove(&expand);
        let (a, b) = tree[expand as usize].children.unwrap();
        active.insert(a);
        active.insert(b);
    }
    let n_cells: usize = tree
        .iter()
        .filter(|n| n.children.is_none())
        .map(|n| n.cell_ids.len())
        .sum();
    let mut labels = vec![u32::MAX; n_cells];
    for (part, &node) in active.iter().enumerate() {
        for &cell in &tree[node as usize].cell_ids {
            labels[cell as usize] = part as u32;
        }
    }
    debug_assert!(labels.iter().all(|&l| l != u32::MAX));
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{cell_complex, VoxelGrid};
    use std::collections::BTreeSet as Set;

    fn grid_from(coords: &[(i32, i32, i32)]) -> CellComplex {
        let grid = VoxelGrid {
            origin: Point3::origin(),
            cell_size: 1.0,
            occupied: coords.iter().copied().collect(),
        };
        cell_complex(&grid).unwrap()
    }

    fn block(nx: i32, ny: i32, nz: i32) -> Vec<(i32, i32, i32)> {
        let mut v = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    v.push((i, j, k));
                }
            }
        }
        v
    }

    #[test]
    fn edge_cost_branches() {
        // two unit cells forming a convex 2x1x1 box
        let c = htc_edge_cost(2.0, 2.0, 1, 1, 2, 1e-9);
        assert!((c - 0.5).abs() < 1e-15);
        // convex union of two 2-cell clusters among 4 cells
        let c = htc_edge_cost(4.0, 4.0, 2, 2, 4, 1e-9);
        assert!((c - 0.5).abs() < 1e-15);
        // concave union pays concavity + 1
        let c = htc_edge_cost(3.5, 3.0, 1, 2, 3, 1e-9);
        assert!((c - 1.5).abs() < 1e-12);
    }

    #[test]
    fn l_tromino_cost_from_hull_oracle() {
        // three unit cells in an L; hull volume from the geometry kernel
        let complex = grid_from(&[(0, 0, 0), (1, 0, 0), (0, 1, 0)]);
        let mut verts: Vec<Point3> = complex
            .cells
            .iter()
            .flat_map(|c| c.corners.iter().copied())
            .collect();
        dedup_points(&mut verts);
        let hull = convex_hull(&verts).unwrap();
        let hv = hull_volume(&hull).unwrap();
        assert!((hv - 3.5).abs() < 1e-12, "L-tromino hull volume {hv}");
        let cost = htc_edge_cost(hv, 3.0, 1, 2, 3, 1e-9);
        assert!((cost - 1.5).abs() < 1e-12);
    }

    #[test]
    fn solid_block_merges_to_one_part() {
        let complex = grid_from(&block(4, 4, 4));
        let labels: Vec<u32> = (0..complex.len() as u32).collect();
        let result = htc(&complex, &labels, 1).unwrap();
        assert!(result.cell_labels.iter().all(|&l| l == 0));
        assert_eq!(result.n_parts, 1);
        // merge tree covers all cells exactly once at the root
        let root = result.tree.last().unwrap();
        assert_eq!(root.cell_ids.len(), complex.len());
    }

    #[test]
    fn merge_tree_is_valid() {
        let complex = grid_from(&block(3, 3, 2));
        let labels: Vec<u32> = (0..complex.len() as u32).collect();
        let result = htc(&complex, &labels, 1).unwrap();
        for node in &result.tree {
            if let Some((a, b)) = node.children {
                let sa: Set<u32> = result.tree[a as usize].cell_ids.iter().copied().collect();
                let sb: Set<u32> = result.tree[b as usize].cell_ids.iter().copied().collect();
                assert!(sa.is_disjoint(&sb));
                let union: Set<u32> = sa.union(&sb).copied().collect();
                let parent: Set<u32> = node.cell_ids.iter().copied().collect();
                assert_eq!(union, parent);
            }
        }
        // costs match the recorded branch structure
        for step in &result.merge_log {
            let parent = &result.tree[step.parent as usize];
            let concavity = parent.hull_volume - parent.volume;
            if step.cost > 1.0 {
                assert!(concavity > 0.0);
            } else {
                assert!(step.cost <= 1.0);
            }
        }
    }

    #[test]
    fn two_cubes_and_bar_split_into_three() {
        // two 4^3 cubes joined by a 1x1x4 bar; construction gives the truth
        let mut coords = Vec::new();
        let mut truth = Vec::new();
        for c in block(4, 4, 4) {
            coords.push(c);
            truth.push(0u32);
        }
        for i in 0..4 {
            coords.push((4 + i, 1, 1));
            truth.push(1);
        }
        for c in block(4, 4, 4) {
            coords.push((c.0 + 8, c.1, c.2));
            truth.push(2);
        }
        // cell_complex sorts cells by coordinate; keep truth aligned
        let order: Vec<usize> = {
            let mut idx: Vec<usize> = (0..coords.len()).collect();
            idx.sort_by_key(|&i| coords[i]);
            idx
        };
        let sorted_truth: Vec<u32> = order.iter().map(|&i| truth[i]).collect();
        let complex = grid_from(&coords);
        assert_eq!(complex.len(), coords.len());

        let labels: Vec<u32> = (0..complex.len() as u32).collect();
        let result = htc(&complex, &labels, 3).unwrap();
        let pair = crate::metrics::SegPair::new(&result.cell_labels, &sorted_truth).unwrap();
        let use_err = crate::metrics::use_error(&pair);
        assert!(use_err <= 0.05, "USE {use_err}");
    }

    #[test]
    fn l_shape_splits_at_the_corner() {
        // horizontal arm 8x3x3 plus vertical arm 3x3x5 on its end
        let mut coords = block(8, 3, 3);
        for c in block(3, 3, 5) {
            coords.push((c.0, c.1, c.2 + 3));
        }
        let complex = grid_from(&coords);
        let labels: Vec<u32> = (0..complex.len() as u32).collect();
        let result = htc(&complex, &labels, 2).unwrap();

        // oracle: of the two axis-aligned one-plane splits, each predicted
        // part must sit >= 95% inside one arm of either split
        let in_bottom_a = |c: &(i32, i32, i32)| c.2 < 3; // split at z = 3
        let in_left_b = |c: &(i32, i32, i32)| c.0 < 3; // split at x = 3
        let fits_split = |arm_of: &dyn Fn(&(i32, i32, i32)) -> bool| -> bool {
            let mut part_counts: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
            for (i, cell) in complex.cells.iter().enumerate() {
                let e = part_counts.entry(result.cell_labels[i]).or_insert((0, 0));
                if arm_of(&cell.grid_coord) {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
            part_counts.values().all(|&(a, b)| {
                let total = (a + b) as f64;
                (a as f64 / total) >= 0.95 || (b as f64 / total) >= 0.95
            })
        };
        assert!(
            fits_split(&in_bottom_a) || fits_split(&in_left_b),
            "predicted parts do not align with either corner split"
        );
    }

    #[test]
    fn disconnected_complex_rejected() {
        let mut coords = block(2, 2, 2);
        for c in block(2, 2, 2) {
            coords.push((c.0 + 5, c.1, c.2));
        }
        let complex = grid_from(&coords);
        let labels: Vec<u32> = (0..complex.len() as u32).collect();
        assert!(matches!(
            htc(&complex, &labels, 1),
            Err(Error::DisconnectedComplex { .. })
        ));
        // with target 2 the two components are the two parts
        let result = htc(&complex, &labels, 2).unwrap();
        assert_eq!(result.n_parts, 2);
    }

    #[test]
    fn cut_hierarchy_boundaries() {
        let complex = grid_from(&block(3, 1, 1));
        let labels: Vec<u32> = (0..3).collect();
        let result = htc(&complex, &labels, 1).unwrap();
        // k = 1: single label
        let cut = cut_hierarchy(&result.tree, 1).unwrap();
        assert!(cut.iter().all(|&l| l == 0));
        // k = leaves: the initial clustering
        let cut = cut_hierarchy(&result.tree, 3).unwrap();
        let distinct: Set<u32> = cut.iter().copied().collect();
        assert_eq!(distinct.len(), 3);
        // k = 2 on a 2-merge tree: the children of the root
        let cut = cut_hierarchy(&result.tree, 2).unwrap();
        let root = result.tree.last().unwrap();
        let (a, b) = root.children.unwrap();
        for &child in &[a, b] {
            let cells = &result.tree[child as usize].cell_ids;
            let l0 = cut[cells[0] as usize];
            assert!(cells.iter().all(|&c| cut[c as usize] == l0));
        }
        assert!(matches!(
            cut_hierarchy(&result.tree, 4),
            Err(Error::KOutOfRange { .. })
        ));
        assert!(matches!(
            cut_hierarchy(&result.tree, 0),
            Err(Error::KOutOfRange { .. })
        ));
    }

    #[test]
    fn assign_cells_by_nearest_point() {
        use crate::geom::Vec3;
        let complex = grid_from(&block(4, 1, 1));
        // two clusters: a point near x=0.5 and one near x=3.5
        let cloud = PointCloud::new(
            vec![Point3::new(0.5, 0.5, 0.5), Point3::new(3.5, 0.5, 0.5)],
            vec![[0; 3]; 2],
            vec![Vec3::z(); 2],
            None,
        )
        .unwrap();
        let clusters = vec![
            Cluster {
                member_ids: vec![0],
                rep_position: cloud.positions()[0],
                rep_colour: [0; 3],
                rep_normal: Vec3::z(),
            },
            Cluster {
                member_ids: vec![1],
                rep_position: cloud.positions()[1],
                rep_colour: [0; 3],
                rep_normal: Vec3::z(),
            },
        ];
        let labels = assign_cells(&complex, &clusters, &cloud).unwrap();
        assert_eq!(labels, vec![0, 0, 1, 1]);

        // single covering cluster: everything labelled 0
        let one = vec![Cluster {
            member_ids: vec![0, 1],
            rep_position: cloud.positions()[0],
            rep_colour: [0; 3],
            rep_normal: Vec3::z(),
        }];
        let labels = assign_cells(&complex, &one, &cloud).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn assign_cells_tie_breaks_low_cluster_id() {
        use crate::geom::Vec3;
        let complex = grid_from(&[(0, 0, 0)]);
        // both cluster points are exactly 1.0 from the cell centroid
        let cloud = PointCloud::new(
            vec![
                Point3::new(0.5, 0.5, 1.5),
                Point3::new(0.5, 0.5, -0.5),
            ],
            vec![[0; 3]; 2],
            vec![Vec3::z(); 2],
            None,
        )
        .unwrap();
        let clusters: Vec<Cluster> = (0..2)
            .map(|i| Cluster {
                member_ids: vec![i as u32],
                rep_position: cloud.positions()[i],
                rep_colour: [0; 3],
                rep_normal: Vec3::z(),
            })
            .collect();
        let labels = assign_cells(&complex, &clusters, &cloud).unwrap();
        assert_eq!(labels, vec![0]);
    }

    #[test]
    fn determinism() {
        let mut coords = block(5, 3, 2);
        coords.push((0, 0, 2));
        coords.push((1, 0, 2));
        let complex = grid_from(&coords);
        let labels: Vec<u32> = (0..complex.len() as u32).collect();
        let a = htc(&complex, &labels, 2).unwrap();
        let b = htc(&complex, &labels, 2).unwrap();
        assert_eq!(a.cell_labels, b.cell_labels);
        assert_eq!(a.hull_evals, b.hull_evals);
        assert_eq!(
            a.merge_log.iter().map(|s| (s.parent, s.a, s.b)).collect::<Vec<_>>(),
            b.merge_log.iter().map(|s| (s.parent, s.a, s.b)).collect::<Vec<_>>()
        );
    }
}
