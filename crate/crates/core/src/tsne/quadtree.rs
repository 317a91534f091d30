//! Region quadtree over 2-D embedding points for Barnes-Hut repulsion.
//!
//! Leaves store exact point positions (coincident points merge with a
//! multiplicity count), internal cells store a center of mass. A cell is
//! summarized as a single pseudo-point when `side / distance < theta`.

use crate::matrix::Matrix;

const NO_CHILD: u32 = u32::MAX;
/// Beyond this depth two distinct points are merged as if coincident;
/// reached only for separations ~2^-64 of the root cell.
const MAX_DEPTH: usize = 96;

#[derive(Debug, Clone)]
struct Node {
    // Cell geometry.
    cx: f64,
    cy: f64,
    half: f64,
    // Mass data: sums while building, mean after `finalize`.
    com_x: f64,
    com_y: f64,
    count: usize,
    // Leaf payload: exact position shared by all points in the leaf.
    px: f64,
    py: f64,
    // Index of the first of four children, or NO_CHILD for leaves.
    children: u32,
}

impl Node {
    fn new(cx: f64, cy: f64, half: f64) -> Self {
        Node { cx, cy, half, com_x: 0.0, com_y: 0.0, count: 0, px: 0.0, py: 0.0, children: NO_CHILD }
    }

    fn is_leaf(&self) -> bool {
        self.children == NO_CHILD
    }
}

#[derive(Debug)]
pub struct QuadTree {
    nodes: Vec<Node>,
}

/// Result of one repulsion query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Repulsion {
    /// Unnormalized force sum over cells: count * w^2 * (query - com).
    pub force: [f64; 2],
    /// Contribution to the global normalizer: sum of count * w.
    pub z_sum: f64,
    /// Number of cells evaluated (leaves plus summarized cells).
    pub cells_evaluated: usize,
}

impl QuadTree {
    /// Build over the rows of an N x 2 matrix.
    pub fn build(y: &Matrix) -> Self {
        assert_eq!(y.cols(), 2);
        let n = y.rows();
        let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = y.row(i);
            min_x = min_x.min(r[0]);
            max_x = max_x.max(r[0]);
            min_y = min_y.min(r[1]);
            max_y = max_y.max(r[1]);
        }
        let cx = 0.5 * (min_x + max_x);
        let cy = 0.5 * (min_y + max_y);
        let extent = (max_x - min_x).max(max_y - min_y);
        let half = if extent > 0.0 { 0.5 * extent * (1.0 + 1e-9) } else { 1e-3 };

        let mut tree = QuadTree { nodes: vec![Node::new(cx, cy, half)] };
        for i in 0..n {
            let r = y.row(i);
            tree.insert(0, r[0], r[1], 1, 0);
        }
        for node in tree.nodes.iter_mut() {
            if !node.is_leaf() && node.count > 0 {
                node.com_x /= node.count as f64;
                node.com_y /= node.count as f64;
            }
        }
        tree
    }

    fn insert(&mut self, mut node: usize, x: f64, y: f64, mult: usize, mut depth: usize) {
        loop {
            let n = &mut self.nodes[node];
            if n.count == 0 {
                n.count = mult;
                n.com_x = x * mult as f64;
                n.com_y = y * mult as f64;
                n.px = x;
                n.py = y;
                return;
            }
            if n.is_leaf() {
                if (n.px == x && n.py == y) || depth >= MAX_DEPTH {
                    n.count += mult;
                    n.com_x += x * mult as f64;
                    n.com_y += y * mult as f64;
                    return;
                }
                // Split: push the existing point one level down, then retry.
                let (old_x, old_y, old_count) = (n.px, n.py, n.count);
                let (cx, cy, half) = (n.cx, n.cy, n.half);
                let first = self.nodes.len() as u32;
                let quarter = 0.5 * half;
                for qy in 0..2 {
                    for qx in 0..2 {
                        let ccx = cx + (qx as f64 - 0.5) * half;
                        let ccy = cy + (qy as f64 - 0.5) * half;
                        self.nodes.push(Node::new(ccx, ccy, quarter));
                    }
                }
                let parent = &mut self.nodes[node];
                parent.children = first;
                let child = first as usize + Self::quadrant(parent.cx, parent.cy, old_x, old_y);
                // The subtree below is empty; the old point lands in one step.
                let c = &mut self.nodes[child];
                c.count = old_count;
                c.com_x = old_x * old_count as f64;
                c.com_y = old_y * old_count as f64;
                c.px = old_x;
                c.py = old_y;
                continue; // re-run loop on same `node`, now internal
            }
            // Internal node: accumulate and descend.
            n.count += mult;
            n.com_x += x * mult as f64;
            n.com_y += y * mult as f64;
            node = n.children as usize + Self::quadrant(n.cx, n.cy, x, y);
            depth += 1;
        }
    }

    #[inline]
    fn quadrant(cx: f64, cy: f64, x: f64, y: f64) -> usize {
        (if x >= cx { 1 } else { 0 }) + (if y >= cy { 2 } else { 0 })
    }

    /// Repulsive force and normalizer contribution for a query point.
    /// `qx, qy` must be the exact stored position of the query point so
    /// that its own mass can be excluded.
    pub fn repulsion(&self, qx: f64, qy: f64, theta: f64) -> Repulsion {
        let mut force = [0.0; 2];
        let mut z_sum = 0.0;
        let mut cells = 0usize;
        let mut stack = vec![0u32];
        let theta2 = theta * theta;
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx as usize];
            if node.count == 0 {
                continue;
            }
            if node.is_leaf() {
                let dx = qx - node.px;
                let dy = qy - node.py;
                let mass = if node.px == qx && node.py == qy {
                    // The query's own leaf: exclude one copy; coincident
                    // duplicates contribute w = 1 with zero force.
                    node.count - 1
                } else {
                    node.count
                };
                if mass > 0 {
                    let w = 1.0 / (1.0 + dx * dx + dy * dy);
                    z_sum += mass as f64 * w;
                    force[0] += mass as f64 * w * w * dx;
                    force[1] += mass as f64 * w * w * dy;
                }
                cells += 1;
                continue;
            }
            let dx = qx - node.com_x;
            let dy = qy - node.com_y;
            let d2 = dx * dx + dy * dy;
            let side = 2.0 * node.half;
            if side * side < theta2 * d2 {
                let w = 1.0 / (1.0 + d2);
                z_sum += node.count as f64 * w;
                force[0] += node.count as f64 * w * w * dx;
                force[1] += node.count as f64 * w * w * dy;
                cells += 1;
            } else {
                // Push in reverse so traversal order is child 0,1,2,3.
                for k in (0..4).rev() {
                    stack.push(node.children + k);
                }
            }
        }
        Repulsion { force, z_sum, cells_evaluated: cells }
    }
}
