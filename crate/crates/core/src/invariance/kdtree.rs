use super::dataset::{squared_distance, RegressionDataset};

const LEAF_SIZE: usize = 8;

#[derive(Clone, Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

/// Exact nearest-neighbour index over the feature rows of a dataset.
///
/// Ties between equidistant rows go to the smaller row index.
#[derive(Clone, Debug)]
pub struct NeighborIndex {
    points: Vec<f64>,
    dim: usize,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl NeighborIndex {
    pub fn build(data: &RegressionDataset) -> Self {
        Self::from_points(data.features().to_vec(), data.dim())
    }

    /// Builds from row-major `points` of dimension `dim`.
    pub fn from_points(points: Vec<f64>, dim: usize) -> Self {
        assert!(dim > 0 && points.len() % dim == 0, "ragged point array");
        let n = points.len() / dim;
        let mut index = Self {
            points,
            dim,
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            index.build_node(0, n);
        }
        index
    }

    fn coord(&self, i: usize, d: usize) -> f64 {
        self.points[i * self.dim + d]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut best_dim = 0;
        let mut best_spread = f64::NEG_INFINITY;
        for d in 0..self.dim {
            let (lo, hi) = self.order[start..end].iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &i| {
                    let v = self.coord(i, d);
                    (lo.min(v), hi.max(v))
                },
            );
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = d;
            }
        }
        if best_spread <= 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let (points, dim) = (&self.points, self.dim);
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * dim + best_dim].total_cmp(&points[b * dim + best_dim])
        });
        let value = self.coord(self.order[mid], best_dim);
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            dim: best_dim,
            value,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Row index and squared distance of the nearest row to `query`.
    pub fn nearest(&self, query: &[f64]) -> Option<(usize, f64)> {
        assert_eq!(query.len(), self.dim, "query dimension");
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, query, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, q: &[f64], best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = squared_distance(&self.points[i * self.dim..(i + 1) * self.dim], q);
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // Equal distances must still be visited for the index tie rule.
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

/// Linear scan with the same tie rule, used as a reference.
pub fn brute_force_nearest(points: &[f64], dim: usize, query: &[f64]) -> Option<(usize, f64)> {
    points
        .chunks_exact(dim)
        .enumerate()
        .map(|(i, p)| (i, squared_distance(p, query)))
        .fold(None, |acc, (i, d2)| match acc {
            Some((_, b)) if b <= d2 => acc,
            _ => Some((i, d2)),
        })
}
