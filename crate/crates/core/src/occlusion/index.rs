//! Exact nearest-neighbor search over `(azimuth, elevation)` with azimuth
//! wraparound at ±π.
//!
//! The distance is `sqrt(Δθ² + Δφ²)` where `Δθ` is the wrapped azimuth
//! difference. A 2-d tree prunes candidates using conservative bounds, and
//! every surviving candidate is scored with [`angular_distance_sq`], so
//! results (including the smallest-index tie-break) are identical to an
//! exhaustive scan.

use std::f64::consts::{PI, TAU};

const LEAF_SIZE: usize = 16;

/// Absolute azimuth difference folded into `[0, π]`.
pub fn wrapped_azimuth_delta(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % TAU;
    if d > PI {
        TAU - d
    } else {
        d
    }
}

pub fn angular_distance_sq(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dt = wrapped_azimuth_delta(a.0, b.0);
    let dp = a.1 - b.1;
    dt * dt + dp * dp
}

#[derive(Debug, Clone, Copy)]
struct Bounds {
    az: (f64, f64),
    el: (f64, f64),
}

impl Bounds {
    fn lower_bound_sq(&self, q: (f64, f64)) -> f64 {
        let dt = if q.0 >= self.az.0 && q.0 <= self.az.1 {
            0.0
        } else {
            wrapped_azimuth_delta(q.0, self.az.0).min(wrapped_azimuth_delta(q.0, self.az.1))
        };
        let dp = if q.1 < self.el.0 {
            self.el.0 - q.1
        } else if q.1 > self.el.1 {
            q.1 - self.el.1
        } else {
            0.0
        };
        dt * dt + dp * dp
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { bounds: [Bounds; 2], children: [usize; 2] },
}

/// A nearest-neighbor answer: the position of the point in the input slice
/// plus its squared angular distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance_sq: f64,
}

#[derive(Debug, Clone)]
pub struct AngularTree {
    /// `(azimuth, elevation, original index)`, permuted into leaf order.
    points: Vec<(f64, f64, usize)>,
    nodes: Vec<Node>,
    root_bounds: Option<Bounds>,
}

impl AngularTree {
    pub fn build(angles: &[(f64, f64)]) -> Self {
        let mut points: Vec<(f64, f64, usize)> = angles.iter().enumerate().map(|(i, &(a, e))| (a, e, i)).collect();
        let mut nodes = Vec::new();
        let root_bounds = bounds_of(&points);
        if !points.is_empty() {
            let len = points.len();
            build_node(&mut points, 0, len, &mut nodes);
        }
        Self { points, nodes, root_bounds }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nearest(&self, query: (f64, f64)) -> Option<Neighbor> {
        let root = self.root_bounds?;
        let mut best = Neighbor { index: usize::MAX, distance_sq: f64::INFINITY };
        self.search(0, root.lower_bound_sq(query), query, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, bound: f64, q: (f64, f64), best: &mut Neighbor) {
        // equal bounds can still hold a smaller-index tie
        if bound > best.distance_sq {
            return;
        }
        match &self.nodes[node] {
            Node::Leaf { start, end } => {
                for &(a, e, idx) in &self.points[*start..*end] {
                    let d = angular_distance_sq(q, (a, e));
                    if d < best.distance_sq || (d == best.distance_sq && idx < best.index) {
                        *best = Neighbor { index: idx, distance_sq: d };
                    }
                }
            }
            Node::Split { bounds, children } => {
                let b0 = bounds[0].lower_bound_sq(q);
                let b1 = bounds[1].lower_bound_sq(q);
                let order = if b0 <= b1 { [(0, b0), (1, b1)] } else { [(1, b1), (0, b0)] };
                for (child, b) in order {
                    // pad the bound so rounding can never prune an exact tie
                    self.search(children[child], b * (1.0 - 1e-12), q, best);
                }
            }
        }
    }
}

fn bounds_of(points: &[(f64, f64, usize)]) -> Option<Bounds> {
    let first = points.first()?;
    let mut b = Bounds { az: (first.0, first.0), el: (first.1, first.1) };
    for p in points {
        b.az = (b.az.0.min(p.0), b.az.1.max(p.0));
        b.el = (b.el.0.min(p.1), b.el.1.max(p.1));
    }
    Some(b)
}

fn build_node(points: &mut [(f64, f64, usize)], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    nodes.push(Node::Leaf { start, end });
    if end - start <= LEAF_SIZE {
        return id;
    }
    let slice = &mut points[start..end];
    let b = bounds_of(slice).expect("non-empty");
    let by_azimuth = (b.az.1 - b.az.0) >= (b.el.1 - b.el.0);
    let mid = slice.len() / 2;
    if by_azimuth {
        slice.select_nth_unstable_by(mid, |a, b| a.0.total_cmp(&b.0));
    } else {
        slice.select_nth_unstable_by(mid, |a, b| a.1.total_cmp(&b.1));
    }
    let left_bounds = bounds_of(&slice[..mid]).expect("non-empty");
    let right_bounds = bounds_of(&slice[mid..]).expect("non-empty");
    let left = build_node(points, start, start + mid, nodes);
    let right = build_node(points, start + mid, end, nodes);
    nodes[id] = Node::Split { bounds: [left_bounds, right_bounds], children: [left, right] };
    id
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_folds_across_pi() {
        assert!((wrapped_azimuth_delta(PI - 0.1, -PI + 0.1) - 0.2).abs() < 1e-12);
        assert_eq!(wrapped_azimuth_delta(0.3, 0.3), 0.0);
        assert!((wrapped_azimuth_delta(-PI, PI)).abs() < 1e-12);
    }

    #[test]
    fn empty_and_single() {
        assert!(AngularTree::build(&[]).nearest((0.0, 0.0)).is_none());
        let t = AngularTree::build(&[(1.0, 0.2)]);
        for q in [(0.0, 0.0), (-3.0, 1.0), (PI, -1.5)] {
            assert_eq!(t.nearest(q).unwrap().index, 0);
        }
    }

    #[test]
    fn query_across_the_seam_finds_wrapped_neighbor() {
        let t = AngularTree::build(&[(PI - 0.01, 0.0), (2.0, 0.0)]);
        assert_eq!(t.nearest((-PI + 0.01, 0.0)).unwrap().index, 0);
    }

    #[test]
    fn duplicates_resolve_to_smallest_index() {
        let pts: Vec<(f64, f64)> = (0..100).map(|i| if i % 7 == 3 { (0.5, 0.5) } else { (i as f64 * 0.01, -0.2) }).collect();
        let t = AngularTree::build(&pts);
        assert_eq!(t.nearest((0.5, 0.5)).unwrap().index, 3);
    }
}
