//! Training masks: wheel-track quadrilaterals rasterized into a binary image.
//!
//! Pixel `(col, row)` is set when its center `(col, row)` lies inside or on
//! the boundary of at least one quad (even-odd rule per quad).

use crate::geometry::ImagePoint;
use crate::image::{BinaryMask, ImageError};
use crate::trajectory::{ProjectedTrajectory, TrajectorySample, Wheel};

/// Corners in order `(inner_t, outer_t, outer_t+1, inner_t+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad(pub [ImagePoint; 4]);

impl Quad {
    pub fn corners(&self) -> &[ImagePoint; 4] {
        &self.0
    }

    /// Exact containment test for the point `(x, y)`: on an edge, or inside
    /// by the crossing rule.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.on_boundary(x, y) || crossing_parity(&self.0, x, y)
    }

    fn on_boundary(&self, x: f64, y: f64) -> bool {
        edges(&self.0).any(|(a, b)| on_segment(a, b, x, y))
    }
}

fn edges(c: &[ImagePoint; 4]) -> impl Iterator<Item = (&ImagePoint, &ImagePoint)> {
    (0..4).map(move |i| (&c[i], &c[(i + 1) % 4]))
}

fn on_segment(a: &ImagePoint, b: &ImagePoint, x: f64, y: f64) -> bool {
    let cross = (b.u - a.u) * (y - a.v) - (b.v - a.v) * (x - a.u);
    cross == 0.0 && x >= a.u.min(b.u) && x <= a.u.max(b.u) && y >= a.v.min(b.v) && y <= a.v.max(b.v)
}

/// x coordinate where edge `a → b` crosses the horizontal line at `y`; only
/// meaningful when the edge straddles `y` in the half-open sense below.
fn crossing_x(a: &ImagePoint, b: &ImagePoint, y: f64) -> f64 {
    (b.u - a.u) * (y - a.v) / (b.v - a.v) + a.u
}

fn straddles(a: &ImagePoint, b: &ImagePoint, y: f64) -> bool {
    (a.v > y) != (b.v > y)
}

fn crossing_parity(c: &[ImagePoint; 4], x: f64, y: f64) -> bool {
    let mut inside = false;
    for (a, b) in edges(c) {
        if straddles(a, b, y) && x < crossing_x(a, b, y) {
            inside = !inside;
        }
    }
    inside
}

fn usable(s: &TrajectorySample) -> bool {
    s.in_front() && !s.occluded()
}

fn corner(p: &crate::trajectory::ProjectedPoint) -> ImagePoint {
    p.image.expect("usable samples project")
}

/// One quad per wheel per consecutive sample pair whose corners all project
/// and are not occluded. Left wheel quads come first, each wheel in time
/// order.
pub fn build_quads(traj: &ProjectedTrajectory) -> Vec<Quad> {
    let mut quads = Vec::new();
    for wheel in Wheel::ALL {
        for pair in traj.wheel(wheel).windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if usable(a) && usable(b) {
                quads.push(Quad([corner(&a.inner), corner(&a.outer), corner(&b.outer), corner(&b.inner)]));
            }
        }
    }
    quads
}

/// Union of the quads, clipped to the image.
pub fn rasterize(quads: &[Quad], width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::zeros(width, height);
    for q in quads {
        rasterize_quad(q, &mut mask);
    }
    mask
}

fn rasterize_quad(q: &Quad, mask: &mut BinaryMask) {
    let c = &q.0;
    if c.iter().any(|p| !p.u.is_finite() || !p.v.is_finite()) {
        return;
    }
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let min_v = c.iter().map(|p| p.v).fold(f64::INFINITY, f64::min);
    let max_v = c.iter().map(|p| p.v).fold(f64::NEG_INFINITY, f64::max);
    let row_lo = (min_v.ceil() as i64).max(0);
    let row_hi = (max_v.floor() as i64).min(h - 1);
    let mut crossings: Vec<f64> = Vec::with_capacity(4);
    for row in row_lo..=row_hi {
        let y = row as f64;
        // interior by parity: the number of crossings strictly right of x
        // is odd exactly for x in [c0, c1) ∪ [c2, c3)
        crossings.clear();
        crossings.extend(edges(c).filter(|(a, b)| straddles(a, b, y)).map(|(a, b)| crossing_x(a, b, y)));
        crossings.sort_by(f64::total_cmp);
        for span in crossings.chunks_exact(2) {
            let start = (span[0].ceil() as i64).max(0);
            let end = (span[1].ceil() as i64 - 1).min(w - 1);
            for col in start..=end {
                mask.set(col as usize, row as usize, true);
            }
        }
        // boundary pixels: test integer columns next to each edge
        for (a, b) in edges(c) {
            if a.v.min(b.v) > y || a.v.max(b.v) < y {
                continue;
            }
            let (lo, hi) = if a.v == b.v {
                (a.u.min(b.u), a.u.max(b.u))
            } else {
                let x = crossing_x(a, b, y);
                (x, x)
            };
            let start = (lo.floor() as i64 - 1).max(0);
            let end = (hi.ceil() as i64 + 1).min(w - 1);
            for col in start..=end {
                if !mask.get(col as usize, row as usize) && on_segment(a, b, col as f64, y) {
                    mask.set(col as usize, row as usize, true);
                }
            }
        }
    }
}

/// `mask AND NOT vehicle`
pub fn apply_vehicle_mask(mask: &BinaryMask, vehicle: &BinaryMask) -> Result<BinaryMask, ImageError> {
    if mask.dims() != vehicle.dims() {
        let (w, h) = mask.dims();
        let (vw, vh) = vehicle.dims();
        return Err(ImageError::DimensionMismatch { left: (w, h, 1), right: (vw, vh, 1) });
    }
    let data = mask.data().iter().zip(vehicle.data()).map(|(&m, &v)| m && !v).collect();
    BinaryMask::from_vec(mask.width(), mask.height(), data)
}
