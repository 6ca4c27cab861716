//! Orthographic footprints of primitives and 2D overlap tests.
//!
//! Axes: x points right, y points into the scene, z points up. The front
//! view looks along +y, the side view along +x and the top view along -z,
//! so each view is a coordinate drop:
//!
//! | view  | plane  | depth |
//! |-------|--------|-------|
//! | front | (x, z) | y     |
//! | side  | (y, z) | x     |
//! | top   | (x, y) | -z    |
//!
//! Smaller depth is closer to the viewer.

use serde::{Deserialize, Serialize};

use crate::scene::{Dims, Primitive, View};

pub type Point2 = [f64; 2];

/// Filled 2D outline of a primitive in one view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Outline {
    Rect { min: Point2, max: Point2 },
    Circle { center: Point2, radius: f64 },
    /// Isoceles triangle: base corners then apex.
    Triangle { vertices: [Point2; 3] },
}

impl View {
    /// Project a world point to (plane coordinates, depth).
    pub fn drop_axis(self, p: [f64; 3]) -> (Point2, f64) {
        match self {
            View::Front => ([p[0], p[2]], p[1]),
            View::Side => ([p[1], p[2]], p[0]),
            View::Top => ([p[0], p[1]], -p[2]),
        }
    }
}

/// Silhouette and depth key of a primitive seen from `view`.
pub fn footprint(prim: &Primitive, view: View) -> (Outline, f64) {
    let (c, depth) = view.drop_axis(prim.center);
    let outline = match (prim.dims, view) {
        (Dims::Edge { edge }, _) => {
            let h = edge / 2.0;
            Outline::Rect {
                min: [c[0] - h, c[1] - h],
                max: [c[0] + h, c[1] + h],
            }
        }
        (Dims::Round { radius, .. }, View::Top) => Outline::Circle { center: c, radius },
        (Dims::Round { radius, height }, _) => {
            let hh = height / 2.0;
            if prim.shape.is_cone() {
                Outline::Triangle {
                    vertices: [
                        [c[0] - radius, c[1] - hh],
                        [c[0] + radius, c[1] - hh],
                        [c[0], c[1] + hh],
                    ],
                }
            } else {
                Outline::Rect {
                    min: [c[0] - radius, c[1] - hh],
                    max: [c[0] + radius, c[1] + hh],
                }
            }
        }
    };
    (outline, depth)
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl Outline {
    /// Closed point-in-shape test.
    pub fn contains(&self, p: Point2) -> bool {
        match *self {
            Outline::Rect { min, max } => {
                p[0] >= min[0] && p[0] <= max[0] && p[1] >= min[1] && p[1] <= max[1]
            }
            Outline::Circle { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy <= radius * radius
            }
            Outline::Triangle { vertices: [a, b, c] } => {
                let d1 = cross(a, b, p);
                let d2 = cross(b, c, p);
                let d3 = cross(c, a, p);
                let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
                let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
                !(has_neg && has_pos)
            }
        }
    }

    /// Axis-aligned bounds as (min, max).
    pub fn bounds(&self) -> (Point2, Point2) {
        match *self {
            Outline::Rect { min, max } => (min, max),
            Outline::Circle { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Outline::Triangle { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    fn polygon(&self) -> Option<Vec<Point2>> {
        match *self {
            Outline::Rect { min, max } => Some(vec![
                min,
                [max[0], min[1]],
                max,
                [min[0], max[1]],
            ]),
            Outline::Triangle { vertices } => Some(vertices.to_vec()),
            Outline::Circle { .. } => None,
        }
    }

    /// True when the interiors intersect (positive-area overlap). Touching
    /// boundaries do not count.
    pub fn overlaps(&self, other: &Outline) -> bool {
        match (self.polygon(), other.polygon()) {
            (Some(a), Some(b)) => polygons_overlap(&a, &b),
            (Some(poly), None) => circle_polygon_overlap(other, &poly),
            (None, Some(poly)) => circle_polygon_overlap(self, &poly),
            (None, None) => {
                let (Outline::Circle { center: c1, radius: r1 }, Outline::Circle { center: c2, radius: r2 }) =
                    (*self, *other)
                else {
                    unreachable!()
                };
                let dx = c1[0] - c2[0];
                let dy = c1[1] - c2[1];
                (dx * dx + dy * dy).sqrt() < r1 + r2
            }
        }
    }
}

fn project(poly: &[Point2], axis: Point2) -> (f64, f64) {
    poly.iter()
        .map(|p| p[0] * axis[0] + p[1] * axis[1])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

// Separating axis test over edge normals of both convex polygons.
fn polygons_overlap(a: &[Point2], b: &[Point2]) -> bool {
    for poly in [a, b] {
        for i in 0..poly.len() {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            let axis = [q[1] - p[1], p[0] - q[0]];
            let (amin, amax) = project(a, axis);
            let (bmin, bmax) = project(b, axis);
            if amax <= bmin || bmax <= amin {
                return false;
            }
        }
    }
    true
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dx = a[0] + t * ab[0] - p[0];
    let dy = a[1] + t * ab[1] - p[1];
    (dx * dx + dy * dy).sqrt()
}

fn circle_polygon_overlap(circle: &Outline, poly: &[Point2]) -> bool {
    let Outline::Circle { center, radius } = *circle else {
        unreachable!()
    };
    let strictly_inside = {
        let n = poly.len();
        let signs: Vec<f64> = (0..n).map(|i| cross(poly[i], poly[(i + 1) % n], center)).collect();
        signs.iter().all(|&s| s > 0.0) || signs.iter().all(|&s| s < 0.0)
    };
    if strictly_inside {
        return true;
    }
    let n = poly.len();
    (0..n)
        .map(|i| segment_distance(center, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
        < radius
}
