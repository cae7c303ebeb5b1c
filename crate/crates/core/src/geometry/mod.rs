//! Planar curves and domains.

mod io;
mod mesh;
mod snowflake;

pub use io::{parse_curve, parse_curve_csv, parse_curve_json, read_curve, write_curve_json};
pub use mesh::{triangulate, TriMesh, DEFAULT_NODE_CAP};
pub use snowflake::{generate_snowflake, EdgeRule, SnowflakeSpec, DEFAULT_VERTEX_CAP};

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from(p: [f64; 2]) -> Self {
        Point2::new(p[0], p[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Point2 {
        Point2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dist2(self, other: Point2) -> f64 {
        let d = self - other;
        d.x * d.x + d.y * d.y
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Twice the signed area of triangle `abc` (positive when counter-clockwise).
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// Closed simple polygon, counter-clockwise, implicitly closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct PolygonalCurve {
    vertices: Vec<Point2>,
}

impl TryFrom<Vec<Point2>> for PolygonalCurve {
    type Error = Error;
    fn try_from(v: Vec<Point2>) -> Result<Self> {
        PolygonalCurve::new(v)
    }
}

impl From<PolygonalCurve> for Vec<Point2> {
    fn from(c: PolygonalCurve) -> Self {
        c.vertices
    }
}

impl PolygonalCurve {
    /// Validates a counter-clockwise simple polygon.
    pub fn new(vertices: Vec<Point2>) -> Result<PolygonalCurve> {
        if vertices.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite vertex at {i}")));
        }
        let (lo, hi) = bounding_box(&vertices);
        if signed_area(&vertices) <= 1e-14 * lo.dist2(hi) {
            return Err(Error::InvalidInput(
                "polygon must be counter-clockwise with non-negligible area".into(),
            ));
        }
        if !is_simple(&vertices) {
            return Err(Error::NotSimple);
        }
        Ok(PolygonalCurve { vertices })
    }

    /// Like [`PolygonalCurve::new`], reversing clockwise input.
    pub fn from_points(mut vertices: Vec<Point2>) -> Result<PolygonalCurve> {
        if vertices.len() >= 3 && signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        PolygonalCurve::new(vertices)
    }

    pub fn unit_square() -> PolygonalCurve {
        PolygonalCurve {
            vertices: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
        }
    }

    pub fn rectangle(width: f64, height: f64) -> Result<PolygonalCurve> {
        PolygonalCurve::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(width, 0.0),
            Point2::new(width, height),
            Point2::new(0.0, height),
        ])
    }

    /// Regular `n`-gon inscribed in the circle of radius `radius` about the origin.
    pub fn regular(n: usize, radius: f64) -> Result<PolygonalCurve> {
        let vertices = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point2::new(radius * t.cos(), radius * t.sin())
            })
            .collect();
        PolygonalCurve::new(vertices)
    }

    /// Inserts `per_edge - 1` equally spaced points on every edge.
    pub fn densified(&self, per_edge: usize) -> PolygonalCurve {
        let n = self.vertices.len();
        let per_edge = per_edge.max(1);
        let mut out = Vec::with_capacity(n * per_edge);
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            for k in 0..per_edge {
                let s = k as f64 / per_edge as f64;
                out.push(a + (b - a) * s);
            }
        }
        PolygonalCurve { vertices: out }
    }

    /// Applies `z -> scale * e^{i angle} z + shift`.
    pub fn similarity(&self, scale: f64, angle: f64, shift: Point2) -> Result<PolygonalCurve> {
        let (s, c) = angle.sin_cos();
        let vertices = self
            .vertices
            .iter()
            .map(|p| Point2::new(scale * (c * p.x - s * p.y), scale * (s * p.x + c * p.y)) + shift)
            .collect();
        PolygonalCurve::new(vertices)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        polygon_area(self)
    }

    pub fn diameter(&self) -> f64 {
        polygon_diameter(self)
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        let scale = self.bounding_box_diagonal().powi(2);
        (0..n).all(|i| {
            orient(
                self.vertices[(i + n - 1) % n],
                self.vertices[i],
                self.vertices[(i + 1) % n],
            ) >= -1e-12 * scale
        })
    }

    /// (min corner, max corner).
    pub fn bounding_box(&self) -> (Point2, Point2) {
        bounding_box(&self.vertices)
    }

    fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.dist(hi)
    }
}

pub(crate) fn bounding_box(points: &[Point2]) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Shoelace signed area, centred on the first vertex.
pub fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let o = vertices[0];
    let mut acc = 0.0;
    for i in 1..n - 1 {
        acc += (vertices[i] - o).cross(vertices[i + 1] - o);
    }
    0.5 * acc
}

pub fn polygon_area(curve: &PolygonalCurve) -> f64 {
    signed_area(&curve.vertices)
}

/// Maximum pairwise vertex distance, via the convex hull.
pub fn polygon_diameter(curve: &PolygonalCurve) -> f64 {
    let hull = convex_hull(&curve.vertices);
    let mut best = 0.0f64;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            best = best.max(a.dist2(*b));
        }
    }
    best.sqrt()
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Adjacent edges may only share their common vertex.
fn adjacent_edges_ok(prev: Point2, shared: Point2, next: Point2) -> bool {
    if prev == shared || next == shared {
        return false;
    }
    // Folding back onto the previous edge is an overlap.
    let o = orient(prev, shared, next);
    !(o == 0.0 && (prev - shared).dot(next - shared) > 0.0)
}

/// True iff no two non-adjacent edges of the closed polyline intersect.
///
/// Edges are bucketed on a uniform grid so only nearby pairs are tested; the
/// result is identical to the exhaustive pair sweep.
pub fn is_simple(vertices: &[Point2]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if !adjacent_edges_ok(vertices[(i + n - 1) % n], vertices[i], vertices[(i + 1) % n]) {
            return false;
        }
    }
    if n == 3 {
        return orient(vertices[0], vertices[1], vertices[2]) != 0.0;
    }
    let (lo, hi) = bounding_box(vertices);
    let cells_per_side = ((n as f64).sqrt().ceil() as usize).clamp(1, 2048);
    let w = ((hi.x - lo.x) / cells_per_side as f64).max(f64::MIN_POSITIVE);
    let h = ((hi.y - lo.y) / cells_per_side as f64).max(f64::MIN_POSITIVE);
    let cell = |v: f64, o: f64, s: f64| (((v - o) / s) as usize).min(cells_per_side - 1);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cells_per_side * cells_per_side];
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let (x0, x1) = (cell(a.x.min(b.x), lo.x, w), cell(a.x.max(b.x), lo.x, w));
        let (y0, y1) = (cell(a.y.min(b.y), lo.y, h), cell(a.y.max(b.y), lo.y, h));
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                buckets[cy * cells_per_side + cx].push(i);
            }
        }
    }
    let adjacent = |i: usize, j: usize| (i + 1) % n == j || (j + 1) % n == i || i == j;
    for bucket in &buckets {
        for (k, &i) in bucket.iter().enumerate() {
            for &j in &bucket[k + 1..] {
                if adjacent(i, j) {
                    continue;
                }
                if segments_intersect(
                    vertices[i],
                    vertices[(i + 1) % n],
                    vertices[j],
                    vertices[(j + 1) % n],
                ) {
                    return false;
                }
            }
        }
    }
    true
}

/// Crossing-number test; points on the boundary count as inside.
pub fn point_in_polygon(curve: &PolygonalCurve, pt: Point2) -> bool {
    let v = &curve.vertices;
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        if orient(a, b, pt) == 0.0 && on_segment(a, b, pt) {
            return true;
        }
        if (a.y > pt.y) != (b.y > pt.y) {
            let x = a.x + (pt.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if pt.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Winding number of the closed polyline around `pt`.
pub fn winding_number(vertices: &[Point2], pt: Point2) -> i32 {
    let n = vertices.len();
    let mut w = 0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if a.y <= pt.y {
            if b.y > pt.y && orient(a, b, pt) > 0.0 {
                w += 1;
            }
        } else if b.y <= pt.y && orient(a, b, pt) < 0.0 {
            w -= 1;
        }
    }
    w
}
