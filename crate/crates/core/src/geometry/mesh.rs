use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{orient, Point2, PolygonalCurve};
use crate::error::{Error, Result};

pub const DEFAULT_NODE_CAP: usize = 2_000_000;

/// Linear triangle mesh of a polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub nodes: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
}

impl TriMesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * orient(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Unique undirected edges, each as `(min, max)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| ordered(t[k], t[(k + 1) % 3])))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges()
            .iter()
            .map(|&(a, b)| self.nodes[a].dist(self.nodes[b]))
            .fold(0.0, f64::max)
    }

    /// Checks orientation, minimum area and conformity; returns a description
    /// of the first violation.
    pub fn check_invariants(&self, domain_area: f64) -> std::result::Result<(), String> {
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= self.nodes.len()) {
                return Err(format!("triangle {t} references a missing node"));
            }
            if self.triangle_area(t) <= 1e-14 * domain_area {
                return Err(format!("triangle {t} is degenerate or inverted"));
            }
        }
        // Conforming: each directed edge appears at most once and every
        // interior edge is matched by its reverse.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *directed.entry((tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count > 1 {
                return Err(format!("edge ({a},{b}) used twice with the same orientation"));
            }
            let boundary_edge = !directed.contains_key(&(b, a));
            if boundary_edge && !(self.boundary[a] && self.boundary[b]) {
                return Err(format!("hanging edge ({a},{b}) inside the mesh"));
            }
        }
        Ok(())
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Ear clipping of the exact polygon, then conforming longest-edge bisection
/// until every edge is at most `h_target`. Refinement runs coarse to fine with
/// Delaunay edge flips between levels, so the slivers left by ear clipping
/// do not propagate into the fine mesh.
pub fn triangulate(curve: &PolygonalCurve, h_target: f64) -> Result<TriMesh> {
    triangulate_with_cap(curve, h_target, DEFAULT_NODE_CAP)
}

pub fn triangulate_with_cap(curve: &PolygonalCurve, h_target: f64, node_cap: usize) -> Result<TriMesh> {
    if !(h_target > 0.0) || h_target >= curve.diameter() {
        return Err(Error::InvalidInput(format!(
            "h_target must lie in (0, diameter), got {h_target}"
        )));
    }
    if !super::is_simple(curve.vertices()) {
        return Err(Error::NotSimple);
    }
    let triangles = ear_clip(curve.vertices())?;
    let mut refiner = Refiner::new(curve.vertices().to_vec(), triangles, node_cap);
    let mut level = curve.diameter() / 2.0;
    while level > h_target {
        refiner.refine(level)?;
        refiner.delaunay_flips();
        level /= 2.0;
    }
    refiner.refine(h_target)?;
    Ok(refiner.into_mesh())
}

/// Smallest interior angle of the triangle, used to rank ears.
fn min_angle(a: Point2, b: Point2, c: Point2) -> f64 {
    let ang = |p: Point2, q: Point2, r: Point2| {
        let u = q - p;
        let v = r - p;
        u.cross(v).abs().atan2(u.dot(v))
    };
    ang(a, b, c).min(ang(b, c, a)).min(ang(c, a, b))
}

fn in_closed_triangle(a: Point2, b: Point2, c: Point2, p: Point2) -> bool {
    orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
}

/// Ear clipping that always removes the best-shaped available ear.
fn ear_clip(v: &[Point2]) -> Result<Vec<[usize; 3]>> {
    let n = v.len();
    let mut prev: Vec<usize> = (0..n).map(|i| (i + n - 1) % n).collect();
    let mut next: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    let mut alive = vec![true; n];
    let mut remaining = n;
    let mut out = Vec::with_capacity(n - 2);

    let is_convex = |prev: &[usize], next: &[usize], i: usize| orient(v[prev[i]], v[i], v[next[i]]) > 0.0;

    let ear_quality = |prev: &[usize], next: &[usize], alive: &[bool], i: usize| -> Option<f64> {
        let (a, b, c) = (prev[i], i, next[i]);
        if orient(v[a], v[b], v[c]) <= 0.0 {
            return None;
        }
        let mut j = next[c];
        while j != a {
            if alive[j]
                && orient(v[prev[j]], v[j], v[next[j]]) <= 0.0
                && v[j] != v[a]
                && v[j] != v[b]
                && v[j] != v[c]
                && in_closed_triangle(v[a], v[b], v[c], v[j])
            {
                return None;
            }
            j = next[j];
        }
        Some(min_angle(v[a], v[b], v[c]))
    };

    let mut quality: Vec<Option<f64>> = (0..n).map(|i| ear_quality(&prev, &next, &alive, i)).collect();
    while remaining > 3 {
        let best = (0..n)
            .filter(|&i| alive[i])
            .filter_map(|i| quality[i].map(|q| (i, q)))
            .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)));
        let Some((i, _)) = best else {
            return Err(Error::InvalidInput("ear clipping found no ear".into()));
        };
        let (a, c) = (prev[i], next[i]);
        let was_convex = [is_convex(&prev, &next, a), is_convex(&prev, &next, c)];
        out.push([a, i, c]);
        alive[i] = false;
        next[a] = c;
        prev[c] = a;
        remaining -= 1;
        quality[a] = ear_quality(&prev, &next, &alive, a);
        quality[c] = ear_quality(&prev, &next, &alive, c);
        // Blocked ears can only open up when a blocking vertex turns convex.
        let unblocked = (!was_convex[0] && is_convex(&prev, &next, a))
            || (!was_convex[1] && is_convex(&prev, &next, c));
        if unblocked {
            let mut j = next[c];
            while j != a {
                if quality[j].is_none() {
                    quality[j] = ear_quality(&prev, &next, &alive, j);
                }
                j = next[j];
            }
        }
    }
    let a = (0..n).find(|&i| alive[i]).expect("three vertices remain");
    let (b, c) = (next[a], next[next[a]]);
    if orient(v[a], v[b], v[c]) <= 0.0 {
        return Err(Error::InvalidInput("ear clipping left a degenerate triangle".into()));
    }
    out.push([a, b, c]);
    Ok(out)
}

const NONE: usize = usize::MAX;

/// `d` strictly inside the circumcircle of the counter-clockwise `(a, b, c)`,
/// with a relative margin so cocircular quads are left alone.
fn in_circle(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let (ad, bd, cd) = (a - d, b - d, c - d);
    let (la, lb, lc) = (ad.dot(ad), bd.dot(bd), cd.dot(cd));
    let det = la * bd.cross(cd) - lb * ad.cross(cd) + lc * ad.cross(bd);
    let scale = la.max(lb).max(lc);
    det > 1e-10 * scale * scale
}

struct Refiner {
    nodes: Vec<Point2>,
    boundary: Vec<bool>,
    tris: Vec<[usize; 3]>,
    /// undirected edge -> adjacent triangles
    adj: HashMap<(usize, usize), [usize; 2]>,
    node_cap: usize,
}

impl Refiner {
    fn new(nodes: Vec<Point2>, tris: Vec<[usize; 3]>, node_cap: usize) -> Refiner {
        let boundary = vec![true; nodes.len()];
        let mut r = Refiner {
            nodes,
            boundary,
            tris: Vec::new(),
            adj: HashMap::new(),
            node_cap,
        };
        for t in tris {
            r.push_tri(t);
        }
        r
    }

    fn push_tri(&mut self, t: [usize; 3]) -> usize {
        let id = self.tris.len();
        self.tris.push(t);
        for k in 0..3 {
            self.attach(ordered(t[k], t[(k + 1) % 3]), id);
        }
        id
    }

    fn attach(&mut self, e: (usize, usize), t: usize) {
        let slot = self.adj.entry(e).or_insert([NONE, NONE]);
        if slot[0] == NONE {
            slot[0] = t;
        } else {
            slot[1] = t;
        }
    }

    fn detach(&mut self, e: (usize, usize), t: usize) {
        if let Some(slot) = self.adj.get_mut(&e) {
            if slot[0] == t {
                slot[0] = slot[1];
            }
            slot[1] = NONE;
            if slot[0] == NONE {
                self.adj.remove(&e);
            }
        }
    }

    /// Total order on edges: squared length, then vertex ids.
    fn edge_key(&self, e: (usize, usize)) -> (f64, usize, usize) {
        (self.nodes[e.0].dist2(self.nodes[e.1]), e.0, e.1)
    }

    fn longest_edge(&self, t: usize) -> (usize, usize) {
        let tri = self.tris[t];
        (0..3)
            .map(|k| ordered(tri[k], tri[(k + 1) % 3]))
            .max_by(|a, b| {
                let (ka, kb) = (self.edge_key(*a), self.edge_key(*b));
                ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1)).then(ka.2.cmp(&kb.2))
            })
            .expect("triangle has edges")
    }

    fn neighbor(&self, t: usize, e: (usize, usize)) -> Option<usize> {
        let slot = self.adj[&e];
        let other = if slot[0] == t { slot[1] } else { slot[0] };
        (other != NONE).then_some(other)
    }

    fn refine(&mut self, h: f64) -> Result<()> {
        let h2 = h * h;
        let mut t = 0;
        while t < self.tris.len() {
            loop {
                let e = self.longest_edge(t);
                if self.edge_key(e).0 <= h2 {
                    break;
                }
                // walk the longest-edge propagation path to a terminal edge
                let mut cur = t;
                loop {
                    let e = self.longest_edge(cur);
                    match self.neighbor(cur, e) {
                        Some(nb) if self.longest_edge(nb) != e => cur = nb,
                        _ => {
                            self.bisect(e)?;
                            break;
                        }
                    }
                }
            }
            t += 1;
        }
        Ok(())
    }

    /// Lawson flips of interior edges until every one is locally Delaunay.
    /// Boundary edges have a single triangle and are never flipped.
    fn delaunay_flips(&mut self) {
        let mut stack: Vec<(usize, usize)> = self.adj.keys().copied().collect();
        stack.sort_unstable();
        while let Some(e) = stack.pop() {
            let Some(&[t1, t2]) = self.adj.get(&e) else {
                continue;
            };
            if t2 == NONE {
                continue;
            }
            let third = |t: [usize; 3]| t.into_iter().find(|&v| v != e.0 && v != e.1).expect("third vertex");
            let (c, d) = (third(self.tris[t1]), third(self.tris[t2]));
            let (mut a, mut b) = e;
            if orient(self.nodes[a], self.nodes[b], self.nodes[c]) < 0.0 {
                std::mem::swap(&mut a, &mut b);
            }
            let [pa, pb, pc, pd] = [a, b, c, d].map(|i| self.nodes[i]);
            if !(orient(pa, pd, pc) > 0.0 && orient(pd, pb, pc) > 0.0) || !in_circle(pa, pb, pc, pd) {
                continue;
            }
            for (t, tri) in [(t1, self.tris[t1]), (t2, self.tris[t2])] {
                for k in 0..3 {
                    self.detach(ordered(tri[k], tri[(k + 1) % 3]), t);
                }
            }
            self.tris[t1] = [a, d, c];
            self.tris[t2] = [d, b, c];
            for t in [t1, t2] {
                let tri = self.tris[t];
                for k in 0..3 {
                    self.attach(ordered(tri[k], tri[(k + 1) % 3]), t);
                }
            }
            stack.extend([ordered(a, d), ordered(d, b), ordered(b, c), ordered(c, a)]);
        }
    }

    fn bisect(&mut self, e: (usize, usize)) -> Result<()> {
        if self.nodes.len() >= self.node_cap {
            return Err(Error::NodeCap(self.node_cap));
        }
        let slot = self.adj[&e];
        let (a, b) = e;
        let m = self.nodes.len();
        self.nodes.push((self.nodes[a] + self.nodes[b]) * 0.5);
        self.boundary.push(slot[1] == NONE);
        self.adj.remove(&e);
        for &t in slot.iter().filter(|&&t| t != NONE) {
            let tri = self.tris[t];
            let k = (0..3)
                .find(|&k| ordered(tri[k], tri[(k + 1) % 3]) == e)
                .expect("edge belongs to triangle");
            let (p, q, r) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
            // (p, q, r) -> (p, m, r) reusing t, and (m, q, r) appended
            self.detach(ordered(q, r), t);
            self.tris[t] = [p, m, r];
            self.attach(ordered(p, m), t);
            self.attach(ordered(m, r), t);
            let id = self.tris.len();
            self.tris.push([m, q, r]);
            self.attach(ordered(m, q), id);
            self.attach(ordered(q, r), id);
            self.attach(ordered(m, r), id);
        }
        Ok(())
    }

    fn into_mesh(self) -> TriMesh {
        TriMesh {
            nodes: self.nodes,
            triangles: self.tris,
            boundary: self.boundary,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l_shape() -> PolygonalCurve {
        PolygonalCurve::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(2.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 2.0),
            Point2::new(0.0, 2.0),
        ])
        .unwrap()
    }

    #[test]
    fn unit_square_coarse_cover_is_exact() {
        let sq = PolygonalCurve::unit_square();
        let m = triangulate(&sq, 0.5).unwrap();
        assert_eq!(m.area(), 1.0);
        assert!(m.max_edge_length() <= 0.5);
        m.check_invariants(1.0).unwrap();
    }

    #[test]
    fn unit_square_fine_refinement_accounting() {
        let m = triangulate(&PolygonalCurve::unit_square(), 0.05).unwrap();
        assert!(m.max_edge_length() <= 0.05);
        assert!((400..=4000).contains(&m.nodes.len()), "{} nodes", m.nodes.len());
        assert!((m.area() - 1.0).abs() < 1e-12);
        m.check_invariants(1.0).unwrap();
    }

    #[test]
    fn l_shape_is_conforming_and_oriented() {
        let l = l_shape();
        let m = triangulate(&l, 0.1).unwrap();
        m.check_invariants(l.area()).unwrap();
        assert!((m.area() - 3.0).abs() < 1e-12 * 3.0);
        assert!(m.max_edge_length() <= 0.1);
    }

    #[test]
    fn boundary_flags_follow_polygon() {
        let m = triangulate(&PolygonalCurve::unit_square(), 0.2).unwrap();
        for (p, &b) in m.nodes.iter().zip(&m.boundary) {
            let on = p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
            assert_eq!(on, b, "{p:?}");
        }
    }

    #[test]
    fn ear_clip_handles_collinear_runs() {
        let sq = PolygonalCurve::unit_square().densified(5);
        let tris = ear_clip(sq.vertices()).unwrap();
        assert_eq!(tris.len(), sq.len() - 2);
        let area: f64 = tris
            .iter()
            .map(|t| 0.5 * orient(sq.vertices()[t[0]], sq.vertices()[t[1]], sq.vertices()[t[2]]))
            .sum();
        assert!((area - 1.0).abs() < 1e-14);
        assert!(tris
            .iter()
            .all(|t| orient(sq.vertices()[t[0]], sq.vertices()[t[1]], sq.vertices()[t[2]]) > 0.0));
    }

    #[test]
    fn node_cap_enforced() {
        let r = triangulate_with_cap(&PolygonalCurve::unit_square(), 0.01, 100);
        assert!(matches!(r, Err(Error::NodeCap(100))));
    }

    #[test]
    fn rejects_bad_h() {
        let sq = PolygonalCurve::unit_square();
        assert!(triangulate(&sq, 0.0).is_err());
        assert!(triangulate(&sq, 2.0).is_err());
    }
}
