//! Geometric constants of Jordan curves: Ahlfors three-point and
//! bounded-turning estimates, and the chain of quasiconformality bounds.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::ConformalMap;
use crate::error::{Error, Result};
use crate::geometry::{orient, Point2};
use crate::logreal::LogReal;

/// Above this many vertices an exhaustive request is strided automatically.
pub const EXHAUSTIVE_LIMIT: usize = 1500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AhlforsMethod {
    BoundedTurning,
    ThreePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AhlforsEstimate {
    pub c_hat: f64,
    /// `(i, k, j)`: the chord endpoints `i`, `j` and the arc vertex `k` that
    /// realises the maximum.
    pub witness: (usize, usize, usize),
    pub method: AhlforsMethod,
    pub vertex_count: usize,
    pub stride: usize,
    /// True when only every `stride`-th vertex served as a chord endpoint;
    /// `c_hat` is then a lower bound for the exhaustive value.
    pub subsampled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QcProvenance {
    AhlforsC,
    StarBeta,
    SpiralBeta,
    MCondition,
    Direct,
}

/// Quasiconformality coefficient `K >= 1`, carried in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QcCoefficient {
    /// `K` itself; `k_log.ln()` is `ln K`.
    pub k_log: LogReal,
    pub provenance: QcProvenance,
}

impl QcCoefficient {
    pub fn direct(k: f64) -> Result<QcCoefficient> {
        if !(k >= 1.0) || !k.is_finite() {
            return Err(Error::InvalidInput(format!("K must be >= 1, got {k}")));
        }
        Ok(QcCoefficient {
            k_log: LogReal::from_f64(k)?,
            provenance: QcProvenance::Direct,
        })
    }

    pub fn k(&self) -> LogReal {
        self.k_log
    }
}

/// Convex hull of a growing simple polyline (Melkman), holding vertex ids.
struct RunningHull {
    deque: VecDeque<usize>,
    /// collinear prefix: extreme points seen so far
    line: Option<(usize, usize)>,
}

impl RunningHull {
    fn new() -> RunningHull {
        RunningHull {
            deque: VecDeque::new(),
            line: None,
        }
    }

    fn push(&mut self, v: &[Point2], idx: usize) {
        let p = v[idx];
        if self.deque.is_empty() {
            match self.line {
                None => {
                    self.line = Some((idx, idx));
                    return;
                }
                Some((a, b)) => {
                    if a == b {
                        self.line = Some((a, idx));
                        return;
                    }
                    let o = orient(v[a], v[b], p);
                    if o == 0.0 {
                        // extend the collinear run to its extreme points
                        let dir = v[b] - v[a];
                        let t = (p - v[a]).dot(dir);
                        if t < 0.0 {
                            self.line = Some((idx, b));
                        } else if t > dir.dot(dir) {
                            self.line = Some((a, idx));
                        }
                        return;
                    }
                    self.deque = if o > 0.0 {
                        VecDeque::from(vec![idx, a, b, idx])
                    } else {
                        VecDeque::from(vec![idx, b, a, idx])
                    };
                    return;
                }
            }
        }
        let d = &self.deque;
        let n = d.len();
        if orient(v[d[0]], v[d[1]], p) > 0.0 && orient(v[d[n - 2]], v[d[n - 1]], p) > 0.0 {
            return;
        }
        while self.deque.len() > 2 && orient(v[self.deque[0]], v[self.deque[1]], p) <= 0.0 {
            self.deque.pop_front();
        }
        self.deque.push_front(idx);
        while self.deque.len() > 2 {
            let n = self.deque.len();
            if orient(v[self.deque[n - 2]], v[self.deque[n - 1]], p) <= 0.0 {
                self.deque.pop_back();
            } else {
                break;
            }
        }
        self.deque.push_back(idx);
    }

    /// Farthest hull vertex from `p`: (squared distance, vertex id).
    fn farthest(&self, v: &[Point2], p: Point2) -> (f64, usize) {
        let mut best = (0.0, usize::MAX);
        let mut consider = |i: usize| {
            let d = v[i].dist2(p);
            if d > best.0 {
                best = (d, i);
            }
        };
        if self.deque.is_empty() {
            if let Some((a, b)) = self.line {
                consider(a);
                consider(b);
            }
        } else {
            for &i in &self.deque {
                consider(i);
            }
        }
        best
    }
}

/// Per-start tables over the sampled vertices.
struct ArcTables {
    samples: Vec<usize>,
    /// `diam[r][c]`: diameter of the forward arc from `samples[r]` to `samples[c]`
    diam: Vec<Vec<f64>>,
    /// `reach_fwd[r][c]`: max distance from `samples[r]` over that forward arc
    reach_fwd: Vec<Vec<f64>>,
    /// `reach_bwd[r][c]`: max distance from `samples[r]` over the forward arc
    /// from `samples[c]` to `samples[r]`
    reach_bwd: Vec<Vec<f64>>,
}

fn check_vertices(v: &[Point2], stride: usize) -> Result<()> {
    if v.len() < 3 {
        return Err(Error::InvalidInput("curve needs at least 3 vertices".into()));
    }
    if stride == 0 {
        return Err(Error::InvalidInput("stride must be >= 1".into()));
    }
    let n = v.len();
    if let Some(i) = (0..n).find(|&i| v[i] == v[(i + 1) % n]) {
        return Err(Error::CoincidentVertices(i));
    }
    Ok(())
}

fn effective_stride(n: usize, stride: usize) -> usize {
    if stride == 1 && n > EXHAUSTIVE_LIMIT {
        n.div_ceil(EXHAUSTIVE_LIMIT)
    } else {
        stride
    }
}

fn build_tables(v: &[Point2], stride: usize) -> ArcTables {
    let n = v.len();
    let samples: Vec<usize> = (0..n).step_by(stride).collect();
    let m = samples.len();
    let mut column = vec![usize::MAX; n];
    for (c, &s) in samples.iter().enumerate() {
        column[s] = c;
    }
    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = samples
        .par_iter()
        .map(|&s| {
            let mut diam = vec![0.0; m];
            let mut fwd = vec![0.0; m];
            let mut bwd = vec![0.0; m];
            let mut hull = RunningHull::new();
            let mut d2 = 0.0f64;
            let mut r2 = 0.0f64;
            for step in 0..n {
                let idx = (s + step) % n;
                if step > 0 {
                    d2 = d2.max(hull.farthest(v, v[idx]).0);
                    r2 = r2.max(v[idx].dist2(v[s]));
                }
                hull.push(v, idx);
                if column[idx] != usize::MAX {
                    diam[column[idx]] = d2.sqrt();
                    fwd[column[idx]] = r2.sqrt();
                }
            }
            let mut r2 = 0.0f64;
            for step in 0..n {
                let idx = (s + n - step) % n;
                if step > 0 {
                    r2 = r2.max(v[idx].dist2(v[s]));
                }
                if column[idx] != usize::MAX {
                    bwd[column[idx]] = r2.sqrt();
                }
            }
            (diam, fwd, bwd)
        })
        .collect();
    let mut diam = Vec::with_capacity(m);
    let mut reach_fwd = Vec::with_capacity(m);
    let mut reach_bwd = Vec::with_capacity(m);
    for (d, f, b) in rows {
        diam.push(d);
        reach_fwd.push(f);
        reach_bwd.push(b);
    }
    ArcTables {
        samples,
        diam,
        reach_fwd,
        reach_bwd,
    }
}

/// Whether the forward arc `i -> j` is the smaller-diameter one; ties go to
/// the arc with fewer vertices, then to the forward arc.
fn forward_is_smaller(n: usize, i: usize, j: usize, d_fwd: f64, d_bwd: f64) -> bool {
    if d_fwd != d_bwd {
        return d_fwd < d_bwd;
    }
    let fwd_len = (j + n - i) % n;
    let bwd_len = (i + n - j) % n;
    fwd_len <= bwd_len
}

/// Vertex ids of the forward arc `i -> j`, inclusive.
fn arc(n: usize, i: usize, j: usize) -> impl Iterator<Item = usize> {
    let len = (j + n - i) % n;
    (0..=len).map(move |k| (i + k) % n)
}

fn estimate(v: &[Point2], stride: usize, method: AhlforsMethod) -> Result<AhlforsEstimate> {
    check_vertices(v, stride)?;
    let n = v.len();
    let stride = effective_stride(n, stride);
    let t = build_tables(v, stride);
    let m = t.samples.len();

    // (ratio, row a, row b, arc is forward a->b, zeta1 is a)
    let best = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut best = (0.0f64, a, a, true, true);
            for b in a + 1..m {
                let (i, j) = (t.samples[a], t.samples[b]);
                let chord = v[i].dist(v[j]);
                let fwd = forward_is_smaller(n, i, j, t.diam[a][b], t.diam[b][a]);
                let candidates = match method {
                    AhlforsMethod::BoundedTurning => {
                        let d = if fwd { t.diam[a][b] } else { t.diam[b][a] };
                        [(d / chord, true), (f64::NEG_INFINITY, true)]
                    }
                    AhlforsMethod::ThreePoint => {
                        let (from_i, from_j) = if fwd {
                            (t.reach_fwd[a][b], t.reach_bwd[b][a])
                        } else {
                            (t.reach_bwd[a][b], t.reach_fwd[b][a])
                        };
                        [(from_i / chord, true), (from_j / chord, false)]
                    }
                };
                for (ratio, zeta1_is_a) in candidates {
                    if ratio > best.0 {
                        best = (ratio, a, b, fwd, zeta1_is_a);
                    }
                }
            }
            best
        })
        .reduce_with(|x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x })
        .expect("at least one sample row");

    let (c_hat, a, b, fwd, zeta1_is_a) = best;
    let (i, j) = (t.samples[a], t.samples[b]);
    let (start, end) = if fwd { (i, j) } else { (j, i) };
    let k = match method {
        AhlforsMethod::BoundedTurning => {
            // re-walk the arc to recover a diameter endpoint
            let mut hull = RunningHull::new();
            let mut best = (0.0, start);
            for idx in arc(n, start, end) {
                let (d2, _) = hull.farthest(v, v[idx]);
                if d2 > best.0 {
                    best = (d2, idx);
                }
                hull.push(v, idx);
            }
            best.1
        }
        AhlforsMethod::ThreePoint => {
            let base = if zeta1_is_a { i } else { j };
            arc(n, start, end)
                .max_by(|&x, &y| v[x].dist2(v[base]).total_cmp(&v[y].dist2(v[base])))
                .expect("arc is non-empty")
        }
    };
    let (wi, wj) = match method {
        AhlforsMethod::ThreePoint if !zeta1_is_a => (j, i),
        _ => (i, j),
    };
    Ok(AhlforsEstimate {
        c_hat: c_hat.max(1.0),
        witness: (wi, k, wj),
        method,
        vertex_count: n,
        stride,
        subsampled: stride > 1,
    })
}

/// `max diam(smaller subarc) / |x - y|` over (sampled) vertex pairs.
pub fn estimate_bounded_turning(vertices: &[Point2], stride: usize) -> Result<AhlforsEstimate> {
    estimate(vertices, stride, AhlforsMethod::BoundedTurning)
}

/// `max |z3 - z1| / |z2 - z1|` with `z3` on the smaller-diameter arc between
/// `z1` and `z2`.
pub fn estimate_three_point(vertices: &[Point2], stride: usize) -> Result<AhlforsEstimate> {
    estimate(vertices, stride, AhlforsMethod::ThreePoint)
}

/// `K < 2^-10 exp{(1 + e^{2 pi} C^5)^2}` for a curve with three-point constant `C`.
pub fn k_from_ahlfors(c: f64) -> Result<QcCoefficient> {
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::InvalidInput(format!("Ahlfors constant must be >= 1, got {c}")));
    }
    let inner = 1.0 + (2.0 * PI + 5.0 * c.ln()).exp();
    Ok(QcCoefficient {
        k_log: LogReal::from_ln(inner * inner - 10.0 * 2f64.ln()),
        provenance: QcProvenance::AhlforsC,
    })
}

/// `M(K) < e^{pi K} / 16`.
pub fn m_from_k(k: f64) -> Result<LogReal> {
    if !(k >= 1.0) {
        return Err(Error::InvalidInput(format!("K must be >= 1, got {k}")));
    }
    Ok(LogReal::from_ln(PI * k - 16f64.ln()))
}

/// `M(K)` for a log-space `K`.
pub fn m_from_k_log(k: LogReal) -> Result<LogReal> {
    let pik = k * LogReal::from_ln(PI.ln());
    Ok(LogReal::exp_of(pik)? / LogReal::from_ln(16f64.ln()))
}

/// `K(M) < M^2`.
pub fn k_from_m(m: f64) -> Result<LogReal> {
    if !(m > 0.0) {
        return Err(Error::InvalidInput(format!("M must be > 0, got {m}")));
    }
    Ok(LogReal::from_ln(2.0 * m.ln()))
}

pub fn k_from_m_log(m: LogReal) -> LogReal {
    m.powf(2.0)
}

fn k_cot(beta: f64, provenance: QcProvenance) -> Result<QcCoefficient> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidInput(format!("beta must lie in [0, 1), got {beta}")));
    }
    let x = (1.0 - beta) * PI / 4.0;
    let ln_cot = x.cos().ln() - x.sin().ln();
    Ok(QcCoefficient {
        k_log: LogReal::from_ln((2.0 * ln_cot).max(0.0)),
        provenance,
    })
}

/// `K = cot^2((1 - beta) pi / 4)` for beta-star-shaped domains.
pub fn k_star_shaped(beta: f64) -> Result<QcCoefficient> {
    k_cot(beta, QcProvenance::StarBeta)
}

/// Same coefficient for beta-spiral-shaped domains.
pub fn k_spiral_shaped(beta: f64) -> Result<QcCoefficient> {
    k_cot(beta, QcProvenance::SpiralBeta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta: f64,
    pub grid: usize,
}

/// `(2/pi) sup |arg(z phi'(z) / phi(z))|` over the polar grid
/// `r_i = i/(grid+1)`, `theta_j = 2 pi j / grid`.
pub fn estimate_beta(map: &ConformalMap, grid: usize) -> Result<BetaEstimate> {
    if grid < 2 {
        return Err(Error::InvalidInput("grid must be >= 2".into()));
    }
    map.validate()?;
    if map.phi(Complex64::new(0.0, 0.0)).norm() != 0.0 {
        return Err(Error::UnsupportedMap("star-shape estimate needs phi(0) = 0".into()));
    }
    let sup = (1..=grid)
        .into_par_iter()
        .map(|i| {
            let r = i as f64 / (grid + 1) as f64;
            (0..grid)
                .map(|j| {
                    let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / grid as f64);
                    let w = z * map.dphi(z) / map.phi(z);
                    w.arg().abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(BetaEstimate {
        beta: 2.0 / PI * sup,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolygonalCurve;

    #[test]
    fn circle_proxy_is_near_one() {
        let c = PolygonalCurve::regular(512, 1.0).unwrap();
        let bt = estimate_bounded_turning(c.vertices(), 1).unwrap();
        let tp = estimate_three_point(c.vertices(), 1).unwrap();
        assert!((bt.c_hat - 1.0).abs() < 0.01, "{}", bt.c_hat);
        assert!((tp.c_hat - 1.0).abs() < 0.01, "{}", tp.c_hat);
        assert!(!bt.subsampled);
    }

    #[test]
    fn four_vertex_square_is_one() {
        let sq = PolygonalCurve::unit_square();
        assert_eq!(estimate_bounded_turning(sq.vertices(), 1).unwrap().c_hat, 1.0);
    }

    #[test]
    fn coincident_vertices_rejected() {
        let v = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(matches!(estimate_bounded_turning(&v, 1), Err(Error::CoincidentVertices(1))));
        assert!(estimate_three_point(&v, 1).is_err());
        assert!(estimate_three_point(PolygonalCurve::unit_square().vertices(), 0).is_err());
    }

    #[test]
    fn large_curves_are_strided() {
        let c = PolygonalCurve::regular(3001, 1.0).unwrap();
        let e = estimate_bounded_turning(c.vertices(), 1).unwrap();
        assert!(e.subsampled);
        assert_eq!(e.stride, 3);
        assert!((e.c_hat - 1.0).abs() < 0.01);
    }

    #[test]
    fn running_hull_handles_collinear_start() {
        let v: Vec<Point2> = (0..5)
            .map(|i| Point2::new(i as f64, 0.0))
            .chain([Point2::new(4.0, 1.0), Point2::new(0.0, 1.0)])
            .collect();
        let mut hull = RunningHull::new();
        for i in 0..v.len() {
            hull.push(&v, i);
        }
        let (d2, far) = hull.farthest(&v, Point2::new(0.0, 0.0));
        assert_eq!(d2, 17.0);
        assert_eq!(far, 5);
    }

    #[test]
    fn k_from_ahlfors_values() {
        let k1 = k_from_ahlfors(1.0).unwrap().k_log.ln().unwrap();
        assert!((k1 - 287_816.364_975_897_2).abs() < 1e-6);
        let k32 = k_from_ahlfors(32.0).unwrap().k_log.ln().unwrap();
        assert!((k32 / 3.228_532_767_834_943e20 - 1.0).abs() < 1e-12);
        assert!(k_from_ahlfors(2.0).unwrap().k_log < k_from_ahlfors(3.0).unwrap().k_log);
        assert!(k_from_ahlfors(0.5).is_err());
    }

    #[test]
    fn m_condition_bounds() {
        let m = m_from_k(1.0).unwrap();
        assert!((m.to_f64() - 1.446_293_289_548_704).abs() < 1e-12);
        assert_eq!(k_from_m(1.0).unwrap().to_f64(), 1.0);
        let comp = k_from_m(m.to_f64()).unwrap().to_f64();
        assert!((comp - 2.091_764_279_393_612).abs() < 1e-12);
        let mk = m_from_k_log(LogReal::ONE).unwrap();
        assert!((mk.ln().unwrap() - m.ln().unwrap()).abs() < 1e-14);
        assert!((k_from_m_log(mk).to_f64() - comp).abs() < 1e-12);
        assert!(m_from_k(0.5).is_err());
        assert!(k_from_m(0.0).is_err());
    }

    #[test]
    fn star_shaped_coefficients() {
        assert!((k_star_shaped(0.0).unwrap().k_log.to_f64() - 1.0).abs() < 1e-14);
        let k = k_star_shaped(0.5).unwrap().k_log.to_f64();
        assert!((k - (1.0 + 2f64.sqrt()).powi(2)).abs() < 1e-12);
        let near_one = k_star_shaped(1.0 - 1e-15).unwrap();
        assert!(near_one.k_log.ln().unwrap().is_finite());
        assert!(near_one.k_log > k_star_shaped(0.99).unwrap().k_log);
        assert!(k_star_shaped(1.0).is_err());
        assert_eq!(k_spiral_shaped(0.5).unwrap().k_log, k_star_shaped(0.5).unwrap().k_log);
    }
}
