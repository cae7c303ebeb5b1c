//! Conformal capacity of planar condensers on rectilinear grids, and a Monte
//! Carlo doubling-ratio measurement for plane quasiconformal maps.
//!
//! The discrete Dirichlet energy is the 5-point finite-difference energy
//! `sum w_e (v_a - v_b)^2` over grid edges with both ends in the domain. On a
//! uniform grid every weight is 1; on graded grids the weight is the dual
//! edge length over the primal edge length, which keeps the stencil
//! consistent when spacing varies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::doubling_exponent_constant;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::logreal::LogReal;

/// Energy above which a condenser is reported as having unbounded capacity.
pub const INFINITE_ENERGY: f64 = 1e8;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const MIN_DOUBLING_SAMPLES: usize = 100_000;
const MAX_CG_ITERATIONS: usize = 200_000;
const CHUNK: usize = 4096;

/// Tensor-product grid with sorted, strictly increasing node coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Grid {
    /// Square lattice with `nx * ny` nodes starting at `origin`.
    pub fn uniform(origin: Point2, spacing: f64, nx: usize, ny: usize) -> Result<Grid> {
        if !(spacing > 0.0 && spacing.is_finite()) || nx < 2 || ny < 2 || !origin.is_finite() {
            return Err(Error::InvalidInput("grid needs spacing > 0 and at least 2x2 nodes".into()));
        }
        Ok(Grid {
            xs: (0..nx).map(|i| origin.x + i as f64 * spacing).collect(),
            ys: (0..ny).map(|j| origin.y + j as f64 * spacing).collect(),
        })
    }

    /// Uniform lattice covering the square of half-width `half` about `center`,
    /// with nodes at `center + spacing * (i, j)`.
    pub fn centered(center: Point2, half: f64, spacing: f64) -> Result<Grid> {
        let m = (half / spacing).ceil() as usize;
        let origin = Point2::new(center.x - m as f64 * spacing, center.y - m as f64 * spacing);
        Grid::uniform(origin, spacing, 2 * m + 1, 2 * m + 1)
    }

    /// Graded grid: spacing `h0` at each focus, growing geometrically by
    /// `growth` with distance, capped near `h_max`. Foci are grid nodes.
    pub fn graded(
        x_range: (f64, f64),
        x_foci: &[f64],
        y_range: (f64, f64),
        y_foci: &[f64],
        h0: f64,
        growth: f64,
        h_max: f64,
    ) -> Result<Grid> {
        if !(h0 > 0.0) || !(growth >= 1.0) || !(h_max >= h0) {
            return Err(Error::InvalidInput("graded grid needs h0 > 0, growth >= 1, h_max >= h0".into()));
        }
        Ok(Grid {
            xs: graded_axis(x_range, x_foci, h0, growth, h_max)?,
            ys: graded_axis(y_range, y_foci, h0, growth, h_max)?,
        })
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.xs.len() + i
    }

    pub fn point(&self, idx: usize) -> Point2 {
        let n = self.xs.len();
        Point2::new(self.xs[idx % n], self.ys[idx / n])
    }

    /// Smallest spacing along either axis.
    pub fn min_spacing(&self) -> f64 {
        self.xs
            .windows(2)
            .chain(self.ys.windows(2))
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: &[f64]| v.len() >= 2 && v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0]);
        if ok(&self.xs) && ok(&self.ys) {
            Ok(())
        } else {
            Err(Error::InvalidInput("grid axes must be finite and strictly increasing".into()))
        }
    }

    // Dual cell width around node i of an axis (half cells at the ends).
    fn dual(axis: &[f64], i: usize) -> f64 {
        let lo = if i == 0 { axis[0] } else { 0.5 * (axis[i - 1] + axis[i]) };
        let hi = if i + 1 == axis.len() { axis[i] } else { 0.5 * (axis[i] + axis[i + 1]) };
        hi - lo
    }
}

fn graded_axis(range: (f64, f64), foci: &[f64], h0: f64, growth: f64, h_max: f64) -> Result<Vec<f64>> {
    let (a, b) = range;
    if !(a < b) {
        return Err(Error::InvalidInput(format!("empty axis range [{a}, {b}]")));
    }
    let mut breaks: Vec<f64> = foci.iter().copied().filter(|&f| f > a && f < b).collect();
    breaks.push(a);
    breaks.push(b);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let spacing = |x: f64| {
        let d = foci.iter().map(|&f| (x - f).abs()).fold(f64::INFINITY, f64::min);
        let d = if d.is_finite() { d } else { 0.0 };
        (h0 + (growth - 1.0) * d).min(h_max)
    };
    let mut out = vec![a];
    for w in breaks.windows(2) {
        let (p, q) = (w[0], w[1]);
        let mut pts = vec![p];
        let mut x = p;
        loop {
            let next = x + spacing(x);
            if next >= q - 0.5 * spacing(next.min(q)) {
                // stretch the marched points so the segment ends exactly at q
                let scale = (q - p) / (next.max(q) - p);
                out.extend(pts.iter().skip(1).map(|&y| p + (y - p) * scale));
                break;
            }
            pts.push(next);
            x = next;
        }
        out.push(q);
    }
    Ok(out)
}

/// A condenser `(F0, F1; domain)` on a grid. Masks are indexed by
/// [`Grid::index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondenserProblem {
    pub grid: Grid,
    pub plate0: Vec<bool>,
    pub plate1: Vec<bool>,
    pub domain: Vec<bool>,
}

impl CondenserProblem {
    /// Builds the masks by evaluating predicates at every node. Plates are
    /// forced into the domain.
    pub fn from_predicates(
        grid: Grid,
        domain: impl Fn(Point2) -> bool,
        plate0: impl Fn(Point2) -> bool,
        plate1: impl Fn(Point2) -> bool,
    ) -> CondenserProblem {
        let n = grid.len();
        let (mut d, mut f0, mut f1) = (vec![false; n], vec![false; n], vec![false; n]);
        for idx in 0..n {
            let p = grid.point(idx);
            f0[idx] = plate0(p);
            f1[idx] = plate1(p);
            d[idx] = f0[idx] || f1[idx] || domain(p);
        }
        CondenserProblem {
            grid,
            plate0: f0,
            plate1: f1,
            domain: d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let n = self.grid.len();
        if self.plate0.len() != n || self.plate1.len() != n || self.domain.len() != n {
            return Err(Error::InvalidInput("mask length does not match grid".into()));
        }
        if !self.plate0.iter().any(|&b| b) {
            return Err(Error::NoAdmissible("plate F0 is empty".into()));
        }
        if !self.plate1.iter().any(|&b| b) {
            return Err(Error::NoAdmissible("plate F1 is empty".into()));
        }
        for idx in 0..n {
            if self.plate0[idx] && self.plate1[idx] {
                return Err(Error::NoAdmissible(format!("plates overlap at {:?}", self.grid.point(idx))));
            }
            if (self.plate0[idx] || self.plate1[idx]) && !self.domain[idx] {
                return Err(Error::InvalidInput("plate node outside the domain".into()));
            }
        }
        // touching plates: a domain edge joining F0 to F1
        for (a, b, _) in self.edges() {
            if (self.plate0[a] && self.plate1[b]) || (self.plate1[a] && self.plate0[b]) {
                return Err(Error::NoAdmissible(format!("plates touch at {:?}", self.grid.point(a))));
            }
        }
        Ok(())
    }

    /// Domain edges `(a, b, weight)`.
    fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let horizontal = (0..ny).flat_map(move |j| {
            let dy = Grid::dual(&g.ys, j);
            (0..nx - 1).map(move |i| (g.index(i, j), g.index(i + 1, j), dy / (g.xs[i + 1] - g.xs[i])))
        });
        let vertical = (0..ny - 1).flat_map(move |j| {
            (0..nx).map(move |i| {
                let dx = Grid::dual(&g.xs, i);
                (g.index(i, j), g.index(i, j + 1), dx / (g.ys[j + 1] - g.ys[j]))
            })
        });
        horizontal
            .chain(vertical)
            .filter(move |&(a, b, _)| self.domain[a] && self.domain[b])
    }

    /// Discrete energy of nodal values `v`.
    pub fn energy(&self, v: &[f64]) -> f64 {
        self.edges().map(|(a, b, w)| w * (v[a] - v[b]).powi(2)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub value: f64,
    pub iterations: usize,
    /// Final relative residual of the interior system.
    pub residual: f64,
    /// Smallest grid spacing.
    pub grid_spacing: f64,
    pub nodes: usize,
    /// Energy exceeded [`INFINITE_ENERGY`].
    pub unbounded: bool,
}

/// Sparse symmetric M-matrix on the free nodes: `diag[i] x_i - sum vals x_cols`.
struct Interior {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
    rhs: Vec<f64>,
}

impl Interior {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
            for (k, yi) in out.iter_mut().enumerate() {
                let i = c * CHUNK + k;
                let mut s = self.diag[i] * x[i];
                for e in self.offsets[i]..self.offsets[i + 1] {
                    s -= self.vals[e] * x[self.cols[e]];
                }
                *yi = s;
            }
        });
    }

    /// Pivots of the zero-fill incomplete Cholesky factorisation
    /// `M = (D + L) D^-1 (D + L^T)`, exact IC(0) for 5-point stencils.
    fn ic0_pivots(&self) -> Vec<f64> {
        let m = self.diag.len();
        let mut d = vec![0.0; m];
        for i in 0..m {
            let mut s = self.diag[i];
            for e in self.offsets[i]..self.offsets[i + 1] {
                let k = self.cols[e];
                if k < i {
                    s -= self.vals[e] * self.vals[e] / d[k];
                }
            }
            d[i] = if s > 1e-12 * self.diag[i] { s } else { self.diag[i] };
        }
        d
    }

    fn precondition(&self, d: &[f64], r: &[f64], z: &mut [f64]) {
        let m = d.len();
        for i in 0..m {
            let mut s = r[i];
            for e in self.offsets[i]..self.offsets[i + 1] {
                let k = self.cols[e];
                if k < i {
                    s += self.vals[e] * z[k];
                }
            }
            z[i] = s / d[i];
        }
        for i in (0..m).rev() {
            let mut s = 0.0;
            for e in self.offsets[i]..self.offsets[i + 1] {
                let k = self.cols[e];
                if k > i {
                    s += self.vals[e] * z[k];
                }
            }
            z[i] += s / d[i];
        }
    }
}

// Chunked dot product: the summation order is independent of thread count.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

/// Minimises the discrete Dirichlet energy with `v = 0` on F0 and `v = 1`
/// on F1 by conjugate gradients (incomplete Cholesky preconditioner) on the
/// free nodes.
pub fn solve_capacity(problem: &CondenserProblem, tol: f64) -> Result<CapacityResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    problem.validate()?;
    let n = problem.grid.len();
    let edges: Vec<(usize, usize, f64)> = problem.edges().collect();
    let mut free: Vec<bool> = (0..n)
        .map(|i| problem.domain[i] && !problem.plate0[i] && !problem.plate1[i])
        .collect();
    // free components that never meet a plate carry zero energy: drop them
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b, _) in &edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut reached = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&i| problem.plate0[i] || problem.plate1[i]).collect();
    for &i in &stack {
        reached[i] = true;
    }
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if free[j] && !reached[j] {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    drop(adj);
    for i in 0..n {
        free[i] &= reached[i];
    }

    let mut slot = vec![usize::MAX; n];
    let mut m = 0;
    for i in 0..n {
        if free[i] {
            slot[i] = m;
            m += 1;
        }
    }
    let mut neighbours: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut diag = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for &(a, b, w) in &edges {
        for (p, q) in [(a, b), (b, a)] {
            if !free[p] {
                continue;
            }
            let s = slot[p];
            diag[s] += w;
            if free[q] {
                neighbours[s].push((slot[q], w));
            } else if problem.plate1[q] {
                rhs[s] += w;
            }
        }
    }
    let mut offsets = Vec::with_capacity(m + 1);
    offsets.push(0);
    let (mut cols, mut vals) = (Vec::new(), Vec::new());
    for row in &neighbours {
        for &(c, w) in row {
            cols.push(c);
            vals.push(w);
        }
        offsets.push(cols.len());
    }
    drop(neighbours);
    let sys = Interior { offsets, cols, vals, diag, rhs };
    let (x, iterations, residual) = conjugate_gradient(&sys, tol)?;

    let mut v = vec![0.0; n];
    for i in 0..n {
        if problem.plate1[i] {
            v[i] = 1.0;
        } else if free[i] {
            v[i] = x[slot[i]];
        }
    }
    let value: f64 = edges.iter().map(|&(a, b, w)| w * (v[a] - v[b]).powi(2)).sum();
    Ok(CapacityResult {
        value,
        iterations,
        residual,
        grid_spacing: problem.grid.min_spacing(),
        nodes: m,
        unbounded: value > INFINITE_ENERGY,
    })
}

fn conjugate_gradient(sys: &Interior, tol: f64) -> Result<(Vec<f64>, usize, f64)> {
    let m = sys.rhs.len();
    let mut x = vec![0.0; m];
    let b_norm = dot(&sys.rhs, &sys.rhs).sqrt();
    if m == 0 || b_norm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let pivots = sys.ic0_pivots();
    let mut r = sys.rhs.clone();
    let mut z = vec![0.0; m];
    sys.precondition(&pivots, &r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; m];
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for it in 1..=MAX_CG_ITERATIONS {
        sys.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        res = dot(&r, &r).sqrt() / b_norm;
        if res <= tol {
            return Ok((x, it, res));
        }
        sys.precondition(&pivots, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Err(Error::NonConverged {
        residual: res,
        iterations: MAX_CG_ITERATIONS,
    })
}

/// Annulus `r < |z - center| < R` on `grid`: F0 is the closed inner disc,
/// F1 everything outside radius R.
pub fn annulus_problem(grid: Grid, center: Point2, r: f64, big_r: f64) -> Result<CondenserProblem> {
    if !(r > 0.0 && big_r > r) {
        return Err(Error::InvalidInput(format!("annulus needs 0 < r < R, got r = {r}, R = {big_r}")));
    }
    Ok(CondenserProblem::from_predicates(
        grid,
        |_| true,
        |p| p.dist(center) <= r,
        |p| p.dist(center) >= big_r,
    ))
}

/// Annulus centred at the origin on a uniform grid of the given spacing.
pub fn annulus(r: f64, big_r: f64, spacing: f64) -> Result<CondenserProblem> {
    let grid = Grid::centered(Point2::default(), big_r + 2.0 * spacing, spacing)?;
    annulus_problem(grid, Point2::default(), r, big_r)
}

/// Exact annulus capacity `2 pi / ln(R/r)`.
pub fn annulus_exact(r: f64, big_r: f64) -> f64 {
    2.0 * std::f64::consts::PI / (big_r / r).ln()
}

/// Grading used for the Teichmuller condenser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeichmullerGrid {
    /// Spacing at the segment endpoints and along the real axis.
    pub h0: f64,
    pub growth: f64,
}

impl Default for TeichmullerGrid {
    fn default() -> Self {
        TeichmullerGrid {
            h0: 1.0 / 128.0,
            growth: 1.1,
        }
    }
}

/// Far end of the truncated outer plate, as a multiple of t.
pub const TEICHMULLER_FAR: f64 = 64.0;
/// Half-width of the insulating box, as a multiple of t.
pub const TEICHMULLER_BOX: f64 = 128.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeichmullerResult {
    pub t: f64,
    pub capacity: CapacityResult,
    /// `(2 pi / ln 32t, 2 pi / ln(t + 1)]`
    pub bracket: (f64, f64),
    pub in_bracket: bool,
}

/// Capacity of the truncated Teichmuller condenser with plates `[-1, 0]`
/// and `[t, 64 t]` inside an insulating box of half-width `128 t`.
pub fn teichmuller_capacity(t: f64, grid: TeichmullerGrid) -> Result<TeichmullerResult> {
    if !(t > 1.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("Teichmuller parameter must exceed 1, got {t}")));
    }
    let far = TEICHMULLER_FAR * t;
    let half = TEICHMULLER_BOX * t;
    let g = Grid::graded(
        (-half, half),
        &[-1.0, 0.0, t, far],
        (-half, half),
        &[0.0],
        grid.h0,
        grid.growth,
        f64::INFINITY,
    )?;
    let problem = CondenserProblem::from_predicates(
        g,
        |_| true,
        |p| p.y == 0.0 && (-1.0..=0.0).contains(&p.x),
        |p| p.y == 0.0 && (t..=far).contains(&p.x),
    );
    let capacity = solve_capacity(&problem, DEFAULT_TOL)?;
    let tau = 2.0 * std::f64::consts::PI;
    let bracket = (tau / (32.0 * t).ln(), tau / (t + 1.0).ln());
    let in_bracket = capacity.value > bracket.0 && capacity.value <= bracket.1;
    Ok(TeichmullerResult {
        t,
        capacity,
        bracket,
        in_bracket,
    })
}

/// Relative grid tolerance allowed below the annular lower bound.
pub const ANNULAR_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnularCheck {
    pub value: f64,
    /// `(2 / pi) ln(R / r)`
    pub bound: f64,
    pub tolerance: f64,
    pub holds: bool,
    pub capacity: CapacityResult,
}

/// Capacity of two polyline continua relative to the annulus
/// `r < |z| < R` (insulated circles), compared with `(2/pi) ln(R/r)`.
pub fn annular_lower_bound_check(
    r: f64,
    big_r: f64,
    f0_path: &[Point2],
    f1_path: &[Point2],
    spacing: f64,
) -> Result<AnnularCheck> {
    if !(r > 0.0 && big_r > r) {
        return Err(Error::InvalidInput(format!("annulus needs 0 < r < R, got r = {r}, R = {big_r}")));
    }
    for (name, path) in [("F0", f0_path), ("F1", f1_path)] {
        if path.is_empty() {
            return Err(Error::NoAdmissible(format!("{name} path is empty")));
        }
        let lo = path.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
        let hi = path.iter().map(|p| p.norm()).fold(0.0, f64::max);
        if lo > r * (1.0 + 1e-12) || hi < big_r * (1.0 - 1e-12) {
            return Err(Error::InvalidInput(format!(
                "{name} does not cross every circle between r = {r} and R = {big_r} (radii {lo}..{hi})"
            )));
        }
    }
    let grid = Grid::centered(Point2::default(), big_r + 2.0 * spacing, spacing)?;
    // 0.75 h > h / sqrt 2 keeps the rasterised path 4-connected
    let reach = 0.75 * spacing;
    let inside = |p: Point2| {
        let q = p.norm();
        q >= r && q <= big_r
    };
    let problem = CondenserProblem::from_predicates(
        grid,
        inside,
        |p| inside(p) && path_distance(f0_path, p) <= reach,
        |p| inside(p) && path_distance(f1_path, p) <= reach,
    );
    let capacity = solve_capacity(&problem, DEFAULT_TOL)?;
    let bound = 2.0 / std::f64::consts::PI * (big_r / r).ln();
    let tolerance = ANNULAR_TOLERANCE * bound;
    Ok(AnnularCheck {
        value: capacity.value,
        bound,
        tolerance,
        holds: capacity.value >= bound - tolerance,
        capacity,
    })
}

fn path_distance(path: &[Point2], p: Point2) -> f64 {
    if path.len() == 1 {
        return path[0].dist(p);
    }
    path.windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let len2 = d.dot(d);
            let s = if len2 > 0.0 { ((p - w[0]).dot(d) / len2).clamp(0.0, 1.0) } else { 0.0 };
            (w[0] + d * s).dist(p)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Plane quasiconformal maps with a closed-form inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum QcTestMap {
    /// `f(z) = z |z|^(1/K - 1)`, K-quasiconformal.
    RadialStretch { k: f64 },
}

impl QcTestMap {
    pub fn k(&self) -> f64 {
        match *self {
            QcTestMap::RadialStretch { k } => k,
        }
    }

    pub fn apply(&self, z: Point2) -> Point2 {
        match *self {
            QcTestMap::RadialStretch { k } => {
                let n = z.norm();
                if n == 0.0 {
                    z
                } else {
                    z * n.powf(1.0 / k - 1.0)
                }
            }
        }
    }

    pub fn inverse(&self, w: Point2) -> Point2 {
        match *self {
            QcTestMap::RadialStretch { k } => {
                let n = w.norm();
                if n == 0.0 {
                    w
                } else {
                    w * n.powf(k - 1.0)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingResult {
    /// `|f(D(z0, 2r))| / |f(D(z0, r))|`
    pub ratio: f64,
    /// `exp{K pi^2 (2 + pi^4)^2 / (2 ln 3)}`
    pub bound: LogReal,
    pub holds: bool,
    pub samples: usize,
    pub seed: u64,
}

/// Monte Carlo doubling ratio of the image measure: samples uniformly in a
/// box around `f(D(z0, 2r))` and classifies points through the inverse map.
pub fn doubling_ratio(map: &QcTestMap, z0: Point2, r: f64, samples: usize, seed: u64) -> Result<DoublingResult> {
    let k = map.k();
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!("K must be >= 1, got {k}")));
    }
    if !(r > 0.0 && r.is_finite()) || !z0.is_finite() {
        return Err(Error::InvalidInput("doubling needs a finite centre and r > 0".into()));
    }
    if samples < MIN_DOUBLING_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "resolution too low: {samples} samples (minimum {MIN_DOUBLING_SAMPLES})"
        )));
    }
    // the image of the disc is bounded by the image of its circle
    let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for i in 0..4096 {
        let th = 2.0 * std::f64::consts::PI * i as f64 / 4096.0;
        let w = map.apply(z0 + Point2::new(th.cos(), th.sin()) * (2.0 * r));
        lo = Point2::new(lo.x.min(w.x), lo.y.min(w.y));
        hi = Point2::new(hi.x.max(w.x), hi.y.max(w.y));
    }
    let pad = (hi - lo) * 0.02;
    let (lo, hi) = (lo - pad, hi + pad);

    const MC_CHUNK: usize = 1 << 16;
    let chunks = samples.div_ceil(MC_CHUNK);
    let counts: Vec<(u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let (mut inner, mut outer) = (0u64, 0u64);
            for _ in 0..count {
                let w = Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
                let d = map.inverse(w).dist(z0);
                if d < 2.0 * r {
                    outer += 1;
                    if d < r {
                        inner += 1;
                    }
                }
            }
            (inner, outer)
        })
        .collect();
    let inner: u64 = counts.iter().map(|c| c.0).sum();
    let outer: u64 = counts.iter().map(|c| c.1).sum();
    if inner == 0 {
        return Err(Error::InvalidInput("no samples landed in the inner image".into()));
    }
    let ratio = outer as f64 / inner as f64;
    let bound = LogReal::from_ln(k * doubling_exponent_constant());
    let holds = LogReal::from_f64(ratio)? <= bound;
    Ok(DoublingResult {
        ratio,
        bound,
        holds,
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_axis_contains_foci_and_grows() {
        let xs = graded_axis((-10.0, 10.0), &[-1.0, 0.0, 2.0], 0.01, 1.2, 1.0).unwrap();
        for f in [-10.0, -1.0, 0.0, 2.0, 10.0] {
            assert!(xs.contains(&f), "{f}");
        }
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        let h = xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        // the cap holds up to the final stretch of each segment
        assert!(h <= 1.5 && h > 0.5, "{h}");
    }

    #[test]
    fn uniform_weights_are_one() {
        let g = Grid::uniform(Point2::default(), 0.5, 4, 3).unwrap();
        let p = CondenserProblem::from_predicates(g, |_| true, |p| p.x == 0.0, |p| p.x == 1.5);
        let interior: Vec<f64> = p
            .edges()
            .filter(|&(a, b, _)| {
                let (pa, pb) = (p.grid.point(a), p.grid.point(b));
                pa.y == 0.5 && pb.y == 0.5
            })
            .map(|e| e.2)
            .collect();
        assert!(interior.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn strip_capacity_is_exact() {
        // linear potential is discrete-harmonic: capacity = height / width
        let g = Grid::uniform(Point2::default(), 0.25, 9, 5).unwrap();
        let p = CondenserProblem::from_predicates(g, |_| true, |p| p.x == 0.0, |p| p.x == 2.0);
        let c = solve_capacity(&p, 1e-12).unwrap();
        assert!((c.value - 0.5).abs() < 1e-12, "{}", c.value);
    }

    #[test]
    fn radial_stretch_inverse() {
        let m = QcTestMap::RadialStretch { k: 3.0 };
        let z = Point2::new(0.3, -1.7);
        assert!(m.inverse(m.apply(z)).dist(z) < 1e-14);
    }
}
