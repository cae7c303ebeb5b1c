//! P1 finite-element Neumann-Laplace eigensolver and empirical
//! Poincare-Sobolev constants on the disc.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TriMesh;
use crate::quadrature::gauss_legendre;

pub const DEFAULT_EIG_TOL: f64 = 1e-8;
/// Second eigenvalue below this marks a disconnected mesh.
pub const DISCONNECTED_THRESHOLD: f64 = 1e-10;
const BLOCK: usize = 4;
const MAX_OUTER: usize = 200;
const CHUNK: usize = 4096;

/// Symmetric sparse matrix, upper triangle (with diagonal) stored row-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    pub dim: usize,
    pub row_offsets: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseSym {
    /// Builds from `(row, col, value)` triplets in any triangle; duplicates
    /// are summed in sorted order.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> SparseSym {
        for t in triplets.iter_mut() {
            if t.0 > t.1 {
                *t = (t.1, t.0, t.2);
            }
        }
        // stable sort keeps the per-entry summation order deterministic
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_offsets = vec![0; dim + 1];
        let mut cols = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..dim {
            row_offsets[i + 1] += row_offsets[i];
        }
        SparseSym {
            dim,
            row_offsets,
            cols,
            values,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        (self.row_offsets[i]..self.row_offsets[i + 1])
            .find(|&e| self.cols[e] == j)
            .map_or(0.0, |e| self.values[e])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Sum of all entries of the full matrix (`1^T A 1`).
    pub fn total(&self) -> f64 {
        (0..self.dim)
            .flat_map(|i| (self.row_offsets[i]..self.row_offsets[i + 1]).map(move |e| (i, e)))
            .map(|(i, e)| if self.cols[e] == i { self.values[e] } else { 2.0 * self.values[e] })
            .sum()
    }

    /// Full row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        self.mul(&vec![1.0; self.dim])
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            for e in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.cols[e];
                let v = self.values[e];
                y[i] += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    fn full(&self) -> FullCsr {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.dim];
        for i in 0..self.dim {
            for e in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.cols[e];
                rows[i].push((j, self.values[e]));
                if j != i {
                    rows[j].push((i, self.values[e]));
                }
            }
        }
        let mut offsets = vec![0];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        FullCsr { offsets, cols, vals }
    }
}

/// Both triangles stored, for row-parallel products.
struct FullCsr {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl FullCsr {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
            for (k, yi) in out.iter_mut().enumerate() {
                let i = c * CHUNK + k;
                *yi = (self.offsets[i]..self.offsets[i + 1])
                    .map(|e| self.vals[e] * x[self.cols[e]])
                    .sum();
            }
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.offsets.len() - 1)
            .map(|i| {
                (self.offsets[i]..self.offsets[i + 1])
                    .find(|&e| self.cols[e] == i)
                    .map_or(0.0, |e| self.vals[e])
            })
            .collect()
    }
}

/// Zero-fill incomplete Cholesky factor `L` (lower triangle, diagonal last
/// in each row) of a symmetric matrix given in full CSR form.
struct Ic0 {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Ic0 {
    /// Factors `A + shift * diag(A)`, increasing the shift until every pivot
    /// is positive (P1 stiffness on obtuse meshes is not an M-matrix).
    fn new(a: &FullCsr, diag: &[f64]) -> Ic0 {
        let mut shift = 0.0;
        loop {
            if let Some(f) = Ic0::try_factor(a, diag, shift) {
                return f;
            }
            shift = if shift == 0.0 { 1e-3 } else { 2.0 * shift };
        }
    }

    fn try_factor(a: &FullCsr, diag: &[f64], shift: f64) -> Option<Ic0> {
        let n = diag.len();
        let mut offsets = vec![0];
        let mut cols: Vec<usize> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        for i in 0..n {
            let start = cols.len();
            for e in a.offsets[i]..a.offsets[i + 1] {
                let k = a.cols[e];
                if k >= i {
                    break;
                }
                // L_ik = (a_ik - sum_j L_ij L_kj) / L_kk over the shared pattern
                let (ks, ke) = (offsets[k], offsets[k + 1] - 1);
                let mut s = a.vals[e];
                let (mut p, mut q) = (start, ks);
                while p < cols.len() && q < ke {
                    match cols[p].cmp(&cols[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            s -= vals[p] * vals[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                cols.push(k);
                vals.push(s / vals[ke]);
            }
            let pivot = diag[i] * (1.0 + shift) - vals[start..].iter().map(|v| v * v).sum::<f64>();
            if !(pivot > 1e-12 * diag[i]) {
                return None;
            }
            cols.push(i);
            vals.push(pivot.sqrt());
            offsets.push(cols.len());
        }
        Some(Ic0 { offsets, cols, vals })
    }

    /// `z = (L L^T)^-1 r`
    fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        for i in 0..n {
            let (s, e) = (self.offsets[i], self.offsets[i + 1] - 1);
            let mut acc = r[i];
            for k in s..e {
                acc -= self.vals[k] * z[self.cols[k]];
            }
            z[i] = acc / self.vals[e];
        }
        for i in (0..n).rev() {
            let (s, e) = (self.offsets[i], self.offsets[i + 1] - 1);
            z[i] /= self.vals[e];
            let zi = z[i];
            for k in s..e {
                z[self.cols[k]] -= self.vals[k] * zi;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

/// P1 stiffness and consistent mass matrices with natural boundary
/// conditions.
pub fn assemble_p1(mesh: &TriMesh) -> Result<(SparseSym, SparseSym)> {
    let n = mesh.nodes.len();
    let scale = mesh.max_edge_length().powi(2);
    let per_chunk: Vec<Result<(Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>)>> = mesh
        .triangles
        .par_chunks(1024)
        .enumerate()
        .map(|(c, tris)| {
            let mut k = Vec::with_capacity(tris.len() * 6);
            let mut m = Vec::with_capacity(tris.len() * 6);
            for (off, tri) in tris.iter().enumerate() {
                let p = tri.map(|i| mesh.nodes[i]);
                let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
                if !(area > 1e-14 * scale) {
                    return Err(Error::DegenerateElement(c * 1024 + off));
                }
                let b = [p[1].y - p[2].y, p[2].y - p[0].y, p[0].y - p[1].y];
                let cc = [p[2].x - p[1].x, p[0].x - p[2].x, p[1].x - p[0].x];
                for a in 0..3 {
                    for d in a..3 {
                        k.push((tri[a], tri[d], (b[a] * b[d] + cc[a] * cc[d]) / (4.0 * area)));
                        m.push((tri[a], tri[d], area / if a == d { 6.0 } else { 12.0 }));
                    }
                }
            }
            Ok((k, m))
        })
        .collect();
    let (mut kt, mut mt) = (Vec::new(), Vec::new());
    for r in per_chunk {
        let (k, m) = r?;
        kt.extend(k);
        mt.extend(m);
    }
    Ok((SparseSym::from_triplets(n, kt), SparseSym::from_triplets(n, mt)))
}

/// `u^T K u / u^T M u`.
pub fn rayleigh(u: &[f64], stiffness: &SparseSym, mass: &SparseSym) -> f64 {
    dot(u, &stiffness.mul(u)) / dot(u, &mass.mul(u))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub mu1: f64,
    /// `||K u - mu M u|| / ||u||_M`
    pub residual: f64,
    pub dofs: usize,
    /// Longest mesh edge.
    pub h: f64,
    pub iterations: usize,
    /// `|1^T M u| / (||1||_M ||u||_M)`
    pub constant_overlap: f64,
    /// Eigenvector, M-normalised.
    #[serde(skip)]
    pub vector: Vec<f64>,
}

struct ShiftedSystem {
    k: FullCsr,
    m: FullCsr,
    /// `K + sigma M`
    a: FullCsr,
    precond: Ic0,
    mass_ones: Vec<f64>,
    total_mass: f64,
}

impl ShiftedSystem {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.a.apply(x, y);
    }

    // Removes the constant mode: x -= (1^T M x / 1^T M 1) 1.
    fn deflate(&self, x: &mut [f64]) {
        let c = dot(&self.mass_ones, x) / self.total_mass;
        x.par_iter_mut().for_each(|v| *v -= c);
    }

    /// Incomplete-Cholesky preconditioned CG for `(K + sigma M) y = b`.
    fn solve(&self, b: &[f64], guess: Vec<f64>, tol: f64) -> Result<Vec<f64>> {
        let n = b.len();
        let mut x = guess;
        // P^T b: drop the rounding-level component that no deflated iterate
        // can remove
        let mut r = b.to_vec();
        let c = r.iter().sum::<f64>() / self.total_mass;
        r.iter_mut().zip(&self.mass_ones).for_each(|(ri, mi)| *ri -= c * mi);
        let b_norm = dot(&r, &r).sqrt();
        if b_norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut ax = vec![0.0; n];
        self.apply(&x, &mut ax);
        r.iter_mut().zip(&ax).for_each(|(ri, a)| *ri -= a);
        let mut z = vec![0.0; n];
        self.precond.solve(&r, &mut z);
        // keep the Krylov space off the (nearly singular) constant mode
        self.deflate(&mut z);
        let mut p = z.clone();
        let mut ap = ax;
        let mut rz = dot(&r, &z);
        let cap = 20 * n + 1000;
        let mut res = 1.0;
        for _ in 0..cap {
            self.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            r.par_iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
            res = dot(&r, &r).sqrt() / b_norm;
            if res <= tol {
                return Ok(x);
            }
            self.precond.solve(&r, &mut z);
            self.deflate(&mut z);
            let rz_new = dot(&r, &z);
            p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + rz_new / rz * *pi);
            rz = rz_new;
        }
        Err(Error::NonConverged {
            residual: res,
            iterations: cap,
        })
    }
}

/// Smallest nonzero Neumann eigenvalue of the P1 discretisation by
/// shift-invert block subspace iteration with Rayleigh-Ritz, the constant
/// mode deflated by M-projection at every step.
pub fn neumann_mu1(mesh: &TriMesh, tol: f64) -> Result<EigenResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    // bandwidth-reducing order: much better incomplete factors
    let order = reverse_cuthill_mckee(mesh);
    let mut rank = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let mesh = &TriMesh {
        nodes: order.iter().map(|&i| mesh.nodes[i]).collect(),
        triangles: mesh.triangles.iter().map(|t| t.map(|i| rank[i])).collect(),
        boundary: order.iter().map(|&i| mesh.boundary[i]).collect(),
    };
    let (k, m) = assemble_p1(mesh)?;
    let n = k.dim;
    if n < BLOCK + 2 {
        return Err(Error::InvalidInput(format!("mesh too small: {n} nodes")));
    }
    let sigma = 1e-3 * k.trace() / n as f64;
    let (kf, mf) = (k.full(), m.full());
    // both matrices come from the same element pairs, so patterns coincide
    debug_assert_eq!(kf.cols, mf.cols);
    let shifted = FullCsr {
        offsets: kf.offsets.clone(),
        cols: kf.cols.clone(),
        vals: kf.vals.iter().zip(&mf.vals).map(|(a, b)| a + sigma * b).collect(),
    };
    let dominant = compensated(&shifted);
    let precond = Ic0::new(&dominant, &dominant.diagonal());
    let mass_ones = m.row_sums();
    let total_mass: f64 = mass_ones.iter().sum();
    let sys = ShiftedSystem {
        k: kf,
        m: mf,
        a: shifted,
        precond,
        mass_ones,
        total_mass,
    };

    // seeded start block: smooth-ish random vectors
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut block: Vec<Vec<f64>> = (0..BLOCK)
        .map(|_| {
            let (a, b, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..PI));
            mesh.nodes
                .iter()
                .map(|p| a * p.x + b * p.y + (c + 3.0 * p.x * p.y).sin() + rng.gen_range(-0.1..0.1))
                .collect()
        })
        .collect();
    for v in block.iter_mut() {
        sys.deflate(v);
    }

    let mut scratch = vec![0.0; n];
    let mut last = (f64::NAN, f64::INFINITY);
    let mut ritz: Option<Vec<f64>> = None;
    // inexact inner solves: accuracy follows the outer residual
    let mut inner_tol = 1e-6;
    for iteration in 1..=MAX_OUTER {
        // y_j = (K + sigma M)^-1 M x_j
        let mut ys = Vec::with_capacity(BLOCK);
        for (j, x) in block.iter().enumerate() {
            sys.m.apply(x, &mut scratch);
            // a converged Ritz pair solves the shifted system exactly
            let guess = match &ritz {
                Some(v) => x.iter().map(|xi| xi / (v[j] + sigma)).collect(),
                None => vec![0.0; n],
            };
            let mut y = sys.solve(&scratch, guess, inner_tol)?;
            sys.deflate(&mut y);
            ys.push(y);
        }
        let (values, vectors) = rayleigh_ritz(&sys, &ys)?;
        block = vectors;
        ritz = Some(values.clone());
        let mu = values[0];
        let u = &block[0];
        let mut ku = vec![0.0; n];
        sys.k.apply(u, &mut ku);
        sys.m.apply(u, &mut scratch);
        let r: Vec<f64> = ku.iter().zip(&scratch).map(|(a, b)| a - mu * b).collect();
        let residual = dot(&r, &r).sqrt();
        last = (mu, residual);
        inner_tol = (1e-2 * residual / (mu.abs() + sigma)).clamp(1e-12, 1e-6);
        if mu.abs() < DISCONNECTED_THRESHOLD {
            return Err(Error::DisconnectedMesh(mu));
        }
        if residual <= tol {
            let constant_overlap = dot(&sys.mass_ones, u).abs() / total_mass.sqrt();
            return Ok(EigenResult {
                mu1: mu,
                residual,
                dofs: n,
                h: mesh.max_edge_length(),
                iterations: iteration,
                constant_overlap,
                vector: rank.iter().map(|&r| u[r]).collect(),
            });
        }
    }
    Err(Error::NonConverged {
        residual: last.1,
        iterations: MAX_OUTER,
    })
}

/// Moves positive off-diagonal entries onto the diagonal. The result is a
/// Stieltjes matrix dominating the input, so IC(0) needs no shift.
fn compensated(a: &FullCsr) -> FullCsr {
    let n = a.offsets.len() - 1;
    let mut vals = a.vals.clone();
    let mut extra = vec![0.0; n];
    for i in 0..n {
        for e in a.offsets[i]..a.offsets[i + 1] {
            if a.cols[e] != i && vals[e] > 0.0 {
                extra[i] += vals[e];
                vals[e] = 0.0;
            }
        }
    }
    for i in 0..n {
        for e in a.offsets[i]..a.offsets[i + 1] {
            if a.cols[e] == i {
                vals[e] += extra[i];
            }
        }
    }
    FullCsr {
        offsets: a.offsets.clone(),
        cols: a.cols.clone(),
        vals,
    }
}

/// Reverse Cuthill-McKee ordering of the mesh nodes (`order[new] = old`).
fn reverse_cuthill_mckee(mesh: &TriMesh) -> Vec<usize> {
    let n = mesh.nodes.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in mesh.edges() {
        adj[a].push(b);
        adj[b].push(a);
    }
    for row in adj.iter_mut() {
        row.sort_unstable();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &start in &by_degree {
        if seen[start] {
            continue;
        }
        let head = order.len();
        seen[start] = true;
        order.push(start);
        let mut next = head;
        while next < order.len() {
            let v = order[next];
            next += 1;
            let mut fresh: Vec<usize> = adj[v].iter().copied().filter(|&w| !seen[w]).collect();
            fresh.sort_by_key(|&w| (degree[w], w));
            for w in fresh {
                seen[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

// Ritz pairs of (K, M) on span(ys), ascending, M-orthonormal.
fn rayleigh_ritz(sys: &ShiftedSystem, ys: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let b = ys.len();
    let n = ys[0].len();
    let (mut kys, mut mys) = (Vec::with_capacity(b), Vec::with_capacity(b));
    for y in ys {
        let (mut ky, mut my) = (vec![0.0; n], vec![0.0; n]);
        sys.k.apply(y, &mut ky);
        sys.m.apply(y, &mut my);
        kys.push(ky);
        mys.push(my);
    }
    let kr = DMatrix::from_fn(b, b, |i, j| 0.5 * (dot(&ys[i], &kys[j]) + dot(&ys[j], &kys[i])));
    let mr = DMatrix::from_fn(b, b, |i, j| 0.5 * (dot(&ys[i], &mys[j]) + dot(&ys[j], &mys[i])));
    let chol = mr
        .cholesky()
        .ok_or_else(|| Error::NonConverged { residual: f64::NAN, iterations: 0 })?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NonConverged { residual: f64::NAN, iterations: 0 })?;
    let c = &l_inv * kr * l_inv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let coeffs = l_inv.transpose() * &eig.eigenvectors;
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&col| {
            let mut v = vec![0.0; n];
            for (j, y) in ys.iter().enumerate() {
                let a = coeffs[(j, col)];
                v.iter_mut().zip(y).for_each(|(vi, yi)| *vi += a * yi);
            }
            v
        })
        .collect();
    Ok((values, vectors))
}

/// Closed-form upper bound for the disc Poincare-Sobolev constant,
/// `(2 / pi^kappa) ((1 - kappa) / (1/2 - kappa))^(1 - kappa)`.
pub fn poincare_bound_disc(q: f64, p: f64) -> Result<f64> {
    let kappa = poincare_kappa(q, p)?;
    Ok(2.0 / PI.powf(kappa) * ((1.0 - kappa) / (0.5 - kappa)).powf(1.0 - kappa))
}

fn poincare_kappa(q: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0 && q >= 1.0 && p.is_finite() && q.is_finite()) {
        return Err(Error::InvalidInput(format!("need p, q >= 1, got p = {p}, q = {q}")));
    }
    let kappa = 1.0 / p - 1.0 / q;
    if !(0.0..0.5).contains(&kappa) {
        return Err(Error::InvalidInput(format!("kappa = 1/p - 1/q = {kappa} outside [0, 1/2)")));
    }
    Ok(kappa)
}

/// Constant in the critical `W^1_1` Poincare inequality on discs.
pub fn ps21_constant() -> f64 {
    3.0 * PI.powi(3).sqrt() / 4.0
}

/// Constant in the Gagliardo inequality for compactly supported functions.
pub fn gagliardo_constant() -> f64 {
    1.0 / (2.0 * PI.sqrt())
}

/// Function on the plane with its gradient.
pub trait TestFunction: Sync {
    fn value_grad(&self, x: f64, y: f64) -> (f64, [f64; 2]);
}

/// `sum a cos(j x + k y) + b sin(j x + k y)` over `1 <= j + k <= degree`
/// (j, k >= 0; negative k included through the sign of the phase).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub terms: Vec<TrigTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub freq: [i32; 2],
    pub cos: f64,
    pub sin: f64,
}

pub const TRIG_DEGREE: i32 = 6;

impl TrigPolynomial {
    /// Coefficients uniform in `[-1, 1]`, seeded.
    pub fn random(degree: i32, rng: &mut ChaCha8Rng) -> TrigPolynomial {
        let mut terms = Vec::new();
        for j in 0..=degree {
            for k in -degree..=degree {
                let deg = j + k.abs();
                // one representative per +-(j, k) pair, constant excluded
                if deg == 0 || deg > degree || (j == 0 && k < 0) {
                    continue;
                }
                terms.push(TrigTerm {
                    freq: [j, k],
                    cos: rng.gen_range(-1.0..1.0),
                    sin: rng.gen_range(-1.0..1.0),
                });
            }
        }
        TrigPolynomial { terms }
    }
}

impl TestFunction for TrigPolynomial {
    fn value_grad(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        let mut v = 0.0;
        let mut g = [0.0; 2];
        for t in &self.terms {
            let (fj, fk) = (t.freq[0] as f64, t.freq[1] as f64);
            let (s, c) = (fj * x + fk * y).sin_cos();
            v += t.cos * c + t.sin * s;
            let d = t.sin * c - t.cos * s;
            g[0] += fj * d;
            g[1] += fk * d;
        }
        (v, g)
    }
}

/// `f(x, y) = x`.
#[derive(Debug, Clone, Copy)]
pub struct Linear;

impl TestFunction for Linear {
    fn value_grad(&self, x: f64, _y: f64) -> (f64, [f64; 2]) {
        (x, [1.0, 0.0])
    }
}

/// Tensor Gauss rule on the unit disc (radial Gauss-Legendre, uniform
/// angles, exact for trigonometric dependence up to the angular order).
#[derive(Debug, Clone)]
pub struct DiscRule {
    nodes: Vec<(f64, f64, f64)>,
}

impl DiscRule {
    pub fn new(radial: usize, angular: usize) -> DiscRule {
        let mut nodes = Vec::with_capacity(radial * angular);
        for (r, w) in gauss_legendre(radial, 0.0, 1.0) {
            for k in 0..angular {
                let th = 2.0 * PI * k as f64 / angular as f64;
                nodes.push((r * th.cos(), r * th.sin(), w * r * 2.0 * PI / angular as f64));
            }
        }
        DiscRule { nodes }
    }

    /// `(mean, ||f - mean||_q, ||grad f||_p)` on the unit disc.
    pub fn norms(&self, f: &dyn TestFunction, q: f64, p: f64) -> (f64, f64, f64) {
        let vals: Vec<(f64, [f64; 2], f64)> = self
            .nodes
            .iter()
            .map(|&(x, y, w)| {
                let (v, g) = f.value_grad(x, y);
                (v, g, w)
            })
            .collect();
        let area: f64 = vals.iter().map(|t| t.2).sum();
        let mean = vals.iter().map(|t| t.0 * t.2).sum::<f64>() / area;
        let fq = vals.iter().map(|t| (t.0 - mean).abs().powf(q) * t.2).sum::<f64>().powf(1.0 / q);
        let gp = vals
            .iter()
            .map(|t| t.1[0].hypot(t.1[1]).powf(p) * t.2)
            .sum::<f64>()
            .powf(1.0 / p);
        (mean, fq, gp)
    }
}

impl Default for DiscRule {
    fn default() -> Self {
        DiscRule::new(48, 128)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstant {
    /// Largest observed ratio over the family.
    pub empirical: f64,
    pub bound: f64,
    pub holds: bool,
    /// Family members used (degenerate ones are skipped).
    pub used: usize,
}

fn family_max(q: f64, p: f64, family_size: usize, seed: u64) -> (f64, usize) {
    let rule = DiscRule::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family: Vec<TrigPolynomial> = (0..family_size)
        .map(|_| TrigPolynomial::random(TRIG_DEGREE, &mut rng))
        .collect();
    let ratios: Vec<Option<f64>> = family
        .par_iter()
        .map(|f| {
            let (_, num, den) = rule.norms(f, q, p);
            // constant functions are 0/0 and carry no information
            (den > 1e-12).then_some(num / den)
        })
        .collect();
    let used = ratios.iter().flatten().count();
    (ratios.into_iter().flatten().fold(0.0, f64::max), used)
}

/// Largest `||f - f_D||_q / ||grad f||_p` over a seeded family of
/// trigonometric polynomials on the unit disc.
pub fn poincare_ratio_disc(q: f64, p: f64, family_size: usize, seed: u64) -> Result<EmpiricalConstant> {
    let bound = poincare_bound_disc(q, p)?;
    let (empirical, used) = family_max(q, p, family_size, seed);
    Ok(EmpiricalConstant {
        empirical,
        bound,
        holds: empirical <= bound,
        used,
    })
}

/// Critical case `q = 2`, `p = 1` on the unit disc (the inequality is
/// invariant under similarities, so one disc covers all `D(z0, r)`).
pub fn ps21_ratio_check(family_size: usize, seed: u64) -> EmpiricalConstant {
    let (empirical, used) = family_max(2.0, 1.0, family_size, seed);
    let bound = ps21_constant();
    EmpiricalConstant {
        empirical,
        bound,
        holds: empirical <= bound,
        used,
    }
}

/// `||f - f_D||_2 / ||grad f||_1` on the unit disc for one function.
pub fn ps21_ratio(f: &dyn TestFunction) -> Option<f64> {
    let (_, num, den) = DiscRule::default().norms(f, 2.0, 1.0);
    (den > 1e-12).then_some(num / den)
}

/// Smooth bump `exp(-s / (1 - |z - c|^2 / R^2))` supported in `D(c, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
    pub sharpness: f64,
}

impl Bump {
    pub fn standard() -> Bump {
        Bump {
            center: [0.0, 0.0],
            radius: 1.0,
            sharpness: 1.0,
        }
    }

    /// `(||f||_2, ||grad f||_1)` by radial Gauss-Legendre quadrature.
    pub fn norms(&self) -> (f64, f64) {
        let (r0, s) = (self.radius, self.sharpness);
        let mut l2 = 0.0;
        let mut g1 = 0.0;
        // the profile is flat at both ends; split to resolve the steep part
        for (a, b) in [(0.0, 0.5), (0.5, 0.8), (0.8, 0.95), (0.95, 1.0)] {
            for (t, w) in gauss_legendre(32, a, b) {
                let u = 1.0 - t * t;
                let f = (-s / u).exp();
                // d/dr of exp(-s / (1 - r^2/R^2)) with t = r/R
                let df = f * s * 2.0 * t / (u * u) / r0;
                let jac = 2.0 * PI * t * r0 * r0;
                l2 += w * f * f * jac;
                g1 += w * df * jac;
            }
        }
        (l2.sqrt(), g1)
    }

    pub fn ratio(&self) -> f64 {
        let (a, b) = self.norms();
        a / b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GagliardoCheck {
    pub ratios: Vec<f64>,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `||f||_2 <= ||grad f||_1 / (2 sqrt pi)` for compactly supported
/// bumps. Zero bumps (non-positive radius or sharpness) are rejected.
pub fn gagliardo_check(family: &[Bump]) -> Result<GagliardoCheck> {
    if let Some(b) = family.iter().find(|b| !(b.radius > 0.0 && b.sharpness > 0.0)) {
        return Err(Error::InvalidInput(format!("degenerate bump {b:?}")));
    }
    let ratios: Vec<f64> = family.iter().map(Bump::ratio).collect();
    let bound = gagliardo_constant();
    let holds = ratios.iter().all(|&r| r <= bound);
    Ok(GagliardoCheck { ratios, bound, holds })
}
