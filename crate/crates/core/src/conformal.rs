//! Closed catalog of conformal maps of the unit disc, and quadrature for the
//! hyperbolic alpha-dilatation `Q(alpha) = int_D |phi'|^alpha`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{triangulate, Point2, PolygonalCurve};
use crate::quadrature::{GlRule, TRIANGLE_DEG5};

pub const DEFAULT_SHELLS: usize = 24;
const RADIAL_ORDER: usize = 16;
const ANGULAR_BASE_PANELS: usize = 64;
const ANGULAR_ORDER: usize = 16;
/// Number of trailing shells inspected by the divergence classifier.
const DIVERGENCE_WINDOW: usize = 6;
/// Relative slack when deciding that a shell sum did not decrease.
const DIVERGENCE_SLACK: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ConformalMap {
    Identity,
    Scale { r: f64 },
    /// `z + c z^2`, univalent for `|c| <= 1/2`.
    Quadratic { c: f64 },
    /// `z / (1 - z)^2`
    Koebe,
}

impl ConformalMap {
    pub fn scale(r: f64) -> Result<ConformalMap> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidInput(format!("scale factor must be > 0, got {r}")));
        }
        Ok(ConformalMap::Scale { r })
    }

    pub fn quadratic(c: f64) -> Result<ConformalMap> {
        if !(c.abs() <= 0.5) {
            return Err(Error::InvalidInput(format!("quadratic map needs |c| <= 1/2, got {c}")));
        }
        Ok(ConformalMap::Quadratic { c })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ConformalMap::Scale { r } => ConformalMap::scale(r).map(drop),
            ConformalMap::Quadratic { c } => ConformalMap::quadratic(c).map(drop),
            _ => Ok(()),
        }
    }

    /// `phi(z)` without the disc check; valid on the closed disc for bounded maps.
    pub fn phi(&self, z: Complex64) -> Complex64 {
        match *self {
            ConformalMap::Identity => z,
            ConformalMap::Scale { r } => z * r,
            ConformalMap::Quadratic { c } => z + z * z * c,
            ConformalMap::Koebe => {
                let d = Complex64::new(1.0, 0.0) - z;
                z / (d * d)
            }
        }
    }

    pub fn dphi(&self, z: Complex64) -> Complex64 {
        match *self {
            ConformalMap::Identity => Complex64::new(1.0, 0.0),
            ConformalMap::Scale { r } => Complex64::new(r, 0.0),
            ConformalMap::Quadratic { c } => Complex64::new(1.0, 0.0) + z * (2.0 * c),
            ConformalMap::Koebe => {
                let one = Complex64::new(1.0, 0.0);
                let d = one - z;
                (one + z) / (d * d * d)
            }
        }
    }

    /// `|phi'(z)|` computed so that Koebe stays finite close to `z = 1`.
    fn dphi_norm(&self, z: Complex64) -> f64 {
        match *self {
            ConformalMap::Koebe => {
                let one = Complex64::new(1.0, 0.0);
                (one + z).norm() / (one - z).norm().powi(3)
            }
            _ => self.dphi(z).norm(),
        }
    }

    pub fn eval(&self, z: Point2) -> Result<Complex64> {
        Ok(self.phi(in_disc(z)?))
    }

    pub fn eval_derivative(&self, z: Point2) -> Result<Complex64> {
        Ok(self.dphi(in_disc(z)?))
    }

    /// `phi(0) = 0` and `phi'(0) = 1`.
    pub fn is_normalized(&self) -> bool {
        let zero = Complex64::new(0.0, 0.0);
        self.phi(zero) == zero && self.dphi(zero) == Complex64::new(1.0, 0.0)
    }

    /// Boundary angles where `phi'` has a pole or a zero (on or near the circle).
    fn singular_angles(&self) -> Vec<f64> {
        match *self {
            ConformalMap::Identity | ConformalMap::Scale { .. } => vec![],
            ConformalMap::Quadratic { c } if c == 0.0 => vec![],
            // zero of phi' at z = -1/(2c)
            ConformalMap::Quadratic { c } => vec![if c > 0.0 { PI } else { 0.0 }],
            ConformalMap::Koebe => vec![0.0, PI],
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, ConformalMap::Koebe)
    }

    /// Image of the unit circle sampled at `n` equally spaced points.
    pub fn boundary_polygon(&self, n: usize) -> Result<PolygonalCurve> {
        if !self.is_bounded() {
            return Err(Error::UnsupportedMap("image of the Koebe map is unbounded".into()));
        }
        let pts = (0..n)
            .map(|j| {
                let w = self.phi(Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64));
                Point2::new(w.re, w.im)
            })
            .collect();
        PolygonalCurve::from_points(pts)
    }

    /// `phi^{-1}(w)` for the maps invertible in closed form.
    pub fn inverse(&self, w: Complex64) -> Result<Complex64> {
        match *self {
            ConformalMap::Identity => Ok(w),
            ConformalMap::Scale { r } => Ok(w / r),
            ConformalMap::Quadratic { c } if c == 0.0 => Ok(w),
            ConformalMap::Quadratic { c } => {
                let s = (Complex64::new(1.0, 0.0) + w * (4.0 * c)).sqrt();
                let z1 = (s - 1.0) / (2.0 * c);
                let z2 = (-s - 1.0) / (2.0 * c);
                Ok(if z1.norm() <= z2.norm() { z1 } else { z2 })
            }
            ConformalMap::Koebe => Err(Error::UnsupportedMap("no inverse for the Koebe map".into())),
        }
    }
}

fn in_disc(z: Point2) -> Result<Complex64> {
    let r = z.norm();
    if !(r < 1.0) {
        return Err(Error::OutsideDisc(r));
    }
    Ok(Complex64::new(z.x, z.y))
}

impl fmt::Display for ConformalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConformalMap::Identity => write!(f, "identity"),
            ConformalMap::Scale { r } => write!(f, "scale:{r}"),
            ConformalMap::Quadratic { c } => write!(f, "quadratic:{c}"),
            ConformalMap::Koebe => write!(f, "koebe"),
        }
    }
}

/// Parses `identity`, `koebe`, `scale:R`, `quadratic:C`.
impl FromStr for ConformalMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<ConformalMap> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::Parse(format!("map `{s}` needs a parameter")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("map `{s}`: {e}")))
        };
        match name {
            "identity" if arg.is_none() => Ok(ConformalMap::Identity),
            "koebe" if arg.is_none() => Ok(ConformalMap::Koebe),
            "scale" => ConformalMap::scale(num(arg)?),
            "quadratic" => ConformalMap::quadratic(num(arg)?),
            _ => Err(Error::Parse(format!("unknown map `{s}`"))),
        }
    }
}

/// Checks `(1-|z|)/(1+|z|)^3 <= |phi'(z)| <= (1+|z|)/(1-|z|)^3` at `samples`
/// seeded uniform points of the disc.
pub fn koebe_distortion_check(map: &ConformalMap, samples: usize, seed: u64) -> Result<bool> {
    if !map.is_normalized() {
        return Err(Error::NotNormalized);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let r: f64 = rng.gen::<f64>().sqrt() * (1.0 - 1e-9);
        let t: f64 = rng.gen_range(0.0..2.0 * PI);
        let z = Complex64::from_polar(r, t);
        let d = map.dphi_norm(z);
        let lower = (1.0 - r) / (1.0 + r).powi(3);
        let upper = (1.0 + r) / (1.0 - r).powi(3);
        let tol = 1e-12;
        if d < lower * (1.0 - tol) || d > upper * (1.0 + tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilatationResult {
    pub alpha: f64,
    /// `None` when the shell sums were classified divergent.
    pub value: Option<f64>,
    pub divergent: bool,
    pub shell_sums: Vec<f64>,
    /// Outer radius of each shell, `1 - 2^-k`.
    pub radii: Vec<f64>,
    /// Geometric-tail extrapolation past the last shell.
    pub tail: f64,
}

impl DilatationResult {
    pub fn is_finite(&self) -> bool {
        !self.divergent
    }
}

/// `int_D |phi'(z)|^alpha dx dy` over concentric shells `[1-2^{1-k}, 1-2^-k]`.
///
/// Radially each shell uses 16-point Gauss-Legendre; angularly 16-point rules
/// on panels graded toward the singular boundary angles, so that peaks of
/// width `2^-k` are resolved.
pub fn q_alpha(map: &ConformalMap, alpha: f64, shells: usize) -> Result<DilatationResult> {
    map.validate()?;
    if shells < 2 {
        return Err(Error::InvalidInput("need at least 2 shells".into()));
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha must be finite, got {alpha}")));
    }
    let radii: Vec<f64> = (1..=shells).map(|k| 1.0 - 0.5f64.powi(k as i32)).collect();
    let radial = GlRule::new(RADIAL_ORDER);
    let angular = GlRule::new(ANGULAR_ORDER);
    let shell_sums: Vec<f64> = (0..shells)
        .into_par_iter()
        .map(|k| {
            let r0 = if k == 0 { 0.0 } else { radii[k - 1] };
            let r1 = radii[k];
            radial
                .mapped(r0, r1)
                .map(|(r, wr)| wr * r * ring_integral(map, alpha, r, &angular))
                .sum()
        })
        .collect();

    let divergent = classify_divergent(&shell_sums);
    let tail = if divergent {
        f64::INFINITY
    } else {
        let last = shell_sums[shells - 1];
        let rho = last / shell_sums[shells - 2];
        if rho.is_finite() && rho < 1.0 {
            last * rho / (1.0 - rho)
        } else {
            0.0
        }
    };
    let value = (!divergent).then(|| shell_sums.iter().sum::<f64>() + tail);
    Ok(DilatationResult {
        alpha,
        value,
        divergent,
        shell_sums,
        radii,
        tail: if divergent { 0.0 } else { tail },
    })
}

/// `int_0^{2pi} |phi'(r e^{it})|^alpha dt` on panels graded geometrically
/// toward the boundary singularities of the map.
fn ring_integral(map: &ConformalMap, alpha: f64, r: f64, rule: &GlRule) -> f64 {
    let f = |t: f64| map.dphi_norm(Complex64::from_polar(r, t)).powf(alpha);
    let singular = map.singular_angles();
    if singular.is_empty() {
        return 2.0 * PI * f(0.0);
    }
    angular_breaks(&singular, 1.0 - r)
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], f))
        .sum()
}

/// Breakpoints on `[s0, s0 + 2 pi]`: a uniform base partition plus offsets
/// `delta * 2^j / 2` on both sides of every singular angle.
fn angular_breaks(singular: &[f64], delta: f64) -> Vec<f64> {
    let start = singular[0];
    let mut pts: Vec<f64> = (0..=ANGULAR_BASE_PANELS)
        .map(|j| start + 2.0 * PI * j as f64 / ANGULAR_BASE_PANELS as f64)
        .collect();
    let wrap = |t: f64| start + (t - start).rem_euclid(2.0 * PI);
    for &s in singular {
        let mut off = 0.5 * delta;
        while off < PI {
            pts.push(wrap(s + off));
            pts.push(wrap(s - off));
            off *= 2.0;
        }
        pts.push(wrap(s));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15 * delta);
    pts
}

/// Divergent when the trailing shells never decrease (up to a 1% slack).
fn classify_divergent(shells: &[f64]) -> bool {
    if shells.iter().any(|s| !s.is_finite()) {
        return true;
    }
    if shells.len() < DIVERGENCE_WINDOW + 1 {
        return false;
    }
    let tail = &shells[shells.len() - DIVERGENCE_WINDOW - 1..];
    tail.windows(2).all(|w| w[1] >= w[0] * (1.0 - DIVERGENCE_SLACK))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiProbeEntry {
    pub alpha: f64,
    pub finite: bool,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiProbe {
    pub entries: Vec<HiProbeEntry>,
    /// Smallest and largest probed alpha classified finite.
    pub window: Option<(f64, f64)>,
}

/// Classifies each alpha of the grid as finite or divergent.
pub fn hi_probe(map: &ConformalMap, alphas: &[f64], shells: usize) -> Result<HiProbe> {
    let entries = alphas
        .iter()
        .map(|&alpha| {
            let q = q_alpha(map, alpha, shells)?;
            Ok(HiProbeEntry {
                alpha,
                finite: q.is_finite(),
                value: q.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let finite: Vec<f64> = entries.iter().filter(|e| e.finite).map(|e| e.alpha).collect();
    let window = finite
        .iter()
        .copied()
        .reduce(f64::min)
        .zip(finite.iter().copied().reduce(f64::max));
    Ok(HiProbe { entries, window })
}

/// `int_Omega |(phi^{-1})'(w)|^{2-alpha} du dv` over the image polygon of
/// `boundary_points` circle samples, by degree-5 triangle quadrature.
pub fn q_alpha_inverse_form(map: &ConformalMap, alpha: f64, boundary_points: usize) -> Result<f64> {
    map.validate()?;
    if !map.is_bounded() {
        return Err(Error::UnsupportedMap("inverse form needs a bounded image".into()));
    }
    let poly = map.boundary_polygon(boundary_points)?;
    let v = poly.vertices();
    let mean_edge = poly.edges().map(|(a, b)| a.dist(b)).sum::<f64>() / v.len() as f64;
    let mesh = triangulate(&poly, 2.0 * mean_edge)?;
    let total = mesh
        .triangles
        .par_iter()
        .map(|t| {
            let [a, b, c] = t.map(|i| mesh.nodes[i]);
            let area = 0.5 * (b - a).cross(c - a).abs();
            let s: Result<f64> = TRIANGLE_DEG5.iter().try_fold(0.0, |acc, (bc, w)| {
                let p = a * bc[0] + b * bc[1] + c * bc[2];
                let z = map.inverse(Complex64::new(p.x, p.y))?;
                Ok(acc + w * map.dphi_norm(z).powf(alpha - 2.0))
            });
            s.map(|s| s * area)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(total.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_catalog() {
        let z = Point2::new(0.5, 0.0);
        assert_eq!(ConformalMap::Identity.eval_derivative(z).unwrap(), Complex64::new(1.0, 0.0));
        let k = ConformalMap::Koebe.eval_derivative(z).unwrap();
        assert!((k.re - 12.0).abs() < 1e-12 && k.im == 0.0);
        let q = ConformalMap::quadratic(0.25).unwrap();
        assert_eq!(q.eval_derivative(Point2::new(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
        assert!(matches!(ConformalMap::Koebe.eval_derivative(Point2::new(1.0, 0.0)), Err(Error::OutsideDisc(_))));
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let z = Complex64::new(0.3, -0.4);
        let h = 1e-6;
        for m in [ConformalMap::Koebe, ConformalMap::Quadratic { c: -0.4 }, ConformalMap::Scale { r: 3.0 }] {
            let fd = (m.phi(z + h) - m.phi(z - h)) / (2.0 * h);
            assert!((fd - m.dphi(z)).norm() < 1e-8, "{m}");
        }
    }

    #[test]
    fn parsing_and_validation() {
        assert_eq!("koebe".parse::<ConformalMap>().unwrap(), ConformalMap::Koebe);
        assert_eq!("quadratic:0.25".parse::<ConformalMap>().unwrap(), ConformalMap::Quadratic { c: 0.25 });
        assert_eq!("Scale:2".parse::<ConformalMap>().unwrap().to_string(), "scale:2");
        assert!("quadratic:0.6".parse::<ConformalMap>().is_err());
        assert!("scale:-1".parse::<ConformalMap>().is_err());
        assert!("zipper".parse::<ConformalMap>().is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let m = ConformalMap::quadratic(0.5).unwrap();
        let z = Complex64::new(-0.7, 0.5);
        assert!((m.inverse(m.phi(z)).unwrap() - z).norm() < 1e-13);
        assert!(ConformalMap::Koebe.inverse(z).is_err());
    }

    #[test]
    fn distortion_bounds() {
        assert!(koebe_distortion_check(&ConformalMap::Koebe, 10_000, 1).unwrap());
        assert!(koebe_distortion_check(&ConformalMap::Quadratic { c: 0.5 }, 10_000, 2).unwrap());
        assert!(matches!(
            koebe_distortion_check(&ConformalMap::Scale { r: 2.0 }, 10, 3),
            Err(Error::NotNormalized)
        ));
    }

    #[test]
    fn classifier_windows() {
        let decreasing: Vec<f64> = (0..24).map(|k| 0.5f64.powi(k)).collect();
        assert!(!classify_divergent(&decreasing));
        let flat = vec![1.0; 24];
        assert!(classify_divergent(&flat));
        let mut blip = decreasing.clone();
        blip[23] = 1.0;
        assert!(!classify_divergent(&blip));
        assert!(classify_divergent(&[1.0, f64::INFINITY]));
    }

    #[test]
    fn identity_area() {
        let q = q_alpha(&ConformalMap::Identity, 7.0, DEFAULT_SHELLS).unwrap();
        assert!((q.value.unwrap() - PI).abs() < 1e-12);
        assert!(q.shell_sums.iter().all(|&s| s >= 0.0));
    }
}
