use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Point2, PolygonalCurve};
use crate::error::{Error, Result};

pub const DEFAULT_VERTEX_CAP: usize = 1_000_000;

/// How each edge of `S^n` is replaced when building `S^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    AllTent,
    AllFlat,
    /// Independent fair coin per edge, tent on heads.
    SeededRandom(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnowflakeSpec {
    pub p: f64,
    pub n: u32,
    pub rule: EdgeRule,
    pub vertex_cap: usize,
}

impl SnowflakeSpec {
    pub fn new(p: f64, n: u32, rule: EdgeRule) -> SnowflakeSpec {
        SnowflakeSpec {
            p,
            n,
            rule,
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.25..0.5).contains(&self.p) {
            return Err(Error::SnowflakeParameter(self.p));
        }
        if self.n < 1 {
            return Err(Error::InvalidInput("snowflake iteration n must be >= 1".into()));
        }
        let count = 4f64.powi(self.n as i32);
        if count > self.vertex_cap as f64 {
            return Err(Error::VertexCap {
                count: count.min(usize::MAX as f64) as usize,
                cap: self.vertex_cap,
            });
        }
        Ok(())
    }

    /// Height of the tent apex over a unit edge.
    pub fn tent_height(&self) -> f64 {
        tent_height(self.p)
    }
}

pub fn tent_height(p: f64) -> f64 {
    (p * p - (0.5 - p) * (0.5 - p)).max(0.0).sqrt()
}

/// Builds `S^n`, starting from the unit square `S^1`.
///
/// A tent replacement maps the unit edge onto the arc through `(0,0)`, `(p,0)`,
/// `(1/2,h)`, `(1-p,0)`, `(1,0)`, with the apex on the exterior (right-hand)
/// side of the counter-clockwise polygon. A flat replacement splits the edge
/// into four equal collinear pieces.
pub fn generate_snowflake(spec: &SnowflakeSpec) -> Result<PolygonalCurve> {
    spec.validate()?;
    let h = spec.tent_height();
    let tent = [(spec.p, 0.0), (0.5, h), (1.0 - spec.p, 0.0)];
    let flat = [(0.25, 0.0), (0.5, 0.0), (0.75, 0.0)];
    let mut rng = match spec.rule {
        EdgeRule::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };

    let mut vertices = PolygonalCurve::unit_square().vertices().to_vec();
    for _ in 1..spec.n {
        let m = vertices.len();
        let mut next = Vec::with_capacity(4 * m);
        for i in 0..m {
            let a = vertices[i];
            let b = vertices[(i + 1) % m];
            let use_tent = match spec.rule {
                EdgeRule::AllTent => true,
                EdgeRule::AllFlat => false,
                EdgeRule::SeededRandom(_) => rng.as_mut().map(|r| r.gen::<bool>()).unwrap_or(true),
            };
            let u = b - a;
            // right-hand normal: exterior side of a counter-clockwise polygon
            let r = Point2::new(u.y, -u.x);
            next.push(a);
            for &(s, t) in if use_tent { &tent } else { &flat } {
                next.push(a + u * s + r * t);
            }
        }
        vertices = next;
    }
    PolygonalCurve::new(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent(p: f64, n: u32) -> PolygonalCurve {
        generate_snowflake(&SnowflakeSpec::new(p, n, EdgeRule::AllTent)).unwrap()
    }

    #[test]
    fn quarter_parameter_degenerates_to_flat() {
        assert_eq!(tent_height(0.25), 0.0);
        let t = tent(0.25, 2);
        assert_eq!(t.len(), 16);
        for (a, b) in t.edges() {
            assert!((a.dist(b) - 0.25).abs() < 1e-15);
        }
        assert_eq!(t.area(), 1.0);
    }

    #[test]
    fn tent_height_for_p_03() {
        assert!((tent_height(0.3) - 0.223_606_797_749_979).abs() < 1e-12);
    }

    #[test]
    fn edge_lengths_scale_by_p() {
        let s = tent(0.3, 3);
        assert_eq!(s.len(), 64);
        for (a, b) in s.edges() {
            assert!((a.dist(b) - 0.09).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_count_law() {
        for n in 1..=6 {
            assert_eq!(tent(0.35, n).len(), 4usize.pow(n));
        }
    }

    #[test]
    fn flat_equals_quarter_tent() {
        for p in [0.25, 0.3, 0.49] {
            let flat = generate_snowflake(&SnowflakeSpec::new(p, 4, EdgeRule::AllFlat)).unwrap();
            assert_eq!(flat.vertices(), tent(0.25, 4).vertices());
        }
    }

    #[test]
    fn tips_point_outward() {
        for n in 1..5 {
            assert!(tent(0.3, n + 1).area() > tent(0.3, n).area());
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        for p in [0.2, 0.5, 0.6, f64::NAN] {
            assert!(matches!(
                generate_snowflake(&SnowflakeSpec::new(p, 2, EdgeRule::AllTent)),
                Err(Error::SnowflakeParameter(_))
            ));
        }
        assert!(generate_snowflake(&SnowflakeSpec::new(0.3, 0, EdgeRule::AllTent)).is_err());
        let mut spec = SnowflakeSpec::new(0.3, 11, EdgeRule::AllTent);
        assert!(matches!(generate_snowflake(&spec), Err(Error::VertexCap { .. })));
        spec.n = 5;
        spec.vertex_cap = 100;
        assert!(matches!(generate_snowflake(&spec), Err(Error::VertexCap { .. })));
    }

    #[test]
    fn seeded_random_is_reproducible() {
        let spec = SnowflakeSpec::new(0.4, 5, EdgeRule::SeededRandom(7));
        let a = generate_snowflake(&spec).unwrap();
        let b = generate_snowflake(&spec).unwrap();
        assert_eq!(a, b);
        let other = generate_snowflake(&SnowflakeSpec::new(0.4, 5, EdgeRule::SeededRandom(8))).unwrap();
        assert_ne!(a, other);
    }
}
