//! Positive reals carried by their natural logarithm.
//!
//! A [`LogReal`] stores `ln x` as an `f64`. Some constants in the eigenvalue
//! bounds are doubly exponential (their logarithm itself overflows `f64`), so
//! the logarithm may carry one extra *tower* term:
//!
//! ```text
//! ln x = ln + sign * exp(ln_magnitude)
//! ```
//!
//! The tower term is only present when `exp(ln_magnitude) > 1e300`; smaller
//! contributions are folded back into the plain `ln` part, which therefore
//! never exceeds about 1e300 in magnitude. Products, quotients, powers,
//! maxima and sums stay closed under this representation; only `exp` of a
//! value that already carries a tower is rejected.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// ln(1e300); tower terms below this magnitude are folded into `ln`.
const FOLD_LN: f64 = 690.775_527_898_213_7;

/// `sign * exp(ln_magnitude)` contribution to a logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tower {
    pub negative: bool,
    pub ln_magnitude: f64,
}

impl Tower {
    fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    fn negate(self) -> Tower {
        Tower {
            negative: !self.negative,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogReal {
    ln: f64,
    tower: Option<Tower>,
}

/// Sum of two signed exponentials, `None` when they cancel exactly.
fn add_towers(a: Option<Tower>, b: Option<Tower>) -> Option<Tower> {
    match (a, b) {
        (None, t) | (t, None) => t,
        (Some(a), Some(b)) => {
            if a.negative == b.negative {
                let (hi, lo) = if a.ln_magnitude >= b.ln_magnitude {
                    (a.ln_magnitude, b.ln_magnitude)
                } else {
                    (b.ln_magnitude, a.ln_magnitude)
                };
                Some(Tower {
                    negative: a.negative,
                    ln_magnitude: hi + (lo - hi).exp().ln_1p(),
                })
            } else if a.ln_magnitude == b.ln_magnitude {
                None
            } else {
                let (big, small) = if a.ln_magnitude > b.ln_magnitude {
                    (a, b)
                } else {
                    (b, a)
                };
                let d = small.ln_magnitude - big.ln_magnitude;
                Some(Tower {
                    negative: big.negative,
                    ln_magnitude: big.ln_magnitude + (-d.exp()).ln_1p(),
                })
            }
        }
    }
}

impl LogReal {
    pub const ZERO: LogReal = LogReal {
        ln: f64::NEG_INFINITY,
        tower: None,
    };
    pub const ONE: LogReal = LogReal { ln: 0.0, tower: None };

    fn normalized(ln: f64, tower: Option<Tower>) -> LogReal {
        let mut ln = ln;
        let mut tower = tower;
        if let Some(t) = tower {
            if t.ln_magnitude <= FOLD_LN {
                ln += t.sign() * t.ln_magnitude.exp();
                tower = None;
            }
        }
        if tower.is_none() && ln.is_finite() && ln.abs() > 1e300 {
            tower = Some(Tower {
                negative: ln < 0.0,
                ln_magnitude: ln.abs().ln(),
            });
            ln = 0.0;
        }
        LogReal { ln, tower }
    }

    /// `x` from its natural logarithm.
    pub fn from_ln(ln: f64) -> LogReal {
        LogReal::normalized(ln, None)
    }

    /// `x` from `ln x = ln + sign * exp(ln_magnitude)`.
    pub fn from_parts(ln: f64, tower: Option<Tower>) -> LogReal {
        LogReal::normalized(ln, tower)
    }

    /// Wraps a non-negative `f64`.
    pub fn from_f64(x: f64) -> Result<LogReal> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::InvalidInput(format!(
                "LogReal requires a finite non-negative value, got {x}"
            )));
        }
        Ok(LogReal::from_ln(x.ln()))
    }

    /// `exp(x)`; fails when `x` already needs a tower term.
    pub fn exp_of(x: LogReal) -> Result<LogReal> {
        LogReal::exp_signed(x, false)
    }

    /// `exp(-x)`.
    pub fn exp_neg_of(x: LogReal) -> Result<LogReal> {
        LogReal::exp_signed(x, true)
    }

    fn exp_signed(x: LogReal, negative: bool) -> Result<LogReal> {
        if x.is_zero() {
            return Ok(LogReal::ONE);
        }
        if x.tower.is_some() {
            return Err(Error::Overflow(
                "exponent already carries a tower term".into(),
            ));
        }
        let sign = if negative { -1.0 } else { 1.0 };
        if x.ln <= FOLD_LN {
            Ok(LogReal::from_ln(sign * x.ln.exp()))
        } else {
            Ok(LogReal::normalized(
                0.0,
                Some(Tower {
                    negative,
                    ln_magnitude: x.ln,
                }),
            ))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.tower.is_none() && self.ln == f64::NEG_INFINITY
    }

    /// Plain part of the logarithm.
    pub fn ln_part(&self) -> f64 {
        self.ln
    }

    pub fn tower(&self) -> Option<Tower> {
        self.tower
    }

    /// `ln x` when it fits in an `f64`.
    pub fn ln(&self) -> Option<f64> {
        match self.tower {
            None => Some(self.ln),
            Some(_) => None,
        }
    }

    /// `ln x`, saturating to `±inf` when a tower term is present.
    pub fn ln_saturating(&self) -> f64 {
        match self.tower {
            None => self.ln,
            Some(t) if t.negative => f64::NEG_INFINITY,
            Some(_) => f64::INFINITY,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.ln_saturating().exp()
    }

    pub fn powf(&self, p: f64) -> LogReal {
        if p == 0.0 {
            return LogReal::ONE;
        }
        if self.is_zero() {
            return if p > 0.0 {
                LogReal::ZERO
            } else {
                LogReal::from_ln(f64::INFINITY)
            };
        }
        let tower = self.tower.map(|t| Tower {
            negative: t.negative != (p < 0.0),
            ln_magnitude: t.ln_magnitude + p.abs().ln(),
        });
        LogReal::normalized(self.ln * p, tower)
    }

    pub fn recip(&self) -> LogReal {
        self.powf(-1.0)
    }

    /// `ln(self / other)` as a signed plain-plus-tower pair.
    fn ln_ratio(&self, other: &LogReal) -> (f64, Option<Tower>) {
        let tower = add_towers(self.tower, other.tower.map(Tower::negate));
        let folded = LogReal::normalized(self.ln - other.ln, tower);
        (folded.ln, folded.tower)
    }

    /// `self + other` by log-sum-exp.
    pub fn add(&self, other: &LogReal) -> LogReal {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let (d, tower) = self.ln_ratio(other);
        match tower {
            Some(t) if t.negative => *other,
            Some(_) => *self,
            None => {
                let (big, delta) = if d >= 0.0 { (self, -d) } else { (other, d) };
                LogReal::normalized(big.ln + delta.exp().ln_1p(), big.tower)
            }
        }
    }

    /// `self - other`, `None` when the result would be negative.
    pub fn checked_sub(&self, other: &LogReal) -> Option<LogReal> {
        if other.is_zero() {
            return Some(*self);
        }
        if self.is_zero() {
            return None;
        }
        let (d, tower) = self.ln_ratio(other);
        match tower {
            Some(t) if t.negative => None,
            Some(_) => Some(*self),
            None if d < 0.0 => None,
            None if d == 0.0 => Some(LogReal::ZERO),
            None => Some(LogReal::normalized(
                self.ln + (-(-d).exp_m1()).ln(),
                self.tower,
            )),
        }
    }

    pub fn max(self, other: LogReal) -> LogReal {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Difference of logarithms when it is finite and representable.
    pub fn ln_diff(&self, other: &LogReal) -> Option<f64> {
        if self.is_zero() || other.is_zero() {
            return None;
        }
        match self.ln_ratio(other) {
            (d, None) => Some(d),
            _ => None,
        }
    }
}

impl Mul for LogReal {
    type Output = LogReal;
    fn mul(self, rhs: LogReal) -> LogReal {
        if self.is_zero() || rhs.is_zero() {
            return LogReal::ZERO;
        }
        LogReal::normalized(self.ln + rhs.ln, add_towers(self.tower, rhs.tower))
    }
}

impl Div for LogReal {
    type Output = LogReal;
    fn div(self, rhs: LogReal) -> LogReal {
        self * rhs.recip()
    }
}

impl PartialOrd for LogReal {
    fn partial_cmp(&self, other: &LogReal) -> Option<Ordering> {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Some(Ordering::Equal),
            (true, false) => return Some(Ordering::Less),
            (false, true) => return Some(Ordering::Greater),
            _ => {}
        }
        match self.ln_ratio(other) {
            (_, Some(t)) if t.negative => Some(Ordering::Less),
            (_, Some(_)) => Some(Ordering::Greater),
            (d, None) => d.partial_cmp(&0.0),
        }
    }
}

impl fmt::Display for LogReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tower {
            None => write!(f, "exp({:e})", self.ln),
            Some(t) => write!(
                f,
                "exp({:e} {} exp({:e}))",
                self.ln,
                if t.negative { "-" } else { "+" },
                t.ln_magnitude
            ),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LogRealRepr {
    ln: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tower: Option<Tower>,
}

impl Serialize for LogReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let ln = if self.is_zero() { None } else { Some(self.ln) };
        LogRealRepr {
            ln,
            tower: self.tower,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LogReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = LogRealRepr::deserialize(deserializer)?;
        Ok(match repr.ln {
            None => LogReal::ZERO,
            Some(ln) => LogReal::from_parts(ln, repr.tower),
        })
    }
}
