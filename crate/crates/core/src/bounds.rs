//! Log-space evaluation of the eigenvalue bounds and their alpha windows.
//!
//! Every bound is a function of `alpha > 2`, and the admissible alpha are
//! typically within `1e-13` of 2 (or, for snowflake-scale `K`, within
//! `exp(-1e21)`). Alpha is therefore carried as `t = ln(alpha - 2)`
//! throughout; the `f64` value of alpha is only used for display.

use std::collections::BTreeMap;
use std::f64::consts::{LN_10, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logreal::LogReal;
use crate::metrics::{k_from_ahlfors, QcCoefficient};

/// First positive zero of `J_1'`, to five decimals.
pub const P1: f64 = 1.84118;

/// Bisection steps for the `nu = 1` root.
const WINDOW_ITERATIONS: usize = 200;
/// Initial lower end of the bisection bracket in `ln(alpha - 2)`.
const WINDOW_T_FLOOR: f64 = -60.0;
/// Golden-section steps and search width (in `ln(alpha - 2)`).
const GOLDEN_ITERATIONS: usize = 100;
const GOLDEN_WIDTH: f64 = 60.0;

/// `ln(24 pi^2)`
fn ln_24pi2() -> f64 {
    (24.0 * PI * PI).ln()
}

/// `pi^2 (2 + pi^4)^2 / (2 ln 3)`
pub fn doubling_exponent_constant() -> f64 {
    let s = 2.0 + PI.powi(4);
    PI * PI * s * s / (2.0 * 3f64.ln())
}

/// A point `alpha = 2 + e^t` of the open ray `(2, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    /// `ln(alpha - 2)`
    pub ln_alpha_minus_2: f64,
    /// Nearest `f64` to alpha (equal to 2 when alpha - 2 underflows).
    pub alpha: f64,
}

impl Alpha {
    pub fn from_t(t: f64) -> Alpha {
        Alpha {
            ln_alpha_minus_2: t,
            alpha: 2.0 + t.exp(),
        }
    }

    pub fn new(alpha: f64) -> Result<Alpha> {
        if !(alpha > 2.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha must be finite and > 2, got {alpha}")));
        }
        Ok(Alpha {
            ln_alpha_minus_2: (alpha - 2.0).ln(),
            alpha,
        })
    }

    fn t(&self) -> f64 {
        self.ln_alpha_minus_2
    }

    /// `alpha - 2`, possibly underflowing to 0.
    fn excess(&self) -> f64 {
        self.t().exp()
    }

    /// `alpha * x` without rounding alpha to 2 first.
    fn times(&self, x: f64) -> f64 {
        2.0 * x + self.excess() * x
    }

    /// `ln(alpha - 1)`
    fn ln_alpha_minus_1(&self) -> f64 {
        self.excess().ln_1p()
    }

    /// `((2 alpha - 2) / alpha) ln((2 alpha - 2) / (alpha - 2))`
    fn ln_alpha_factor(&self) -> f64 {
        let e = self.excess();
        let exponent = 2.0 * (1.0 + e) / (2.0 + e);
        exponent * (LN_2 + self.ln_alpha_minus_1() - self.t())
    }

    fn inv(&self) -> f64 {
        1.0 / (2.0 + self.excess())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuVariant {
    /// `(24 pi^2 K^2)^alpha`
    TheoremA,
    /// `(24 pi^2 K)^sigma`
    Theorem21,
}

impl NuVariant {
    fn k_power(self) -> f64 {
        match self {
            NuVariant::TheoremA => 2.0,
            NuVariant::Theorem21 => 1.0,
        }
    }
}

fn plain_ln(x: LogReal, what: &str) -> Result<f64> {
    x.ln()
        .ok_or_else(|| Error::Overflow(format!("ln {what} exceeds the representable range")))
}

/// `ln nu` for `nu = 10^{4 alpha} (alpha-2)/(alpha-1) exp(alpha * ln_base)`.
fn ln_nu_with_base(alpha: &Alpha, ln_base: f64) -> f64 {
    alpha.times(4.0 * LN_10 + ln_base) + alpha.t() - alpha.ln_alpha_minus_1()
}

fn nu_base(k: LogReal, variant: NuVariant) -> Result<f64> {
    Ok(ln_24pi2() + variant.k_power() * plain_ln(k, "K")?)
}

/// `nu = 10^{4 alpha} (alpha-2)/(alpha-1) (24 pi^2 K^e)^alpha`, `e = 2` or `1`.
pub fn nu(alpha: f64, k: LogReal, variant: NuVariant) -> Result<LogReal> {
    if alpha == 2.0 {
        return Ok(LogReal::ZERO);
    }
    nu_at(&Alpha::new(alpha)?, k, variant)
}

pub fn nu_at(alpha: &Alpha, k: LogReal, variant: NuVariant) -> Result<LogReal> {
    Ok(LogReal::from_ln(ln_nu_with_base(alpha, nu_base(k, variant)?)))
}

/// `C_alpha = 10^6 / [(alpha - 1)(1 - nu)]^{1/alpha}`.
pub fn c_alpha(alpha: f64, nu_val: LogReal) -> Result<LogReal> {
    if alpha == 2.0 {
        return c_alpha_with(0.0, 0.5, nu_val);
    }
    c_alpha_at(&Alpha::new(alpha)?, nu_val)
}

pub fn c_alpha_at(alpha: &Alpha, nu_val: LogReal) -> Result<LogReal> {
    c_alpha_with(alpha.ln_alpha_minus_1(), alpha.inv(), nu_val)
}

fn c_alpha_with(ln_am1: f64, inv_alpha: f64, nu_val: LogReal) -> Result<LogReal> {
    let ln_one_minus_nu = if nu_val.is_zero() {
        0.0
    } else {
        let ln_nu = nu_val.ln().filter(|&l| l < 0.0).ok_or_else(|| {
            Error::Infeasible(format!("nu = {nu_val} is not below 1"))
        })?;
        (-ln_nu.exp_m1()).ln()
    };
    Ok(LogReal::from_ln(6.0 * LN_10 - inv_alpha * (ln_am1 + ln_one_minus_nu)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowBinding {
    Integrability,
    NuCondition,
    /// Window given explicitly by the caller.
    Explicit,
}

/// Open interval `(2, upper)` of admissible alpha.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaWindow {
    pub lower: f64,
    pub upper: f64,
    /// `ln(upper - 2)`: the window width in log form.
    pub ln_width: f64,
    pub binding: WindowBinding,
    /// `ln(2K^2/(K^2-1) - 2)`; `None` for `K = 1`.
    pub ln_integrability_width: Option<f64>,
    /// Largest `ln(alpha - 2)` verified to satisfy `nu < 1`.
    pub ln_feasible: Option<f64>,
}

impl AlphaWindow {
    /// `(2, upper)` without a nu condition.
    pub fn explicit(upper: f64) -> Result<AlphaWindow> {
        let a = Alpha::new(upper)?;
        Ok(AlphaWindow {
            lower: 2.0,
            upper,
            ln_width: a.t(),
            binding: WindowBinding::Explicit,
            ln_integrability_width: None,
            ln_feasible: None,
        })
    }

    pub fn contains(&self, alpha: &Alpha) -> bool {
        alpha.t() < self.ln_width
    }
}

/// `ln(2K^2/(K^2-1) - 2) = ln 2 - ln(K^2 - 1)`, `None` when `K = 1`.
pub fn ln_integrability_width(k: LogReal) -> Result<Option<f64>> {
    let two_ln_k = 2.0 * plain_ln(k, "K")?;
    if two_ln_k < 0.0 {
        return Err(Error::InvalidInput("K must be >= 1".into()));
    }
    if two_ln_k == 0.0 {
        return Ok(None);
    }
    Ok(Some(LN_2 - (two_ln_k + (-(-two_ln_k).exp_m1()).ln())))
}

/// `(2, min(2K^2/(K^2-1), alpha*))` where `nu(alpha*) = 1`.
pub fn alpha_window(k: LogReal, variant: NuVariant) -> Result<AlphaWindow> {
    let base = nu_base(k, variant)?;
    window_for(base, ln_integrability_width(k)?)
}

/// Window for a nu with `ln(base)` given directly (the Ahlfors-constant forms).
fn window_for(ln_base: f64, cap: Option<f64>) -> Result<AlphaWindow> {
    let f = |t: f64| ln_nu_with_base(&Alpha::from_t(t), ln_base);

    let mut lo = WINDOW_T_FLOOR.min(cap.unwrap_or(0.0) - 1.0);
    while !(f(lo) < 0.0) {
        lo *= 2.0;
        if !lo.is_finite() || lo < -1e300 {
            return Err(Error::EmptyWindow(format!(
                "nu >= 1 for every alpha with ln(alpha - 2) >= -1e300 (ln base {ln_base:e})"
            )));
        }
    }
    let mut hi = match cap {
        Some(c) => c,
        None => {
            let mut hi = 1.0f64;
            while f(hi) < 0.0 {
                hi *= 2.0;
                if hi > 700.0 {
                    return Err(Error::InvalidInput("nu stays below 1 for all alpha".into()));
                }
            }
            hi
        }
    };
    if f(hi) < 0.0 {
        let cap = cap.expect("finite cap when nu < 1 at the upper end");
        return Ok(AlphaWindow {
            lower: 2.0,
            upper: Alpha::from_t(cap).alpha,
            ln_width: cap,
            binding: WindowBinding::Integrability,
            ln_integrability_width: Some(cap),
            ln_feasible: None,
        });
    }
    for _ in 0..WINDOW_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(AlphaWindow {
        lower: 2.0,
        upper: Alpha::from_t(hi).alpha,
        ln_width: hi,
        binding: WindowBinding::NuCondition,
        ln_integrability_width: cap,
        ln_feasible: Some(lo),
    })
}

/// `(4 / pi^{2/alpha}) ((2alpha-2)/(alpha-2))^{(2alpha-2)/alpha} Q^{2/alpha}`
pub fn bound_eq16(q_alpha_val: f64, alpha: f64) -> Result<LogReal> {
    bound_eq16_at(q_alpha_val, &Alpha::new(alpha)?)
}

pub fn bound_eq16_at(q_alpha_val: f64, alpha: &Alpha) -> Result<LogReal> {
    Ok(eq16_terms(q_alpha_val, alpha)?.product())
}

/// Named factors of a bound; their product is the bound.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundTerms(pub BTreeMap<String, LogReal>);

impl BoundTerms {
    fn with(mut self, name: &str, value: LogReal) -> BoundTerms {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<LogReal> {
        self.0.get(name).copied()
    }

    /// Product in a fixed (sorted-name) order.
    pub fn product(&self) -> LogReal {
        self.0.values().fold(LogReal::ONE, |acc, &x| acc * x)
    }
}

fn eq16_terms(q: f64, alpha: &Alpha) -> Result<BoundTerms> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidInput(format!("Q(alpha) must be finite and positive, got {q}")));
    }
    let inv = alpha.inv();
    Ok(BoundTerms::default()
        .with("four_over_pi_pow", LogReal::from_ln(2.0 * LN_2 - 2.0 * inv * PI.ln()))
        .with("alpha_factor", LogReal::from_ln(alpha.ln_alpha_factor()))
        .with("q_pow", LogReal::from_ln(2.0 * inv * q.ln())))
}

fn check_area(area: f64) -> Result<()> {
    if !(area > 0.0) || !area.is_finite() {
        return Err(Error::InvalidInput(format!("area must be finite and positive, got {area}")));
    }
    Ok(())
}

/// Shared assembly `lead * C_alpha^2 * F(alpha) * exp(lead * c / 2^{s}) * |Omega|`
/// where `lead = K^2/pi`-type prefactor carried in log form.
struct Assembly {
    /// ln of the K-dependent prefactor (e.g. `2 ln K`)
    ln_lead: f64,
    /// ln of the constant divisor next to the lead (e.g. `ln pi`)
    ln_divisor: f64,
    /// ln of the multiplier inside the exponential, next to the lead
    ln_exp_scale: f64,
    /// ln of the base in nu: `ln 24 pi^2 + ln_lead - ln_nu_divisor`
    ln_nu_base: f64,
    cap: Option<f64>,
}

fn assemble(a: &Assembly, area: f64, alpha: &Alpha) -> Result<(BoundTerms, LogReal, LogReal)> {
    check_area(area)?;
    let nu_val = LogReal::from_ln(ln_nu_with_base(alpha, a.ln_nu_base));
    if let Some(cap) = a.cap {
        if alpha.t() >= cap {
            return Err(Error::Infeasible(format!(
                "alpha = 2 + exp({:e}) outside the integrability range 2 + exp({cap:e})",
                alpha.t()
            )));
        }
    }
    let c = c_alpha_at(alpha, nu_val)?;
    let exponent = LogReal::from_ln(a.ln_lead + a.ln_exp_scale);
    let terms = BoundTerms::default()
        .with("leading", LogReal::from_ln(a.ln_lead))
        .with("divisor", LogReal::from_ln(-a.ln_divisor))
        .with("c_alpha_squared", c.powf(2.0))
        .with("alpha_factor", LogReal::from_ln(alpha.ln_alpha_factor()))
        .with("exp_term", LogReal::exp_of(exponent)?)
        .with("area", LogReal::from_ln(area.ln()));
    Ok((terms, nu_val, c))
}

fn theorem_a_assembly(k: LogReal) -> Result<Assembly> {
    let ln_k = plain_ln(k, "K")?;
    Ok(Assembly {
        ln_lead: 2.0 * ln_k,
        ln_divisor: PI.ln(),
        ln_exp_scale: doubling_exponent_constant().ln(),
        ln_nu_base: ln_24pi2() + 2.0 * ln_k,
        cap: ln_integrability_width(k)?,
    })
}

/// `(1 + e^{2 pi} C^5)^2`
fn ahlfors_square(c: f64) -> Result<f64> {
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::InvalidInput(format!("Ahlfors constant must be >= 1, got {c}")));
    }
    let inner = 1.0 + (2.0 * PI + 5.0 * c.ln()).exp();
    Ok(inner * inner)
}

/// Corollary form: `lead = m (1 + e^{2pi} C^5)^2`, divisor `2^{10 m} pi`,
/// exponent scale `pi^2 (2+pi^4)^2 / (2^{10m+1} ln 3)`.
fn ahlfors_assembly(c: f64, m: f64) -> Result<Assembly> {
    let lead = m * ahlfors_square(c)?;
    let ln_two_pow = 10.0 * m * LN_2;
    let s = 2.0 + PI.powi(4);
    // K used for the integrability range: 2^{-10 m/2 ...} e^{lead/2}
    let k = LogReal::from_ln(0.5 * lead - 0.5 * ln_two_pow);
    Ok(Assembly {
        ln_lead: lead,
        ln_divisor: ln_two_pow + PI.ln(),
        ln_exp_scale: (PI * PI * s * s).ln() - (ln_two_pow + LN_2) - 3f64.ln().ln(),
        ln_nu_base: ln_24pi2() - ln_two_pow + lead,
        cap: ln_integrability_width(k)?,
    })
}

/// Snowflake Ahlfors constant `16 / (1 - 2p)`.
pub fn snowflake_c(p: f64) -> Result<f64> {
    if !(0.25..0.5).contains(&p) {
        return Err(Error::SnowflakeParameter(p));
    }
    Ok(16.0 / (1.0 - 2.0 * p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Eq16,
    TheoremA,
    Corollary42,
    TheoremC,
}

impl std::str::FromStr for Theorem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Theorem> {
        match s.to_ascii_lowercase().as_str() {
            "eq16" => Ok(Theorem::Eq16),
            "a" => Ok(Theorem::TheoremA),
            "cor42" => Ok(Theorem::Corollary42),
            "c" => Ok(Theorem::TheoremC),
            _ => Err(Error::Parse(format!("unknown theorem `{s}` (eq16, a, cor42, c)"))),
        }
    }
}

/// Parameters of one bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub theorem: Theorem,
    pub k: Option<QcCoefficient>,
    /// Ahlfors constant (`cor42`)
    pub c: Option<f64>,
    /// Snowflake parameter (`c`)
    pub p: Option<f64>,
    /// `Q(alpha)` value (eq16); only meaningful at the alpha it was computed for
    pub q_alpha: Option<f64>,
    pub area: f64,
}

impl BoundInputs {
    pub fn eq16(q_alpha: f64) -> BoundInputs {
        BoundInputs {
            theorem: Theorem::Eq16,
            k: None,
            c: None,
            p: None,
            q_alpha: Some(q_alpha),
            area: 0.0,
        }
    }

    pub fn theorem_a(k: QcCoefficient, area: f64) -> BoundInputs {
        BoundInputs {
            theorem: Theorem::TheoremA,
            k: Some(k),
            c: None,
            p: None,
            q_alpha: None,
            area,
        }
    }

    pub fn corollary42(c: f64, area: f64) -> BoundInputs {
        BoundInputs {
            theorem: Theorem::Corollary42,
            k: None,
            c: Some(c),
            p: None,
            q_alpha: None,
            area,
        }
    }

    pub fn theorem_c(p: f64, area: f64) -> BoundInputs {
        BoundInputs {
            theorem: Theorem::TheoremC,
            k: None,
            c: None,
            p: Some(p),
            q_alpha: None,
            area,
        }
    }

    fn assembly(&self) -> Result<Assembly> {
        let missing = |what: &str| Error::InvalidInput(format!("{:?} needs {what}", self.theorem));
        match self.theorem {
            Theorem::Eq16 => Err(Error::InvalidInput("eq16 has no K assembly".into())),
            Theorem::TheoremA => theorem_a_assembly(self.k.ok_or_else(|| missing("K"))?.k_log),
            Theorem::Corollary42 => ahlfors_assembly(self.c.ok_or_else(|| missing("C"))?, 2.0),
            Theorem::TheoremC => ahlfors_assembly(snowflake_c(self.p.ok_or_else(|| missing("p"))?)?, 4.0),
        }
    }

    /// Admissible alpha for this bound.
    pub fn window(&self) -> Result<AlphaWindow> {
        match self.theorem {
            Theorem::Eq16 => Err(Error::InvalidInput(
                "eq16 has no intrinsic window; pass one explicitly".into(),
            )),
            _ => {
                let a = self.assembly()?;
                window_for(a.ln_nu_base, a.cap)
            }
        }
    }

    /// Bound terms at `alpha` together with `nu` and `C_alpha` when defined.
    pub fn terms(&self, alpha: &Alpha) -> Result<(BoundTerms, Option<LogReal>, Option<LogReal>)> {
        match self.theorem {
            Theorem::Eq16 => {
                let q = self
                    .q_alpha
                    .ok_or_else(|| Error::InvalidInput("eq16 needs Q(alpha)".into()))?;
                Ok((eq16_terms(q, alpha)?, None, None))
            }
            _ => {
                let (terms, nu_val, c) = assemble(&self.assembly()?, self.area, alpha)?;
                Ok((terms, Some(nu_val), Some(c)))
            }
        }
    }

    pub fn bound(&self, alpha: &Alpha) -> Result<LogReal> {
        Ok(self.terms(alpha)?.0.product())
    }
}

/// `(K^2 C_alpha^2 / pi) F(alpha) exp{K^2 pi^2 (2+pi^4)^2 / (2 ln 3)} |Omega|`
pub fn bound_theorem_a(k: LogReal, area: f64, alpha: f64) -> Result<LogReal> {
    bound_theorem_a_at(k, area, &Alpha::new(alpha)?)
}

pub fn bound_theorem_a_at(k: LogReal, area: f64, alpha: &Alpha) -> Result<LogReal> {
    let (terms, _, _) = assemble(&theorem_a_assembly(k)?, area, alpha)?;
    Ok(terms.product())
}

/// Bound for boundaries with Ahlfors constant `C`, evaluated in its closed form.
pub fn bound_corollary42(c: f64, area: f64, alpha: f64) -> Result<LogReal> {
    BoundInputs::corollary42(c, area).bound(&Alpha::new(alpha)?)
}

/// Snowflake bound, the closed form with `C = 16/(1-2p)` substituted.
pub fn bound_theorem_c(p: f64, area: f64, alpha: f64) -> Result<LogReal> {
    BoundInputs::theorem_c(p, area).bound(&Alpha::new(alpha)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBounds {
    /// `p1^2 pi / |Omega|`
    pub szego_upper: f64,
    /// `4 pi / |Omega|`
    pub polya_upper: f64,
    /// `pi^2 / d^2`, convex domains only
    pub pw_lower: Option<f64>,
}

pub fn classical_bounds(area: f64, diameter: Option<f64>, convex: bool) -> Result<ClassicalBounds> {
    check_area(area)?;
    Ok(ClassicalBounds {
        szego_upper: P1 * P1 * PI / area,
        polya_upper: 4.0 * PI / area,
        pw_lower: match (convex, diameter) {
            (true, Some(d)) if d > 0.0 => Some(PI * PI / (d * d)),
            _ => None,
        },
    })
}

/// Golden-section minimisation of `f` over `ln(alpha - 2)` in the window.
/// Points where `f` fails (e.g. `nu >= 1`) count as `+inf`; the best point
/// seen is returned, which includes the window's verified feasible point.
pub fn best_alpha(
    f: impl Fn(&Alpha) -> Result<LogReal>,
    window: &AlphaWindow,
) -> Result<(Alpha, LogReal)> {
    let hi = window.ln_width;
    let lo = hi - GOLDEN_WIDTH;
    let mut best: Option<(Alpha, LogReal)> = None;
    let mut eval = |t: f64| -> Option<LogReal> {
        let a = Alpha::from_t(t);
        if !window.contains(&a) {
            return None;
        }
        let v = f(&a).ok()?;
        if best.as_ref().map_or(true, |(_, b)| v < *b) {
            best = Some((a, v));
        }
        Some(v)
    };
    if let Some(t) = window.ln_feasible {
        eval(t);
    }
    let less = |x: &Option<LogReal>, y: &Option<LogReal>| match (x, y) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        _ => false,
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    if b - a > 0.0 {
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let mut f1 = eval(x1);
        let mut f2 = eval(x2);
        for _ in 0..GOLDEN_ITERATIONS {
            if less(&f1, &f2) || (f1.is_none() && f2.is_none()) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = eval(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = eval(x2);
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("no feasible alpha in the window".into()))
}

/// Result of comparing an Ahlfors-constant bound with the `K` bound at the implied `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaAudit {
    pub reference: String,
    /// `ln(closed form / reference)` when representable.
    pub ln_ratio: Option<f64>,
    pub agrees: bool,
}

/// Cross-checks `cor42` against `a` with `K = k_from_ahlfors(C)` and the
/// snowflake bound against `a` with that `K` squared.
pub fn audit(inputs: &BoundInputs, alpha: &Alpha) -> Result<Option<FormulaAudit>> {
    let (c, squared) = match inputs.theorem {
        Theorem::Corollary42 => (inputs.c.expect("validated by bound"), false),
        Theorem::TheoremC => (snowflake_c(inputs.p.expect("validated by bound"))?, true),
        _ => return Ok(None),
    };
    let closed = inputs.bound(alpha)?;
    let mut k = k_from_ahlfors(c)?;
    let reference = if squared {
        k.k_log = k.k_log.powf(2.0);
        "theorem_a(k_from_ahlfors(16/(1-2p))^2)"
    } else {
        "theorem_a(k_from_ahlfors(c))"
    };
    let other = bound_theorem_a_at(k.k_log, inputs.area, alpha)?;
    let ln_ratio = closed.ln_diff(&other);
    let scale = closed.ln_part().abs().max(1.0);
    Ok(Some(FormulaAudit {
        reference: reference.to_string(),
        ln_ratio,
        agrees: ln_ratio.is_some_and(|d| d.abs() <= 1e-12 * scale),
    }))
}
