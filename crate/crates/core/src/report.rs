//! Per-domain bound reports and the end-to-end verification pipeline.
//!
//! A report stores the inputs of every bound it quotes. Verdicts are always
//! derived from those stored inputs, so a parsed report can be re-checked
//! without trusting the numbers it carries.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bounds::{
    audit, best_alpha, bound_eq16_at, classical_bounds, Alpha, AlphaWindow, BoundInputs,
    BoundTerms, ClassicalBounds, FormulaAudit,
};
use crate::conformal::{q_alpha, ConformalMap};
use crate::geometry::{triangulate, PolygonalCurve};
use crate::metrics::{estimate_beta, estimate_bounded_turning, k_from_ahlfors, k_star_shaped, QcCoefficient};
use crate::spectral::{neumann_mu1, DEFAULT_EIG_TOL};
use crate::{Error, LogReal, Result};

/// Upper end of the alpha window used when optimising eq16 over a single `Q`.
pub const EQ16_WINDOW_UPPER: f64 = 10.0;

/// One quoted bound on `1/mu_1`, or the reason it could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub inputs: BoundInputs,
    pub alpha: Option<Alpha>,
    pub nu: Option<LogReal>,
    pub c_alpha: Option<LogReal>,
    pub terms: Option<BoundTerms>,
    pub inv_mu1_bound: Option<LogReal>,
    /// Diagnostic when no admissible alpha exists.
    pub infeasible: Option<String>,
    pub audit: Option<FormulaAudit>,
}

impl BoundEntry {
    fn infeasible(inputs: BoundInputs, why: String) -> BoundEntry {
        BoundEntry {
            inputs,
            alpha: None,
            nu: None,
            c_alpha: None,
            terms: None,
            inv_mu1_bound: None,
            infeasible: Some(why),
            audit: None,
        }
    }

    /// Evaluates the bound at a fixed alpha.
    pub fn at(inputs: BoundInputs, alpha: Alpha) -> Result<BoundEntry> {
        match inputs.terms(&alpha) {
            Ok((terms, nu, c_alpha)) => Ok(BoundEntry {
                inputs,
                alpha: Some(alpha),
                nu,
                c_alpha,
                inv_mu1_bound: Some(terms.product()),
                terms: Some(terms),
                infeasible: None,
                audit: audit(&inputs, &alpha)?,
            }),
            Err(e) if e.is_infeasible() => Ok(BoundEntry::infeasible(inputs, e.to_string())),
            Err(e) => Err(e),
        }
    }

    /// Minimises the bound over its alpha window (`EQ16_WINDOW_UPPER` for eq16).
    pub fn optimized(inputs: BoundInputs) -> Result<BoundEntry> {
        let window = match inputs.theorem {
            crate::bounds::Theorem::Eq16 => AlphaWindow::explicit(EQ16_WINDOW_UPPER),
            _ => inputs.window(),
        };
        let found = window.and_then(|w| best_alpha(|a| inputs.bound(a), &w));
        match found {
            Ok((alpha, _)) => BoundEntry::at(inputs, alpha),
            Err(e) if e.is_infeasible() => Ok(BoundEntry::infeasible(inputs, e.to_string())),
            Err(e) => Err(e),
        }
    }

    /// The bound recomputed from `inputs` and `alpha`.
    pub fn recompute(&self) -> Result<Option<LogReal>> {
        match self.alpha {
            Some(alpha) => Ok(Some(self.inputs.bound(&alpha)?)),
            None => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    Violated,
    /// Nothing to compare against (no finite-element reference).
    Unchecked,
}

/// One inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub inequality: String,
    pub lhs: LogReal,
    pub rhs: LogReal,
    pub holds: bool,
}

impl Verdict {
    fn new(inequality: String, lhs: LogReal, rhs: LogReal) -> Verdict {
        Verdict {
            inequality,
            holds: lhs <= rhs,
            lhs,
            rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub domain_id: String,
    /// Effective configuration that produced the report.
    pub config: Value,
    pub area: f64,
    pub diameter: Option<f64>,
    pub convex: bool,
    /// Whether the domain tiles the plane (needed for the `4 pi / |Omega|` bound).
    pub plane_covering: bool,
    pub k: Option<QcCoefficient>,
    pub ahlfors_c: Option<f64>,
    pub beta: Option<f64>,
    pub bounds: Vec<BoundEntry>,
    pub classical: ClassicalBounds,
    pub fem_mu1: Option<f64>,
    pub fem_dofs: Option<usize>,
    pub verdicts: Vec<Verdict>,
    pub verdict: Outcome,
}

impl BoundReport {
    /// Report skeleton with classical bounds and no verdicts yet.
    pub fn new(domain_id: &str, config: Value, area: f64, diameter: Option<f64>, convex: bool) -> Result<BoundReport> {
        Ok(BoundReport {
            domain_id: domain_id.to_string(),
            config,
            area,
            diameter,
            convex,
            plane_covering: false,
            k: None,
            ahlfors_c: None,
            beta: None,
            bounds: Vec::new(),
            classical: classical_bounds(area, diameter, convex)?,
            fem_mu1: None,
            fem_dofs: None,
            verdicts: Vec::new(),
            verdict: Outcome::Unchecked,
        })
    }

    /// Verdicts derived from the stored inputs only.
    pub fn derive_verdicts(&self) -> Result<Vec<Verdict>> {
        let Some(mu) = self.fem_mu1 else {
            return Ok(Vec::new());
        };
        let fem = LogReal::from_f64(mu)?;
        let mut out = Vec::new();
        for (i, entry) in self.bounds.iter().enumerate() {
            if let Some(rhs) = entry.recompute()? {
                let name = format!("1/mu1 <= bounds[{i}] ({})", theorem_name(&entry.inputs));
                out.push(Verdict::new(name, fem.recip(), rhs));
            }
        }
        let classical = classical_bounds(self.area, self.diameter, self.convex)?;
        if let Some(pw) = classical.pw_lower {
            out.push(Verdict::new("pi^2/d^2 <= mu1".into(), LogReal::from_f64(pw)?, fem));
        }
        out.push(Verdict::new(
            "mu1 <= p1^2 pi/|Omega|".into(),
            fem,
            LogReal::from_f64(classical.szego_upper)?,
        ));
        if self.plane_covering {
            out.push(Verdict::new(
                "mu1 <= 4 pi/|Omega|".into(),
                fem,
                LogReal::from_f64(classical.polya_upper)?,
            ));
        }
        Ok(out)
    }

    /// Recomputes verdicts and the overall outcome.
    pub fn finalize(&mut self) -> Result<()> {
        self.classical = classical_bounds(self.area, self.diameter, self.convex)?;
        self.verdicts = self.derive_verdicts()?;
        self.verdict = if self.verdicts.is_empty() {
            Outcome::Unchecked
        } else if self.verdicts.iter().all(|v| v.holds) {
            Outcome::Ok
        } else {
            Outcome::Violated
        };
        Ok(())
    }

    /// True when every stored bound and verdict matches its recomputation.
    pub fn self_verify(&self) -> Result<bool> {
        for entry in &self.bounds {
            if entry.recompute()? != entry.inv_mu1_bound {
                return Ok(false);
            }
        }
        let mut again = self.clone();
        again.finalize()?;
        Ok(again.verdicts == self.verdicts && again.verdict == self.verdict && again.classical == self.classical)
    }
}

fn theorem_name(inputs: &BoundInputs) -> &'static str {
    use crate::bounds::Theorem::*;
    match inputs.theorem {
        Eq16 => "eq16",
        TheoremA => "theorem_a",
        Corollary42 => "corollary42",
        TheoremC => "theorem_c",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    /// Two columns `path,value`; see [`flatten`].
    Csv,
}

/// Serialises `value` as pretty JSON or as flattened CSV.
pub fn write_report<T: Serialize>(value: &T, format: ReportFormat) -> Result<Vec<u8>> {
    let json = serde_json::to_value(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(&json).map_err(|e| Error::InvalidInput(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::InvalidInput(e.to_string());
            w.write_record(["path", "value"]).map_err(io)?;
            for (path, v) in flatten(&json) {
                w.write_record([path, v]).map_err(io)?;
            }
            w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
        }
    }
}

/// Leaves of a JSON tree as `(path, text)`. Object keys and array indices
/// are joined with `.`; strings are unquoted, null is `null`. Empty objects
/// and arrays appear as a single `{}` / `[]` leaf.
pub fn flatten(value: &Value) -> Vec<(String, String)> {
    fn walk(v: &Value, path: &str, out: &mut Vec<(String, String)>) {
        let join = |k: &str| if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
        match v {
            Value::Object(m) if !m.is_empty() => m.iter().for_each(|(k, x)| walk(x, &join(k), out)),
            Value::Array(a) if !a.is_empty() => {
                a.iter().enumerate().for_each(|(i, x)| walk(x, &join(&i.to_string()), out))
            }
            Value::String(s) => out.push((path.to_string(), s.clone())),
            other => out.push((path.to_string(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk(value, "", &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Image of the disc under `z + z^2/4`, a `beta`-star-shaped domain.
    Star,
    /// Unit square.
    Square,
}

/// Settings of the end-to-end pipeline; echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub preset: Preset,
    /// Star-shape parameter used for `K` (star preset).
    pub beta: f64,
    /// Target mesh edge length.
    pub h: f64,
    /// Boundary polygon resolution for the star preset.
    pub boundary_points: usize,
    /// Subdivisions per edge of the square before the Ahlfors search.
    pub densify: usize,
    pub shells: usize,
    /// Alphas at which `Q(alpha)` is evaluated for eq16.
    pub eq16_alphas: Vec<f64>,
    pub beta_grid: usize,
    pub eig_tol: f64,
}

/// The star preset's map.
pub const STAR_MAP: ConformalMap = ConformalMap::Quadratic { c: 0.25 };

impl VerifyConfig {
    pub fn new(preset: Preset) -> VerifyConfig {
        VerifyConfig {
            preset,
            beta: 0.5,
            h: 0.03,
            boundary_points: 128,
            densify: 64,
            shells: 24,
            eq16_alphas: (1..=16).map(|i| 2.0 + 0.25 * i as f64).collect(),
            beta_grid: 256,
            eig_tol: DEFAULT_EIG_TOL,
        }
    }
}

/// Curve, constants, bounds, finite elements and verdicts for one preset.
pub fn verify(config: &VerifyConfig) -> Result<BoundReport> {
    let echo = serde_json::to_value(config).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let (id, curve) = match config.preset {
        Preset::Star => ("star_quadratic_0.25", STAR_MAP.boundary_polygon(config.boundary_points)?),
        Preset::Square => ("unit_square", PolygonalCurve::unit_square().densified(config.densify)),
    };
    let mut report = BoundReport::new(id, echo, curve.area(), Some(curve.diameter()), curve.is_convex())?;
    let c_hat = estimate_bounded_turning(curve.vertices(), 1)?.c_hat;
    report.ahlfors_c = Some(c_hat);
    match config.preset {
        Preset::Star => {
            let est = estimate_beta(&STAR_MAP, config.beta_grid)?.beta;
            if est > config.beta {
                return Err(Error::InvalidInput(format!(
                    "preset domain is only {est:.4}-star-shaped, above beta = {}",
                    config.beta
                )));
            }
            report.beta = Some(est);
            let k = k_star_shaped(config.beta)?;
            report.k = Some(k);
            report.bounds.push(eq16_scan(&STAR_MAP, &config.eq16_alphas, config.shells)?);
            report.bounds.push(BoundEntry::optimized(BoundInputs::theorem_a(k, report.area))?);
        }
        Preset::Square => {
            report.plane_covering = true;
            let k = k_from_ahlfors(c_hat)?;
            report.k = Some(k);
            report.bounds.push(BoundEntry::optimized(BoundInputs::theorem_a(k, report.area))?);
        }
    }
    report.bounds.push(BoundEntry::optimized(BoundInputs::corollary42(c_hat, report.area))?);
    // the densified square carries extra vertices only for the Ahlfors search
    let mesh = match config.preset {
        Preset::Star => triangulate(&curve, config.h)?,
        Preset::Square => triangulate(&PolygonalCurve::unit_square(), config.h)?,
    };
    let eig = neumann_mu1(&mesh, config.eig_tol)?;
    report.fem_mu1 = Some(eig.mu1);
    report.fem_dofs = Some(eig.dofs);
    report.finalize()?;
    Ok(report)
}

/// eq16 at the alpha in `alphas` giving the smallest bound, with `Q(alpha)`
/// computed by quadrature. Divergent `Q` values are skipped.
pub fn eq16_scan(map: &ConformalMap, alphas: &[f64], shells: usize) -> Result<BoundEntry> {
    let mut best: Option<(LogReal, f64, Alpha)> = None;
    for &a in alphas {
        let alpha = Alpha::new(a)?;
        let Some(q) = q_alpha(map, a, shells)?.value else {
            continue;
        };
        let b = bound_eq16_at(q, &alpha)?;
        if best.as_ref().map_or(true, |(v, _, _)| b < *v) {
            best = Some((b, q, alpha));
        }
    }
    match best {
        Some((_, q, alpha)) => BoundEntry::at(BoundInputs::eq16(q), alpha),
        None => {
            let inputs = BoundInputs {
                q_alpha: None,
                ..BoundInputs::eq16(1.0)
            };
            Ok(BoundEntry::infeasible(inputs, "Q(alpha) divergent at every scanned alpha".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_paths() {
        let v: Value = serde_json::json!({"a": {"b": [1, null]}, "s": "x", "e": []});
        let flat = flatten(&v);
        assert_eq!(
            flat,
            vec![
                ("a.b.0".to_string(), "1".to_string()),
                ("a.b.1".to_string(), "null".to_string()),
                ("e".to_string(), "[]".to_string()),
                ("s".to_string(), "x".to_string()),
            ]
        );
    }

    #[test]
    fn report_without_fem_is_unchecked() {
        let mut r = BoundReport::new("x", Value::Null, 1.0, None, false).unwrap();
        r.bounds.push(BoundEntry::optimized(BoundInputs::eq16(1.0)).unwrap());
        r.finalize().unwrap();
        assert_eq!(r.verdict, Outcome::Unchecked);
        assert!(r.self_verify().unwrap());
    }
}
