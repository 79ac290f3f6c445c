//! `constants`, `apply`, `weak-norm` and `probe`.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::constants::{kernel_constant_m, thm21_constant, thm22_constant, thm31_bound, SharpConstant};
use crate::error::{domain, Error, Result};
use crate::extremals::{sharpness_probe, ExtremalFamily, FamilyId, FreeParam, SearchConfig, SpaceParams};
use crate::norms::{distribution_curve, weak_norm_sup};
use crate::operators::{
    apply_hlp, apply_hlp_quad, apply_hlp_symbolic, apply_kernel_operator, KernelForm, RadialKernel,
};
use crate::radialfn::PiecewisePowerLog;
use crate::spaces::check_thm21_hypotheses;

use super::params::Params;
use super::report::csv_field;
use super::verify::{log_radii, RunContext, COMMON_KEYS};

/// A command result in all three renderings.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub json: Value,
    pub csv: String,
    pub human: String,
    /// A soundness or verification check failed.
    pub failed: bool,
}

fn keys<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    COMMON_KEYS.iter().copied().chain(extra.iter().copied()).collect()
}

fn parse_fn(params: &Params, key: &str) -> Result<PiecewisePowerLog> {
    params.required_str(key)?.parse()
}

#[derive(Debug, Clone, Serialize)]
struct ConstantRow {
    name: String,
    #[serde(flatten)]
    constant: Option<SharpConstant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Every closed-form constant for one parameter set. Kernel constants use
/// the lists `p` and `beta` (one entry per coordinate).
pub fn constants(params: &Params, ctx: &RunContext) -> Result<Rendered> {
    params.expect_only(&keys(&["p", "q", "beta", "gamma", "n"]))?;
    let n = params.u32_or("n", 1)?;
    let ps = params.list_or("p", &[3.0])?;
    let betas = params.list_or("beta", &[0.5])?;
    let q = params.f64_or("q", 2.0)?;
    let gamma = params.f64_or("gamma", 0.0)?;
    if ps.len() != betas.len() || ps.is_empty() || ps.len() > 3 {
        return domain("p and beta need the same number of entries, between 1 and 3");
    }
    let cfg = ctx.cfg.clone();
    cfg.validate()?;

    let mut rows = Vec::new();
    let mut push = |name: &str, c: Result<SharpConstant>| {
        let (constant, error) = match c {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        };
        rows.push(ConstantRow {
            name: name.to_string(),
            constant,
            error,
        });
    };
    let mut discrepancy = None;
    let mut hypotheses = None;
    if ps.len() == 1 {
        hypotheses = Some(check_thm21_hypotheses(ps[0], q, betas[0], gamma, n));
        match thm21_constant(ps[0], q, betas[0], gamma, n) {
            Ok(t) => {
                discrepancy = Some(t.discrepancy);
                push("thm21_statement", Ok(t.statement));
                push("thm21_proof", Ok(t.proof_variant));
            }
            Err(e) => {
                push("thm21_statement", Err(e.clone()));
                push("thm21_proof", Err(e));
            }
        }
    }
    push("thm22", thm22_constant(gamma, n));
    let m = ps.len();
    for form in [
        KernelForm::HardyIndicator,
        KernelForm::HlpMax,
        KernelForm::HilbertSum,
    ] {
        let name = form.name();
        let kernel = RadialKernel::new(m, form, n)?;
        push(
            &format!("M_{name}"),
            kernel_constant_m(&kernel, &betas, &ps, &cfg),
        );
        push(
            &format!("thm31_bound_{name}"),
            thm31_bound(&kernel, &betas, &ps, q, gamma, &cfg),
        );
    }
    let violated = hypotheses.as_ref().is_some_and(|h| !h.overall);

    let mut human = String::new();
    for r in &rows {
        match (&r.constant, &r.error) {
            (Some(c), _) => {
                human.push_str(&format!(
                    "{:<24} {:<20.15} {:?}: {}\n",
                    r.name,
                    c.value,
                    c.formula_id,
                    c.formula_id.formula()
                ));
                for (k, v) in &c.components {
                    human.push_str(&format!("{:<24}   {k} = {v}\n", ""));
                }
            }
            (None, Some(e)) => human.push_str(&format!("{:<24} unavailable: {e}\n", r.name)),
            (None, None) => {}
        }
    }
    if let Some(d) = discrepancy {
        human.push_str(&format!(
            "discrepancy flag: {}\n",
            if d {
                "FIRED (statement and proof variants differ)"
            } else {
                "clear"
            }
        ));
    }
    if violated {
        human.push_str("hypothesis-violated: the parameters fail the weak-type hypotheses\n");
    }

    let mut csv = String::from("name,value,formula_id,error_estimate,error\n");
    for r in &rows {
        match &r.constant {
            Some(c) => csv.push_str(&format!(
                "{},{:e},{:?},{:e},\n",
                r.name, c.value, c.formula_id, c.error_estimate
            )),
            None => csv.push_str(&format!(
                "{},,,,{}\n",
                r.name,
                csv_field(r.error.as_deref().unwrap_or(""))
            )),
        }
    }
    Ok(Rendered {
        json: json!({
            "constants": rows,
            "discrepancy": discrepancy,
            "hypotheses": hypotheses,
            "hypothesis_violated": violated,
        }),
        csv,
        human,
        failed: false,
    })
}

#[derive(Debug, Clone, Serialize)]
struct ApplyPoint {
    r: f64,
    value: f64,
    error_estimate: f64,
    converged: bool,
}

/// Operators: `hlp` (closed-form integrals), `hlp-quad`, `hlp-symbolic`,
/// `kernel` (with `kernel`, `m` and `f` or `f1..fm`).
pub fn apply(operator: &str, params: &Params, ctx: &RunContext) -> Result<Rendered> {
    params.expect_only(&keys(&[
        "f",
        "f1",
        "f2",
        "f3",
        "n",
        "r",
        "kernel",
        "m",
        "mc_samples",
    ]))?;
    let n = params.u32_or("n", 1)?;
    let radii = params.list_or("r", &[])?;
    let mut cfg = ctx.cfg.clone();
    if let Some(s) = params.u64_opt("mc_samples")? {
        cfg.mc_samples = s;
    }
    cfg.validate()?;
    let exact = |value: f64, r: f64| ApplyPoint {
        r,
        value,
        error_estimate: 0.0,
        converged: true,
    };
    let mut image_text = None;
    let points: Vec<ApplyPoint> = match operator {
        "hlp" => {
            let f = parse_fn(params, "f")?;
            radii
                .iter()
                .map(|&r| apply_hlp(&f, n, r).map(|v| exact(v, r)))
                .collect::<Result<_>>()?
        }
        "hlp-quad" => {
            let f = parse_fn(params, "f")?;
            radii
                .iter()
                .map(|&r| {
                    apply_hlp_quad(&f, n, r, &cfg).map(|res| ApplyPoint {
                        r,
                        value: res.value,
                        error_estimate: res.error_estimate,
                        converged: res.converged,
                    })
                })
                .collect::<Result<_>>()?
        }
        "hlp-symbolic" => {
            let f = parse_fn(params, "f")?;
            let g = apply_hlp_symbolic(&f, n)?;
            let pts = radii
                .iter()
                .map(|&r| g.evaluate(r).map(|v| exact(v, r)))
                .collect::<Result<_>>()?;
            image_text = Some(g.to_string());
            pts
        }
        "kernel" => {
            let m = params.u32_or("m", 1)? as usize;
            let form = KernelForm::parse(params.str("kernel").unwrap_or("hlp"))?;
            let kernel = RadialKernel::new(m, form, n)?;
            let fs = (1..=m)
                .map(|i| match params.str(&format!("f{i}")) {
                    Some(_) => parse_fn(params, &format!("f{i}")),
                    None => parse_fn(params, "f"),
                })
                .collect::<Result<Vec<_>>>()?;
            radii
                .iter()
                .map(|&r| {
                    apply_kernel_operator(&kernel, &fs, r, &cfg).map(|res| ApplyPoint {
                        r,
                        value: res.value,
                        error_estimate: res.error_estimate,
                        converged: res.converged,
                    })
                })
                .collect::<Result<_>>()?
        }
        other => {
            return Err(Error::Parse(format!(
                "unknown operator '{other}' (expected hlp, hlp-quad, hlp-symbolic or kernel)"
            )))
        }
    };
    if points.is_empty() && image_text.is_none() {
        return Err(Error::Parse("missing required parameter 'r'".into()));
    }
    let mut human = String::new();
    if let Some(t) = &image_text {
        human.push_str(&format!("image: {t}\n"));
    }
    let mut csv = String::from("r,value,error_estimate,converged\n");
    for p in &points {
        human.push_str(&format!("r = {}  value = {}", p.r, p.value));
        if p.error_estimate > 0.0 {
            human.push_str(&format!("  (+- {:.1e})", p.error_estimate));
        }
        human.push('\n');
        csv.push_str(&format!(
            "{},{},{:e},{}\n",
            p.r, p.value, p.error_estimate, p.converged
        ));
    }
    if points.is_empty() {
        csv = format!("image\n{}\n", csv_field(image_text.as_deref().unwrap_or("")));
    }
    Ok(Rendered {
        json: json!({ "operator": operator, "n": n, "image": image_text, "points": points }),
        csv,
        human,
        failed: points.iter().any(|p| !p.converged),
    })
}

/// Weak norm of `g`, or of the operator image of `f`. CSV output is the
/// distribution curve at `lambdas` (default: 41 levels around the argmax).
pub fn weak_norm_cmd(params: &Params, _ctx: &RunContext) -> Result<Rendered> {
    params.expect_only(&keys(&["g", "f", "q", "gamma", "n", "lambdas"]))?;
    let n = params.u32_or("n", 1)?;
    let q = params.f64_or("q", 1.0)?;
    let gamma = params.f64_or("gamma", 0.0)?;
    let g = match (params.str("g"), params.str("f")) {
        (Some(_), None) => parse_fn(params, "g")?,
        (None, Some(_)) => apply_hlp_symbolic(&parse_fn(params, "f")?, n)?,
        _ => return Err(Error::Parse("give exactly one of 'g' or 'f'".into())),
    };
    let sup = weak_norm_sup(&g, q, gamma, n)?;
    let lambdas = match params.str("lambdas") {
        Some(_) => params.list_or("lambdas", &[])?,
        None => {
            let centre = if sup.argmax_lambda.is_finite() {
                sup.argmax_lambda
            } else {
                1.0
            };
            log_radii(centre * 1e-2, centre * 10.0, 41)
        }
    };
    let curve = distribution_curve(&g, &lambdas, gamma, n)?;
    let human = format!(
        "weak norm = {}\nargmax lambda = {}\nexactness = {}\n",
        sup.value,
        sup.argmax_lambda,
        sup.exactness.as_str()
    );
    Ok(Rendered {
        json: json!({ "g": g.to_string(), "weak_norm": sup, "curve": curve }),
        csv: curve.to_csv(),
        human,
        failed: false,
    })
}

fn family_id(name: &str) -> Result<FamilyId> {
    match name {
        "thm21" => Ok(FamilyId::Thm21),
        "thm22" => Ok(FamilyId::Thm22),
        "power-cutoff" | "powercutoff" => Ok(FamilyId::PowerCutoff),
        other => Err(Error::Parse(format!(
            "unknown family '{other}' (expected thm21, thm22 or power-cutoff)"
        ))),
    }
}

/// Sharpness probe. Free parameters are named in `free` with optional
/// `<name>_lo`, `<name>_hi`; fixed family parameters are given by name.
pub fn probe(params: &Params, _ctx: &RunContext) -> Result<Rendered> {
    params.expect_only(&keys(&[
        "family",
        "free",
        "n",
        "p",
        "beta",
        "q",
        "gamma",
        "bound",
        "a",
        "radius",
        "a_lo",
        "a_hi",
        "radius_lo",
        "radius_hi",
        "grid_points",
        "tol",
    ]))?;
    let id = family_id(params.str("family").unwrap_or("power-cutoff"))?;
    let n = params.u32_or("n", 1)?;
    let nf = f64::from(n);
    let gamma = params.f64_or("gamma", 0.0)?;
    let space = if id == FamilyId::Thm21 {
        SpaceParams {
            n,
            p: params.f64_or("p", 3.0)?,
            beta: params.f64_or("beta", 0.5)?,
            q: params.f64_or("q", 2.0)?,
            gamma,
        }
    } else {
        SpaceParams {
            n,
            p: params.f64_or("p", 1.0)?,
            beta: params.f64_or("beta", 0.0)?,
            q: params.f64_or("q", (nf + gamma) / nf)?,
            gamma,
        }
    };
    let mut family = ExtremalFamily::new(id);
    for key in ["a", "radius"] {
        if let Some(v) = params.opt_f64(key)? {
            family = family.with(key, v);
        }
    }
    let default_free = if id == FamilyId::PowerCutoff { "a" } else { "" };
    let free: Vec<FreeParam> = params
        .str("free")
        .unwrap_or(default_free)
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| {
            let (lo, hi) = match name {
                "a" => (-(space.beta + nf) / space.p, 4.0),
                "radius" => (0.1, 10.0),
                other => return Err(Error::Parse(format!("unknown free parameter '{other}'"))),
            };
            Ok(FreeParam {
                name: name.to_string(),
                lo: params.f64_or(&format!("{name}_lo"), lo)?,
                hi: params.f64_or(&format!("{name}_hi"), hi)?,
            })
        })
        .collect::<Result<_>>()?;
    let bound = match params.opt_f64("bound")? {
        Some(b) => b,
        None if space.p == 1.0 => thm22_constant(gamma, n)?.value,
        None => {
            thm21_constant(space.p, space.q, space.beta, gamma, n)?
                .proof_variant
                .value
        }
    };
    let defaults = SearchConfig::default();
    let cfg = SearchConfig {
        grid_points: params.u32_or("grid_points", defaults.grid_points as u32)? as usize,
        tol: params.f64_or("tol", defaults.tol)?,
        ..defaults
    };
    let result = sharpness_probe(&family, &free, &space, bound, &cfg)?;
    let unsound = result.best_ratio > bound * (1.0 + 1e-9);
    let params_text: BTreeMap<&str, f64> = result.best_params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let human = format!(
        "best ratio = {}\nbound = {}\ngap = {}\nbest params = {:?}\nevaluations = {} (skipped {})\n{}",
        result.best_ratio,
        result.bound,
        result.gap,
        params_text,
        result.evaluations,
        result.skipped,
        if unsound {
            "UNSOUND: ratio exceeds the bound\n"
        } else {
            ""
        }
    );
    let mut csv = String::from("param,value\n");
    for (k, v) in &result.best_params {
        csv.push_str(&format!("{k},{v}\n"));
    }
    csv.push_str(&format!(
        "best_ratio,{}\nbound,{}\ngap,{}\nevaluations,{}\nskipped,{}\n",
        result.best_ratio, result.bound, result.gap, result.evaluations, result.skipped
    ));
    Ok(Rendered {
        json: serde_json::to_value(&result).map_err(|e| Error::Parse(e.to_string()))?,
        csv,
        human,
        failed: unsound,
    })
}
