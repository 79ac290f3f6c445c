//! Extremal families, their printed operator images, and a derivative-free
//! search for the largest weak-to-strong norm ratio within a family.

use std::collections::BTreeMap;

use log::info;
use serde::{Deserialize, Serialize};

use crate::constants::hoelder_sum;
use crate::error::{domain, Error, Result};
use crate::norms::{strong_norm, weak_norm};
use crate::operators::apply_hlp_symbolic;
use crate::radialfn::{PiecewisePowerLog, PowerLogTerm};
use crate::spaces::unit_sphere_area;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyId {
    /// `(r^{(beta+n)/(p-1)-n} + r^{-beta/(p-1)})` on `(0, 1]`.
    Thm21,
    /// `r^n` on `(0, 1]`.
    Thm22,
    /// `r^a` on `(0, radius]`, parameters `a` and optional `radius` (default 1).
    PowerCutoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalFamily {
    pub id: FamilyId,
    pub params: BTreeMap<String, f64>,
}

impl ExtremalFamily {
    pub fn new(id: FamilyId) -> Self {
        Self {
            id,
            params: BTreeMap::new(),
        }
    }

    pub fn power_cutoff(a: f64) -> Self {
        Self::new(FamilyId::PowerCutoff).with("a", a)
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    fn param(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::Domain(format!("family {:?} needs parameter '{key}'", self.id)))
    }
}

/// Source space `L^p(|x|^beta)` and target space `L^{q,inf}(|x|^gamma)` on `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub n: u32,
    pub p: f64,
    pub beta: f64,
    pub q: f64,
    pub gamma: f64,
}

impl SpaceParams {
    /// `L^1 -> L^{(n+gamma)/n, inf}(|x|^gamma)`.
    pub fn thm22(gamma: f64, n: u32) -> Self {
        Self {
            n,
            p: 1.0,
            beta: 0.0,
            q: (f64::from(n) + gamma) / f64::from(n),
            gamma,
        }
    }
}

fn thm21_exponents(space: &SpaceParams) -> (f64, f64) {
    let nf = f64::from(space.n);
    let pm1 = space.p - 1.0;
    ((space.beta + nf) / pm1 - nf, -space.beta / pm1)
}

pub fn make_extremal(family: &ExtremalFamily, space: &SpaceParams) -> Result<PiecewisePowerLog> {
    let nf = f64::from(space.n);
    let f = match family.id {
        FamilyId::Thm21 => {
            if !(space.p > 1.0) {
                return domain(format!("family Thm21 needs p > 1, got {}", space.p));
            }
            let (e1, e2) = thm21_exponents(space);
            PiecewisePowerLog::truncated(vec![PowerLogTerm::pow(1.0, e1), PowerLogTerm::pow(1.0, e2)], 1.0)?
        }
        FamilyId::Thm22 => PiecewisePowerLog::truncated(vec![PowerLogTerm::pow(1.0, nf)], 1.0)?,
        FamilyId::PowerCutoff => {
            let a = family.param("a")?;
            let radius = family.params.get("radius").copied().unwrap_or(1.0);
            if !(radius > 0.0 && radius.is_finite()) {
                return domain(format!("radius must be positive and finite, got {radius}"));
            }
            PiecewisePowerLog::truncated(vec![PowerLogTerm::pow(1.0, a)], radius)?
        }
    };
    match strong_norm(&f, space.p, space.beta, space.n) {
        Ok(v) if v.is_finite() => Ok(f),
        Ok(v) => domain(format!("extremal has strong norm {v}")),
        Err(Error::Divergence(msg)) => domain(format!("extremal is not in the source space: {msg}")),
        Err(e) => Err(e),
    }
}

/// The operator image exactly as printed alongside each family.
pub fn closed_form_image(family: &ExtremalFamily, space: &SpaceParams) -> Result<PiecewisePowerLog> {
    let nf = f64::from(space.n);
    match family.id {
        FamilyId::Thm21 => {
            let c = hoelder_sum(space.p, space.beta, space.n)?;
            let (e1, e2) = thm21_exponents(space);
            PiecewisePowerLog::new(
                vec![1.0, f64::INFINITY],
                vec![
                    vec![
                        PowerLogTerm::pow(c, e1),
                        PowerLogTerm::pow(c, e2),
                        PowerLogTerm::pow(-c, 0.0),
                    ],
                    vec![PowerLogTerm::pow(c, -nf)],
                ],
            )
        }
        FamilyId::Thm22 => {
            let cn = unit_sphere_area(space.n)? / (2.0 * nf);
            PiecewisePowerLog::new(
                vec![1.0, f64::INFINITY],
                vec![
                    vec![PowerLogTerm::pow(2.0 * cn, 0.0), PowerLogTerm::pow(-cn, nf)],
                    vec![PowerLogTerm::pow(cn, -nf)],
                ],
            )
        }
        FamilyId::PowerCutoff => domain("no printed image for the PowerCutoff family"),
    }
}

/// A parameter searched over the open interval `(lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub grid_points: usize,
    /// Golden-section stops when the bracket is below this width.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_points: 24,
            tol: 1e-8,
            max_sweeps: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub best_params: BTreeMap<String, f64>,
    pub best_ratio: f64,
    pub bound: f64,
    /// `1 - best_ratio / bound`.
    pub gap: f64,
    pub evaluations: usize,
    pub skipped: usize,
}

/// `weak_norm(H f) / strong_norm(f)` for one family member.
pub fn norm_ratio(family: &ExtremalFamily, space: &SpaceParams) -> Result<f64> {
    let f = make_extremal(family, space)?;
    let image = apply_hlp_symbolic(&f, space.n)?;
    let weak = weak_norm(&image, space.q, space.gamma, space.n)?;
    let strong = strong_norm(&f, space.p, space.beta, space.n)?;
    if !(strong > 0.0) {
        return domain("extremal has zero strong norm");
    }
    Ok(weak / strong)
}

struct Prober<'a> {
    family: &'a ExtremalFamily,
    space: &'a SpaceParams,
    evaluations: usize,
    skipped: usize,
    best: Option<(BTreeMap<String, f64>, f64)>,
}

impl Prober<'_> {
    fn eval(&mut self, params: &BTreeMap<String, f64>) -> Option<f64> {
        let mut fam = self.family.clone();
        fam.params.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
        self.evaluations += 1;
        match norm_ratio(&fam, self.space) {
            Ok(r) if r.is_finite() => {
                let better = match &self.best {
                    None => true,
                    Some((bp, br)) => r > *br || (r == *br && fam.params < *bp),
                };
                if better {
                    self.best = Some((fam.params.clone(), r));
                }
                Some(r)
            }
            Ok(r) => {
                info!("skipping {:?}: ratio {r}", fam.params);
                self.skipped += 1;
                None
            }
            Err(e) => {
                info!("skipping {:?}: {e}", fam.params);
                self.skipped += 1;
                None
            }
        }
    }

    /// Grid scan then golden-section on one coordinate; returns the best point.
    fn line_search(&mut self, base: &BTreeMap<String, f64>, p: &FreeParam, cfg: &SearchConfig) -> f64 {
        let at = |x: f64, me: &mut Self| -> f64 {
            let mut params = base.clone();
            params.insert(p.name.clone(), x);
            me.eval(&params).unwrap_or(f64::NEG_INFINITY)
        };
        let n = cfg.grid_points.max(3);
        let step = (p.hi - p.lo) / (n as f64 + 1.0);
        let mut best_x = p.lo + step;
        let mut best = f64::NEG_INFINITY;
        for k in 1..=n {
            let x = p.lo + step * k as f64;
            let v = at(x, self);
            if v > best {
                best = v;
                best_x = x;
            }
        }
        if best == f64::NEG_INFINITY {
            return best_x;
        }
        let g = 0.618_033_988_749_894_9;
        let (mut lo, mut hi) = (
            (best_x - step).max(p.lo + step * 1e-6),
            (best_x + step).min(p.hi - step * 1e-6),
        );
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let mut f1 = at(x1, self);
        let mut f2 = at(x2, self);
        while hi - lo > cfg.tol {
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = at(x1, self);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = at(x2, self);
            }
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v > best {
                best = v;
                best_x = x;
            }
        }
        best_x
    }
}

/// Maximises the weak-to-strong ratio of `H f` over the family's free
/// parameters: golden-section for one, coordinate descent for two.
/// Members outside the source space are skipped and logged.
pub fn sharpness_probe(
    family: &ExtremalFamily,
    free: &[FreeParam],
    space: &SpaceParams,
    bound: f64,
    cfg: &SearchConfig,
) -> Result<ProbeResult> {
    if !(bound > 0.0) {
        return domain(format!("bound must be positive, got {bound}"));
    }
    if free.len() > 2 {
        return domain(format!(
            "at most two free parameters are supported, got {}",
            free.len()
        ));
    }
    for p in free {
        if !(p.lo < p.hi) {
            return domain(format!("empty search interval for '{}'", p.name));
        }
    }
    let mut prober = Prober {
        family,
        space,
        evaluations: 0,
        skipped: 0,
        best: None,
    };
    match free {
        [] => {
            prober.eval(&BTreeMap::new());
        }
        [p] => {
            prober.line_search(&BTreeMap::new(), p, cfg);
        }
        _ => {
            let mut point: BTreeMap<String, f64> = free
                .iter()
                .map(|p| (p.name.clone(), 0.5 * (p.lo + p.hi)))
                .collect();
            let mut last = f64::NEG_INFINITY;
            for _ in 0..cfg.max_sweeps.max(1) {
                for p in free {
                    let x = prober.line_search(&point, p, cfg);
                    point.insert(p.name.clone(), x);
                }
                let now = prober.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1);
                if now - last <= cfg.tol * now.abs() {
                    break;
                }
                last = now;
            }
        }
    }
    let Some((best_params, best_ratio)) = prober.best else {
        return domain("no family member lies in the source space");
    };
    Ok(ProbeResult {
        best_params,
        best_ratio,
        bound,
        gap: 1.0 - best_ratio / bound,
        evaluations: prober.evaluations,
        skipped: prober.skipped,
    })
}
