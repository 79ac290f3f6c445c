//! End-to-end verification pipelines: build the extremal, apply the operator
//! numerically and symbolically, take the weak norm and compare with the
//! closed-form constants.

use std::cell::RefCell;
use std::time::Instant;

use serde::Serialize;

use crate::constants::{
    hoelder_sum, kernel_constant_m, thm21_constant, thm22_constant, thm31_bound, FormulaId,
};
use crate::error::{domain, Error, Result};
use crate::extremals::{closed_form_image, make_extremal, ExtremalFamily, FamilyId, SpaceParams};
use crate::norms::{strong_norm, weak_norm, weak_norm_profile, ProfileOptions};
use crate::operators::{
    apply_hlp_quad, apply_hlp_symbolic, apply_kernel_operator, KernelForm, RadialFunction, RadialKernel,
};
use crate::quad::QuadratureConfig;
use crate::radialfn::PiecewisePowerLog;
use crate::spaces::{check_thm31_hypotheses, unit_sphere_area, HypothesisReport};

use super::params::Params;
use super::report::{Reference, Relation, VerificationReport};

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub cfg: QuadratureConfig,
    /// `--rel-tol` or `rel_tol` was given explicitly.
    pub rel_tol_set: bool,
    /// Zero every runtime so output is byte-reproducible.
    pub no_timestamp: bool,
}

impl RunContext {
    pub(crate) fn elapsed_ms(&self, start: Instant) -> u64 {
        if self.no_timestamp {
            0
        } else {
            start.elapsed().as_millis() as u64
        }
    }

    /// The configured quadrature, or `default_rel_tol` unless overridden.
    pub(crate) fn cfg_with_default(&self, default_rel_tol: f64) -> QuadratureConfig {
        if self.rel_tol_set {
            self.cfg.clone()
        } else {
            self.cfg.clone().with_rel_tol(default_rel_tol)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOutput {
    pub theorem: &'static str,
    pub hypotheses: Option<HypothesisReport>,
    pub reports: Vec<VerificationReport>,
}

impl VerifyOutput {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

pub const COMMON_KEYS: [&str; 2] = ["rel_tol", "mc_seed"];

fn keys<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    COMMON_KEYS.iter().copied().chain(extra.iter().copied()).collect()
}

fn provenance(id: FormulaId, note: &str) -> String {
    if note.is_empty() {
        format!("{id:?}: {}", id.formula())
    } else {
        format!("{id:?}: {} ({note})", id.formula())
    }
}

/// `count` radii evenly spaced in `log r` over `[lo, hi]`.
pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Finds the radius of largest relative disagreement between two evaluators
/// and returns `(computed, reference)` there.
fn worst_pair(
    radii: &[f64],
    mut computed: impl FnMut(f64) -> Result<f64>,
    reference: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
    for &r in radii {
        let c = computed(r)?;
        let e = reference(r);
        let rel = Relation::Equal.rel_error(c, e);
        if rel > worst.0 {
            worst = (rel, c, e);
        }
    }
    Ok((worst.1, worst.2))
}

struct CaseRunner<'a> {
    ctx: &'a RunContext,
    hypotheses_ok: bool,
    reports: Vec<VerificationReport>,
}

impl CaseRunner<'_> {
    fn run(&mut self, case: &str, reference: Reference, f: impl FnOnce() -> Result<f64>) {
        let start = Instant::now();
        let computed = f();
        let ms = self.ctx.elapsed_ms(start);
        self.reports.push(VerificationReport::from_outcome(
            case,
            computed,
            reference,
            self.hypotheses_ok,
            ms,
        ));
    }

    /// Two-valued case: `f` returns `(computed, reference)`.
    fn run_pair(
        &mut self,
        case: &str,
        provenance: String,
        tolerance: f64,
        f: impl FnOnce() -> Result<(f64, f64)>,
    ) {
        let start = Instant::now();
        let out = f();
        let ms = self.ctx.elapsed_ms(start);
        let (computed, reference) = match out {
            Ok((c, r)) => (Ok(c), r),
            Err(e) => (Err(e), f64::NAN),
        };
        self.reports.push(VerificationReport::from_outcome(
            case,
            computed,
            Reference::equal(reference, provenance, tolerance),
            self.hypotheses_ok,
            ms,
        ));
    }

    fn finish(mut self, theorem: &'static str, hypotheses: Option<HypothesisReport>) -> VerifyOutput {
        self.reports.sort_by(|a, b| a.case.cmp(&b.case));
        VerifyOutput {
            theorem,
            hypotheses,
            reports: self.reports,
        }
    }
}

pub fn verify(theorem: &str, params: &Params, ctx: &RunContext) -> Result<VerifyOutput> {
    match theorem {
        "thm21" => verify_thm21(params, ctx),
        "thm22" => verify_thm22(params, ctx),
        "thm31" => verify_thm31(params, ctx),
        other => Err(Error::Parse(format!(
            "unknown theorem '{other}' (expected thm21, thm22 or thm31)"
        ))),
    }
}

const IMAGE_RADII: usize = 200;

fn verify_thm21(params: &Params, ctx: &RunContext) -> Result<VerifyOutput> {
    params.expect_only(&keys(&["p", "q", "beta", "gamma", "n"]))?;
    let space = SpaceParams {
        n: params.u32_or("n", 1)?,
        p: params.f64_or("p", 3.0)?,
        beta: params.f64_or("beta", 0.5)?,
        q: params.f64_or("q", 2.0)?,
        gamma: params.f64_or("gamma", 0.0)?,
    };
    let consts = thm21_constant(space.p, space.q, space.beta, space.gamma, space.n)?;
    let family = ExtremalFamily::new(FamilyId::Thm21);
    let f0 = make_extremal(&family, &space)?;
    let printed = closed_form_image(&family, &space)?;
    let c = consts.proof_variant.component("C_pnb").unwrap_or(f64::NAN);
    let cfg = ctx.cfg.clone();
    let n = space.n;
    let radii = log_radii(1e-3, 1e3, IMAGE_RADII);
    let stmt = consts.statement.value;
    let proof = consts.proof_variant.value;

    let mut runner = CaseRunner {
        ctx,
        hypotheses_ok: consts.hypotheses.overall,
        reports: Vec::new(),
    };
    let printed_norm = c.powf(1.0 / space.p);
    runner.run(
        "thm21.strong_norm",
        Reference::equal(
            printed_norm,
            provenance(FormulaId::Thm21Proof, "extremal norm C^(1/p)"),
            1e-12,
        ),
        || strong_norm(&f0, space.p, space.beta, n),
    );
    runner.run_pair(
        "thm21.image_numeric_vs_closed_form",
        provenance(
            FormulaId::Thm21Proof,
            "printed image C(2r^a - 1) on (0,1), C r^-n beyond; worst of 200 radii",
        ),
        1e-8,
        || {
            worst_pair(
                &radii,
                |r| apply_hlp_quad(&f0, n, r, &cfg).map(|x| x.value),
                |r| printed.value(r),
            )
        },
    );
    let symbolic = apply_hlp_symbolic(&f0, n);
    runner.run_pair(
        "thm21.image_symbolic_vs_numeric",
        "symbolic image against adaptive quadrature; worst of 200 radii".to_string(),
        1e-8,
        || {
            let g = symbolic.clone()?;
            worst_pair(
                &radii,
                |r| Ok(g.value(r)),
                |r| {
                    apply_hlp_quad(&f0, n, r, &cfg)
                        .map(|x| x.value)
                        .unwrap_or(f64::NAN)
                },
            )
        },
    );
    let weak = symbolic
        .clone()
        .and_then(|g| weak_norm(&g, space.q, space.gamma, n));
    let strong = strong_norm(&f0, space.p, space.beta, n);
    runner.run(
        "thm21.weak_norm",
        Reference::equal(
            proof * printed_norm,
            provenance(
                FormulaId::Thm21Proof,
                "claimed weak norm of the image, constant times C^(1/p)",
            ),
            1e-6,
        ),
        || weak.clone(),
    );
    let ratio = match (&weak, &strong) {
        (Ok(w), Ok(s)) => Ok(w / s),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    runner.run(
        "thm21.ratio_vs_proof_variant",
        Reference::equal(proof, provenance(FormulaId::Thm21Proof, ""), 1e-6),
        || ratio.clone(),
    );
    runner.run(
        "thm21.ratio_departs_from_statement",
        Reference::new(
            0.2,
            provenance(
                FormulaId::Thm21Statement,
                "relative departure of the ratio must be at least 0.2",
            ),
            Relation::AtLeast,
            0.0,
        ),
        || ratio.clone().map(|x| (x / stmt - 1.0).abs()),
    );
    runner.run(
        "thm21.discrepancy_flag",
        Reference::new(
            crate::constants::DISCREPANCY_TOL,
            provenance(
                FormulaId::Thm21Statement,
                "relative gap to the proof variant exceeds the flag threshold",
            ),
            Relation::AtLeast,
            0.0,
        ),
        || Ok((stmt - proof).abs() / stmt),
    );
    Ok(runner.finish("thm21", Some(consts.hypotheses)))
}

fn verify_thm22(params: &Params, ctx: &RunContext) -> Result<VerifyOutput> {
    params.expect_only(&keys(&["gamma", "n"]))?;
    let n = params.u32_or("n", 1)?;
    let gamma = params.f64_or("gamma", 0.0)?;
    let constant = thm22_constant(gamma, n)?;
    let space = SpaceParams::thm22(gamma, n);
    let family = ExtremalFamily::new(FamilyId::Thm22);
    let f0 = make_extremal(&family, &space)?;
    let printed = closed_form_image(&family, &space)?;
    let w = unit_sphere_area(n)?;
    let nf = f64::from(n);
    let cfg = ctx.cfg.clone();
    let radii = log_radii(1e-3, 1e3, IMAGE_RADII);
    let k = constant.value;

    let mut runner = CaseRunner {
        ctx,
        hypotheses_ok: true,
        reports: Vec::new(),
    };
    let strong = strong_norm(&f0, 1.0, 0.0, n);
    runner.run(
        "thm22.strong_norm",
        Reference::equal(
            w / (2.0 * nf),
            provenance(FormulaId::Thm22, "extremal norm w_n/(2n)"),
            1e-12,
        ),
        || strong.clone(),
    );
    runner.run_pair(
        "thm22.image_numeric_vs_closed_form",
        provenance(
            FormulaId::Thm22,
            "printed image C_n(2 - r^n) on (0,1), C_n r^-n beyond; worst of 200 radii",
        ),
        1e-8,
        || {
            worst_pair(
                &radii,
                |r| apply_hlp_quad(&f0, n, r, &cfg).map(|x| x.value),
                |r| printed.value(r),
            )
        },
    );
    let symbolic = apply_hlp_symbolic(&f0, n);
    runner.run_pair(
        "thm22.image_symbolic_vs_closed_form",
        provenance(
            FormulaId::Thm22,
            "symbolic image against the printed image; worst of 200 radii",
        ),
        1e-10,
        || {
            let g = symbolic.clone()?;
            worst_pair(&radii, |r| Ok(g.value(r)), |r| printed.value(r))
        },
    );
    runner.run(
        "thm22.ratio_symbolic",
        Reference::equal(
            k,
            provenance(FormulaId::Thm22, "exact level sets of the symbolic image"),
            1e-8,
        ),
        || {
            let g = symbolic.clone()?;
            Ok(weak_norm(&g, space.q, gamma, n)? / strong.clone()?)
        },
    );
    runner.run(
        "thm22.ratio_numeric",
        Reference::equal(
            k,
            provenance(FormulaId::Thm22, "profile weak norm of the quadrature image"),
            1e-8,
        ),
        || {
            let image = QuadImage::new(
                |r| apply_hlp_quad(&f0, n, r, &cfg).map(|x| x.value),
                vec![1.0],
                Some(0.0),
            );
            let opts = ProfileOptions {
                kinks: vec![1.0],
                ..ProfileOptions::default()
            };
            let sup = weak_norm_profile(&image, space.q, gamma, n, &opts);
            image.take_error()?;
            Ok(sup?.value / strong.clone()?)
        },
    );
    Ok(runner.finish("thm22", None))
}

/// A radial function evaluated by a fallible numerical routine. The first
/// failure is kept and the function reads as NaN from then on.
pub struct QuadImage<F> {
    eval: F,
    breakpoints: Vec<f64>,
    origin_exponent: Option<f64>,
    error: RefCell<Option<Error>>,
}

impl<F: Fn(f64) -> Result<f64>> QuadImage<F> {
    pub fn new(eval: F, breakpoints: Vec<f64>, origin_exponent: Option<f64>) -> Self {
        Self {
            eval,
            breakpoints,
            origin_exponent,
            error: RefCell::new(None),
        }
    }

    pub fn take_error(&self) -> Result<()> {
        match self.error.borrow_mut().take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

impl<F: Fn(f64) -> Result<f64>> RadialFunction for QuadImage<F> {
    fn value(&self, r: f64) -> f64 {
        if self.error.borrow().is_some() {
            return f64::NAN;
        }
        match (self.eval)(r) {
            Ok(v) => v,
            Err(e) => {
                *self.error.borrow_mut() = Some(e);
                f64::NAN
            }
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
    fn origin_exponent(&self) -> Option<f64> {
        self.origin_exponent
    }
    fn support_end(&self) -> f64 {
        f64::INFINITY
    }
}

/// Profile grid used for kernel images; coarser at higher arity where each
/// evaluation is a nested integral.
pub fn kernel_profile_options(arity: usize, radius: f64) -> ProfileOptions {
    if arity == 1 {
        ProfileOptions {
            kinks: vec![radius],
            ..ProfileOptions::default()
        }
    } else {
        ProfileOptions {
            r_min: 1e-4,
            r_max: 1e4,
            points_per_decade: 8,
            kinks: vec![radius],
            lambda_tol: 1e-7,
        }
    }
}

/// `weak_norm(T(f_1..f_m)) / prod ||f_i||` for cut-off power inputs.
pub fn kernel_ratio(
    kernel: &RadialKernel,
    inputs: &[PiecewisePowerLog],
    ps: &[f64],
    betas: &[f64],
    q: f64,
    gamma: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let mut product = 1.0;
    for ((f, &p), &beta) in inputs.iter().zip(ps).zip(betas) {
        product *= strong_norm(f, p, beta, kernel.n)?;
    }
    if !(product > 0.0) {
        return domain("input has zero strong norm");
    }
    let radius = inputs
        .iter()
        .map(|f| f.support_end())
        .filter(|e| e.is_finite())
        .fold(1.0_f64, f64::max);
    let image = QuadImage::new(
        |r| {
            let res = apply_kernel_operator(kernel, inputs, r, cfg)?;
            Ok(res.value)
        },
        vec![radius],
        None,
    );
    let sup = weak_norm_profile(
        &image,
        q,
        gamma,
        kernel.n,
        &kernel_profile_options(kernel.arity, radius),
    );
    image.take_error()?;
    Ok(sup?.value / product)
}

fn verify_thm31(params: &Params, ctx: &RunContext) -> Result<VerifyOutput> {
    params.expect_only(&keys(&[
        "m", "kernel", "p", "beta", "q", "gamma", "n", "a", "radius",
    ]))?;
    let m = params.u32_or("m", 2)? as usize;
    if !(1..=3).contains(&m) {
        return domain(format!("verify thm31 supports m in 1..=3, got {m}"));
    }
    let form = KernelForm::parse(params.str("kernel").unwrap_or("hilbert"))?;
    let n = params.u32_or("n", 1)?;
    let ps = params.list_or("p", &vec![3.0; m])?;
    let betas = params.list_or("beta", &vec![0.5; m])?;
    if ps.len() != m || betas.len() != m {
        return domain(format!("m = {m} needs {m} values of p and beta"));
    }
    let q = params.f64_or("q", 2.0)?;
    let gamma = params.f64_or("gamma", 1.0)?;
    let exponents = params.list_or("a", &[0.0, 0.5])?;
    let radius = params.f64_or("radius", 1.0)?;
    let kernel = RadialKernel::new(m, form, n)?;
    let hypotheses = check_thm31_hypotheses(&ps, &betas, q, gamma, n)?;
    let cfg = ctx.cfg_with_default(if m == 1 { 1e-8 } else { 1e-6 });
    cfg.validate()?;
    let bound = thm31_bound(&kernel, &betas, &ps, q, gamma, &cfg)?;
    let bound_prov = provenance(
        bound.formula_id,
        &format!("{} kernel, m = {m}", kernel.form.name()),
    );

    let mut runner = CaseRunner {
        ctx,
        hypotheses_ok: hypotheses.overall,
        reports: Vec::new(),
    };
    for &a in &exponents {
        let family = ExtremalFamily::power_cutoff(a).with("radius", radius);
        let inputs: Result<Vec<PiecewisePowerLog>> = ps
            .iter()
            .zip(&betas)
            .map(|(&p, &beta)| make_extremal(&family, &SpaceParams { n, p, beta, q, gamma }))
            .collect();
        let inputs = inputs?;
        runner.run(
            &format!("thm31.bound.{}.a={a}", kernel.form.name()),
            Reference::new(bound.value, bound_prov.clone(), Relation::AtMost, 1e-5),
            || kernel_ratio(&kernel, &inputs, &ps, &betas, q, gamma, &cfg),
        );
    }
    if let Ok(c) = hoelder_sum(ps[0], betas[0], n) {
        let p_prime = ps[0] / (ps[0] - 1.0);
        let hlp = RadialKernel::new(1, KernelForm::HlpMax, n)?;
        let cfg1 = ctx.cfg_with_default(1e-10);
        runner.run(
            "thm31.hlp_m1_reduction",
            Reference::equal(
                c.powf(1.0 / p_prime),
                provenance(
                    FormulaId::Thm21Proof,
                    "Hoelder factor C^(1/p') of the first coordinate",
                ),
                1e-8,
            ),
            || kernel_constant_m(&hlp, &betas[..1], &ps[..1], &cfg1).map(|s| s.value),
        );
    }
    Ok(runner.finish("thm31", Some(hypotheses)))
}
