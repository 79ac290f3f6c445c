//! Radial reductions of the n-dimensional Hardy-Littlewood-Polya operator
//! and of m-linear operators with a radial kernel.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::quad::{
    integrate_1d_with_splits, integrate_mc, integrate_nested, IntegralResult, NestedIntegrand,
    QuadratureConfig, SamplingMap,
};
use crate::radialfn::{antiderivative_terms, eval_terms, PiecewisePowerLog, PowerLogTerm};
use crate::spaces::unit_sphere_area;

/// A radial function of one variable as seen by the numeric paths.
pub trait RadialFunction {
    fn value(&self, r: f64) -> f64;

    /// Finite points where the function is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Exponent `a` in `f(r) ~ r^a` as `r -> 0+`, when known.
    fn origin_exponent(&self) -> Option<f64> {
        None
    }

    /// Radius beyond which the function vanishes.
    fn support_end(&self) -> f64 {
        f64::INFINITY
    }
}

impl RadialFunction for PiecewisePowerLog {
    fn value(&self, r: f64) -> f64 {
        PiecewisePowerLog::value(self, r)
    }

    fn breakpoints(&self) -> Vec<f64> {
        PiecewisePowerLog::breakpoints(self)
            .iter()
            .copied()
            .filter(|b| b.is_finite())
            .collect()
    }

    fn origin_exponent(&self) -> Option<f64> {
        self.origin_asymptote().map(|t| t.power)
    }

    fn support_end(&self) -> f64 {
        PiecewisePowerLog::support_end(self)
    }
}

/// Adapter for closures.
pub struct FnRadial<F> {
    pub f: F,
    pub breakpoints: Vec<f64>,
    pub origin_exponent: Option<f64>,
}

impl<F: Fn(f64) -> f64> FnRadial<F> {
    pub fn new(f: F) -> Self {
        Self {
            f,
            breakpoints: Vec::new(),
            origin_exponent: None,
        }
    }
}

impl<F: Fn(f64) -> f64> RadialFunction for FnRadial<F> {
    fn value(&self, r: f64) -> f64 {
        (self.f)(r)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
    fn origin_exponent(&self) -> Option<f64> {
        self.origin_exponent
    }
}

pub type KernelProfile = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum KernelForm {
    /// Indicator of `sum s_i^2 <= 1`.
    HardyIndicator,
    /// Indicator of `max s_i <= 1`.
    HardyMaxBlock,
    /// `1 / max(1, s_1^n, ..., s_m^n)^m`.
    HlpMax,
    /// `1 / (1 + s_1^n + ... + s_m^n)^m`.
    HilbertSum,
    Custom(KernelProfile),
}

impl fmt::Debug for KernelForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelForm::HardyIndicator => write!(f, "HardyIndicator"),
            KernelForm::HardyMaxBlock => write!(f, "HardyMaxBlock"),
            KernelForm::HlpMax => write!(f, "HlpMax"),
            KernelForm::HilbertSum => write!(f, "HilbertSum"),
            KernelForm::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl KernelForm {
    pub fn name(&self) -> &'static str {
        match self {
            KernelForm::HardyIndicator => "hardy",
            KernelForm::HardyMaxBlock => "hardy-max",
            KernelForm::HlpMax => "hlp",
            KernelForm::HilbertSum => "hilbert",
            KernelForm::Custom(_) => "custom",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "hardy" => Ok(KernelForm::HardyIndicator),
            "hardy-max" => Ok(KernelForm::HardyMaxBlock),
            "hlp" => Ok(KernelForm::HlpMax),
            "hilbert" => Ok(KernelForm::HilbertSum),
            other => Err(Error::Parse(format!(
                "unknown kernel '{other}' (expected hardy, hardy-max, hlp or hilbert)"
            ))),
        }
    }
}

/// Radial profile `K_rad(s_1, ..., s_m)` of a kernel on `(R^n)^m`.
#[derive(Debug, Clone)]
pub struct RadialKernel {
    pub arity: usize,
    pub form: KernelForm,
    pub n: u32,
}

impl RadialKernel {
    pub fn new(arity: usize, form: KernelForm, n: u32) -> Result<Self> {
        if arity < 1 {
            return domain("kernel arity must be at least 1");
        }
        if n < 1 {
            return domain("dimension n must be at least 1");
        }
        Ok(Self { arity, form, n })
    }

    pub fn profile(&self, s: &[f64]) -> f64 {
        let m = self.arity as i32;
        let nf = f64::from(self.n);
        match &self.form {
            KernelForm::HardyIndicator => {
                if s.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelForm::HardyMaxBlock => {
                if s.iter().all(|&x| x <= 1.0) {
                    1.0
                } else {
                    0.0
                }
            }
            KernelForm::HlpMax => {
                let top = s.iter().fold(1.0f64, |acc, &x| acc.max(x));
                top.powf(nf).powi(m).recip()
            }
            KernelForm::HilbertSum => {
                let sum: f64 = s.iter().map(|x| x.powf(nf)).sum();
                (1.0 + sum).powi(m).recip()
            }
            KernelForm::Custom(k) => k(s),
        }
    }

    /// Points where the profile is not smooth in coordinate `level`, given
    /// the outer coordinates `point[level+1..arity]`.
    pub fn kinks(&self, level: usize, point: &[f64]) -> Vec<f64> {
        let outer = &point[level + 1..self.arity];
        match self.form {
            KernelForm::HlpMax => {
                let mut v = vec![1.0];
                v.extend(outer.iter().copied().filter(|&x| x > 0.0));
                v
            }
            KernelForm::HardyIndicator => {
                let rest: f64 = outer.iter().map(|x| x * x).sum();
                if rest < 1.0 {
                    vec![(1.0 - rest).sqrt()]
                } else {
                    Vec::new()
                }
            }
            KernelForm::HardyMaxBlock | KernelForm::HilbertSum => vec![1.0],
            KernelForm::Custom(_) => Vec::new(),
        }
    }

    /// True when the profile vanishes for every value of the coordinates at
    /// or below `level`, given the outer ones.
    fn vanishes_from(&self, level: usize, point: &[f64]) -> bool {
        let outer = &point[level..self.arity];
        match self.form {
            KernelForm::HardyIndicator => outer.iter().map(|x| x * x).sum::<f64>() > 1.0,
            KernelForm::HardyMaxBlock => outer.iter().any(|&x| x > 1.0),
            _ => false,
        }
    }
}

fn check_n_r(n: u32, r: f64) -> Result<()> {
    if n < 1 {
        return domain("dimension n must be at least 1");
    }
    if !(r.is_finite() && r > 0.0) {
        return domain(format!("radius must be positive and finite, got {r}"));
    }
    Ok(())
}

/// `H f(r) = w_n [ r^{-n} int_0^r f(s) s^{n-1} ds + int_r^inf f(s) s^{-1} ds ]`
/// with both integrals in closed form.
pub fn apply_hlp(f: &PiecewisePowerLog, n: u32, r: f64) -> Result<f64> {
    check_n_r(n, r)?;
    let nf = f64::from(n);
    let inner = f.integrate_weighted(0.0, r, nf - 1.0)?;
    let outer = f.integrate_weighted(r, f64::INFINITY, -1.0)?;
    Ok(unit_sphere_area(n)? * (inner / r.powf(nf) + outer))
}

/// [`apply_hlp`] by adaptive quadrature, for arbitrary radial functions.
pub fn apply_hlp_quad(
    f: &dyn RadialFunction,
    n: u32,
    r: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    check_n_r(n, r)?;
    let nf = f64::from(n);
    let bps = f.breakpoints();
    let inner_cfg = QuadratureConfig {
        singularity_exponent_hint: f.origin_exponent().map(|a| a + nf - 1.0),
        ..cfg.clone()
    };
    let inner = integrate_1d_with_splits(|s| f.value(s) * s.powf(nf - 1.0), 0.0, r, &bps, &inner_cfg)?;
    let end = f.support_end();
    let outer = if end <= r {
        IntegralResult {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions_used: 0,
            converged: true,
        }
    } else {
        integrate_1d_with_splits(|s| f.value(s) / s, r, end, &bps, cfg)?
    };
    let w = unit_sphere_area(n)?;
    let rn = r.powf(nf);
    Ok(IntegralResult {
        value: w * (inner.value / rn + outer.value),
        error_estimate: w * (inner.error_estimate / rn + outer.error_estimate),
        subdivisions_used: inner.subdivisions_used + outer.subdivisions_used,
        converged: inner.converged && outer.converged,
    })
}

/// Exact image of `f` under the operator, as a piecewise power-log function
/// on the breakpoints of `f` (plus an `r^{-n}` tail beyond a finite support).
pub fn apply_hlp_symbolic(f: &PiecewisePowerLog, n: u32) -> Result<PiecewisePowerLog> {
    if n < 1 {
        return domain("dimension n must be at least 1");
    }
    let nf = f64::from(n);
    let w = unit_sphere_area(n)?;
    let k = f.pieces().len();
    // Convergence of both integrals over the whole range.
    f.integrate_weighted(0.0, f.breakpoints()[0].min(1.0), nf - 1.0)?;
    if f.support_end().is_infinite() {
        let last_lo = f.piece_bounds(k - 1).0;
        let tail_lo = if last_lo > 0.0 { last_lo } else { 1.0 };
        f.integrate_weighted(tail_lo, f64::INFINITY, -1.0)?;
    }

    let mut inner_mass = Vec::with_capacity(k);
    let mut outer_mass = Vec::with_capacity(k);
    for i in 0..k {
        let (lo, hi) = f.piece_bounds(i);
        inner_mass.push(if hi.is_infinite() {
            0.0
        } else {
            f.integrate_weighted(lo, hi, nf - 1.0)?
        });
        outer_mass.push(if lo == 0.0 {
            0.0
        } else {
            f.integrate_weighted(lo, hi, -1.0)?
        });
    }

    let mut breakpoints = Vec::with_capacity(k + 1);
    let mut pieces = Vec::with_capacity(k + 1);
    for i in 0..k {
        let (lo, hi) = f.piece_bounds(i);
        let terms = &f.pieces()[i];
        let p = antiderivative_terms(terms, nf - 1.0)?;
        let q = antiderivative_terms(terms, -1.0)?;
        let below: f64 = inner_mass[..i].iter().sum();
        let above: f64 = outer_mass[i + 1..].iter().sum();
        let const_a = below - if lo == 0.0 { 0.0 } else { eval_terms(&p, lo) };
        let const_b = above + if hi.is_infinite() { 0.0 } else { eval_terms(&q, hi) };
        let mut img: Vec<PowerLogTerm> = Vec::new();
        for t in &p {
            img.push(PowerLogTerm {
                coeff: w * t.coeff,
                power: t.power - nf,
                log_order: t.log_order,
            });
        }
        img.push(PowerLogTerm::pow(w * const_a, -nf));
        img.push(PowerLogTerm::pow(w * const_b, 0.0));
        for t in &q {
            img.push(PowerLogTerm {
                coeff: -w * t.coeff,
                ..*t
            });
        }
        breakpoints.push(hi);
        pieces.push(img);
    }
    let end = f.support_end();
    if end.is_finite() {
        let total: f64 = inner_mass.iter().sum();
        breakpoints.push(f64::INFINITY);
        pieces.push(vec![PowerLogTerm::pow(w * total, -nf)]);
    }
    PiecewisePowerLog::new(breakpoints, pieces)
}

struct KernelIntegrand<'a, F: RadialFunction> {
    kernel: &'a RadialKernel,
    fs: &'a [F],
    r: f64,
    nf: f64,
}

impl<F: RadialFunction> KernelIntegrand<'_, F> {
    fn factor(&self, i: usize, s: f64) -> f64 {
        let v = self.fs[i].value(self.r * s);
        if v == 0.0 {
            0.0
        } else {
            v * s.powf(self.nf - 1.0)
        }
    }
}

impl<F: RadialFunction> NestedIntegrand for KernelIntegrand<'_, F> {
    fn arity(&self) -> usize {
        self.kernel.arity
    }

    fn innermost(&self, point: &[f64; 3]) -> f64 {
        let f0 = self.factor(0, point[0]);
        if f0 == 0.0 {
            return 0.0;
        }
        let k = self.kernel.profile(&point[..self.kernel.arity]);
        if k == 0.0 {
            0.0
        } else {
            k * f0
        }
    }

    fn lift(&self, level: usize, inner: f64, point: &[f64; 3]) -> f64 {
        if inner == 0.0 {
            0.0
        } else {
            inner * self.factor(level, point[level])
        }
    }

    fn vanishes(&self, level: usize, point: &[f64; 3]) -> bool {
        self.factor(level, point[level]) == 0.0
            || self.kernel.vanishes_from(level, &point[..self.kernel.arity])
    }

    fn splits(&self, level: usize, point: &[f64; 3]) -> Vec<f64> {
        let mut v = self.kernel.kinks(level, &point[..self.kernel.arity]);
        v.extend(self.fs[level].breakpoints().iter().map(|b| b / self.r));
        let end = self.fs[level].support_end();
        if end.is_finite() {
            v.push(end / self.r);
        }
        v
    }

    fn singularity_hint(&self, level: usize) -> Option<f64> {
        self.fs[level].origin_exponent().map(|a| a + self.nf - 1.0)
    }
}

fn mc_map(f: &dyn RadialFunction, n: f64, r: f64) -> SamplingMap {
    let inner_exponent = f
        .origin_exponent()
        .map_or(n - 1.0, |a| a + n - 1.0)
        .clamp(-0.9, 4.0);
    let end = f.support_end();
    if end.is_finite() {
        SamplingMap::Power {
            exponent: inner_exponent,
            hi: end / r,
        }
    } else {
        SamplingMap::BrokenPower {
            inner_exponent,
            outer_exponent: -1.5,
            knee: 1.0,
            inner_mass: 0.5,
        }
    }
}

/// `w_n^m int K_rad(s) prod f_i(r s_i) s_i^{n-1} ds` by nested quadrature
/// for `m <= 3` and seeded Monte Carlo beyond that.
///
/// Nested quadrature that fails to meet the tolerance is an error; the Monte
/// Carlo estimate is always returned with its standard error.
pub fn apply_kernel_operator<F: RadialFunction>(
    kernel: &RadialKernel,
    fs: &[F],
    r: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    check_n_r(kernel.n, r)?;
    if fs.len() != kernel.arity {
        return domain(format!(
            "kernel arity {} but {} functions given",
            kernel.arity,
            fs.len()
        ));
    }
    let nf = f64::from(kernel.n);
    let scale = unit_sphere_area(kernel.n)?.powi(kernel.arity as i32);
    let res = if kernel.arity <= 3 {
        let integrand = KernelIntegrand { kernel, fs, r, nf };
        let res = integrate_nested(&integrand, cfg)?;
        if !res.converged {
            return Err(Error::NonConvergence(format!(
                "kernel operator at r = {r}: estimate {} with error {}",
                scale * res.value,
                scale * res.error_estimate
            )));
        }
        res
    } else {
        let maps: Vec<SamplingMap> = fs.iter().map(|f| mc_map(f, nf, r)).collect();
        integrate_mc(
            |s| {
                let k = kernel.profile(s);
                if k == 0.0 {
                    return 0.0;
                }
                s.iter()
                    .zip(fs)
                    .map(|(&si, f)| f.value(r * si) * si.powf(nf - 1.0))
                    .product::<f64>()
                    * k
            },
            &maps,
            cfg,
        )?
    };
    Ok(IntegralResult {
        value: scale * res.value,
        error_estimate: scale * res.error_estimate,
        ..res
    })
}
