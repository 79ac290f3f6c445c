//! Adaptive Gauss-Kronrod quadrature on `(lo, hi)` with `hi` possibly
//! infinite, nested iterated integrals of up to three radial coordinates, and
//! seeded Monte Carlo for higher arity.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Substitution used for an infinite upper limit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailMap {
    /// `r = a + t/(1-t)`.
    #[default]
    Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub tail_map: TailMap,
    /// Expected exponent `a` of an `r^a` singularity at the origin.
    pub singularity_exponent_hint: Option<f64>,
    pub mc_samples: u64,
    pub mc_seed: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
            tail_map: TailMap::Rational,
            singularity_exponent_hint: None,
            mc_samples: 1_000_000,
            mc_seed: 0,
        }
    }
}

impl QuadratureConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return domain(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if !(self.abs_tol >= 0.0) {
            return domain(format!("abs_tol must be non-negative, got {}", self.abs_tol));
        }
        if self.max_subdivisions < 1 {
            return domain("max_subdivisions must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions_used: usize,
    pub converged: bool,
}

impl IntegralResult {
    fn exact(value: f64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
            subdivisions_used: 0,
            converged: true,
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Variable change for one segment: maps `t in (t0, t1)` to a radius.
#[derive(Debug, Clone, Copy)]
enum Map {
    Linear,
    /// `r = b * t^s` on `t in (0, 1)`.
    Power {
        b: f64,
        s: f64,
    },
    /// `r = a + t/(1-t)` on `t in (0, 1)`.
    Rational {
        a: f64,
    },
    /// `r = a * t^{-s}` on `t in (0, 1)`.
    InversePower {
        a: f64,
        s: f64,
    },
}

impl Map {
    fn apply(&self, t: f64) -> (f64, f64) {
        match *self {
            Map::Linear => (t, 1.0),
            Map::Power { b, s } => (b * t.powf(s), b * s * t.powf(s - 1.0)),
            Map::Rational { a } => {
                let d = 1.0 - t;
                (a + t / d, 1.0 / (d * d))
            }
            Map::InversePower { a, s } => {
                let r = a * t.powf(-s);
                (r, s * r / t)
            }
        }
    }
}

struct Panel {
    seg: usize,
    t0: f64,
    t1: f64,
    value: f64,
    err: f64,
    order: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then(other.order.cmp(&self.order))
    }
}

fn mapped_eval<F>(f: &mut F, map: &Map, t: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (r, jac) = map.apply(t);
    if r == 0.0 || r.is_infinite() || jac == 0.0 {
        // Underflow or overflow of the substitution itself; the panel carries no mass there.
        return Ok(0.0);
    }
    let v = f(r)?;
    if v.is_nan() || v.is_infinite() {
        return Err(Error::Evaluation {
            abscissa: r,
            value: v,
        });
    }
    let out = v * jac;
    if out.is_finite() {
        Ok(out)
    } else if v == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Evaluation {
            abscissa: r,
            value: out,
        })
    }
}

/// One 15-point Kronrod panel with the embedded 7-point Gauss estimate.
fn gk15<F>(f: &mut F, map: &Map, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = mapped_eval(f, map, center)?;
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = mapped_eval(f, map, center - dx)?;
        let f2 = mapped_eval(f, map, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((value, err))
}

/// Estimates the local power `a` in `f(r) ~ r^a` from two samples.
fn probe_exponent<F>(f: &mut F, r1: f64, r2: f64) -> Result<Option<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (v1, v2) = (f(r1)?, f(r2)?);
    if !(v1.is_finite() && v2.is_finite()) || v1 == 0.0 || v2 == 0.0 || (v1 > 0.0) != (v2 > 0.0) {
        return Ok(None);
    }
    Ok(Some((v2 / v1).ln() / (r2 / r1).ln()))
}

const MAX_POWER_STRETCH: f64 = 8.0;

fn origin_map<F>(f: &mut F, b: f64, hint: Option<f64>) -> Result<(Map, f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let alpha = match hint {
        Some(a) => Some(a),
        None => probe_exponent(f, b * 1e-7, b * 1e-10)?,
    };
    match alpha {
        Some(a) if a > -1.0 && a < -0.02 => {
            let s = (1.0 / (1.0 + a)).min(MAX_POWER_STRETCH);
            Ok((Map::Power { b, s }, 0.0, 1.0))
        }
        // Fractional positive powers: r = b t^2 lifts the endpoint
        // smoothness (exactly smooth for half-integers).
        Some(a) if a > 0.0 && a < 4.0 && (a - a.round()).abs() > 0.02 => {
            Ok((Map::Power { b, s: 2.0 }, 0.0, 1.0))
        }
        _ => Ok((Map::Linear, 0.0, b)),
    }
}

fn tail_map<F>(f: &mut F, a: f64, _kind: TailMap) -> Result<(Map, f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    // Slowly decaying power tails leave a non-integrable-looking endpoint
    // under the rational map; those are flattened by an inverse power map.
    if a > 0.0 {
        let base = a.max(1.0);
        if let Some(alpha) = probe_exponent(f, base * 1e6, base * 1e9)? {
            let decay = -alpha;
            if decay > 1.0 && decay < 2.0 {
                let s = (1.0 / (decay - 1.0)).min(MAX_POWER_STRETCH);
                return Ok((Map::InversePower { a, s }, 0.0, 1.0));
            }
        }
    }
    Ok((Map::Rational { a }, 0.0, 1.0))
}

fn adapt<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    splits: &[f64],
    cfg: &QuadratureConfig,
    hint: Option<f64>,
) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    cfg.validate()?;
    if lo.is_nan() || hi.is_nan() || lo < 0.0 || lo.is_infinite() {
        return domain(format!("invalid integration range ({lo}, {hi})"));
    }
    if hi <= lo {
        return Ok(IntegralResult::exact(0.0));
    }
    let mut edges: Vec<f64> = vec![lo];
    let mut inner: Vec<f64> = splits
        .iter()
        .copied()
        .filter(|s| s.is_finite() && *s > lo && *s < hi)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    if hi.is_infinite() && *edges.last().expect("non-empty") == 0.0 {
        edges.push(1.0);
    }
    edges.push(hi);

    let mut maps = Vec::with_capacity(edges.len());
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = if b.is_infinite() {
            tail_map(&mut f, a, cfg.tail_map)?
        } else if a == 0.0 {
            origin_map(&mut f, b, hint)?
        } else {
            (Map::Linear, a, b)
        };
        maps.push(m);
    }

    let mut heap = BinaryHeap::new();
    let mut order = 0usize;
    let mut total = 0.0;
    let mut total_err = 0.0;
    for (seg, (map, t0, t1)) in maps.iter().enumerate() {
        let (v, e) = gk15(&mut f, map, *t0, *t1)?;
        total += v;
        total_err += e;
        heap.push(Panel {
            seg,
            t0: *t0,
            t1: *t1,
            value: v,
            err: e,
            order,
        });
        order += 1;
    }
    let mut frozen: Vec<Panel> = Vec::new();
    let tol = |v: f64| cfg.abs_tol.max(cfg.rel_tol * v.abs());
    while total_err > tol(total) && heap.len() + frozen.len() < cfg.max_subdivisions {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.t0 + worst.t1);
        if mid <= worst.t0 || mid >= worst.t1 {
            frozen.push(worst);
            continue;
        }
        let map = maps[worst.seg].0;
        let (v1, e1) = gk15(&mut f, &map, worst.t0, mid)?;
        let (v2, e2) = gk15(&mut f, &map, mid, worst.t1)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        for (t0, t1, value, err) in [(worst.t0, mid, v1, e1), (mid, worst.t1, v2, e2)] {
            heap.push(Panel {
                seg: worst.seg,
                t0,
                t1,
                value,
                err,
                order,
            });
            order += 1;
        }
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|a, b| a.seg.cmp(&b.seg).then(a.t0.total_cmp(&b.t0)));
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let err: f64 = panels.iter().map(|p| p.err).sum();
    Ok(IntegralResult {
        value,
        error_estimate: err,
        subdivisions_used: panels.len(),
        converged: err <= tol(value),
    })
}

/// `int_lo^hi f(r) dr` with `0 <= lo` and `hi` possibly infinite.
pub fn integrate_1d(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    integrate_1d_with_splits(f, lo, hi, &[], cfg)
}

/// As [`integrate_1d`], first splitting the range at the given points.
pub fn integrate_1d_with_splits(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    splits: &[f64],
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    adapt(|r| Ok(f(r)), lo, hi, splits, cfg, cfg.singularity_exponent_hint)
}

/// Iterated integral over `(0, inf)^m`, `m <= 3`. Coordinate `0` is the
/// innermost one. The integrand at level `k >= 1` is
/// `lift(k, I_{k-1}(point), point)`, where `I_{k-1}` is the integral over the
/// coordinates below `k`.
pub trait NestedIntegrand {
    fn arity(&self) -> usize;

    fn innermost(&self, point: &[f64; 3]) -> f64;

    fn lift(&self, _level: usize, inner: f64, _point: &[f64; 3]) -> f64 {
        inner
    }

    /// True when the level integrand is known to be zero at `point`, so the
    /// inner integral can be skipped.
    fn vanishes(&self, _level: usize, _point: &[f64; 3]) -> bool {
        false
    }

    /// Mandatory split points for the coordinate at `level`, given the
    /// outer coordinates in `point`.
    fn splits(&self, _level: usize, _point: &[f64; 3]) -> Vec<f64> {
        Vec::new()
    }

    fn singularity_hint(&self, _level: usize) -> Option<f64> {
        None
    }
}

#[derive(Default)]
struct NestedStats {
    inner_rel_err: f64,
    all_converged: bool,
}

fn nested_level<I: NestedIntegrand + ?Sized>(
    f: &I,
    level: usize,
    point: [f64; 3],
    cfg: &QuadratureConfig,
    stats: &mut NestedStats,
) -> Result<IntegralResult> {
    let splits = f.splits(level, &point);
    let hint = f.singularity_hint(level);
    let res = adapt(
        |s| {
            let mut p = point;
            p[level] = s;
            if level == 0 {
                Ok(f.innermost(&p))
            } else if f.vanishes(level, &p) {
                Ok(0.0)
            } else {
                let inner = nested_level(f, level - 1, p, cfg, stats)?;
                // Below abs_tol / rel_tol the inner call only meets its
                // absolute tolerance and its relative error says nothing.
                let floor = cfg.abs_tol / cfg.rel_tol;
                let scale = inner.value.abs().max(floor);
                if scale > 0.0 {
                    stats.inner_rel_err = stats.inner_rel_err.max(inner.error_estimate / scale);
                }
                Ok(f.lift(level, inner.value, &p))
            }
        },
        0.0,
        f64::INFINITY,
        &splits,
        cfg,
        hint,
    )?;
    if !res.converged {
        stats.all_converged = false;
    }
    Ok(res)
}

/// Nested adaptive quadrature; each level uses `rel_tol / m` and the inner
/// errors are combined with the outer one in quadrature.
pub fn integrate_nested<I: NestedIntegrand + ?Sized>(
    f: &I,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    let m = f.arity();
    if !(1..=3).contains(&m) {
        return domain(format!("nested quadrature supports arity 1..3, got {m}"));
    }
    let level_cfg = QuadratureConfig {
        rel_tol: cfg.rel_tol / m as f64,
        ..cfg.clone()
    };
    let mut stats = NestedStats {
        inner_rel_err: 0.0,
        all_converged: true,
    };
    let res = nested_level(f, m - 1, [0.0; 3], &level_cfg, &mut stats)?;
    let err = res.error_estimate.hypot(stats.inner_rel_err * res.value.abs());
    Ok(IntegralResult {
        value: res.value,
        error_estimate: err,
        subdivisions_used: res.subdivisions_used,
        converged: stats.all_converged && err <= cfg.abs_tol.max(cfg.rel_tol * res.value.abs()),
    })
}

struct FnIntegrand<F> {
    f: F,
    m: usize,
    splits: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64> NestedIntegrand for FnIntegrand<F> {
    fn arity(&self) -> usize {
        self.m
    }
    fn innermost(&self, point: &[f64; 3]) -> f64 {
        (self.f)(&point[..self.m])
    }
    fn splits(&self, _level: usize, _point: &[f64; 3]) -> Vec<f64> {
        self.splits.clone()
    }
}

/// Plain iterated integral of `f(s_0, ..., s_{m-1})` over `(0, inf)^m`, every
/// coordinate split at `splits`.
pub fn integrate_nested_fn(
    f: impl Fn(&[f64]) -> f64,
    m: usize,
    splits: &[f64],
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    integrate_nested(
        &FnIntegrand {
            f,
            m,
            splits: splits.to_vec(),
        },
        cfg,
    )
}

/// Importance sampler for one Monte Carlo coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SamplingMap {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Density proportional to `x^exponent` on `(0, hi)`, `exponent > -1`.
    Power {
        exponent: f64,
        hi: f64,
    },
    /// `x^inner_exponent` on `(0, knee)` carrying `inner_mass`, and
    /// `x^outer_exponent` on `(knee, inf)` with `outer_exponent < -1`.
    BrokenPower {
        inner_exponent: f64,
        outer_exponent: f64,
        knee: f64,
        inner_mass: f64,
    },
}

impl SamplingMap {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SamplingMap::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && hi > lo,
            SamplingMap::Power { exponent, hi } => exponent > -1.0 && hi.is_finite() && hi > 0.0,
            SamplingMap::BrokenPower {
                inner_exponent,
                outer_exponent,
                knee,
                inner_mass,
            } => {
                inner_exponent > -1.0
                    && outer_exponent < -1.0
                    && knee.is_finite()
                    && knee > 0.0
                    && inner_mass > 0.0
                    && inner_mass < 1.0
            }
        };
        if ok {
            Ok(())
        } else {
            domain(format!("degenerate sampling map {self:?}"))
        }
    }

    /// Draws a point from uniforms in `(0, 1)`; returns it with its density.
    fn sample(&self, u: f64, v: f64) -> (f64, f64) {
        match *self {
            SamplingMap::Uniform { lo, hi } => (lo + (hi - lo) * u, 1.0 / (hi - lo)),
            SamplingMap::Power { exponent, hi } => power_draw(exponent, hi, u),
            SamplingMap::BrokenPower {
                inner_exponent,
                outer_exponent,
                knee,
                inner_mass,
            } => {
                if v < inner_mass {
                    let (x, d) = power_draw(inner_exponent, knee, u);
                    (x, inner_mass * d)
                } else {
                    let k = outer_exponent + 1.0;
                    let x = knee * u.powf(1.0 / k);
                    let d = -k * x.powf(outer_exponent) / knee.powf(k);
                    (x, (1.0 - inner_mass) * d)
                }
            }
        }
    }
}

fn power_draw(exponent: f64, hi: f64, u: f64) -> (f64, f64) {
    let k = exponent + 1.0;
    let x = hi * u.powf(1.0 / k);
    (x, k * x.powf(exponent) / hi.powf(k))
}

fn unit_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Seeded Monte Carlo estimate of `int f` over the product of the map
/// supports. Each coordinate draws from its own ChaCha stream.
pub fn integrate_mc(
    f: impl Fn(&[f64]) -> f64,
    maps: &[SamplingMap],
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    cfg.validate()?;
    if maps.is_empty() {
        return domain("at least one sampling map is required");
    }
    if cfg.mc_samples < 2 {
        return domain("mc_samples must be at least 2");
    }
    for m in maps {
        m.validate()?;
    }
    let mut rngs: Vec<ChaCha8Rng> = (0..maps.len())
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.mc_seed);
            rng.set_stream(i as u64);
            rng
        })
        .collect();
    let mut x = vec![0.0; maps.len()];
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..cfg.mc_samples {
        let mut density = 1.0;
        for (i, map) in maps.iter().enumerate() {
            let u = unit_open(&mut rngs[i]);
            let v = unit_open(&mut rngs[i]);
            let (xi, di) = map.sample(u, v);
            x[i] = xi;
            density *= di;
        }
        let fx = f(&x);
        if fx.is_nan() || fx.is_infinite() {
            return Err(Error::Evaluation {
                abscissa: x[0],
                value: fx,
            });
        }
        let w = if fx == 0.0 { 0.0 } else { fx / density };
        let delta = w - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (w - mean);
    }
    let n = cfg.mc_samples as f64;
    let se = (m2 / (n - 1.0) / n).sqrt();
    Ok(IntegralResult {
        value: mean,
        error_estimate: se,
        subdivisions_used: 0,
        converged: se <= cfg.rel_tol * mean.abs(),
    })
}
