//! Exact algebra for radial functions written as piecewise sums of
//! `c * r^a * (log r)^k` terms, `k in {0, 1}`.
//!
//! A [`PiecewisePowerLog`] is defined on consecutive half-open intervals
//! `[0, b_1), [b_1, b_2), ...`. When the last breakpoint is finite the
//! function vanishes beyond it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Exponents closer than this are treated as equal, both when merging terms
/// and when switching to the logarithmic antiderivative.
pub const POWER_COLLISION_TOL: f64 = 1e-12;

const U_MIN: f64 = -745.0;
const U_MAX: f64 = 709.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLogTerm {
    pub coeff: f64,
    pub power: f64,
    pub log_order: u8,
}

impl PowerLogTerm {
    pub fn new(coeff: f64, power: f64, log_order: u8) -> Result<Self> {
        if !coeff.is_finite() || !power.is_finite() {
            return domain(format!("term must be finite, got {coeff}*r^{power}"));
        }
        if log_order > 1 {
            return Err(Error::UnsupportedShape(format!(
                "log order {log_order} exceeds 1"
            )));
        }
        Ok(Self {
            coeff,
            power,
            log_order,
        })
    }

    /// `coeff * r^power`.
    pub fn pow(coeff: f64, power: f64) -> Self {
        Self {
            coeff,
            power,
            log_order: 0,
        }
    }

    /// `coeff * r^power * log r`.
    pub fn log(coeff: f64, power: f64) -> Self {
        Self {
            coeff,
            power,
            log_order: 1,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let base = self.coeff * r.powf(self.power);
        if self.log_order == 1 {
            base * r.ln()
        } else {
            base
        }
    }

    fn scaled(self, c: f64) -> Self {
        Self {
            coeff: self.coeff * c,
            ..self
        }
    }

    fn describe(&self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for PowerLogTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*r^{}", self.coeff, self.power)?;
        if self.log_order == 1 {
            write!(f, "*log(r)^1")?;
        }
        Ok(())
    }
}

/// Sorts, merges colliding exponents and drops vanishing terms.
pub(crate) fn normalize_terms(terms: &[PowerLogTerm]) -> Vec<PowerLogTerm> {
    let mut sorted: Vec<PowerLogTerm> = terms.to_vec();
    sorted.sort_by(|a, b| a.log_order.cmp(&b.log_order).then(a.power.total_cmp(&b.power)));
    let mut out: Vec<(PowerLogTerm, f64)> = Vec::new();
    for t in sorted {
        match out.last_mut() {
            Some((last, mag))
                if last.log_order == t.log_order && (last.power - t.power).abs() <= POWER_COLLISION_TOL =>
            {
                last.coeff += t.coeff;
                *mag += t.coeff.abs();
            }
            _ => out.push((t, t.coeff.abs())),
        }
    }
    let mut merged: Vec<PowerLogTerm> = out
        .into_iter()
        .filter(|(t, mag)| t.coeff != 0.0 && t.coeff.abs() > 4.0 * f64::EPSILON * mag)
        .map(|(t, _)| t)
        .collect();
    merged.sort_by(|a, b| a.power.total_cmp(&b.power).then(a.log_order.cmp(&b.log_order)));
    merged
}

pub(crate) fn eval_terms(terms: &[PowerLogTerm], r: f64) -> f64 {
    terms.iter().map(|t| t.eval(r)).sum()
}

fn eval_terms_u(terms: &[PowerLogTerm], u: f64) -> f64 {
    terms
        .iter()
        .map(|t| {
            let base = t.coeff * (t.power * u).exp();
            if t.log_order == 1 {
                base * u
            } else {
                base
            }
        })
        .sum()
}

fn derivative_u(terms: &[PowerLogTerm], u: f64) -> f64 {
    terms
        .iter()
        .map(|t| {
            let e = t.coeff * (t.power * u).exp();
            if t.log_order == 1 {
                e * (t.power * u + 1.0)
            } else {
                e * t.power
            }
        })
        .sum()
}

fn dominant_at_zero(terms: &[PowerLogTerm]) -> Option<PowerLogTerm> {
    terms
        .iter()
        .copied()
        .min_by(|a, b| a.power.total_cmp(&b.power).then(b.log_order.cmp(&a.log_order)))
}

fn dominant_at_infinity(terms: &[PowerLogTerm]) -> Option<PowerLogTerm> {
    terms
        .iter()
        .copied()
        .max_by(|a, b| a.power.total_cmp(&b.power).then(a.log_order.cmp(&b.log_order)))
}

/// Limit of the term sum as `r -> 0+`.
pub(crate) fn limit_at_zero(terms: &[PowerLogTerm]) -> f64 {
    let Some(d) = dominant_at_zero(terms) else {
        return 0.0;
    };
    if d.power > 0.0 {
        0.0
    } else if d.power == 0.0 && d.log_order == 0 {
        d.coeff
    } else {
        let sign = if d.log_order == 1 { -1.0 } else { 1.0 };
        sign * d.coeff.signum() * f64::INFINITY
    }
}

/// Limit of the term sum as `r -> inf`.
pub(crate) fn limit_at_infinity(terms: &[PowerLogTerm]) -> f64 {
    let Some(d) = dominant_at_infinity(terms) else {
        return 0.0;
    };
    if d.power < 0.0 {
        0.0
    } else if d.power == 0.0 && d.log_order == 0 {
        d.coeff
    } else {
        d.coeff.signum() * f64::INFINITY
    }
}

fn value_at(terms: &[PowerLogTerm], r: f64) -> f64 {
    if r == 0.0 {
        limit_at_zero(terms)
    } else if r.is_infinite() {
        limit_at_infinity(terms)
    } else {
        eval_terms(terms, r)
    }
}

/// Definite integral of `t(r) * r^extra` over `(a, b)`, `0 <= a < b <= inf`.
fn term_integral(t: &PowerLogTerm, extra: f64, a: f64, b: f64) -> Result<f64> {
    let x = t.power + extra + 1.0;
    let collide = x.abs() < POWER_COLLISION_TOL;
    if a == 0.0 && (collide || x < 0.0) {
        return Err(Error::Divergence(format!(
            "term {} with weight r^{extra} is not integrable at 0",
            t.describe()
        )));
    }
    if b.is_infinite() && (collide || x > 0.0) {
        return Err(Error::Divergence(format!(
            "term {} with weight r^{extra} is not integrable at infinity",
            t.describe()
        )));
    }
    let v = match (t.log_order, collide) {
        (0, true) => (b / a).ln(),
        (0, false) => {
            if a == 0.0 {
                b.powf(x) / x
            } else if b.is_infinite() {
                -a.powf(x) / x
            } else {
                let t = x * (b / a).ln();
                if t.abs() < 1.0 {
                    a.powf(x) * t.exp_m1() / x
                } else {
                    (b.powf(x) - a.powf(x)) / x
                }
            }
        }
        (_, true) => {
            let (la, lb) = (a.ln(), b.ln());
            0.5 * (lb - la) * (lb + la)
        }
        (_, false) => {
            let anti = |r: f64| -> f64 {
                if r == 0.0 || r.is_infinite() {
                    0.0
                } else {
                    r.powf(x) * (r.ln() / x - 1.0 / (x * x))
                }
            };
            anti(b) - anti(a)
        }
    };
    Ok(t.coeff * v)
}

/// Indefinite integral of `sum(terms) * r^extra` as power-log terms, plus the
/// constant that makes it vanish at `r = 0` when `from_zero` is set (and the
/// terms are integrable there). Fails if a `(log r)^2` term would appear.
pub(crate) fn antiderivative_terms(terms: &[PowerLogTerm], extra: f64) -> Result<Vec<PowerLogTerm>> {
    let mut out = Vec::new();
    for t in terms {
        let x = t.power + extra + 1.0;
        let collide = x.abs() < POWER_COLLISION_TOL;
        match (t.log_order, collide) {
            (0, false) => out.push(PowerLogTerm::pow(t.coeff / x, x)),
            (0, true) => out.push(PowerLogTerm::log(t.coeff, 0.0)),
            (_, false) => {
                out.push(PowerLogTerm::log(t.coeff / x, x));
                out.push(PowerLogTerm::pow(-t.coeff / (x * x), x));
            }
            (_, true) => {
                return Err(Error::UnsupportedShape(format!(
                    "antiderivative of {} with weight r^{extra} needs (log r)^2",
                    t.describe()
                )))
            }
        }
    }
    Ok(normalize_terms(&out))
}

/// A radius interval `(lo, hi)`; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusInterval {
    pub lo: f64,
    pub hi: f64,
}

impl RadiusInterval {
    pub fn contains(&self, other: &RadiusInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `int_lo^hi r^{s-1} dr` for `s > 0`; infinite for unbounded intervals.
    pub fn power_measure(&self, s: f64) -> f64 {
        if self.hi.is_infinite() {
            return f64::INFINITY;
        }
        let t = if self.lo == 0.0 {
            f64::INFINITY
        } else {
            s * (self.hi / self.lo).ln()
        };
        // expm1 only where hi^s - lo^s cancels; elsewhere lo^s may underflow.
        if t.abs() < 1.0 {
            self.lo.powf(s) * t.exp_m1() / s
        } else {
            (self.hi.powf(s) - self.lo.powf(s)) / s
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePowerLog {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<PowerLogTerm>>,
}

impl PiecewisePowerLog {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<PowerLogTerm>>) -> Result<Self> {
        if breakpoints.is_empty() {
            return domain("at least one breakpoint is required");
        }
        if breakpoints.len() != pieces.len() {
            return domain(format!(
                "{} breakpoints but {} pieces",
                breakpoints.len(),
                pieces.len()
            ));
        }
        let mut prev = 0.0;
        for (i, &b) in breakpoints.iter().enumerate() {
            if b.is_nan() || b <= prev {
                return domain(format!(
                    "breakpoints must be positive and strictly increasing at {b}"
                ));
            }
            if b.is_infinite() && i + 1 != breakpoints.len() {
                return domain("only the last breakpoint may be infinite");
            }
            prev = b;
        }
        for piece in &pieces {
            for t in piece {
                PowerLogTerm::new(t.coeff, t.power, t.log_order)?;
            }
        }
        let pieces = pieces.iter().map(|p| normalize_terms(p)).collect();
        Ok(Self { breakpoints, pieces })
    }

    pub fn zero() -> Self {
        Self {
            breakpoints: vec![f64::INFINITY],
            pieces: vec![Vec::new()],
        }
    }

    /// `sum(terms)` on `(0, radius)` and zero beyond.
    pub fn truncated(terms: Vec<PowerLogTerm>, radius: f64) -> Result<Self> {
        Self::new(vec![radius], vec![terms])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Vec<PowerLogTerm>] {
        &self.pieces
    }

    pub fn piece_bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { 0.0 } else { self.breakpoints[i - 1] };
        (lo, self.breakpoints[i])
    }

    /// Last breakpoint; the function vanishes beyond it.
    pub fn support_end(&self) -> f64 {
        *self.breakpoints.last().expect("non-empty")
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(Vec::is_empty)
    }

    pub fn max_terms_per_piece(&self) -> usize {
        self.pieces.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn piece_index(&self, r: f64) -> Option<usize> {
        let i = self.breakpoints.partition_point(|&b| b <= r);
        (i < self.pieces.len()).then_some(i)
    }

    /// Value at `r > 0`; breakpoint ties resolve to the right-hand piece.
    pub fn evaluate(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r <= 0.0 {
            return domain(format!("evaluate needs r > 0, got {r}"));
        }
        Ok(self.value(r))
    }

    /// Unchecked evaluation (zero outside the support).
    pub fn value(&self, r: f64) -> f64 {
        self.piece_index(r)
            .map_or(0.0, |i| eval_terms(&self.pieces[i], r))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| normalize_terms(&p.iter().map(|t| t.scaled(c)).collect::<Vec<_>>()))
            .collect();
        Self {
            breakpoints: self.breakpoints.clone(),
            pieces,
        }
    }

    /// `r -> f(c r)` for `c > 0`.
    pub fn dilated(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return domain(format!("dilation factor must be positive, got {c}"));
        }
        let lc = c.ln();
        let breakpoints = self.breakpoints.iter().map(|b| b / c).collect();
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let mut out = Vec::new();
                for t in p {
                    let k = t.coeff * c.powf(t.power);
                    out.push(PowerLogTerm { coeff: k, ..*t });
                    if t.log_order == 1 {
                        out.push(PowerLogTerm::pow(k * lc, t.power));
                    }
                }
                normalize_terms(&out)
            })
            .collect();
        Ok(Self { breakpoints, pieces })
    }

    /// Re-expresses the function on the union of its breakpoints and `extra`.
    pub fn refined(&self, extra: &[f64]) -> Self {
        let mut bps: Vec<f64> = self.breakpoints.clone();
        bps.extend(extra.iter().copied().filter(|b| *b > 0.0 && !b.is_nan()));
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let pieces = bps
            .iter()
            .enumerate()
            .map(|(i, &hi)| {
                let lo = if i == 0 { 0.0 } else { bps[i - 1] };
                let probe = if hi.is_infinite() {
                    lo.max(0.0)
                } else {
                    0.5 * (lo + hi)
                };
                let idx = if hi.is_infinite() {
                    self.piece_index(probe.max(f64::MIN_POSITIVE))
                        .filter(|_| self.support_end().is_infinite())
                } else {
                    self.piece_index(probe)
                };
                idx.map_or_else(Vec::new, |j| self.pieces[j].clone())
            })
            .collect();
        Self {
            breakpoints: bps,
            pieces,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let a = self.refined(&other.breakpoints);
        let b = other.refined(&self.breakpoints);
        debug_assert_eq!(a.breakpoints, b.breakpoints);
        let pieces = a
            .pieces
            .iter()
            .zip(&b.pieces)
            .map(|(x, y)| {
                let mut all = x.clone();
                all.extend_from_slice(y);
                normalize_terms(&all)
            })
            .collect();
        Self {
            breakpoints: a.breakpoints,
            pieces,
        }
    }

    /// `int_lo^hi f(r) r^extra_power dr` evaluated term by term in closed form.
    pub fn integrate_weighted(&self, lo: f64, hi: f64, extra_power: f64) -> Result<f64> {
        if lo.is_nan() || hi.is_nan() || lo < 0.0 || lo.is_infinite() {
            return domain(format!("invalid integration range ({lo}, {hi})"));
        }
        if hi <= lo {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (i, piece) in self.pieces.iter().enumerate() {
            let (plo, phi) = self.piece_bounds(i);
            let a = lo.max(plo);
            let b = hi.min(phi);
            if b <= a {
                continue;
            }
            for t in piece {
                total += term_integral(t, extra_power, a, b)?;
            }
        }
        Ok(total)
    }

    /// `{r > 0 : f(r) > level}` for pieces with at most two terms.
    pub fn superlevel_set(&self, level: f64) -> Result<Vec<RadiusInterval>> {
        self.superlevel_impl(level, true)
    }

    /// As [`Self::superlevel_set`], without the two-term restriction; interior
    /// extrema are then located numerically.
    pub fn superlevel_set_numeric(&self, level: f64) -> Result<Vec<RadiusInterval>> {
        self.superlevel_impl(level, false)
    }

    fn superlevel_impl(&self, level: f64, strict: bool) -> Result<Vec<RadiusInterval>> {
        if level.is_nan() {
            return domain("level must be a number");
        }
        let mut out: Vec<RadiusInterval> = Vec::new();
        let mut push = |iv: RadiusInterval| {
            if iv.hi <= iv.lo {
                return;
            }
            match out.last_mut() {
                Some(last) if last.hi >= iv.lo => last.hi = last.hi.max(iv.hi),
                _ => out.push(iv),
            }
        };
        for (i, piece) in self.pieces.iter().enumerate() {
            let (plo, phi) = self.piece_bounds(i);
            if strict && piece.len() > 2 {
                return Err(Error::UnsupportedShape(format!(
                    "piece [{plo},{phi}) has {} terms; at most two are supported",
                    piece.len()
                )));
            }
            for seg in monotone_segments(piece, plo, phi) {
                if let Some(iv) = segment_superlevel(piece, seg, level) {
                    push(iv);
                }
            }
        }
        // Beyond a finite support the function is zero.
        if level < 0.0 && self.support_end().is_finite() {
            push(RadiusInterval {
                lo: self.support_end(),
                hi: f64::INFINITY,
            });
        }
        Ok(out)
    }

    /// One-sided values at every breakpoint, limits at `0` and infinity, and
    /// values at interior extrema. Candidate levels for distribution
    /// functions change shape only at these values.
    pub fn critical_values(&self) -> Vec<f64> {
        let mut vals = Vec::new();
        for (i, piece) in self.pieces.iter().enumerate() {
            let (plo, phi) = self.piece_bounds(i);
            vals.push(value_at(piece, plo));
            vals.push(value_at(piece, phi));
            for seg in monotone_segments(piece, plo, phi) {
                if seg.0 > plo {
                    vals.push(value_at(piece, seg.0));
                }
            }
        }
        if self.support_end().is_finite() {
            vals.push(0.0);
        }
        vals
    }

    /// Dominant term of the first piece as `r -> 0+`.
    pub fn origin_asymptote(&self) -> Option<PowerLogTerm> {
        dominant_at_zero(&self.pieces[0])
    }

    /// Dominant term of the last piece as `r -> inf`, if the support is
    /// unbounded.
    pub fn tail_asymptote(&self) -> Option<PowerLogTerm> {
        if self.support_end().is_infinite() {
            dominant_at_infinity(self.pieces.last().expect("non-empty"))
        } else {
            None
        }
    }

    pub fn limit_at_zero(&self) -> f64 {
        limit_at_zero(&self.pieces[0])
    }
}

type Segment = (f64, f64);

/// Splits `[lo, hi)` into sub-intervals on which the term sum is monotone.
fn monotone_segments(terms: &[PowerLogTerm], lo: f64, hi: f64) -> Vec<Segment> {
    let ulo = if lo == 0.0 { f64::NEG_INFINITY } else { lo.ln() };
    let uhi = if hi.is_infinite() { f64::INFINITY } else { hi.ln() };
    let mut cuts: Vec<f64> = critical_points(terms, ulo, uhi)
        .into_iter()
        .map(f64::exp)
        .filter(|&r| r > lo && r < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Zeros of the log-scale derivative inside `(ulo, uhi)`.
fn critical_points(terms: &[PowerLogTerm], ulo: f64, uhi: f64) -> Vec<f64> {
    let inside = |u: f64| u > ulo && u < uhi && u.is_finite();
    let all_plain = terms.iter().all(|t| t.log_order == 0);
    match terms {
        [] => Vec::new(),
        [t] if t.log_order == 0 => Vec::new(),
        [t] => {
            if t.power == 0.0 {
                Vec::new()
            } else {
                let u = -1.0 / t.power;
                if inside(u) {
                    vec![u]
                } else {
                    Vec::new()
                }
            }
        }
        [t1, t2] if all_plain => {
            let (k1, k2) = (t1.coeff * t1.power, t2.coeff * t2.power);
            if k1 == 0.0 || k2 == 0.0 {
                return Vec::new();
            }
            let ratio = -k2 / k1;
            if ratio <= 0.0 {
                return Vec::new();
            }
            let u = ratio.ln() / (t1.power - t2.power);
            if inside(u) {
                vec![u]
            } else {
                Vec::new()
            }
        }
        _ => numeric_critical_points(terms, ulo, uhi),
    }
}

fn numeric_critical_points(terms: &[PowerLogTerm], ulo: f64, uhi: f64) -> Vec<f64> {
    // Balance points of term pairs bound where the derivative can change sign.
    let mut spread: f64 = 0.0;
    for (i, a) in terms.iter().enumerate() {
        for b in &terms[i + 1..] {
            let dp = (a.power - b.power).abs();
            if dp > 0.0 && a.coeff != 0.0 && b.coeff != 0.0 {
                spread = spread.max(((a.coeff / b.coeff).abs().ln()).abs() / dp);
            }
        }
    }
    let reach = (60.0 + 4.0 * spread).min(700.0);
    let a = if ulo.is_finite() { ulo } else { -reach };
    let b = if uhi.is_finite() { uhi } else { reach };
    if b <= a {
        return Vec::new();
    }
    const N: usize = 4000;
    let mut roots = Vec::new();
    let mut u_prev = a;
    let mut d_prev = derivative_u(terms, a);
    for k in 1..=N {
        let u = a + (b - a) * (k as f64) / (N as f64);
        let d = derivative_u(terms, u);
        if d_prev == 0.0 && u_prev > ulo && u_prev < uhi {
            roots.push(u_prev);
        } else if d_prev * d < 0.0 {
            roots.push(bisect(|x| derivative_u(terms, x), u_prev, u));
        }
        u_prev = u;
        d_prev = d;
    }
    roots.retain(|&u| u > ulo && u < uhi);
    roots
}

/// Bisection to machine resolution for a sign change of `g` on `[a, b]`.
fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ga = g(a);
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Portion of a monotone segment where the term sum exceeds `level`.
fn segment_superlevel(terms: &[PowerLogTerm], seg: Segment, level: f64) -> Option<RadiusInterval> {
    let (ra, rb) = seg;
    let va = value_at(terms, ra);
    let vb = value_at(terms, rb);
    let above_a = va > level;
    let above_b = vb > level;
    match (above_a, above_b) {
        (true, true) => Some(RadiusInterval { lo: ra, hi: rb }),
        (false, false) => {
            // Endpoint values of a monotone segment bound it; a flat segment
            // exactly at the level is excluded by the strict inequality.
            None
        }
        _ => {
            let root = crossing(terms, ra, rb, level);
            if above_a {
                Some(RadiusInterval { lo: ra, hi: root })
            } else {
                Some(RadiusInterval { lo: root, hi: rb })
            }
        }
    }
}

/// Radius in `(ra, rb)` where a monotone term sum crosses `level`.
fn crossing(terms: &[PowerLogTerm], ra: f64, rb: f64, level: f64) -> f64 {
    if let [t] = terms {
        if t.log_order == 0 && t.power != 0.0 && level / t.coeff > 0.0 {
            let r = (level / t.coeff).powf(1.0 / t.power);
            if r > ra && r < rb {
                return r;
            }
        }
    }
    let g = |u: f64| eval_terms_u(terms, u) - level;
    let side_a = value_at(terms, ra) > level;
    let mut ua = if ra == 0.0 { f64::NEG_INFINITY } else { ra.ln() };
    let mut ub = if rb.is_infinite() { f64::INFINITY } else { rb.ln() };
    if ua.is_infinite() {
        let mut step = 1.0;
        let mut u = if ub.is_finite() { ub.min(0.0) - 1.0 } else { -1.0 };
        while u > U_MIN && (g(u) > 0.0) != side_a {
            u -= step;
            step *= 2.0;
        }
        ua = u.max(U_MIN);
        if (g(ua) > 0.0) != side_a {
            // The crossing lies below the smallest representable radius.
            return ra;
        }
    }
    if ub.is_infinite() {
        let mut step = 1.0;
        let mut u = ua.max(0.0) + 1.0;
        while u < U_MAX && (g(u) > 0.0) == side_a {
            u += step;
            step *= 2.0;
        }
        ub = u.min(U_MAX);
        if (g(ub) > 0.0) == side_a {
            return rb;
        }
    }
    bisect(g, ua, ub).exp()
}

impl fmt::Display for PiecewisePowerLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, piece) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let (lo, hi) = self.piece_bounds(i);
            write!(f, "piece [{},{}): ", fmt_bound(lo), fmt_bound(hi))?;
            if piece.is_empty() {
                write!(f, "0")?;
            }
            for (j, t) in piece.iter().enumerate() {
                if j == 0 {
                    write!(f, "{t}")?;
                } else if t.coeff < 0.0 {
                    write!(
                        f,
                        " - {}",
                        PowerLogTerm {
                            coeff: -t.coeff,
                            ..*t
                        }
                    )?;
                } else {
                    write!(f, " + {t}")?;
                }
            }
        }
        Ok(())
    }
}

fn fmt_bound(x: f64) -> String {
    if x.is_infinite() {
        "inf".to_string()
    } else {
        format!("{x}")
    }
}

impl FromStr for PiecewisePowerLog {
    type Err = Error;

    /// Parses `piece [lo,hi): c*r^a*log(r)^k + ...` pieces separated by `;`
    /// or newlines. The shorthand `terms on (lo,hi]` is also accepted.
    /// Gaps between pieces are zero.
    fn from_str(s: &str) -> Result<Self> {
        let mut parsed: Vec<(f64, f64, Vec<PowerLogTerm>)> = Vec::new();
        for raw in s.split([';', '\n']) {
            let seg = raw.trim();
            if seg.is_empty() {
                continue;
            }
            let (lo, hi, expr) = if let Some(rest) = seg.strip_prefix("piece") {
                let (range, expr) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("missing ':' in '{seg}'")))?;
                let (lo, hi) = parse_range(range)?;
                (lo, hi, expr)
            } else if let Some((expr, range)) = seg.rsplit_once(" on ") {
                let (lo, hi) = parse_range(range)?;
                (lo, hi, expr)
            } else {
                return Err(Error::Parse(format!(
                    "expected 'piece [lo,hi): ...' or '... on (lo,hi]', got '{seg}'"
                )));
            };
            let terms = parse_expr(expr)?;
            parsed.push((lo, hi, terms));
        }
        if parsed.is_empty() {
            return Err(Error::Parse("no pieces given".into()));
        }
        let mut breakpoints = Vec::new();
        let mut pieces = Vec::new();
        let mut cursor = 0.0;
        for (lo, hi, terms) in parsed {
            if lo < cursor {
                return Err(Error::Parse(format!(
                    "piece starting at {lo} overlaps the previous piece ending at {cursor}"
                )));
            }
            if lo > cursor {
                breakpoints.push(lo);
                pieces.push(Vec::new());
            }
            breakpoints.push(hi);
            pieces.push(terms);
            cursor = hi;
        }
        PiecewisePowerLog::new(breakpoints, pieces).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let t = s.trim();
    let inner = t
        .strip_prefix(['[', '('])
        .and_then(|x| x.strip_suffix([']', ')']))
        .ok_or_else(|| Error::Parse(format!("malformed interval '{t}'")))?;
    let (a, b) = inner
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("malformed interval '{t}'")))?;
    let lo = parse_number(a.trim())?;
    let hi = parse_number(b.trim())?;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::Parse(format!("interval '{t}' must satisfy 0 <= lo < hi")));
    }
    Ok((lo, hi))
}

fn parse_number(s: &str) -> Result<f64> {
    match s {
        "inf" | "+inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        _ => s
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("invalid number '{s}'"))),
    }
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, lit: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let mut i = self.pos;
        if i < self.s.len() && (self.s[i] == b'+' || self.s[i] == b'-') {
            i += 1;
        }
        while i < self.s.len() && (self.s[i].is_ascii_digit() || self.s[i] == b'.') {
            i += 1;
        }
        if i < self.s.len() && (self.s[i] == b'e' || self.s[i] == b'E') {
            let mut j = i + 1;
            if j < self.s.len() && (self.s[j] == b'+' || self.s[j] == b'-') {
                j += 1;
            }
            if j < self.s.len() && self.s[j].is_ascii_digit() {
                while j < self.s.len() && self.s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&self.s[start..i]).unwrap_or("");
        let v = text
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("expected a number at byte {start}")))?;
        self.pos = i;
        Ok(v)
    }

    /// Exponent after `^`: a signed number, optionally parenthesised.
    fn exponent(&mut self) -> Result<f64> {
        if self.eat("(") {
            let v = self.number()?;
            if !self.eat(")") {
                return Err(Error::Parse("unclosed exponent parenthesis".into()));
            }
            Ok(v)
        } else {
            self.number()
        }
    }
}

fn parse_expr(s: &str) -> Result<Vec<PowerLogTerm>> {
    let mut c = Cursor {
        s: s.as_bytes(),
        pos: 0,
    };
    let mut terms = Vec::new();
    let mut sign = 1.0;
    if c.eat("-") {
        sign = -1.0;
    } else {
        c.eat("+");
    }
    loop {
        let mut coeff = sign;
        let mut power = 0.0;
        let mut log_order = 0u8;
        loop {
            match c.peek() {
                Some(b'r') => {
                    c.pos += 1;
                    power += if c.eat("^") { c.exponent()? } else { 1.0 };
                }
                Some(b'l') => {
                    if !(c.eat("log(r)") || c.eat("ln(r)")) {
                        return Err(Error::Parse(format!("unexpected token at byte {}", c.pos)));
                    }
                    let k = if c.eat("^") { c.exponent()? } else { 1.0 };
                    if k != 0.0 && k != 1.0 {
                        return Err(Error::Parse(format!("log order {k} is not supported")));
                    }
                    log_order += k as u8;
                }
                Some(ch) if ch.is_ascii_digit() || ch == b'.' => coeff *= c.number()?,
                _ => return Err(Error::Parse(format!("expected a factor at byte {}", c.pos))),
            }
            if !c.eat("*") {
                break;
            }
        }
        if log_order > 1 {
            return Err(Error::Parse("log order above 1 is not supported".into()));
        }
        terms.push(PowerLogTerm::new(coeff, power, log_order).map_err(|e| Error::Parse(e.to_string()))?);
        match c.peek() {
            None => break,
            Some(b'+') => {
                c.pos += 1;
                sign = 1.0;
            }
            Some(b'-') => {
                c.pos += 1;
                sign = -1.0;
            }
            Some(_) => return Err(Error::Parse(format!("unexpected input at byte {}", c.pos))),
        }
    }
    Ok(normalize_terms(&terms))
}
