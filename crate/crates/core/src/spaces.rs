//! Power-weighted Lebesgue space parameters, the unit-sphere area and the
//! hypothesis checkers for the sharp weak-type theorems.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Absolute slack used for every equality (and non-strict inequality)
/// hypothesis.
pub const HYPOTHESIS_TOL: f64 = 1e-12;

/// Surface area of the unit sphere in `R^n`, `2 pi^{n/2} / Gamma(n/2)`.
///
/// `Gamma(n/2)` is evaluated by exact half-integer recursion; for odd `n`
/// the factor `sqrt(pi)` cancels analytically.
pub fn unit_sphere_area(n: u32) -> Result<f64> {
    if n == 0 {
        return domain("unit_sphere_area requires n >= 1");
    }
    let k = (n / 2) as i32;
    if n.is_multiple_of(2) {
        // 2 pi^k / (k-1)!
        let fact: f64 = (1..k).map(f64::from).product();
        Ok(2.0 * PI.powi(k) / fact)
    } else {
        // Gamma(k + 1/2) = sqrt(pi) * prod_{j=1..k} (j - 1/2)
        let half_fact: f64 = (1..=k).map(|j| f64::from(j) - 0.5).product();
        Ok(2.0 * PI.powi(k) / half_fact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    Strong,
    Weak,
}

/// A power-weighted space `L^p(R^n, |x|^w)` or its weak counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub n: u32,
    pub exponent: f64,
    pub weight_exp: f64,
    pub kind: SpaceKind,
}

impl SpaceSpec {
    pub fn new(n: u32, exponent: f64, weight_exp: f64, kind: SpaceKind) -> Result<Self> {
        if n == 0 {
            return domain("dimension must be at least 1");
        }
        if !(exponent.is_finite() && weight_exp.is_finite()) {
            return domain("space parameters must be finite");
        }
        if exponent <= 0.0 {
            return domain(format!("exponent must be positive, got {exponent}"));
        }
        if kind == SpaceKind::Weak {
            if exponent < 1.0 {
                return domain(format!("weak target needs exponent >= 1, got {exponent}"));
            }
            if weight_exp + f64::from(n) <= 0.0 {
                return domain(format!(
                    "weak target needs n + weight > 0, got n = {n}, weight = {weight_exp}"
                ));
            }
        }
        Ok(Self {
            n,
            exponent,
            weight_exp,
            kind,
        })
    }

    pub fn strong(n: u32, p: f64, beta: f64) -> Result<Self> {
        Self::new(n, p, beta, SpaceKind::Strong)
    }

    pub fn weak(n: u32, q: f64, gamma: f64) -> Result<Self> {
        Self::new(n, q, gamma, SpaceKind::Weak)
    }
}

/// A Hoelder pair `(p, p')` with `1/p + 1/p' = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateExponent {
    pub p: f64,
    pub p_prime: f64,
}

impl ConjugateExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return domain(format!("conjugate exponent needs 1 < p < inf, got {p}"));
        }
        Ok(Self {
            p,
            p_prime: p / (p - 1.0),
        })
    }
}

/// One evaluated hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
    pub overall: bool,
}

impl HypothesisReport {
    fn from_checks(checks: Vec<HypothesisCheck>) -> Self {
        let overall = checks.iter().all(|c| c.pass);
        Self { checks, overall }
    }

    /// Names of the failed checks, in evaluation order.
    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Copy)]
enum Rel {
    Lt,
    Gt,
    Ge,
    Eq,
}

fn check(name: &str, lhs: f64, rel: Rel, rhs: f64) -> HypothesisCheck {
    let (symbol, pass) = match rel {
        Rel::Lt => ("<", lhs < rhs),
        Rel::Gt => (">", lhs > rhs),
        Rel::Ge => (">=", lhs >= rhs - HYPOTHESIS_TOL),
        Rel::Eq => ("=", (lhs - rhs).abs() <= HYPOTHESIS_TOL),
    };
    HypothesisCheck {
        name: name.to_string(),
        relation: symbol.to_string(),
        lhs,
        rhs,
        pass: pass && !lhs.is_nan() && !rhs.is_nan(),
    }
}

/// Evaluates every hypothesis of the sharp `L^p(|x|^beta) -> L^{q,inf}(|x|^gamma)`
/// bound for the HLP operator. Failures are reported, never thrown.
pub fn check_thm21_hypotheses(p: f64, q: f64, beta: f64, gamma: f64, n: u32) -> HypothesisReport {
    let nf = f64::from(n);
    let pm1 = p - 1.0;
    let b = beta / pm1;
    let c = (beta + nf) / pm1;
    let checks = vec![
        check("p > 1", p, Rel::Gt, 1.0),
        check("p < inf", p, Rel::Lt, f64::INFINITY),
        check("q >= 1", q, Rel::Ge, 1.0),
        check("q < inf", q, Rel::Lt, f64::INFINITY),
        check("beta > 0", beta, Rel::Gt, 0.0),
        check("beta < n(p-1)", beta, Rel::Lt, nf * pm1),
        check(
            "(gamma+n)/((beta/(p-1)) q) >= 2",
            (gamma + nf) / (b * q),
            Rel::Ge,
            2.0,
        ),
        check(
            "(gamma+n)/((n-(beta+n)/(p-1)) q) >= 2",
            (gamma + nf) / ((nf - c) * q),
            Rel::Ge,
            2.0,
        ),
        check("(beta+n)/(p-1) - n < 0", c - nf, Rel::Lt, 0.0),
        check("(gamma+n)/q = n/2", (gamma + nf) / q, Rel::Eq, nf / 2.0),
        check("(beta+n)/p = n/2", (beta + nf) / p, Rel::Eq, nf / 2.0),
    ];
    HypothesisReport::from_checks(checks)
}

/// Evaluates the hypotheses of the m-linear weak bound.
pub fn check_thm31_hypotheses(
    ps: &[f64],
    betas: &[f64],
    q: f64,
    gamma: f64,
    n: u32,
) -> Result<HypothesisReport> {
    if ps.is_empty() {
        return domain("m must be at least 1");
    }
    if ps.len() != betas.len() {
        return domain(format!(
            "exponent and weight vectors differ in length ({} vs {})",
            ps.len(),
            betas.len()
        ));
    }
    let nf = f64::from(n);
    let mut checks = Vec::new();
    for (i, (&p, &beta)) in ps.iter().zip(betas).enumerate() {
        let k = i + 1;
        checks.push(check(&format!("p{k} > 1"), p, Rel::Gt, 1.0));
        checks.push(check(&format!("p{k} < inf"), p, Rel::Lt, f64::INFINITY));
        checks.push(check(&format!("beta{k} > 0"), beta, Rel::Gt, 0.0));
        checks.push(check(
            &format!("beta{k} < n(p{k}-1)"),
            beta,
            Rel::Lt,
            nf * (p - 1.0),
        ));
    }
    checks.push(check("q >= 1", q, Rel::Ge, 1.0));
    checks.push(check("q < inf", q, Rel::Lt, f64::INFINITY));
    checks.push(check("n + gamma > 0", nf + gamma, Rel::Gt, 0.0));
    let balance: f64 = ps.iter().zip(betas).map(|(&p, &b)| (b + nf) / p).sum();
    checks.push(check(
        "sum (beta_i+n)/p_i = (gamma+n)/q",
        balance,
        Rel::Eq,
        (gamma + nf) / q,
    ));
    Ok(HypothesisReport::from_checks(checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn sphere_area_small_dimensions() {
        assert_eq!(unit_sphere_area(1).unwrap(), 2.0);
        assert!(rel(unit_sphere_area(2).unwrap(), 2.0 * PI) <= 1e-15);
        assert!(rel(unit_sphere_area(3).unwrap(), 4.0 * PI) <= 1e-15);
        assert!(rel(unit_sphere_area(4).unwrap(), 2.0 * PI * PI) <= 1e-15);
        assert!(matches!(unit_sphere_area(0), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn sphere_area_recurrence() {
        for n in 1..=20u32 {
            let lhs = unit_sphere_area(n + 2).unwrap();
            let rhs = 2.0 * PI * unit_sphere_area(n).unwrap() / f64::from(n);
            assert!(rel(lhs, rhs) <= 1e-13, "n = {n}");
        }
    }

    #[test]
    fn conjugate_exponent_identity() {
        for p in [1.1, 1.5, 2.0, 3.0, 7.25, 100.0] {
            let c = ConjugateExponent::new(p).unwrap();
            assert!((1.0 / c.p + 1.0 / c.p_prime - 1.0).abs() <= 1e-14);
        }
        assert!(ConjugateExponent::new(1.0).is_err());
        assert!(ConjugateExponent::new(f64::INFINITY).is_err());
    }

    #[test]
    fn space_spec_invariants() {
        assert!(SpaceSpec::weak(1, 1.0, 0.0).is_ok());
        assert!(SpaceSpec::weak(1, 0.5, 0.0).is_err());
        assert!(SpaceSpec::weak(2, 2.0, -2.0).is_err());
        assert!(SpaceSpec::strong(2, 0.5, -2.0).is_ok());
        assert!(SpaceSpec::strong(0, 2.0, 0.0).is_err());
    }

    #[test]
    fn thm21_flagship_passes_with_tight_inequalities() {
        let r = check_thm21_hypotheses(3.0, 2.0, 0.5, 0.0, 1);
        assert!(r.overall, "failures: {:?}", r.failures());
        let a = r.check("(gamma+n)/((beta/(p-1)) q) >= 2").unwrap();
        let b = r.check("(gamma+n)/((n-(beta+n)/(p-1)) q) >= 2").unwrap();
        assert_eq!(a.lhs, 2.0);
        assert_eq!(b.lhs, 2.0);
    }

    #[test]
    fn thm21_failures() {
        let r = check_thm21_hypotheses(3.0, 2.0, 0.6, 0.0, 1);
        assert!(!r.overall);
        assert!(r.failures().contains(&"(beta+n)/p = n/2"));

        let r = check_thm21_hypotheses(2.0, 2.0, 0.0, 0.0, 1);
        assert!(!r.overall);
        assert!(r.failures().contains(&"beta > 0"));
    }

    #[test]
    fn thm31_examples() {
        let r = check_thm31_hypotheses(&[3.0], &[0.5], 2.0, 0.0, 1).unwrap();
        assert!(r.overall);
        let bal = r.check("sum (beta_i+n)/p_i = (gamma+n)/q").unwrap();
        assert_eq!((bal.lhs, bal.rhs), (0.5, 0.5));

        let r = check_thm31_hypotheses(&[4.0, 4.0], &[1.0, 1.0], 2.0, 0.0, 1).unwrap();
        assert!(!r.overall);
        assert_eq!(r.failures(), vec!["sum (beta_i+n)/p_i = (gamma+n)/q"]);
        let bal = r.check("sum (beta_i+n)/p_i = (gamma+n)/q").unwrap();
        assert_eq!(bal.lhs, 1.0);

        let r = check_thm31_hypotheses(&[3.0], &[0.0], 2.0, 0.0, 1).unwrap();
        assert!(r.failures().contains(&"beta1 > 0"));

        assert!(check_thm31_hypotheses(&[3.0, 2.0], &[0.5], 2.0, 0.0, 1).is_err());
    }

    #[test]
    fn single_perturbation_flips_overall() {
        // Each perturbation breaks exactly one relation of a passing set.
        let base = (3.0, 2.0, 0.5, 0.0, 1u32);
        assert!(check_thm21_hypotheses(base.0, base.1, base.2, base.3, base.4).overall);
        let perturbed = [
            check_thm21_hypotheses(3.0, 2.0, 0.5, 1e-6, 1),
            check_thm21_hypotheses(3.0, 0.5, 0.5, 0.0, 1),
        ];
        for r in perturbed {
            assert!(!r.overall);
            assert!(!r.failures().is_empty());
        }
        let r = check_thm31_hypotheses(&[3.0], &[0.5], 2.0, 0.0, 1).unwrap();
        assert!(r.overall);
        let r = check_thm31_hypotheses(&[3.0], &[0.5], 2.0, 1e-9, 1).unwrap();
        assert_eq!(r.failures().len(), 1);
    }
}
