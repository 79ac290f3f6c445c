//! Verification reports and their JSON, CSV and human renderings.

use serde::Serialize;

use crate::error::Error;

/// How `computed` is compared with `reference`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|computed - reference| / |reference|`.
    Equal,
    /// `max(0, computed / reference - 1)`.
    AtMost,
    /// `max(0, 1 - computed / reference)`.
    AtLeast,
}

impl Relation {
    pub fn rel_error(self, computed: f64, reference: f64) -> f64 {
        if !computed.is_finite() || !reference.is_finite() {
            return f64::INFINITY;
        }
        let e = match self {
            Relation::Equal if reference == 0.0 => computed.abs(),
            Relation::Equal => (computed - reference).abs() / reference.abs(),
            Relation::AtMost => (computed / reference - 1.0).max(0.0),
            Relation::AtLeast => (1.0 - computed / reference).max(0.0),
        };
        if e.is_nan() {
            f64::INFINITY
        } else {
            e
        }
    }
}

/// One verification case. `pass` holds exactly when `rel_error <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub case: String,
    pub computed: f64,
    pub reference: f64,
    pub reference_provenance: String,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_ms: u64,
    pub relation: Relation,
    pub converged: bool,
    pub hypotheses: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Reference side of a case.
#[derive(Debug, Clone)]
pub struct Reference {
    pub value: f64,
    pub provenance: String,
    pub relation: Relation,
    pub tolerance: f64,
}

impl Reference {
    pub fn equal(value: f64, provenance: impl Into<String>, tolerance: f64) -> Self {
        Self::new(value, provenance, Relation::Equal, tolerance)
    }

    pub fn new(value: f64, provenance: impl Into<String>, relation: Relation, tolerance: f64) -> Self {
        Self {
            value,
            provenance: provenance.into(),
            relation,
            tolerance,
        }
    }
}

impl VerificationReport {
    /// Builds a report from a computation that may have failed. Failures give
    /// `computed = NaN` and an infinite relative error.
    pub fn from_outcome(
        case: impl Into<String>,
        computed: Result<f64, Error>,
        reference: Reference,
        hypotheses_ok: bool,
        runtime_ms: u64,
    ) -> Self {
        let (value, converged, note) = match computed {
            Ok(v) => (v, true, None),
            Err(e) => (
                f64::NAN,
                !matches!(e, Error::NonConvergence(_)),
                Some(e.to_string()),
            ),
        };
        let rel_error = reference.relation.rel_error(value, reference.value);
        Self {
            case: case.into(),
            computed: value,
            reference: reference.value,
            reference_provenance: reference.provenance,
            rel_error,
            tolerance: reference.tolerance,
            pass: rel_error <= reference.tolerance,
            runtime_ms,
            relation: reference.relation,
            converged,
            hypotheses: if hypotheses_ok {
                "ok"
            } else {
                "hypothesis-violated"
            },
            note,
        }
    }
}

/// Output format selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Human,
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn reports_csv(reports: &[VerificationReport]) -> String {
    let mut out = String::from(
        "case,computed,reference,rel_error,tolerance,pass,converged,hypotheses,runtime_ms,reference_provenance\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{},{},{},{},{}\n",
            r.case,
            r.computed,
            r.reference,
            r.rel_error,
            r.tolerance,
            r.pass,
            r.converged,
            r.hypotheses,
            r.runtime_ms,
            csv_field(&r.reference_provenance)
        ));
    }
    out
}

pub fn reports_human(reports: &[VerificationReport]) -> String {
    let width = reports.iter().map(|r| r.case.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!(
            "{} {:<width$}  computed {:<22} reference {:<22} rel_error {:.3e} (tol {:.0e}, {:?}){}{}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.case,
            format!("{:.15}", r.computed),
            format!("{:.15}", r.reference),
            r.rel_error,
            r.tolerance,
            r.relation,
            if r.hypotheses == "ok" {
                ""
            } else {
                " [hypothesis-violated]"
            },
            r.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default(),
        ));
        out.push_str(&format!("     {:<width$}  {}\n", "", r.reference_provenance));
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    out.push_str(&format!("{passed}/{} cases passed\n", reports.len()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert_eq!(Relation::Equal.rel_error(2.0, 2.0), 0.0);
        assert!((Relation::Equal.rel_error(2.2, 2.0) - 0.1).abs() < 1e-12);
        assert_eq!(Relation::AtMost.rel_error(1.0, 2.0), 0.0);
        assert!((Relation::AtMost.rel_error(3.0, 2.0) - 0.5).abs() < 1e-12);
        assert_eq!(Relation::AtLeast.rel_error(3.0, 2.0), 0.0);
        assert_eq!(Relation::Equal.rel_error(f64::NAN, 1.0), f64::INFINITY);
    }

    #[test]
    fn pass_iff_within_tolerance() {
        let ok =
            VerificationReport::from_outcome("a", Ok(1.0 + 1e-9), Reference::equal(1.0, "x", 1e-8), true, 0);
        assert!(ok.pass && ok.converged);
        let bad = VerificationReport::from_outcome(
            "b",
            Err(Error::NonConvergence("budget".into())),
            Reference::equal(1.0, "x", 1e-8),
            false,
            0,
        );
        assert!(!bad.pass && !bad.converged);
        assert_eq!(bad.hypotheses, "hypothesis-violated");
        assert!(reports_csv(&[ok, bad]).lines().count() == 3);
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("ab"), "ab");
    }
}
