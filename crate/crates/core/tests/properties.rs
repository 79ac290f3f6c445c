//! Property tests for the structural invariants of the library.

use hlpweak::cli::{Reference, Relation, VerificationReport};
use hlpweak::extremals::{closed_form_image, make_extremal, ExtremalFamily, FamilyId, SpaceParams};
use hlpweak::norms::{distribution_measure, strong_norm, weak_norm};
use hlpweak::operators::{apply_hlp, apply_hlp_symbolic};
use hlpweak::quad::{integrate_1d, integrate_1d_with_splits, integrate_mc, QuadratureConfig, SamplingMap};
use hlpweak::radialfn::{PiecewisePowerLog, PowerLogTerm};
use hlpweak::spaces::unit_sphere_area;
use hlpweak::Error;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Compactly supported functions with one term per piece and powers drawn
/// from `power`.
fn compact_fn(
    coeff: impl Strategy<Value = f64> + Clone + 'static,
    power: impl Strategy<Value = f64> + Clone + 'static,
) -> impl Strategy<Value = PiecewisePowerLog> {
    (1usize..=3)
        .prop_flat_map(move |k| {
            (
                prop::collection::vec(0.2f64..2.0, k),
                prop::collection::vec((coeff.clone(), power.clone()), k),
            )
        })
        .prop_map(|(gaps, terms)| {
            let mut bps = Vec::new();
            let mut x = 0.0;
            for g in gaps {
                x += g;
                bps.push(x);
            }
            let pieces = terms
                .into_iter()
                .map(|(c, a)| vec![PowerLogTerm::pow(c, a)])
                .collect();
            PiecewisePowerLog::new(bps, pieces).unwrap()
        })
}

/// Powers in `(-0.9, 3)`: every weighted integral with `n >= 1` converges.
fn signed_fn() -> impl Strategy<Value = PiecewisePowerLog> {
    compact_fn(prop_oneof![-3.0f64..-0.1, 0.1f64..3.0], -0.9f64..3.0)
}

/// Bounded positive functions, so every weak and strong norm is finite.
fn positive_fn() -> impl Strategy<Value = PiecewisePowerLog> {
    compact_fn(0.1f64..3.0, 0.0f64..3.0)
}

/// Functions built from a fixed power grid; the operator image then has
/// well-separated powers and at most first-order logarithms.
fn grid_fn() -> impl Strategy<Value = PiecewisePowerLog> {
    let power = prop::sample::select(vec![-0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0]);
    (
        prop::collection::vec((0.1f64..3.0, power), 1..=3),
        prop::collection::vec(0.2f64..2.0, 3),
    )
        .prop_map(|(terms, gaps)| {
            let k = terms.len();
            let mut bps = Vec::new();
            let mut x = 0.0;
            for g in gaps.into_iter().take(k) {
                x += g;
                bps.push(x);
            }
            let pieces = terms
                .into_iter()
                .map(|(c, a)| vec![PowerLogTerm::pow(c, a)])
                .collect();
            PiecewisePowerLog::new(bps, pieces).unwrap()
        })
}

#[test]
fn sphere_area_recurrence() {
    for n in 1..=20u32 {
        let lhs = unit_sphere_area(n + 2).unwrap();
        let rhs = 2.0 * std::f64::consts::PI * unit_sphere_area(n).unwrap() / f64::from(n);
        assert!(close(lhs, rhs, 1e-13), "n={n}: {lhs} vs {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integrate_weighted_is_additive(f in signed_fn(), t in 0.05f64..0.95, extra in 0.0f64..2.0) {
        let end = f.support_end();
        let mid = t * end;
        let whole = f.integrate_weighted(0.0, end, extra).unwrap();
        let parts = f.integrate_weighted(0.0, mid, extra).unwrap() + f.integrate_weighted(mid, end, extra).unwrap();
        let scale = abs_fn(&f).integrate_weighted(0.0, end, extra).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * scale.max(1.0), "{whole} vs {parts}");
    }

    #[test]
    fn integrate_weighted_matches_quadrature(f in signed_fn()) {
        let exact = f.integrate_weighted(0.0, f.support_end(), 0.0).unwrap();
        let cfg = QuadratureConfig::default();
        let (end, bps) = (f.support_end(), f.breakpoints());
        let numeric = integrate_1d_with_splits(|r| f.value(r), 0.0, end, bps, &cfg).unwrap();
        let scale = integrate_1d_with_splits(|r| f.value(r).abs(), 0.0, end, bps, &cfg).unwrap().value;
        prop_assert!((exact - numeric.value).abs() <= 1e-9 * scale, "{exact} vs {}", numeric.value);
    }

    #[test]
    fn superlevel_sets_shrink(f in signed_fn(), l1 in 0.01f64..3.0, l2 in 0.01f64..3.0) {
        let (lo, hi) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
        let big = f.superlevel_set(lo).unwrap();
        let small = f.superlevel_set(hi).unwrap();
        for iv in &small {
            prop_assert!(
                big.iter().any(|b| b.contains(iv)),
                "{iv:?} at level {hi} not inside {big:?} at level {lo}"
            );
        }
        let m_lo = distribution_measure(&f, lo, 0.0, 1).unwrap().measure;
        let m_hi = distribution_measure(&f, hi, 0.0, 1).unwrap().measure;
        prop_assert!(m_hi <= m_lo * (1.0 + 1e-12));
    }

    #[test]
    fn quadrature_is_deterministic(a in -0.9f64..3.0, seed in any::<u64>()) {
        let cfg = QuadratureConfig { mc_samples: 2000, mc_seed: seed, ..QuadratureConfig::default() };
        let f = |r: f64| r.powf(a) * (-r).exp();
        let x = integrate_1d(f, 0.0, f64::INFINITY, &cfg).unwrap();
        let y = integrate_1d(f, 0.0, f64::INFINITY, &cfg).unwrap();
        prop_assert_eq!(x, y);
        let maps = [SamplingMap::Uniform { lo: 0.0, hi: 1.0 }, SamplingMap::Uniform { lo: 0.0, hi: 2.0 }];
        let g = |s: &[f64]| s[0] * s[1];
        prop_assert_eq!(integrate_mc(g, &maps, &cfg).unwrap(), integrate_mc(g, &maps, &cfg).unwrap());
    }

    #[test]
    fn symbolic_image_matches_pointwise(f in grid_fn(), n in 1u32..=3, logr in -3.0f64..1.5) {
        let r = 10f64.powf(logr);
        let img = match apply_hlp_symbolic(&f, n) {
            Ok(img) => img,
            Err(Error::UnsupportedShape(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let direct = apply_hlp(&f, n, r).unwrap();
        prop_assert!(close(img.value(r), direct, 1e-12), "r={r}: {} vs {direct}", img.value(r));
    }

    #[test]
    fn hlp_commutes_with_dilation(f in signed_fn(), n in 1u32..=3, c in 0.1f64..10.0, r in 0.01f64..5.0) {
        let lhs = apply_hlp(&f.dilated(c).unwrap(), n, r).unwrap();
        let rhs = apply_hlp(&f, n, c * r).unwrap();
        let scale = apply_hlp(&abs_fn(&f), n, c * r).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1e-300), "{lhs} vs {rhs}");
    }

    #[test]
    fn weak_norm_scales(f in positive_fn(), q in 1.0f64..4.0, gamma in 0.0f64..2.0, n in 1u32..=3) {
        let base = weak_norm(&f, q, gamma, n).unwrap();
        for c in [2.0, 10.0, 1.0 / 3.0] {
            let homog = weak_norm(&f.scaled(c), q, gamma, n).unwrap();
            prop_assert!(close(homog, c * base, 1e-10), "c={c}: {homog} vs {}", c * base);
            let dil = weak_norm(&f.dilated(c).unwrap(), q, gamma, n).unwrap();
            let expected = c.powf(-(f64::from(n) + gamma) / q) * base;
            prop_assert!(close(dil, expected, 1e-10), "dilation c={c}: {dil} vs {expected}");
        }
    }

    #[test]
    fn weak_norm_is_monotone(f in positive_fn(), h in positive_fn(), q in 1.0f64..4.0, n in 1u32..=3) {
        let small = weak_norm(&f, q, 0.0, n).unwrap();
        let big = weak_norm(&f.add(&h), q, 0.0, n).unwrap();
        prop_assert!(small <= big * (1.0 + 1e-12), "{small} > {big}");
    }

    #[test]
    fn weak_norm_below_strong(f in positive_fn(), p in 1.0f64..4.0, beta in 0.0f64..1.0, n in 1u32..=3) {
        let weak = weak_norm(&f, p, beta, n).unwrap();
        let strong = strong_norm(&f, p, beta, n).unwrap();
        prop_assert!(weak <= strong * (1.0 + 1e-12), "{weak} > {strong}");
    }

    #[test]
    fn extremal_image_matches_closed_form(gamma in 0.0f64..3.0, n in 1u32..=3, logr in -3.0f64..3.0) {
        let space = SpaceParams::thm22(gamma, n);
        let fam = ExtremalFamily::new(FamilyId::Thm22);
        let f = make_extremal(&fam, &space).unwrap();
        let sym = apply_hlp_symbolic(&f, n).unwrap();
        let img = closed_form_image(&fam, &space).unwrap();
        let r = 10f64.powf(logr);
        prop_assert!(close(sym.value(r), img.value(r), 1e-11), "r={r}");
    }

    #[test]
    fn text_format_round_trips(f in signed_fn()) {
        let back: PiecewisePowerLog = f.to_string().parse().unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn report_passes_iff_within_tolerance(
        computed in -10.0f64..10.0,
        reference in -10.0f64..10.0,
        tol in 0.0f64..1.0,
        rel in prop::sample::select(vec![Relation::Equal, Relation::AtMost, Relation::AtLeast]),
    ) {
        let r = VerificationReport::from_outcome("case", Ok(computed), Reference::new(reference, "test", rel, tol), true, 0);
        prop_assert_eq!(r.pass, r.rel_error <= tol);
        prop_assert_eq!(r.rel_error, rel.rel_error(computed, reference));
    }
}

fn abs_fn(f: &PiecewisePowerLog) -> PiecewisePowerLog {
    let pieces = f
        .pieces()
        .iter()
        .map(|p| {
            p.iter()
                .map(|t| PowerLogTerm::pow(t.coeff.abs(), t.power))
                .collect()
        })
        .collect();
    PiecewisePowerLog::new(f.breakpoints().to_vec(), pieces).unwrap()
}
