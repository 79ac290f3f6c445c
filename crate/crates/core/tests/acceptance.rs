//! Acceptance suite: one PASS/FAIL line per criterion, with sub-checks.
//!
//! Criteria 2 and the Thm21 half of 3 compare against printed values that are
//! arithmetically wrong; they are run as stated and expected to fail. The
//! process exits non-zero when the set of failing criteria differs from that.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use hlpweak::cli::verify::{kernel_ratio, log_radii, QuadImage};
use hlpweak::constants::{hoelder_sum, kernel_constant_m, thm21_constant, thm22_constant, thm31_bound};
use hlpweak::extremals::{closed_form_image, make_extremal, ExtremalFamily, FamilyId, SpaceParams};
use hlpweak::norms::{
    distribution_measure, distribution_measure_mc, strong_norm, weak_norm, weak_norm_profile, ProfileOptions,
};
use hlpweak::operators::{apply_hlp_quad, apply_hlp_symbolic, KernelForm, RadialKernel};
use hlpweak::quad::QuadratureConfig;
use hlpweak::radialfn::PiecewisePowerLog;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose printed reference values are unattainable.
const KNOWN_UNATTAINABLE: [u32; 2] = [2, 3];

struct Criterion {
    id: u32,
    title: &'static str,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(id: u32, title: &'static str) -> Self {
        Self {
            id,
            title,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, pass: bool, detail: String) {
        self.checks.push((detail, pass));
    }

    /// `|computed - reference| <= tol |reference|`.
    fn close(&mut self, label: &str, computed: f64, reference: f64, tol: f64) {
        let rel = (computed - reference).abs() / reference.abs();
        self.check(
            rel <= tol,
            format!("{label}: computed {computed:.12} reference {reference:.12} rel_error {rel:.3e} (tol {tol:.0e})"),
        );
    }

    fn within(&mut self, label: &str, seconds: f64, limit: f64) {
        self.check(
            seconds <= limit,
            format!("{label}: {seconds:.3} s (limit {limit} s)"),
        );
    }

    fn error(&mut self, label: &str, e: impl std::fmt::Display) {
        self.check(false, format!("{label}: error {e}"));
    }

    fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }

    fn print(&self) {
        println!(
            "[{}] criterion {}: {}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.id,
            self.title
        );
        for (detail, ok) in &self.checks {
            println!("    {} {detail}", if *ok { "ok  " } else { "FAIL" });
        }
    }
}

fn thm22_numeric_ratio(gamma: f64, n: u32) -> hlpweak::Result<(f64, f64, f64)> {
    let space = SpaceParams::thm22(gamma, n);
    let f0 = make_extremal(&ExtremalFamily::new(FamilyId::Thm22), &space)?;
    let cfg = QuadratureConfig::default();
    let strong = strong_norm(&f0, 1.0, 0.0, n)?;
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
    let weak = sup?.value;
    Ok((strong, weak, weak / strong))
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::new(
        1,
        "Thm22 reproduction: ||f0|| = w_n/2n, weak(H f0)/||f0|| = sharp constant",
    );
    for (n, gamma, expected) in [(1u32, 0.0, 2.0), (1, 1.0, 1.0), (2, 0.0, PI)] {
        let start = Instant::now();
        let w = hlpweak::spaces::unit_sphere_area(n).unwrap();
        match thm22_numeric_ratio(gamma, n) {
            Ok((strong, weak, ratio)) => {
                let label = format!("n={n} gamma={gamma}");
                c.close(
                    &format!("{label} ||f0||"),
                    strong,
                    w / (2.0 * f64::from(n)),
                    1e-12,
                );
                if n == 1 {
                    c.close(&format!("{label} weak norm of H f0"), weak, expected, 1e-8);
                }
                c.close(&format!("{label} ratio"), ratio, expected, 1e-8);
                let k = thm22_constant(gamma, n).unwrap().value;
                c.close(&format!("{label} sharp constant formula"), k, expected, 1e-14);
            }
            Err(e) => c.error(&format!("n={n} gamma={gamma}"), e),
        }
        c.within(
            &format!("n={n} gamma={gamma} runtime"),
            start.elapsed().as_secs_f64(),
            1.0,
        );
    }
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new(
        2,
        "Thm21 flagship reproduction (n=1, p=3, beta=1/2, q=2, gamma=0)",
    );
    let start = Instant::now();
    let space = SpaceParams {
        n: 1,
        p: 3.0,
        beta: 0.5,
        q: 2.0,
        gamma: 0.0,
    };
    let consts = thm21_constant(3.0, 2.0, 0.5, 0.0, 1).unwrap();
    let h = &consts.hypotheses;
    c.check(h.overall, format!("hypotheses pass: {}", h.overall));
    for name in [
        "(gamma+n)/((beta/(p-1)) q) >= 2",
        "(gamma+n)/((n-(beta+n)/(p-1)) q) >= 2",
    ] {
        let lhs = h.check(name).map(|x| x.lhs).unwrap_or(f64::NAN);
        c.check((lhs - 2.0).abs() <= 1e-12, format!("{name}: lhs = {lhs}"));
    }
    let f0 = make_extremal(&ExtremalFamily::new(FamilyId::Thm21), &space).unwrap();
    let strong = strong_norm(&f0, 3.0, 0.5, 1).unwrap();
    c.close("||f0|| vs (16/3)^(1/3)", strong, (16.0f64 / 3.0).cbrt(), 1e-6);
    let image = apply_hlp_symbolic(&f0, 1).unwrap();
    let weak = weak_norm(&image, 2.0, 0.0, 1).unwrap();
    c.close(
        "weak norm of H f0 vs sqrt2*16/3",
        weak,
        2f64.sqrt() * 16.0 / 3.0,
        1e-6,
    );
    let cfg = QuadratureConfig::default();
    let numeric = QuadImage::new(
        |r| apply_hlp_quad(&f0, 1, r, &cfg).map(|x| x.value),
        vec![1.0],
        Some(-0.25),
    );
    match weak_norm_profile(
        &numeric,
        2.0,
        0.0,
        1,
        &ProfileOptions {
            kinks: vec![1.0],
            ..ProfileOptions::default()
        },
    ) {
        Ok(s) => c.close(
            "numeric weak norm agrees with exact level sets",
            s.value,
            weak,
            1e-8,
        ),
        Err(e) => c.error("numeric weak norm", e),
    }
    let ratio = weak / strong;
    let proof = consts.proof_variant.value;
    let stmt = consts.statement.value;
    c.close("ratio vs proof-variant constant", ratio, proof, 1e-6);
    let departure = (ratio - stmt).abs() / stmt;
    c.check(
        departure > 0.2,
        format!("ratio {ratio:.6} departs from statement variant {stmt:.6} by {departure:.4} (needs > 0.2)"),
    );
    c.check(
        consts.discrepancy,
        format!("discrepancy flag fires: {}", consts.discrepancy),
    );
    c.within("runtime", start.elapsed().as_secs_f64(), 5.0);
    c
}

/// Thm21 parameter sets passing every hypothesis: `(n, p, beta, gamma, q)`.
const THM21_SETS: [(u32, f64, f64, f64, f64); 5] = [
    (1, 3.0, 0.5, 0.0, 2.0),
    (1, 2.5, 0.25, 0.0, 2.0),
    (2, 3.0, 1.0, 0.0, 2.0),
    (3, 2.5, 0.75, 1.0, 8.0 / 3.0),
    (1, 2.8, 0.4, 0.5, 3.0),
];

fn worst_rel(radii: &[f64], f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> (f64, f64) {
    radii
        .iter()
        .map(|&r| ((f(r) - g(r)).abs() / g(r).abs(), r))
        .fold((0.0, f64::NAN), |a, b| if b.0 > a.0 { b } else { a })
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new(
        3,
        "numeric operator vs printed closed-form images at 200 radii in [1e-3, 1e3]",
    );
    let start = Instant::now();
    let radii = log_radii(1e-3, 1e3, 200);
    let cfg = QuadratureConfig::default();
    for n in 1..=3u32 {
        let space = SpaceParams::thm22(0.0, n);
        let fam = ExtremalFamily::new(FamilyId::Thm22);
        let f0 = make_extremal(&fam, &space).unwrap();
        let printed = closed_form_image(&fam, &space).unwrap();
        let (rel, at) = worst_rel(
            &radii,
            |r| apply_hlp_quad(&f0, n, r, &cfg).unwrap().value,
            |r| printed.value(r),
        );
        c.check(
            rel <= 1e-8,
            format!("Thm22 n={n}: max rel error {rel:.3e} at r={at:.4e} (tol 1e-8)"),
        );
    }
    for (n, p, beta, gamma, q) in THM21_SETS {
        let space = SpaceParams { n, p, beta, q, gamma };
        let hyp = hlpweak::spaces::check_thm21_hypotheses(p, q, beta, gamma, n);
        let fam = ExtremalFamily::new(FamilyId::Thm21);
        let f0 = make_extremal(&fam, &space).unwrap();
        let printed = closed_form_image(&fam, &space).unwrap();
        let (rel, at) = worst_rel(
            &radii,
            |r| apply_hlp_quad(&f0, n, r, &cfg).unwrap().value,
            |r| printed.value(r),
        );
        c.check(
            hyp.overall && rel <= 1e-8,
            format!("Thm21 n={n} p={p} beta={beta} gamma={gamma}: hypotheses {} max rel error {rel:.3e} at r={at:.4e} (tol 1e-8)", hyp.overall),
        );
    }
    c.within("runtime", start.elapsed().as_secs_f64(), 10.0);
    c
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::new(
        4,
        "m=1 HLP kernel constant equals C^(1/p'); bound equals the proof variant",
    );
    let cfg = QuadratureConfig::default();
    for (n, p, beta, gamma, q) in THM21_SETS {
        let kernel = RadialKernel::new(1, KernelForm::HlpMax, n).unwrap();
        let holder = hoelder_sum(p, beta, n).unwrap().powf((p - 1.0) / p);
        let label = format!("n={n} p={p} beta={beta}");
        match kernel_constant_m(&kernel, &[beta], &[p], &cfg) {
            Ok(m) => c.close(&format!("{label} M"), m.value, holder, 1e-8),
            Err(e) => c.error(&label, e),
        }
        let proof = thm21_constant(p, q, beta, gamma, n).unwrap().proof_variant.value;
        match thm31_bound(&kernel, &[beta], &[p], q, gamma, &cfg) {
            Ok(b) => c.close(&format!("{label} gamma={gamma} bound"), b.value, proof, 1e-8),
            Err(e) => c.error(&label, e),
        }
    }
    c
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
}

struct Case {
    n: u32,
    ps: Vec<f64>,
    betas: Vec<f64>,
    gamma: f64,
    q: f64,
    inputs: Vec<PiecewisePowerLog>,
    desc: String,
}

/// Random parameters satisfying the scaling relation, with cut-off power
/// inputs inside the source spaces.
fn random_case(rng: &mut ChaCha8Rng, m: usize) -> Case {
    loop {
        let n = if m == 1 {
            1 + (rng.next_u64() % 3) as u32
        } else {
            1
        };
        let nf = f64::from(n);
        let ps: Vec<f64> = (0..m).map(|_| uniform(rng, 1.5, 4.0)).collect();
        let betas: Vec<f64> = ps
            .iter()
            .map(|&p| uniform(rng, 0.05, 0.9) * nf * (p - 1.0))
            .collect();
        let gamma = uniform(rng, -0.5 * nf, 2.0);
        let sum: f64 = ps.iter().zip(&betas).map(|(p, b)| (b + nf) / p).sum();
        let q = (gamma + nf) / sum;
        if q < 1.0 {
            continue;
        }
        let mut inputs = Vec::new();
        let mut desc = format!("n={n} gamma={gamma:.3} q={q:.3}");
        for (&p, &beta) in ps.iter().zip(&betas) {
            let a = uniform(rng, -(beta + nf) / p + 0.05, 2.0);
            let radius = uniform(rng, 0.3f64.ln(), 3.0f64.ln()).exp();
            desc.push_str(&format!(" [p={p:.3} beta={beta:.3} a={a:.3} R={radius:.3}]"));
            let space = SpaceParams { n, p, beta, q, gamma };
            inputs.push(
                make_extremal(&ExtremalFamily::power_cutoff(a).with("radius", radius), &space).unwrap(),
            );
        }
        return Case {
            n,
            ps,
            betas,
            gamma,
            q,
            inputs,
            desc,
        };
    }
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new(5, "m-linear upper bound on seeded random cut-off power inputs");
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240531);
    let forms = [
        KernelForm::HardyIndicator,
        KernelForm::HlpMax,
        KernelForm::HilbertSum,
    ];
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut run = |c: &mut Criterion, m: usize, form: &KernelForm, case: &Case, cfg: &QuadratureConfig| {
        let kernel = RadialKernel::new(m, form.clone(), case.n).unwrap();
        let bound = thm31_bound(&kernel, &case.betas, &case.ps, case.q, case.gamma, cfg);
        let ratio = kernel_ratio(
            &kernel,
            &case.inputs,
            &case.ps,
            &case.betas,
            case.q,
            case.gamma,
            cfg,
        );
        match (bound, ratio) {
            (Ok(b), Ok(r)) => {
                worst = worst.max(r / b.value);
                count += 1;
                if r > b.value * (1.0 + 1e-5) {
                    c.check(
                        false,
                        format!(
                            "m={m} {}: ratio {r} exceeds bound {} ({})",
                            form.name(),
                            b.value,
                            case.desc
                        ),
                    );
                }
            }
            (Err(e), _) | (_, Err(e)) => c.error(&format!("m={m} {} ({})", form.name(), case.desc), e),
        }
    };
    let cfg1 = QuadratureConfig::default().with_rel_tol(1e-8);
    let mut oracle_gap = (0.0f64, String::new());
    for _ in 0..50 {
        let case = random_case(&mut rng, 1);
        for form in &forms {
            run(&mut c, 1, form, &case, &cfg1);
        }
        // At m = 1 the max kernel is the HLP operator, whose image is exact.
        let kernel = RadialKernel::new(1, KernelForm::HlpMax, case.n).unwrap();
        let strong = strong_norm(&case.inputs[0], case.ps[0], case.betas[0], case.n).unwrap();
        let exact = apply_hlp_symbolic(&case.inputs[0], case.n)
            .and_then(|g| weak_norm(&g, case.q, case.gamma, case.n))
            .map(|w| w / strong);
        let profiled = kernel_ratio(
            &kernel,
            &case.inputs,
            &case.ps,
            &case.betas,
            case.q,
            case.gamma,
            &cfg1,
        );
        if let (Ok(e), Ok(p)) = (exact, profiled) {
            let gap = (p - e).abs() / e;
            if gap > oracle_gap.0 {
                oracle_gap = (gap, format!("profile {p} exact {e} ({})", case.desc));
            }
        }
    }
    c.check(
        oracle_gap.0 <= 1e-6,
        format!(
            "profile weak norm vs exact level sets on the HLP cases: max rel gap {:.3e} (tol 1e-6) at {}",
            oracle_gap.0, oracle_gap.1
        ),
    );
    let cfg2 = QuadratureConfig::default().with_rel_tol(1e-6);
    for k in 0..10 {
        let case = random_case(&mut rng, 2);
        run(&mut c, 2, &forms[k % 3], &case, &cfg2);
    }
    c.check(count == 160, format!("{count} of 160 cases evaluated"));
    c.check(
        worst <= 1.0 + 1e-5,
        format!("largest ratio / bound = {worst:.6} (limit 1 + 1e-5)"),
    );
    c.within("runtime", start.elapsed().as_secs_f64(), 60.0);
    c
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new(
        6,
        "Monte Carlo distribution function of the Thm22 image, 1e6 seeded samples",
    );
    let space = SpaceParams::thm22(0.0, 1);
    let f0 = make_extremal(&ExtremalFamily::new(FamilyId::Thm22), &space).unwrap();
    let g = apply_hlp_symbolic(&f0, 1).unwrap();
    let cfg = QuadratureConfig {
        mc_samples: 1_000_000,
        mc_seed: 7,
        ..QuadratureConfig::default()
    };
    // g = 2 - r on (0,1), 1/r beyond: mu = 2/lambda below 1, 2(2 - lambda) above.
    for (lambda, expected) in [(0.25, 8.0), (0.5, 4.0), (1.5, 1.0)] {
        let exact = distribution_measure(&g, lambda, 0.0, 1).unwrap().measure;
        c.close(&format!("lambda={lambda} closed form"), exact, expected, 1e-12);
        let bound = 1.25 / lambda.min(1.0);
        match distribution_measure_mc(&g, lambda, 0.0, 1, bound, &cfg) {
            Ok(mc) => c.close(&format!("lambda={lambda} Monte Carlo"), mc.value, exact, 1e-2),
            Err(e) => c.error(&format!("lambda={lambda}"), e),
        }
    }
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new(7, "symbolic image of the unit-ball indicator, log branch, n=1");
    let chi: PiecewisePowerLog = "1 on (0,1]".parse().unwrap();
    let g = apply_hlp_symbolic(&chi, 1).unwrap();
    let cfg = QuadratureConfig::default();
    let radii = log_radii(1e-3, 1e3, 50);
    let formula = |r: f64| if r < 1.0 { 2.0 * (1.0 - r.ln()) } else { 2.0 / r };
    let (rel_f, at_f) = worst_rel(&radii, |r| g.value(r), formula);
    c.check(
        rel_f <= 1e-10,
        format!("vs 2(1 - log r), 2/r: max rel error {rel_f:.3e} at r={at_f:.4e} (tol 1e-10)"),
    );
    let (rel_n, at_n) = worst_rel(
        &radii,
        |r| g.value(r),
        |r| apply_hlp_quad(&chi, 1, r, &cfg).unwrap().value,
    );
    c.check(
        rel_n <= 1e-10,
        format!("vs quadrature: max rel error {rel_n:.3e} at r={at_n:.4e} (tol 1e-10)"),
    );
    c
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::new(8, "byte-identical JSON from two identical verify runs");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_hlpweak"))
            .args(["verify", "thm21", "--json", "--no-timestamp"])
            .output()
            .expect("binary runs")
    };
    let (a, b) = (run(), run());
    c.check(
        !a.stdout.is_empty(),
        format!("output length {} bytes", a.stdout.len()),
    );
    c.check(
        a.stdout == b.stdout,
        format!("identical: {}", a.stdout == b.stdout),
    );
    c.check(
        a.status.code() == b.status.code(),
        format!("exit codes {:?} and {:?}", a.status.code(), b.status.code()),
    );
    c
}

fn main() {
    let start = Instant::now();
    let criteria = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
    ];
    for c in &criteria {
        c.print();
    }
    let failing: BTreeSet<u32> = criteria.iter().filter(|c| !c.pass()).map(|c| c.id).collect();
    let expected: BTreeSet<u32> = KNOWN_UNATTAINABLE.into_iter().collect();
    let passed = criteria.len() - failing.len();
    println!(
        "acceptance: {passed}/{} criteria pass; failing {:?}; known unattainable {:?}; {:.1} s",
        criteria.len(),
        failing,
        expected,
        start.elapsed().as_secs_f64()
    );
    if failing != expected {
        println!("acceptance: failing set differs from the known unattainable set");
        std::process::exit(1);
    }
}
