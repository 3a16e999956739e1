//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always print. The process
//! fails when the set of failing checks differs from `KNOWN_FAILURES`.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::{bessel_j_series, bisect, rel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use speclab::convexgeom::{hausdorff_distance, john_inner_ellipse, metrics, random_polygons};
use speclab::experiments::{collapse_experiment, shapeopt_family, CollapseSpec, Family, Manifest};
use speclab::grid::{geometric, geometric_n};
use speclab::riesz::{aizenman_lieb_check, two_term_residual};
use speclab::semiclassics::{digamma_sign_term, f_dirichlet, f_neumann, lsc};
use speclab::spectra::{bessel_zero, first_eigenvalue, ZeroKind};
use speclab::verify::{
    cylinder_lift_samples, deficit_profile, extrapolation_cases, family, prop31_cases, run_suite, verify_bracketing, verify_extrapolation,
    verify_laptev_pointwise, verify_polya, verify_prop31, verify_semiclassical, verify_two_term, SuiteReport, SUITES,
};
use speclab::{Bc, BoundarySpec, Domain};

/// Checks expected to fail, by criterion, with the reason recorded in the
/// decision log. Anything else failing, or any of these passing, fails the run.
const KNOWN_FAILURES: &[(u32, &str)] = &[(1, "digamma_d1_to_200"), (6, "factor_2")];

struct Check {
    name: String,
    ok: bool,
    info: String,
}

fn check(name: &str, ok: bool, info: impl Into<String>) -> Check {
    Check { name: name.to_string(), ok, info: info.into() }
}

fn no_violations(name: &str, reports: &[SuiteReport]) -> Check {
    let samples: u64 = reports.iter().map(|r| r.samples).sum();
    let violations: u64 = reports.iter().map(|r| r.violations).sum();
    let worst = reports.iter().map(|r| r.worst_margin).fold(f64::INFINITY, f64::min);
    let case = reports.iter().find(|r| r.violations > 0).map_or(String::new(), |r| format!(" first={}", r.worst_case));
    check(name, violations == 0 && samples > 0, format!("samples={samples} violations={violations} worst_margin={worst:.3e}{case}"))
}

fn c1_constants() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut prod, mut mono) = (0.0f64, true);
    for _ in 0..10_000 {
        let g = 5.0 * rng.gen::<f64>();
        let d = rng.gen_range(2..=10u32);
        prod = prod.max(rel(lsc(g + 0.5, d - 1) * lsc(g, 1), lsc(g, d)));
        let h = rng.gen_range(1e-3..0.5f64).min(5.0 - g);
        if h > 0.0 {
            mono &= lsc(g + h, d) < lsc(g, d);
        }
    }
    for d in 1..=10 {
        for i in 0..500 {
            mono &= lsc(0.01 * (i + 1) as f64, d) < lsc(0.01 * i as f64, d);
        }
    }
    // f^D is stated from d = 2 on, f^N for every d
    let (mut range_ok, mut semi) = (true, 0.0f64);
    for _ in 0..10_000 {
        let mut v = [5.0 * rng.gen::<f64>(), 5.0 * rng.gen::<f64>(), 5.0 * rng.gen::<f64>()];
        v.sort_by(f64::total_cmp);
        let [c, b, a] = v;
        let dd = rng.gen_range(2..=10u32);
        let dn = rng.gen_range(1..=10u32);
        let (fab, fac, fbc) = (f_dirichlet(a, b, dd).unwrap(), f_dirichlet(a, c, dd).unwrap(), f_dirichlet(b, c, dd).unwrap());
        range_ok &= fab >= 1.0 - 1e-10 && fac >= fab * (1.0 - 1e-10);
        semi = semi.max(rel(fab * fbc, fac));
        let (nab, nac, nbc) = (f_neumann(a, b, dn).unwrap(), f_neumann(a, c, dn).unwrap(), f_neumann(b, c, dn).unwrap());
        range_ok &= nab <= 1.0 + 1e-10 && nab > 0.0 && nac <= nab * (1.0 + 1e-10);
        semi = semi.max(rel(nab * nbc, nac));
    }
    let bad: Vec<u32> = (1..=200).filter(|&d| digamma_sign_term(d).is_nan() || digamma_sign_term(d) < 0.0).collect();
    vec![
        check("lsc_product", prod <= 1e-13, format!("max_rel={prod:.2e}")),
        check("lsc_monotone", mono, ""),
        check("extrapolation_factor_range_monotone", range_ok, "f^D for d>=2, f^N for d>=1"),
        check("extrapolation_semigroup", semi <= 1e-10, format!("max_rel={semi:.2e}")),
        check("digamma_d1_to_200", bad.is_empty(), format!("negative at d={bad:?} value(d=1)={:.12}", digamma_sign_term(1))),
        check("digamma_d2_to_200", bad.iter().all(|&d| d == 1), ""),
        check("digamma_d1_is_ln2_minus_1", (digamma_sign_term(1) - (2f64.ln() - 1.0)).abs() < 1e-12, ""),
    ]
}

fn c2_polya() -> Vec<Check> {
    let r = verify_polya(&family("boxes", 1).unwrap(), None).unwrap();
    vec![no_violations("polya_boxes", &[r])]
}

fn c3_bly_kroger() -> Vec<Check> {
    let mut doms = family("boxes", 1).unwrap();
    for f in ["disks", "balls", "cylinders", "unions"] {
        doms.extend(family(f, 1).unwrap());
    }
    let reports: Vec<SuiteReport> =
        [Bc::Dirichlet, Bc::Neumann].iter().map(|&bc| verify_semiclassical(&doms, bc, 1.0, None).unwrap()).collect();
    vec![no_violations("gamma1_all_families", &reports)]
}

fn c4_aizenman_lieb() -> Vec<Check> {
    let mut doms: Vec<Domain> =
        [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 0.7].iter().map(|&a: &f64| Domain::rect(a.sqrt(), 1.0 / a.sqrt())).collect();
    doms.extend([0.5, 1.0, 1.5, 2.0].map(Domain::disk));
    doms.extend([Domain::cuboid(&[1.0, 1.0, 1.0]), Domain::cuboid(&[0.5, 1.0, 2.0]), Domain::cuboid(&[0.3, 1.0, 1.7])]);
    doms.extend([Domain::ball(0.7), Domain::ball(1.0)]);
    doms.extend([Domain::cylinder(0.5, 1.0), Domain::cylinder(1.0, 0.5)]);
    doms.push(Domain::union(vec![Domain::rect(1.0, 1.0), Domain::disk(0.5)]));
    assert_eq!(doms.len(), 20);
    let (mut exact, mut quad) = (0.0f64, 0.0f64);
    let mut worst = String::new();
    for d in &doms {
        let lambda = 40.0 * first_eigenvalue(d, &BoundarySpec::Dirichlet).unwrap();
        for bc in [BoundarySpec::Dirichlet, BoundarySpec::Neumann] {
            for (g, gp) in [(1.0, 0.0), (1.0, 0.5), (2.0, 1.0)] {
                let a = aizenman_lieb_check(d, &bc, g, gp, lambda).unwrap();
                exact = exact.max(rel(a.integral_exact, a.direct));
                let q = rel(a.integral_quadrature, a.direct);
                if q > quad {
                    quad = q;
                    worst = format!("{} {bc:?} ({g},{gp})", d.id());
                }
            }
        }
    }
    vec![
        check("closed_form", exact <= 1e-12, format!("max_rel={exact:.2e}")),
        check("quadrature", quad <= 1e-8, format!("max_rel={quad:.2e} at {worst}")),
    ]
}

fn c5_laptev() -> Vec<Check> {
    vec![no_violations("pointwise", &[verify_laptev_pointwise(100_000, 5).unwrap()])]
}

fn c6_cylinder_lift() -> Vec<Check> {
    let ells = [1.0, 10.0, 100.0, 1000.0];
    let (mut samples, mut violations) = (0usize, 0usize);
    let (mut decay_ok, mut factor_ok) = (true, true);
    let (mut spread_max, mut lo, mut hi) = (0.0f64, f64::INFINITY, 0.0f64);
    let (mut outside, mut configs) = (0usize, 0usize);
    let mut tail = 0.0f64;
    for omega in [Domain::interval(1.0), Domain::rect(1.0, 1.0), Domain::disk(1.0)] {
        let l1 = first_eigenvalue(&omega, &BoundarySpec::Dirichlet).unwrap();
        let lambdas = geometric_n(0.5 * l1, 1e4 * l1, 20);
        for gamma in [0.0, 0.5, 1.0] {
            for bc in [Bc::Dirichlet, Bc::Neumann] {
                let mut scaled = Vec::new();
                for &ell in &ells {
                    let s = cylinder_lift_samples(&omega, ell, gamma, bc, &lambdas).unwrap();
                    for x in &s {
                        samples += 1;
                        let scale = x.ratio_product.abs().max(x.ratio_section.abs());
                        let g = if bc == Bc::Dirichlet { -x.gap } else { x.gap };
                        if g < -1e-10 * scale || g > x.bound + 1e-10 * scale {
                            violations += 1;
                        }
                    }
                    let gap: f64 = s.iter().map(|x| x.gap.abs()).sum();
                    let bound: f64 = s.iter().map(|x| x.bound).sum();
                    scaled.push(ell * gap);
                    let q = gap / bound;
                    lo = lo.min(q);
                    hi = hi.max(q);
                    configs += 1;
                    // measured gap within a factor 2 of the explicit bound
                    if !(0.5 * bound <= gap && gap <= bound) {
                        factor_ok = false;
                        outside += 1;
                    }
                    // the half-lattice-point term makes gap/bound tend to 1/2
                    if gamma > 0.0 && ell == 1000.0 {
                        let last = s.last().unwrap();
                        tail = tail.max((last.gap.abs() / last.bound - 0.5).abs());
                    }
                }
                // 1/ℓ decay: ℓ·gap roughly constant over three decades of ℓ
                let spread = scaled.iter().copied().fold(0.0, f64::max) / scaled.iter().copied().fold(f64::INFINITY, f64::min);
                spread_max = spread_max.max(spread);
                decay_ok &= spread <= 2.0;
            }
        }
    }
    vec![
        check("sandwich", violations == 0, format!("samples={samples} violations={violations}")),
        check("decay_1_over_ell", decay_ok, format!("max spread of ell*gap over ell = {spread_max:.3}")),
        check("factor_2", factor_ok, format!("aggregated gap/bound in [{lo:.3}, {hi:.3}]; {outside} of {configs} configs below 1/2")),
        check(
            "gap_over_bound_tends_to_half",
            tail <= 0.01,
            format!("max |gap/bound - 1/2| at the top lambda, gamma>0, ell=1000: {tail:.2e}"),
        ),
    ]
}

fn c7_bracketing() -> Vec<Check> {
    let lambdas = geometric(10.0, 1e4, 10);
    let mut reports = Vec::new();
    for lengths in [vec![1.0, 1.0], vec![1.0, 1.0, 1.0]] {
        for slices in 2..=8 {
            reports.push(verify_bracketing(&lengths, slices, &[0.0, 1.0], &lambdas).unwrap());
        }
    }
    vec![no_violations("square_and_cube", &reports)]
}

fn c8_collapse() -> Vec<Check> {
    let mut out = Vec::new();
    for bc in [Bc::Dirichlet, Bc::Neumann] {
        let spec = CollapseSpec {
            cross_section: Domain::interval(2.0),
            axis: vec![1.0],
            axis_exponent: 0.0,
            lambda_schedule: vec![1e2, 1e3, 1e4, 1e5, 1e6],
            gamma: 1.0,
            bc,
            r_in_bounds: (0.5, 2.0),
        };
        let rows = collapse_experiment(&spec).unwrap();
        let last = rows.last().unwrap();
        let within = (last.ratio - last.limit).abs() <= 0.02 * last.limit.abs();
        let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
        let decreasing = gaps.windows(2).all(|w| w[1] <= w[0]);
        out.push(check(&format!("limit_{}", bc.tag()), within, format!("ratio={:.6} limit={:.6}", last.ratio, last.limit)));
        out.push(check(
            &format!("gaps_{}", bc.tag()),
            decreasing,
            format!("{:?}", gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>()),
        ));
    }
    out
}

fn c9_two_term() -> Vec<Check> {
    let sq = Domain::rect(1.0, 1.0);
    let r = two_term_residual(&sq, Bc::Dirichlet, 1.0, 1e5).unwrap();
    let sup = |top: f64| {
        geometric(10.0, top, 40)
            .iter()
            .map(|&l| two_term_residual(&sq, Bc::Dirichlet, 0.0, l).unwrap().log_corrected_ratio)
            .fold(0.0, f64::max)
    };
    let mut stable = true;
    let mut info = String::new();
    for top in [2.5e4, 5e4, 1e5] {
        let (a, b) = (sup(top), sup(2.0 * top));
        stable &= (b - a).abs() <= 0.1 * a;
        info += &format!("C({top:e})={a:.4} C({:e})={b:.4} ", 2.0 * top);
    }
    vec![
        check(
            "residual_gamma1",
            r.residual_over_boundary_term.abs() <= 0.05,
            format!("residual/boundary={:.3e}", r.residual_over_boundary_term),
        ),
        check("log_corrected_gamma0", stable, info),
    ]
}

fn c10_deficit() -> Vec<Check> {
    let mut out = Vec::new();
    for bc in [Bc::Dirichlet, Bc::Neumann] {
        let r = deficit_profile(0.1, bc, &speclab::grid::linear(0.5, 12.0, 24)).unwrap();
        let b = r.empirical_constants["b"];
        let info =
            format!("b={b:.4} b_refined={:.4} drift={:.3}", r.empirical_constants["b_refined"], r.empirical_constants["slope_drift"]);
        out.push(check(&format!("deficit_{}", bc.tag()), r.passed() && b.is_finite() && b > 0.0, info));
    }
    out
}

fn c11_two_term_constants() -> Vec<Check> {
    let boxes: Vec<Domain> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|a| Domain::rect(a.sqrt(), 1.0 / a.sqrt())).collect();
    let groups = [("boxes", boxes), ("disks", family("disks", 1).unwrap()), ("cylinders", family("cylinders", 1).unwrap())];
    let mut worst = BTreeMap::new();
    let mut ok = true;
    for (name, doms) in &groups {
        for gamma in [0.25, 0.5, 1.0] {
            for bc in [Bc::Dirichlet, Bc::Neumann] {
                let r = verify_two_term(doms, bc, gamma, None).unwrap();
                let c = r.empirical_constants["c"].min(r.empirical_constants["c_refined"]);
                ok &= c > 0.0;
                worst.insert(format!("{name}/{gamma}/{}", bc.tag()), c);
            }
        }
    }
    let min = worst.values().copied().fold(f64::INFINITY, f64::min);
    vec![check("c_positive", ok, format!("min c={min:.4e} over {} configs", worst.len()))]
}

fn c12_extrapolation() -> Vec<Check> {
    let ext: Vec<SuiteReport> = extrapolation_cases()
        .unwrap()
        .iter()
        .map(|c| verify_extrapolation(&c.domain, c.bc, c.gamma, c.gamma_prime, c.c, c.big_lambda).unwrap())
        .collect();
    let p31: Vec<SuiteReport> = prop31_cases()
        .unwrap()
        .iter()
        .map(|c| verify_prop31(&c.domain, c.bc, c.gamma0, c.gamma1, c.lambda0, c.lambda1, c.c).unwrap())
        .collect();
    vec![no_violations("single_hypothesis", &ext), no_violations("two_hypothesis", &p31)]
}

fn c13_shapeopt() -> Vec<Check> {
    let r4 = shapeopt_family(Family::Rect2, Bc::Dirichlet, 1.0, 1e4).unwrap();
    let r6 = shapeopt_family(Family::Rect2, Bc::Dirichlet, 1.0, 1e6).unwrap();
    let (a4, a6) = (r4.best_param[0].exp(), r6.best_param[0].exp());
    let ks: Vec<usize> = [1e3, 1e4, 1e5, 1e6]
        .iter()
        .map(|&l| shapeopt_family(Family::KSquares, Bc::Dirichlet, 1.0, l).unwrap().best_param[0] as usize)
        .collect();
    vec![
        check("aspect_1e4", (a4 - 1.0).abs() <= 0.05, format!("aspect={a4:.5}")),
        check("aspect_1e6", (a6 - 1.0).abs() <= 0.01, format!("aspect={a6:.5}")),
        check("ratio_1e6", (r6.polya_ratio - 1.0).abs() <= 0.02, format!("ratio={:.5}", r6.polya_ratio)),
        check("k_squares", ks.iter().all(|&k| k == 1), format!("k={ks:?}")),
    ]
}

fn c14_geometry() -> Vec<Check> {
    let polys = random_polygons(14, 1000);
    let (mut sandwich, mut width, mut john) = (true, true, true);
    let (mut c_diam, mut c_width) = (0.0f64, 0.0f64);
    for p in &polys {
        let m = metrics(p);
        let q = m.volume / m.surface;
        sandwich &= q <= m.inradius * (1.0 + 1e-9) && m.inradius <= 2.0 * q * (1.0 + 1e-9);
        width &= 2.0 * m.inradius <= m.width * (1.0 + 1e-9) && m.width <= m.diameter * (1.0 + 1e-12);
        c_diam = c_diam.max(m.diameter * m.inradius / m.volume);
        c_width = c_width.max(m.width / m.inradius);
        let (_, c) = john_inner_ellipse(p).unwrap();
        john &= c.inner_ok && c.outer_ok;
    }
    // the planar sharp form is w ≤ 3 r_in
    width &= c_diam.is_finite() && c_width <= 3.0 * (1.0 + 1e-9);
    let mut metric = true;
    for w in polys.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        let ab = hausdorff_distance(a, b);
        metric &= ab == hausdorff_distance(b, a) && hausdorff_distance(a, a) == 0.0 && ab > 0.0;
        metric &= hausdorff_distance(a, c) <= ab + hausdorff_distance(b, c) + 1e-12;
    }
    let j01 = bisect(|z| bessel_j_series(0, z), 2.0, 3.0);
    let jp11 = bisect(|z| bessel_j_series(0, z) - bessel_j_series(1, z) / z, 1.5, 2.2);
    let e0 = (bessel_zero(0.0, 1, ZeroKind::J).unwrap() - j01).abs();
    let e1 = (bessel_zero(1.0, 1, ZeroKind::Jprime).unwrap() - jp11).abs();
    vec![
        check("sandwich", sandwich, format!("{} polygons", polys.len())),
        check("width_inradius", width, format!("C_diam={c_diam:.3} C_width={c_width:.4}")),
        check("john", john, ""),
        check("hausdorff_metric", metric, ""),
        check("bessel_zeros", e0 <= 1e-12 && e1 <= 1e-12, format!("errors {e0:.1e} {e1:.1e}")),
    ]
}

fn light_manifest(suite: &str) -> Manifest {
    let extra = match suite {
        "polya" | "liyau" => "domain = box:1,2\nlambda_max = 1e4\n",
        "semiclassical" => "family = disks\nlambda_max = 1e3\n",
        "small_energy" => "domain = box:0.2,5\nlambda_max = 1e4\n",
        "laptev" => "samples = 20000\n",
        "bracketing" => "domain = box:1,1\n",
        "two_term" => "domain = disk:1\nlambda_max = 1e3\n",
        _ => "",
    };
    Manifest::parse(&format!("suite = {suite}\n{extra}")).unwrap()
}

fn reports_json(m: &Manifest, threads: usize) -> String {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let reports = pool.install(|| run_suite(m)).unwrap();
    serde_json::to_string(&reports).unwrap()
}

fn c15_determinism() -> Vec<Check> {
    let mut differ = Vec::new();
    for suite in SUITES {
        let m = light_manifest(suite);
        if reports_json(&m, 1) != reports_json(&m, 8) {
            differ.push(suite);
        }
    }
    vec![check("threads_1_vs_8", differ.is_empty(), format!("{} suites; differing: {differ:?}", SUITES.len()))]
}

type Criterion = (u32, &'static str, f64, fn() -> Vec<Check>);

const CRITERIA: [Criterion; 15] = [
    (1, "constant identities", 5.0, c1_constants),
    (2, "polya for cuboids", 120.0, c2_polya),
    (3, "berezin-li-yau / kroger", 180.0, c3_bly_kroger),
    (4, "aizenman-lieb identity", 60.0, c4_aizenman_lieb),
    (5, "laptev pointwise inequalities", 5.0, c5_laptev),
    (6, "cylinder lift", 120.0, c6_cylinder_lift),
    (7, "dirichlet-neumann bracketing", 60.0, c7_bracketing),
    (8, "collapse limit", 120.0, c8_collapse),
    (9, "two-term weyl", 60.0, c9_two_term),
    (10, "improved-inequality deficit", 120.0, c10_deficit),
    (11, "two-term inequalities", 180.0, c11_two_term_constants),
    (12, "extrapolation machinery", 60.0, c12_extrapolation),
    (13, "shape optimisation", 300.0, c13_shapeopt),
    (14, "geometry", 60.0, c14_geometry),
    (15, "determinism", f64::INFINITY, c15_determinism),
];

fn main() {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    let mut failed_criteria = 0;
    for (n, title, limit, run) in CRITERIA {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let mut checks = run();
        let secs = start.elapsed().as_secs_f64();
        let stated = if limit.is_finite() { format!("limit {limit}s") } else { "no limit".into() };
        checks.push(check("runtime", secs <= limit, format!("{secs:.1}s ({stated})")));
        let pass = checks.iter().all(|c| c.ok);
        if !pass {
            failed_criteria += 1;
        }
        println!("{} criterion {n:>2}: {title} ({secs:.1}s)", if pass { "PASS" } else { "FAIL" });
        for c in &checks {
            let known = KNOWN_FAILURES.contains(&(n, c.name.as_str()));
            let tag = match (c.ok, known) {
                (true, false) => "ok",
                (false, true) => "known failure",
                (false, false) => "FAILED",
                (true, true) => "unexpectedly passed",
            };
            println!("    {:<36} {tag:<20} {}", c.name, c.info);
            if c.ok == known {
                unexpected.push(format!("criterion {n} {}", c.name));
            }
        }
    }
    println!("{failed_criteria} criteria failed; known failures: {KNOWN_FAILURES:?}");
    if !unexpected.is_empty() {
        println!("unexpected outcomes: {unexpected:?}");
        std::process::exit(1);
    }
}
