//! Inequality suites. Exact inequalities are checked sample by sample with
//! a relative slack; inequalities with unknown constants are measured and
//! the constants reported.
//!
//! Samples are evaluated in parallel but tallied on the calling thread in
//! input order, so a report does not depend on the worker count.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexgeom::{metrics_analytic, AnalyticMetrics, BodyMetrics};
use crate::experiments::Manifest;
use crate::grid::{geometric, geometric_n, grid_hash, linear};
use crate::riesz::{weyl_leading, Source};
use crate::semiclassics::{f_dirichlet, f_dirichlet_inverse, f_neumann, f_neumann_inverse, lsc};
use crate::spectra::{self, BoundarySpec, Convention, Domain};
use crate::{Bc, Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Relative slack of every exact comparison.
pub const SLACK: f64 = 1e-10;

/// Largest eigenvalue count requested from a non-lattice spectrum by the
/// default grids.
pub const LIST_CAP: f64 = 2.5e5;

/// Relative drift allowed for an empirical constant under grid refinement.
pub const REFINEMENT_TOL: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub schema_version: u32,
    pub samples: u64,
    pub violations: u64,
    /// smallest relative margin seen; ≥ 0 when every comparison holds
    pub worst_margin: f64,
    pub worst_case: String,
    pub empirical_constants: BTreeMap<String, f64>,
    pub grid_hash: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

thread_local! {
    static INJECT: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with the first comparison of every suite it calls reported as
/// failed. Test hook for the failure path.
pub fn with_injected_violation<T>(f: impl FnOnce() -> T) -> T {
    let old = INJECT.with(|c| c.replace(true));
    let out = f();
    INJECT.with(|c| c.set(old));
    out
}

/// (b − a) / scale for a ≤ b.
fn margin_le(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (b - a) / scale
    }
}

/// Margin of a ≤ b measured against an external scale.
fn margin_le_scaled(a: f64, b: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        (b - a) / scale
    } else {
        margin_le(a, b)
    }
}

struct Tally {
    suite: String,
    samples: u64,
    violations: u64,
    worst_margin: f64,
    worst_case: String,
    constants: BTreeMap<String, f64>,
    grids: Vec<f64>,
    inject: bool,
}

impl Tally {
    fn new(suite: &str) -> Tally {
        Tally {
            suite: suite.to_string(),
            samples: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            worst_case: String::new(),
            constants: BTreeMap::new(),
            grids: Vec::new(),
            inject: INJECT.with(Cell::get),
        }
    }

    /// One sample made of several comparisons, each given by its margin.
    fn sample(&mut self, margins: &[f64], case: impl FnOnce() -> String) {
        let mut worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
        if self.inject && !margins.is_empty() {
            self.inject = false;
            worst = -(worst.abs() + 1.0);
        }
        self.samples += 1;
        let failed = !(worst >= -SLACK);
        if failed {
            self.violations += 1;
        }
        if worst < self.worst_margin || (failed && self.violations == 1) || self.worst_case.is_empty() {
            self.worst_margin = self.worst_margin.min(worst);
            self.worst_case = case();
        }
    }

    fn constant(&mut self, name: &str, v: f64) {
        self.constants.insert(name.to_string(), v);
    }

    fn grid(&mut self, g: &[f64]) {
        self.grids.extend_from_slice(g);
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            suite: self.suite,
            schema_version: SCHEMA_VERSION,
            samples: self.samples,
            violations: self.violations,
            worst_margin: if self.samples == 0 { 0.0 } else { self.worst_margin },
            worst_case: self.worst_case,
            empirical_constants: self.constants,
            grid_hash: grid_hash(&self.grids),
        }
    }
}

fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    items.par_iter().map(f).collect()
}

fn single_metrics(domain: &Domain) -> Result<BodyMetrics> {
    match metrics_analytic(domain)? {
        AnalyticMetrics::Single(m) => Ok(m),
        AnalyticMetrics::PerPart(_) => Err(Error::InvalidArgument(format!("{} is not connected", domain.id()))),
    }
}

/// Largest λ with at most [`LIST_CAP`] estimated eigenvalues below it.
pub fn list_cap_lambda(domain: &Domain) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while spectra::estimated_count(domain, hi) < LIST_CAP {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if spectra::estimated_count(domain, mid) < LIST_CAP {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn is_lattice(domain: &Domain) -> bool {
    matches!(spectra::lattice_axes(domain, &BoundarySpec::Dirichlet), Ok(Some(_)))
}

/// `points` geometric λ values from λ₁^D/2 to 10⁶λ₁^D. Non-lattice
/// spectra stop at [`list_cap_lambda`].
pub fn default_grid(domain: &Domain, points: usize) -> Result<Vec<f64>> {
    let l1 = spectra::first_eigenvalue(domain, &BoundarySpec::Dirichlet)?;
    let mut hi = 1e6 * l1;
    if !is_lattice(domain) {
        hi = hi.min(list_cap_lambda(domain));
    }
    Ok(geometric_n(0.5 * l1, hi.max(0.5 * l1), points))
}

fn grid_or_default(domain: &Domain, grid: Option<&[f64]>, points: usize) -> Result<Vec<f64>> {
    match grid {
        Some(g) => Ok(g.to_vec()),
        None => default_grid(domain, points),
    }
}

fn lmax(grid: &[f64]) -> f64 {
    grid.iter().copied().fold(0.0, f64::max)
}

/// Unit-volume boxes with log-uniform aspect ratios in [1/8, 8].
pub fn random_boxes(seed: u64, count: usize, dim: usize) -> Vec<Domain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let logs: Vec<f64> = (0..dim).map(|_| rng.gen_range(-(8f64.ln())..8f64.ln())).collect();
            let mean = logs.iter().sum::<f64>() / dim as f64;
            Domain::cuboid(&logs.iter().map(|l| (l - mean).exp()).collect::<Vec<_>>())
        })
        .collect()
}

/// Named sample families.
pub fn family(name: &str, seed: u64) -> Result<Vec<Domain>> {
    Ok(match name {
        "intervals" => [0.5, 1.0, PI, 7.0].map(Domain::interval).to_vec(),
        "boxes2" => random_boxes(seed, 100, 2),
        "boxes3" => random_boxes(seed ^ 0x9e37_79b9, 100, 3),
        "boxes" => {
            let mut v = random_boxes(seed, 100, 2);
            v.extend(random_boxes(seed ^ 0x9e37_79b9, 100, 3));
            v
        }
        "disks" => [0.5, 1.0, 2.0].map(Domain::disk).to_vec(),
        "balls" => [0.5, 1.0, 2.0].map(Domain::ball).to_vec(),
        "cylinders" => vec![Domain::cylinder(1.0, 1.0), Domain::cylinder(0.5, 4.0), Domain::cylinder(2.0, 0.25)],
        "unions" => vec![
            Domain::union(vec![Domain::rect(1.0, 1.0), Domain::rect(0.5, 2.0)]),
            Domain::union(vec![Domain::disk(0.5), Domain::rect(1.0, 0.3)]),
            Domain::union(vec![Domain::cuboid(&[1.0, 1.0, 1.0]), Domain::ball(0.4)]),
        ],
        "thin_boxes" => [1.0, 0.5, 0.2, 0.1, 0.05].map(|w| Domain::rect(w, 1.0 / w)).to_vec(),
        _ => return Err(Error::InvalidArgument(format!("unknown family {name:?}"))),
    })
}

/// Strict Dirichlet counting ≤ Weyl ≤ strict Neumann counting.
pub fn verify_polya(domains: &[Domain], lambda_grid: Option<&[f64]>) -> Result<SuiteReport> {
    for d in domains {
        if !is_lattice(d) {
            return Err(Error::InvalidArgument(format!("polya suite takes boxes, got {}", d.id())));
        }
    }
    let rows = par_map(domains, |dom| {
        let grid = grid_or_default(dom, lambda_grid, 40)?;
        let top = lmax(&grid);
        let sd = Source::new(dom, &BoundarySpec::Dirichlet, top)?;
        let sn = Source::new(dom, &BoundarySpec::Neumann, top)?;
        let vals: Vec<(f64, f64, f64, f64)> = grid
            .iter()
            .map(|&l| {
                (l, sd.count(l, Convention::Strict) as f64, weyl_leading(dom, 0.0, l.max(0.0)), sn.count(l, Convention::Strict) as f64)
            })
            .collect();
        Ok((grid, vals))
    })?;
    let mut t = Tally::new("polya");
    for (dom, (grid, vals)) in domains.iter().zip(rows) {
        t.grid(&grid);
        for (l, nd, w, nn) in vals {
            t.sample(&[margin_le(nd, w), margin_le(w, nn)], || format!("{} lambda={l} ND={nd} weyl={w} NN={nn}", dom.id()));
        }
    }
    Ok(t.finish())
}

/// Pólya ratio ≤ 1 (Dirichlet) or ≥ 1 (Neumann) at order γ.
pub fn verify_semiclassical(domains: &[Domain], bc: Bc, gamma: f64, lambda_grid: Option<&[f64]>) -> Result<SuiteReport> {
    let rows = par_map(domains, |dom| {
        let grid = grid_or_default(dom, lambda_grid, 40)?;
        let src = Source::new(dom, &bc.into(), lmax(&grid))?;
        let vals: Vec<(f64, f64, f64)> = grid.iter().map(|&l| (l, src.riesz(gamma, l), weyl_leading(dom, gamma, l))).collect();
        Ok((grid, vals))
    })?;
    let mut t = Tally::new("semiclassical");
    let (mut sup, mut inf) = (f64::NEG_INFINITY, f64::INFINITY);
    for (dom, (grid, vals)) in domains.iter().zip(rows) {
        t.grid(&grid);
        for (l, tr, w) in vals {
            if w > 0.0 {
                sup = sup.max(tr / w);
                inf = inf.min(tr / w);
            }
            let m = match bc {
                Bc::Dirichlet => margin_le(tr, w),
                Bc::Neumann => margin_le(w, tr),
            };
            t.sample(&[m], || format!("{} bc={bc} gamma={gamma} lambda={l} trace={tr} weyl={w}", dom.id()));
        }
    }
    t.constant("sup_ratio", sup);
    t.constant("inf_ratio", inf);
    Ok(t.finish())
}

/// λ₁^D · 4r_in²/π² ≥ 1, component by component.
pub fn verify_hersch_protter(domains: &[Domain]) -> Result<SuiteReport> {
    let mut parts = Vec::new();
    for d in domains {
        match d {
            Domain::DisjointUnion { parts: ps } => parts.extend(ps.iter().cloned()),
            _ => parts.push(d.clone()),
        }
    }
    let rows = par_map(&parts, |dom| {
        let m = single_metrics(dom)?;
        let l1 = spectra::first_eigenvalue(dom, &BoundarySpec::Dirichlet)?;
        Ok(l1 * 4.0 * m.inradius * m.inradius / (PI * PI))
    })?;
    let mut t = Tally::new("hersch_protter");
    let mut lowest = f64::INFINITY;
    for (dom, v) in parts.iter().zip(rows) {
        lowest = lowest.min(v);
        t.sample(&[margin_le(1.0, v)], || format!("{} normalised_lambda1={v}", dom.id()));
    }
    t.constant("min_normalised_lambda1", lowest);
    Ok(t.finish())
}

fn refined(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        out.push(w[0]);
        out.push((w[0] * w[1]).sqrt());
    }
    out.extend(grid.last());
    out
}

fn relative_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Measures C_d = sup (N^N(λ) − 1)/(diam^d λ^{d/2}) over the grid range.
/// The counting function jumps at eigenvalues, so the grid is augmented by
/// the right limits at every eigenvalue below [`list_cap_lambda`]; the
/// plain grid and its refinement are reported alongside.
pub fn verify_liyau_neumann_count(domains: &[Domain], lambda_grid: Option<&[f64]>) -> Result<SuiteReport> {
    let rows = par_map(domains, |dom| {
        let m = single_metrics(dom)?;
        let grid = grid_or_default(dom, lambda_grid, 40)?;
        let fine = refined(&grid);
        let top = lmax(&grid);
        let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
        let src = Source::new(dom, &BoundarySpec::Neumann, top)?;
        let d = dom.dim() as f64;
        let scale = m.diameter.powf(d);
        let c = |l: f64, conv| (src.count(l, conv) as f64 - 1.0) / (scale * l.powf(0.5 * d));
        let on_grid = |g: &[f64]| g.iter().map(|&l| c(l, Convention::Strict)).fold(f64::NEG_INFINITY, f64::max);
        let (coarse, finer) = (on_grid(&grid), on_grid(&fine));
        // jumps are enumerated up to the list cap; above it the grid alone
        let jtop = top.min(list_cap_lambda(dom));
        let list = spectra::eigenvalues_below(dom, &BoundarySpec::Neumann, jtop)?;
        let jumps = list
            .entries
            .iter()
            .filter(|e| e.0 > 0.0 && e.0 >= lo && e.0 <= jtop)
            .map(|e| c(e.0, Convention::Closed))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((grid, coarse.max(jumps), finer.max(jumps), coarse, finer))
    })?;
    let mut t = Tally::new("liyau_neumann_count");
    let (mut c0, mut c1, mut g0, mut g1) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (grid, a, b, ga, gb) in &rows {
        t.grid(grid);
        c0 = c0.max(*a);
        c1 = c1.max(*b);
        g0 = g0.max(*ga);
        g1 = g1.max(*gb);
    }
    let drift = relative_change(c0, c1);
    t.sample(&[if c1.is_finite() { 0.0 } else { -1.0 }, REFINEMENT_TOL - drift], || format!("C={c0} refined={c1} drift={drift}"));
    t.constant("C", c0);
    t.constant("C_refined", c1);
    t.constant("C_grid_only", g0);
    t.constant("C_grid_only_refined", g1);
    t.constant("refinement_drift", drift);
    Ok(t.finish())
}

/// Measures C_{γ,d} = min Tr^N · r_in/(|Ω| λ^{γ+(d−1)/2}) on a grid that
/// reaches down to r_in√λ = 10⁻² and on its refinement.
pub fn verify_small_energy_neumann(domains: &[Domain], gamma: f64, lambda_grid: Option<&[f64]>) -> Result<SuiteReport> {
    let rows = par_map(domains, |dom| {
        let m = single_metrics(dom)?;
        let grid = match lambda_grid {
            Some(g) => g.to_vec(),
            None => {
                let g = default_grid(dom, 40)?;
                geometric_n((1e-2 / m.inradius).powi(2), lmax(&g), 60)
            }
        };
        let fine = refined(&grid);
        let src = Source::new(dom, &BoundarySpec::Neumann, lmax(&fine))?;
        let d = dom.dim() as f64;
        let c = |l: f64| src.riesz(gamma, l) * m.inradius / (m.volume * l.powf(gamma + 0.5 * (d - 1.0)));
        let coarse = grid.iter().map(|&l| c(l)).fold(f64::INFINITY, f64::min);
        let finer = fine.iter().map(|&l| c(l)).fold(f64::INFINITY, f64::min);
        Ok((grid, coarse, finer))
    })?;
    let mut t = Tally::new("small_energy_neumann");
    let (mut c0, mut c1) = (f64::INFINITY, f64::INFINITY);
    for (grid, a, b) in &rows {
        t.grid(grid);
        c0 = c0.min(*a);
        c1 = c1.min(*b);
    }
    let drift = relative_change(c0, c1);
    let positive = if c1 > 0.0 && c1.is_finite() { 0.0 } else { -1.0 };
    t.sample(&[positive, REFINEMENT_TOL - drift], || format!("C={c0} refined={c1} drift={drift}"));
    t.constant("C", c0);
    t.constant("C_refined", c1);
    t.constant("refinement_drift", drift);
    Ok(t.finish())
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

fn pos_pow(x: f64, g: f64) -> f64 {
    if x > 0.0 {
        x.powf(g)
    } else {
        0.0
    }
}

/// The four pointwise inequalities behind Riesz-order extrapolation, on
/// random (λ, μ, δ, γ′ < γ ≤ 5).
pub fn verify_laptev_pointwise(n_samples: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("laptev_pointwise");
    let slack = 1e-12;
    for _ in 0..n_samples {
        let lambda = 10f64.powf(rng.gen_range(-3.0..3.0));
        // a quarter of the samples put μ above λ
        let mu = if rng.gen_bool(0.25) { lambda * (1.0 + rng.gen::<f64>()) } else { lambda * rng.gen::<f64>() };
        let delta = 10f64.powf(rng.gen_range(-3.0..3.0));
        let gamma = 5.0 * (1.0 - rng.gen::<f64>());
        let gp = gamma * (1.0 - rng.gen::<f64>()).min(1.0 - 1e-12);
        let x = lambda - mu;
        let left = lambda.powf(gp - gamma) * pos_pow(x, gamma);
        let mid = pos_pow(x, gp);
        let k = (gp * gp.ln() + (gamma - gp) * (gamma - gp).ln() - gamma * gamma.ln()).exp();
        let right = delta.powf(gp - gamma) * k * pos_pow(x + delta, gamma);
        let ind_left = lambda.powf(-gamma) * pos_pow(x, gamma);
        let ind = if lambda >= mu { 1.0 } else { 0.0 };
        let ind_right = delta.powf(-gamma) * pos_pow(pos(x + delta), gamma);
        let ms = [margin_le(left, mid), margin_le(mid, right), margin_le(ind_left, ind), margin_le(ind, ind_right)];
        // the suite slack is tighter than the default
        let ms = ms.map(|m| if m < -slack { m.min(-2.0 * SLACK) } else { m.max(0.0) });
        t.sample(&ms, || format!("lambda={lambda} mu={mu} delta={delta} gamma={gamma} gamma_prime={gp}"));
    }
    t.constant("seed", seed as f64);
    Ok(t.finish())
}

/// Premise ratio(γ) ≤ c (D) / ≥ c (N) on λ ≤ Λ, then the conclusion at γ′
/// with the factor f^♯_γ(γ′). A failed premise is an error.
pub fn verify_extrapolation(domain: &Domain, bc: Bc, gamma: f64, gamma_prime: f64, c: f64, big_lambda: f64) -> Result<SuiteReport> {
    let d = domain.dim();
    let dh = 0.5 * d as f64;
    let l1 = spectra::first_eigenvalue(domain, &BoundarySpec::Dirichlet)?;
    let lo = (1e-3 * l1).min(big_lambda);
    let premise_grid = geometric(lo, big_lambda, 40);
    let top = match bc {
        Bc::Dirichlet => big_lambda * (gamma_prime + dh) / (gamma + dh),
        Bc::Neumann => big_lambda,
    };
    let concl_grid = geometric(lo.min(top), top, 80);
    let src = Source::new(domain, &bc.into(), big_lambda)?;
    let ratio = |g: f64, l: f64| src.riesz(g, l) / weyl_leading(domain, g, l);
    for &l in &premise_grid {
        let r = ratio(gamma, l);
        let ok = match bc {
            Bc::Dirichlet => r <= c * (1.0 + SLACK),
            Bc::Neumann => r >= c * (1.0 - SLACK),
        };
        if !ok {
            return Err(Error::Premise { what: format!("premise at lambda={l}"), value: r });
        }
    }
    let f = match bc {
        Bc::Dirichlet => f_dirichlet(gamma, gamma_prime, d)?,
        Bc::Neumann => f_neumann(gamma, gamma_prime, d)?,
    };
    let mut t = Tally::new("extrapolation");
    t.grid(&premise_grid);
    t.grid(&concl_grid);
    let vals: Vec<(f64, f64)> = concl_grid.par_iter().map(|&l| (l, ratio(gamma_prime, l))).collect();
    let mut extreme = match bc {
        Bc::Dirichlet => f64::NEG_INFINITY,
        Bc::Neumann => f64::INFINITY,
    };
    for (l, r) in vals {
        let m = match bc {
            Bc::Dirichlet => {
                extreme = extreme.max(r);
                margin_le(r, c * f)
            }
            Bc::Neumann => {
                extreme = extreme.min(r);
                margin_le(c * f, r)
            }
        };
        t.sample(&[m], || format!("{} bc={bc} gamma'={gamma_prime} lambda={l} ratio={r} bound={}", domain.id(), c * f));
    }
    t.constant("factor", f);
    t.constant("bound", c * f);
    t.constant("extreme_ratio", extreme);
    t.constant("conclusion_range_max", top);
    Ok(t.finish())
}

/// γ produced by the two-hypothesis extrapolation argument.
pub fn prop31_gamma(bc: Bc, d: u32, gamma0: f64, gamma1: f64, lambda0: f64, lambda1: f64, c: f64) -> Result<f64> {
    let dh = 0.5 * d as f64;
    let g = match bc {
        Bc::Dirichlet => {
            let a = f_dirichlet_inverse(gamma1, 1.0 / c, d)?;
            let b = gamma1 - (lambda1 - lambda0) / lambda1 * (gamma1 + dh);
            a.max(b)
        }
        Bc::Neumann => f_neumann_inverse(gamma1, 1.0 / c, d)?,
    };
    Ok(g.max(gamma0).min(gamma1))
}

/// Checks both hypotheses on grids, computes γ and verifies the global
/// inequality at γ on a dense grid.
#[allow(clippy::too_many_arguments)]
pub fn verify_prop31(domain: &Domain, bc: Bc, gamma0: f64, gamma1: f64, lambda0: f64, lambda1: f64, c: f64) -> Result<SuiteReport> {
    if !(gamma1 > gamma0 && gamma0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("need gamma1 > gamma0 >= 0, got ({gamma0}, {gamma1})")));
    }
    let d = domain.dim();
    match bc {
        Bc::Dirichlet if !(c < 1.0 && lambda1 > lambda0 && lambda0 > 0.0) => {
            return Err(Error::InvalidArgument("Dirichlet case needs c < 1 and Lambda1 > Lambda0 > 0".into()))
        }
        Bc::Neumann if !(c > 1.0 && lambda0 > 0.0) => {
            return Err(Error::InvalidArgument("Neumann case needs c > 1 and Lambda0 > 0".into()))
        }
        _ => {}
    }
    let l1 = spectra::first_eigenvalue(domain, &BoundarySpec::Dirichlet)?;
    let top = 100.0 * lambda1.max(lambda0);
    let src = Source::new(domain, &bc.into(), top)?;
    let ratio = |g: f64, l: f64| src.riesz(g, l) / weyl_leading(domain, g, l);
    let holds = |r: f64, bound: f64| match bc {
        Bc::Dirichlet => r <= bound * (1.0 + SLACK),
        Bc::Neumann => r >= bound * (1.0 - SLACK),
    };
    // hypothesis 1: the unimproved inequality above Λ₀ for γ′ ∈ [γ₀, γ₁]
    let high = geometric(lambda0, top, 40);
    for &gp in &linear(gamma0, gamma1, 11) {
        for &l in &high {
            let r = ratio(gp, l);
            if !holds(r, 1.0) {
                return Err(Error::Premise { what: format!("hypothesis 1 at gamma={gp} lambda={l}"), value: r });
            }
        }
    }
    // hypothesis 2: the improved inequality at γ₁ below Λ₁ (D) or Λ₀ (N)
    let cap = if bc == Bc::Dirichlet { lambda1 } else { lambda0 };
    let lo = (1e-3 * l1).min(cap);
    let low = geometric(lo, cap, 40);
    for &l in &low {
        let r = ratio(gamma1, l);
        if !holds(r, c) {
            return Err(Error::Premise { what: format!("hypothesis 2 at lambda={l}"), value: r });
        }
    }
    let gamma = prop31_gamma(bc, d, gamma0, gamma1, lambda0, lambda1, c)?;
    let dense = geometric(lo, top, 80);
    let vals: Vec<(f64, f64)> = dense.par_iter().map(|&l| (l, ratio(gamma, l))).collect();
    let mut t = Tally::new("prop31");
    t.grid(&high);
    t.grid(&low);
    t.grid(&dense);
    for (l, r) in vals {
        let m = match bc {
            Bc::Dirichlet => margin_le(r, 1.0),
            Bc::Neumann => margin_le(1.0, r),
        };
        t.sample(&[m], || format!("{} bc={bc} gamma={gamma} lambda={l} ratio={r}", domain.id()));
    }
    t.constant("gamma", gamma);
    t.constant("gamma1", gamma1);
    Ok(t.finish())
}

/// Per-sample record of the cylinder comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftSample {
    pub lambda: f64,
    pub ratio_product: f64,
    pub ratio_section: f64,
    /// ratio_product − ratio_section
    pub gap: f64,
    /// the explicit bound on |gap|
    pub bound: f64,
}

/// Ratios of ω × (0, ℓ) at order γ against ω at order γ + ½.
pub fn cylinder_lift_samples(omega: &Domain, ell: f64, gamma: f64, bc: Bc, lambdas: &[f64]) -> Result<Vec<LiftSample>> {
    let dom = Domain::product(omega.clone(), Domain::interval(ell));
    let d = dom.dim();
    let top = lmax(lambdas);
    let bcs: BoundarySpec = bc.into();
    let prod = Source::new(&dom, &bcs, top)?;
    let sect = Source::new(omega, &bcs, top)?;
    let vol = omega.volume();
    Ok(lambdas
        .iter()
        .map(|&l| {
            let p = l.powf(gamma + 0.5 * d as f64);
            let ratio_product = prod.riesz(gamma, l) / (lsc(gamma, d) * ell * vol * p);
            let ratio_section = sect.riesz(gamma + 0.5, l) / (lsc(gamma + 0.5, d - 1) * vol * p);
            let bound = sect.riesz(gamma, l) / (lsc(gamma, d) * ell * vol * p);
            LiftSample { lambda: l, ratio_product, ratio_section, gap: ratio_product - ratio_section, bound }
        })
        .collect())
}

/// Both sandwich chains: −bound ≤ gap ≤ 0 (D) and 0 ≤ gap ≤ bound (N).
pub fn verify_cylinder_lift(omega: &Domain, ell: f64, gamma: f64, lambdas: &[f64]) -> Result<SuiteReport> {
    let runs = par_map(&[Bc::Dirichlet, Bc::Neumann], |&bc| cylinder_lift_samples(omega, ell, gamma, bc, lambdas))?;
    let mut t = Tally::new("cylinder_lift");
    t.grid(lambdas);
    for (bc, samples) in [Bc::Dirichlet, Bc::Neumann].into_iter().zip(runs) {
        let (mut num, mut den) = (0.0, 0.0);
        for s in &samples {
            let scale = s.ratio_product.abs().max(s.ratio_section.abs());
            let (g, b) = match bc {
                Bc::Dirichlet => (-s.gap, s.bound),
                Bc::Neumann => (s.gap, s.bound),
            };
            num += g;
            den += b;
            t.sample(&[margin_le_scaled(0.0, g, scale), margin_le_scaled(g, b, scale)], || {
                format!("{} x (0,{ell}) bc={bc} gamma={gamma} lambda={} gap={} bound={}", omega.id(), s.lambda, s.gap, s.bound)
            });
        }
        t.constant(&format!("gap_over_bound_{}", bc.tag()), if den > 0.0 { num / den } else { f64::NAN });
    }
    Ok(t.finish())
}

/// Sub-boxes of `lengths` cut into `slices` equal pieces along axis 0,
/// with `cut` on the cut faces and `outer` everywhere else.
pub fn sliced_boxes(lengths: &[f64], slices: usize, outer: Bc, cut: Bc) -> Vec<(Domain, BoundarySpec)> {
    let mut piece = lengths.to_vec();
    piece[0] /= slices as f64;
    (0..slices)
        .map(|i| {
            let mut faces = vec![[outer, outer]; lengths.len()];
            faces[0] = [if i == 0 { outer } else { cut }, if i + 1 == slices { outer } else { cut }];
            (Domain::cuboid(&piece), BoundarySpec::BoxFaces(faces))
        })
        .collect()
}

/// Σ traces with D on the cuts ≤ full trace ≤ Σ traces with N on the cuts,
/// for Dirichlet and Neumann outer faces.
pub fn verify_bracketing(lengths: &[f64], slices: usize, gammas: &[f64], lambdas: &[f64]) -> Result<SuiteReport> {
    if slices == 0 {
        return Err(Error::InvalidArgument("need at least one slice".into()));
    }
    let top = lmax(lambdas);
    let full = Domain::cuboid(lengths);
    let mut t = Tally::new("bracketing");
    t.grid(lambdas);
    for outer in [Bc::Dirichlet, Bc::Neumann] {
        let whole = Source::new(&full, &outer.into(), top)?;
        let lower: Vec<Source> =
            sliced_boxes(lengths, slices, outer, Bc::Dirichlet).iter().map(|(d, b)| Source::new(d, b, top)).collect::<Result<_>>()?;
        let upper: Vec<Source> =
            sliced_boxes(lengths, slices, outer, Bc::Neumann).iter().map(|(d, b)| Source::new(d, b, top)).collect::<Result<_>>()?;
        for &g in gammas {
            for &l in lambdas {
                let lo: f64 = lower.iter().map(|s| s.riesz(g, l)).sum();
                let mid = whole.riesz(g, l);
                let hi: f64 = upper.iter().map(|s| s.riesz(g, l)).sum();
                t.sample(&[margin_le(lo, mid), margin_le(mid, hi)], || {
                    format!("{} slices={slices} outer={outer} gamma={g} lambda={l} lower={lo} full={mid} upper={hi}", full.id())
                });
            }
        }
    }
    Ok(t.finish())
}

/// Ω(λ) = (λ*/λ)^{1/2} ω × (0, (λ/λ*)^{(d−1)/2}) against the section
/// ratio of ω at λ*, within λ^{−d/2} Tr(ω, λ*, γ)/(L_{γ,d} |ω| λ*^γ).
pub fn verify_theorem14_construction(omega: &Domain, bc: Bc, lambda_star: f64, gamma: f64, lambda_grid: &[f64]) -> Result<SuiteReport> {
    let m = omega.dim();
    let d = m + 1;
    let bcs: BoundarySpec = bc.into();
    let sect = Source::new(omega, &bcs, lambda_star)?;
    let vol = omega.volume();
    let section_ratio = sect.riesz(gamma + 0.5, lambda_star) / (lsc(gamma + 0.5, m) * vol * lambda_star.powf(gamma + 0.5 + 0.5 * m as f64));
    let tr = sect.riesz(gamma, lambda_star);
    let rows = par_map(lambda_grid, |&l| {
        let s = (lambda_star / l).sqrt();
        let ell = (l / lambda_star).powf(0.5 * m as f64);
        let dom = Domain::product(omega.scaled(s), Domain::interval(ell));
        let r = Source::new(&dom, &bcs, l)?.riesz(gamma, l) / weyl_leading(&dom, gamma, l);
        let bound = l.powf(-0.5 * d as f64) * tr / (lsc(gamma, d) * vol * lambda_star.powf(gamma));
        Ok((l, r, bound))
    })?;
    let mut t = Tally::new("theorem14_construction");
    t.grid(lambda_grid);
    let mut last_gap = f64::NAN;
    for (l, r, bound) in rows {
        let gap = (r - section_ratio).abs();
        last_gap = gap;
        let scale = r.abs().max(section_ratio.abs());
        t.sample(&[margin_le_scaled(gap, bound, scale)], || {
            format!("{} bc={bc} lambda*={lambda_star} gamma={gamma} lambda={l} ratio={r} section={section_ratio} bound={bound}", omega.id())
        });
    }
    t.constant("section_ratio", section_ratio);
    t.constant("final_gap", last_gap);
    Ok(t.finish())
}

/// Least-squares (intercept, slope) of y on x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Deficit of the γ = 1 ratio on the box w × 1/w along a schedule of
/// t = w√λ values; log δ ≈ a − b t fitted on the schedule and on its
/// midpoint refinement.
pub fn deficit_profile(w: f64, bc: Bc, schedule: &[f64]) -> Result<SuiteReport> {
    let dom = Domain::rect(w, 1.0 / w);
    let fine = refined(schedule);
    let top = (lmax(&fine) / w).powi(2);
    let src = Source::new(&dom, &bc.into(), top)?;
    let delta = |t: f64| {
        let l = (t / w).powi(2);
        let r = src.riesz(1.0, l) / weyl_leading(&dom, 1.0, l);
        match bc {
            Bc::Dirichlet => 1.0 - r,
            Bc::Neumann => r - 1.0,
        }
    };
    let mut tally = Tally::new("deficit_profile");
    tally.grid(&fine);
    let coarse: Vec<f64> = schedule.iter().map(|&t| delta(t)).collect();
    let dense: Vec<f64> = fine.iter().map(|&t| delta(t)).collect();
    for (&t, &dl) in fine.iter().zip(&dense) {
        tally.sample(&[if dl > 0.0 { 1.0 } else { -1.0 }], || format!("{} bc={bc} w*sqrt(lambda)={t} deficit={dl}", dom.id()));
    }
    let fit = |ts: &[f64], ds: &[f64]| {
        let ys: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
        linear_fit(ts, &ys)
    };
    let (a, b) = fit(schedule, &coarse);
    let (a2, b2) = fit(&fine, &dense);
    let drift = relative_change(b, b2);
    // log δ falls with t, so the fitted slope is −b
    tally.sample(&[if b.is_finite() && b < 0.0 { 1.0 } else { -1.0 }, 0.15 - drift], || format!("b={} refined={} drift={drift}", -b, -b2));
    tally.constant("a", -a);
    tally.constant("b", -b);
    tally.constant("a_refined", -a2);
    tally.constant("b_refined", -b2);
    tally.constant("slope_drift", drift);
    Ok(tally.finish())
}

/// Empirical two-term constant c = min over λ of (Weyl − Tr)/(|∂Ω| λ^{γ+(d−1)/2})
/// for Dirichlet (only where Tr > 0) and (Tr − Weyl)/(…) for Neumann.
pub fn verify_two_term(domains: &[Domain], bc: Bc, gamma: f64, lambda_grid: Option<&[f64]>) -> Result<SuiteReport> {
    let rows = par_map(domains, |dom| {
        let m = single_metrics(dom)?;
        let grid = grid_or_default(dom, lambda_grid, 40)?;
        let fine = refined(&grid);
        let src = Source::new(dom, &bc.into(), lmax(&fine))?;
        let d = dom.dim() as f64;
        let c = |l: f64| {
            let tr = src.riesz(gamma, l);
            let w = weyl_leading(dom, gamma, l);
            let s = m.surface * l.powf(gamma + 0.5 * (d - 1.0));
            match bc {
                Bc::Dirichlet if tr > 0.0 => (w - tr) / s,
                Bc::Dirichlet => f64::INFINITY,
                Bc::Neumann => (tr - w) / s,
            }
        };
        let coarse = grid.iter().map(|&l| c(l)).fold(f64::INFINITY, f64::min);
        let finer = fine.iter().map(|&l| c(l)).fold(f64::INFINITY, f64::min);
        Ok((grid, coarse, finer))
    })?;
    let mut t = Tally::new("two_term");
    let (mut c0, mut c1) = (f64::INFINITY, f64::INFINITY);
    for (dom, (grid, a, b)) in domains.iter().zip(rows) {
        t.grid(&grid);
        t.sample(&[if b > 0.0 { 1.0 } else { -1.0 }], || format!("{} bc={bc} gamma={gamma} c={a} refined={b}", dom.id()));
        c0 = c0.min(a);
        c1 = c1.min(b);
    }
    let drift = relative_change(c0, c1);
    t.sample(&[REFINEMENT_TOL - drift], || format!("c={c0} refined={c1} drift={drift}"));
    t.constant("c", c0);
    t.constant("c_refined", c1);
    t.constant("refinement_drift", drift);
    t.constant("ceiling", 0.25 * lsc(gamma, domains.first().map_or(1, |d| d.dim()) - 1));
    Ok(t.finish())
}

/// sup (D) or inf (N) of the order-γ ratio on a 200-per-decade grid up
/// to Λ, widened by `pad` towards the safe side.
pub fn measured_ratio_bound(domain: &Domain, bc: Bc, gamma: f64, big_lambda: f64, pad: f64) -> Result<f64> {
    let l1 = spectra::first_eigenvalue(domain, &BoundarySpec::Dirichlet)?;
    let src = Source::new(domain, &bc.into(), big_lambda)?;
    let grid = geometric((1e-3 * l1).min(big_lambda), big_lambda, 200);
    let rs = grid.iter().map(|&l| src.riesz(gamma, l) / weyl_leading(domain, gamma, l));
    Ok(match bc {
        Bc::Dirichlet => rs.fold(f64::NEG_INFINITY, f64::max) * (1.0 + pad),
        Bc::Neumann => rs.fold(f64::INFINITY, f64::min) * (1.0 - pad),
    })
}

/// Arguments of one extrapolation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationCase {
    pub domain: Domain,
    pub bc: Bc,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub c: f64,
    pub big_lambda: f64,
}

/// Arguments of one two-hypothesis extrapolation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop31Case {
    pub domain: Domain,
    pub bc: Bc,
    pub gamma0: f64,
    pub gamma1: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub c: f64,
}

/// Three Dirichlet and three Neumann extrapolation instances; the last of
/// each uses a measured c.
pub fn extrapolation_cases() -> Result<Vec<ExtrapolationCase>> {
    let thin = Domain::rect(0.2, 5.0);
    let cyl = Domain::cylinder(0.5, 2.0);
    let case = |domain: Domain, bc, gamma, gamma_prime, c, big_lambda| ExtrapolationCase { domain, bc, gamma, gamma_prime, c, big_lambda };
    Ok(vec![
        case(Domain::rect(1.0, 1.0), Bc::Dirichlet, 1.0, 0.0, 1.0, 1e4),
        case(Domain::disk(1.0), Bc::Dirichlet, 1.0, 0.5, 1.0, 1e4),
        case(thin.clone(), Bc::Dirichlet, 1.0, 0.25, measured_ratio_bound(&thin, Bc::Dirichlet, 1.0, 2e3, 1e-2)?, 2e3),
        case(Domain::rect(1.0, 1.0), Bc::Neumann, 1.0, 0.5, 1.0, 1e4),
        case(Domain::disk(1.0), Bc::Neumann, 1.0, 0.0, 1.0, 1e4),
        case(cyl.clone(), Bc::Neumann, 1.0, 0.5, measured_ratio_bound(&cyl, Bc::Neumann, 1.0, 2e3, 1e-2)?, 2e3),
    ])
}

pub fn prop31_cases() -> Result<Vec<Prop31Case>> {
    let mut out = Vec::new();
    for (domain, l0, l1) in [(Domain::rect(0.2, 5.0), 100.0, 2e3), (Domain::rect(0.1, 10.0), 200.0, 5e3), (Domain::disk(1.0), 50.0, 1e3)] {
        let c = measured_ratio_bound(&domain, Bc::Dirichlet, 1.0, l1, 1e-2)?;
        out.push(Prop31Case { domain, bc: Bc::Dirichlet, gamma0: 0.0, gamma1: 1.0, lambda0: l0, lambda1: l1, c });
    }
    for (domain, l0) in [(Domain::rect(0.2, 5.0), 100.0), (Domain::rect(0.1, 10.0), 200.0), (Domain::cylinder(0.5, 2.0), 100.0)] {
        let c = measured_ratio_bound(&domain, Bc::Neumann, 1.0, l0, 1e-2)?;
        out.push(Prop31Case { domain, bc: Bc::Neumann, gamma0: 0.0, gamma1: 1.0, lambda0: l0, lambda1: l0, c });
    }
    Ok(out)
}

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 13] = [
    "polya",
    "semiclassical",
    "hersch_protter",
    "liyau",
    "small_energy",
    "laptev",
    "cylinder_lift",
    "bracketing",
    "theorem14",
    "extrapolation",
    "prop31",
    "deficit",
    "two_term",
];

/// Explicit λ grid from `lambda_min`, `lambda_max`, `points_per_decade`
/// (defaults 1 and 40), or `None` for the per-domain default.
pub fn manifest_grid(m: &Manifest) -> Result<Option<Vec<f64>>> {
    let Some(hi) = m.get_f64("lambda_max")? else {
        if m.get("lambda_min").is_some() {
            return Err(Error::InvalidArgument("lambda_min without lambda_max".into()));
        }
        return Ok(None);
    };
    let lo = m.get_f64("lambda_min")?.unwrap_or(1.0);
    let ppd = m.get_u64("points_per_decade")?.unwrap_or(40) as usize;
    if !(lo > 0.0 && hi >= lo) || ppd == 0 {
        return Err(Error::InvalidArgument(format!("bad grid: lambda_min {lo}, lambda_max {hi}, points_per_decade {ppd}")));
    }
    Ok(Some(geometric(lo, hi, ppd)))
}

fn manifest_domains(m: &Manifest, default_family: &str) -> Result<Vec<Domain>> {
    if let Some(d) = m.get("domain") {
        return Ok(vec![Domain::parse(d)?]);
    }
    family(m.get("family").unwrap_or(default_family), m.get_u64("seed")?.unwrap_or(1))
}

fn manifest_bc(m: &Manifest) -> Result<Option<Bc>> {
    m.get("bc").map(|s| Bc::parse(s).ok_or_else(|| Error::Parse(format!("bc: expected D or N, got {s:?}")))).transpose()
}

/// Runs the suite named by the `suite` key. Other keys: family or domain,
/// bc, gamma, grid keys, seed, samples (laptev), length (cylinder_lift),
/// slices (bracketing), lambda_star (theorem14), width (deficit).
pub fn run_suite(m: &Manifest) -> Result<Vec<SuiteReport>> {
    let suite = m.get("suite").ok_or_else(|| Error::InvalidArgument("missing suite".into()))?;
    let grid = manifest_grid(m)?;
    let g = grid.as_deref();
    let bc = manifest_bc(m)?;
    let bcs = |default: &[Bc]| bc.map_or_else(|| default.to_vec(), |b| vec![b]);
    let gamma = m.get_f64("gamma")?;
    let seed = m.get_u64("seed")?.unwrap_or(1);
    let per_domain_grid = |dom: &Domain, n: usize| -> Result<Vec<f64>> {
        match g {
            Some(g) => Ok(g.to_vec()),
            None => {
                let l1 = spectra::first_eigenvalue(dom, &BoundarySpec::Dirichlet)?;
                Ok(geometric_n(0.5 * l1, 1e4 * l1, n))
            }
        }
    };
    let mut out = Vec::new();
    match suite {
        "polya" => out.push(verify_polya(&manifest_domains(m, "boxes")?, g)?),
        "semiclassical" => {
            let doms = manifest_domains(m, "boxes")?;
            for b in bcs(&[Bc::Dirichlet, Bc::Neumann]) {
                out.push(verify_semiclassical(&doms, b, gamma.unwrap_or(1.0), g)?);
            }
        }
        "hersch_protter" => out.push(verify_hersch_protter(&manifest_domains(m, "thin_boxes")?)?),
        "liyau" => out.push(verify_liyau_neumann_count(&manifest_domains(m, "boxes2")?, g)?),
        "small_energy" => out.push(verify_small_energy_neumann(&manifest_domains(m, "thin_boxes")?, gamma.unwrap_or(1.0), g)?),
        "laptev" => out.push(verify_laptev_pointwise(m.get_u64("samples")?.unwrap_or(100_000) as usize, seed)?),
        "cylinder_lift" => {
            let ell = m.get_f64("length")?.unwrap_or(10.0);
            for omega in manifest_domains(m, "intervals")? {
                let lambdas = per_domain_grid(&omega, 20)?;
                out.push(verify_cylinder_lift(&omega, ell, gamma.unwrap_or(1.0), &lambdas)?);
            }
        }
        "bracketing" => {
            let slices = m.get_u64("slices")?.unwrap_or(4) as usize;
            let gammas = gamma.map_or_else(|| vec![0.0, 1.0], |x| vec![x]);
            let lambdas = g.map_or_else(|| geometric(10.0, 1e4, 10), <[f64]>::to_vec);
            for dom in manifest_domains(m, "boxes2")? {
                let Domain::Box { lengths } = &dom else {
                    return Err(Error::InvalidArgument(format!("bracketing needs boxes, got {}", dom.id())));
                };
                out.push(verify_bracketing(lengths, slices, &gammas, &lambdas)?);
            }
        }
        "theorem14" => {
            let ls = m.get_f64("lambda_star")?.unwrap_or(100.0);
            let lambdas = g.map_or_else(|| geometric(ls, 1e4 * ls, 10), <[f64]>::to_vec);
            for omega in manifest_domains(m, "intervals")? {
                for b in bcs(&[Bc::Dirichlet, Bc::Neumann]) {
                    out.push(verify_theorem14_construction(&omega, b, ls, gamma.unwrap_or(0.25), &lambdas)?);
                }
            }
        }
        "extrapolation" => {
            for c in extrapolation_cases()? {
                if bc.is_none_or(|b| b == c.bc) {
                    out.push(verify_extrapolation(&c.domain, c.bc, c.gamma, c.gamma_prime, c.c, c.big_lambda)?);
                }
            }
        }
        "prop31" => {
            for c in prop31_cases()? {
                if bc.is_none_or(|b| b == c.bc) {
                    out.push(verify_prop31(&c.domain, c.bc, c.gamma0, c.gamma1, c.lambda0, c.lambda1, c.c)?);
                }
            }
        }
        "deficit" => {
            let w = m.get_f64("width")?.unwrap_or(0.1);
            let n = m.get_u64("samples")?.unwrap_or(24) as usize;
            for b in bcs(&[Bc::Dirichlet, Bc::Neumann]) {
                out.push(deficit_profile(w, b, &linear(0.5, 12.0, n))?);
            }
        }
        "two_term" => {
            let doms = manifest_domains(m, "boxes2")?;
            for b in bcs(&[Bc::Dirichlet, Bc::Neumann]) {
                out.push(verify_two_term(&doms, b, gamma.unwrap_or(1.0), g)?);
            }
        }
        other => return Err(Error::InvalidArgument(format!("unknown suite {other:?}; expected one of {}", SUITES.join(", ")))),
    }
    Ok(out)
}
