//! Collapse sequences, the degenerate regime and shape optimisation inside
//! parametrised unit-volume families.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexgeom::{metrics_analytic, AnalyticMetrics};
use crate::grid::{linear, sha256_hex};
use crate::optimize::{golden_max, nelder_mead_max};
use crate::riesz::{weyl_leading, Source};
use crate::semiclassics::lsc;
use crate::spectra::{BoundarySpec, Domain};
use crate::{Bc, Error, Result};

/// Ω_j = λ_j^{−1/2}·cross_section × (axis·λ_j^{axis_exponent}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseSpec {
    pub cross_section: Domain,
    /// side lengths of the expanding box factor at λ = 1
    pub axis: Vec<f64>,
    pub axis_exponent: f64,
    pub lambda_schedule: Vec<f64>,
    pub gamma: f64,
    pub bc: Bc,
    /// declared range of r_in(Ω_j)√λ_j
    pub r_in_bounds: (f64, f64),
}

impl CollapseSpec {
    pub fn domain_at(&self, lambda: f64) -> Domain {
        let cross = self.cross_section.scaled(lambda.powf(-0.5));
        let t = lambda.powf(self.axis_exponent);
        let axis: Vec<f64> = self.axis.iter().map(|l| l * t).collect();
        Domain::product(cross, Domain::cuboid(&axis))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseRow {
    pub j: usize,
    pub lambda: f64,
    pub r_in_sqrt_lambda: f64,
    pub ratio: f64,
    pub limit: f64,
    pub gap: f64,
}

pub const COLLAPSE_CSV_HEADER: &str = "j,lambda,r_in_sqrt_lambda,ratio,limit,gap";

fn inradius(domain: &Domain) -> Result<f64> {
    match metrics_analytic(domain)? {
        AnalyticMetrics::Single(m) => Ok(m.inradius),
        AnalyticMetrics::PerPart(ps) => Ok(ps.iter().map(|m| m.inradius).fold(0.0, f64::max)),
    }
}

/// Tr(ω, 1)^{γ+(d−m)/2} / (L^sc_{γ+(d−m)/2, m} |ω|).
pub fn collapse_limit(cross_section: &Domain, bc: Bc, gamma: f64, axis_dim: usize) -> Result<f64> {
    let m = cross_section.dim();
    let g = gamma + 0.5 * axis_dim as f64;
    let tr = Source::new(cross_section, &bc.into(), 1.0)?.riesz(g, 1.0);
    Ok(tr / (lsc(g, m) * cross_section.volume()))
}

/// Pólya ratios along the schedule against the closed-form limit. The
/// monitor returns an error at the first step whose r_in√λ leaves the
/// declared bounds.
pub fn collapse_experiment(spec: &CollapseSpec) -> Result<Vec<CollapseRow>> {
    let m = spec.cross_section.dim() as usize;
    if !(1..=2).contains(&m) || spec.axis.is_empty() {
        return Err(Error::InvalidArgument("cross-section of dimension 1 or 2 and a nonempty axis".into()));
    }
    let limit = collapse_limit(&spec.cross_section, spec.bc, spec.gamma, spec.axis.len())?;
    let bcs: BoundarySpec = spec.bc.into();
    let rows: Vec<Result<CollapseRow>> = spec
        .lambda_schedule
        .par_iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let dom = spec.domain_at(lambda);
            let r = inradius(&dom)? * lambda.sqrt();
            if !(r >= spec.r_in_bounds.0 && r <= spec.r_in_bounds.1) {
                return Err(Error::Hypothesis { step: j, value: r });
            }
            let ratio = Source::new(&dom, &bcs, lambda)?.riesz(spec.gamma, lambda) / weyl_leading(&dom, spec.gamma, lambda);
            Ok(CollapseRow { j, lambda, r_in_sqrt_lambda: r, ratio, limit, gap: (ratio - limit).abs() })
        })
        .collect();
    rows.into_iter().collect()
}

pub fn write_collapse_csv<W: Write>(rows: &[CollapseRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{COLLAPSE_CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.j, r.lambda, r.r_in_sqrt_lambda, r.ratio, r.limit, r.gap)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegenerateRow {
    pub lambda: f64,
    pub r_in_sqrt_lambda: f64,
    pub trace: f64,
    pub ratio: f64,
    /// λ < π²/(4 r_in²), where the Dirichlet trace must vanish
    pub below_hersch_protter: bool,
}

/// Normalised traces along (domain, λ) pairs with r_in√λ → 0.
pub fn degenerate_regime(cases: &[(Domain, f64)], bc: Bc, gamma: f64) -> Result<Vec<DegenerateRow>> {
    cases
        .par_iter()
        .map(|(dom, lambda)| {
            let rin = inradius(dom)?;
            let trace = Source::new(dom, &bc.into(), *lambda)?.riesz(gamma, *lambda);
            Ok(DegenerateRow {
                lambda: *lambda,
                r_in_sqrt_lambda: rin * lambda.sqrt(),
                trace,
                ratio: trace / weyl_leading(dom, gamma, *lambda),
                below_hersch_protter: *lambda < PI * PI / (4.0 * rin * rin),
            })
        })
        .collect()
}

/// Thin boxes w × 1/w at fixed λ with w√λ running over `products`.
pub fn thin_box_schedule(lambda: f64, products: &[f64]) -> Vec<(Domain, f64)> {
    products
        .iter()
        .map(|&t| {
            let w = t / lambda.sqrt();
            (Domain::rect(w, 1.0 / w), lambda)
        })
        .collect()
}

/// ∫ |section| dy / |Ω| for a product body (identically 1).
pub fn section_weight(domain: &Domain) -> Result<f64> {
    match domain {
        Domain::Product { cross, axis } => Ok(cross.volume() * axis.volume() / domain.volume()),
        _ => Err(Error::InvalidArgument("section weight needs a product".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Rect2,
    Box3,
    Cylinder,
    KSquares,
}

impl Family {
    pub fn parse(s: &str) -> Result<Family> {
        Ok(match s {
            "rect2" => Family::Rect2,
            "box3" => Family::Box3,
            "cylinder" => Family::Cylinder,
            "k_squares" => Family::KSquares,
            _ => return Err(Error::InvalidArgument(format!("unknown family {s:?}"))),
        })
    }

    pub fn tag(self) -> &'static str {
        match self {
            Family::Rect2 => "rect2",
            Family::Box3 => "box3",
            Family::Cylinder => "cylinder",
            Family::KSquares => "k_squares",
        }
    }

    pub fn dim(self) -> u32 {
        match self {
            Family::Rect2 | Family::KSquares => 2,
            Family::Box3 | Family::Cylinder => 3,
        }
    }

    /// Unit-volume member. rect2: sides e^{±p/2}; box3: e^{p0}, e^{p1},
    /// e^{−p0−p1}; cylinder: log(radius/height); k_squares: k squares.
    pub fn member(self, p: &[f64]) -> Domain {
        match self {
            Family::Rect2 => Domain::rect((0.5 * p[0]).exp(), (-0.5 * p[0]).exp()),
            Family::Box3 => Domain::cuboid(&[p[0].exp(), p[1].exp(), (-p[0] - p[1]).exp()]),
            Family::Cylinder => {
                let h = (1.0 / (PI * (2.0 * p[0]).exp())).cbrt();
                Domain::cylinder(p[0].exp() * h, h)
            }
            Family::KSquares => {
                let k = p[0].round().max(1.0) as usize;
                let s = 1.0 / (k as f64).sqrt();
                if k == 1 {
                    Domain::rect(1.0, 1.0)
                } else {
                    Domain::union(vec![Domain::rect(s, s); k])
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub family: String,
    pub bc: Bc,
    pub gamma: f64,
    pub lambda: f64,
    pub best_param: Vec<f64>,
    /// sup (D) or inf (N) of the trace over the family
    pub best_value: f64,
    pub polya_ratio: f64,
    pub r_in_sqrt_lambda: f64,
    pub component_count: usize,
    pub probes: usize,
    /// best probe value on the grid (never better than `best_value`)
    pub probe_best: f64,
    pub optimizer_converged: bool,
}

/// Half-width of the log-aspect search range.
pub const LOG_ASPECT_RANGE: f64 = 4.0;
pub const PROBE_POINTS: usize = 201;
pub const PARAM_TOL: f64 = 1e-6;

fn trace_of(family: Family, bc: Bc, gamma: f64, lambda: f64, p: &[f64]) -> f64 {
    let dom = family.member(p);
    Source::new(&dom, &bc.into(), lambda).map_or(f64::NAN, |s| s.riesz(gamma, lambda))
}

/// Parameters probed before local refinement: k = 1..32 for k_squares,
/// 201 points for one-parameter families, a 15 × 15 grid for box3.
pub fn probe_grid(family: Family) -> Vec<Vec<f64>> {
    match family {
        Family::KSquares => (1..=32).map(|k| vec![k as f64]).collect(),
        Family::Rect2 => linear(0.0, LOG_ASPECT_RANGE, PROBE_POINTS).into_iter().map(|a| vec![a]).collect(),
        Family::Cylinder => linear(-LOG_ASPECT_RANGE, LOG_ASPECT_RANGE, PROBE_POINTS).into_iter().map(|a| vec![a]).collect(),
        Family::Box3 => {
            let axis = linear(-0.5 * LOG_ASPECT_RANGE, 0.5 * LOG_ASPECT_RANGE, 15);
            axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect()
        }
    }
}

/// Extremal trace within a unit-volume family: a probe grid, then
/// golden-section (one parameter) or Nelder–Mead (two) from the best probe.
/// The result never falls behind the probe grid.
pub fn shapeopt_family(family: Family, bc: Bc, gamma: f64, lambda: f64) -> Result<OptResult> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    // maximise s·Tr, s = +1 for the Dirichlet sup, −1 for the Neumann inf
    let s = if bc == Bc::Dirichlet { 1.0 } else { -1.0 };
    let obj = |p: &[f64]| s * trace_of(family, bc, gamma, lambda, p);
    let probes = probe_grid(family);
    let probe_vals: Vec<f64> = probes.par_iter().map(|p| obj(p)).collect();
    let (ib, &vb) = probe_vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .ok_or_else(|| Error::InvalidArgument("empty probe grid".into()))?;
    let mut best = (probes[ib].clone(), vb);
    let mut converged = true;
    match family {
        Family::KSquares => {}
        Family::Rect2 | Family::Cylinder => {
            let h = if probes.len() > 1 { probes[1][0] - probes[0][0] } else { 1.0 };
            let lo_lim = if family == Family::Rect2 { 0.0 } else { -LOG_ASPECT_RANGE };
            let (x, fx, _) =
                golden_max(|a| obj(&[a]), (probes[ib][0] - h).max(lo_lim), (probes[ib][0] + h).min(LOG_ASPECT_RANGE), PARAM_TOL);
            if fx > best.1 {
                best = (vec![x], fx);
            }
        }
        Family::Box3 => {
            let h = 0.5 * LOG_ASPECT_RANGE / 7.0;
            let start = [probes[ib][0], probes[ib][1]];
            let (x, fx, _, ok) = nelder_mead_max(|p| obj(&p), start, h, PARAM_TOL, 2000);
            converged = ok;
            if fx > best.1 {
                best = (x.to_vec(), fx);
            }
        }
    }
    let dom = family.member(&best.0);
    let value = s * best.1;
    let r = match metrics_analytic(&dom)? {
        AnalyticMetrics::Single(m) => m.inradius,
        AnalyticMetrics::PerPart(ps) => ps.iter().map(|m| m.inradius).fold(0.0, f64::max),
    };
    Ok(OptResult {
        family: family.tag().to_string(),
        bc,
        gamma,
        lambda,
        best_param: best.0,
        best_value: value,
        polya_ratio: value / weyl_leading(&dom, gamma, lambda),
        r_in_sqrt_lambda: r * lambda.sqrt(),
        component_count: dom.component_count(),
        probes: probes.len(),
        probe_best: s * vb,
        optimizer_converged: converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub results: Vec<OptResult>,
    /// "ball_like" when r_in√λ grows along the grid, "collapse" otherwise
    pub regime: String,
    /// M(λ)/(L^sc λ^{γ+d/2}) at the last grid point
    pub limit_estimate: f64,
}

pub const TRAJECTORY_CSV_HEADER: &str = "family,bc,gamma,lambda,best_param,best_value,polya_ratio,r_in_sqrt_lambda,components";

pub fn shapeopt_trajectory(family: Family, bc: Bc, gamma: f64, lambda_grid: &[f64]) -> Result<Trajectory> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    let results: Vec<OptResult> = lambda_grid.iter().map(|&l| shapeopt_family(family, bc, gamma, l)).collect::<Result<_>>()?;
    let rs: Vec<f64> = results.iter().map(|r| r.r_in_sqrt_lambda).collect();
    let growing = rs.len() > 1 && rs.windows(2).all(|w| w[1] > w[0]);
    let last = results.last().expect("nonempty");
    Ok(Trajectory { regime: if growing { "ball_like".into() } else { "collapse".into() }, limit_estimate: last.polya_ratio, results })
}

pub fn write_trajectory_csv<W: Write>(t: &Trajectory, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
    for r in &t.results {
        let p: Vec<String> = r.best_param.iter().map(|x| x.to_string()).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.family,
            r.bc,
            r.gamma,
            r.lambda,
            p.join(";"),
            r.best_value,
            r.polya_ratio,
            r.r_in_sqrt_lambda,
            r.component_count
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub domain: Domain,
    pub copies: usize,
    pub filler_volume: f64,
    pub filler_ratio: f64,
    pub ratio: f64,
    pub target: f64,
    pub gap: f64,
    /// filler_volume · max(filler_ratio, target)
    pub bound: f64,
}

/// ⌊(λ/λ*)^{d/2}/|ω*|⌋ copies of (λ*/λ)^{1/2}ω* plus a cube restoring unit
/// volume, compared with the ratio of ω* at λ*.
pub fn multicomponent_trial(omega_star: &Domain, lambda_star: f64, gamma: f64, bc: Bc, lambda: f64) -> Result<TrialResult> {
    let d = omega_star.dim();
    let dh = 0.5 * d as f64;
    let vol = omega_star.volume();
    let copies = ((lambda / lambda_star).powf(dh) / vol * (1.0 + 1e-12)).floor();
    if copies < 1.0 {
        return Err(Error::InvalidArgument(format!("lambda {lambda} too small for a single copy")));
    }
    let copies = copies as usize;
    let r = (lambda_star / lambda).sqrt();
    let piece = omega_star.scaled(r);
    let filler_volume = (1.0 - copies as f64 * piece.volume()).max(0.0);
    let mut parts = vec![piece; copies];
    let bcs: BoundarySpec = bc.into();
    let mut filler_ratio = 0.0;
    if filler_volume > 1e-12 {
        let side = filler_volume.powf(1.0 / d as f64);
        let cube = Domain::cuboid(&vec![side; d as usize]);
        filler_ratio = Source::new(&cube, &bcs, lambda)?.riesz(gamma, lambda) / weyl_leading(&cube, gamma, lambda);
        parts.push(cube);
    }
    let domain = if parts.len() == 1 { parts.pop().expect("one part") } else { Domain::union(parts) };
    let ratio = Source::new(&domain, &bcs, lambda)?.riesz(gamma, lambda) / weyl_leading(&domain, gamma, lambda);
    let target = Source::new(omega_star, &bcs, lambda_star)?.riesz(gamma, lambda_star) / weyl_leading(omega_star, gamma, lambda_star);
    Ok(TrialResult {
        domain,
        copies,
        filler_volume,
        filler_ratio,
        ratio,
        target,
        gap: (ratio - target).abs(),
        bound: filler_volume * filler_ratio.max(target),
    })
}

/// Flat `key = value` configuration; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse(format!("manifest line {}: expected key = value, got {raw:?}", no + 1)));
            };
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse(format!("manifest line {}: empty key", no + 1)));
            }
            entries.insert(k.replace('-', "_"), v.trim().to_string());
        }
        Ok(Manifest { entries })
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        Manifest::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.replace('-', "_"), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("{key}: not a number: {v:?}")))).transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key).map(|v| v.parse::<u64>().map_err(|_| Error::Parse(format!("{key}: not an unsigned integer: {v:?}")))).transpose()
    }

    /// Canonical `key=value` lines in key order.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// SHA-256 of the canonical form.
    pub fn hash(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let m = Manifest::parse("# sweep\nfamily = rect2\n gamma=1 # order\nlambda-max = 1e4\n").unwrap();
        assert_eq!(m.get("family"), Some("rect2"));
        assert_eq!(m.get_f64("gamma").unwrap(), Some(1.0));
        assert_eq!(m.get_f64("lambda_max").unwrap(), Some(1e4));
        assert_eq!(Manifest::parse(&m.canonical()).unwrap(), m);
        assert!(Manifest::parse("oops").is_err());
    }

    #[test]
    fn members_have_unit_volume() {
        for (f, p) in
            [(Family::Rect2, vec![1.3]), (Family::Box3, vec![0.4, -1.1]), (Family::Cylinder, vec![-0.7]), (Family::KSquares, vec![7.0])]
        {
            assert!((f.member(&p).volume() - 1.0).abs() < 1e-12, "{f:?}");
        }
    }

    #[test]
    fn product_section_weight() {
        assert!((section_weight(&Domain::cylinder(0.3, 4.0)).unwrap() - 1.0).abs() < 1e-15);
    }
}
