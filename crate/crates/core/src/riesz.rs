//! Riesz means, counting functions and the ratios built from them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::convexgeom::{metrics_analytic, AnalyticMetrics};
use crate::quadrature;
use crate::semiclassics::{beta_euler, lsc, weyl_prediction};
use crate::spectra::lattice::{self, Axis, Kahan};
use crate::spectra::{self, product_bcs, BoundarySpec, Convention, Domain, EigenvalueList};
use crate::{Bc, Error, Result};

/// Spectral data prepared once for evaluation at many λ ≤ `lambda_max`.
#[derive(Debug, Clone)]
pub enum Source {
    Lattice(Vec<Axis>),
    List(EigenvalueList),
    /// one factor as an explicit list, the other a lattice
    Fibered {
        list: EigenvalueList,
        axes: Vec<Axis>,
    },
    Union(Vec<Source>),
}

fn list_cutoff(lambda_max: f64) -> f64 {
    lambda_max * (1.0 + 1e-12) + f64::MIN_POSITIVE
}

impl Source {
    pub fn new(domain: &Domain, bc: &BoundarySpec, lambda_max: f64) -> Result<Source> {
        if !(lambda_max >= 0.0 && lambda_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda_max}")));
        }
        domain.validate()?;
        if let Some(axes) = spectra::lattice_axes(domain, bc)? {
            return Ok(Source::Lattice(lattice::arrange(axes)));
        }
        let cutoff = list_cutoff(lambda_max);
        match domain {
            Domain::DisjointUnion { parts } => {
                Ok(Source::Union(parts.iter().map(|p| Source::new(p, bc, lambda_max)).collect::<Result<_>>()?))
            }
            Domain::Product { cross, axis } => {
                let (cb, ab) = product_bcs(bc)?;
                if let Some(axes) = spectra::lattice_axes(axis, &ab)? {
                    let list = spectra::eigenvalues_below(cross, &cb, cutoff)?;
                    Ok(Source::Fibered { list, axes: lattice::arrange(axes) })
                } else if let Some(axes) = spectra::lattice_axes(cross, &cb)? {
                    let list = spectra::eigenvalues_below(axis, &ab, cutoff)?;
                    Ok(Source::Fibered { list, axes: lattice::arrange(axes) })
                } else {
                    Ok(Source::List(spectra::eigenvalues_below(domain, bc, cutoff)?))
                }
            }
            _ => Ok(Source::List(spectra::eigenvalues_below(domain, bc, cutoff)?)),
        }
    }

    /// Riesz mean of order γ (γ = 0: strict counting).
    pub fn riesz(&self, gamma: f64, lambda: f64) -> f64 {
        if gamma == 0.0 {
            return self.count(lambda, Convention::Strict) as f64;
        }
        if lambda <= 0.0 {
            return 0.0;
        }
        match self {
            Source::Lattice(axes) => lattice::riesz(axes, lambda, gamma),
            Source::List(l) => l.riesz(gamma, lambda),
            Source::Fibered { list, axes } => {
                let mut acc = Kahan::default();
                for &(v, m) in &list.entries {
                    if v >= lambda {
                        break;
                    }
                    acc.add(m as f64 * lattice::riesz(axes, lambda - v, gamma));
                }
                acc.total()
            }
            Source::Union(parts) => {
                let mut acc = Kahan::default();
                for p in parts {
                    acc.add(p.riesz(gamma, lambda));
                }
                acc.total()
            }
        }
    }

    pub fn count(&self, lambda: f64, conv: Convention) -> u64 {
        let closed = conv == Convention::Closed;
        match self {
            Source::Lattice(axes) => lattice::count(axes, lambda, closed),
            Source::List(l) => {
                if lambda < 0.0 {
                    0
                } else {
                    l.counting(lambda, conv)
                }
            }
            Source::Fibered { list, axes } => list
                .entries
                .iter()
                .take_while(|e| if closed { e.0 <= lambda } else { e.0 < lambda })
                .map(|&(v, m)| m * lattice::count(axes, lambda - v, closed))
                .sum(),
            Source::Union(parts) => parts.iter().map(|p| p.count(lambda, conv)).sum(),
        }
    }
}

/// Tr(−Δ − λ)_−^γ = Σ_k (λ − λ_k)_+^γ.
pub fn riesz_mean(domain: &Domain, bc: &BoundarySpec, gamma: f64, lambda: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(Source::new(domain, bc, lambda.max(0.0))?.riesz(gamma, lambda))
}

pub fn counting(domain: &Domain, bc: &BoundarySpec, lambda: f64, conv: Convention) -> Result<u64> {
    Ok(Source::new(domain, bc, lambda.max(0.0))?.count(lambda, conv))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma must be finite and >= 0, got {gamma}")))
    }
}

/// L^sc_{γ,d}|Ω|λ^{γ+d/2}.
pub fn weyl_leading(domain: &Domain, gamma: f64, lambda: f64) -> f64 {
    let d = domain.dim();
    lsc(gamma, d) * domain.volume() * lambda.powf(gamma + 0.5 * d as f64)
}

/// Riesz mean over its Weyl leading term.
pub fn polya_ratio(domain: &Domain, bc: &BoundarySpec, gamma: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("polya ratio needs lambda > 0".into()));
    }
    Ok(riesz_mean(domain, bc, gamma, lambda)? / weyl_leading(domain, gamma, lambda))
}

/// Three evaluations of Tr^γ: direct, per-eigenvalue Beta identity, and
/// quadrature of the Beta-kernel integral over Tr^{γ′}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AizenmanLieb {
    pub direct: f64,
    pub integral_exact: f64,
    pub integral_quadrature: f64,
    pub quadrature_error: f64,
}

pub fn aizenman_lieb_check(domain: &Domain, bc: &BoundarySpec, gamma: f64, gamma_prime: f64, lambda: f64) -> Result<AizenmanLieb> {
    if !(gamma > gamma_prime && gamma_prime >= 0.0) {
        return Err(Error::InvalidArgument(format!("need gamma > gamma_prime >= 0, got ({gamma}, {gamma_prime})")));
    }
    let list = spectra::eigenvalues_below(domain, bc, list_cutoff(lambda.max(0.0)))?;
    let direct = list.riesz(gamma, lambda);
    let a = gamma - gamma_prime;
    let b = beta_euler(1.0 + gamma_prime, a)?;

    let mut exact = Kahan::default();
    for &(v, m) in &list.entries {
        if v >= lambda {
            break;
        }
        // ∫_{λ_k}^λ (λ−τ)^{a−1}(τ−λ_k)^{γ′} dτ = B(1+γ′, a)(λ−λ_k)^γ
        exact.add(m as f64 * b * (lambda - v).powf(gamma));
    }
    let integral_exact = exact.total() / b;

    // u = (λ−τ)^a turns the kernel into du/a; eigenvalues become breakpoints
    let below: Vec<(f64, u64)> = list.entries.iter().copied().filter(|e| e.0 < lambda).collect();
    let mut knots: Vec<f64> = below.iter().map(|e| (lambda - e.0).powf(a)).collect();
    knots.push(0.0);
    knots.push(lambda.powf(a));
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let inner = |tau: f64| -> f64 {
        let mut acc = Kahan::default();
        for &(v, m) in &below {
            if v >= tau {
                break;
            }
            acc.add(m as f64 * if gamma_prime == 0.0 { 1.0 } else { (tau - v).powf(gamma_prime) });
        }
        acc.total()
    };
    let scale = direct.abs().max(f64::MIN_POSITIVE);
    let n_panels = knots.len().saturating_sub(1).max(1);
    let mut total = Kahan::default();
    let mut err = 0.0;
    let mut converged = true;
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let width = hi - lo;
        // smoothstep map flattens the (hi − u)^{γ′} edge behaviour
        let f = |s: f64| {
            let u = lo + width * s * s * (3.0 - 2.0 * s);
            let jac = 6.0 * width * s * (1.0 - s);
            inner(lambda - u.powf(1.0 / a)) * jac
        };
        let r = quadrature::integrate(f, 0.0, 1.0, 1e-13 * scale / n_panels as f64, 1e-14, 400);
        converged &= r.converged;
        total.add(r.value);
        err += r.error;
    }
    let integral_quadrature = total.total() / (a * b);
    let quadrature_error = err / (a * b);
    if !converged {
        return Err(Error::Quadrature { value: integral_quadrature, error: quadrature_error });
    }
    Ok(AizenmanLieb { direct, integral_exact, integral_quadrature, quadrature_error })
}

/// Distance of a Riesz mean from its two-term Weyl asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoTermResidual {
    pub residual: f64,
    pub residual_over_boundary_term: f64,
    pub log_corrected_ratio: f64,
}

pub fn two_term_residual(domain: &Domain, bc: Bc, gamma: f64, lambda: f64) -> Result<TwoTermResidual> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("two-term residual needs lambda > 0".into()));
    }
    let AnalyticMetrics::Single(m) = metrics_analytic(domain)? else {
        return Err(Error::InvalidArgument("two-term residual needs a connected domain".into()));
    };
    let d = domain.dim();
    let src = Source::new(domain, &bc.into(), lambda)?;
    let trace = src.riesz(gamma, lambda);
    let w = weyl_prediction(gamma, d, m.volume, m.surface, lambda, bc);
    let residual = trace - w.two_term();
    let count = src.count(lambda, Convention::Strict) as f64;
    let lead0 = weyl_leading(domain, 0.0, lambda);
    let log_term = 1.0 + (m.inradius * lambda.sqrt()).ln().max(0.0);
    let log_corrected_ratio = (count - lead0).abs() / (m.surface * lambda.powf(0.5 * (d as f64 - 1.0)) * log_term);
    Ok(TwoTermResidual {
        residual,
        residual_over_boundary_term: if w.boundary_term > 0.0 { residual / w.boundary_term } else { f64::NAN },
        log_corrected_ratio,
    })
}

/// One row of a Riesz sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszReport {
    pub domain: String,
    pub bc: String,
    pub gamma: f64,
    pub lambda: f64,
    pub trace: f64,
    pub weyl_leading: f64,
    pub weyl_two_term: f64,
    pub polya_ratio: f64,
}

pub const REPORT_CSV_HEADER: &str = "domain,bc,gamma,lambda,trace,weyl1,weyl2,ratio";

impl RieszReport {
    pub fn csv_row(&self) -> String {
        format!(
            "\"{}\",{},{},{},{},{},{},{}",
            self.domain, self.bc, self.gamma, self.lambda, self.trace, self.weyl_leading, self.weyl_two_term, self.polya_ratio
        )
    }
}

/// Reports at every λ of a grid, sharing one spectrum.
pub fn riesz_reports(domain: &Domain, bc: &BoundarySpec, gamma: f64, lambdas: &[f64]) -> Result<Vec<RieszReport>> {
    check_gamma(gamma)?;
    let lmax = lambdas.iter().copied().fold(0.0, f64::max);
    let src = Source::new(domain, bc, lmax)?;
    let d = domain.dim();
    let surface = domain.surface();
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let trace = src.riesz(gamma, lambda);
            let lead = weyl_leading(domain, gamma, lambda);
            let two = match bc.uniform() {
                Some(b) => weyl_prediction(gamma, d, domain.volume(), surface, lambda, b).two_term(),
                None => f64::NAN,
            };
            RieszReport {
                domain: domain.id(),
                bc: bc.tag(),
                gamma,
                lambda,
                trace,
                weyl_leading: lead,
                weyl_two_term: two,
                polya_ratio: if lead > 0.0 { trace / lead } else { f64::NAN },
            }
        })
        .collect())
}

pub fn write_reports_csv<W: Write>(rows: &[RieszReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Extremes of the Pólya ratio over a parametrised family and a λ grid.
/// `sup_ratio` bounds r^D from below and `inf_ratio` bounds r^N from above;
/// neither is a value over all convex sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEstimate {
    pub family: String,
    pub gamma: f64,
    pub sup_ratio: f64,
    pub inf_ratio: f64,
    /// (parameter, λ) where the sup is attained
    pub argmax: (f64, f64),
    pub argmin: (f64, f64),
    pub params: usize,
    pub lambdas: usize,
}

pub fn family_r_estimate(
    family: &str,
    generator: impl Fn(f64) -> Domain,
    bc: &BoundarySpec,
    gamma: f64,
    lambda_grid: &[f64],
    param_grid: &[f64],
) -> Result<FamilyEstimate> {
    if lambda_grid.is_empty() || param_grid.is_empty() {
        return Err(Error::InvalidArgument("family estimate needs nonempty grids".into()));
    }
    let mut est = FamilyEstimate {
        family: family.to_string(),
        gamma,
        sup_ratio: f64::NEG_INFINITY,
        inf_ratio: f64::INFINITY,
        argmax: (f64::NAN, f64::NAN),
        argmin: (f64::NAN, f64::NAN),
        params: param_grid.len(),
        lambdas: lambda_grid.len(),
    };
    for &p in param_grid {
        let dom = generator(p);
        for r in riesz_reports(&dom, bc, gamma, lambda_grid)? {
            if r.polya_ratio > est.sup_ratio {
                est.sup_ratio = r.polya_ratio;
                est.argmax = (p, r.lambda);
            }
            if r.polya_ratio < est.inf_ratio {
                est.inf_ratio = r.polya_ratio;
                est.argmin = (p, r.lambda);
            }
        }
    }
    Ok(est)
}
