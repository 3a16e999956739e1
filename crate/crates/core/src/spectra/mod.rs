//! Exact Laplacian spectra of intervals, boxes, disks, balls, products
//! and disjoint unions.

pub mod bessel;
mod domain;
pub mod lattice;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use bessel::{bessel_zero, BesselZeroTable, ZeroKind};
pub use domain::{BoundarySpec, Domain};

use crate::semiclassics::lsc;
use crate::{Bc, Error, Result};
use lattice::{Axis, Kahan};

/// Default cap on the number of stored eigenvalues.
pub const DEFAULT_BUDGET: u64 = 50_000_000;

/// Relative distance below which two eigenvalues are merged.
pub const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectrumOptions {
    pub budget: u64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { budget: DEFAULT_BUDGET }
    }
}

/// Counting convention: `Strict` counts λ_k < λ, `Closed` counts λ_k ≤ λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    Strict,
    Closed,
}

/// Sorted eigenvalues with multiplicities, complete below `cutoff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueList {
    pub entries: Vec<(f64, u64)>,
    pub cutoff: f64,
    pub complete: bool,
}

impl EigenvalueList {
    fn from_values(mut values: Vec<f64>, cutoff: f64) -> EigenvalueList {
        values.sort_unstable_by(f64::total_cmp);
        let mut entries: Vec<(f64, u64)> = Vec::new();
        for v in values {
            match entries.last_mut() {
                Some((w, m)) if v - *w <= MERGE_TOL * w.abs().max(f64::MIN_POSITIVE) || v == *w => *m += 1,
                _ => entries.push((v, 1)),
            }
        }
        EigenvalueList { entries, cutoff, complete: true }
    }

    fn from_weighted(mut values: Vec<(f64, u64)>, cutoff: f64) -> EigenvalueList {
        values.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut entries: Vec<(f64, u64)> = Vec::new();
        for (v, k) in values {
            match entries.last_mut() {
                Some((w, m)) if v - *w <= MERGE_TOL * w.abs() || v == *w => *m += k,
                _ => entries.push((v, k)),
            }
        }
        EigenvalueList { entries, cutoff, complete: true }
    }

    /// Number of eigenvalues counted with multiplicity.
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn first(&self) -> Option<f64> {
        self.entries.first().map(|e| e.0)
    }

    /// k-th eigenvalue (1-based, with multiplicity).
    pub fn kth(&self, k: u64) -> Option<f64> {
        let mut seen = 0;
        for &(v, m) in &self.entries {
            seen += m;
            if seen >= k {
                return Some(v);
            }
        }
        None
    }

    fn check_range(&self, lambda: f64) {
        assert!(lambda <= self.cutoff, "lambda {lambda} beyond the list cutoff {}", self.cutoff);
    }

    /// Eigenvalue count below λ. Panics if λ exceeds the cutoff, or equals it
    /// under the closed convention.
    pub fn counting(&self, lambda: f64, conv: Convention) -> u64 {
        self.check_range(lambda);
        if conv == Convention::Closed {
            assert!(lambda < self.cutoff, "closed count needs lambda below the cutoff");
        }
        let end = match conv {
            Convention::Strict => self.entries.partition_point(|e| e.0 < lambda),
            Convention::Closed => self.entries.partition_point(|e| e.0 <= lambda),
        };
        self.entries[..end].iter().map(|e| e.1).sum()
    }

    /// Multiplicity of λ in the list (0 if absent).
    pub fn multiplicity_at(&self, lambda: f64) -> u64 {
        self.entries.iter().filter(|e| e.0 == lambda).map(|e| e.1).sum()
    }

    /// Σ (λ − λ_k)_+^γ, ascending order, compensated. γ = 0 is strict counting.
    pub fn riesz(&self, gamma: f64, lambda: f64) -> f64 {
        self.check_range(lambda);
        if gamma == 0.0 {
            return self.counting(lambda, Convention::Strict) as f64;
        }
        let mut acc = Kahan::default();
        for &(v, m) in &self.entries {
            if v >= lambda {
                break;
            }
            acc.add(m as f64 * lattice::pow_gamma(lambda - v, gamma));
        }
        acc.total()
    }

    /// Writes `value,multiplicity` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "value,multiplicity")?;
        for (v, m) in &self.entries {
            writeln!(w, "{v:.17e},{m}")?;
        }
        Ok(())
    }
}

/// Axis factors when (domain, bc) is a box lattice; `None` otherwise.
pub fn lattice_axes(domain: &Domain, bc: &BoundarySpec) -> Result<Option<Vec<Axis>>> {
    let faces = |lengths: &[f64]| -> Result<Option<Vec<Axis>>> {
        let ends: Vec<[Bc; 2]> = match bc {
            BoundarySpec::Dirichlet => vec![[Bc::Dirichlet; 2]; lengths.len()],
            BoundarySpec::Neumann => vec![[Bc::Neumann; 2]; lengths.len()],
            BoundarySpec::BoxFaces(f) => {
                if f.len() != lengths.len() {
                    return Err(Error::InvalidArgument(format!("{} face pairs for a {}-dimensional box", f.len(), lengths.len())));
                }
                f.clone()
            }
            BoundarySpec::MixedProduct { .. } => return Err(Error::MixedOnNonProduct),
        };
        Ok(Some(lengths.iter().zip(ends).map(|(l, e)| Axis::new(*l, e)).collect()))
    };
    match domain {
        Domain::Interval { length } => faces(&[*length]),
        Domain::Box { lengths } => faces(lengths),
        Domain::Product { cross, axis } => {
            let (cb, ab) = product_bcs(bc)?;
            match (lattice_axes(cross, &cb)?, lattice_axes(axis, &ab)?) {
                (Some(mut a), Some(b)) => {
                    a.extend(b);
                    Ok(Some(a))
                }
                _ => Ok(None),
            }
        }
        Domain::DisjointUnion { .. } => Ok(None),
        _ => match bc {
            BoundarySpec::MixedProduct { .. } => Err(Error::MixedOnNonProduct),
            BoundarySpec::BoxFaces(_) => Err(Error::InvalidArgument("face conditions need a box".into())),
            _ => Ok(None),
        },
    }
}

/// Conditions inherited by the two factors of a product.
pub fn product_bcs(bc: &BoundarySpec) -> Result<(BoundarySpec, BoundarySpec)> {
    match bc {
        BoundarySpec::Dirichlet | BoundarySpec::Neumann => Ok((bc.clone(), bc.clone())),
        BoundarySpec::MixedProduct { cross_bc, axis_bc } => Ok(((*cross_bc).into(), (*axis_bc).into())),
        BoundarySpec::BoxFaces(_) => Err(Error::InvalidArgument("face conditions need a box".into())),
    }
}

fn check_pair(domain: &Domain, bc: &BoundarySpec) -> Result<()> {
    domain.validate()?;
    match (domain, bc) {
        (Domain::Product { .. }, _) => Ok(()),
        (Domain::DisjointUnion { parts }, BoundarySpec::MixedProduct { .. }) => parts.iter().try_for_each(|p| check_pair(p, bc)),
        (_, BoundarySpec::MixedProduct { .. }) => Err(Error::MixedOnNonProduct),
        (Domain::Interval { .. } | Domain::Box { .. }, _) => Ok(()),
        (_, BoundarySpec::BoxFaces(_)) => Err(Error::InvalidArgument("face conditions need a box".into())),
        _ => Ok(()),
    }
}

/// Weyl-type upper estimate of the eigenvalue count below `cutoff`.
pub fn estimated_count(domain: &Domain, cutoff: f64) -> f64 {
    let d = domain.dim();
    let lead = lsc(0.0, d) * domain.volume() * cutoff.powf(0.5 * d as f64);
    let bdry = 0.25 * lsc(0.0, d - 1) * domain.surface() * cutoff.powf(0.5 * (d as f64 - 1.0));
    lead + bdry + domain.component_count() as f64
}

fn budget_error(estimate: f64, budget: u64) -> Error {
    Error::BudgetExceeded { estimate: estimate.min(u64::MAX as f64) as u64, budget }
}

/// Complete list of eigenvalues below `cutoff` with the default budget.
pub fn eigenvalues_below(domain: &Domain, bc: &BoundarySpec, cutoff: f64) -> Result<EigenvalueList> {
    eigenvalues_below_with(domain, bc, cutoff, &SpectrumOptions::default())
}

pub fn eigenvalues_below_with(domain: &Domain, bc: &BoundarySpec, cutoff: f64, opts: &SpectrumOptions) -> Result<EigenvalueList> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::InvalidArgument(format!("cutoff must be positive, got {cutoff}")));
    }
    check_pair(domain, bc)?;
    let est = estimated_count(domain, cutoff);
    if est > 1.1 * opts.budget as f64 + 16.0 {
        return Err(budget_error(est, opts.budget));
    }
    let weighted = collect(domain, bc, cutoff, opts.budget)?;
    Ok(EigenvalueList::from_weighted(weighted, cutoff))
}

fn collect(domain: &Domain, bc: &BoundarySpec, cutoff: f64, budget: u64) -> Result<Vec<(f64, u64)>> {
    if let Some(axes) = lattice_axes(domain, bc)? {
        let v = lattice::values(&axes, cutoff, budget).ok_or_else(|| budget_error(budget as f64 + 1.0, budget))?;
        let l = EigenvalueList::from_values(v, cutoff);
        return Ok(l.entries);
    }
    let out = match domain {
        Domain::Disk { radius } => radial(*radius, bc, cutoff, false)?,
        Domain::Ball { radius } => radial(*radius, bc, cutoff, true)?,
        Domain::Product { cross, axis } => {
            let (cb, ab) = product_bcs(bc)?;
            let a = EigenvalueList::from_weighted(collect(cross, &cb, cutoff, budget)?, cutoff);
            let b = EigenvalueList::from_weighted(collect(axis, &ab, cutoff, budget)?, cutoff);
            let mut out = Vec::new();
            let mut total = 0u64;
            for &(x, mx) in &a.entries {
                for &(y, my) in &b.entries {
                    let v = x + y;
                    if v >= cutoff {
                        break;
                    }
                    total += mx * my;
                    if total > budget {
                        return Err(budget_error(total as f64, budget));
                    }
                    out.push((v, mx * my));
                }
            }
            out
        }
        Domain::DisjointUnion { parts } => {
            let mut out = Vec::new();
            for p in parts {
                out.extend(collect(p, bc, cutoff, budget)?);
            }
            if out.iter().map(|e| e.1).sum::<u64>() > budget {
                return Err(budget_error(out.len() as f64, budget));
            }
            out
        }
        Domain::Interval { .. } | Domain::Box { .. } => unreachable!("boxes are lattices"),
    };
    Ok(out)
}

/// Disk (m ≥ 0, multiplicity 2 for m ≥ 1) or ball (l ≥ 0, multiplicity 2l+1).
fn radial(radius: f64, bc: &BoundarySpec, cutoff: f64, ball: bool) -> Result<Vec<(f64, u64)>> {
    let bc = bc.uniform().ok_or_else(|| Error::InvalidArgument("disks and balls take a uniform boundary condition".into()))?;
    let kind = match (bc, ball) {
        (Bc::Dirichlet, _) => ZeroKind::J,
        (Bc::Neumann, false) => ZeroKind::Jprime,
        (Bc::Neumann, true) => ZeroKind::SphericalJprime,
    };
    let zmax = radius * cutoff.sqrt();
    let set = bessel::zeros_below(kind, ball, zmax)?;
    let mut out = Vec::new();
    if bc == Bc::Neumann {
        out.push((0.0, 1));
    }
    for (n, zs) in set.orders.iter().enumerate() {
        let mult = if ball {
            2 * n as u64 + 1
        } else if n == 0 {
            1
        } else {
            2
        };
        for &z in zs {
            if z >= zmax {
                break;
            }
            let v = (z / radius).powi(2);
            if v < cutoff {
                out.push((v, mult));
            }
        }
    }
    Ok(out)
}

/// Smallest eigenvalue; 0 for any spectrum with a constant mode.
pub fn first_eigenvalue(domain: &Domain, bc: &BoundarySpec) -> Result<f64> {
    check_pair(domain, bc)?;
    if let Some(axes) = lattice_axes(domain, bc)? {
        return Ok(axes.iter().map(|a| a.value(0)).sum());
    }
    match domain {
        Domain::Disk { radius } | Domain::Ball { radius } => match bc.uniform() {
            Some(Bc::Neumann) => Ok(0.0),
            Some(Bc::Dirichlet) => {
                let z = if matches!(domain, Domain::Ball { .. }) { std::f64::consts::PI } else { bessel_zero(0.0, 1, ZeroKind::J)? };
                Ok((z / radius).powi(2))
            }
            None => Err(Error::InvalidArgument("disks and balls take a uniform boundary condition".into())),
        },
        Domain::Product { cross, axis } => {
            let (cb, ab) = product_bcs(bc)?;
            Ok(first_eigenvalue(cross, &cb)? + first_eigenvalue(axis, &ab)?)
        }
        Domain::DisjointUnion { parts } => parts.iter().map(|p| first_eigenvalue(p, bc)).try_fold(f64::INFINITY, |m, v| Ok(m.min(v?))),
        Domain::Interval { .. } | Domain::Box { .. } => unreachable!("boxes are lattices"),
    }
}

/// k-th eigenvalue (1-based, with multiplicity).
pub fn kth_eigenvalue(domain: &Domain, bc: &BoundarySpec, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("eigenvalue index starts at 1".into()));
    }
    let l1 = first_eigenvalue(domain, bc)?;
    let mut cutoff = (2.0 * l1).max(1.0 / domain.volume().powf(2.0 / domain.dim() as f64));
    for _ in 0..200 {
        let list = eigenvalues_below(domain, bc, cutoff)?;
        if let Some(v) = list.kth(k) {
            return Ok(v);
        }
        cutoff *= 2.0;
    }
    Err(Error::InvalidArgument(format!("eigenvalue {k} not reached")))
}

/// Result of a finite size perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityProbe {
    pub lambda_k: f64,
    pub lambda_k_perturbed: f64,
    pub difference: f64,
    /// difference / ε (0 when ε = 0)
    pub modulus: f64,
}

/// Compares λ_k of the domain with λ_k of its dilation by 1 + ε.
pub fn continuity_probe(domain: &Domain, bc: &BoundarySpec, k: u64, epsilon: f64) -> Result<ContinuityProbe> {
    if !(0.0..0.1).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 0.1), got {epsilon}")));
    }
    let a = kth_eigenvalue(domain, bc, k)?;
    let b = if epsilon == 0.0 { a } else { kth_eigenvalue(&domain.scaled(1.0 + epsilon), bc, k)? };
    let difference = (b - a).abs();
    Ok(ContinuityProbe { lambda_k: a, lambda_k_perturbed: b, difference, modulus: if epsilon == 0.0 { 0.0 } else { difference / epsilon } })
}
