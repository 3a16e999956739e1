use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Bc, Error, Result};

/// An explicitly solvable region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Interval { length: f64 },
    Box { lengths: Vec<f64> },
    Disk { radius: f64 },
    Ball { radius: f64 },
    Product { cross: std::boxed::Box<Domain>, axis: std::boxed::Box<Domain> },
    DisjointUnion { parts: Vec<Domain> },
}

/// Boundary conditions for a [`Domain`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySpec {
    Dirichlet,
    Neumann,
    /// one condition on the cross-section boundary, one on the axis ends
    MixedProduct {
        cross_bc: Bc,
        axis_bc: Bc,
    },
    /// per-axis (low, high) face conditions for intervals and boxes
    BoxFaces(Vec<[Bc; 2]>),
}

impl From<Bc> for BoundarySpec {
    fn from(bc: Bc) -> Self {
        match bc {
            Bc::Dirichlet => BoundarySpec::Dirichlet,
            Bc::Neumann => BoundarySpec::Neumann,
        }
    }
}

impl BoundarySpec {
    /// The uniform condition, if this spec is one.
    pub fn uniform(&self) -> Option<Bc> {
        match self {
            BoundarySpec::Dirichlet => Some(Bc::Dirichlet),
            BoundarySpec::Neumann => Some(Bc::Neumann),
            _ => None,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            BoundarySpec::Dirichlet => "D".into(),
            BoundarySpec::Neumann => "N".into(),
            BoundarySpec::MixedProduct { cross_bc, axis_bc } => format!("{cross_bc}{axis_bc}"),
            BoundarySpec::BoxFaces(f) => f.iter().map(|[a, b]| format!("{a}{b}")).collect::<Vec<_>>().join("|"),
        }
    }

    pub fn parse(s: &str) -> Result<BoundarySpec> {
        let s = s.trim();
        if let Some(bc) = Bc::parse(s) {
            return Ok(bc.into());
        }
        let bad = || Error::Parse(format!("unknown boundary spec {s:?}"));
        if s.contains('|') || s.contains(',') {
            let faces = s
                .split(['|', ','])
                .map(|p| {
                    let p: Vec<char> = p.trim().chars().collect();
                    match p.as_slice() {
                        [a, b] => Ok([Bc::parse(&a.to_string()).ok_or_else(bad)?, Bc::parse(&b.to_string()).ok_or_else(bad)?]),
                        _ => Err(bad()),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(BoundarySpec::BoxFaces(faces));
        }
        let c: Vec<char> = s.chars().collect();
        match c.as_slice() {
            [a, b] => Ok(BoundarySpec::MixedProduct {
                cross_bc: Bc::parse(&a.to_string()).ok_or_else(bad)?,
                axis_bc: Bc::parse(&b.to_string()).ok_or_else(bad)?,
            }),
            _ => Err(bad()),
        }
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

impl Domain {
    pub fn interval(length: f64) -> Domain {
        Domain::Interval { length }
    }

    pub fn rect(a: f64, b: f64) -> Domain {
        Domain::Box { lengths: vec![a, b] }
    }

    pub fn cuboid(lengths: &[f64]) -> Domain {
        Domain::Box { lengths: lengths.to_vec() }
    }

    pub fn disk(radius: f64) -> Domain {
        Domain::Disk { radius }
    }

    pub fn ball(radius: f64) -> Domain {
        Domain::Ball { radius }
    }

    pub fn product(cross: Domain, axis: Domain) -> Domain {
        Domain::Product { cross: std::boxed::Box::new(cross), axis: std::boxed::Box::new(axis) }
    }

    /// Disk of radius r times an interval of length l.
    pub fn cylinder(r: f64, l: f64) -> Domain {
        Domain::product(Domain::disk(r), Domain::interval(l))
    }

    pub fn union(parts: Vec<Domain>) -> Domain {
        Domain::DisjointUnion { parts }
    }

    pub fn dim(&self) -> u32 {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Box { lengths } => lengths.len() as u32,
            Domain::Disk { .. } => 2,
            Domain::Ball { .. } => 3,
            Domain::Product { cross, axis } => cross.dim() + axis.dim(),
            Domain::DisjointUnion { parts } => parts.first().map_or(0, Domain::dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{what} must be positive and finite, got {x}")))
            }
        };
        match self {
            Domain::Interval { length } => pos(*length, "interval length"),
            Domain::Box { lengths } => {
                if lengths.is_empty() {
                    return Err(Error::InvalidArgument("box needs at least one side".into()));
                }
                lengths.iter().try_for_each(|l| pos(*l, "box side"))
            }
            Domain::Disk { radius } => pos(*radius, "disk radius"),
            Domain::Ball { radius } => pos(*radius, "ball radius"),
            Domain::Product { cross, axis } => {
                cross.validate()?;
                axis.validate()
            }
            Domain::DisjointUnion { parts } => {
                let first = parts.first().ok_or_else(|| Error::InvalidArgument("empty disjoint union".into()))?;
                for p in parts {
                    p.validate()?;
                    if p.dim() != first.dim() {
                        return Err(Error::InvalidArgument("disjoint union parts differ in dimension".into()));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Domain::Interval { length } => *length,
            Domain::Box { lengths } => lengths.iter().product(),
            Domain::Disk { radius } => PI * radius * radius,
            Domain::Ball { radius } => 4.0 / 3.0 * PI * radius.powi(3),
            Domain::Product { cross, axis } => cross.volume() * axis.volume(),
            Domain::DisjointUnion { parts } => parts.iter().map(Domain::volume).sum(),
        }
    }

    /// H^{d−1} of the boundary; two points for an interval.
    pub fn surface(&self) -> f64 {
        match self {
            Domain::Interval { .. } => 2.0,
            Domain::Box { lengths } => {
                let v: f64 = lengths.iter().product();
                if lengths.len() == 1 {
                    2.0
                } else {
                    lengths.iter().map(|l| 2.0 * v / l).sum()
                }
            }
            Domain::Disk { radius } => 2.0 * PI * radius,
            Domain::Ball { radius } => 4.0 * PI * radius * radius,
            Domain::Product { cross, axis } => cross.surface() * axis.volume() + cross.volume() * axis.surface(),
            Domain::DisjointUnion { parts } => parts.iter().map(Domain::surface).sum(),
        }
    }

    pub fn component_count(&self) -> usize {
        match self {
            Domain::DisjointUnion { parts } => parts.iter().map(Domain::component_count).sum(),
            _ => 1,
        }
    }

    /// The domain dilated by t.
    pub fn scaled(&self, t: f64) -> Domain {
        match self {
            Domain::Interval { length } => Domain::Interval { length: length * t },
            Domain::Box { lengths } => Domain::Box { lengths: lengths.iter().map(|l| l * t).collect() },
            Domain::Disk { radius } => Domain::Disk { radius: radius * t },
            Domain::Ball { radius } => Domain::Ball { radius: radius * t },
            Domain::Product { cross, axis } => Domain::product(cross.scaled(t), axis.scaled(t)),
            Domain::DisjointUnion { parts } => Domain::union(parts.iter().map(|p| p.scaled(t)).collect()),
        }
    }

    /// Canonical text form, readable by [`Domain::parse`].
    pub fn id(&self) -> String {
        match self {
            Domain::Interval { length } => format!("interval:{}", fmt_f(*length)),
            Domain::Box { lengths } => {
                format!("box:{}", lengths.iter().map(|l| fmt_f(*l)).collect::<Vec<_>>().join(","))
            }
            Domain::Disk { radius } => format!("disk:{}", fmt_f(*radius)),
            Domain::Ball { radius } => format!("ball:{}", fmt_f(*radius)),
            Domain::Product { cross, axis } => match (cross.as_ref(), axis.as_ref()) {
                (Domain::Disk { radius }, Domain::Interval { length }) => {
                    format!("cylinder:{},{}", fmt_f(*radius), fmt_f(*length))
                }
                _ => format!("product({};{})", cross.id(), axis.id()),
            },
            Domain::DisjointUnion { parts } => {
                format!("union({})", parts.iter().map(Domain::id).collect::<Vec<_>>().join(";"))
            }
        }
    }

    /// Parses `interval:L`, `box:a,b,..`, `disk:R`, `ball:R`, `cylinder:R,L`,
    /// `product(A;B)` and `union(A;B;..)`.
    pub fn parse(s: &str) -> Result<Domain> {
        let s = s.trim();
        let bad = |why: &str| Error::Parse(format!("domain {s:?}: {why}"));
        let nums = |body: &str| -> Result<Vec<f64>> {
            body.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad("expected a number"))).collect()
        };
        let d = if let Some(inner) = s.strip_prefix("product(").and_then(|r| r.strip_suffix(')')) {
            let parts = split_top(inner);
            if parts.len() != 2 {
                return Err(bad("product needs exactly two factors"));
            }
            Domain::product(Domain::parse(parts[0])?, Domain::parse(parts[1])?)
        } else if let Some(inner) = s.strip_prefix("union(").and_then(|r| r.strip_suffix(')')) {
            Domain::union(split_top(inner).into_iter().map(Domain::parse).collect::<Result<_>>()?)
        } else {
            let (tag, body) = s.split_once(':').ok_or_else(|| bad("missing ':'"))?;
            let v = nums(body)?;
            let one = |v: &[f64]| if v.len() == 1 { Ok(v[0]) } else { Err(bad("expected one number")) };
            match tag.trim() {
                "interval" => Domain::interval(one(&v)?),
                "box" => Domain::cuboid(&v),
                "disk" => Domain::disk(one(&v)?),
                "ball" => Domain::ball(one(&v)?),
                "cylinder" => {
                    if v.len() != 2 {
                        return Err(bad("cylinder needs R,L"));
                    }
                    Domain::cylinder(v[0], v[1])
                }
                other => return Err(Error::Parse(format!("unknown domain tag {other:?}"))),
            }
        };
        d.validate()?;
        Ok(d)
    }
}

fn split_top(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ';' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}
