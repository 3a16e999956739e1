//! Planar convex polygons and closed-form metrics of the solvable bodies.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::spectra::Domain;
use crate::{Error, Result};

pub type Point = [f64; 2];

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Strictly convex polygon, counterclockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon2 {
    vertices: Vec<Point>,
}

impl Polygon2 {
    pub fn new(vertices: Vec<Point>) -> Result<Polygon2> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::DegeneratePolygon(format!("{n} vertices")));
        }
        if vertices.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::DegeneratePolygon("non-finite vertex".into()));
        }
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if cross(sub(b, a), sub(c, b)) <= 0.0 {
                return Err(Error::DegeneratePolygon(format!("not strictly convex counterclockwise at vertex {}", (i + 1) % n)));
            }
        }
        let p = Polygon2 { vertices };
        // a star-shaped winding can pass the turn test; reject total turning ≠ 2π
        if !(p.area() > 0.0) || p.turning() > 2.0 * PI + 1e-9 {
            return Err(Error::DegeneratePolygon("self-intersecting or zero area".into()));
        }
        Ok(p)
    }

    fn turning(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let e0 = self.edge(i);
                let e1 = self.edge((i + 1) % n);
                cross(e0, e1).atan2(dot(e0, e1))
            })
            .sum()
    }

    /// Convex hull of a point set, collinear points dropped.
    pub fn hull(points: &[Point]) -> Result<Polygon2> {
        let mut pts: Vec<Point> = points.to_vec();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return Err(Error::DegeneratePolygon("fewer than three distinct points".into()));
        }
        let mut lower: Vec<Point> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(sub(lower[lower.len() - 1], lower[lower.len() - 2]), sub(p, lower[lower.len() - 1])) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Point> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(sub(upper[upper.len() - 1], upper[upper.len() - 2]), sub(p, upper[upper.len() - 1])) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Polygon2::new(lower)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn edge(&self, i: usize) -> Point {
        let n = self.vertices.len();
        sub(self.vertices[(i + 1) % n], self.vertices[i])
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n).map(|i| cross(self.vertices[i], self.vertices[(i + 1) % n])).sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.vertices.len()).map(|i| norm(self.edge(i))).sum()
    }

    /// Half-planes n·x ≤ b with unit outward normals, one per edge.
    pub fn halfplanes(&self) -> Vec<(Point, f64)> {
        (0..self.vertices.len())
            .map(|i| {
                let e = self.edge(i);
                let l = norm(e);
                let n = [e[1] / l, -e[0] / l];
                (n, dot(n, self.vertices[i]))
            })
            .collect()
    }

    /// Support function max_{v} u·v.
    pub fn support(&self, u: Point) -> f64 {
        self.vertices.iter().map(|&v| dot(u, v)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Distance from a point to the closed polygon (0 inside).
    pub fn distance(&self, p: Point) -> f64 {
        let hp = self.halfplanes();
        if hp.iter().all(|(n, b)| dot(*n, p) <= *b) {
            return 0.0;
        }
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let e = self.edge(i);
                let t = (dot(sub(p, a), e) / dot(e, e)).clamp(0.0, 1.0);
                norm(sub(p, [a[0] + t * e[0], a[1] + t * e[1]]))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Chebyshev centre and inradius from all edge triples.
    pub fn chebyshev_center(&self) -> (Point, f64) {
        let hp = self.halfplanes();
        let n = hp.len();
        let mut best = ([0.0, 0.0], f64::NEG_INFINITY);
        let scale = self.perimeter();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    // n·x + r = b on three edges
                    let rows = [hp[i], hp[j], hp[k]];
                    let det = det3(rows.map(|(nn, _)| [nn[0], nn[1], 1.0]));
                    if det.abs() < 1e-14 {
                        continue;
                    }
                    let rhs = rows.map(|(_, b)| b);
                    let solve = |col: usize| {
                        let m = std::array::from_fn(|r| {
                            let mut row = [rows[r].0[0], rows[r].0[1], 1.0];
                            row[col] = rhs[r];
                            row
                        });
                        det3(m) / det
                    };
                    let (x, y, r) = (solve(0), solve(1), solve(2));
                    if r <= best.1 || r <= 0.0 {
                        continue;
                    }
                    if hp.iter().all(|(nn, b)| nn[0] * x + nn[1] * y + r <= b + 1e-12 * scale) {
                        best = ([x, y], r);
                    }
                }
            }
        }
        best
    }

    /// Minimal slab width and diameter by rotating calipers.
    pub fn width_and_diameter(&self) -> (f64, f64) {
        let v = &self.vertices;
        let n = v.len();
        let dist = |i: usize, p: Point| {
            let e = self.edge(i);
            cross(e, sub(p, v[i])) / norm(e)
        };
        let mut j = 1usize;
        let mut width = f64::INFINITY;
        let mut diam2 = 0.0f64;
        for i in 0..n {
            // advance the antipodal vertex while it moves away from edge i
            while dist(i, v[(j + 1) % n]) > dist(i, v[j]) {
                j = (j + 1) % n;
            }
            width = width.min(dist(i, v[j]));
            for p in [v[i], v[(i + 1) % n]] {
                for q in [v[j], v[(j + 1) % n], v[(j + n - 1) % n]] {
                    let d = sub(p, q);
                    diam2 = diam2.max(dot(d, d));
                }
            }
        }
        (width, diam2.sqrt())
    }

    pub fn parse(text: &str) -> Result<Polygon2> {
        let mut pts = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let xy: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("line {}: expected `x y`", no + 1)))?;
            if xy.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected `x y`", no + 1)));
            }
            pts.push([xy[0], xy[1]]);
        }
        Polygon2::new(pts)
    }

    pub fn to_text(&self) -> String {
        self.vertices.iter().map(|p| format!("{} {}\n", p[0], p[1])).collect()
    }

    pub fn regular(n: usize, circumradius: f64) -> Result<Polygon2> {
        Polygon2::new(
            (0..n)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    [circumradius * t.cos(), circumradius * t.sin()]
                })
                .collect(),
        )
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Polygon2> {
        Polygon2::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn rotated(&self, angle: f64) -> Polygon2 {
        let (s, c) = angle.sin_cos();
        Polygon2 { vertices: self.vertices.iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect() }
    }
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyMetrics {
    pub volume: f64,
    pub surface: f64,
    pub inradius: f64,
    pub width: f64,
    pub diameter: f64,
}

pub fn metrics(p: &Polygon2) -> BodyMetrics {
    let (width, diameter) = p.width_and_diameter();
    BodyMetrics { volume: p.area(), surface: p.perimeter(), inradius: p.chebyshev_center().1, width, diameter }
}

/// Metrics of a connected body, or one record per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AnalyticMetrics {
    Single(BodyMetrics),
    PerPart(Vec<BodyMetrics>),
}

pub fn metrics_analytic(domain: &Domain) -> Result<AnalyticMetrics> {
    domain.validate()?;
    fn single(d: &Domain) -> BodyMetrics {
        match d {
            Domain::Interval { length } => {
                BodyMetrics { volume: *length, surface: 2.0, inradius: 0.5 * length, width: *length, diameter: *length }
            }
            Domain::Box { lengths } => {
                let min = lengths.iter().copied().fold(f64::INFINITY, f64::min);
                BodyMetrics {
                    volume: d.volume(),
                    surface: d.surface(),
                    inradius: 0.5 * min,
                    width: min,
                    diameter: lengths.iter().map(|l| l * l).sum::<f64>().sqrt(),
                }
            }
            Domain::Disk { radius } | Domain::Ball { radius } => {
                BodyMetrics { volume: d.volume(), surface: d.surface(), inradius: *radius, width: 2.0 * radius, diameter: 2.0 * radius }
            }
            Domain::Product { cross, axis } => {
                let (a, b) = (single(cross), single(axis));
                BodyMetrics {
                    volume: a.volume * b.volume,
                    surface: a.surface * b.volume + a.volume * b.surface,
                    inradius: a.inradius.min(b.inradius),
                    width: a.width.min(b.width),
                    diameter: a.diameter.hypot(b.diameter),
                }
            }
            Domain::DisjointUnion { .. } => unreachable!("handled by the caller"),
        }
    }
    fn parts(d: &Domain, out: &mut Vec<BodyMetrics>) {
        match d {
            Domain::DisjointUnion { parts: ps } => ps.iter().for_each(|p| parts(p, out)),
            _ => out.push(single(d)),
        }
    }
    Ok(match domain {
        Domain::DisjointUnion { .. } => {
            let mut out = Vec::new();
            parts(domain, &mut out);
            AnalyticMetrics::PerPart(out)
        }
        _ => AnalyticMetrics::Single(single(domain)),
    })
}

/// Dilation to unit volume: returns (tΩ, t) with t = |Ω|^{−1/d}.
pub fn scale_to_unit_volume(domain: &Domain) -> Result<(Domain, f64)> {
    domain.validate()?;
    let t = domain.volume().powf(-1.0 / domain.dim() as f64);
    Ok((domain.scaled(t), t))
}

/// Ellipse {c + B u : |u| ≤ 1} stored by centre, semiaxes and the angle of
/// the major axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse2 {
    pub center: Point,
    pub semiaxes: (f64, f64),
    pub angle: f64,
}

impl Ellipse2 {
    /// Symmetric shape matrix B.
    pub fn shape(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        let (a, b) = self.semiaxes;
        [[a * c * c + b * s * s, (a - b) * c * s], [(a - b) * c * s, a * s * s + b * c * c]]
    }

    pub fn area(&self) -> f64 {
        PI * self.semiaxes.0 * self.semiaxes.1
    }

    /// Support function in direction u.
    pub fn support(&self, u: Point) -> f64 {
        let m = self.shape();
        let bu = [m[0][0] * u[0] + m[0][1] * u[1], m[1][0] * u[0] + m[1][1] * u[1]];
        dot(self.center, u) + norm(bu)
    }

    /// Gauge ‖B^{-1}(p − c)‖; ≤ 1 inside.
    pub fn gauge(&self, p: Point) -> f64 {
        let (s, c) = self.angle.sin_cos();
        let d = sub(p, self.center);
        let x = c * d[0] + s * d[1];
        let y = -s * d[0] + c * d[1];
        (x / self.semiaxes.0).hypot(y / self.semiaxes.1)
    }
}

/// Outcome of the post-hoc John inclusion checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JohnCheck {
    /// max over edges and sampled directions of h_E − h_Ω (≤ 0 when E ⊆ Ω)
    pub inner_excess: f64,
    /// max over vertices of the gauge of E (≤ 2 when Ω ⊆ 2E)
    pub outer_gauge: f64,
    pub inner_ok: bool,
    pub outer_ok: bool,
}

fn barrier(hp: &[(Point, f64)], x: &[f64; 5], mu: f64) -> f64 {
    let [p, q, r, c0, c1] = *x;
    let det = p * r - q * q;
    if !(p > 0.0 && det > 0.0) {
        return f64::INFINITY;
    }
    let mut f = -det.ln();
    for (n, b) in hp {
        let g = [p * n[0] + q * n[1], q * n[0] + r * n[1]];
        let s = b - (n[0] * c0 + n[1] * c1) - norm(g);
        if !(s > 0.0) {
            return f64::INFINITY;
        }
        f -= mu * s.ln();
    }
    f
}

fn barrier_grad(hp: &[(Point, f64)], x: &[f64; 5], mu: f64) -> [f64; 5] {
    let [p, q, r, _, _] = *x;
    let det = p * r - q * q;
    // −log det: gradient −B^{-1} in (p, q, r) with q counted twice
    let mut g = [-r / det, 2.0 * q / det, -p / det, 0.0, 0.0];
    for (n, b) in hp {
        let bn = [p * n[0] + q * n[1], q * n[0] + r * n[1]];
        let l = norm(bn);
        let s = b - (n[0] * x[3] + n[1] * x[4]) - l;
        let w = mu / s;
        g[0] += w * bn[0] * n[0] / l;
        g[1] += w * (bn[0] * n[1] + bn[1] * n[0]) / l;
        g[2] += w * bn[1] * n[1] / l;
        g[3] += w * n[0];
        g[4] += w * n[1];
    }
    g
}

fn barrier_hessian(hp: &[(Point, f64)], x: &[f64; 5], mu: f64) -> [[f64; 5]; 5] {
    let [p, q, r, c0, c1] = *x;
    let det = p * r - q * q;
    let dd = [r, -2.0 * q, p];
    let dd2 = [[0.0, 0.0, 1.0], [0.0, -2.0, 0.0], [1.0, 0.0, 0.0]];
    let mut h = [[0.0; 5]; 5];
    for i in 0..3 {
        for k in 0..3 {
            h[i][k] = dd[i] * dd[k] / (det * det) - dd2[i][k] / det;
        }
    }
    for (n, b) in hp {
        // Bn = J (p, q, r)
        let j = [[n[0], n[1], 0.0], [0.0, n[0], n[1]]];
        let v = [p * n[0] + q * n[1], q * n[0] + r * n[1]];
        let l = norm(v);
        let u = [v[0] / l, v[1] / l];
        let s = b - (n[0] * c0 + n[1] * c1) - l;
        let mut g = [0.0; 5];
        for i in 0..3 {
            g[i] = u[0] * j[0][i] + u[1] * j[1][i];
        }
        g[3] = n[0];
        g[4] = n[1];
        // (I − uuᵀ)/l, the curvature of |Bn|
        let pm = [[(1.0 - u[0] * u[0]) / l, -u[0] * u[1] / l], [-u[0] * u[1] / l, (1.0 - u[1] * u[1]) / l]];
        for i in 0..5 {
            for k in 0..5 {
                h[i][k] += mu * g[i] * g[k] / (s * s);
            }
        }
        for i in 0..3 {
            for k in 0..3 {
                let mut c = 0.0;
                for a in 0..2 {
                    for bb in 0..2 {
                        c += j[a][i] * pm[a][bb] * j[bb][k];
                    }
                }
                h[i][k] += mu * c / s;
            }
        }
    }
    h
}

#[allow(clippy::needless_range_loop)]
fn solve5(mut a: [[f64; 5]; 5], mut b: [f64; 5]) -> Option<[f64; 5]> {
    for col in 0..5 {
        let piv = (col..5).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..5 {
            let f = a[row][col] / a[col][col];
            for k in col..5 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 5];
    for row in (0..5).rev() {
        let s: f64 = (row + 1..5).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Maximum-area inscribed ellipse by a log-barrier path with damped Newton
/// steps, followed by inclusion checks at the vertices and at 720 sampled
/// support directions.
pub fn john_inner_ellipse(poly: &Polygon2) -> Result<(Ellipse2, JohnCheck)> {
    // normalise to unit diameter around the Chebyshev centre
    let (c, rin) = poly.chebyshev_center();
    let (_, diam) = poly.width_and_diameter();
    let s = 1.0 / diam;
    let local: Vec<Point> = poly.vertices.iter().map(|v| [(v[0] - c[0]) * s, (v[1] - c[1]) * s]).collect();
    let lp = Polygon2 { vertices: local };
    let hp = lp.halfplanes();
    let m = hp.len() as f64;
    let r0 = 0.9 * rin * s;
    let mut x = [r0, 0.0, r0, 0.0, 0.0];
    let mut mu = 1.0;
    let mut iterations = 0usize;
    while mu > 1e-11 / m {
        for _ in 0..100 {
            iterations += 1;
            let g = barrier_grad(&hp, &x, mu);
            let h = barrier_hessian(&hp, &x, mu);
            let neg = g.map(|v| -v);
            let dir = match solve5(h, neg) {
                Some(d) if dot5(&d, &g) < 0.0 => d,
                _ => neg,
            };
            let decrement = -dot5(&dir, &g);
            if decrement < 1e-20 {
                break;
            }
            let f0 = barrier(&hp, &x, mu);
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-12 {
                let trial: [f64; 5] = std::array::from_fn(|i| x[i] + t * dir[i]);
                let ft = barrier(&hp, &trial, mu);
                if ft.is_finite() && ft <= f0 - 0.25 * t * decrement {
                    x = trial;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved || decrement < 1e-16 {
                break;
            }
        }
        mu *= 0.2;
    }
    let [p, q, r, c0, c1] = x;
    if !(p > 0.0 && p * r - q * q > 0.0) {
        return Err(Error::Optimizer { iterations, best: p * r - q * q });
    }
    // eigen-decomposition of the 2×2 shape matrix
    let tr = 0.5 * (p + r);
    let disc = (0.25 * (p - r).powi(2) + q * q).sqrt();
    let (a, b) = (tr + disc, tr - disc);
    let angle = if q.abs() < 1e-300 && p >= r { 0.0 } else { 0.5 * (2.0 * q).atan2(p - r) };
    let e = Ellipse2 { center: [c0 / s + c[0], c1 / s + c[1]], semiaxes: (a / s, b / s), angle };
    let check = john_check(poly, &e);
    Ok((e, check))
}

fn dot5(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// E ⊆ Ω and Ω ⊆ c + 2(E − c), by edge normals, vertices and 720 directions.
pub fn john_check(poly: &Polygon2, e: &Ellipse2) -> JohnCheck {
    let scale = poly.width_and_diameter().1;
    let mut inner_excess = f64::NEG_INFINITY;
    for (n, b) in poly.halfplanes() {
        inner_excess = inner_excess.max(e.support(n) - b);
    }
    let mut outer_gauge = poly.vertices.iter().map(|&v| e.gauge(v)).fold(0.0, f64::max);
    for k in 0..720 {
        let t = 2.0 * PI * k as f64 / 720.0;
        let u = [t.cos(), t.sin()];
        inner_excess = inner_excess.max(e.support(u) - poly.support(u));
        // h_Ω(u) ≤ u·c + 2(h_E(u) − u·c) with slack expressed as a gauge
        let he = e.support(u) - dot(e.center, u);
        let hp = poly.support(u) - dot(e.center, u);
        outer_gauge = outer_gauge.max(hp / he);
    }
    let tol = 1e-6;
    JohnCheck { inner_excess, outer_gauge, inner_ok: inner_excess <= tol * scale, outer_ok: outer_gauge <= 2.0 + tol }
}

/// Hausdorff distance between two closed convex polygons.
pub fn hausdorff_distance(p: &Polygon2, q: &Polygon2) -> f64 {
    let d = |a: &Polygon2, b: &Polygon2| a.vertices.iter().map(|&v| b.distance(v)).fold(0.0, f64::max);
    d(p, q).max(d(q, p))
}

/// Convex hull of `points` uniform points in the unit disk; hulls with
/// fewer than five vertices are redrawn.
pub fn random_polygon(rng: &mut ChaCha8Rng, points: usize) -> Polygon2 {
    loop {
        let pts: Vec<Point> = (0..points)
            .map(|_| {
                let r = rng.gen::<f64>().sqrt();
                let t = 2.0 * PI * rng.gen::<f64>();
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        if let Ok(p) = Polygon2::hull(&pts) {
            if p.len() >= 5 {
                return p;
            }
        }
    }
}

/// `count` seeded random polygons with 6..=40 sample points each.
pub fn random_polygons(seed: u64, count: usize) -> Vec<Polygon2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(6..=40);
            random_polygon(&mut rng, n)
        })
        .collect()
}
