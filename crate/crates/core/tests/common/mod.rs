//! Independent reference computations for integration tests. Nothing here
//! calls into the library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Γ(x), x > 0: shift above 30 and apply Stirling's series.
pub fn gamma_oracle(x: f64) -> f64 {
    let mut shift = 1.0;
    let mut z = x;
    while z < 30.0 {
        shift *= z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv / 12.0 - inv * inv2 / 360.0 + inv * inv2 * inv2 / 1260.0 - inv * inv2.powi(3) / 1680.0;
    ((z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series).exp() / shift
}

/// Surface area of the unit sphere in R^d, d ≤ 3.
pub fn sphere_area(d: u32) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("sphere area oracle only for d <= 3"),
    }
}

/// (2π)^{−d} ∫ (1 − |ξ|²)_+^γ dξ with r = sin θ.
pub fn lsc_phase_space(gamma: f64, d: u32) -> f64 {
    let radial = simpson(|t: f64| t.cos().powf(2.0 * gamma + 1.0) * t.sin().powi(d as i32 - 1), 0.0, PI / 2.0, 4000);
    sphere_area(d) * radial / (2.0 * PI).powi(d as i32)
}

/// J_n(z) by its power series; accurate for moderate z.
pub fn bessel_j_series(n: u32, z: f64) -> f64 {
    let half = 0.5 * z;
    let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    for m in 1..200 {
        term *= -half * half / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Root of f in [a, b] by bisection, f(a)·f(b) < 0.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    assert!(fa * f(b) < 0.0, "no sign change on [{a}, {b}]");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-16 * b.abs() {
            break;
        }
    }
    0.5 * (a + b)
}

/// Face conditions at the two ends of an interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ends {
    DD,
    NN,
    DN,
}

/// Interval eigenvalues below `cutoff`, by their closed forms.
pub fn interval_eigs(len: f64, ends: Ends, cutoff: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let v = match ends {
            Ends::DD => (PI * (k + 1) as f64 / len).powi(2),
            Ends::NN => (PI * k as f64 / len).powi(2),
            Ends::DN => (PI * (k as f64 + 0.5) / len).powi(2),
        };
        if v >= cutoff {
            return out;
        }
        out.push(v);
        k += 1;
    }
}

/// All sums a + b < cutoff, by a double loop.
pub fn pair_sums(a: &[f64], b: &[f64], cutoff: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &x in a {
        for &y in b {
            if x + y < cutoff {
                out.push(x + y);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Box eigenvalues below cutoff by nested enumeration.
pub fn box_eigs(lengths: &[f64], ends: Ends, cutoff: f64) -> Vec<f64> {
    let mut acc = vec![0.0];
    for &l in lengths {
        let axis = interval_eigs(l, ends, cutoff);
        acc = pair_sums(&acc, &axis, cutoff);
    }
    acc
}

/// Σ (λ − v)_+^γ over a plain list, with (·)^0 read as the strict count.
pub fn riesz_sum(values: &[f64], gamma: f64, lambda: f64) -> f64 {
    values.iter().filter(|&&v| v < lambda).map(|&v| if gamma == 0.0 { 1.0 } else { (lambda - v).powf(gamma) }).sum()
}

/// Γ(γ+1)/((4π)^{d/2} Γ(1+γ+d/2)) from the oracle Gamma.
pub fn lsc_oracle(gamma: f64, d: u32) -> f64 {
    let h = 0.5 * d as f64;
    gamma_oracle(gamma + 1.0) / ((4.0 * PI).powf(h) * gamma_oracle(1.0 + gamma + h))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
