//! Separable spectra of boxes: one-dimensional factors c·(i + s)², i ≥ 0.

use std::f64::consts::PI;

use crate::Bc;

/// Eigenvalues c·(i + s)² of an interval of length ℓ, with c = (π/ℓ)².
/// s = 1 for (D,D), 0 for (N,N), 1/2 for mixed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub c: f64,
    pub s: f64,
}

impl Axis {
    pub fn new(length: f64, ends: [Bc; 2]) -> Axis {
        let s = match ends {
            [Bc::Dirichlet, Bc::Dirichlet] => 1.0,
            [Bc::Neumann, Bc::Neumann] => 0.0,
            _ => 0.5,
        };
        Axis { c: (PI / length).powi(2), s }
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        let t = i as f64 + self.s;
        self.c * t * t
    }

    /// Number of i ≥ 0 with value(i) < mu (or ≤ mu when `closed`).
    pub fn count(&self, mu: f64, closed: bool) -> usize {
        if mu < 0.0 || (mu == 0.0 && !(closed && self.s == 0.0)) {
            return 0;
        }
        let below = |i: usize| {
            let v = self.value(i);
            if closed {
                v <= mu
            } else {
                v < mu
            }
        };
        let est = ((mu / self.c).sqrt() - self.s).floor();
        let mut n = if est < 0.0 { 0 } else { est as usize + 1 };
        while n > 0 && !below(n - 1) {
            n -= 1;
        }
        while below(n) {
            n += 1;
        }
        n
    }

    /// Σ_{i<n} (i + s)².
    fn square_sum(&self, n: usize) -> f64 {
        let nf = n as f64;
        let s = self.s;
        (nf - 1.0) * nf * (2.0 * nf - 1.0) / 6.0 + s * (nf - 1.0) * nf + nf * s * s
    }
}

#[derive(Default, Clone, Copy)]
pub(crate) struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        // Neumaier's variant: robust when |x| > |sum|
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// (x)_+^γ for x > 0 with cheap paths for common orders.
#[inline]
pub(crate) fn pow_gamma(x: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        x
    } else if gamma == 0.5 {
        x.sqrt()
    } else if gamma == 2.0 {
        x * x
    } else if gamma == 1.5 {
        x * x.sqrt()
    } else {
        x.powf(gamma)
    }
}

/// Orders axes so the densest (smallest c) is innermost.
pub fn arrange(mut axes: Vec<Axis>) -> Vec<Axis> {
    axes.sort_by(|a, b| b.c.total_cmp(&a.c));
    axes
}

/// Number of lattice eigenvalues below mu (≤ mu when `closed`).
pub fn count(axes: &[Axis], mu: f64, closed: bool) -> u64 {
    match axes {
        [] => {
            if mu > 0.0 || (closed && mu == 0.0) {
                1
            } else {
                0
            }
        }
        [last] => last.count(mu, closed) as u64,
        [first, rest @ ..] => {
            let mut total = 0u64;
            let n = first.count(mu, closed);
            for i in 0..n {
                total += count(rest, mu - first.value(i), closed);
            }
            total
        }
    }
}

/// Σ (mu − v)_+^γ over lattice eigenvalues v, γ > 0.
pub fn riesz(axes: &[Axis], mu: f64, gamma: f64) -> f64 {
    debug_assert!(gamma > 0.0);
    match axes {
        [] => {
            if mu > 0.0 {
                pow_gamma(mu, gamma)
            } else {
                0.0
            }
        }
        [last] => {
            let n = last.count(mu, false);
            if gamma == 1.0 {
                n as f64 * mu - last.c * last.square_sum(n)
            } else {
                let mut acc = Kahan::default();
                for i in 0..n {
                    acc.add(pow_gamma(mu - last.value(i), gamma));
                }
                acc.total()
            }
        }
        [first, rest @ ..] => {
            let mut acc = Kahan::default();
            let n = first.count(mu, false);
            for i in 0..n {
                acc.add(riesz(rest, mu - first.value(i), gamma));
            }
            acc.total()
        }
    }
}

/// All lattice eigenvalues below `cutoff`, unsorted. Stops early once
/// `limit` values have been produced and returns `None`.
pub fn values(axes: &[Axis], cutoff: f64, limit: u64) -> Option<Vec<f64>> {
    let mut out = Vec::new();
    fn rec(axes: &[Axis], acc: f64, cutoff: f64, out: &mut Vec<f64>, limit: u64) -> bool {
        match axes {
            [] => {
                if acc < cutoff {
                    if out.len() as u64 >= limit {
                        return false;
                    }
                    out.push(acc);
                }
                true
            }
            [first, rest @ ..] => {
                let mut i = 0;
                loop {
                    let v = acc + first.value(i);
                    if v >= cutoff {
                        return true;
                    }
                    if !rec(rest, v, cutoff, out, limit) {
                        return false;
                    }
                    i += 1;
                }
            }
        }
    }
    rec(axes, 0.0, cutoff, &mut out, limit).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(axes: &[Axis], mu: f64, gamma: f64) -> f64 {
        let v = values(axes, mu, u64::MAX).unwrap();
        v.iter().map(|x| if gamma == 0.0 { 1.0 } else { (mu - x).powf(gamma) }).sum()
    }

    #[test]
    fn closed_forms_match_brute_force() {
        let ends = [[Bc::Dirichlet; 2], [Bc::Neumann; 2], [Bc::Dirichlet, Bc::Neumann]];
        for e0 in ends {
            for e1 in ends {
                let axes = arrange(vec![Axis::new(1.3, e0), Axis::new(0.7, e1)]);
                for mu in [0.5, 30.0, 412.7, 2000.0] {
                    for g in [0.0, 0.5, 1.0, 1.7] {
                        let fast = if g == 0.0 { count(&axes, mu, false) as f64 } else { riesz(&axes, mu, g) };
                        let slow = brute(&axes, mu, g);
                        assert!((fast - slow).abs() <= 1e-11 * slow.max(1.0), "{e0:?} {e1:?} {mu} {g}: {fast} {slow}");
                    }
                }
            }
        }
    }

    #[test]
    fn closed_count_includes_boundary() {
        let a = Axis::new(PI, [Bc::Dirichlet; 2]);
        assert_eq!(a.count(4.0, false), 1);
        assert_eq!(a.count(4.0, true), 2);
        let n = Axis::new(1.0, [Bc::Neumann; 2]);
        assert_eq!(n.count(0.0, false), 0);
        assert_eq!(n.count(0.0, true), 1);
    }
}
