//! Gamma-family special functions, semiclassical constants and the
//! extrapolation factors between Riesz orders.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Bc, Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Nonnegative Riesz exponent.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RieszOrder(f64);

impl RieszOrder {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma >= 0.0 {
            Ok(RieszOrder(gamma))
        } else {
            Err(Error::InvalidArgument(format!("riesz order must be finite and >= 0, got {gamma}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for RieszOrder {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        RieszOrder::new(v)
    }
}

impl From<RieszOrder> for f64 {
    fn from(g: RieszOrder) -> f64 {
        g.0
    }
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// L^sc_{γ,d} = Γ(γ+1) / ((4π)^{d/2} Γ(1+γ+d/2)); d = 0 gives 1.
pub fn lsc(gamma: f64, d: u32) -> f64 {
    debug_assert!(gamma >= 0.0);
    let h = 0.5 * d as f64;
    (ln_gamma(gamma + 1.0) - h * (4.0 * PI).ln() - ln_gamma(1.0 + gamma + h)).exp()
}

fn check_orders(gamma: f64, gamma_prime: f64) -> Result<()> {
    if !(gamma_prime >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("orders must be >= 0, got ({gamma}, {gamma_prime})")));
    }
    if gamma_prime > gamma {
        return Err(Error::InvalidArgument(format!("gamma_prime {gamma_prime} exceeds gamma {gamma}")));
    }
    Ok(())
}

fn ln_f_dirichlet(gamma: f64, gp: f64, d: u32) -> f64 {
    let h = 0.5 * d as f64;
    let (a, b) = (gamma + h, gp + h);
    a * a.ln() - b * b.ln() + ln_gamma(1.0 + b) + ln_gamma(1.0 + gamma) - ln_gamma(1.0 + a) - ln_gamma(1.0 + gp)
}

/// Dirichlet extrapolation factor f^D_γ(γ′).
pub fn f_dirichlet(gamma: f64, gamma_prime: f64, d: u32) -> Result<f64> {
    check_orders(gamma, gamma_prime)?;
    if gamma_prime == gamma {
        return Ok(1.0);
    }
    Ok(ln_f_dirichlet(gamma, gamma_prime, d).exp())
}

/// Neumann extrapolation factor f^N_γ(γ′) = L_{γ,d}/L_{γ′,d}.
pub fn f_neumann(gamma: f64, gamma_prime: f64, d: u32) -> Result<f64> {
    check_orders(gamma, gamma_prime)?;
    if gamma_prime == gamma {
        return Ok(1.0);
    }
    let h = 0.5 * d as f64;
    Ok((ln_gamma(gamma + 1.0) - ln_gamma(1.0 + gamma + h) - ln_gamma(gamma_prime + 1.0) + ln_gamma(1.0 + gamma_prime + h)).exp())
}

/// Solves f(γ′) = target on [0, γ] for a monotone f by bisection.
/// Returns 0 when the target lies beyond f(0) and γ when it lies before f(γ).
fn invert_monotone(gamma: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (f0, f1) = (f(0.0), f(gamma));
    let increasing = f1 >= f0;
    let before = |v: f64| if increasing { v < target } else { v > target };
    if !before(f0) {
        return 0.0;
    }
    if before(f1) || f1 == target {
        return gamma;
    }
    let (mut lo, mut hi) = (0.0, gamma);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if before(f(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * gamma.max(1.0) {
            break;
        }
    }
    // the upper end keeps f(hi) on the safe side of the target
    hi
}

/// γ′ ∈ [0, γ] with f^D_γ(γ′) = target (target ≥ 1).
pub fn f_dirichlet_inverse(gamma: f64, target: f64, d: u32) -> Result<f64> {
    check_orders(gamma, 0.0)?;
    Ok(invert_monotone(gamma, target, |g| if g >= gamma { 1.0 } else { ln_f_dirichlet(gamma, g, d).exp() }))
}

/// γ′ ∈ [0, γ] with f^N_γ(γ′) = target (0 < target ≤ 1).
pub fn f_neumann_inverse(gamma: f64, target: f64, d: u32) -> Result<f64> {
    check_orders(gamma, 0.0)?;
    Ok(invert_monotone(gamma, target, |g| f_neumann(gamma, g.min(gamma), d).unwrap_or(1.0)))
}

/// Euler Beta function.
pub fn beta_euler(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::InvalidArgument(format!("beta needs positive arguments, got ({x}, {y})")));
    }
    Ok((ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp())
}

/// Digamma ψ(s), s > 0.
pub fn digamma(s: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("digamma needs s > 0, got {s}")));
    }
    let mut x = s;
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    // Bernoulli tail: B_{2k}/(2k)
    let tail = x2
        * (1.0 / 12.0
            - x2 * (1.0 / 120.0 - x2 * (1.0 / 252.0 - x2 * (1.0 / 240.0 - x2 * (1.0 / 132.0 - x2 * (691.0 / 32760.0 - x2 / 12.0))))));
    Ok(acc + x.ln() - 0.5 / x - tail)
}

/// Left side of the sign condition 1 + ln(d/2) + ψ(1) − ψ(1 + d/2).
pub fn digamma_sign_term(d: u32) -> f64 {
    let h = 0.5 * d as f64;
    1.0 + h.ln() - EULER_GAMMA - digamma(1.0 + h).expect("positive argument")
}

/// One- and two-term Weyl asymptotics for a Riesz mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylPrediction {
    pub leading: f64,
    pub boundary_term: f64,
    pub bc_sign: f64,
}

impl WeylPrediction {
    pub fn two_term(&self) -> f64 {
        self.leading + self.bc_sign * self.boundary_term
    }
}

pub fn weyl_prediction(gamma: f64, d: u32, volume: f64, surface: f64, lambda: f64, bc: Bc) -> WeylPrediction {
    let bc_sign = match bc {
        Bc::Dirichlet => -1.0,
        Bc::Neumann => 1.0,
    };
    if lambda <= 0.0 {
        return WeylPrediction { leading: 0.0, boundary_term: 0.0, bc_sign };
    }
    let dh = 0.5 * d as f64;
    let leading = lsc(gamma, d) * volume * lambda.powf(gamma + dh);
    let boundary_term = if surface > 0.0 && d >= 1 { 0.25 * lsc(gamma, d - 1) * surface * lambda.powf(gamma + dh - 0.5) } else { 0.0 };
    WeylPrediction { leading, boundary_term, bc_sign }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_small_integers() {
        for (n, f) in [(1.0, 1.0), (2.0, 1.0), (3.0, 2.0), (5.0, 24.0), (11.0, 3628800.0)] {
            assert!((gamma_fn(n) / f - 1.0).abs() < 1e-14, "{n}");
        }
        assert!((gamma_fn(0.5) - PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn lsc_closed_forms_2d() {
        for g in [0.0, 0.5, 1.0, 2.5] {
            let want = 1.0 / (4.0 * PI * (1.0 + g));
            assert!((lsc(g, 2) / want - 1.0).abs() < 1e-14);
        }
        assert!((lsc(1.5, 1) - 3.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn f_rejects_bad_order() {
        assert!(f_dirichlet(1.0, 2.0, 2).is_err());
        assert!(f_neumann(1.0, 2.0, 2).is_err());
        assert!(beta_euler(0.0, 1.0).is_err());
        assert!(digamma(0.0).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let g = f_dirichlet_inverse(1.0, 1.5, 2).unwrap();
        assert!((f_dirichlet(1.0, g, 2).unwrap() - 1.5).abs() < 1e-12);
        let g = f_neumann_inverse(1.0, 0.8, 2).unwrap();
        assert!((f_neumann(1.0, g, 2).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(f_dirichlet_inverse(1.0, 1.0, 2).unwrap(), 1.0);
    }

    #[test]
    fn d1_weyl_boundary_term() {
        let w = weyl_prediction(1.0, 1, 1.0, 2.0, 4.0, Bc::Dirichlet);
        assert!((w.boundary_term - 2.0).abs() < 1e-15);
    }
}
