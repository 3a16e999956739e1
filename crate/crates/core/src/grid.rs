//! λ-grids and their content hash.

use sha2::{Digest, Sha256};

/// Geometric grid from `lo` to `hi` (both included) with `per_decade`
/// points per factor of ten.
pub fn geometric(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && per_decade > 0, "bad grid ({lo}, {hi}, {per_decade})");
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    if hi == lo {
        return vec![lo];
    }
    (0..=n).map(|k| lo * (hi / lo).powf(k as f64 / n as f64)).collect()
}

/// `n` geometric points from `lo` to `hi`.
pub fn geometric_n(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1 && lo > 0.0 && hi >= lo);
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

/// `n` evenly spaced points from `lo` to `hi`.
pub fn linear(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the exact bit patterns of a grid.
pub fn grid_hash(points: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(8 * points.len());
    for p in points {
        bytes.extend_from_slice(&p.to_bits().to_le_bytes());
    }
    sha256_hex(&bytes)[..16].to_string()
}
