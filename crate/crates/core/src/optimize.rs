//! Derivative-free maximisers used by the shape experiments.

/// Golden-section search for a maximum of `f` on [a, b].
/// Returns (argmax, max, iterations).
pub fn golden_max(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64, usize) {
    let inv = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv * (b - a);
    let mut d = a + inv * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut it = 0;
    while (b - a).abs() > tol && it < 200 {
        it += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc, it)
    } else {
        (d, fd, it)
    }
}

/// Nelder–Mead maximisation in two variables from a start point and an
/// initial simplex size. Returns (argmax, max, iterations, converged).
pub fn nelder_mead_max(
    mut f: impl FnMut([f64; 2]) -> f64,
    start: [f64; 2],
    size: f64,
    tol: f64,
    max_iter: usize,
) -> ([f64; 2], f64, usize, bool) {
    let mut pts = [start, [start[0] + size, start[1]], [start[0], start[1] + size]];
    let mut vals = pts.map(&mut f);
    for it in 0..max_iter {
        // order best to worst (largest value first)
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
        pts = idx.map(|i| pts[i]);
        vals = idx.map(|i| vals[i]);
        let spread = pts.iter().skip(1).map(|p| (p[0] - pts[0][0]).abs().max((p[1] - pts[0][1]).abs())).fold(0.0, f64::max);
        if spread < tol {
            return (pts[0], vals[0], it, true);
        }
        let cen = [(pts[0][0] + pts[1][0]) / 2.0, (pts[0][1] + pts[1][1]) / 2.0];
        let at = |t: f64| [cen[0] + t * (pts[2][0] - cen[0]), cen[1] + t * (pts[2][1] - cen[1])];
        let xr = at(-1.0);
        let fr = f(xr);
        if fr > vals[0] {
            let xe = at(-2.0);
            let fe = f(xe);
            if fe > fr {
                pts[2] = xe;
                vals[2] = fe;
            } else {
                pts[2] = xr;
                vals[2] = fr;
            }
        } else if fr > vals[1] {
            pts[2] = xr;
            vals[2] = fr;
        } else {
            let xc = if fr > vals[2] { at(-0.5) } else { at(0.5) };
            let fcv = f(xc);
            if fcv > vals[2].max(fr) {
                pts[2] = xc;
                vals[2] = fcv;
            } else {
                for k in 1..3 {
                    pts[k] = [(pts[k][0] + pts[0][0]) / 2.0, (pts[k][1] + pts[0][1]) / 2.0];
                    vals[k] = f(pts[k]);
                }
            }
        }
    }
    let best = (0..3).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    (pts[best], vals[best], max_iter, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v, _) = golden_max(|x| -(x - 0.3).powi(2) + 2.0, -1.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-7 && (v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nelder_mead_finds_peak() {
        let (x, _, _, ok) = nelder_mead_max(|p| -(p[0] - 1.0).powi(2) - 3.0 * (p[1] + 0.5).powi(2), [0.0, 0.0], 0.5, 1e-9, 500);
        assert!(ok);
        assert!((x[0] - 1.0).abs() < 1e-7 && (x[1] + 0.5).abs() < 1e-7);
    }
}
