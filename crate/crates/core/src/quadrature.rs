//! Quadrature rules: uniform trapezoid, Gauss–Legendre panels and
//! principal-value integrals by subtraction.

use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on [a, b] with `panels` equal panels.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + 0.5 * h * xi);
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Trapezoid weights for a uniform grid.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 1 {
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
    }
    w
}

/// Principal value of ∫_a^b g(q)/(q − x) dq by subtraction:
/// Σ w_j (g_j − g(x))/(q_j − x) + g(x) ln((b − x)/(x − a)).
/// Nodes must lie in [a, b] and avoid x; `gx` is g(x).
pub fn pv_subtracted(nodes: &[f64], weights: &[f64], values: &[Complex64], x: f64, gx: Complex64, a: f64, b: f64) -> Complex64 {
    assert!(a < x && x < b, "pole must lie strictly inside the interval");
    let mut acc = Complex64::new(0.0, 0.0);
    for ((&q, &w), &g) in nodes.iter().zip(weights).zip(values) {
        acc += (g - gx) * (w / (q - x));
    }
    acc + gx * ((b - x) / (x - a)).ln()
}

/// Offset midpoint nodes x + (j + ½)h, j = −n..n−1, symmetric about x so the
/// subtraction term and the logarithm cancel identically.
pub fn symmetric_pv_nodes(x: f64, h: f64, n: usize) -> (Vec<f64>, f64, f64) {
    let nodes = (0..2 * n).map(|j| x + (j as f64 - n as f64 + 0.5) * h).collect();
    (nodes, x - n as f64 * h, x + n as f64 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        for deg in 0..16 {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let want = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            assert!((got - want).abs() < 1e-14, "deg {deg}");
        }
    }

    #[test]
    fn pv_of_lorentzian_shape() {
        // PV ∫ 1/((q² + 1)(q − x)) over R = −π x/(1 + x²)
        let x = 0.37;
        let g = |q: f64| Complex64::new(1.0 / (q * q + 1.0), 0.0);
        let (a, b) = (-400.0, 400.0);
        let (nodes, weights) = composite_gauss(a, b, 4000, 8);
        let vals: Vec<_> = nodes.iter().map(|&q| g(q)).collect();
        let got = pv_subtracted(&nodes, &weights, &vals, x, g(x), a, b);
        let want = -std::f64::consts::PI * x / (1.0 + x * x);
        assert!((got.re - want).abs() < 1e-6, "{} vs {}", got.re, want);
    }

    #[test]
    fn symmetric_nodes_need_no_log_term() {
        let x = -0.8;
        let g = |q: f64| Complex64::new((-(q * q)).exp(), 0.0);
        let (nodes, a, b) = symmetric_pv_nodes(x, 0.05, 400);
        let weights = vec![0.05; nodes.len()];
        let vals: Vec<_> = nodes.iter().map(|&q| g(q)).collect();
        let full = pv_subtracted(&nodes, &weights, &vals, x, g(x), a, b);
        let plain: Complex64 = nodes.iter().zip(&vals).map(|(&q, &v)| v * (0.05 / (q - x))).sum();
        assert!((full - plain).norm() < 1e-12);
        // Dawson-function identity: PV ∫ e^{-q²}/(q − x) dq = −2√π D(x)
        let dawson_08 = 0.532_101_707_056_365_4;
        assert!((plain.re - 2.0 * std::f64::consts::PI.sqrt() * dawson_08).abs() < 1e-12, "{}", plain.re);
    }
}
