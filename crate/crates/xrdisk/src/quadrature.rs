//! Quadrature rules: Gauss–Jacobi nodes and weights (Golub–Welsch), the
//! periodic trapezoid rule, and an adaptive Gauss–Kronrod integrator used
//! where accuracy must hold uniformly into a boundary layer.

use crate::error::{Error, Result};
use crate::special::beta;
use nalgebra::DMatrix;

/// Nodes and weights integrating `(1-x)^a (1+x)^b f(x)` over `[-1, 1]`
/// exactly for polynomials `f` of degree `<= 2n - 1`.
#[derive(Debug, Clone)]
pub struct GaussJacobi {
    pub alpha: f64,
    pub beta: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussJacobi {
    pub fn new(n: usize, alpha: f64, beta_exp: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Parameter("Gauss-Jacobi degree must be >= 1".into()));
        }
        if !(alpha > -1.0 && beta_exp > -1.0) {
            return Err(Error::Parameter(format!(
                "Gauss-Jacobi exponents must exceed -1, got ({alpha}, {beta_exp})"
            )));
        }
        if n == 1 {
            let node = (beta_exp - alpha) / (alpha + beta_exp + 2.0);
            let mu0 = 2f64.powf(alpha + beta_exp + 1.0) * beta(alpha + 1.0, beta_exp + 1.0);
            return Ok(Self { alpha, beta: beta_exp, nodes: vec![node], weights: vec![mu0] });
        }

        // Golub-Welsch: eigen-decompose the symmetrized Jacobi matrix.
        let (a, b) = (alpha, beta_exp);
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut diag = (b - a) / (2.0 + a + b);
        for i in 0..n - 1 {
            let i1 = (i + 1) as f64;
            let denom = 2.0 * i1 + a + b;
            // The generic off-diagonal is 0/0 at i1 = 1 when a + b = -1;
            // the first coefficient has its own closed form.
            let off = if i == 0 {
                2.0 / (a + b + 2.0) * ((1.0 + a) * (1.0 + b) / (a + b + 3.0)).sqrt()
            } else {
                2.0 / denom
                    * (i1 * (i1 + a) * (i1 + b) * (i1 + a + b) / ((denom + 1.0) * (denom - 1.0)))
                        .sqrt()
            };
            m[(i, i)] = diag;
            m[(i, i + 1)] = off;
            m[(i + 1, i)] = off;
            diag = (b * b - a * a) / (denom * (denom + 2.0));
        }
        m[(n - 1, n - 1)] = diag;

        let eig = m.symmetric_eigen();
        let mu0 = 2f64.powf(a + b + 1.0) * beta(a + 1.0, b + 1.0);
        let mut pairs: Vec<(f64, f64)> = eig
            .eigenvalues
            .iter()
            .zip(eig.eigenvectors.row(0).iter())
            .map(|(&x, &v)| (x, mu0 * v * v))
            .collect();
        pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());

        // Symmetric weights pin the middle node of odd rules to zero.
        if a == b && n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }

        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self { alpha, beta: beta_exp, nodes, weights })
    }

    /// Integrates `(1-x)^a (1+x)^b f(x)` over `[-1, 1]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss–Jacobi rule mapped to `[0, 1]` for the weight `(u(1-u))^g`.
///
/// Returns `(nodes, weights)` with
/// `sum_i w_i f(u_i) = int_0^1 f(u) (u(1-u))^g du` for polynomial `f`.
pub fn unit_interval_jacobi(n: usize, g: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let rule = GaussJacobi::new(n, g, g)?;
    let scale = 2f64.powf(-2.0 * g - 1.0);
    let nodes = rule.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let weights = rule.weights.iter().map(|w| w * scale).collect();
    Ok((nodes, weights))
}

/// Uniform angles `2*pi*i/n`; the matching trapezoid weight is `2*pi/n`.
pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64).collect()
}

// 15-point Kronrod extension of the 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let fsum = f(c - x) + f(c + x);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Bisects until `|GK15 - G7| <= abs_tol + rel_tol * |I|` on every panel.
/// Panels are processed in a fixed order so results are deterministic.
pub fn adaptive_gk<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let (value, err) = gk15(f, a, b);
    let mut stack = vec![Panel { a, b, value, err }];
    let mut total = 0.0;
    let mut rough = value.abs().max(1e-300);
    let mut splits = 0usize;
    while let Some(p) = stack.pop() {
        let tol = (abs_tol + rel_tol * rough) * ((p.b - p.a) / (b - a)).abs();
        if p.err <= tol || (p.b - p.a).abs() < 1e-14 || splits > 400_000 {
            total += p.value;
            continue;
        }
        splits += 1;
        let mid = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        rough = rough.max((total.abs() + v1.abs() + v2.abs()).max(1e-300));
        // Push right panel first so the left is integrated first.
        stack.push(Panel { a: mid, b: p.b, value: v2, err: e2 });
        stack.push(Panel { a: p.a, b: mid, value: v1, err: e1 });
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn legendre_nodes_match_reference() {
        // alpha = beta = 0 reduces to Gauss-Legendre.
        let rule = GaussJacobi::new(5, 0.0, 0.0).unwrap();
        let x_ref = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683_1,
            0.0,
            0.538_469_310_105_683_1,
            0.906_179_845_938_664,
        ];
        let w_ref = [
            0.236_926_885_056_189_08,
            0.478_628_670_499_366_47,
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_47,
            0.236_926_885_056_189_08,
        ];
        for i in 0..5 {
            assert_relative_eq!(rule.nodes[i], x_ref[i], epsilon = 1e-14);
            assert_relative_eq!(rule.weights[i], w_ref[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn jacobi_moments_are_exact() {
        // int_{-1}^{1} (1-x^2)^{0.7} x^{2m} dx = B(m + 1/2, 1.7) for each m.
        let rule = GaussJacobi::new(12, 0.7, 0.7).unwrap();
        for m in 0..10 {
            let got = rule.integrate(|x| x.powi(2 * m));
            let expect = beta(m as f64 + 0.5, 1.7);
            assert_relative_eq!(got, expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn singular_exponents_integrate_beta() {
        // int_0^1 (u(1-u))^{-1/2} du = pi, via the mapped rule.
        let (nodes, weights) = unit_interval_jacobi(8, -0.5).unwrap();
        let total: f64 = weights.iter().sum();
        assert_relative_eq!(total, PI, max_relative = 1e-13);
        let mean: f64 = nodes.iter().zip(&weights).map(|(u, w)| u * w).sum();
        assert_relative_eq!(mean, PI / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussJacobi::new(4, -1.0, 0.0).is_err());
        assert!(GaussJacobi::new(0, 0.0, 0.0).is_err());
    }

    #[test]
    fn adaptive_handles_boundary_layer() {
        // sqrt(1 - r^2 sin^2 t) over one period, against 4 E(r), with r
        // close enough to 1 that fixed rules of modest size would fail.
        let r: f64 = 0.999_999;
        let val = adaptive_gk(&|t: f64| (1.0 - (r * t.sin()).powi(2)).sqrt(), 0.0, 2.0 * PI, 1e-13, 1e-13);
        assert_relative_eq!(val, 4.0 * crate::special::ellip_e(r), max_relative = 1e-11);
    }

    #[test]
    fn adaptive_smooth_integrand() {
        let val = adaptive_gk(&|x: f64| x.exp(), 0.0, 1.0, 1e-14, 1e-14);
        assert_relative_eq!(val, std::f64::consts::E - 1.0, max_relative = 1e-14);
    }
}
