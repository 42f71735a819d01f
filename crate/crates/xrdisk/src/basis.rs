//! Zernike disk polynomials and the matching boundary basis, plain and
//! weighted.
//!
//! For a weight exponent `gamma > -1` the boundary functions are
//!
//! ```text
//! psi^g_{n,k}(beta, alpha) =
//!     (-i)^n / (2 pi) * cos(alpha)^{2g+1}
//!     * e^{i (n-2k)(beta+alpha)} * C_n^{(g+1)}(sin alpha)
//! ```
//!
//! with `C_n^{(g+1)}` the Gegenbauer polynomial for the weight
//! `(1-x^2)^{g+1/2}`. The phase convention is pinned so that `gamma = 0`
//! reproduces the classical combination
//! `(-1)^n/(4 pi) e^{i(n-2k)(beta+alpha)} (e^{i(n+1)alpha} + (-1)^n e^{-i(n+1)alpha})`
//! exactly. Their weighted backprojections are the generalized Zernike
//! polynomials; the orthonormal disk basis used for coefficient tables is
//!
//! ```text
//! zhat^g_{n,k}(rho e^{i w}) =
//!     (-1)^k N_{n,k} rho^{|m|} P_j^{(g, |m|)}(2 rho^2 - 1) e^{i m w},
//!     m = n - 2k,  j = min(k, n-k),
//! ```
//!
//! normalized in `L^2(D, (1-rho^2)^g dA)`. The sign `(-1)^k` matches the
//! backprojection convention, so forward transforms of `zhat` land on
//! `psihat` with positive singular values.

use crate::error::{Error, Result};
use crate::geometry::FanBeam;
use crate::quadrature::{uniform_angles, GaussJacobi};
use crate::C64;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

/// Gegenbauer polynomial `C_n^{(gamma+1)}(x)`: the degree-`n` orthogonal
/// polynomial for the weight `(1-x^2)^{gamma+1/2}` on `[-1, 1]`, in the
/// normalization that reproduces the Chebyshev-U family at `gamma = 0`.
pub fn jacobi_weight_poly(gamma: f64, n: usize, x: f64) -> Result<f64> {
    if gamma.is_nan() || gamma <= -1.0 {
        return Err(Error::Parameter(format!("weight exponent must exceed -1, got {gamma}")));
    }
    let lambda = gamma + 1.0;
    if n == 0 {
        return Ok(1.0);
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * lambda * x;
    for j in 2..=n {
        let jf = j as f64;
        let next = (2.0 * x * (jf + lambda - 1.0) * cur - (jf + 2.0 * lambda - 2.0) * prev) / jf;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Jacobi polynomial `P_j^{(a,b)}(x)` by the three-term recurrence.
pub fn jacobi_poly(a: f64, b: f64, j: usize, x: f64) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x;
    for m in 2..=j {
        let mf = m as f64;
        let c1 = 2.0 * mf * (mf + a + b) * (2.0 * mf + a + b - 2.0);
        let c2 = (2.0 * mf + a + b - 1.0) * (a * a - b * b);
        let c3 = (2.0 * mf + a + b - 1.0) * (2.0 * mf + a + b) * (2.0 * mf + a + b - 2.0);
        let c4 = 2.0 * (mf + a - 1.0) * (mf + b - 1.0) * (2.0 * mf + a + b);
        let next = ((c2 + c3 * x) * cur - c4 * prev) / c1;
        prev = cur;
        cur = next;
    }
    cur
}

fn phase_minus_i_pow(n: usize) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

/// Boundary basis function `psi^gamma_{n,k}` at a fan-beam coordinate.
pub fn psi(gamma: f64, n: usize, k: i64, c: FanBeam) -> Result<C64> {
    let poly = jacobi_weight_poly(gamma, n, c.alpha.sin())?;
    let mu = c.alpha.cos();
    let m = n as f64 - 2.0 * k as f64;
    let phase = C64::from_polar(1.0, m * (c.beta + c.alpha));
    Ok(phase_minus_i_pow(n) / (2.0 * PI) * mu.powf(2.0 * gamma + 1.0) * poly * phase)
}

/// `L^2(d beta d alpha, mu^{-2 gamma})`-norm of `psi^gamma_{n,k}`
/// (independent of `k`).
pub fn psi_norm(gamma: f64, n: usize) -> f64 {
    let nf = n as f64;
    let log_ratio = ln_gamma(nf + 2.0 * gamma + 2.0) - ln_gamma(nf + 1.0);
    let norm_sq = 2f64.powf(-2.0 * gamma - 2.0) * log_ratio.exp()
        / ((nf + gamma + 1.0) * (ln_gamma(gamma + 1.0).exp()).powi(2));
    norm_sq.sqrt()
}

/// Unit-norm boundary basis function.
pub fn psi_hat(gamma: f64, n: usize, k: i64, c: FanBeam) -> Result<C64> {
    Ok(psi(gamma, n, k, c)? / psi_norm(gamma, n))
}

/// `L^2(D, (1-rho^2)^gamma dA)`-norm of the radial-polynomial Zernike
/// element with indices `(n, k)`.
fn zernike_radial_norm(gamma: f64, n: usize, k: usize) -> f64 {
    let j = k.min(n - k) as f64;
    let m = (n as f64 - 2.0 * k as f64).abs();
    let log_h = ln_gamma(j + gamma + 1.0) + ln_gamma(j + m + 1.0)
        - ln_gamma(j + gamma + m + 1.0)
        - ln_gamma(j + 1.0);
    (PI / (n as f64 + gamma + 1.0) * log_h.exp()).sqrt()
}

/// Orthonormal Zernike basis function `zhat^gamma_{n,k}` at a disk point.
pub fn zernike_hat(gamma: f64, n: usize, k: usize, z: C64) -> Result<C64> {
    if k > n {
        return Err(Error::Index(format!("k = {k} outside [0, {n}]")));
    }
    let j = k.min(n - k);
    let m = n as i64 - 2 * k as i64;
    let rho2 = z.norm_sqr();
    let radial = jacobi_poly(gamma, m.unsigned_abs() as f64, j, 2.0 * rho2 - 1.0);
    let angular = if m == 0 {
        C64::new(1.0, 0.0)
    } else {
        let mono = if m > 0 { z } else { z.conj() };
        mono.powu(m.unsigned_abs() as u32)
    };
    // The (-1)^k phase matches the weighted backprojection of psi_{n,k};
    // it is forced by conj(psi_{n,k}) = (-1)^n psi_{n,n-k}.
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign / zernike_radial_norm(gamma, n, k) * radial * angular)
}

/// Unnormalized generalized Zernike polynomial: the weighted
/// backprojection of `psi^gamma_{n,k}` (so `Z^0_{0,0} = 1`).
pub fn zernike(gamma: f64, n: usize, k: usize, z: C64) -> Result<C64> {
    let sigma = crate::spectral::singular_value(gamma, n, k)?;
    Ok(sigma * psi_norm(gamma, n) * zernike_hat(gamma, n, k, z)?)
}

/// `L^2_gamma`-norm of the unnormalized Zernike polynomial.
pub fn zernike_norm(gamma: f64, n: usize, k: usize) -> Result<f64> {
    Ok(crate::spectral::singular_value(gamma, n, k)? * psi_norm(gamma, n))
}

// --- coefficient tables ---------------------------------------------------

pub fn triangle_len(degree_max: usize) -> usize {
    (degree_max + 1) * (degree_max + 2) / 2
}

pub fn triangle_index(n: usize, k: usize) -> usize {
    n * (n + 1) / 2 + k
}

/// Iterates `(n, k)` over the triangle `0 <= k <= n <= degree_max` in
/// table order.
pub fn triangle_iter(degree_max: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=degree_max).flat_map(|n| (0..=n).map(move |k| (n, k)))
}

/// Coefficient table over the hatted Zernike basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ZernikeExpansion {
    pub gamma: f64,
    pub degree_max: usize,
    coeffs: Vec<C64>,
}

impl ZernikeExpansion {
    pub fn zeros(gamma: f64, degree_max: usize) -> Self {
        Self { gamma, degree_max, coeffs: vec![C64::new(0.0, 0.0); triangle_len(degree_max)] }
    }

    pub fn from_coeffs(gamma: f64, degree_max: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != triangle_len(degree_max) {
            return Err(Error::Index(format!(
                "coefficient table has {} entries, expected {}",
                coeffs.len(),
                triangle_len(degree_max)
            )));
        }
        Ok(Self { gamma, degree_max, coeffs })
    }

    /// Single basis element `amp * zhat_{n,k}`.
    pub fn single(gamma: f64, degree_max: usize, n: usize, k: usize, amp: C64) -> Self {
        let mut e = Self::zeros(gamma, degree_max);
        e.set(n, k, amp);
        e
    }

    pub fn get(&self, n: usize, k: usize) -> C64 {
        self.coeffs[triangle_index(n, k)]
    }

    pub fn set(&mut self, n: usize, k: usize, value: C64) {
        self.coeffs[triangle_index(n, k)] = value;
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Pointwise evaluation of the synthesized field.
    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (n, k) in triangle_iter(self.degree_max) {
            let c = self.get(n, k);
            if c != C64::new(0.0, 0.0) {
                acc += c * zernike_hat(self.gamma, n, k, z).expect("triangle index");
            }
        }
        acc
    }

    /// Max deviation from the conjugate symmetry characterizing real
    /// fields. In this normalization `conj(zhat_{n,k}) = (-1)^n zhat_{n,n-k}`,
    /// so real fields satisfy `c_{n,k} = (-1)^n conj(c_{n,n-k})`.
    pub fn conjugate_symmetry_residual(&self) -> f64 {
        triangle_iter(self.degree_max)
            .map(|(n, k)| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                (self.get(n, k) - self.get(n, n - k).conj() * sign).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Euclidean norm of the coefficient vector (the `L^2_gamma` norm of
    /// the synthesized field).
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Synthesis at a set of points.
pub fn synthesize(exp: &ZernikeExpansion, points: &[C64]) -> Vec<C64> {
    points.iter().map(|&z| exp.eval(z)).collect()
}

// --- disk quadrature -------------------------------------------------------

/// Tensor quadrature on the disk for the measure `(1-rho^2)^gamma dA`:
/// Gauss-Jacobi radially (in `s = 2 rho^2 - 1`), trapezoid angularly.
#[derive(Debug, Clone)]
pub struct DiskQuadrature {
    pub gamma: f64,
    /// Degree of polynomial fields the rule integrates exactly against
    /// the basis (Gram-matrix exactness margin).
    pub max_degree: usize,
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    /// Radial weights already folded with the Jacobi substitution.
    pub radial_weights: Vec<f64>,
}

impl DiskQuadrature {
    /// Sizing rule: `N + 2` radial nodes and `4N + 4` angles resolve all
    /// Gram integrals of degree-`N` expansions.
    pub fn for_degree(gamma: f64, degree_max: usize) -> Result<Self> {
        Self::with_sizes(gamma, degree_max, degree_max + 2, 4 * degree_max + 4)
    }

    pub fn with_sizes(
        gamma: f64,
        degree_max: usize,
        n_radial: usize,
        n_angular: usize,
    ) -> Result<Self> {
        if n_radial < degree_max / 2 + 1 || n_angular < 2 * degree_max + 1 {
            return Err(Error::Resolution(format!(
                "grid {n_radial}x{n_angular} cannot resolve degree {degree_max}"
            )));
        }
        let rule = GaussJacobi::new(n_radial, gamma, 0.0)?;
        let scale = 2f64.powf(-gamma) / 4.0;
        let radii = rule.nodes.iter().map(|s| ((1.0 + s) / 2.0).sqrt()).collect();
        let radial_weights = rule.weights.iter().map(|w| w * scale).collect();
        Ok(Self {
            gamma,
            max_degree: degree_max,
            radii,
            angles: uniform_angles(n_angular),
            radial_weights,
        })
    }

    pub fn points(&self) -> Vec<C64> {
        let mut pts = Vec::with_capacity(self.radii.len() * self.angles.len());
        for &r in &self.radii {
            for &w in &self.angles {
                pts.push(C64::from_polar(r, w));
            }
        }
        pts
    }

    /// Weighted inner product `<f, g>_{L^2(D, (1-rho^2)^gamma dA)}` of two
    /// fields sampled on the quadrature points (in `points()` order).
    pub fn inner(&self, f: &[C64], g: &[C64]) -> C64 {
        let na = self.angles.len();
        let dw = 2.0 * PI / na as f64;
        let mut acc = C64::new(0.0, 0.0);
        for (ir, &wr) in self.radial_weights.iter().enumerate() {
            let mut ring = C64::new(0.0, 0.0);
            for ia in 0..na {
                let idx = ir * na + ia;
                ring += f[idx] * g[idx].conj();
            }
            acc += ring * (wr * dw);
        }
        acc
    }

    /// Integral of a sampled field against the weighted area measure.
    pub fn integrate(&self, f: &[C64]) -> C64 {
        let ones = vec![C64::new(1.0, 0.0); f.len()];
        self.inner(f, &ones)
    }
}

/// Projects a field onto the hatted Zernike basis up to `degree_max`.
pub fn project_to_zernike<F>(
    gamma: f64,
    field: F,
    degree_max: usize,
    quad: &DiskQuadrature,
) -> Result<ZernikeExpansion>
where
    F: Fn(C64) -> C64,
{
    let pts = quad.points();
    let samples: Vec<C64> = pts.iter().map(|&z| field(z)).collect();
    project_samples_to_zernike(gamma, &samples, degree_max, quad)
}

/// Same as [`project_to_zernike`] for a field already sampled on the
/// quadrature points.
pub fn project_samples_to_zernike(
    gamma: f64,
    samples: &[C64],
    degree_max: usize,
    quad: &DiskQuadrature,
) -> Result<ZernikeExpansion> {
    if quad.max_degree < degree_max {
        return Err(Error::Resolution(format!(
            "quadrature resolves degree {}, requested {degree_max}",
            quad.max_degree
        )));
    }
    let pts = quad.points();
    if samples.len() != pts.len() {
        return Err(Error::Resolution("sample count does not match quadrature".into()));
    }
    let mut exp = ZernikeExpansion::zeros(gamma, degree_max);
    for (n, k) in triangle_iter(degree_max) {
        let basis: Vec<C64> = pts.iter().map(|&z| zernike_hat(gamma, n, k, z).unwrap()).collect();
        exp.set(n, k, quad.inner(samples, &basis));
    }
    Ok(exp)
}

// --- boundary grid and expansions ------------------------------------------

/// Product grid on the inward boundary: uniform `beta`, Gauss-Jacobi
/// `alpha`-nodes through `x = sin(alpha)` for the weight
/// `(1-x^2)^{gamma+1/2}`, which makes all basis inner products exact.
#[derive(Debug, Clone)]
pub struct DataGrid {
    pub gamma: f64,
    pub betas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub x_nodes: Vec<f64>,
    /// Weights for plain `d alpha` integration of integrands in the class
    /// `(1-x^2)^{gamma+1} x polynomial`.
    pub alpha_weights: Vec<f64>,
}

impl DataGrid {
    pub fn new(gamma: f64, n_beta: usize, n_alpha: usize) -> Result<Self> {
        if n_beta == 0 || n_alpha == 0 {
            return Err(Error::Parameter("data grid must be nonempty".into()));
        }
        let rule = GaussJacobi::new(n_alpha, gamma + 0.5, gamma + 0.5)?;
        let alphas: Vec<f64> = rule.nodes.iter().map(|&x| x.asin()).collect();
        let alpha_weights = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w / (1.0 - x * x).powf(gamma + 1.0))
            .collect();
        Ok(Self {
            gamma,
            betas: uniform_angles(n_beta),
            alphas,
            x_nodes: rule.nodes.clone(),
            alpha_weights,
        })
    }

    pub fn n_beta(&self) -> usize {
        self.betas.len()
    }

    pub fn n_alpha(&self) -> usize {
        self.alphas.len()
    }

    pub fn len(&self) -> usize {
        self.n_beta() * self.n_alpha()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord(&self, i_beta: usize, i_alpha: usize) -> FanBeam {
        FanBeam { beta: self.betas[i_beta], alpha: self.alphas[i_alpha] }
    }

    /// Row-major sample index (`beta` outer, `alpha` inner).
    pub fn index(&self, i_beta: usize, i_alpha: usize) -> usize {
        i_beta * self.n_alpha() + i_alpha
    }

    pub fn coords(&self) -> Vec<FanBeam> {
        let mut v = Vec::with_capacity(self.len());
        for ib in 0..self.n_beta() {
            for ia in 0..self.n_alpha() {
                v.push(self.coord(ib, ia));
            }
        }
        v
    }

    /// Quadrature weight for the plain measure `d beta d alpha` at a node.
    pub fn weight_plain(&self, i_alpha: usize) -> f64 {
        2.0 * PI / self.n_beta() as f64 * self.alpha_weights[i_alpha]
    }

    /// Weight for the data-side measure `mu^{-2 gamma} d beta d alpha`.
    pub fn weight_weighted(&self, i_alpha: usize) -> f64 {
        self.weight_plain(i_alpha) * (1.0 - self.x_nodes[i_alpha].powi(2)).powf(-self.gamma)
    }

    /// Inner product in `L^2(mu^{-2 gamma} d beta d alpha)` of sampled data.
    pub fn inner_weighted(&self, u: &[C64], v: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for ib in 0..self.n_beta() {
            for ia in 0..self.n_alpha() {
                let idx = self.index(ib, ia);
                acc += u[idx] * v[idx].conj() * self.weight_weighted(ia);
            }
        }
        acc
    }

    /// Inner product in plain `L^2(d beta d alpha)`.
    pub fn inner_plain(&self, u: &[C64], v: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for ib in 0..self.n_beta() {
            for ia in 0..self.n_alpha() {
                let idx = self.index(ib, ia);
                acc += u[idx] * v[idx].conj() * self.weight_plain(ia);
            }
        }
        acc
    }

    pub fn norm_plain(&self, u: &[C64]) -> f64 {
        self.inner_plain(u, u).re.max(0.0).sqrt()
    }

    /// Samples of `psihat^gamma_{n,k}` on the grid.
    pub fn psi_hat_samples(&self, n: usize, k: i64) -> Vec<C64> {
        self.coords().iter().map(|&c| psi_hat(self.gamma, n, k, c).unwrap()).collect()
    }

    /// Coefficient of sampled data against `psihat^gamma_{n,k}`.
    pub fn project_to_psi(&self, u: &[C64], n: usize, k: i64) -> C64 {
        let basis = self.psi_hat_samples(n, k);
        self.inner_weighted(u, &basis)
    }
}

/// Coefficient table over the hatted boundary basis on an arbitrary
/// `(n, k)` window.
#[derive(Debug, Clone)]
pub struct BoundaryExpansion {
    pub gamma: f64,
    pub entries: Vec<(usize, i64, C64)>,
}

impl BoundaryExpansion {
    pub fn eval(&self, c: FanBeam) -> C64 {
        self.entries.iter().map(|&(n, k, a)| a * psi_hat(self.gamma, n, k, c).unwrap()).sum()
    }
}

// --- coefficient-table files -------------------------------------------------

/// Writes a coefficient table: header line `gamma degree_max`, then one
/// `n,k,re,im` row per entry, 17 significant digits (lossless for f64).
pub fn write_coeff_table<W: Write>(w: &mut W, exp: &ZernikeExpansion) -> Result<()> {
    writeln!(w, "{:.16e} {}", exp.gamma, exp.degree_max)?;
    for (n, k) in triangle_iter(exp.degree_max) {
        let c = exp.get(n, k);
        writeln!(w, "{},{},{:.16e},{:.16e}", n, k, c.re, c.im)?;
    }
    Ok(())
}

pub fn read_coeff_table<R: BufRead>(r: &mut R) -> Result<ZernikeExpansion> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let mut parts = header.split_whitespace();
    let gamma: f64 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("missing gamma in header".into()))?;
    let degree_max: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("missing degree in header".into()))?;
    let mut exp = ZernikeExpansion::zeros(gamma, degree_max);
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!("bad coefficient row: {line}")));
        }
        let n: usize = fields[0].trim().parse().map_err(|_| Error::Format("bad n".into()))?;
        let k: usize = fields[1].trim().parse().map_err(|_| Error::Format("bad k".into()))?;
        let re: f64 = fields[2].trim().parse().map_err(|_| Error::Format("bad re".into()))?;
        let im: f64 = fields[3].trim().parse().map_err(|_| Error::Format("bad im".into()))?;
        if k > n || n > degree_max {
            return Err(Error::Index(format!("entry ({n},{k}) outside triangle")));
        }
        exp.set(n, k, C64::new(re, im));
    }
    Ok(exp)
}
