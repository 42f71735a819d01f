//! Range-characterization operators on boundary data.
//!
//! Data on the inward bundle extends to the full boundary sphere bundle
//! along the scattering relation, with (`A_+`) or without (`A_-`) a sign
//! flip on the outward half. Composing with the fiberwise Hilbert
//! transform yields the operators
//!
//! ```text
//! P_- = A_-^* H_- A_+,    C_- = (1/2) A_-^* H_- A_-,
//! ```
//!
//! whose kernel/eigenspace structure characterizes the range of the X-ray
//! transform; `Id + C_-^2` is the orthogonal projector onto the range.
//!
//! Discretization: a `(beta, theta)` product grid on the torus with
//! `n_theta = 2 n_beta`. On that grid the scattering involution
//! `(beta, theta) -> (2 theta - beta + pi, theta)` is an exact index
//! permutation, the Hilbert transform is an exact Fourier multiplier on
//! each fiber, and inner products over the inward half reduce to a
//! closed-form sum over anti-diagonal modes. Every operator in this
//! module is therefore exact (to rounding) on data resolved by the grid.

use crate::basis::{psi_hat, psi_norm, BoundaryExpansion, DataGrid};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, DiskModel, FanBeam};
use crate::linalg::CMat;
use crate::transform::{BoundaryData, Sinogram};
use crate::C64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

fn wrap_signed(a: f64) -> f64 {
    let mut r = wrap_angle(a);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Classification of a torus grid point relative to the inward bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Inward,
    Outward,
    Glancing,
}

/// Product grid `(beta_i, theta_j)` on the boundary sphere bundle, with
/// `theta` the full fiber angle and `n_theta = 2 n_beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    pub n_beta: usize,
    pub n_theta: usize,
}

impl TorusGrid {
    pub fn new(n_beta: usize) -> Result<Self> {
        if n_beta < 8 || !n_beta.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "torus grid needs an even beta count >= 8, got {n_beta}"
            )));
        }
        Ok(Self { n_beta, n_theta: 2 * n_beta })
    }

    pub fn len(&self) -> usize {
        self.n_beta * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn beta(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.n_beta as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_theta as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    /// `j - 2i` reduced mod `2 n_beta` decides the side of the glancing
    /// circle exactly in integer arithmetic.
    pub fn classify(&self, i: usize, j: usize) -> PointClass {
        let nb = self.n_beta as i64;
        let d = (j as i64 - 2 * i as i64).rem_euclid(2 * nb);
        if d == nb / 2 || d == 3 * nb / 2 {
            PointClass::Glancing
        } else if d > nb / 2 && d < 3 * nb / 2 {
            PointClass::Inward
        } else {
            PointClass::Outward
        }
    }

    /// The scattering involution as a grid permutation:
    /// `(i, j) -> (j + n_beta/2 - i, j)`.
    pub fn involution(&self, i: usize, j: usize) -> (usize, usize) {
        let nb = self.n_beta as i64;
        let ii = (j as i64 + nb / 2 - i as i64).rem_euclid(nb) as usize;
        (ii, j)
    }

    /// Fan-beam coordinates of a grid point (clamped at glancing).
    pub fn fan_beam(&self, i: usize, j: usize) -> FanBeam {
        let alpha = wrap_signed(self.theta(j) - self.beta(i) - PI);
        FanBeam { beta: self.beta(i), alpha: alpha.clamp(-PI / 2.0, PI / 2.0) }
    }
}

/// Fiber parity selector for the Hilbert transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberParity {
    All,
    Even,
    Odd,
}

/// Samples on the full boundary sphere bundle.
#[derive(Debug, Clone)]
pub struct BoundaryField {
    pub grid: TorusGrid,
    /// Row-major `beta x theta` samples.
    pub values: Vec<C64>,
    /// Parity metadata for the fiber variable, when known.
    pub parity: Option<FiberParity>,
}

impl BoundaryField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, values: vec![C64::new(0.0, 0.0); grid.len()], parity: None }
    }

    /// Splits into fiberwise-even and fiberwise-odd parts (even/odd
    /// Fourier modes in the fiber angle). The split is an idempotent
    /// orthogonal decomposition.
    pub fn fiber_parity_split(&self) -> (BoundaryField, BoundaryField) {
        let nt = self.grid.n_theta;
        let mut even = BoundaryField::zeros(self.grid);
        let mut odd = BoundaryField::zeros(self.grid);
        even.parity = Some(FiberParity::Even);
        odd.parity = Some(FiberParity::Odd);
        for i in 0..self.grid.n_beta {
            for j in 0..nt {
                // theta -> theta + pi is the half-period index shift.
                let j2 = (j + nt / 2) % nt;
                let a = self.values[self.grid.index(i, j)];
                let b = self.values[self.grid.index(i, j2)];
                even.values[self.grid.index(i, j)] = 0.5 * (a + b);
                odd.values[self.grid.index(i, j)] = 0.5 * (a - b);
            }
        }
        (even, odd)
    }

    /// Pullback by the scattering involution (grid permutation).
    pub fn pullback_involution(&self) -> BoundaryField {
        let mut out = BoundaryField::zeros(self.grid);
        out.parity = self.parity;
        for i in 0..self.grid.n_beta {
            for j in 0..self.grid.n_theta {
                let (ii, jj) = self.grid.involution(i, j);
                out.values[self.grid.index(i, j)] = self.values[self.grid.index(ii, jj)];
            }
        }
        out
    }

    /// 2-D Fourier modes `c_{p,q}` (beta mode `p`, fiber mode `q`), DFT
    /// index layout.
    pub fn modes(&self) -> Vec<C64> {
        let nb = self.grid.n_beta;
        let nt = self.grid.n_theta;
        let mut planner = FftPlanner::new();
        let fft_t = planner.plan_fft_forward(nt);
        let fft_b = planner.plan_fft_forward(nb);
        let mut work = self.values.clone();
        for i in 0..nb {
            fft_t.process(&mut work[i * nt..(i + 1) * nt]);
        }
        let mut out = vec![C64::new(0.0, 0.0); nb * nt];
        let mut col = vec![C64::new(0.0, 0.0); nb];
        for j in 0..nt {
            for (i, c) in col.iter_mut().enumerate() {
                *c = work[i * nt + j];
            }
            fft_b.process(&mut col);
            for i in 0..nb {
                out[i * nt + j] = col[i] / (nb * nt) as f64;
            }
        }
        out
    }
}

/// Fiberwise Hilbert transform: the Fourier multiplier `-i sign(q)` on
/// fiber modes `e^{i q theta}` (constants map to zero), restricted to the
/// selected input parity.
pub fn fiber_hilbert(w: &BoundaryField, parity: FiberParity) -> BoundaryField {
    let nb = w.grid.n_beta;
    let nt = w.grid.n_theta;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nt);
    let ifft = planner.plan_fft_inverse(nt);
    let mut out = BoundaryField::zeros(w.grid);
    out.parity = match parity {
        FiberParity::All => w.parity,
        p => Some(p),
    };
    let mut row = vec![C64::new(0.0, 0.0); nt];
    for i in 0..nb {
        row.copy_from_slice(&w.values[i * nt..(i + 1) * nt]);
        fft.process(&mut row);
        for (qi, v) in row.iter_mut().enumerate() {
            let mut q = qi as i64;
            if q > nt as i64 / 2 {
                q -= nt as i64;
            }
            let keep = match parity {
                FiberParity::All => true,
                FiberParity::Even => q.rem_euclid(2) == 0,
                FiberParity::Odd => q.rem_euclid(2) == 1,
            };
            if !keep || q == 0 {
                *v = C64::new(0.0, 0.0);
            } else {
                *v *= C64::new(0.0, -q.signum() as f64);
            }
        }
        ifft.process(&mut row);
        for (j, v) in row.iter().enumerate() {
            out.values[i * nt + j] = v / nt as f64;
        }
    }
    out
}

/// Extension sign: `A_+` copies data across the scattering relation,
/// `A_-` copies with a sign flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionSign {
    Plus,
    Minus,
}

/// Range-operator workspace: a torus grid over a fixed model.
pub struct RangeOperators {
    pub model: DiskModel,
    pub grid: TorusGrid,
}

impl RangeOperators {
    pub fn new(model: DiskModel, n_beta: usize) -> Result<Self> {
        Ok(Self { model, grid: TorusGrid::new(n_beta)? })
    }

    /// Extends inward data to the full bundle along the scattering
    /// relation. At glancing points `A_+` takes the inward limit while
    /// `A_-` takes the symmetric (zero-mean) value.
    pub fn extend(&self, u: &BoundaryData, sign: ExtensionSign) -> BoundaryField {
        let mut out = BoundaryField::zeros(self.grid);
        for i in 0..self.grid.n_beta {
            for j in 0..self.grid.n_theta {
                let idx = self.grid.index(i, j);
                out.values[idx] = match self.grid.classify(i, j) {
                    PointClass::Inward => u.eval(self.grid.fan_beam(i, j)),
                    PointClass::Outward => {
                        let (ii, jj) = self.grid.involution(i, j);
                        let v = u.eval(self.grid.fan_beam(ii, jj));
                        match sign {
                            ExtensionSign::Plus => v,
                            ExtensionSign::Minus => -v,
                        }
                    }
                    PointClass::Glancing => match sign {
                        ExtensionSign::Plus => u.eval(self.grid.fan_beam(i, j)),
                        ExtensionSign::Minus => C64::new(0.0, 0.0),
                    },
                };
            }
        }
        out
    }

    /// `A_-^*` applied to a bundle field, kept as the full torus field
    /// `w - w o alpha` (its restriction to the inward half is the
    /// operator's value, and it is already the odd extension thereof).
    fn a_minus_star_field(&self, w: &BoundaryField) -> BoundaryField {
        let pulled = w.pullback_involution();
        let mut out = BoundaryField::zeros(self.grid);
        out.parity = w.parity;
        for (o, (a, b)) in out.values.iter_mut().zip(w.values.iter().zip(&pulled.values)) {
            *o = a - b;
        }
        out
    }

    /// `P_- u = A_-^* H_- A_+ u` as a torus field (restrict to the inward
    /// half to read off the operator).
    pub fn p_minus_field(&self, u: &BoundaryData) -> BoundaryField {
        let w = self.extend(u, ExtensionSign::Plus);
        self.a_minus_star_field(&fiber_hilbert(&w, FiberParity::Odd))
    }

    /// `C_- u = (1/2) A_-^* H_- A_- u` as a torus field.
    pub fn c_minus_field(&self, u: &BoundaryData) -> BoundaryField {
        let w = self.extend(u, ExtensionSign::Minus);
        let mut g = self.a_minus_star_field(&fiber_hilbert(&w, FiberParity::Odd));
        for v in g.values.iter_mut() {
            *v *= 0.5;
        }
        g
    }

    /// Second application of `C_-` to a first-pass field: the torus field
    /// of `C_- u` is already the `A_-` extension of its inward
    /// restriction, so no re-extension is needed.
    pub fn c_minus_of_field(&self, g: &BoundaryField) -> BoundaryField {
        let mut out = self.a_minus_star_field(&fiber_hilbert(g, FiberParity::Odd));
        for v in out.values.iter_mut() {
            *v *= 0.5;
        }
        out
    }

    /// `P_-^2 u` as a torus field. The inner `A_+` re-extension is the
    /// pointwise sign flip on the outward half.
    pub fn p_minus_squared_field(&self, u: &BoundaryData) -> BoundaryField {
        let g = self.p_minus_field(u);
        let mut w2 = BoundaryField::zeros(self.grid);
        for i in 0..self.grid.n_beta {
            for j in 0..self.grid.n_theta {
                let idx = self.grid.index(i, j);
                w2.values[idx] = match self.grid.classify(i, j) {
                    PointClass::Outward => -g.values[idx],
                    _ => g.values[idx],
                };
            }
        }
        self.a_minus_star_field(&fiber_hilbert(&w2, FiberParity::Odd))
    }

    /// `C_-^2 u` as a torus field.
    pub fn c_minus_squared_field(&self, u: &BoundaryData) -> BoundaryField {
        self.c_minus_of_field(&self.c_minus_field(u))
    }

    /// Inner product `<g|_inward, psihat_{n,k}>` in `L^2(d beta d alpha)`
    /// from the torus modes of `g`, by the closed-form half-torus
    /// integrals. Exact for fields resolved on the grid.
    pub fn project_to_psi(&self, g_modes: &[C64], n: usize, k: i64) -> C64 {
        let nb = self.grid.n_beta as i64;
        let nt = self.grid.n_theta as i64;
        // A_- extension of psihat_{n,k}: two (beta, theta) modes.
        let q1 = 2 * (n as i64 - k) + 1;
        let q2 = -(2 * k + 1);
        let sign_n = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        let c0 = -sign_n / (4.0 * PI) / psi_norm(0.0, n);
        let psi_modes = [
            (-(n as i64 + 1), q1, C64::new(c0, 0.0)),
            (n as i64 + 1, q2, C64::new(c0 * sign_n, 0.0)),
        ];
        let lookup = |p: i64, q: i64| -> C64 {
            let ip = p.rem_euclid(nb) as usize;
            let iq = q.rem_euclid(nt) as usize;
            g_modes[ip * nt as usize + iq]
        };
        let mut acc = C64::new(0.0, 0.0);
        for &(p_psi, q_psi, c_psi) in &psi_modes {
            for qf in -(nt / 2)..(nt / 2) {
                let iq = if qf == 0 {
                    C64::new(PI, 0.0)
                } else if qf.rem_euclid(2) == 0 {
                    continue;
                } else {
                    // int_{pi/2}^{3pi/2} e^{i q phi} d phi = 2 i^{q+1} / q
                    let ipow = match (qf + 1).rem_euclid(4) {
                        0 => C64::new(1.0, 0.0),
                        1 => C64::new(0.0, 1.0),
                        2 => C64::new(-1.0, 0.0),
                        _ => C64::new(0.0, -1.0),
                    };
                    ipow * (2.0 / qf as f64)
                };
                // Product mode on the anti-diagonal: G_{p_psi - q, q_psi + q}
                // pairs with conj(psi) to land on beta-mode zero.
                let g = lookup(p_psi - qf, q_psi + qf);
                acc += g * c_psi.conj() * iq;
            }
        }
        acc * 2.0 * PI
    }

    /// Window coefficients of a torus field's inward restriction.
    pub fn field_to_expansion(&self, g: &BoundaryField, window: &PsiWindow) -> BoundaryExpansion {
        let modes = g.modes();
        let entries = window
            .entries
            .iter()
            .map(|&(n, k)| (n, k, self.project_to_psi(&modes, n, k)))
            .collect();
        BoundaryExpansion { gamma: 0.0, entries }
    }

    /// Window coefficients of raw inward data (via the `A_-` torus
    /// extension; the half-torus pairing only sees the inward half).
    pub fn project_data(&self, u: &BoundaryData, window: &PsiWindow) -> BoundaryExpansion {
        let w = self.extend(u, ExtensionSign::Minus);
        let modes = w.modes();
        let entries = window
            .entries
            .iter()
            .map(|&(n, k)| (n, k, self.project_to_psi(&modes, n, k)))
            .collect();
        BoundaryExpansion { gamma: 0.0, entries }
    }

    /// Range projector `Id + C_-^2` applied to data, returned as window
    /// coefficients.
    pub fn range_project(&self, u: &BoundaryData, window: &PsiWindow) -> BoundaryExpansion {
        let mut out = self.project_data(u, window);
        let c2 = self.field_to_expansion(&self.c_minus_squared_field(u), window);
        for (a, b) in out.entries.iter_mut().zip(&c2.entries) {
            a.2 += b.2;
        }
        out
    }

    /// `L^2(d beta d alpha)` distance from the discrete range class:
    /// `||u - (Id + C_-^2) u||` measured over the window.
    pub fn range_distance(&self, u: &BoundaryData, window: &PsiWindow) -> f64 {
        let c2 = self.field_to_expansion(&self.c_minus_squared_field(u), window);
        c2.entries.iter().map(|&(_, _, a)| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Assembles the matrix of an operator on the window basis.
    pub fn assemble<F>(&self, window: &PsiWindow, op: F) -> CMat
    where
        F: Fn(&BoundaryData) -> BoundaryField,
    {
        let dim = window.entries.len();
        let mut mat = CMat::zeros(dim, dim);
        for (col, &(n, k)) in window.entries.iter().enumerate() {
            let basis_fn = move |c: FanBeam| psi_hat(0.0, n, k, c).unwrap();
            let field = op(&BoundaryData::Callable(&basis_fn));
            let coeffs = self.field_to_expansion(&field, window);
            for (row, &(_, _, a)) in coeffs.entries.iter().enumerate() {
                mat[(row, col)] = a;
            }
        }
        mat
    }
}

/// An `(n, k)` window over the boundary basis: `n <= n_max` with `k`
/// within `margin` of the triangle on both sides.
#[derive(Debug, Clone)]
pub struct PsiWindow {
    pub entries: Vec<(usize, i64)>,
}

impl PsiWindow {
    pub fn with_margin(n_max: usize, margin: i64) -> Self {
        let mut entries = Vec::new();
        for n in 0..=n_max {
            for k in -margin..=(n as i64 + margin) {
                entries.push((n, k));
            }
        }
        Self { entries }
    }

    /// Only the in-triangle indices (the range side of the window).
    pub fn triangle(n_max: usize) -> Self {
        Self::with_margin(n_max, 0)
    }
}

/// Convenience: `P_- u` restricted to a sinogram grid.
pub fn apply_p_minus(
    ops: &RangeOperators,
    u: &BoundaryData,
    window: &PsiWindow,
    out_grid: &DataGrid,
) -> Result<Sinogram> {
    let field = ops.p_minus_field(u);
    let exp = ops.field_to_expansion(&field, window);
    Ok(Sinogram::from_callable(ops.model, out_grid.clone(), |c| exp.eval(c)))
}

/// Convenience: `C_- u` restricted to a sinogram grid.
pub fn apply_c_minus(
    ops: &RangeOperators,
    u: &BoundaryData,
    window: &PsiWindow,
    out_grid: &DataGrid,
) -> Result<Sinogram> {
    let field = ops.c_minus_field(u);
    let exp = ops.field_to_expansion(&field, window);
    Ok(Sinogram::from_callable(ops.model, out_grid.clone(), |c| exp.eval(c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{xray_sinogram, DiskField};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn ops() -> RangeOperators {
        RangeOperators::new(DiskModel::euclidean_unit(), 64).unwrap()
    }

    fn expansion_norm(e: &BoundaryExpansion) -> f64 {
        e.entries.iter().map(|&(_, _, a)| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Random polynomial disk field of the given degree from a seed.
    fn random_field(seed: u64, degree: usize) -> crate::basis::ZernikeExpansion {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = crate::basis::ZernikeExpansion::zeros(0.0, degree);
        for (n, k) in crate::basis::triangle_iter(degree) {
            f.set(n, k, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
        f
    }

    #[test]
    fn torus_involution_is_a_grid_permutation() {
        let grid = TorusGrid::new(16).unwrap();
        for i in 0..grid.n_beta {
            for j in 0..grid.n_theta {
                let (ii, jj) = grid.involution(i, j);
                // Involutive on indices.
                assert_eq!(grid.involution(ii, jj), (i, j));
                // Matches the analytic map.
                let expect = wrap_angle(2.0 * grid.theta(j) - grid.beta(i) + PI);
                let got = grid.beta(ii);
                assert!(
                    (got - expect).abs() < 1e-12 || (got - expect).abs() > 2.0 * PI - 1e-12,
                    "involution angle mismatch"
                );
                // Swaps the inward and outward halves.
                match grid.classify(i, j) {
                    PointClass::Inward => assert_eq!(grid.classify(ii, jj), PointClass::Outward),
                    PointClass::Outward => assert_eq!(grid.classify(ii, jj), PointClass::Inward),
                    PointClass::Glancing => assert_eq!((ii, jj), (i, j)),
                }
            }
        }
    }

    #[test]
    fn extension_of_constants() {
        let ops = ops();
        let one = |_: FanBeam| C64::new(1.0, 0.0);
        let plus = ops.extend(&BoundaryData::Callable(&one), ExtensionSign::Plus);
        for v in &plus.values {
            assert!((v - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let minus = ops.extend(&BoundaryData::Callable(&one), ExtensionSign::Minus);
        for i in 0..ops.grid.n_beta {
            for j in 0..ops.grid.n_theta {
                let v = minus.values[ops.grid.index(i, j)];
                let expect = match ops.grid.classify(i, j) {
                    PointClass::Inward => 1.0,
                    PointClass::Outward => -1.0,
                    PointClass::Glancing => 0.0,
                };
                assert!((v - C64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn extension_of_forward_data_is_continuous_at_glancing() {
        // A_+ of range data stays small near the glancing circle because
        // geodesics there have vanishing length.
        let ops = ops();
        let model = DiskModel::euclidean_unit();
        let f = random_field(3, 4);
        // Ray integrals are bounded by tau * sup|f|, so the extension must
        // decay linearly in the chord length approaching glancing.
        let sup_f: f64 = (0..200)
            .map(|i| f.eval(C64::from_polar(0.995 * (i as f64 / 200.0), 2.71 * i as f64)).norm())
            .fold(0.0, f64::max);
        let ray = move |c: FanBeam| {
            crate::transform::xray_point(model, 0.0, &DiskField::Expansion(&f), c, 10).unwrap()
        };
        let ext = ops.extend(&BoundaryData::Callable(&ray), ExtensionSign::Plus);
        for i in 0..ops.grid.n_beta {
            for j in 0..ops.grid.n_theta {
                if ops.grid.classify(i, j) == PointClass::Glancing {
                    for jn in [(j + 1) % ops.grid.n_theta, (j + ops.grid.n_theta - 1) % ops.grid.n_theta] {
                        let v = ext.values[ops.grid.index(i, jn)];
                        let (ii, jj) = match ops.grid.classify(i, jn) {
                            PointClass::Outward => ops.grid.involution(i, jn),
                            _ => (i, jn),
                        };
                        let tau = model.exit_time(ops.grid.fan_beam(ii, jj));
                        assert!(
                            v.norm() <= 1.5 * tau * sup_f + 1e-12,
                            "extension fails to vanish at glancing: |v|={} tau={tau}",
                            v.norm()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn hilbert_multiplier_on_cosine() {
        let ops = ops();
        let mut w = BoundaryField::zeros(ops.grid);
        for i in 0..ops.grid.n_beta {
            for j in 0..ops.grid.n_theta {
                w.values[ops.grid.index(i, j)] = C64::new(ops.grid.theta(j).cos(), 0.0);
            }
        }
        let hw = fiber_hilbert(&w, FiberParity::All);
        for i in 0..ops.grid.n_beta {
            for j in 0..ops.grid.n_theta {
                let expect = ops.grid.theta(j).sin();
                assert!((hw.values[ops.grid.index(i, j)] - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
        // Constants are annihilated.
        let mut c = BoundaryField::zeros(ops.grid);
        for v in c.values.iter_mut() {
            *v = C64::new(3.0, -1.0);
        }
        let hc = fiber_hilbert(&c, FiberParity::All);
        assert!(hc.values.iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn hilbert_squares_to_minus_identity_on_mean_free() {
        let ops = ops();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut w = BoundaryField::zeros(ops.grid);
        // Random mean-free trigonometric field on each fiber.
        for i in 0..ops.grid.n_beta {
            for q in 1..6i64 {
                let amp = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                for j in 0..ops.grid.n_theta {
                    let ph = C64::from_polar(1.0, q as f64 * ops.grid.theta(j));
                    w.values[ops.grid.index(i, j)] += amp * ph;
                }
            }
        }
        let hhw = fiber_hilbert(&fiber_hilbert(&w, FiberParity::All), FiberParity::All);
        for (a, b) in hhw.values.iter().zip(&w.values) {
            assert!((a + b).norm() < 1e-10);
        }
    }

    #[test]
    fn parity_split_is_idempotent() {
        let ops = ops();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut w = BoundaryField::zeros(ops.grid);
        for v in w.values.iter_mut() {
            *v = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let (even, odd) = w.fiber_parity_split();
        for idx in 0..w.values.len() {
            assert!((even.values[idx] + odd.values[idx] - w.values[idx]).norm() < 1e-14);
        }
        let (ee, eo) = even.fiber_parity_split();
        assert!(eo.values.iter().all(|v| v.norm() < 1e-14));
        for idx in 0..w.values.len() {
            assert!((ee.values[idx] - even.values[idx]).norm() < 1e-14);
        }
    }

    #[test]
    fn c_minus_annihilates_range_data() {
        let ops = ops();
        let model = DiskModel::euclidean_unit();
        let window = PsiWindow::with_margin(8, 3);
        let f = random_field(11, 6);
        let ray = move |c: FanBeam| {
            crate::transform::xray_point(model, 0.0, &DiskField::Expansion(&f), c, 12).unwrap()
        };
        let data = BoundaryData::Callable(&ray);
        let cu = ops.field_to_expansion(&ops.c_minus_field(&data), &window);
        let unorm = expansion_norm(&ops.project_data(&data, &window));
        assert!(unorm > 0.1);
        assert!(
            expansion_norm(&cu) / unorm < 1e-8,
            "relative C_- residual {}",
            expansion_norm(&cu) / unorm
        );
    }

    #[test]
    fn c_minus_eigenvalue_on_cokernel_modes() {
        let ops = ops();
        let window = PsiWindow::with_margin(6, 6);
        // psi_{2,5}: k outside [0, 2], eigenvalue +i.
        let mode = |c: FanBeam| psi_hat(0.0, 2, 5, c).unwrap();
        let cu = ops.field_to_expansion(&ops.c_minus_field(&BoundaryData::Callable(&mode)), &window);
        for &(n, k, a) in &cu.entries {
            let expect = if (n, k) == (2, 5) { C64::new(0.0, 1.0) } else { C64::new(0.0, 0.0) };
            assert!((a - expect).norm() < 1e-10, "C_- psi_25 mismatch at ({n},{k}): {a}");
        }
        // psi_{3,-2}: k below the triangle, eigenvalue -i.
        let mode = |c: FanBeam| psi_hat(0.0, 3, -2, c).unwrap();
        let cu = ops.field_to_expansion(&ops.c_minus_field(&BoundaryData::Callable(&mode)), &window);
        for &(n, k, a) in &cu.entries {
            let expect = if (n, k) == (3, -2) { C64::new(0.0, -1.0) } else { C64::new(0.0, 0.0) };
            assert!((a - expect).norm() < 1e-10, "C_- psi_3,-2 mismatch at ({n},{k})");
        }
        // Zero data maps to zero.
        let zero = |_: FanBeam| C64::new(0.0, 0.0);
        let cu = ops.c_minus_field(&BoundaryData::Callable(&zero));
        assert!(cu.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn p_minus_squared_vanishes() {
        let ops = ops();
        let window = PsiWindow::with_margin(8, 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            // Random smooth data: a modest trigonometric polynomial in
            // (beta, alpha), not necessarily of range type.
            let coeffs: Vec<(i64, i64, C64)> = (0..6)
                .map(|_| {
                    (
                        rng.random_range(-3..=3),
                        rng.random_range(-3..=3),
                        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    )
                })
                .collect();
            let u = move |c: FanBeam| {
                coeffs
                    .iter()
                    .map(|&(mb, ma, a)| {
                        a * C64::from_polar(1.0, mb as f64 * c.beta + ma as f64 * c.alpha)
                    })
                    .sum()
            };
            let data = BoundaryData::Callable(&u);
            let p2 = ops.p_minus_squared_field(&data);
            let coeffs2 = ops.field_to_expansion(&p2, &window);
            let pnorm =
                expansion_norm(&ops.field_to_expansion(&ops.p_minus_field(&data), &window));
            let p2norm = expansion_norm(&coeffs2);
            assert!(p2norm < 1e-9 * (1.0 + pnorm), "P_-^2 residual {p2norm} (P_- norm {pnorm})");
        }
    }

    #[test]
    fn p_minus_output_is_in_the_range_class() {
        let ops = ops();
        let window = PsiWindow::with_margin(8, 4);
        // C_{alpha,+}-type data: restriction of an involution-even smooth
        // torus function.
        let u = |c: FanBeam| {
            let theta = c.beta + PI + c.alpha;
            let a = (2.0 * c.beta).cos() + (3.0 * theta).cos();
            let bp = wrap_angle(2.0 * theta - c.beta + PI);
            let b = (2.0 * bp).cos() + (3.0 * theta).cos();
            C64::new(a + b, 0.3 * (a - 2.0 * b))
        };
        let data = BoundaryData::Callable(&u);
        let g = ops.p_minus_field(&data);
        let pnorm = expansion_norm(&ops.field_to_expansion(&g, &window));
        assert!(pnorm > 1e-3, "P_- output should be nontrivial, got {pnorm}");
        // C_-(P_- u) = 0: the output lies in the range class.
        let cg = ops.c_minus_of_field(&g);
        let cnorm = expansion_norm(&ops.field_to_expansion(&cg, &window));
        assert!(cnorm / pnorm < 1e-9, "C_- on P_- output: {}", cnorm / pnorm);
        // And P_- of trivially even data vanishes outright.
        let one = |_: FanBeam| C64::new(1.0, 0.0);
        let p1 = ops.p_minus_field(&BoundaryData::Callable(&one));
        let n1 = expansion_norm(&ops.field_to_expansion(&p1, &window));
        assert!(n1 < 1e-12);
    }

    #[test]
    fn range_projector_fixes_forward_data_and_kills_cokernel() {
        let ops = ops();
        let model = DiskModel::euclidean_unit();
        let window = PsiWindow::with_margin(8, 4);
        let f = random_field(31, 5);
        let ray = move |c: FanBeam| {
            crate::transform::xray_point(model, 0.0, &DiskField::Expansion(&f), c, 12).unwrap()
        };
        let data = BoundaryData::Callable(&ray);
        let proj = ops.range_project(&data, &window);
        let raw = ops.project_data(&data, &window);
        let diff: f64 = proj
            .entries
            .iter()
            .zip(&raw.entries)
            .map(|(a, b)| (a.2 - b.2).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-8, "projector moved range data by {diff}");
        assert!(ops.range_distance(&data, &window) < 1e-8);

        // Cokernel mode: annihilated, and its distance is its full norm.
        let mode = |c: FanBeam| psi_hat(0.0, 2, 5, c).unwrap();
        let data = BoundaryData::Callable(&mode);
        let proj = ops.range_project(&data, &window);
        assert!(expansion_norm(&proj) < 1e-9);
        assert_relative_eq!(ops.range_distance(&data, &window), 1.0, max_relative = 1e-8);

        let zero = |_: FanBeam| C64::new(0.0, 0.0);
        assert!(ops.range_distance(&BoundaryData::Callable(&zero), &window) < 1e-14);
    }

    #[test]
    fn range_projector_is_idempotent_on_mixtures() {
        let ops = ops();
        let model = DiskModel::euclidean_unit();
        let window = PsiWindow::with_margin(8, 4);
        let f = random_field(41, 4);
        let mix = move |c: FanBeam| {
            crate::transform::xray_point(model, 0.0, &DiskField::Expansion(&f), c, 12).unwrap()
                + 0.3 * psi_hat(0.0, 2, 5, c).unwrap()
        };
        let data = BoundaryData::Callable(&mix);
        let once = ops.range_project(&data, &window);
        // Apply again to the synthesized projection.
        let once_clone = once.clone();
        let synth = move |c: FanBeam| once_clone.eval(c);
        let twice = ops.range_project(&BoundaryData::Callable(&synth), &window);
        let diff: f64 = once
            .entries
            .iter()
            .zip(&twice.entries)
            .map(|(a, b)| (a.2 - b.2).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-8, "projector not idempotent: {diff}");
        // Distance picks out exactly the cokernel amplitude.
        assert_relative_eq!(ops.range_distance(&data, &window), 0.3, max_relative = 1e-7);
    }

    #[test]
    fn assembled_projector_is_self_adjoint_and_c_minus_block_diagonal() {
        let ops = ops();
        let window = PsiWindow::with_margin(6, 3);
        let dim = window.entries.len();
        let cmat = ops.assemble(&window, |u| ops.c_minus_field(u));
        // [C_-, -T^2] = 0: no coupling between different n.
        for (row, &(n1, _)) in window.entries.iter().enumerate() {
            for (col, &(n2, _)) in window.entries.iter().enumerate() {
                if n1 != n2 {
                    assert!(
                        cmat[(row, col)].norm() < 1e-8,
                        "C_- couples n={n1} to n={n2}: {}",
                        cmat[(row, col)]
                    );
                }
            }
        }
        // Id + C_-^2 is Hermitian and idempotent on the window.
        let proj = CMat::identity(dim).sub(&cmat.matmul(&cmat).scale(C64::new(-1.0, 0.0)));
        assert!(proj.hermitian_residual() < 1e-8);
        assert!(proj.matmul(&proj).sub(&proj).operator_norm() < 1e-8);
    }

    #[test]
    fn range_equality_rank_test() {
        // On the window, ker C_- has exactly the dimension of the
        // triangle, matching the forward range at that degree.
        let ops = ops();
        let n_max = 6;
        let window = PsiWindow::with_margin(n_max, 3);
        let cmat = ops.assemble(&window, |u| ops.c_minus_field(u));
        let sv = cmat.singular_values();
        let kernel_dim = sv.iter().filter(|s| **s < 1e-6).count();
        assert_eq!(kernel_dim, (n_max + 1) * (n_max + 2) / 2);
    }

    #[test]
    fn apply_wrappers_produce_sinograms() {
        let ops = ops();
        let window = PsiWindow::with_margin(6, 3);
        let out_grid = DataGrid::new(0.0, 16, 8).unwrap();
        let model = DiskModel::euclidean_unit();
        let f = random_field(51, 3);
        let sino = xray_sinogram(model, 0.0, &DiskField::Expansion(&f), &out_grid, 10).unwrap();
        let cu = apply_c_minus(&ops, &BoundaryData::Sinogram(&sino), &window, &out_grid).unwrap();
        let scale = sino.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for v in &cu.values {
            assert!(v.norm() < 1e-8 * scale.max(1.0));
        }
        let pu = apply_p_minus(&ops, &BoundaryData::Sinogram(&sino), &window, &out_grid).unwrap();
        assert_eq!(pu.values.len(), out_grid.len());
    }

    #[test]
    fn psi_extension_modes_match_definition() {
        // The two-mode closed form used in project_to_psi agrees with the
        // pointwise A_- extension of psi.
        let ops = ops();
        for &(n, k) in &[(0usize, 0i64), (2, 1), (3, -1), (2, 5), (4, 2)] {
            let mode = move |c: FanBeam| crate::basis::psi(0.0, n, k, c).unwrap();
            let ext = ops.extend(&BoundaryData::Callable(&mode), ExtensionSign::Minus);
            let q1 = 2 * (n as i64 - k) + 1;
            let q2 = -(2 * k + 1);
            let sign_n = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            let c0 = -sign_n / (4.0 * PI);
            for i in (0..ops.grid.n_beta).step_by(7) {
                for j in (0..ops.grid.n_theta).step_by(11) {
                    if ops.grid.classify(i, j) == PointClass::Glancing {
                        continue;
                    }
                    let beta = ops.grid.beta(i);
                    let theta = ops.grid.theta(j);
                    // Two-mode synthesis of the closed-form extension.
                    let v = C64::new(c0, 0.0)
                        * (C64::from_polar(1.0, -(n as f64 + 1.0) * beta + q1 as f64 * theta)
                            + sign_n
                                * C64::from_polar(1.0, (n as f64 + 1.0) * beta + q2 as f64 * theta));
                    assert!(
                        (ext.values[ops.grid.index(i, j)] - v).norm() < 1e-12,
                        "extension mode mismatch at n={n} k={k} ({i},{j})"
                    );
                }
            }
        }
    }
}
