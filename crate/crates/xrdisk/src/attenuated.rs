//! Matrix-attenuated X-ray transforms.
//!
//! For an attenuation matrix `Phi` on the disk, the attenuated transform
//! is the entry-boundary trace of the transport solution
//!
//! ```text
//! X u + Phi u = -f   on SM,   u = 0 on the outgoing boundary,
//! ```
//!
//! integrated here with classical fixed-step RK4 in rescaled time along
//! each geodesic. Integrating factors `R` solve `X R + Phi R = 0` with
//! `R = Id` at the entry point; skew-hermitian attenuations give unitary
//! factors, which drives the normal-operator and stability probes.
//!
//! Orientation note: with the transport convention above, a constant
//! scalar attenuation `Phi = a` gives `I_a 1 = (e^{a tau} - 1)/a` per
//! geodesic; the familiar decaying exponential corresponds to `-a`.

use crate::basis::{triangle_iter, triangle_len, DataGrid, ZernikeExpansion};
use crate::error::{Error, Result};
use crate::geometry::{DiskModel, FanBeam};
use crate::linalg::CMat;
use crate::transform::Sinogram;
use crate::C64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Declared regularity class of an attenuation; metadata only, carried
/// into probe reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    C2,
    C4,
    Smooth,
}

/// Evaluator writing an `m x m` matrix (row-major) into a buffer.
pub type MatrixEval = Box<dyn Fn(C64, &mut [C64]) + Sync + Send>;

/// Matrix-valued attenuation on the disk.
pub struct AttenuationField {
    pub m: usize,
    pub support_radius: f64,
    pub regularity: Regularity,
    pub skew_hermitian: bool,
    eval: MatrixEval,
}

impl AttenuationField {
    /// Wraps an evaluator writing the `m x m` matrix (row-major) into the
    /// output buffer. Declared structure flags are spot-checked on a
    /// sample of points.
    pub fn new(
        m: usize,
        support_radius: f64,
        regularity: Regularity,
        skew_hermitian: bool,
        eval: MatrixEval,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("attenuation dimension must be positive".into()));
        }
        let field = Self { m, support_radius, regularity, skew_hermitian, eval };
        let mut buf = vec![C64::new(0.0, 0.0); m * m];
        for i in 0..24 {
            let z = C64::from_polar(0.97 * (i as f64 + 0.5) / 24.0, 2.399 * i as f64);
            field.eval_into(z, &mut buf);
            if skew_hermitian {
                for r in 0..m {
                    for c in 0..m {
                        let resid = (buf[r * m + c] + buf[c * m + r].conj()).norm();
                        if resid > 1e-12 {
                            return Err(Error::Parameter(format!(
                                "field flagged skew-hermitian violates the flag by {resid}"
                            )));
                        }
                    }
                }
            }
            if z.norm() > field.support_radius {
                let sz: f64 = buf.iter().map(|v| v.norm()).sum();
                if sz > 1e-14 {
                    return Err(Error::Parameter(
                        "field is nonzero outside its declared support".into(),
                    ));
                }
            }
        }
        Ok(field)
    }

    pub fn eval_into(&self, z: C64, out: &mut [C64]) {
        (self.eval)(z, out);
    }

    /// The zero attenuation.
    pub fn zero(m: usize) -> Self {
        Self {
            m,
            support_radius: 0.0,
            regularity: Regularity::Smooth,
            skew_hermitian: true,
            eval: Box::new(move |_, out| out.fill(C64::new(0.0, 0.0))),
        }
    }

    /// Constant scalar attenuation (`m = 1`).
    pub fn constant_scalar(a: C64) -> Self {
        Self {
            m: 1,
            support_radius: f64::INFINITY,
            regularity: Regularity::Smooth,
            skew_hermitian: a.re == 0.0,
            eval: Box::new(move |_, out| out[0] = a),
        }
    }

    /// Smooth scalar field (`m = 1`) with a declared support radius.
    pub fn scalar<F: Fn(C64) -> C64 + Sync + Send + 'static>(
        support_radius: f64,
        skew_hermitian: bool,
        f: F,
    ) -> Result<Self> {
        Self::new(
            1,
            support_radius,
            Regularity::Smooth,
            skew_hermitian,
            Box::new(move |z, out| out[0] = f(z)),
        )
    }

    /// The reference skew-hermitian bump: `i A exp(-1/(1-(rho/r)^2))`
    /// inside radius `r`, zero outside.
    pub fn bump(amplitude: f64, radius: f64) -> Self {
        Self {
            m: 1,
            support_radius: radius,
            regularity: Regularity::Smooth,
            skew_hermitian: true,
            eval: Box::new(move |z, out| {
                let q = z.norm_sqr() / (radius * radius);
                out[0] = if q < 1.0 {
                    C64::new(0.0, amplitude * (-1.0 / (1.0 - q)).exp())
                } else {
                    C64::new(0.0, 0.0)
                };
            }),
        }
    }

    /// A 2x2 skew-hermitian (u(2)-valued) bump with three smooth
    /// components.
    pub fn su2_bump(amplitude: f64, radius: f64) -> Self {
        Self {
            m: 2,
            support_radius: radius,
            regularity: Regularity::Smooth,
            skew_hermitian: true,
            eval: Box::new(move |z, out| {
                let q = z.norm_sqr() / (radius * radius);
                if q >= 1.0 {
                    out.fill(C64::new(0.0, 0.0));
                    return;
                }
                let cut = (-1.0 / (1.0 - q)).exp() * amplitude;
                let (x, y) = (z.re, z.im);
                let p1 = cut * (1.0 + x);
                let p2 = cut * y;
                let p3 = cut * (x * y + 0.3);
                out[0] = C64::new(0.0, p1);
                out[1] = C64::new(p2, p3);
                out[2] = C64::new(-p2, p3);
                out[3] = C64::new(0.0, -p1);
            }),
        }
    }
}

// --- small dense matrix helpers (m is 1..4 in practice) ---------------------

fn mat_vec(m: usize, a: &[C64], x: &[C64], out: &mut [C64]) {
    for r in 0..m {
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..m {
            acc += a[r * m + c] * x[c];
        }
        out[r] = acc;
    }
}

fn mat_mul(m: usize, a: &[C64], b: &[C64], out: &mut [C64]) {
    for r in 0..m {
        for c in 0..m {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..m {
                acc += a[r * m + t] * b[t * m + c];
            }
            out[r * m + c] = acc;
        }
    }
}

fn mat_identity(m: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); m * m];
    for i in 0..m {
        out[i * m + i] = C64::new(1.0, 0.0);
    }
    out
}

fn mat_adjoint(m: usize, a: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); m * m];
    for r in 0..m {
        for c in 0..m {
            out[c * m + r] = a[r * m + c].conj();
        }
    }
    out
}

/// Gauss-Jordan inverse with partial pivoting; fine at these sizes.
fn mat_inverse(m: usize, a: &[C64]) -> Result<Vec<C64>> {
    let mut work = a.to_vec();
    let mut inv = mat_identity(m);
    for col in 0..m {
        let mut pivot = col;
        for r in col + 1..m {
            if work[r * m + col].norm() > work[pivot * m + col].norm() {
                pivot = r;
            }
        }
        if work[pivot * m + col].norm() < 1e-300 {
            return Err(Error::Conditioning("singular integrating factor".into()));
        }
        if pivot != col {
            for c in 0..m {
                work.swap(col * m + c, pivot * m + c);
                inv.swap(col * m + c, pivot * m + c);
            }
        }
        let d = work[col * m + col];
        for c in 0..m {
            work[col * m + c] /= d;
            inv[col * m + c] /= d;
        }
        for r in 0..m {
            if r != col {
                let factor = work[r * m + col];
                for c in 0..m {
                    let wc = work[col * m + c];
                    let ic = inv[col * m + c];
                    work[r * m + c] -= factor * wc;
                    inv[r * m + c] -= factor * ic;
                }
            }
        }
    }
    Ok(inv)
}

// --- geodesic sampling -------------------------------------------------------

/// Positions at `2n + 1` equispaced times along the geodesic of `c`
/// (entry to exit), for the RK4 half-step layout.
fn sample_geodesic(model: DiskModel, c: FanBeam, n_steps: usize) -> (f64, Vec<C64>) {
    let tau = model.exit_time(c);
    let count = 2 * n_steps + 1;
    if model.is_flat() {
        let entry = model.entry_point(c);
        let pos = (0..count)
            .map(|i| entry.pos + entry.dir * (tau * i as f64 / (count - 1) as f64))
            .collect();
        (tau, pos)
    } else {
        let mut pos = Vec::with_capacity(count);
        let mut p = model.entry_point(c);
        pos.push(p.pos);
        let dt = tau / (count - 1) as f64;
        for _ in 1..count {
            p = model
                .geodesic_point_from(&p, dt)
                .expect("geodesic stays inside until the exit time");
            pos.push(p.pos);
        }
        (tau, pos)
    }
}

/// Step count for a geodesic: the configured resolution scales with the
/// chord length so short rays do not waste work.
fn steps_for(tau: f64, model: DiskModel, base_steps: usize) -> usize {
    let frac = tau / (2.0 * model.radius());
    ((base_steps as f64 * frac).ceil() as usize).max(8)
}

/// Attenuated ray value `I_Phi f (c)`: RK4 for the transport problem
/// backward from zero exit data.
pub fn transport_solve(
    model: DiskModel,
    phi: &AttenuationField,
    f: &(dyn Fn(C64) -> Vec<C64> + Sync),
    c: FanBeam,
    base_steps: usize,
) -> Result<Vec<C64>> {
    let m = phi.m;
    if c.is_glancing() {
        return Ok(vec![C64::new(0.0, 0.0); m]);
    }
    let n = steps_for(model.exit_time(c), model, base_steps);
    let (tau, pos) = sample_geodesic(model, c, n);
    let h = tau / n as f64;

    // Evaluate Phi and f once per sample position.
    let mut phis = vec![C64::new(0.0, 0.0); (2 * n + 1) * m * m];
    let mut fs = vec![C64::new(0.0, 0.0); (2 * n + 1) * m];
    for (i, &z) in pos.iter().enumerate() {
        phi.eval_into(z, &mut phis[i * m * m..(i + 1) * m * m]);
        let fv = f(z);
        if fv.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Evaluation(format!("non-finite source at {z}")));
        }
        fs[i * m..(i + 1) * m].copy_from_slice(&fv);
    }
    for v in phis.iter() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Evaluation("non-finite attenuation along geodesic".into()));
        }
    }

    // v(s) = u(tau - s) satisfies v' = Phi(gamma(tau - s)) v + f(...),
    // v(0) = 0; the answer is v(tau) = u(0).
    let rhs = |idx: usize, v: &[C64], out: &mut [C64]| {
        mat_vec(m, &phis[idx * m * m..(idx + 1) * m * m], v, out);
        for r in 0..m {
            out[r] += fs[idx * m + r];
        }
    };
    let mut v = vec![C64::new(0.0, 0.0); m];
    let mut k1 = vec![C64::new(0.0, 0.0); m];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();
    for i in 0..n {
        let idx0 = 2 * (n - i);
        let idxh = idx0 - 1;
        let idx1 = idx0 - 2;
        rhs(idx0, &v, &mut k1);
        for r in 0..m {
            stage[r] = v[r] + 0.5 * h * k1[r];
        }
        rhs(idxh, &stage, &mut k2);
        for r in 0..m {
            stage[r] = v[r] + 0.5 * h * k2[r];
        }
        rhs(idxh, &stage, &mut k3);
        for r in 0..m {
            stage[r] = v[r] + h * k3[r];
        }
        rhs(idx1, &stage, &mut k4);
        for r in 0..m {
            v[r] += h / 6.0 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]);
        }
    }
    Ok(v)
}

/// Integrating factor `R(t)` along the geodesic of `c`: solves
/// `R' = -Phi(gamma(t)) R` with `R(0) = Id`.
pub fn integrating_factor(
    model: DiskModel,
    phi: &AttenuationField,
    c: FanBeam,
    t: f64,
    base_steps: usize,
) -> Result<Vec<C64>> {
    let m = phi.m;
    let tau = model.exit_time(c);
    if t < -1e-12 || t > tau + 1e-9 {
        return Err(Error::Domain(format!("time {t} outside [0, {tau}]")));
    }
    if t <= 0.0 {
        return Ok(mat_identity(m));
    }
    let n = steps_for(t, model, base_steps);
    let count = 2 * n + 1;
    let pos: Vec<C64> = if model.is_flat() {
        let entry = model.entry_point(c);
        (0..count)
            .map(|i| entry.pos + entry.dir * (t * i as f64 / (count - 1) as f64))
            .collect()
    } else {
        let mut pos = Vec::with_capacity(count);
        let mut p = model.entry_point(c);
        pos.push(p.pos);
        let dt = t / (count - 1) as f64;
        for _ in 1..count {
            p = model.geodesic_point_from(&p, dt)?;
            pos.push(p.pos);
        }
        pos
    };
    let h = t / n as f64;
    let mut phis = vec![C64::new(0.0, 0.0); count * m * m];
    for (i, &z) in pos.iter().enumerate() {
        phi.eval_into(z, &mut phis[i * m * m..(i + 1) * m * m]);
    }
    let rhs = |idx: usize, r_mat: &[C64], out: &mut [C64]| {
        mat_mul(m, &phis[idx * m * m..(idx + 1) * m * m], r_mat, out);
        for v in out.iter_mut() {
            *v = -*v;
        }
    };
    let mm = m * m;
    let mut r = mat_identity(m);
    let mut k1 = vec![C64::new(0.0, 0.0); mm];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();
    for i in 0..n {
        let idx0 = 2 * i;
        let idxh = idx0 + 1;
        let idx1 = idx0 + 2;
        rhs(idx0, &r, &mut k1);
        for q in 0..mm {
            stage[q] = r[q] + 0.5 * h * k1[q];
        }
        rhs(idxh, &stage, &mut k2);
        for q in 0..mm {
            stage[q] = r[q] + 0.5 * h * k2[q];
        }
        rhs(idxh, &stage, &mut k3);
        for q in 0..mm {
            stage[q] = r[q] + h * k3[q];
        }
        rhs(idx1, &stage, &mut k4);
        for q in 0..mm {
            r[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        }
    }
    Ok(r)
}

/// Vector-valued sinogram: one component sinogram per coordinate.
#[derive(Debug, Clone)]
pub struct VectorSinogram {
    pub components: Vec<Sinogram>,
}

impl VectorSinogram {
    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, c: FanBeam) -> Vec<C64> {
        self.components.iter().map(|s| s.interpolate(c)).collect()
    }
}

/// Per-geodesic transport solves over a grid.
pub fn attenuated_sinogram(
    model: DiskModel,
    phi: &AttenuationField,
    f: &(dyn Fn(C64) -> Vec<C64> + Sync),
    grid: &DataGrid,
    base_steps: usize,
) -> Result<VectorSinogram> {
    let m = phi.m;
    let coords = grid.coords();
    let rows: Result<Vec<Vec<C64>>> = coords
        .par_iter()
        .map(|&c| transport_solve(model, phi, f, c, base_steps))
        .collect();
    let rows = rows?;
    let mut components = Vec::with_capacity(m);
    for j in 0..m {
        let values: Vec<C64> = rows.iter().map(|r| r[j]).collect();
        components.push(Sinogram::new(model, grid.clone(), values)?);
    }
    Ok(VectorSinogram { components })
}

/// Adjoint transform by fiber quadrature: per point and direction, pull
/// the data back through the footpoint map and weight by the inverse
/// adjoint integrating factor and `1/tau`.
pub fn attenuated_adjoint(
    model: DiskModel,
    phi: &AttenuationField,
    g: &(dyn Fn(FanBeam) -> Vec<C64> + Sync),
    points: &[C64],
    n_fiber: usize,
    base_steps: usize,
) -> Result<Vec<Vec<C64>>> {
    let m = phi.m;
    points
        .par_iter()
        .map(|&z| {
            let mut acc = vec![C64::new(0.0, 0.0); m];
            let mut rg = vec![C64::new(0.0, 0.0); m];
            for q in 0..n_fiber {
                let theta = 2.0 * PI * q as f64 / n_fiber as f64;
                let p = model.phase_point(z, C64::from_polar(1.0, theta));
                let Ok((c, t)) = model.footpoint(&p) else { continue };
                let tau = model.exit_time(c);
                if tau < 1e-12 {
                    continue;
                }
                let r = integrating_factor(model, phi, c, t, base_steps)?;
                let r_inv_adj = mat_adjoint(m, &mat_inverse(m, &r)?);
                let gv = g(c);
                mat_vec(m, &r_inv_adj, &gv, &mut rg);
                for j in 0..m {
                    acc[j] += rg[j] / tau;
                }
            }
            for v in acc.iter_mut() {
                *v *= 2.0 * PI / n_fiber as f64;
            }
            Ok(acc)
        })
        .collect()
}

/// Assembled attenuated forward operator on vector-valued hatted Zernike
/// coefficients (component-minor layout), with the `mu/tau` data weights.
pub struct AttenuatedOperator {
    pub model: DiskModel,
    pub m: usize,
    pub degree_max: usize,
    pub grid: DataGrid,
    pub base_steps: usize,
    /// Rows: grid samples x components; columns: (n,k) x components.
    pub matrix: CMat,
    /// `mu/tau` quadrature weights per row.
    pub row_weights: Vec<f64>,
    /// Plain `d beta d alpha` weights per row.
    pub row_weights_plain: Vec<f64>,
}

pub fn assemble_attenuated(
    model: DiskModel,
    phi: &AttenuationField,
    degree_max: usize,
    grid: &DataGrid,
    base_steps: usize,
) -> Result<AttenuatedOperator> {
    let m = phi.m;
    let pairs: Vec<(usize, usize, usize)> = triangle_iter(degree_max)
        .flat_map(|(n, k)| (0..m).map(move |j| (n, k, j)))
        .collect();
    let columns: Result<Vec<Vec<C64>>> = pairs
        .par_iter()
        .map(|&(n, k, j)| {
            let source = move |z: C64| {
                let mut v = vec![C64::new(0.0, 0.0); m];
                v[j] = crate::basis::zernike_hat(0.0, n, k, z).expect("triangle");
                v
            };
            let sino = attenuated_sinogram(model, phi, &source, grid, base_steps)?;
            // Flatten grid-major, component-minor.
            let mut col = Vec::with_capacity(grid.len() * m);
            for idx in 0..grid.len() {
                for comp in 0..m {
                    col.push(sino.components[comp].values[idx]);
                }
            }
            Ok(col)
        })
        .collect();
    let columns = columns?;
    let matrix = CMat::from_columns(grid.len() * m, &columns);
    // Data pairing: (2R mu / tau) d beta d alpha. The diameter factor
    // normalizes the measure so the flat normal operator keeps the
    // eigenvalues 4 pi / (n + 1); on the Euclidean unit disk the weight
    // is identically 1.
    let mut row_weights = Vec::with_capacity(grid.len() * m);
    let mut row_weights_plain = Vec::with_capacity(grid.len() * m);
    for _ib in 0..grid.n_beta() {
        for ia in 0..grid.n_alpha() {
            let c = grid.coord(0, ia);
            let tau = model.exit_time(c);
            let w = grid.weight_plain(ia);
            for _ in 0..m {
                row_weights.push(w * 2.0 * model.radius() * c.mu() / tau);
                row_weights_plain.push(w);
            }
        }
    }
    Ok(AttenuatedOperator {
        model,
        m,
        degree_max,
        grid: grid.clone(),
        base_steps,
        matrix,
        row_weights,
        row_weights_plain,
    })
}

impl AttenuatedOperator {
    /// Coefficient-space dimension (`triangle x components`).
    pub fn dim(&self) -> usize {
        triangle_len(self.degree_max) * self.m
    }

    pub fn apply(&self, coeffs: &[C64]) -> Vec<C64> {
        self.matrix.apply(coeffs)
    }

    /// Normal operator `A^H W A` in the `mu/tau` pairing.
    pub fn normal_matrix(&self) -> CMat {
        self.matrix.weighted_gram(&self.row_weights)
    }

    /// Plain `L^2(d beta d alpha)` norm of flattened data samples.
    pub fn data_norm_plain(&self, values: &[C64]) -> f64 {
        values
            .iter()
            .zip(&self.row_weights_plain)
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Largest singular value in the `mu/tau` pairing.
    pub fn sigma_max(&self) -> f64 {
        self.normal_matrix()
            .hermitian_eigenvalues()
            .last()
            .map(|l| l.max(0.0).sqrt())
            .unwrap_or(0.0)
    }
}

/// Invertibility probe for the normal operator of a skew-hermitian
/// attenuation: smallest singular value and condition number of `N_Phi`
/// as a map into the first Sobolev rung (coefficients weighted by
/// `n + 1`).
pub fn normal_probe(op: &AttenuatedOperator) -> Result<(f64, f64)> {
    let nmat = op.normal_matrix();
    let dim = nmat.rows;
    let mut weighted = CMat::zeros(dim, dim);
    let pairs: Vec<(usize, usize)> = triangle_iter(op.degree_max).collect();
    for (row_idx, &(n, _)) in pairs.iter().enumerate() {
        for comp in 0..op.m {
            let r = row_idx * op.m + comp;
            for ccol in 0..dim {
                weighted[(r, ccol)] = nmat[(r, ccol)] * (n as f64 + 1.0);
            }
        }
    }
    let sv = weighted.singular_values();
    let (max, min) = (sv[0], sv[sv.len() - 1]);
    if min <= 0.0 {
        return Err(Error::Conditioning("normal operator numerically singular".into()));
    }
    Ok((min, max / min))
}

/// Stability ratio `||f||_{Ht^{-1/2}} / ||I_Phi f||_{L^2(d beta d alpha)}`
/// for a scalar expansion broadcast to the first component.
pub fn stability_ratio(op: &AttenuatedOperator, f: &ZernikeExpansion) -> Result<f64> {
    if f.degree_max != op.degree_max {
        return Err(Error::Parameter("degree mismatch with assembled operator".into()));
    }
    let mut coeffs = vec![C64::new(0.0, 0.0); op.dim()];
    for (t, &c) in f.coeffs().iter().enumerate() {
        coeffs[t * op.m] = c;
    }
    let data = op.apply(&coeffs);
    let data_norm = op.data_norm_plain(&data);
    let f_norm = crate::spectral::SobolevSpec::disk(-0.5, 0.0).norm_disk(f);
    if data_norm < 1e-13 * f_norm.max(1e-300) && f_norm > 0.0 {
        return Err(Error::Evaluation(
            "attenuated transform vanished on nonzero input; injectivity alarm".into(),
        ));
    }
    Ok(f_norm / data_norm)
}
