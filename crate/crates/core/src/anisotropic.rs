//! Anisotropic layer: the A ↔ µ dictionary, σ-assembly from the logarithmic
//! potential, the semi-linear Poisson-type pipeline, A-conjugates, and
//! weak-form residual certification.

use crate::beltrami::{BeltramiCoefficient, QCMap, SolveReport};
use crate::builtins::{bump_at, cinf_cutoff};
use crate::error::{Error, Result};
use crate::fft::{fft2, ifft2};
use crate::field::{ComplexField, RealField, RealTail};
use crate::grid::Grid;
use crate::interp;
use crate::ops::gradient;
use crate::semilinear::{
    factorize, solve_semilinear_operator, ContinuationConfig, Nonlinearity,
};
use crate::transforms::{log_potential, potential_dbar};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DET_TOL: f64 = 1e-9;

/// Symmetric 2x2 matrix field with unit determinant (a21 = a12).
#[derive(Debug, Clone)]
pub struct MatrixField {
    grid: Grid,
    pub a11: RealField,
    pub a12: RealField,
    pub a22: RealField,
}

impl MatrixField {
    pub fn new(a11: RealField, a12: RealField, a22: RealField) -> Result<Self> {
        a11.grid.same_as(&a12.grid)?;
        a11.grid.same_as(&a22.grid)?;
        if !(a11.tail.is_zero() && a12.tail.is_zero() && a22.tail.is_zero()) {
            return Err(Error::Config("matrix entries must be plain fields".into()));
        }
        let grid = a11.grid;
        for i in 0..grid.len() {
            let det = a11.data[i] * a22.data[i] - a12.data[i] * a12.data[i];
            if (det - 1.0).abs() > DET_TOL {
                return Err(Error::Ellipticity(format!(
                    "det A = {} at node {} (must be 1)",
                    det, i
                )));
            }
            let ipa = (1.0 + a11.data[i]) * (1.0 + a22.data[i]) - a12.data[i] * a12.data[i];
            if ipa <= 0.0 {
                return Err(Error::Ellipticity(format!(
                    "det(I + A) = {} at node {} (must be positive)",
                    ipa, i
                )));
            }
        }
        Ok(MatrixField {
            grid,
            a11,
            a12,
            a22,
        })
    }

    pub fn identity(grid: Grid) -> Self {
        MatrixField {
            grid,
            a11: RealField::sample(grid, |_| 1.0, None),
            a12: RealField::zeros(grid),
            a22: RealField::sample(grid, |_| 1.0, None),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// (a11, a12, a22) at a node.
    pub fn value(&self, j: usize, k: usize) -> (f64, f64, f64) {
        (
            self.a11.value(j, k),
            self.a12.value(j, k),
            self.a22.value(j, k),
        )
    }
}

/// µ_A = (a22 - a11 - 2i a12) / det(I + A), with k < 1 certified.
pub fn mu_from_a(a: &MatrixField) -> Result<BeltramiCoefficient> {
    let grid = a.grid;
    let mut data = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let ipa = (1.0 + a.a11.data[i]) * (1.0 + a.a22.data[i]) - a.a12.data[i] * a.a12.data[i];
        if ipa <= 0.0 {
            return Err(Error::Ellipticity(format!("det(I + A) = {} <= 0", ipa)));
        }
        data.push(Complex64::new(a.a22.data[i] - a.a11.data[i], -2.0 * a.a12.data[i]) / ipa);
    }
    // support: largest node radius where µ differs from zero
    let n = grid.n();
    let mut radius = 0.0f64;
    for k in 0..n {
        for j in 0..n {
            if data[grid.index(j, k)].norm() > 1e-13 {
                radius = radius.max(grid.node(j, k).norm());
            }
        }
    }
    let field = ComplexField {
        grid,
        data,
        support_radius: Some(radius),
        tail: crate::field::ComplexTail::ZERO,
    };
    BeltramiCoefficient::new(field)
}

/// Eq-(6.9) dictionary: A from µ, det A = 1 identically.
pub fn a_from_mu(mu: &BeltramiCoefficient) -> MatrixField {
    let grid = mu.grid();
    let mut a11 = RealField::zeros(grid);
    let mut a12 = RealField::zeros(grid);
    let mut a22 = RealField::zeros(grid);
    let one = Complex64::new(1.0, 0.0);
    for (i, &m) in mu.field().data.iter().enumerate() {
        let d = 1.0 - m.norm_sqr();
        a11.data[i] = (one - m).norm_sqr() / d;
        a22.data[i] = (one + m).norm_sqr() / d;
        a12.data[i] = -2.0 * m.im / d;
    }
    MatrixField {
        grid,
        a11,
        a12,
        a22,
    }
}

/// σ = N^g_z̄ + µ conj(N^g_z̄) (Eq. (sigma)).
pub fn sigma_from_source(mu: &BeltramiCoefficient, g: &RealField) -> Result<ComplexField> {
    mu.grid().same_as(&g.grid)?;
    if g.norm_2() == 0.0 {
        return Ok(ComplexField::zeros(g.grid));
    }
    let nd = potential_dbar(g)?;
    let mu_term = nd.conj().multiply_by_compact(mu.field());
    Ok(nd.add(&mu_term))
}

/// h = N^g with the spectral certificate Δh = g.
pub fn harmonic_source_solve(g: &RealField) -> Result<RealField> {
    if g.norm_2() == 0.0 {
        return Ok(RealField::zeros(g.grid));
    }
    log_potential(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QPresetKind {
    Power,
    SignedPower,
    NegExp,
}

/// The physics presets of the corollaries: Q(u) = max(u,0)^λ, |u|^{λ-1}u,
/// and e^{-|u|}, lifted to act on Re ω.
pub fn preset_q(kind: QPresetKind, lambda: Option<f64>) -> Result<Nonlinearity> {
    match kind {
        QPresetKind::Power => Nonlinearity::real_power(
            lambda.ok_or_else(|| Error::Config("power preset needs an exponent".into()))?,
        ),
        QPresetKind::SignedPower => Nonlinearity::real_signed_power(
            lambda.ok_or_else(|| Error::Config("signed power preset needs an exponent".into()))?,
        ),
        QPresetKind::NegExp => Ok(Nonlinearity::real_neg_exp()),
    }
}

/// Everything the Poisson pipeline produces besides u itself.
#[derive(Debug, Clone)]
pub struct PoissonArtifacts {
    pub omega: ComplexField,
    pub mu: BeltramiCoefficient,
    pub map: QCMap,
    pub h: ComplexField,
    pub g_multiplier: ComplexField,
    pub image_grid: Grid,
}

/// Solve div(A ∇u) = G·Q(u) through the Beltrami reduction of Theorem-2
/// style: µ = µ_A, 𝓛[ρ] = N^ρ_z̄ + µ conj(N^ρ_z̄), u = Re ω.
pub fn solve_poisson_semilinear(
    a: &MatrixField,
    g_source: &RealField,
    q: &Nonlinearity,
    cfg: &ContinuationConfig,
) -> Result<(RealField, SolveReport, PoissonArtifacts)> {
    a.grid().same_as(&g_source.grid)?;
    if g_source.support_radius.is_none() && g_source.norm_2() > 0.0 {
        return Err(Error::MissingSupport);
    }
    let mu = mu_from_a(a)?;
    let g_c = g_source.to_complex();
    let l_op = |p: &ComplexField| -> Result<ComplexField> {
        let rho = p.re();
        if rho.norm_2() == 0.0 {
            return Ok(ComplexField::zeros(p.grid));
        }
        let nd = potential_dbar(&rho)?;
        let mu_term = nd.conj().multiply_by_compact(mu.field());
        Ok(nd.add(&mu_term))
    };
    let (omega, report) = solve_semilinear_operator(&mu, &g_c, &l_op, q, cfg)?;
    let u = omega.re();

    let qvals = omega.map_total(|w| q.eval(w));
    let product = qvals.multiply_by_compact(&g_c);
    let sigma_eff = l_op(&product)?;
    let fac = factorize(&omega, &mu, &sigma_eff, cfg)?;
    let artifacts = PoissonArtifacts {
        omega,
        mu,
        image_grid: fac.image_grid,
        h: fac.h,
        g_multiplier: fac.g_multiplier,
        map: fac.map,
    };
    Ok((u, report, artifacts))
}

fn l2_on_core(f: &RealField, core: f64) -> f64 {
    let grid = f.grid;
    let n = grid.n();
    let mut sum = 0.0;
    for k in 0..n {
        for j in 0..n {
            if grid.node(j, k).norm() <= core {
                let v = f.value(j, k);
                sum += v * v;
            }
        }
    }
    (sum * grid.dx() * grid.dx()).sqrt()
}

/// Spectral least-squares inversion of a gradient, tails handled in closed
/// form; the caller has certified integrability.
fn invert_gradient(vx: &RealField, vy: &RealField) -> Result<RealField> {
    let grid = vx.grid;
    let tx = vx.tail.0;
    let ty = vy.tail.0;
    if tx[3] != 0.0 || tx[4] != 0.0 || tx[5] != 0.0 || ty[3] != 0.0 || ty[4] != 0.0 || ty[5] != 0.0
    {
        return Err(Error::Config(
            "gradient inversion supports at most linear tails".into(),
        ));
    }
    let tail = RealTail([
        0.0,
        tx[0],
        ty[0],
        0.5 * tx[1],
        0.5 * (tx[2] + ty[1]),
        0.5 * ty[2],
    ]);

    let n = grid.n();
    let mut bx: Vec<Complex64> = vx.data.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let mut by: Vec<Complex64> = vy.data.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft2(&mut bx, n);
    fft2(&mut by, n);
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for k in 0..n {
        let ky = grid.wavenumber(k);
        for j in 0..n {
            let kx = grid.wavenumber(j);
            let k2 = kx * kx + ky * ky;
            let i = k * n + j;
            if k2 > 0.0 {
                let div = Complex64::new(0.0, 1.0) * (kx * bx[i] + ky * by[i]);
                out[i] = div / (-k2);
            }
        }
    }
    ifft2(&mut out, n);
    let mut v = RealField {
        grid,
        data: out.iter().map(|c| c.re).collect(),
        support_radius: None,
        tail,
    };
    // normalize v(0) = 0
    let origin = v.data[grid.origin_index()] + v.tail.0[0];
    v.tail.0[0] -= origin;
    Ok(v)
}

/// The A-conjugate v with ∇v = ℍ[A∇u − ∇N^g], ℍ = [[0,−1],[1,0]],
/// normalized v(0) = 0. Integrability is certified on the window core.
pub fn a_conjugate(u: &RealField, a: &MatrixField, g: &RealField) -> Result<RealField> {
    a.grid().same_as(&u.grid)?;
    a.grid().same_as(&g.grid)?;
    let grid = u.grid;
    let (ux, uy) = gradient(u);
    let (nx, ny) = if g.norm_2() == 0.0 {
        (RealField::zeros(grid), RealField::zeros(grid))
    } else {
        let pot = log_potential(g)?;
        gradient(&pot)
    };

    // F = A∇u − ∇N, written as ∇u + (A − I)∇u − ∇N so the tails survive
    let mut c1 = RealField::zeros(grid);
    let mut c2 = RealField::zeros(grid);
    let n = grid.n();
    for k in 0..n {
        for j in 0..n {
            let i = grid.index(j, k);
            let gx = ux.value(j, k);
            let gy = uy.value(j, k);
            c1.data[i] = (a.a11.data[i] - 1.0) * gx + a.a12.data[i] * gy;
            c2.data[i] = a.a12.data[i] * gx + (a.a22.data[i] - 1.0) * gy;
        }
    }
    let fx = ux.add(&c1).sub(&nx);
    let fy = uy.add(&c2).sub(&ny);

    // ∇v = ℍ F
    let vx = fy.scale(-1.0);
    let vy = fx.clone();
    let core = grid.guard_radius();
    let scale = l2_on_core(&vx, core).hypot(l2_on_core(&vy, core));

    // First try the global least-squares potential; it is spectrally exact
    // when ℍF is a genuine gradient on the whole window (pipeline outputs).
    let v = invert_gradient(&vx, &vy)?;
    let (rx, ry) = gradient(&v);
    let err = l2_on_core(&rx.sub(&vx), core).hypot(l2_on_core(&ry.sub(&vy), core));
    let rel_global = err / scale.max(f64::MIN_POSITIVE);
    if rel_global <= 1e-4 {
        return Ok(v);
    }

    // Fall back to two-leg path integration from the origin: valid whenever
    // F is divergence-free on the core disk even if not globally. The
    // disagreement of the two path orders is an integrated curl measure.
    let (va, vb) = integrate_paths(grid, &vx, &vy);
    let mut diff_sq = 0.0;
    let mut v_sq = 0.0;
    let n = grid.n();
    let mut data = vec![0.0; grid.len()];
    for k in 0..n {
        for j in 0..n {
            let i = grid.index(j, k);
            data[i] = 0.5 * (va[i] + vb[i]);
            if grid.node(j, k).norm() <= core {
                diff_sq += (va[i] - vb[i]) * (va[i] - vb[i]);
                v_sq += data[i] * data[i];
            }
        }
    }
    let dx2 = grid.dx() * grid.dx();
    let rel_path = (diff_sq * dx2).sqrt() / (v_sq * dx2).sqrt().max(f64::MIN_POSITIVE);
    if rel_path > 1e-4 {
        return Err(Error::NotConjugate(rel_global.min(rel_path)));
    }
    Ok(RealField {
        grid,
        data,
        support_radius: None,
        tail: RealTail::ZERO,
    })
}

/// Cumulative integral ∫_0^x f dx' of every row (`along_x`) or ∫_0^y f dy' of
/// every column, spectrally exact on the periodic part; the per-line mean and
/// the (linear) tail integrate in closed form.
fn cumulative(f: &RealField, along_x: bool) -> Vec<f64> {
    let grid = f.grid;
    let n = grid.n();
    let o = n / 2;
    let mut buf: Vec<Complex64> = f.data.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft2(&mut buf, n);
    for k in 0..n {
        for j in 0..n {
            let w = grid.wavenumber(if along_x { j } else { k });
            buf[k * n + j] = if w == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                buf[k * n + j] / Complex64::new(0.0, w)
            };
        }
    }
    ifft2(&mut buf, n);
    let t = f.tail.0;
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        for j in 0..n {
            let i = k * n + j;
            let z = grid.node(j, k);
            // per-line mean of the periodic part
            let mean = if along_x {
                (0..n).map(|jj| f.data[k * n + jj]).sum::<f64>() / n as f64
            } else {
                (0..n).map(|kk| f.data[kk * n + j]).sum::<f64>() / n as f64
            };
            let anchor = if along_x { buf[k * n + o].re } else { buf[o * n + j].re };
            let tail = if along_x {
                z.re * (t[0] + 0.5 * t[1] * z.re + t[2] * z.im)
            } else {
                z.im * (t[0] + t[1] * z.re + 0.5 * t[2] * z.im)
            };
            let coord = if along_x { z.re } else { z.im };
            out[i] = buf[i].re - anchor + mean * coord + tail;
        }
    }
    out
}

/// Path integrals of (vx, vy) from the origin in both leg orders: x-then-y
/// and y-then-x.
fn integrate_paths(grid: Grid, vx: &RealField, vy: &RealField) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n();
    let o = n / 2;
    let cx = cumulative(vx, true);
    let cy = cumulative(vy, false);
    let mut va = vec![0.0; n * n];
    let mut vb = vec![0.0; n * n];
    for k in 0..n {
        for j in 0..n {
            let i = k * n + j;
            va[i] = cx[o * n + j] + cy[i];
            vb[i] = cy[k * n + o] + cx[i];
        }
    }
    (va, vb)
}

/// A reproducible family of smooth compactly supported test functions with
/// precomputed gradients.
#[derive(Debug, Clone)]
pub struct WeakTestSet {
    seed: u64,
    functions: Vec<(RealField, RealField, RealField)>,
}

impl WeakTestSet {
    pub fn generate(grid: Grid, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let guard = grid.guard_radius();
        let mut functions = Vec::with_capacity(count);
        for _ in 0..count {
            let cx = (rng.gen::<f64>() - 0.5) * guard;
            let cy = (rng.gen::<f64>() - 0.5) * guard;
            let radius = (0.15 + 0.2 * rng.gen::<f64>()) * guard;
            let center = Complex64::new(cx, cy);
            let psi = RealField::sample(
                grid,
                |z| bump_at(z, center, radius, 1.0),
                Some(center.norm() + radius),
            );
            let (gx, gy) = gradient(&psi);
            functions.push((psi, gx, gy));
        }
        WeakTestSet { seed, functions }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(RealField, RealField, RealField)> {
        self.functions.iter()
    }
}

/// Weak-form residual of Eq. (SEMIweak):
/// max over ψ of |∫⟨A∇u,∇ψ⟩ + ∫G·Q(u)·ψ| / (‖∇ψ‖₂ (‖∇u‖₂ + ‖G‖₂)).
pub fn weak_residual(
    u: &RealField,
    a: &MatrixField,
    g_source: &RealField,
    q: &Nonlinearity,
    tests: &WeakTestSet,
) -> f64 {
    let grid = u.grid;
    let n = grid.n();
    let dx2 = grid.dx() * grid.dx();
    let (ux, uy) = gradient(u);
    let ux_t = ux.total();
    let uy_t = uy.total();
    let g_t = g_source.total();
    let qu: Vec<f64> = u
        .total()
        .iter()
        .map(|&t| q.eval(Complex64::new(t, 0.0)).re)
        .collect();

    let grad_u_norm = (ux_t
        .iter()
        .zip(&uy_t)
        .map(|(a, b)| a * a + b * b)
        .sum::<f64>()
        * dx2)
        .sqrt();
    let scale = grad_u_norm + g_source.norm_2();

    let mut worst = 0.0f64;
    for (psi, gx, gy) in tests.iter() {
        let r_psi = psi.support_radius.unwrap_or(grid.guard_radius());
        let mut integral = 0.0;
        let mut grad_psi_sq = 0.0;
        for k in 0..n {
            for j in 0..n {
                if grid.node(j, k).norm() > r_psi {
                    continue;
                }
                let i = grid.index(j, k);
                let px = gx.data[i];
                let py = gy.data[i];
                grad_psi_sq += px * px + py * py;
                let flux_x = a.a11.data[i] * ux_t[i] + a.a12.data[i] * uy_t[i];
                let flux_y = a.a12.data[i] * ux_t[i] + a.a22.data[i] * uy_t[i];
                integral += flux_x * px + flux_y * py + g_t[i] * qu[i] * psi.data[i];
            }
        }
        let denom = (grad_psi_sq * dx2).sqrt() * scale;
        worst = worst.max(integral.abs() * dx2 / denom.max(f64::MIN_POSITIVE));
    }
    worst
}

/// Direct numerical check of the distributional change-of-variables identity:
/// ∫⟨A∇(T∘f),∇ψ⟩ = ∫⟨adj(M)(∇T∘f),∇ψ⟩ with M the Jacobian matrix of f.
pub fn verify_change_of_variables(
    t_field: &RealField,
    map: &QCMap,
    a: &MatrixField,
    tests: &WeakTestSet,
) -> Result<f64> {
    let src = map.grid();
    a.grid().same_as(&src)?;
    let img = t_field.grid;
    if !t_field.tail.is_zero() {
        return Err(Error::Config("image-side T must be a plain field".into()));
    }
    let lim = img.half_extent();
    let inner = 0.7 * lim;
    let cut = cinf_cutoff(img, inner, 0.95 * lim);
    let tc = t_field.multiply_by_compact(&cut);
    let (tx, ty) = gradient(&tc);

    let n = src.n();
    let dx2 = src.dx() * src.dx();
    let i_c = Complex64::new(0.0, 1.0);
    let mut worst = 0.0f64;
    for (psi, gx, gy) in tests.iter() {
        let r_psi = psi.support_radius.unwrap_or(src.guard_radius());
        let mut diff = 0.0;
        let mut grad_psi_sq = 0.0;
        let mut scale_sq = 0.0;
        for k in 0..n {
            for j in 0..n {
                let z = src.node(j, k);
                if z.norm() > r_psi {
                    continue;
                }
                let i = src.index(j, k);
                let px = gx.data[i];
                let py = gy.data[i];
                grad_psi_sq += px * px + py * py;
                let (w, fz, fzb) = map.eval_with_derivs(z);
                if w.re.abs() > inner || w.im.abs() > inner {
                    return Err(Error::GridMismatch(format!(
                        "image grid core does not cover f({}) = {}",
                        z, w
                    )));
                }
                let dxf = fz + fzb;
                let dyf = i_c * (fz - fzb);
                let (phi_x, phi_y) = (dxf.re, dyf.re);
                let (psi_x, psi_y) = (dxf.im, dyf.im);
                let gt = (interp::eval_real(&tx, w), interp::eval_real(&ty, w));
                // ∇(T∘f) = M^T (∇T)∘f
                let sx = phi_x * gt.0 + psi_x * gt.1;
                let sy = phi_y * gt.0 + psi_y * gt.1;
                scale_sq += sx * sx + sy * sy;
                let lhs_x = a.a11.data[i] * sx + a.a12.data[i] * sy;
                let lhs_y = a.a12.data[i] * sx + a.a22.data[i] * sy;
                // adj(M) (∇T)∘f
                let rhs_x = psi_y * gt.0 - phi_y * gt.1;
                let rhs_y = -psi_x * gt.0 + phi_x * gt.1;
                diff += (lhs_x - rhs_x) * px + (lhs_y - rhs_y) * py;
            }
        }
        let denom = (grad_psi_sq * dx2).sqrt() * ((scale_sq * dx2).sqrt() + 1.0);
        worst = worst.max(diff.abs() * dx2 / denom.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::{principal_map, residual_beltrami, LinearSolveConfig};
    use crate::builtins::{disk_indicator, radial_bump};
    use crate::ops::laplacian_real;

    fn grid() -> Grid {
        Grid::new(64, 2.0).unwrap()
    }

    // C-infinity plateau: exactly mu0 on |z| <= 0.45, 0 beyond 0.85
    fn mu_disk(g: Grid, mu0: Complex64) -> BeltramiCoefficient {
        let chi = cinf_cutoff(g, 0.45, 0.85);
        let f = chi.to_complex().scale(mu0);
        BeltramiCoefficient::new(f).unwrap()
    }

    #[test]
    fn dictionary_identity() {
        let g = grid();
        let a = MatrixField::identity(g);
        let mu = mu_from_a(&a).unwrap();
        assert_eq!(mu.k(), 0.0);
        let back = a_from_mu(&mu);
        for i in 0..g.len() {
            assert!((back.a11.data[i] - 1.0).abs() < 1e-14);
            assert!(back.a12.data[i].abs() < 1e-14);
        }
    }

    #[test]
    fn dictionary_diag_example() {
        let g = grid();
        let mu = mu_disk(g, Complex64::new(-1.0 / 3.0, 0.0));
        let a = a_from_mu(&mu);
        let c = g.n() / 2;
        assert!((a.a11.value(c, c) - 2.0).abs() < 1e-12);
        assert!((a.a22.value(c, c) - 0.5).abs() < 1e-12);
        assert!(a.a12.value(c, c).abs() < 1e-12);
        // mu back out
        let mu2 = mu_from_a(&a).unwrap();
        for i in 0..g.len() {
            assert!((mu2.field().data[i] - mu.field().data[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn dictionary_offdiag_example() {
        let g = grid();
        let s = std::f64::consts::SQRT_2;
        let mu = mu_disk(g, Complex64::new(0.0, -(s - 1.0)));
        let a = a_from_mu(&mu);
        let c = g.n() / 2;
        assert!((a.a11.value(c, c) - s).abs() < 1e-12);
        assert!((a.a22.value(c, c) - s).abs() < 1e-12);
        assert!((a.a12.value(c, c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dictionary_invariants() {
        let g = grid();
        let mu = mu_disk(g, Complex64::new(0.3, -0.4));
        let a = a_from_mu(&mu);
        let bound = mu.max_distortion();
        for i in 0..g.len() {
            let det = a.a11.data[i] * a.a22.data[i] - a.a12.data[i] * a.a12.data[i];
            assert!((det - 1.0).abs() < 1e-12);
            assert!(a.a11.data[i].abs() <= bound + 1e-12);
            assert!(a.a12.data[i].abs() <= bound + 1e-12);
            assert!(a.a22.data[i].abs() <= bound + 1e-12);
        }
        // MatrixField::new accepts it
        let rebuilt = MatrixField::new(a.a11.clone(), a.a12.clone(), a.a22.clone()).unwrap();
        let mu2 = mu_from_a(&rebuilt).unwrap();
        for i in 0..g.len() {
            assert!((mu2.field().data[i] - mu.field().data[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn sigma_assembly() {
        let g = Grid::new(256, 4.0).unwrap();
        let zero_mu = BeltramiCoefficient::zero(g);
        assert!(
            sigma_from_source(&zero_mu, &RealField::zeros(g))
                .unwrap()
                .norm_2()
                == 0.0
        );
        let chi = disk_indicator(g, 1.0, 3.0);
        let sigma = sigma_from_source(&zero_mu, &chi).unwrap();
        // closed forms: z/4 inside, 1/(4 zbar) outside
        let mut worst = 0.0f64;
        for k in 0..g.n() {
            for j in 0..g.n() {
                let z = g.node(j, k);
                let r = z.norm();
                let expected = if r < 0.85 {
                    z / 4.0
                } else if r > 1.15 && r < 2.0 {
                    1.0 / (4.0 * z.conj())
                } else {
                    continue;
                };
                worst = worst.max((sigma.value(j, k) - expected).norm());
            }
        }
        assert!(worst <= 2e-2, "sigma sup error {}", worst);
        // nonzero mu: pointwise recomputation oracle
        let mu = mu_disk(g, Complex64::new(0.4, 0.0));
        let sigma_mu = sigma_from_source(&mu, &chi).unwrap();
        let nd = potential_dbar(&chi).unwrap();
        for (j, k) in [(128, 128), (140, 120), (100, 150)] {
            let expected = nd.value(j, k) + mu.field().value(j, k) * nd.value(j, k).conj();
            assert!((sigma_mu.value(j, k) - expected).norm() < 1e-13);
        }
        // linearity in g
        let s2 = sigma_from_source(&mu, &chi.scale(2.5)).unwrap();
        assert!(s2.rel_l2_error(&sigma_mu.scale(Complex64::new(2.5, 0.0))) < 1e-13);
    }

    #[test]
    fn harmonic_source_examples() {
        let g = Grid::new(256, 4.0).unwrap();
        assert!(harmonic_source_solve(&RealField::zeros(g)).unwrap().norm_2() == 0.0);
        let b = radial_bump(g, 1.0, 0.8);
        let h = harmonic_source_solve(&b).unwrap();
        assert!(laplacian_real(&h).rel_l2_error(&b) < 1e-10);
    }

    #[test]
    fn preset_values() {
        let p = preset_q(QPresetKind::Power, Some(0.5)).unwrap();
        assert!((p.eval(Complex64::new(4.0, 0.0)).re - 2.0).abs() < 1e-14);
        assert!(p.eval(Complex64::new(-4.0, 0.0)).norm() == 0.0);
        let s = preset_q(QPresetKind::SignedPower, Some(0.5)).unwrap();
        assert!((s.eval(Complex64::new(-4.0, 0.0)).re + 2.0).abs() < 1e-14);
        let e = preset_q(QPresetKind::NegExp, None).unwrap();
        assert!((e.eval(Complex64::new(0.0, 0.0)).re - 1.0).abs() < 1e-14);
        assert!(preset_q(QPresetKind::Power, Some(1.5)).is_err());
    }

    #[test]
    fn poisson_identity_matrix_is_spectral() {
        let g = Grid::new(128, 2.0).unwrap();
        let a = MatrixField::identity(g);
        let src = radial_bump(g, 1.0, 0.7);
        let q = Nonlinearity::constant(Complex64::new(1.0, 0.0));
        let (u, report, _artifacts) =
            solve_poisson_semilinear(&a, &src, &q, &ContinuationConfig::default()).unwrap();
        assert!(report.converged);
        let lap = laplacian_real(&u);
        // compare on the core
        let core = g.guard_radius();
        let mut err = 0.0;
        let mut norm = 0.0;
        for k in 0..g.n() {
            for j in 0..g.n() {
                let z = g.node(j, k);
                if z.re.abs() <= core && z.im.abs() <= core {
                    let d = lap.value(j, k) - src.value(j, k);
                    err += d * d;
                    let v = src.value(j, k);
                    norm += v * v;
                }
            }
        }
        assert!((err / norm).sqrt() < 1e-6);
    }

    #[test]
    fn poisson_anisotropic_weak_residual() {
        let g = Grid::new(128, 2.0).unwrap();
        let mu = mu_disk(g, Complex64::new(-1.0 / 3.0, 0.0));
        let a = a_from_mu(&mu);
        let src = radial_bump(g, 1.0, 0.7);
        let q = Nonlinearity::real_neg_exp();
        let cfg = ContinuationConfig {
            inner_tol: 1e-9,
            ..ContinuationConfig::default()
        };
        let (u, report, artifacts) = solve_poisson_semilinear(&a, &src, &q, &cfg).unwrap();
        assert!(report.converged);
        let tests = WeakTestSet::generate(g, 20, 11);
        let res = weak_residual(&u, &a, &src, &q, &tests);
        assert!(res <= 1e-3, "weak residual {}", res);
        // factorized representation on the core
        let core = g.guard_radius();
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for k in 0..g.n() {
            for j in 0..g.n() {
                let z = g.node(j, k);
                if z.re.abs() <= core && z.im.abs() <= core {
                    let w = artifacts.map.forward().value(j, k);
                    let hv = interp::eval_complex(&artifacts.h, w);
                    err = err.max((hv.re - u.value(j, k)).abs());
                    scale = scale.max(u.value(j, k).abs());
                }
            }
        }
        assert!(err <= 5e-3 * scale.max(1.0), "factorized sup error {}", err);
    }

    #[test]
    fn a_conjugate_harmonic_example() {
        let g = Grid::new(256, 2.0).unwrap();
        let a = MatrixField::identity(g);
        let cut = cinf_cutoff(g, 1.2, 1.8);
        let u = RealField::sample(g, |z| (z * z).re, None).multiply_by_compact(&cut);
        let v = a_conjugate(&u, &a, &RealField::zeros(g)).unwrap();
        let core = 0.5 * g.guard_radius();
        let mut worst = 0.0f64;
        for k in 0..g.n() {
            for j in 0..g.n() {
                let z = g.node(j, k);
                if z.re.abs() <= core && z.im.abs() <= core {
                    worst = worst.max((v.value(j, k) - (z * z).im).abs());
                }
            }
        }
        assert!(worst <= 1e-3, "conjugate sup error {}", worst);
        // trivial case
        let v0 = a_conjugate(&RealField::zeros(g), &a, &RealField::zeros(g)).unwrap();
        assert!(v0.norm_2() == 0.0);
    }

    #[test]
    fn a_conjugate_rebuilds_omega() {
        let g = Grid::new(128, 2.0).unwrap();
        let mu = mu_disk(g, Complex64::new(-1.0 / 3.0, 0.0));
        let a = a_from_mu(&mu);
        let src = radial_bump(g, 1.0, 0.7);
        let q = Nonlinearity::real_neg_exp();
        let (u, _, artifacts) =
            solve_poisson_semilinear(&a, &src, &q, &ContinuationConfig::default()).unwrap();
        // effective scalar source g = G Q(u)
        let qu = u.map_total(|t| q.eval(Complex64::new(t, 0.0)).re);
        let g_eff = qu.multiply_by_compact(&src);
        let v = a_conjugate(&u, &a, &g_eff).unwrap();
        let sigma = sigma_from_source(&mu, &g_eff).unwrap();
        let rebuilt = u.to_complex().add(&v.to_complex().scale(Complex64::new(0.0, 1.0)));
        let res = residual_beltrami(&mu, &sigma, &rebuilt);
        assert!(res <= 1e-4, "rebuilt residual {}", res);
        // and v matches Im omega up to the normalization
        let diff = v.sub(&artifacts.omega.im());
        assert!(diff.norm_2() <= 1e-8 * artifacts.omega.norm_2().max(1.0));
    }

    #[test]
    fn weak_residual_detects_non_solutions() {
        let g = grid();
        let a = MatrixField::identity(g);
        let tests = WeakTestSet::generate(g, 10, 3);
        let zero = RealField::zeros(g);
        let q = Nonlinearity::constant(Complex64::new(1.0, 0.0));
        assert_eq!(weak_residual(&zero, &a, &zero, &q, &tests), 0.0);
        let u = RealField::sample(g, |z| z.norm_sqr(), None);
        let res = weak_residual(&u, &a, &zero, &q, &tests);
        assert!(res > 1e-2, "non-solution residual {}", res);
    }

    #[test]
    fn change_of_variables_identity_map() {
        let g = grid();
        let a = MatrixField::identity(g);
        let mu = BeltramiCoefficient::zero(g);
        let map = principal_map(&mu, &LinearSolveConfig::default()).unwrap();
        let t = radial_bump(g, 1.0, 0.9);
        let tests = WeakTestSet::generate(g, 8, 5);
        let res = verify_change_of_variables(&t, &map, &a, &tests).unwrap();
        assert!(res <= 1e-10, "identity-map residual {}", res);
    }

    #[test]
    fn change_of_variables_quadratic() {
        let g = Grid::new(128, 2.0).unwrap();
        let mu = mu_disk(g, Complex64::new(0.25, 0.1));
        let a = a_from_mu(&mu);
        let map = principal_map(&mu, &LinearSolveConfig::default()).unwrap();
        let (xmin, xmax, ymin, ymax) = map.image_bounds();
        let lim = xmin.abs().max(xmax).max(ymin.abs()).max(ymax);
        let img = Grid::new(g.n(), lim * 1.05).unwrap();
        let t = RealField::sample(img, |w| w.norm_sqr(), None);
        let tests = WeakTestSet::generate(g, 12, 9);
        let res = verify_change_of_variables(&t, &map, &a, &tests).unwrap();
        assert!(res <= 1e-4, "change-of-variables residual {}", res);
    }
}
