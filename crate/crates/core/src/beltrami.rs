//! Linear Beltrami solvers: the inhomogeneous equation by contraction, the
//! principal quasiconformal map, map inversion, and diagnostic norms.

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::Grid;
use crate::interp;
use crate::ops::{d_z, d_zbar};
use crate::transforms::{beurling_transform_unchecked, cauchy_transform_unchecked};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const DEGENERACY_MARGIN: f64 = 1e-6;

/// A Beltrami coefficient: compactly supported µ samples with a certified
/// sup-norm k < 1.
#[derive(Debug, Clone)]
pub struct BeltramiCoefficient {
    field: ComplexField,
    k: f64,
    support_radius: f64,
}

impl BeltramiCoefficient {
    pub fn new(field: ComplexField) -> Result<Self> {
        if !field.tail.is_zero() {
            return Err(Error::Config(
                "a Beltrami coefficient must be a plain sampled field".into(),
            ));
        }
        let support_radius = field
            .support_radius
            .ok_or(Error::MissingSupport)?;
        if support_radius > field.grid.guard_radius() {
            return Err(Error::Config(format!(
                "coefficient support {} exceeds the guard radius {}",
                support_radius,
                field.grid.guard_radius()
            )));
        }
        let k = field.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if k >= 1.0 - DEGENERACY_MARGIN {
            return Err(Error::Degenerate(k));
        }
        Ok(BeltramiCoefficient {
            field,
            k,
            support_radius,
        })
    }

    pub fn zero(grid: Grid) -> Self {
        let mut field = ComplexField::zeros(grid);
        field.support_radius = Some(0.0);
        BeltramiCoefficient {
            field,
            k: 0.0,
            support_radius: 0.0,
        }
    }

    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn grid(&self) -> Grid {
        self.field.grid
    }

    /// Maximum pointwise distortion K = (1 + k) / (1 - k).
    pub fn max_distortion(&self) -> f64 {
        (1.0 + self.k) / (1.0 - self.k)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LinearSolveConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LinearSolveConfig {
    fn default() -> Self {
        LinearSolveConfig {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

impl LinearSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-τ residual block of a continuation run.
#[derive(Debug, Clone, Serialize)]
pub struct TauBlock {
    pub tau: f64,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

/// Convergence record of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    #[serde(rename = "residuals")]
    pub residual_history: Vec<f64>,
    pub contraction_ratio: f64,
    pub converged: bool,
    pub final_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_schedule: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_blocks: Option<Vec<TauBlock>>,
}

impl SolveReport {
    pub fn trivial() -> Self {
        SolveReport {
            iterations: 0,
            residual_history: Vec::new(),
            contraction_ratio: 0.0,
            converged: true,
            final_residual: 0.0,
            tau_schedule: None,
            tau_blocks: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

fn contraction_ratio(diffs: &[f64]) -> f64 {
    diffs
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max)
}

/// Solve the inhomogeneous equation ω_z̄ = µ ω_z + σ with ω(0) = 0 by
/// iterating the density fixed point h = µ T h + σ.
pub fn solve_inhomogeneous(
    mu: &BeltramiCoefficient,
    sigma: &ComplexField,
    cfg: &LinearSolveConfig,
) -> Result<(ComplexField, SolveReport)> {
    if sigma.support_radius.is_none() && sigma.norm_2() > 0.0 {
        return Err(Error::MissingSupport);
    }
    solve_inhomogeneous_unchecked(mu, sigma, cfg)
}

/// Same contraction, but accepts sources that are not compactly supported
/// (tails included). Used by operator pipelines whose effective source is a
/// potential derivative.
pub(crate) fn solve_inhomogeneous_unchecked(
    mu: &BeltramiCoefficient,
    sigma: &ComplexField,
    cfg: &LinearSolveConfig,
) -> Result<(ComplexField, SolveReport)> {
    cfg.validate()?;
    mu.grid().same_as(&sigma.grid)?;
    let denom = sigma.norm_2();
    if denom == 0.0 {
        return Ok((ComplexField::zeros(sigma.grid), SolveReport::trivial()));
    }

    let mut h = sigma.clone();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let th = beurling_transform_unchecked(&h)?;
        let next = th.multiply_by_compact(mu.field()).add(sigma);
        // h_{m+1} - h_m is exactly the residual of h_m in h = µTh + σ
        let rel = next.sub(&h).norm_2() / denom;
        history.push(rel);
        h = next;
        if rel <= cfg.tol {
            converged = true;
            break;
        }
    }
    let omega = cauchy_transform_unchecked(&h)?;
    let final_residual = *history.last().unwrap();
    let report = SolveReport {
        iterations,
        contraction_ratio: contraction_ratio(&history),
        converged,
        final_residual,
        residual_history: history,
        tau_schedule: None,
        tau_blocks: None,
    };
    Ok((omega, report))
}

/// Independent residual certificate for Eq-style solutions:
/// ‖ω_z̄ − µ ω_z − σ‖₂ relative to the natural scale of the data.
pub fn residual_beltrami(
    mu: &BeltramiCoefficient,
    sigma: &ComplexField,
    omega: &ComplexField,
) -> f64 {
    let om_z = d_z(omega);
    let om_zb = d_zbar(omega);
    let lhs = om_zb.sub(&om_z.multiply_by_compact(mu.field())).sub(sigma);
    let denom = sigma
        .norm_2()
        .max(om_z.norm_2() * mu.k())
        .max(f64::MIN_POSITIVE);
    lhs.norm_2() / denom
}

/// Empirical Hölder(1 - 2/p) quotient over seeded random node pairs.
pub fn holder_quotient(omega: &ComplexField, p: f64, sample_pairs: usize, seed: u64) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::Config("Hölder exponent requires p > 2".into()));
    }
    let grid = omega.grid;
    let n = grid.n();
    let alpha = 1.0 - 2.0 / p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut drawn = 0;
    while drawn < sample_pairs {
        let (j1, k1) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (j2, k2) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if j1 == j2 && k1 == k2 {
            continue;
        }
        drawn += 1;
        let dz = (grid.node(j1, k1) - grid.node(j2, k2)).norm();
        let dv = (omega.value(j1, k1) - omega.value(j2, k2)).norm();
        best = best.max(dv / dz.powf(alpha));
    }
    Ok(best)
}

const SEED_TABLE_SIZE: usize = 64;
const NEWTON_MAX_STEPS: usize = 50;

#[derive(Debug, Clone)]
struct InverseSeed {
    x0: f64,
    y0: f64,
    bx: f64,
    by: f64,
    table: Vec<Complex64>,
}

impl InverseSeed {
    fn lookup(&self, w: Complex64) -> Complex64 {
        let m = SEED_TABLE_SIZE;
        let j = (((w.re - self.x0) / self.bx) as i64).clamp(0, m as i64 - 1) as usize;
        let k = (((w.im - self.y0) / self.by) as i64).clamp(0, m as i64 - 1) as usize;
        self.table[k * m + j]
    }
}

/// The principal µ-conformal map f = z + ω with its derivatives, Jacobian
/// certificate and an inversion seed table.
#[derive(Debug, Clone)]
pub struct QCMap {
    forward: ComplexField,
    f_z: ComplexField,
    f_zbar: ComplexField,
    jacobian: RealField,
    mu: BeltramiCoefficient,
    seed: InverseSeed,
    image_bounds: (f64, f64, f64, f64),
}

impl QCMap {
    pub fn forward(&self) -> &ComplexField {
        &self.forward
    }

    pub fn jacobian(&self) -> &RealField {
        &self.jacobian
    }

    pub fn mu(&self) -> &BeltramiCoefficient {
        &self.mu
    }

    pub fn grid(&self) -> Grid {
        self.forward.grid
    }

    /// f(z) at an arbitrary point by bicubic interpolation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        interp::eval_complex(&self.forward, z)
    }

    /// (f, f_z, f_z̄) at an arbitrary point.
    pub fn eval_with_derivs(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        (
            interp::eval_complex(&self.forward, z),
            interp::eval_complex(&self.f_z, z),
            interp::eval_complex(&self.f_zbar, z),
        )
    }

    /// Axis-aligned bounding box (xmin, xmax, ymin, ymax) of the image nodes.
    pub fn image_bounds(&self) -> (f64, f64, f64, f64) {
        self.image_bounds
    }
}

/// Compute the principal map for µ: f = z + ω with ω_z̄ = µ ω_z + µ.
pub fn principal_map(mu: &BeltramiCoefficient, cfg: &LinearSolveConfig) -> Result<QCMap> {
    let (omega, report) = solve_inhomogeneous(mu, mu.field(), cfg)?;
    if !report.converged {
        return Err(Error::Diverged(format!(
            "principal-map contraction stalled at residual {:.3e}",
            report.final_residual
        )));
    }
    let mut forward = omega;
    forward.tail.0[1] += Complex64::new(1.0, 0.0); // f = z + omega
    forward.support_radius = None;
    build_map(forward, mu.clone())
}

fn build_map(forward: ComplexField, mu: BeltramiCoefficient) -> Result<QCMap> {
    let grid = forward.grid;
    let n = grid.n();
    let f_z = d_z(&forward);
    let f_zbar = d_zbar(&forward);

    let mut jac = RealField::zeros(grid);
    let mut min_j = f64::INFINITY;
    for k in 0..n {
        for j in 0..n {
            let i = grid.index(j, k);
            let v = f_z.value(j, k).norm_sqr() - f_zbar.value(j, k).norm_sqr();
            jac.data[i] = v;
            min_j = min_j.min(v);
        }
    }
    if min_j <= 0.0 {
        return Err(Error::NonpositiveJacobian(min_j));
    }

    // image bounding box
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..n {
        for j in 0..n {
            let w = forward.value(j, k);
            xmin = xmin.min(w.re);
            xmax = xmax.max(w.re);
            ymin = ymin.min(w.im);
            ymax = ymax.max(w.im);
        }
    }

    // Coarse inverse lookup: each image bin remembers the source node whose
    // image lands closest to the bin center; empty bins fall back to w itself
    // (f is near the identity away from the support).
    let m = SEED_TABLE_SIZE;
    let bx = (xmax - xmin) / m as f64;
    let by = (ymax - ymin) / m as f64;
    let mut table = Vec::with_capacity(m * m);
    for k in 0..m {
        for j in 0..m {
            let cx = xmin + (j as f64 + 0.5) * bx;
            let cy = ymin + (k as f64 + 0.5) * by;
            table.push(Complex64::new(cx, cy));
        }
    }
    let mut best = vec![f64::INFINITY; m * m];
    let stride = (n / 128).max(1);
    for k in (0..n).step_by(stride) {
        for j in (0..n).step_by(stride) {
            let z = grid.node(j, k);
            let w = forward.value(j, k);
            let bj = (((w.re - xmin) / bx) as i64).clamp(0, m as i64 - 1) as usize;
            let bk = (((w.im - ymin) / by) as i64).clamp(0, m as i64 - 1) as usize;
            let cx = xmin + (bj as f64 + 0.5) * bx;
            let cy = ymin + (bk as f64 + 0.5) * by;
            let d = (w - Complex64::new(cx, cy)).norm();
            let idx = bk * m + bj;
            if d < best[idx] {
                best[idx] = d;
                table[idx] = z;
            }
        }
    }

    Ok(QCMap {
        forward,
        f_z,
        f_zbar,
        jacobian: jac,
        mu,
        seed: InverseSeed {
            x0: xmin,
            y0: ymin,
            bx,
            by,
            table,
        },
        image_bounds: (xmin, xmax, ymin, ymax),
    })
}

/// Invert the map at a point of its image: find z with f(z) = w.
pub fn invert_map(map: &QCMap, w: Complex64) -> Result<Complex64> {
    let grid = map.grid();
    let l = grid.half_extent();
    let (xmin, xmax, ymin, ymax) = map.image_bounds;
    let margin = 2.0 * grid.dx();
    if w.re < xmin - margin || w.re > xmax + margin || w.im < ymin - margin || w.im > ymax + margin {
        return Err(Error::OutOfRange(format!("{}", w)));
    }

    let tol = 1e-9 * l;
    let mut z = map.seed.lookup(w);
    for _ in 0..NEWTON_MAX_STEPS {
        let (f, fz, fzb) = map.eval_with_derivs(z);
        let r = w - f;
        if r.norm() <= tol {
            if z.re.abs() > l || z.im.abs() > l {
                return Err(Error::OutOfRange(format!("{}", w)));
            }
            return Ok(z);
        }
        let j = fz.norm_sqr() - fzb.norm_sqr();
        if j <= f64::MIN_POSITIVE {
            return Err(Error::NewtonStagnation);
        }
        let dz = (fz.conj() * r - fzb * r.conj()) / j;
        z += dz;
        if z.re.abs() > 2.0 * l || z.im.abs() > 2.0 * l {
            return Err(Error::OutOfRange(format!("{}", w)));
        }
    }
    Err(Error::NewtonStagnation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::radial_bump;
    use crate::transforms::cauchy_transform;

    fn grid() -> Grid {
        Grid::new(64, 2.0).unwrap()
    }

    fn bump_mu(g: Grid, k: f64) -> BeltramiCoefficient {
        BeltramiCoefficient::new(radial_bump(g, k, 0.8).to_complex()).unwrap()
    }

    fn bump_sigma(g: Grid) -> ComplexField {
        let b = radial_bump(g, 1.0, 0.7);
        let mut f = b.to_complex();
        f.support_radius = Some(0.7);
        f
    }

    #[test]
    fn degenerate_mu_rejected() {
        let g = grid();
        let err = BeltramiCoefficient::new(radial_bump(g, 1.0, 0.8).to_complex());
        assert!(matches!(err, Err(Error::Degenerate(_))));
        let ok = bump_mu(g, 0.9);
        assert!((ok.k() - 0.9).abs() < 1e-12);
        assert!((ok.max_distortion() - 19.0).abs() < 1e-9);
    }

    #[test]
    fn zero_mu_reduces_to_cauchy() {
        let g = grid();
        let mu = BeltramiCoefficient::zero(g);
        let sigma = bump_sigma(g);
        let (omega, report) = solve_inhomogeneous(&mu, &sigma, &LinearSolveConfig::default()).unwrap();
        assert!(report.converged);
        let direct = cauchy_transform(&sigma).unwrap();
        assert!(omega.rel_l2_error(&direct) < 1e-12);
        assert!(residual_beltrami(&mu, &sigma, &omega) < 1e-10);
    }

    #[test]
    fn zero_sigma_gives_zero() {
        let g = grid();
        let mu = bump_mu(g, 0.5);
        let zero = ComplexField::zeros(g);
        let (omega, report) = solve_inhomogeneous(&mu, &zero, &LinearSolveConfig::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert!(omega.norm_p(f64::INFINITY) == 0.0);
    }

    #[test]
    fn contraction_solve_certified() {
        let g = grid();
        let mu = bump_mu(g, 0.3);
        let sigma = bump_sigma(g);
        let (omega, report) = solve_inhomogeneous(&mu, &sigma, &LinearSolveConfig::default()).unwrap();
        assert!(report.converged);
        assert!(report.contraction_ratio <= 0.32);
        assert!(residual_beltrami(&mu, &sigma, &omega) < 1e-8);
        // normalization
        let origin = omega.value(g.n() / 2, g.n() / 2);
        assert!(origin.norm() <= 1e-12 * omega.norm_p(f64::INFINITY));
        // history nonincreasing
        for w in report.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn solver_is_linear() {
        let g = grid();
        let mu = bump_mu(g, 0.4);
        let s1 = bump_sigma(g);
        let s2 = {
            let b = RealField::sample(
                g,
                |z| crate::builtins::bump_at(z, Complex64::new(0.3, -0.2), 0.5, 1.0),
                Some(0.9),
            );
            b.to_complex()
        };
        let a = Complex64::new(1.3, -0.4);
        let b = Complex64::new(-0.2, 0.8);
        let cfg = LinearSolveConfig {
            tol: 1e-13,
            max_iter: 400,
        };
        let combo = s1.scale(a).add(&s2.scale(b));
        let (om_combo, _) = solve_inhomogeneous(&mu, &combo, &cfg).unwrap();
        let (om1, _) = solve_inhomogeneous(&mu, &s1, &cfg).unwrap();
        let (om2, _) = solve_inhomogeneous(&mu, &s2, &cfg).unwrap();
        let lin = om1.scale(a).add(&om2.scale(b));
        assert!(om_combo.rel_l2_error(&lin) < 1e-9);
    }

    #[test]
    fn report_serializes_expected_keys() {
        let g = grid();
        let mu = bump_mu(g, 0.3);
        let sigma = bump_sigma(g);
        let (_, report) = solve_inhomogeneous(&mu, &sigma, &LinearSolveConfig::default()).unwrap();
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!(json["iterations"].is_u64());
        assert!(json["residuals"].is_array());
        assert!(json["contraction_ratio"].is_f64());
        assert!(json["converged"].is_boolean());
        assert!(json.get("tau_schedule").is_none());
    }

    #[test]
    fn principal_map_identity_for_zero_mu() {
        let g = grid();
        let mu = BeltramiCoefficient::zero(g);
        let map = principal_map(&mu, &LinearSolveConfig::default()).unwrap();
        for k in 0..g.n() {
            for j in 0..g.n() {
                let z = g.node(j, k);
                assert!((map.forward().value(j, k) - z).norm() < 1e-12);
                assert!((map.jacobian().value(j, k) - 1.0).abs() < 1e-12);
            }
        }
        let w = Complex64::new(0.3, 0.1);
        assert!((invert_map(&map, w).unwrap() - w).norm() < 1e-12);
    }

    #[test]
    fn principal_map_residual_and_jacobian() {
        let g = Grid::new(128, 2.0).unwrap();
        let mu = BeltramiCoefficient::new(radial_bump(g, 0.3, 0.8).to_complex()).unwrap();
        let map = principal_map(&mu, &LinearSolveConfig::default()).unwrap();
        // f_zbar = mu f_z as a relative residual
        let fz = d_z(map.forward());
        let fzb = d_zbar(map.forward());
        let res = fzb.sub(&fz.multiply_by_compact(mu.field())).norm_2() / fz.norm_2();
        assert!(res < 1e-8);
        let min_j = map
            .jacobian()
            .data
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        assert!(min_j > 0.0);
    }

    #[test]
    fn map_roundtrip_on_interior_nodes() {
        let g = Grid::new(128, 2.0).unwrap();
        let mu = BeltramiCoefficient::new(radial_bump(g, 0.4, 0.8).to_complex()).unwrap();
        let map = principal_map(&mu, &LinearSolveConfig::default()).unwrap();
        let tol = 1e-8 * g.half_extent();
        for (j, k) in [(40, 40), (64, 64), (64, 80), (90, 50), (32, 96)] {
            let z0 = g.node(j, k);
            let w = map.forward().value(j, k);
            let z = invert_map(&map, w).unwrap();
            assert!(
                (z - z0).norm() <= tol,
                "roundtrip error {} at node ({}, {})",
                (z - z0).norm(),
                j,
                k
            );
        }
    }

    #[test]
    fn invert_rejects_far_points() {
        let g = grid();
        let mu = bump_mu(g, 0.3);
        let map = principal_map(&mu, &LinearSolveConfig::default()).unwrap();
        let far = Complex64::new(50.0, 0.0);
        assert!(matches!(invert_map(&map, far), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn holder_quotient_scaling() {
        let g = grid();
        let mu = bump_mu(g, 0.3);
        let sigma = bump_sigma(g);
        let (omega, _) = solve_inhomogeneous(&mu, &sigma, &LinearSolveConfig::default()).unwrap();
        let q1 = holder_quotient(&omega, 4.0, 500, 7).unwrap();
        assert!(q1 > 0.0);
        let (omega2, _) = solve_inhomogeneous(
            &mu,
            &sigma.scale(Complex64::new(2.0, 0.0)),
            &LinearSolveConfig::default(),
        )
        .unwrap();
        let q2 = holder_quotient(&omega2, 4.0, 500, 7).unwrap();
        assert!((q2 - 2.0 * q1).abs() < 1e-8 * q1.max(1.0));
        // trivial cases
        let zero = ComplexField::zeros(g);
        assert_eq!(holder_quotient(&zero, 4.0, 100, 1).unwrap(), 0.0);
    }

    #[test]
    fn residual_beltrami_plugin_value() {
        let g = grid();
        let mu = bump_mu(g, 0.3);
        let sigma = bump_sigma(g);
        let omega = cauchy_transform(&sigma).unwrap();
        // omega solves the mu=0 equation, so the residual is exactly mu*d_z omega
        let om_z = d_z(&omega);
        let expected =
            om_z.multiply_by_compact(mu.field()).norm_2() / sigma.norm_2().max(om_z.norm_2() * mu.k());
        let got = residual_beltrami(&mu, &sigma, &omega);
        assert!((got - expected).abs() < 1e-10 * expected);
        assert!(got > 1e-3);
    }
}
