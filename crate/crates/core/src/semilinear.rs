//! Semi-linear Beltrami solver: continuation in τ with damped Picard inner
//! iterations, sublinear nonlinearities, and the factorization ω = H ∘ f.

use crate::beltrami::{
    invert_map, principal_map, residual_beltrami, solve_inhomogeneous_unchecked,
    BeltramiCoefficient, LinearSolveConfig, QCMap, SolveReport, TauBlock,
};
use crate::error::{Error, Result};
use crate::field::{ComplexField, ComplexTail};
use crate::grid::Grid;
use crate::interp;
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonlinearityKind {
    Constant,
    Power(f64),
    SignedPower(f64),
    NegExp,
    Custom,
}

/// A sublinear nonlinearity q with its measured sublinearity probe.
#[derive(Clone)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    eval: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
    sublinearity_probe: Vec<(f64, f64)>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("kind", &self.kind)
            .field("sublinearity_probe", &self.sublinearity_probe)
            .finish()
    }
}

const PROBE_RADII: [f64; 6] = [0.1, 1.0, 10.0, 100.0, 1e3, 1e4];

fn probe(eval: &Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>) -> Vec<(f64, f64)> {
    PROBE_RADII
        .iter()
        .map(|&t| (t, q_star_of(eval, t) / t))
        .collect()
}

impl Nonlinearity {
    fn shipped(kind: NonlinearityKind, f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        let eval: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync> = Arc::new(f);
        let sublinearity_probe = probe(&eval);
        Nonlinearity {
            kind,
            eval,
            sublinearity_probe,
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::shipped(NonlinearityKind::Constant, move |_| c)
    }

    /// q(w) = |w|^λ with λ ∈ (0, 1).
    pub fn power(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self::shipped(NonlinearityKind::Power(lambda), move |w| {
            Complex64::new(w.norm().powf(lambda), 0.0)
        }))
    }

    /// q(w) = |w|^{λ-1} w with λ ∈ (0, 1).
    pub fn signed_power(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self::shipped(NonlinearityKind::SignedPower(lambda), move |w| {
            if w.norm_sqr() == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                w * w.norm().powf(lambda - 1.0)
            }
        }))
    }

    /// q(w) = exp(-|w|).
    pub fn neg_exp() -> Self {
        Self::shipped(NonlinearityKind::NegExp, |w| {
            Complex64::new((-w.norm()).exp(), 0.0)
        })
    }

    /// Q(u) = max(u, 0)^λ applied to Re w (dead-core form).
    pub fn real_power(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self::shipped(NonlinearityKind::Power(lambda), move |w| {
            Complex64::new(w.re.max(0.0).powf(lambda), 0.0)
        }))
    }

    /// Q(u) = |u|^{λ-1} u applied to Re w.
    pub fn real_signed_power(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self::shipped(NonlinearityKind::SignedPower(lambda), move |w| {
            let u = w.re;
            if u == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(u.abs().powf(lambda - 1.0) * u, 0.0)
            }
        }))
    }

    /// Q(u) = exp(-|u|) applied to Re w.
    pub fn real_neg_exp() -> Self {
        Self::shipped(NonlinearityKind::NegExp, |w| {
            Complex64::new((-w.re.abs()).exp(), 0.0)
        })
    }

    /// A caller-supplied q; checked for continuity and sublinear growth on
    /// the probe radii.
    pub fn custom(f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Result<Self> {
        let eval: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync> = Arc::new(f);
        // continuity probe: small perturbations must produce small jumps
        for i in 0..24 {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / 24.0;
            let r = 0.25 * (1.0 + i as f64);
            let w = Complex64::from_polar(r, angle);
            let h = Complex64::new(1e-6, 1e-6);
            let jump = ((eval)(w + h) - (eval)(w)).norm();
            if !jump.is_finite() || jump > 0.05 * (1.0 + (eval)(w).norm()) {
                return Err(Error::Config(format!(
                    "custom nonlinearity looks discontinuous near {} (jump {})",
                    w, jump
                )));
            }
        }
        let sublinearity_probe = probe(&eval);
        let first = sublinearity_probe.first().unwrap().1;
        let last = sublinearity_probe.last().unwrap().1;
        if !(last.is_finite() && last < first) {
            return Err(Error::Config(
                "custom nonlinearity fails the sublinearity probe: q*(t)/t does not decay".into(),
            ));
        }
        Ok(Nonlinearity {
            kind: NonlinearityKind::Custom,
            eval,
            sublinearity_probe,
        })
    }

    /// Lift a real nonlinearity Q to q = Q ∘ Re.
    pub fn from_real(q: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::custom(move |w| Complex64::new(q(w.re), 0.0))
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    pub fn eval(&self, w: Complex64) -> Complex64 {
        (self.eval)(w)
    }

    /// Measured (t, q_*(t)/t) pairs along the probe radii.
    pub fn sublinearity_probe(&self) -> &[(f64, f64)] {
        &self.sublinearity_probe
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Config(format!(
            "power exponent must lie in (0, 1), got {}",
            lambda
        )));
    }
    Ok(())
}

const QSTAR_RADIAL: usize = 64;
const QSTAR_ANGULAR: usize = 64;

fn q_star_of(eval: &Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>, t: f64) -> f64 {
    let mut best = (eval)(Complex64::new(0.0, 0.0)).norm();
    for i in 1..=QSTAR_RADIAL {
        let r = t * i as f64 / QSTAR_RADIAL as f64;
        for j in 0..QSTAR_ANGULAR {
            let angle = 2.0 * std::f64::consts::PI * j as f64 / QSTAR_ANGULAR as f64;
            best = best.max((eval)(Complex64::from_polar(r, angle)).norm());
        }
    }
    best
}

/// q_*(t) = max_{|w| <= t} |q(w)| over a dense angular-radial sample.
pub fn q_star(q: &Nonlinearity, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Config("q_star radius must be nonnegative".into()));
    }
    Ok(q_star_of(&q.eval, t))
}

#[derive(Debug, Clone, Copy)]
pub struct ContinuationConfig {
    pub tau_steps: usize,
    /// Picard damping θ ∈ (0, 1].
    pub theta: f64,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Blow-up guard: multiple of the source scale an iterate may reach.
    pub blowup_guard: f64,
    pub linear: LinearSolveConfig,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            tau_steps: 8,
            theta: 0.5,
            inner_tol: 1e-9,
            inner_max_iter: 200,
            blowup_guard: 1e3,
            linear: LinearSolveConfig::default(),
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_steps < 1 {
            return Err(Error::Config("tau_steps must be at least 1".into()));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config("damping theta must lie in (0, 1]".into()));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::Config("inner_tol must be positive".into()));
        }
        if self.inner_max_iter < 1 {
            return Err(Error::Config("inner_max_iter must be at least 1".into()));
        }
        if !(self.blowup_guard > 0.0) {
            return Err(Error::Config("blowup_guard must be positive".into()));
        }
        self.linear.validate()
    }
}

/// Solve ω_z̄ = µ ω_z + σ q(ω) by continuation in τ.
pub fn solve_semilinear(
    mu: &BeltramiCoefficient,
    sigma: &ComplexField,
    q: &Nonlinearity,
    cfg: &ContinuationConfig,
) -> Result<(ComplexField, SolveReport)> {
    if sigma.support_radius.is_none() && sigma.norm_2() > 0.0 {
        return Err(Error::MissingSupport);
    }
    solve_semilinear_operator(mu, sigma, |p| Ok(p.clone()), q, cfg)
}

/// Solve ω_z̄ = µ ω_z + 𝓛[G q(ω)] for a caller-supplied bounded linear
/// field operator 𝓛. `solve_semilinear` is the specialization 𝓛 = identity
/// with G = σ.
pub fn solve_semilinear_operator(
    mu: &BeltramiCoefficient,
    g_weight: &ComplexField,
    l_op: impl Fn(&ComplexField) -> Result<ComplexField>,
    q: &Nonlinearity,
    cfg: &ContinuationConfig,
) -> Result<(ComplexField, SolveReport)> {
    cfg.validate()?;
    mu.grid().same_as(&g_weight.grid)?;
    let grid = g_weight.grid;
    let scale = g_weight.norm_2();
    if scale == 0.0 {
        return Ok((ComplexField::zeros(grid), SolveReport::trivial()));
    }
    let guard_norm = cfg.blowup_guard * scale.max(l_op(g_weight)?.norm_2());

    let mut g = ComplexField::zeros(grid);
    let mut omega = ComplexField::zeros(grid);
    let mut schedule = Vec::with_capacity(cfg.tau_steps);
    let mut blocks: Vec<TauBlock> = Vec::with_capacity(cfg.tau_steps);
    let mut history = Vec::new();
    let mut total_iters = 0;
    let mut converged = true;

    for step in 1..=cfg.tau_steps {
        let tau = step as f64 / cfg.tau_steps as f64;
        schedule.push(tau);
        let mut block = TauBlock {
            tau,
            iterations: 0,
            residuals: Vec::new(),
        };
        let mut block_ok = false;
        for _ in 0..cfg.inner_max_iter {
            block.iterations += 1;
            total_iters += 1;
            let (om, lin) = solve_inhomogeneous_unchecked(mu, &g, &cfg.linear)?;
            if !lin.converged {
                return Err(Error::Diverged(format!(
                    "inner linear solve stalled at tau = {}",
                    tau
                )));
            }
            omega = om;
            let qvals = omega.map_total(|w| q.eval(w));
            let product = qvals.multiply_by_compact(g_weight);
            let target = l_op(&product.scale(Complex64::new(tau, 0.0)))?;
            let res = g.sub(&target).norm_2() / scale;
            block.residuals.push(res);
            history.push(res);
            if res <= cfg.inner_tol {
                block_ok = true;
                break;
            }
            g = g
                .scale(Complex64::new(1.0 - cfg.theta, 0.0))
                .add(&target.scale(Complex64::new(cfg.theta, 0.0)));
            let gn = g.norm_2();
            if !gn.is_finite() || gn > guard_norm {
                return Err(Error::Blowup(format!(
                    "iterate norm {:.3e} exceeded the guard {:.3e} at tau = {}",
                    gn, guard_norm, tau
                )));
            }
        }
        if !block_ok {
            converged = false;
            blocks.push(block);
            break;
        }
        blocks.push(block);
    }

    let final_residual = *history.last().unwrap_or(&0.0);
    let last_block = blocks.last().map(|b| b.residuals.as_slice()).unwrap_or(&[]);
    let contraction_ratio = last_block
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    let report = SolveReport {
        iterations: total_iters,
        residual_history: history,
        contraction_ratio,
        converged,
        final_residual,
        tau_schedule: Some(schedule),
        tau_blocks: Some(blocks),
    };
    Ok((omega, report))
}

/// The factorization ω = H ∘ f^µ of a solution, with the image-side
/// multiplier g = ((f_z / J) σ_eff) ∘ f^{-1}.
#[derive(Debug, Clone)]
pub struct FactorizationResult {
    pub map: QCMap,
    pub h: ComplexField,
    pub g_multiplier: ComplexField,
    pub image_grid: Grid,
}

pub fn factorize(
    omega: &ComplexField,
    mu: &BeltramiCoefficient,
    sigma_eff: &ComplexField,
    cfg: &ContinuationConfig,
) -> Result<FactorizationResult> {
    cfg.validate()?;
    mu.grid().same_as(&omega.grid)?;
    let res = residual_beltrami(mu, sigma_eff, omega);
    if res > 10.0 * cfg.inner_tol.max(1e-10) {
        return Err(Error::Config(format!(
            "factorize input does not solve the linear equation (residual {:.3e})",
            res
        )));
    }
    let grid = omega.grid;
    let map = principal_map(mu, &cfg.linear)?;

    if mu.k() == 0.0 {
        // identity map: the factorization is exact with no interpolation
        return Ok(FactorizationResult {
            map,
            h: omega.clone(),
            g_multiplier: sigma_eff.clone(),
            image_grid: grid,
        });
    }

    // image grid: axis-aligned bounding box of f over the window core
    let n = grid.n();
    let core = grid.guard_radius();
    let mut extent = 0.0f64;
    for k in 0..n {
        for j in 0..n {
            let z = grid.node(j, k);
            if z.re.abs() <= core && z.im.abs() <= core {
                let w = map.forward().value(j, k);
                extent = extent.max(w.re.abs()).max(w.im.abs());
            }
        }
    }
    let image_grid = Grid::new(n, extent + 4.0 * grid.dx())?;

    let mut h = ComplexField::zeros(image_grid);
    let mut gm = ComplexField::zeros(image_grid);
    let mut failed = 0usize;
    let mut gm_radius = 0.0f64;
    for k in 0..n {
        for j in 0..n {
            let i = image_grid.index(j, k);
            let w = image_grid.node(j, k);
            match invert_map(&map, w) {
                Ok(z) => {
                    h.data[i] = interp::eval_complex(omega, z);
                    let (_, fz, fzb) = map.eval_with_derivs(z);
                    let jac = fz.norm_sqr() - fzb.norm_sqr();
                    let s = interp::eval_complex(sigma_eff, z);
                    gm.data[i] = fz / jac * s;
                    if gm.data[i].norm_sqr() > 0.0 {
                        gm_radius = gm_radius.max(w.norm());
                    }
                }
                Err(_) => failed += 1,
            }
        }
    }
    let total = n * n;
    if failed * 1000 > total {
        return Err(Error::InversionCoverage { failed, total });
    }
    gm.support_radius = Some(gm_radius.min(image_grid.half_extent()));
    h.tail = ComplexTail::ZERO;
    Ok(FactorizationResult {
        map,
        h,
        g_multiplier: gm,
        image_grid,
    })
}

/// Pull an image-side field back to the source grid: ω(z) = H(f(z)).
pub fn compose_solution(h: &ComplexField, map: &QCMap) -> Result<ComplexField> {
    let src = map.grid();
    let lim = h.grid.half_extent();
    let core = src.guard_radius();
    let n = src.n();
    let mut out = ComplexField::zeros(src);
    for k in 0..n {
        for j in 0..n {
            let w = map.forward().value(j, k);
            if w.re.abs() <= lim && w.im.abs() <= lim {
                out.data[src.index(j, k)] = interp::eval_complex(h, w);
            } else {
                let z = src.node(j, k);
                if z.re.abs() <= core && z.im.abs() <= core {
                    return Err(Error::GridMismatch(format!(
                        "image grid does not cover the window core: f({}) = {} escapes",
                        z, w
                    )));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::solve_inhomogeneous;
    use crate::builtins::radial_bump;

    fn grid() -> Grid {
        Grid::new(64, 2.0).unwrap()
    }

    fn bump_mu(g: Grid, k: f64) -> BeltramiCoefficient {
        BeltramiCoefficient::new(radial_bump(g, k, 0.8).to_complex()).unwrap()
    }

    fn bump_sigma(g: Grid) -> ComplexField {
        let mut f = radial_bump(g, 1.0, 0.7).to_complex();
        f.support_radius = Some(0.7);
        f
    }

    #[test]
    fn q_star_presets() {
        let c = Nonlinearity::constant(Complex64::new(0.3, -0.4));
        assert!((q_star(&c, 0.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((q_star(&c, 100.0).unwrap() - 0.5).abs() < 1e-14);

        let p = Nonlinearity::power(0.5).unwrap();
        for &t in &[0.1, 1.0, 7.3] {
            assert!((q_star(&p, t).unwrap() - t.sqrt()).abs() <= 1e-6 * t.sqrt());
        }

        let e = Nonlinearity::neg_exp();
        for &t in &[0.0, 1.0, 50.0] {
            assert!((q_star(&e, t).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn q_star_is_nondecreasing() {
        let q = Nonlinearity::signed_power(0.7).unwrap();
        let mut prev = 0.0;
        for i in 0..40 {
            let t = 0.25 * i as f64;
            let v = q_star(&q, t).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn sublinearity_probe_decays() {
        for q in [
            Nonlinearity::constant(Complex64::new(2.0, 0.0)),
            Nonlinearity::power(0.5).unwrap(),
            Nonlinearity::signed_power(0.3).unwrap(),
            Nonlinearity::neg_exp(),
        ] {
            let probe = q.sublinearity_probe();
            assert!(probe.last().unwrap().1 < probe.first().unwrap().1 + 1e-14);
            assert!(probe.last().unwrap().1 < 0.2);
        }
    }

    #[test]
    fn custom_rejects_superlinear() {
        let err = Nonlinearity::custom(|w| w * w);
        assert!(err.is_err());
        let ok = Nonlinearity::custom(|w| Complex64::new(w.norm().sqrt(), 0.0));
        assert!(ok.is_ok());
    }

    #[test]
    fn constant_q_reduces_to_linear() {
        let g = grid();
        let mu = bump_mu(g, 0.3);
        let sigma = bump_sigma(g);
        let c = Complex64::new(0.8, 0.3);
        let q = Nonlinearity::constant(c);
        let cfg = ContinuationConfig {
            inner_tol: 1e-12,
            ..ContinuationConfig::default()
        };
        let (omega, report) = solve_semilinear(&mu, &sigma, &q, &cfg).unwrap();
        assert!(report.converged);
        let lin_cfg = LinearSolveConfig {
            tol: 1e-13,
            max_iter: 400,
        };
        let (expected, _) = solve_inhomogeneous(&mu, &sigma.scale(c), &lin_cfg).unwrap();
        assert!(omega.rel_l2_error(&expected) < 1e-9);
    }

    #[test]
    fn zero_sigma_is_trivial() {
        let g = grid();
        let mu = bump_mu(g, 0.3);
        let q = Nonlinearity::neg_exp();
        let (omega, report) =
            solve_semilinear(&mu, &ComplexField::zeros(g), &q, &ContinuationConfig::default())
                .unwrap();
        assert_eq!(report.iterations, 0);
        assert!(omega.norm_p(f64::INFINITY) == 0.0);
    }

    #[test]
    fn neg_exp_fixed_point_certified() {
        let g = grid();
        let mu = bump_mu(g, 0.3);
        let sigma = bump_sigma(g);
        let q = Nonlinearity::neg_exp();
        let cfg = ContinuationConfig {
            inner_tol: 1e-8,
            ..ContinuationConfig::default()
        };
        let (omega, report) = solve_semilinear(&mu, &sigma, &q, &cfg).unwrap();
        assert!(report.converged);
        assert!(report.final_residual <= 1e-8);
        // independent certificate on the reconstructed solution
        let qvals = omega.map_total(|w| q.eval(w));
        let sigma_eff = qvals.multiply_by_compact(&sigma);
        assert!(residual_beltrami(&mu, &sigma_eff, &omega) < 1e-6);
        // report carries the continuation structure
        assert_eq!(report.tau_schedule.as_ref().unwrap().len(), cfg.tau_steps);
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!(json["tau_schedule"].is_array());
        assert!(json["tau_blocks"].is_array());
    }

    #[test]
    fn operator_form_specializes_bit_for_bit() {
        let g = grid();
        let mu = bump_mu(g, 0.3);
        let sigma = bump_sigma(g);
        let q = Nonlinearity::neg_exp();
        let cfg = ContinuationConfig::default();
        let (a, _) = solve_semilinear(&mu, &sigma, &q, &cfg).unwrap();
        let (b, _) = solve_semilinear_operator(&mu, &sigma, |p| Ok(p.clone()), &q, &cfg).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn blowup_guard_triggers() {
        let g = grid();
        let mu = bump_mu(g, 0.3);
        let sigma = bump_sigma(g);
        let q = Nonlinearity::constant(Complex64::new(1.0, 0.0));
        let cfg = ContinuationConfig {
            blowup_guard: 1e-6,
            ..ContinuationConfig::default()
        };
        let err = solve_semilinear(&mu, &sigma, &q, &cfg);
        assert!(matches!(err, Err(Error::Blowup(_))));
    }

    #[test]
    fn factorize_identity_mu_is_exact() {
        let g = grid();
        let mu = BeltramiCoefficient::zero(g);
        let sigma = bump_sigma(g);
        let omega = crate::transforms::cauchy_transform(&sigma).unwrap();
        let fac = factorize(&omega, &mu, &sigma, &ContinuationConfig::default()).unwrap();
        assert_eq!(fac.h.data, omega.data);
        assert_eq!(fac.g_multiplier.data, sigma.data);
        let back = compose_solution(&fac.h, &fac.map).unwrap();
        // identity map queries exact nodes: no interpolation error
        let err: f64 = back
            .data
            .iter()
            .zip(omega.total().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn factorize_roundtrip() {
        let g = Grid::new(128, 2.0).unwrap();
        let mu = bump_mu(g, 0.3);
        let sigma = bump_sigma(g);
        let cfg = ContinuationConfig {
            inner_tol: 1e-9,
            ..ContinuationConfig::default()
        };
        let q = Nonlinearity::neg_exp();
        let (omega, report) = solve_semilinear(&mu, &sigma, &q, &cfg).unwrap();
        assert!(report.converged);
        let sigma_eff = omega.map_total(|w| q.eval(w)).multiply_by_compact(&sigma);
        let fac = factorize(&omega, &mu, &sigma_eff, &cfg).unwrap();
        let back = compose_solution(&fac.h, &fac.map).unwrap();
        // compare on the window core
        let core = g.guard_radius();
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for k in 0..g.n() {
            for j in 0..g.n() {
                let z = g.node(j, k);
                if z.re.abs() <= core && z.im.abs() <= core {
                    err = err.max((back.value(j, k) - omega.value(j, k)).norm());
                    scale = scale.max(omega.value(j, k).norm());
                }
            }
        }
        assert!(err <= 5e-3 * scale.max(1.0), "roundtrip sup error {}", err);
    }
}
