//! The integral operators: Cauchy transform (inverse of d_zbar), the
//! singular Beurling operator, and the logarithmic potential with its
//! zbar-derivative.
//!
//! All four are Fourier multipliers on the periodic part with the zero mode
//! dropped; the mean component travels through the tail polynomial, so the
//! defining identities hold discretely for inputs of any mean.

use crate::error::{Error, Result};
use crate::field::{ComplexField, ComplexTail, RealField, RealTail};
use crate::ops::apply_symbol;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// How the zero-frequency mode is treated by every multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroModePolicy {
    Drop,
}

/// Norm bookkeeping for the singular operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorStats {
    pub zero_mode_policy: ZeroModePolicy,
    pub l2_operator_norm_estimate: f64,
}

/// The discrete Beurling symbol is unimodular, so the L2 norm is exactly 1.
pub fn beurling_stats() -> OperatorStats {
    OperatorStats {
        zero_mode_policy: ZeroModePolicy::Drop,
        l2_operator_norm_estimate: 1.0,
    }
}

fn require_support(f_support: Option<f64>, guard: f64) -> Result<()> {
    match f_support {
        None => Err(Error::MissingSupport),
        Some(r) if r > guard + 1e-12 => Err(Error::Config(format!(
            "support radius {r} exceeds the guard band {guard}"
        ))),
        Some(_) => Ok(()),
    }
}

/// Cauchy transform: solves d_zbar(C g) = g with (C g)(0) = 0.
pub fn cauchy_transform(g: &ComplexField) -> Result<ComplexField> {
    require_support(g.support_radius, g.grid.guard_radius())?;
    cauchy_transform_unchecked(g)
}

pub(crate) fn cauchy_transform_unchecked(g: &ComplexField) -> Result<ComplexField> {
    let m = g.mean_periodic();
    let data = apply_symbol(g.grid, &g.data, |kx, ky| {
        let k2 = kx * kx + ky * ky;
        if k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            // inverse of the d_zbar symbol (i/2)(kx + i ky)
            Complex64::new(0.0, -2.0) / Complex64::new(kx, ky)
        }
    });
    let mut tail = g.tail.antiderivative_zbar()?;
    tail.0[2] += m;
    let mut out = ComplexField {
        grid: g.grid,
        data,
        support_radius: None,
        tail,
    };
    out.normalize_at_origin(Complex64::new(0.0, 0.0));
    Ok(out)
}

/// Beurling transform: T g = d_z(C g); satisfies T(d_zbar f) = d_z f.
pub fn beurling_transform(g: &ComplexField) -> Result<ComplexField> {
    require_support(g.support_radius, g.grid.guard_radius())?;
    beurling_transform_unchecked(g)
}

pub(crate) fn beurling_transform_unchecked(g: &ComplexField) -> Result<ComplexField> {
    let m = g.mean_periodic();
    let data = apply_symbol(g.grid, &g.data, |kx, ky| {
        let k2 = kx * kx + ky * ky;
        if k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            let zeta = Complex64::new(kx, ky);
            zeta.conj() / zeta
        }
    });
    let mut c_tail = g.tail.antiderivative_zbar()?;
    c_tail.0[2] += m;
    Ok(ComplexField {
        grid: g.grid,
        data,
        support_radius: None,
        tail: c_tail.d_z(),
    })
}

/// int over the unit cell [-1/2,1/2]^2 of ln|w|, by midpoint quadrature.
fn unit_cell_log_integral() -> f64 {
    static VAL: OnceLock<f64> = OnceLock::new();
    *VAL.get_or_init(|| {
        let m = 512;
        let mut sum = 0.0;
        for a in 0..m {
            for b in 0..m {
                let x = (a as f64 + 0.5) / m as f64 - 0.5;
                let y = (b as f64 + 0.5) / m as f64 - 0.5;
                sum += 0.5 * (x * x + y * y).ln();
            }
        }
        sum / (m * m) as f64
    })
}

/// Value of the continuum potential (1/2pi) int ln|w| g(w) dm at z = 0,
/// by direct quadrature with a refined self cell.
fn potential_at_origin(g: &RealField) -> f64 {
    let grid = g.grid;
    let n = grid.n();
    let dx = grid.dx();
    let mut sum = 0.0;
    for k in 0..n {
        for j in 0..n {
            let z = grid.node(j, k);
            let v = g.data[grid.index(j, k)];
            if v == 0.0 {
                continue;
            }
            if z.norm_sqr() == 0.0 {
                sum += v * (dx.ln() + unit_cell_log_integral());
            } else {
                sum += v * z.norm().ln();
            }
        }
    }
    sum * dx * dx / (2.0 * std::f64::consts::PI)
}

/// Logarithmic (Newtonian) potential: Laplacian(N g) = g, with the additive
/// constant fixed by matching the continuum integral at z = 0.
pub fn log_potential(g: &RealField) -> Result<RealField> {
    require_support(g.support_radius, g.grid.guard_radius())?;
    log_potential_unchecked(g)
}

pub(crate) fn log_potential_unchecked(g: &RealField) -> Result<RealField> {
    if !g.tail.is_zero() {
        return Err(Error::Config(
            "log_potential expects a plain compactly supported source".into(),
        ));
    }
    let m = g.mean_periodic();
    let complex: Vec<Complex64> = g.data.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let out = apply_symbol(g.grid, &complex, |kx, ky| {
        let k2 = kx * kx + ky * ky;
        if k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(-1.0 / k2, 0.0)
        }
    });
    let mut tail = RealTail::ZERO;
    tail.0[3] = 0.25 * m;
    tail.0[5] = 0.25 * m;
    let mut field = RealField {
        grid: g.grid,
        data: out.iter().map(|v| v.re).collect(),
        support_radius: None,
        tail,
    };
    let target = potential_at_origin(g);
    let origin = field.grid.origin_index();
    field.tail.0[0] = target - field.data[origin];
    Ok(field)
}

/// d_zbar of the logarithmic potential (the building block of the sigma
/// assembly for divergence-form equations).
pub fn potential_dbar(g: &RealField) -> Result<ComplexField> {
    require_support(g.support_radius, g.grid.guard_radius())?;
    potential_dbar_unchecked(g)
}

pub(crate) fn potential_dbar_unchecked(g: &RealField) -> Result<ComplexField> {
    if !g.tail.is_zero() {
        return Err(Error::Config(
            "potential_dbar expects a plain compactly supported source".into(),
        ));
    }
    let m = g.mean_periodic();
    let complex: Vec<Complex64> = g.data.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let data = apply_symbol(g.grid, &complex, |kx, ky| {
        let k2 = kx * kx + ky * ky;
        if k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 0.5) * Complex64::new(kx, ky) * (-1.0 / k2)
        }
    });
    let mut tail = ComplexTail::ZERO;
    tail.0[1] = Complex64::new(0.25 * m, 0.0);
    Ok(ComplexField {
        grid: g.grid,
        data,
        support_radius: None,
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{disk_indicator, random_smooth_field, random_smooth_real_field};
    use crate::ops::d_z;
    use crate::grid::Grid;
    use crate::ops::{d_zbar, laplacian_real};

    fn grid() -> Grid {
        Grid::new(128, 4.0).unwrap()
    }

    #[test]
    fn zero_inputs() {
        let g = grid();
        let zc = ComplexField::sample(g, |_| Complex64::new(0.0, 0.0), Some(1.0));
        assert!(cauchy_transform(&zc).unwrap().norm_p(f64::INFINITY) == 0.0);
        assert!(beurling_transform(&zc).unwrap().norm_p(f64::INFINITY) == 0.0);
        let zr = RealField::sample(g, |_| 0.0, Some(1.0));
        assert!(log_potential(&zr).unwrap().norm_p(f64::INFINITY).abs() < 1e-15);
        assert!(potential_dbar(&zr).unwrap().norm_p(f64::INFINITY) == 0.0);
    }

    #[test]
    fn missing_support_is_refused() {
        let g = grid();
        let f = ComplexField::sample(g, |_| Complex64::new(1.0, 0.0), None);
        assert!(matches!(cauchy_transform(&f), Err(Error::MissingSupport)));
        let r = RealField::sample(g, |_| 1.0, None);
        assert!(matches!(log_potential(&r), Err(Error::MissingSupport)));
    }

    #[test]
    fn cauchy_roundtrip_spectral() {
        let g = grid();
        let f = random_smooth_field(g, 5, 2.0);
        let c = cauchy_transform(&f).unwrap();
        assert!((c.value(g.n() / 2, g.n() / 2)).norm() < 1e-13);
        let back = d_zbar(&c);
        assert!(back.rel_l2_error(&f) < 1e-10);
    }

    #[test]
    fn potential_roundtrip_spectral() {
        let g = grid();
        let f = random_smooth_real_field(g, 6, 2.0);
        let pot = log_potential(&f).unwrap();
        let back = laplacian_real(&pot);
        assert!(back.sub(&f).norm_2() / f.norm_2() < 1e-10);
        // 4 d_z (potential_dbar) recovers the source as well
        let pd = potential_dbar(&f).unwrap();
        let back2 = d_z(&pd).scale(Complex64::new(4.0, 0.0));
        assert!(back2.rel_l2_error(&f.to_complex()) < 1e-10);
    }

    #[test]
    fn potential_dbar_is_derivative_of_potential() {
        let g = grid();
        let f = random_smooth_real_field(g, 7, 2.0);
        let pd = potential_dbar(&f).unwrap();
        let n = log_potential(&f).unwrap();
        let dn = d_zbar(&n.to_complex());
        assert!(pd.rel_l2_error(&dn) < 1e-11);
    }

    #[test]
    fn beurling_isometry_and_intertwining() {
        let g = grid();
        let f = random_smooth_field(g, 8, 2.0);
        // mean-zero projection for the isometry
        let m = f.mean_periodic();
        let mut f0 = f.clone();
        for v in f0.data.iter_mut() {
            *v -= m;
        }
        let t = beurling_transform(&f0).unwrap();
        assert!((t.norm_2() - f0.norm_2()).abs() <= 1e-12 * f0.norm_2());
        // T(d_zbar f) = d_z f
        let lhs = beurling_transform_unchecked(&d_zbar(&f)).unwrap();
        let rhs = d_z(&f);
        assert!(lhs.rel_l2_error(&rhs) < 1e-10);
        // T = d_z compose C
        let a = beurling_transform(&f).unwrap();
        let b = d_z(&cauchy_transform(&f).unwrap());
        assert!(a.rel_l2_error(&b) < 1e-10);
    }

    #[test]
    fn linearity_of_cauchy() {
        let g = grid();
        let f1 = random_smooth_field(g, 9, 2.0);
        let f2 = random_smooth_field(g, 10, 2.0);
        let a = Complex64::new(0.3, -1.1);
        let b = Complex64::new(-0.7, 0.2);
        let lhs = cauchy_transform(&f1.scale(a).add(&f2.scale(b))).unwrap();
        let rhs = cauchy_transform(&f1)
            .unwrap()
            .scale(a)
            .add(&cauchy_transform(&f2).unwrap().scale(b));
        assert!(lhs.rel_l2_error(&rhs) < 1e-12);
    }

    #[test]
    fn real_source_symmetry() {
        // real g symmetric under z -> conj(z): N is real, and the dbar
        // potential is conjugate-symmetric under the same reflection.
        let g = grid();
        let chi = disk_indicator(g, 1.0, 3.0);
        let pd = potential_dbar(&chi).unwrap();
        let n = g.n();
        for (j, k) in [(40, 50), (70, 90), (100, 30)] {
            let a = pd.value(j, k);
            let b = pd.value(j, n - k);
            assert!((a - b.conj()).norm() < 1e-6, "reflection symmetry");
        }
    }
}
