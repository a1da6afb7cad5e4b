//! Built-in field generators: bumps, mollified indicators, cutoffs, and
//! seeded random smooth fields used by tests and the CLI.

use crate::fft::{fft2, ifft2};
use crate::field::{ComplexField, RealField};
use crate::grid::Grid;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Quintic smoothstep: 0 for t <= 0, 1 for t >= 1, C^2 in between.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// C-infinity radial bump of height `amp` supported on |z - center| < radius.
pub fn bump_at(z: Complex64, center: Complex64, radius: f64, amp: f64) -> f64 {
    let t = (z - center).norm() / radius;
    if t >= 1.0 {
        0.0
    } else {
        amp * (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Radial bump field centered at the origin.
pub fn radial_bump(grid: Grid, amp: f64, radius: f64) -> RealField {
    RealField::sample(grid, |z| bump_at(z, Complex64::new(0.0, 0.0), radius, amp), Some(radius))
}

/// Unit-disk indicator scaled to radius `r`, mollified over a collar of
/// `collar_cells` grid cells with a quintic smoothstep.
pub fn disk_indicator(grid: Grid, r: f64, collar_cells: f64) -> RealField {
    let w = collar_cells * grid.dx();
    RealField::sample(
        grid,
        |z| smoothstep((r + 1.5 * w - z.norm()) / (3.0 * w)),
        Some(r + 2.0 * w),
    )
}

/// C-infinity step: 0 for t <= 0, 1 for t >= 1.
pub fn cinf_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Radial C-infinity cutoff: identically 1 for |z| <= inner, 0 for |z| >= outer.
pub fn cinf_cutoff(grid: Grid, inner: f64, outer: f64) -> RealField {
    assert!(outer > inner && inner > 0.0);
    RealField::sample(
        grid,
        |z| cinf_step((outer - z.norm()) / (outer - inner)),
        Some(outer),
    )
}

/// Radial cutoff: identically 1 for |z| <= inner, 0 for |z| >= outer.
pub fn smooth_cutoff(grid: Grid, inner: f64, outer: f64) -> RealField {
    assert!(outer > inner && inner > 0.0);
    RealField::sample(
        grid,
        |z| smoothstep((outer - z.norm()) / (outer - inner)),
        Some(outer),
    )
}

/// Seeded random smooth complex field with compact support inside the guard
/// band: Gaussian white noise filtered to a Gaussian spectrum, then cut off.
pub fn random_smooth_field(grid: Grid, seed: u64, spectral_width: f64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n();
    let mut data: Vec<Complex64> = (0..grid.len())
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    fft2(&mut data, n);
    for k in 0..n {
        let ky = grid.wavenumber(k);
        for j in 0..n {
            let kx = grid.wavenumber(j);
            let k2 = kx * kx + ky * ky;
            data[k * n + j] *= (-k2 / (2.0 * spectral_width * spectral_width)).exp();
        }
    }
    ifft2(&mut data, n);
    let guard = grid.guard_radius();
    let cut = smooth_cutoff(grid, 0.5 * guard, guard);
    for k in 0..n {
        for j in 0..n {
            let i = grid.index(j, k);
            data[i] *= cut.data[i];
        }
    }
    ComplexField {
        grid,
        data,
        support_radius: Some(guard),
        tail: crate::field::ComplexTail::ZERO,
    }
}

/// Real-valued variant of [`random_smooth_field`].
pub fn random_smooth_real_field(grid: Grid, seed: u64, spectral_width: f64) -> RealField {
    let f = random_smooth_field(grid, seed, spectral_width);
    let mut out = f.re();
    out.support_radius = Some(grid.guard_radius());
    out
}
