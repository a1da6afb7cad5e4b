//! Spectral (Fourier-multiplier) differential operators.
//!
//! Derivatives act on the periodic part through the exact multiplier and on
//! the tail through polynomial calculus, so the two-sided identities used by
//! the solvers hold to machine precision.

use crate::fft::{fft2, ifft2};
use crate::field::{ComplexField, ComplexTail, RealField, RealTail};
use crate::grid::Grid;
use num_complex::Complex64;

/// Apply a Fourier multiplier `sym(kx, ky)` to a periodic sample array.
pub(crate) fn apply_symbol<F: Fn(f64, f64) -> Complex64>(
    grid: Grid,
    data: &[Complex64],
    sym: F,
) -> Vec<Complex64> {
    let n = grid.n();
    let mut buf = data.to_vec();
    fft2(&mut buf, n);
    for k in 0..n {
        let ky = grid.wavenumber(k);
        for j in 0..n {
            let kx = grid.wavenumber(j);
            buf[k * n + j] *= sym(kx, ky);
        }
    }
    ifft2(&mut buf, n);
    buf
}

fn derivative(f: &ComplexField, sym: impl Fn(f64, f64) -> Complex64, tail: ComplexTail) -> ComplexField {
    ComplexField {
        grid: f.grid,
        data: apply_symbol(f.grid, &f.data, sym),
        support_radius: None,
        tail,
    }
}

/// d/dz = (d/dx - i d/dy) / 2.
pub fn d_z(f: &ComplexField) -> ComplexField {
    derivative(
        f,
        |kx, ky| Complex64::new(0.0, 0.5) * Complex64::new(kx, -ky),
        f.tail.d_z(),
    )
}

/// d/dzbar = (d/dx + i d/dy) / 2.
pub fn d_zbar(f: &ComplexField) -> ComplexField {
    derivative(
        f,
        |kx, ky| Complex64::new(0.0, 0.5) * Complex64::new(kx, ky),
        f.tail.d_zbar(),
    )
}

pub fn laplacian(f: &ComplexField) -> ComplexField {
    derivative(
        f,
        |kx, ky| Complex64::new(-(kx * kx + ky * ky), 0.0),
        f.tail.laplacian(),
    )
}

fn real_derivative(f: &RealField, sym: impl Fn(f64, f64) -> Complex64, tail: RealTail) -> RealField {
    let complex: Vec<Complex64> = f.data.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let out = apply_symbol(f.grid, &complex, sym);
    RealField {
        grid: f.grid,
        data: out.iter().map(|v| v.re).collect(),
        support_radius: None,
        tail,
    }
}

/// Gradient (d/dx, d/dy) of a real field.
pub fn gradient(f: &RealField) -> (RealField, RealField) {
    let gx = real_derivative(f, |kx, _| Complex64::new(0.0, kx), f.tail.grad_x());
    let gy = real_derivative(f, |_, ky| Complex64::new(0.0, ky), f.tail.grad_y());
    (gx, gy)
}

pub fn laplacian_real(f: &RealField) -> RealField {
    let mut tail = RealTail::ZERO;
    tail.0[0] = f.tail.laplacian();
    real_derivative(f, |kx, ky| Complex64::new(-(kx * kx + ky * ky), 0.0), tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid() -> Grid {
        Grid::new(64, 2.0).unwrap()
    }

    // Gaussian bump, below machine noise at the window boundary.
    fn bump_field(g: Grid) -> ComplexField {
        ComplexField::sample(g, |z| Complex64::new((-8.0 * z.norm_sqr()).exp(), 0.0), None)
    }

    #[test]
    fn constant_has_zero_derivative() {
        let g = grid();
        let c = ComplexField::sample(g, |_| Complex64::new(2.0, -1.0), None);
        assert!(d_z(&c).norm_p(f64::INFINITY) < 1e-12);
        assert!(d_zbar(&c).norm_p(f64::INFINITY) < 1e-12);
    }

    #[test]
    fn dzbar_of_zbar_cutoff() {
        // d_zbar(zbar * b) = b + zbar * d_zbar(b), with b a smooth bump.
        let g = grid();
        let b = bump_field(g);
        let mut prod = b.clone();
        for k in 0..g.n() {
            for j in 0..g.n() {
                let i = g.index(j, k);
                prod.data[i] = g.node(j, k).conj() * b.data[i];
            }
        }
        let lhs = d_zbar(&prod);
        let db = d_zbar(&b);
        let mut rhs = b.clone();
        for k in 0..g.n() {
            for j in 0..g.n() {
                let i = g.index(j, k);
                rhs.data[i] = b.data[i] + g.node(j, k).conj() * db.data[i];
            }
        }
        assert!(lhs.rel_l2_error(&rhs) < 1e-10);
    }

    #[test]
    fn product_rule_x_squared() {
        // d_zbar(x^2 b) = x b + x^2 d_zbar(b) since d_zbar x = 1/2... (x = (z+zbar)/2, d_zbar x = 1/2)
        let g = grid();
        let b = bump_field(g);
        let mut prod = b.clone();
        for k in 0..g.n() {
            for j in 0..g.n() {
                let i = g.index(j, k);
                let x = g.node(j, k).re;
                prod.data[i] = x * x * b.data[i];
            }
        }
        let lhs = d_zbar(&prod);
        let db = d_zbar(&b);
        let mut rhs = b.clone();
        for k in 0..g.n() {
            for j in 0..g.n() {
                let i = g.index(j, k);
                let x = g.node(j, k).re;
                rhs.data[i] = x * b.data[i] + x * x * db.data[i];
            }
        }
        assert!(lhs.rel_l2_error(&rhs) < 1e-9);
    }

    #[test]
    fn conjugation_symmetry() {
        let g = grid();
        let b = bump_field(g);
        let mut f = b.clone();
        for k in 0..g.n() {
            for j in 0..g.n() {
                let i = g.index(j, k);
                let z = g.node(j, k);
                f.data[i] = b.data[i] * (z + Complex64::new(0.3, 0.2) * z * z);
            }
        }
        let lhs = d_zbar(&f.conj());
        let rhs = d_z(&f).conj();
        assert!(lhs.rel_l2_error(&rhs) < 1e-11);
    }

    #[test]
    fn mixed_derivatives_equal_quarter_laplacian() {
        let g = grid();
        let f = bump_field(g);
        let a = d_z(&d_zbar(&f));
        let b = d_zbar(&d_z(&f));
        let lap = laplacian(&f).scale(Complex64::new(0.25, 0.0));
        assert!(a.rel_l2_error(&lap) < 1e-10);
        assert!(b.rel_l2_error(&lap) < 1e-10);
    }

    #[test]
    fn linearity() {
        let g = grid();
        let b = bump_field(g);
        let mut f2 = b.clone();
        for k in 0..g.n() {
            for j in 0..g.n() {
                let i = g.index(j, k);
                f2.data[i] = b.data[i] * g.node(j, k);
            }
        }
        let alpha = Complex64::new(0.7, -0.2);
        let beta = Complex64::new(-1.3, 0.4);
        let combo = b.scale(alpha).add(&f2.scale(beta));
        let lhs = d_z(&combo);
        let rhs = d_z(&b).scale(alpha).add(&d_z(&f2).scale(beta));
        assert!(lhs.rel_l2_error(&rhs) < 1e-12);
    }
}
