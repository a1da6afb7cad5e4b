//! Complex and real sample fields on a [`Grid`], with symbolic quadratic tails.
//!
//! A field value is `data[j,k] + tail(z_{jk})`. The periodic sample array is
//! what the FFT sees; the tail is a quadratic polynomial handled in closed
//! form by every differential and integral operator. Tails are how the
//! operators carry the zero-frequency (mean) component that a periodic
//! window cannot represent: e.g. the antiderivative of a constant mean m is
//! the non-periodic m*conj(z), which lives in the tail. With tails, the
//! discrete identities (d_zbar of the Cauchy transform, Laplacian of the
//! potential) hold to machine precision for inputs of any mean, and sampled
//! totals still match the free-space closed forms.

use crate::error::{Error, Result};
use crate::grid::Grid;
use num_complex::Complex64;

/// Quadratic polynomial over the basis {1, z, zbar, z^2, z*zbar, zbar^2}.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexTail(pub [Complex64; 6]);

impl ComplexTail {
    pub const ZERO: ComplexTail = ComplexTail([Complex64::new(0.0, 0.0); 6]);

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.norm_sqr() == 0.0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let zb = z.conj();
        let c = &self.0;
        c[0] + c[1] * z + c[2] * zb + c[3] * z * z + c[4] * z * zb + c[5] * zb * zb
    }

    pub fn d_z(&self) -> ComplexTail {
        let c = &self.0;
        ComplexTail([c[1], 2.0 * c[3], c[4], 0.0.into(), 0.0.into(), 0.0.into()])
    }

    pub fn d_zbar(&self) -> ComplexTail {
        let c = &self.0;
        ComplexTail([c[2], c[4], 2.0 * c[5], 0.0.into(), 0.0.into(), 0.0.into()])
    }

    pub fn laplacian(&self) -> ComplexTail {
        let mut out = ComplexTail::ZERO;
        out.0[0] = 4.0 * self.0[4];
        out
    }

    pub fn conj(&self) -> ComplexTail {
        let c = self.0.map(|v| v.conj());
        ComplexTail([c[0], c[2], c[1], c[5], c[4], c[3]])
    }

    /// Antiderivative in zbar; defined only for tails of degree <= 1.
    pub fn antiderivative_zbar(&self) -> Result<ComplexTail> {
        let c = &self.0;
        if c[3].norm() + c[4].norm() + c[5].norm() > 0.0 {
            return Err(Error::Config(
                "cannot take the Cauchy transform of a field with a quadratic tail".into(),
            ));
        }
        let mut out = ComplexTail::ZERO;
        out.0[2] = c[0];
        out.0[4] = c[1];
        out.0[5] = 0.5 * c[2];
        Ok(out)
    }

    pub fn add(&self, other: &ComplexTail) -> ComplexTail {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
        out
    }

    pub fn scale(&self, a: Complex64) -> ComplexTail {
        ComplexTail(self.0.map(|v| v * a))
    }
}

/// Quadratic polynomial over the basis {1, x, y, x^2, xy, y^2}.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RealTail(pub [f64; 6]);

impl RealTail {
    pub const ZERO: RealTail = RealTail([0.0; 6]);

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        let (x, y) = (z.re, z.im);
        let a = &self.0;
        a[0] + a[1] * x + a[2] * y + a[3] * x * x + a[4] * x * y + a[5] * y * y
    }

    pub fn grad_x(&self) -> RealTail {
        let a = &self.0;
        RealTail([a[1], 2.0 * a[3], a[4], 0.0, 0.0, 0.0])
    }

    pub fn grad_y(&self) -> RealTail {
        let a = &self.0;
        RealTail([a[2], a[4], 2.0 * a[5], 0.0, 0.0, 0.0])
    }

    pub fn laplacian(&self) -> f64 {
        2.0 * self.0[3] + 2.0 * self.0[5]
    }

    pub fn add(&self, other: &RealTail) -> RealTail {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> RealTail {
        RealTail(self.0.map(|v| v * s))
    }

    /// Rewrite over the complex basis (x = (z+zbar)/2 and so on).
    pub fn to_complex(&self) -> ComplexTail {
        let a = &self.0;
        let i = Complex64::new(0.0, 1.0);
        let mut c = [Complex64::new(0.0, 0.0); 6];
        c[0] = a[0].into();
        c[1] = Complex64::new(0.5 * a[1], -0.5 * a[2]);
        c[2] = Complex64::new(0.5 * a[1], 0.5 * a[2]);
        c[3] = Complex64::new(0.25 * (a[3] - a[5]), 0.0) - i * 0.25 * a[4];
        c[4] = Complex64::new(0.5 * (a[3] + a[5]), 0.0);
        c[5] = Complex64::new(0.25 * (a[3] - a[5]), 0.0) + i * 0.25 * a[4];
        ComplexTail(c)
    }
}

impl ComplexTail {
    /// Real part of the tail as a real polynomial.
    pub fn re(&self) -> RealTail {
        let c = &self.0;
        RealTail([
            c[0].re,
            c[1].re + c[2].re,
            -c[1].im + c[2].im,
            c[3].re + c[4].re + c[5].re,
            -2.0 * c[3].im + 2.0 * c[5].im,
            -c[3].re + c[4].re - c[5].re,
        ])
    }

    /// Imaginary part of the tail as a real polynomial.
    pub fn im(&self) -> RealTail {
        // Im(w) = Re(-i w)
        self.scale(Complex64::new(0.0, -1.0)).re()
    }
}

/// Complex samples on a grid, plus an optional compact-support certificate
/// and a symbolic quadratic tail.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub data: Vec<Complex64>,
    pub support_radius: Option<f64>,
    pub tail: ComplexTail,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        ComplexField {
            grid,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
            support_radius: None,
            tail: ComplexTail::ZERO,
        }
    }

    /// Sample a pointwise function; samples outside a declared support are zeroed.
    pub fn sample<F: Fn(Complex64) -> Complex64>(
        grid: Grid,
        f: F,
        support_radius: Option<f64>,
    ) -> Self {
        let n = grid.n();
        let mut data = Vec::with_capacity(grid.len());
        for k in 0..n {
            for j in 0..n {
                let z = grid.node(j, k);
                let inside = support_radius.map_or(true, |r| z.norm() <= r);
                data.push(if inside { f(z) } else { Complex64::new(0.0, 0.0) });
            }
        }
        ComplexField {
            grid,
            data,
            support_radius,
            tail: ComplexTail::ZERO,
        }
    }

    pub fn value(&self, j: usize, k: usize) -> Complex64 {
        self.data[self.grid.index(j, k)] + self.tail.eval(self.grid.node(j, k))
    }

    /// Total samples (periodic data plus tail evaluated at the nodes).
    pub fn total(&self) -> Vec<Complex64> {
        if self.tail.is_zero() {
            return self.data.clone();
        }
        let n = self.grid.n();
        let mut out = Vec::with_capacity(self.grid.len());
        for k in 0..n {
            for j in 0..n {
                out.push(self.data[self.grid.index(j, k)] + self.tail.eval(self.grid.node(j, k)));
            }
        }
        out
    }

    pub fn mean_periodic(&self) -> Complex64 {
        self.data.iter().sum::<Complex64>() / self.grid.len() as f64
    }

    pub fn conj(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            data: self.data.iter().map(|v| v.conj()).collect(),
            support_radius: self.support_radius,
            tail: self.tail.conj(),
        }
    }

    pub fn add(&self, other: &ComplexField) -> ComplexField {
        assert_eq!(self.grid, other.grid);
        ComplexField {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
            support_radius: join_support(self.support_radius, other.support_radius),
            tail: self.tail.add(&other.tail),
        }
    }

    pub fn sub(&self, other: &ComplexField) -> ComplexField {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, a: Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid,
            data: self.data.iter().map(|v| v * a).collect(),
            support_radius: self.support_radius,
            tail: self.tail.scale(a),
        }
    }

    /// Pointwise product `compact * self`, where `compact` must be a plain
    /// compactly supported field (zero tail). The result is again compact.
    pub fn multiply_by_compact(&self, compact: &ComplexField) -> ComplexField {
        assert_eq!(self.grid, compact.grid);
        debug_assert!(compact.tail.is_zero());
        let n = self.grid.n();
        let mut data = Vec::with_capacity(self.grid.len());
        for k in 0..n {
            for j in 0..n {
                let i = self.grid.index(j, k);
                let c = compact.data[i];
                let v = if c.norm_sqr() == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * (self.data[i] + self.tail.eval(self.grid.node(j, k)))
                };
                data.push(v);
            }
        }
        ComplexField {
            grid: self.grid,
            data,
            support_radius: compact.support_radius,
            tail: ComplexTail::ZERO,
        }
    }

    /// Map each total sample through `f`; the result is a plain field.
    pub fn map_total<F: Fn(Complex64) -> Complex64>(&self, f: F) -> ComplexField {
        let n = self.grid.n();
        let mut data = Vec::with_capacity(self.grid.len());
        for k in 0..n {
            for j in 0..n {
                let i = self.grid.index(j, k);
                data.push(f(self.data[i] + self.tail.eval(self.grid.node(j, k))));
            }
        }
        ComplexField {
            grid: self.grid,
            data,
            support_radius: None,
            tail: ComplexTail::ZERO,
        }
    }

    pub fn re(&self) -> RealField {
        RealField {
            grid: self.grid,
            data: self.data.iter().map(|v| v.re).collect(),
            support_radius: self.support_radius,
            tail: self.tail.re(),
        }
    }

    pub fn im(&self) -> RealField {
        RealField {
            grid: self.grid,
            data: self.data.iter().map(|v| v.im).collect(),
            support_radius: self.support_radius,
            tail: self.tail.im(),
        }
    }

    /// Shift the constant term so the value at z = 0 becomes `v`.
    pub fn normalize_at_origin(&mut self, v: Complex64) {
        let cur = self.data[self.grid.origin_index()] + self.tail.0[0];
        self.tail.0[0] += v - cur;
    }

    /// Discrete L_p norm of the total samples; `f64::INFINITY` gives the sup norm.
    pub fn norm_p(&self, p: f64) -> f64 {
        norm_p_impl(self.total().iter().map(|v| v.norm()), self.grid, p)
    }

    pub fn norm_2(&self) -> f64 {
        self.norm_p(2.0)
    }

    /// Relative L2 distance to another field, guarded against a zero denominator.
    pub fn rel_l2_error(&self, other: &ComplexField) -> f64 {
        let d = self.sub(other).norm_2();
        d / other.norm_2().max(f64::MIN_POSITIVE)
    }
}

/// Real samples on a grid, with a symbolic quadratic tail.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub grid: Grid,
    pub data: Vec<f64>,
    pub support_radius: Option<f64>,
    pub tail: RealTail,
}

impl RealField {
    pub fn zeros(grid: Grid) -> Self {
        RealField {
            grid,
            data: vec![0.0; grid.len()],
            support_radius: None,
            tail: RealTail::ZERO,
        }
    }

    pub fn sample<F: Fn(Complex64) -> f64>(grid: Grid, f: F, support_radius: Option<f64>) -> Self {
        let n = grid.n();
        let mut data = Vec::with_capacity(grid.len());
        for k in 0..n {
            for j in 0..n {
                let z = grid.node(j, k);
                let inside = support_radius.map_or(true, |r| z.norm() <= r);
                data.push(if inside { f(z) } else { 0.0 });
            }
        }
        RealField {
            grid,
            data,
            support_radius,
            tail: RealTail::ZERO,
        }
    }

    pub fn value(&self, j: usize, k: usize) -> f64 {
        self.data[self.grid.index(j, k)] + self.tail.eval(self.grid.node(j, k))
    }

    pub fn total(&self) -> Vec<f64> {
        if self.tail.is_zero() {
            return self.data.clone();
        }
        let n = self.grid.n();
        let mut out = Vec::with_capacity(self.grid.len());
        for k in 0..n {
            for j in 0..n {
                out.push(self.data[self.grid.index(j, k)] + self.tail.eval(self.grid.node(j, k)));
            }
        }
        out
    }

    pub fn mean_periodic(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.grid.len() as f64
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            data: self.data.iter().map(|v| Complex64::new(*v, 0.0)).collect(),
            support_radius: self.support_radius,
            tail: self.tail.to_complex(),
        }
    }

    pub fn add(&self, other: &RealField) -> RealField {
        assert_eq!(self.grid, other.grid);
        RealField {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
            support_radius: join_support(self.support_radius, other.support_radius),
            tail: self.tail.add(&other.tail),
        }
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> RealField {
        RealField {
            grid: self.grid,
            data: self.data.iter().map(|v| v * s).collect(),
            support_radius: self.support_radius,
            tail: self.tail.scale(s),
        }
    }

    /// Map each total sample through `f`; the result is a plain field.
    pub fn map_total<F: Fn(f64) -> f64>(&self, f: F) -> RealField {
        let n = self.grid.n();
        let mut data = Vec::with_capacity(self.grid.len());
        for k in 0..n {
            for j in 0..n {
                let i = self.grid.index(j, k);
                data.push(f(self.data[i] + self.tail.eval(self.grid.node(j, k))));
            }
        }
        RealField {
            grid: self.grid,
            data,
            support_radius: None,
            tail: RealTail::ZERO,
        }
    }

    /// Pointwise product `compact * self` with a plain compact field.
    pub fn multiply_by_compact(&self, compact: &RealField) -> RealField {
        assert_eq!(self.grid, compact.grid);
        debug_assert!(compact.tail.is_zero());
        let n = self.grid.n();
        let mut data = Vec::with_capacity(self.grid.len());
        for k in 0..n {
            for j in 0..n {
                let i = self.grid.index(j, k);
                let c = compact.data[i];
                data.push(if c == 0.0 {
                    0.0
                } else {
                    c * (self.data[i] + self.tail.eval(self.grid.node(j, k)))
                });
            }
        }
        RealField {
            grid: self.grid,
            data,
            support_radius: compact.support_radius,
            tail: RealTail::ZERO,
        }
    }

    pub fn norm_p(&self, p: f64) -> f64 {
        norm_p_impl(self.total().iter().map(|v| v.abs()), self.grid, p)
    }

    pub fn norm_2(&self) -> f64 {
        self.norm_p(2.0)
    }

    /// Relative L2 distance to another field, guarded against a zero denominator.
    pub fn rel_l2_error(&self, other: &RealField) -> f64 {
        let d = self.sub(other).norm_2();
        d / other.norm_2().max(f64::MIN_POSITIVE)
    }
}

fn join_support(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        _ => None,
    }
}

fn norm_p_impl<I: Iterator<Item = f64>>(moduli: I, grid: Grid, p: f64) -> f64 {
    assert!(p >= 1.0, "norm exponent must satisfy p >= 1");
    if p.is_infinite() {
        return moduli.fold(0.0, f64::max);
    }
    let dx2 = grid.dx() * grid.dx();
    let sum: f64 = moduli.map(|m| m.powf(p)).sum();
    (sum * dx2).powf(1.0 / p)
}
