//! Bicubic (Catmull-Rom) interpolation of fields at off-grid points.
//!
//! The periodic sample array is interpolated with periodic wraparound; the
//! tail polynomial is evaluated exactly, so interpolation error comes only
//! from the periodic part.

use crate::field::{ComplexField, RealField};
use crate::grid::Grid;
use num_complex::Complex64;

fn weights(t: f64) -> [f64; 4] {
    // Keys kernel, a = -1/2
    let t2 = t * t;
    let t3 = t2 * t;
    [
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ]
}

fn fractional_index(grid: Grid, coord: f64) -> (i64, f64) {
    let u = (coord + grid.half_extent()) / grid.dx();
    let i = u.floor();
    (i as i64, u - i)
}

fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

/// Interpolate the total value of a complex field at an arbitrary point.
pub fn eval_complex(f: &ComplexField, z: Complex64) -> Complex64 {
    let grid = f.grid;
    let n = grid.n();
    let (j0, tx) = fractional_index(grid, z.re);
    let (k0, ty) = fractional_index(grid, z.im);
    let wx = weights(tx);
    let wy = weights(ty);
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, wyb) in wy.iter().enumerate() {
        let k = wrap(k0 - 1 + b as i64, n);
        let row = k * n;
        let mut racc = Complex64::new(0.0, 0.0);
        for (a, wxa) in wx.iter().enumerate() {
            let j = wrap(j0 - 1 + a as i64, n);
            racc += wxa * f.data[row + j];
        }
        acc += wyb * racc;
    }
    acc + f.tail.eval(z)
}

/// Interpolate the total value of a real field at an arbitrary point.
pub fn eval_real(f: &RealField, z: Complex64) -> f64 {
    let grid = f.grid;
    let n = grid.n();
    let (j0, tx) = fractional_index(grid, z.re);
    let (k0, ty) = fractional_index(grid, z.im);
    let wx = weights(tx);
    let wy = weights(ty);
    let mut acc = 0.0;
    for (b, wyb) in wy.iter().enumerate() {
        let k = wrap(k0 - 1 + b as i64, n);
        let row = k * n;
        let mut racc = 0.0;
        for (a, wxa) in wx.iter().enumerate() {
            let j = wrap(j0 - 1 + a as i64, n);
            racc += wxa * f.data[row + j];
        }
        acc += wyb * racc;
    }
    acc + f.tail.eval(z)
}
