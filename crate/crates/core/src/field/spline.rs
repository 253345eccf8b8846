//! Tensor-product B-spline interpolation of nodal fields.
//!
//! `x` uses clamped not-a-knot knots over the Dirichlet nodes, `y` uses
//! uniform periodic B-splines centred on the nodes. Coefficients are
//! `Cx^-1 F Cy^-T` with the 1D collocation matrices inverted once per mesh.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Mesh2D, ScalarField2D};
use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 5;
pub const MAX_ORDER: usize = 7;

/// Tolerance for evaluation points slightly outside `[0, 1]` in `x`.
const X_SLACK: f64 = 1e-9;

/// Nonzero B-spline values at `u` on the knot span `span` (degree `k`),
/// for basis functions `span - k ..= span`.
fn basis_funs(span: isize, u: f64, k: usize, knot: impl Fn(isize) -> f64, out: &mut [f64]) {
    let mut left = [0.0; MAX_ORDER + 1];
    let mut right = [0.0; MAX_ORDER + 1];
    out[0] = 1.0;
    for j in 1..=k {
        left[j] = u - knot(span + 1 - j as isize);
        right[j] = knot(span + j as isize) - u;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

fn invert(n: usize, fill: impl Fn(usize, usize) -> f64, what: &str) -> Result<Vec<f64>> {
    let m = DMatrix::from_fn(n, n, fill);
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::Config(format!("singular {what} spline collocation matrix")))?;
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = inv[(r, c)];
        }
    }
    Ok(out)
}

/// Mesh-dependent part of the interpolation: knots and inverse collocation
/// matrices. Shared by every interpolant on the same mesh.
#[derive(Debug, Clone)]
pub struct SplineBasis2D {
    mesh: Mesh2D,
    order: usize,
    knots_x: Vec<f64>,
    cx_inv: Vec<f64>,
    cy_inv: Vec<f64>,
}

/// Location of one evaluation point in coefficient space: the value is
/// `sum_a sum_b wx[a] wy[b] c[(ix0 + a) * ny + iy[b]]`.
#[derive(Debug, Clone, Copy)]
pub struct SplineStencil {
    pub ix0: usize,
    pub wx: [f64; MAX_ORDER + 1],
    pub iy: [usize; MAX_ORDER + 1],
    pub wy: [f64; MAX_ORDER + 1],
    pub width: usize,
}

impl SplineBasis2D {
    pub fn new(mesh: Mesh2D, order: usize) -> Result<Self> {
        if order % 2 == 0 || !(3..=MAX_ORDER).contains(&order) {
            return Err(Error::Config(format!("spline order must be 3, 5 or 7, got {order}")));
        }
        let (nx, ny) = (mesh.nx, mesh.ny);
        if nx < order + 2 || ny < order + 1 {
            return Err(Error::Config(format!(
                "mesh {nx}x{ny} too small for spline order {order}"
            )));
        }
        let half = order.div_ceil(2);
        let mut knots_x = vec![0.0; order + 1];
        knots_x.extend((half..nx - half).map(|i| mesh.x(i)));
        knots_x.extend(std::iter::repeat_n(1.0, order + 1));
        debug_assert_eq!(knots_x.len(), nx + order + 1);

        let mut basis = Self {
            mesh,
            order,
            knots_x,
            cx_inv: Vec::new(),
            cy_inv: Vec::new(),
        };

        let mut cx = vec![0.0; nx * nx];
        let mut vals = [0.0; MAX_ORDER + 1];
        for i in 0..nx {
            let first = basis.x_basis(mesh.x(i), &mut vals);
            for a in 0..=order {
                cx[i * nx + first + a] = vals[a];
            }
        }
        basis.cx_inv = invert(nx, |r, c| cx[r * nx + c], "x")?;

        let mut cy = vec![0.0; ny * ny];
        let mut idx = [0usize; MAX_ORDER + 1];
        for j in 0..ny {
            basis.y_basis(mesh.y(j), &mut idx, &mut vals);
            for b in 0..=order {
                cy[j * ny + idx[b]] += vals[b];
            }
        }
        basis.cy_inv = invert(ny, |r, c| cy[r * ny + c], "y")?;
        Ok(basis)
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Index of the first nonzero x basis function at `x` and the values.
    fn x_basis(&self, x: f64, out: &mut [f64]) -> usize {
        let k = self.order;
        let n = self.mesh.nx;
        let t = &self.knots_x;
        // Span search over [t[k], t[n]].
        let span = if x >= t[n] {
            n - 1
        } else {
            let (mut lo, mut hi) = (k, n);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if x < t[mid] {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            lo
        };
        basis_funs(span as isize, x, k, |i| t[i as usize], out);
        span - k
    }

    fn y_basis(&self, y: f64, idx: &mut [usize], out: &mut [f64]) {
        let k = self.order;
        let ny = self.mesh.ny;
        let u = (y / self.mesh.hy).rem_euclid(ny as f64) + k.div_ceil(2) as f64;
        let m = u.floor();
        let frac = u - m;
        let m = m as isize;
        // Integer knots shifted so the span is [k, k+1).
        basis_funs(k as isize, frac + k as f64, k, |i| i as f64, out);
        for b in 0..=k {
            idx[b] = (m - k as isize + b as isize).rem_euclid(ny as isize) as usize;
        }
    }

    pub fn stencil(&self, x: f64, y: f64) -> Result<SplineStencil> {
        if !(-X_SLACK..=1.0 + X_SLACK).contains(&x) {
            return Err(Error::Domain(format!("spline evaluation at x = {x} outside [0, 1]")));
        }
        let x = x.clamp(0.0, 1.0);
        let mut s = SplineStencil {
            ix0: 0,
            wx: [0.0; MAX_ORDER + 1],
            iy: [0; MAX_ORDER + 1],
            wy: [0.0; MAX_ORDER + 1],
            width: self.order + 1,
        };
        s.ix0 = self.x_basis(x, &mut s.wx);
        self.y_basis(y, &mut s.iy, &mut s.wy);
        Ok(s)
    }

    /// Spline coefficients of nodal values `f` (x-major, like the field).
    pub fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.mesh.nx, self.mesh.ny);
        let mut tmp = vec![0.0; nx * ny];
        for a in 0..nx {
            let row = &mut tmp[a * ny..(a + 1) * ny];
            for i in 0..nx {
                let w = self.cx_inv[a * nx + i];
                if w != 0.0 {
                    for (t, &v) in row.iter_mut().zip(&f[i * ny..(i + 1) * ny]) {
                        *t += w * v;
                    }
                }
            }
        }
        let mut c = vec![0.0; nx * ny];
        for a in 0..nx {
            let row = &tmp[a * ny..(a + 1) * ny];
            for b in 0..ny {
                let inv = &self.cy_inv[b * ny..(b + 1) * ny];
                c[a * ny + b] = row.iter().zip(inv).map(|(r, w)| r * w).sum();
            }
        }
        c
    }

    pub fn interpolant(self: &Arc<Self>, f: &ScalarField2D) -> Result<SplineInterpolant> {
        if f.mesh() != &self.mesh {
            return Err(Error::Config("interpolant: field and basis meshes differ".into()));
        }
        Ok(SplineInterpolant {
            basis: Arc::clone(self),
            coeffs: self.coefficients(f.values()),
        })
    }
}

impl SplineStencil {
    #[inline]
    pub fn eval(&self, coeffs: &[f64], ny: usize) -> f64 {
        let mut total = 0.0;
        for a in 0..self.width {
            let base = (self.ix0 + a) * ny;
            let mut row = 0.0;
            for b in 0..self.width {
                row += self.wy[b] * coeffs[base + self.iy[b]];
            }
            total += self.wx[a] * row;
        }
        total
    }
}

/// A field reconstructed as a smooth function of `(x, y)`.
#[derive(Debug, Clone)]
pub struct SplineInterpolant {
    basis: Arc<SplineBasis2D>,
    coeffs: Vec<f64>,
}

impl SplineInterpolant {
    pub fn build(f: &ScalarField2D, order: usize) -> Result<Self> {
        Arc::new(SplineBasis2D::new(*f.mesh(), order)?).interpolant(f)
    }

    pub fn order(&self) -> usize {
        self.basis.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Value at `(x, y)`; `y` is wrapped into the period.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let s = self.basis.stencil(x, y)?;
        Ok(s.eval(&self.coeffs, self.basis.mesh.ny))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldRole;
    use std::f64::consts::PI;

    fn sample(cells: usize) -> ScalarField2D {
        let mesh = Mesh2D::square(cells).unwrap();
        ScalarField2D::from_fn(mesh, FieldRole::Generic, |x, y| {
            (2.0 * PI * x).sin() * (2.0 * PI * y).sin() + x * x
        })
    }

    #[test]
    fn partition_of_unity() {
        let mesh = Mesh2D::square(16).unwrap();
        for k in [3, 5, 7] {
            let basis = SplineBasis2D::new(mesh, k).unwrap();
            for &(x, y) in &[(0.0, 0.0), (0.013, 0.77), (0.5, 0.5), (0.999, 0.999), (1.0, 0.3)] {
                let s = basis.stencil(x, y).unwrap();
                let sx: f64 = s.wx[..s.width].iter().sum();
                let sy: f64 = s.wy[..s.width].iter().sum();
                assert!((sx - 1.0).abs() < 1e-14 && (sy - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn reproduces_nodal_values() {
        for k in [3, 5, 7] {
            let f = sample(24);
            let mesh = *f.mesh();
            let interp = SplineInterpolant::build(&f, k).unwrap();
            for i in 0..mesh.nx {
                for j in 0..mesh.ny {
                    let v = interp.eval(mesh.x(i), mesh.y(j)).unwrap();
                    let r = f.at(i, j);
                    assert!((v - r).abs() <= 1e-12 * r.abs().max(1.0), "k={k} ({i},{j}): {v} vs {r}");
                }
            }
        }
    }

    #[test]
    fn periodic_in_y() {
        let f = sample(16);
        let interp = SplineInterpolant::build(&f, 5).unwrap();
        for &(x, y) in &[(0.1, 0.2), (0.73, 0.999), (0.5, 0.0)] {
            let a = interp.eval(x, y).unwrap();
            assert!((a - interp.eval(x, y + 1.0).unwrap()).abs() < 1e-13);
            assert!((a - interp.eval(x, y - 3.0).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_points_outside_x_range() {
        let interp = SplineInterpolant::build(&sample(16), 5).unwrap();
        assert!(matches!(interp.eval(1.01, 0.0), Err(Error::Domain(_))));
        assert!(matches!(interp.eval(-0.5, 0.0), Err(Error::Domain(_))));
        assert!(interp.eval(1.0 + 1e-12, 0.0).is_ok());
    }

    #[test]
    fn rejects_even_order() {
        assert!(SplineBasis2D::new(Mesh2D::square(16).unwrap(), 4).is_err());
    }

    fn midpoint_error(cells: usize, k: usize) -> f64 {
        let f = sample(cells);
        let mesh = *f.mesh();
        let interp = SplineInterpolant::build(&f, k).unwrap();
        let mut e: f64 = 0.0;
        for i in 0..mesh.nx - 1 {
            for j in 0..mesh.ny {
                let (x, y) = (mesh.x(i) + 0.5 * mesh.hx, mesh.y(j) + 0.5 * mesh.hy);
                let exact = (2.0 * PI * x).sin() * (2.0 * PI * y).sin() + x * x;
                e = e.max((interp.eval(x, y).unwrap() - exact).abs());
            }
        }
        e
    }

    #[test]
    fn midpoint_error_converges_at_order_plus_one() {
        for k in [3, 5, 7] {
            let (a, b) = (midpoint_error(16, k), midpoint_error(32, k));
            let order = (a / b).log2();
            assert!(order > k as f64 + 0.5, "k={k}: observed {order} ({a:e} -> {b:e})");
        }
    }
}
