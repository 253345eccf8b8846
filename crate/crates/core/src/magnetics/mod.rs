//! Analytic magnetic field `B = z x grad(psi) + B0 z` with
//! `psi = x + delta sin(2 pi x) cos(2 pi y)`, and field-line tracing.

mod orbit;
mod trace;

pub use orbit::{find_closed_orbit, ClosedOrbit, OrbitOptions};
pub use trace::{
    rk4_step, rk4_step_turn, trace, trace_arclength, trace_lambda, trace_with_displacement_bound, write_trace_csv,
    FieldLineTrace, LineParam,
};

use std::f64::consts::PI;

/// Default `|B|` below which a point is treated as a magnetic null.
pub const DEFAULT_B_MIN: f64 = 1e-10;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticFieldModel {
    pub delta: f64,
    pub b0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BField {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
    pub bmag: f64,
}

impl BField {
    pub fn b_squared(&self) -> f64 {
        self.bx * self.bx + self.by * self.by + self.bz * self.bz
    }

    /// In-plane magnitude `B_p`.
    pub fn poloidal(&self) -> f64 {
        self.bx.hypot(self.by)
    }
}

/// In-plane components of `b b` (with `b = B/|B|`) and the divergence of
/// that tensor, as needed by `div(b b . grad f)` in expanded form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelTensor {
    pub bxx: f64,
    pub bxy: f64,
    pub byy: f64,
    /// `d/dx (bx bx) + d/dy (bx by)`
    pub cx: f64,
    /// `d/dx (bx by) + d/dy (by by)`
    pub cy: f64,
}

/// First derivatives of the in-plane components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BGradient {
    pub dbx_dx: f64,
    pub dbx_dy: f64,
    pub dby_dx: f64,
    pub dby_dy: f64,
}

impl MagneticFieldModel {
    pub fn new(delta: f64, b0: f64) -> Self {
        Self { delta, b0 }
    }

    pub fn psi(&self, x: f64, y: f64) -> f64 {
        x + self.delta * (TWO_PI * x).sin() * (TWO_PI * y).cos()
    }

    pub fn eval_b(&self, x: f64, y: f64) -> BField {
        let (sx, cx) = (TWO_PI * x).sin_cos();
        let (sy, cy) = (TWO_PI * y).sin_cos();
        let bx = TWO_PI * self.delta * sx * sy;
        let by = 1.0 + TWO_PI * self.delta * cx * cy;
        let bz = self.b0;
        BField {
            bx,
            by,
            bz,
            bmag: (bx * bx + by * by + bz * bz).sqrt(),
        }
    }

    pub fn b_squared(&self, x: f64, y: f64) -> f64 {
        self.eval_b(x, y).b_squared()
    }

    pub fn gradient(&self, x: f64, y: f64) -> BGradient {
        let (sx, cx) = (TWO_PI * x).sin_cos();
        let (sy, cy) = (TWO_PI * y).sin_cos();
        let a = 4.0 * PI * PI * self.delta;
        BGradient {
            dbx_dx: a * cx * sy,
            dbx_dy: a * sx * cy,
            dby_dx: -a * sx * cy,
            dby_dy: -a * cx * sy,
        }
    }

    /// `None` at magnetic nulls (`|B| <= b_min`), where transport is isotropic.
    pub fn parallel_tensor(&self, x: f64, y: f64, b_min: f64) -> Option<ParallelTensor> {
        let b = self.eval_b(x, y);
        if b.bmag <= b_min {
            return None;
        }
        let g = self.gradient(x, y);
        let b2 = b.b_squared();
        let db2_dx = 2.0 * (b.bx * g.dbx_dx + b.by * g.dby_dx);
        let db2_dy = 2.0 * (b.bx * g.dbx_dy + b.by * g.dby_dy);
        // d(Bi Bj / B^2) = (d(Bi Bj) B^2 - Bi Bj dB^2) / B^4
        let quot = |bij: f64, dbij: f64, db2: f64| (dbij * b2 - bij * db2) / (b2 * b2);
        let (bxx, bxy, byy) = (b.bx * b.bx, b.bx * b.by, b.by * b.by);
        let dxx_dx = quot(bxx, 2.0 * b.bx * g.dbx_dx, db2_dx);
        let dxy_dx = quot(bxy, g.dbx_dx * b.by + b.bx * g.dby_dx, db2_dx);
        let dxy_dy = quot(bxy, g.dbx_dy * b.by + b.bx * g.dby_dy, db2_dy);
        let dyy_dy = quot(byy, 2.0 * b.by * g.dby_dy, db2_dy);
        Some(ParallelTensor {
            bxx: bxx / b2,
            bxy: bxy / b2,
            byy: byy / b2,
            cx: dxx_dx + dxy_dy,
            cy: dxy_dx + dyy_dy,
        })
    }

    /// True when `|B|` is the same everywhere (no perturbation).
    pub fn is_uniform(&self) -> bool {
        self.delta == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_components() {
        let m = MagneticFieldModel::new(0.1, 0.0);
        let b = m.eval_b(0.25, 0.25);
        assert!((b.bx - 0.2 * PI).abs() < 1e-15);
        assert!((b.by - 1.0).abs() < 1e-15);
        assert!((b.bmag - (1.0 + 0.04 * PI * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unperturbed_field_is_uniform() {
        let m = MagneticFieldModel::new(0.0, 2.0);
        for &(x, y) in &[(0.1, 0.2), (0.9, 0.55)] {
            let b = m.eval_b(x, y);
            assert_eq!((b.bx, b.by), (0.0, 1.0));
            assert!((b.bmag - 5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn no_normal_field_on_x_boundaries() {
        let m = MagneticFieldModel::new(0.5, 0.0);
        for j in 0..20 {
            let y = j as f64 / 20.0;
            assert!(m.eval_b(0.0, y).bx.abs() < 1e-15);
            assert!(m.eval_b(1.0, y).bx.abs() < 1e-14);
        }
    }

    #[test]
    fn components_derive_from_flux_function() {
        let m = MagneticFieldModel::new(0.37, 1.0);
        let h = 1e-5;
        for &(x, y) in &[(0.13, 0.71), (0.5, 0.5), (0.82, 0.04)] {
            let b = m.eval_b(x, y);
            let dpsi_dx = (m.psi(x + h, y) - m.psi(x - h, y)) / (2.0 * h);
            let dpsi_dy = (m.psi(x, y + h) - m.psi(x, y - h)) / (2.0 * h);
            assert!((b.bx + dpsi_dy).abs() < 1e-8);
            assert!((b.by - dpsi_dx).abs() < 1e-8);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let m = MagneticFieldModel::new(0.3, 0.0);
        let h = 1e-5;
        let (x, y) = (0.31, 0.17);
        let g = m.gradient(x, y);
        let fx = |f: fn(&BField) -> f64| (f(&m.eval_b(x + h, y)) - f(&m.eval_b(x - h, y))) / (2.0 * h);
        let fy = |f: fn(&BField) -> f64| (f(&m.eval_b(x, y + h)) - f(&m.eval_b(x, y - h))) / (2.0 * h);
        assert!((g.dbx_dx - fx(|b| b.bx)).abs() < 1e-7);
        assert!((g.dby_dx - fx(|b| b.by)).abs() < 1e-7);
        assert!((g.dbx_dy - fy(|b| b.bx)).abs() < 1e-7);
        assert!((g.dby_dy - fy(|b| b.by)).abs() < 1e-7);
    }

    #[test]
    fn tensor_divergence_matches_central_differences() {
        let m = MagneticFieldModel::new(0.5, 1.0);
        let h = 1e-5;
        let comp = |x: f64, y: f64| m.parallel_tensor(x, y, DEFAULT_B_MIN).unwrap();
        for &(x, y) in &[(0.21, 0.64), (0.77, 0.12)] {
            let t = comp(x, y);
            let d = |f: fn(&ParallelTensor) -> f64, dx: f64, dy: f64| {
                (f(&comp(x + dx, y + dy)) - f(&comp(x - dx, y - dy))) / (2.0 * h)
            };
            let cx = d(|t| t.bxx, h, 0.0) + d(|t| t.bxy, 0.0, h);
            let cy = d(|t| t.bxy, h, 0.0) + d(|t| t.byy, 0.0, h);
            assert!((t.cx - cx).abs() < 1e-6, "{} {}", t.cx, cx);
            assert!((t.cy - cy).abs() < 1e-6, "{} {}", t.cy, cy);
        }
    }

    #[test]
    fn null_returns_no_tensor() {
        // O-point of the delta = 0.5, B0 = 0 field: x = 1/2, cos(2 pi y) = 1/pi.
        let m = MagneticFieldModel::new(0.5, 0.0);
        let y = (1.0 / PI).acos() / TWO_PI;
        assert!(m.eval_b(0.5, y).bmag < 1e-14);
        assert!(m.parallel_tensor(0.5, y, DEFAULT_B_MIN).is_none());
    }
}
