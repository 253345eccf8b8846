//! Manufactured steady state `T = psi + eps T~`, `T~ = sin(4 pi x) cos(4 pi y)`,
//! and the source that makes it exact:
//! `S = -(1 - eps) lap_par T~ - eps lap T~ - lap psi`.
//!
//! `lap_par f = div(b b . grad f)` with `b = B/|B|`; the divergence of the
//! `b b` tensor is singular at magnetic nulls, so the source is too.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{FieldRole, Mesh2D, ScalarField2D};
use crate::magnetics::MagneticFieldModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsCase {
    pub delta: f64,
    pub b0: f64,
    pub eps: f64,
    /// Drop `T~`: the steady state is the flux function alone.
    pub null_space_only: bool,
}

impl MmsCase {
    pub fn new(delta: f64, b0: f64, eps: f64) -> Self {
        MmsCase {
            delta,
            b0,
            eps,
            null_space_only: false,
        }
    }

    pub fn null_space(delta: f64, b0: f64, eps: f64) -> Self {
        MmsCase {
            null_space_only: true,
            ..Self::new(delta, b0, eps)
        }
    }

    pub fn model(&self) -> MagneticFieldModel {
        MagneticFieldModel::new(self.delta, self.b0)
    }

    pub fn psi(&self, x: f64, y: f64) -> f64 {
        self.model().psi(x, y)
    }

    pub fn t_tilde(&self, x: f64, y: f64) -> f64 {
        if self.null_space_only {
            0.0
        } else {
            (4.0 * PI * x).sin() * (4.0 * PI * y).cos()
        }
    }

    pub fn temperature(&self, x: f64, y: f64) -> f64 {
        self.psi(x, y) + self.eps * self.t_tilde(x, y)
    }

    pub fn laplacian_psi(&self, x: f64, y: f64) -> f64 {
        -8.0 * PI * PI * self.delta * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()
    }

    /// `div(b b . grad T~)`; `None` where `|B| <= b_min`.
    pub fn parallel_laplacian_t_tilde(&self, x: f64, y: f64, b_min: f64) -> Option<f64> {
        if self.null_space_only {
            return Some(0.0);
        }
        let pt = self.model().parallel_tensor(x, y, b_min)?;
        let (s4x, c4x) = (4.0 * PI * x).sin_cos();
        let (s4y, c4y) = (4.0 * PI * y).sin_cos();
        let k2 = 16.0 * PI * PI;
        let fxx = -k2 * s4x * c4y;
        let fyy = fxx;
        let fxy = -k2 * c4x * s4y;
        let fx = 4.0 * PI * c4x * c4y;
        let fy = -4.0 * PI * s4x * s4y;
        Some(pt.bxx * fxx + 2.0 * pt.bxy * fxy + pt.byy * fyy + pt.cx * fx + pt.cy * fy)
    }

    pub fn source(&self, x: f64, y: f64, b_min: f64) -> Result<f64> {
        if self.model().eval_b(x, y).bmag <= b_min {
            return Err(Error::SingularSource { x, y });
        }
        let par = self
            .parallel_laplacian_t_tilde(x, y, b_min)
            .ok_or(Error::SingularSource { x, y })?;
        let lap_tt = -32.0 * PI * PI * self.t_tilde(x, y);
        Ok(-(1.0 - self.eps) * par - self.eps * lap_tt - self.laplacian_psi(x, y))
    }

    /// Isotropic steady source `-lap T`, used where the field vanishes.
    pub fn isotropic_source(&self, x: f64, y: f64) -> f64 {
        -(self.laplacian_psi(x, y) - self.eps * 32.0 * PI * PI * self.t_tilde(x, y))
    }

    pub fn temperature_field(&self, mesh: Mesh2D) -> ScalarField2D {
        ScalarField2D::from_fn(mesh, FieldRole::Temperature, |x, y| self.temperature(x, y))
    }

    /// Source at every node. Nodes on a null get the isotropic source and
    /// are counted in the second return value.
    pub fn source_field(&self, mesh: Mesh2D, b_min: f64) -> Result<(ScalarField2D, usize)> {
        let mut singular = 0;
        let mut v = Vec::with_capacity(mesh.len());
        for k in 0..mesh.len() {
            let (i, j) = mesh.ij(k);
            let (x, y) = (mesh.x(i), mesh.y(j));
            v.push(match self.source(x, y, b_min) {
                Ok(s) => s,
                Err(Error::SingularSource { .. }) => {
                    singular += 1;
                    self.isotropic_source(x, y)
                }
                Err(e) => return Err(e),
            });
        }
        if singular > 0 {
            log::warn!("manufactured source singular at {singular} nodes; using the isotropic source there");
        }
        Ok((ScalarField2D::from_values(mesh, v, FieldRole::Source)?, singular))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetics::DEFAULT_B_MIN;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64)
    }

    /// Fourth-order central difference of `f` along `(dx, dy)`.
    fn d1(f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64, dx: f64, dy: f64) -> f64 {
        (8.0 * (f(x + dx, y + dy) - f(x - dx, y - dy))
            - (f(x + 2.0 * dx, y + 2.0 * dy) - f(x - 2.0 * dx, y - 2.0 * dy)))
            / (12.0 * (dx + dy))
    }

    /// `div(b b . grad f)` entirely by finite differences, using only the
    /// field components.
    fn fd_parallel_laplacian(model: &MagneticFieldModel, f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64) -> f64 {
        let h = 5e-4;
        let flux = |x: f64, y: f64| {
            let b = model.eval_b(x, y);
            let (bx, by) = (b.bx / b.bmag, b.by / b.bmag);
            let gx = d1(f, x, y, h, 0.0);
            let gy = d1(f, x, y, 0.0, h);
            let proj = bx * gx + by * gy;
            (bx * proj, by * proj)
        };
        d1(&|x, y| flux(x, y).0, x, y, h, 0.0) + d1(&|x, y| flux(x, y).1, x, y, 0.0, h)
    }

    #[test]
    fn boundary_values() {
        let c = MmsCase::new(0.5, 0.0, 1e-2);
        for y in [0.0, 0.3, 0.77] {
            assert!(c.temperature(0.0, y).abs() < 1e-15);
            assert!((c.temperature(1.0, y) - 1.0).abs() < 1e-14);
        }
        let c = MmsCase::new(0.1, 0.0, 1e-2);
        assert!((c.temperature(0.25, 0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn uniform_field_reduction() {
        for b0 in [0.0, 1.0, 3.0] {
            let eps = 1e-2;
            let c = MmsCase::new(0.0, b0, eps);
            for (x, y) in [(0.1, 0.2), (0.37, 0.81), (0.66, 0.05)] {
                let tt = (4.0 * PI * x).sin() * (4.0 * PI * y).cos();
                let expect = (1.0 - eps) * 16.0 * PI * PI / (1.0 + b0 * b0) * tt + 32.0 * PI * PI * eps * tt;
                let s = c.source(x, y, DEFAULT_B_MIN).unwrap();
                assert!((s - expect).abs() < 1e-10 * expect.abs().max(1.0), "{s} vs {expect}");
            }
        }
    }

    #[test]
    fn closed_forms_match_finite_differences_of_the_operators() {
        let mut seed = 5;
        for (delta, b0) in [(0.1, 0.0), (0.1, 1.0), (0.5, 1.0), (0.5, 0.0), (0.1, 10.0)] {
            let c = MmsCase::new(delta, b0, 1e-2);
            let model = c.model();
            for _ in 0..40 {
                let (x, y) = (0.05 + 0.9 * lcg(&mut seed), lcg(&mut seed));
                if model.eval_b(x, y).bmag < 0.3 {
                    continue;
                }
                let tt = |x: f64, y: f64| (4.0 * PI * x).sin() * (4.0 * PI * y).cos();
                let fd = fd_parallel_laplacian(&model, &tt, x, y);
                let an = c.parallel_laplacian_t_tilde(x, y, DEFAULT_B_MIN).unwrap();
                assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "({x}, {y}): {fd} vs {an}");
                let psi = |x: f64, y: f64| model.psi(x, y);
                let lap = |f: &dyn Fn(f64, f64) -> f64| {
                    let h = 5e-4;
                    d1(&|x, y| d1(f, x, y, h, 0.0), x, y, h, 0.0) + d1(&|x, y| d1(f, x, y, 0.0, h), x, y, 0.0, h)
                };
                assert!((lap(&psi) - c.laplacian_psi(x, y)).abs() < 1e-6 * c.laplacian_psi(x, y).abs().max(1.0));
                assert!((lap(&tt) + 32.0 * PI * PI * tt(x, y)).abs() < 1e-6 * 32.0 * PI * PI);
            }
        }
    }

    #[test]
    fn steady_residual_vanishes() {
        // (1/eps) lap_par T + lap_perp T + S = 0 with lap_perp = lap - lap_par.
        // lap_par psi = 0 exactly, so only T~ enters the parallel part.
        let mut seed = 9;
        for (delta, b0) in [(0.1, 0.0), (0.5, 1.0), (0.5, 0.0)] {
            for eps in [1e-2, 1e-4, 1e-6] {
                let c = MmsCase::new(delta, b0, eps);
                let model = c.model();
                for _ in 0..1000 {
                    let (x, y) = (lcg(&mut seed), lcg(&mut seed));
                    if model.eval_b(x, y).bmag < 1e-3 {
                        continue;
                    }
                    let par_tt = c.parallel_laplacian_t_tilde(x, y, DEFAULT_B_MIN).unwrap();
                    let lap_t = c.laplacian_psi(x, y) - eps * 32.0 * PI * PI * c.t_tilde(x, y);
                    let par_t = eps * par_tt;
                    let r = par_t / eps + (lap_t - par_t) + c.source(x, y, DEFAULT_B_MIN).unwrap();
                    assert!(r.abs() < 1e-6 * (1.0 + par_tt.abs()), "{r}");
                }
            }
        }
    }

    #[test]
    fn flux_function_is_parallel_harmonic() {
        let model = MagneticFieldModel::new(0.5, 1.0);
        for (x, y) in [(0.2, 0.1), (0.7, 0.4)] {
            let fd = fd_parallel_laplacian(&model, &|x, y| model.psi(x, y), x, y);
            assert!(fd.abs() < 1e-7, "{fd}");
        }
    }

    #[test]
    fn nulls_are_reported() {
        let c = MmsCase::new(0.5, 0.0, 1e-2);
        let xo = (-1.0 / PI).acos() / (2.0 * PI);
        assert!(matches!(c.source(xo, 0.0, 1e-6), Err(Error::SingularSource { .. })));
        let null_only = MmsCase::null_space(0.5, 0.0, 1e-2);
        assert!(null_only.source(xo, 0.0, 1e-6).is_err());
    }

    #[test]
    fn null_space_case_has_no_perturbation() {
        let c = MmsCase::null_space(0.1, 0.0, 1e-2);
        assert_eq!(c.temperature(0.3, 0.4), c.psi(0.3, 0.4));
        let s = c.source(0.3, 0.4, DEFAULT_B_MIN).unwrap();
        assert!((s + c.laplacian_psi(0.3, 0.4)).abs() < 1e-14);
    }
}
