//! Parallel heat kernels and their discretization along field lines.
//!
//! `G(s, t) = (4 pi t)^(-1/2) exp(-s^2 / 4t)` propagates the homogeneous
//! parallel diffusion equation; `U(s, tau) = (1/tau) int_0^tau G(s, t) dt`
//! is its time average and carries the source contribution. Both have unit
//! mass, Fourier symbols `exp(-k^2 tau)` and `(1 - exp(-k^2 tau)) / (k^2 tau)`.

mod erf;
mod quadrature;
mod spectral;

pub use erf::{erf, erfc, erfcx};
pub use quadrature::{build_quadrature, build_quadrature_with, KernelQuadrature, DEFAULT_C_TRUNC};
pub use spectral::{periodic_weights, CosineSpectrum};

use std::f64::consts::PI;

use crate::error::{Error, Result};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Green's function `G`.
    G,
    /// Time-integrated kernel `U`.
    U,
}

fn check_time(t: f64, what: &str) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} needs a positive time argument, got {t}")))
    }
}

pub fn kernel_g(s: f64, t: f64) -> Result<f64> {
    check_time(t, "G")?;
    Ok((-s * s / (4.0 * t)).exp() / (4.0 * PI * t).sqrt())
}

pub fn kernel_u(s: f64, tau: f64) -> Result<f64> {
    check_time(tau, "U")?;
    let z = s.abs() / (2.0 * tau.sqrt());
    Ok(((-z * z).exp() * FRAC_1_SQRT_PI - z * erfc(z)) / tau.sqrt())
}

impl KernelKind {
    pub fn eval(self, s: f64, tau: f64) -> Result<f64> {
        match self {
            KernelKind::G => kernel_g(s, tau),
            KernelKind::U => kernel_u(s, tau),
        }
    }

    /// Fourier multiplier at wavenumber `kappa`.
    pub fn symbol(self, kappa: f64, tau: f64) -> f64 {
        let x = kappa * kappa * tau;
        match self {
            KernelKind::G => (-x).exp(),
            KernelKind::U => {
                if x < 1e-8 {
                    1.0 - 0.5 * x + x * x / 6.0
                } else {
                    -(-x).exp_m1() / x
                }
            }
        }
    }

    /// `int_0^s K(u) du`, odd in `s`.
    fn mass_primitive(self, s: f64, tau: f64) -> f64 {
        let z = s.abs() / (2.0 * tau.sqrt());
        let v = match self {
            KernelKind::G => 0.5 * erf(z),
            KernelKind::U => 0.5 * erf(z) - z * z * erfc(z) + z * (-z * z).exp() * FRAC_1_SQRT_PI,
        };
        v.copysign(s)
    }

    /// `int_a^b K(u) du`, accurate in the tails.
    fn mass_between(self, a: f64, b: f64, tau: f64) -> f64 {
        if a >= 0.0 {
            self.tail_mass(a, tau) - self.tail_mass(b, tau)
        } else if b <= 0.0 {
            self.tail_mass(-b, tau) - self.tail_mass(-a, tau)
        } else {
            self.mass_primitive(b, tau) - self.mass_primitive(a, tau)
        }
    }

    /// `int_s^inf K(u) du` for `s >= 0`.
    fn tail_mass(self, s: f64, tau: f64) -> f64 {
        let z = s / (2.0 * tau.sqrt());
        match self {
            KernelKind::G => 0.5 * erfc(z),
            KernelKind::U => (-z * z).exp() * (erfcx(z) * (0.5 + z * z) - z * FRAC_1_SQRT_PI),
        }
    }

    /// A primitive of `u K(u)`, even in `s`.
    fn moment_primitive(self, s: f64, tau: f64) -> f64 {
        let z = s.abs() / (2.0 * tau.sqrt());
        let e = (-z * z).exp();
        match self {
            KernelKind::G => -2.0 * tau * e / (4.0 * PI * tau).sqrt(),
            KernelKind::U => {
                4.0 * tau.sqrt() * (e * (2.0 * z * z - 1.0) * FRAC_1_SQRT_PI / 6.0 - z * z * z * erfc(z) / 3.0)
            }
        }
    }
}
