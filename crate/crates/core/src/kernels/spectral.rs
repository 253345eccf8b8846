//! Kernel convolution over one period of a closed field line, applied
//! exactly to the trigonometric interpolant of uniformly spaced samples.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::KernelKind;
use crate::field::neumaier_sum;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Signed frequency of DFT index `j` for `n` samples.
fn frequency(j: usize, n: usize) -> f64 {
    if 2 * j <= n {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// Weights `w_k` such that `sum_k w_k f(t_k)` applies the kernel (periodized
/// over `period`) to the trigonometric interpolant of the `n` samples
/// `f(t_k)`, `t_k = k period / n`, evaluated at `t = 0`. They sum to one.
pub fn periodic_weights(n: usize, period: f64, tau: f64, kind: KernelKind) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|j| {
            let kappa = 2.0 * PI * frequency(j, n) / period;
            Complex::new(kind.symbol(kappa, tau), 0.0)
        })
        .collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    let inv_n = 1.0 / n as f64;
    let mut w: Vec<f64> = buf.iter().map(|c| c.re * inv_n).collect();
    let residue = 1.0 - neumaier_sum(w.iter().copied());
    w[0] += residue;
    w
}

/// Real cosine coefficients of one period of samples, so that kernel
/// applications at the first sample can be re-evaluated for any `tau`.
#[derive(Debug, Clone)]
pub struct CosineSpectrum {
    period: f64,
    n: usize,
    coeffs: Vec<f64>,
}

impl CosineSpectrum {
    pub fn from_samples(samples: &[f64], period: f64) -> Self {
        let n = samples.len();
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
        PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
        let inv_n = 1.0 / n as f64;
        let coeffs = buf[..=n / 2].iter().map(|c| c.re * inv_n).collect();
        Self { period, n, coeffs }
    }

    /// Mean of the samples.
    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    /// Kernel applied at the first sample.
    pub fn apply(&self, kind: KernelKind, tau: f64) -> f64 {
        let mut s = crate::field::NeumaierSum::default();
        s.add(self.coeffs[0]);
        for (j, &c) in self.coeffs.iter().enumerate().skip(1) {
            let m = kind.symbol(2.0 * PI * j as f64 / self.period, tau);
            let mult = if 2 * j == self.n { 1.0 } else { 2.0 };
            s.add(mult * m * c);
        }
        s.total()
    }
}
