use super::KernelKind;
use crate::error::{Error, Result};
use crate::field::NeumaierSum;
use crate::magnetics::FieldLineTrace;

/// Kernel truncation half-width in units of `sqrt(tau)`.
pub const DEFAULT_C_TRUNC: f64 = 10.0;

/// Weights for `int K(t, tau) A(t) dt` over sampled line data, exact for
/// piecewise-linear `A`, normalized to unit mass.
#[derive(Debug, Clone)]
pub struct KernelQuadrature {
    pub kind: KernelKind,
    pub tau: f64,
    pub half_width: f64,
    /// Offsets of the nodes from the launch point.
    pub offsets: Vec<f64>,
    pub weights: Vec<f64>,
    /// Index of the first node used, relative to the sample array given.
    pub first: usize,
}

impl KernelQuadrature {
    /// `samples` are aligned with the full offset array passed in, so
    /// `samples[first + k]` pairs with `weights[k]`.
    pub fn apply(&self, samples: &[f64]) -> f64 {
        let mut s = NeumaierSum::default();
        for (k, w) in self.weights.iter().enumerate() {
            s.add(w * samples[self.first + k]);
        }
        s.total()
    }
}

pub fn build_quadrature(trace: &FieldLineTrace, tau: f64, kind: KernelKind) -> Result<KernelQuadrature> {
    build_quadrature_with(&trace.t, tau, kind, DEFAULT_C_TRUNC)
}

/// Segments shorter than this many `sqrt(tau)` are integrated by Gauss rule.
const SHORT_SEGMENT: f64 = 0.25;

const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Linear-hat weights `int K (b-s)/(b-a)` and `int K (s-a)/(b-a)` by 8-point
/// Gauss-Legendre.
fn gauss_segment(kind: KernelKind, a: f64, b: f64, tau: f64) -> Result<(f64, f64)> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let (mut wa, mut wb) = (0.0, 0.0);
    for (x, w) in GL8 {
        for u in [-x, x] {
            let k = w * half * kind.eval(mid + half * u, tau)?;
            wa += k * 0.5 * (1.0 - u);
            wb += k * 0.5 * (1.0 + u);
        }
    }
    Ok((wa, wb))
}

/// `offsets` must be increasing and contain 0.
pub fn build_quadrature_with(offsets: &[f64], tau: f64, kind: KernelKind, c_trunc: f64) -> Result<KernelQuadrature> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("kernel quadrature needs tau > 0, got {tau}")));
    }
    let n = offsets.len();
    if n < 2 {
        return Err(Error::Config("kernel quadrature needs at least two nodes".into()));
    }
    let half = c_trunc * tau.sqrt();
    let (lo, hi) = (offsets[0], offsets[n - 1]);
    if -lo < half * (1.0 - 1e-12) || hi < half * (1.0 - 1e-12) {
        return Err(Error::Config(format!(
            "field-line trace spans [{lo}, {hi}] but the kernel needs +/-{half}"
        )));
    }
    // Smallest node range covering [-half, half].
    let first = offsets.iter().rposition(|&t| t <= -half).unwrap_or(0);
    let last = offsets.iter().position(|&t| t >= half).unwrap_or(n - 1);
    let nodes = &offsets[first..=last];
    let mut weights = vec![0.0; nodes.len()];
    for k in 0..nodes.len() - 1 {
        let (a, b) = (nodes[k], nodes[k + 1]);
        if b - a < SHORT_SEGMENT * tau.sqrt() {
            // Differences of primitives cancel badly here; the kernel is
            // smooth on the segment (0 is always an end point).
            let (wa, wb) = gauss_segment(kind, a, b, tau)?;
            weights[k] += wa;
            weights[k + 1] += wb;
            continue;
        }
        let m0 = kind.mass_between(a, b, tau);
        let m1 = kind.moment_primitive(b, tau) - kind.moment_primitive(a, tau);
        weights[k] += (b * m0 - m1) / (b - a);
        weights[k + 1] += (m1 - a * m0) / (b - a);
    }
    let mut total = NeumaierSum::default();
    for w in &weights {
        total.add(*w);
    }
    let total = total.total();
    for w in &mut weights {
        *w /= total;
    }
    // Put the rounding residue of the unit mass on the launch node.
    let center = offsets[first..=last]
        .iter()
        .position(|&t| t == 0.0)
        .unwrap_or(weights.len() / 2);
    let residue = 1.0 - crate::field::neumaier_sum(weights.iter().copied());
    weights[center] += residue;
    Ok(KernelQuadrature {
        kind,
        tau,
        half_width: half,
        offsets: nodes.to_vec(),
        weights,
        first,
    })
}
