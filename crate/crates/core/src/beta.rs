//! The positive field `beta(x)`, fixed point of
//! `beta = P_lambda(1/B^2; x, dt / (beta eps))`, by Picard iteration.
//!
//! With `tau` held at its launch-point value along each line, every node is
//! a scalar fixed point. The samples of `1/B^2` along each line are traced
//! once and kept as a cosine spectrum (closed lines) or as raw samples
//! (open segments), so each sweep only re-evaluates kernel symbols.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{FieldRole, Mesh2D, ScalarField2D};
use crate::kernels::{build_quadrature_with, CosineSpectrum, KernelKind};
use crate::magnetics::{LineParam, MagneticFieldModel};
use crate::propagators::{line_through, LineSamples, LineSettings};

pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 20;

#[derive(Debug, Clone)]
pub struct BetaField {
    pub field: ScalarField2D,
    /// Sweeps performed.
    pub iterations: usize,
    /// Max relative change in the last sweep.
    pub change: f64,
    pub converged: bool,
    /// Nodes treated as magnetic nulls (isotropic transport).
    pub null: Vec<bool>,
}

impl BetaField {
    pub fn values(&self) -> &[f64] {
        self.field.values()
    }
}

#[derive(Debug, Clone)]
enum NodeData {
    /// Dirichlet node or null: `beta` is fixed at `1/B^2` (floored).
    Fixed,
    Closed {
        spectrum: CosineSpectrum,
        lo: f64,
        hi: f64,
    },
    Open {
        t: Vec<f64>,
        inv_b2: Vec<f64>,
    },
}

/// `1/B^2` along the `lambda` line through every node.
#[derive(Debug, Clone)]
pub struct InverseB2Lines {
    mesh: Mesh2D,
    inv_b2: Vec<f64>,
    null: Vec<bool>,
    nodes: Vec<NodeData>,
    c_trunc: f64,
}

impl InverseB2Lines {
    pub fn build(model: &MagneticFieldModel, mesh: Mesh2D, settings: &LineSettings) -> Result<Self> {
        let h = mesh.min_spacing();
        let data: Vec<Result<(f64, bool, NodeData)>> = (0..mesh.len())
            .into_par_iter()
            .map(|node| {
                let (i, j) = mesh.ij(node);
                let (x, y) = (mesh.x(i), mesh.y(j));
                let b2 = model.b_squared(x, y);
                let is_null = b2.sqrt() <= settings.b_min;
                let floor = 1.0 / b2.max(settings.b_min * settings.b_min);
                if mesh.is_boundary(i) || is_null {
                    return Ok((floor, is_null, NodeData::Fixed));
                }
                let line = line_through(model, LineParam::Lambda, x, y, h, settings, f64::INFINITY)?;
                let d = match line {
                    None => return Ok((floor, true, NodeData::Fixed)),
                    Some(LineSamples::Closed(o)) => {
                        let s: Vec<f64> = o.bmag.iter().map(|b| 1.0 / (b * b)).collect();
                        let (lo, hi) = range(&s);
                        NodeData::Closed {
                            spectrum: CosineSpectrum::from_samples(&s, o.period),
                            lo,
                            hi,
                        }
                    }
                    Some(LineSamples::Open(l)) => {
                        let inv_b2 = l.bmag.iter().map(|b| 1.0 / (b * b)).collect();
                        NodeData::Open { t: l.t, inv_b2 }
                    }
                };
                Ok((floor, false, d))
            })
            .collect();
        let mut out = InverseB2Lines {
            mesh,
            inv_b2: Vec::with_capacity(mesh.len()),
            null: Vec::with_capacity(mesh.len()),
            nodes: Vec::with_capacity(mesh.len()),
            c_trunc: settings.c_trunc,
        };
        for d in data {
            let (v, n, nd) = d?;
            out.inv_b2.push(v);
            out.null.push(n);
            out.nodes.push(nd);
        }
        Ok(out)
    }

    /// `P_lambda(1/B^2)` at `node` for kernel time `tau`.
    fn apply_p(&self, node: usize, tau: f64) -> Result<f64> {
        match &self.nodes[node] {
            NodeData::Fixed => Ok(self.inv_b2[node]),
            NodeData::Closed { spectrum, .. } => Ok(spectrum.apply(KernelKind::U, tau)),
            NodeData::Open { t, inv_b2 } => {
                let half = (-t[0]).min(t[t.len() - 1]);
                let c = self.c_trunc.min(half / tau.sqrt());
                let q = build_quadrature_with(t, tau, KernelKind::U, c)?;
                Ok(q.apply(inv_b2))
            }
        }
    }

    /// Smallest and largest `1/B^2` seen by the kernel at `node`.
    fn sample_range(&self, node: usize) -> (f64, f64) {
        match &self.nodes[node] {
            NodeData::Fixed => (self.inv_b2[node], self.inv_b2[node]),
            NodeData::Closed { lo, hi, .. } => (*lo, *hi),
            NodeData::Open { inv_b2, .. } => range(inv_b2),
        }
    }

    /// Root of `P(1/B^2; dt/(beta eps)) - beta` at one node by bisection in
    /// `log beta`. The bracket holds because the kernel weights are a
    /// positive unit-mass average of the samples.
    fn bracketed_root(&self, node: usize, ratio: f64) -> Result<f64> {
        let (lo, hi) = self.sample_range(node);
        let (mut a, mut b) = ((0.5 * lo).ln(), (2.0 * hi).ln());
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let beta = m.exp();
            if self.apply_p(node, ratio / beta)? > beta {
                a = m;
            } else {
                b = m;
            }
            if b - a < 1e-13 {
                break;
            }
        }
        Ok((0.5 * (a + b)).exp())
    }

    /// Picard iteration from `beta = 1/B^2`.
    ///
    /// On field lines running into an X-point the map can stop contracting
    /// (`1/B^2` grows without bound along the line) and Picard settles into
    /// a cycle. Nodes still moving after `max_iter` sweeps are finished by
    /// a bracketed scalar root solve; `converged` then reports false.
    pub fn solve(&self, dt: f64, eps: f64, tol: f64, max_iter: usize) -> Result<BetaField> {
        if !(dt > 0.0 && eps > 0.0) {
            return Err(Error::Config(format!(
                "beta needs dt > 0 and eps > 0 (got {dt}, {eps})"
            )));
        }
        if !(tol > 0.0) || max_iter == 0 {
            return Err(Error::Config(format!(
                "beta needs tol > 0 and max_iter >= 1 (got {tol}, {max_iter})"
            )));
        }
        let ratio = dt / eps;
        let mut beta = self.inv_b2.clone();
        let mut node_change = vec![0.0; beta.len()];
        let mut change = f64::INFINITY;
        let mut iterations = 0;
        while iterations < max_iter {
            iterations += 1;
            let next: Vec<Result<f64>> = (0..beta.len())
                .into_par_iter()
                .map(|k| self.apply_p(k, ratio / beta[k]))
                .collect();
            change = 0.0;
            for (k, v) in next.into_iter().enumerate() {
                let v = v?;
                if !(v > 0.0 && v.is_finite()) {
                    let (i, j) = self.mesh.ij(k);
                    return Err(Error::Domain(format!("beta lost positivity at node ({i}, {j}): {v}")));
                }
                node_change[k] = (v - beta[k]).abs() / beta[k];
                change = change.max(node_change[k]);
                beta[k] = v;
            }
            log::debug!("beta sweep {iterations}: max relative change {change:e}");
            if change <= tol {
                break;
            }
        }
        let converged = change <= tol;
        if !converged {
            let stuck: Vec<usize> = (0..beta.len()).filter(|&k| node_change[k] > tol).collect();
            log::warn!(
                "beta Picard iteration left {} nodes above tol {tol:e} after {max_iter} sweeps; solving them directly",
                stuck.len()
            );
            let roots: Vec<Result<f64>> = stuck.par_iter().map(|&k| self.bracketed_root(k, ratio)).collect();
            for (&k, r) in stuck.iter().zip(roots) {
                beta[k] = r?;
            }
        }
        let field = ScalarField2D::from_values(self.mesh, beta, FieldRole::Beta)?;
        Ok(BetaField {
            field,
            iterations,
            change,
            converged,
            null: self.null.clone(),
        })
    }
}

fn range(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)))
}

pub fn solve_beta(
    model: &MagneticFieldModel,
    mesh: Mesh2D,
    dt: f64,
    eps: f64,
    tol: f64,
    max_iter: usize,
    settings: &LineSettings,
) -> Result<BetaField> {
    InverseB2Lines::build(model, mesh, settings)?.solve(dt, eps, tol, max_iter)
}
