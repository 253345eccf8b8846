//! Implicit BDF1 time advance.
//!
//! Three variants share one driver:
//! - arbitrary-B: `lambda` propagators with `tau = dt / (beta eps)`, solved
//!   for `dT = T^{n+1} - T^n` by matrix-free GMRES;
//! - tokamak ordering: arc-length propagators with `tau = dt / eps`;
//! - operator split: a slow perpendicular solve followed by one Lagrangian
//!   update. It is inconsistent and only kept to show that.
//!
//! Dirichlet nodes keep their values (identity rows). Nodes at magnetic
//! nulls use the isotropic update `dT - dt lap(dT) = dt (lap T^n + S)`.

mod gmres;

pub use gmres::{dot, gmres, norm2, GmresConfig, GmresStats, LinearOperator};

use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::beta::{self, BetaField};
use crate::error::{Error, Result};
use crate::field::{FieldRole, Mesh2D, PerpLaplacian, ScalarField2D, SplineBasis2D};
use crate::magnetics::{LineParam, MagneticFieldModel};
use crate::propagators::{Channel, LineOperator, LineSettings, NodeStatus, PointFn};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ArbitraryB,
    Tokamak,
    OperatorSplit,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ArbitraryB => "arbitrary-b",
            Scheme::Tokamak => "tokamak",
            Scheme::OperatorSplit => "operator-split",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "arbitrary-b" | "arbitrary" | "arb-b" => Ok(Scheme::ArbitraryB),
            "tokamak" | "tokamak-ordering" => Ok(Scheme::Tokamak),
            "operator-split" | "split" => Ok(Scheme::OperatorSplit),
            _ => Err(Error::Config(format!(
                "unknown scheme '{s}' (expected arbitrary-b, tokamak or operator-split)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Anisotropy ratio `chi_perp / chi_par`.
    pub eps: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub gmres: GmresConfig,
    pub lines: LineSettings,
    pub spline_order: usize,
    /// Maximum number of time steps.
    pub steps: usize,
    /// Stop once `max|dT| / dt` falls below this.
    pub steady_tol: f64,
    pub beta_tol: f64,
    pub beta_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps: 1e-2,
            dt: 1e-3,
            scheme: Scheme::ArbitraryB,
            gmres: GmresConfig::default(),
            lines: LineSettings::default(),
            spline_order: crate::field::DEFAULT_SPLINE_ORDER,
            steps: 150,
            steady_tol: 1e-10,
            beta_tol: beta::DEFAULT_TOL,
            beta_max_iter: beta::DEFAULT_MAX_ITER,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.gmres.tol > 0.0 && self.gmres.tol < 1.0) {
            return bad(format!("gmres tolerance must lie in (0, 1), got {}", self.gmres.tol));
        }
        if self.gmres.restart == 0 || self.gmres.max_iter == 0 {
            return bad("gmres restart and max_iter must be at least 1".into());
        }
        if !(self.beta_tol > 0.0) || self.beta_max_iter == 0 {
            return bad("beta tolerance must be positive and beta_max_iter at least 1".into());
        }
        if !(self.lines.step_fraction > 0.0 && self.lines.step_fraction <= 1.0) {
            return bad(format!(
                "trace step fraction must lie in (0, 1], got {}",
                self.lines.step_fraction
            ));
        }
        if !(self.lines.c_trunc >= 4.0) {
            return bad(format!(
                "kernel truncation must be at least 4, got {}",
                self.lines.c_trunc
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub gmres: GmresStats,
    /// `max |T^{n+1} - T^n|`.
    pub max_change: f64,
}

/// One scheme on one mesh and field, with everything that does not depend
/// on the temperature precomputed.
pub struct Stepper {
    mesh: Mesh2D,
    scheme: Scheme,
    dt: f64,
    basis: Arc<SplineBasis2D>,
    op: LineOperator,
    perp: PerpLaplacian,
    beta: Option<BetaField>,
    /// `1/beta` per node (arbitrary-B only).
    inv_beta: Vec<f64>,
    gmres: GmresConfig,
    /// Previous solution, used as the next initial guess.
    guess: Vec<f64>,
    /// Kernel channel of a static source sampled on the lines, replacing
    /// the interpolated source on line nodes.
    line_source: Option<Vec<f64>>,
}

impl Stepper {
    /// Builds the stepper, solving for `beta` when the scheme needs it.
    pub fn new(model: &MagneticFieldModel, mesh: Mesh2D, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let beta = match cfg.scheme {
            Scheme::Tokamak => None,
            _ => Some(beta::solve_beta(
                model,
                mesh,
                cfg.dt,
                cfg.eps,
                cfg.beta_tol,
                cfg.beta_max_iter,
                &cfg.lines,
            )?),
        };
        Self::with_beta(model, mesh, cfg, beta)
    }

    /// As [`Stepper::new`] with a precomputed `beta` (ignored by the tokamak
    /// scheme).
    pub fn with_beta(
        model: &MagneticFieldModel,
        mesh: Mesh2D,
        cfg: &SolverConfig,
        beta: Option<BetaField>,
    ) -> Result<Self> {
        Self::with_line_source(model, mesh, cfg, beta, None)
    }

    /// As [`Stepper::with_beta`]. When `source` is given, the line integrals
    /// of the source sample it exactly along each field line instead of
    /// interpolating the nodal source passed to [`Stepper::step`]; that
    /// nodal source is still used at nulls and by the operator split.
    pub fn with_line_source(
        model: &MagneticFieldModel,
        mesh: Mesh2D,
        cfg: &SolverConfig,
        beta: Option<BetaField>,
        source: Option<PointFn>,
    ) -> Result<Self> {
        cfg.validate()?;
        let basis = Arc::new(SplineBasis2D::new(mesh, cfg.spline_order)?);
        let perp = PerpLaplacian::new(mesh, model, cfg.lines.b_min);
        let (op, beta, inv_beta) = match cfg.scheme {
            Scheme::Tokamak => {
                let tau = cfg.dt / cfg.eps;
                let op = LineOperator::build_sampling(
                    model,
                    &basis,
                    LineParam::ArcLength,
                    &[Channel::G, Channel::P],
                    &cfg.lines,
                    &|_| tau,
                    source,
                )?;
                (op, None, Vec::new())
            }
            scheme => {
                let beta = beta.ok_or_else(|| Error::Config(format!("{} scheme needs beta", scheme.name())))?;
                if beta.field.mesh() != &mesh {
                    return Err(Error::Config("beta was solved on a different mesh".into()));
                }
                let b = beta.values();
                let ratio = cfg.dt / cfg.eps;
                let channels: &[Channel] = if scheme == Scheme::ArbitraryB {
                    &[Channel::G, Channel::P, Channel::PInvB2]
                } else {
                    &[Channel::G, Channel::P]
                };
                let op = LineOperator::build_sampling(
                    model,
                    &basis,
                    LineParam::Lambda,
                    channels,
                    &cfg.lines,
                    &|k| ratio / b[k],
                    source,
                )?;
                let inv_beta = b.iter().map(|v| 1.0 / v).collect();
                (op, Some(beta), inv_beta)
            }
        };
        log::info!(
            "{} operator: {} closed, {} open, {} null nodes, {:.0} entries per row",
            cfg.scheme.name(),
            op.count(NodeStatus::Closed),
            op.count(NodeStatus::Open),
            op.count(NodeStatus::Null),
            op.nnz() as f64 / (op.count(NodeStatus::Closed) + op.count(NodeStatus::Open)).max(1) as f64,
        );
        let kernel = if cfg.scheme == Scheme::ArbitraryB {
            Channel::PInvB2
        } else {
            Channel::P
        };
        let line_source = op.sampled(kernel);
        Ok(Stepper {
            mesh,
            scheme: cfg.scheme,
            dt: cfg.dt,
            basis,
            op,
            perp,
            beta,
            inv_beta,
            gmres: cfg.gmres,
            guess: vec![0.0; mesh.len()],
            line_source,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn beta(&self) -> Option<&BetaField> {
        self.beta.as_ref()
    }

    pub fn line_operator(&self) -> &LineOperator {
        &self.op
    }

    /// The left-hand side of the linear system solved each step.
    pub fn linear_operator(&self) -> SchemeOperator<'_> {
        SchemeOperator { stepper: self }
    }

    /// Advances `t` by one step with source `s` (taken at the new time).
    pub fn step(&mut self, t: &mut ScalarField2D, s: &ScalarField2D) -> Result<StepReport> {
        if t.mesh() != &self.mesh || s.mesh() != &self.mesh {
            return Err(Error::Config("temperature or source lives on a different mesh".into()));
        }
        match self.scheme {
            Scheme::OperatorSplit => self.step_split(t, s),
            _ => self.step_delta(t, s),
        }
    }

    fn status(&self, k: usize) -> NodeStatus {
        self.op.status()[k]
    }

    fn step_delta(&mut self, t: &mut ScalarField2D, s: &ScalarField2D) -> Result<StepReport> {
        let tn = t.values();
        let n = tn.len();
        let mut r = vec![0.0; n];
        self.perp.apply(tn, &mut r);
        let lines_r = if self.line_source.is_some() {
            Some(self.basis.coefficients(&r))
        } else {
            None
        };
        r.par_iter_mut().zip(s.values().par_iter()).for_each(|(r, s)| *r += s);
        let cr = lines_r.unwrap_or_else(|| self.basis.coefficients(&r));
        let ct = self.basis.coefficients(tn);
        let mut g = vec![0.0; n];
        let mut q = vec![0.0; n];
        let kernel = if self.scheme == Scheme::ArbitraryB {
            Channel::PInvB2
        } else {
            Channel::P
        };
        self.op.apply_coeffs(&[(Channel::G, &ct)], &mut g);
        self.op.apply_coeffs(&[(kernel, &cr)], &mut q);
        if let Some(ls) = &self.line_source {
            q.par_iter_mut().zip(ls.par_iter()).for_each(|(q, l)| *q += l);
        }
        let dt = self.dt;
        let b: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|k| match self.status(k) {
                NodeStatus::Boundary => 0.0,
                NodeStatus::Null => dt * r[k],
                _ => {
                    let scale = if self.scheme == Scheme::ArbitraryB {
                        dt * self.inv_beta[k]
                    } else {
                        dt
                    };
                    g[k] - tn[k] + scale * q[k]
                }
            })
            .collect();
        let mut x = std::mem::take(&mut self.guess);
        let stats = gmres(&self.linear_operator(), &b, &mut x, &self.gmres);
        let stats = match stats {
            Ok(s) => s,
            Err(e) => {
                self.guess = vec![0.0; n];
                return Err(e);
            }
        };
        let vals = t.values_mut();
        let mut max_change: f64 = 0.0;
        for (v, d) in vals.iter_mut().zip(&x) {
            *v += d;
            max_change = max_change.max(d.abs());
        }
        check_finite(vals)?;
        self.guess = x;
        Ok(StepReport {
            gmres: stats,
            max_change,
        })
    }

    fn step_split(&mut self, t: &mut ScalarField2D, s: &ScalarField2D) -> Result<StepReport> {
        let tn = t.values().to_vec();
        let n = tn.len();
        let dt = self.dt;
        // Slow stage: (I - dt lap_perp) T* = T^n + dt S, walls fixed.
        let rhs: Vec<f64> = (0..n)
            .map(|k| match self.status(k) {
                NodeStatus::Boundary => tn[k],
                _ => tn[k] + dt * s.values()[k],
            })
            .collect();
        let mut star = std::mem::take(&mut self.guess);
        if star.iter().all(|&v| v == 0.0) {
            star.copy_from_slice(&tn);
        }
        let stats = gmres(&SlowOperator { stepper: self }, &rhs, &mut star, &self.gmres)?;
        // Lagrangian stage.
        let diff: Vec<f64> = star.iter().zip(&tn).map(|(a, b)| a - b).collect();
        let ct = self.basis.coefficients(&tn);
        let cd = self.basis.coefficients(&diff);
        let mut out = star.clone();
        self.op.apply_coeffs(&[(Channel::G, &ct), (Channel::P, &cd)], &mut out);
        let vals = t.values_mut();
        let mut max_change: f64 = 0.0;
        for (k, v) in vals.iter_mut().enumerate() {
            let new = if self.status(k) == NodeStatus::Boundary {
                tn[k]
            } else {
                out[k]
            };
            max_change = max_change.max((new - *v).abs());
            *v = new;
        }
        check_finite(vals)?;
        self.guess = star;
        Ok(StepReport {
            gmres: stats,
            max_change,
        })
    }

    /// Steps until `steps` are done or `max|dT|/dt < steady_tol`, calling
    /// `observe(step, &T, &report)` after every step.
    pub fn run(
        &mut self,
        t: &mut ScalarField2D,
        s: &ScalarField2D,
        steps: usize,
        steady_tol: f64,
        mut observe: impl FnMut(usize, &ScalarField2D, &StepReport) -> Result<()>,
    ) -> Result<usize> {
        for n in 1..=steps {
            let rep = self.step(t, s)?;
            observe(n, t, &rep)?;
            if rep.max_change / self.dt < steady_tol {
                return Ok(n);
            }
        }
        Ok(steps)
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(k) => Err(Error::Domain(format!("non-finite temperature at node {k}"))),
        None => Ok(()),
    }
}

/// Left-hand side of the `dT` system of the arbitrary-B and tokamak schemes
/// (for the operator split, the slow perpendicular stage).
pub struct SchemeOperator<'a> {
    stepper: &'a Stepper,
}

impl LinearOperator for SchemeOperator<'_> {
    fn len(&self) -> usize {
        self.stepper.mesh.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let st = self.stepper;
        if st.scheme == Scheme::OperatorSplit {
            SlowOperator { stepper: st }.apply(x, y);
            return;
        }
        let n = x.len();
        let dt = st.dt;
        let mut lp = vec![0.0; n];
        st.perp.apply(x, &mut lp);
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        match st.scheme {
            Scheme::ArbitraryB => {
                // dT - P(dT) + (1/beta) P((dT - dt lap_perp dT) / B^2)
                let w: Vec<f64> = x.iter().zip(&lp).map(|(a, l)| a - dt * l).collect();
                let cx = st.basis.coefficients(x);
                let cw = st.basis.coefficients(&w);
                st.op.apply_coeffs(&[(Channel::P, &cx)], &mut p);
                st.op.apply_coeffs(&[(Channel::PInvB2, &cw)], &mut q);
                y.par_iter_mut().enumerate().for_each(|(k, y)| {
                    *y = match st.status(k) {
                        NodeStatus::Boundary => x[k],
                        NodeStatus::Null => w[k],
                        _ => x[k] - p[k] + st.inv_beta[k] * q[k],
                    }
                });
            }
            _ => {
                // dT - dt P(lap_perp dT)
                let cl = st.basis.coefficients(&lp);
                st.op.apply_coeffs(&[(Channel::P, &cl)], &mut p);
                y.par_iter_mut().enumerate().for_each(|(k, y)| {
                    *y = match st.status(k) {
                        NodeStatus::Boundary => x[k],
                        NodeStatus::Null => x[k] - dt * lp[k],
                        _ => x[k] - dt * p[k],
                    }
                });
            }
        }
    }
}

struct SlowOperator<'a> {
    stepper: &'a Stepper,
}

impl LinearOperator for SlowOperator<'_> {
    fn len(&self) -> usize {
        self.stepper.mesh.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let st = self.stepper;
        st.perp.apply(x, y);
        y.par_iter_mut().enumerate().for_each(|(k, v)| {
            *v = if st.status(k) == NodeStatus::Boundary {
                x[k]
            } else {
                x[k] - st.dt * *v
            };
        });
    }
}

/// `T^n` with the values of a steady state on the Dirichlet walls.
pub fn with_boundary_of(t: &ScalarField2D, reference: &ScalarField2D) -> Result<ScalarField2D> {
    let mesh = *t.mesh();
    if reference.mesh() != &mesh {
        return Err(Error::Config("boundary reference lives on a different mesh".into()));
    }
    let mut out = t.clone();
    let v = out.values_mut();
    for k in 0..mesh.len() {
        if mesh.is_boundary(mesh.ij(k).0) {
            v[k] = reference.values()[k];
        }
    }
    ScalarField2D::from_values(mesh, out.into_values(), FieldRole::Temperature)
}
