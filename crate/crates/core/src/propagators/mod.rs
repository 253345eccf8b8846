//! Field-level kernel propagators `G`, `P` along field lines and
//! field-line averages.
//!
//! Every interior node gets one sparse row over the spline coefficients of
//! the operand: the line samples through the node are weighted by the kernel
//! (or averaging measure) and each sample's spline stencil is accumulated
//! into the row. Applying an operator to a field is then one coefficient
//! transform plus a sparse dot product per node, which is what makes
//! repeated applications inside GMRES affordable.
//!
//! On closed lines the kernel acts on the periodic trigonometric interpolant
//! of the samples (exact symbols `exp(-k^2 tau)` and
//! `(1 - exp(-k^2 tau)) / (k^2 tau)`); on open segments the moment
//! quadrature of [`crate::kernels`] is used.

mod lines;

pub use lines::{line_through, open_line, LineSamples, LineSettings, OpenLine};

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Result;
use crate::field::{FieldRole, Mesh2D, ScalarField2D, SplineBasis2D};
use crate::kernels::{build_quadrature_with, periodic_weights, KernelKind};
use crate::magnetics::{LineParam, MagneticFieldModel};

/// One weighting of the line samples through a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// `G` kernel.
    G,
    /// `U` kernel.
    P,
    /// `U` kernel applied to `A / B^2`.
    PInvB2,
    /// Uniform in `lambda` (weight `B ds`).
    AvgLambda,
    /// Uniform in arc length.
    AvgArc,
    /// Weight `ds / B`.
    AvgFieldLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Boundary,
    Null,
    Closed,
    Open,
}

/// Sparse rows (one per node) over spline coefficients, with one value
/// array per channel sharing the column pattern.
#[derive(Debug, Clone)]
pub struct LineOperator {
    mesh: Mesh2D,
    basis: Arc<SplineBasis2D>,
    param: LineParam,
    channels: Vec<Channel>,
    status: Vec<NodeStatus>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    /// `vals[e * channels.len() + c]`
    vals: Vec<f64>,
    /// Channel sums of a function sampled exactly on the lines,
    /// `[node * channels.len() + c]`.
    sampled: Option<Vec<f64>>,
}

/// A function evaluated at line sample points.
pub type PointFn<'a> = &'a (dyn Fn(f64, f64) -> f64 + Sync);

struct Scratch {
    acc: Vec<f64>,
    touched: Vec<u32>,
    mark: Vec<bool>,
}

/// Per-sample weights of one channel on a traced line (kernel channels
/// are centred on the launch sample). Weights sum to one.
pub fn line_weights(
    line: &LineSamples,
    param: LineParam,
    channel: Channel,
    tau: f64,
    c_trunc: f64,
) -> Result<Vec<f64>> {
    Ok(sample_weights(line, param, &[channel], tau, c_trunc)?
        .pop()
        .expect("one channel"))
}

/// Per-sample weights of every requested channel for one node's line.
fn sample_weights(
    line: &LineSamples,
    param: LineParam,
    channels: &[Channel],
    tau: f64,
    c_trunc: f64,
) -> Result<Vec<Vec<f64>>> {
    let bmag = line.bmag();
    // Measure of each sample relative to d(lambda).
    let lam_measure = |k: usize| match param {
        LineParam::Lambda => 1.0,
        LineParam::ArcLength => bmag[k],
    };
    let normalize = |mut w: Vec<f64>| {
        let s = crate::field::neumaier_sum(w.iter().copied());
        w.iter_mut().for_each(|v| *v /= s);
        w
    };
    match line {
        LineSamples::Closed(o) => {
            let n = o.len();
            let mut out = Vec::with_capacity(channels.len());
            let mut u_cache: Option<Vec<f64>> = None;
            for &c in channels {
                let w = match c {
                    Channel::G => periodic_weights(n, o.period, tau, KernelKind::G),
                    Channel::P | Channel::PInvB2 => {
                        let u = u_cache.get_or_insert_with(|| periodic_weights(n, o.period, tau, KernelKind::U));
                        if c == Channel::P {
                            u.clone()
                        } else {
                            u.iter().zip(bmag).map(|(w, b)| w / (b * b)).collect()
                        }
                    }
                    Channel::AvgLambda => normalize((0..n).map(lam_measure).collect()),
                    Channel::AvgArc => normalize((0..n).map(|k| lam_measure(k) / bmag[k]).collect()),
                    Channel::AvgFieldLine => normalize((0..n).map(|k| lam_measure(k) / (bmag[k] * bmag[k])).collect()),
                };
                out.push(w);
            }
            Ok(out)
        }
        LineSamples::Open(l) => {
            let n = l.t.len();
            let half = l.half_span();
            let c_eff = c_trunc.min(half / tau.sqrt());
            // Kernel channels use the node range picked by the quadrature,
            // averages use the whole segment; pad everything to full length.
            let mut out = Vec::with_capacity(channels.len());
            for &c in channels {
                let mut w = vec![0.0; n];
                match c {
                    Channel::G | Channel::P | Channel::PInvB2 => {
                        let kind = if c == Channel::G { KernelKind::G } else { KernelKind::U };
                        let q = build_quadrature_with(&l.t, tau, kind, c_eff)?;
                        for (k, &qw) in q.weights.iter().enumerate() {
                            let i = q.first + k;
                            w[i] = if c == Channel::PInvB2 {
                                qw / (bmag[i] * bmag[i])
                            } else {
                                qw
                            };
                        }
                    }
                    _ => {
                        for k in 0..n {
                            let dt_l = if k > 0 { l.t[k] - l.t[k - 1] } else { 0.0 };
                            let dt_r = if k + 1 < n { l.t[k + 1] - l.t[k] } else { 0.0 };
                            let m = lam_measure(k);
                            let f = match c {
                                Channel::AvgLambda => 1.0,
                                Channel::AvgArc => 1.0 / bmag[k],
                                _ => 1.0 / (bmag[k] * bmag[k]),
                            };
                            w[k] = 0.5 * (dt_l + dt_r) * m * f;
                        }
                        w = normalize(w);
                    }
                }
                out.push(w);
            }
            Ok(out)
        }
    }
}

impl LineOperator {
    /// Builds the rows for every interior node. `tau(node)` gives the kernel
    /// time argument in the units of `param`; it is not called for
    /// average-only operators.
    pub fn build(
        model: &MagneticFieldModel,
        basis: &Arc<SplineBasis2D>,
        param: LineParam,
        channels: &[Channel],
        settings: &LineSettings,
        tau: &(dyn Fn(usize) -> f64 + Sync),
    ) -> Result<Self> {
        Self::build_sampling(model, basis, param, channels, settings, tau, None)
    }

    /// As [`LineOperator::build`], also weighting `f` evaluated at the line
    /// samples themselves rather than through its interpolant. Used for
    /// static sources that are too rough to interpolate (near nulls).
    pub fn build_sampling(
        model: &MagneticFieldModel,
        basis: &Arc<SplineBasis2D>,
        param: LineParam,
        channels: &[Channel],
        settings: &LineSettings,
        tau: &(dyn Fn(usize) -> f64 + Sync),
        f: Option<PointFn>,
    ) -> Result<Self> {
        let mesh = *basis.mesh();
        let h = mesh.min_spacing();
        let n_ch = channels.len();
        let needs_tau = channels
            .iter()
            .any(|c| matches!(c, Channel::G | Channel::P | Channel::PInvB2));
        type Row = (NodeStatus, Vec<u32>, Vec<f64>, Vec<f64>);
        let rows: Vec<Result<Row>> = (0..mesh.len())
            .into_par_iter()
            .map_init(
                || Scratch {
                    acc: vec![0.0; mesh.len() * n_ch],
                    touched: Vec::new(),
                    mark: vec![false; mesh.len()],
                },
                |scr, node| {
                    let (i, j) = mesh.ij(node);
                    if mesh.is_boundary(i) {
                        return Ok((NodeStatus::Boundary, Vec::new(), Vec::new(), vec![0.0; n_ch]));
                    }
                    let (x0, y0) = (mesh.x(i), mesh.y(j));
                    let t = if needs_tau { tau(node) } else { 1.0 };
                    let open_half = if needs_tau {
                        settings.c_trunc * t.sqrt()
                    } else {
                        f64::INFINITY
                    };
                    let Some(line) = line_through(model, param, x0, y0, h, settings, open_half)? else {
                        return Ok((NodeStatus::Null, Vec::new(), Vec::new(), vec![0.0; n_ch]));
                    };
                    let status = if line.is_closed() {
                        NodeStatus::Closed
                    } else {
                        NodeStatus::Open
                    };
                    let weights = sample_weights(&line, param, channels, t, settings.c_trunc)?;
                    let (xs, ys) = (line.x(), line.y());
                    let ny = mesh.ny;
                    let mut direct = vec![0.0; n_ch];
                    for k in 0..xs.len() {
                        if weights.iter().all(|w| w[k] == 0.0) {
                            continue;
                        }
                        if let Some(f) = f {
                            let v = f(xs[k], ys[k]);
                            for (d, w) in direct.iter_mut().zip(&weights) {
                                *d += w[k] * v;
                            }
                        }
                        let st = basis.stencil(xs[k], ys[k])?;
                        for a in 0..st.width {
                            let base = (st.ix0 + a) * ny;
                            for b in 0..st.width {
                                let col = base + st.iy[b];
                                if !scr.mark[col] {
                                    scr.mark[col] = true;
                                    scr.touched.push(col as u32);
                                }
                                let coef = st.wx[a] * st.wy[b];
                                for (c, w) in weights.iter().enumerate() {
                                    scr.acc[col * n_ch + c] += w[k] * coef;
                                }
                            }
                        }
                    }
                    scr.touched.sort_unstable();
                    let cols = scr.touched.clone();
                    let mut vals = Vec::with_capacity(cols.len() * n_ch);
                    for &col in &cols {
                        let col = col as usize;
                        for c in 0..n_ch {
                            vals.push(scr.acc[col * n_ch + c]);
                            scr.acc[col * n_ch + c] = 0.0;
                        }
                        scr.mark[col] = false;
                    }
                    scr.touched.clear();
                    Ok((status, cols, vals, direct))
                },
            )
            .collect();
        let mut op = LineOperator {
            mesh,
            basis: Arc::clone(basis),
            param,
            channels: channels.to_vec(),
            status: Vec::with_capacity(mesh.len()),
            row_ptr: Vec::with_capacity(mesh.len() + 1),
            cols: Vec::new(),
            vals: Vec::new(),
            sampled: f.map(|_| Vec::with_capacity(mesh.len() * n_ch)),
        };
        let nnz: usize = rows.iter().map(|r| r.as_ref().map_or(0, |r| r.1.len())).sum();
        op.cols.reserve_exact(nnz);
        op.vals.reserve_exact(nnz * n_ch);
        op.row_ptr.push(0);
        for r in rows {
            let (status, cols, vals, direct) = r?;
            if let Some(sm) = op.sampled.as_mut() {
                sm.extend_from_slice(&direct);
            }
            op.status.push(status);
            op.cols.extend_from_slice(&cols);
            op.vals.extend_from_slice(&vals);
            op.row_ptr.push(op.cols.len());
        }
        Ok(op)
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn basis(&self) -> &Arc<SplineBasis2D> {
        &self.basis
    }

    pub fn param(&self) -> LineParam {
        self.param
    }

    pub fn status(&self) -> &[NodeStatus] {
        &self.status
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn count(&self, s: NodeStatus) -> usize {
        self.status.iter().filter(|&&v| v == s).count()
    }

    fn channel_index(&self, c: Channel) -> usize {
        self.channels
            .iter()
            .position(|&v| v == c)
            .unwrap_or_else(|| panic!("operator was built without channel {c:?}"))
    }

    /// `out[node] = sum_t row_t(node) . coeffs_t` on line nodes; other
    /// nodes are left untouched.
    pub fn apply_coeffs(&self, terms: &[(Channel, &[f64])], out: &mut [f64]) {
        let n_ch = self.channels.len();
        let idx: Vec<(usize, &[f64])> = terms.iter().map(|(c, v)| (self.channel_index(*c), *v)).collect();
        out.par_iter_mut().enumerate().for_each(|(node, o)| {
            let (s, e) = (self.row_ptr[node], self.row_ptr[node + 1]);
            if s == e {
                return;
            }
            let mut total = 0.0;
            for &(c, coeffs) in &idx {
                let mut acc = 0.0;
                for k in s..e {
                    acc += self.vals[k * n_ch + c] * coeffs[self.cols[k] as usize];
                }
                total += acc;
            }
            *o = total;
        });
    }

    /// Per-node channel sums of the function given to
    /// [`LineOperator::build_sampling`]; zero on nodes without a line.
    pub fn sampled(&self, channel: Channel) -> Option<Vec<f64>> {
        let c = self.channel_index(channel);
        let n_ch = self.channels.len();
        self.sampled
            .as_ref()
            .map(|v| v.iter().skip(c).step_by(n_ch).copied().collect())
    }

    /// One channel applied to nodal values; nodes without a line (Dirichlet
    /// boundary, nulls) return their input.
    pub fn apply(&self, channel: Channel, input: &[f64]) -> Vec<f64> {
        let coeffs = self.basis.coefficients(input);
        let mut out = input.to_vec();
        self.apply_coeffs(&[(channel, &coeffs)], &mut out);
        out
    }

    pub fn apply_field(&self, channel: Channel, a: &ScalarField2D) -> ScalarField2D {
        let v = self.apply(channel, a.values());
        ScalarField2D::from_values(self.mesh, v, FieldRole::Generic).expect("finite propagator output")
    }
}

/// Kernel propagators `G` and `P` on one mesh and one parameterization.
#[derive(Debug, Clone)]
pub struct PropagatorContext {
    op: LineOperator,
}

impl PropagatorContext {
    /// `lambda` propagators with per-node `tau(x)` (e.g. `dt / (beta eps)`).
    pub fn lambda(
        model: &MagneticFieldModel,
        basis: &Arc<SplineBasis2D>,
        tau: &[f64],
        settings: &LineSettings,
    ) -> Result<Self> {
        let op = LineOperator::build(
            model,
            basis,
            LineParam::Lambda,
            &[Channel::G, Channel::P],
            settings,
            &|k| tau[k],
        )?;
        Ok(Self { op })
    }

    /// Arc-length propagators with a uniform `tau`.
    pub fn arclength(
        model: &MagneticFieldModel,
        basis: &Arc<SplineBasis2D>,
        tau: f64,
        settings: &LineSettings,
    ) -> Result<Self> {
        let op = LineOperator::build(
            model,
            basis,
            LineParam::ArcLength,
            &[Channel::G, Channel::P],
            settings,
            &|_| tau,
        )?;
        Ok(Self { op })
    }

    pub fn operator(&self) -> &LineOperator {
        &self.op
    }

    pub fn apply_g(&self, a: &ScalarField2D) -> ScalarField2D {
        self.op.apply_field(Channel::G, a)
    }

    pub fn apply_p(&self, a: &ScalarField2D) -> ScalarField2D {
        self.op.apply_field(Channel::P, a)
    }
}

/// The three field-line averages: uniform in `lambda`, uniform in arc
/// length, and with weight `ds / B`.
#[derive(Debug, Clone)]
pub struct LineAverages {
    op: LineOperator,
}

impl LineAverages {
    pub fn build(model: &MagneticFieldModel, basis: &Arc<SplineBasis2D>, settings: &LineSettings) -> Result<Self> {
        let op = LineOperator::build(
            model,
            basis,
            LineParam::Lambda,
            &[Channel::AvgLambda, Channel::AvgArc, Channel::AvgFieldLine],
            settings,
            &|_| 1.0,
        )?;
        Ok(Self { op })
    }

    pub fn operator(&self) -> &LineOperator {
        &self.op
    }

    pub fn lambda_average(&self, a: &ScalarField2D) -> ScalarField2D {
        self.op.apply_field(Channel::AvgLambda, a)
    }

    pub fn s_average(&self, a: &ScalarField2D) -> ScalarField2D {
        self.op.apply_field(Channel::AvgArc, a)
    }

    /// Average with weight `ds / B`.
    pub fn field_line_average(&self, a: &ScalarField2D) -> ScalarField2D {
        self.op.apply_field(Channel::AvgFieldLine, a)
    }
}

pub fn apply_g_lambda(a: &ScalarField2D, ctx: &PropagatorContext) -> ScalarField2D {
    ctx.apply_g(a)
}

pub fn apply_p_lambda(a: &ScalarField2D, ctx: &PropagatorContext) -> ScalarField2D {
    ctx.apply_p(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn setup(delta: f64, b0: f64, n: usize) -> (MagneticFieldModel, Mesh2D, Arc<SplineBasis2D>) {
        let model = MagneticFieldModel::new(delta, b0);
        let mesh = Mesh2D::square(n).unwrap();
        let basis = Arc::new(SplineBasis2D::new(mesh, 5).unwrap());
        (model, mesh, basis)
    }

    fn interior_max(mesh: &Mesh2D, a: &[f64], b: &[f64]) -> f64 {
        (0..mesh.len())
            .filter(|&k| !mesh.is_boundary(mesh.ij(k).0))
            .map(|k| (a[k] - b[k]).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn constants_are_fixed_points() {
        let (model, mesh, basis) = setup(0.1, 1.0, 16);
        let s = LineSettings::default();
        let tau = vec![0.05; mesh.len()];
        let ctx = PropagatorContext::lambda(&model, &basis, &tau, &s).unwrap();
        let avg = LineAverages::build(&model, &basis, &s).unwrap();
        let c = ScalarField2D::from_fn(mesh, FieldRole::Generic, |_, _| 3.25);
        for out in [
            ctx.apply_g(&c),
            ctx.apply_p(&c),
            avg.lambda_average(&c),
            avg.s_average(&c),
            avg.field_line_average(&c),
        ] {
            {
                let e = interior_max(&mesh, out.values(), c.values());
                assert!(e < 1e-12, "{e:e}");
            }
        }
    }

    #[test]
    fn flux_functions_are_in_the_null_space() {
        for (delta, b0) in [(0.1, 0.0), (0.5, 1.0)] {
            let (model, mesh, basis) = setup(delta, b0, 32);
            let tau = vec![0.02; mesh.len()];
            let ctx = PropagatorContext::lambda(&model, &basis, &tau, &LineSettings::default()).unwrap();
            let t = ScalarField2D::from_fn(mesh, FieldRole::Temperature, |x, y| {
                let p = model.psi(x, y);
                p * p - 0.5 * p
            });
            let g = ctx.apply_g(&t);
            let p = ctx.apply_p(&t);
            {
                let e = interior_max(&mesh, g.values(), t.values());
                assert!(e < 1e-5, "G, delta {delta} b0 {b0}: {e:e}");
            }
            {
                let e = interior_max(&mesh, p.values(), t.values());
                assert!(e < 1e-5, "P, delta {delta} b0 {b0}: {e:e}");
            }
        }
    }

    #[test]
    fn straight_lines_decay_like_fourier_modes() {
        let (model, mesh, basis) = setup(0.0, 0.0, 32);
        let tau = 0.01;
        let ctx = PropagatorContext::lambda(&model, &basis, &vec![tau; mesh.len()], &LineSettings::default()).unwrap();
        let t = ScalarField2D::from_fn(mesh, FieldRole::Temperature, |_, y| (2.0 * PI * y).sin());
        let x = 4.0 * PI * PI * tau;
        let g = ctx.apply_g(&t);
        let p = ctx.apply_p(&t);
        let g_ref: Vec<f64> = t.values().iter().map(|v| v * (-x).exp()).collect();
        let p_ref: Vec<f64> = t.values().iter().map(|v| v * (-(-x).exp_m1()) / x).collect();
        {
            let e = interior_max(&mesh, g.values(), &g_ref);
            assert!(e < 1e-6, "{e:e}");
        }
        {
            let e = interior_max(&mesh, p.values(), &p_ref);
            assert!(e < 1e-6, "{e:e}");
        }
    }

    #[test]
    fn lambda_and_arclength_agree_for_constant_field_strength() {
        let (model, mesh, basis) = setup(0.0, 1.0, 16);
        let b2 = model.b_squared(0.3, 0.3);
        let s = LineSettings::default();
        let tau = 0.03;
        let lam = PropagatorContext::lambda(&model, &basis, &vec![tau; mesh.len()], &s).unwrap();
        let arc = PropagatorContext::arclength(&model, &basis, tau / b2, &s).unwrap();
        let t = ScalarField2D::from_fn(mesh, FieldRole::Temperature, |x, y| (2.0 * PI * y).cos() + x * x);
        {
            let e = interior_max(&mesh, lam.apply_g(&t).values(), arc.apply_g(&t).values());
            assert!(e < 1e-10, "{e:e}");
        }
        {
            let e = interior_max(&mesh, lam.apply_p(&t).values(), arc.apply_p(&t).values());
            assert!(e < 1e-10, "{e:e}");
        }
    }

    #[test]
    fn large_tau_projects_onto_the_lambda_average() {
        let (model, mesh, basis) = setup(0.1, 1.0, 16);
        let s = LineSettings::default();
        let ctx = PropagatorContext::lambda(&model, &basis, &vec![1e6; mesh.len()], &s).unwrap();
        let avg = LineAverages::build(&model, &basis, &s).unwrap();
        let t = ScalarField2D::from_fn(mesh, FieldRole::Temperature, |x, y| (2.0 * PI * y).sin() * x + x);
        let g = ctx.apply_g(&t);
        let a = avg.lambda_average(&t);
        {
            let e = interior_max(&mesh, g.values(), a.values());
            assert!(e < 1e-4, "{e:e}");
        }
    }

    #[test]
    fn p_preserves_the_lambda_average() {
        let (model, mesh, basis) = setup(0.1, 1.0, 32);
        let s = LineSettings::default();
        let ctx = PropagatorContext::lambda(&model, &basis, &vec![0.02; mesh.len()], &s).unwrap();
        let avg = LineAverages::build(&model, &basis, &s).unwrap();
        let t = ScalarField2D::from_fn(mesh, FieldRole::Temperature, |x, y| {
            (2.0 * PI * y).sin() * (PI * x).sin()
        });
        let lhs = avg.lambda_average(&ctx.apply_p(&t));
        let rhs = avg.lambda_average(&t);
        {
            let e = interior_max(&mesh, lhs.values(), rhs.values());
            assert!(e < 1e-5, "{e:e}");
        }
    }

    #[test]
    fn weighted_average_identity_on_line_samples() {
        // <A/B^2>_lambda <B^2> = <A> with <.> the ds/B average, evaluated
        // on exact samples so only the weights are tested.
        let model = MagneticFieldModel::new(0.1, 0.0);
        let s = LineSettings::default();
        let a = |x: f64, y: f64| 1.0 + x * (2.0 * PI * y).cos();
        for (x0, y0) in [(0.3, 0.1), (0.55, 0.7), (0.9, 0.45)] {
            let line = line_through(&model, LineParam::Lambda, x0, y0, 1.0 / 32.0, &s, f64::INFINITY)
                .unwrap()
                .unwrap();
            let avg = |c: Channel, f: &dyn Fn(f64, f64) -> f64| {
                let w = line_weights(&line, LineParam::Lambda, c, 1.0, s.c_trunc).unwrap();
                crate::field::neumaier_sum(line.x().iter().zip(line.y()).zip(&w).map(|((&x, &y), w)| w * f(x, y)))
            };
            let lhs = avg(Channel::AvgLambda, &|x, y| a(x, y) / model.b_squared(x, y))
                * avg(Channel::AvgFieldLine, &|x, y| model.b_squared(x, y));
            let rhs = avg(Channel::AvgFieldLine, &a);
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn weighted_average_identity_on_the_mesh() {
        let (model, mesh, basis) = setup(0.1, 0.0, 64);
        let avg = LineAverages::build(&model, &basis, &LineSettings::default()).unwrap();
        let a = |x: f64, y: f64| 1.0 + x * (2.0 * PI * y).cos();
        let a_over = ScalarField2D::from_fn(mesh, FieldRole::Generic, |x, y| a(x, y) / model.b_squared(x, y));
        let b2 = ScalarField2D::from_fn(mesh, FieldRole::Generic, |x, y| model.b_squared(x, y));
        let af = ScalarField2D::from_fn(mesh, FieldRole::Generic, a);
        let lhs = avg.lambda_average(&a_over);
        let fl = avg.field_line_average(&b2);
        let rhs = avg.field_line_average(&af);
        let prod: Vec<f64> = lhs.values().iter().zip(fl.values()).map(|(p, q)| p * q).collect();
        let e = interior_max(&mesh, &prod, rhs.values());
        assert!(e < 1e-5, "{e:e}");
    }

    #[test]
    fn vanishing_tau_is_the_identity() {
        let (model, mesh, basis) = setup(0.5, 0.0, 16);
        let ctx =
            PropagatorContext::lambda(&model, &basis, &vec![1e-14; mesh.len()], &LineSettings::default()).unwrap();
        let t = ScalarField2D::from_fn(mesh, FieldRole::Temperature, |x, y| (2.0 * PI * y).sin() + x);
        {
            let e = interior_max(&mesh, ctx.apply_g(&t).values(), t.values());
            assert!(e < 1e-8, "{e:e}");
        }
        {
            let e = interior_max(&mesh, ctx.apply_p(&t).values(), t.values());
            assert!(e < 1e-8, "{e:e}");
        }
    }
}
