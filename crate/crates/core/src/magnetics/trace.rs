use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{MagneticFieldModel, DEFAULT_B_MIN};
use crate::error::{Error, Result};

/// Slack allowed on the confinement check `0 <= x <= 1`.
const X_SLACK: f64 = 1e-9;

/// Field-line parameter: `lambda` (`d lambda = |B| ds`) or arc length `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineParam {
    Lambda,
    ArcLength,
}

impl LineParam {
    /// In-plane velocity `d(x, y)/dparam`.
    #[inline]
    pub fn velocity(self, model: &MagneticFieldModel, x: f64, y: f64) -> (f64, f64) {
        let b = model.eval_b(x, y);
        let scale = match self {
            LineParam::Lambda => 1.0 / b.b_squared(),
            LineParam::ArcLength => 1.0 / b.bmag,
        };
        (b.bx * scale, b.by * scale)
    }

    pub fn name(self) -> &'static str {
        match self {
            LineParam::Lambda => "lambda",
            LineParam::ArcLength => "s",
        }
    }
}

/// One classical RK4 step. Returns the new point and the largest stage speed.
#[inline]
pub fn rk4_step(model: &MagneticFieldModel, param: LineParam, x: f64, y: f64, dt: f64) -> (f64, f64, f64) {
    let (nx, ny, speed, _) = rk4_step_turn(model, param, x, y, dt);
    (nx, ny, speed)
}

/// As [`rk4_step`], also returning the smallest cosine between the first
/// stage direction and the later ones (close to 1 unless the step runs
/// into a null where the field direction flips).
#[inline]
pub fn rk4_step_turn(model: &MagneticFieldModel, param: LineParam, x: f64, y: f64, dt: f64) -> (f64, f64, f64, f64) {
    let k1 = param.velocity(model, x, y);
    let k2 = param.velocity(model, x + 0.5 * dt * k1.0, y + 0.5 * dt * k1.1);
    let k3 = param.velocity(model, x + 0.5 * dt * k2.0, y + 0.5 * dt * k2.1);
    let k4 = param.velocity(model, x + dt * k3.0, y + dt * k3.1);
    let nx = x + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
    let ny = y + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    let n1 = k1.0.hypot(k1.1);
    let mut speed = n1;
    let mut turn: f64 = 1.0;
    for k in [k2, k3, k4] {
        let nk = k.0.hypot(k.1);
        speed = speed.max(nk);
        turn = turn.min((k1.0 * k.0 + k1.1 * k.1) / (n1 * nk));
    }
    (nx, ny, speed, turn)
}

/// Uniformly sampled field line through a launch point, symmetric about it.
/// `y` is kept unwrapped.
#[derive(Debug, Clone)]
pub struct FieldLineTrace {
    pub param: LineParam,
    pub launch: (f64, f64),
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub bmag: Vec<f64>,
    center: usize,
}

impl FieldLineTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Index of the launch point.
    pub fn center(&self) -> usize {
        self.center
    }

    pub fn step(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    pub fn half_span(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// Largest in-plane distance between consecutive samples.
    pub fn max_displacement(&self) -> f64 {
        (1..self.len())
            .map(|k| (self.x[k] - self.x[k - 1]).hypot(self.y[k] - self.y[k - 1]))
            .fold(0.0, f64::max)
    }
}

fn check_point(x: f64, y: f64) -> Result<()> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::NullPoint { x, y, bmag: 0.0 });
    }
    if !(-X_SLACK..=1.0 + X_SLACK).contains(&x) {
        return Err(Error::Confinement { x, y });
    }
    Ok(())
}

/// Bidirectional fixed-step RK4 trace over `[-span, span]`; the step is
/// `span / ceil(span / h)` so that both ends are hit exactly.
pub fn trace(
    model: &MagneticFieldModel,
    param: LineParam,
    x0: f64,
    y0: f64,
    span: f64,
    h: f64,
) -> Result<FieldLineTrace> {
    if !(span > 0.0 && h > 0.0) {
        return Err(Error::Config(format!(
            "trace needs span > 0 and h > 0 (got {span}, {h})"
        )));
    }
    let b = model.eval_b(x0, y0);
    if b.bmag <= DEFAULT_B_MIN {
        return Err(Error::NullPoint {
            x: x0,
            y: y0,
            bmag: b.bmag,
        });
    }
    let n = ((span / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let dt = span / n as f64;
    let mut fwd = Vec::with_capacity(n);
    let mut bwd = Vec::with_capacity(n);
    for (dir, out) in [(1.0, &mut fwd), (-1.0, &mut bwd)] {
        let (mut x, mut y) = (x0, y0);
        for _ in 0..n {
            let (nx, ny, _) = rk4_step(model, param, x, y, dir * dt);
            check_point(nx, ny)?;
            x = nx;
            y = ny;
            out.push((x, y));
        }
    }
    let len = 2 * n + 1;
    let mut tr = FieldLineTrace {
        param,
        launch: (x0, y0),
        t: Vec::with_capacity(len),
        x: Vec::with_capacity(len),
        y: Vec::with_capacity(len),
        bmag: Vec::with_capacity(len),
        center: n,
    };
    let points = bwd
        .iter()
        .rev()
        .copied()
        .chain(std::iter::once((x0, y0)))
        .chain(fwd.iter().copied());
    for (k, (x, y)) in points.enumerate() {
        tr.t.push((k as f64 - n as f64) * dt);
        tr.x.push(x);
        tr.y.push(y);
        tr.bmag.push(model.eval_b(x, y).bmag);
    }
    tr.t[n] = 0.0;
    Ok(tr)
}

/// Trace in `lambda`: `d(x, y)/d lambda = (Bx, By) / B^2`.
pub fn trace_lambda(model: &MagneticFieldModel, x0: f64, y0: f64, span: f64, h: f64) -> Result<FieldLineTrace> {
    trace(model, LineParam::Lambda, x0, y0, span, h)
}

/// Trace in arc length: `d(x, y)/ds = (Bx, By) / |B|`.
pub fn trace_arclength(model: &MagneticFieldModel, x0: f64, y0: f64, span: f64, h: f64) -> Result<FieldLineTrace> {
    trace(model, LineParam::ArcLength, x0, y0, span, h)
}

/// As [`trace`], halving the step until no step moves further than
/// `max_disp` in the plane.
pub fn trace_with_displacement_bound(
    model: &MagneticFieldModel,
    param: LineParam,
    x0: f64,
    y0: f64,
    span: f64,
    h: f64,
    max_disp: f64,
) -> Result<FieldLineTrace> {
    let mut h = h;
    loop {
        let tr = trace(model, param, x0, y0, span, h)?;
        let d = tr.max_displacement();
        if d <= max_disp || tr.len() > 1 << 22 {
            return Ok(tr);
        }
        h = tr.step() * 0.9 * max_disp / d;
    }
}

/// Debug dump: `param,x,y,bmag,psi`.
pub fn write_trace_csv(path: &Path, tr: &FieldLineTrace, model: &MagneticFieldModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{},x,y,bmag,psi", tr.param.name())?;
    for k in 0..tr.len() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            tr.t[k],
            tr.x[k],
            tr.y[k],
            tr.bmag[k],
            model.psi(tr.x[k], tr.y[k])
        )?;
    }
    w.flush()?;
    Ok(())
}
