//! Per-node field-line samples: one period of a closed line when the line
//! closes, otherwise a bounded open segment through the node.

use crate::error::{Error, Result};
use crate::magnetics::{find_closed_orbit, ClosedOrbit, LineParam, MagneticFieldModel, OrbitOptions};

/// Cosine of the largest direction change tolerated within one step.
const MAX_TURN_COS: f64 = 0.5;
/// Relative in-plane speed below which an open trace is stopped.
const STAGNATION: f64 = 1e-8;

/// Geometry controls shared by every per-node line computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSettings {
    /// Step bound as a fraction of the mesh spacing.
    pub step_fraction: f64,
    /// Kernel truncation in units of `sqrt(tau)` on open lines.
    pub c_trunc: f64,
    /// In-plane length (domain units) at which open segments are cut off.
    pub max_open_length: f64,
    pub closure_tol: f64,
    pub b_min: f64,
    /// Open segments end where `|B|` falls below this (a null on the line).
    pub null_stop: f64,
}

impl Default for LineSettings {
    fn default() -> Self {
        Self {
            step_fraction: 0.25,
            c_trunc: crate::kernels::DEFAULT_C_TRUNC,
            max_open_length: 32.0,
            closure_tol: 1e-11,
            b_min: crate::magnetics::DEFAULT_B_MIN,
            null_stop: 1e-6,
        }
    }
}

/// Open segment with (possibly non-uniform) parameter offsets `t`, sorted,
/// containing the launch point at `t = 0`.
#[derive(Debug, Clone)]
pub struct OpenLine {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub bmag: Vec<f64>,
}

impl OpenLine {
    /// Largest symmetric half span available.
    pub fn half_span(&self) -> f64 {
        (-self.t[0]).min(self.t[self.t.len() - 1])
    }
}

#[derive(Debug, Clone)]
pub enum LineSamples {
    Closed(ClosedOrbit),
    Open(OpenLine),
}

impl LineSamples {
    pub fn x(&self) -> &[f64] {
        match self {
            LineSamples::Closed(o) => &o.x,
            LineSamples::Open(o) => &o.x,
        }
    }

    pub fn y(&self) -> &[f64] {
        match self {
            LineSamples::Closed(o) => &o.y,
            LineSamples::Open(o) => &o.y,
        }
    }

    pub fn bmag(&self) -> &[f64] {
        match self {
            LineSamples::Closed(o) => &o.bmag,
            LineSamples::Open(o) => &o.bmag,
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, LineSamples::Closed(_))
    }
}

/// Adaptive, displacement-bounded trace in both directions until the
/// parameter reaches `half`, the in-plane path length reaches `max_len`, or
/// the line runs into a null (`|B| < null_stop`).
#[allow(clippy::too_many_arguments)]
pub fn open_line(
    model: &MagneticFieldModel,
    param: LineParam,
    x0: f64,
    y0: f64,
    half: f64,
    max_len: f64,
    max_disp: f64,
    null_stop: f64,
) -> Result<OpenLine> {
    let mut sides: [Vec<(f64, f64, f64)>; 2] = [Vec::new(), Vec::new()];
    let v0 = param.velocity(model, x0, y0);
    let v0 = v0.0.hypot(v0.1);
    for (side, dir) in [(0usize, -1.0f64), (1, 1.0)] {
        let (mut x, mut y, mut t, mut len) = (x0, y0, 0.0f64, 0.0f64);
        while t < half && len < max_len {
            let v = param.velocity(model, x, y);
            let speed = v.0.hypot(v.1);
            if speed < STAGNATION * v0 {
                // Creeping into an X-point behind a guide field.
                break;
            }
            let mut dt = (max_disp / speed).min(half - t);
            let (nx, ny, turn) = loop {
                let (nx, ny, speed, turn) = crate::magnetics::rk4_step_turn(model, param, x, y, dir * dt);
                if speed * dt <= max_disp * 1.0001 || dt < 1e-300 {
                    break (nx, ny, turn);
                }
                dt = 0.9 * max_disp / speed;
            };
            // A sharp turn within one short step means the line hit a null.
            if !nx.is_finite() || !ny.is_finite() || turn < MAX_TURN_COS || model.eval_b(nx, ny).bmag < null_stop {
                break;
            }
            if !(-1e-9..=1.0 + 1e-9).contains(&nx) {
                return Err(Error::Confinement { x: nx, y: ny });
            }
            len += (nx - x).hypot(ny - y);
            x = nx;
            y = ny;
            t += dt;
            sides[side].push((dir * t, x, y));
        }
    }
    let n = sides[0].len() + sides[1].len() + 1;
    let mut line = OpenLine {
        t: Vec::with_capacity(n),
        x: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        bmag: Vec::with_capacity(n),
    };
    let pts = sides[0]
        .iter()
        .rev()
        .copied()
        .chain(std::iter::once((0.0, x0, y0)))
        .chain(sides[1].iter().copied());
    for (t, x, y) in pts {
        line.t.push(t);
        line.x.push(x);
        line.y.push(y);
        line.bmag.push(model.eval_b(x, y).bmag);
    }
    Ok(line)
}

/// Samples of the line through `(x0, y0)`; `None` at a magnetic null.
/// `open_half` is the parameter half span wanted if the line is open.
pub fn line_through(
    model: &MagneticFieldModel,
    param: LineParam,
    x0: f64,
    y0: f64,
    h: f64,
    settings: &LineSettings,
    open_half: f64,
) -> Result<Option<LineSamples>> {
    if model.eval_b(x0, y0).bmag <= settings.b_min {
        return Ok(None);
    }
    let mut opts = OrbitOptions::for_spacing(h);
    opts.max_disp = settings.step_fraction * h;
    opts.closure_tol = settings.closure_tol;
    opts.max_length = settings.max_open_length;
    if let Some(o) = find_closed_orbit(model, param, x0, y0, &opts)? {
        return Ok(Some(LineSamples::Closed(o)));
    }
    let line = open_line(
        model,
        param,
        x0,
        y0,
        open_half,
        settings.max_open_length,
        opts.max_disp,
        settings.null_stop,
    )?;
    Ok(Some(LineSamples::Open(line)))
}
