//! Closed field lines. In this field model `psi` is conserved along lines, so
//! every line closes in the periodic domain (after one or more transits in
//! `y`, or around an island) except on separatrices. Closed lines are
//! resampled uniformly over exactly one period.

use super::trace::{rk4_step, LineParam};
use super::{MagneticFieldModel, DEFAULT_B_MIN};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitOptions {
    /// Largest in-plane distance covered by one integration step.
    pub max_disp: f64,
    /// Allowed miss distance when the resampled line returns to its start.
    pub closure_tol: f64,
    /// Step budget for the search pass; lines not closed by then are open.
    pub max_steps: usize,
    /// In-plane path length budget for the search pass.
    pub max_length: f64,
    pub min_samples: usize,
    pub max_samples: usize,
}

impl OrbitOptions {
    pub fn for_spacing(h: f64) -> Self {
        Self {
            max_disp: 0.25 * h,
            closure_tol: 1e-9,
            max_steps: 200_000,
            max_length: 32.0,
            min_samples: 16,
            max_samples: 1 << 20,
        }
    }
}

/// One period of a closed field line, sampled at `t_k = k * period / n`
/// for `k = 0..n` (the launch point is sample 0; `y` is unwrapped).
#[derive(Debug, Clone)]
pub struct ClosedOrbit {
    pub param: LineParam,
    pub period: f64,
    /// Net number of periodic `y` transits per period (0 for island lines).
    pub winding: i64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub bmag: Vec<f64>,
}

impl ClosedOrbit {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.period / self.x.len() as f64
    }
}

/// Finds the closed line through `(x0, y0)`. `Ok(None)` means no closure
/// within the step budget or sample limit (separatrix neighbourhood).
pub fn find_closed_orbit(
    model: &MagneticFieldModel,
    param: LineParam,
    x0: f64,
    y0: f64,
    opts: &OrbitOptions,
) -> Result<Option<ClosedOrbit>> {
    let b = model.eval_b(x0, y0);
    if b.bmag <= DEFAULT_B_MIN {
        return Err(Error::NullPoint {
            x: x0,
            y: y0,
            bmag: b.bmag,
        });
    }
    let v0 = param.velocity(model, x0, y0);
    let v0n = v0.0.hypot(v0.1);
    let tan = (v0.0 / v0n, v0.1 / v0n);

    // Search pass: variable step, displacement bounded.
    let (mut x, mut y, mut t) = (x0, y0, 0.0);
    let mut dt = opts.max_disp / v0n;
    let mut vmax = v0n;
    let mut found = None;
    let mut steps = 0;
    let mut length = 0.0;
    while steps < opts.max_steps && length < opts.max_length {
        let (nx, ny, speed) = rk4_step(model, param, x, y, dt);
        if !nx.is_finite() || !ny.is_finite() {
            return Ok(None);
        }
        if speed * dt > opts.max_disp * 1.0001 {
            dt = 0.9 * opts.max_disp / speed;
            continue;
        }
        if !(-1e-9..=1.0 + 1e-9).contains(&nx) {
            return Err(Error::Confinement { x: nx, y: ny });
        }
        steps += 1;
        vmax = vmax.max(speed);
        let m = (ny - y0).round();
        let (qx, qy) = (x0, y0 + m);
        let ga = (x - qx) * tan.0 + (y - qy) * tan.1;
        let gb = (nx - qx) * tan.0 + (ny - qy) * tan.1;
        if ga < 0.0 && gb >= 0.0 && (nx - qx).hypot(ny - qy) < 4.0 * opts.max_disp {
            // Newton on the sub-step that lands on the crossing plane.
            let mut s = dt * (-ga) / (gb - ga);
            for _ in 0..20 {
                let (sx, sy, _) = rk4_step(model, param, x, y, s);
                let g = (sx - qx) * tan.0 + (sy - qy) * tan.1;
                let v = param.velocity(model, sx, sy);
                let ds = g / (v.0 * tan.0 + v.1 * tan.1);
                s -= ds;
                if ds.abs() <= 1e-15 * (t + s) {
                    break;
                }
            }
            found = Some((t + s, m as i64));
            break;
        }
        length += (nx - x).hypot(ny - y);
        x = nx;
        y = ny;
        t += dt;
        let v = param.velocity(model, x, y);
        let speed = v.0.hypot(v.1);
        if speed < 1e-8 * v0n {
            // Stagnating at an X-point: a separatrix, not a closed line.
            return Ok(None);
        }
        dt = opts.max_disp / speed;
    }
    let Some((mut period, winding)) = found else {
        return Ok(None);
    };

    // Uniform pass over exactly one period.
    let (qx, qy) = (x0, y0 + winding as f64);
    let vt = v0.0 * tan.0 + v0.1 * tan.1;
    let mut n = ((period * vmax / opts.max_disp).ceil() as usize).max(opts.min_samples);
    n += n % 2;
    let mut corrections = 0;
    while n <= opts.max_samples {
        let dt = period / n as f64;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let (mut x, mut y) = (x0, y0);
        for _ in 0..n {
            xs.push(x);
            ys.push(y);
            (x, y, _) = rk4_step(model, param, x, y, dt);
        }
        let (dx, dy) = (x - qx, y - qy);
        let along = dx * tan.0 + dy * tan.1;
        let across = (dx - along * tan.0).hypot(dy - along * tan.1);
        if along.abs() > opts.closure_tol && corrections < 4 {
            period -= along / vt;
            corrections += 1;
            continue;
        }
        if along.abs() <= opts.closure_tol && across <= opts.closure_tol {
            let bmag = xs.iter().zip(&ys).map(|(&x, &y)| model.eval_b(x, y).bmag).collect();
            return Ok(Some(ClosedOrbit {
                param,
                period,
                winding,
                x: xs,
                y: ys,
                bmag,
            }));
        }
        n *= 2;
        corrections = 0;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_closes_after_one_transit() {
        let m = MagneticFieldModel::new(0.0, 1.0);
        let o = find_closed_orbit(&m, LineParam::Lambda, 0.3, 0.2, &OrbitOptions::for_spacing(1.0 / 32.0))
            .unwrap()
            .unwrap();
        assert_eq!(o.winding, 1);
        // dy/dlambda = 1/B^2 = 1/2, so one transit takes lambda = 2.
        assert!((o.period - 2.0).abs() < 1e-12);
        assert!(o.x.iter().all(|&x| (x - 0.3).abs() < 1e-15));
    }

    #[test]
    fn perturbed_line_stays_on_its_flux_surface() {
        let m = MagneticFieldModel::new(0.1, 0.0);
        let opts = OrbitOptions::for_spacing(1.0 / 64.0);
        let (x0, y0) = (0.37, 0.81);
        let o = find_closed_orbit(&m, LineParam::Lambda, x0, y0, &opts)
            .unwrap()
            .unwrap();
        assert_eq!(o.winding, 1);
        let psi0 = m.psi(x0, y0);
        for k in 0..o.len() {
            assert!((m.psi(o.x[k], o.y[k]) - psi0).abs() < 1e-9);
        }
        // Every sample is spaced by the same lambda step.
        assert!(o.step() * o.len() as f64 - o.period < 1e-12);
    }

    #[test]
    fn island_line_has_zero_winding() {
        // Just off the O-point (cos(2 pi x) = -1/pi, y = 0) of the delta = 0.5 field.
        let m = MagneticFieldModel::new(0.5, 0.0);
        let xo = (-1.0 / std::f64::consts::PI).acos() / (2.0 * std::f64::consts::PI);
        let opts = OrbitOptions::for_spacing(1.0 / 64.0);
        let o = find_closed_orbit(&m, LineParam::ArcLength, xo + 0.05, 0.0, &opts)
            .unwrap()
            .unwrap();
        assert_eq!(o.winding, 0);
        let psi0 = m.psi(xo + 0.05, 0.0);
        for k in 0..o.len() {
            assert!((m.psi(o.x[k], o.y[k]) - psi0).abs() < 1e-9);
        }
    }

    #[test]
    fn arclength_period_matches_lambda_measure() {
        // Along one period, int ds = int dlambda / |B|.
        let m = MagneticFieldModel::new(0.1, 1.0);
        let opts = OrbitOptions::for_spacing(1.0 / 64.0);
        let ol = find_closed_orbit(&m, LineParam::Lambda, 0.6, 0.1, &opts)
            .unwrap()
            .unwrap();
        let os = find_closed_orbit(&m, LineParam::ArcLength, 0.6, 0.1, &opts)
            .unwrap()
            .unwrap();
        let s: f64 = ol.bmag.iter().map(|b| ol.step() / b).sum();
        assert!((s - os.period).abs() < 1e-9 * os.period, "{s} vs {}", os.period);
    }
}
