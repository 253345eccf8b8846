//! Fourth-order finite differences: central stencils in the interior,
//! periodic wrap in `y`, one-sided closures of the same order next to and on
//! the Dirichlet boundaries in `x`.

use super::{FieldRole, Mesh2D, ScalarField2D};
use crate::magnetics::{MagneticFieldModel, ParallelTensor};

const D1_CENTRAL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D2_CENTRAL: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
// One-sided closures, nodes 0..len, evaluated at node 0 and node 1.
const D1_AT0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const D1_AT1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const D2_AT0: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
const D2_AT1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];

/// Absolute node indices and weights (without the `1/(12 h^p)` factor).
#[derive(Clone, Copy)]
struct XStencil {
    nodes: [usize; 6],
    coefs: [f64; 6],
    len: usize,
}

impl XStencil {
    fn build(first: usize, coefs: &[f64], mirror: Option<(usize, f64)>) -> Self {
        let mut s = XStencil {
            nodes: [0; 6],
            coefs: [0.0; 6],
            len: coefs.len(),
        };
        for (k, &c) in coefs.iter().enumerate() {
            match mirror {
                None => {
                    s.nodes[k] = first + k;
                    s.coefs[k] = c;
                }
                Some((last, sign)) => {
                    s.nodes[k] = last - (first + k);
                    s.coefs[k] = sign * c;
                }
            }
        }
        s
    }

    fn first_derivative(i: usize, nx: usize) -> Self {
        let last = nx - 1;
        match i {
            0 => Self::build(0, &D1_AT0, None),
            1 => Self::build(0, &D1_AT1, None),
            _ if i == last => Self::build(0, &D1_AT0, Some((last, -1.0))),
            _ if i + 1 == last => Self::build(0, &D1_AT1, Some((last, -1.0))),
            _ => Self::build(i - 2, &D1_CENTRAL, None),
        }
    }

    fn second_derivative(i: usize, nx: usize) -> Self {
        let last = nx - 1;
        match i {
            0 => Self::build(0, &D2_AT0, None),
            1 => Self::build(0, &D2_AT1, None),
            _ if i == last => Self::build(0, &D2_AT0, Some((last, 1.0))),
            _ if i + 1 == last => Self::build(0, &D2_AT1, Some((last, 1.0))),
            _ => Self::build(i - 2, &D2_CENTRAL, None),
        }
    }

    #[inline]
    fn apply(&self, f: &[f64], ny: usize, j: usize) -> f64 {
        let mut s = 0.0;
        for k in 0..self.len {
            s += self.coefs[k] * f[self.nodes[k] * ny + j];
        }
        s
    }
}

#[inline]
fn wrap(j: isize, ny: usize) -> usize {
    j.rem_euclid(ny as isize) as usize
}

#[inline]
fn y_apply(stencil: &[f64; 5], f: &[f64], ny: usize, i: usize, j: usize) -> f64 {
    let base = i * ny;
    let mut s = 0.0;
    for (k, &c) in stencil.iter().enumerate() {
        if c != 0.0 {
            s += c * f[base + wrap(j as isize + k as isize - 2, ny)];
        }
    }
    s
}

/// First and second derivatives of a nodal field at every node.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dxx: Vec<f64>,
    pub dyy: Vec<f64>,
    pub dxy: Vec<f64>,
}

impl Derivatives {
    pub fn of(f: &ScalarField2D) -> Self {
        Self::of_values(f.mesh(), f.values())
    }

    pub fn of_values(mesh: &Mesh2D, f: &[f64]) -> Self {
        let (nx, ny) = (mesh.nx, mesh.ny);
        let n = mesh.len();
        let (cx1, cx2) = (1.0 / (12.0 * mesh.hx), 1.0 / (12.0 * mesh.hx * mesh.hx));
        let (cy1, cy2) = (1.0 / (12.0 * mesh.hy), 1.0 / (12.0 * mesh.hy * mesh.hy));
        let mut d = Derivatives {
            dx: vec![0.0; n],
            dy: vec![0.0; n],
            dxx: vec![0.0; n],
            dyy: vec![0.0; n],
            dxy: vec![0.0; n],
        };
        for i in 0..nx {
            for j in 0..ny {
                let k = i * ny + j;
                d.dy[k] = cy1 * y_apply(&D1_CENTRAL, f, ny, i, j);
                d.dyy[k] = cy2 * y_apply(&D2_CENTRAL, f, ny, i, j);
            }
        }
        for i in 0..nx {
            let s1 = XStencil::first_derivative(i, nx);
            let s2 = XStencil::second_derivative(i, nx);
            for j in 0..ny {
                let k = i * ny + j;
                d.dx[k] = cx1 * s1.apply(f, ny, j);
                d.dxx[k] = cx2 * s2.apply(f, ny, j);
                d.dxy[k] = cx1 * s1.apply(&d.dy, ny, j);
            }
        }
        d
    }
}

/// Fourth-order `d2/dx2 + d2/dy2` at every node.
pub fn laplacian(f: &ScalarField2D) -> ScalarField2D {
    let mesh = *f.mesh();
    let mut out = vec![0.0; mesh.len()];
    laplacian_into(&mesh, f.values(), &mut out);
    ScalarField2D::from_values(mesh, out, FieldRole::Generic).expect("finite input")
}

pub(crate) fn laplacian_into(mesh: &Mesh2D, f: &[f64], out: &mut [f64]) {
    let (nx, ny) = (mesh.nx, mesh.ny);
    let cx2 = 1.0 / (12.0 * mesh.hx * mesh.hx);
    let cy2 = 1.0 / (12.0 * mesh.hy * mesh.hy);
    for i in 0..nx {
        let s2 = XStencil::second_derivative(i, nx);
        for j in 0..ny {
            out[i * ny + j] = cx2 * s2.apply(f, ny, j) + cy2 * y_apply(&D2_CENTRAL, f, ny, i, j);
        }
    }
}

/// Perpendicular Laplacian `lap - div(b b . grad)` with node-wise magnetic
/// coefficients precomputed. Nodes where `|B|` is below the null threshold
/// carry no parallel part (the operator there is the full Laplacian).
#[derive(Debug, Clone)]
pub struct PerpLaplacian {
    mesh: Mesh2D,
    tensor: Vec<Option<ParallelTensor>>,
}

impl PerpLaplacian {
    pub fn new(mesh: Mesh2D, model: &MagneticFieldModel, b_min: f64) -> Self {
        let mut tensor = Vec::with_capacity(mesh.len());
        for i in 0..mesh.nx {
            for j in 0..mesh.ny {
                tensor.push(model.parallel_tensor(mesh.x(i), mesh.y(j), b_min));
            }
        }
        Self { mesh, tensor }
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.mesh.nx, self.mesh.ny);
        let h = &self.mesh;
        let (cx1, cx2) = (1.0 / (12.0 * h.hx), 1.0 / (12.0 * h.hx * h.hx));
        let (cy1, cy2) = (1.0 / (12.0 * h.hy), 1.0 / (12.0 * h.hy * h.hy));
        let mut dy = vec![0.0; f.len()];
        for i in 0..nx {
            for j in 0..ny {
                dy[i * ny + j] = cy1 * y_apply(&D1_CENTRAL, f, ny, i, j);
            }
        }
        for i in 0..nx {
            let s1 = XStencil::first_derivative(i, nx);
            let s2 = XStencil::second_derivative(i, nx);
            for j in 0..ny {
                let k = i * ny + j;
                let dxx = cx2 * s2.apply(f, ny, j);
                let dyy = cy2 * y_apply(&D2_CENTRAL, f, ny, i, j);
                out[k] = dxx + dyy;
                if let Some(t) = &self.tensor[k] {
                    let dx = cx1 * s1.apply(f, ny, j);
                    let dxy = cx1 * s1.apply(&dy, ny, j);
                    out[k] -= t.bxx * dxx + 2.0 * t.bxy * dxy + t.byy * dyy + t.cx * dx + t.cy * dy[k];
                }
            }
        }
    }

    pub fn apply_field(&self, f: &ScalarField2D) -> ScalarField2D {
        let mut out = vec![0.0; self.mesh.len()];
        self.apply(f.values(), &mut out);
        ScalarField2D::from_values(self.mesh, out, FieldRole::Generic).expect("finite input")
    }
}

/// Fourth-order perpendicular Laplacian of `f` for the field `model`.
pub fn perp_laplacian(f: &ScalarField2D, model: &MagneticFieldModel) -> ScalarField2D {
    PerpLaplacian::new(*f.mesh(), model, crate::magnetics::DEFAULT_B_MIN).apply_field(f)
}
