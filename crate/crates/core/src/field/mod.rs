//! Structured mesh, nodal scalar fields, finite-difference operators,
//! spline reconstruction and error norms.

mod fd;
mod io;
mod mesh;
mod spline;

pub use fd::{laplacian, perp_laplacian, Derivatives, PerpLaplacian};
pub use io::{read_field, write_field};
pub use mesh::Mesh2D;
pub use spline::{SplineBasis2D, SplineInterpolant, SplineStencil, DEFAULT_ORDER as DEFAULT_SPLINE_ORDER};

use crate::error::{Error, Result};

/// What a nodal field represents. Only used for bookkeeping and dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    Temperature,
    Source,
    Beta,
    Error,
    Generic,
}

/// Node-collocated scalar values on a [`Mesh2D`], stored x-major
/// (`values[i * ny + j]` holds node `(x_i, y_j)`).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    mesh: Mesh2D,
    values: Vec<f64>,
    pub role: FieldRole,
}

impl ScalarField2D {
    pub fn zeros(mesh: Mesh2D, role: FieldRole) -> Self {
        Self {
            mesh,
            values: vec![0.0; mesh.len()],
            role,
        }
    }

    pub fn from_values(mesh: Mesh2D, values: Vec<f64>, role: FieldRole) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::Config(format!(
                "field has {} values, mesh needs {}",
                values.len(),
                mesh.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let (i, j) = mesh.ij(k);
            return Err(Error::Domain(format!("non-finite value at node ({i}, {j})")));
        }
        Ok(Self { mesh, values, role })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(mesh: Mesh2D, role: FieldRole, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(mesh.len());
        for i in 0..mesh.nx {
            let x = mesh.x(i);
            for j in 0..mesh.ny {
                values.push(f(x, mesh.y(j)));
            }
        }
        Self { mesh, values, role }
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.mesh.idx(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Weighted squared difference `sum_ij dx_i dy_j (f_ij - r_ij)^2`.
///
/// `dx_i` is the trapezoidal node weight in the Dirichlet direction
/// (half cells on the two boundary columns) and `dy_j = hy`, so the weights
/// sum to the area of the unit square.
pub fn l2_error(f: &ScalarField2D, reference: &ScalarField2D) -> Result<L2Error> {
    if f.mesh() != reference.mesh() {
        return Err(Error::Config("l2_error: fields live on different meshes".into()));
    }
    let mesh = f.mesh();
    let mut sum = NeumaierSum::default();
    for i in 0..mesh.nx {
        let wx = mesh.x_weight(i);
        for j in 0..mesh.ny {
            let d = f.at(i, j) - reference.at(i, j);
            sum.add(wx * mesh.hy * d * d);
        }
    }
    let squared = sum.total();
    Ok(L2Error {
        squared,
        norm: squared.sqrt(),
    })
}

/// Both forms of the discrete l2 error: the weighted sum of squares and its
/// square root (the norm). Observed orders are computed from `norm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Error {
    pub squared: f64,
    pub norm: f64,
}

/// Compensated summation, order independent to within one rounding.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = NeumaierSum::default();
    for v in values {
        s.add(v);
    }
    s.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_error_of_identical_fields_is_zero() {
        let mesh = Mesh2D::square(16).unwrap();
        let f = ScalarField2D::from_fn(mesh, FieldRole::Generic, |x, y| x * y);
        let e = l2_error(&f, &f).unwrap();
        assert_eq!(e.squared, 0.0);
        assert_eq!(e.norm, 0.0);
    }

    #[test]
    fn unit_offset_measures_the_domain() {
        let mesh = Mesh2D::new(13, 9).unwrap();
        let f = ScalarField2D::from_fn(mesh, FieldRole::Generic, |x, _| x + 1.0);
        let r = ScalarField2D::from_fn(mesh, FieldRole::Generic, |x, _| x);
        let e = l2_error(&f, &r).unwrap();
        assert!((e.squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn l2_error_matches_brute_force_loop() {
        // 4x4 is below the solver minimum; build the sums by hand on an 8x8
        // mesh with pseudo-random values instead.
        let mesh = Mesh2D::new(8, 8).unwrap();
        let mut state = 12345u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let a: Vec<f64> = (0..mesh.len()).map(|_| next()).collect();
        let b: Vec<f64> = (0..mesh.len()).map(|_| next()).collect();
        let mut expect = 0.0;
        for i in 0..8 {
            let dx = if i == 0 || i == 7 { 0.5 / 7.0 } else { 1.0 / 7.0 };
            for j in 0..8 {
                let d = a[i * 8 + j] - b[i * 8 + j];
                expect += dx * 0.125 * d * d;
            }
        }
        let fa = ScalarField2D::from_values(mesh, a, FieldRole::Generic).unwrap();
        let fb = ScalarField2D::from_values(mesh, b, FieldRole::Generic).unwrap();
        let e = l2_error(&fa, &fb).unwrap();
        assert!((e.squared - expect).abs() < 1e-15);
        assert!((e.norm - expect.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_values() {
        let mesh = Mesh2D::square(8).unwrap();
        let mut v = vec![0.0; mesh.len()];
        v[5] = f64::NAN;
        assert!(ScalarField2D::from_values(mesh, v, FieldRole::Generic).is_err());
    }
}
