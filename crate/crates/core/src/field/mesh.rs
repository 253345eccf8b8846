use crate::error::{Error, Result};

/// Node-centred mesh on `[0,1]^2`: `nx` nodes including both Dirichlet
/// boundaries in `x`, `ny` periodic nodes in `y` (node `ny` is node `0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh2D {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl Mesh2D {
    pub const MIN_NODES: usize = 8;

    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < Self::MIN_NODES || ny < Self::MIN_NODES {
            return Err(Error::Config(format!(
                "mesh {nx}x{ny} is too small (need at least {} nodes per direction)",
                Self::MIN_NODES
            )));
        }
        Ok(Self {
            nx,
            ny,
            hx: 1.0 / (nx - 1) as f64,
            hy: 1.0 / ny as f64,
        })
    }

    /// Mesh with `cells` intervals in each direction, so `hx == hy == 1/cells`.
    pub fn square(cells: usize) -> Result<Self> {
        Self::new(cells + 1, cells)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            1.0
        } else {
            i as f64 * self.hx
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k / self.ny, k % self.ny)
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        i == 0 || i + 1 == self.nx
    }

    pub fn min_spacing(&self) -> f64 {
        self.hx.min(self.hy)
    }

    /// Trapezoidal quadrature weight of column `i`.
    pub fn x_weight(&self, i: usize) -> f64 {
        if self.is_boundary(i) {
            0.5 * self.hx
        } else {
            self.hx
        }
    }

    /// Linear indices of all interior (non-Dirichlet) nodes.
    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (1..self.nx - 1).flat_map(move |i| (0..self.ny).map(move |j| self.idx(i, j)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacings() {
        let m = Mesh2D::square(32).unwrap();
        assert_eq!(m.nx, 33);
        assert_eq!(m.ny, 32);
        assert_eq!(m.hx, 1.0 / 32.0);
        assert_eq!(m.hy, 1.0 / 32.0);
        assert_eq!(m.x(32), 1.0);
        assert_eq!(m.interior().count(), 31 * 32);
    }

    #[test]
    fn too_small() {
        assert!(Mesh2D::new(7, 16).is_err());
        assert!(Mesh2D::new(16, 4).is_err());
    }
}
