//! Restarted GMRES with modified Gram-Schmidt (two passes) and Givens
//! rotations. Reductions use fixed chunking so results do not depend on
//! the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

const CHUNK: usize = 4096;

/// Matrix-free linear map on node vectors.
pub trait LinearOperator: Sync {
    fn len(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    /// Relative to `||b||_2`.
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            tol: 1e-8,
            restart: 50,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GmresStats {
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||`.
    pub residual: f64,
    /// Relative residual estimate after every iteration.
    pub history: Vec<f64>,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    crate::field::neumaier_sum(partial)
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(y, x)| *y += alpha * x);
}

fn residual(op: &dyn LinearOperator, b: &[f64], x: &[f64], r: &mut [f64]) {
    op.apply(x, r);
    r.par_iter_mut().zip(b.par_iter()).for_each(|(r, b)| *r = b - *r);
}

/// Solves `A x = b` starting from the contents of `x`.
pub fn gmres(op: &dyn LinearOperator, b: &[f64], x: &mut [f64], cfg: &GmresConfig) -> Result<GmresStats> {
    let n = op.len();
    if b.len() != n || x.len() != n {
        return Err(Error::Config(format!(
            "gmres: sizes {} / {} / {n} disagree",
            b.len(),
            x.len()
        )));
    }
    if !(cfg.tol > 0.0 && cfg.tol < 1.0) || cfg.restart == 0 {
        return Err(Error::Config(format!(
            "gmres: need 0 < tol < 1 and restart >= 1, got {cfg:?}"
        )));
    }
    let bnorm = norm2(b);
    let mut stats = GmresStats::default();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(stats);
    }
    let target = cfg.tol * bnorm;
    let m = cfg.restart;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    loop {
        residual(op, b, x, &mut r);
        let beta = norm2(&r);
        stats.residual = beta / bnorm;
        if beta <= target {
            return Ok(stats);
        }
        if stats.iterations >= cfg.max_iter {
            return Err(Error::NoConvergence {
                solver: "GMRES",
                iterations: stats.iterations,
                last: stats.residual,
                history: stats.history,
            });
        }
        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        // Hessenberg columns, rotations and the rotated right-hand side.
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<(f64, f64)> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && stats.iterations < cfg.max_iter {
            op.apply(&basis[k], &mut w);
            let mut col = vec![0.0; k + 2];
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    col[i] += c;
                    axpy(-c, v, &mut w);
                }
            }
            let wn = norm2(&w);
            col[k + 1] = wn;
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = c * a + s * bb;
                col[i + 1] = -s * a + c * bb;
            }
            let rho = col[k].hypot(col[k + 1]);
            let (c, s) = if rho == 0.0 {
                (1.0, 0.0)
            } else {
                (col[k] / rho, col[k + 1] / rho)
            };
            col[k] = rho;
            col[k + 1] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            cs.push((c, s));
            h.push(col);
            k += 1;
            stats.iterations += 1;
            let est = g[k].abs();
            stats.history.push(est / bnorm);
            if est <= target || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // Back substitution on the k x k triangle.
        let mut yv = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * yv[j];
            }
            yv[i] = s / h[i][i];
        }
        for (j, &c) in yv.iter().enumerate() {
            axpy(c, &basis[j], x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    struct Dense(DMatrix<f64>);

    impl LinearOperator for Dense {
        fn len(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            let v = &self.0 * DVector::from_column_slice(x);
            y.copy_from_slice(v.as_slice());
        }
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn identity_takes_one_iteration() {
        let op = Dense(DMatrix::identity(7, 7));
        let b: Vec<f64> = (0..7).map(|i| i as f64 - 2.0).collect();
        let mut x = vec![0.0; 7];
        let s = gmres(&op, &b, &mut x, &GmresConfig::default()).unwrap();
        assert_eq!(s.iterations, 1);
        assert!(x.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn diagonal_scaling() {
        let op = Dense(DMatrix::identity(5, 5) * 2.0);
        let b = vec![1.0, -3.0, 0.5, 2.0, 8.0];
        let mut x = vec![0.0; 5];
        gmres(&op, &b, &mut x, &GmresConfig::default()).unwrap();
        assert!(x.iter().zip(&b).all(|(a, b)| (a - b / 2.0).abs() < 1e-12));
    }

    #[test]
    fn matches_dense_direct_solve() {
        let mut seed = 7;
        let n = 20;
        let m = DMatrix::from_fn(n, n, |i, j| lcg(&mut seed) + if i == j { 4.0 } else { 0.0 });
        let b: Vec<f64> = (0..n).map(|_| lcg(&mut seed)).collect();
        let direct = m.clone().lu().solve(&DVector::from_column_slice(&b)).unwrap();
        let op = Dense(m);
        let mut x = vec![0.0; n];
        let cfg = GmresConfig {
            tol: 1e-12,
            restart: 8,
            max_iter: 500,
        };
        gmres(&op, &b, &mut x, &cfg).unwrap();
        for i in 0..n {
            assert!((x[i] - direct[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn reports_non_convergence() {
        // A rotation: restarted GMRES(1) stalls.
        let op = Dense(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let mut x = vec![0.0; 2];
        let cfg = GmresConfig {
            tol: 1e-10,
            restart: 1,
            max_iter: 20,
        };
        let e = gmres(&op, &[1.0, 0.0], &mut x, &cfg).unwrap_err();
        assert!(matches!(e, Error::NoConvergence { .. }));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let op = Dense(DMatrix::identity(3, 3));
        let mut x = vec![1.0; 3];
        let s = gmres(&op, &[0.0; 3], &mut x, &GmresConfig::default()).unwrap();
        assert_eq!(s.iterations, 0);
        assert_eq!(x, vec![0.0; 3]);
    }

    #[test]
    fn dot_is_independent_of_thread_count() {
        let mut seed = 3;
        let a: Vec<f64> = (0..50_000).map(|_| lcg(&mut seed)).collect();
        let b: Vec<f64> = (0..50_000).map(|_| lcg(&mut seed)).collect();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| dot(&a, &b));
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| dot(&a, &b));
        assert_eq!(one.to_bits(), four.to_bits());
    }
}
