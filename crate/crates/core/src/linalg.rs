//! Small dense linear-algebra helpers shared by the solvers.
//!
//! Everything is desk scale (n in the tens), so a plain partially-pivoted LU
//! is all we need.

use ndarray::{Array1, Array2};

/// LU factorization with partial pivoting.
pub(crate) struct Lu {
    lu: Array2<f64>,
    piv: Vec<usize>,
}

impl Lu {
    /// Returns `None` when the matrix is singular to working precision.
    pub(crate) fn factor(a: &Array2<f64>) -> Option<Lu> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU needs a square matrix");
        let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
        let mut lu = a.clone();
        let mut piv = Vec::with_capacity(n);
        for k in 0..n {
            let mut p = k;
            let mut best = lu[[k, k]].abs();
            for i in (k + 1)..n {
                let v = lu[[i, k]].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best < scale * 1e-14 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[[k, j]];
                    lu[[k, j]] = lu[[p, j]];
                    lu[[p, j]] = tmp;
                }
            }
            piv.push(p);
            for i in (k + 1)..n {
                let factor = lu[[i, k]] / lu[[k, k]];
                lu[[i, k]] = factor;
                for j in (k + 1)..n {
                    lu[[i, j]] -= factor * lu[[k, j]];
                }
            }
        }
        Some(Lu { lu, piv })
    }

    pub(crate) fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.lu.nrows();
        let mut x = b.clone();
        // All row interchanges first: the stored multipliers are in the
        // final row order, so PA = LU and we solve LUx = Pb.
        for k in 0..n {
            x.swap(k, self.piv[k]);
        }
        for k in 0..n {
            let xk = x[k];
            for i in (k + 1)..n {
                x[i] -= self.lu[[i, k]] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in (k + 1)..n {
                s -= self.lu[[k, j]] * x[j];
            }
            x[k] = s / self.lu[[k, k]];
        }
        x
    }
}

/// Solves `a x = b`, with one iterative-refinement pass to tighten the
/// residual on ill-conditioned systems. `None` means singular.
pub(crate) fn lu_solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let lu = Lu::factor(a)?;
    let mut x = lu.solve(b);
    let r = b - &a.dot(&x);
    x += &lu.solve(&r);
    Some(x)
}

pub(crate) fn inf_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Rank-one outer product `u vᵀ`.
pub(crate) fn outer(u: &Array1<f64>, v: &Array1<f64>) -> Array2<f64> {
    let n = u.len();
    let m = v.len();
    Array2::from_shape_fn((n, m), |(i, j)| u[i] * v[j])
}
