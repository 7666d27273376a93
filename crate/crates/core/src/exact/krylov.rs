//! Restarted GMRES with right preconditioning.

use num_complex::Complex64 as C64;

/// A square linear map on complex vectors.
pub trait LinearMap: Sync {
    fn dim(&self) -> usize;
    /// y = A x
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

/// The identity, for unpreconditioned runs.
pub struct IdentityMap(pub usize);

impl LinearMap for IdentityMap {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(x);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iter: usize,
    /// Target relative residual ‖b − Ax‖ / ‖b‖.
    pub tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 60,
            max_iter: 2000,
            tol: 1e-11,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GmresOutcome {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(u: &[C64], w: &[C64]) -> C64 {
    u.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

fn norm(u: &[C64]) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves A x = b starting from the contents of `x`; `precond` applies an
/// approximate inverse of A.
pub fn gmres(
    a: &dyn LinearMap,
    precond: &dyn LinearMap,
    b: &[C64],
    x: &mut [C64],
    opts: &GmresOptions,
) -> GmresOutcome {
    let n = b.len();
    assert_eq!(a.dim(), n);
    assert_eq!(precond.dim(), n);
    assert_eq!(x.len(), n);
    let zero = C64::new(0.0, 0.0);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(zero);
        return GmresOutcome {
            converged: true,
            iterations: 0,
            residual: 0.0,
        };
    }
    let m = opts.restart.max(1);
    let mut total = 0;
    let mut r = vec![zero; n];
    let mut z = vec![zero; n];
    let mut w = vec![zero; n];
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![zero; m]; m + 1];
    let mut cs = vec![0.0f64; m];
    let mut sn = vec![zero; m];
    let mut g = vec![zero; m + 1];
    loop {
        a.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol || total >= opts.max_iter || !rel.is_finite() {
            return GmresOutcome {
                converged: rel <= opts.tol,
                iterations: total,
                residual: rel,
            };
        }
        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.fill(zero);
        g[0] = C64::new(beta, 0.0);
        let mut k = 0;
        while k < m && total < opts.max_iter {
            precond.apply(&basis[k], &mut z);
            a.apply(&z, &mut w);
            // Modified Gram-Schmidt with one refinement pass.
            for col in h.iter_mut() {
                col[k] = zero;
            }
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    h[i][k] += c;
                    for (wj, vj) in w.iter_mut().zip(v) {
                        *wj -= c * vj;
                    }
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = C64::new(hn, 0.0);
            for i in 0..k {
                let (hi, hi1) = (h[i][k], h[i + 1][k]);
                h[i][k] = cs[i] * hi + sn[i] * hi1;
                h[i + 1][k] = -sn[i].conj() * hi + cs[i] * hi1;
            }
            let (p, q) = (h[k][k], h[k + 1][k]);
            let rho = (p.norm_sqr() + q.norm_sqr()).sqrt();
            if p.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = C64::new(1.0, 0.0);
            } else {
                cs[k] = p.norm() / rho;
                sn[k] = (p / p.norm()) * q.conj() / rho;
            }
            h[k][k] = cs[k] * p + sn[k] * q;
            h[k + 1][k] = zero;
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] = cs[k] * g[k];
            k += 1;
            total += 1;
            let happy = hn <= 1e-14 * bnorm;
            if !happy {
                basis.push(w.iter().map(|v| v / hn).collect());
            }
            if g[k].norm() / bnorm <= opts.tol || happy {
                break;
            }
        }
        // Back substitution for the k-dimensional least-squares problem.
        let mut y = vec![zero; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= h[i][j] * y[j];
            }
            y[i] = if h[i][i].norm() > 0.0 { acc / h[i][i] } else { zero };
        }
        let mut u = vec![zero; n];
        for (yi, v) in y.iter().zip(&basis) {
            for (uj, vj) in u.iter_mut().zip(v) {
                *uj += yi * vj;
            }
        }
        precond.apply(&u, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;

    struct Csr(SparseMatrix);
    impl LinearMap for Csr {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[C64], y: &mut [C64]) {
            self.0.matvec(x, y)
        }
    }

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 200;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(3.0 + (i % 7) as f64, 0.5)));
            if i + 1 < n {
                t.push((i, i + 1, C64::new(-1.0, 0.3)));
                t.push((i + 1, i, C64::new(0.2, -1.1)));
            }
        }
        let a = Csr(SparseMatrix::from_triplets(n, n, t));
        let xs: Vec<C64> = (0..n).map(|i| C64::new((i as f64).sin(), 1.0 / (1.0 + i as f64))).collect();
        let b = a.0.mul_vec(&xs);
        let mut x = vec![C64::new(0.0, 0.0); n];
        let out = gmres(&a, &IdentityMap(n), &b, &mut x, &GmresOptions { restart: 20, ..Default::default() });
        assert!(out.converged);
        let err = x.iter().zip(&xs).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "error {err}");
    }
}
