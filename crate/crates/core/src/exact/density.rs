use ndarray::{Array1, Array2};
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Tolerances a physical density matrix must meet.
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Dense density matrix on the occupation basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: Array2<C64>,
}

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity, trace and positivity.
    pub fn new(data: Array2<C64>) -> Result<Self> {
        let rho = Self::from_raw(data)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a square matrix without physical checks.
    pub fn from_raw(data: Array2<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square, got {:?}",
                data.dim()
            )));
        }
        Ok(Self { data })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut data = Array2::zeros((dim, dim));
        for i in 0..dim {
            data[[i, i]] = C64::new(1.0 / dim as f64, 0.0);
        }
        Self { data }
    }

    pub fn pure(psi: &Array1<C64>) -> Self {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let n = psi.len();
        let mut data = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                data[[i, j]] = psi[i] * psi[j].conj() / norm2;
            }
        }
        Self { data }
    }

    /// Diagonal state with the given (unnormalized, non-negative) weights.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| *w < 0.0) || total <= 0.0 {
            return Err(Error::InvalidState("weights must be non-negative with positive sum".into()));
        }
        let n = weights.len();
        let mut data = Array2::zeros((n, n));
        for (i, w) in weights.iter().enumerate() {
            data[[i, i]] = C64::new(w / total, 0.0);
        }
        Ok(Self { data })
    }

    /// Full-rank random state G G† / tr(G G†) with Gaussian G, seeded.
    pub fn random(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Array2::from_shape_fn((dim, dim), |_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        });
        let mut data = g.dot(&g.t().mapv(|z| z.conj()));
        let tr: f64 = (0..dim).map(|i| data[[i, i]].re).sum();
        data.mapv_inplace(|z| z / tr);
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of sites when the dimension is a power of two.
    pub fn n_sites(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.data
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                err = err.max((self.data[[i, j]] - self.data[[j, i]].conj()).norm());
            }
        }
        err
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let h = self.hermitian_part();
        Ok(h.eigvalsh(UPLO::Lower)?.to_vec())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Checks the Hermiticity, unit-trace and positivity tolerances.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!("not Hermitian: error {herm:.3e}")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue()?;
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    fn hermitian_part(&self) -> Array2<C64> {
        let adj = self.data.t().mapv(|z| z.conj());
        (&self.data + &adj).mapv(|z| z * 0.5)
    }

    /// (ρ + ρ†)/2 divided by its trace.
    pub fn hermitize_normalize(&mut self) -> Result<()> {
        let h = self.hermitian_part();
        let tr: f64 = h.diag().iter().map(|z| z.re).sum();
        if !tr.is_finite() || tr.abs() < f64::MIN_POSITIVE {
            return Err(Error::InvalidState(format!("cannot normalize trace {tr}")));
        }
        self.data = h.mapv(|z| z / tr);
        Ok(())
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// tr(O ρ) for a sparse operator O.
    pub fn expectation(&self, op: &SparseMatrix) -> C64 {
        assert_eq!(op.nrows(), self.dim());
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..op.nrows() {
            for (c, v) in op.row(a) {
                acc += v * self.data[[c, a]];
            }
        }
        acc
    }

    /// ½ ‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "trace distance between dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let diff = DensityMatrix {
            data: &self.data - &other.data,
        };
        let ev = diff.eigenvalues()?;
        Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
    }

    /// Population of each configuration.
    pub fn populations(&self) -> Vec<f64> {
        self.data.diag().iter().map(|z| z.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_state_is_physical() {
        let rho = DensityMatrix::random(8, 3);
        rho.validate().unwrap();
        assert!(rho.purity() < 1.0);
        let same = DensityMatrix::random(8, 3);
        assert_eq!(rho, same);
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states() {
        let a = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let b = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-14);
        assert!(a.trace_distance(&a).unwrap() < 1e-14);
    }

    #[test]
    fn rejects_unphysical() {
        let mut m = Array2::zeros((2, 2));
        m[[0, 0]] = C64::new(1.5, 0.0);
        m[[1, 1]] = C64::new(-0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }
}
