use ndarray::Array2;
use ndarray_linalg::SVD;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{self, site_mask};
use crate::error::{Error, Result};
use crate::exact::density::DensityMatrix;
use crate::model::{current_operator, kinetic_operator, ChainParameters};

/// Stationary-state observables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    /// Mean bond current ⟨J⟩.
    pub current: f64,
    /// ⟨J_j⟩ for bonds j = 1..N-1.
    pub current_profile: Vec<f64>,
    /// ⟨n_j⟩ for sites j = 1..N.
    pub density_profile: Vec<f64>,
    /// C_ij = ⟨n_i n_j⟩ − ⟨n_i⟩⟨n_j⟩, row i = site i + 1.
    pub correlations: Vec<Vec<f64>>,
    /// Operator Schmidt entropy across the central cut, in bits.
    pub entropy: f64,
    pub purity: f64,
    /// Weight of each particle-number block, n = 0..N.
    pub sector_probs: Vec<f64>,
    /// dE_γ/dt = −2γ ⟨Σ_j (c†_j c_{j+1} + h.c.)⟩.
    pub dissipation: f64,
}

impl ObservableRecord {
    /// max_j |⟨J_j⟩ − ⟨J⟩|.
    pub fn current_spread(&self) -> f64 {
        self.current_profile
            .iter()
            .map(|c| (c - self.current).abs())
            .fold(0.0, f64::max)
    }

    /// Symmetric-about-centre density drop ⟨n_2⟩ − ⟨n_{N−1}⟩.
    pub fn bulk_density_drop(&self) -> f64 {
        let n = self.density_profile.len();
        self.density_profile[1] - self.density_profile[n - 2]
    }
}

/// Entropy −Σ p log₂ p of the normalized squared singular values.
pub fn schmidt_entropy(singular_values: &[f64]) -> f64 {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let s: f64 = singular_values
        .iter()
        .map(|s| s * s / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    s.max(0.0)
}

/// Operator Schmidt values of ρ split after the first `left_sites` sites.
pub fn operator_schmidt_values(rho: &DensityMatrix, left_sites: usize) -> Result<Vec<f64>> {
    let n = rho
        .n_sites()
        .ok_or_else(|| Error::DimensionMismatch("dimension is not a power of two".into()))?;
    if left_sites == 0 || left_sites >= n {
        return Err(Error::IndexOutOfRange(format!(
            "cut after {left_sites} sites of {n}"
        )));
    }
    let nr = n - left_sites;
    let (dl, dr) = (1usize << left_sites, 1usize << nr);
    let m = rho.matrix();
    let mut r = Array2::<C64>::zeros((dl * dl, dr * dr));
    for a in 0..dl * dr {
        for b in 0..dl * dr {
            let (al, ar) = (a >> nr, a & (dr - 1));
            let (bl, br) = (b >> nr, b & (dr - 1));
            r[[al * dl + bl, ar * dr + br]] = m[[a, b]];
        }
    }
    let (_, s, _) = r.svd(false, false)?;
    Ok(s.to_vec())
}

/// Entropy across the central cut (left half has ⌊N/2⌋ sites).
pub fn operator_schmidt_entropy(rho: &DensityMatrix) -> Result<f64> {
    let n = rho
        .n_sites()
        .ok_or_else(|| Error::DimensionMismatch("dimension is not a power of two".into()))?;
    Ok(schmidt_entropy(&operator_schmidt_values(rho, n / 2)?))
}

/// All observables of a chain state.
pub fn measure(rho: &DensityMatrix, params: &ChainParameters) -> Result<ObservableRecord> {
    let n = params.n_sites;
    if rho.dim() != 1usize << n {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for {n} sites",
            rho.dim()
        )));
    }
    let pops = rho.populations();
    let mut density = vec![0.0; n];
    let mut nn = vec![vec![0.0; n]; n];
    let mut sector_probs = vec![0.0; n + 1];
    for (a, &p) in pops.iter().enumerate() {
        sector_probs[basis::particle_count(a)] += p;
        let occ: Vec<usize> = (1..=n).filter(|&j| a & site_mask(n, j) != 0).collect();
        for &i in &occ {
            density[i - 1] += p;
            for &j in &occ {
                nn[i - 1][j - 1] += p;
            }
        }
    }
    let correlations = (0..n)
        .map(|i| (0..n).map(|j| nn[i][j] - density[i] * density[j]).collect())
        .collect();
    let current_profile: Vec<f64> = (1..n)
        .map(|j| Ok(rho.expectation(&current_operator(j, n)?).re))
        .collect::<Result<_>>()?;
    let current = current_profile.iter().sum::<f64>() / current_profile.len() as f64;
    let kinetic = rho.expectation(&kinetic_operator(n)?).re;
    Ok(ObservableRecord {
        current,
        current_profile,
        density_profile: density,
        correlations,
        entropy: operator_schmidt_entropy(rho)?,
        purity: rho.purity(),
        sector_probs,
        dissipation: -2.0 * params.dephasing * kinetic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    #[test]
    fn maximally_mixed_state() {
        let p = ChainParameters::new(4, 1.0, 0.0, 0.5);
        let rec = measure(&DensityMatrix::maximally_mixed(16), &p).unwrap();
        assert!(rec.entropy.abs() < 1e-12);
        assert!(rec.density_profile.iter().all(|n| (n - 0.5).abs() < 1e-15));
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(rec.correlations[i][j].abs() < 1e-15);
                }
            }
        }
        assert!((rec.sector_probs.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((rec.purity - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(rec.current, 0.0);
        assert_eq!(rec.dissipation, 0.0);
    }

    #[test]
    fn entropy_of_bell_like_operator() {
        // (|01> + |10>)/√2: operator Schmidt rank 4 with equal weights.
        let mut psi = Array1::<C64>::zeros(4);
        psi[1] = C64::new(1.0, 0.0);
        psi[2] = C64::new(1.0, 0.0);
        let rho = DensityMatrix::pure(&psi);
        let s = operator_schmidt_entropy(&rho).unwrap();
        assert!((s - 2.0).abs() < 1e-12, "{s}");
        let p = ChainParameters::new(2, 0.0, 0.0, 1.0);
        let rec = measure(&rho, &p).unwrap();
        // ⟨c†_1c_2 + h.c.⟩ = 1 in this state.
        assert!((rec.dissipation + 2.0).abs() < 1e-12);
        assert!(rec.current.abs() < 1e-15);
    }

    #[test]
    fn product_state_density() {
        let mut psi = Array1::<C64>::zeros(16);
        psi[0b1100] = C64::new(1.0, 0.0);
        let rec = measure(&DensityMatrix::pure(&psi), &ChainParameters::new(4, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(rec.density_profile, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(rec.sector_probs[2], 1.0);
        assert!(rec.entropy.abs() < 1e-12);
    }
}
