//! Number-sector spectra and the bound domain eigenstates.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{self, NumberSectors};
use crate::error::{Error, Result};
use crate::model::OperatorMatrix;

/// Default cap on the dimension of a dense sector eigensolve.
pub const DEFAULT_SECTOR_CAP: usize = 5000;

/// Eigenpairs of H restricted to one particle-number sector.
#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub n_sites: usize,
    pub particles: usize,
    /// Sector configurations in ascending order; row index of `vectors`.
    pub configs: Vec<usize>,
    /// Ascending eigenvalues.
    pub energies: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: Array2<C64>,
}

pub fn sector_spectrum(h: &OperatorMatrix, n_sites: usize, particles: usize) -> Result<SectorSpectrum> {
    sector_spectrum_capped(h, n_sites, particles, DEFAULT_SECTOR_CAP)
}

pub fn sector_spectrum_capped(
    h: &OperatorMatrix,
    n_sites: usize,
    particles: usize,
    cap: usize,
) -> Result<SectorSpectrum> {
    if h.nrows() != 1usize << n_sites {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian of dimension {} for {n_sites} sites",
            h.nrows()
        )));
    }
    if particles > n_sites {
        return Err(Error::IndexOutOfRange(format!(
            "particle number {particles} exceeds {n_sites} sites"
        )));
    }
    let d = basis::binomial(n_sites, particles);
    if d > cap {
        return Err(Error::InvalidParameter(format!(
            "sector dimension {d} exceeds the dense eigensolve cap {cap}"
        )));
    }
    let sectors = NumberSectors::new(n_sites);
    let configs = sectors.sector(particles).to_vec();
    let mut block = Array2::<C64>::zeros((d, d));
    for (i, &a) in configs.iter().enumerate() {
        for (c, v) in h.row(a) {
            if basis::particle_count(c) != particles {
                return Err(Error::InvalidParameter(
                    "Hamiltonian does not conserve particle number".into(),
                ));
            }
            block[[i, sectors.position(c)]] = v;
        }
    }
    let (energies, vectors) = block.eigh(UPLO::Lower)?;
    Ok(SectorSpectrum {
        n_sites,
        particles,
        configs,
        energies: energies.to_vec(),
        vectors,
    })
}

/// The bound domain eigenstate of a sector and its deviation from the
/// perfect domain configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DarkState {
    pub particles: usize,
    /// Energy after subtracting ¼Δ(N−1).
    pub shifted_energy: f64,
    /// Distance from the eigen-cluster to the nearest other eigenvalue.
    pub gap: f64,
    /// Number of (near-)degenerate eigenvectors the state was projected from.
    pub cluster_size: usize,
    /// |⟨B_n|Ψ_D⟩|².
    pub domain_weight: f64,
    /// δ_n(j) = |⟨n_j⟩ − ⟨B_n|n_j|B_n⟩| for sites j = 1..N.
    pub deviation: Vec<f64>,
    /// Amplitudes over `configs` of the spectrum it came from.
    #[serde(skip)]
    pub amplitudes: Array1<C64>,
}

/// Extracts Ψ_D(n) from a sector spectrum.
///
/// For Δ > 0 the domain configuration B_n sits at the top of the sector, for
/// Δ < 0 at the bottom. B_n is degenerate with its mirror image up to an
/// exponentially small tunnelling splitting, so Ψ_D is taken as the projection
/// of B_n onto all eigenvectors within |Δ|/4 of the extremal eigenvalue, half
/// the |Δ|/2 spacing between manifolds with different domain-wall counts.
pub fn dark_state(spec: &SectorSpectrum, interaction: f64) -> Result<DarkState> {
    if interaction == 0.0 {
        return Err(Error::InvalidParameter("dark states need Δ ≠ 0".into()));
    }
    let n = spec.n_sites;
    let d = spec.energies.len();
    let domain = basis::left_domain(n, spec.particles);
    let row = spec
        .configs
        .iter()
        .position(|&c| c == domain)
        .ok_or_else(|| Error::InvalidParameter("domain configuration missing".into()))?;
    let window = 0.25 * interaction.abs();
    let order: Vec<usize> = if interaction > 0.0 {
        (0..d).rev().collect()
    } else {
        (0..d).collect()
    };
    let extremal = spec.energies[order[0]];
    let cluster: Vec<usize> = order
        .iter()
        .copied()
        .take_while(|&k| (spec.energies[k] - extremal).abs() <= window)
        .collect();
    let gap = order
        .get(cluster.len())
        .map(|&k| {
            let edge = spec.energies[cluster[cluster.len() - 1]];
            (spec.energies[k] - edge).abs()
        })
        .unwrap_or(f64::INFINITY);
    let mut psi = Array1::<C64>::zeros(d);
    for &k in &cluster {
        let overlap = spec.vectors[[row, k]].conj();
        for i in 0..d {
            psi[i] += overlap * spec.vectors[[i, k]];
        }
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::InvalidParameter(
            "domain configuration has no weight in the extremal cluster".into(),
        ));
    }
    psi.mapv_inplace(|z| z / norm);
    let energy = cluster
        .iter()
        .map(|&k| spec.energies[k] * spec.vectors[[row, k]].norm_sqr())
        .sum::<f64>()
        / cluster
            .iter()
            .map(|&k| spec.vectors[[row, k]].norm_sqr())
            .sum::<f64>();
    let deviation = (1..=n)
        .map(|j| {
            let target = basis::is_occupied(domain, n, j);
            spec.configs
                .iter()
                .zip(psi.iter())
                .filter(|(&c, _)| basis::is_occupied(c, n, j) != target)
                .map(|(_, z)| z.norm_sqr())
                .sum()
        })
        .collect();
    Ok(DarkState {
        particles: spec.particles,
        shifted_energy: energy - 0.25 * interaction * (n as f64 - 1.0),
        gap,
        cluster_size: cluster.len(),
        domain_weight: psi[row].norm_sqr(),
        deviation,
        amplitudes: psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, ChainParameters};

    #[test]
    fn sector_spectrum_covers_full_spectrum() {
        let p = ChainParameters::new(6, 1.5, 0.0, 0.0);
        let h = build_hamiltonian(&p).unwrap();
        let mut all: Vec<f64> = (0..=6)
            .flat_map(|n| sector_spectrum(&h, 6, n).unwrap().energies)
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (full, _) = h.to_dense().eigh(UPLO::Lower).unwrap();
        for (a, b) in all.iter().zip(full.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn domain_state_is_extremal() {
        let p = ChainParameters::new(8, 10.0, 0.0, 0.0);
        let h = build_hamiltonian(&p).unwrap();
        let spec = sector_spectrum(&h, 8, 4).unwrap();
        let ds = dark_state(&spec, 10.0).unwrap();
        assert!(ds.domain_weight > 0.99);
        assert!(ds.gap > 4.0);
        assert_eq!(ds.cluster_size, 2);
        assert!((ds.shifted_energy + 5.0).abs() < 0.5);
        assert!(sector_spectrum(&h, 8, 9).is_err());
    }
}
