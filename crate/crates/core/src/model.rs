//! Chain Hamiltonian, jump operators and measurement operators.
//!
//! Everything is built directly in the spin picture. With nearest-neighbour
//! hopping the Jordan-Wigner strings cancel, and the boundary operators act on
//! sites 1 and N where the string is trivial for the chosen ordering, so no
//! fermionic signs appear anywhere.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{self, site_mask, MAX_SITES};
use crate::error::{invalid, Error, Result};
use crate::sparse::SparseMatrix;

/// Sparse operator on the 2^N occupation basis.
pub type OperatorMatrix = SparseMatrix;

/// Default cap on N for anything that materializes the 2^N basis.
pub const DEFAULT_HAMILTONIAN_CAP: usize = 14;

/// Physical parameters of the driven chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParameters {
    pub n_sites: usize,
    #[serde(default = "one")]
    pub hopping: f64,
    pub interaction: f64,
    #[serde(default = "one")]
    pub coupling: f64,
    pub bias: f64,
    #[serde(default)]
    pub dephasing: f64,
    #[serde(default)]
    pub staggered: f64,
}

fn one() -> f64 {
    1.0
}

impl ChainParameters {
    /// Parameters with τ = 1, Γ = 1 and no staggered potential.
    pub fn new(n_sites: usize, interaction: f64, bias: f64, dephasing: f64) -> Self {
        Self {
            n_sites,
            hopping: 1.0,
            interaction,
            coupling: 1.0,
            bias,
            dephasing,
            staggered: 0.0,
        }
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_hopping(mut self, hopping: f64) -> Self {
        self.hopping = hopping;
        self
    }

    pub fn with_staggered(mut self, staggered: f64) -> Self {
        self.staggered = staggered;
        self
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn with_dephasing(mut self, dephasing: f64) -> Self {
        self.dephasing = dephasing;
        self
    }

    pub fn with_interaction(mut self, interaction: f64) -> Self {
        self.interaction = interaction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.hopping,
            self.interaction,
            self.coupling,
            self.bias,
            self.dephasing,
            self.staggered,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(invalid("parameters must be finite"));
        }
        if self.n_sites < 2 {
            return Err(invalid(format!("n_sites = {} must be at least 2", self.n_sites)));
        }
        if self.n_sites > MAX_SITES {
            return Err(invalid(format!("n_sites = {} exceeds {}", self.n_sites, MAX_SITES)));
        }
        if self.hopping == 0.0 {
            return Err(invalid("hopping must be nonzero"));
        }
        if self.coupling <= 0.0 {
            return Err(invalid(format!("coupling = {} must be positive", self.coupling)));
        }
        if self.dephasing < 0.0 {
            return Err(invalid(format!("dephasing = {} must be non-negative", self.dephasing)));
        }
        if self.bias.abs() > 1.0 {
            return Err(invalid(format!("bias = {} must lie in [-1, 1]", self.bias)));
        }
        Ok(())
    }

    /// Rough spectral scale of H plus the dissipative rates, used to pick
    /// integrator steps.
    pub fn rate_scale(&self) -> f64 {
        let n = self.n_sites as f64;
        let h = (self.hopping.abs() + 0.25 * self.interaction.abs()) * (n - 1.0)
            + self.staggered.abs() * n;
        h + self.coupling + n * self.dephasing
    }
}

/// Which physical process a jump operator describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpLabel {
    /// L_L^+ ∝ c_1, removal at the left end.
    LeftRemove,
    /// L_L^- ∝ c_1†, injection at the left end.
    LeftInject,
    /// L_R^+ ∝ c_N, removal at the right end.
    RightRemove,
    /// L_R^- ∝ c_N†, injection at the right end.
    RightInject,
    /// √γ(1 − 2n_j) on site j (1-based).
    Dephasing(usize),
}

impl fmt::Display for JumpLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpLabel::LeftRemove => write!(f, "L_L^+"),
            JumpLabel::LeftInject => write!(f, "L_L^-"),
            JumpLabel::RightRemove => write!(f, "L_R^+"),
            JumpLabel::RightInject => write!(f, "L_R^-"),
            JumpLabel::Dephasing(j) => write!(f, "L_d({j})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct JumpOperator {
    pub label: JumpLabel,
    pub matrix: OperatorMatrix,
}

/// Boundary rates (prefactors squared) in the order L_L^+, L_L^-, L_R^+, L_R^-.
pub fn boundary_rates(params: &ChainParameters) -> [f64; 4] {
    let g = params.coupling;
    let f = params.bias;
    [
        0.5 * g * (1.0 - f),
        0.5 * g * (1.0 + f),
        0.5 * g * (1.0 + f),
        0.5 * g * (1.0 - f),
    ]
}

fn check_cap(n_sites: usize, cap: usize) -> Result<()> {
    if n_sites > cap {
        return Err(Error::TooLarge {
            what: "dense 2^N basis",
            n_sites,
            cap,
        });
    }
    Ok(())
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Diagonal part of H for one configuration.
pub fn diagonal_energy(params: &ChainParameters, config: usize) -> f64 {
    let n = params.n_sites;
    let occ = |j: usize| basis::is_occupied(config, n, j) as u8 as f64;
    let mut e = 0.0;
    for j in 1..n {
        e += params.interaction * (occ(j) - 0.5) * (occ(j + 1) - 0.5);
    }
    if params.staggered != 0.0 {
        for j in 1..=n {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            e += params.staggered * sign * occ(j);
        }
    }
    e
}

/// H = Σ_j [½τ(c†_j c_{j+1} + h.c.) + Δ(n_j − ½)(n_{j+1} − ½)] + B Σ_j (−1)^j n_j.
pub fn build_hamiltonian(params: &ChainParameters) -> Result<OperatorMatrix> {
    build_hamiltonian_capped(params, DEFAULT_HAMILTONIAN_CAP)
}

pub fn build_hamiltonian_capped(params: &ChainParameters, cap: usize) -> Result<OperatorMatrix> {
    params.validate()?;
    let n = params.n_sites;
    check_cap(n, cap)?;
    let dim = 1usize << n;
    let t = 0.5 * params.hopping;
    let mut trip = Vec::with_capacity(dim * n);
    for a in 0..dim {
        let e = diagonal_energy(params, a);
        if e != 0.0 {
            trip.push((a, a, real(e)));
        }
        for j in 1..n {
            let (mj, mk) = (site_mask(n, j), site_mask(n, j + 1));
            if (a & mj != 0) != (a & mk != 0) {
                trip.push((a ^ mj ^ mk, a, real(t)));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(dim, dim, trip))
}

/// c_j in the spin picture (no string).
pub fn annihilation_operator(site: usize, n_sites: usize) -> Result<OperatorMatrix> {
    check_site(site, n_sites)?;
    let dim = 1usize << n_sites;
    let m = site_mask(n_sites, site);
    Ok(SparseMatrix::from_triplets(
        dim,
        dim,
        (0..dim).filter(|a| a & m != 0).map(|a| (a ^ m, a, real(1.0))),
    ))
}

pub fn creation_operator(site: usize, n_sites: usize) -> Result<OperatorMatrix> {
    Ok(annihilation_operator(site, n_sites)?.adjoint())
}

/// The four boundary operators followed by N dephasing operators (none when γ = 0).
pub fn build_jump_operators(params: &ChainParameters) -> Result<Vec<JumpOperator>> {
    params.validate()?;
    let n = params.n_sites;
    check_cap(n, DEFAULT_HAMILTONIAN_CAP)?;
    let rates = boundary_rates(params);
    let c1 = annihilation_operator(1, n)?;
    let cn = annihilation_operator(n, n)?;
    let mut out = vec![
        JumpOperator {
            label: JumpLabel::LeftRemove,
            matrix: c1.scale(real(rates[0].sqrt())),
        },
        JumpOperator {
            label: JumpLabel::LeftInject,
            matrix: c1.adjoint().scale(real(rates[1].sqrt())),
        },
        JumpOperator {
            label: JumpLabel::RightRemove,
            matrix: cn.scale(real(rates[2].sqrt())),
        },
        JumpOperator {
            label: JumpLabel::RightInject,
            matrix: cn.adjoint().scale(real(rates[3].sqrt())),
        },
    ];
    if params.dephasing > 0.0 {
        let s = params.dephasing.sqrt();
        let dim = 1usize << n;
        for j in 1..=n {
            let m = site_mask(n, j);
            let diag: Vec<C64> = (0..dim)
                .map(|a| real(if a & m != 0 { -s } else { s }))
                .collect();
            out.push(JumpOperator {
                label: JumpLabel::Dephasing(j),
                matrix: SparseMatrix::diagonal(&diag),
            });
        }
    }
    Ok(out)
}

fn check_site(site: usize, n_sites: usize) -> Result<()> {
    if n_sites < 1 || n_sites > MAX_SITES {
        return Err(invalid(format!("n_sites = {n_sites} out of range")));
    }
    if site < 1 || site > n_sites {
        return Err(Error::IndexOutOfRange(format!(
            "site {site} not in 1..={n_sites}"
        )));
    }
    Ok(())
}

fn check_bond(bond: usize, n_sites: usize) -> Result<()> {
    if n_sites < 2 || n_sites > MAX_SITES {
        return Err(invalid(format!("n_sites = {n_sites} out of range")));
    }
    if bond < 1 || bond >= n_sites {
        return Err(Error::IndexOutOfRange(format!(
            "bond {bond} not in 1..={}",
            n_sites - 1
        )));
    }
    Ok(())
}

/// Bond current J_j = i(c†_{j+1} c_j − c†_j c_{j+1}).
///
/// The sign makes a particle flow from site 1 towards site N negative, so
/// J_1 |10> = i|01>.
pub fn current_operator(bond: usize, n_sites: usize) -> Result<OperatorMatrix> {
    check_bond(bond, n_sites)?;
    check_cap(n_sites, DEFAULT_HAMILTONIAN_CAP)?;
    let dim = 1usize << n_sites;
    let (mj, mk) = (site_mask(n_sites, bond), site_mask(n_sites, bond + 1));
    let trip = (0..dim).filter_map(|a| {
        let (oj, ok) = (a & mj != 0, a & mk != 0);
        match (oj, ok) {
            (true, false) => Some((a ^ mj ^ mk, a, C64::new(0.0, 1.0))),
            (false, true) => Some((a ^ mj ^ mk, a, C64::new(0.0, -1.0))),
            _ => None,
        }
    });
    Ok(SparseMatrix::from_triplets(dim, dim, trip))
}

pub fn number_operator(site: usize, n_sites: usize) -> Result<OperatorMatrix> {
    check_site(site, n_sites)?;
    check_cap(n_sites, DEFAULT_HAMILTONIAN_CAP)?;
    let dim = 1usize << n_sites;
    let m = site_mask(n_sites, site);
    Ok(SparseMatrix::from_triplets(
        dim,
        dim,
        (0..dim).filter(|a| a & m != 0).map(|a| (a, a, real(1.0))),
    ))
}

pub fn total_number_operator(n_sites: usize) -> Result<OperatorMatrix> {
    check_cap(n_sites, DEFAULT_HAMILTONIAN_CAP)?;
    let dim = 1usize << n_sites;
    Ok(SparseMatrix::from_triplets(
        dim,
        dim,
        (0..dim).map(|a| (a, a, real(basis::particle_count(a) as f64))),
    ))
}

/// Σ_j (c†_j c_{j+1} + h.c.).
pub fn kinetic_operator(n_sites: usize) -> Result<OperatorMatrix> {
    if n_sites < 2 {
        return Err(invalid("kinetic operator needs at least two sites"));
    }
    check_cap(n_sites, DEFAULT_HAMILTONIAN_CAP)?;
    let dim = 1usize << n_sites;
    let mut trip = Vec::new();
    for a in 0..dim {
        for j in 1..n_sites {
            let (mj, mk) = (site_mask(n_sites, j), site_mask(n_sites, j + 1));
            if (a & mj != 0) != (a & mk != 0) {
                trip.push((a ^ mj ^ mk, a, real(1.0)));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(dim, dim, trip))
}

/// Particle-hole conjugation combined with the reflection j -> N + 1 - j.
pub fn particle_hole_reflection(config: usize, n_sites: usize) -> usize {
    let mut out = 0;
    for j in 1..=n_sites {
        if !basis::is_occupied(config, n_sites, j) {
            out |= site_mask(n_sites, n_sites + 1 - j);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_hopping() {
        let p = ChainParameters::new(2, 0.0, 0.0, 0.0);
        let h = build_hamiltonian(&p).unwrap().to_dense();
        assert_eq!(h[[1, 2]], real(0.5));
        assert_eq!(h[[2, 1]], real(0.5));
        assert_eq!(h.iter().filter(|v| v.norm() > 0.0).count(), 2);
    }

    #[test]
    fn two_site_interaction() {
        // The diagonal does not depend on τ, which must stay nonzero.
        let p = ChainParameters::new(2, 2.0, 0.0, 0.0);
        let h = build_hamiltonian(&p).unwrap().to_dense();
        assert_eq!(h[[0, 0]].re, 0.5);
        assert_eq!(h[[3, 3]].re, 0.5);
        assert_eq!(h[[1, 1]].re, -0.5);
        assert_eq!(h[[2, 2]].re, -0.5);
    }

    #[test]
    fn zero_hopping_rejected() {
        let mut p = ChainParameters::new(2, 2.0, 0.0, 0.0);
        p.hopping = 0.0;
        assert!(build_hamiltonian(&p).is_err());
    }

    #[test]
    fn cap_enforced() {
        let p = ChainParameters::new(15, 1.0, 0.0, 0.0);
        assert!(matches!(build_hamiltonian(&p), Err(Error::TooLarge { .. })));
        assert!(build_hamiltonian_capped(&ChainParameters::new(5, 1.0, 0.0, 0.0), 4).is_err());
    }

    #[test]
    fn jump_counts_and_rates() {
        let p = ChainParameters::new(4, 1.0, 0.0, 0.0);
        let jumps = build_jump_operators(&p).unwrap();
        assert_eq!(jumps.len(), 4);
        for j in &jumps {
            assert!((j.matrix.max_abs() - 0.5f64.sqrt()).abs() < 1e-15);
        }
        let p = ChainParameters::new(4, 1.0, 1.0, 0.3);
        let jumps = build_jump_operators(&p).unwrap();
        assert_eq!(jumps.len(), 8);
        assert_eq!(jumps[0].matrix.nnz(), 0);
        assert_eq!(jumps[3].matrix.nnz(), 0);
        assert!((jumps[1].matrix.max_abs() - 1.0).abs() < 1e-15);
        assert!((jumps[2].matrix.max_abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn current_matrix_action() {
        let j = current_operator(1, 2).unwrap().to_dense();
        // |10> is index 2, |01> is index 1.
        assert_eq!(j[[1, 2]], C64::new(0.0, 1.0));
        assert_eq!(j[[2, 1]], C64::new(0.0, -1.0));
        assert!(current_operator(0, 3).is_err());
        assert!(current_operator(3, 3).is_err());
        assert!(current_operator(2, 3).unwrap().hermiticity_error() < 1e-15);
    }

    #[test]
    fn number_and_kinetic() {
        let n2 = number_operator(2, 3).unwrap();
        assert_eq!(n2.get(0b010, 0b010), real(1.0));
        assert_eq!(n2.get(0b101, 0b101), real(0.0));
        let k = kinetic_operator(4).unwrap();
        assert_eq!(k.row(0).count(), 0);
        let tr: f64 = (0..8).map(|a| n2.get(a, a).re).sum::<f64>() / 8.0;
        assert_eq!(tr, 0.5);
        assert!(number_operator(4, 3).is_err());
    }

    #[test]
    fn particle_hole_reflection_is_involution() {
        for c in 0..64 {
            assert_eq!(particle_hole_reflection(particle_hole_reflection(c, 6), 6), c);
        }
        assert_eq!(particle_hole_reflection(0b1100, 4), 0b1100);
    }
}
