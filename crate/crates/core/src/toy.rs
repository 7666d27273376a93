//! The (K+1)-state toy model: a tight-binding ladder |1⟩..|K⟩ with the top
//! rung raised by Δ, plus an auxiliary state |s⟩ through which the boundary
//! pumping passes.
//!
//! Index layout: |k⟩ is row k−1 and |s⟩ is row K.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, EigValsh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::ness::ness_nullspace;
use crate::exact::superop::vectorize;
use crate::exact::{DensityMatrix, SparseSuperoperator};
use crate::model::OperatorMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyParameters {
    /// Number of configuration states K.
    pub n_levels: usize,
    pub interaction: f64,
    #[serde(default = "one")]
    pub coupling: f64,
    pub bias: f64,
    #[serde(default)]
    pub dephasing: f64,
}

fn one() -> f64 {
    1.0
}

impl ToyParameters {
    pub fn new(n_levels: usize, interaction: f64, coupling: f64, bias: f64, dephasing: f64) -> Self {
        Self { n_levels, interaction, coupling, bias, dephasing }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_levels < 2 {
            return Err(invalid(format!("toy model needs K ≥ 2, got {}", self.n_levels)));
        }
        if !self.interaction.is_finite() {
            return Err(invalid("interaction must be finite"));
        }
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return Err(invalid(format!("coupling must be positive, got {}", self.coupling)));
        }
        if !(0.0..=1.0).contains(&self.bias) {
            return Err(invalid(format!("bias must lie in [0, 1], got {}", self.bias)));
        }
        if !(self.dephasing.is_finite() && self.dephasing >= 0.0) {
            return Err(invalid(format!("dephasing must be non-negative, got {}", self.dephasing)));
        }
        Ok(())
    }

    fn dim(&self) -> usize {
        self.n_levels + 1
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// H_t = ½ Σ_k (|k⟩⟨k+1| + h.c.) + Δ|K⟩⟨K| on the K+1 states; |s⟩ has energy 0.
pub fn toy_hamiltonian(n_levels: usize, interaction: f64) -> OperatorMatrix {
    let d = n_levels + 1;
    let mut t = Vec::with_capacity(2 * n_levels + 1);
    for k in 0..n_levels - 1 {
        t.push((k, k + 1, re(0.5)));
        t.push((k + 1, k, re(0.5)));
    }
    t.push((n_levels - 1, n_levels - 1, re(interaction)));
    OperatorMatrix::from_triplets(d, d, t)
}

/// Jumps in the order L_L^+, L_L^−, L_R^+, L_R^−, then L_Z when γ > 0.
pub fn toy_jumps(params: &ToyParameters) -> Result<Vec<OperatorMatrix>> {
    params.validate()?;
    let k = params.n_levels;
    let d = params.dim();
    let (g, f) = (params.coupling, params.bias);
    let s = k;
    let top = k - 1;
    let single = |r: usize, c: usize, rate: f64| {
        OperatorMatrix::from_triplets(d, d, [(r, c, re(rate.sqrt()))])
    };
    let mut out = vec![
        single(0, s, 0.5 * g * (1.0 - f)),
        single(s, 0, 0.5 * g * (1.0 + f)),
        single(top, s, 0.5 * g * (1.0 + f)),
        single(s, top, 0.5 * g * (1.0 - f)),
    ];
    if params.dephasing > 0.0 {
        let a = params.dephasing.sqrt();
        out.push(OperatorMatrix::from_triplets(
            d,
            d,
            (0..d).map(|i| (i, i, re(if i == top { -a } else { a }))),
        ));
    }
    Ok(out)
}

/// J = −i Σ_k (|k⟩⟨k+1| − |k+1⟩⟨k|). Positive when population flows from
/// |K⟩ towards |1⟩, which is the direction forward pumping feeds.
pub fn toy_current_operator(n_levels: usize) -> OperatorMatrix {
    let d = n_levels + 1;
    let mut t = Vec::with_capacity(2 * n_levels);
    for k in 0..n_levels - 1 {
        t.push((k, k + 1, C64::new(0.0, -1.0)));
        t.push((k + 1, k, C64::new(0.0, 1.0)));
    }
    OperatorMatrix::from_triplets(d, d, t)
}

pub fn toy_generator(params: &ToyParameters) -> Result<SparseSuperoperator> {
    let h = toy_hamiltonian(params.n_levels, params.interaction);
    vectorize(&h, &toy_jumps(params)?)
}

pub fn toy_ness(params: &ToyParameters) -> Result<DensityMatrix> {
    let (rho, _) = ness_nullspace(&toy_generator(params)?)?;
    Ok(rho)
}

pub fn toy_ness_current(params: &ToyParameters) -> Result<f64> {
    let rho = toy_ness(params)?;
    Ok(rho.expectation(&toy_current_operator(params.n_levels)).re)
}

/// Large-Δ closed form of the steady-state current, evaluated as written.
pub fn toy_closed_form(params: &ToyParameters) -> f64 {
    let k = params.n_levels as f64;
    let (f, g, gamma) = (params.bias, params.coupling, params.dephasing);
    let num = (k - 1.0) * (8.0 * gamma * f + (1.0 - f) * f * g);
    let den = (k + 1.0) - 2.0 * (k - 2.0) * f + (k - 1.0) * f * f;
    num / den / (params.interaction * params.interaction)
}

/// Eigenvalues of the toy Hamiltonian on all K+1 states, ascending.
pub fn toy_spectrum(n_levels: usize, interaction: f64) -> Result<Vec<f64>> {
    if n_levels < 2 {
        return Err(invalid("toy model needs K ≥ 2"));
    }
    let h = toy_hamiltonian(n_levels, interaction).to_dense();
    Ok(h.eigvalsh(UPLO::Upper)?.to_vec())
}

/// Normalized ansatz Σ_k (2Δ)^{−k} |K−k⟩ over the K configuration states.
///
/// The sign of each amplitude follows first-order perturbation theory; the
/// magnitudes are |2Δ|^{−k} either way.
pub fn toy_dark_state(n_levels: usize, interaction: f64) -> Result<Array1<f64>> {
    if n_levels < 2 {
        return Err(invalid("toy model needs K ≥ 2"));
    }
    if !(interaction.abs() > 0.5) {
        return Err(invalid(format!("dark-state ansatz needs |Δ| > 1/2, got {interaction}")));
    }
    let ratio = 1.0 / (2.0 * interaction);
    let mut v = Array1::zeros(n_levels);
    let mut amp = 1.0;
    for k in 0..n_levels {
        v[n_levels - 1 - k] = amp;
        amp *= ratio;
    }
    let norm = v.dot(&v).sqrt();
    Ok(v / norm)
}

/// |⟨ansatz|ψ⟩| with ψ the extremal eigenvector of the ladder Hamiltonian
/// (top for Δ > 0, bottom for Δ < 0).
pub fn dark_state_overlap(n_levels: usize, interaction: f64) -> Result<f64> {
    let ansatz = toy_dark_state(n_levels, interaction)?;
    let h = toy_hamiltonian(n_levels, interaction).to_dense();
    let ladder: Array2<C64> = h.slice(ndarray::s![..n_levels, ..n_levels]).to_owned();
    let (_, vecs) = ladder.eigh(UPLO::Upper)?;
    let col = if interaction > 0.0 { n_levels - 1 } else { 0 };
    let overlap: C64 = (0..n_levels).map(|i| vecs[[i, col]] * ansatz[i]).sum();
    Ok(overlap.norm())
}

/// One row of the dephasing ↔ backward-pumping comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceRow {
    pub dephasing: f64,
    pub equivalent_bias: f64,
    /// Current at f = 1 with dephasing γ.
    pub current_dephased: f64,
    /// Current at f = 1 − 8γ/Γ without dephasing.
    pub current_pumped: f64,
    pub relative_mismatch: f64,
}

/// Compares dephasing at full bias with the equivalent reduced bias.
pub fn correspondence_check(
    n_levels: usize,
    interaction: f64,
    coupling: f64,
    gammas: &[f64],
) -> Result<Vec<CorrespondenceRow>> {
    gammas
        .iter()
        .map(|&gamma| {
            let f = 1.0 - 8.0 * gamma / coupling;
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidParameter(format!(
                    "γ = {gamma} maps to bias {f} outside [0, 1] for Γ = {coupling}"
                )));
            }
            let dephased = ToyParameters::new(n_levels, interaction, coupling, 1.0, gamma);
            let pumped = ToyParameters::new(n_levels, interaction, coupling, f, 0.0);
            let a = toy_ness_current(&dephased)?;
            let b = toy_ness_current(&pumped)?;
            let scale = a.abs().max(b.abs());
            let mismatch = if scale == 0.0 { 0.0 } else { (a - b).abs() / scale };
            Ok(CorrespondenceRow {
                dephasing: gamma,
                equivalent_bias: f,
                current_dephased: a,
                current_pumped: b,
                relative_mismatch: mismatch,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unbiased_pumping_gives_identity() {
        let p = ToyParameters::new(5, 3.0, 1.0, 0.0, 0.2);
        let rho = toy_ness(&p).unwrap();
        let id = DensityMatrix::maximally_mixed(6);
        assert!(rho.trace_distance(&id).unwrap() < 1e-10);
        assert!(toy_ness_current(&p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn closed_form_limits() {
        let p = ToyParameters::new(20, 10.0, 0.1, 1.0, 0.01);
        assert!((toy_closed_form(&p) - 2.0 * 19.0 * 0.01 / 100.0).abs() < 1e-15);
        let p = ToyParameters::new(20, 10.0, 0.1, 0.0, 0.01);
        assert_eq!(toy_closed_form(&p), 0.0);
    }

    #[test]
    fn forward_pumping_gives_positive_current() {
        let p = ToyParameters::new(4, 3.0, 1.0, 0.5, 0.0);
        assert!(toy_ness_current(&p).unwrap() > 0.0);
    }

    #[test]
    fn ansatz_is_normalized_and_sign_blind() {
        let a = toy_dark_state(6, 4.0).unwrap();
        let b = toy_dark_state(6, -4.0).unwrap();
        assert!((a.dot(&a) - 1.0).abs() < 1e-14);
        for i in 0..6 {
            assert!((a[i].abs() - b[i].abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(ToyParameters::new(1, 1.0, 1.0, 0.5, 0.0).validate().is_err());
        assert!(ToyParameters::new(3, 1.0, 0.0, 0.5, 0.0).validate().is_err());
        assert!(ToyParameters::new(3, 1.0, 1.0, 1.5, 0.0).validate().is_err());
        assert!(correspondence_check(5, 10.0, 1.0, &[0.5]).is_err());
    }
}
