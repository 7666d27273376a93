//! Closed-form and perturbative reference values for the chain.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Parameters shared by the perturbative predictions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionInputs {
    pub n_sites: usize,
    pub interaction: f64,
    pub coupling: f64,
    pub bias: f64,
    pub dephasing: f64,
}

impl PredictionInputs {
    pub fn delta0_current(&self) -> f64 {
        delta0_current(self.n_sites, self.bias, self.coupling, self.dephasing)
    }

    pub fn purity(&self) -> Result<f64> {
        purity_prediction(self.interaction)
    }

    pub fn localization_length(&self) -> Result<f64> {
        localization_length(self.interaction)
    }
}

/// Published closed form for the non-interacting current,
/// −2f / (Γ/4 + 4/Γ + (N−1)γ).
pub fn delta0_current(n_sites: usize, bias: f64, coupling: f64, dephasing: f64) -> f64 {
    let n = n_sites as f64;
    -2.0 * bias / (coupling / 4.0 + 4.0 / coupling + (n - 1.0) * dephasing)
}

/// Non-interacting current of the chain as built in [`crate::model`] with
/// hopping amplitude ½τ: −fτ / (τ²/Γ + Γ + 4γ(N−1)).
///
/// Obtained from the closed equations of motion for the two-point function,
/// which are exact at Δ = 0. Differs from [`delta0_current`] by a factor 2
/// at τ = 4 and by a non-constant factor elsewhere.
pub fn delta0_current_model(
    n_sites: usize,
    bias: f64,
    coupling: f64,
    dephasing: f64,
    hopping: f64,
) -> f64 {
    let n = n_sites as f64;
    -bias * hopping / (hopping * hopping / coupling + coupling + 4.0 * dephasing * (n - 1.0))
}

fn check_interaction(delta: f64, floor: f64) -> Result<()> {
    if delta.is_finite() && delta.abs() > floor {
        Ok(())
    } else {
        Err(invalid(format!("prediction needs |Δ| > {floor}, got {delta}")))
    }
}

/// Particle-hole deviation δ_n(j) of the domain eigenstate from B_n at site j
/// (1-based): |2Δ|^{−2(n−j+1)} inside the domain, |2Δ|^{−2(j−n)} outside.
pub fn domain_deviation(n: usize, n_sites: usize, interaction: f64, site: usize) -> Result<f64> {
    if site < 1 || site > n_sites {
        return Err(Error::IndexOutOfRange(format!("site {site} outside 1..={n_sites}")));
    }
    if n > n_sites {
        return Err(Error::IndexOutOfRange(format!("domain size {n} exceeds {n_sites} sites")));
    }
    check_interaction(interaction, 0.5)?;
    let x = 1.0 / (2.0 * interaction.abs());
    let exponent = if site <= n { 2 * (n - site + 1) } else { 2 * (site - n) };
    Ok(x.powi(exponent as i32))
}

fn normalize(mut p: Vec<f64>) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// p_n ∝ |2Δ|^{−2|n−N/2|²}, normalized over n = 0..=N.
pub fn sector_probs_closed_form(n_sites: usize, interaction: f64) -> Result<Vec<f64>> {
    check_interaction(interaction, 0.5)?;
    let ln_x = -(2.0 * interaction.abs()).ln();
    let half = n_sites as f64 / 2.0;
    let p = (0..=n_sites)
        .map(|n| {
            let d = n as f64 - half;
            (2.0 * d * d * ln_x).exp()
        })
        .collect();
    Ok(normalize(p))
}

/// Stationary sector weights of the birth–death chain in which sector n gains
/// a particle at rate |2Δ|^{−2n} and loses one at rate |2Δ|^{−2(N−n)}.
///
/// Ratios are accumulated in log space from both ends towards the centre and
/// joined there, so extreme Δ does not underflow.
pub fn sector_probs_detailed_balance(n_sites: usize, interaction: f64) -> Result<Vec<f64>> {
    check_interaction(interaction, 0.5)?;
    let ln_x = -(2.0 * interaction.abs()).ln();
    let nn = n_sites as i64;
    let ln_birth = |n: i64| 2.0 * n as f64 * ln_x;
    let ln_death = |n: i64| 2.0 * (nn - n) as f64 * ln_x;
    let mid = nn / 2;
    let mut lp = vec![0.0; n_sites + 1];
    // p_{n+1} d_{n+1} = p_n b_n, from n = 0 up to the centre.
    for n in 0..mid {
        lp[(n + 1) as usize] = lp[n as usize] + ln_birth(n) - ln_death(n + 1);
    }
    // p_{n−1} b_{n−1} = p_n d_n, from n = N down to the centre.
    let mut upper = vec![0.0; n_sites + 1];
    for n in ((mid + 1)..=nn).rev() {
        upper[(n - 1) as usize] = upper[n as usize] + ln_death(n) - ln_birth(n - 1);
    }
    let shift = lp[mid as usize] - upper[mid as usize];
    for n in (mid + 1)..=nn {
        lp[n as usize] = upper[n as usize] + shift;
    }
    let peak = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let p: Vec<f64> = lp.iter().map(|v| (v - peak).exp()).collect();
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Linalg("sector balance produced non-finite weights".into()));
    }
    Ok(normalize(p))
}

/// Leading-order purity tr(ρ²) ≈ 1 − 1/Δ².
pub fn purity_prediction(interaction: f64) -> Result<f64> {
    check_interaction(interaction, 1.0)?;
    Ok(1.0 - 1.0 / (interaction * interaction))
}

/// Localization length ξ = 1/ln|2Δ| of the domain-wall eigenstates.
pub fn localization_length(interaction: f64) -> Result<f64> {
    check_interaction(interaction, 0.5)?;
    Ok(1.0 / (2.0 * interaction.abs()).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn delta0_arithmetic() {
        assert_relative_eq!(delta0_current(5, 0.5, 1.0, 0.1), -1.0 / 4.65, max_relative = 1e-12);
        assert_eq!(delta0_current(5, 0.0, 1.0, 0.1), 0.0);
        assert_eq!(delta0_current(3, 0.5, 1.0, 0.0), delta0_current(9, 0.5, 1.0, 0.0));
    }

    #[test]
    fn model_formula_is_twice_published_at_tau_four() {
        for &(n, f, g, gamma) in &[(3, 0.5, 1.0, 0.1), (5, 1.0, 2.0, 0.0), (4, 0.25, 0.5, 1.0)] {
            assert_relative_eq!(
                delta0_current(n, f, g, gamma),
                2.0 * delta0_current_model(n, f, g, gamma, 4.0),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn deviation_values() {
        assert_relative_eq!(domain_deviation(6, 12, 10.0, 7).unwrap(), 2.5e-3);
        assert_relative_eq!(domain_deviation(6, 12, 10.0, 6).unwrap(), 2.5e-3);
        assert_relative_eq!(domain_deviation(6, 12, 10.0, 1).unwrap(), 0.05f64.powi(12));
        assert!(domain_deviation(6, 12, 10.0, 0).is_err());
        assert!(domain_deviation(6, 12, 10.0, 13).is_err());
        assert!(domain_deviation(13, 12, 10.0, 3).is_err());
    }

    #[test]
    fn balance_agrees_with_closed_form() {
        for n in [4, 5, 6, 9] {
            let a = sector_probs_closed_form(n, 10.0).unwrap();
            let b = sector_probs_detailed_balance(n, 10.0).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_relative_eq!(x, y, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn balance_solves_the_rate_equations() {
        let (n_sites, delta) = (6usize, 3.0f64);
        let p = sector_probs_detailed_balance(n_sites, delta).unwrap();
        let x = 1.0 / (2.0 * delta);
        let b = |n: usize| x.powi(2 * n as i32);
        let d = |n: usize| x.powi(2 * (n_sites - n) as i32);
        for n in 1..n_sites {
            let out = p[n] * (b(n) + d(n));
            let inflow = p[n - 1] * b(n - 1) + p[n + 1] * d(n + 1);
            assert_relative_eq!(out, inflow, max_relative = 1e-10);
        }
    }

    #[test]
    fn purity_and_length() {
        assert_relative_eq!(1.0 - purity_prediction(10.0).unwrap(), 0.01, max_relative = 1e-12);
        assert_relative_eq!(localization_length(10.0).unwrap(), 1.0 / 20f64.ln());
        assert!(purity_prediction(0.5).is_err());
    }
}
