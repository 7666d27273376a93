//! Expectation values by contraction with trace environments.

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64 as C64;

use super::{MpoState, PHYS};
use crate::error::{Error, Result};
use crate::exact::observables::schmidt_entropy;
use crate::exact::ObservableRecord;
use crate::model::ChainParameters;

/// Physical-index vector o with tr(O ρ_site) = Σ_p o_p A_p, i.e. o[2a+b] = O_ba.
pub fn operator_vector(op: &Array2<C64>) -> [C64; 4] {
    let mut o = [C64::new(0.0, 0.0); 4];
    for a in 0..2 {
        for b in 0..2 {
            o[2 * a + b] = op[[b, a]];
        }
    }
    o
}

/// Two-site version: o[p][q] = O[(b_s b_t), (a_s a_t)] with p = 2a_s + b_s, q = 2a_t + b_t.
pub fn two_site_operator_matrix(op: &Array2<C64>) -> [[C64; 4]; 4] {
    let mut o = [[C64::new(0.0, 0.0); 4]; 4];
    for p in 0..4 {
        for q in 0..4 {
            let (a_s, b_s, a_t, b_t) = (p >> 1, p & 1, q >> 1, q & 1);
            o[p][q] = op[[2 * b_s + b_t, 2 * a_s + a_t]];
        }
    }
    o
}

const TRACE: [f64; 4] = [1.0, 0.0, 0.0, 1.0];
const NUMBER: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

fn transfer<T: Copy + Into<C64>>(a: &Array3<C64>, v: &[T; 4]) -> Array2<C64> {
    let (l, _, r) = a.dim();
    let mut m = Array2::zeros((l, r));
    for p in 0..PHYS {
        let w: C64 = v[p].into();
        if w != C64::new(0.0, 0.0) {
            m.scaled_add(w, &a.index_axis(ndarray::Axis(1), p));
        }
    }
    m
}

struct Environments {
    left: Vec<Array1<C64>>,
    right: Vec<Array1<C64>>,
    traces: Vec<Array2<C64>>,
}

impl Environments {
    fn new(state: &MpoState) -> Self {
        let n = state.n_sites();
        let traces: Vec<Array2<C64>> = state.tensors().iter().map(|a| transfer(a, &TRACE)).collect();
        let mut left = vec![Array1::from_elem(1, C64::new(1.0, 0.0))];
        for t in &traces {
            let next = left.last().unwrap().dot(t);
            left.push(next);
        }
        let mut right = vec![Array1::from_elem(1, C64::new(1.0, 0.0)); n + 1];
        for j in (0..n).rev() {
            right[j] = traces[j].dot(&right[j + 1]);
        }
        Self { left, right, traces }
    }

    fn trace(&self) -> C64 {
        self.left.last().unwrap()[0]
    }

    fn site(&self, state: &MpoState, j: usize, o: &[C64; 4]) -> C64 {
        self.left[j].dot(&transfer(&state.tensors()[j], o)).dot(&self.right[j + 1])
    }

    fn bond(&self, state: &MpoState, j: usize, o: &[[C64; 4]; 4]) -> C64 {
        let (a, b) = (&state.tensors()[j], &state.tensors()[j + 1]);
        let x: Vec<Array1<C64>> =
            (0..PHYS).map(|p| self.left[j].dot(&a.index_axis(ndarray::Axis(1), p))).collect();
        let mut total = C64::new(0.0, 0.0);
        for q in 0..PHYS {
            let mut row = Array1::<C64>::zeros(x[0].len());
            for p in 0..PHYS {
                if o[p][q] != C64::new(0.0, 0.0) {
                    row.scaled_add(o[p][q], &x[p]);
                }
            }
            total += row.dot(&b.index_axis(ndarray::Axis(1), q)).dot(&self.right[j + 2]);
        }
        total
    }
}

fn current_matrix() -> [[C64; 4]; 4] {
    let mut j = Array2::<C64>::zeros((4, 4));
    j[[1, 2]] = C64::new(0.0, 1.0);
    j[[2, 1]] = C64::new(0.0, -1.0);
    two_site_operator_matrix(&j)
}

fn kinetic_matrix() -> [[C64; 4]; 4] {
    let mut k = Array2::<C64>::zeros((4, 4));
    k[[1, 2]] = C64::new(1.0, 0.0);
    k[[2, 1]] = C64::new(1.0, 0.0);
    two_site_operator_matrix(&k)
}

/// ⟨J_j⟩ for every bond, normalized by tr ρ.
pub(crate) fn current_profile(state: &MpoState) -> Vec<f64> {
    let env = Environments::new(state);
    let tr = env.trace();
    let jm = current_matrix();
    (0..state.n_sites() - 1).map(|j| (env.bond(state, j, &jm) / tr).re).collect()
}

/// Probability of each particle-number block from the generating function
/// Z(z) = tr(ρ Π_j z^{n_j}) sampled on the (N+1)-th roots of unity.
fn sector_probs(state: &MpoState, tr: C64) -> Vec<f64> {
    let n = state.n_sites();
    let m = n + 1;
    let z: Vec<C64> = (0..m)
        .map(|k| {
            let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            let v = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), w];
            let mut env = Array1::from_elem(1, C64::new(1.0, 0.0));
            for a in state.tensors() {
                env = env.dot(&transfer(a, &v));
            }
            env[0] / tr
        })
        .collect();
    (0..=n)
        .map(|s| {
            let acc: C64 = (0..m)
                .map(|k| {
                    z[k] * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * s) as f64 / m as f64)
                })
                .sum();
            acc.re / m as f64
        })
        .collect()
}

/// Observables of an MPO state, matching the dense `measure` conventions.
pub fn measure_mpo(state: &MpoState, params: &ChainParameters) -> Result<ObservableRecord> {
    let n = state.n_sites();
    if params.n_sites != n {
        return Err(Error::DimensionMismatch(format!(
            "MPO on {n} sites measured with parameters for {}",
            params.n_sites
        )));
    }
    let env = Environments::new(state);
    let tr = env.trace();
    if tr.norm() < 1e-300 {
        return Err(Error::InvalidState("MPO has vanishing trace".into()));
    }
    let num: [C64; 4] = NUMBER.map(|v| C64::new(v, 0.0));
    let density: Vec<f64> = (0..n).map(|j| (env.site(state, j, &num) / tr).re).collect();

    let mut correlations = vec![vec![0.0; n]; n];
    for i in 0..n {
        correlations[i][i] = density[i] - density[i] * density[i];
        let mut v = env.left[i].dot(&transfer(&state.tensors()[i], &NUMBER));
        for j in i + 1..n {
            let nn = v.dot(&transfer(&state.tensors()[j], &NUMBER)).dot(&env.right[j + 1]) / tr;
            let c = nn.re - density[i] * density[j];
            correlations[i][j] = c;
            correlations[j][i] = c;
            v = v.dot(&env.traces[j]);
        }
    }

    let jm = current_matrix();
    let km = kinetic_matrix();
    let current_profile: Vec<f64> = (0..n - 1).map(|j| (env.bond(state, j, &jm) / tr).re).collect();
    let kinetic: f64 = (0..n - 1).map(|j| (env.bond(state, j, &km) / tr).re).sum();
    let current = current_profile.iter().sum::<f64>() / current_profile.len() as f64;

    let mut work = state.clone();
    let spectrum = work.center_spectrum()?;
    Ok(ObservableRecord {
        current,
        current_profile,
        density_profile: density,
        correlations,
        entropy: schmidt_entropy(&spectrum),
        purity: state.frobenius_norm_sqr() / tr.norm_sqr(),
        sector_probs: sector_probs(state, tr),
        dissipation: -2.0 * params.dephasing * kinetic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{measure, DensityMatrix};
    use crate::mpo::TruncationPolicy;

    #[test]
    fn matches_dense_measurement() {
        let p = ChainParameters::new(5, 1.0, 0.5, 0.3);
        let rho = DensityMatrix::random(32, 11);
        let mpo = MpoState::from_dense(&rho, &TruncationPolicy::new(1024, 0.0)).unwrap();
        let a = measure(&rho, &p).unwrap();
        let b = measure_mpo(&mpo, &p).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() < 1e-10;
        assert!(close(a.current, b.current));
        assert!(close(a.entropy, b.entropy), "{} {}", a.entropy, b.entropy);
        assert!(close(a.purity, b.purity));
        assert!(close(a.dissipation, b.dissipation));
        for j in 0..5 {
            assert!(close(a.density_profile[j], b.density_profile[j]));
            for k in 0..5 {
                assert!(close(a.correlations[j][k], b.correlations[j][k]));
            }
        }
        for (x, y) in a.current_profile.iter().zip(&b.current_profile) {
            assert!(close(*x, *y));
        }
        for (x, y) in a.sector_probs.iter().zip(&b.sector_probs) {
            assert!(close(*x, *y));
        }
    }
}
