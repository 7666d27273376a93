//! Two-site Lindblad gates and the second-order Trotter sweep.

use ndarray::{s, Array2, Array4};
use num_complex::Complex64 as C64;

use super::{as_matrix, as_tensor, thin_svd, truncation_rank, MpoState, TruncationPolicy, PHYS};
use crate::error::{invalid, Error, Result};
use crate::linalg::{expm, kron};
use crate::model::{boundary_rates, ChainParameters};

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn single(entries: &[(usize, usize, f64)]) -> Array2<C64> {
    let mut m = Array2::zeros((2, 2));
    for &(i, j, v) in entries {
        m[[i, j]] = re(v);
    }
    m
}

/// Share of a site's single-site terms carried by each adjacent bond.
fn site_weight(site: usize, n_sites: usize) -> f64 {
    if site == 0 || site == n_sites - 1 {
        1.0
    } else {
        0.5
    }
}

/// Two-site generator on bond (b, b+1), 0-based, as a 16×16 matrix acting on
/// the coefficients ρ_{(a_s a_t),(b_s b_t)} stored at P = 4(2a_s + b_s) + 2a_t + b_t.
///
/// Hopping and interaction enter whole; single-site energies and dissipators
/// are split evenly between the two bonds touching an interior site.
pub fn local_generator(params: &ChainParameters, bond: usize) -> Result<Array2<C64>> {
    params.validate()?;
    let n = params.n_sites;
    if bond + 1 >= n {
        return Err(Error::IndexOutOfRange(format!("bond {bond} of {}", n - 1)));
    }
    let id = Array2::<C64>::eye(2);
    let num = single(&[(1, 1, 1.0)]);
    let annihilate = single(&[(0, 1, 1.0)]);
    let create = single(&[(1, 0, 1.0)]);
    let sites = [bond, bond + 1];
    let embed = |k: usize, op: &Array2<C64>| if k == 0 { kron(op, &id) } else { kron(&id, op) };

    // Hamiltonian on the local index A = 2a_s + a_t.
    let mut h = Array2::<C64>::zeros((4, 4));
    let t = 0.5 * params.hopping;
    h[[1, 2]] = re(t);
    h[[2, 1]] = re(t);
    for a in 0..4 {
        let (ns, nt) = ((a >> 1) as f64, (a & 1) as f64);
        h[[a, a]] += re(params.interaction * (ns - 0.5) * (nt - 0.5));
    }
    if params.staggered != 0.0 {
        for (k, &site) in sites.iter().enumerate() {
            let sign = if (site + 1) % 2 == 0 { 1.0 } else { -1.0 };
            let w = site_weight(site, n);
            h = h + embed(k, &num).mapv(|z| z * (w * sign * params.staggered));
        }
    }

    let rates = boundary_rates(params);
    let mut jumps: Vec<Array2<C64>> = Vec::new();
    if bond == 0 {
        jumps.push(embed(0, &annihilate).mapv(|z| z * rates[0].sqrt()));
        jumps.push(embed(0, &create).mapv(|z| z * rates[1].sqrt()));
    }
    if bond + 2 == n {
        jumps.push(embed(1, &annihilate).mapv(|z| z * rates[2].sqrt()));
        jumps.push(embed(1, &create).mapv(|z| z * rates[3].sqrt()));
    }
    if params.dephasing > 0.0 {
        let z = single(&[(0, 0, 1.0), (1, 1, -1.0)]);
        for (k, &site) in sites.iter().enumerate() {
            let amp = (params.dephasing * site_weight(site, n)).sqrt();
            jumps.push(embed(k, &z).mapv(|v| v * amp));
        }
    }
    let mut gain = Array2::<C64>::zeros((4, 4));
    for l in &jumps {
        gain = gain + l.t().mapv(|z| z.conj()).dot(l);
    }

    let idx = |a: usize, b: usize| 4 * (2 * (a >> 1) + (b >> 1)) + 2 * (a & 1) + (b & 1);
    let (mi, pi) = (C64::new(0.0, -1.0), C64::new(0.0, 1.0));
    let mut g = Array2::<C64>::zeros((16, 16));
    for a in 0..4 {
        for b in 0..4 {
            let row = idx(a, b);
            for c in 0..4 {
                for d in 0..4 {
                    let mut v = C64::new(0.0, 0.0);
                    if b == d {
                        v += mi * h[[a, c]] - 0.5 * gain[[a, c]];
                    }
                    if a == c {
                        v += pi * h[[d, b]] - 0.5 * gain[[d, b]];
                    }
                    for l in &jumps {
                        v += l[[a, c]] * l[[b, d]].conj();
                    }
                    g[[row, idx(c, d)]] = v;
                }
            }
        }
    }
    Ok(g)
}

/// Propagators exp(dt G_b) and exp(dt G_b / 2) for every bond.
#[derive(Clone, Debug)]
pub struct TrotterGates {
    dt: f64,
    full: Vec<Array2<C64>>,
    half: Vec<Array2<C64>>,
}

impl TrotterGates {
    pub fn new(params: &ChainParameters, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        let n = params.n_sites;
        if n < 2 {
            return Err(invalid("MPO evolution needs at least two sites"));
        }
        let mut full = Vec::with_capacity(n - 1);
        let mut half = Vec::with_capacity(n - 1);
        for b in 0..n - 1 {
            let g = local_generator(params, b)?;
            full.push(expm(&g.mapv(|z| z * dt)));
            half.push(expm(&g.mapv(|z| z * (0.5 * dt))));
        }
        Ok(Self { dt, full, half })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_sites(&self) -> usize {
        self.full.len() + 1
    }

    /// Advances `n_steps` Strang steps (A/2 B A/2 with A on bonds 0, 2, …),
    /// fusing the half steps of consecutive A layers.
    pub fn evolve(&self, state: &mut MpoState, n_steps: usize, policy: &TruncationPolicy) -> Result<()> {
        if state.n_sites() != self.n_sites() {
            return Err(Error::DimensionMismatch(format!(
                "gates for {} sites applied to an MPO on {}",
                self.n_sites(),
                state.n_sites()
            )));
        }
        if n_steps == 0 {
            return Ok(());
        }
        // An odd number of layers leaves the centre at the far end; starting every
        // call from site 0 keeps the sweep pattern, and so the truncation error,
        // the same from call to call.
        state.move_center(0)?;
        self.layer(state, 0, &self.half, policy)?;
        for k in 0..n_steps {
            self.layer(state, 1, &self.full, policy)?;
            let last = if k + 1 == n_steps { &self.half } else { &self.full };
            self.layer(state, 0, last, policy)?;
        }
        if policy.renormalize_trace {
            state.normalize_trace()?;
        }
        Ok(())
    }

    /// Applies every bond of one parity, sweeping away from the current centre.
    fn layer(
        &self,
        state: &mut MpoState,
        parity: usize,
        gates: &[Array2<C64>],
        policy: &TruncationPolicy,
    ) -> Result<()> {
        let bonds: Vec<usize> = (parity..gates.len()).step_by(2).collect();
        if bonds.is_empty() {
            return Ok(());
        }
        let first = bonds[0];
        let last = bonds[bonds.len() - 1];
        let rightwards = state.center().abs_diff(first) <= state.center().abs_diff(last + 1);
        if rightwards {
            for &b in &bonds {
                apply_gate(state, b, &gates[b], true, policy)?;
            }
        } else {
            for &b in bonds.iter().rev() {
                apply_gate(state, b, &gates[b], false, policy)?;
            }
        }
        Ok(())
    }
}

/// Applies a 16×16 gate to bond (b, b+1) and splits with a truncated SVD.
/// The centre ends on b+1 when `rightwards`, else on b.
pub(crate) fn apply_gate(
    state: &mut MpoState,
    bond: usize,
    gate: &Array2<C64>,
    rightwards: bool,
    policy: &TruncationPolicy,
) -> Result<()> {
    let target = if state.center() <= bond { bond } else { bond + 1 };
    state.move_center(target)?;
    let (l, _, m) = state.tensors()[bond].dim();
    let (_, _, r) = state.tensors()[bond + 1].dim();
    let theta = as_matrix(&state.tensors()[bond], l * PHYS, m)
        .dot(&as_matrix(&state.tensors()[bond + 1], m, PHYS * r));
    // (l, ps, pt, r) -> (ps pt, l r), gate, and back.
    let theta = theta
        .into_shape_with_order((l, PHYS, PHYS, r))
        .expect("contiguous theta")
        .permuted_axes([1, 2, 0, 3]);
    let flat = theta
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((PHYS * PHYS, l * r))
        .expect("reshape");
    let out: Array4<C64> =
        gate.dot(&flat).into_shape_with_order((PHYS, PHYS, l, r)).expect("reshape");
    let out = out.permuted_axes([2, 0, 1, 3]);
    let mat = out
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((l * PHYS, PHYS * r))
        .expect("reshape");

    let (u, sv, vt) = thin_svd(&mat)?;
    let (k, discarded, overflow) = truncation_rank(&sv, policy);
    state.stats_mut().record(discarded, overflow);
    let mut u = u.slice(s![.., ..k]).to_owned();
    let mut vt = vt.slice(s![..k, ..]).to_owned();
    if rightwards {
        for (i, mut row) in vt.rows_mut().into_iter().enumerate() {
            row.mapv_inplace(|z| z * sv[i]);
        }
    } else {
        for (i, mut col) in u.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|z| z * sv[i]);
        }
    }
    let tensors = state.tensors_mut();
    tensors[bond] = as_tensor(u, (l, PHYS, k));
    tensors[bond + 1] = as_tensor(vt, (k, PHYS, r));
    state.set_center(if rightwards { bond + 1 } else { bond });
    Ok(())
}

/// One second-order Trotter step of length dt.
pub fn trotter_sweep(
    mut state: MpoState,
    params: &ChainParameters,
    dt: f64,
    policy: &TruncationPolicy,
) -> Result<MpoState> {
    policy.validate()?;
    TrotterGates::new(params, dt)?.evolve(&mut state, 1, policy)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::superop::{chain_superoperator, Layout};
    use crate::mpo::mpo_identity;
    use crate::exact::DensityMatrix;

    /// Sum of embedded bond generators equals the full vectorized generator.
    #[test]
    fn bond_generators_sum_to_full_generator() {
        let p = ChainParameters::new(4, 1.3, 0.4, 0.2).with_staggered(0.3).with_coupling(0.7);
        let op = chain_superoperator(&p, Layout::Full, 10).unwrap();
        let rho = DensityMatrix::random(16, 3);
        let want = op.apply_to(&rho).unwrap();
        let pol = TruncationPolicy::new(256, 0.0);
        // Apply each bond generator as a non-unitary "gate" and sum.
        let mut total = Array2::<C64>::zeros((16, 16));
        for b in 0..3 {
            let g = local_generator(&p, b).unwrap();
            let mut state = MpoState::from_dense(&rho, &pol).unwrap();
            apply_gate(&mut state, b, &g, true, &pol).unwrap();
            total = total + state.to_dense().unwrap().matrix();
        }
        let err = (&total - &want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn identity_is_fixed_at_zero_bias() {
        let p = ChainParameters::new(6, 2.0, 0.0, 0.0);
        let pol = TruncationPolicy::default();
        let gates = TrotterGates::new(&p, 0.1).unwrap();
        let mut state = mpo_identity(6).unwrap();
        gates.evolve(&mut state, 20, &pol).unwrap();
        let d = state.to_dense().unwrap();
        assert!(d.trace_distance(&DensityMatrix::maximally_mixed(64)).unwrap() < 1e-10);
    }

    #[test]
    fn trace_is_preserved_without_renormalization() {
        let p = ChainParameters::new(5, 1.0, 0.7, 0.3);
        let pol = TruncationPolicy { chi_max: 256, svd_cutoff: 0.0, renormalize_trace: false };
        let gates = TrotterGates::new(&p, 0.05).unwrap();
        let mut state = mpo_identity(5).unwrap();
        gates.evolve(&mut state, 40, &pol).unwrap();
        assert!((state.trace() - 1.0).norm() < 1e-10);
    }
}
