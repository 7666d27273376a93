//! Matrix-product representation of ρ and its Trotterized Lindblad evolution.
//!
//! Each site carries a tensor A[l, p, r] whose physical index runs over the
//! matrix units |a⟩⟨b| of that site, p = 2a + b. The matrix units are
//! Hilbert–Schmidt orthonormal, so bond singular values are the operator
//! Schmidt values of ρ and the Frobenius norm of the tensor network equals
//! ‖ρ‖₂. No Jordan–Wigner strings appear because every coupling is between
//! nearest neighbours.
//!
//! The state is kept in mixed canonical form: tensors left of `center` are
//! left-orthonormal, tensors right of it right-orthonormal.

mod checkpoint;
mod evolve;
mod gates;
mod measure;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use evolve::{run_to_ness_mpo, run_to_ness_mpo_from, InitialState, MpoSchedule};
pub use gates::{local_generator, trotter_sweep, TrotterGates};
pub use measure::{measure_mpo, operator_vector, two_site_operator_matrix};

use ndarray::{s, Array1, Array2, Array3, Axis};
use ndarray_linalg::{JobSvd, QR, SVDDC, SVD};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::DensityMatrix;

/// Local operator-space dimension.
pub const PHYS: usize = 4;

/// Largest N for which [`MpoState::to_dense`] will materialize ρ.
pub const DENSE_RECONSTRUCTION_CAP: usize = 12;

/// Bond truncation controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationPolicy {
    pub chi_max: usize,
    /// Largest discarded fraction of Σs² allowed at one bond.
    pub svd_cutoff: f64,
    pub renormalize_trace: bool,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { chi_max: 128, svd_cutoff: 1e-10, renormalize_trace: true }
    }
}

impl TruncationPolicy {
    pub fn new(chi_max: usize, svd_cutoff: f64) -> Self {
        Self { chi_max, svd_cutoff, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chi_max == 0 {
            return Err(invalid("chi_max must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.svd_cutoff) {
            return Err(invalid(format!("svd_cutoff must lie in [0, 1), got {}", self.svd_cutoff)));
        }
        Ok(())
    }
}

/// Accumulated truncation diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TruncationStats {
    /// Sum over all truncations of the discarded fraction of Σs².
    pub discarded_weight: f64,
    pub max_discarded: f64,
    /// Truncations where chi_max, not the cutoff, set the kept rank.
    pub overflows: usize,
    pub truncations: usize,
}

impl TruncationStats {
    fn record(&mut self, discarded: f64, overflow: bool) {
        self.discarded_weight += discarded;
        self.max_discarded = self.max_discarded.max(discarded);
        self.overflows += overflow as usize;
        self.truncations += 1;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpoState {
    tensors: Vec<Array3<C64>>,
    center: usize,
    stats: TruncationStats,
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Reshape into a matrix, copying into standard layout when needed.
pub(crate) fn as_matrix(a: &Array3<C64>, rows: usize, cols: usize) -> Array2<C64> {
    a.as_standard_layout()
        .into_owned()
        .into_shape_with_order((rows, cols))
        .expect("tensor reshape")
}

pub(crate) fn as_tensor(m: Array2<C64>, shape: (usize, usize, usize)) -> Array3<C64> {
    m.as_standard_layout()
        .into_owned()
        .into_shape_with_order(shape)
        .expect("tensor reshape")
}

/// Thin SVD, falling back to the QR-iteration driver if divide-and-conquer fails.
pub(crate) fn thin_svd(m: &Array2<C64>) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>)> {
    if let Ok((Some(u), s, Some(vt))) = m.svddc(JobSvd::Some) {
        if s.iter().all(|v| v.is_finite()) {
            return Ok((u, s, vt));
        }
    }
    let (u, s, vt) = m.svd(true, true)?;
    let (u, vt) = (u.expect("U requested"), vt.expect("V† requested"));
    let k = s.len();
    Ok((u.slice(s![.., ..k]).to_owned(), s, vt.slice(s![..k, ..]).to_owned()))
}

/// Kept rank and discarded fraction for descending singular values.
pub(crate) fn truncation_rank(s: &Array1<f64>, policy: &TruncationPolicy) -> (usize, f64, bool) {
    let total: f64 = s.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return (1, 0.0, false);
    }
    let allowed = policy.svd_cutoff * total;
    let mut tail = 0.0;
    let mut k = s.len();
    while k > 1 {
        let w = s[k - 1] * s[k - 1];
        if tail + w > allowed {
            break;
        }
        tail += w;
        k -= 1;
    }
    let overflow = k > policy.chi_max;
    let k = k.min(policy.chi_max);
    let discarded: f64 = s.iter().skip(k).map(|v| v * v).sum::<f64>() / total;
    (k, discarded, overflow)
}

impl MpoState {
    /// Builds a state from site tensors and puts it in canonical form.
    pub fn from_tensors(tensors: Vec<Array3<C64>>) -> Result<Self> {
        if tensors.len() < 2 {
            return Err(invalid("an MPO needs at least two sites"));
        }
        for (j, t) in tensors.iter().enumerate() {
            let (l, p, r) = t.dim();
            if p != PHYS {
                return Err(Error::DimensionMismatch(format!("site {j} has physical dimension {p}")));
            }
            let want_l = if j == 0 { 1 } else { tensors[j - 1].dim().2 };
            if l != want_l || (j == tensors.len() - 1 && r != 1) {
                return Err(Error::DimensionMismatch(format!(
                    "site {j} has bonds ({l}, {r}) incompatible with its neighbours"
                )));
            }
        }
        let n = tensors.len();
        let mut state = Self { tensors, center: n - 1, stats: TruncationStats::default() };
        state.move_center(0)?;
        Ok(state)
    }

    /// Product state with one local vector [ρ_00, ρ_01, ρ_10, ρ_11] per site.
    pub fn product(locals: &[[C64; 4]]) -> Result<Self> {
        let tensors = locals
            .iter()
            .map(|v| Array3::from_shape_fn((1, PHYS, 1), |(_, p, _)| v[p]))
            .collect();
        Self::from_tensors(tensors)
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[Array3<C64>] {
        &self.tensors
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn stats(&self) -> &TruncationStats {
        &self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = TruncationStats::default();
    }

    /// Bond dimensions between consecutive sites.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.n_sites() - 1].iter().map(|t| t.dim().2).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Moves the orthogonality centre with QR (rightwards) or LQ (leftwards).
    pub fn move_center(&mut self, target: usize) -> Result<()> {
        if target >= self.n_sites() {
            return Err(Error::IndexOutOfRange(format!("site {target} of {}", self.n_sites())));
        }
        while self.center < target {
            let c = self.center;
            let (l, p, r) = self.tensors[c].dim();
            let (q, rr) = as_matrix(&self.tensors[c], l * p, r).qr()?;
            let k = q.ncols();
            self.tensors[c] = as_tensor(q, (l, p, k));
            let (_, p2, r2) = self.tensors[c + 1].dim();
            let next = rr.dot(&as_matrix(&self.tensors[c + 1], r, p2 * r2));
            self.tensors[c + 1] = as_tensor(next, (k, p2, r2));
            self.center += 1;
        }
        while self.center > target {
            let c = self.center;
            let (l, p, r) = self.tensors[c].dim();
            // LQ from the QR of the transpose.
            let (q, rr) = as_matrix(&self.tensors[c], l, p * r).t().to_owned().qr()?;
            let k = q.ncols();
            self.tensors[c] = as_tensor(q.t().to_owned(), (k, p, r));
            let (l0, p0, _) = self.tensors[c - 1].dim();
            let prev = as_matrix(&self.tensors[c - 1], l0 * p0, l).dot(&rr.t());
            self.tensors[c - 1] = as_tensor(prev, (l0, p0, k));
            self.center -= 1;
        }
        Ok(())
    }

    /// tr ρ.
    pub fn trace(&self) -> C64 {
        let mut env = Array1::from_elem(1, re(1.0));
        for t in &self.tensors {
            let m = t.index_axis(Axis(1), 0).to_owned() + t.index_axis(Axis(1), 3);
            env = env.dot(&m);
        }
        env[0]
    }

    /// Rescales so that tr ρ = 1.
    pub fn normalize_trace(&mut self) -> Result<()> {
        let tr = self.trace();
        if tr.norm() < 1e-300 || !tr.is_finite() {
            return Err(Error::InvalidState(format!("MPO trace {tr} cannot be normalized")));
        }
        let c = self.center;
        self.tensors[c].mapv_inplace(|z| z / tr);
        Ok(())
    }

    /// ‖ρ‖₂², read off the centre tensor.
    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.tensors[self.center].iter().map(|z| z.norm_sqr()).sum()
    }

    /// Singular values across the bond between `bond` and `bond + 1` (0-based).
    pub fn bond_spectrum(&mut self, bond: usize) -> Result<Vec<f64>> {
        if bond + 1 >= self.n_sites() {
            return Err(Error::IndexOutOfRange(format!("bond {bond} of {}", self.n_sites() - 1)));
        }
        self.move_center(bond)?;
        let (l, p, r) = self.tensors[bond].dim();
        let (_, s, _) = thin_svd(&as_matrix(&self.tensors[bond], l * p, r))?;
        Ok(s.to_vec())
    }

    /// Spectrum at the bond splitting off the left ⌊N/2⌋ sites.
    pub fn center_spectrum(&mut self) -> Result<Vec<f64>> {
        self.bond_spectrum(self.n_sites() / 2 - 1)
    }

    /// Sweeps left to right truncating every bond, then restores the centre.
    pub fn compress(&mut self, policy: &TruncationPolicy) -> Result<()> {
        policy.validate()?;
        let n = self.n_sites();
        let home = self.center;
        self.move_center(0)?;
        for c in 0..n - 1 {
            let (l, p, r) = self.tensors[c].dim();
            let (u, s, vt) = thin_svd(&as_matrix(&self.tensors[c], l * p, r))?;
            let (k, discarded, overflow) = truncation_rank(&s, policy);
            self.stats.record(discarded, overflow);
            self.tensors[c] = as_tensor(u.slice(s![.., ..k]).to_owned(), (l, p, k));
            let mut sv = vt.slice(s![..k, ..]).to_owned();
            for (i, mut row) in sv.rows_mut().into_iter().enumerate() {
                row.mapv_inplace(|z| z * s[i]);
            }
            let (_, p2, r2) = self.tensors[c + 1].dim();
            let next = sv.dot(&as_matrix(&self.tensors[c + 1], r, p2 * r2));
            self.tensors[c + 1] = as_tensor(next, (k, p2, r2));
            self.center = c + 1;
        }
        self.move_center(home.min(n - 1))
    }

    /// a·self + b·other with block-diagonal bonds, compressed under `policy`.
    pub fn linear_combination(
        &self,
        a: f64,
        other: &MpoState,
        b: f64,
        policy: &TruncationPolicy,
    ) -> Result<MpoState> {
        let n = self.n_sites();
        if other.n_sites() != n {
            return Err(Error::DimensionMismatch(format!(
                "adding MPOs on {n} and {} sites",
                other.n_sites()
            )));
        }
        let mut tensors = Vec::with_capacity(n);
        for j in 0..n {
            let (x, y) = (&self.tensors[j], &other.tensors[j]);
            let (xl, _, xr) = x.dim();
            let (yl, _, yr) = y.dim();
            let t = if j == 0 {
                let mut t = Array3::zeros((1, PHYS, xr + yr));
                t.slice_mut(s![.., .., ..xr]).assign(&x.mapv(|z| z * a));
                t.slice_mut(s![.., .., xr..]).assign(&y.mapv(|z| z * b));
                t
            } else if j == n - 1 {
                let mut t = Array3::zeros((xl + yl, PHYS, 1));
                t.slice_mut(s![..xl, .., ..]).assign(x);
                t.slice_mut(s![xl.., .., ..]).assign(y);
                t
            } else {
                let mut t = Array3::zeros((xl + yl, PHYS, xr + yr));
                t.slice_mut(s![..xl, .., ..xr]).assign(x);
                t.slice_mut(s![xl.., .., xr..]).assign(y);
                t
            };
            tensors.push(t);
        }
        let mut out = MpoState::from_tensors(tensors)?;
        out.compress(policy)?;
        out.stats = self.stats;
        Ok(out)
    }

    /// Dense ρ on the site-1-major occupation basis.
    pub fn to_dense(&self) -> Result<DensityMatrix> {
        let n = self.n_sites();
        if n > DENSE_RECONSTRUCTION_CAP {
            return Err(Error::TooLarge {
                what: "dense MPO reconstruction",
                n_sites: n,
                cap: DENSE_RECONSTRUCTION_CAP,
            });
        }
        // Coefficients indexed by the physical string p_1 … p_N, site 1 most significant.
        let mut acc = as_matrix(&self.tensors[0], PHYS, self.tensors[0].dim().2);
        for t in &self.tensors[1..] {
            let (l, p, r) = t.dim();
            let prod = acc.dot(&as_matrix(t, l, p * r));
            let rows = prod.nrows() * p;
            acc = prod.into_shape_with_order((rows, r)).expect("contiguous product");
        }
        let dim = 1usize << n;
        let mut rho = Array2::zeros((dim, dim));
        for (idx, v) in acc.column(0).iter().enumerate() {
            let (mut a, mut b) = (0usize, 0usize);
            for j in 0..n {
                let p = (idx >> (2 * (n - 1 - j))) & 3;
                a = (a << 1) | (p >> 1);
                b = (b << 1) | (p & 1);
            }
            rho[[a, b]] = *v;
        }
        DensityMatrix::from_raw(rho)
    }

    /// Exact MPO of a dense state by successive SVDs, truncated under `policy`.
    pub fn from_dense(rho: &DensityMatrix, policy: &TruncationPolicy) -> Result<Self> {
        let n = rho
            .n_sites()
            .ok_or_else(|| Error::DimensionMismatch("dimension is not a power of two".into()))?;
        if n < 2 {
            return Err(invalid("an MPO needs at least two sites"));
        }
        let m = rho.matrix();
        let total = 1usize << (2 * n);
        let mut coeffs = Array1::<C64>::zeros(total);
        for a in 0..(1usize << n) {
            for b in 0..(1usize << n) {
                let mut idx = 0usize;
                for j in 0..n {
                    let sh = n - 1 - j;
                    idx = (idx << 2) | (((a >> sh) & 1) << 1) | ((b >> sh) & 1);
                }
                coeffs[idx] = m[[a, b]];
            }
        }
        let mut stats = TruncationStats::default();
        let mut tensors = Vec::with_capacity(n);
        let mut rest = coeffs.into_shape_with_order((1, total)).expect("vector reshape");
        let mut left = 1usize;
        for _ in 0..n - 1 {
            let cols = rest.len() / (left * PHYS);
            let mat = rest.into_shape_with_order((left * PHYS, cols)).expect("reshape");
            let (u, s, vt) = thin_svd(&mat)?;
            let (k, discarded, overflow) = truncation_rank(&s, policy);
            stats.record(discarded, overflow);
            tensors.push(as_tensor(u.slice(s![.., ..k]).to_owned(), (left, PHYS, k)));
            let mut sv = vt.slice(s![..k, ..]).to_owned();
            for (i, mut row) in sv.rows_mut().into_iter().enumerate() {
                row.mapv_inplace(|z| z * s[i]);
            }
            rest = sv;
            left = k;
        }
        tensors.push(as_tensor(rest, (left, PHYS, 1)));
        let mut state = Self::from_tensors(tensors)?;
        state.stats = stats;
        Ok(state)
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut Vec<Array3<C64>> {
        &mut self.tensors
    }

    pub(crate) fn set_center(&mut self, c: usize) {
        self.center = c;
    }

    pub(crate) fn stats_mut(&mut self) -> &mut TruncationStats {
        &mut self.stats
    }

    pub(crate) fn from_parts(tensors: Vec<Array3<C64>>, center: usize, stats: TruncationStats) -> Self {
        Self { tensors, center, stats }
    }
}

/// I/2^N.
pub fn mpo_identity(n_sites: usize) -> Result<MpoState> {
    MpoState::product(&vec![[re(0.5), re(0.0), re(0.0), re(0.5)]; n_sites])
}

/// Pure product configuration, `occupations[j]` for site j + 1.
pub fn mpo_from_product(occupations: &[bool]) -> Result<MpoState> {
    let locals: Vec<[C64; 4]> = occupations
        .iter()
        .map(|&o| if o { [re(0.0), re(0.0), re(0.0), re(1.0)] } else { [re(1.0), re(0.0), re(0.0), re(0.0)] })
        .collect();
    MpoState::product(&locals)
}

/// Mixed product state ⊗_j diag(1 − n_j, n_j).
pub fn mpo_from_densities(densities: &[f64]) -> Result<MpoState> {
    if let Some(n) = densities.iter().find(|n| !(0.0..=1.0).contains(*n)) {
        return Err(invalid(format!("site density {n} outside [0, 1]")));
    }
    let locals: Vec<[C64; 4]> =
        densities.iter().map(|&n| [re(1.0 - n), re(0.0), re(0.0), re(n)]).collect();
    MpoState::product(&locals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::DensityMatrix;

    #[test]
    fn identity_and_product_traces() {
        let id = mpo_identity(4).unwrap();
        assert!((id.trace() - 1.0).norm() < 1e-14);
        let dense = id.to_dense().unwrap();
        assert!(dense.trace_distance(&DensityMatrix::maximally_mixed(16)).unwrap() < 1e-14);
        let p = mpo_from_product(&[true, true, false, false]).unwrap();
        let pops = p.to_dense().unwrap().populations();
        assert!((pops[0b1100] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dense_round_trip_and_canonical_norm() {
        let rho = DensityMatrix::random(32, 7);
        let mpo = MpoState::from_dense(&rho, &TruncationPolicy::new(1024, 0.0)).unwrap();
        let back = mpo.to_dense().unwrap();
        assert!(back.trace_distance(&rho).unwrap() < 1e-12);
        assert!((mpo.frobenius_norm_sqr() - rho.purity()).abs() < 1e-12);
        let mut moved = mpo.clone();
        moved.move_center(3).unwrap();
        assert!((moved.frobenius_norm_sqr() - rho.purity()).abs() < 1e-12);
        assert!(moved.to_dense().unwrap().trace_distance(&rho).unwrap() < 1e-12);
    }

    #[test]
    fn linear_combination_matches_dense() {
        let a = DensityMatrix::random(16, 1);
        let b = DensityMatrix::random(16, 2);
        let pol = TruncationPolicy::new(256, 0.0);
        let ma = MpoState::from_dense(&a, &pol).unwrap();
        let mb = MpoState::from_dense(&b, &pol).unwrap();
        let sum = ma.linear_combination(4.0 / 3.0, &mb, -1.0 / 3.0, &pol).unwrap();
        let want = a.matrix().mapv(|z| z * (4.0 / 3.0)) - b.matrix().mapv(|z| z / 3.0);
        let got = sum.to_dense().unwrap();
        let err = (got.matrix() - &want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        assert!(sum.max_bond_dim() <= 16);
    }

    #[test]
    fn truncation_rank_rules() {
        let s = Array1::from(vec![1.0, 1e-3, 1e-6, 1e-9]);
        let pol = TruncationPolicy::new(10, 1e-10);
        assert_eq!(truncation_rank(&s, &pol), (2, (1e-12 + 1e-18) / (1.0 + 1e-6 + 1e-12 + 1e-18), false));
        let pol = TruncationPolicy::new(10, 0.0);
        assert_eq!(truncation_rank(&s, &pol).0, 4);
        let pol = TruncationPolicy::new(1, 1e-10);
        let (k, w, overflow) = truncation_rank(&s, &pol);
        assert_eq!(k, 1);
        assert!(overflow);
        assert!((w - 1e-6).abs() < 1e-11);
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::new(0, 1e-10).validate().is_err());
        assert!(TruncationPolicy::new(4, 1.0).validate().is_err());
        assert!(mpo_from_densities(&[0.5, 1.5]).is_err());
        assert!(mpo_identity(1).is_err());
    }
}
