//! Vectorized Lindblad generator.
//!
//! The full space uses column stacking, `vec(ρ)[a + d·b] = ρ_ab`, so that
//! `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`. For number-conserving generators the
//! stationary state is block diagonal in particle number, and the
//! [`LiouvilleSpace::NumberDiagonal`] layout keeps only those blocks: block
//! `n` is stored row-major at `offset[n] + i·d_n + j` for configurations
//! `sector(n)[i]`, `sector(n)[j]`.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::basis::{particle_count, NumberSectors};
use crate::error::{Error, Result};
use crate::exact::density::DensityMatrix;
use crate::model::{
    build_hamiltonian_capped, build_jump_operators, current_operator, ChainParameters,
    JumpOperator, OperatorMatrix,
};
use crate::sparse::{CsrBuilder, SparseMatrix};

/// Default cap on N for anything that assembles a vectorized generator.
pub const DEFAULT_VECTORIZE_CAP: usize = 10;

/// Index layout of vectorized operators.
#[derive(Clone, Debug)]
pub enum LiouvilleSpace {
    /// All d² elements, column stacked.
    Full { hilbert_dim: usize },
    /// Only elements whose ket and bra carry equal particle number.
    NumberDiagonal {
        sectors: Arc<NumberSectors>,
        offsets: Vec<usize>,
    },
}

impl LiouvilleSpace {
    pub fn full(hilbert_dim: usize) -> Self {
        LiouvilleSpace::Full { hilbert_dim }
    }

    pub fn number_diagonal(n_sites: usize) -> Self {
        let sectors = Arc::new(NumberSectors::new(n_sites));
        let mut offsets = Vec::with_capacity(n_sites + 2);
        let mut acc = 0;
        for (_, s) in sectors.iter() {
            offsets.push(acc);
            acc += s.len() * s.len();
        }
        offsets.push(acc);
        LiouvilleSpace::NumberDiagonal { sectors, offsets }
    }

    pub fn hilbert_dim(&self) -> usize {
        match self {
            LiouvilleSpace::Full { hilbert_dim } => *hilbert_dim,
            LiouvilleSpace::NumberDiagonal { sectors, .. } => sectors.hilbert_dim(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LiouvilleSpace::Full { hilbert_dim } => hilbert_dim * hilbert_dim,
            LiouvilleSpace::NumberDiagonal { offsets, .. } => *offsets.last().unwrap(),
        }
    }

    /// Position of the element ρ_ab, if it belongs to the space.
    #[inline]
    pub fn index(&self, a: usize, b: usize) -> Option<usize> {
        match self {
            LiouvilleSpace::Full { hilbert_dim } => Some(a + hilbert_dim * b),
            LiouvilleSpace::NumberDiagonal { sectors, offsets } => {
                let n = particle_count(a);
                if particle_count(b) != n {
                    return None;
                }
                let d = sectors.sector(n).len();
                Some(offsets[n] + sectors.position(a) * d + sectors.position(b))
            }
        }
    }

    /// The element (a, b) stored at each position.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        match self {
            LiouvilleSpace::Full { hilbert_dim } => {
                let d = *hilbert_dim;
                (0..d * d).map(|k| (k % d, k / d)).collect()
            }
            LiouvilleSpace::NumberDiagonal { sectors, .. } => {
                let mut out = Vec::with_capacity(self.dim());
                for (_, s) in sectors.iter() {
                    for &a in s {
                        for &b in s {
                            out.push((a, b));
                        }
                    }
                }
                out
            }
        }
    }

    /// Groups of configurations whose mutual elements are all stored, used by
    /// block preconditioners.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        match self {
            LiouvilleSpace::Full { hilbert_dim } => vec![(0..*hilbert_dim).collect()],
            LiouvilleSpace::NumberDiagonal { sectors, .. } => {
                sectors.iter().map(|(_, s)| s.to_vec()).collect()
            }
        }
    }

    pub fn vectorize(&self, rho: &DensityMatrix) -> Result<Vec<C64>> {
        if rho.dim() != self.hilbert_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} in a space over dimension {}",
                rho.dim(),
                self.hilbert_dim()
            )));
        }
        let m = rho.matrix();
        Ok(self.pairs().into_iter().map(|(a, b)| m[[a, b]]).collect())
    }

    /// Unvectorizes; elements outside the space are zero.
    pub fn unvectorize(&self, v: &[C64]) -> Array2<C64> {
        let d = self.hilbert_dim();
        let mut m = Array2::zeros((d, d));
        for ((a, b), &x) in self.pairs().into_iter().zip(v) {
            m[[a, b]] = x;
        }
        m
    }

    /// Linear functional returning tr(ρ): weight 1 on every population.
    pub fn trace_functional(&self) -> Vec<(usize, C64)> {
        (0..self.hilbert_dim())
            .map(|a| (self.index(a, a).unwrap(), C64::new(1.0, 0.0)))
            .collect()
    }

    /// Linear functional returning tr(O ρ).
    pub fn expectation_functional(&self, op: &OperatorMatrix) -> Vec<(usize, C64)> {
        let mut out = Vec::new();
        for b in 0..op.nrows() {
            for (a, v) in op.row(b) {
                if let Some(k) = self.index(a, b) {
                    out.push((k, v));
                }
            }
        }
        out
    }
}

pub(crate) fn apply_functional(f: &[(usize, C64)], v: &[C64]) -> C64 {
    f.iter().map(|&(k, c)| c * v[k]).sum()
}

/// Sparse generator M with d(vec ρ)/dt = M vec ρ.
#[derive(Clone, Debug)]
pub struct SparseSuperoperator {
    space: LiouvilleSpace,
    matrix: SparseMatrix,
    /// K = H − (i/2) Σ L†L, kept for preconditioning.
    effective_hamiltonian: SparseMatrix,
    /// Bond-current functionals when built from chain parameters.
    currents: Vec<Vec<(usize, C64)>>,
    /// Uniform dephasing rate, zero when unknown.
    dephasing: f64,
}

impl SparseSuperoperator {
    pub fn space(&self) -> &LiouvilleSpace {
        &self.space
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn hilbert_dim(&self) -> usize {
        self.space.hilbert_dim()
    }

    pub fn effective_hamiltonian(&self) -> &SparseMatrix {
        &self.effective_hamiltonian
    }

    pub fn dephasing_rate(&self) -> f64 {
        self.dephasing
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matrix.matvec(x, y)
    }

    /// L(ρ) as a dense matrix.
    pub fn apply_to(&self, rho: &DensityMatrix) -> Result<Array2<C64>> {
        let v = self.space.vectorize(rho)?;
        Ok(self.space.unvectorize(&self.matrix.mul_vec(&v)))
    }

    /// ‖M vec ρ‖∞.
    pub fn residual(&self, rho: &DensityMatrix) -> Result<f64> {
        let v = self.space.vectorize(rho)?;
        Ok(inf_norm(&self.matrix.mul_vec(&v)))
    }

    /// Bond currents ⟨J_j⟩, empty unless built from chain parameters.
    pub fn bond_currents(&self, v: &[C64]) -> Vec<f64> {
        self.currents
            .iter()
            .map(|f| apply_functional(f, v).re)
            .collect()
    }

    pub fn has_currents(&self) -> bool {
        !self.currents.is_empty()
    }

    pub fn dense(&self) -> Array2<C64> {
        self.matrix.to_dense()
    }
}

pub(crate) fn inf_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Vectorizes −i[H,ρ] + Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ}) on the full space.
pub fn vectorize(h: &OperatorMatrix, jumps: &[OperatorMatrix]) -> Result<SparseSuperoperator> {
    let d = h.nrows();
    vectorize_in(LiouvilleSpace::full(d), h, jumps)
}

/// Vectorizes into an arbitrary index layout. Fails if the generator couples
/// stored elements to elements outside the layout.
pub fn vectorize_in(
    space: LiouvilleSpace,
    h: &OperatorMatrix,
    jumps: &[OperatorMatrix],
) -> Result<SparseSuperoperator> {
    let d = h.nrows();
    if h.ncols() != d || space.hilbert_dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian {}x{} in a space over dimension {}",
            h.nrows(),
            h.ncols(),
            space.hilbert_dim()
        )));
    }
    for (k, l) in jumps.iter().enumerate() {
        if l.nrows() != d || l.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "jump operator {k} is {}x{}, expected {d}x{d}",
                l.nrows(),
                l.ncols()
            )));
        }
    }
    let mut gain = SparseMatrix::zeros(d, d);
    for l in jumps {
        gain = gain.add_scaled(&l.adjoint().matmul(l), C64::new(1.0, 0.0));
    }
    let k = h.add_scaled(&gain, C64::new(0.0, -0.5));
    let jumps: Vec<&OperatorMatrix> = jumps.iter().filter(|l| l.nnz() > 0).collect();

    let pairs = space.pairs();
    let dim = pairs.len();
    let mut b = CsrBuilder::with_capacity(dim, dim, dim * 8);
    let mut row: Vec<(usize, C64)> = Vec::with_capacity(64);
    let minus_i = C64::new(0.0, -1.0);
    let plus_i = C64::new(0.0, 1.0);
    let leak = |a: usize, b: usize| {
        Error::DimensionMismatch(format!(
            "generator couples the stored element to ({a},{b}), which is outside the index layout"
        ))
    };
    for &(a, bb) in &pairs {
        row.clear();
        // −i K ρ
        for (c, v) in k.row(a) {
            let idx = space.index(c, bb).ok_or_else(|| leak(c, bb))?;
            row.push((idx, minus_i * v));
        }
        // +i ρ K†, using (K†)_cb = conj(K_bc)
        for (c, v) in k.row(bb) {
            let idx = space.index(a, c).ok_or_else(|| leak(a, c))?;
            row.push((idx, plus_i * v.conj()));
        }
        // Σ L ρ L†
        for l in &jumps {
            for (c, l1) in l.row(a) {
                for (dd, l2) in l.row(bb) {
                    let idx = space.index(c, dd).ok_or_else(|| leak(c, dd))?;
                    row.push((idx, l1 * l2.conj()));
                }
            }
        }
        b.push_row(&mut row);
    }
    Ok(SparseSuperoperator {
        space,
        matrix: b.finish(),
        effective_hamiltonian: k,
        currents: Vec::new(),
        dephasing: 0.0,
    })
}

/// Which index layout a chain generator is assembled in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Full,
    NumberDiagonal,
}

/// Assembles the chain generator, with bond-current probes attached.
pub fn chain_superoperator(
    params: &ChainParameters,
    layout: Layout,
    cap: usize,
) -> Result<SparseSuperoperator> {
    params.validate()?;
    let n = params.n_sites;
    if n > cap {
        return Err(Error::TooLarge {
            what: "vectorized generator",
            n_sites: n,
            cap,
        });
    }
    let h = build_hamiltonian_capped(params, cap.max(n))?;
    let jumps: Vec<OperatorMatrix> = build_jump_operators(params)?
        .into_iter()
        .map(|j: JumpOperator| j.matrix)
        .collect();
    let space = match layout {
        Layout::Full => LiouvilleSpace::full(1 << n),
        Layout::NumberDiagonal => LiouvilleSpace::number_diagonal(n),
    };
    let mut op = vectorize_in(space, &h, &jumps)?;
    op.currents = (1..n)
        .map(|j| Ok(op.space.expectation_functional(&current_operator(j, n)?)))
        .collect::<Result<_>>()?;
    op.dephasing = params.dephasing;
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_hamiltonian;

    fn direct_generator(h: &Array2<C64>, jumps: &[Array2<C64>], rho: &Array2<C64>) -> Array2<C64> {
        let i = C64::new(0.0, 1.0);
        let mut out = (h.dot(rho) - rho.dot(h)).mapv(|z| -i * z);
        for l in jumps {
            let ld = l.t().mapv(|z| z.conj());
            let ldl = ld.dot(l);
            out = out + l.dot(rho).dot(&ld) - (ldl.dot(rho) + rho.dot(&ldl)).mapv(|z| 0.5 * z);
        }
        out
    }

    #[test]
    fn matches_direct_evaluation() {
        let p = ChainParameters::new(3, 1.3, 0.4, 0.2).with_staggered(0.3).with_coupling(0.7);
        let h = build_hamiltonian(&p).unwrap();
        let jumps: Vec<_> = build_jump_operators(&p).unwrap().into_iter().map(|j| j.matrix).collect();
        let op = vectorize(&h, &jumps).unwrap();
        let rho = DensityMatrix::random(8, 11);
        let got = op.apply_to(&rho).unwrap();
        let dense_jumps: Vec<_> = jumps.iter().map(|l| l.to_dense()).collect();
        let want = direct_generator(&h.to_dense(), &dense_jumps, rho.matrix());
        let err = (&got - &want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "error {err}");
    }

    #[test]
    fn column_stacking_convention() {
        let space = LiouvilleSpace::full(4);
        assert_eq!(space.index(1, 2), Some(1 + 4 * 2));
        let nd = LiouvilleSpace::number_diagonal(4);
        assert_eq!(nd.dim(), 70);
        assert_eq!(nd.index(0b0001, 0b0011), None);
        let pairs = nd.pairs();
        for (k, &(a, b)) in pairs.iter().enumerate() {
            assert_eq!(nd.index(a, b), Some(k));
        }
    }

    #[test]
    fn identity_is_stationary_without_bias() {
        for delta in [0.0, 0.7, 3.0] {
            let p = ChainParameters::new(2, delta, 0.0, 0.0);
            let op = chain_superoperator(&p, Layout::Full, 10).unwrap();
            let r = op.residual(&DensityMatrix::maximally_mixed(4)).unwrap();
            assert!(r < 1e-15);
        }
    }

    #[test]
    fn single_jump_on_identity() {
        // H = 0 and L with L†L = I: M vec(I/d) = vec(L L† − I)/d.
        let d = 3;
        let l = SparseMatrix::from_triplets(
            d,
            d,
            vec![
                (1, 0, C64::new(1.0, 0.0)),
                (2, 1, C64::new(1.0, 0.0)),
                (0, 2, C64::new(0.0, 1.0)),
            ],
        );
        let h = SparseMatrix::zeros(d, d);
        let op = vectorize(&h, &[l.clone()]).unwrap();
        let got = op.apply_to(&DensityMatrix::maximally_mixed(d)).unwrap();
        let ld = l.to_dense();
        let want = (ld.dot(&ld.t().mapv(|z| z.conj())) - Array2::<C64>::eye(d)).mapv(|z| z / d as f64);
        let err = (&got - &want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-15);
        assert!(got.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn layouts_agree_on_block_diagonal_states() {
        let p = ChainParameters::new(4, 2.0, 0.5, 0.1);
        let full = chain_superoperator(&p, Layout::Full, 10).unwrap();
        let nd = chain_superoperator(&p, Layout::NumberDiagonal, 10).unwrap();
        let rho = DensityMatrix::random(16, 5);
        let mut m = rho.matrix().clone();
        for a in 0..16usize {
            for b in 0..16usize {
                if a.count_ones() != b.count_ones() {
                    m[[a, b]] = C64::new(0.0, 0.0);
                }
            }
        }
        let rho = DensityMatrix::from_raw(m).unwrap();
        let a = full.apply_to(&rho).unwrap();
        let b = nd.apply_to(&rho).unwrap();
        let err = (&a - &b).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-14);
        assert_eq!(full.bond_currents(&full.space().vectorize(&rho).unwrap()).len(), 3);
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let h = SparseMatrix::identity(4);
        let l = SparseMatrix::identity(3);
        assert!(matches!(vectorize(&h, &[l]), Err(Error::DimensionMismatch(_))));
    }
}
