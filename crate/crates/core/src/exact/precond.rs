//! Approximate inverses of the bordered generator M + v wᵀ.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, FactorizeInto, Inverse, LUFactorized, Solve};
use ndarray::OwnedRepr;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::exact::krylov::LinearMap;
use crate::exact::superop::SparseSuperoperator;

/// M x + v (w·x) with w the trace functional and v = w / |w|².
pub struct BorderedGenerator<'a> {
    op: &'a SparseSuperoperator,
    pops: Vec<usize>,
    v: f64,
}

impl<'a> BorderedGenerator<'a> {
    pub fn new(op: &'a SparseSuperoperator) -> Self {
        let space = op.space();
        let pops: Vec<usize> = (0..space.hilbert_dim())
            .map(|a| space.index(a, a).unwrap())
            .collect();
        let v = 1.0 / pops.len() as f64;
        Self { op, pops, v }
    }

    /// The right-hand side v.
    pub fn rhs(&self) -> Vec<C64> {
        let mut b = vec![C64::new(0.0, 0.0); self.op.dim()];
        for &k in &self.pops {
            b[k] = C64::new(self.v, 0.0);
        }
        b
    }

    pub fn populations(&self) -> &[usize] {
        &self.pops
    }

    pub fn border_weight(&self) -> f64 {
        self.v
    }
}

impl LinearMap for BorderedGenerator<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.op.apply(x, y);
        let tr: C64 = self.pops.iter().map(|&k| x[k]).sum();
        for &k in &self.pops {
            y[k] += tr * self.v;
        }
    }
}

struct SylvesterBlock {
    /// Vector positions of the block elements, row-major in (ket, bra).
    positions: Vec<usize>,
    v: Array2<C64>,
    v_inv: Array2<C64>,
    v_adj: Array2<C64>,
    v_inv_adj: Array2<C64>,
    lambda: Array1<C64>,
}

/// Inverts the coherent-plus-anticommutator part −iKρ + iρK† exactly, block by
/// block, ignoring the jump sandwich terms. Works well when dephasing is weak.
pub struct SylvesterPreconditioner {
    dim: usize,
    blocks: Vec<SylvesterBlock>,
    floor: f64,
}

impl SylvesterPreconditioner {
    pub fn new(op: &SparseSuperoperator) -> Result<Self> {
        let space = op.space();
        let k = op.effective_hamiltonian();
        let scale = k.max_abs().max(1.0);
        let mut blocks = Vec::new();
        for configs in space.blocks() {
            let d = configs.len();
            let mut kb = Array2::<C64>::zeros((d, d));
            let mut local = vec![usize::MAX; space.hilbert_dim()];
            for (i, &c) in configs.iter().enumerate() {
                local[c] = i;
            }
            for (i, &a) in configs.iter().enumerate() {
                for (c, val) in k.row(a) {
                    let j = local[c];
                    if j == usize::MAX {
                        return Err(Error::DimensionMismatch(
                            "effective Hamiltonian couples different blocks".into(),
                        ));
                    }
                    kb[[i, j]] = val;
                }
            }
            let (lambda, v) = kb.eig()?;
            let v_inv = v.inv()?;
            let mut positions = Vec::with_capacity(d * d);
            for &a in &configs {
                for &b in &configs {
                    positions.push(space.index(a, b).ok_or_else(|| {
                        Error::DimensionMismatch("block element missing from layout".into())
                    })?);
                }
            }
            let v_adj = v.t().mapv(|z| z.conj());
            let v_inv_adj = v_inv.t().mapv(|z| z.conj());
            blocks.push(SylvesterBlock {
                positions,
                v,
                v_inv,
                v_adj,
                v_inv_adj,
                lambda,
            });
        }
        Ok(Self {
            dim: space.dim(),
            blocks,
            floor: 1e-13 * scale,
        })
    }
}

impl LinearMap for SylvesterPreconditioner {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, y: &[C64], x: &mut [C64]) {
        let minus_i = C64::new(0.0, -1.0);
        for blk in &self.blocks {
            let d = blk.lambda.len();
            let yb = Array2::from_shape_fn((d, d), |(i, j)| y[blk.positions[i * d + j]]);
            let mut z = blk.v_inv.dot(&yb).dot(&blk.v_inv_adj);
            for ((a, b), zab) in z.indexed_iter_mut() {
                let mut den = minus_i * (blk.lambda[a] - blk.lambda[b].conj());
                if den.norm() < self.floor {
                    den = C64::new(-self.floor, 0.0);
                }
                *zab /= den;
            }
            let xb = blk.v.dot(&z).dot(&blk.v_adj);
            for (k, &p) in blk.positions.iter().enumerate() {
                x[p] = xb[[k / d, k % d]];
            }
        }
    }
}

/// Keeps the exact population block and the population-coherence couplings,
/// replaces the coherence block by its diagonal, and factors the resulting
/// Schur complement on the populations. Works well when dephasing dominates
/// the coherence decay.
pub struct SchurPreconditioner {
    dim: usize,
    pops: Vec<usize>,
    /// Population slot of each vector position, or usize::MAX.
    pop_slot: Vec<usize>,
    inv_diag: Vec<C64>,
    /// Population rows restricted to coherence columns.
    m_pc: Vec<Vec<(usize, C64)>>,
    /// Coherence rows restricted to population columns, indexed by position.
    m_cp: Vec<Vec<(usize, C64)>>,
    lu: LUFactorized<OwnedRepr<C64>>,
}

impl SchurPreconditioner {
    pub fn new(op: &SparseSuperoperator) -> Result<Self> {
        let border = BorderedGenerator::new(op);
        let m = op.matrix();
        let dim = op.dim();
        let pops = border.populations().to_vec();
        let np = pops.len();
        let mut pop_slot = vec![usize::MAX; dim];
        for (s, &k) in pops.iter().enumerate() {
            pop_slot[k] = s;
        }
        let mut inv_diag = vec![C64::new(0.0, 0.0); dim];
        let mut m_cp = vec![Vec::new(); dim];
        for r in 0..dim {
            if pop_slot[r] != usize::MAX {
                continue;
            }
            let mut diag = C64::new(0.0, 0.0);
            for (c, v) in m.row(r) {
                if c == r {
                    diag = v;
                } else if pop_slot[c] != usize::MAX {
                    m_cp[r].push((pop_slot[c], v));
                }
            }
            inv_diag[r] = if diag.norm() > 1e-10 {
                1.0 / diag
            } else {
                C64::new(-1.0, 0.0)
            };
        }
        let mut s = Array2::<C64>::from_elem((np, np), C64::new(border.border_weight(), 0.0));
        let mut m_pc = vec![Vec::new(); np];
        for (p, &r) in pops.iter().enumerate() {
            for (c, v) in m.row(r) {
                let q = pop_slot[c];
                if q != usize::MAX {
                    s[[p, q]] += v;
                } else {
                    m_pc[p].push((c, v));
                    let scaled = v * inv_diag[c];
                    for &(q2, w) in &m_cp[c] {
                        s[[p, q2]] -= scaled * w;
                    }
                }
            }
        }
        let lu = s.factorize_into()?;
        Ok(Self {
            dim,
            pops,
            pop_slot,
            inv_diag,
            m_pc,
            m_cp,
            lu,
        })
    }
}

impl LinearMap for SchurPreconditioner {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, y: &[C64], x: &mut [C64]) {
        let np = self.pops.len();
        let mut rhs = Array1::<C64>::zeros(np);
        for (p, &r) in self.pops.iter().enumerate() {
            let mut acc = y[r];
            for &(c, v) in &self.m_pc[p] {
                acc -= v * self.inv_diag[c] * y[c];
            }
            rhs[p] = acc;
        }
        let xp = match self.lu.solve_into(rhs) {
            Ok(v) => v,
            Err(_) => Array1::from_elem(np, C64::new(f64::NAN, 0.0)),
        };
        for r in 0..self.dim {
            let slot = self.pop_slot[r];
            if slot != usize::MAX {
                x[r] = xp[slot];
            } else {
                let mut acc = y[r];
                for &(q, v) in &self.m_cp[r] {
                    acc -= v * xp[q];
                }
                x[r] = self.inv_diag[r] * acc;
            }
        }
    }
}
