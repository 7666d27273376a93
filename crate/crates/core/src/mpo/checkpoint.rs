//! Versioned JSON checkpoints of MPO runs.

use std::fs;
use std::path::Path;

use ndarray::Array3;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{MpoState, TruncationPolicy, TruncationStats, PHYS};
use crate::error::{Error, Result};
use crate::model::ChainParameters;

pub const CHECKPOINT_VERSION: u32 = 1;
const FORMAT: &str = "ness-mpo-checkpoint";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TensorRecord {
    shape: [usize; 3],
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Serialized MPO with the run metadata needed to resume it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    format: String,
    pub version: u32,
    pub params: ChainParameters,
    pub policy: TruncationPolicy,
    pub dt: f64,
    pub model_time: f64,
    center: usize,
    stats: TruncationStats,
    tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn new(
        state: &MpoState,
        params: &ChainParameters,
        policy: &TruncationPolicy,
        dt: f64,
        model_time: f64,
    ) -> Self {
        let tensors = state
            .tensors()
            .iter()
            .map(|t| {
                let (l, p, r) = t.dim();
                let flat: Vec<C64> = t.as_standard_layout().iter().copied().collect();
                TensorRecord {
                    shape: [l, p, r],
                    re: flat.iter().map(|z| z.re).collect(),
                    im: flat.iter().map(|z| z.im).collect(),
                }
            })
            .collect();
        Self {
            format: FORMAT.into(),
            version: CHECKPOINT_VERSION,
            params: *params,
            policy: *policy,
            dt,
            model_time,
            center: state.center(),
            stats: *state.stats(),
            tensors,
        }
    }

    pub fn state(&self) -> Result<MpoState> {
        if self.format != FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidState(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let mut tensors = Vec::with_capacity(self.tensors.len());
        for (j, t) in self.tensors.iter().enumerate() {
            let [l, p, r] = t.shape;
            if p != PHYS || t.re.len() != l * p * r || t.im.len() != t.re.len() {
                return Err(Error::InvalidState(format!("malformed tensor at site {j}")));
            }
            let data: Vec<C64> = t.re.iter().zip(&t.im).map(|(&a, &b)| C64::new(a, b)).collect();
            tensors.push(
                Array3::from_shape_vec((l, p, r), data)
                    .map_err(|e| Error::InvalidState(e.to_string()))?,
            );
        }
        if tensors.len() != self.params.n_sites || self.center >= tensors.len() {
            return Err(Error::InvalidState("checkpoint does not match its parameters".into()));
        }
        Ok(MpoState::from_parts(tensors, self.center, self.stats))
    }
}

/// Writes atomically via a sibling temporary file.
pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_vec(checkpoint)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpo::{mpo_from_densities, TrotterGates};

    #[test]
    fn round_trip() {
        let p = ChainParameters::new(4, 1.0, 0.5, 0.1);
        let pol = TruncationPolicy::default();
        let mut s = mpo_from_densities(&[0.7, 0.6, 0.4, 0.3]).unwrap();
        TrotterGates::new(&p, 0.1).unwrap().evolve(&mut s, 5, &pol).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        save_checkpoint(&path, &Checkpoint::new(&s, &p, &pol, 0.1, 0.5)).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.model_time, 0.5);
        let t = back.state().unwrap();
        assert_eq!(t.center(), s.center());
        assert_eq!(t.bond_dims(), s.bond_dims());
        for (a, b) in t.tensors().iter().zip(s.tensors()) {
            assert!((a - b).iter().all(|z| z.norm() <= 1e-15 * (1.0 + b.iter().map(|w| w.norm()).fold(0.0, f64::max))));
        }
    }
}
