//! Coherence loss of an all-or-nothing superposition through scattered photons.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ghz::AllOrNothingState;
use crate::linalg::{LinOp, StateVector, Tensor, C64, ZERO};

/// `g = <k-|k+>` for one scattered photon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvOverlap(C64);

impl EnvOverlap {
    pub fn new(g: C64) -> Result<Self> {
        if g.norm().is_nan() || g.norm() > 1.0 + 1e-15 {
            return Err(Error::InvalidArgument(format!("|g| = {} exceeds 1", g.norm())));
        }
        Ok(EnvOverlap(g))
    }

    pub fn g(self) -> C64 {
        self.0
    }

    /// Normalized 2-dim modes `|k+> = (1, 0)`, `|k-> = (g*, √(1-|g|²))`.
    pub fn photon_pair(self) -> (StateVector, StateVector) {
        let g = self.0;
        let s = (1.0 - g.norm_sqr()).max(0.0).sqrt();
        let plus = StateVector::qubits(vec![C64::new(1.0, 0.0), ZERO]).expect("qubit");
        let minus = StateVector::qubits(vec![g.conj(), C64::new(s, 0.0)]).expect("qubit");
        (plus, minus)
    }
}

/// Reduced state in the basis `(|+...+>, |-...->)`:
/// diagonal `(|α|², |β|²)`, off-diagonal `αβ* Π gᵢ`.
pub fn reduced_after_scattering(alpha: C64, beta: C64, overlaps: &[EnvOverlap]) -> Result<LinOp> {
    let n2 = alpha.norm_sqr() + beta.norm_sqr();
    if (n2 - 1.0).abs() > 1e-12 {
        return Err(Error::Normalization(n2));
    }
    let coherence = overlaps.iter().fold(alpha * beta.conj(), |acc, o| acc * o.0);
    LinOp::from_rows(&[
        vec![C64::new(alpha.norm_sqr(), 0.0), coherence],
        vec![coherence.conj(), C64::new(beta.norm_sqr(), 0.0)],
    ])
}

/// `α|+...+>|k+>|k+'>... + β|-...->|k->|k-'>...`.
pub fn entangled_env_state(sys: &AllOrNothingState, photons: &[(StateVector, StateVector)]) -> Result<StateVector> {
    let dim = 1usize << sys.n;
    let mut up = vec![ZERO; dim];
    up[0] = C64::new(1.0, 0.0);
    let mut down = vec![ZERO; dim];
    down[dim - 1] = C64::new(1.0, 0.0);
    let mut up = StateVector::qubits(up)?;
    let mut down = StateVector::qubits(down)?;
    for (kp, km) in photons {
        for k in [kp, km] {
            if (k.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Normalization(k.norm()));
            }
        }
        up = up.tensor(kp)?;
        down = down.tensor(km)?;
    }
    let amps = up
        .amps()
        .iter()
        .zip(down.amps())
        .map(|(u, d)| sys.alpha * u + sys.beta * d)
        .collect();
    StateVector::new(amps, up.factor_dims().to_vec())
}

/// The 2×2 block of the system's reduced state on `(|+...+>, |-...->)`,
/// traced over all photon factors of `state`.
pub fn system_block(state: &StateVector, n_spins: usize) -> Result<LinOp> {
    let keep: Vec<usize> = (0..n_spins).collect();
    let last = (1usize << n_spins) - 1;
    let el = |r, c| state.reduced_element(&keep, r, c);
    LinOp::from_rows(&[vec![el(0, 0)?, el(0, last)?], vec![el(last, 0)?, el(last, last)?]])
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayPoint {
    pub n: usize,
    pub coherence: f64,
}

/// `|αβ*| |g|ⁿ` for `n = 0..=n_max`.
pub fn decay_curve(alpha: C64, beta: C64, g: EnvOverlap, n_max: usize) -> Result<Vec<DecayPoint>> {
    let base = reduced_after_scattering(alpha, beta, &[])?[(0, 1)].norm();
    let mut out = Vec::with_capacity(n_max + 1);
    let mut c = base;
    for n in 0..=n_max {
        out.push(DecayPoint { n, coherence: c });
        c *= g.0.norm();
    }
    Ok(out)
}
