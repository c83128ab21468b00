//! Exact small-dimension complex linear algebra.
//!
//! Subsystem ordering is fixed crate-wide: factor 0 is the slowest-varying
//! Kronecker index, so the ket `|a, b, c>` of three qubits lives at index
//! `4a + 2b + c` with `+ -> 0` and `- -> 1`.

mod eigen;
mod op;
mod state;

use num_complex::Complex64;

pub use eigen::{eig_hermitian, eig_hermitian_tol, evolution, spectral_projectors, Eigen, OFF_DIAGONAL_TOL};
pub use op::{pauli, LinOp, OpKind};
pub use state::{
    measure_probs, partial_trace, tensor, validate_projector_family, DensityOp, QuantumState,
    StateVector, Tensor,
};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Default tolerance for validation predicates.
pub const TOL: f64 = 1e-10;

/// Largest state-vector dimension accepted anywhere.
pub const MAX_VECTOR_DIM: usize = 1 << 12;

/// Largest dimension for dense operator routines (products, eigensolver, density operators).
pub const MAX_OPERATOR_DIM: usize = 1 << 6;

pub(crate) fn ensure_vector_dim(dim: usize) -> Result<()> {
    if dim > MAX_VECTOR_DIM {
        return Err(Error::DimensionCap {
            dim,
            cap: MAX_VECTOR_DIM,
        });
    }
    Ok(())
}

pub(crate) fn ensure_operator_dim(dim: usize) -> Result<()> {
    if dim > MAX_OPERATOR_DIM {
        return Err(Error::DimensionCap {
            dim,
            cap: MAX_OPERATOR_DIM,
        });
    }
    Ok(())
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `<u|v>`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Offsets of every multi-index over `factors` (slowest first) inside the full space.
pub(crate) fn offsets(dims: &[usize], factors: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for f in (0..dims.len().saturating_sub(1)).rev() {
        strides[f] = strides[f + 1] * dims[f + 1];
    }
    let mut out = vec![0usize];
    for &f in factors {
        let mut next = Vec::with_capacity(out.len() * dims[f]);
        for &base in &out {
            for digit in 0..dims[f] {
                next.push(base + digit * strides[f]);
            }
        }
        out = next;
    }
    out
}

/// Validates a subsystem selection and returns (sorted kept, traced) factor lists.
pub(crate) fn split_factors(n_factors: usize, keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    if keep.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= n_factors) {
        return Err(Error::SubsystemOutOfRange {
            index: bad,
            count: n_factors,
        });
    }
    let traced = (0..n_factors).filter(|f| !kept.contains(f)).collect();
    Ok((kept, traced))
}
