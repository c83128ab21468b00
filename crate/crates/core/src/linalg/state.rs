use super::{
    eig_hermitian, ensure_operator_dim, ensure_vector_dim, inner, offsets, split_factors, LinOp,
    OpKind, C64, TOL, ZERO,
};
use crate::error::{Error, Result};

/// Normalizable amplitude vector over a tensor-product space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    factor_dims: Vec<usize>,
}

fn check_factors(dim: usize, factor_dims: &[usize]) -> Result<()> {
    if dim == 0 || factor_dims.contains(&0) || factor_dims.iter().product::<usize>() != dim {
        return Err(Error::FactorDims {
            factors: factor_dims.to_vec(),
            dim,
        });
    }
    Ok(())
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim.is_power_of_two() {
        Ok(dim.trailing_zeros() as usize)
    } else {
        Err(Error::InvalidArgument(format!("dimension {dim} is not a power of two")))
    }
}

impl StateVector {
    pub fn new(amps: Vec<C64>, factor_dims: Vec<usize>) -> Result<Self> {
        ensure_vector_dim(amps.len())?;
        check_factors(amps.len(), &factor_dims)?;
        Ok(StateVector { amps, factor_dims })
    }

    /// A register of qubits; the length must be a power of two.
    pub fn qubits(amps: Vec<C64>) -> Result<Self> {
        let n = qubit_count(amps.len())?;
        Self::new(amps, vec![2; n])
    }

    pub fn basis(factor_dims: &[usize], index: usize) -> Result<Self> {
        let dim: usize = factor_dims.iter().product();
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = C64::new(1.0, 0.0);
        Self::new(amps, factor_dims.to_vec())
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn norm(&self) -> f64 {
        super::norm(&self.amps)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero vector".into()));
        }
        for a in &mut self.amps {
            *a /= n;
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(inner(&self.amps, &other.amps))
    }

    pub fn apply(&self, op: &LinOp) -> Result<StateVector> {
        Ok(StateVector {
            amps: op.apply(&self.amps)?,
            factor_dims: self.factor_dims.clone(),
        })
    }

    /// Applies `op` to factor `site` only (identity elsewhere), without forming the full operator.
    pub fn apply_local(&self, site: usize, op: &LinOp) -> Result<StateVector> {
        let count = self.factor_dims.len();
        if site >= count {
            return Err(Error::SubsystemOutOfRange { index: site, count });
        }
        let d = self.factor_dims[site];
        if op.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: op.dim(),
            });
        }
        let inner_stride: usize = self.factor_dims[site + 1..].iter().product();
        let block = d * inner_stride;
        let mut out = vec![ZERO; self.dim()];
        let mut local = vec![ZERO; d];
        for outer in (0..self.dim()).step_by(block) {
            for lo in 0..inner_stride {
                for (k, slot) in local.iter_mut().enumerate() {
                    *slot = self.amps[outer + k * inner_stride + lo];
                }
                for i in 0..d {
                    let mut acc = ZERO;
                    for (k, &x) in local.iter().enumerate() {
                        acc += op[(i, k)] * x;
                    }
                    out[outer + i * inner_stride + lo] = acc;
                }
            }
        }
        Ok(StateVector {
            amps: out,
            factor_dims: self.factor_dims.clone(),
        })
    }

    pub fn density(&self) -> Result<DensityOp> {
        DensityOp::from_pure(self)
    }

    /// Reduced density operator on `keep`, summed directly from amplitudes.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityOp> {
        let (kept, traced) = split_factors(self.factor_dims.len(), keep)?;
        let k_off = offsets(&self.factor_dims, &kept);
        let t_off = offsets(&self.factor_dims, &traced);
        let dk = k_off.len();
        ensure_operator_dim(dk)?;
        let mut m = LinOp::zeros(dk);
        for a in 0..dk {
            for b in a..dk {
                let mut acc = ZERO;
                for &t in &t_off {
                    acc += self.amps[k_off[a] + t] * self.amps[k_off[b] + t].conj();
                }
                m[(a, b)] = acc;
                m[(b, a)] = acc.conj();
            }
        }
        let kept_dims = kept.iter().map(|&f| self.factor_dims[f]).collect();
        Ok(DensityOp::trusted(m, kept_dims))
    }

    /// One entry of the reduced density operator on `keep`; works past the operator cap.
    pub fn reduced_element(&self, keep: &[usize], row: usize, col: usize) -> Result<C64> {
        let (kept, traced) = split_factors(self.factor_dims.len(), keep)?;
        let k_off = offsets(&self.factor_dims, &kept);
        if row >= k_off.len() || col >= k_off.len() {
            return Err(Error::InvalidArgument("reduced element index out of range".into()));
        }
        let t_off = offsets(&self.factor_dims, &traced);
        Ok(t_off
            .iter()
            .map(|&t| self.amps[k_off[row] + t] * self.amps[k_off[col] + t].conj())
            .sum())
    }
}

/// Density operator with declared tensor factors.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp {
    op: LinOp,
    factor_dims: Vec<usize>,
}

impl DensityOp {
    pub fn new(op: LinOp, factor_dims: Vec<usize>) -> Result<Self> {
        Self::new_tol(op, factor_dims, TOL)
    }

    /// Validates Hermiticity, unit trace and positivity at `tol`.
    pub fn new_tol(op: LinOp, factor_dims: Vec<usize>, tol: f64) -> Result<Self> {
        ensure_operator_dim(op.dim())?;
        check_factors(op.dim(), &factor_dims)?;
        let op = op
            .checked(OpKind::Hermitian, tol)
            .map_err(|e| Error::InvalidDensity(e.to_string()))?;
        let tr = op.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidDensity(format!("trace {:.3e}{:+.3e}i", tr.re, tr.im)));
        }
        let min = eig_hermitian(&op)?.values[0];
        if min < -tol {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(DensityOp { op, factor_dims })
    }

    /// Skips validation for operators that are densities by construction.
    pub(crate) fn trusted(op: LinOp, factor_dims: Vec<usize>) -> Self {
        DensityOp {
            op: op.with_kind_unchecked(OpKind::Hermitian),
            factor_dims,
        }
    }

    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        ensure_operator_dim(psi.dim())?;
        let n = psi.norm();
        if n == 0.0 {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        let v: Vec<C64> = psi.amps.iter().map(|a| a / n).collect();
        Ok(Self::trusted(LinOp::outer(&v, &v)?, psi.factor_dims.clone()))
    }

    pub fn maximally_mixed(factor_dims: &[usize]) -> Result<Self> {
        let dim: usize = factor_dims.iter().product();
        ensure_operator_dim(dim)?;
        check_factors(dim, factor_dims)?;
        Ok(Self::trusted(
            LinOp::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
            factor_dims.to_vec(),
        ))
    }

    /// Convex combination; weights must be non-negative and sum to one.
    pub fn mixture(terms: &[(f64, DensityOp)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidWeights("empty mixture".into()))?;
        let mut acc = LinOp::zeros(first.1.dim());
        let mut total = 0.0;
        for (w, rho) in terms {
            if *w < 0.0 {
                return Err(Error::InvalidWeights(format!("negative weight {w}")));
            }
            if rho.factor_dims != first.1.factor_dims {
                return Err(Error::DimensionMismatch {
                    expected: first.1.dim(),
                    got: rho.dim(),
                });
            }
            acc = &acc + &rho.op.scale(C64::new(*w, 0.0));
            total += w;
        }
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self::trusted(acc, first.1.factor_dims.clone()))
    }

    pub fn op(&self) -> &LinOp {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eig_hermitian(&self.op)?.values)
    }

    pub fn purity(&self) -> f64 {
        self.op.trace_product(&self.op).re
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOp> {
        partial_trace(self, keep)
    }

    /// `U ρ U†`.
    pub fn evolve(&self, u: &LinOp) -> Result<DensityOp> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.dim(),
            });
        }
        Ok(Self::trusted(&(u * &self.op) * &u.adjoint(), self.factor_dims.clone()))
    }
}

/// Reduced density operator on the factors in `keep` (0-based, any order;
/// the result keeps the original factor order).
pub fn partial_trace(rho: &DensityOp, keep: &[usize]) -> Result<DensityOp> {
    let (kept, traced) = split_factors(rho.factor_dims.len(), keep)?;
    let k_off = offsets(&rho.factor_dims, &kept);
    let t_off = offsets(&rho.factor_dims, &traced);
    let dk = k_off.len();
    let mut m = LinOp::zeros(dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = ZERO;
            for &t in &t_off {
                acc += rho.op[(k_off[a] + t, k_off[b] + t)];
            }
            m[(a, b)] = acc;
        }
    }
    let kept_dims = kept.iter().map(|&f| rho.factor_dims[f]).collect();
    Ok(DensityOp::trusted(m, kept_dims))
}

/// Anything Born-rule probabilities can be read from.
pub trait QuantumState {
    fn factor_dims(&self) -> &[usize];

    fn dim(&self) -> usize {
        self.factor_dims().iter().product()
    }

    /// `<O>`; for a state vector this is normalized by `<ψ|ψ>`.
    fn expectation(&self, op: &LinOp) -> Result<C64>;

    fn prob(&self, projector: &LinOp) -> Result<f64> {
        Ok(self.expectation(projector)?.re)
    }
}

impl QuantumState for StateVector {
    fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    fn expectation(&self, op: &LinOp) -> Result<C64> {
        let n2 = inner(&self.amps, &self.amps).re;
        Ok(op.sandwich(&self.amps, &self.amps)? / n2)
    }
}

impl QuantumState for DensityOp {
    fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    fn expectation(&self, op: &LinOp) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: op.dim(),
            });
        }
        Ok(op.trace_product(&self.op))
    }
}

/// Checks that `projs` are Hermitian idempotents, pairwise orthogonal and sum to the identity.
pub fn validate_projector_family(projs: &[LinOp], dim: usize, tol: f64) -> Result<()> {
    if projs.is_empty() {
        return Err(Error::InvalidProjectors("empty projector set".into()));
    }
    let mut sum = LinOp::zeros(dim);
    for (i, p) in projs.iter().enumerate() {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        if !p.is_projector(tol) {
            return Err(Error::InvalidProjectors(format!("element {i} is not a projector")));
        }
        for (j, q) in projs.iter().enumerate().skip(i + 1) {
            let r = (p * q).frobenius_norm();
            if r > tol {
                return Err(Error::InvalidProjectors(format!(
                    "elements {i} and {j} are not orthogonal ({r:.3e})"
                )));
            }
        }
        sum = &sum + p;
    }
    let r = sum.max_abs_diff(&LinOp::identity(dim));
    if r > tol {
        return Err(Error::InvalidProjectors(format!("set is incomplete ({r:.3e})")));
    }
    Ok(())
}

/// Born probabilities of a complete orthogonal projector family.
pub fn measure_probs<S: QuantumState>(state: &S, projs: &[LinOp], tol: f64) -> Result<Vec<f64>> {
    validate_projector_family(projs, state.dim(), tol)?;
    projs.iter().map(|p| state.prob(p)).collect()
}

pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

/// Kronecker product with `a` as the slower-varying factor.
pub fn tensor<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Result<Self> {
        ensure_vector_dim(self.dim() * other.dim())?;
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        let mut factor_dims = self.factor_dims.clone();
        factor_dims.extend_from_slice(&other.factor_dims);
        Ok(StateVector { amps, factor_dims })
    }
}

impl Tensor for LinOp {
    fn tensor(&self, other: &Self) -> Result<Self> {
        self.kron(other)
    }
}

impl Tensor for DensityOp {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let op = self.op.kron(&other.op)?;
        let mut factor_dims = self.factor_dims.clone();
        factor_dims.extend_from_slice(&other.factor_dims);
        Ok(DensityOp::trusted(op, factor_dims))
    }
}
