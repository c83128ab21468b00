use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ensure_operator_dim, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// What a [`LinOp`] has been checked to be.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    General,
    Hermitian,
    Unitary,
    Projector,
}

impl OpKind {
    fn label(self) -> &'static str {
        match self {
            OpKind::General => "general",
            OpKind::Hermitian => "hermitian",
            OpKind::Unitary => "unitary",
            OpKind::Projector => "a projector",
        }
    }
}

/// Dense square complex matrix, row-major.
///
/// The `kind` tag is only ever set through [`LinOp::checked`] (or by
/// constructors that produce the kind by construction), so a tag other than
/// `General` means the corresponding predicate held at creation time.
#[derive(Clone, PartialEq)]
pub struct LinOp {
    dim: usize,
    entries: Vec<C64>,
    kind: OpKind,
}

impl fmt::Debug for LinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "LinOp({}x{}, {:?})", self.dim, self.dim, self.kind)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl LinOp {
    pub fn zeros(dim: usize) -> Self {
        LinOp {
            dim,
            entries: vec![ZERO; dim * dim],
            kind: OpKind::General,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = ONE;
        }
        m.kind = OpKind::Projector;
        m
    }

    /// Builds from row-major entries. Panics if `entries.len() != dim * dim`.
    pub fn from_entries(dim: usize, entries: Vec<C64>) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count must be dim^2");
        LinOp {
            dim,
            entries,
            kind: OpKind::General,
        }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Ok(Self::from_entries(dim, entries))
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Self {
        Self::from_entries(dim, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// `|ket><bra|`.
    pub fn outer(ket: &[C64], bra: &[C64]) -> Result<Self> {
        if ket.len() != bra.len() {
            return Err(Error::DimensionMismatch {
                expected: ket.len(),
                got: bra.len(),
            });
        }
        let dim = ket.len();
        let mut m = Self::zeros(dim);
        for (i, k) in ket.iter().enumerate() {
            for (j, b) in bra.iter().enumerate() {
                m.entries[i * dim + j] = k * b.conj();
            }
        }
        Ok(m)
    }

    /// Rank-one projector onto a (not necessarily normalized) vector.
    pub fn projector_onto(v: &[C64]) -> Result<Self> {
        let n2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if n2 == 0.0 {
            return Err(Error::InvalidArgument("projector onto zero vector".into()));
        }
        let mut p = Self::outer(v, v)?.scale(C64::new(1.0 / n2, 0.0));
        p.kind = OpKind::Projector;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    /// Validates the requested kind and tags the operator with it.
    pub fn checked(mut self, kind: OpKind, tol: f64) -> Result<Self> {
        let residual = match kind {
            OpKind::General => 0.0,
            OpKind::Hermitian => self.hermitian_residual(),
            OpKind::Unitary => self.unitary_residual(),
            OpKind::Projector => self.hermitian_residual().max(self.idempotent_residual()),
        };
        if residual > tol {
            return Err(Error::NotOfKind {
                kind: kind.label(),
                residual,
            });
        }
        self.kind = kind;
        Ok(self)
    }

    /// Drops the kind tag; used after arithmetic that may break it.
    pub fn general(mut self) -> Self {
        self.kind = OpKind::General;
        self
    }

    pub(crate) fn with_kind_unchecked(mut self, kind: OpKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        out.kind = self.kind;
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_entries(self.dim, self.entries.iter().map(|&z| z * s).collect())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &LinOp) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_residual(&self) -> f64 {
        let n = self.dim;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                r = r.max((self.entries[i * n + j] - self.entries[j * n + i].conj()).norm());
            }
        }
        r
    }

    pub fn unitary_residual(&self) -> f64 {
        (self * &self.adjoint()).max_abs_diff(&LinOp::identity(self.dim))
    }

    pub fn idempotent_residual(&self) -> f64 {
        (self * self).max_abs_diff(self)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_residual() <= tol
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.idempotent_residual() <= tol
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &LinOp) -> LinOp {
        &(self * other) - &(other * self)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok((0..self.dim)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum::<C64>()
            })
            .collect())
    }

    /// `<u|A|v>`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> Result<C64> {
        let av = self.apply(v)?;
        Ok(u.iter().zip(&av).map(|(a, b)| a.conj() * b).sum())
    }

    /// Kronecker product with `self` as the slower-varying index.
    pub fn kron(&self, other: &LinOp) -> Result<LinOp> {
        let (n, m) = (self.dim, other.dim);
        ensure_operator_dim(n * m)?;
        let d = n * m;
        let mut out = LinOp::zeros(d);
        for i in 0..n {
            for j in 0..n {
                let a = self.entries[i * n + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out.entries[(i * m + k) * d + (j * m + l)] = a * other.entries[k * m + l];
                    }
                }
            }
        }
        out.kind = match (self.kind, other.kind) {
            (OpKind::Projector, OpKind::Projector) => OpKind::Projector,
            (OpKind::Unitary, OpKind::Unitary) => OpKind::Unitary,
            (a, b) if a != OpKind::General && b != OpKind::General
                && a != OpKind::Unitary && b != OpKind::Unitary => OpKind::Hermitian,
            _ => OpKind::General,
        };
        Ok(out)
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &LinOp) -> C64 {
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.entries[i * n + k] * other.entries[k * n + i];
            }
        }
        acc
    }

    /// Rows of `[re, im]` pairs, the JSON debug layout.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim)
            .map(|i| self.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect()
    }

    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<LinOp> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|p| C64::new(p[0], p[1])).collect())
            .collect();
        LinOp::from_rows(&rows)
    }
}

impl Index<(usize, usize)> for LinOp {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for LinOp {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        self.kind = OpKind::General;
        &mut self.entries[i * self.dim + j]
    }
}

impl Mul for &LinOp {
    type Output = LinOp;
    fn mul(self, rhs: &LinOp) -> LinOp {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in product");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.entries[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        LinOp::from_entries(n, out)
    }
}

impl Add for &LinOp {
    type Output = LinOp;
    fn add(self, rhs: &LinOp) -> LinOp {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sum");
        LinOp::from_entries(
            self.dim,
            self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        )
    }
}

impl Sub for &LinOp {
    type Output = LinOp;
    fn sub(self, rhs: &LinOp) -> LinOp {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in difference");
        LinOp::from_entries(
            self.dim,
            self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        )
    }
}

/// Pauli matrices in the `{|+>, |->}` (σz eigenbasis) ordering, `σx σy = i σz`.
pub mod pauli {
    use super::*;

    pub fn x() -> LinOp {
        LinOp::from_real(2, &[0.0, 1.0, 1.0, 0.0]).with_kind_unchecked(OpKind::Hermitian)
    }

    pub fn y() -> LinOp {
        let i = Complex64::i();
        LinOp::from_entries(2, vec![ZERO, -i, i, ZERO]).with_kind_unchecked(OpKind::Hermitian)
    }

    pub fn z() -> LinOp {
        LinOp::from_real(2, &[1.0, 0.0, 0.0, -1.0]).with_kind_unchecked(OpKind::Hermitian)
    }

    /// `cosθ σx + sinθ σy`, the spin component in the Oxy plane at angle θ from Ox.
    pub fn in_plane(theta: f64) -> LinOp {
        let (s, c) = theta.sin_cos();
        LinOp::from_entries(2, vec![ZERO, C64::new(c, -s), C64::new(c, s), ZERO])
            .with_kind_unchecked(OpKind::Hermitian)
    }

    /// `cos a σz + sin a σx`, the spin component in the xOz plane at angle `a` from Oz.
    pub fn xz_plane(a: f64) -> LinOp {
        let (s, c) = a.sin_cos();
        LinOp::from_real(2, &[c, s, s, -c]).with_kind_unchecked(OpKind::Hermitian)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let xy = &pauli::x() * &pauli::y();
        let iz = pauli::z().scale(Complex64::i());
        assert!(xy.max_abs_diff(&iz) < 1e-15);
        for p in [pauli::x(), pauli::y(), pauli::z()] {
            assert!((&p * &p).max_abs_diff(&LinOp::identity(2)) < 1e-15);
        }
    }

    #[test]
    fn kind_checks() {
        assert!(pauli::x().checked(OpKind::Unitary, 1e-12).is_ok());
        assert!(pauli::x().checked(OpKind::Projector, 1e-12).is_err());
        let p = LinOp::projector_onto(&[ONE, ONE]).unwrap();
        assert!(p.is_projector(1e-14));
        let shear = LinOp::from_real(2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            shear.checked(OpKind::Hermitian, 1e-10),
            Err(Error::NotOfKind { .. })
        ));
    }

    #[test]
    fn kron_identity() {
        let i4 = LinOp::identity(2).kron(&LinOp::identity(2)).unwrap();
        assert_eq!(i4.max_abs_diff(&LinOp::identity(4)), 0.0);
        assert_eq!(i4.kind(), OpKind::Projector);
    }

    #[test]
    fn pairs_layout() {
        let y = pauli::y();
        let pairs = y.to_pairs();
        assert_eq!(pairs[0][1], [0.0, -1.0]);
        assert_eq!(LinOp::from_pairs(&pairs).unwrap().max_abs_diff(&y), 0.0);
    }
}
