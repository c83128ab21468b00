//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary, then applies the classical real Jacobi rotation to the resulting
//! real symmetric 2x2 block. Sweeps continue until the off-diagonal Frobenius
//! norm drops below `OFF_DIAGONAL_TOL` (scaled by the matrix norm when that
//! exceeds one).

use super::{ensure_operator_dim, LinOp, OpKind, C64, ONE, TOL, ZERO};
use crate::error::{Error, Result};

pub const OFF_DIAGONAL_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: LinOp,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> LinOp {
        let d = LinOp::diagonal(&self.values.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
        &(&self.vectors * &d) * &self.vectors.adjoint()
    }
}

pub fn eig_hermitian(h: &LinOp) -> Result<Eigen> {
    eig_hermitian_tol(h, TOL)
}

/// Same as [`eig_hermitian`] with an explicit Hermiticity tolerance.
pub fn eig_hermitian_tol(h: &LinOp, tol: f64) -> Result<Eigen> {
    let n = h.dim();
    ensure_operator_dim(n)?;
    let scale = h.frobenius_norm().max(1.0);
    let residual = h.hermitian_residual();
    if residual > tol * scale {
        return Err(Error::NotOfKind {
            kind: "hermitian",
            residual,
        });
    }

    // Symmetrize so the rotations act on an exactly Hermitian matrix.
    let mut a = vec![ZERO; n * n];
    for i in 0..n {
        a[i * n + i] = C64::new(h[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            a[i * n + j] = z;
            a[j * n + i] = z.conj();
        }
    }
    let mut v = vec![ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = ONE;
    }

    let threshold = OFF_DIAGONAL_TOL * scale;
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a, n);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let values = order.iter().map(|&k| a[k * n + k].re).collect();
    let mut vectors = LinOp::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, col)] = v[i * n + k];
        }
    }
    Ok(Eigen {
        values,
        vectors: vectors.with_kind_unchecked(OpKind::Unitary),
    })
}

fn off_diagonal_norm(a: &[C64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(a: &mut [C64], v: &mut [C64], n: usize, p: usize, q: usize) {
    let z = a[p * n + q];
    let r = z.norm();
    if r < f64::MIN_POSITIVE {
        return;
    }
    let phase = z / r; // e^{iφ}
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]] restricted to (p, q).
    let gpp = C64::new(c, 0.0);
    let gpq = C64::new(s, 0.0);
    let gqp = -phase.conj() * s;
    let gqq = phase.conj() * c;

    // A <- A G
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = akp * gpp + akq * gqp;
        a[k * n + q] = akp * gpq + akq * gqq;
    }
    // A <- G† A
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = gpp.conj() * apk + gqp.conj() * aqk;
        a[q * n + k] = gpq.conj() * apk + gqq.conj() * aqk;
    }
    a[p * n + q] = ZERO;
    a[q * n + p] = ZERO;
    a[p * n + p] = C64::new(app - t * r, 0.0);
    a[q * n + q] = C64::new(aqq + t * r, 0.0);

    // V <- V G
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * gpp + vkq * gqp;
        v[k * n + q] = vkp * gpq + vkq * gqq;
    }
}

/// Groups eigenvectors whose eigenvalues agree within `cluster_tol` (after
/// sorting) and returns one spectral projector per distinct eigenvalue.
pub fn spectral_projectors(h: &LinOp, cluster_tol: f64) -> Result<Vec<(f64, LinOp)>> {
    let eig = eig_hermitian(h)?;
    let n = h.dim();
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate() {
        match out.last_mut() {
            Some((rep, members)) if (lambda - *rep).abs() <= cluster_tol => members.push(k),
            _ => out.push((lambda, vec![k])),
        }
    }
    Ok(out
        .into_iter()
        .map(|(_, members)| {
            let mut p = LinOp::zeros(n);
            let mut mean = 0.0;
            for &k in &members {
                let col = eig.vector(k);
                p = &p + &LinOp::outer(&col, &col).expect("same dimension");
                mean += eig.values[k];
            }
            mean /= members.len() as f64;
            (mean, p.with_kind_unchecked(OpKind::Projector))
        })
        .collect())
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn evolution(h: &LinOp, t: f64) -> Result<LinOp> {
    let eig = eig_hermitian(h)?;
    let phases: Vec<C64> = eig
        .values
        .iter()
        .map(|&e| C64::from_polar(1.0, -e * t))
        .collect();
    let d = LinOp::diagonal(&phases);
    Ok((&(&eig.vectors * &d) * &eig.vectors.adjoint()).with_kind_unchecked(OpKind::Unitary))
}
