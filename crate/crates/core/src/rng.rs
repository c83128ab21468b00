//! Seeded generators and random quantum objects.
//!
//! Every sweep derives one ChaCha8 stream per task from `(seed, stream)`, so
//! results do not depend on how tasks are scheduled across threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{inner, DensityOp, LinOp, OpKind, StateVector, C64};

pub type SweepRng = ChaCha8Rng;

/// Default seed for bare invocations.
pub const DEFAULT_SEED: u64 = 0xB311;

pub fn seeded(seed: u64, stream: u64) -> SweepRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> LinOp {
    let mut m = LinOp::zeros(dim);
    for i in 0..dim {
        m[(i, i)] = C64::new(rng.sample(StandardNormal), 0.0);
        for j in (i + 1)..dim {
            let z = gaussian_complex(rng);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m.checked(OpKind::Hermitian, 0.0).expect("hermitian by construction")
}

/// Haar-distributed unitary via Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> LinOp {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| gaussian_complex(rng)).collect();
        // two passes keep the basis orthonormal to working precision
        for _ in 0..2 {
            for u in &cols {
                let proj = inner(u, &v);
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
        }
        let n = crate::linalg::norm(&v);
        if n < 1e-8 {
            continue;
        }
        cols.push(v.into_iter().map(|x| x / n).collect());
    }
    let mut u = LinOp::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            u[(i, j)] = x;
        }
    }
    u.checked(OpKind::Unitary, 1e-12).expect("orthonormal columns")
}

/// Uniformly random pure state on the given factors.
pub fn random_state<R: Rng + ?Sized>(factor_dims: &[usize], rng: &mut R) -> StateVector {
    let dim = factor_dims.iter().product();
    let amps = (0..dim).map(|_| gaussian_complex(rng)).collect();
    StateVector::new(amps, factor_dims.to_vec())
        .and_then(StateVector::normalized)
        .expect("valid dimensions")
}

/// Full-rank random density operator `G G† / Tr(G G†)` with Ginibre `G`.
pub fn random_density<R: Rng + ?Sized>(factor_dims: &[usize], rng: &mut R) -> DensityOp {
    let dim: usize = factor_dims.iter().product();
    let g = LinOp::from_entries(dim, (0..dim * dim).map(|_| gaussian_complex(rng)).collect());
    let mut gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    gg = gg.scale(C64::new(1.0 / tr, 0.0));
    // restore exact Hermiticity lost to rounding
    let sym = (&gg + &gg.adjoint()).scale(C64::new(0.5, 0.0));
    DensityOp::new(sym, factor_dims.to_vec()).expect("positive by construction")
}

/// Qubit density operator `(I + r·σ)/2` with `r` uniform in the Bloch ball.
pub fn random_qubit_density<R: Rng + ?Sized>(rng: &mut R) -> DensityOp {
    let r = loop {
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            break v;
        }
    };
    bloch_density(r)
}

/// `(I + r·σ)/2`; caller guarantees `|r| <= 1`.
pub fn bloch_density(r: [f64; 3]) -> DensityOp {
    let m = LinOp::from_entries(
        2,
        vec![
            C64::new(0.5 * (1.0 + r[2]), 0.0),
            C64::new(0.5 * r[0], -0.5 * r[1]),
            C64::new(0.5 * r[0], 0.5 * r[1]),
            C64::new(0.5 * (1.0 - r[2]), 0.0),
        ],
    );
    DensityOp::new(m, vec![2]).expect("Bloch vector inside the ball")
}
