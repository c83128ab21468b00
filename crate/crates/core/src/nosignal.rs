//! Remote-observer probabilities and their independence from the distant choice.
//!
//! States are bipartite with factors `[A, B]`. The same routines apply to a
//! single space carrying commuting projector sets for the two regions, after
//! [`commutation_residual`] confirms they commute.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::histories::{sequence_prob, TimeGrid};
use crate::linalg::{inner, spectral_projectors, DensityOp, LinOp, OpKind, C64, ZERO};
use crate::par::{self, Exec};
use crate::rng::{random_density, random_hermitian, seeded};

/// Eigenvalues closer than this share one spectral projector.
pub const DEGENERACY_TOL: f64 = 1e-9;
const CHECK_TOL: f64 = 1e-12;

/// Local observables with their degeneracy ranges.
#[derive(Clone, Debug)]
pub struct ObservablePair {
    pub o_a: LinOp,
    pub o_b: LinOp,
    /// `(eigenvalue, projector)` per distinct eigenvalue of each observable.
    pub ranges_a: Vec<(f64, LinOp)>,
    pub ranges_b: Vec<(f64, LinOp)>,
}

impl ObservablePair {
    pub fn new(o_a: LinOp, o_b: LinOp) -> Result<Self> {
        let o_a = o_a.checked(OpKind::Hermitian, CHECK_TOL)?;
        let o_b = o_b.checked(OpKind::Hermitian, CHECK_TOL)?;
        let ranges_a = spectral_projectors(&o_a, DEGENERACY_TOL)?;
        let ranges_b = spectral_projectors(&o_b, DEGENERACY_TOL)?;
        Ok(ObservablePair { o_a, o_b, ranges_a, ranges_b })
    }
}

fn bipartite_dims(rho: &DensityOp) -> Result<(usize, usize)> {
    match rho.factor_dims() {
        [a, b] => Ok((*a, *b)),
        other => Err(Error::FactorDims {
            factors: other.to_vec(),
            dim: rho.dim(),
        }),
    }
}

/// `ρ_B = Σk <φk|ρ|φk>` over the orthonormal basis `{φk}` of factor A.
pub fn partial_trace_in_basis(rho: &DensityOp, basis: &[Vec<C64>]) -> Result<LinOp> {
    let (da, db) = bipartite_dims(rho)?;
    check_orthonormal_basis(basis, da)?;
    let m = rho.op();
    let mut out = LinOp::zeros(db);
    for phi in basis {
        for i in 0..db {
            for j in 0..db {
                let mut acc = ZERO;
                for a in 0..da {
                    for ap in 0..da {
                        acc += phi[a].conj() * m[(a * db + i, ap * db + j)] * phi[ap];
                    }
                }
                out[(i, j)] += acc;
            }
        }
    }
    Ok(out)
}

fn check_orthonormal_basis(basis: &[Vec<C64>], dim: usize) -> Result<()> {
    if basis.len() != dim {
        return Err(Error::InvalidArgument(format!("basis has {} vectors, need {dim}", basis.len())));
    }
    for (i, u) in basis.iter().enumerate() {
        if u.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: u.len() });
        }
        for (j, v) in basis.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            if (inner(u, v) - C64::new(want, 0.0)).norm() > CHECK_TOL {
                return Err(Error::InvalidArgument(format!("basis vectors {i} and {j} are not orthonormal")));
            }
        }
    }
    Ok(())
}

/// Orthonormal eigenbasis of `o`, grouped by degeneracy range.
fn eigenbasis(o: &LinOp) -> Result<Vec<Vec<C64>>> {
    let e = crate::linalg::eig_hermitian(o)?;
    Ok((0..o.dim()).map(|k| e.vector(k)).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub eigenvalue: f64,
    pub probability: f64,
}

/// `P(Bn) = Tr{Σ_{i∈Dn} |θi><θi| ρ_B}` with `ρ_B` summed in the `O_A` eigenbasis.
pub fn reduced_probabilities(rho: &DensityOp, o_a: &LinOp, o_b: &LinOp) -> Result<Vec<Outcome>> {
    let (da, db) = bipartite_dims(rho)?;
    if o_a.dim() != da || o_b.dim() != db {
        return Err(Error::DimensionMismatch {
            expected: da * db,
            got: o_a.dim() * o_b.dim(),
        });
    }
    let pair = ObservablePair::new(o_a.clone(), o_b.clone())?;
    let rho_b = partial_trace_in_basis(rho, &eigenbasis(&pair.o_a)?)?;
    Ok(pair
        .ranges_b
        .iter()
        .map(|(lambda, p)| Outcome {
            eigenvalue: *lambda,
            probability: p.trace_product(&rho_b).re,
        })
        .collect())
}

/// `max |[Pa, Pb]|` over all pairs from the two sets.
pub fn commutation_residual(a_set: &[LinOp], b_set: &[LinOp]) -> f64 {
    let mut worst = 0.0f64;
    for a in a_set {
        for b in b_set {
            worst = worst.max(a.commutator(b).max_abs_diff(&LinOp::zeros(a.dim())));
        }
    }
    worst
}

/// `Σm Tr{Pn Pm ρ Pm Pn}` for each `n`: the B distribution after an unread
/// measurement of the A set. The sets must commute.
pub fn marginal_after(rho: &DensityOp, a_set: &[LinOp], b_set: &[LinOp]) -> Result<Vec<f64>> {
    let r = commutation_residual(a_set, b_set);
    if r > CHECK_TOL {
        return Err(Error::InvalidProjectors(format!("A and B projectors fail to commute ({r:e})")));
    }
    let grid = TimeGrid::static_grid(rho.dim(), 2)?;
    b_set
        .iter()
        .map(|pb| {
            a_set
                .iter()
                .map(|pa| sequence_prob(rho, &grid, &[pa.clone(), pb.clone()]))
                .sum()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct NoSignalReport {
    /// B distribution per `O_A` choice, from the reduced state.
    pub marginals: Vec<Vec<f64>>,
    /// Largest gap between the reduced-state and joint-sum paths.
    pub max_path_discrepancy: f64,
    /// Largest gap between the marginals of different `O_A` choices.
    pub max_choice_discrepancy: f64,
    pub holds: bool,
}

pub fn no_signaling_check(rho: &DensityOp, o_a_choices: &[LinOp], o_b: &LinOp) -> Result<NoSignalReport> {
    if o_a_choices.len() < 2 {
        return Err(Error::InvalidArgument("need at least two choices of O_A".into()));
    }
    let (da, db) = bipartite_dims(rho)?;
    let id_a = LinOp::identity(da);
    let id_b = LinOp::identity(db);
    let mut marginals = Vec::with_capacity(o_a_choices.len());
    let mut max_path = 0.0f64;
    for o_a in o_a_choices {
        let pair = ObservablePair::new(o_a.clone(), o_b.clone())?;
        let reduced: Vec<f64> = reduced_probabilities(rho, o_a, o_b)?.into_iter().map(|o| o.probability).collect();
        let a_set = pair
            .ranges_a
            .iter()
            .map(|(_, p)| p.kron(&id_b))
            .collect::<Result<Vec<_>>>()?;
        let b_set = pair
            .ranges_b
            .iter()
            .map(|(_, p)| id_a.kron(p))
            .collect::<Result<Vec<_>>>()?;
        let joint = marginal_after(rho, &a_set, &b_set)?;
        for (x, y) in reduced.iter().zip(&joint) {
            max_path = max_path.max((x - y).abs());
        }
        marginals.push(reduced);
    }
    let mut max_choice = 0.0f64;
    for m in &marginals[1..] {
        for (x, y) in m.iter().zip(&marginals[0]) {
            max_choice = max_choice.max((x - y).abs());
        }
    }
    Ok(NoSignalReport {
        marginals,
        max_path_discrepancy: max_path,
        max_choice_discrepancy: max_choice,
        holds: max_path < CHECK_TOL && max_choice < CHECK_TOL,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisReport {
    pub bases: usize,
    /// Largest entry gap between any basis result and the first.
    pub max_discrepancy: f64,
    /// Largest entry gap between the first basis result and the direct partial trace.
    pub reference_discrepancy: f64,
}

pub fn basis_independence(rho: &DensityOp, bases: &[Vec<Vec<C64>>]) -> Result<BasisReport> {
    if bases.is_empty() {
        return Err(Error::InvalidArgument("no bases supplied".into()));
    }
    let results = bases
        .iter()
        .map(|b| partial_trace_in_basis(rho, b))
        .collect::<Result<Vec<_>>>()?;
    let max_discrepancy = results.iter().map(|r| r.max_abs_diff(&results[0])).fold(0.0, f64::max);
    let direct = rho.partial_trace(&[1])?;
    Ok(BasisReport {
        bases: bases.len(),
        max_discrepancy,
        reference_discrepancy: results[0].max_abs_diff(direct.op()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedSweep {
    pub seed: u64,
    pub states: usize,
    pub max_path_discrepancy: f64,
    pub max_choice_discrepancy: f64,
}

/// Random bipartite states alternating between `2×2` and `2×4`, five random
/// `O_A` and one random `O_B` each; stream `i` generates state `i`.
pub fn random_sweep(seed: u64, states: usize, exec: Exec) -> Result<SeedSweep> {
    let reports = par::try_map_indexed(exec, states, |i| {
        let mut rng = seeded(seed, i as u64);
        let db = if i % 2 == 0 { 2 } else { 4 };
        let rho = random_density(&[2, db], &mut rng);
        let choices: Vec<LinOp> = (0..5).map(|_| random_hermitian(2, &mut rng)).collect();
        let o_b = random_hermitian(db, &mut rng);
        no_signaling_check(&rho, &choices, &o_b)
    })?;
    Ok(SeedSweep {
        seed,
        states,
        max_path_discrepancy: reports.iter().map(|r| r.max_path_discrepancy).fold(0.0, f64::max),
        max_choice_discrepancy: reports.iter().map(|r| r.max_choice_discrepancy).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{singlet, SpinDirection};
    use crate::ghz::ghz3;
    use crate::linalg::{pauli, Tensor};
    use crate::rng::{random_qubit_density, random_unitary};

    fn singlet_rho() -> DensityOp {
        singlet().density().unwrap()
    }

    #[test]
    fn singlet_marginal_is_flat() {
        let d = reduced_probabilities(&singlet_rho(), &pauli::x(), &pauli::z()).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|o| (o.probability - 0.5).abs() < 1e-15));
    }

    #[test]
    fn product_state_marginal_is_local() {
        let mut rng = seeded(1, 0);
        let r1 = random_qubit_density(&mut rng);
        let r2 = random_density(&[3], &mut rng);
        let rho = r1.tensor(&r2).unwrap();
        let o_b = random_hermitian(3, &mut rng);
        let d = reduced_probabilities(&rho, &pauli::y(), &o_b).unwrap();
        for (o, (_, p)) in d.iter().zip(spectral_projectors(&o_b, DEGENERACY_TOL).unwrap()) {
            assert!((o.probability - p.trace_product(r2.op()).re).abs() < 1e-14);
        }
    }

    #[test]
    fn ghz_third_particle() {
        let psi = ghz3(-1).unwrap();
        let rho = DensityOp::new(psi.density().unwrap().op().clone(), vec![4, 2]).unwrap();
        let d = reduced_probabilities(&rho, &random_hermitian(4, &mut seeded(2, 0)), &pauli::x()).unwrap();
        assert!(d.iter().all(|o| (o.probability - 0.5).abs() < 1e-14));
    }

    #[test]
    fn singlet_three_choices() {
        let choices = [pauli::z(), pauli::x(), SpinDirection::new(37f64.to_radians()).observable()];
        let r = no_signaling_check(&singlet_rho(), &choices, &pauli::z()).unwrap();
        assert!(r.holds, "{r:?}");
        for m in &r.marginals {
            assert!(m.iter().all(|p| (p - 0.5).abs() < 1e-14));
        }
    }

    #[test]
    fn random_states_do_not_signal() {
        let s = random_sweep(3, 100, Exec::default()).unwrap();
        assert!(s.max_path_discrepancy < 1e-12, "{s:?}");
        assert!(s.max_choice_discrepancy < 1e-12, "{s:?}");
    }

    #[test]
    fn identity_choice_matches_no_measurement() {
        let mut rng = seeded(4, 0);
        let rho = random_density(&[2, 2], &mut rng);
        let o_b = random_hermitian(2, &mut rng);
        let r = no_signaling_check(&rho, &[LinOp::identity(2), random_hermitian(2, &mut rng)], &o_b).unwrap();
        let rho_b = rho.partial_trace(&[1]).unwrap();
        let direct: Vec<f64> = spectral_projectors(&o_b, DEGENERACY_TOL)
            .unwrap()
            .iter()
            .map(|(_, p)| p.trace_product(rho_b.op()).re)
            .collect();
        for (x, y) in r.marginals[0].iter().zip(direct) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!(r.holds);
    }

    #[test]
    fn needs_two_choices() {
        assert!(no_signaling_check(&singlet_rho(), &[pauli::z()], &pauli::z()).is_err());
    }

    #[test]
    fn basis_choice_is_irrelevant() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let comp = vec![vec![C64::new(1.0, 0.0), ZERO], vec![ZERO, C64::new(1.0, 0.0)]];
        let xb = vec![vec![C64::new(h, 0.0), C64::new(h, 0.0)], vec![C64::new(h, 0.0), C64::new(-h, 0.0)]];
        let r = basis_independence(&singlet_rho(), &[comp, xb]).unwrap();
        assert!(r.max_discrepancy < 1e-15 && r.reference_discrepancy < 1e-15);

        let mut rng = seeded(5, 0);
        let rho = random_density(&[3, 2], &mut rng);
        let u = random_unitary(3, &mut rng);
        let rotated: Vec<Vec<C64>> = (0..3).map(|k| u.column(k)).collect();
        let comp3: Vec<Vec<C64>> = (0..3)
            .map(|k| (0..3).map(|j| if j == k { C64::new(1.0, 0.0) } else { ZERO }).collect())
            .collect();
        let r = basis_independence(&rho, &[comp3, rotated]).unwrap();
        assert!(r.max_discrepancy < 1e-13 && r.reference_discrepancy < 1e-13);
    }

    #[test]
    fn trivial_factor() {
        let mut rng = seeded(6, 0);
        let r = random_density(&[3], &mut rng);
        let rho = DensityOp::new(r.op().clone(), vec![1, 3]).unwrap();
        let b = partial_trace_in_basis(&rho, &[vec![C64::new(1.0, 0.0)]]).unwrap();
        assert!(b.max_abs_diff(r.op()) < 1e-16);
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let bad = vec![vec![C64::new(1.0, 0.0), ZERO], vec![C64::new(1.0, 0.0), ZERO]];
        assert!(basis_independence(&singlet_rho(), &[bad]).is_err());
    }

    #[test]
    fn delocalized_regions_on_one_space() {
        // one particle on 4 sites: region A = sites {0,1}, region B = sites {2,3}
        let mut rng = seeded(7, 0);
        let rho = random_density(&[4], &mut rng);
        let site = |k: usize| {
            let mut v = vec![ZERO; 4];
            v[k] = C64::new(1.0, 0.0);
            LinOp::projector_onto(&v).unwrap()
        };
        let region_b = &site(2) + &site(3);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut plus = vec![ZERO; 4];
        plus[0] = C64::new(h, 0.0);
        plus[1] = C64::new(h, 0.0);
        let p_plus = LinOp::projector_onto(&plus).unwrap();
        let a_choices = [
            vec![site(0), site(1), region_b.clone()],
            vec![p_plus.clone(), &(&(&site(0) + &site(1)) - &p_plus) + &region_b],
        ];
        let b_set = vec![site(2), site(3), &site(0) + &site(1)];
        let m0 = marginal_after(&rho, &a_choices[0], &b_set).unwrap();
        let m1 = marginal_after(&rho, &a_choices[1], &b_set).unwrap();
        for (x, y) in m0.iter().zip(&m1) {
            assert!((x - y).abs() < 1e-14);
        }
        // a B projector overlapping region A does not commute
        let mixed = vec![p_plus.clone(), &LinOp::identity(4) - &p_plus];
        let overlap = vec![site(0), &LinOp::identity(4) - &site(0)];
        assert!(commutation_residual(&mixed, &overlap) > 0.1);
        assert!(marginal_after(&rho, &mixed, &overlap).is_err());
    }
}
