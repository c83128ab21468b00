//! Sequential-measurement probabilities, history families and their consistency.
//!
//! A grid holds times `t1 < t2 < ...` and one unitary per interval, the first
//! being `U(t1, t0)`. Heisenberg projectors are `P̂(ti) = U†(ti,t0) P U(ti,t0)`
//! with `U(ti, t0) = Ui ... U1`, and a history `h` has class operator
//! `C_h = P̂k ... P̂1`, probability `Tr(C_h ρ C_h†)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, evolution, validate_projector_family, DensityOp, LinOp, OpKind, StateVector, C64, ZERO,
};
use crate::par::{self, Exec};

/// Unitarity and projector tolerance for grids and families.
pub const FAMILY_TOL: f64 = 1e-12;
/// Largest number of histories enumerated.
pub const MAX_HISTORIES: usize = 1_000_000;
/// Largest number of history pairs tabulated by [`consistency_matrix`].
pub const MAX_PAIRS: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct TimeGrid {
    t0: f64,
    times: Vec<f64>,
    unitaries: Vec<LinOp>,
    /// `U(ti, t0)` for each time.
    cumulative: Vec<LinOp>,
}

impl TimeGrid {
    pub fn new(t0: f64, times: Vec<f64>, unitaries: Vec<LinOp>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidArgument("at least one time is required".into()));
        }
        if unitaries.len() != times.len() {
            return Err(Error::InvalidArgument(format!(
                "{} times need {} unitaries, got {}",
                times.len(),
                times.len(),
                unitaries.len()
            )));
        }
        let mut prev = t0;
        for (i, &t) in times.iter().enumerate() {
            let ordered = if i == 0 { t >= prev } else { t > prev };
            if !ordered || !t.is_finite() {
                return Err(Error::InvalidArgument(format!("times must increase, got {t} after {prev}")));
            }
            prev = t;
        }
        let dim = unitaries[0].dim();
        let mut cumulative = Vec::with_capacity(unitaries.len());
        let mut acc = LinOp::identity(dim);
        let mut checked = Vec::with_capacity(unitaries.len());
        for u in unitaries {
            if u.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: u.dim() });
            }
            let u = u.checked(OpKind::Unitary, FAMILY_TOL)?;
            acc = &u * &acc;
            cumulative.push(acc.clone());
            checked.push(u);
        }
        Ok(TimeGrid {
            t0,
            times,
            unitaries: checked,
            cumulative,
        })
    }

    /// No evolution between `k` measurement times `1, 2, ..., k`.
    pub fn static_grid(dim: usize, k: usize) -> Result<Self> {
        Self::new(0.0, (1..=k).map(|t| t as f64).collect(), vec![LinOp::identity(dim); k])
    }

    /// Unitaries `exp(-iH(ti - ti-1))` from a time-independent Hamiltonian.
    pub fn from_hamiltonian(h: &LinOp, t0: f64, times: Vec<f64>) -> Result<Self> {
        let mut prev = t0;
        let mut us = Vec::with_capacity(times.len());
        for &t in &times {
            us.push(evolution(h, t - prev)?);
            prev = t;
        }
        Self::new(t0, times, us)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn unitaries(&self) -> &[LinOp] {
        &self.unitaries
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.unitaries[0].dim()
    }

    /// `U(ti, t0)`.
    pub fn propagator(&self, i: usize) -> &LinOp {
        &self.cumulative[i]
    }

    /// `U†(ti, t0) P U(ti, t0)`.
    pub fn heisenberg(&self, i: usize, p: &LinOp) -> LinOp {
        let u = &self.cumulative[i];
        &(&u.adjoint() * p) * u
    }
}

/// One projector index per time.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct History {
    pub branch: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct HistoryFamily {
    grid: TimeGrid,
    projector_sets: Vec<Vec<LinOp>>,
    rho0: DensityOp,
    heisenberg: Vec<Vec<LinOp>>,
}

impl HistoryFamily {
    pub fn new(grid: TimeGrid, projector_sets: Vec<Vec<LinOp>>, rho0: DensityOp) -> Result<Self> {
        let dim = grid.dim();
        if rho0.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: rho0.dim() });
        }
        if projector_sets.len() != grid.len() {
            return Err(Error::InvalidProjectors(format!(
                "{} projector sets for {} times",
                projector_sets.len(),
                grid.len()
            )));
        }
        for set in &projector_sets {
            validate_projector_family(set, dim, FAMILY_TOL)?;
        }
        let heisenberg = projector_sets
            .iter()
            .enumerate()
            .map(|(i, set)| set.iter().map(|p| grid.heisenberg(i, p)).collect())
            .collect();
        Ok(HistoryFamily {
            grid,
            projector_sets,
            rho0,
            heisenberg,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn projector_sets(&self) -> &[Vec<LinOp>] {
        &self.projector_sets
    }

    pub fn rho0(&self) -> &DensityOp {
        &self.rho0
    }

    pub fn set_sizes(&self) -> Vec<usize> {
        self.projector_sets.iter().map(Vec::len).collect()
    }

    /// Product of set sizes, or an error past [`MAX_HISTORIES`].
    pub fn history_count(&self) -> Result<usize> {
        let mut n: usize = 1;
        for s in self.set_sizes() {
            n = n.saturating_mul(s);
            if n > MAX_HISTORIES {
                return Err(Error::TooMany { count: n, limit: MAX_HISTORIES });
            }
        }
        Ok(n)
    }

    /// History with lexicographic rank `k`, the first time varying slowest.
    pub fn history(&self, mut k: usize) -> History {
        let sizes = self.set_sizes();
        let mut branch = vec![0; sizes.len()];
        for (slot, &s) in branch.iter_mut().zip(&sizes).rev() {
            *slot = k % s;
            k /= s;
        }
        History { branch }
    }

    pub fn histories(&self) -> Result<Vec<History>> {
        Ok((0..self.history_count()?).map(|k| self.history(k)).collect())
    }

    fn check_history(&self, h: &History) -> Result<()> {
        let sizes = self.set_sizes();
        if h.branch.len() != sizes.len() {
            return Err(Error::DimensionMismatch { expected: sizes.len(), got: h.branch.len() });
        }
        for (i, (&b, &s)) in h.branch.iter().zip(&sizes).enumerate() {
            if b >= s {
                return Err(Error::InvalidArgument(format!("branch index {b} at time {i} exceeds {s}")));
            }
        }
        Ok(())
    }

    /// `C_h = P̂k ... P̂1`.
    pub fn class_operator(&self, h: &History) -> Result<LinOp> {
        self.check_history(h)?;
        let mut c = LinOp::identity(self.grid.dim());
        for (i, &b) in h.branch.iter().enumerate() {
            c = &self.heisenberg[i][b] * &c;
        }
        Ok(c)
    }

    pub fn probability(&self, h: &History) -> Result<f64> {
        let c = self.class_operator(h)?;
        Ok(wigner_trace(&c, self.rho0.op(), &c))
    }
}

/// `Tr(A ρ B†)`.
fn wigner_trace(a: &LinOp, rho: &LinOp, b: &LinOp) -> f64 {
    decoherence_functional(a, rho, b).re
}

fn decoherence_functional(a: &LinOp, rho: &LinOp, b: &LinOp) -> C64 {
    let ar = a * rho;
    ar.entries().iter().zip(b.entries()).map(|(x, y)| x * y.conj()).sum()
}

fn check_choices(grid: &TimeGrid, choices: &[LinOp]) -> Result<()> {
    if choices.len() != grid.len() {
        return Err(Error::InvalidProjectors(format!(
            "{} projectors for {} times",
            choices.len(),
            grid.len()
        )));
    }
    for p in choices {
        if p.dim() != grid.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), got: p.dim() });
        }
        if !p.is_projector(FAMILY_TOL) {
            return Err(Error::NotOfKind {
                kind: "projector",
                residual: p.hermitian_residual().max(p.idempotent_residual()),
            });
        }
    }
    Ok(())
}

/// `Tr{P̂k ... P̂1 ρ P̂1 ... P̂k}` for one projector per time.
pub fn sequence_prob(rho0: &DensityOp, grid: &TimeGrid, choices: &[LinOp]) -> Result<f64> {
    check_choices(grid, choices)?;
    if rho0.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: rho0.dim() });
    }
    let mut c = LinOp::identity(grid.dim());
    for (i, p) in choices.iter().enumerate() {
        c = &grid.heisenberg(i, p) * &c;
    }
    Ok(wigner_trace(&c, rho0.op(), &c))
}

/// Propagates `ψ` to each time, keeps only the selected component, and
/// returns the squared norm of what remains (norm never restored).
pub fn sequence_prob_pure(psi: &StateVector, grid: &TimeGrid, choices: &[LinOp]) -> Result<f64> {
    check_choices(grid, choices)?;
    let n0 = psi.norm().powi(2);
    let mut v = psi.clone();
    for (u, p) in grid.unitaries().iter().zip(choices) {
        v = v.apply(u)?.apply(p)?;
    }
    Ok(v.norm().powi(2) / n0)
}

/// All histories with their probabilities, in lexicographic order.
pub fn family_probabilities(family: &HistoryFamily) -> Result<Vec<(History, f64)>> {
    family_probabilities_with(family, Exec::default())
}

pub fn family_probabilities_with(family: &HistoryFamily, exec: Exec) -> Result<Vec<(History, f64)>> {
    let n = family.history_count()?;
    par::try_map_indexed(exec, n, |k| {
        let h = family.history(k);
        let p = family.probability(&h)?;
        Ok((h, p))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyMode {
    /// Full complex value must vanish.
    #[default]
    Strong,
    /// Only the real part must vanish.
    Weak,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairEntry {
    pub a: usize,
    pub b: usize,
    /// `Tr(C_a ρ C_b†)` as `[re, im]`.
    pub value: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub mode: ConsistencyMode,
    pub n_histories: usize,
    pub max_violation: f64,
    /// Pair `(a, b)` attaining the maximum, if any pair exists.
    pub worst_pair: Option<(usize, usize)>,
    /// All pairs `a < b`.
    pub pairs: Vec<PairEntry>,
}

impl ConsistencyReport {
    pub fn consistent(&self, tol: f64) -> bool {
        self.max_violation < tol
    }
}

/// Decoherence functional for every pair of distinct histories.
pub fn consistency_matrix(family: &HistoryFamily, mode: ConsistencyMode) -> Result<ConsistencyReport> {
    consistency_matrix_with(family, mode, Exec::default())
}

pub fn consistency_matrix_with(family: &HistoryFamily, mode: ConsistencyMode, exec: Exec) -> Result<ConsistencyReport> {
    let n = family.history_count()?;
    let pair_count = n * n.saturating_sub(1) / 2;
    if pair_count > MAX_PAIRS {
        return Err(Error::TooMany { count: pair_count, limit: MAX_PAIRS });
    }
    let rho = family.rho0.op();
    let classes = par::try_map_indexed(exec, n, |k| family.class_operator(&family.history(k)))?;
    let c_rho: Vec<LinOp> = par::map_indexed(exec, n, |k| &classes[k] * rho);
    let rows = par::map_indexed(exec, n, |a| {
        ((a + 1)..n)
            .map(|b| {
                let d: C64 = c_rho[a]
                    .entries()
                    .iter()
                    .zip(classes[b].entries())
                    .map(|(x, y)| x * y.conj())
                    .sum();
                PairEntry { a, b, value: [d.re, d.im] }
            })
            .collect::<Vec<_>>()
    });
    let pairs: Vec<PairEntry> = rows.into_iter().flatten().collect();
    let measure = |e: &PairEntry| match mode {
        ConsistencyMode::Strong => e.value[0].hypot(e.value[1]),
        ConsistencyMode::Weak => e.value[0].abs(),
    };
    let mut max_violation = 0.0;
    let mut worst_pair = None;
    for e in &pairs {
        let v = measure(e);
        if worst_pair.is_none() || v > max_violation {
            max_violation = v;
            worst_pair = Some((e.a, e.b));
        }
    }
    Ok(ConsistencyReport {
        mode,
        n_histories: n,
        max_violation,
        worst_pair,
        pairs,
    })
}

/// Family whose projectors at each time are the propagated eigenprojectors of `ρ0`.
pub fn build_consistent_family(rho0: &DensityOp, grid: &TimeGrid) -> Result<HistoryFamily> {
    if rho0.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: rho0.dim() });
    }
    let eig = eig_hermitian(rho0.op())?;
    let vectors: Vec<Vec<C64>> = (0..rho0.dim()).map(|k| eig.vector(k)).collect();
    let mut sets = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let u = grid.propagator(i);
        let set = vectors
            .iter()
            .map(|v| LinOp::projector_onto(&u.apply(v)?))
            .collect::<Result<Vec<_>>>()?;
        sets.push(set);
    }
    HistoryFamily::new(grid.clone(), sets, rho0.clone())
}

/// For each time, a partition of that time's projector indices.
pub type Grouping = Vec<Vec<Vec<usize>>>;

fn check_grouping(family: &HistoryFamily, grouping: &Grouping) -> Result<()> {
    let sizes = family.set_sizes();
    if grouping.len() != sizes.len() {
        return Err(Error::InvalidArgument(format!(
            "grouping has {} times, family has {}",
            grouping.len(),
            sizes.len()
        )));
    }
    for (i, (groups, &s)) in grouping.iter().zip(&sizes).enumerate() {
        let mut seen = vec![false; s];
        for g in groups {
            if g.is_empty() {
                return Err(Error::InvalidArgument(format!("empty group at time {i}")));
            }
            for &k in g {
                if k >= s || seen[k] {
                    return Err(Error::InvalidArgument(format!("index {k} at time {i} is out of range or repeated")));
                }
                seen[k] = true;
            }
        }
        if seen.iter().any(|&x| !x) {
            return Err(Error::InvalidArgument(format!("grouping at time {i} misses an index")));
        }
    }
    Ok(())
}

/// Family whose projectors are the sums over each group.
pub fn coarse_grain(family: &HistoryFamily, grouping: &Grouping) -> Result<HistoryFamily> {
    check_grouping(family, grouping)?;
    let dim = family.grid.dim();
    let sets = grouping
        .iter()
        .zip(&family.projector_sets)
        .map(|(groups, set)| {
            groups
                .iter()
                .map(|g| {
                    let mut acc = LinOp::zeros(dim);
                    for &k in g {
                        acc = &acc + &set[k];
                    }
                    acc.checked(OpKind::Projector, FAMILY_TOL)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    HistoryFamily::new(family.grid.clone(), sets, family.rho0.clone())
}

#[derive(Clone, Debug, Serialize)]
pub struct AdditivityDefect {
    pub daughter: History,
    pub probability: f64,
    pub parent_sum: f64,
    /// `probability - parent_sum`.
    pub delta: f64,
    /// `2 Σ Re Tr(C_a ρ C_b†)` over distinct parent pairs `a < b`.
    pub interference: f64,
}

/// Compares each daughter history's probability with the sum over its parents.
pub fn additivity_defects(family: &HistoryFamily, grouping: &Grouping) -> Result<Vec<AdditivityDefect>> {
    let coarse = coarse_grain(family, grouping)?;
    let rho = family.rho0.op();
    coarse
        .histories()?
        .into_iter()
        .map(|daughter| {
            let probability = coarse.probability(&daughter)?;
            // parents: cartesian product of the chosen groups
            let mut parents: Vec<Vec<usize>> = vec![vec![]];
            for (i, &g) in daughter.branch.iter().enumerate() {
                let members = &grouping[i][g];
                parents = parents
                    .into_iter()
                    .flat_map(|p| {
                        members.iter().map(move |&m| {
                            let mut q = p.clone();
                            q.push(m);
                            q
                        })
                    })
                    .collect();
            }
            let classes = parents
                .iter()
                .map(|b| family.class_operator(&History { branch: b.clone() }))
                .collect::<Result<Vec<_>>>()?;
            let parent_sum: f64 = classes.iter().map(|c| wigner_trace(c, rho, c)).sum();
            let mut interference = 0.0;
            for a in 0..classes.len() {
                for b in a + 1..classes.len() {
                    interference += 2.0 * decoherence_functional(&classes[a], rho, &classes[b]).re;
                }
            }
            Ok(AdditivityDefect {
                daughter,
                probability,
                parent_sum,
                delta: probability - parent_sum,
                interference,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InterferenceReport {
    /// Probability with the rank-n projector `Σ|φi><φi|`.
    pub amplitude_sum: f64,
    /// `Σi` of the probabilities with each `|φi><φi|`.
    pub probability_sum: f64,
    /// `amplitude_sum - probability_sum`, the crossed terms `i ≠ j`.
    pub crossed: f64,
}

fn two_step(rho: &LinOp, first: &LinOp, u: &LinOp, later: &LinOp) -> f64 {
    let c = &(&(&u.adjoint() * later) * u) * first;
    wigner_trace(&c, rho, &c)
}

fn orthonormal_pieces(pieces: &[Vec<C64>], dim: usize) -> Result<Vec<LinOp>> {
    for (i, a) in pieces.iter().enumerate() {
        if a.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: a.len() });
        }
        for (j, b) in pieces.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            if (crate::linalg::inner(a, b) - C64::new(want, 0.0)).norm() > FAMILY_TOL {
                return Err(Error::InvalidProjectors("pieces are not orthonormal".into()));
            }
        }
    }
    pieces.iter().map(|v| LinOp::projector_onto(v)).collect()
}

/// A first measurement at `t1 = t0` with outcome projector `Σ|φi><φi|`, then
/// evolution `u` and projector `later`. Contrasts adding amplitudes inside the
/// projector with adding probabilities over the rank-1 pieces.
pub fn interference_terms(rho0: &DensityOp, pieces: &[Vec<C64>], u: &LinOp, later: &LinOp) -> Result<InterferenceReport> {
    let dim = rho0.dim();
    let ps = orthonormal_pieces(pieces, dim)?;
    if u.dim() != dim || later.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: u.dim().max(later.dim()) });
    }
    let mut full = LinOp::zeros(dim);
    for p in &ps {
        full = &full + p;
    }
    let amplitude_sum = two_step(rho0.op(), &full, u, later);
    let probability_sum = ps.iter().map(|p| two_step(rho0.op(), p, u, later)).sum();
    Ok(InterferenceReport {
        amplitude_sum,
        probability_sum,
        crossed: amplitude_sum - probability_sum,
    })
}

/// Same comparison after an environment of dimension `pieces.len()` has
/// recorded `i` in orthogonal states `|ei>`:
/// `|φi>|e0> -> |φi>|ei>`. The crossed terms then vanish.
pub fn interference_with_record(
    rho0: &DensityOp,
    pieces: &[Vec<C64>],
    u: &LinOp,
    later: &LinOp,
) -> Result<InterferenceReport> {
    let dim = rho0.dim();
    let n = pieces.len();
    let ps = orthonormal_pieces(pieces, dim)?;
    let mut rest = LinOp::identity(dim);
    for p in &ps {
        rest = &rest - p;
    }
    let shift = |k: usize| {
        let mut m = LinOp::zeros(n);
        for j in 0..n {
            m[((j + k) % n, j)] = C64::new(1.0, 0.0);
        }
        m
    };
    let id_env = LinOp::identity(n);
    let mut w = rest.kron(&id_env)?;
    for (i, p) in ps.iter().enumerate() {
        w = &w + &p.kron(&shift(i))?;
    }
    let w = w.checked(OpKind::Unitary, FAMILY_TOL)?;
    let mut e0 = vec![ZERO; n];
    e0[0] = C64::new(1.0, 0.0);
    let env = DensityOp::new(LinOp::projector_onto(&e0)?, vec![n])?;
    let joint = crate::linalg::tensor(rho0, &env)?.evolve(&w)?;
    let lifted_full = {
        let mut full = LinOp::zeros(dim);
        for p in &ps {
            full = &full + p;
        }
        full.kron(&id_env)?
    };
    let u_big = u.kron(&id_env)?;
    let later_big = later.kron(&id_env)?;
    let amplitude_sum = two_step(joint.op(), &lifted_full, &u_big, &later_big);
    let probability_sum = ps
        .iter()
        .map(|p| Ok(two_step(joint.op(), &p.kron(&id_env)?, &u_big, &later_big)))
        .sum::<Result<f64>>()?;
    Ok(InterferenceReport {
        amplitude_sum,
        probability_sum,
        crossed: amplitude_sum - probability_sum,
    })
}

/// JSON form of a family: matrices are rows of `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilySpec {
    #[serde(default)]
    pub t0: f64,
    pub times: Vec<f64>,
    pub unitaries: Vec<Vec<Vec<[f64; 2]>>>,
    pub projector_sets: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
    pub rho0: Vec<Vec<[f64; 2]>>,
}

impl FamilySpec {
    pub fn build(&self) -> Result<HistoryFamily> {
        let us = self.unitaries.iter().map(|m| LinOp::from_pairs(m)).collect::<Result<Vec<_>>>()?;
        let grid = TimeGrid::new(self.t0, self.times.clone(), us)?;
        let sets = self
            .projector_sets
            .iter()
            .map(|set| set.iter().map(|m| LinOp::from_pairs(m)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let rho = LinOp::from_pairs(&self.rho0)?;
        let dim = rho.dim();
        let rho0 = DensityOp::new(rho, vec![dim])?;
        HistoryFamily::new(grid, sets, rho0)
    }

    pub fn from_family(family: &HistoryFamily) -> Self {
        FamilySpec {
            t0: family.grid.t0,
            times: family.grid.times.clone(),
            unitaries: family.grid.unitaries.iter().map(LinOp::to_pairs).collect(),
            projector_sets: family
                .projector_sets
                .iter()
                .map(|s| s.iter().map(LinOp::to_pairs).collect())
                .collect(),
            rho0: family.rho0.op().to_pairs(),
        }
    }
}

/// Qubit example: `ρ0 = |0><0|`, σx eigenbasis at `t1`, σz eigenbasis at `t2`, no evolution.
pub fn sigma_x_then_z_family() -> HistoryFamily {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let px = LinOp::projector_onto(&[C64::new(h, 0.0), C64::new(h, 0.0)]).expect("unit");
    let mx = LinOp::projector_onto(&[C64::new(h, 0.0), C64::new(-h, 0.0)]).expect("unit");
    let p0 = LinOp::projector_onto(&[C64::new(1.0, 0.0), ZERO]).expect("unit");
    let p1 = LinOp::projector_onto(&[ZERO, C64::new(1.0, 0.0)]).expect("unit");
    let rho0 = DensityOp::new(p0.clone(), vec![2]).expect("pure");
    HistoryFamily::new(
        TimeGrid::static_grid(2, 2).expect("grid"),
        vec![vec![px, mx], vec![p0, p1]],
        rho0,
    )
    .expect("valid family")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::measure_probs;
    use crate::rng::{random_density, random_hermitian, random_state, random_unitary, seeded};
    use rand::Rng;

    fn random_projector_set<R: Rng>(dim: usize, rng: &mut R) -> Vec<LinOp> {
        let u = random_unitary(dim, rng);
        // split the rotated basis into 1..=dim groups
        let groups = rng.random_range(1..=dim);
        let mut sets = vec![LinOp::zeros(dim); groups];
        for k in 0..dim {
            let g = if k < groups { k } else { rng.random_range(0..groups) };
            sets[g] = &sets[g] + &LinOp::projector_onto(&u.column(k)).unwrap();
        }
        sets
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, vec![1.0, 1.0], vec![LinOp::identity(2); 2]).is_err());
        assert!(TimeGrid::new(0.0, vec![1.0], vec![pauli_like()]).is_err());
        assert!(TimeGrid::new(0.0, vec![1.0], vec![]).is_err());
    }

    fn pauli_like() -> LinOp {
        LinOp::from_real(2, &[1.0, 1.0, 0.0, 1.0])
    }

    #[test]
    fn single_time_identity_and_born() {
        let mut rng = seeded(1, 0);
        let rho = random_density(&[3], &mut rng);
        let grid = TimeGrid::static_grid(3, 1).unwrap();
        assert!((sequence_prob(&rho, &grid, &[LinOp::identity(3)]).unwrap() - 1.0).abs() < 1e-14);
        let set = random_projector_set(3, &mut rng);
        let born = measure_probs(&rho, &set, 1e-12).unwrap();
        for (p, b) in set.iter().zip(born) {
            assert!((sequence_prob(&rho, &grid, std::slice::from_ref(p)).unwrap() - b).abs() < 1e-14);
        }
    }

    #[test]
    fn two_time_qubit_example() {
        let f = sigma_x_then_z_family();
        let px = &f.projector_sets()[0][0];
        let p1 = &f.projector_sets()[1][1];
        let p = sequence_prob(f.rho0(), f.grid(), &[px.clone(), p1.clone()]).unwrap();
        assert!((p - 0.25).abs() < 1e-15);
        assert!(matches!(
            sequence_prob(f.rho0(), f.grid(), &[pauli_like(), p1.clone()]),
            Err(Error::NotOfKind { .. })
        ));
    }

    #[test]
    fn wigner_matches_pure_path() {
        let mut rng = seeded(2, 0);
        for trial in 0..200 {
            let dim = [2, 4, 8][trial % 3];
            let k = 2 + trial % 2;
            let psi = random_state(&[dim], &mut rng);
            let us = (0..k).map(|_| random_unitary(dim, &mut rng)).collect();
            let grid = TimeGrid::new(0.0, (1..=k).map(|t| t as f64).collect(), us).unwrap();
            let choices: Vec<LinOp> = (0..k)
                .map(|_| {
                    let set = random_projector_set(dim, &mut rng);
                    set[rng.random_range(0..set.len())].clone()
                })
                .collect();
            let a = sequence_prob(&psi.density().unwrap(), &grid, &choices).unwrap();
            let b = sequence_prob_pure(&psi, &grid, &choices).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn dropping_an_extreme_projector() {
        let mut rng = seeded(3, 0);
        for _ in 0..20 {
            let rho = random_density(&[4], &mut rng);
            let grid = TimeGrid::from_hamiltonian(&random_hermitian(4, &mut rng), 0.0, vec![0.5, 1.0, 2.0]).unwrap();
            let choices: Vec<LinOp> = (0..3).map(|_| random_projector_set(4, &mut rng)[0].clone()).collect();
            let full = sequence_prob(&rho, &grid, &choices).unwrap();
            let mut c = LinOp::identity(4);
            for (i, p) in choices.iter().enumerate().take(2) {
                c = &grid.heisenberg(i, p) * &c;
            }
            let left = &grid.heisenberg(2, &choices[2]) * &c;
            // Tr{P̂3 P̂2 P̂1 ρ P̂1 P̂2}
            let one_sided = decoherence_functional(&left, rho.op(), &c).re;
            assert!((full - one_sided).abs() < 1e-12);
        }
    }

    #[test]
    fn family_probabilities_sum_to_one() {
        let mut rng = seeded(4, 0);
        for _ in 0..20 {
            let rho = random_density(&[4], &mut rng);
            let grid = TimeGrid::from_hamiltonian(&random_hermitian(4, &mut rng), 0.0, vec![0.3, 0.9, 1.4]).unwrap();
            let sets = (0..3).map(|_| random_projector_set(4, &mut rng)).collect();
            let f = HistoryFamily::new(grid, sets, rho).unwrap();
            let probs = family_probabilities(&f).unwrap();
            assert!(probs.iter().all(|(_, p)| *p >= -1e-12));
            let total: f64 = probs.iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn family_validation() {
        let grid = TimeGrid::static_grid(2, 1).unwrap();
        let rho = DensityOp::maximally_mixed(&[2]).unwrap();
        let p0 = LinOp::projector_onto(&[C64::new(1.0, 0.0), ZERO]).unwrap();
        assert!(HistoryFamily::new(grid.clone(), vec![vec![p0.clone()]], rho.clone()).is_err());
        assert!(HistoryFamily::new(grid, vec![vec![p0.clone(), p0]], rho).is_err());
    }

    #[test]
    fn sigma_x_z_inconsistency() {
        let f = sigma_x_then_z_family();
        let r = consistency_matrix(&f, ConsistencyMode::Strong).unwrap();
        assert_eq!(r.n_histories, 4);
        assert!((r.max_violation - 0.25).abs() < 1e-15);
        // histories (+x, 0) and (-x, 0) are ranks 0 and 2
        assert_eq!(r.worst_pair, Some((0, 2)));
        let single = HistoryFamily::new(
            TimeGrid::static_grid(2, 1).unwrap(),
            vec![f.projector_sets()[0].clone()],
            f.rho0().clone(),
        )
        .unwrap();
        assert_eq!(consistency_matrix(&single, ConsistencyMode::Strong).unwrap().max_violation, 0.0);
    }

    #[test]
    fn weak_mode_ignores_imaginary_part() {
        // ρ0 = |+y><+y|, σx then σz: the interference term is purely imaginary
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let f = sigma_x_then_z_family();
        let plus_y = LinOp::projector_onto(&[C64::new(h, 0.0), C64::new(0.0, h)]).unwrap();
        let rho = DensityOp::new(plus_y, vec![2]).unwrap();
        let f = HistoryFamily::new(f.grid().clone(), f.projector_sets().to_vec(), rho).unwrap();
        let strong = consistency_matrix(&f, ConsistencyMode::Strong).unwrap();
        let weak = consistency_matrix(&f, ConsistencyMode::Weak).unwrap();
        assert!(strong.max_violation > 0.2);
        assert!(weak.max_violation < 1e-15);
    }

    #[test]
    fn eigenbasis_family_of_mixed_qubit() {
        let rho = DensityOp::maximally_mixed(&[2]).unwrap();
        let mut rng = seeded(5, 0);
        let grid = TimeGrid::from_hamiltonian(&random_hermitian(2, &mut rng), 0.0, vec![1.0, 2.0, 3.0]).unwrap();
        let f = build_consistent_family(&rho, &grid).unwrap();
        let probs = family_probabilities(&f).unwrap();
        assert_eq!(probs.len(), 8);
        let nonzero: Vec<_> = probs.iter().filter(|(_, p)| *p > 1e-12).collect();
        assert_eq!(nonzero.len(), 2);
        for (h, p) in nonzero {
            assert!((p - 0.5).abs() < 1e-12);
            assert!(h.branch.iter().all(|&b| b == h.branch[0]));
        }
        assert!(consistency_matrix(&f, ConsistencyMode::Strong).unwrap().max_violation < 1e-12);
    }

    #[test]
    fn eigenbasis_family_of_random_state() {
        let mut rng = seeded(6, 0);
        for pure in [false, true] {
            let rho = if pure {
                random_state(&[4], &mut rng).density().unwrap()
            } else {
                random_density(&[4], &mut rng)
            };
            let grid = TimeGrid::from_hamiltonian(&random_hermitian(4, &mut rng), 0.0, vec![0.4, 1.1, 1.5]).unwrap();
            let f = build_consistent_family(&rho, &grid).unwrap();
            assert!(consistency_matrix(&f, ConsistencyMode::Strong).unwrap().max_violation < 1e-12);
            let probs = family_probabilities(&f).unwrap();
            for (h, p) in &probs {
                if h.branch.iter().any(|&b| b != h.branch[0]) {
                    assert!(p.abs() < 1e-12);
                }
            }
            if pure {
                assert_eq!(probs.iter().filter(|(_, p)| *p > 1e-9).count(), 1);
            }
        }
    }

    #[test]
    fn coarse_graining_consistent_family() {
        let mut rng = seeded(7, 0);
        let rho = random_density(&[3], &mut rng);
        let grid = TimeGrid::from_hamiltonian(&random_hermitian(3, &mut rng), 0.0, vec![1.0, 2.0, 3.0]).unwrap();
        let f = build_consistent_family(&rho, &grid).unwrap();
        let grouping: Grouping = vec![
            vec![vec![0], vec![1], vec![2]],
            vec![vec![0, 2], vec![1]],
            vec![vec![0], vec![1], vec![2]],
        ];
        let c = coarse_grain(&f, &grouping).unwrap();
        assert!(consistency_matrix(&c, ConsistencyMode::Strong).unwrap().max_violation < 1e-12);
        for d in additivity_defects(&f, &grouping).unwrap() {
            assert!(d.delta.abs() < 1e-10);
        }
        let all: Grouping = vec![vec![vec![0, 1, 2]]; 3];
        let probs = family_probabilities(&coarse_grain(&f, &all).unwrap()).unwrap();
        assert_eq!(probs.len(), 1);
        assert!((probs[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coarse_graining_inconsistent_family() {
        let f = sigma_x_then_z_family();
        let grouping: Grouping = vec![vec![vec![0, 1]], vec![vec![0], vec![1]]];
        let defects = additivity_defects(&f, &grouping).unwrap();
        let d0 = &defects[0];
        assert!((d0.probability - 1.0).abs() < 1e-15);
        assert!((d0.parent_sum - 0.5).abs() < 1e-15);
        assert!((d0.delta - 0.5).abs() < 1e-15);
        assert!((d0.delta - d0.interference).abs() < 1e-15);
        for d in &defects {
            assert!((d.delta - d.interference).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_grouping() {
        let f = sigma_x_then_z_family();
        let missing: Grouping = vec![vec![vec![0]], vec![vec![0], vec![1]]];
        assert!(coarse_grain(&f, &missing).is_err());
        let repeated: Grouping = vec![vec![vec![0, 0], vec![1]], vec![vec![0], vec![1]]];
        assert!(coarse_grain(&f, &repeated).is_err());
    }

    #[test]
    fn consistent_families_are_additive_under_random_groupings() {
        let mut rng = seeded(8, 0);
        for _ in 0..30 {
            let rho = random_density(&[4], &mut rng);
            let grid = TimeGrid::from_hamiltonian(&random_hermitian(4, &mut rng), 0.0, vec![0.5, 1.0]).unwrap();
            let f = build_consistent_family(&rho, &grid).unwrap();
            let grouping: Grouping = (0..2)
                .map(|_| {
                    let k = rng.random_range(1..=4);
                    let mut groups = vec![vec![]; k];
                    for i in 0..4 {
                        let g = if i < k { i } else { rng.random_range(0..k) };
                        groups[g].push(i);
                    }
                    groups
                })
                .collect();
            for d in additivity_defects(&f, &grouping).unwrap() {
                assert!(d.delta.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn crossed_terms_and_their_removal() {
        let mut rng = seeded(9, 0);
        let psi = random_state(&[3], &mut rng);
        let rho = psi.density().unwrap();
        let u = random_unitary(3, &mut rng);
        let basis = random_unitary(3, &mut rng);
        let pieces = vec![basis.column(0), basis.column(1)];
        let later = LinOp::projector_onto(&random_state(&[3], &mut rng).into_amps()).unwrap();
        let bare = interference_terms(&rho, &pieces, &u, &later).unwrap();
        assert!(bare.crossed.abs() > 1e-3);
        let recorded = interference_with_record(&rho, &pieces, &u, &later).unwrap();
        assert!(recorded.crossed.abs() < 1e-12);
        assert!((recorded.probability_sum - bare.probability_sum).abs() < 1e-12);
    }

    #[test]
    fn spec_round_trip_builds_same_family() {
        let f = sigma_x_then_z_family();
        let json = serde_json::to_string(&FamilySpec::from_family(&f)).unwrap();
        let back: FamilySpec = serde_json::from_str(&json).unwrap();
        let g = back.build().unwrap();
        let a = family_probabilities(&f).unwrap();
        let b = family_probabilities(&g).unwrap();
        assert_eq!(a, b);
    }
}
