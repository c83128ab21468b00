//! Two-spin singlet predictions, the BCHSH combination, and local models.
//!
//! Measurement directions lie in the xOz plane and are labelled by one angle
//! `a`; the `+1` eigenket is `cos(a/2)|+> + sin(a/2)|->`, the eigenvector of
//! `cos a σz + sin a σx`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{pauli, DensityOp, LinOp, QuantumState, StateVector, C64, TOL};
use crate::par::{self, Exec};
use crate::rng::{random_qubit_density, seeded};

/// In-plane measurement direction, reduced to `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpinDirection(f64);

impl SpinDirection {
    pub fn new(angle: f64) -> Self {
        let r = angle.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU
        SpinDirection(if r >= TAU { 0.0 } else { r })
    }

    pub fn angle(self) -> f64 {
        self.0
    }

    pub fn plus_ket(self) -> [C64; 2] {
        let (s, c) = (self.0 / 2.0).sin_cos();
        [C64::new(c, 0.0), C64::new(s, 0.0)]
    }

    pub fn minus_ket(self) -> [C64; 2] {
        let (s, c) = (self.0 / 2.0).sin_cos();
        [C64::new(-s, 0.0), C64::new(c, 0.0)]
    }

    /// `[P+, P-]` for this direction.
    pub fn projectors(self) -> [LinOp; 2] {
        [
            LinOp::projector_onto(&self.plus_ket()).expect("unit ket"),
            LinOp::projector_onto(&self.minus_ket()).expect("unit ket"),
        ]
    }

    pub fn observable(self) -> LinOp {
        pauli::xz_plane(self.0)
    }
}

impl From<f64> for SpinDirection {
    fn from(a: f64) -> Self {
        SpinDirection::new(a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshSettings {
    pub a: SpinDirection,
    pub a_prime: SpinDirection,
    pub b: SpinDirection,
    pub b_prime: SpinDirection,
}

impl ChshSettings {
    pub fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        ChshSettings {
            a: a.into(),
            a_prime: a_prime.into(),
            b: b.into(),
            b_prime: b_prime.into(),
        }
    }

    /// A setting family reaching `2√2` on the singlet.
    pub fn tsirelson() -> Self {
        ChshSettings::new(0.0, -PI / 2.0, PI / 4.0, -PI / 4.0)
    }

    pub fn angles(&self) -> [f64; 4] {
        [self.a.0, self.a_prime.0, self.b.0, self.b_prime.0]
    }
}

/// Joint outcome probabilities `(P++, P+-, P-+, P--)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairProbs {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl PairProbs {
    pub fn total(&self) -> f64 {
        self.pp + self.pm + self.mp + self.mm
    }

    pub fn correlation(&self) -> f64 {
        self.pp + self.mm - self.pm - self.mp
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.pp, self.pm, self.mp, self.mm]
    }
}

/// `(|+,-> - |-,+>)/√2`.
pub fn singlet() -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::qubits(vec![
        C64::new(0.0, 0.0),
        C64::new(h, 0.0),
        C64::new(-h, 0.0),
        C64::new(0.0, 0.0),
    ])
    .expect("two qubits")
}

fn ensure_two_qubits<S: QuantumState>(state: &S) -> Result<()> {
    if state.factor_dims() != [2, 2] {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: state.dim(),
        });
    }
    Ok(())
}

pub fn pair_probs<S: QuantumState>(state: &S, a: SpinDirection, b: SpinDirection) -> Result<PairProbs> {
    ensure_two_qubits(state)?;
    let [pa, ma] = a.projectors();
    let [pb, mb] = b.projectors();
    let p = |x: &LinOp, y: &LinOp| -> Result<f64> { state.prob(&x.kron(y)?) };
    Ok(PairProbs {
        pp: p(&pa, &pb)?,
        pm: p(&pa, &mb)?,
        mp: p(&ma, &pb)?,
        mm: p(&ma, &mb)?,
    })
}

/// `E(a, b) = P++ + P-- - P+- - P-+`.
pub fn correlation<S: QuantumState>(state: &S, a: SpinDirection, b: SpinDirection) -> Result<f64> {
    Ok(pair_probs(state, a, b)?.correlation())
}

/// `E(a,b) + E(a,b') - E(a',b) + E(a',b')`.
pub fn chsh_value<S: QuantumState>(state: &S, s: &ChshSettings) -> Result<f64> {
    Ok(correlation(state, s.a, s.b)? + correlation(state, s.a, s.b_prime)?
        - correlation(state, s.a_prime, s.b)?
        + correlation(state, s.a_prime, s.b_prime)?)
}

/// `T[i][j] = <σi ⊗ σj>` for `i, j ∈ {z, x}`, so that
/// `E(a, b) = Σ T[i][j] u_i(a) u_j(b)` with `u(a) = (cos a, sin a)`.
pub fn correlation_tensor<S: QuantumState>(state: &S) -> Result<[[f64; 2]; 2]> {
    ensure_two_qubits(state)?;
    let ops = [pauli::z(), pauli::x()];
    let mut t = [[0.0; 2]; 2];
    for (i, oi) in ops.iter().enumerate() {
        for (j, oj) in ops.iter().enumerate() {
            t[i][j] = state.expectation(&oi.kron(oj)?)?.re;
        }
    }
    Ok(t)
}

fn tensor_correlation(t: &[[f64; 2]; 2], a: f64, b: f64) -> f64 {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    t[0][0] * ca * cb + t[0][1] * ca * sb + t[1][0] * sa * cb + t[1][1] * sa * sb
}

fn tensor_chsh(t: &[[f64; 2]; 2], x: &[f64; 4]) -> f64 {
    let [a, ap, b, bp] = *x;
    tensor_correlation(t, a, b) + tensor_correlation(t, a, bp) - tensor_correlation(t, ap, b)
        + tensor_correlation(t, ap, bp)
}

/// Outer coordinate sweeps of the golden-section refinement.
pub const OPTIMIZER_SWEEPS: usize = 3;
pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_REFINEMENT_ITERS: usize = 40;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChshOptimum {
    pub settings: ChshSettings,
    /// Signed value at `settings`; its magnitude is the maximum found.
    pub value: f64,
    /// Largest magnitude seen on the coarse grid.
    pub grid_best: f64,
}

/// Maximizes `|chsh_value|` by a coarse grid over all four angles followed by
/// coordinate-wise golden-section refinement around the best grid point.
pub fn chsh_optimize<S: QuantumState>(
    state: &S,
    grid_size: usize,
    refinement_iters: usize,
) -> Result<ChshOptimum> {
    chsh_optimize_with(state, grid_size, refinement_iters, Exec::default())
}

pub fn chsh_optimize_with<S: QuantumState>(
    state: &S,
    grid_size: usize,
    refinement_iters: usize,
    exec: Exec,
) -> Result<ChshOptimum> {
    if grid_size < 8 {
        return Err(Error::InvalidArgument(format!("grid size {grid_size} < 8")));
    }
    let t = correlation_tensor(state)?;
    let g = grid_size;
    let step = TAU / g as f64;
    let mut table = vec![0.0; g * g];
    for i in 0..g {
        for j in 0..g {
            table[i * g + j] = tensor_correlation(&t, i as f64 * step, j as f64 * step);
        }
    }

    // Best (|M|, index tuple) per `a` row, reduced in index order.
    let rows = par::map_indexed(exec, g, |ia| {
        let mut best = (f64::NEG_INFINITY, [0usize; 4]);
        for iap in 0..g {
            for ib in 0..g {
                let e_ab = table[ia * g + ib];
                let e_apb = table[iap * g + ib];
                for ibp in 0..g {
                    let m = e_ab + table[ia * g + ibp] - e_apb + table[iap * g + ibp];
                    if m.abs() > best.0 {
                        best = (m.abs(), [ia, iap, ib, ibp]);
                    }
                }
            }
        }
        best
    });
    let (grid_best, idx) = rows
        .into_iter()
        .fold((f64::NEG_INFINITY, [0usize; 4]), |acc, r| if r.0 > acc.0 { r } else { acc });

    let mut x = idx.map(|i| i as f64 * step);
    let sign = tensor_chsh(&t, &x).signum();
    let sign = if sign == 0.0 { 1.0 } else { sign };
    let objective = |x: &[f64; 4]| sign * tensor_chsh(&t, x);
    let mut best = objective(&x);
    for _ in 0..OPTIMIZER_SWEEPS {
        for k in 0..4 {
            let centre = x[k];
            let (arg, val) = golden_max(
                |v| {
                    let mut y = x;
                    y[k] = v;
                    objective(&y)
                },
                centre - step,
                centre + step,
                refinement_iters,
            );
            if val > best {
                best = val;
                x[k] = arg;
            }
        }
    }
    let settings = ChshSettings::new(x[0], x[1], x[2], x[3]);
    Ok(ChshOptimum {
        settings,
        value: sign * best,
        grid_best,
    })
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// One row of the singlet sweep CSV.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub theta_deg: f64,
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
    #[serde(rename = "E")]
    pub e: f64,
}

/// Pair probabilities at `a = θ`, `b = 0` for `points` equally spaced θ in `[0°, 360°)`.
pub fn singlet_sweep(points: usize) -> Result<Vec<SweepRow>> {
    let psi = singlet();
    (0..points)
        .map(|k| {
            let deg = 360.0 * k as f64 / points as f64;
            let p = pair_probs(&psi, deg.to_radians().into(), 0.0.into())?;
            Ok(SweepRow {
                theta_deg: deg,
                p_pp: p.pp,
                p_pm: p.pm,
                p_mp: p.mp,
                p_mm: p.mm,
                e: p.correlation(),
            })
        })
        .collect()
}

/// Deterministic outcomes `A, A', B, B'`, each `±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ResponseTable {
    pub a: i8,
    pub a_prime: i8,
    pub b: i8,
    pub b_prime: i8,
}

impl ResponseTable {
    pub fn new(a: i8, a_prime: i8, b: i8, b_prime: i8) -> Result<Self> {
        if [a, a_prime, b, b_prime].iter().any(|v| v.abs() != 1) {
            return Err(Error::InvalidArgument("responses must be +1 or -1".into()));
        }
        Ok(ResponseTable { a, a_prime, b, b_prime })
    }

    /// The 16 tables, enumerated by the bits of `0..16`.
    pub fn all() -> Vec<ResponseTable> {
        let sign = |bits: u8, k: u8| if bits >> k & 1 == 0 { 1 } else { -1 };
        (0u8..16)
            .map(|m| ResponseTable {
                a: sign(m, 3),
                a_prime: sign(m, 2),
                b: sign(m, 1),
                b_prime: sign(m, 0),
            })
            .collect()
    }

    /// `M = AB + AB' - A'B + A'B' = (A - A')B + (A + A')B'`, always `±2`.
    pub fn m(&self) -> i32 {
        let (a, ap, b, bp) = (
            self.a as i32,
            self.a_prime as i32,
            self.b as i32,
            self.b_prime as i32,
        );
        let m = a * b + a * bp - ap * b + ap * bp;
        assert!(m == 2 || m == -2, "M = {m} for {self:?}");
        m
    }
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    let mut count = 0;
    for w in weights {
        if w.is_nan() || w < 0.0 {
            return Err(Error::InvalidWeights(format!("weight {w} is negative or NaN")));
        }
        total += w;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidWeights("no hidden states".into()));
    }
    if (total - 1.0).abs() > TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    Ok(())
}

/// Finite weighted ensemble of hidden states with deterministic `±1` responses.
#[derive(Clone, Debug)]
pub struct LocalDeterministicModel {
    lambdas: Vec<(f64, ResponseTable)>,
}

impl LocalDeterministicModel {
    pub fn new(lambdas: Vec<(f64, ResponseTable)>) -> Result<Self> {
        check_weights(lambdas.iter().map(|l| l.0))?;
        Ok(LocalDeterministicModel { lambdas })
    }

    pub fn uniform_all_tables() -> Self {
        let w = 1.0 / 16.0;
        LocalDeterministicModel {
            lambdas: ResponseTable::all().into_iter().map(|t| (w, t)).collect(),
        }
    }

    pub fn lambdas(&self) -> &[(f64, ResponseTable)] {
        &self.lambdas
    }
}

/// Weighted average of `M(λ)`.
///
/// The masses on `M = +2` and `M = -2` are summed separately and the result
/// is `2 (P - N) / (P + N)`; monotone rounding then keeps `|value| <= 2` exactly.
pub fn lhv_chsh(model: &LocalDeterministicModel) -> f64 {
    let (mut plus, mut minus) = (0.0, 0.0);
    for (w, t) in &model.lambdas {
        if t.m() > 0 {
            plus += w;
        } else {
            minus += w;
        }
    }
    2.0 * ((plus - minus) / (plus + minus))
}

/// Hidden states carrying local density operators for each spin.
#[derive(Clone, Debug)]
pub struct StochasticLocalModel {
    lambdas: Vec<(f64, DensityOp, DensityOp)>,
}

impl StochasticLocalModel {
    pub fn new(lambdas: Vec<(f64, DensityOp, DensityOp)>) -> Result<Self> {
        check_weights(lambdas.iter().map(|l| l.0))?;
        for (_, r1, r2) in &lambdas {
            if r1.factor_dims() != [2] || r2.factor_dims() != [2] {
                return Err(Error::InvalidDensity("local states must be single qubits".into()));
            }
        }
        Ok(StochasticLocalModel { lambdas })
    }

    pub fn lambdas(&self) -> &[(f64, DensityOp, DensityOp)] {
        &self.lambdas
    }
}

/// `P+(a, λ) - P-(a, λ)` with `P±(a, λ) = <±/a|ρ(λ)|±/a>`.
pub fn local_bias(rho: &DensityOp, a: SpinDirection) -> f64 {
    let p = |ket: [C64; 2]| rho.op().sandwich(&ket, &ket).expect("qubit").re;
    p(a.plus_ket()) - p(a.minus_ket())
}

pub fn stochastic_local_chsh(model: &StochasticLocalModel, s: &ChshSettings) -> f64 {
    model
        .lambdas
        .iter()
        .map(|(w, r1, r2)| {
            let (a, ap) = (local_bias(r1, s.a), local_bias(r1, s.a_prime));
            let (b, bp) = (local_bias(r2, s.b), local_bias(r2, s.b_prime));
            w * (a * b + a * bp - ap * b + ap * bp)
        })
        .sum()
}

#[derive(Clone, Debug)]
pub struct SeparableTerm {
    pub weight: f64,
    pub rho1: DensityOp,
    pub rho2: DensityOp,
}

/// `ρ = Σ c ρ1 ⊗ ρ2` with real, possibly negative, weights.
#[derive(Clone, Debug)]
pub struct SeparableDecomposition {
    pub terms: Vec<SeparableTerm>,
}

impl SeparableDecomposition {
    pub fn has_negative_weights(&self) -> bool {
        self.terms.iter().any(|t| t.weight < 0.0)
    }

    pub fn reconstruct(&self) -> Result<LinOp> {
        let mut acc = LinOp::zeros(4);
        for t in &self.terms {
            acc = &acc + &t.rho1.op().kron(t.rho2.op())?.scale(C64::new(t.weight, 0.0));
        }
        Ok(acc)
    }

    /// The singlet written over products of `(I ± σk)/2`, `k ∈ {x, y, z}`, from
    /// `ρ = (I⊗I - Σk σk⊗σk)/4`. Some weights are negative.
    pub fn singlet() -> Self {
        let half = |r: [f64; 3]| crate::rng::bloch_density(r);
        let axis = |k: usize, s: f64| {
            let mut r = [0.0; 3];
            r[k] = s;
            half(r)
        };
        let mut terms = Vec::new();
        for k in 0..3 {
            for s in [1.0, -1.0] {
                for t in [1.0, -1.0] {
                    // identity part lives on the z projectors
                    let id = if k == 2 { 0.25 } else { 0.0 };
                    let weight = id - 0.25 * s * t;
                    if weight != 0.0 {
                        terms.push(SeparableTerm {
                            weight,
                            rho1: axis(k, s),
                            rho2: axis(k, t),
                        });
                    }
                }
            }
        }
        SeparableDecomposition { terms }
    }
}

/// Joint probabilities `Σ c <s/a|ρ1|s/a><t/b|ρ2|t/b>`.
pub fn separable_pair_probs(d: &SeparableDecomposition, a: SpinDirection, b: SpinDirection) -> PairProbs {
    let mut out = PairProbs { pp: 0.0, pm: 0.0, mp: 0.0, mm: 0.0 };
    for t in &d.terms {
        let p = |rho: &DensityOp, ket: [C64; 2]| rho.op().sandwich(&ket, &ket).expect("qubit").re;
        let (ap, am) = (p(&t.rho1, a.plus_ket()), p(&t.rho1, a.minus_ket()));
        let (bp, bm) = (p(&t.rho2, b.plus_ket()), p(&t.rho2, b.minus_ket()));
        out.pp += t.weight * ap * bp;
        out.pm += t.weight * ap * bm;
        out.mp += t.weight * am * bp;
        out.mm += t.weight * am * bm;
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeparableChsh {
    pub value: f64,
    pub negative_weights: bool,
}

pub fn separable_chsh(d: &SeparableDecomposition, s: &ChshSettings) -> SeparableChsh {
    let e = |a, b| separable_pair_probs(d, a, b).correlation();
    SeparableChsh {
        value: e(s.a, s.b) + e(s.a, s.b_prime) - e(s.a_prime, s.b) + e(s.a_prime, s.b_prime),
        negative_weights: d.has_negative_weights(),
    }
}

/// Random simplex weights (exponential spacings).
fn random_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

pub fn random_deterministic_model<R: Rng + ?Sized>(rng: &mut R) -> LocalDeterministicModel {
    let k = rng.random_range(1..=8);
    let tables = ResponseTable::all();
    let lambdas = random_weights(k, rng)
        .into_iter()
        .map(|w| (w, tables[rng.random_range(0..16)]))
        .collect();
    LocalDeterministicModel::new(lambdas).expect("normalized weights")
}

pub fn random_stochastic_model<R: Rng + ?Sized>(rng: &mut R) -> StochasticLocalModel {
    let k = rng.random_range(1..=8);
    let lambdas = random_weights(k, rng)
        .into_iter()
        .map(|w| (w, random_qubit_density(rng), random_qubit_density(rng)))
        .collect();
    StochasticLocalModel::new(lambdas).expect("valid model")
}

pub fn random_settings<R: Rng + ?Sized>(rng: &mut R) -> ChshSettings {
    let mut a = || rng.random_range(0.0..TAU);
    ChshSettings::new(a(), a(), a(), a())
}

/// Outcome of a seeded sweep over random local models.
#[derive(Clone, Debug, Serialize)]
pub struct LocalSweep {
    pub seed: u64,
    pub samples: usize,
    pub max_abs: f64,
    pub violations: usize,
}

/// `samples` random deterministic models; stream `i` generates model `i`.
pub fn deterministic_sweep(seed: u64, samples: usize, exec: Exec) -> LocalSweep {
    let values = par::map_indexed(exec, samples, |i| {
        let mut rng = seeded(seed, i as u64);
        lhv_chsh(&random_deterministic_model(&mut rng))
    });
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    LocalSweep {
        seed,
        samples,
        max_abs,
        violations: values.iter().filter(|v| v.abs() > 2.0).count(),
    }
}

/// `samples` random stochastic models, each at its own random settings.
pub fn stochastic_sweep(seed: u64, samples: usize, exec: Exec) -> LocalSweep {
    let values = par::map_indexed(exec, samples, |i| {
        let mut rng = seeded(seed, i as u64);
        let model = random_stochastic_model(&mut rng);
        let s = random_settings(&mut rng);
        stochastic_local_chsh(&model, &s)
    });
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    LocalSweep {
        seed,
        samples,
        max_abs,
        violations: values.iter().filter(|v| v.abs() > 2.0 + 1e-12).count(),
    }
}
