//! Three-spin GHZ algebra and N-particle all-or-nothing states.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{inner, norm, pauli, LinOp, StateVector, C64, ZERO};
use crate::par::{self, Exec};
use crate::rng::seeded;

/// Largest particle count for all-or-nothing states.
pub const MAX_PARTICLES: usize = 12;

/// `(|+,+,+> + η|-,-,->)/√2` with `η = ±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GhzState {
    eta: i8,
}

impl GhzState {
    pub fn new(eta: i8) -> Result<Self> {
        if eta != 1 && eta != -1 {
            return Err(Error::InvalidArgument(format!("eta must be +1 or -1, got {eta}")));
        }
        Ok(GhzState { eta })
    }

    pub fn eta(self) -> i8 {
        self.eta
    }

    pub fn state(self) -> StateVector {
        let mut amps = vec![ZERO; 8];
        amps[0] = C64::new(FRAC_1_SQRT_2, 0.0);
        amps[7] = C64::new(self.eta as f64 * FRAC_1_SQRT_2, 0.0);
        StateVector::qubits(amps).expect("three qubits")
    }
}

pub fn ghz3(eta: i8) -> Result<StateVector> {
    Ok(GhzState::new(eta)?.state())
}

/// One factor of a product observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    Z,
    /// `cos θ σx + sin θ σy`.
    InPlane(f64),
}

impl Axis {
    pub fn op(self) -> LinOp {
        match self {
            Axis::X => pauli::x(),
            Axis::Y => pauli::y(),
            Axis::Z => pauli::z(),
            Axis::InPlane(t) => pauli::in_plane(t),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => write!(f, "x"),
            Axis::Y => write!(f, "y"),
            Axis::Z => write!(f, "z"),
            Axis::InPlane(t) => write!(f, "θ={t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductObservable {
    pub axes: Vec<Axis>,
}

impl ProductObservable {
    pub fn new(axes: Vec<Axis>) -> Self {
        ProductObservable { axes }
    }

    pub fn in_plane(thetas: &[f64]) -> Self {
        ProductObservable {
            axes: thetas.iter().map(|&t| Axis::InPlane(t)).collect(),
        }
    }

    pub fn label(&self) -> String {
        self.axes.iter().map(Axis::to_string).collect::<Vec<_>>().join("")
    }
}

/// Parses strings such as `"yyx"`.
impl FromStr for ProductObservable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .map(|c| match c.to_ascii_lowercase() {
                'x' => Ok(Axis::X),
                'y' => Ok(Axis::Y),
                'z' => Ok(Axis::Z),
                other => Err(Error::InvalidArgument(format!("unknown axis '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if axes.is_empty() {
            return Err(Error::InvalidArgument("empty axis list".into()));
        }
        Ok(ProductObservable { axes })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProductExpectation {
    pub expectation: f64,
    /// Set when the state is an eigenvector within tolerance.
    pub eigenvalue: Option<f64>,
    /// `‖Oψ - <O>ψ‖ / ‖ψ‖`.
    pub residual: f64,
}

fn apply_product(state: &StateVector, obs: &ProductObservable) -> Result<StateVector> {
    let n = state.factor_dims().len();
    if obs.axes.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: obs.axes.len(),
        });
    }
    let mut out = state.clone();
    for (site, axis) in obs.axes.iter().enumerate() {
        out = out.apply_local(site, &axis.op())?;
    }
    Ok(out)
}

pub fn product_op_expectation(state: &StateVector, obs: &ProductObservable, tol: f64) -> Result<ProductExpectation> {
    let image = apply_product(state, obs)?;
    let n2 = inner(state.amps(), state.amps()).re;
    let c = inner(state.amps(), image.amps()) / n2;
    let diff: Vec<C64> = image
        .amps()
        .iter()
        .zip(state.amps())
        .map(|(o, s)| o - c * s)
        .collect();
    let residual = norm(&diff) / n2.sqrt();
    Ok(ProductExpectation {
        expectation: c.re,
        eigenvalue: (residual < tol).then_some(c.re),
        residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalRealistReport {
    pub total_assignments: usize,
    pub satisfying_assignments: usize,
    /// `A_x B_x C_x` over the satisfying assignments.
    pub products_xxx: Vec<i8>,
    pub all_products_plus: bool,
    /// Quantum prediction for `σ1x σ2x σ3x` on the `η = -1` state.
    pub quantum_xxx: f64,
    pub contradiction: bool,
}

/// Enumerates the 64 assignments of `A_{x,y}, B_{x,y}, C_{x,y} ∈ {±1}` subject
/// to `A_y B_y C_x = A_x B_y C_y = A_y B_x C_y = 1`.
pub fn local_realist_parity() -> LocalRealistReport {
    let sign = |bits: u32, k: u32| if bits >> k & 1 == 0 { 1i8 } else { -1 };
    let mut products = Vec::new();
    for bits in 0u32..64 {
        let (ax, ay, bx, by, cx, cy) = (
            sign(bits, 5),
            sign(bits, 4),
            sign(bits, 3),
            sign(bits, 2),
            sign(bits, 1),
            sign(bits, 0),
        );
        if ay * by * cx == 1 && ax * by * cy == 1 && ay * bx * cy == 1 {
            products.push(ax * bx * cx);
        }
    }
    let all_plus = products.iter().all(|&p| p == 1);
    assert!(all_plus, "a satisfying assignment has A_x B_x C_x = -1");
    let psi = GhzState { eta: -1 }.state();
    let xxx = product_op_expectation(&psi, &"xxx".parse().expect("axes"), 1e-12)
        .expect("three qubits")
        .expectation;
    LocalRealistReport {
        total_assignments: 64,
        satisfying_assignments: products.len(),
        products_xxx: products,
        all_products_plus: all_plus,
        quantum_xxx: xxx,
        contradiction: all_plus && (xxx + 1.0).abs() < 1e-12,
    }
}

/// `α|+...+> + β|-...->` on `n` spins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AllOrNothingState {
    pub n: usize,
    pub alpha: C64,
    pub beta: C64,
}

fn check_amplitudes(n: usize, alpha: C64, beta: C64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("particle count must be at least 1".into()));
    }
    if n > MAX_PARTICLES {
        return Err(Error::TooMany {
            count: n,
            limit: MAX_PARTICLES,
        });
    }
    let n2 = alpha.norm_sqr() + beta.norm_sqr();
    if (n2 - 1.0).abs() > 1e-12 {
        return Err(Error::Normalization(n2));
    }
    Ok(())
}

impl AllOrNothingState {
    pub fn new(n: usize, alpha: C64, beta: C64) -> Result<Self> {
        check_amplitudes(n, alpha, beta)?;
        Ok(AllOrNothingState { n, alpha, beta })
    }

    /// `α = 1/√2`, `β = e^{iφ}/√2`.
    pub fn with_phase(n: usize, phi: f64) -> Result<Self> {
        Self::new(
            n,
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::from_polar(FRAC_1_SQRT_2, phi),
        )
    }

    pub fn state(&self) -> StateVector {
        let dim = 1usize << self.n;
        let mut amps = vec![ZERO; dim];
        amps[0] += self.alpha;
        amps[dim - 1] += self.beta;
        StateVector::qubits(amps).expect("power of two")
    }
}

pub fn all_or_nothing(n: usize, alpha: C64, beta: C64) -> Result<StateVector> {
    Ok(AllOrNothingState::new(n, alpha, beta)?.state())
}

/// `(α|+> + β|->)^{⊗n}`.
pub fn product_state(n: usize, alpha: C64, beta: C64) -> Result<StateVector> {
    check_amplitudes(n, alpha, beta)?;
    let dim = 1usize << n;
    let amps = (0..dim)
        .map(|s| {
            let down = s.count_ones() as i32;
            alpha.powi(n as i32 - down) * beta.powi(down)
        })
        .collect();
    StateVector::qubits(amps)
}

/// Average of the product of `±1` results for in-plane measurements at `thetas`.
///
/// Each site is rotated to the eigenbasis `(|+> ± e^{iθ}|->)/√2` and the
/// signed probabilities of all `2ⁿ` outcome strings are summed.
pub fn transverse_correlation(state: &StateVector, thetas: &[f64]) -> Result<f64> {
    let n = state.factor_dims().len();
    if state.factor_dims().iter().any(|&d| d != 2) {
        return Err(Error::InvalidArgument("state must be n qubits".into()));
    }
    if thetas.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: thetas.len(),
        });
    }
    let h = FRAC_1_SQRT_2;
    let mut rotated = state.clone();
    for (site, &t) in thetas.iter().enumerate() {
        let e = C64::from_polar(h, -t);
        // rows are <+θ| and <-θ|
        let bras = LinOp::from_entries(2, vec![C64::new(h, 0.0), e, C64::new(h, 0.0), -e]);
        rotated = rotated.apply_local(site, &bras)?;
    }
    let n2 = inner(state.amps(), state.amps()).re;
    let e: f64 = rotated
        .amps()
        .iter()
        .enumerate()
        .map(|(s, a)| if s.count_ones() % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum();
    Ok(e / n2)
}

/// `transverse_correlation` over many angle sets.
pub fn transverse_sweep(state: &StateVector, angle_sets: &[Vec<f64>], exec: Exec) -> Result<Vec<f64>> {
    par::try_map_indexed(exec, angle_sets.len(), |i| transverse_correlation(state, &angle_sets[i]))
}

/// `|<+..+| ρ_k |-..->|` for the reduced state of the first `k` particles.
pub fn subsystem_coherence(aon: &AllOrNothingState, k: usize) -> Result<f64> {
    if k == 0 || k > aon.n {
        return Err(Error::SubsystemOutOfRange { index: k, count: aon.n });
    }
    let keep: Vec<usize> = (0..k).collect();
    let last = (1usize << k) - 1;
    Ok(aon.state().reduced_element(&keep, 0, last)?.norm())
}

/// A site response whose bias `P+ - P-` is a trigonometric polynomial in θ
/// with `Σ|coefficients| <= 1`, so it stays in `[-1, 1]` and is continuous.
#[derive(Clone, Debug)]
pub struct FourierBias {
    /// `(c0, [(a_k, b_k) for k = 1..])`.
    pub constant: f64,
    pub harmonics: Vec<(f64, f64)>,
}

impl FourierBias {
    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.constant;
        for (k, (a, b)) in self.harmonics.iter().enumerate() {
            let (s, c) = ((k + 1) as f64 * theta).sin_cos();
            v += a * c + b * s;
        }
        v
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let k = rng.random_range(0..=3);
        let mut raw: Vec<f64> = (0..1 + 2 * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let total: f64 = raw.iter().map(|x: &f64| x.abs()).sum();
        let scale = rng.random_range(0.5..=1.0) / total.max(1e-300);
        raw.iter_mut().for_each(|x| *x *= scale);
        FourierBias {
            constant: raw[0],
            harmonics: raw[1..].chunks(2).map(|p| (p[0], p[1])).collect(),
        }
    }
}

/// Weighted hidden states, each carrying one response per site.
#[derive(Clone, Debug)]
pub struct NSiteLocalModel {
    pub lambdas: Vec<(f64, Vec<FourierBias>)>,
}

impl NSiteLocalModel {
    pub fn correlation(&self, thetas: &[f64]) -> f64 {
        self.lambdas
            .iter()
            .map(|(w, sites)| w * sites.iter().zip(thetas).map(|(b, &t)| b.eval(t)).product::<f64>())
            .sum()
    }

    /// Random model with generic continuous responses.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let k = rng.random_range(1..=4);
        let weights = random_simplex(k, rng);
        NSiteLocalModel {
            lambdas: weights
                .into_iter()
                .map(|w| (w, (0..n).map(|_| FourierBias::random(rng)).collect()))
                .collect(),
        }
    }

    /// Random mixture of sign-definite responses whose signs multiply to `+1`.
    pub fn random_certain<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let k = rng.random_range(1..=4);
        let weights = random_simplex(k, rng);
        NSiteLocalModel {
            lambdas: weights
                .into_iter()
                .map(|w| {
                    let mut signs: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
                    let p: f64 = signs.iter().product();
                    signs[n - 1] *= p;
                    let sites = signs
                        .into_iter()
                        .map(|s| FourierBias { constant: s, harmonics: vec![] })
                        .collect();
                    (w, sites)
                })
                .collect(),
        }
    }
}

fn random_simplex<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstancyReport {
    pub n: usize,
    pub phi: f64,
    /// `max E - min E` of the quantum prediction over the sweep.
    pub quantum_variation: f64,
    pub models: usize,
    /// Models giving `E = 1` at every sampled point with `Σθ ≡ φ (mod 2π)`.
    pub certain_models: usize,
    pub max_certain_variation: f64,
    pub holds: bool,
}

/// Compares the oscillating quantum correlation with sampled continuous local
/// models. Models certain at `Σθ ≡ φ` must keep `E` constant over the sweep.
pub fn local_constancy_check(n: usize, phi: f64, seed: u64, samples: usize, exec: Exec) -> Result<ConstancyReport> {
    const CERTAINTY_POINTS: usize = 64;
    const SWEEP_POINTS: usize = 64;
    const CERTAIN_TOL: f64 = 1e-12;
    if n < 2 {
        return Err(Error::InvalidArgument("constancy check needs at least 2 particles".into()));
    }
    let aon = AllOrNothingState::with_phase(n, phi)?;
    let psi = aon.state();

    let mut rng = seeded(seed, u64::MAX);
    let mut certainty_sets = Vec::with_capacity(CERTAINTY_POINTS);
    for _ in 0..CERTAINTY_POINTS {
        let mut t: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.0..TAU)).collect();
        let s: f64 = t.iter().sum();
        t.push(phi - s);
        certainty_sets.push(t);
    }
    let mut sweep_sets = Vec::with_capacity(SWEEP_POINTS);
    for k in 0..SWEEP_POINTS {
        let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        // guarantee both extremes of the quantum cosine are visited
        if k < 2 {
            let s: f64 = t[..n - 1].iter().sum();
            t[n - 1] = phi + k as f64 * PI - s;
        }
        sweep_sets.push(t);
    }

    let quantum = transverse_sweep(&psi, &sweep_sets, exec)?;
    let spread = |v: &[f64]| {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        hi - lo
    };
    let quantum_variation = spread(&quantum);

    let per_model = par::map_indexed(exec, samples, |i| {
        let mut rng = seeded(seed, i as u64);
        let model = if i % 2 == 0 {
            NSiteLocalModel::random(n, &mut rng)
        } else {
            NSiteLocalModel::random_certain(n, &mut rng)
        };
        let certain = certainty_sets
            .iter()
            .all(|t| (model.correlation(t) - 1.0).abs() < CERTAIN_TOL);
        let values: Vec<f64> = sweep_sets.iter().map(|t| model.correlation(t)).collect();
        (certain, spread(&values))
    });
    let certain: Vec<f64> = per_model.iter().filter(|m| m.0).map(|m| m.1).collect();
    let max_certain_variation = certain.iter().fold(0.0f64, |m, &v| m.max(v));
    Ok(ConstancyReport {
        n,
        phi,
        quantum_variation,
        models: samples,
        certain_models: certain.len(),
        max_certain_variation,
        holds: quantum_variation > 1.9 && max_certain_variation < 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{QuantumState, Tensor};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ghz_amplitudes_and_marginal() {
        let psi = ghz3(-1).unwrap();
        assert!(close(psi.amps()[0].re, FRAC_1_SQRT_2, 0.0));
        assert!(close(psi.amps()[7].re, -FRAC_1_SQRT_2, 0.0));
        assert!(close(psi.norm(), 1.0, 1e-15));
        let r = psi.reduced(&[0, 1]).unwrap();
        let mut expected = LinOp::zeros(4);
        expected[(0, 0)] = C64::new(0.5, 0.0);
        expected[(3, 3)] = C64::new(0.5, 0.0);
        assert!(r.op().max_abs_diff(&expected) < 1e-15);
        assert!(ghz3(0).is_err());
    }

    #[test]
    fn ghz_eigenvalues_follow_eta() {
        for eta in [-1i8, 1] {
            let psi = ghz3(eta).unwrap();
            for axes in ["yyx", "xyy", "yxy"] {
                let r = product_op_expectation(&psi, &axes.parse().unwrap(), 1e-12).unwrap();
                assert_eq!(r.eigenvalue, Some(-(eta as f64)), "{axes} eta={eta}");
                assert!(r.residual < 1e-12);
            }
            let r = product_op_expectation(&psi, &"xxx".parse().unwrap(), 1e-12).unwrap();
            assert_eq!(r.eigenvalue, Some(eta as f64));
        }
    }

    #[test]
    fn zzz_is_not_certain() {
        let r = product_op_expectation(&ghz3(-1).unwrap(), &"zzz".parse().unwrap(), 1e-12).unwrap();
        assert!(close(r.expectation, 0.0, 1e-15));
        assert!(r.eigenvalue.is_none());
    }

    #[test]
    fn axis_count_must_match() {
        assert!(matches!(
            product_op_expectation(&ghz3(1).unwrap(), &"xx".parse().unwrap(), 1e-12),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!("xqz".parse::<ProductObservable>().is_err());
    }

    #[test]
    fn parity_enumeration() {
        let r = local_realist_parity();
        assert_eq!(r.total_assignments, 64);
        assert_eq!(r.satisfying_assignments, 8);
        assert!(r.all_products_plus);
        assert!(r.contradiction);
    }

    #[test]
    fn all_or_nothing_cases() {
        let h = FRAC_1_SQRT_2;
        let a = all_or_nothing(3, C64::new(h, 0.0), C64::new(-h, 0.0)).unwrap();
        assert!(a.amps().iter().zip(ghz3(-1).unwrap().amps()).all(|(x, y)| (x - y).norm() < 1e-16));
        let b = all_or_nothing(4, C64::new(1.0, 0.0), ZERO).unwrap();
        assert_eq!(b.amps()[0], C64::new(1.0, 0.0));
        assert!(all_or_nothing(13, C64::new(1.0, 0.0), ZERO).is_err());
        assert!(matches!(
            all_or_nothing(2, C64::new(1.0, 0.0), C64::new(0.1, 0.0)),
            Err(Error::Normalization(_))
        ));
        let one = all_or_nothing(1, C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap();
        assert_eq!(one.amps(), &[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
    }

    #[test]
    fn product_state_expansion() {
        let (a, b) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let p = product_state(2, a, b).unwrap();
        let want = [a * a, a * b, b * a, b * b];
        assert!(p.amps().iter().zip(want).all(|(x, y)| (x - y).norm() < 1e-16));
        let single = StateVector::qubits(vec![a, b]).unwrap();
        let three = single.tensor(&single).unwrap().tensor(&single).unwrap();
        let p3 = product_state(3, a, b).unwrap();
        assert!(p3.amps().iter().zip(three.amps()).all(|(x, y)| (x - y).norm() < 1e-15));
        assert_eq!(product_state(1, a, b).unwrap(), all_or_nothing(1, a, b).unwrap());
    }

    #[test]
    fn overlap_with_product_state() {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let g = all_or_nothing(3, h, h).unwrap();
        let p = product_state(3, h, h).unwrap();
        // α*·α³ + β*·β³ with α = β = 1/√2
        let oracle = 2.0 * 0.5f64.powi(2);
        assert!(close(g.inner(&p).unwrap().re, oracle, 1e-15));
    }

    #[test]
    fn transverse_certainty_points() {
        let phi = 0.7;
        let s = AllOrNothingState::with_phase(4, phi).unwrap().state();
        let t = [0.1, 0.2, 0.3, phi - 0.6];
        assert!(close(transverse_correlation(&s, &t).unwrap(), 1.0, 1e-12));
        let t = [0.1, 0.2, 0.3, phi + PI - 0.6];
        assert!(close(transverse_correlation(&s, &t).unwrap(), -1.0, 1e-12));
    }

    #[test]
    fn transverse_two_spin_against_outcome_sum() {
        let h = FRAC_1_SQRT_2;
        let s = all_or_nothing(2, C64::new(h, 0.0), C64::new(-h, 0.0)).unwrap();
        // each outcome projector formed explicitly
        let proj = |t: f64, sign: f64| {
            let ket = [C64::new(h, 0.0), C64::from_polar(sign * h, t)];
            LinOp::projector_onto(&ket).unwrap()
        };
        let mut e = 0.0;
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                e += s1 * s2 * s.prob(&proj(0.0, s1).kron(&proj(0.0, s2)).unwrap()).unwrap();
            }
        }
        assert!(close(transverse_correlation(&s, &[0.0, 0.0]).unwrap(), e, 1e-15));
        assert!(close(e, -1.0, 1e-15));
    }

    #[test]
    fn transverse_matches_product_operator() {
        let mut rng = seeded(4, 0);
        let psi = crate::rng::random_state(&[2, 2, 2], &mut rng);
        let t = [0.3, 1.9, -0.4];
        let via_op = product_op_expectation(&psi, &ProductObservable::in_plane(&t), 1e-12).unwrap();
        assert!(close(transverse_correlation(&psi, &t).unwrap(), via_op.expectation, 1e-14));
        assert!(transverse_correlation(&psi, &t[..2]).is_err());
    }

    #[test]
    fn coherence_appears_only_with_all_particles() {
        let s = AllOrNothingState::with_phase(3, 0.4).unwrap();
        assert!(subsystem_coherence(&s, 2).unwrap() < 1e-12);
        assert!(close(subsystem_coherence(&s, 3).unwrap(), 0.5, 1e-15));
        let s2 = AllOrNothingState::with_phase(2, 0.0).unwrap();
        assert!(subsystem_coherence(&s2, 1).unwrap() < 1e-12);
        assert!(subsystem_coherence(&s2, 0).is_err());
        assert!(subsystem_coherence(&s2, 3).is_err());
    }

    #[test]
    fn local_models_certain_at_phi_are_constant() {
        let r = local_constancy_check(3, 0.5, 11, 200, Exec::default()).unwrap();
        assert!(r.quantum_variation > 1.9);
        assert!(r.certain_models >= 100);
        assert!(r.holds);
    }

    #[test]
    fn fourier_bias_is_bounded() {
        let mut rng = seeded(12, 0);
        for _ in 0..100 {
            let b = FourierBias::random(&mut rng);
            for k in 0..50 {
                assert!(b.eval(k as f64 * 0.13).abs() <= 1.0 + 1e-15);
            }
        }
    }
}
