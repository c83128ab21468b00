//! Hardy's two-spin construction and the probability of its "impossible" event.
//!
//! Basis order is `(|+,+>, |+,->, |-,+>, |-,->)` along the primed axis `Oz`.
//! The unprimed measurement has `+1` eigenket `cos θ|+> + sin θ|->`.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::bell::golden_max;
use crate::error::{Error, Result};
use crate::linalg::{inner, StateVector, C64, ZERO};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HardyState {
    pub theta: f64,
    /// `(α, β, γ)` on `(|+,->, |-,+>, |+,+>)` before normalization.
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
}

impl HardyState {
    /// `-cos θ (|+,-> + |-,+>) + sin θ |+,+>`.
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!("theta = {theta} must lie in (0, π/2)")));
        }
        let (s, c) = theta.sin_cos();
        Ok(HardyState {
            theta,
            alpha: C64::new(-c, 0.0),
            beta: C64::new(-c, 0.0),
            gamma: C64::new(s, 0.0),
        })
    }

    /// Arbitrary coefficients; the exclusion conditions need not hold.
    pub fn from_coefficients(theta: f64, alpha: C64, beta: C64, gamma: C64) -> Self {
        HardyState { theta, alpha, beta, gamma }
    }

    pub fn unnormalized(&self) -> [C64; 4] {
        [self.gamma, self.alpha, self.beta, ZERO]
    }

    pub fn state(&self) -> Result<StateVector> {
        StateVector::qubits(self.unnormalized().to_vec())?.normalized()
    }
}

pub fn hardy_state(theta: f64) -> Result<HardyState> {
    HardyState::new(theta)
}

/// `cos θ|+> + sin θ|->` for each spin, expanded.
pub fn double_plus_ket(theta: f64) -> [C64; 4] {
    let (s, c) = theta.sin_cos();
    [
        C64::new(c * c, 0.0),
        C64::new(s * c, 0.0),
        C64::new(s * c, 0.0),
        C64::new(s * s, 0.0),
    ]
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExclusionReport {
    /// `|<excluded ket | ψ>| / ‖ψ‖` for `cos θ|+,+> + sin θ|+,->`.
    pub first: f64,
    /// Same for `cos θ|+,+> + sin θ|-,+>`.
    pub second: f64,
    /// `|<-,-|ψ>| / ‖ψ‖`.
    pub double_minus: f64,
    pub holds: bool,
}

pub fn verify_exclusions(hs: &HardyState, tol: f64) -> ExclusionReport {
    let psi = hs.unnormalized();
    let n = crate::linalg::norm(&psi);
    let (s, c) = hs.theta.sin_cos();
    let first = [C64::new(c, 0.0), C64::new(s, 0.0), ZERO, ZERO];
    let second = [C64::new(c, 0.0), ZERO, C64::new(s, 0.0), ZERO];
    let r1 = inner(&first, &psi).norm() / n;
    let r2 = inner(&second, &psi).norm() / n;
    let r3 = psi[3].norm() / n;
    ExclusionReport {
        first: r1,
        second: r2,
        double_minus: r3,
        holds: r1 < tol && r2 < tol && r3 < tol,
    }
}

/// `sin²θ (1 - sin²θ)² / (2 - sin²θ)`.
pub fn hardy_prob(theta: f64) -> f64 {
    let s2 = theta.sin().powi(2);
    s2 * (1.0 - s2).powi(2) / (2.0 - s2)
}

/// `|<double plus|ψ>|² / ‖ψ‖²` evaluated on the state vector.
pub fn hardy_prob_from_state(hs: &HardyState) -> f64 {
    let psi = hs.unnormalized();
    inner(&double_plus_ket(hs.theta), &psi).norm_sqr() / inner(&psi, &psi).re
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HardyOptimum {
    pub theta_star: f64,
    pub p_star: f64,
    /// `p_star` recomputed from the state vector at `theta_star`.
    pub p_state: f64,
}

/// Golden-section maximization of [`hardy_prob`] on `(0, π/2)`.
pub fn hardy_maximize() -> Result<HardyOptimum> {
    let (theta_star, p_star) = golden_max(hardy_prob, 0.0, FRAC_PI_2, 200);
    let p_state = hardy_prob_from_state(&HardyState::new(theta_star)?);
    Ok(HardyOptimum { theta_star, p_star, p_state })
}
