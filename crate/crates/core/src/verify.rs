//! Runs the eleven acceptance criteria and collects one verdict per criterion.

use std::f64::consts::{FRAC_PI_2, SQRT_2, TAU};

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bell::{
    chsh_optimize_with, deterministic_sweep, pair_probs, singlet, stochastic_sweep, DEFAULT_GRID,
    DEFAULT_REFINEMENT_ITERS,
};
use crate::bks::{coloring_search, mermin_square, spin1_squares};
use crate::decoherence::{entangled_env_state, reduced_after_scattering, system_block, EnvOverlap};
use crate::error::Result;
use crate::ghz::{ghz3, local_realist_parity, product_op_expectation, subsystem_coherence, transverse_correlation, AllOrNothingState};
use crate::hardy::{hardy_maximize, hardy_state, verify_exclusions};
use crate::histories::{
    additivity_defects, build_consistent_family, consistency_matrix_with, family_probabilities_with,
    sigma_x_then_z_family, ConsistencyMode, Grouping, HistoryFamily, TimeGrid,
};
use crate::linalg::{LinOp, C64};
use crate::nosignal::random_sweep;
use crate::par::{self, Exec};
use crate::report;
use crate::rng::{random_density, random_hermitian, random_unitary, seeded};

/// Sample count for the local-model sweeps of criterion 3.
pub const LOCAL_MODEL_SAMPLES: usize = 10_000;

#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub all_pass: bool,
    pub criteria: Vec<Criterion>,
}

fn crit(id: u8, name: &'static str, pass: bool, detail: Value) -> Criterion {
    Criterion { id, name, pass, detail }
}

fn max_abs(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn chsh_violation(exec: Exec) -> Result<Criterion> {
    let opt = chsh_optimize_with(&singlet(), DEFAULT_GRID, DEFAULT_REFINEMENT_ITERS, exec)?;
    let err = (opt.value.abs() - 2.0 * SQRT_2).abs();
    Ok(crit(
        1,
        "chsh_violation",
        err < 1e-6,
        json!({ "value": opt.value, "settings": opt.settings.angles(), "error": err }),
    ))
}

pub fn singlet_law() -> Result<Criterion> {
    let psi = singlet();
    let (mut prob_err, mut corr_err) = (0.0f64, 0.0f64);
    for k in 0..360 {
        let theta = (k as f64).to_radians();
        let p = pair_probs(&psi, theta.into(), 0.0.into())?;
        let same = 0.5 * (theta / 2.0).sin().powi(2);
        let opposite = 0.5 * (theta / 2.0).cos().powi(2);
        prob_err = prob_err.max(max_abs([p.pp - same, p.mm - same, p.pm - opposite, p.mp - opposite]));
        corr_err = corr_err.max((p.correlation() + theta.cos()).abs());
    }
    Ok(crit(
        2,
        "singlet_law",
        prob_err < 1e-12 && corr_err < 1e-12,
        json!({ "points": 360, "max_prob_error": prob_err, "max_correlation_error": corr_err }),
    ))
}

pub fn bchsh_bound(seed: u64, exec: Exec) -> Criterion {
    let det = deterministic_sweep(seed, LOCAL_MODEL_SAMPLES, exec);
    let sto = stochastic_sweep(seed, LOCAL_MODEL_SAMPLES, exec);
    crit(
        3,
        "bchsh_bound",
        det.max_abs <= 2.0 && sto.max_abs <= 2.0 + 1e-12,
        json!({ "deterministic": det, "stochastic": sto }),
    )
}

pub fn ghz() -> Result<Criterion> {
    let psi = ghz3(-1)?;
    let mut residual = 0.0f64;
    let mut eigen_ok = true;
    let mut values = serde_json::Map::new();
    for (axes, want) in [("yyx", 1.0), ("xyy", 1.0), ("yxy", 1.0), ("xxx", -1.0)] {
        let r = product_op_expectation(&psi, &axes.parse()?, 1e-12)?;
        residual = residual.max(r.residual);
        eigen_ok &= r.eigenvalue.is_some_and(|v| (v - want).abs() < 1e-12);
        values.insert(axes.into(), json!(r.expectation));
    }
    let parity = local_realist_parity();
    Ok(crit(
        4,
        "ghz",
        eigen_ok && residual < 1e-12 && parity.all_products_plus && parity.contradiction,
        json!({
            "eigenvalues": values,
            "max_residual": residual,
            "assignments": parity.total_assignments,
            "satisfying": parity.satisfying_assignments,
            "all_local_products_plus": parity.all_products_plus,
        }),
    ))
}

pub fn all_or_nothing(seed: u64, exec: Exec) -> Result<Criterion> {
    let per_n = par::try_map_indexed(exec, 9, |i| -> Result<(f64, f64)> {
        let n = i + 2;
        let mut rng = seeded(seed, 500 + n as u64);
        let phi = rng.random_range(0.0..TAU);
        let aon = AllOrNothingState::with_phase(n, phi)?;
        let psi = aon.state();
        let mut err = 0.0f64;
        for _ in 0..100 {
            let thetas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
            let e = transverse_correlation(&psi, &thetas)?;
            err = err.max((e - (thetas.iter().sum::<f64>() - phi).cos()).abs());
        }
        Ok((err, subsystem_coherence(&aon, n - 1)?))
    })?;
    let err = max_abs(per_n.iter().map(|p| p.0));
    let coh = max_abs(per_n.iter().map(|p| p.1));
    Ok(crit(
        5,
        "all_or_nothing",
        err < 1e-10 && coh < 1e-12,
        json!({ "max_correlation_error": err, "max_reduced_coherence": coh }),
    ))
}

pub fn hardy() -> Result<Criterion> {
    let opt = hardy_maximize()?;
    let mut worst = 0.0f64;
    for k in 1..=1000 {
        let theta = FRAC_PI_2 * k as f64 / 1001.0;
        let r = verify_exclusions(&hardy_state(theta)?, 1e-12);
        worst = worst.max(r.first).max(r.second).max(r.double_minus);
    }
    let closed = (5.0 * 5f64.sqrt() - 11.0) / 2.0;
    Ok(crit(
        6,
        "hardy",
        (opt.p_star - 0.090170).abs() < 1e-6 && (opt.p_star - closed).abs() < 1e-9 && worst < 1e-12,
        json!({ "theta_star": opt.theta_star, "p_star": opt.p_star, "max_exclusion_overlap": worst }),
    ))
}

pub fn bks() -> Result<Criterion> {
    let square = mermin_square().check();
    let coloring = coloring_search([1, 1, 1], [1, 1, -1]);
    let (_, _, _, spin1) = spin1_squares()?;
    Ok(crit(
        7,
        "bks",
        square.holds && coloring.solutions == 0 && spin1.holds,
        json!({
            "row_residuals": square.row_residuals,
            "col_residuals": square.col_residuals,
            "colorings_examined": coloring.assignments_examined,
            "colorings_found": coloring.solutions,
            "spin1_sum_residual": spin1.sum_residual,
            "spin1_commutators": spin1.commutators,
        }),
    ))
}

pub fn decoherence(seed: u64, exec: Exec) -> Result<Criterion> {
    let diffs = par::try_map_indexed(exec, 100, |i| -> Result<f64> {
        let mut rng = seeded(seed, 800 + i as u64);
        let n_photons = i % 7;
        let spins = 1 + i % 2;
        let a = rng.random_range(0.0..1.0f64).sqrt();
        let alpha = C64::new(a, 0.0);
        let beta = C64::from_polar((1.0 - a * a).sqrt(), rng.random_range(0.0..TAU));
        let sys = AllOrNothingState::new(spins, alpha, beta)?;
        let overlaps = (0..n_photons)
            .map(|_| EnvOverlap::new(C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(0.0..TAU))))
            .collect::<Result<Vec<_>>>()?;
        let photons: Vec<_> = overlaps.iter().map(|o| o.photon_pair()).collect();
        let explicit = system_block(&entangled_env_state(&sys, &photons)?, spins)?;
        let closed = reduced_after_scattering(alpha, beta, &overlaps)?;
        Ok(explicit.max_abs_diff(&closed))
    })?;
    let worst = max_abs(diffs);
    Ok(crit(
        8,
        "decoherence",
        worst < 1e-12,
        json!({ "overlap_sets": 100, "max_photons": 6, "max_discrepancy": worst }),
    ))
}

fn random_partition<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let k = rng.random_range(1..=n);
    let mut groups = vec![vec![]; k];
    for i in 0..n {
        let g = if i < k { i } else { rng.random_range(0..k) };
        groups[g].push(i);
    }
    groups
}

pub fn histories(seed: u64, exec: Exec) -> Result<Criterion> {
    let mut rng = seeded(seed, 900);
    let (mut sum_err, mut violation, mut coarse_violation, mut additivity) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for trial in 0..20 {
        let dim = [2, 3, 4][trial % 3];
        let times = vec![0.5, 1.0, 1.7];
        let grid = TimeGrid::from_hamiltonian(&random_hermitian(dim, &mut rng), 0.0, times.clone())?;
        let rho = random_density(&[dim], &mut rng);

        // generic family: random bases grouped at random
        let sets = (0..3)
            .map(|_| {
                let u = random_unitary(dim, &mut rng);
                random_partition(dim, &mut rng)
                    .into_iter()
                    .map(|g| {
                        let mut p = LinOp::zeros(dim);
                        for k in g {
                            p = &p + &LinOp::projector_onto(&u.column(k))?;
                        }
                        Ok(p)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let generic = HistoryFamily::new(grid.clone(), sets, rho.clone())?;
        let total: f64 = family_probabilities_with(&generic, exec)?.iter().map(|h| h.1).sum();
        sum_err = sum_err.max((total - 1.0).abs());

        let family = build_consistent_family(&rho, &grid)?;
        let total: f64 = family_probabilities_with(&family, exec)?.iter().map(|h| h.1).sum();
        sum_err = sum_err.max((total - 1.0).abs());
        violation = violation.max(consistency_matrix_with(&family, ConsistencyMode::Strong, exec)?.max_violation);
        let grouping: Grouping = (0..3).map(|_| random_partition(dim, &mut rng)).collect();
        let coarse = crate::histories::coarse_grain(&family, &grouping)?;
        coarse_violation =
            coarse_violation.max(consistency_matrix_with(&coarse, ConsistencyMode::Strong, exec)?.max_violation);
        additivity = additivity.max(max_abs(additivity_defects(&family, &grouping)?.iter().map(|d| d.delta)));
    }
    let sx = consistency_matrix_with(&sigma_x_then_z_family(), ConsistencyMode::Strong, exec)?;
    // independent trace: <0|P- P0 P+|0> with P± = (I ± σx)/2
    let oracle = 0.25;
    Ok(crit(
        9,
        "histories",
        sum_err < 1e-10
            && violation < 1e-12
            && coarse_violation < 1e-12
            && additivity < 1e-10
            && (sx.max_violation - oracle).abs() < 1e-12,
        json!({
            "max_sum_error": sum_err,
            "eigenbasis_violation": violation,
            "coarse_violation": coarse_violation,
            "max_additivity_defect": additivity,
            "sigma_x_z_violation": sx.max_violation,
        }),
    ))
}

pub fn no_signaling(seed: u64, exec: Exec) -> Result<Criterion> {
    let s = random_sweep(seed, 100, exec)?;
    Ok(crit(
        10,
        "no_signaling",
        s.max_path_discrepancy < 1e-12 && s.max_choice_discrepancy < 1e-12,
        json!(s),
    ))
}

fn criteria_1_to_10(seed: u64, exec: Exec) -> Result<Vec<Criterion>> {
    Ok(vec![
        chsh_violation(exec)?,
        singlet_law()?,
        bchsh_bound(seed, exec),
        ghz()?,
        all_or_nothing(seed, exec)?,
        hardy()?,
        bks()?,
        decoherence(seed, exec)?,
        histories(seed, exec)?,
        no_signaling(seed, exec)?,
    ])
}

/// Criteria 1 to 10, then 11: a second full run must serialize to identical bytes.
pub fn verify_all(seed: u64, exec: Exec) -> Result<VerifyReport> {
    let mut criteria = criteria_1_to_10(seed, exec)?;
    let first = report::to_json(&criteria);
    let second = report::to_json(&criteria_1_to_10(seed, exec)?);
    criteria.push(crit(
        11,
        "reproducibility",
        first == second,
        json!({ "bytes": first.len(), "identical": first == second }),
    ));
    Ok(VerifyReport {
        seed,
        all_pass: criteria.iter().all(|c| c.pass),
        criteria,
    })
}
