use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, TAU};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qfound::bell::{
    chsh_optimize, chsh_value, deterministic_sweep, separable_chsh, singlet, singlet_sweep, stochastic_sweep,
    ChshSettings, SeparableDecomposition, DEFAULT_REFINEMENT_ITERS,
};
use qfound::bks::{coloring_search, mermin_square, spin1_squares, wigner_category_count};
use qfound::decoherence::{decay_curve, entangled_env_state, system_block, EnvOverlap};
use qfound::ghz::{
    ghz3, local_constancy_check, local_realist_parity, product_op_expectation, subsystem_coherence,
    transverse_sweep, AllOrNothingState,
};
use qfound::hardy::{hardy_maximize, hardy_prob, hardy_state, verify_exclusions};
use qfound::histories::{
    consistency_matrix, family_probabilities, sigma_x_then_z_family, ConsistencyMode, FamilySpec, HistoryFamily,
};
use qfound::linalg::{LinOp, C64};
use qfound::nosignal::random_sweep;
use qfound::par::Exec;
use qfound::report::{self, round_sig};
use qfound::rng::DEFAULT_SEED;
use qfound::verify::verify_all;

#[derive(Parser, Debug)]
#[command(name = "qfound", version, about = "Quantum foundations demonstrations")]
struct Cli {
    /// Seed for every random sweep.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Tolerance for asserted invariants.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Write the data series of the subcommand to this CSV file.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Sample count for property sweeps.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    samples: Option<u64>,
    /// Grid size for optimizers.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(8..))]
    grid: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Singlet CHSH value, optionally maximized over settings.
    Chsh {
        #[arg(long)]
        optimize: bool,
    },
    /// Seeded local deterministic and stochastic models against the bound 2.
    Lhv,
    /// Three-particle GHZ eigenvalues and the local-realist parity enumeration.
    Ghz,
    /// n-particle all-or-nothing correlations.
    Allornothing {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
    },
    /// Hardy probability maximum and exclusion checks.
    Hardy,
    /// Mermin square, exhaustive colorings and spin-1 squares.
    Bks,
    /// Coherence decay of a spin scattering photons.
    Decoherence {
        /// Overlap of the two photon states.
        #[arg(long, default_value_t = 0.9)]
        g: f64,
        #[arg(long, default_value_t = 20)]
        photons: usize,
    },
    /// Probabilities and consistency of a family of histories.
    Histories {
        /// Family JSON file; defaults to the σx-then-σz qubit family.
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Strong)]
        mode: Mode,
    },
    /// Seeded no-signaling sweep over random bipartite states.
    Nosignal,
    /// Runs all acceptance criteria.
    VerifyAll,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Strong,
    Weak,
}

impl From<Mode> for ConsistencyMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Strong => ConsistencyMode::Strong,
            Mode::Weak => ConsistencyMode::Weak,
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<qfound::Error> for Failure {
    fn from(e: qfound::Error) -> Self {
        match e {
            qfound::Error::InvalidArgument(_) | qfound::Error::Normalization(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

/// A finished run: report, human-readable lines and whether every asserted invariant held.
struct Outcome {
    report: Value,
    lines: Vec<String>,
    ok: bool,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

fn write_csv(path: &Path, table: &Table) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::Runtime(format!("{}: {e}", path.display()));
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(tmp.as_file());
        let csv_err = |e: csv::Error| Failure::Runtime(format!("{}: {e}", path.display()));
        w.write_record(&table.header).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|x| round_sig(*x).to_string())).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
    }
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn chsh(cli: &Cli, optimize: bool) -> Result<(Outcome, Table), Failure> {
    let psi = singlet();
    let bound = 2.0 * 2f64.sqrt();
    let (settings, value, mut report) = if optimize {
        let grid = cli.grid.unwrap_or(64) as usize;
        let opt = chsh_optimize(&psi, grid, DEFAULT_REFINEMENT_ITERS)?;
        (opt.settings, opt.value, json!({ "grid": grid, "grid_best": opt.grid_best }))
    } else {
        let s = ChshSettings::tsirelson();
        (s, chsh_value(&psi, &s)?, json!({}))
    };
    let direct = chsh_value(&psi, &settings)?;
    let ok = value.abs() <= bound + cli.tol && (direct - value).abs() <= cli.tol;
    report["settings"] = report::to_value(&settings);
    report["value"] = json!(value);
    report["tsirelson_bound"] = json!(bound);
    let [a, ap, b, bp] = settings.angles();
    let lines = vec![
        format!("settings (a, a', b, b') = ({a:.6}, {ap:.6}, {b:.6}, {bp:.6})"),
        format!("<M> = {value:.9}  (|<M>| / 2 = {:.6})", value.abs() / 2.0),
    ];
    let rows = singlet_sweep(360)?
        .into_iter()
        .map(|r| vec![r.theta_deg, r.p_pp, r.p_pm, r.p_mp, r.p_mm, r.e])
        .collect();
    let table = Table {
        header: vec!["theta_deg", "p_pp", "p_pm", "p_mp", "p_mm", "E"],
        rows,
    };
    Ok((Outcome { report, lines, ok }, table))
}

fn lhv(cli: &Cli, exec: Exec) -> Result<Outcome, Failure> {
    let samples = cli.samples.unwrap_or(10_000) as usize;
    let det = deterministic_sweep(cli.seed, samples, exec);
    let sto = stochastic_sweep(cli.seed, samples, exec);
    let sep = separable_chsh(&SeparableDecomposition::singlet(), &ChshSettings::tsirelson());
    let ok = det.violations == 0 && sto.violations == 0;
    let lines = vec![
        format!("deterministic: {samples} models, max |<M>| = {:.12}, violations {}", det.max_abs, det.violations),
        format!("stochastic:    {samples} models, max |<M>| = {:.12}, violations {}", sto.max_abs, sto.violations),
        format!(
            "singlet as separable sum: <M> = {:.9}, negative weights: {}",
            sep.value, sep.negative_weights
        ),
    ];
    let report = json!({ "deterministic": det, "stochastic": sto, "separable_singlet": sep });
    Ok(Outcome { report, lines, ok })
}

fn ghz(cli: &Cli) -> Result<Outcome, Failure> {
    let psi = ghz3(-1)?;
    let mut products = serde_json::Map::new();
    let mut lines = Vec::new();
    let mut ok = true;
    for (axes, want) in [("yyx", 1.0), ("xyy", 1.0), ("yxy", 1.0), ("xxx", -1.0)] {
        let r = product_op_expectation(&psi, &axes.parse()?, cli.tol)?;
        ok &= r.eigenvalue.is_some_and(|v| (v - want).abs() < cli.tol);
        lines.push(format!("{axes}: <O> = {:+.12}, residual {:.3e}", r.expectation, r.residual));
        products.insert(axes.into(), report::to_value(&r));
    }
    let parity = local_realist_parity();
    ok &= parity.all_products_plus && parity.contradiction;
    lines.push(format!(
        "local realism: {} of {} assignments satisfy the three constraints, all give xxx = +1",
        parity.satisfying_assignments, parity.total_assignments
    ));
    let report = json!({ "products": products, "local_realist": parity });
    Ok(Outcome { report, lines, ok })
}

fn allornothing(cli: &Cli, exec: Exec, n: usize, phi: f64) -> Result<(Outcome, Table), Failure> {
    let aon = AllOrNothingState::with_phase(n, phi)?;
    let psi = aon.state();
    let points = cli.samples.unwrap_or(360) as usize;
    let sets: Vec<Vec<f64>> = (0..points)
        .map(|k| vec![TAU * k as f64 / points as f64 / n as f64; n])
        .collect();
    let es = transverse_sweep(&psi, &sets, exec)?;
    let mut err = 0.0f64;
    let mut rows = Vec::with_capacity(points);
    for (t, e) in sets.iter().zip(&es) {
        let total: f64 = t.iter().sum();
        err = err.max((e - (total - phi).cos()).abs());
        rows.push(vec![total, *e]);
    }
    let coherences = (1..=n)
        .map(|k| subsystem_coherence(&aon, k))
        .collect::<qfound::Result<Vec<_>>>()?;
    let partial = coherences[..n - 1].iter().fold(0.0f64, |m, c| m.max(*c));
    let constancy = local_constancy_check(n, phi, cli.seed, cli.samples.unwrap_or(200) as usize, exec)?;
    let ok = err < cli.tol && partial < cli.tol && constancy.holds;
    let lines = vec![
        format!("n = {n}, phi = {phi}: max |E - cos(sum - phi)| = {err:.3e} over {points} points"),
        format!("coherence of k-particle subsystems (k = 1..{n}): {coherences:?}"),
        format!(
            "local models: {} sampled, {} certain, max variation of certain models {:.3e}",
            constancy.models, constancy.certain_models, constancy.max_certain_variation
        ),
    ];
    let report = json!({
        "n": n,
        "phi": phi,
        "max_correlation_error": err,
        "subsystem_coherence": coherences,
        "constancy": constancy,
    });
    let table = Table { header: vec!["theta_sum", "E"], rows };
    Ok((Outcome { report, lines, ok }, table))
}

fn hardy(cli: &Cli) -> Result<(Outcome, Table), Failure> {
    let opt = hardy_maximize()?;
    let ex = verify_exclusions(&hardy_state(opt.theta_star)?, cli.tol);
    let closed = (5.0 * 5f64.sqrt() - 11.0) / 2.0;
    let ok = ex.holds && (opt.p_star - closed).abs() < 1e-9 && (opt.p_state - opt.p_star).abs() < cli.tol;
    let lines = vec![
        format!("theta* = {:.9}, p* = {:.9}", opt.theta_star, opt.p_star),
        format!(
            "exclusion overlaps: {:.3e}, {:.3e}, {:.3e}",
            ex.first, ex.second, ex.double_minus
        ),
    ];
    let report = json!({
        "theta_star": opt.theta_star,
        "p_star": opt.p_star,
        "exclusion_residuals": { "first": ex.first, "second": ex.second, "double_minus": ex.double_minus },
    });
    let points = cli.samples.unwrap_or(1000) as usize;
    let rows = (1..=points)
        .map(|k| {
            let theta = FRAC_PI_2 * k as f64 / (points + 1) as f64;
            vec![theta, hardy_prob(theta)]
        })
        .collect();
    Ok((Outcome { report, lines, ok }, Table { header: vec!["theta", "p"], rows }))
}

fn sign_string(signs: impl IntoIterator<Item = f64>) -> String {
    signs
        .into_iter()
        .map(|s| if s > 0.0 { "+1" } else { "-1" })
        .collect::<Vec<_>>()
        .join(",")
}

fn bks(cli: &Cli) -> Result<Outcome, Failure> {
    let square = mermin_square();
    let check = square.check();
    let product = |ops: [&LinOp; 3]| (&(ops[0] * ops[1]) * ops[2]).trace().re / 4.0;
    let rows: Vec<f64> = (0..3)
        .map(|k| product([&square.grid[k][0], &square.grid[k][1], &square.grid[k][2]]))
        .collect();
    let cols: Vec<f64> = (0..3)
        .map(|k| product([&square.grid[0][k], &square.grid[1][k], &square.grid[2][k]]))
        .collect();
    let coloring = coloring_search(square.row_signs, square.col_signs);
    let relaxed = coloring_search([1, 1, 1], [1, 1, 1]);
    let (_, _, _, spin1) = spin1_squares()?;
    let wigner = wigner_category_count();
    let residual = check.row_residuals.iter().chain(&check.col_residuals).fold(0.0f64, |m, r| m.max(*r));
    let ok = residual < cli.tol && coloring.solutions == 0 && spin1.holds;
    let lines = vec![
        format!("row products: {}   column products: {}", sign_string(rows.clone()), sign_string(cols.clone())),
        format!(
            "value assignments: {} examined, {} consistent (all-plus variant: {})",
            coloring.assignments_examined, coloring.solutions, relaxed.solutions
        ),
        format!("spin-1 squares: sum residual {:.3e}, eigenvalues {:?}", spin1.sum_residual, spin1.eigenvalues),
    ];
    let report = json!({
        "colorings_found": coloring.solutions,
        "colorings_examined": coloring.assignments_examined,
        "row_products": sign_string(rows),
        "col_products": sign_string(cols),
        "relaxed_colorings_found": relaxed.solutions,
        "square": check,
        "spin1": spin1,
        "wigner": wigner,
    });
    Ok(Outcome { report, lines, ok })
}

fn decoherence(cli: &Cli, g: f64, photons: usize) -> Result<(Outcome, Table), Failure> {
    let (alpha, beta) = (C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0));
    let overlap = EnvOverlap::new(C64::new(g, 0.0))?;
    let curve = decay_curve(alpha, beta, overlap, photons)?;
    let sys = AllOrNothingState::new(1, alpha, beta)?;
    let mut worst = 0.0f64;
    for p in curve.iter().take(7) {
        let pairs = vec![overlap.photon_pair(); p.n];
        let rho = system_block(&entangled_env_state(&sys, &pairs)?, 1)?;
        worst = worst.max((rho[(0, 1)].norm() - p.coherence).abs());
    }
    let ok = worst < cli.tol;
    let mut lines = vec![format!("g = {g}: |rho_+-| after n photons")];
    lines.extend(curve.iter().map(|p| format!("  n = {:3}  {:.12}", p.n, p.coherence)));
    lines.push(format!("explicit partial trace vs closed form (n <= 6): {worst:.3e}"));
    let report = json!({ "g": g, "curve": curve, "explicit_discrepancy": worst });
    let rows = curve.iter().map(|p| vec![p.n as f64, p.coherence]).collect();
    Ok((Outcome { report, lines, ok }, Table { header: vec!["n", "coherence"], rows }))
}

fn load_family(path: &Path) -> Result<HistoryFamily, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    // serde_json errors already end in "at line L column C"
    let spec: FamilySpec =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    spec.build().map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn histories(cli: &Cli, family: Option<&Path>, mode: Mode) -> Result<Outcome, Failure> {
    let fam = match family {
        Some(p) => load_family(p)?,
        None => sigma_x_then_z_family(),
    };
    let probs = family_probabilities(&fam)?;
    let prob_sum: f64 = probs.iter().map(|p| p.1).sum();
    let cons = consistency_matrix(&fam, mode.into())?;
    let ok = (prob_sum - 1.0).abs() < cli.tol;
    let consistent = cons.consistent(cli.tol);
    let mut lines = vec![format!("{} histories, probability sum {prob_sum:.15}", probs.len())];
    lines.extend(probs.iter().map(|(h, p)| format!("  {:?}  {p:.12}", h.branch)));
    lines.push(format!(
        "{:?} consistency: max violation {:.3e} -> {}",
        cons.mode,
        cons.max_violation,
        if consistent { "consistent" } else { "inconsistent" }
    ));
    let report = json!({
        "n_histories": cons.n_histories,
        "prob_sum": prob_sum,
        "max_violation": cons.max_violation,
        "mode": cons.mode,
        "consistent": consistent,
        "worst_pair": cons.worst_pair,
        "probabilities": probs.iter().map(|(h, p)| json!({ "branch": h.branch, "probability": p })).collect::<Vec<_>>(),
    });
    Ok(Outcome { report, lines, ok })
}

fn nosignal(cli: &Cli, exec: Exec) -> Result<Outcome, Failure> {
    let states = cli.samples.unwrap_or(100) as usize;
    let s = random_sweep(cli.seed, states, exec)?;
    let ok = s.max_path_discrepancy < cli.tol && s.max_choice_discrepancy < cli.tol;
    let lines = vec![
        format!("{states} random bipartite states"),
        format!("max |marginal(O_A) - marginal(O_A')| = {:.3e}", s.max_choice_discrepancy),
        format!("max |reduced trace - joint sum|       = {:.3e}", s.max_path_discrepancy),
    ];
    Ok(Outcome { report: json!(s), lines, ok })
}

fn verify(cli: &Cli, exec: Exec) -> Result<Outcome, Failure> {
    let r = verify_all(cli.seed, exec)?;
    let lines = r
        .criteria
        .iter()
        .map(|c| format!("{:>2} {:<16} {}", c.id, c.name, if c.pass { "PASS" } else { "FAIL" }))
        .collect();
    Ok(Outcome { report: report::to_value(&r), lines, ok: r.all_pass })
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        return Err(Failure::Usage(format!("--tol must be positive, got {}", cli.tol)));
    }
    let exec = Exec::default();
    let (outcome, table) = match &cli.command {
        Command::Chsh { optimize } => {
            let (o, t) = chsh(cli, *optimize)?;
            (o, Some(t))
        }
        Command::Lhv => (lhv(cli, exec)?, None),
        Command::Ghz => (ghz(cli)?, None),
        Command::Allornothing { n, phi } => {
            let (o, t) = allornothing(cli, exec, *n, *phi)?;
            (o, Some(t))
        }
        Command::Hardy => {
            let (o, t) = hardy(cli)?;
            (o, Some(t))
        }
        Command::Bks => (bks(cli)?, None),
        Command::Decoherence { g, photons } => {
            let (o, t) = decoherence(cli, *g, *photons)?;
            (o, Some(t))
        }
        Command::Histories { family, mode } => (histories(cli, family.as_deref(), *mode)?, None),
        Command::Nosignal => (nosignal(cli, exec)?, None),
        Command::VerifyAll => (verify(cli, exec)?, None),
    };
    if let Some(path) = &cli.csv {
        match table {
            Some(t) => write_csv(path, &t)?,
            None => return Err(Failure::Usage("this subcommand has no CSV output".into())),
        }
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let mut out = std::io::stdout().lock();
            let text = if cli.json {
                report::to_json(&outcome.report)
            } else {
                let mut s = outcome.lines.join("\n");
                s.push('\n');
                if !outcome.ok {
                    s.push_str("invariant check FAILED\n");
                }
                s
            };
            // a closed pipe is not worth a panic
            let _ = out.write_all(text.as_bytes());
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
