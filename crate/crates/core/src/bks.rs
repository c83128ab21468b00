//! Spin-1 squared components and the two-spin 3×3 operator square.

use serde::Serialize;

use crate::error::Result;
use crate::linalg::{eig_hermitian, pauli, LinOp, C64};

const ALGEBRA_TOL: f64 = 1e-12;

/// Spin-1 matrices `(Sx, Sy, Sz)` in the basis `(|-1>, |0>, |+1>)`, `ħ = 1`.
pub fn spin1_matrices() -> (LinOp, LinOp, LinOp) {
    let m = [-1.0f64, 0.0, 1.0];
    let mut up = LinOp::zeros(3);
    for (j, &mj) in m.iter().enumerate().take(2) {
        // S+|m> = √(s(s+1) - m(m+1)) |m+1>
        up[(j + 1, j)] = C64::new((2.0 - mj * (mj + 1.0)).sqrt(), 0.0);
    }
    let down = up.adjoint();
    let sx = (&up + &down).scale(C64::new(0.5, 0.0));
    let sy = (&up - &down).scale(C64::new(0.0, -0.5));
    let sz = LinOp::diagonal(&m.map(|x| C64::new(x, 0.0)));
    (sx, sy, sz)
}

#[derive(Clone, Debug, Serialize)]
pub struct Spin1Report {
    /// `‖[Sx², Sy²]‖, ‖[Sy², Sz²]‖, ‖[Sz², Sx²]‖` (max entry).
    pub commutators: [f64; 3],
    /// `max |Sx² + Sy² + Sz² - 2I|`.
    pub sum_residual: f64,
    pub eigenvalues: [Vec<f64>; 3],
    pub holds: bool,
}

pub fn spin1_squares() -> Result<(LinOp, LinOp, LinOp, Spin1Report)> {
    let (sx, sy, sz) = spin1_matrices();
    let sq = [&sx * &sx, &sy * &sy, &sz * &sz];
    let commutators = [
        sq[0].commutator(&sq[1]).max_abs_diff(&LinOp::zeros(3)),
        sq[1].commutator(&sq[2]).max_abs_diff(&LinOp::zeros(3)),
        sq[2].commutator(&sq[0]).max_abs_diff(&LinOp::zeros(3)),
    ];
    let total = &(&sq[0] + &sq[1]) + &sq[2];
    let sum_residual = total.max_abs_diff(&LinOp::identity(3).scale(C64::new(2.0, 0.0)));
    let eig = |m: &LinOp| eig_hermitian(m).map(|e| e.values);
    let eigenvalues = [eig(&sq[0])?, eig(&sq[1])?, eig(&sq[2])?];
    let spectrum_ok = eigenvalues.iter().all(|v| {
        v.len() == 3 && v[0].abs() < ALGEBRA_TOL && (v[1] - 1.0).abs() < ALGEBRA_TOL && (v[2] - 1.0).abs() < ALGEBRA_TOL
    });
    let holds = commutators.iter().all(|&c| c < ALGEBRA_TOL) && sum_residual < ALGEBRA_TOL && spectrum_ok;
    let [a, b, c] = sq;
    Ok((
        a,
        b,
        c,
        Spin1Report {
            commutators,
            sum_residual,
            eigenvalues,
            holds,
        },
    ))
}

/// Nine two-spin observables with the expected product sign of each row and column.
#[derive(Clone, Debug)]
pub struct OperatorSquare {
    pub grid: [[LinOp; 3]; 3],
    pub labels: [[&'static str; 3]; 3],
    pub row_signs: [i8; 3],
    pub col_signs: [i8; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct SquareReport {
    /// `max |row product - sign·I|` for each row.
    pub row_residuals: [f64; 3],
    pub col_residuals: [f64; 3],
    /// Largest commutator entry among operators sharing a row or column.
    pub max_commutator: f64,
    /// `max |A² - I|` over the grid.
    pub max_square_residual: f64,
    pub holds: bool,
}

/// Rows `(σx¹, σx², σx¹σx²)`, `(σy², σy¹, σy¹σy²)`, `(σx¹σy², σy¹σx², σz¹σz²)`.
pub fn mermin_square() -> OperatorSquare {
    let id = LinOp::identity(2);
    let one = |s: &LinOp| s.kron(&id).expect("4-dim");
    let two = |s: &LinOp| id.kron(s).expect("4-dim");
    let both = |a: &LinOp, b: &LinOp| a.kron(b).expect("4-dim");
    let (x, y, z) = (pauli::x(), pauli::y(), pauli::z());
    OperatorSquare {
        grid: [
            [one(&x), two(&x), both(&x, &x)],
            [two(&y), one(&y), both(&y, &y)],
            [both(&x, &y), both(&y, &x), both(&z, &z)],
        ],
        labels: [
            ["x1", "x2", "x1x2"],
            ["y2", "y1", "y1y2"],
            ["x1y2", "y1x2", "z1z2"],
        ],
        row_signs: [1, 1, 1],
        col_signs: [1, 1, -1],
    }
}

impl OperatorSquare {
    pub fn check(&self) -> SquareReport {
        let id = LinOp::identity(4);
        let signed = |s: i8| id.scale(C64::new(s as f64, 0.0));
        let product = |ops: [&LinOp; 3]| &(ops[0] * ops[1]) * ops[2];
        let mut row_residuals = [0.0; 3];
        let mut col_residuals = [0.0; 3];
        let mut max_commutator = 0.0f64;
        let zero = LinOp::zeros(4);
        for k in 0..3 {
            let row = [&self.grid[k][0], &self.grid[k][1], &self.grid[k][2]];
            let col = [&self.grid[0][k], &self.grid[1][k], &self.grid[2][k]];
            row_residuals[k] = product(row).max_abs_diff(&signed(self.row_signs[k]));
            col_residuals[k] = product(col).max_abs_diff(&signed(self.col_signs[k]));
            for line in [row, col] {
                for i in 0..3 {
                    for j in i + 1..3 {
                        max_commutator = max_commutator.max(line[i].commutator(line[j]).max_abs_diff(&zero));
                    }
                }
            }
        }
        let max_square_residual = self
            .grid
            .iter()
            .flatten()
            .map(|a| (a * a).max_abs_diff(&id))
            .fold(0.0, f64::max);
        let holds = row_residuals.iter().chain(&col_residuals).all(|&r| r < ALGEBRA_TOL)
            && max_commutator < ALGEBRA_TOL
            && max_square_residual < ALGEBRA_TOL;
        SquareReport {
            row_residuals,
            col_residuals,
            max_commutator,
            max_square_residual,
            holds,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ColoringReport {
    pub row_signs: [i8; 3],
    pub col_signs: [i8; 3],
    pub assignments_examined: usize,
    pub solutions: usize,
    /// `Π row signs` and `Π column signs`; both equal the product of all nine
    /// entries, so a solution needs them to agree.
    pub parity_rows: i8,
    pub parity_cols: i8,
    pub parity_forbids: bool,
}

/// Exhausts all `2⁹` assignments of `±1` to the grid.
pub fn coloring_search(row_signs: [i8; 3], col_signs: [i8; 3]) -> ColoringReport {
    let mut solutions = 0;
    for bits in 0u32..512 {
        let v = |r: usize, c: usize| if bits >> (3 * r + c) & 1 == 0 { 1i8 } else { -1 };
        let rows_ok = (0..3).all(|r| v(r, 0) * v(r, 1) * v(r, 2) == row_signs[r]);
        let cols_ok = (0..3).all(|c| v(0, c) * v(1, c) * v(2, c) == col_signs[c]);
        if rows_ok && cols_ok {
            solutions += 1;
        }
    }
    let parity_rows = row_signs.iter().product();
    let parity_cols = col_signs.iter().product();
    let parity_forbids = parity_rows != parity_cols;
    if parity_forbids {
        assert_eq!(solutions, 0, "parity argument contradicted by enumeration");
    }
    ColoringReport {
        row_signs,
        col_signs,
        assignments_examined: 512,
        solutions,
        parity_rows,
        parity_cols,
        parity_forbids,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WignerCount {
    /// `4⁴`: one outcome pair per setting pair, chosen independently.
    pub unrestricted: usize,
    /// `(2²)² = 2⁴`: categories labelled by `(A, A', B, B')`.
    pub local: usize,
    /// Outcome-pair tables consistent with a single `(A, A', B, B')`, counted.
    pub enumerated: usize,
}

/// Counts categories for two settings per side by enumerating all `4⁴` tables
/// of outcome pairs for `(a,b), (a,b'), (a',b), (a',b')` and keeping those where
/// each particle's result does not depend on the remote setting.
pub fn wigner_category_count() -> WignerCount {
    let mut enumerated = 0;
    for t in 0u32..256 {
        // entry k holds (result of particle 1, result of particle 2) for setting pair k
        let pair = |k: u32| ((t >> (2 * k)) & 1, (t >> (2 * k + 1)) & 1);
        let (ab, abp, apb, apbp) = (pair(0), pair(1), pair(2), pair(3));
        let local = ab.0 == abp.0 && apb.0 == apbp.0 && ab.1 == apb.1 && abp.1 == apbp.1;
        if local {
            enumerated += 1;
        }
    }
    WignerCount {
        unrestricted: 4usize.pow(4),
        local: (2usize * 2).pow(2),
        enumerated,
    }
}
