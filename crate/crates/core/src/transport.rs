//! Transport costs on a finite ground space and between configurations:
//! exact optimal transport, assignment, partial assignment, the Marton cost
//! and weak (conditional-cost) transport.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{check_len, input, Error, Result};
use crate::ground::{ext_mul, AlphaFamily};
use crate::measures::DiscreteMeasure;
use crate::solver::{self, hungarian, mincost, ConvexProgram, Equality, SolverOptions, Term};

/// Tolerance on the mass mismatch above which two measures admit no coupling.
pub const MASS_TOL: f64 = 1e-9;

/// Transport plan with cached marginals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling {
    matrix: Vec<Vec<f64>>,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
}

impl Coupling {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let cols = matrix.first().map_or(0, |r| r.len());
        if matrix.iter().any(|r| r.len() != cols) {
            return input("coupling rows must have equal length");
        }
        if matrix.iter().flatten().any(|v| !(*v >= 0.0)) {
            return input("coupling entries must be nonnegative");
        }
        let row_sums = matrix.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..cols).map(|j| matrix.iter().map(|r| r[j]).sum()).collect();
        Ok(Self {
            matrix,
            row_sums,
            col_sums,
        })
    }

    /// The coupling of two measures without a common mass.
    pub fn empty() -> Self {
        Self {
            matrix: Vec::new(),
            row_sums: Vec::new(),
            col_sums: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    /// Largest deviation of the marginals from `(a, b)`.
    pub fn marginal_error(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = self.row_sums.iter().zip(a).map(|(x, y)| (x - y).abs());
        let c = self.col_sums.iter().zip(b).map(|(x, y)| (x - y).abs());
        r.chain(c).fold(0.0, f64::max)
    }

    /// `source,target,mass` rows for every positive entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source,target,mass\n");
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v > 0.0 {
                    let _ = writeln!(out, "{i},{j},{v}");
                }
            }
        }
        out
    }
}

/// Conditional laws `p_x` of a weak transport plan, one row per source point
/// with positive mass; rows are indexed by `targets`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakKernel {
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl WeakKernel {
    /// `source,target,probability` rows for every positive entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source,target,probability\n");
        for (x, row) in self.sources.iter().zip(&self.rows) {
            for (y, p) in self.targets.iter().zip(row) {
                if *p > 0.0 {
                    let _ = writeln!(out, "{x},{y},{p}");
                }
            }
        }
        out
    }

    /// `Σ_x weight(x) p_x`, the target marginal implied by the kernel.
    pub fn push_forward(&self, source_weights: &[f64], universe: usize) -> Vec<f64> {
        let mut out = vec![0.0; universe];
        for (x, row) in self.sources.iter().zip(&self.rows) {
            for (y, p) in self.targets.iter().zip(row) {
                out[*y] += source_weights[*x] * p;
            }
        }
        out
    }
}

/// Cost matrix as CSV with a `source,target,cost` header.
pub fn matrix_to_csv(matrix: &[Vec<f64>]) -> String {
    let mut out = String::from("source,target,cost\n");
    for (i, row) in matrix.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let _ = writeln!(out, "{i},{j},{v}");
        }
    }
    out
}

fn check_square(cost: &[Vec<f64>], k: usize) -> Result<()> {
    check_len(k, cost.len())?;
    for row in cost {
        check_len(k, row.len())?;
    }
    if cost.iter().flatten().any(|c| !(*c >= 0.0)) {
        return input("costs must be nonnegative");
    }
    Ok(())
}

/// Exact optimal transport `inf Σ c(x,y) π(x,y)` over couplings of two
/// finite measures of equal mass. Mass mismatch gives `+∞` and an empty
/// coupling; `+∞` cost cells are never used.
pub fn ot_lp(cost: &[Vec<f64>], nu1: &DiscreteMeasure, nu2: &DiscreteMeasure) -> Result<(f64, Coupling)> {
    check_len(nu1.len(), nu2.len())?;
    check_square(cost, nu1.len())?;
    let (a, b) = (nu1.weights(), nu2.weights());
    if (nu1.total() - nu2.total()).abs() > MASS_TOL {
        return Ok((f64::INFINITY, Coupling::empty()));
    }
    let plan = mincost::transport(a, b, cost);
    if !plan.value.is_finite() {
        return Ok((f64::INFINITY, Coupling::empty()));
    }
    Ok((plan.value, Coupling::new(plan.flow)?))
}

/// Optimal matching of two equally sized point lists. Returns the value and
/// the lexicographically smallest optimal permutation (`xi[i] ↦ chi[σ(i)]`);
/// unequal sizes give `+∞` and an empty permutation.
pub fn assignment_cost<P>(cost: impl Fn(&P, &P) -> f64, xi: &[P], chi: &[P]) -> (f64, Vec<usize>) {
    if xi.len() != chi.len() {
        return (f64::INFINITY, Vec::new());
    }
    if xi.is_empty() {
        return (0.0, Vec::new());
    }
    let matrix: Vec<Vec<f64>> = xi.iter().map(|a| chi.iter().map(|b| cost(a, b)).collect()).collect();
    hungarian::assign_lexicographic(&matrix)
}

/// Assignment value without tie-breaking; used in inner loops.
pub fn assignment_value<P>(cost: impl Fn(&P, &P) -> f64, xi: &[P], chi: &[P]) -> f64 {
    if xi.len() != chi.len() {
        return f64::INFINITY;
    }
    if xi.is_empty() {
        return 0.0;
    }
    let matrix: Vec<Vec<f64>> = xi.iter().map(|a| chi.iter().map(|b| cost(a, b)).collect()).collect();
    hungarian::assign(&matrix).0
}

/// Cheapest matching of the smaller list into a sub-list of the larger one.
pub fn partial_assignment_cost<P>(cost: impl Fn(&P, &P) -> f64, xi: &[P], chi: &[P]) -> f64 {
    if xi.is_empty() || chi.is_empty() {
        return 0.0;
    }
    let matrix: Vec<Vec<f64>> = xi.iter().map(|a| chi.iter().map(|b| cost(a, b)).collect()).collect();
    hungarian::assign(&matrix).0
}

/// `Σ_x [1 - ν₁(x)/ν₂(x)]_+² ν₂(x)`; `ν₂`-null points contribute nothing.
pub fn marton_cost(nu1: &DiscreteMeasure, nu2: &DiscreteMeasure) -> Result<f64> {
    if !nu1.is_probability() || !nu2.is_probability() {
        return input("marton cost expects probability measures");
    }
    check_len(nu1.len(), nu2.len())?;
    Ok(nu1
        .weights()
        .iter()
        .zip(nu2.weights())
        .filter(|(_, &b)| b > 0.0)
        .map(|(&a, &b)| {
            let u = (1.0 - a / b).max(0.0);
            u * u * b
        })
        .sum())
}

/// Result of a weak transport solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakTransport {
    pub value: f64,
    pub kernel: WeakKernel,
    /// Certified suboptimality bound of `value`.
    pub gap: f64,
    /// Largest marginal constraint violation of the returned plan.
    pub residual: f64,
}

/// `inf Σ_x ν₁(x) α(Σ_y ρ(x,y) p_x(y))` over kernels with `Σ_x ν₁(x) p_x = ν₂`.
pub fn weak_transport(
    alpha: &AlphaFamily,
    rho: &[Vec<f64>],
    nu1: &DiscreteMeasure,
    nu2: &DiscreteMeasure,
) -> Result<WeakTransport> {
    weak_transport_with(alpha, rho, nu1, nu2, &SolverOptions::default())
}

pub fn weak_transport_with(
    alpha: &AlphaFamily,
    rho: &[Vec<f64>],
    nu1: &DiscreteMeasure,
    nu2: &DiscreteMeasure,
    options: &SolverOptions,
) -> Result<WeakTransport> {
    alpha.validate()?;
    if !nu1.is_probability() || !nu2.is_probability() {
        return input("weak transport expects probability measures");
    }
    check_len(nu1.len(), nu2.len())?;
    check_square(rho, nu1.len())?;
    if rho.iter().flatten().any(|v| !v.is_finite()) {
        return input("weak transport needs a finite cost");
    }
    let a = nu1.weights();
    let b = nu2.weights();
    let sources = nu1.support();
    let targets = nu2.support();
    let weight_rows: Vec<f64> = sources.iter().map(|&x| a[x]).collect();
    let weight_cols: Vec<f64> = targets.iter().map(|&y| b[y]).collect();
    let cost: Vec<Vec<f64>> = sources
        .iter()
        .map(|&x| targets.iter().map(|&y| rho[x][y]).collect())
        .collect();

    let diagonal_free = (0..a.len()).all(|i| rho[i][i] == 0.0);
    if diagonal_free && a == b {
        let rows = sources
            .iter()
            .map(|&x| targets.iter().map(|&y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        return Ok(WeakTransport {
            value: 0.0,
            kernel: WeakKernel { sources, targets, rows },
            gap: 0.0,
            residual: 0.0,
        });
    }
    let sol = solve_weak_program(alpha, &weight_rows, &weight_cols, &cost, options)?;
    let rows = sol
        .plan
        .iter()
        .zip(&weight_rows)
        .map(|(row, w)| row.iter().map(|p| p / w).collect())
        .collect();
    Ok(WeakTransport {
        value: sol.value,
        kernel: WeakKernel { sources, targets, rows },
        gap: sol.gap,
        residual: sol.residual,
    })
}

/// Plan and certificate of a weak transport program over dense supports.
#[derive(Debug, Clone)]
pub(crate) struct WeakSolution {
    /// Coupling `π(i, j)` (row masses, not conditional laws).
    pub plan: Vec<Vec<f64>>,
    pub value: f64,
    pub gap: f64,
    pub residual: f64,
}

/// One conditional cost `weight · α(Σ_j coeff_j π(row, j))` attached to a row.
#[derive(Debug, Clone)]
pub(crate) struct RowTerm {
    pub row: usize,
    pub weight: f64,
    /// Coefficients over the columns of the row.
    pub coeffs: Vec<f64>,
}

/// Minimizes `Σ_terms w α(Σ_j c_j π(row, j)) + Σ lin π` over couplings of
/// `rows` and `cols` (both with positive entries and equal totals).
pub(crate) fn solve_coupling_program(
    alpha: &AlphaFamily,
    rows: &[f64],
    cols: &[f64],
    terms: &[RowTerm],
    linear: Option<&[Vec<f64>]>,
    options: &SolverOptions,
) -> Result<WeakSolution> {
    let (n, m) = (rows.len(), cols.len());
    let var = |i: usize, j: usize| i * m + j;
    let product: Vec<Vec<f64>> = rows.iter().map(|r| cols.iter().map(|c| r * c).collect()).collect();
    let evaluate = |plan: &[Vec<f64>]| -> f64 {
        let mut v = 0.0;
        for t in terms {
            let u: f64 = t.coeffs.iter().zip(&plan[t.row]).map(|(c, p)| c * p).sum();
            v += ext_mul(t.weight, alpha.value(u));
        }
        if let Some(lin) = linear {
            for i in 0..n {
                for j in 0..m {
                    v += lin[i][j] * plan[i][j];
                }
            }
        }
        v
    };
    if n == 1 || m == 1 {
        // Only one coupling exists.
        let value = evaluate(&product);
        return Ok(WeakSolution {
            plan: product,
            value,
            gap: 0.0,
            residual: 0.0,
        });
    }
    let mut program = ConvexProgram::new(n * m);
    if let Some(lin) = linear {
        for i in 0..n {
            for j in 0..m {
                program.linear[var(i, j)] = lin[i][j];
            }
        }
    }
    for t in terms {
        if t.weight == 0.0 {
            continue;
        }
        let first = t.coeffs[0];
        let scale = t.coeffs.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        if t.coeffs.iter().all(|c| (c - first).abs() <= 1e-14 * (1.0 + scale)) {
            // Row mass is fixed, so the argument is constant on the feasible set.
            program.constant += ext_mul(t.weight, alpha.value(first * rows[t.row]));
            continue;
        }
        program.terms.push(Term {
            weight: t.weight,
            offset: 0.0,
            coeffs: t.coeffs.iter().enumerate().map(|(j, &c)| (var(t.row, j), c)).collect(),
        });
    }
    for (i, &r) in rows.iter().enumerate() {
        program.equalities.push(Equality {
            coeffs: (0..m).map(|j| (var(i, j), 1.0)).collect(),
            rhs: r,
        });
    }
    for (j, &c) in cols.iter().enumerate().take(m - 1) {
        program.equalities.push(Equality {
            coeffs: (0..n).map(|i| (var(i, j), 1.0)).collect(),
            rhs: c,
        });
    }
    let start: Vec<f64> = product.iter().flatten().copied().collect();
    let sol = solver::minimize(&program, alpha, &start, options)?;
    let plan: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|j| sol.z[var(i, j)].max(0.0)).collect()).collect();
    let residual = marginal_residual(&plan, rows, cols);
    if residual > 1e-8 {
        return Err(Error::Solver {
            message: format!("marginal residual {residual:e} exceeds 1e-8"),
            best_value: sol.value,
            residual,
        });
    }
    Ok(WeakSolution {
        value: evaluate(&plan),
        plan,
        gap: sol.gap,
        residual,
    })
}

fn marginal_residual(plan: &[Vec<f64>], rows: &[f64], cols: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (row, r) in plan.iter().zip(rows) {
        worst = worst.max((row.iter().sum::<f64>() - r).abs());
    }
    for (j, c) in cols.iter().enumerate() {
        worst = worst.max((plan.iter().map(|row| row[j]).sum::<f64>() - c).abs());
    }
    worst
}

fn solve_weak_program(
    alpha: &AlphaFamily,
    rows: &[f64],
    cols: &[f64],
    cost: &[Vec<f64>],
    options: &SolverOptions,
) -> Result<WeakSolution> {
    let terms: Vec<RowTerm> = rows
        .iter()
        .enumerate()
        .map(|(i, &w)| RowTerm {
            row: i,
            weight: w,
            coeffs: cost[i].iter().map(|c| c / w).collect(),
        })
        .collect();
    solve_coupling_program(alpha, rows, cols, &terms, None, options)
}

/// `Σ_x ν₁(x) α(Σ_y ρ(x,y) p_x(y))` for a given kernel (no optimization).
pub fn weak_cost_of_kernel(alpha: &AlphaFamily, rho: &[Vec<f64>], nu1: &DiscreteMeasure, kernel: &WeakKernel) -> f64 {
    let a = nu1.weights();
    let mut total = 0.0;
    for (x, row) in kernel.sources.iter().zip(&kernel.rows) {
        let u: f64 = kernel.targets.iter().zip(row).map(|(y, p)| rho[*x][*y] * p).sum();
        total += ext_mul(a[*x], alpha.value(u));
    }
    total
}
