//! Log-barrier Newton method for composite convex programs
//!
//! ```text
//! minimize   constant + cᵀz + Σ_j w_j α(o_j + a_jᵀz)
//! subject to A z = b,  z ≥ 0
//! ```
//!
//! with `α` convex and nondecreasing. Every weak transport cost in the crate
//! is an instance: `z` is a coupling or kernel, the terms are the per-row
//! conditional costs and the equalities are marginal constraints.
//!
//! The method minimizes `t·f(z) - Σ log z_i` by equality-constrained Newton
//! steps in the affine-scaled variables `z = Z·z̃`, increasing `t` until the
//! barrier gap `n/t` is below tolerance. Piecewise-linear `α` is first
//! rewritten as a linear program through its epigraph.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ground::AlphaFamily;

/// One term `weight · α(offset + Σ coeff·z_index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub weight: f64,
    pub offset: f64,
    pub coeffs: Vec<(usize, f64)>,
}

impl Term {
    fn argument(&self, z: &[f64]) -> f64 {
        self.offset + self.coeffs.iter().map(|&(i, a)| a * z[i]).sum::<f64>()
    }
}

/// A sparse linear equality `Σ coeff·z_index = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equality {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvexProgram {
    pub num_vars: usize,
    pub constant: f64,
    pub linear: Vec<f64>,
    pub terms: Vec<Term>,
    pub equalities: Vec<Equality>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target barrier gap `n/t`.
    pub gap_tol: f64,
    /// Largest gap accepted if centering stalls before reaching `gap_tol`.
    pub accept_gap: f64,
    pub max_newton_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-9,
            accept_gap: 1e-6,
            max_newton_steps: 3000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub z: Vec<f64>,
    /// Objective at `z`; an upper bound on the optimum up to `residual`.
    pub value: f64,
    /// Certified suboptimality bound from the barrier path.
    pub gap: f64,
    /// `max |Az - b|`.
    pub residual: f64,
    pub newton_steps: usize,
}

impl ConvexProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            linear: vec![0.0; num_vars],
            ..Default::default()
        }
    }

    pub fn objective(&self, alpha: &AlphaFamily, z: &[f64]) -> f64 {
        let mut f = self.constant + self.linear.iter().zip(z).map(|(c, x)| c * x).sum::<f64>();
        for term in &self.terms {
            if term.weight != 0.0 {
                let v = alpha.value(term.argument(z));
                if !v.is_finite() {
                    return f64::INFINITY;
                }
                f += term.weight * v;
            }
        }
        f
    }

    pub fn residual(&self, z: &[f64]) -> f64 {
        self.equalities
            .iter()
            .map(|e| (e.coeffs.iter().map(|&(i, a)| a * z[i]).sum::<f64>() - e.rhs).abs())
            .fold(0.0, f64::max)
    }
}

/// Minimizes the program from a strictly positive `start`.
pub fn minimize(
    program: &ConvexProgram,
    alpha: &AlphaFamily,
    start: &[f64],
    options: &SolverOptions,
) -> Result<Solution> {
    if start.len() != program.num_vars {
        return Err(Error::LengthMismatch {
            expected: program.num_vars,
            got: start.len(),
        });
    }
    if start.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Input("barrier start must be strictly positive".into()));
    }
    let constant_objective = program.terms.iter().all(|t| t.weight == 0.0) && program.linear.iter().all(|c| *c == 0.0);
    if program.num_vars == 0 || (constant_objective && program.residual(start) <= 1e-12) {
        // Every feasible point is optimal; the barrier path would only drift.
        return Ok(Solution {
            z: start.to_vec(),
            value: program.constant,
            gap: 0.0,
            residual: program.residual(start),
            newton_steps: 0,
        });
    }
    if let AlphaFamily::CustomConvex(p) = alpha {
        let (lp, lp_start) = epigraph_program(program, &p.knots, &p.values, start)?;
        let sol = newton_path(&lp, &AlphaFamily::Square, &lp_start, options)?;
        let z = sol.z[..program.num_vars].to_vec();
        return Ok(Solution {
            value: program.objective(alpha, &z),
            residual: program.residual(&z),
            z,
            ..sol
        });
    }
    newton_path(program, alpha, start, options)
}

/// Rewrites `Σ w α(u_j)` for piecewise-linear `α` as `Σ w s_j` with
/// `s_j ≥ slope_i u_j + intercept_i` and `u_j ≤ last knot`, using slack
/// variables so only equalities and nonnegativity remain.
fn epigraph_program(
    program: &ConvexProgram,
    knots: &[f64],
    values: &[f64],
    start: &[f64],
) -> Result<(ConvexProgram, Vec<f64>)> {
    let lines: Vec<(f64, f64)> = (1..knots.len())
        .map(|i| {
            let slope = (values[i] - values[i - 1]) / (knots[i] - knots[i - 1]);
            (slope, values[i - 1] - slope * knots[i - 1])
        })
        .collect();
    let last = *knots.last().expect("validated knots");
    let mut lp = ConvexProgram::new(program.num_vars);
    lp.constant = program.constant;
    lp.linear = program.linear.clone();
    lp.equalities = program.equalities.clone();
    let mut z0 = start.to_vec();
    let push_var = |lp: &mut ConvexProgram, z0: &mut Vec<f64>, cost: f64, init: f64| {
        lp.num_vars += 1;
        lp.linear.push(cost);
        z0.push(init);
        lp.num_vars - 1
    };
    for term in program.terms.iter().filter(|t| t.weight != 0.0) {
        let u0 = term.argument(start);
        if u0 >= last {
            return Err(Error::Input("starting point lies outside the domain of alpha".into()));
        }
        let s0 = lines.iter().map(|(a, b)| a * u0 + b).fold(0.0, f64::max) + 1.0;
        let s = push_var(&mut lp, &mut z0, term.weight, s0);
        for &(slope, icpt) in &lines {
            // s - slope·(o + aᵀz) - icpt - σ = 0
            let sigma = push_var(&mut lp, &mut z0, 0.0, s0 - slope * u0 - icpt);
            let mut coeffs = vec![(s, 1.0), (sigma, -1.0)];
            coeffs.extend(term.coeffs.iter().map(|&(i, a)| (i, -slope * a)));
            lp.equalities.push(Equality {
                coeffs,
                rhs: slope * term.offset + icpt,
            });
        }
        // o + aᵀz + τ = last
        let tau = push_var(&mut lp, &mut z0, 0.0, last - u0);
        let mut coeffs = vec![(tau, 1.0)];
        coeffs.extend(term.coeffs.iter().copied());
        lp.equalities.push(Equality {
            coeffs,
            rhs: last - term.offset,
        });
    }
    Ok((lp, z0))
}

struct Local {
    grad: Vec<f64>,
    hess: DMatrix<f64>,
}

fn local_model(program: &ConvexProgram, alpha: &AlphaFamily, z: &[f64]) -> Option<Local> {
    let n = program.num_vars;
    let mut grad = program.linear.clone();
    let mut hess = DMatrix::zeros(n, n);
    for term in program.terms.iter().filter(|t| t.weight != 0.0) {
        let u = term.argument(z);
        let d1 = alpha.derivative(u);
        let d2 = alpha.second_derivative(u);
        if !d1.is_finite() || !d2.is_finite() {
            return None;
        }
        for &(i, a) in &term.coeffs {
            grad[i] += term.weight * d1 * a;
        }
        let c = term.weight * d2;
        if c != 0.0 {
            for &(i, a) in &term.coeffs {
                for &(j, b) in &term.coeffs {
                    hess[(i, j)] += c * a * b;
                }
            }
        }
    }
    Some(Local { grad, hess })
}

fn barrier_value(program: &ConvexProgram, alpha: &AlphaFamily, z: &[f64], t: f64) -> f64 {
    if z.iter().any(|v| !(*v > 0.0)) {
        return f64::INFINITY;
    }
    let f = program.objective(alpha, z);
    if !f.is_finite() {
        return f64::INFINITY;
    }
    t * f - z.iter().map(|v| v.ln()).sum::<f64>()
}

fn newton_path(
    program: &ConvexProgram,
    alpha: &AlphaFamily,
    start: &[f64],
    options: &SolverOptions,
) -> Result<Solution> {
    let n = program.num_vars;
    let m = program.equalities.len();
    let mut z = start.to_vec();
    let f0 = program.objective(alpha, &z);
    if !f0.is_finite() || local_model(program, alpha, &z).is_none() {
        return Err(Error::Solver {
            message: "objective is not finite at the starting point".into(),
            best_value: f0,
            residual: program.residual(&z),
        });
    }
    let mut a_dense = DMatrix::zeros(m, n);
    for (r, e) in program.equalities.iter().enumerate() {
        for &(i, a) in &e.coeffs {
            a_dense[(r, i)] += a;
        }
    }
    let b = DVector::from_iterator(m, program.equalities.iter().map(|e| e.rhs));

    let mut t = 1.0 / (1.0 + f0.abs());
    let mu = 16.0;
    let mut steps = 0usize;
    let mut centered_gap = f64::INFINITY;
    // Dual estimate for the equalities; the Newton system is solved for its
    // correction so the right-hand side stays small near the central path.
    let mut nu = DVector::zeros(m);
    let mut last_centered = z.clone();
    loop {
        match center(program, alpha, &a_dense, &b, &mut z, &mut nu, t, options.max_newton_steps, &mut steps) {
            Ok(()) => {
                centered_gap = n as f64 / t;
                last_centered.clone_from(&z);
            }
            Err(()) => {
                z = last_centered;
                break;
            }
        }
        if centered_gap <= options.gap_tol {
            break;
        }
        t *= mu;
        nu *= mu;
    }
    let value = program.objective(alpha, &z);
    let residual = program.residual(&z);
    if centered_gap > options.accept_gap || !value.is_finite() {
        return Err(Error::Solver {
            message: format!("barrier path stalled with gap {centered_gap:e} after {steps} Newton steps"),
            best_value: value,
            residual,
        });
    }
    Ok(Solution {
        z,
        value,
        gap: centered_gap,
        residual,
        newton_steps: steps,
    })
}

/// Newton centering at fixed `t`. `Err` means the step budget ran out or
/// the linear algebra broke down.
#[allow(clippy::too_many_arguments)]
fn center(
    program: &ConvexProgram,
    alpha: &AlphaFamily,
    a_dense: &DMatrix<f64>,
    b: &DVector<f64>,
    z: &mut Vec<f64>,
    nu: &mut DVector<f64>,
    t: f64,
    max_steps: usize,
    steps: &mut usize,
) -> std::result::Result<(), ()> {
    let n = program.num_vars;
    let m = a_dense.nrows();
    let mut phi = barrier_value(program, alpha, z, t);
    let feas_tol = 1e-12 * (1.0 + b.amax());
    // Decrement and residual of the last Newton step, for the fallback test
    // when round-off keeps the decrement just above its threshold.
    let mut last = (f64::INFINITY, f64::INFINITY);
    for _ in 0..200 {
        if *steps >= max_steps {
            return Err(());
        }
        *steps += 1;
        let local = local_model(program, alpha, z).ok_or(())?;
        let zv = DVector::from_column_slice(z);
        let r = a_dense * &zv - b;
        let mut scaled_a = a_dense.clone();
        for i in 0..n {
            scaled_a.column_mut(i).scale_mut(z[i]);
        }
        let mut kkt = DMatrix::zeros(n + m, n + m);
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = t * z[i] * local.hess[(i, j)] * z[j];
            }
            kkt[(i, i)] += 1.0;
        }
        kkt.view_mut((n, 0), (m, n)).copy_from(&scaled_a);
        kkt.view_mut((0, n), (n, m)).copy_from(&scaled_a.transpose());
        let g_scaled = DVector::from_iterator(n, (0..n).map(|i| t * z[i] * local.grad[i] - 1.0));
        let dual_residual = &g_scaled + scaled_a.transpose() * &*nu;
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&(-&dual_residual));
        rhs.rows_mut(n, m).copy_from(&(-&r));
        let hess_block = kkt.view((0, 0), (n, n)).into_owned();
        let sol = match kkt.clone().lu().solve(&rhs) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => {
                for rr in 0..m {
                    kkt[(n + rr, n + rr)] -= 1e-12;
                }
                match kkt.lu().solve(&rhs) {
                    Some(s) if s.iter().all(|v| v.is_finite()) => s,
                    _ => return Err(()),
                }
            }
        };
        let d = sol.rows(0, n).into_owned();
        let gd = g_scaled.dot(&d);
        let decrement = d.dot(&(&hess_block * &d));
        let res_norm = r.amax();
        if decrement / 2.0 <= 1e-10 && res_norm <= feas_tol {
            return Ok(());
        }
        last = (decrement, res_norm);
        // Largest step keeping z > 0, then backtrack on the barrier value.
        let most_negative = d.iter().fold(0.0f64, |acc, &v| acc.min(v));
        let mut step = if most_negative < 0.0 { (0.99 / -most_negative).min(1.0) } else { 1.0 };
        let slack = 1e-13 * (1.0 + phi.abs());
        let mut accepted = false;
        while step > 1e-14 {
            let trial: Vec<f64> = z.iter().zip(d.iter()).map(|(zi, di)| zi * (1.0 + step * di)).collect();
            let val = barrier_value(program, alpha, &trial, t);
            let finite_model = val.is_finite() && local_model(program, alpha, &trial).is_some();
            let sufficient = val <= phi + 0.01 * step * gd.min(0.0) + slack;
            if finite_model && sufficient {
                *z = trial;
                phi = val;
                for rr in 0..m {
                    nu[rr] += step * sol[n + rr];
                }
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No progress is possible at working precision.
            return if res_norm <= 1e3 * feas_tol { Ok(()) } else { Err(()) };
        }
    }
    if last.0 / 2.0 <= 1e-6 && last.1 <= 1e3 * feas_tol {
        Ok(())
    } else {
        Err(())
    }
}
