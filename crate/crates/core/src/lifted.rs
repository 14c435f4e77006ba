//! Transport costs between laws of point processes on an enumerated
//! configuration space.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::{Counts, PointMeasure};
use crate::error::{input, Result};
use crate::ground::{ext_mul, AlphaFamily};
use crate::processes::ProcessLaw;
use crate::solver::{mincost, SolverOptions};
use crate::transport::{assignment_value, partial_assignment_cost, solve_coupling_program, RowTerm, WeakKernel};

/// Which process-level cost to compute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LiftedCostSpec {
    /// `𝕋_ρ`: expected optimal matching cost under the best coupling.
    Linear { rho: Vec<Vec<f64>> },
    /// Weak cost with `[1 - χ(x)/ξ(x)]_+` inside `α`.
    WeakHamming { alpha: AlphaFamily },
    /// Weak cost with the partial matching cost `T_{ρ,0}(χ, ξ(x)δ_x)/ξ(x)` inside `α`.
    WeakGeneral { alpha: AlphaFamily, rho: Vec<Vec<f64>> },
}

impl LiftedCostSpec {
    pub fn validate(&self, k: usize) -> Result<()> {
        let check_rho = |rho: &Vec<Vec<f64>>| -> Result<()> {
            if rho.len() != k || rho.iter().any(|r| r.len() != k) {
                return input(format!("ground cost must be a {k}x{k} matrix"));
            }
            if rho.iter().flatten().any(|v| !(*v >= 0.0)) {
                return input("ground cost entries must be nonnegative");
            }
            Ok(())
        };
        match self {
            LiftedCostSpec::Linear { rho } => check_rho(rho),
            LiftedCostSpec::WeakHamming { alpha } => alpha.validate(),
            LiftedCostSpec::WeakGeneral { alpha, rho } => {
                alpha.validate()?;
                check_rho(rho)
            }
        }
    }
}

/// Optimal coupling of two process laws, indexed by configuration indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftedPlan {
    pub value: f64,
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    /// `mass[a][b]` couples `sources[a]` with `targets[b]`; empty when `value = ∞`.
    pub mass: Vec<Vec<f64>>,
    /// Sum of the truncation tail bounds of the inputs.
    pub tail_bound: f64,
}

impl LiftedPlan {
    /// `source,target,mass` over configuration indices, nonzero cells only.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source,target,mass\n");
        for (a, row) in self.mass.iter().enumerate() {
            for (b, &m) in row.iter().enumerate() {
                if m > 0.0 {
                    let _ = writeln!(out, "{},{},{m}", self.sources[a], self.targets[b]);
                }
            }
        }
        out
    }
}

/// Optimal weak kernel between process laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftedWeak {
    pub value: f64,
    /// Rows indexed by the support of the conditioning law.
    pub kernel: WeakKernel,
    pub gap: f64,
    pub residual: f64,
    pub tail_bound: f64,
}

fn same_space(a: &ProcessLaw, b: &ProcessLaw) -> Result<()> {
    let (x, y) = (a.index(), b.index());
    if x.k() != y.k() || x.cap() != y.cap() {
        return input("laws live on different configuration spaces");
    }
    Ok(())
}

/// `𝕋_ρ(Π₁, Π₂) = inf E[T_ρ(ξ₁, ξ₂)]` over couplings, with the matching
/// cost between configurations. Cells with different masses are excluded,
/// so laws with different mass distributions give `+∞`.
pub fn lifted_linear_cost(rho: &[Vec<f64>], pi1: &ProcessLaw, pi2: &ProcessLaw) -> Result<LiftedPlan> {
    same_space(pi1, pi2)?;
    LiftedCostSpec::Linear { rho: rho.to_vec() }.validate(pi1.index().k())?;
    let idx = pi1.index();
    let sources = pi1.support();
    let targets = pi2.support();
    let tail_bound = pi1.tail_bound() + pi2.tail_bound();
    let points: Vec<Vec<usize>> = idx.configs().iter().map(|c| c.points()).collect();
    let cost: Vec<Vec<f64>> = sources
        .iter()
        .map(|&i| {
            targets
                .iter()
                .map(|&j| assignment_value(|a: &usize, b: &usize| rho[*a][*b], &points[i], &points[j]))
                .collect()
        })
        .collect();
    let a: Vec<f64> = sources.iter().map(|&i| pi1.probabilities()[i]).collect();
    let b: Vec<f64> = targets.iter().map(|&j| pi2.probabilities()[j]).collect();
    let plan = mincost::transport(&a, &b, &cost);
    if !plan.value.is_finite() {
        return Ok(LiftedPlan {
            value: f64::INFINITY,
            sources,
            targets,
            mass: Vec::new(),
            tail_bound,
        });
    }
    Ok(LiftedPlan {
        value: plan.value,
        sources,
        targets,
        mass: plan.flow,
        tail_bound,
    })
}

/// Argument `g(ξ, χ, x)` of the weak cost before division by `ξ(x)`.
fn inner_cost(spec: &LiftedCostSpec, xi: &Counts, chi: &Counts, x: usize) -> f64 {
    match spec {
        LiftedCostSpec::WeakHamming { .. } => xi.get(x).saturating_sub(chi.get(x)) as f64,
        LiftedCostSpec::WeakGeneral { rho, .. } => {
            let copies = vec![x; xi.get(x) as usize];
            partial_assignment_cost(|a: &usize, b: &usize| rho[*a][*b], &chi.points(), &copies)
        }
        LiftedCostSpec::Linear { .. } => unreachable!("linear specs are handled by lifted_linear_cost"),
    }
}

/// `c(ξ, p) = Σ_x ξ(x) α(Σ_χ p(χ) g(ξ, χ, x) / ξ(x))` for a single kernel row.
pub fn weak_cost_row(spec: &LiftedCostSpec, xi: &Counts, row: &[(Counts, f64)]) -> Result<f64> {
    let alpha = weak_alpha(spec)?;
    let mut total = 0.0;
    for (x, m) in xi.atoms() {
        let u: f64 = row.iter().map(|(chi, p)| p * inner_cost(spec, xi, chi, x)).sum::<f64>() / m as f64;
        total += ext_mul(m as f64, alpha.value(u));
    }
    Ok(total)
}

fn weak_alpha(spec: &LiftedCostSpec) -> Result<&AlphaFamily> {
    match spec {
        LiftedCostSpec::WeakHamming { alpha } | LiftedCostSpec::WeakGeneral { alpha, .. } => Ok(alpha),
        LiftedCostSpec::Linear { .. } => input("a weak cost specification is required"),
    }
}

/// `T_c(Π₂ | Π₁) = inf Σ_ξ Π₁(ξ) c(ξ, p_ξ)` over kernels with `Σ_ξ Π₁(ξ) p_ξ = Π₂`.
pub fn lifted_weak_cost(spec: &LiftedCostSpec, pi1: &ProcessLaw, pi2: &ProcessLaw) -> Result<LiftedWeak> {
    lifted_weak_cost_with(spec, pi1, pi2, &SolverOptions::default())
}

pub fn lifted_weak_cost_with(
    spec: &LiftedCostSpec,
    pi1: &ProcessLaw,
    pi2: &ProcessLaw,
    options: &SolverOptions,
) -> Result<LiftedWeak> {
    same_space(pi1, pi2)?;
    let alpha = weak_alpha(spec)?;
    spec.validate(pi1.index().k())?;
    let idx = pi1.index();
    let sources = pi1.support();
    let targets = pi2.support();
    let tail_bound = pi1.tail_bound() + pi2.tail_bound();
    let rows: Vec<f64> = sources.iter().map(|&i| pi1.probabilities()[i]).collect();
    let cols: Vec<f64> = targets.iter().map(|&j| pi2.probabilities()[j]).collect();

    let mut terms = Vec::new();
    let mut identity_is_free = sources == targets && rows == cols && alpha.value(0.0) == 0.0;
    for (a, &i) in sources.iter().enumerate() {
        let xi = idx.config(i);
        for (x, m) in xi.atoms() {
            let g: Vec<f64> = targets.iter().map(|&j| inner_cost(spec, xi, idx.config(j), x)).collect();
            if identity_is_free && g[a] != 0.0 {
                identity_is_free = false;
            }
            terms.push(RowTerm {
                row: a,
                weight: m as f64 * rows[a],
                coeffs: g.iter().map(|v| v / (m as f64 * rows[a])).collect(),
            });
        }
    }
    if identity_is_free {
        let kernel_rows = (0..sources.len())
            .map(|a| (0..targets.len()).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
            .collect();
        return Ok(LiftedWeak {
            value: 0.0,
            kernel: WeakKernel {
                sources,
                targets,
                rows: kernel_rows,
            },
            gap: 0.0,
            residual: 0.0,
            tail_bound,
        });
    }
    let sol = solve_coupling_program(alpha, &rows, &cols, &terms, None, options)?;
    let kernel_rows = sol
        .plan
        .iter()
        .zip(&rows)
        .map(|(row, w)| row.iter().map(|p| p / w).collect())
        .collect();
    Ok(LiftedWeak {
        value: sol.value,
        kernel: WeakKernel {
            sources,
            targets,
            rows: kernel_rows,
        },
        gap: sol.gap,
        residual: sol.residual,
        tail_bound,
    })
}

/// Objective of a given kernel (rows over `kernel.targets`) without optimizing.
pub fn lifted_weak_cost_of_kernel(spec: &LiftedCostSpec, pi1: &ProcessLaw, kernel: &WeakKernel) -> Result<f64> {
    let idx = pi1.index();
    let mut total = 0.0;
    for (&i, row) in kernel.sources.iter().zip(&kernel.rows) {
        let entries: Vec<(Counts, f64)> = kernel
            .targets
            .iter()
            .zip(row)
            .map(|(&j, &p)| (idx.config(j).clone(), p))
            .collect();
        total += ext_mul(pi1.probabilities()[i], weak_cost_row(spec, idx.config(i), &entries)?);
    }
    Ok(total)
}
