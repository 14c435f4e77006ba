//! Talagrand-type convex distances to sets of configurations, two-set
//! concentration experiments and deviation experiments for U-statistics.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::config::{diff_minus, Counts, Functional, Point, PointMeasure, PointSet, UStatistic};
use crate::error::{input, Error, Result};
use crate::ground::{ext_mul, AlphaFamily, EuclideanBox};
use crate::processes::{sample_poisson_box, ProcessLaw};
use crate::solver::{self, ConvexProgram, Equality, SolverOptions, Term};
use crate::stats::{median_estimate, par_draws, wilson_interval, Z95};

type Membership<C> = Arc<dyn Fn(&C) -> bool + Send + Sync>;

/// A target set `A`: explicit members, optionally with a membership
/// predicate when the members are only a finite witness list.
#[derive(Clone)]
pub struct TargetSet<C> {
    members: Vec<C>,
    predicate: Option<Membership<C>>,
}

impl<C: PointMeasure> TargetSet<C> {
    /// Finite set given by its members (duplicates removed).
    pub fn finite(members: Vec<C>) -> Result<Self> {
        let mut unique: Vec<C> = Vec::with_capacity(members.len());
        for m in members {
            if !unique.contains(&m) {
                unique.push(m);
            }
        }
        if unique.is_empty() {
            return input("target set must be nonempty");
        }
        Ok(Self {
            members: unique,
            predicate: None,
        })
    }

    /// Set given by a predicate, represented in computations by `witnesses`.
    pub fn with_predicate(witnesses: Vec<C>, predicate: impl Fn(&C) -> bool + Send + Sync + 'static) -> Result<Self> {
        if witnesses.iter().any(|w| !predicate(w)) {
            return input("every witness must satisfy the membership predicate");
        }
        let mut set = Self::finite(witnesses)?;
        set.predicate = Some(Arc::new(predicate));
        Ok(set)
    }

    pub fn members(&self) -> &[C] {
        &self.members
    }

    pub fn contains(&self, xi: &C) -> bool {
        match &self.predicate {
            Some(p) => p(xi),
            None => self.members.contains(xi),
        }
    }
}

/// `c_A(ξ)` together with the optimal mixing weights over `A`'s members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexDistance {
    pub value: f64,
    pub weights: Vec<f64>,
    pub gap: f64,
}

/// `[1 - χ(x)/ξ(x)]_+` for every atom `x` of `ξ`, per member `χ`.
fn deficits<C: PointMeasure>(xi: &C, members: &[C]) -> (Vec<(C::Point, u32)>, Vec<Vec<f64>>) {
    let atoms = xi.atoms();
    let table = members
        .iter()
        .map(|chi| {
            atoms
                .iter()
                .map(|(x, m)| (1.0 - chi.multiplicity(x) as f64 / *m as f64).max(0.0))
                .collect()
        })
        .collect();
    (atoms, table)
}

/// `c_A(ξ) = inf_w Σ_x ξ(x) α(Σ_χ w_χ [1 - χ(x)/ξ(x)]_+)` over probability
/// weights `w` on the members of `A`.
pub fn convex_distance_ca<C: PointMeasure>(xi: &C, set: &TargetSet<C>, alpha: &AlphaFamily) -> Result<ConvexDistance> {
    alpha.validate()?;
    let members = set.members();
    let (atoms, table) = deficits(xi, members);
    let objective = |w: &[f64]| -> f64 {
        atoms
            .iter()
            .enumerate()
            .map(|(a, (_, m))| {
                let u: f64 = w.iter().zip(&table).map(|(wi, row)| wi * row[a]).sum();
                ext_mul(*m as f64, alpha.value(u))
            })
            .sum()
    };
    // A dominating member gives value zero.
    if let Some(i) = table.iter().position(|row| row.iter().all(|v| *v == 0.0)) {
        let mut weights = vec![0.0; members.len()];
        weights[i] = 1.0;
        return Ok(ConvexDistance {
            value: ext_mul(xi.mass() as f64, alpha.value(0.0)).min(objective(&weights)),
            weights,
            gap: 0.0,
        });
    }
    if members.len() == 1 {
        return Ok(ConvexDistance {
            value: objective(&[1.0]),
            weights: vec![1.0],
            gap: 0.0,
        });
    }
    let n = members.len();
    let mut program = ConvexProgram::new(n);
    for (a, (_, m)) in atoms.iter().enumerate() {
        // Equal deficits across members give a constant argument.
        let first = table[0][a];
        if table.iter().all(|row| row[a] == first) {
            program.constant += ext_mul(*m as f64, alpha.value(first));
            continue;
        }
        program.terms.push(Term {
            weight: *m as f64,
            offset: 0.0,
            coeffs: (0..n).map(|i| (i, table[i][a])).collect(),
        });
    }
    program.equalities.push(Equality {
        coeffs: (0..n).map(|i| (i, 1.0)).collect(),
        rhs: 1.0,
    });
    let start = vec![1.0 / n as f64; n];
    let sol = solver::minimize(&program, alpha, &start, &SolverOptions::default())?;
    let total: f64 = sol.z.iter().map(|v| v.max(0.0)).sum();
    let weights: Vec<f64> = sol.z.iter().map(|v| v.max(0.0) / total).collect();
    Ok(ConvexDistance {
        value: objective(&weights),
        weights,
        gap: sol.gap,
    })
}

/// Value of the sup-inf defining `d_A`, bracketed by a primal-dual pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupInf {
    /// `inf_χ ∫ g d(ξ∖χ)` at the returned test function.
    pub lower: f64,
    /// `sup_g` of the averaged mixture, an upper bound on `d_A`.
    pub upper: f64,
    pub iterations: usize,
}

/// `sup_{g ≥ 0, |g|_{L²(ξ)} ≤ 1} inf_{χ ∈ A} Σ_x g(x) (ξ(x) - χ(x))_+`,
/// solved as a bilinear saddle point by mirror-prox (entropic steps on
/// the mixing weights, Euclidean steps on the test function).
pub fn sup_inf_da<C: PointMeasure>(xi: &C, set: &TargetSet<C>, rel_tol: f64, max_iter: usize) -> SupInf {
    let members = set.members();
    let atoms = xi.atoms();
    // In coordinates h(x) = √ξ(x) g(x) the constraint is the unit ball and
    // the payoff matrix is M[χ][x] = (ξ(x) - χ(x))_+ / √ξ(x).
    let m: Vec<Vec<f64>> = members
        .iter()
        .map(|chi| {
            atoms
                .iter()
                .map(|(x, k)| (*k as f64 - chi.multiplicity(x) as f64).max(0.0) / (*k as f64).sqrt())
                .collect()
        })
        .collect();
    if m.iter().any(|row| row.iter().all(|v| *v == 0.0)) || atoms.is_empty() {
        return SupInf {
            lower: 0.0,
            upper: 0.0,
            iterations: 0,
        };
    }
    let (n, d) = (members.len(), atoms.len());
    let lip = m.iter().map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let step = 0.5 / lip;
    let project = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = v.max(0.0));
        let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1.0 {
            h.iter_mut().for_each(|v| *v /= norm);
        }
    };
    let row_values = |h: &[f64]| -> Vec<f64> { m.iter().map(|row| row.iter().zip(h).map(|(a, b)| a * b).sum()).collect() };
    let col_values = |w: &[f64]| -> Vec<f64> { (0..d).map(|x| (0..n).map(|i| w[i] * m[i][x]).sum()).collect() };
    let mirror = |w: &[f64], grad: &[f64]| -> Vec<f64> {
        let shift = grad.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut out: Vec<f64> = w.iter().zip(grad).map(|(wi, gi)| wi * (-step * (gi - shift)).exp()).collect();
        let s: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= s);
        out
    };
    let mut w = vec![1.0 / n as f64; n];
    let mut h = vec![1.0 / (d as f64).sqrt(); d];
    let (mut w_avg, mut h_avg) = (vec![0.0; n], vec![0.0; d]);
    let mut count = 0.0;
    let bracket = |w_avg: &[f64], h_avg: &[f64], count: f64| -> (f64, f64) {
        let wa: Vec<f64> = w_avg.iter().map(|v| v / count).collect();
        let mut ha: Vec<f64> = h_avg.iter().map(|v| v / count).collect();
        project(&mut ha);
        let lower = row_values(&ha).into_iter().fold(f64::INFINITY, f64::min);
        let upper = col_values(&wa).iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt();
        (lower, upper)
    };
    let mut best = SupInf {
        lower: 0.0,
        upper: f64::INFINITY,
        iterations: 0,
    };
    for it in 1..=max_iter {
        // Extrapolation step.
        let w_half = mirror(&w, &row_values(&h));
        let mut h_half: Vec<f64> = h.iter().zip(col_values(&w)).map(|(a, g)| a + step * g).collect();
        project(&mut h_half);
        // Update step with gradients at the extrapolated point.
        w = mirror(&w, &row_values(&h_half));
        h = h.iter().zip(col_values(&w_half)).map(|(a, g)| a + step * g).collect();
        project(&mut h);
        for i in 0..n {
            w_avg[i] += w_half[i];
        }
        for x in 0..d {
            h_avg[x] += h_half[x];
        }
        count += 1.0;
        if it % 50 == 0 || it == max_iter {
            let (lo, up) = bracket(&w_avg, &h_avg, count);
            best.lower = best.lower.max(lo);
            best.upper = best.upper.min(up);
            best.iterations = it;
            if best.upper - best.lower <= rel_tol * best.upper {
                break;
            }
        }
    }
    best
}

/// `d_A(ξ)` with the cross-check between `√(2 c_A)` (for `α = u²/2`) and
/// the direct sup-inf.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceDa {
    pub value: f64,
    pub from_ca: f64,
    pub direct: SupInf,
}

/// Relative agreement required between the two computations of `d_A`.
pub const DA_REL_TOL: f64 = 1e-3;

pub fn convex_distance_da<C: PointMeasure>(xi: &C, set: &TargetSet<C>) -> Result<DistanceDa> {
    let ca = convex_distance_ca(xi, set, &AlphaFamily::HalfSquare)?;
    let from_ca = (2.0 * ca.value).max(0.0).sqrt();
    let direct = sup_inf_da(xi, set, 1e-5, 200_000);
    let mid = 0.5 * (direct.lower + direct.upper);
    let scale = from_ca.max(mid).max(1e-12);
    let inside = from_ca >= direct.lower * (1.0 - DA_REL_TOL) - 1e-12 && from_ca <= direct.upper * (1.0 + DA_REL_TOL) + 1e-12;
    if (from_ca - mid).abs() > DA_REL_TOL * scale && !inside {
        return Err(Error::Solver {
            message: format!(
                "d_A computations disagree: sqrt(2 c_A) = {from_ca}, sup-inf in [{}, {}]",
                direct.lower, direct.upper
            ),
            best_value: from_ca,
            residual: direct.upper - direct.lower,
        });
    }
    Ok(DistanceDa {
        value: from_ca,
        from_ca,
        direct,
    })
}

/// One row of the two-set experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSetRow {
    pub r: f64,
    pub p_a: f64,
    /// Upper bound on `P(η ∉ A_r)`: enumerated mass plus the truncation tail.
    pub p_not_ar: f64,
    /// `P(A)^{1/t} P(¬A_r)^{1/(1-t)}` against `e^{-r}`.
    pub convex_lhs: f64,
    pub convex_bound: f64,
    pub convex_violated: bool,
    pub p_not_ard: f64,
    /// `P(A) P(¬A_r^d)` against `e^{-r²/4}`.
    pub distance_lhs: f64,
    pub distance_bound: f64,
    pub distance_violated: bool,
}

/// Exact check of both two-set bounds on an enumerated law. `c_A` uses
/// `α_t`; `d_A` uses the identity with `c_A` for `u²/2` (cross-checked).
pub fn two_set_experiment(law: &ProcessLaw, set: &TargetSet<Counts>, t: f64, r_grid: &[f64]) -> Result<Vec<TwoSetRow>> {
    if !(t > 0.0 && t < 1.0) {
        return input(format!("t must lie in (0,1), got {t}"));
    }
    let alpha = AlphaFamily::Dembo(t);
    let idx = law.index();
    let masses = law.exact_masses();
    let tail = law.tail_bound();
    let mut ca = Vec::with_capacity(idx.len());
    let mut da = Vec::with_capacity(idx.len());
    let mut p_a = 0.0;
    for (i, xi) in idx.configs().iter().enumerate() {
        if masses[i] == 0.0 {
            ca.push(0.0);
            da.push(0.0);
            continue;
        }
        if set.contains(xi) {
            p_a += masses[i];
        }
        ca.push(convex_distance_ca(xi, set, &alpha)?.value);
        da.push(convex_distance_da(xi, set)?.value);
    }
    let tol = 1e-9;
    Ok(r_grid
        .iter()
        .map(|&r| {
            let outside = |d: &[f64], radius: f64| -> f64 {
                (0..idx.len()).filter(|&i| d[i] > radius + tol).map(|i| masses[i]).sum::<f64>() + tail
            };
            let p_not_ar = outside(&ca, r).min(1.0);
            let p_not_ard = outside(&da, r).min(1.0);
            let convex_lhs = p_a.powf(1.0 / t) * p_not_ar.powf(1.0 / (1.0 - t));
            let convex_bound = (-r).exp();
            let distance_lhs = p_a * p_not_ard;
            let distance_bound = (-r * r / 4.0).exp();
            TwoSetRow {
                r,
                p_a,
                p_not_ar,
                convex_lhs,
                convex_bound,
                convex_violated: convex_lhs > convex_bound * (1.0 + 1e-12),
                p_not_ard,
                distance_lhs,
                distance_bound,
                distance_violated: distance_lhs > distance_bound * (1.0 + 1e-12),
            }
        })
        .collect())
}

pub fn two_set_to_csv(rows: &[TwoSetRow]) -> String {
    let mut out = String::from("r,p_a,p_not_ar,convex_lhs,convex_bound,p_not_ard,distance_lhs,distance_bound\n");
    for w in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            w.r, w.p_a, w.p_not_ar, w.convex_lhs, w.convex_bound, w.p_not_ard, w.distance_lhs, w.distance_bound
        );
    }
    out
}

/// Which tail a deviation row refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationRow {
    pub tail: Tail,
    pub r: f64,
    /// Empirical `P(F ≥ m + r)` or `P(F < m - r)` at the estimated median.
    pub empirical: f64,
    /// Bound evaluated at the upper median confidence limit (the larger one).
    pub bound: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub samples: usize,
    pub delta: f64,
    pub beta: f64,
    pub hypothesis_holds: bool,
    pub hypothesis_failures: usize,
    /// Largest `Σ (D⁻F)² / F^β` over samples with `F > 0`.
    pub worst_ratio: f64,
    pub median: f64,
    pub median_ci: (f64, f64),
    pub rows: Vec<DeviationRow>,
    pub notes: Vec<String>,
}

impl DeviationReport {
    pub fn violated(&self) -> bool {
        self.rows.iter().any(|r| r.violated)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tail,r,empirical,bound,ci_low,ci_high\n");
        for w in &self.rows {
            let tail = match w.tail {
                Tail::Upper => "upper",
                Tail::Lower => "lower",
            };
            let _ = writeln!(out, "{tail},{},{},{},{},{}", w.r, w.empirical, w.bound, w.ci_low, w.ci_high);
        }
        out
    }
}

/// `2 exp(-r² / (4 δ (r + m)^β))`.
pub fn upper_deviation_bound(r: f64, m: f64, delta: f64, beta: f64) -> f64 {
    (2.0 * (-(r * r) / (4.0 * delta * (r + m).max(0.0).powf(beta))).exp()).min(1.0)
}

/// `2 exp(-r² / (4 δ m^β))`.
pub fn lower_deviation_bound(r: f64, m: f64, delta: f64, beta: f64) -> f64 {
    (2.0 * (-(r * r) / (4.0 * delta * m.max(0.0).powf(beta))).exp()).min(1.0)
}

/// `Σ_{x ∈ η} (D⁻_x F(η))²`, atoms counted with multiplicity.
pub fn squared_gradient<C: PointMeasure>(f: &Functional<C>, xi: &C) -> Result<f64> {
    let mut total = 0.0;
    for (x, m) in xi.atoms() {
        let d = diff_minus(f, xi, &x)?;
        total += m as f64 * d * d;
    }
    Ok(total)
}

/// Deviation experiment for a nonnegative U-statistic of a Poisson process
/// with intensity `rate · Lebesgue` on `domain`. The exponent in the bounds
/// is the `β` of the gradient hypothesis.
#[allow(clippy::too_many_arguments)]
pub fn br_experiment(
    stat: &UStatistic<Point>,
    rate: f64,
    domain: &EuclideanBox,
    delta: f64,
    beta: f64,
    r_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<DeviationReport> {
    if !(0.0..2.0).contains(&beta) {
        return input(format!("beta must lie in [0,2), got {beta}"));
    }
    if !(delta > 0.0) {
        return input("delta must be positive");
    }
    if n_samples == 0 {
        return input("at least one sample is required");
    }
    let f: Functional<PointSet> = stat.functional(true);
    let draws = par_draws(n_samples, seed, |rng, _| -> Result<(f64, f64)> {
        let xi = sample_poisson_box(rate, domain, rng)?;
        Ok((f.eval(&xi), squared_gradient(&f, &xi)?))
    });
    let draws: Vec<(f64, f64)> = draws.into_iter().collect::<Result<_>>()?;
    let mut failures = 0;
    let mut worst_ratio: f64 = 0.0;
    for &(fv, g) in &draws {
        if fv < 0.0 {
            return input("the functional must be nonnegative");
        }
        let rhs = delta * if fv == 0.0 && beta == 0.0 { 1.0 } else { fv.powf(beta) };
        if g > rhs * (1.0 + 1e-12) {
            failures += 1;
        }
        if fv > 0.0 {
            worst_ratio = worst_ratio.max(g / fv.powf(beta));
        }
    }
    let values: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let med = median_estimate(&values, Z95);
    let m_hi = med.ci_high;
    let n = values.len();
    let mut rows = Vec::new();
    let hypothesis_holds = failures == 0;
    for &r in r_grid {
        let up = values.iter().filter(|&&v| v >= med.median + r).count();
        let (lo, hi) = wilson_interval(up, n, Z95);
        let bound = upper_deviation_bound(r, m_hi, delta, beta);
        rows.push(DeviationRow {
            tail: Tail::Upper,
            r,
            empirical: up as f64 / n as f64,
            bound,
            ci_low: lo,
            ci_high: hi,
            violated: hypothesis_holds && lo > bound,
        });
        let down = values.iter().filter(|&&v| v < med.median - r).count();
        let (lo, hi) = wilson_interval(down, n, Z95);
        let bound = lower_deviation_bound(r, m_hi, delta, beta);
        rows.push(DeviationRow {
            tail: Tail::Lower,
            r,
            empirical: down as f64 / n as f64,
            bound,
            ci_low: lo,
            ci_high: hi,
            violated: hypothesis_holds && lo > bound,
        });
    }
    let mut notes = vec!["bounds use the exponent beta of the gradient hypothesis".to_string()];
    if !hypothesis_holds {
        notes.push(format!("hypothesis failed on {failures} samples; bounds not asserted"));
    }
    Ok(DeviationReport {
        samples: n,
        delta,
        beta,
        hypothesis_holds,
        hypothesis_failures: failures,
        worst_ratio,
        median: med.median,
        median_ci: (med.ci_low, med.ci_high),
        rows,
        notes,
    })
}

/// Edge-count kernel `1{|x - y| ≤ radius}` for the random geometric graph.
pub fn edge_kernel(radius: f64) -> Result<UStatistic<Point>> {
    UStatistic::new(2, move |args: &[Point]| {
        if crate::ground::euclidean(&args[0].0, &args[1].0) <= radius {
            1.0
        } else {
            0.0
        }
    })
}
