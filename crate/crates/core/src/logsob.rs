//! The entropy functional `Ent(e^F)`, the infimum-convolution operator
//! `R_c` for the Poisson cost with `α_1`, and checks of the resulting
//! modified log-Sobolev inequalities.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{diff_minus, spot_check_monotone_convex, Counts, Functional, PointMeasure, PointSet};
use crate::error::{input, Result};
use crate::ground::{alpha1_conjugate, phi, phi_wu, AlphaFamily, EuclideanBox};
use crate::inequalities::{Diagnostics, VerificationReport, SOLVER_TOL};
use crate::processes::{sample_poisson_box, ConfigurationSpaceIndex, ProcessLaw};
use crate::solver::{self, ConvexProgram, Equality, SolverOptions, Term};
use crate::stats::{mean_estimate, par_draws, stream_rng, MeanEstimate, Z95_ONE_SIDED};

/// Which entropy-like functional of `e^F` to compute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropySpec {
    /// `E[F e^F] - E[e^F] log E[e^F]`.
    #[default]
    Standard,
    /// `E[F e^F] - E[F] E[e^F]`.
    Covariance,
    /// `E[F e^F] - E[F] log E[e^F]`.
    MeanLog,
}

impl EntropySpec {
    pub const ALL: [EntropySpec; 3] = [EntropySpec::Standard, EntropySpec::Covariance, EntropySpec::MeanLog];

    pub fn name(self) -> &'static str {
        match self {
            EntropySpec::Standard => "standard",
            EntropySpec::Covariance => "covariance",
            EntropySpec::MeanLog => "mean_log",
        }
    }
}

/// Moments of `F` under weights `p` (summing to one), with `e^F` written
/// as `e^M e^G`, `G = F - max F`, so nothing overflows before the end.
struct Moments {
    shift: f64,
    f: f64,
    exp_g: f64,
    f_exp_g: f64,
    g_exp_g: f64,
}

fn moments(values: &[f64], probs: &[f64]) -> Moments {
    let shift = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut m = Moments {
        shift,
        f: 0.0,
        exp_g: 0.0,
        f_exp_g: 0.0,
        g_exp_g: 0.0,
    };
    for (v, p) in values.iter().zip(probs) {
        if *p == 0.0 {
            continue;
        }
        let g = v - shift;
        let e = g.exp();
        m.f += p * v;
        m.exp_g += p * e;
        m.f_exp_g += p * v * e;
        m.g_exp_g += p * g * e;
    }
    m
}

impl Moments {
    fn value(&self, spec: EntropySpec) -> f64 {
        let scale = self.shift.exp();
        match spec {
            EntropySpec::Standard => scale * (self.g_exp_g - self.exp_g * self.exp_g.ln()).max(0.0),
            EntropySpec::Covariance => scale * (self.f_exp_g - self.f * self.exp_g),
            EntropySpec::MeanLog => scale * self.f_exp_g - self.f * (self.shift + self.exp_g.ln()),
        }
    }

    /// Influence function of the selected functional at a value `v`.
    fn influence(&self, spec: EntropySpec, v: f64) -> f64 {
        let scale = self.shift.exp();
        let g = v - self.shift;
        let e = g.exp();
        match spec {
            EntropySpec::Standard => scale * (g * e - (self.exp_g.ln() + 1.0) * e),
            EntropySpec::Covariance => scale * (v * e - self.f * e - self.exp_g * v),
            EntropySpec::MeanLog => scale * v * e - (self.shift + self.exp_g.ln()) * v - self.f * e / self.exp_g,
        }
    }
}

/// `Ent(e^F)` for values `F` carrying probabilities `probs`.
pub fn ent_exp_weighted(values: &[f64], probs: &[f64], spec: EntropySpec) -> Result<f64> {
    crate::error::check_len(values.len(), probs.len())?;
    if values.is_empty() {
        return input("entropy of an empty law");
    }
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) || probs.iter().any(|p| !(*p >= 0.0)) {
        return input("probabilities must be nonnegative with positive total");
    }
    if values.iter().any(|v| !v.is_finite()) {
        return input("functional values must be finite");
    }
    let p: Vec<f64> = probs.iter().map(|q| q / total).collect();
    Ok(moments(values, &p).value(spec))
}

/// Exact `Ent(e^F)` under an enumerated law (normalized over the enumeration).
pub fn ent_exp(f: &Functional<Counts>, law: &ProcessLaw, spec: EntropySpec) -> Result<f64> {
    let values: Vec<f64> = law.index().configs().iter().map(|c| f.eval(c)).collect();
    ent_exp_weighted(&values, law.probabilities(), spec)
}

/// Plug-in estimate of `Ent(e^F)` from samples of `F`, with a delta-method
/// confidence interval at normal quantile `z`.
pub fn ent_exp_samples(values: &[f64], spec: EntropySpec, z: f64) -> Result<MeanEstimate> {
    let n = values.len();
    if n == 0 {
        return input("no samples");
    }
    let p = vec![1.0 / n as f64; n];
    let m = moments(values, &p);
    let est = m.value(spec);
    let infl: Vec<f64> = values.iter().map(|v| m.influence(spec, *v)).collect();
    let se = mean_estimate(&infl, z).std_error;
    Ok(MeanEstimate {
        mean: est,
        std_error: se,
        ci_low: est - z * se,
        ci_high: est + z * se,
        n,
    })
}

/// `R_{λc₁}F(ξ)` and a minimizing law on the enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfConvolution {
    pub value: f64,
    /// `(configuration index, mass)` for the atoms of the minimizing law.
    pub plan: Vec<(usize, f64)>,
    pub gap: f64,
}

fn deficit_row(xi: &Counts, atoms: &[(usize, u32)], chi: &Counts) -> Vec<f64> {
    let _ = xi;
    atoms
        .iter()
        .map(|(x, m)| (1.0 - chi.get(*x) as f64 / *m as f64).max(0.0))
        .collect()
}

/// `inf_Π { Π(F) + λ c₁(ξ, Π) }` over probability vectors on the enumeration,
/// where `c₁(ξ, Π) = Σ_x ξ(x) α₁(Σ_χ Π(χ) [1 - χ(x)/ξ(x)]_+)`.
///
/// `values[i]` is `F` at configuration `i` of `index`.
pub fn inf_conv_rc_values(
    values: &[f64],
    index: &ConfigurationSpaceIndex,
    xi: &Counts,
    lambda: f64,
    options: &SolverOptions,
) -> Result<InfConvolution> {
    crate::error::check_len(index.len(), values.len())?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return input(format!("lambda must be finite and nonnegative, got {lambda}"));
    }
    let Some(home) = index.index_of(xi) else {
        return input(format!("{xi} is not in the enumeration"));
    };
    let f_xi = values[home];
    if lambda == 0.0 {
        let (i, v) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, v)| (i, *v))
            .unwrap_or((home, f_xi));
        return Ok(InfConvolution {
            value: v,
            plan: vec![(i, 1.0)],
            gap: 0.0,
        });
    }
    let atoms: Vec<(usize, u32)> = xi.atoms();
    // Only configurations cheaper than ξ can help; among equal deficit
    // patterns keep the cheapest. ξ itself has zero deficits.
    let mut candidates: Vec<(usize, Vec<f64>)> = vec![(home, vec![0.0; atoms.len()])];
    let mut order: Vec<usize> = (0..index.len()).filter(|&i| values[i] < f_xi).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    for i in order {
        let row = deficit_row(xi, &atoms, &index.configs()[i]);
        let dominated = candidates
            .iter()
            .any(|(j, r)| values[*j] <= values[i] && r.iter().zip(&row).all(|(a, b)| a <= b));
        if !dominated {
            candidates.push((i, row));
        }
    }
    if candidates.len() == 1 {
        return Ok(InfConvolution {
            value: f_xi,
            plan: vec![(home, 1.0)],
            gap: 0.0,
        });
    }
    let n = candidates.len();
    let alpha = AlphaFamily::Dembo(1.0);
    let mut program = ConvexProgram::new(n);
    program.linear = candidates.iter().map(|(i, _)| values[*i]).collect();
    for (a, (_, m)) in atoms.iter().enumerate() {
        program.terms.push(Term {
            weight: lambda * *m as f64,
            offset: 0.0,
            coeffs: candidates.iter().enumerate().map(|(j, (_, r))| (j, r[a])).collect(),
        });
    }
    program.equalities.push(Equality {
        coeffs: (0..n).map(|j| (j, 1.0)).collect(),
        rhs: 1.0,
    });
    // Start mostly on ξ so every argument stays well inside [0, 1).
    let mut start = vec![0.5 / (n - 1) as f64; n];
    start[0] = 0.5;
    let sol = solver::minimize(&program, &alpha, &start, options)?;
    let total: f64 = sol.z.iter().map(|v| v.max(0.0)).sum();
    let plan: Vec<(usize, f64)> = candidates
        .iter()
        .zip(&sol.z)
        .map(|((i, _), z)| (*i, z.max(0.0) / total))
        .filter(|(_, p)| *p > 0.0)
        .collect();
    let mut value = plan.iter().map(|(i, p)| p * values[*i]).sum::<f64>();
    for (a, (_, m)) in atoms.iter().enumerate() {
        let u: f64 = candidates
            .iter()
            .zip(&sol.z)
            .map(|((_, r), z)| z.max(0.0) / total * r[a])
            .sum();
        value += lambda * *m as f64 * alpha.value(u.min(1.0));
    }
    Ok(InfConvolution {
        value: value.min(f_xi),
        plan,
        gap: sol.gap,
    })
}

pub fn inf_conv_rc(
    f: &Functional<Counts>,
    index: &ConfigurationSpaceIndex,
    xi: &Counts,
    lambda: f64,
) -> Result<InfConvolution> {
    let values: Vec<f64> = index.configs().iter().map(|c| f.eval(c)).collect();
    inf_conv_rc_values(&values, index, xi, lambda, &SolverOptions::default())
}

/// Checks `Ent(e^F) ≤ 1/(1-λ) E[(F - R_{λc₁}F) e^F]` on an enumerated law,
/// solving `R_c` at every configuration. The infimum is taken over the
/// enumeration only, which can only shrink the right-hand side.
pub fn verify_logsob_rc(law: &ProcessLaw, f: &Functional<Counts>, lambda: f64, spec: EntropySpec) -> Result<VerificationReport> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return input(format!("lambda must lie in (0,1), got {lambda}"));
    }
    let index = law.index();
    let values: Vec<f64> = index.configs().iter().map(|c| f.eval(c)).collect();
    let probs = law.probabilities();
    let options = SolverOptions::default();
    let rc: Vec<InfConvolution> = index
        .configs()
        .par_iter()
        .enumerate()
        .map(|(i, xi)| {
            if probs[i] == 0.0 {
                Ok(InfConvolution {
                    value: values[i],
                    plan: vec![(i, 1.0)],
                    gap: 0.0,
                })
            } else {
                inf_conv_rc_values(&values, index, xi, lambda, &options)
            }
        })
        .collect::<Result<_>>()?;
    let lhs = ent_exp_weighted(&values, probs, spec)?;
    let mut rhs = 0.0;
    let mut gap_term = 0.0;
    for i in 0..values.len() {
        let w = probs[i] * values[i].exp() / (1.0 - lambda);
        rhs += w * (values[i] - rc[i].value);
        gap_term += w * rc[i].gap;
    }
    let max_gap = rc.iter().map(|r| r.gap).fold(0.0, f64::max);
    let fmax = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tail = law.tail_bound();
    let tail_term = tail * fmax.exp() * (2.0 + 2.0 * fmax) / (1.0 - lambda);
    let mut diagnostics = Diagnostics {
        solver_gap: Some(max_gap),
        solver_residual: Some(gap_term),
        tail_bound: tail,
        confidence: None,
        notes: vec![format!("entropy definition: {}", spec.name())],
    };
    for other in EntropySpec::ALL {
        if other != spec {
            let v = ent_exp_weighted(&values, probs, other)?;
            diagnostics.notes.push(format!("{} entropy = {v}", other.name()));
        }
    }
    Ok(VerificationReport::new(lhs, rhs, SOLVER_TOL + gap_term + tail_term, diagnostics))
}

/// Both sides of `F(ξ) - R_{λc₁}F(ξ) ≤ λ Σ_{x∈ξ} α₁*(D⁻_x F(ξ)/λ)` on a
/// simple configuration `ξ`.
pub fn rc_gradient_bound(f: &Functional<Counts>, index: &ConfigurationSpaceIndex, xi: &Counts, lambda: f64) -> Result<(f64, f64)> {
    if !xi.is_simple() {
        return input("the gradient bound is only checked on simple configurations");
    }
    if !(lambda > 0.0) {
        return input("lambda must be positive");
    }
    let rc = inf_conv_rc(f, index, xi, lambda)?;
    let mut rhs = 0.0;
    for (x, _) in xi.atoms() {
        let d = diff_minus(f, xi, &x)?;
        rhs += lambda * alpha1_conjugate(d.max(0.0) / lambda)?;
    }
    Ok((f.eval(xi) - rc.value, rhs))
}

/// Monte Carlo comparison of the right-hand sides built from `φ_λ` and
/// from `φ_w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WuComparison {
    pub rhs_wu: MeanEstimate,
    /// Samples whose gradients all lie where `φ_w ≤ φ_λ`.
    pub samples_in_region: usize,
    /// Of those, samples where the `φ_w` term exceeded the `φ_λ` term.
    pub inconsistent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub lambda: f64,
    pub report: VerificationReport,
    pub lhs: MeanEstimate,
    pub rhs: MeanEstimate,
    pub wu: WuComparison,
}

/// Checks `Ent(e^F) ≤ E[e^F Σ_{x∈η} φ_λ(D⁻_x F(η))]` for a Poisson process
/// with intensity `rate · Lebesgue` on `domain`. A violation is declared
/// only if the one-sided 95% lower bound for the left side exceeds the
/// one-sided 95% upper bound for the right side.
pub fn verify_logsob_monotone(
    rate: f64,
    domain: &EuclideanBox,
    f: &Functional<PointSet>,
    lambda: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MonotoneReport> {
    phi(lambda, 0.0)?;
    if n_samples < 2 {
        return input("at least two samples are required");
    }
    let draws = par_draws(n_samples, seed, |rng, _| -> Result<(f64, f64, f64, bool, PointSet)> {
        let eta = sample_poisson_box(rate, domain, rng)?;
        let fv = f.eval(&eta);
        let (mut s_lambda, mut s_wu, mut in_region) = (0.0, 0.0, true);
        for (x, m) in eta.atoms() {
            let mut d = diff_minus(f, &eta, &x)?;
            if d < 0.0 {
                if d < -1e-9 * (1.0 + fv.abs()) {
                    return input(format!("functional {} is not nondecreasing: D- = {d}", f.name));
                }
                d = 0.0;
            }
            let (a, b) = (phi(lambda, d)?, phi_wu(d)?);
            s_lambda += m as f64 * a;
            s_wu += m as f64 * b;
            in_region &= b <= a;
        }
        let e = fv.exp();
        Ok((fv, e * s_lambda, e * s_wu, in_region, eta))
    });
    let draws: Vec<_> = draws.into_iter().collect::<Result<_>>()?;
    let shape_samples: Vec<PointSet> = draws.iter().take(50).map(|d| d.4.clone()).collect();
    let mut rng = stream_rng(seed, u64::MAX);
    let shape = spot_check_monotone_convex(f, &shape_samples, domain, 4, 1e-9, &mut rng)?;
    if !shape.nondecreasing || !shape.convex {
        return input(format!(
            "functional {} failed the convex nondecreasing spot check: {:?} {:?}",
            f.name, shape.first_monotone_violation, shape.first_convex_violation
        ));
    }
    let z = Z95_ONE_SIDED;
    let values: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let lhs = ent_exp_samples(&values, EntropySpec::Standard, z)?;
    let rhs = mean_estimate(&draws.iter().map(|d| d.1).collect::<Vec<_>>(), z);
    let rhs_wu = mean_estimate(&draws.iter().map(|d| d.2).collect::<Vec<_>>(), z);
    let in_region: Vec<_> = draws.iter().filter(|d| d.3).collect();
    let wu = WuComparison {
        rhs_wu,
        samples_in_region: in_region.len(),
        inconsistent: in_region.iter().filter(|d| d.2 > d.1 * (1.0 + 1e-12)).count(),
    };
    let diagnostics = Diagnostics {
        confidence: Some((lhs.ci_low, rhs.ci_high)),
        notes: vec![
            "violation requires lhs lower bound > rhs upper bound (one-sided 95%)".into(),
            format!("monotone/convex spot checks passed ({} trials)", shape.first_d1_checks),
        ],
        ..Default::default()
    };
    let tolerance = z * (lhs.std_error + rhs.std_error);
    let report = VerificationReport::new(lhs.mean, rhs.mean, tolerance, diagnostics);
    Ok(MonotoneReport {
        lambda,
        report,
        lhs,
        rhs,
        wu,
    })
}

/// `lambda,lhs,rhs,margin,ci_low,ci_high`; the interval columns are empty
/// for exact reports.
pub fn lambda_reports_to_csv(rows: &[(f64, VerificationReport)]) -> String {
    let mut out = String::from("lambda,lhs,rhs,margin,ci_low,ci_high\n");
    for (lambda, r) in rows {
        let (lo, hi) = r
            .diagnostics
            .confidence
            .map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
        let _ = writeln!(out, "{lambda},{},{},{},{lo},{hi}", r.lhs, r.rhs, r.margin);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DiscreteMeasure;
    use crate::processes::poisson_law;
    use proptest::prelude::*;
    use rand::Rng;
    use std::sync::Arc;

    #[test]
    fn two_point_entropy() {
        let v = ent_exp_weighted(&[0.0, 2f64.ln()], &[0.5, 0.5], EntropySpec::Standard).unwrap();
        let expect = 2f64.ln() - 1.5 * 1.5f64.ln();
        assert!((v - expect).abs() < 1e-14);
        assert!((v - 0.084949).abs() < 1e-6);
        let c = ent_exp_weighted(&[3.0, 3.0], &[0.2, 0.8], EntropySpec::Standard).unwrap();
        assert!(c.abs() < 1e-12);
    }

    #[test]
    fn other_definitions_by_hand() {
        let (f, p) = ([0.0, 1.0], [0.5, 0.5]);
        let e = 1f64.exp();
        let cov = ent_exp_weighted(&f, &p, EntropySpec::Covariance).unwrap();
        assert!((cov - (0.5 * e - 0.5 * 0.5 * (1.0 + e))).abs() < 1e-14);
        let ml = ent_exp_weighted(&f, &p, EntropySpec::MeanLog).unwrap();
        assert!((ml - (0.5 * e - 0.5 * (0.5 * (1.0 + e)).ln())).abs() < 1e-14);
    }

    #[test]
    fn standard_entropy_is_nonnegative() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..1000 {
            let n = rng.gen_range(1..8);
            let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            if p.iter().sum::<f64>() == 0.0 {
                continue;
            }
            assert!(ent_exp_weighted(&f, &p, EntropySpec::Standard).unwrap() >= 0.0);
        }
    }

    proptest! {
        #[test]
        fn entropy_scales_under_shifts(f in proptest::collection::vec(-3.0f64..3.0, 1..6), c in -4.0f64..4.0) {
            let p = vec![1.0; f.len()];
            let shifted: Vec<f64> = f.iter().map(|v| v + c).collect();
            let a = ent_exp_weighted(&shifted, &p, EntropySpec::Standard).unwrap();
            let b = c.exp() * ent_exp_weighted(&f, &p, EntropySpec::Standard).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn sample_entropy_interval_covers_exact_value() {
        let values: Vec<f64> = (0..4000).map(|i| if i % 2 == 0 { 0.0 } else { 2f64.ln() }).collect();
        let est = ent_exp_samples(&values, EntropySpec::Standard, 1.96).unwrap();
        assert!((est.mean - 0.084949).abs() < 1e-5);
        assert!(est.ci_low <= est.mean && est.ci_high >= est.mean);
    }

    #[test]
    fn rc_one_site_closed_form() {
        // Z = {x}; at ξ = δ_x only the empty configuration has a deficit.
        let ix = ConfigurationSpaceIndex::new(1, 2).unwrap();
        let xi = Counts(vec![1]);
        for &(f0, f1, f2, lambda) in &[(0.0, 1.0, 2.0, 0.5), (-1.0, 0.3, 0.1, 0.25), (2.0, 1.0, 0.0, 1.0)] {
            let values = |c: &Counts| match c.get(0) {
                0 => f0,
                1 => f1,
                _ => f2,
            };
            let vals: Vec<f64> = ix.configs().iter().map(values).collect();
            let got = inf_conv_rc_values(&vals, &ix, &xi, lambda, &SolverOptions::default()).unwrap().value;
            let m = f1.min(f2);
            let p: f64 = if f0 < m { 1.0 - 1.0 / (1.0 + (m - f0) / lambda) } else { 0.0 };
            let expect = p * f0 + (1.0 - p) * m + lambda * (-p - (1.0 - p).ln());
            assert!((got - expect).abs() < 1e-6, "{got} vs {expect}");
        }
    }

    #[test]
    fn rc_basic_properties() {
        let ix = ConfigurationSpaceIndex::new(2, 3).unwrap();
        let k = Functional::<Counts>::constant(1.5);
        for xi in ix.configs() {
            assert!((inf_conv_rc(&k, &ix, xi, 0.5).unwrap().value - 1.5).abs() < 1e-12);
        }
        let mut rng = stream_rng(8, 0);
        for _ in 0..5 {
            let vals: Vec<f64> = (0..ix.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for (i, xi) in ix.configs().iter().enumerate() {
                let mut prev = f64::NEG_INFINITY;
                for lambda in [0.1, 0.5, 1.0, 2.0] {
                    let r = inf_conv_rc_values(&vals, &ix, xi, lambda, &SolverOptions::default()).unwrap().value;
                    assert!(r <= vals[i] + 1e-12);
                    assert!(r >= prev - 1e-6);
                    prev = r;
                }
            }
        }
    }

    #[test]
    fn gradient_bound_on_simple_configurations() {
        let ix = ConfigurationSpaceIndex::new(3, 4).unwrap();
        let funcs = [
            Functional::<Counts>::total_mass(),
            Functional::new("mass squared", |c: &Counts| (c.mass() as f64).powi(2)),
            Functional::new("weighted", |c: &Counts| 0.3 * c.get(0) as f64 + (c.get(1) + c.get(2)) as f64 * 0.7),
        ];
        for f in &funcs {
            for xi in ix.configs().iter().filter(|c| c.is_simple()) {
                for lambda in [0.5, 1.0] {
                    let (lhs, rhs) = rc_gradient_bound(f, &ix, xi, lambda).unwrap();
                    assert!(lhs >= -1e-9 && lhs <= rhs + 1e-6, "{}: {xi} {lhs} > {rhs}", f.name);
                }
            }
        }
    }

    #[test]
    fn rc_logsob_on_small_poisson() {
        let ix = Arc::new(ConfigurationSpaceIndex::new(2, 4).unwrap());
        let nu = DiscreteMeasure::finite(vec![0.5, 0.5]).unwrap();
        let law = poisson_law(&nu, ix.clone()).unwrap();
        let k = Functional::<Counts>::constant(0.7);
        let r = verify_logsob_rc(&law, &k, 0.5, EntropySpec::Standard).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
        let mass = Functional::<Counts>::total_mass();
        let r = verify_logsob_rc(&law, &mass, 0.5, EntropySpec::Standard).unwrap();
        assert!(!r.violated && r.margin >= 0.0, "{r:?}");
        let mut rng = stream_rng(12, 0);
        for _ in 0..6 {
            let vals: Vec<f64> = (0..ix.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let lookup = ix.clone();
            let f = Functional::new("random", move |c: &Counts| vals[lookup.index_of(c).unwrap()]);
            for lambda in [0.25, 0.75] {
                let r = verify_logsob_rc(&law, &f, lambda, EntropySpec::Standard).unwrap();
                assert!(!r.violated, "{r:?}");
            }
        }
    }

    #[test]
    fn monotone_logsob_for_point_count() {
        let dom = EuclideanBox::unit(1).unwrap();
        let f = Functional::<PointSet>::total_mass();
        let e = 1f64.exp();
        let exact_lhs = (e - 1.0).exp();
        for lambda in [0.0, 0.5] {
            let rep = verify_logsob_monotone(1.0, &dom, &f, lambda, 20_000, 77).unwrap();
            assert!(!rep.report.violated);
            assert!((rep.lhs.mean - exact_lhs).abs() < 4.0 * rep.lhs.std_error + 0.05, "{:?}", rep.lhs);
            let exact_rhs = phi(lambda, 1.0).unwrap() * e.powf(e);
            assert!((rep.rhs.mean - exact_rhs).abs() < 4.0 * rep.rhs.std_error + 0.05);
            assert_eq!(rep.wu.inconsistent, 0);
        }
        let csv = lambda_reports_to_csv(&[(0.5, verify_logsob_monotone(1.0, &dom, &f, 0.5, 100, 1).unwrap().report)]);
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn monotone_logsob_rejects_decreasing_functionals() {
        let dom = EuclideanBox::unit(1).unwrap();
        let f = Functional::new("negative mass", |c: &PointSet| -(c.mass() as f64));
        assert!(verify_logsob_monotone(2.0, &dom, &f, 0.5, 200, 1).is_err());
    }
}
