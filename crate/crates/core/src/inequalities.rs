//! Numerical verification of transport-entropy inequalities on base spaces,
//! on configuration spaces and on products.
//!
//! A verifier computes both sides exactly where possible and returns a
//! [`VerificationReport`]. Solver-backed left sides are re-solved with
//! tighter tolerances before a violation is reported.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, input, Result};
use crate::ground::{ext_mul, AlphaFamily};
use crate::lifted::{lifted_linear_cost, lifted_weak_cost_with, LiftedCostSpec};
use crate::measures::{entropy_sum, relative_entropy, DiscreteMeasure};
use crate::processes::{binomial_law, law_relative_entropy, mass_law, mixed_binomial_law, ProcessLaw};
use crate::solver::SolverOptions;
use crate::stats::stream_rng;
use crate::transport::{ot_lp, solve_coupling_program, weak_transport_with, RowTerm};

/// Tolerance for exact and LP quantities.
pub const EXACT_TOL: f64 = 1e-6;
/// Base tolerance for quantities computed by the convex solver.
pub const SOLVER_TOL: f64 = 1e-4;

/// Extra information attached to a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub solver_gap: Option<f64>,
    pub solver_residual: Option<f64>,
    /// Total truncation tail mass of the laws involved.
    pub tail_bound: f64,
    /// Monte Carlo confidence bounds `(lhs_upper, rhs_lower)` or similar.
    pub confidence: Option<(f64, f64)>,
    pub notes: Vec<String>,
}

/// Both sides of an inequality `lhs ≤ rhs` and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; `NaN` when both sides are infinite.
    pub margin: f64,
    pub tolerance: f64,
    pub violated: bool,
    /// The hypothesis of the inequality fails, so nothing is asserted.
    pub vacuous: bool,
    pub diagnostics: Diagnostics,
}

impl VerificationReport {
    pub fn new(lhs: f64, rhs: f64, tolerance: f64, diagnostics: Diagnostics) -> Self {
        let margin = if lhs.is_infinite() && rhs.is_infinite() {
            f64::NAN
        } else {
            rhs - lhs
        };
        Self {
            lhs,
            rhs,
            margin,
            tolerance,
            violated: margin < -tolerance,
            vacuous: false,
            diagnostics,
        }
    }

    pub fn vacuous(lhs: f64, rhs: f64, tolerance: f64, mut diagnostics: Diagnostics, why: &str) -> Self {
        diagnostics.notes.push(why.to_string());
        let mut r = Self::new(lhs, rhs, tolerance, diagnostics);
        r.violated = false;
        r.vacuous = true;
        r
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `instance,lhs,rhs,margin,tolerance,violated,vacuous` with one row per report.
pub fn reports_to_csv(rows: &[(String, VerificationReport)]) -> String {
    let mut out = String::from("instance,lhs,rhs,margin,tolerance,violated,vacuous\n");
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{},{}",
            r.lhs, r.rhs, r.margin, r.tolerance, r.violated, r.vacuous
        );
    }
    out
}

/// Cost side of a base-space inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseCost {
    /// `T_ρ(ν₁, ν₂)`.
    Linear { rho: Vec<Vec<f64>> },
    /// `T̃_{α,ρ}(ν₂|ν₁)`.
    Weak { alpha: AlphaFamily, rho: Vec<Vec<f64>> },
}

impl BaseCost {
    pub fn rho(&self) -> &[Vec<f64>] {
        match self {
            BaseCost::Linear { rho } | BaseCost::Weak { rho, .. } => rho,
        }
    }

    /// Left side for the pair `(ν₁, ν₂)`, with solver gap and residual.
    pub fn evaluate(&self, nu1: &DiscreteMeasure, nu2: &DiscreteMeasure, options: &SolverOptions) -> Result<(f64, f64, f64)> {
        match self {
            BaseCost::Linear { rho } => Ok((ot_lp(rho, nu1, nu2)?.0, 0.0, 0.0)),
            BaseCost::Weak { alpha, rho } => {
                let w = weak_transport_with(alpha, rho, nu1, nu2, options)?;
                Ok((w.value, w.gap, w.residual))
            }
        }
    }
}

/// Where the constants of a certificate come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CertificateProvenance {
    KnownClosedForm,
    /// Holds for every base measure (Marton and Dembo inequalities).
    Universal,
    /// Empirical lower bound times an inflation factor.
    Estimated { samples: usize, inflation: f64 },
    Uncertified,
}

/// A claimed inequality `cost ≤ a₁ H(ν₁|γ) + a₂ H(ν₂|γ)` for a base measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseCertificate {
    pub cost: BaseCost,
    pub a1: f64,
    pub a2: f64,
    pub provenance: CertificateProvenance,
}

impl BaseCertificate {
    pub fn new(cost: BaseCost, a1: f64, a2: f64, provenance: CertificateProvenance) -> Result<Self> {
        if !(a1 > 0.0) || !(a2 > 0.0) {
            return input(format!("certificate constants must be positive, got {a1} and {a2}"));
        }
        Ok(Self { cost, a1, a2, provenance })
    }

    /// The universal inequality with `α_t` and the Hamming distance on `k` points.
    pub fn dembo(k: usize, t: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return input(format!("t must lie in (0,1), got {t}"));
        }
        Self::new(
            BaseCost::Weak {
                alpha: AlphaFamily::Dembo(t),
                rho: hamming(k),
            },
            1.0 / t,
            1.0 / (1.0 - t),
            CertificateProvenance::Universal,
        )
    }

    /// Symmetric constant estimated from `samples` random pairs, times `inflation`.
    pub fn estimated(cost: BaseCost, gamma: &DiscreteMeasure, samples: usize, inflation: f64, seed: u64) -> Result<Self> {
        let est = estimate_base_constant(gamma, &cost, samples, seed)?;
        let a = (est.estimate * inflation).max(f64::MIN_POSITIVE);
        Self::new(cost, a, a, CertificateProvenance::Estimated { samples, inflation })
    }

    pub fn rhs(&self, h1: f64, h2: f64) -> f64 {
        ext_mul(self.a1, h1) + ext_mul(self.a2, h2)
    }

    fn caveat(&self) -> Option<String> {
        match &self.provenance {
            CertificateProvenance::Estimated { samples, inflation } => Some(format!(
                "certificate estimated from {samples} samples and inflated by {inflation}; a pass is evidence, not proof"
            )),
            CertificateProvenance::Uncertified => Some("base inequality is not certified".to_string()),
            _ => None,
        }
    }
}

/// Hamming distance matrix on `k` points.
pub fn hamming(k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|i| (0..k).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect()
}

fn tightened(options: &SolverOptions) -> SolverOptions {
    SolverOptions {
        gap_tol: options.gap_tol * 1e-2,
        accept_gap: options.accept_gap * 1e-2,
        max_newton_steps: options.max_newton_steps * 2,
    }
}

/// Computes a solver-backed left side, re-solving tighter if the first
/// answer would be a violation.
fn solver_report<F>(rhs: f64, base_tol: f64, mut diagnostics: Diagnostics, solve: F) -> Result<VerificationReport>
where
    F: Fn(&SolverOptions) -> Result<(f64, f64, f64)>,
{
    let options = SolverOptions::default();
    let (mut lhs, mut gap, mut residual) = solve(&options)?;
    if rhs - lhs < -(base_tol + residual) {
        let (l, g, r) = solve(&tightened(&options))?;
        diagnostics.notes.push(format!("re-solved with tighter tolerance: {lhs} -> {l}"));
        lhs = l;
        gap = g;
        residual = r;
    }
    diagnostics.solver_gap = Some(gap);
    diagnostics.solver_residual = Some(residual);
    Ok(VerificationReport::new(lhs, rhs, base_tol + residual, diagnostics))
}

/// `T̃_{α_t,d_H}(ν₂|ν₁) ≤ (1/t) H(ν₁|γ) + (1/(1-t)) H(ν₂|γ)`.
pub fn verify_base_dembo(
    gamma: &DiscreteMeasure,
    nu1: &DiscreteMeasure,
    nu2: &DiscreteMeasure,
    t: f64,
) -> Result<VerificationReport> {
    let cert = BaseCertificate::dembo(gamma.len(), t)?;
    check_len(gamma.len(), nu1.len())?;
    check_len(gamma.len(), nu2.len())?;
    let rhs = cert.rhs(relative_entropy(nu1, gamma)?, relative_entropy(nu2, gamma)?);
    solver_report(rhs, EXACT_TOL, Diagnostics::default(), |o| cert.cost.evaluate(nu1, nu2, o))
}

/// `T_{c_t}(Π₂|Π₁) ≤ (1/t) H(Π₁|law) + (1/(1-t)) H(Π₂|law)` for a binomial
/// law of fixed size or a (truncated) Poisson law.
pub fn verify_marton_process(law: &ProcessLaw, pi1: &ProcessLaw, pi2: &ProcessLaw, t: f64) -> Result<VerificationReport> {
    if !(t > 0.0 && t < 1.0) {
        return input(format!("t must lie in (0,1), got {t}"));
    }
    let spec = LiftedCostSpec::WeakHamming {
        alpha: AlphaFamily::Dembo(t),
    };
    let rhs = ext_mul(1.0 / t, law_relative_entropy(pi1, law)?) + ext_mul(1.0 / (1.0 - t), law_relative_entropy(pi2, law)?);
    let diagnostics = Diagnostics {
        tail_bound: law.tail_bound() + pi1.tail_bound() + pi2.tail_bound(),
        ..Default::default()
    };
    solver_report(rhs, SOLVER_TOL, diagnostics, |o| {
        let w = lifted_weak_cost_with(&spec, pi1, pi2, o)?;
        Ok((w.value, w.gap, w.residual))
    })
}

/// Weak process inequality for `B_{μ,n}` with the partial matching cost,
/// from a base certificate for `(α, ρ)`.
pub fn verify_general_marton_process(
    cert: &BaseCertificate,
    mu: &DiscreteMeasure,
    n: u32,
    pi1: &ProcessLaw,
    pi2: &ProcessLaw,
) -> Result<VerificationReport> {
    let BaseCost::Weak { alpha, rho } = &cert.cost else {
        return input("a weak certificate is required");
    };
    let b = binomial_law(mu, n, pi1.index().clone())?;
    let spec = LiftedCostSpec::WeakGeneral {
        alpha: alpha.clone(),
        rho: rho.clone(),
    };
    let rhs = cert.rhs(law_relative_entropy(pi1, &b)?, law_relative_entropy(pi2, &b)?);
    let mut diagnostics = Diagnostics::default();
    diagnostics.notes.extend(cert.caveat());
    solver_report(rhs, SOLVER_TOL, diagnostics, |o| {
        let w = lifted_weak_cost_with(&spec, pi1, pi2, o)?;
        Ok((w.value, w.gap, w.residual))
    })
}

/// `𝕋_ρ(Π₁,Π₂) + (a₁+a₂) H(λ|κ) ≤ a₁ H(Π₁|B_{μ,κ}) + a₂ H(Π₂|B_{μ,κ})`.
/// Different mass laws make the left side infinite; such instances are
/// reported as vacuous.
pub fn verify_talagrand_process(
    cert: &BaseCertificate,
    mu: &DiscreteMeasure,
    kappa: &DiscreteMeasure,
    pi1: &ProcessLaw,
    pi2: &ProcessLaw,
) -> Result<VerificationReport> {
    let BaseCost::Linear { rho } = &cert.cost else {
        return input("a linear certificate is required");
    };
    let b = mixed_binomial_law(mu, kappa, pi1.index().clone())?;
    let rhs = cert.rhs(law_relative_entropy(pi1, &b)?, law_relative_entropy(pi2, &b)?);
    let mut diagnostics = Diagnostics {
        tail_bound: pi1.tail_bound() + pi2.tail_bound(),
        ..Default::default()
    };
    diagnostics.notes.extend(cert.caveat());
    let lambda = mass_law(pi1);
    let plan = lifted_linear_cost(rho, pi1, pi2)?;
    if !plan.value.is_finite() {
        return Ok(VerificationReport::vacuous(
            f64::INFINITY,
            rhs,
            EXACT_TOL,
            diagnostics,
            "transport cost is infinite (mass laws differ); inequality not asserted",
        ));
    }
    let mut kw = kappa.weights().to_vec();
    kw.resize(lambda.len().max(kw.len()), 0.0);
    let mut lw = lambda.weights().to_vec();
    lw.resize(kw.len(), 0.0);
    let mass_term = entropy_sum(&lw, &kw);
    let lhs = plan.value + ext_mul(cert.a1 + cert.a2, mass_term);
    Ok(VerificationReport::new(lhs, rhs, EXACT_TOL, diagnostics))
}

/// Closed-form check for binomial processes of Gaussian points on the line:
/// `Π_i = B_{N(m_i,1), n}`, `ρ = d²`, constants `a₁ = a₂ = a`. The left side
/// is the cost of the translation coupling `n (m₁ - m₂)²`, an upper bound on
/// the transport cost; the right side uses `H(B_{ν,n}|B_{μ,n}) = n H(ν|μ)`
/// with `H(N(m,1)|N(0,1)) = m²/2`.
pub fn gaussian_talagrand_lift(m1: f64, m2: f64, n: u32, a: f64) -> VerificationReport {
    let nf = n as f64;
    let lhs = nf * (m1 - m2) * (m1 - m2);
    let rhs = a * nf * m1 * m1 / 2.0 + a * nf * m2 * m2 / 2.0;
    let diagnostics = Diagnostics {
        notes: vec!["left side is a coupling upper bound".to_string()],
        ..Default::default()
    };
    VerificationReport::new(lhs, rhs, 0.0, diagnostics)
}

/// Result of a constant search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantEstimate {
    /// `max lhs / (H₁ + H₂)` over the sampled pairs: a lower bound on the
    /// best symmetric constant.
    pub estimate: f64,
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
    pub samples: usize,
}

/// Random probability vector supported on the support of `gamma`, pulled
/// towards `gamma` by a log-uniform factor so that near-reference pairs
/// are sampled too.
fn sample_near<R: Rng>(gamma: &DiscreteMeasure, rng: &mut R) -> Vec<f64> {
    let support = gamma.support();
    let mut raw = vec![0.0; gamma.len()];
    let mut total = 0.0;
    for &i in &support {
        let v = -rng.gen::<f64>().ln();
        raw[i] = v;
        total += v;
    }
    let s = 10f64.powf(rng.gen_range(-4.0..0.0));
    let g = gamma.weights();
    let mut out: Vec<f64> = (0..gamma.len()).map(|i| (1.0 - s) * g[i] + s * raw[i] / total).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

/// Empirical search for the smallest symmetric constant in
/// `cost(ν₁,ν₂) ≤ a (H(ν₁|γ) + H(ν₂|γ))`.
pub fn estimate_base_constant(gamma: &DiscreteMeasure, cost: &BaseCost, samples: usize, seed: u64) -> Result<ConstantEstimate> {
    if samples == 0 {
        return input("at least one sample is required");
    }
    if !gamma.is_probability() {
        return input("reference measure must be a probability");
    }
    check_len(gamma.len(), cost.rho().len())?;
    let options = SolverOptions::default();
    let mut best = ConstantEstimate {
        estimate: 0.0,
        worst_pair: None,
        samples,
    };
    for s in 0..samples {
        let mut rng = stream_rng(seed, s as u64);
        let a = DiscreteMeasure::probability_with_tol(sample_near(gamma, &mut rng), 1e-9)?;
        let b = DiscreteMeasure::probability_with_tol(sample_near(gamma, &mut rng), 1e-9)?;
        let h = relative_entropy(&a, gamma)? + relative_entropy(&b, gamma)?;
        if !(h > 0.0) || !h.is_finite() {
            continue;
        }
        let (lhs, _, _) = cost.evaluate(&a, &b, &options)?;
        let ratio = lhs / h;
        if ratio > best.estimate {
            best.estimate = ratio;
            best.worst_pair = Some((a.weights().to_vec(), b.weights().to_vec()));
        }
    }
    Ok(best)
}

/// Weak Hamming inequality with `α_t` on a product `γ₁ ⊗ … ⊗ γ_d` for the
/// summed cost `c̄(x, p) = Σ_i α_t(p_i(y_i ≠ x_i))`, where `p_i` is the
/// `i`-th marginal of `p`. Measures on the product are indexed in row-major
/// order (last factor fastest).
pub fn verify_tensorization(
    factors: &[DiscreteMeasure],
    t: f64,
    nu1: &DiscreteMeasure,
    nu2: &DiscreteMeasure,
) -> Result<VerificationReport> {
    if factors.is_empty() {
        return input("at least one factor is required");
    }
    if !(t > 0.0 && t < 1.0) {
        return input(format!("t must lie in (0,1), got {t}"));
    }
    let sizes: Vec<usize> = factors.iter().map(|f| f.len()).collect();
    let total: usize = sizes.iter().product();
    check_len(total, nu1.len())?;
    check_len(total, nu2.len())?;
    let coords = |mut i: usize| -> Vec<usize> {
        let mut c = vec![0; sizes.len()];
        for (d, &s) in sizes.iter().enumerate().rev() {
            c[d] = i % s;
            i /= s;
        }
        c
    };
    let gamma: Vec<f64> = (0..total)
        .map(|i| coords(i).iter().zip(factors).map(|(&c, f)| f.weights()[c]).product())
        .collect();
    let gamma = DiscreteMeasure::probability_with_tol(gamma, 1e-9)?;
    let rhs = ext_mul(1.0 / t, relative_entropy(nu1, &gamma)?) + ext_mul(1.0 / (1.0 - t), relative_entropy(nu2, &gamma)?);
    let alpha = AlphaFamily::Dembo(t);
    let sources = nu1.support();
    let targets = nu2.support();
    let rows: Vec<f64> = sources.iter().map(|&x| nu1.weights()[x]).collect();
    let cols: Vec<f64> = targets.iter().map(|&y| nu2.weights()[y]).collect();
    let mut terms = Vec::new();
    for (a, &x) in sources.iter().enumerate() {
        let cx = coords(x);
        for d in 0..sizes.len() {
            terms.push(RowTerm {
                row: a,
                weight: rows[a],
                coeffs: targets
                    .iter()
                    .map(|&y| if coords(y)[d] != cx[d] { 1.0 / rows[a] } else { 0.0 })
                    .collect(),
            });
        }
    }
    solver_report(rhs, EXACT_TOL, Diagnostics::default(), |o| {
        let sol = solve_coupling_program(&alpha, &rows, &cols, &terms, None, o)?;
        Ok((sol.value, sol.gap, sol.residual))
    })
}

/// Cost of the independent kernel `p_x = ν₂` for the product problem of
/// [`verify_tensorization`]; an upper bound on the optimal cost.
pub fn tensorization_product_bound(sizes: &[usize], t: f64, nu1: &DiscreteMeasure, nu2: &DiscreteMeasure) -> Result<f64> {
    let total: usize = sizes.iter().product();
    check_len(total, nu1.len())?;
    let coords = |mut i: usize| -> Vec<usize> {
        let mut c = vec![0; sizes.len()];
        for (d, &s) in sizes.iter().enumerate().rev() {
            c[d] = i % s;
            i /= s;
        }
        c
    };
    let alpha = AlphaFamily::Dembo(t);
    let mut value = 0.0;
    for x in nu1.support() {
        let cx = coords(x);
        for d in 0..sizes.len() {
            let u: f64 = (0..total).filter(|&y| coords(y)[d] != cx[d]).map(|y| nu2.weights()[y]).sum();
            value += nu1.weights()[x] * alpha.value(u);
        }
    }
    Ok(value)
}

/// Checks that two laws share their mass distribution within `tol`.
pub fn same_mass_law(a: &ProcessLaw, b: &ProcessLaw, tol: f64) -> bool {
    let (la, lb) = (mass_law(a), mass_law(b));
    la.weights().iter().zip(lb.weights()).all(|(x, y)| (x - y).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Counts;
    use crate::processes::{poisson_law, ConfigurationSpaceIndex};
    use crate::transport::marton_cost;
    use std::sync::Arc;

    fn random_prob<R: Rng>(rng: &mut R, k: usize) -> DiscreteMeasure {
        DiscreteMeasure::normalized((0..k).map(|_| -rng.gen::<f64>().ln()).collect()).unwrap()
    }

    #[test]
    fn report_verdicts() {
        let r = VerificationReport::new(1.0, 0.5, 0.1, Diagnostics::default());
        assert!(r.violated && (r.margin + 0.5).abs() < 1e-15);
        let r = VerificationReport::new(1.0, f64::INFINITY, 0.1, Diagnostics::default());
        assert!(!r.violated);
        let r = VerificationReport::new(f64::INFINITY, f64::INFINITY, 0.1, Diagnostics::default());
        assert!(!r.violated && r.margin.is_nan());
        let csv = reports_to_csv(&[("a".into(), r)]);
        assert!(csv.starts_with("instance,lhs"));
    }

    #[test]
    fn dembo_trivial_and_marton_constant_four() {
        let g = DiscreteMeasure::uniform(3).unwrap();
        let r = verify_base_dembo(&g, &g, &g, 0.5).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs == 0.0 && !r.violated);
        let mut rng = stream_rng(4, 0);
        for _ in 0..30 {
            let k = rng.gen_range(2..=4);
            let (g, a, b) = (random_prob(&mut rng, k), random_prob(&mut rng, k), random_prob(&mut rng, k));
            let r = verify_base_dembo(&g, &a, &b, 0.5).unwrap();
            assert!(!r.violated);
            // Marton: square cost ≤ 4 H₁ + 4 H₂, and α_{1/2} ≥ u²/2 makes it weaker
            let m = marton_cost(&b, &a).unwrap();
            let h = relative_entropy(&a, &g).unwrap() + relative_entropy(&b, &g).unwrap();
            assert!(m <= 4.0 * h + 1e-9);
            assert!(m / 2.0 <= r.lhs + 1e-6);
        }
    }

    #[test]
    fn marton_process_on_point_masses() {
        let ix = Arc::new(ConfigurationSpaceIndex::new(2, 3).unwrap());
        let mu = DiscreteMeasure::probability(vec![0.4, 0.6]).unwrap();
        let law = binomial_law(&mu, 3, ix.clone()).unwrap();
        let same = verify_marton_process(&law, &law, &law, 0.5).unwrap();
        assert!(same.lhs.abs() < 1e-12 && !same.violated);
        let range: Vec<usize> = ix.mass_range(3).collect();
        for &i in &range {
            for &j in &range {
                let d1 = ProcessLaw::dirac(ix.clone(), ix.config(i)).unwrap();
                let d2 = ProcessLaw::dirac(ix.clone(), ix.config(j)).unwrap();
                let r = verify_marton_process(&law, &d1, &d2, 0.5).unwrap();
                let expected = 2.0 * -law.probabilities()[i].ln() + 2.0 * -law.probabilities()[j].ln();
                assert!((r.rhs - expected).abs() < 1e-12);
                assert!(!r.violated, "{:?} {:?}", ix.config(i), ix.config(j));
            }
        }
    }

    #[test]
    fn marton_process_against_truncated_poisson() {
        let ix = Arc::new(ConfigurationSpaceIndex::new(2, 3).unwrap());
        let nu = DiscreteMeasure::finite(vec![0.4, 0.5]).unwrap();
        let law = poisson_law(&nu, ix.clone()).unwrap();
        let mut rng = stream_rng(8, 0);
        for _ in 0..5 {
            let a = ProcessLaw::from_weights(ix.clone(), (0..ix.len()).map(|_| rng.gen::<f64>()).collect()).unwrap();
            let b = ProcessLaw::from_weights(ix.clone(), (0..ix.len()).map(|_| rng.gen::<f64>()).collect()).unwrap();
            let r = verify_marton_process(&law, &a, &b, 0.25).unwrap();
            assert!(!r.violated && r.diagnostics.tail_bound > 0.0);
        }
    }

    #[test]
    fn general_marton_reproduces_hamming_case() {
        let ix = Arc::new(ConfigurationSpaceIndex::new(2, 2).unwrap());
        let mu = DiscreteMeasure::probability(vec![0.3, 0.7]).unwrap();
        let law = binomial_law(&mu, 2, ix.clone()).unwrap();
        let cert = BaseCertificate::dembo(2, 0.5).unwrap();
        let mut rng = stream_rng(12, 0);
        let mut w = vec![0.0; ix.len()];
        let mut v = vec![0.0; ix.len()];
        for i in ix.mass_range(2) {
            w[i] = rng.gen();
            v[i] = rng.gen();
        }
        let a = ProcessLaw::from_weights(ix.clone(), w).unwrap();
        let b = ProcessLaw::from_weights(ix.clone(), v).unwrap();
        let g = verify_general_marton_process(&cert, &mu, 2, &a, &b).unwrap();
        let h = verify_marton_process(&law, &a, &b, 0.5).unwrap();
        assert!((g.lhs - h.lhs).abs() < 1e-6 && (g.rhs - h.rhs).abs() < 1e-12);
    }

    #[test]
    fn talagrand_process_cases() {
        let ix = Arc::new(ConfigurationSpaceIndex::new(2, 3).unwrap());
        let mu = DiscreteMeasure::uniform(2).unwrap();
        let kappa = DiscreteMeasure::probability(vec![0.2, 0.3, 0.3, 0.2]).unwrap();
        let cert = BaseCertificate::new(
            BaseCost::Linear { rho: hamming(2) },
            2.0,
            2.0,
            CertificateProvenance::Uncertified,
        )
        .unwrap();
        let b = mixed_binomial_law(&mu, &kappa, ix.clone()).unwrap();
        let r = verify_talagrand_process(&cert, &mu, &kappa, &b, &b).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12 && !r.violated);
        let d1 = ProcessLaw::dirac(ix.clone(), &Counts(vec![1, 0])).unwrap();
        let d2 = ProcessLaw::dirac(ix, &Counts(vec![1, 1])).unwrap();
        let r = verify_talagrand_process(&cert, &mu, &kappa, &d1, &d2).unwrap();
        assert!(r.vacuous && !r.violated && r.lhs.is_infinite());
    }

    #[test]
    fn gaussian_lift_depends_on_the_constant() {
        assert!(!gaussian_talagrand_lift(1.0, 2.0, 3, 2.0).violated);
        // Opposite means need the two-sided constant 4.
        assert!(gaussian_talagrand_lift(1.0, -1.0, 1, 2.0).violated);
        for m1 in -2..=2 {
            for m2 in -2..=2 {
                for n in 1..=5 {
                    assert!(!gaussian_talagrand_lift(m1 as f64, m2 as f64, n, 4.0).violated);
                }
            }
        }
    }

    #[test]
    fn constant_estimates() {
        let dirac = DiscreteMeasure::dirac(3, 1).unwrap();
        let weak = BaseCost::Weak {
            alpha: AlphaFamily::Dembo(0.5),
            rho: hamming(3),
        };
        assert_eq!(estimate_base_constant(&dirac, &weak, 20, 1).unwrap().estimate, 0.0);
        let g = DiscreteMeasure::uniform(3).unwrap();
        let e = estimate_base_constant(&g, &weak, 60, 2).unwrap();
        assert!(e.estimate > 0.0 && e.estimate <= 2.0 + 1e-6);
        // Linear Hamming cost has no finite constant near the reference.
        let g2 = DiscreteMeasure::uniform(2).unwrap();
        let lin = BaseCost::Linear { rho: hamming(2) };
        let small = estimate_base_constant(&g2, &lin, 10, 3).unwrap().estimate;
        let large = estimate_base_constant(&g2, &lin, 400, 3).unwrap().estimate;
        assert!(large >= small && large > 20.0, "{small} {large}");
        let eps = 1e-3;
        let a = DiscreteMeasure::probability(vec![0.5 + eps, 0.5 - eps]).unwrap();
        let b = DiscreteMeasure::probability(vec![0.5 - eps, 0.5 + eps]).unwrap();
        let ratio = ot_lp(&hamming(2), &a, &b).unwrap().0
            / (relative_entropy(&a, &g2).unwrap() + relative_entropy(&b, &g2).unwrap());
        assert!(ratio > 400.0);
    }

    #[test]
    fn tensorization_on_two_point_squares() {
        let g = DiscreteMeasure::uniform(2).unwrap();
        let factors = vec![g.clone(), g];
        let d = DiscreteMeasure::dirac(4, 2).unwrap();
        let dirac_factors = vec![DiscreteMeasure::dirac(2, 1).unwrap(), DiscreteMeasure::dirac(2, 0).unwrap()];
        let r = verify_tensorization(&dirac_factors, 0.5, &d, &d).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs == 0.0);
        let mut rng = stream_rng(5, 0);
        for _ in 0..20 {
            let a = random_prob(&mut rng, 4);
            let b = random_prob(&mut rng, 4);
            let r = verify_tensorization(&factors, 0.5, &a, &b).unwrap();
            assert!(!r.violated);
            let bound = tensorization_product_bound(&[2, 2], 0.5, &a, &b).unwrap();
            assert!(r.lhs <= bound + 1e-9);
        }
    }
}
