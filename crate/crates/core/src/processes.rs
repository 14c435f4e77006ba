//! Exact laws of mixed binomial and Poisson processes on a finite ground
//! space, mass decompositions, thinning and samplers.
//!
//! Laws live on a [`ConfigurationSpaceIndex`]: every count vector with total
//! mass at most a cap `N`. Poisson laws are truncated to the cap and
//! renormalized; the removed tail mass is recorded, and entropies against a
//! truncated Poisson reference use its exact (unrenormalized) point masses so
//! that they equal the untruncated values.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson, WeightedIndex};
use serde::Serialize;

use crate::config::{Counts, PointMeasure, PointSet};
use crate::error::{check_len, input, Error, Result};
use crate::ground::EuclideanBox;
use crate::measures::{entropy_sum, DiscreteMeasure};

/// Default bound on the Poisson tail mass discarded by truncation.
pub const DEFAULT_TAIL: f64 = 1e-10;

/// All count vectors on `k` points with mass `≤ N`, ordered by mass and,
/// within a mass, lexicographically descending.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSpaceIndex {
    k: usize,
    cap: u32,
    configs: Vec<Counts>,
    offsets: Vec<usize>,
    lookup: HashMap<Counts, usize>,
}

impl ConfigurationSpaceIndex {
    pub fn new(k: usize, cap: u32) -> Result<Self> {
        if k == 0 {
            return input("configuration space needs at least one ground point");
        }
        let expected = expected_size(k, cap);
        if expected > 5_000_000 {
            return input(format!("enumeration of {expected} configurations is too large"));
        }
        let mut configs = Vec::with_capacity(expected);
        let mut offsets = Vec::with_capacity(cap as usize + 2);
        for n in 0..=cap {
            offsets.push(configs.len());
            let mut cur = vec![0u32; k];
            compositions(n, 0, &mut cur, &mut configs);
        }
        offsets.push(configs.len());
        let lookup = configs.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        Ok(Self {
            k,
            cap,
            configs,
            offsets,
            lookup,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn config(&self, i: usize) -> &Counts {
        &self.configs[i]
    }

    pub fn configs(&self) -> &[Counts] {
        &self.configs
    }

    pub fn index_of(&self, xi: &Counts) -> Option<usize> {
        self.lookup.get(xi).copied()
    }

    /// Index range of the configurations of mass `n`.
    pub fn mass_range(&self, n: u32) -> std::ops::Range<usize> {
        if n > self.cap {
            return 0..0;
        }
        self.offsets[n as usize]..self.offsets[n as usize + 1]
    }

    pub fn mass_of(&self, i: usize) -> u32 {
        self.configs[i].mass() as u32
    }
}

fn compositions(left: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<Counts>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(Counts(cur.clone()));
        return;
    }
    for c in (0..=left).rev() {
        cur[pos] = c;
        compositions(left - c, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// `Σ_{n=0}^{N} C(n+k-1, k-1)`.
pub fn expected_size(k: usize, cap: u32) -> usize {
    // Σ_{n≤N} C(n+k-1, k-1) = C(N+k, k)
    let (n, r) = (cap as u128 + k as u128, k as u128);
    let mut c: u128 = 1;
    for i in 0..r.min(n - r) {
        c = c * (n - i) / (i + 1);
    }
    c.min(usize::MAX as u128) as usize
}

/// Where a law came from; used to recover exact reference masses.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Custom,
    MixedBinomial { mu: Vec<f64>, kappa: Vec<f64> },
    Poisson { intensity: Vec<f64> },
}

/// Truncation status of a law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truncation {
    Exact,
    /// `retained_mass` is the untruncated probability of the enumeration;
    /// `tail_mass_bound` bounds what was discarded.
    Truncated { retained_mass: f64, tail_mass_bound: f64 },
}

/// Probability vector over an enumerated configuration space.
#[derive(Debug, Clone)]
pub struct ProcessLaw {
    index: Arc<ConfigurationSpaceIndex>,
    probs: Vec<f64>,
    truncation: Truncation,
    provenance: Provenance,
}

impl ProcessLaw {
    /// A law given directly by its probabilities (sum 1 within 1e-12).
    pub fn new(index: Arc<ConfigurationSpaceIndex>, probs: Vec<f64>) -> Result<Self> {
        check_len(index.len(), probs.len())?;
        let m = DiscreteMeasure::probability(probs)?;
        Ok(Self {
            index,
            probs: m.weights().to_vec(),
            truncation: Truncation::Exact,
            provenance: Provenance::Custom,
        })
    }

    /// Normalizes nonnegative weights into a law.
    pub fn from_weights(index: Arc<ConfigurationSpaceIndex>, weights: Vec<f64>) -> Result<Self> {
        check_len(index.len(), weights.len())?;
        let m = DiscreteMeasure::normalized(weights)?;
        Ok(Self {
            index,
            probs: m.weights().to_vec(),
            truncation: Truncation::Exact,
            provenance: Provenance::Custom,
        })
    }

    pub fn dirac(index: Arc<ConfigurationSpaceIndex>, xi: &Counts) -> Result<Self> {
        let i = index
            .index_of(xi)
            .ok_or_else(|| Error::Input(format!("configuration {xi} is not enumerated")))?;
        let mut probs = vec![0.0; index.len()];
        probs[i] = 1.0;
        Self::new(index, probs)
    }

    pub fn index(&self) -> &Arc<ConfigurationSpaceIndex> {
        &self.index
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, xi: &Counts) -> f64 {
        self.index.index_of(xi).map_or(0.0, |i| self.probs[i])
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Recorded tail bound, zero for exact laws.
    pub fn tail_bound(&self) -> f64 {
        match self.truncation {
            Truncation::Exact => 0.0,
            Truncation::Truncated { tail_mass_bound, .. } => tail_mass_bound,
        }
    }

    /// Untruncated probabilities of the enumerated configurations.
    pub fn exact_masses(&self) -> Vec<f64> {
        match self.truncation {
            Truncation::Exact => self.probs.clone(),
            Truncation::Truncated { retained_mass, .. } => self.probs.iter().map(|p| p * retained_mass).collect(),
        }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    fn same_space(&self, other: &ProcessLaw) -> Result<()> {
        if !Arc::ptr_eq(&self.index, &other.index)
            && (self.index.k != other.index.k || self.index.cap != other.index.cap)
        {
            return input("laws live on different configuration spaces");
        }
        Ok(())
    }

    /// `Σ_ξ p(ξ) f(ξ)`.
    pub fn expect(&self, f: impl Fn(&Counts) -> f64) -> f64 {
        self.probs
            .iter()
            .zip(self.index.configs())
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, c)| p * f(c))
            .sum()
    }

    /// `index,configuration,probability` with counts separated by spaces.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,configuration,probability\n");
        for (i, (c, p)) in self.index.configs().iter().zip(&self.probs).enumerate() {
            let counts: Vec<String> = c.as_slice().iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{i},{},{p}", counts.join(" "));
        }
        out
    }
}

/// `H(Π | reference)` using the reference's untruncated point masses.
pub fn law_relative_entropy(pi: &ProcessLaw, reference: &ProcessLaw) -> Result<f64> {
    pi.same_space(reference)?;
    Ok(entropy_sum(&pi.probs, &reference.exact_masses()))
}

/// Total variation between two laws on the same enumeration.
pub fn law_tv(a: &ProcessLaw, b: &ProcessLaw) -> Result<f64> {
    a.same_space(b)?;
    Ok(0.5 * a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `log(n!/Π ξ(z)! · Π μ(z)^{ξ(z)})`, `-∞` if a charged point has `μ = 0`.
fn ln_multinomial(xi: &Counts, mu: &[f64]) -> f64 {
    let n = xi.mass() as u32;
    let mut v = ln_factorial(n);
    for (&c, &m) in xi.as_slice().iter().zip(mu) {
        if c > 0 {
            if m <= 0.0 {
                return f64::NEG_INFINITY;
            }
            v += c as f64 * m.ln() - ln_factorial(c);
        }
    }
    v
}

/// Law of `Σ_{i≤K} δ_{X_i}` with `X_i ~ μ` i.i.d. and `K ~ κ` on `{0..N}`.
pub fn mixed_binomial_law(
    mu: &DiscreteMeasure,
    kappa: &DiscreteMeasure,
    index: Arc<ConfigurationSpaceIndex>,
) -> Result<ProcessLaw> {
    if !mu.is_probability() || !kappa.is_probability() {
        return input("mixed binomial law needs probability measures");
    }
    check_len(index.k(), mu.len())?;
    let cap = index.cap() as usize;
    if kappa.weights().iter().skip(cap + 1).any(|w| *w > 0.0) {
        return input(format!("kappa charges masses above the cap {cap}"));
    }
    let kw = kappa.weights();
    let probs: Vec<f64> = index
        .configs()
        .iter()
        .map(|xi| {
            let n = xi.mass() as usize;
            let kn = kw.get(n).copied().unwrap_or(0.0);
            if kn == 0.0 {
                0.0
            } else {
                kn * ln_multinomial(xi, mu.weights()).exp()
            }
        })
        .collect();
    let m = DiscreteMeasure::probability_with_tol(probs, 1e-10)?;
    Ok(ProcessLaw {
        index,
        probs: m.weights().to_vec(),
        truncation: Truncation::Exact,
        provenance: Provenance::MixedBinomial {
            mu: mu.weights().to_vec(),
            kappa: kw.to_vec(),
        },
    })
}

/// Binomial process with exactly `n` points.
pub fn binomial_law(mu: &DiscreteMeasure, n: u32, index: Arc<ConfigurationSpaceIndex>) -> Result<ProcessLaw> {
    let kappa = DiscreteMeasure::dirac(n as usize + 1, n as usize)?;
    mixed_binomial_law(mu, &kappa, index)
}

/// `P(Poi(λ) > N)`, summed directly so tiny tails keep relative precision.
pub fn poisson_tail(lambda: f64, cap: u32) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let mut term = (-lambda + (cap as f64 + 1.0) * lambda.ln() - ln_factorial(cap + 1)).exp();
    let mut total = 0.0;
    let mut n = cap as f64 + 1.0;
    while term > 1e-300 && (term > total * 1e-17 || n < lambda) {
        total += term;
        n += 1.0;
        term *= lambda / n;
        if n > cap as f64 + 1e6 {
            break;
        }
    }
    total.min(1.0)
}

/// Truncated Poisson probabilities `P(K = n)`, `n ≤ N`, before renormalizing.
pub fn poisson_pmf(lambda: f64, cap: u32) -> Vec<f64> {
    (0..=cap)
        .map(|n| {
            if lambda == 0.0 {
                if n == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (-lambda + n as f64 * lambda.ln() - ln_factorial(n)).exp()
            }
        })
        .collect()
}

/// Smallest cap with Poisson tail at most `tail`.
pub fn default_cap(total_intensity: f64, tail: f64) -> u32 {
    let mut cap = 0;
    while poisson_tail(total_intensity, cap) > tail {
        cap += 1;
    }
    cap
}

/// Poisson process with finite intensity `ν`, truncated to the index cap.
pub fn poisson_law(nu: &DiscreteMeasure, index: Arc<ConfigurationSpaceIndex>) -> Result<ProcessLaw> {
    check_len(index.k(), nu.len())?;
    let w = nu.weights();
    let total = nu.total();
    let raw: Vec<f64> = index
        .configs()
        .iter()
        .map(|xi| {
            let mut v = -total;
            for (&c, &l) in xi.as_slice().iter().zip(w) {
                if c > 0 {
                    if l <= 0.0 {
                        return 0.0;
                    }
                    v += c as f64 * l.ln() - ln_factorial(c);
                }
            }
            v.exp()
        })
        .collect();
    let retained: f64 = raw.iter().sum();
    let tail = poisson_tail(total, index.cap());
    let probs = raw.iter().map(|p| p / retained).collect();
    let truncation = if tail > 0.0 {
        Truncation::Truncated {
            retained_mass: retained,
            tail_mass_bound: tail,
        }
    } else {
        Truncation::Exact
    };
    Ok(ProcessLaw {
        index,
        probs,
        truncation,
        provenance: Provenance::Poisson { intensity: w.to_vec() },
    })
}

/// Poisson law on an index whose cap keeps the tail below [`DEFAULT_TAIL`].
pub fn poisson_law_default(nu: &DiscreteMeasure) -> Result<ProcessLaw> {
    let cap = default_cap(nu.total(), DEFAULT_TAIL);
    poisson_law(nu, Arc::new(ConfigurationSpaceIndex::new(nu.len(), cap)?))
}

/// Distribution of the total mass on `{0..N}`.
pub fn mass_law(law: &ProcessLaw) -> DiscreteMeasure {
    let cap = law.index.cap();
    let w: Vec<f64> = (0..=cap).map(|n| law.index.mass_range(n).map(|i| law.probs[i]).sum()).collect();
    DiscreteMeasure::normalized(w).expect("a law has positive total mass")
}

/// Law conditioned on total mass `n`.
pub fn condition_on_mass(law: &ProcessLaw, n: u32) -> Result<ProcessLaw> {
    let range = law.index.mass_range(n);
    let mass: f64 = range.clone().map(|i| law.probs[i]).sum();
    if !(mass > 0.0) {
        return input(format!("mass {n} has probability zero"));
    }
    let mut probs = vec![0.0; law.probs.len()];
    for i in range {
        probs[i] = law.probs[i] / mass;
    }
    let provenance = match &law.provenance {
        Provenance::MixedBinomial { mu, .. } | Provenance::Poisson { intensity: mu } => {
            let total: f64 = mu.iter().sum();
            let mut kappa = vec![0.0; n as usize + 1];
            kappa[n as usize] = 1.0;
            Provenance::MixedBinomial {
                mu: mu.iter().map(|v| v / total).collect(),
                kappa,
            }
        }
        Provenance::Custom => Provenance::Custom,
    };
    Ok(ProcessLaw {
        index: law.index.clone(),
        probs,
        truncation: Truncation::Exact,
        provenance,
    })
}

/// Both sides of the entropy chain rule over the total mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRuleReport {
    pub total: f64,
    pub mass_term: f64,
    /// `(n, P(mass = n), H(Π^n | B^n))` for every charged mass.
    pub conditional_terms: Vec<(u32, f64, f64)>,
    pub decomposed: f64,
    pub difference: f64,
    pub infinite: bool,
    pub holds: bool,
}

/// Checks `H(Π|B) = H(λ_Π|λ_B) + Σ_n λ_Π(n) H(Π^n|B^n)` within 1e-9.
pub fn chain_rule_check(pi: &ProcessLaw, b: &ProcessLaw) -> Result<ChainRuleReport> {
    pi.same_space(b)?;
    let total = entropy_sum(&pi.probs, &b.probs);
    let lam_pi = mass_law(pi);
    let lam_b = mass_law(b);
    let mass_term = entropy_sum(lam_pi.weights(), lam_b.weights());
    let mut conditional_terms = Vec::new();
    let mut decomposed = mass_term;
    for n in 0..=pi.index.cap() {
        let w = lam_pi.weights()[n as usize];
        if w > 0.0 {
            let range = pi.index.mass_range(n);
            let bn = lam_b.weights()[n as usize];
            let h = if bn > 0.0 {
                let p: Vec<f64> = range.clone().map(|i| pi.probs[i] / w).collect();
                let q: Vec<f64> = range.map(|i| b.probs[i] / bn).collect();
                entropy_sum(&p, &q)
            } else {
                f64::INFINITY
            };
            decomposed += w * h;
            conditional_terms.push((n, w, h));
        }
    }
    let infinite = !total.is_finite() || !decomposed.is_finite();
    let difference = if infinite { 0.0 } else { total - decomposed };
    let holds = if infinite {
        total.is_finite() == decomposed.is_finite()
    } else {
        difference.abs() <= 1e-9
    };
    Ok(ChainRuleReport {
        total,
        mass_term,
        conditional_terms,
        decomposed,
        difference,
        infinite,
        holds,
    })
}

fn binomial_pmf_row(n: u32, t: f64) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            if t == 0.0 {
                return if j == 0 { 1.0 } else { 0.0 };
            }
            if t == 1.0 {
                return if j == n { 1.0 } else { 0.0 };
            }
            (ln_factorial(n) - ln_factorial(j) - ln_factorial(n - j) + j as f64 * t.ln() + (n - j) as f64 * (1.0 - t).ln())
                .exp()
        })
        .collect()
}

/// Exact law after keeping each point independently with probability `t`.
pub fn thin_law(law: &ProcessLaw, t: f64) -> Result<ProcessLaw> {
    if !(0.0..=1.0).contains(&t) {
        return input(format!("thinning parameter must lie in [0,1], got {t}"));
    }
    let idx = &law.index;
    let mut out = vec![0.0; idx.len()];
    let rows: Vec<Vec<f64>> = (0..=idx.cap()).map(|n| binomial_pmf_row(n, t)).collect();
    let k = idx.k();
    for (i, xi) in idx.configs().iter().enumerate() {
        let p = law.probs[i];
        if p == 0.0 {
            continue;
        }
        // Odometer over χ ≤ ξ.
        let mut chi = vec![0u32; k];
        loop {
            let mut w = p;
            for z in 0..k {
                w *= rows[xi.get(z) as usize][chi[z] as usize];
            }
            if w > 0.0 {
                let j = idx.index_of(&Counts(chi.clone())).expect("sub-configuration is enumerated");
                out[j] += w;
            }
            let mut z = 0;
            while z < k {
                if chi[z] < xi.get(z) {
                    chi[z] += 1;
                    break;
                }
                chi[z] = 0;
                z += 1;
            }
            if z == k {
                break;
            }
        }
    }
    let provenance = match &law.provenance {
        Provenance::Poisson { intensity } if matches!(law.truncation, Truncation::Exact) => Provenance::Poisson {
            intensity: intensity.iter().map(|v| v * t).collect(),
        },
        _ => Provenance::Custom,
    };
    let m = DiscreteMeasure::normalized(out)?;
    Ok(ProcessLaw {
        index: law.index.clone(),
        probs: m.weights().to_vec(),
        truncation: law.truncation,
        provenance,
    })
}

/// One draw of a mixed binomial process on a finite space.
pub fn sample_mixed_binomial<R: Rng>(mu: &DiscreteMeasure, kappa: &DiscreteMeasure, rng: &mut R) -> Result<Counts> {
    let n_dist = WeightedIndex::new(kappa.weights()).map_err(|e| Error::Input(e.to_string()))?;
    let x_dist = WeightedIndex::new(mu.weights()).map_err(|e| Error::Input(e.to_string()))?;
    let n = n_dist.sample(rng);
    let mut counts = vec![0u32; mu.len()];
    for _ in 0..n {
        counts[x_dist.sample(rng)] += 1;
    }
    Ok(Counts(counts))
}

/// One draw of a Poisson process with finite intensity on a finite space.
pub fn sample_poisson<R: Rng>(nu: &DiscreteMeasure, rng: &mut R) -> Result<Counts> {
    let counts = nu
        .weights()
        .iter()
        .map(|&l| {
            if l == 0.0 {
                Ok(0)
            } else {
                let d = Poisson::new(l).map_err(|e| Error::Input(e.to_string()))?;
                Ok(d.sample(rng) as u32)
            }
        })
        .collect::<Result<Vec<u32>>>()?;
    Ok(Counts(counts))
}

fn uniform_point<R: Rng>(domain: &EuclideanBox, rng: &mut R) -> Vec<f64> {
    domain
        .lower
        .iter()
        .zip(&domain.upper)
        .map(|(l, u)| rng.gen_range(*l..*u))
        .collect()
}

/// Poisson process with intensity `rate · Lebesgue` on a box.
pub fn sample_poisson_box<R: Rng>(rate: f64, domain: &EuclideanBox, rng: &mut R) -> Result<PointSet> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return input(format!("intensity rate must be finite and nonnegative, got {rate}"));
    }
    let mean = rate * domain.volume();
    let n = if mean == 0.0 {
        0
    } else {
        Poisson::new(mean).map_err(|e| Error::Input(e.to_string()))?.sample(rng) as usize
    };
    let pts = (0..n).map(|_| uniform_point(domain, rng)).collect();
    PointSet::from_points(domain.dimension(), pts)
}

/// Mixed binomial process with uniform points on a box and `K ~ κ`.
pub fn sample_mixed_binomial_box<R: Rng>(kappa: &DiscreteMeasure, domain: &EuclideanBox, rng: &mut R) -> Result<PointSet> {
    let n = WeightedIndex::new(kappa.weights())
        .map_err(|e| Error::Input(e.to_string()))?
        .sample(rng);
    let pts = (0..n).map(|_| uniform_point(domain, rng)).collect();
    PointSet::from_points(domain.dimension(), pts)
}

/// Keeps each point of `xi` independently with probability `t`.
pub fn thin_counts<R: Rng>(xi: &Counts, t: f64, rng: &mut R) -> Result<Counts> {
    if !(0.0..=1.0).contains(&t) {
        return input("thinning parameter must lie in [0,1]");
    }
    Ok(Counts(
        xi.as_slice()
            .iter()
            .map(|&c| if c == 0 { 0 } else { Binomial::new(c as u64, t).expect("valid binomial").sample(rng) as u32 })
            .collect(),
    ))
}

/// Keeps each point of a Euclidean configuration with probability `t`.
pub fn thin_points<R: Rng>(xi: &PointSet, t: f64, rng: &mut R) -> Result<PointSet> {
    if !(0.0..=1.0).contains(&t) {
        return input("thinning parameter must lie in [0,1]");
    }
    let kept = xi.points().into_iter().filter(|_| rng.gen::<f64>() < t).map(|p| p.0).collect();
    PointSet::from_points(xi.dimension(), kept)
}

/// One JSON document per line.
pub fn to_json_lines<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::stream_rng;

    fn idx(k: usize, cap: u32) -> Arc<ConfigurationSpaceIndex> {
        Arc::new(ConfigurationSpaceIndex::new(k, cap).unwrap())
    }

    #[test]
    fn enumeration_order_and_size() {
        let ix = ConfigurationSpaceIndex::new(2, 2).unwrap();
        let got: Vec<Vec<u32>> = ix.configs().iter().map(|c| c.0.clone()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        for k in 1..5 {
            for cap in 0..6 {
                let ix = ConfigurationSpaceIndex::new(k, cap).unwrap();
                let brute: usize = (0..=cap as usize)
                    .map(|n| {
                        // C(n+k-1, k-1)
                        let mut c = 1usize;
                        for i in 0..k - 1 {
                            c = c * (n + k - 1 - i) / (i + 1);
                        }
                        c
                    })
                    .sum();
                assert_eq!(ix.len(), brute);
                for (i, c) in ix.configs().iter().enumerate() {
                    assert_eq!(ix.index_of(c), Some(i));
                }
            }
        }
    }

    #[test]
    fn mixed_binomial_examples() {
        let ix = idx(2, 2);
        let mu = DiscreteMeasure::uniform(2).unwrap();
        let empty = mixed_binomial_law(&mu, &DiscreteMeasure::dirac(3, 0).unwrap(), ix.clone()).unwrap();
        assert_eq!(empty.prob_of(&Counts(vec![0, 0])), 1.0);
        let mu2 = DiscreteMeasure::probability(vec![0.3, 0.7]).unwrap();
        let one = mixed_binomial_law(&mu2, &DiscreteMeasure::dirac(3, 1).unwrap(), ix.clone()).unwrap();
        assert!((one.prob_of(&Counts(vec![1, 0])) - 0.3).abs() < 1e-15);
        let two = binomial_law(&mu, 2, ix).unwrap();
        assert!((two.prob_of(&Counts(vec![1, 1])) - 0.5).abs() < 1e-15);
        assert!((two.prob_of(&Counts(vec![2, 0])) - 0.25).abs() < 1e-15);
        assert!((two.prob_of(&Counts(vec![0, 2])) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn poisson_examples() {
        let nu = DiscreteMeasure::finite(vec![0.4, 0.9]).unwrap();
        let law = poisson_law(&nu, idx(2, 12)).unwrap();
        let exact_empty = law.exact_masses()[0];
        assert!((exact_empty - (-1.3f64).exp()).abs() < 1e-15);
        assert!((law.tail_bound() - poisson_tail(1.3, 12)).abs() < 1e-20);
        // Poisson = mixed binomial with Poisson(ν(Z)) mass and μ = ν/ν(Z)
        let mu = DiscreteMeasure::normalized(vec![0.4, 0.9]).unwrap();
        let kappa = DiscreteMeasure::normalized(poisson_pmf(1.3, 12)).unwrap();
        let mb = mixed_binomial_law(&mu, &kappa, law.index().clone()).unwrap();
        for (a, b) in law.probabilities().iter().zip(mb.probabilities()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn binomial_against_poisson_entropy() {
        let mu = DiscreteMeasure::probability(vec![0.25, 0.75]).unwrap();
        let ix = idx(2, default_cap(1.0, DEFAULT_TAIL));
        let pois = poisson_law(&mu, ix.clone()).unwrap();
        for n in 0..4u32 {
            let b = binomial_law(&mu, n, ix.clone()).unwrap();
            let h = law_relative_entropy(&b, &pois).unwrap();
            let expected = 1.0 + ln_factorial(n);
            assert!((h - expected).abs() < 1e-9, "n={n}: {h} vs {expected}");
        }
    }

    #[test]
    fn mass_law_and_conditioning() {
        let mu = DiscreteMeasure::probability(vec![0.5, 0.2, 0.3]).unwrap();
        let kappa = DiscreteMeasure::probability(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let ix = idx(3, 3);
        let law = mixed_binomial_law(&mu, &kappa, ix.clone()).unwrap();
        for (a, b) in mass_law(&law).weights().iter().zip(kappa.weights()) {
            assert!((a - b).abs() < 1e-14);
        }
        let pois = poisson_law(&mu, ix.clone()).unwrap();
        let lam = mass_law(&pois);
        let pmf = DiscreteMeasure::normalized(poisson_pmf(1.0, 3)).unwrap();
        for (a, b) in lam.weights().iter().zip(pmf.weights()) {
            assert!((a - b).abs() < 1e-14);
        }
        for n in 0..=3 {
            let c = condition_on_mass(&pois, n).unwrap();
            let b = binomial_law(&mu, n, ix.clone()).unwrap();
            assert!(law_tv(&c, &b).unwrap() < 1e-14);
        }
        let b2 = binomial_law(&mu, 2, ix).unwrap();
        assert!(condition_on_mass(&b2, 1).is_err());
    }

    #[test]
    fn chain_rule_examples() {
        let mu = DiscreteMeasure::probability(vec![0.6, 0.4]).unwrap();
        let kappa = DiscreteMeasure::probability(vec![0.2, 0.3, 0.4, 0.1]).unwrap();
        let ix = idx(2, 3);
        let b = mixed_binomial_law(&mu, &kappa, ix.clone()).unwrap();
        let r = chain_rule_check(&b, &b).unwrap();
        assert!(r.holds && r.total.abs() < 1e-15);
        let xi = Counts(vec![1, 1]);
        let d = ProcessLaw::dirac(ix.clone(), &xi).unwrap();
        let r = chain_rule_check(&d, &b).unwrap();
        assert!(r.holds);
        let bn = binomial_law(&mu, 2, ix).unwrap();
        let expected = -(0.4f64).ln() - bn.prob_of(&xi).ln();
        assert!((r.total - expected).abs() < 1e-12);
    }

    #[test]
    fn thinning_edges_and_poisson_restriction() {
        let nu = DiscreteMeasure::finite(vec![0.5, 0.3]).unwrap();
        let ix = idx(2, 14);
        let law = poisson_law(&nu, ix.clone()).unwrap();
        assert!(law_tv(&thin_law(&law, 1.0).unwrap(), &law).unwrap() < 1e-15);
        let zero = thin_law(&law, 0.0).unwrap();
        assert_eq!(zero.probabilities()[0], 1.0);
        let thinned = thin_law(&law, 0.4).unwrap();
        let direct = poisson_law(&nu.scaled(0.4).unwrap(), ix).unwrap();
        assert!(law_tv(&thinned, &direct).unwrap() < 10.0 * law.tail_bound() + 1e-12);
    }

    #[test]
    fn poisson_counts_factorize() {
        let nu = DiscreteMeasure::finite(vec![0.3, 0.5, 0.2]).unwrap();
        let ix = idx(3, 20);
        let law = poisson_law(&nu, ix.clone()).unwrap();
        let pmf: Vec<Vec<f64>> = nu.weights().iter().map(|&l| poisson_pmf(l, 20)).collect();
        for (i, xi) in ix.configs().iter().enumerate().take(200) {
            let prod: f64 = (0..3).map(|z| pmf[z][xi.get(z) as usize]).product();
            let exact = law.exact_masses()[i];
            assert!((exact - prod).abs() < 1e-15);
        }
    }

    #[test]
    fn sampler_matches_exact_law() {
        let mu = DiscreteMeasure::probability(vec![0.3, 0.7]).unwrap();
        let kappa = DiscreteMeasure::probability(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let ix = idx(2, 3);
        let law = mixed_binomial_law(&mu, &kappa, ix.clone()).unwrap();
        let draws = crate::stats::par_draws(100_000, 5, |rng, _| sample_mixed_binomial(&mu, &kappa, rng).unwrap());
        let mut freq = vec![0.0; ix.len()];
        for d in &draws {
            freq[ix.index_of(d).unwrap()] += 1.0 / draws.len() as f64;
        }
        let tv: f64 = 0.5 * freq.iter().zip(law.probabilities()).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!(tv < 0.02, "{tv}");
        let again = crate::stats::par_draws(10, 5, |rng, _| sample_mixed_binomial(&mu, &kappa, rng).unwrap());
        assert_eq!(&draws[..10], &again[..]);
    }

    #[test]
    fn euclidean_samplers() {
        let dom = EuclideanBox::unit(2).unwrap();
        let mut rng = stream_rng(1, 0);
        let n: f64 = (0..2000).map(|_| sample_poisson_box(5.0, &dom, &mut rng).unwrap().mass() as f64).sum::<f64>() / 2000.0;
        assert!((n - 5.0).abs() < 0.3);
        let xi = sample_poisson_box(50.0, &dom, &mut rng).unwrap();
        assert_eq!(thin_points(&xi, 1.0, &mut rng).unwrap(), xi);
        assert_eq!(thin_points(&xi, 0.0, &mut rng).unwrap().mass(), 0);
        let c = Counts(vec![3, 4]);
        assert_eq!(thin_counts(&c, 1.0, &mut rng).unwrap(), c);
        let lines = to_json_lines(&[c.clone(), c]).unwrap();
        assert_eq!(lines, "[3,4]\n[3,4]\n");
    }

    #[test]
    fn truncation_sensitivity() {
        let mu = DiscreteMeasure::probability(vec![0.5, 0.5]).unwrap();
        let nu = DiscreteMeasure::finite(vec![0.5, 0.5]).unwrap();
        for cap in [4u32, 6, 8] {
            let small = idx(2, cap);
            let large = idx(2, cap + 2);
            let h_small = law_relative_entropy(&binomial_law(&mu, 2, small.clone()).unwrap(), &poisson_law(&nu, small).unwrap()).unwrap();
            let pl = poisson_law(&nu, large.clone()).unwrap();
            let h_large = law_relative_entropy(&binomial_law(&mu, 2, large).unwrap(), &pl).unwrap();
            assert!((h_small - h_large).abs() <= 1e-12);
        }
    }

    #[test]
    fn chain_rule_random_laws() {
        use rand::Rng;
        let ix = idx(2, 3);
        let mu = DiscreteMeasure::probability(vec![0.35, 0.65]).unwrap();
        let kappa = DiscreteMeasure::probability(vec![0.1, 0.3, 0.4, 0.2]).unwrap();
        let b = mixed_binomial_law(&mu, &kappa, ix.clone()).unwrap();
        let mut rng = stream_rng(11, 0);
        for _ in 0..100 {
            let w: Vec<f64> = (0..ix.len()).map(|_| rng.gen::<f64>().powi(3)).collect();
            let pi = ProcessLaw::from_weights(ix.clone(), w).unwrap();
            let r = chain_rule_check(&pi, &b).unwrap();
            assert!(r.holds && r.difference.abs() < 1e-9);
        }
    }

    #[test]
    fn thinned_binomials_approach_poisson() {
        let mu = DiscreteMeasure::uniform(2).unwrap();
        let ix = idx(2, 40);
        let pois = poisson_law(&mu, ix.clone()).unwrap();
        let tv = |n: u32| {
            let b = binomial_law(&mu, n, ix.clone()).unwrap();
            law_tv(&thin_law(&b, 1.0 / n as f64).unwrap(), &pois).unwrap()
        };
        let (t10, t40) = (tv(10), tv(40));
        assert!(t40 < t10 && t40 < 0.02, "{t10} {t40}");
    }
}
