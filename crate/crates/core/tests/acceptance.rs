//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, then a
//! non-zero exit if anything failed. Tolerances are pinned below.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use ppt_core::concentration::{self, TargetSet};
use ppt_core::config::{Counts, Functional};
use ppt_core::experiment::{random_law, random_probability, RandomConvex};
use ppt_core::ground::{AlphaFamily, EuclideanBox, FiniteSpace};
use ppt_core::inequalities::{self, hamming};
use ppt_core::logsob::{self, EntropySpec};
use ppt_core::measures::DiscreteMeasure;
use ppt_core::processes::{self, binomial_law, law_relative_entropy, poisson_law, ConfigurationSpaceIndex, ProcessLaw};
use ppt_core::stats::stream_rng;
use ppt_core::transport::{assignment_cost, marton_cost, weak_transport};

const ASSIGNMENT_TOL: f64 = 1e-9;
const MARTON_TOL: f64 = 1e-5;
const ENTROPY_TOL: f64 = 1e-9;
const CHAIN_RULE_TOL: f64 = 1e-9;
const THINNING_TV_MAX: f64 = 0.02;
const GRADIENT_BOUND_TOL: f64 = 1e-5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed.as_secs_f64() < limit_secs as f64
}

// ---------------------------------------------------------------------------
// Oracles

/// Minimum over all permutations by Heap's algorithm.
fn brute_force_matching(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let eval = |p: &[usize]| -> f64 { (0..n).map(|i| cost[i][p[i]]).sum() };
    let mut best = eval(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Shortest-path closure of random positive edge weights: a metric.
fn random_metric<R: Rng>(rng: &mut R, k: usize) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let w = rng.gen_range(0.1..2.0);
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                if d[i][m] + d[m][j] < d[i][j] {
                    d[i][j] = d[i][m] + d[m][j];
                }
            }
        }
    }
    d
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `Σ p log(p/q)` with the usual conventions.
fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| if *b > 0.0 { a * (a / b).ln() } else { f64::INFINITY })
        .sum()
}

// ---------------------------------------------------------------------------
// Criteria

fn assignment_matches_brute_force() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..200u64 {
        let mut rng = stream_rng(101, i);
        let n = rng.gen_range(1..=7usize);
        let diff = if i % 2 == 0 {
            let metric = random_metric(&mut rng, 5);
            let labels = (0..5).map(|j| j.to_string()).collect();
            let space = FiniteSpace::new(labels, metric).expect("closure is a metric");
            let xi: Vec<usize> = (0..n).map(|_| rng.gen_range(0..5)).collect();
            let chi: Vec<usize> = (0..n).map(|_| rng.gen_range(0..5)).collect();
            let value = assignment_cost(|a: &usize, b: &usize| space.distance(*a, *b), &xi, &chi).0;
            let matrix: Vec<Vec<f64>> = xi.iter().map(|&a| chi.iter().map(|&b| space.distance(a, b)).collect()).collect();
            value - brute_force_matching(&matrix)
        } else {
            let mut draw = || -> Vec<[f64; 2]> { (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect() };
            let xi = draw();
            let chi = draw();
            let dist = |a: &[f64; 2], b: &[f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            let value = assignment_cost(dist, &xi, &chi).0;
            let matrix: Vec<Vec<f64>> = xi.iter().map(|a| chi.iter().map(|b| dist(a, b)).collect()).collect();
            value - brute_force_matching(&matrix)
        };
        worst = worst.max(diff.abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= ASSIGNMENT_TOL && within(elapsed, 30),
        format!("200 pairs, max |diff| = {worst:.2e}, {:.1} s (limit 30 s)", elapsed.as_secs_f64()),
    )
}

fn marton_formula_matches_solver() -> Outcome {
    let diffs: Vec<f64> = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(202, i);
            let k = rng.gen_range(2..=5);
            let nu1 = random_probability(&mut rng, k, 0.2).unwrap();
            let nu2 = random_probability(&mut rng, k, 0.2).unwrap();
            let explicit = marton_cost(&nu1, &nu2).unwrap();
            let solved = weak_transport(&AlphaFamily::Square, &hamming(k), &nu2, &nu1).unwrap().value;
            (explicit - solved).abs()
        })
        .collect();
    let failures = diffs.iter().filter(|d| **d > MARTON_TOL).count();
    let worst = diffs.iter().cloned().fold(0.0, f64::max);
    outcome(failures == 0, format!("500 pairs, {failures} failures, max |diff| = {worst:.2e} (tol {MARTON_TOL:.0e})"))
}

fn binomial_poisson_entropy() -> Outcome {
    let mu = DiscreteMeasure::probability(vec![0.3, 0.7]).unwrap();
    let index = Arc::new(ConfigurationSpaceIndex::new(2, 40).unwrap());
    let reference = poisson_law(&mu, index.clone()).unwrap();
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for n in 0..=3u32 {
        let b = binomial_law(&mu, n, index.clone()).unwrap();
        let h = law_relative_entropy(&b, &reference).unwrap();
        let expected = -((-1.0f64).exp() / (1..=n).map(f64::from).product::<f64>()).ln();
        worst = worst.max((h - expected).abs());
        values.push(format!("n={n}: {h:.9}"));
    }
    outcome(worst <= ENTROPY_TOL, format!("{}; max |diff| = {worst:.1e}", values.join(", ")))
}

fn dembo_base_inequality() -> Outcome {
    let start = Instant::now();
    let results: Vec<(bool, f64)> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(404, i);
            let k = rng.gen_range(2..=5);
            let t = (1 + i % 9) as f64 / 10.0;
            let gamma = random_probability(&mut rng, k, 0.0).unwrap();
            let nu1 = random_probability(&mut rng, k, 0.3).unwrap();
            let nu2 = random_probability(&mut rng, k, 0.3).unwrap();
            let r = inequalities::verify_base_dembo(&gamma, &nu1, &nu2, t).unwrap();
            (r.violated, r.margin)
        })
        .collect();
    let violations = results.iter().filter(|r| r.0).count();
    let min_margin = results.iter().map(|r| r.1).filter(|m| m.is_finite()).fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && within(elapsed, 300),
        format!("1000 instances, {violations} violations, min margin {min_margin:.2e}, {:.1} s", elapsed.as_secs_f64()),
    )
}

fn marton_process_inequality() -> Outcome {
    let start = Instant::now();
    let mu = DiscreteMeasure::probability(vec![0.4, 0.6]).unwrap();
    let index = Arc::new(ConfigurationSpaceIndex::new(2, 3).unwrap());
    let laws: Vec<(&str, ProcessLaw, bool)> = vec![
        ("binomial", binomial_law(&mu, 3, index.clone()).unwrap(), true),
        ("poisson", poisson_law(&mu, index.clone()).unwrap(), false),
    ];
    let mut pairs: Vec<(usize, ProcessLaw, ProcessLaw)> = Vec::new();
    for (li, (_, _, fixed)) in laws.iter().enumerate() {
        let keep = |c: &Counts| !*fixed || c.0.iter().sum::<u32>() == 3;
        let support: Vec<&Counts> = index.configs().iter().filter(|c| keep(c)).collect();
        for a in &support {
            for b in &support {
                pairs.push((li, ProcessLaw::dirac(index.clone(), a).unwrap(), ProcessLaw::dirac(index.clone(), b).unwrap()));
            }
        }
        for i in 0..200u64 {
            let mut rng = stream_rng(505 + li as u64, i);
            let a = random_law(&mut rng, &index, keep, 0.3).unwrap();
            let b = random_law(&mut rng, &index, keep, 0.3).unwrap();
            pairs.push((li, a, b));
        }
    }
    let jobs: Vec<(usize, f64)> = (0..pairs.len()).flat_map(|i| [0.25, 0.5, 0.75].map(|t| (i, t))).collect();
    let results: Vec<(bool, f64)> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let (li, a, b) = &pairs[i];
            let r = inequalities::verify_marton_process(&laws[*li].1, a, b, t).unwrap();
            (r.violated, r.margin)
        })
        .collect();
    let violations = results.iter().filter(|r| r.0).count();
    let min_margin = results.iter().map(|r| r.1).filter(|m| m.is_finite()).fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && within(elapsed, 600),
        format!(
            "{} checks (binomial and Poisson), {violations} violations, min margin {min_margin:.2e}, {:.1} s",
            results.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn chain_rule_identity() -> Outcome {
    let index = Arc::new(ConfigurationSpaceIndex::new(2, 3).unwrap());
    let mu = DiscreteMeasure::probability(vec![0.35, 0.65]).unwrap();
    let kappa = DiscreteMeasure::probability(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let reference = processes::mixed_binomial_law(&mu, &kappa, index.clone()).unwrap();
    let q = reference.probabilities();
    let mut worst: f64 = 0.0;
    let mut library_holds = true;
    for i in 0..100u64 {
        let mut rng = stream_rng(606, i);
        let pi = random_law(&mut rng, &index, |_| true, 0.3).unwrap();
        let p = pi.probabilities();
        let total = kl(p, q);
        let mut decomposed = 0.0;
        let (mut lp, mut lq) = (Vec::new(), Vec::new());
        for n in 0..=3u32 {
            let range: Vec<usize> = (0..index.len()).filter(|&j| index.config(j).0.iter().sum::<u32>() == n).collect();
            let pn: f64 = range.iter().map(|&j| p[j]).sum();
            let qn: f64 = range.iter().map(|&j| q[j]).sum();
            lp.push(pn);
            lq.push(qn);
            if pn > 0.0 {
                let cp: Vec<f64> = range.iter().map(|&j| p[j] / pn).collect();
                let cq: Vec<f64> = range.iter().map(|&j| q[j] / qn).collect();
                decomposed += pn * kl(&cp, &cq);
            }
        }
        decomposed += kl(&lp, &lq);
        let rep = processes::chain_rule_check(&pi, &reference).unwrap();
        library_holds &= rep.holds;
        worst = worst.max((total - decomposed).abs()).max((rep.total - total).abs()).max(rep.difference.abs());
    }
    outcome(
        worst <= CHAIN_RULE_TOL && library_holds,
        format!("100 laws, max |diff| = {worst:.1e} (tol {CHAIN_RULE_TOL:.0e})"),
    )
}

fn thinning_converges() -> Outcome {
    let mu = DiscreteMeasure::probability(vec![0.3, 0.7]).unwrap();
    let mut tvs = Vec::new();
    for n in [5u32, 10, 20, 40] {
        let index = Arc::new(ConfigurationSpaceIndex::new(2, n).unwrap());
        let b = binomial_law(&mu, n, index.clone()).unwrap();
        let thinned = processes::thin_law(&b, 1.0 / n as f64).unwrap();
        let reference = poisson_law(&mu, index).unwrap();
        tvs.push(processes::law_tv(&thinned, &reference).unwrap());
    }
    let decreasing = tvs.windows(2).all(|w| w[1] < w[0]);
    let last = *tvs.last().unwrap();
    let shown: Vec<String> = tvs.iter().map(|v| format!("{v:.4}")).collect();
    outcome(
        decreasing && last < THINNING_TV_MAX,
        format!("TV at n = 5, 10, 20, 40: {} (limit {THINNING_TV_MAX} at n = 40)", shown.join(", ")),
    )
}

fn convex_distance_identity() -> Outcome {
    let rows: Vec<(f64, bool)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(808, i);
            let k = rng.gen_range(2..=3);
            let draw = |rng: &mut rand_chacha::ChaCha20Rng| Counts((0..k).map(|_| rng.gen_range(0..=3)).collect());
            let xi = draw(&mut rng);
            let size = rng.gen_range(1..=5);
            let set = TargetSet::finite((0..size).map(|_| draw(&mut rng)).collect()).unwrap();
            let ca = concentration::convex_distance_ca(&xi, &set, &AlphaFamily::HalfSquare).unwrap().value;
            let direct = concentration::sup_inf_da(&xi, &set, 1e-5, 200_000);
            let from_ca = (2.0 * ca).sqrt();
            let mid = 0.5 * (direct.lower + direct.upper);
            let scale = from_ca.max(mid);
            let rel = if scale > 0.0 { (from_ca - mid).abs() / scale } else { 0.0 };
            let bracketed = direct.lower <= from_ca * (1.0 + concentration::DA_REL_TOL) + 1e-12
                && from_ca <= direct.upper * (1.0 + concentration::DA_REL_TOL) + 1e-12;
            (rel, bracketed)
        })
        .collect();
    let worst = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let failures = rows.iter().filter(|r| r.0 > concentration::DA_REL_TOL || !r.1).count();
    outcome(
        failures == 0,
        format!("100 instances, {failures} failures, max relative diff {worst:.1e} (tol {:.0e})", concentration::DA_REL_TOL),
    )
}

fn two_set_bounds() -> Outcome {
    let intensity = 1.5;
    let mu = DiscreteMeasure::probability(vec![0.5, 0.5]).unwrap();
    let index = Arc::new(ConfigurationSpaceIndex::new(2, 4).unwrap());
    let law = poisson_law(&mu.scaled(intensity).unwrap(), index.clone()).unwrap();
    let mut checks = 0;
    let mut violations = 0;
    let mut p_a_error: f64 = 0.0;
    for threshold in [0u64, 1, 2] {
        let members: Vec<Counts> = index.configs().iter().filter(|c| c.0.iter().sum::<u32>() as u64 <= threshold).cloned().collect();
        let set = TargetSet::with_predicate(members, move |c: &Counts| c.0.iter().sum::<u32>() as u64 <= threshold).unwrap();
        let p_a: f64 = (0..=threshold as u32)
            .map(|j| (-intensity as f64).exp() * intensity.powi(j as i32) / ln_factorial(j).exp())
            .sum();
        for t in [0.25, 0.5, 0.75] {
            let rows = concentration::two_set_experiment(&law, &set, t, &[0.25, 0.5, 1.0, 2.0]).unwrap();
            for row in &rows {
                checks += 2;
                violations += row.convex_violated as usize + row.distance_violated as usize;
                p_a_error = p_a_error.max((row.p_a - p_a).abs());
            }
        }
    }
    outcome(
        violations == 0 && p_a_error < 1e-12,
        format!("{checks} checks, {violations} violations, P(A) error {p_a_error:.1e}"),
    )
}

fn edge_count_deviation() -> Outcome {
    let start = Instant::now();
    let (delta, beta) = (8.0, 1.5);
    let r_grid = [25.0, 50.0, 100.0, 150.0, 200.0, 300.0];
    let stat = concentration::edge_kernel(0.2).unwrap();
    let domain = EuclideanBox::unit(2).unwrap();
    let rep = concentration::br_experiment(&stat, 20.0, &domain, delta, beta, &r_grid, 10_000, 1010).unwrap();
    let elapsed = start.elapsed();
    let informative = rep.rows.iter().filter(|r| r.bound < 1.0).count();
    outcome(
        rep.hypothesis_holds && !rep.violated() && within(elapsed, 300),
        format!(
            "1e4 samples, delta {delta}, beta {beta}: hypothesis {} (worst ratio {:.2}), {} tail violations, {informative}/{} bounds below 1, {:.1} s",
            if rep.hypothesis_holds { "holds" } else { "fails" },
            rep.worst_ratio,
            rep.rows.iter().filter(|r| r.violated).count(),
            rep.rows.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn logsob_rc_inequality() -> Outcome {
    let mu = DiscreteMeasure::probability(vec![0.5, 0.5]).unwrap();
    let index = Arc::new(ConfigurationSpaceIndex::new(2, 4).unwrap());
    let law = poisson_law(&mu, index.clone()).unwrap();
    let jobs: Vec<(u64, f64)> = (0..50u64).flat_map(|i| [0.25, 0.5, 0.75].map(|l| (i, l))).collect();
    let results: Vec<(bool, f64)> = jobs
        .par_iter()
        .map(|&(i, lambda)| {
            let mut rng = stream_rng(1111, i);
            let vals: Vec<f64> = (0..index.len()).map(|_| rng.gen_range(-2.0..=2.0)).collect();
            let lookup = index.clone();
            let f = Functional::new("random", move |c: &Counts| lookup.index_of(c).map_or(0.0, |j| vals[j]));
            let r = logsob::verify_logsob_rc(&law, &f, lambda, EntropySpec::Standard).unwrap();
            (r.violated, r.margin)
        })
        .collect();
    let violations = results.iter().filter(|r| r.0).count();
    let min_margin = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    outcome(violations == 0, format!("150 checks, {violations} violations, min margin {min_margin:.2e}"))
}

fn gradient_bound() -> Outcome {
    let index = ConfigurationSpaceIndex::new(3, 3).unwrap();
    let simple: Vec<Counts> = index.configs().iter().filter(|c| c.is_simple()).cloned().collect();
    let rows: Vec<(f64, f64)> = (0..20u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let f = RandomConvex::draw(&mut stream_rng(1212, i), 3).functional();
            simple.iter().map(|xi| logsob::rc_gradient_bound(&f, &index, xi, 1.0).unwrap()).collect::<Vec<_>>()
        })
        .collect();
    let failures = rows.iter().filter(|(lhs, rhs)| lhs > &(rhs + GRADIENT_BOUND_TOL)).count();
    let min_margin = rows.iter().map(|(l, r)| r - l).fold(f64::INFINITY, f64::min);
    outcome(
        failures == 0,
        format!("{} checks over {} simple configurations, {failures} failures, min margin {min_margin:.2e}", rows.len(), simple.len()),
    )
}

fn gaussian_lift() -> Outcome {
    // Exact in integers: n (m1 - m2)^2 <= n (m1^2 + m2^2).
    let mut failures = Vec::new();
    let mut checks = 0;
    for m1 in -2i64..=2 {
        for m2 in -2i64..=2 {
            for n in 1i64..=5 {
                checks += 1;
                let lhs = n * (m1 - m2) * (m1 - m2);
                let rhs = n * (m1 * m1 + m2 * m2);
                let report = inequalities::gaussian_talagrand_lift(m1 as f64, m2 as f64, n as u32, 2.0);
                assert_eq!(report.lhs, lhs as f64);
                assert_eq!(report.rhs, rhs as f64);
                if lhs > rhs {
                    failures.push((m1, m2, n));
                }
            }
        }
    }
    // For context only: with a = 4 the rhs is 2n(m1^2 + m2^2), which always dominates.
    let holds_with_four = (-2i64..=2).all(|m1| (-2i64..=2).all(|m2| (m1 - m2).pow(2) <= 2 * (m1 * m1 + m2 * m2)));
    let worst = failures.iter().find(|f| f.2 == 1).map(|f| format!(" e.g. m1={}, m2={}, n=1: {} > {}", f.0, f.1, (f.0 - f.1).pow(2), f.0 * f.0 + f.1 * f.1));
    outcome(
        failures.is_empty(),
        format!(
            "{checks} grid points, {} with lhs > rhs{}; with a = 4 the bound holds: {holds_with_four}",
            failures.len(),
            worst.unwrap_or_default()
        ),
    )
}

fn list_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn cli_determinism() -> Outcome {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/all_kinds.json");
    let tmp = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for (i, jobs) in ["1", "4", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        let status = Command::new(env!("CARGO_BIN_EXE_ppt"))
            .args(["run"])
            .arg(&config)
            .args(["--seed", "99", "--jobs", jobs, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(false, format!("run {i} exited with {:?}", status.status.code()));
        }
        runs.push(list_files(&out));
    }
    let csvs = runs[0].iter().filter(|(n, _)| n.ends_with(".csv")).count();
    let identical = runs.windows(2).all(|w| w[0] == w[1]);
    outcome(identical && csvs > 0, format!("3 runs (jobs 1, 4, 4), {csvs} CSV files, byte-identical: {identical}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("assignment equals brute-force matching", assignment_matches_brute_force),
        ("Marton formula equals weak transport solve", marton_formula_matches_solver),
        ("binomial vs Poisson relative entropy", binomial_poisson_entropy),
        ("universal base inequality", dembo_base_inequality),
        ("universal process inequality", marton_process_inequality),
        ("entropy chain rule", chain_rule_identity),
        ("thinning converges to Poisson", thinning_converges),
        ("c_A = d_A^2 / 2", convex_distance_identity),
        ("two-set concentration bounds", two_set_bounds),
        ("edge-count deviation bounds", edge_count_deviation),
        ("modified log-Sobolev inequality", logsob_rc_inequality),
        ("F - R_c F gradient bound", gradient_bound),
        ("Gaussian lift with rhs n(m1^2 + m2^2)", gaussian_lift),
        ("CLI reruns are byte-identical", cli_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("[{}] {:2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
