//! Ground spaces, base cost functions and the scalar convex families used by
//! every transport cost in the crate.
//!
//! Extended reals are plain `f64` with `f64::INFINITY` standing for `+∞`.
//! The only non-IEEE rule needed is `0 · ∞ = 0`, provided by [`ext_mul`].

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Threshold below which `t` (or `1 - t`) switches `α_t` to its limit formula.
pub const DEMBO_LIMIT_EPS: f64 = 1e-9;

/// Product on `[0, ∞]` with the convention `0 · ∞ = 0`.
pub fn ext_mul(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// A finite metric space with labelled points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteSpace {
    labels: Vec<String>,
    metric: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FiniteSpaceJson {
    labels: Vec<String>,
    metric: Vec<Vec<f64>>,
}

impl FiniteSpace {
    /// Builds a finite space, rejecting any matrix that is not a metric.
    pub fn new(labels: Vec<String>, metric: Vec<Vec<f64>>) -> Result<Self> {
        let k = labels.len();
        if k == 0 {
            return input("finite space needs at least one point");
        }
        if metric.len() != k || metric.iter().any(|row| row.len() != k) {
            return input(format!("metric must be {k}x{k}"));
        }
        let scale = metric
            .iter()
            .flatten()
            .fold(0.0f64, |m, &v| if v.is_finite() { m.max(v) } else { m });
        let tol = 1e-12 * (1.0 + scale);
        for i in 0..k {
            if metric[i][i] != 0.0 {
                return input(format!("metric diagonal entry {i} is not zero"));
            }
            for j in 0..k {
                let d = metric[i][j];
                if !(d >= 0.0) || !d.is_finite() {
                    return input(format!("metric entry ({i},{j}) = {d} is not a finite nonnegative number"));
                }
                if (d - metric[j][i]).abs() > tol {
                    return input(format!("metric is not symmetric at ({i},{j})"));
                }
            }
        }
        for i in 0..k {
            for j in 0..k {
                for m in 0..k {
                    if metric[i][j] > metric[i][m] + metric[m][j] + tol {
                        return input(format!(
                            "triangle inequality fails: d({i},{j}) > d({i},{m}) + d({m},{j})"
                        ));
                    }
                }
            }
        }
        Ok(Self { labels, metric })
    }

    /// The discrete metric `1_{x≠y}` on `k` points labelled `0..k`.
    pub fn discrete(k: usize) -> Result<Self> {
        let labels = (0..k).map(|i| i.to_string()).collect();
        let metric = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        Self::new(labels, metric)
    }

    /// Euclidean distances between the given points.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let labels = (0..points.len()).map(|i| i.to_string()).collect();
        let metric = points
            .iter()
            .map(|a| points.iter().map(|b| euclidean(a, b)).collect())
            .collect();
        Self::new(labels, metric)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: FiniteSpaceJson = serde_json::from_str(text)?;
        Self::new(raw.labels, raw.metric)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric[i][j]
    }

    pub fn metric(&self) -> &[Vec<f64>] {
        &self.metric
    }
}

/// An axis-aligned box in `ℝ^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuclideanBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl EuclideanBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return input("box bounds must be nonempty and of equal dimension");
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return input("box must have finite bounds with lower < upper");
        }
        Ok(Self { lower, upper })
    }

    /// The unit cube `[0,1]^d`.
    pub fn unit(dimension: usize) -> Result<Self> {
        Self::new(vec![0.0; dimension], vec![1.0; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }
}

/// The space `Z`: either a finite metric space or a Euclidean box.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundSpace {
    Finite(FiniteSpace),
    Euclidean(EuclideanBox),
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Base cost `ω(x, y)` (or `ρ(x, y)`) on pairs of ground points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum CostFunction {
    Hamming,
    SquaredDistance,
    DistancePower(f64),
    CustomMatrix(Vec<Vec<f64>>),
}

impl CostFunction {
    fn validate(&self) -> Result<()> {
        match self {
            CostFunction::DistancePower(p) if !(*p > 0.0) => {
                input(format!("distance power must be positive, got {p}"))
            }
            CostFunction::CustomMatrix(m) => {
                if m.iter().flatten().any(|v| !(*v >= 0.0)) {
                    input("custom cost matrix must be nonnegative")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Full cost matrix on a finite space.
    pub fn matrix(&self, space: &FiniteSpace) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let k = space.len();
        if let CostFunction::CustomMatrix(m) = self {
            if m.len() != k || m.iter().any(|r| r.len() != k) {
                return Err(Error::LengthMismatch {
                    expected: k,
                    got: m.len(),
                });
            }
            return Ok(m.clone());
        }
        Ok((0..k)
            .map(|i| (0..k).map(|j| self.from_distance(i == j, space.distance(i, j))).collect())
            .collect())
    }

    fn from_distance(&self, same: bool, d: f64) -> f64 {
        match self {
            CostFunction::Hamming => {
                if same {
                    0.0
                } else {
                    1.0
                }
            }
            CostFunction::SquaredDistance => d * d,
            CostFunction::DistancePower(p) => d.powf(*p),
            CostFunction::CustomMatrix(_) => unreachable!("custom costs have no distance form"),
        }
    }

    /// Cost between two Euclidean points. Custom matrices are rejected.
    pub fn eval_points(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.validate()?;
        if let CostFunction::CustomMatrix(_) = self {
            return input("custom matrix costs only apply to finite spaces");
        }
        Ok(match self {
            CostFunction::SquaredDistance => squared_euclidean(a, b),
            _ => self.from_distance(a == b, euclidean(a, b)),
        })
    }
}

/// Convex nondecreasing `α` with `α(0) = 0`, applied to conditional costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum AlphaFamily {
    /// The interpolating family `α_t`, `t ∈ [0, 1]`, on `[0, 1]`.
    Dembo(f64),
    /// `u²`.
    Square,
    /// `u²/2`.
    HalfSquare,
    /// Linear interpolation of samples; validated, never assumed, convex.
    CustomConvex(PiecewiseLinear),
}

/// Samples `(u_i, v_i)` with `u_0 = 0`, `v_0 = 0` and increasing `u_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return input("custom alpha needs at least two (u, value) samples");
        }
        if knots[0] != 0.0 || values[0] != 0.0 {
            return input("custom alpha must start at (0, 0)");
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return input("custom alpha knots must be strictly increasing");
        }
        let slopes: Vec<f64> = (1..knots.len())
            .map(|i| (values[i] - values[i - 1]) / (knots[i] - knots[i - 1]))
            .collect();
        if slopes.iter().any(|s| *s < -1e-12) {
            return input("custom alpha must be nondecreasing");
        }
        if slopes.windows(2).any(|w| w[1] < w[0] - 1e-12) {
            return input("custom alpha samples are not convex");
        }
        Ok(Self { knots, values })
    }

    fn segment(&self, u: f64) -> Option<usize> {
        let last = *self.knots.last()?;
        if u > last {
            return None;
        }
        let i = self.knots.partition_point(|k| *k <= u);
        Some(i.clamp(1, self.knots.len() - 1) - 1)
    }

    fn value(&self, u: f64) -> f64 {
        match self.segment(u) {
            None => f64::INFINITY,
            Some(i) => {
                let (u0, u1) = (self.knots[i], self.knots[i + 1]);
                let (v0, v1) = (self.values[i], self.values[i + 1]);
                v0 + (v1 - v0) * (u - u0) / (u1 - u0)
            }
        }
    }

    fn slope(&self, u: f64) -> f64 {
        match self.segment(u) {
            None => f64::INFINITY,
            Some(i) => (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i]),
        }
    }
}

impl AlphaFamily {
    /// Checks parameters, then runs the finite-difference convexity test.
    pub fn validate(&self) -> Result<()> {
        if let AlphaFamily::Dembo(t) = self {
            if !(0.0..=1.0).contains(t) {
                return input(format!("dembo parameter t must lie in [0,1], got {t}"));
            }
        }
        if let AlphaFamily::CustomConvex(p) = self {
            PiecewiseLinear::new(p.knots.clone(), p.values.clone())?;
        }
        self.check_convexity(1000)
    }

    /// Right end of the effective domain.
    pub fn upper(&self) -> f64 {
        match self {
            AlphaFamily::Dembo(_) => 1.0,
            AlphaFamily::Square | AlphaFamily::HalfSquare => f64::INFINITY,
            AlphaFamily::CustomConvex(p) => *p.knots.last().unwrap_or(&0.0),
        }
    }

    /// `α(u)`; `+∞` outside the domain. Round-off excursions of `1e-12`
    /// below zero or above the domain end are clamped.
    pub fn value(&self, u: f64) -> f64 {
        let u = self.clamp(u);
        if u.is_nan() {
            return f64::INFINITY;
        }
        match self {
            AlphaFamily::Dembo(t) => dembo_value(*t, u),
            AlphaFamily::Square => u * u,
            AlphaFamily::HalfSquare => 0.5 * u * u,
            AlphaFamily::CustomConvex(p) => p.value(u),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let u = self.clamp(u);
        if u.is_nan() {
            return f64::INFINITY;
        }
        match self {
            AlphaFamily::Dembo(t) => dembo_derivative(*t, u),
            AlphaFamily::Square => 2.0 * u,
            AlphaFamily::HalfSquare => u,
            AlphaFamily::CustomConvex(p) => p.slope(u),
        }
    }

    pub fn second_derivative(&self, u: f64) -> f64 {
        let u = self.clamp(u);
        if u.is_nan() {
            return f64::INFINITY;
        }
        match self {
            AlphaFamily::Dembo(t) => {
                if u >= 1.0 {
                    f64::INFINITY
                } else {
                    1.0 / ((1.0 - u) * (1.0 - t * u))
                }
            }
            AlphaFamily::Square => 2.0,
            AlphaFamily::HalfSquare => 1.0,
            AlphaFamily::CustomConvex(_) => 0.0,
        }
    }

    fn clamp(&self, u: f64) -> f64 {
        let hi = self.upper();
        if u < 0.0 {
            if u > -1e-12 {
                0.0
            } else {
                f64::NAN
            }
        } else if u > hi && u <= hi + 1e-12 {
            hi
        } else if u > hi {
            f64::NAN
        } else {
            u
        }
    }

    /// Convex, nondecreasing and zero at zero on a grid of `[0, min(1, upper)]`.
    pub fn check_convexity(&self, points: usize) -> Result<()> {
        let hi = self.upper().min(1.0);
        // Stay off the singular endpoint of α_1.
        let hi = if matches!(self, AlphaFamily::Dembo(t) if *t > 1.0 - DEMBO_LIMIT_EPS) {
            hi * (1.0 - 1e-6)
        } else {
            hi
        };
        if self.value(0.0).abs() > 1e-12 {
            return input("alpha(0) must be 0");
        }
        let h = hi / points as f64;
        let vals: Vec<f64> = (0..=points).map(|i| self.value(i as f64 * h)).collect();
        for w in vals.windows(2) {
            if w[1] < w[0] - 1e-12 {
                return input("alpha is not nondecreasing on its grid");
            }
        }
        for w in vals.windows(3) {
            if w[0] - 2.0 * w[1] + w[2] < -1e-10 {
                return input("alpha fails the three-point convexity test");
            }
        }
        Ok(())
    }
}

fn dembo_value(t: f64, u: f64) -> f64 {
    if t < DEMBO_LIMIT_EPS {
        // α_0(u) = (1-u) log(1-u) + u
        if u >= 1.0 {
            return 1.0;
        }
        (1.0 - u) * (-u).ln_1p() + u
    } else if 1.0 - t < DEMBO_LIMIT_EPS {
        // α_1(u) = -u - log(1-u)
        if u >= 1.0 {
            return f64::INFINITY;
        }
        -u - (-u).ln_1p()
    } else {
        let first = if u >= 1.0 { 0.0 } else { t * (1.0 - u) * (-u).ln_1p() };
        let second = (1.0 - t * u) * (-t * u).ln_1p();
        ((first - second) / (t * (1.0 - t))).max(0.0)
    }
}

fn dembo_derivative(t: f64, u: f64) -> f64 {
    if u >= 1.0 {
        return f64::INFINITY;
    }
    if t < DEMBO_LIMIT_EPS {
        -(-u).ln_1p()
    } else if 1.0 - t < DEMBO_LIMIT_EPS {
        u / (1.0 - u)
    } else {
        ((-t * u).ln_1p() - (-u).ln_1p()) / (1.0 - t)
    }
}

/// `α_t(u)` with strict domain checks.
pub fn alpha_t(t: f64, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return input(format!("t must lie in [0,1], got {t}"));
    }
    if !(0.0..=1.0).contains(&u) {
        return input(format!("u must lie in [0,1], got {u}"));
    }
    Ok(dembo_value(t, u))
}

/// Legendre transform of `α_1`: `s - log(1 + s)`.
pub fn alpha1_conjugate(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return input(format!("alpha1 conjugate needs s >= 0, got {s}"));
    }
    Ok(s - s.ln_1p())
}

/// `φ_λ(s) = s/(1-λ) - λ/(1-λ) log(1 + s/λ)`, with `φ_0(s) = s`.
pub fn phi(lambda: f64, s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return input(format!("lambda must lie in [0,1), got {lambda}"));
    }
    if !(s >= 0.0) {
        return input(format!("phi needs s >= 0, got {s}"));
    }
    if lambda == 0.0 {
        return Ok(s);
    }
    Ok(s / (1.0 - lambda) - lambda / (1.0 - lambda) * (s / lambda).ln_1p())
}

/// `φ_w(s) = e^{-s} + s - 1`.
pub fn phi_wu(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return input(format!("phi_wu needs s >= 0, got {s}"));
    }
    Ok((-s).exp_m1() + s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn alpha_t_examples() {
        assert_eq!(alpha_t(0.3, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(alpha_t(1.0, 0.5).unwrap(), -0.5 + 2f64.ln(), epsilon = 1e-12);
        let v = alpha_t(0.5, 0.5).unwrap();
        // direct evaluation of the formula: (0.5*0.5*ln 0.5 - 0.75 ln 0.75) / 0.25
        let direct = (0.25 * 0.5f64.ln() - 0.75 * 0.75f64.ln()) / 0.25;
        assert_abs_diff_eq!(v, direct, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.169899, epsilon = 1e-6);
        assert!(v >= 0.125);
        assert_eq!(alpha_t(1.0, 1.0).unwrap(), f64::INFINITY);
        assert!(alpha_t(1.5, 0.2).is_err());
        assert!(alpha_t(0.5, 1.2).is_err());
    }

    #[test]
    fn alpha_t_continuous_at_limits() {
        for &u in &[0.1, 0.5, 0.9] {
            let near0 = alpha_t(1e-7, u).unwrap();
            let at0 = alpha_t(0.0, u).unwrap();
            assert_abs_diff_eq!(near0, at0, epsilon = 1e-6);
            let near1 = alpha_t(1.0 - 1e-7, u).unwrap();
            let at1 = alpha_t(1.0, u).unwrap();
            assert_abs_diff_eq!(near1, at1, epsilon = 1e-5);
        }
    }

    #[test]
    fn dembo_sandwich_on_grid() {
        for ti in 0..=10 {
            let t = ti as f64 / 10.0;
            for i in 0..10_000 {
                let u = i as f64 / 10_000.0;
                let a_t = alpha_t(t, u).unwrap();
                let a_0 = alpha_t(0.0, u).unwrap();
                assert!(a_t >= a_0 - 1e-12, "t={t} u={u}");
                assert!(a_0 >= u * u / 2.0 - 1e-12, "u={u}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for &t in &[0.0, 0.25, 0.5, 0.9, 1.0] {
            let a = AlphaFamily::Dembo(t);
            for &u in &[0.1, 0.4, 0.8] {
                let fd = (a.value(u + h) - a.value(u - h)) / (2.0 * h);
                assert_abs_diff_eq!(a.derivative(u), fd, epsilon = 1e-6);
                let fd2 = (a.derivative(u + h) - a.derivative(u - h)) / (2.0 * h);
                assert!((a.second_derivative(u) - fd2).abs() < 1e-4 * (1.0 + fd2.abs()));
            }
        }
    }

    fn grid_conjugate(s: f64) -> f64 {
        let mut best = 0.0f64;
        let steps = 100_000;
        for i in 0..steps {
            let u = i as f64 / steps as f64;
            best = best.max(u * s - alpha_t(1.0, u).unwrap());
        }
        best
    }

    #[test]
    fn alpha1_conjugate_matches_grid_legendre() {
        assert_eq!(alpha1_conjugate(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(alpha1_conjugate(1.0).unwrap(), 1.0 - 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(alpha1_conjugate(2.0).unwrap(), 0.901388, epsilon = 1e-6);
        for i in 0..=20 {
            let s = i as f64 * 0.5;
            assert_abs_diff_eq!(alpha1_conjugate(s).unwrap(), grid_conjugate(s), epsilon = 1e-4);
        }
        assert!(alpha1_conjugate(-1.0).is_err());
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(0.5, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(phi_wu(1.0).unwrap(), (-1f64).exp(), epsilon = 1e-12);
        let a = phi(0.5, 10.0).unwrap();
        assert_abs_diff_eq!(a, 20.0 - 21f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(a, 16.9555, epsilon = 1e-4);
        let w = phi_wu(10.0).unwrap();
        assert_abs_diff_eq!(w, 9.0, epsilon = 1e-4);
        assert!(w < a);
        assert_eq!(phi(0.0, 3.0).unwrap(), 3.0);
        assert!(phi(1.0, 1.0).is_err());
    }

    #[test]
    fn phi_families_pass_three_point_convexity() {
        for &lambda in &[0.0, 0.1, 0.5, 0.9] {
            let vals: Vec<f64> = (0..2000).map(|i| phi(lambda, i as f64 * 0.01).unwrap()).collect();
            assert!(vals[0] == 0.0);
            for w in vals.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12);
            }
        }
        let vals: Vec<f64> = (0..2000).map(|i| phi_wu(i as f64 * 0.01).unwrap()).collect();
        for w in vals.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12);
        }
    }

    #[test]
    fn finite_space_validation() {
        assert!(FiniteSpace::discrete(4).is_ok());
        let bad = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        let err = FiniteSpace::new(vec!["a".into(), "b".into(), "c".into()], bad).unwrap_err();
        assert!(err.to_string().contains("triangle"));
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(FiniteSpace::new(vec!["a".into(), "b".into()], asym).is_err());
        let diag = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        assert!(FiniteSpace::new(vec!["a".into(), "b".into()], diag).is_err());
    }

    #[test]
    fn finite_space_json_round_trip() {
        let text = r#"{"labels": ["a", "b"], "metric": [[0, 2], [2, 0]]}"#;
        let space = FiniteSpace::from_json(text).unwrap();
        assert_eq!(space.distance(0, 1), 2.0);
        let back = FiniteSpace::from_json(&space.to_json().unwrap()).unwrap();
        assert_eq!(back, space);
        assert!(FiniteSpace::from_json(r#"{"labels": ["a"], "metric": [[0]], "x": 1}"#).is_err());
    }

    #[test]
    fn cost_matrices() {
        let space = FiniteSpace::from_points(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(CostFunction::Hamming.matrix(&space).unwrap()[0][1], 1.0);
        assert_eq!(CostFunction::SquaredDistance.matrix(&space).unwrap()[0][1], 4.0);
        assert_eq!(CostFunction::DistancePower(3.0).matrix(&space).unwrap()[1][0], 8.0);
        assert!(CostFunction::CustomMatrix(vec![vec![0.0, -1.0], vec![0.0, 0.0]])
            .matrix(&space)
            .is_err());
        assert_eq!(CostFunction::SquaredDistance.eval_points(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn custom_alpha_is_validated() {
        let ok = PiecewiseLinear::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.1, 0.5]).unwrap();
        let a = AlphaFamily::CustomConvex(ok);
        a.validate().unwrap();
        assert_abs_diff_eq!(a.value(0.75), 0.3, epsilon = 1e-12);
        assert_eq!(a.value(1.5), f64::INFINITY);
        assert!(PiecewiseLinear::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.4, 0.5]).is_err());
        assert!(AlphaFamily::Dembo(1.2).validate().is_err());
        for t in [0.0, 0.3, 1.0] {
            AlphaFamily::Dembo(t).validate().unwrap();
        }
    }

    #[test]
    fn ext_mul_zero_times_infinity() {
        assert_eq!(ext_mul(0.0, f64::INFINITY), 0.0);
        assert_eq!(ext_mul(f64::INFINITY, 0.0), 0.0);
        assert_eq!(ext_mul(2.0, f64::INFINITY), f64::INFINITY);
    }
}
