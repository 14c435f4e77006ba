//! Point configurations, configuration arithmetic, add-one/remove-one
//! differences and functionals such as U-statistics.
//!
//! Two representations are provided: [`Counts`] for configurations on a
//! finite ground space and [`PointSet`] for configurations in `ℝ^d`. Both
//! implement [`PointMeasure`], so functionals and difference operators are
//! written once.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::ground::EuclideanBox;

/// Integer-multiplicity point measure on a finite ground space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Counts(pub Vec<u32>);

impl Counts {
    pub fn zeros(k: usize) -> Self {
        Counts(vec![0; k])
    }

    pub fn from_slice(c: &[u32]) -> Self {
        Counts(c.to_vec())
    }

    /// Configuration with `n` points at `x`.
    pub fn atom(k: usize, x: usize, n: u32) -> Self {
        let mut c = vec![0; k];
        c[x] = n;
        Counts(c)
    }

    /// Number of ground points `k`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, x: usize) -> u32 {
        self.0[x]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Every multiplicity at most one.
    pub fn is_simple(&self) -> bool {
        self.0.iter().all(|&c| c <= 1)
    }

    /// Componentwise `ξ ≤ χ`.
    pub fn le(&self, other: &Counts) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &Counts) -> Result<Counts> {
        same_len(self, other)?;
        Ok(Counts(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    /// Componentwise difference; fails unless `other ≤ self`.
    pub fn sub(&self, other: &Counts) -> Result<Counts> {
        same_len(self, other)?;
        if !other.le(self) {
            return input("cannot subtract a configuration that is not dominated");
        }
        Ok(Counts(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }
}

fn same_len(a: &Counts, b: &Counts) -> Result<()> {
    if a.len() != b.len() {
        return input(format!(
            "configurations live on spaces of different size ({} vs {})",
            a.len(),
            b.len()
        ));
    }
    Ok(())
}

impl fmt::Display for Counts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A point of `ℝ^d` with a total order so configurations can be canonical.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Point {}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl Hash for Point {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for v in &self.0 {
            v.to_bits().hash(state);
        }
    }
}

/// Point measure in `ℝ^d`: sorted `(point, multiplicity)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PointSet {
    dimension: usize,
    atoms: Vec<(Point, u32)>,
}

impl PointSet {
    pub fn empty(dimension: usize) -> Self {
        Self {
            dimension,
            atoms: Vec::new(),
        }
    }

    /// Builds a canonical configuration from a list of points (repeats merge).
    pub fn from_points(dimension: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let mut map: BTreeMap<Point, u32> = BTreeMap::new();
        for p in points {
            if p.len() != dimension {
                return input(format!("point has dimension {}, expected {dimension}", p.len()));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return input("points must have finite coordinates");
            }
            *map.entry(Point(p)).or_insert(0) += 1;
        }
        Ok(Self {
            dimension,
            atoms: map.into_iter().collect(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn atom_list(&self) -> &[(Point, u32)] {
        &self.atoms
    }

    fn position(&self, x: &Point) -> std::result::Result<usize, usize> {
        self.atoms.binary_search_by(|(p, _)| p.cmp(x))
    }
}

/// Common interface of finite-mass point configurations.
pub trait PointMeasure: Clone + PartialEq {
    type Point: Clone + PartialEq;

    /// Total mass `ξ(Z)`.
    fn mass(&self) -> u64;
    /// `ξ({x})`.
    fn multiplicity(&self, x: &Self::Point) -> u32;
    /// Distinct support points with their multiplicities, in canonical order.
    fn atoms(&self) -> Vec<(Self::Point, u32)>;
    /// `ξ + δ_x`.
    fn with_added(&self, x: &Self::Point) -> Result<Self>;
    /// `ξ - δ_x`; fails if `ξ(x) = 0`.
    fn with_removed(&self, x: &Self::Point) -> Result<Self>;
    /// `ξ ∖ χ = Σ (ξ(x) - χ(x))_+ δ_x`.
    fn setminus(&self, other: &Self) -> Result<Self>;

    /// Expanded point list, each atom repeated by its multiplicity.
    fn points(&self) -> Vec<Self::Point> {
        let mut out = Vec::with_capacity(self.mass() as usize);
        for (p, m) in self.atoms() {
            for _ in 0..m {
                out.push(p.clone());
            }
        }
        out
    }
}

impl PointMeasure for Counts {
    type Point = usize;

    fn mass(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    fn multiplicity(&self, x: &usize) -> u32 {
        self.0.get(*x).copied().unwrap_or(0)
    }

    fn atoms(&self) -> Vec<(usize, u32)> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, c))
            .collect()
    }

    fn with_added(&self, x: &usize) -> Result<Self> {
        if *x >= self.len() {
            return input(format!("point {x} outside a space of {} points", self.len()));
        }
        let mut c = self.0.clone();
        c[*x] += 1;
        Ok(Counts(c))
    }

    fn with_removed(&self, x: &usize) -> Result<Self> {
        if self.multiplicity(x) == 0 {
            return input(format!("point {x} is not in the configuration"));
        }
        let mut c = self.0.clone();
        c[*x] -= 1;
        Ok(Counts(c))
    }

    fn setminus(&self, other: &Self) -> Result<Self> {
        same_len(self, other)?;
        Ok(Counts(
            self.0.iter().zip(&other.0).map(|(a, b)| a.saturating_sub(*b)).collect(),
        ))
    }
}

impl PointMeasure for PointSet {
    type Point = Point;

    fn mass(&self) -> u64 {
        self.atoms.iter().map(|(_, m)| *m as u64).sum()
    }

    fn multiplicity(&self, x: &Point) -> u32 {
        match self.position(x) {
            Ok(i) => self.atoms[i].1,
            Err(_) => 0,
        }
    }

    fn atoms(&self) -> Vec<(Point, u32)> {
        self.atoms.clone()
    }

    fn with_added(&self, x: &Point) -> Result<Self> {
        if x.0.len() != self.dimension {
            return input("added point has the wrong dimension");
        }
        let mut out = self.clone();
        match out.position(x) {
            Ok(i) => out.atoms[i].1 += 1,
            Err(i) => out.atoms.insert(i, (x.clone(), 1)),
        }
        Ok(out)
    }

    fn with_removed(&self, x: &Point) -> Result<Self> {
        let mut out = self.clone();
        match out.position(x) {
            Ok(i) => {
                if out.atoms[i].1 == 1 {
                    out.atoms.remove(i);
                } else {
                    out.atoms[i].1 -= 1;
                }
                Ok(out)
            }
            Err(_) => input("point is not in the configuration"),
        }
    }

    fn setminus(&self, other: &Self) -> Result<Self> {
        if self.dimension != other.dimension {
            return input("configurations live in different dimensions");
        }
        let atoms = self
            .atoms
            .iter()
            .filter_map(|(p, m)| {
                let left = m.saturating_sub(other.multiplicity(p));
                (left > 0).then(|| (p.clone(), left))
            })
            .collect();
        Ok(PointSet {
            dimension: self.dimension,
            atoms,
        })
    }
}

type Evaluator<C> = Arc<dyn Fn(&C) -> f64 + Send + Sync>;

/// A real functional on configurations with unverified shape claims.
#[derive(Clone)]
pub struct Functional<C> {
    pub name: String,
    eval: Evaluator<C>,
    pub claims_nondecreasing: bool,
    pub claims_convex: bool,
}

impl<C> fmt::Debug for Functional<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Functional")
            .field("name", &self.name)
            .field("claims_nondecreasing", &self.claims_nondecreasing)
            .field("claims_convex", &self.claims_convex)
            .finish()
    }
}

impl<C: PointMeasure> Functional<C> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&C) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            claims_nondecreasing: false,
            claims_convex: false,
        }
    }

    pub fn with_claims(mut self, nondecreasing: bool, convex: bool) -> Self {
        self.claims_nondecreasing = nondecreasing;
        self.claims_convex = convex;
        self
    }

    pub fn eval(&self, xi: &C) -> f64 {
        (self.eval)(xi)
    }

    pub fn constant(value: f64) -> Self {
        Self::new(format!("constant({value})"), move |_| value).with_claims(true, true)
    }

    /// `F(ξ) = ξ(Z)`.
    pub fn total_mass() -> Self {
        Self::new("mass", |xi: &C| xi.mass() as f64).with_claims(true, true)
    }
}

/// `D⁻_x F(ξ) = F(ξ) - F(ξ - δ_x)`; requires `ξ(x) ≥ 1`.
pub fn diff_minus<C: PointMeasure>(f: &Functional<C>, xi: &C, x: &C::Point) -> Result<f64> {
    let smaller = xi.with_removed(x)?;
    Ok(f.eval(xi) - f.eval(&smaller))
}

/// `D⁺_x F(ξ) = F(ξ + δ_x) - F(ξ)`.
pub fn diff_plus<C: PointMeasure>(f: &Functional<C>, xi: &C, x: &C::Point) -> Result<f64> {
    let larger = xi.with_added(x)?;
    Ok(f.eval(&larger) - f.eval(xi))
}

/// Sum of `h` over ordered `q`-tuples of distinct indices of the expanded
/// point list of `ξ`.
pub fn u_statistic<C, H>(h: &H, q: usize, xi: &C) -> f64
where
    C: PointMeasure,
    H: Fn(&[C::Point]) -> f64 + ?Sized,
{
    let pts = xi.points();
    if q == 0 || pts.len() < q {
        return 0.0;
    }
    if q == 2 {
        let mut total = 0.0;
        let mut buf = [pts[0].clone(), pts[0].clone()];
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i != j {
                    buf[0] = pts[i].clone();
                    buf[1] = pts[j].clone();
                    total += h(&buf);
                }
            }
        }
        return total;
    }
    let mut used = vec![false; pts.len()];
    let mut tuple = Vec::with_capacity(q);
    ordered_tuples(h, q, &pts, &mut used, &mut tuple)
}

fn ordered_tuples<P: Clone, H: Fn(&[P]) -> f64 + ?Sized>(
    h: &H,
    q: usize,
    pts: &[P],
    used: &mut [bool],
    tuple: &mut Vec<P>,
) -> f64 {
    if tuple.len() == q {
        return h(tuple);
    }
    let mut total = 0.0;
    for i in 0..pts.len() {
        if !used[i] {
            used[i] = true;
            tuple.push(pts[i].clone());
            total += ordered_tuples(h, q, pts, used, tuple);
            tuple.pop();
            used[i] = false;
        }
    }
    total
}

type Kernel<P> = Arc<dyn Fn(&[P]) -> f64 + Send + Sync>;

/// A U-statistic of order `q` with symmetric kernel `h`.
#[derive(Clone)]
pub struct UStatistic<P> {
    kernel: Kernel<P>,
    pub order: usize,
}

impl<P: Clone + 'static> UStatistic<P> {
    pub fn new(order: usize, kernel: impl Fn(&[P]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if order == 0 {
            return input("U-statistic order must be at least 1");
        }
        Ok(Self {
            kernel: Arc::new(kernel),
            order,
        })
    }

    pub fn kernel(&self, args: &[P]) -> f64 {
        (self.kernel)(args)
    }

    pub fn eval<C: PointMeasure<Point = P>>(&self, xi: &C) -> f64 {
        u_statistic(&*self.kernel, self.order, xi)
    }

    /// The U-statistic as a functional. Claims follow the kernel sign, which
    /// the caller asserts through `nonnegative_kernel`.
    pub fn functional<C>(&self, nonnegative_kernel: bool) -> Functional<C>
    where
        C: PointMeasure<Point = P> + 'static,
    {
        let me = self.clone();
        Functional::new(format!("u_statistic(q={})", self.order), move |xi: &C| me.eval(xi))
            .with_claims(nonnegative_kernel, nonnegative_kernel)
    }

    /// `D⁺_x F(ξ) = q Σ h(x, y_1, …, y_{q-1})` over ordered distinct tuples
    /// from `ξ`, evaluated without forming `ξ + δ_x`.
    pub fn add_one_difference<C: PointMeasure<Point = P>>(&self, xi: &C, x: &P) -> f64 {
        let q = self.order;
        let pts = xi.points();
        if pts.len() + 1 < q {
            return 0.0;
        }
        let x = x.clone();
        let kernel = &self.kernel;
        let shifted = move |rest: &[P]| {
            let mut args = Vec::with_capacity(q);
            args.push(x.clone());
            args.extend_from_slice(rest);
            kernel(&args)
        };
        if q == 1 {
            return shifted(&[]);
        }
        let mut used = vec![false; pts.len()];
        let mut tuple = Vec::with_capacity(q - 1);
        q as f64 * ordered_tuples(&shifted, q - 1, &pts, &mut used, &mut tuple)
    }
}

/// Outcome of the enumerated monotonicity/convexity check.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ShapeReport {
    pub nondecreasing: bool,
    pub convex: bool,
    pub first_d1_checks: usize,
    pub second_d2_checks: usize,
    pub first_monotone_violation: Option<String>,
    pub first_convex_violation: Option<String>,
}

/// Verifies `D⁺_x F ≥ 0` and `D⁺_y D⁺_x F ≥ 0` on an enumerated domain.
///
/// First differences are checked at every `ξ` of mass `< mass_cap`, second
/// differences at every `ξ` of mass `≤ mass_cap - 2`, for all `x, y` in
/// `points`. `tol` absorbs round-off.
pub fn check_monotone_convex<C: PointMeasure>(
    f: &Functional<C>,
    domain: &[C],
    points: &[C::Point],
    mass_cap: u64,
    tol: f64,
) -> Result<ShapeReport>
where
    C::Point: fmt::Debug,
    C: fmt::Debug,
{
    let mut report = ShapeReport {
        nondecreasing: true,
        convex: true,
        ..Default::default()
    };
    for xi in domain {
        let m = xi.mass();
        if m < mass_cap {
            let base = f.eval(xi);
            for x in points {
                let plus_x = xi.with_added(x)?;
                let fx = f.eval(&plus_x);
                report.first_d1_checks += 1;
                let d1 = fx - base;
                if d1 < -tol && report.nondecreasing {
                    report.nondecreasing = false;
                    report.first_monotone_violation =
                        Some(format!("D+_{x:?} F({xi:?}) = {d1}"));
                }
                if m + 2 <= mass_cap {
                    for y in points {
                        let plus_y = xi.with_added(y)?;
                        let plus_xy = plus_x.with_added(y)?;
                        let d2 = f.eval(&plus_xy) - fx - f.eval(&plus_y) + base;
                        report.second_d2_checks += 1;
                        if d2 < -tol && report.convex {
                            report.convex = false;
                            report.first_convex_violation =
                                Some(format!("D+_{y:?} D+_{x:?} F({xi:?}) = {d2}"));
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Spot check for Euclidean functionals: random added points on sampled
/// configurations.
pub fn spot_check_monotone_convex<R: Rng>(
    f: &Functional<PointSet>,
    samples: &[PointSet],
    domain: &EuclideanBox,
    trials_per_sample: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ShapeReport> {
    let mut report = ShapeReport {
        nondecreasing: true,
        convex: true,
        ..Default::default()
    };
    let draw = |rng: &mut R| {
        Point(
            domain
                .lower
                .iter()
                .zip(&domain.upper)
                .map(|(l, u)| rng.gen_range(*l..*u))
                .collect(),
        )
    };
    for xi in samples {
        let base = f.eval(xi);
        for _ in 0..trials_per_sample {
            let x = draw(rng);
            let y = draw(rng);
            let fx = f.eval(&xi.with_added(&x)?);
            let fy = f.eval(&xi.with_added(&y)?);
            let fxy = f.eval(&xi.with_added(&x)?.with_added(&y)?);
            report.first_d1_checks += 1;
            report.second_d2_checks += 1;
            if fx - base < -tol && report.nondecreasing {
                report.nondecreasing = false;
                report.first_monotone_violation = Some(format!("D+ = {} at mass {}", fx - base, xi.mass()));
            }
            let d2 = fxy - fx - fy + base;
            if d2 < -tol && report.convex {
                report.convex = false;
                report.first_convex_violation = Some(format!("D+D+ = {d2} at mass {}", xi.mass()));
            }
        }
    }
    Ok(report)
}

/// Both sides of `F(ξ) - F(χ) ≤ Σ_x D⁻_x F(ξ) (ξ∖χ)(x)` for `χ ≤ ξ`.
pub fn difference_bound<C: PointMeasure>(f: &Functional<C>, xi: &C, chi: &C) -> Result<(f64, f64)> {
    let gap = xi.setminus(chi)?;
    let mut rhs = 0.0;
    for (x, m) in gap.atoms() {
        rhs += diff_minus(f, xi, &x)? * m as f64;
    }
    Ok((f.eval(xi) - f.eval(chi), rhs))
}
