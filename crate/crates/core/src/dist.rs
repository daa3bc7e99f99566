//! Marginal distributions and stochastic-order checks.
//!
//! A [`Distribution`] is immutable once built. Closed-form kinds (uniform,
//! exponential, normal) are continuous and strictly increasing on their
//! support; discrete atoms and piecewise-linear cdfs cover general members
//! of the space of distribution functions, including jumps and flat
//! stretches.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::{ln_norm_cdf, ln_norm_pdf, norm_cdf, norm_pdf, norm_quantile};

/// Tolerance for a violation of G₁(t) ≥ G₂(t) to count.
pub const ST_TOLERANCE: f64 = 1e-12;
/// Default number of quantile-spaced check points.
pub const DEFAULT_ORDER_GRID: usize = 512;
const MIN_ORDER_GRID: usize = 64;
const PROB_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid distribution: {0}")]
    InvalidParameter(String),
    #[error("probability argument is NaN or outside [0, 1]: {0}")]
    InvalidProbability(f64),
    #[error("{relation} order needs densities; {kind} has none")]
    UnsupportedOrder { relation: Relation, kind: &'static str },
    #[error("order-check grid must be at least {MIN_ORDER_GRID}, got {0}")]
    GridTooSmall(usize),
}

/// Atoms of a discrete law, with cached cumulative masses.
#[derive(Debug, Clone, PartialEq)]
pub struct Atoms {
    xs: Vec<f64>,
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl Atoms {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, DistError> {
        if points.is_empty() {
            return Err(DistError::InvalidParameter("atoms: no points".into()));
        }
        let mut xs = Vec::with_capacity(points.len());
        let mut probs = Vec::with_capacity(points.len());
        for (i, &(x, p)) in points.iter().enumerate() {
            if !x.is_finite() || !(p > 0.0 && p <= 1.0) {
                return Err(DistError::InvalidParameter(format!(
                    "atoms: point {i} = ({x}, {p}) must be finite with mass in (0, 1]"
                )));
            }
            if i > 0 && x <= xs[i - 1] {
                return Err(DistError::InvalidParameter(
                    "atoms: points must be strictly increasing".into(),
                ));
            }
            xs.push(x);
            probs.push(p);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(DistError::InvalidParameter(format!(
                "atoms: masses sum to {total}, expected 1"
            )));
        }
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cum.push(acc);
        }
        *cum.last_mut().unwrap() = 1.0;
        Ok(Self { xs, probs, cum })
    }

    pub fn points(&self) -> impl DoubleEndedIterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Cumulative mass up to and including atom `i`.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    fn cdf(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&a| a <= x);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    fn cdf_left(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&a| a < x);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.xs[0];
        }
        let k = self.cum.partition_point(|&c| c < p);
        self.xs[k.min(self.xs.len() - 1)]
    }
}

/// Knots of a piecewise-linear cdf. Repeated abscissae encode jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct Knots {
    xs: Vec<f64>,
    ps: Vec<f64>,
}

impl Knots {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, DistError> {
        if knots.len() < 2 {
            return Err(DistError::InvalidParameter("pwl: need at least two knots".into()));
        }
        let (xs, ps): (Vec<f64>, Vec<f64>) = knots.into_iter().unzip();
        if xs.iter().any(|x| !x.is_finite()) || ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(DistError::InvalidParameter(
                "pwl: knots must be finite with p in [0, 1]".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] < w[0]) || ps.windows(2).any(|w| w[1] < w[0]) {
            return Err(DistError::InvalidParameter(
                "pwl: knots must be nondecreasing in x and p".into(),
            ));
        }
        if ps[0] != 0.0 || *ps.last().unwrap() != 1.0 {
            return Err(DistError::InvalidParameter(
                "pwl: first knot must have p = 0 and last p = 1".into(),
            ));
        }
        Ok(Self { xs, ps })
    }

    pub fn knots(&self) -> impl DoubleEndedIterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ps.iter().copied())
    }

    fn cdf(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return 1.0;
        }
        let j = self.xs.partition_point(|&k| k <= x) - 1;
        let (x0, x1) = (self.xs[j], self.xs[j + 1]);
        let (p0, p1) = (self.ps[j], self.ps[j + 1]);
        p0 + (p1 - p0) * (x - x0) / (x1 - x0)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0.0;
        }
        if x > self.xs[n - 1] {
            return 1.0;
        }
        // first knot at or beyond x, approached from the left
        let j = self.xs.partition_point(|&k| k < x);
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let (p0, p1) = (self.ps[j - 1], self.ps[j]);
        if x1 == x0 {
            return p0;
        }
        p0 + (p1 - p0) * (x - x0) / (x1 - x0)
    }

    fn density(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x >= self.xs[n - 1] {
            return 0.0;
        }
        let j = self.xs.partition_point(|&k| k <= x) - 1;
        (self.ps[j + 1] - self.ps[j]) / (self.xs[j + 1] - self.xs[j])
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            let last_zero = self.ps.partition_point(|&q| q <= 0.0) - 1;
            return self.xs[last_zero];
        }
        let i = self.ps.partition_point(|&q| q < p);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (p0, p1) = (self.ps[i - 1], self.ps[i]);
        if x1 == x0 {
            return x1;
        }
        x0 + (p - p0) / (p1 - p0) * (x1 - x0)
    }

    fn has_jump(&self) -> bool {
        self.xs
            .windows(2)
            .zip(self.ps.windows(2))
            .any(|(x, p)| x[0] == x[1] && p[1] > p[0])
    }

    fn has_interior_flat(&self) -> bool {
        self.xs
            .windows(2)
            .zip(self.ps.windows(2))
            .any(|(x, p)| x[1] > x[0] && p[0] == p[1] && p[0] > 0.0 && p[0] < 1.0)
    }
}

/// A marginal law on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub enum Distribution {
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64 },
    Normal { mean: f64, sd: f64 },
    DiscreteAtoms(Atoms),
    PiecewiseLinearCdf(Knots),
}

/// JSON shape of a [`Distribution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64 },
    Normal { mean: f64, sd: f64 },
    Atoms { points: Vec<(f64, f64)> },
    Pwl { knots: Vec<(f64, f64)> },
}

impl TryFrom<DistributionSpec> for Distribution {
    type Error = DistError;

    fn try_from(spec: DistributionSpec) -> Result<Self, Self::Error> {
        match spec {
            DistributionSpec::Uniform { a, b } => Distribution::uniform(a, b),
            DistributionSpec::Exponential { rate } => Distribution::exponential(rate),
            DistributionSpec::Normal { mean, sd } => Distribution::normal(mean, sd),
            DistributionSpec::Atoms { points } => Distribution::atoms(points),
            DistributionSpec::Pwl { knots } => Distribution::pwl(knots),
        }
    }
}

impl From<Distribution> for DistributionSpec {
    fn from(d: Distribution) -> Self {
        match d {
            Distribution::Uniform { a, b } => DistributionSpec::Uniform { a, b },
            Distribution::Exponential { rate } => DistributionSpec::Exponential { rate },
            Distribution::Normal { mean, sd } => DistributionSpec::Normal { mean, sd },
            Distribution::DiscreteAtoms(atoms) => DistributionSpec::Atoms {
                points: atoms.points().collect(),
            },
            Distribution::PiecewiseLinearCdf(k) => DistributionSpec::Pwl {
                knots: k.knots().collect(),
            },
        }
    }
}

impl Distribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self, DistError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(DistError::InvalidParameter(format!("uniform: need a < b, got [{a}, {b}]")));
        }
        Ok(Self::Uniform { a, b })
    }

    pub fn exponential(rate: f64) -> Result<Self, DistError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(DistError::InvalidParameter(format!("exponential: rate {rate} must be > 0")));
        }
        Ok(Self::Exponential { rate })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self, DistError> {
        if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
            return Err(DistError::InvalidParameter(format!("normal: need finite mean and sd > 0, got ({mean}, {sd})")));
        }
        Ok(Self::Normal { mean, sd })
    }

    pub fn atoms(points: Vec<(f64, f64)>) -> Result<Self, DistError> {
        Atoms::new(points).map(Self::DiscreteAtoms)
    }

    pub fn pwl(knots: Vec<(f64, f64)>) -> Result<Self, DistError> {
        Knots::new(knots).map(Self::PiecewiseLinearCdf)
    }

    pub fn standard_uniform() -> Self {
        Self::Uniform { a: 0.0, b: 1.0 }
    }

    /// Re-checks the invariants of a directly constructed value.
    pub fn validate(&self) -> Result<(), DistError> {
        match self {
            Self::Uniform { a, b } => Self::uniform(*a, *b).map(drop),
            Self::Exponential { rate } => Self::exponential(*rate).map(drop),
            Self::Normal { mean, sd } => Self::normal(*mean, *sd).map(drop),
            Self::DiscreteAtoms(_) | Self::PiecewiseLinearCdf(_) => Ok(()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Uniform { .. } => "uniform",
            Self::Exponential { .. } => "exponential",
            Self::Normal { .. } => "normal",
            Self::DiscreteAtoms(_) => "atoms",
            Self::PiecewiseLinearCdf(_) => "pwl",
        }
    }

    /// G(x) = P(X ≤ x).
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::Normal { mean, sd } => norm_cdf((x - mean) / sd),
            Self::DiscreteAtoms(atoms) => atoms.cdf(x),
            Self::PiecewiseLinearCdf(k) => k.cdf(x),
        }
    }

    /// P(X < x).
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            Self::DiscreteAtoms(atoms) => atoms.cdf_left(x),
            Self::PiecewiseLinearCdf(k) => k.cdf_left(x),
            _ => self.cdf(x),
        }
    }

    /// P(X > x), computed without cancellation for the closed-form kinds.
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Self::Normal { mean, sd } => norm_cdf(-(x - mean) / sd),
            _ => 1.0 - self.cdf(x),
        }
    }

    pub fn ln_survival(&self, x: f64) -> f64 {
        match self {
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -rate * x
                }
            }
            Self::Normal { mean, sd } => ln_norm_cdf(-(x - mean) / sd),
            _ => self.survival(x).ln(),
        }
    }

    /// Right-continuous density, `None` when the law has atoms.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Self::Uniform { a, b } => Some(if x >= *a && x < *b { 1.0 / (b - a) } else { 0.0 }),
            Self::Exponential { rate } => Some(if x >= 0.0 { rate * (-rate * x).exp() } else { 0.0 }),
            Self::Normal { mean, sd } => Some(norm_pdf((x - mean) / sd) / sd),
            Self::DiscreteAtoms(_) => None,
            Self::PiecewiseLinearCdf(k) => (!k.has_jump()).then(|| k.density(x)),
        }
    }

    pub fn ln_density(&self, x: f64) -> Option<f64> {
        match self {
            Self::Exponential { rate } => Some(if x >= 0.0 { rate.ln() - rate * x } else { f64::NEG_INFINITY }),
            Self::Normal { mean, sd } => Some(ln_norm_pdf((x - mean) / sd) - sd.ln()),
            _ => self.density(x).map(f64::ln),
        }
    }

    /// Generalized inverse inf{x : G(x) ≥ p}.
    ///
    /// `p = 0` and `p = 1` return the infimum and supremum of the support,
    /// which may be infinite.
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if p.is_nan() || !(0.0..=1.0).contains(&p) {
            return Err(DistError::InvalidProbability(p));
        }
        Ok(match self {
            Self::Uniform { a, b } => {
                if p == 1.0 {
                    *b
                } else {
                    a + p * (b - a)
                }
            }
            Self::Exponential { rate } => {
                if p == 1.0 {
                    f64::INFINITY
                } else {
                    -(-p).ln_1p() / rate
                }
            }
            Self::Normal { mean, sd } => mean + sd * norm_quantile(p),
            Self::DiscreteAtoms(atoms) => atoms.quantile(p),
            Self::PiecewiseLinearCdf(k) => k.quantile(p),
        })
    }

    /// Continuous and strictly increasing where 0 < G < 1.
    pub fn is_class_g(&self) -> bool {
        match self {
            Self::Uniform { .. } | Self::Exponential { .. } | Self::Normal { .. } => true,
            Self::DiscreteAtoms(_) => false,
            Self::PiecewiseLinearCdf(k) => !k.has_jump() && !k.has_interior_flat(),
        }
    }

    pub fn has_atoms(&self) -> bool {
        match self {
            Self::DiscreteAtoms(_) => true,
            Self::PiecewiseLinearCdf(k) => k.has_jump(),
            _ => false,
        }
    }

    /// (inf, sup) of the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Uniform { a, b } => (*a, *b),
            Self::Exponential { .. } => (0.0, f64::INFINITY),
            Self::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::DiscreteAtoms(atoms) => (atoms.xs[0], *atoms.xs.last().unwrap()),
            Self::PiecewiseLinearCdf(k) => (k.quantile(0.0), k.quantile(1.0)),
        }
    }

    /// Atoms, knots and finite support endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::DiscreteAtoms(atoms) => atoms.xs.clone(),
            Self::PiecewiseLinearCdf(k) => k.xs.clone(),
            _ => {
                let (lo, hi) = self.support();
                [lo, hi].into_iter().filter(|x| x.is_finite()).collect()
            }
        }
    }

    /// Law of −X, when it is representable.
    pub fn reflect(&self) -> Option<Distribution> {
        match self {
            Self::Uniform { a, b } => Some(Self::Uniform { a: -b, b: -a }),
            Self::Normal { mean, sd } => Some(Self::Normal { mean: -mean, sd: *sd }),
            Self::Exponential { .. } => None,
            Self::DiscreteAtoms(atoms) => {
                let pts = atoms.points().rev().map(|(x, p)| (-x, p)).collect();
                Distribution::atoms(pts).ok()
            }
            Self::PiecewiseLinearCdf(k) => {
                let knots = k.knots().rev().map(|(x, p)| (-x, 1.0 - p)).collect();
                Distribution::pwl(knots).ok()
            }
        }
    }

    fn as_knots(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::Uniform { a, b } => Some(vec![(*a, 0.0), (*b, 1.0)]),
            Self::PiecewiseLinearCdf(k) => Some(k.knots().collect()),
            _ => None,
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform { a, b } => write!(f, "Uniform({a}, {b})"),
            Self::Exponential { rate } => write!(f, "Exponential({rate})"),
            Self::Normal { mean, sd } => write!(f, "Normal({mean}, {sd})"),
            Self::DiscreteAtoms(atoms) => write!(f, "Atoms[{}]", atoms.len()),
            Self::PiecewiseLinearCdf(k) => write!(f, "Pwl[{}]", k.xs.len()),
        }
    }
}

/// Stochastic order relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// Usual stochastic order: G₁(t) ≥ G₂(t) for all t.
    St,
    /// Hazard rate order: S₂/S₁ nondecreasing.
    Hr,
    /// Likelihood ratio order: f₂/f₁ nondecreasing.
    Lr,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::St => "st",
            Relation::Hr => "hr",
            Relation::Lr => "lr",
        })
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "st" => Ok(Relation::St),
            "hr" => Ok(Relation::Hr),
            "lr" => Ok(Relation::Lr),
            other => Err(format!("unknown relation '{other}' (expected st, hr or lr)")),
        }
    }
}

/// Verdict of [`check_order`].
///
/// For `st` the witness is a single point with G₁(w) < G₂(w). For `hr` and
/// `lr` the defining property is monotonicity of a ratio, so the witness is
/// the right end of a pair (`witness_left`, `witness`) across which the log
/// ratio decreases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCheckResult {
    pub relation: Relation,
    pub holds: bool,
    pub witness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness_left: Option<f64>,
    pub grid_size: usize,
}

impl OrderCheckResult {
    /// Re-evaluates the defining inequality at the witness. True when the
    /// violation is confirmed.
    pub fn confirms_violation(&self, g1: &Distribution, g2: &Distribution) -> bool {
        let Some(w) = self.witness else { return false };
        match self.relation {
            Relation::St => g1.cdf(w) < g2.cdf(w),
            Relation::Hr | Relation::Lr => {
                let Some(left) = self.witness_left else { return false };
                let ratio = |t| log_ratio(self.relation, g1, g2, t);
                match (ratio(left), ratio(w)) {
                    (Some(a), Some(b)) => b < a,
                    _ => false,
                }
            }
        }
    }
}

/// ln(S₂/S₁) or ln(f₂/f₁) at t; `None` when both terms vanish.
fn log_ratio(relation: Relation, g1: &Distribution, g2: &Distribution, t: f64) -> Option<f64> {
    let (top, bottom) = match relation {
        Relation::Hr => (g2.ln_survival(t), g1.ln_survival(t)),
        Relation::Lr => (g2.ln_density(t)?, g1.ln_density(t)?),
        Relation::St => unreachable!("st is checked pointwise"),
    };
    match (top == f64::NEG_INFINITY, bottom == f64::NEG_INFINITY) {
        (true, true) => None,
        (false, true) => Some(f64::INFINITY),
        (true, false) => Some(f64::NEG_INFINITY),
        (false, false) => Some(top - bottom),
    }
}

/// Generalized inverse of the equal-weight mixture (G₁ + G₂)/2.
fn mixture_quantile(g1: &Distribution, g2: &Distribution, p: f64) -> f64 {
    let q1 = g1.quantile(p).unwrap_or(f64::NAN);
    let q2 = g2.quantile(p).unwrap_or(f64::NAN);
    let (mut lo, mut hi) = (q1.min(q2), q1.max(q2));
    let mix = |x: f64| 0.5 * (g1.cdf(x) + g2.cdf(x));
    if mix(lo) >= p {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mix(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn evaluation_points(g1: &Distribution, g2: &Distribution, grid: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..grid)
        .map(|k| mixture_quantile(g1, g2, (k as f64 + 0.5) / grid as f64))
        .collect();
    for p in [1e-12, 1e-9, 1e-6, 1e-4] {
        pts.push(mixture_quantile(g1, g2, p));
        pts.push(mixture_quantile(g1, g2, 1.0 - p));
    }
    let span = (pts[grid - 1] - pts[0]).abs().max(1e-6);
    for g in [g1, g2] {
        let (lo, hi) = g.support();
        for step in [1e-3, 1e-2, 1e-1, 1.0] {
            pts.push(lo - step * span);
            pts.push(hi + step * span);
        }
    }
    pts.extend(g1.breakpoints());
    pts.extend(g2.breakpoints());
    pts.retain(|x| x.is_finite());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Extra candidate witnesses for same-family parametric pairs whose
/// violation region is known in closed form.
fn analytic_witness_candidates(g1: &Distribution, g2: &Distribution) -> Vec<f64> {
    match (g1, g2) {
        (Distribution::Normal { mean: m1, sd: s1 }, Distribution::Normal { mean: m2, sd: s2 }) => {
            let spread = s1.max(*s2);
            if s1 == s2 {
                return vec![0.5 * (m1 + m2)];
            }
            // z-scores cross at t*; the violation lies on the side of t*
            // where the smaller-sd law is in its tail.
            let t_star = (m1 * s2 - m2 * s1) / (s2 - s1);
            let dir = if s1 < s2 { -1.0 } else { 1.0 };
            (1..=64).map(|k| t_star + dir * spread * 0.125 * k as f64).collect()
        }
        (Distribution::Exponential { rate: r1 }, Distribution::Exponential { rate: r2 }) => {
            (1..=32).map(|k| 0.125 * k as f64 / r1.max(*r2)).collect()
        }
        _ => Vec::new(),
    }
}

/// Exact verdict for same-family parametric pairs. Exponentials are ordered
/// in st, hr and lr alike iff rate₁ ≥ rate₂; normals iff σ₁ = σ₂ and
/// μ₁ ≤ μ₂.
fn analytic_verdict(g1: &Distribution, g2: &Distribution) -> Option<bool> {
    match (g1, g2) {
        (Distribution::Exponential { rate: r1 }, Distribution::Exponential { rate: r2 }) => Some(r1 >= r2),
        (Distribution::Normal { mean: m1, sd: s1 }, Distribution::Normal { mean: m2, sd: s2 }) => {
            Some(s1 == s2 && m1 <= m2)
        }
        _ => None,
    }
}

/// Checks g₁ ⪯ g₂ in the requested order on a quantile-spaced grid plus all
/// discontinuity points.
pub fn check_order(
    relation: Relation,
    g1: &Distribution,
    g2: &Distribution,
    grid: usize,
) -> Result<OrderCheckResult, DistError> {
    if grid < MIN_ORDER_GRID {
        return Err(DistError::GridTooSmall(grid));
    }
    if relation != Relation::St {
        for g in [g1, g2] {
            if g.density(0.0).is_none() {
                return Err(DistError::UnsupportedOrder { relation, kind: g.kind_name() });
            }
        }
    }
    let mut points = evaluation_points(g1, g2, grid);
    let analytic = analytic_verdict(g1, g2);
    if analytic == Some(false) {
        points.extend(analytic_witness_candidates(g1, g2));
        points.sort_by(f64::total_cmp);
        points.dedup();
    }

    let (violation, witness, witness_left) = match relation {
        Relation::St => {
            let mut worst: Option<(f64, f64)> = None;
            for &t in &points {
                let d = g1.cdf(t) - g2.cdf(t);
                if d < 0.0 && worst.is_none_or(|(_, w)| d < w) {
                    worst = Some((t, d));
                }
            }
            match worst {
                Some((t, d)) => (Some(d < -ST_TOLERANCE), Some(t), None),
                None => (None, None, None),
            }
        }
        Relation::Hr | Relation::Lr => {
            let mut best_drop: Option<(f64, f64, f64, f64)> = None;
            let mut run_max: Option<(f64, f64)> = None;
            for &t in &points {
                let Some(l) = log_ratio(relation, g1, g2, t) else { continue };
                if let Some((t_max, l_max)) = run_max {
                    let drop = if l_max == f64::INFINITY || l == f64::NEG_INFINITY {
                        if l < l_max { f64::INFINITY } else { 0.0 }
                    } else {
                        l_max - l
                    };
                    if drop > 0.0 && best_drop.is_none_or(|(_, _, d, _)| drop > d) {
                        best_drop = Some((t_max, t, drop, l_max));
                    }
                }
                if run_max.is_none_or(|(_, m)| l > m) {
                    run_max = Some((t, l));
                }
            }
            match best_drop {
                Some((left, t, drop, peak)) => {
                    let significant = drop == f64::INFINITY || drop > ST_TOLERANCE * peak.abs().max(1.0);
                    (Some(significant), Some(t), Some(left))
                }
                None => (None, None, None),
            }
        }
    };

    let numeric_fails = violation == Some(true);
    let holds = match analytic {
        Some(true) => true,
        // a strictly confirmable witness is required to report failure
        Some(false) => witness.is_none(),
        None => !numeric_fails,
    };
    let (witness, witness_left) = if holds { (None, None) } else { (witness, witness_left) };
    Ok(OrderCheckResult {
        relation,
        holds,
        witness,
        witness_left,
        grid_size: grid,
    })
}

/// Returns the law with cdf min{G, H}.
///
/// When one argument st-dominates the other the dominating one is returned
/// as is. Two atom laws give an exact atom law, and two piecewise-linear
/// cdfs (uniform counts as one) give an exact piecewise-linear cdf with
/// knots added where the curves cross. Otherwise the result is a
/// piecewise-linear cdf that agrees with min{G, H} at its knots, placed on
/// a dense quantile grid of both inputs.
pub fn pointwise_min_cdf(g: &Distribution, h: &Distribution) -> Distribution {
    if g == h {
        return g.clone();
    }
    if let (Distribution::DiscreteAtoms(a), Distribution::DiscreteAtoms(b)) = (g, h) {
        let mut xs: Vec<f64> = a.xs.iter().chain(b.xs.iter()).copied().collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut prev = 0.0;
        let mut points = Vec::new();
        for x in xs {
            let c = g.cdf(x).min(h.cdf(x));
            if c > prev {
                points.push((x, c - prev));
                prev = c;
            }
        }
        return Distribution::atoms(points).expect("min of two atom laws is an atom law");
    }
    if let Ok(r) = check_order(Relation::St, g, h, DEFAULT_ORDER_GRID) {
        if r.holds && is_exact_st_pair(g, h) {
            return h.clone();
        }
    }
    if let Ok(r) = check_order(Relation::St, h, g, DEFAULT_ORDER_GRID) {
        if r.holds && is_exact_st_pair(g, h) {
            return g.clone();
        }
    }
    let knots = match (g.as_knots(), h.as_knots()) {
        (Some(kg), Some(kh)) => exact_min_knots(g, h, &kg, &kh),
        _ => approx_min_knots(g, h),
    };
    Distribution::pwl(knots).expect("min of two cdfs is a cdf")
}

/// Pairs where the grid st-check is exact rather than sampled.
fn is_exact_st_pair(g: &Distribution, h: &Distribution) -> bool {
    analytic_verdict(g, h).is_some() || (g.as_knots().is_some() && h.as_knots().is_some())
}

fn push_knot(knots: &mut Vec<(f64, f64)>, x: f64, p: f64) {
    if knots.last() != Some(&(x, p)) {
        knots.push((x, p));
    }
}

fn exact_min_knots(
    g: &Distribution,
    h: &Distribution,
    kg: &[(f64, f64)],
    kh: &[(f64, f64)],
) -> Vec<(f64, f64)> {
    let mut xs: Vec<f64> = kg.iter().chain(kh.iter()).map(|k| k.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let min_right = |x: f64| g.cdf(x).min(h.cdf(x));
    let min_left = |x: f64| g.cdf_left(x).min(h.cdf_left(x));
    let mut knots = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        push_knot(&mut knots, x, min_left(x));
        push_knot(&mut knots, x, min_right(x));
        if let Some(&next) = xs.get(i + 1) {
            let d0 = g.cdf(x) - h.cdf(x);
            let d1 = g.cdf_left(next) - h.cdf_left(next);
            if d0 * d1 < 0.0 {
                let xc = x + (next - x) * d0 / (d0 - d1);
                if xc > x && xc < next {
                    push_knot(&mut knots, xc, min_right(xc));
                }
            }
        }
    }
    knots
}

fn approx_min_knots(g: &Distribution, h: &Distribution) -> Vec<(f64, f64)> {
    const LEVELS: usize = 2048;
    const TAIL: f64 = 1e-12;
    let mut xs = Vec::with_capacity(2 * LEVELS + 8);
    for d in [g, h] {
        for k in 0..LEVELS {
            xs.push(d.quantile((k as f64 + 0.5) / LEVELS as f64).unwrap_or(f64::NAN));
        }
        xs.extend(d.breakpoints());
    }
    let lo = g.quantile(TAIL).unwrap_or(f64::NAN).min(h.quantile(TAIL).unwrap_or(f64::NAN));
    let hi = g
        .quantile(1.0 - TAIL)
        .unwrap_or(f64::NAN)
        .max(h.quantile(1.0 - TAIL).unwrap_or(f64::NAN));
    xs.push(lo);
    xs.push(hi);
    xs.retain(|x| x.is_finite());
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut knots = Vec::with_capacity(xs.len() + 2);
    let first = xs[0];
    push_knot(&mut knots, first, 0.0);
    for &x in &xs {
        let left = g.cdf_left(x).min(h.cdf_left(x));
        let right = g.cdf(x).min(h.cdf(x));
        let floor = knots.last().map_or(0.0, |k| k.1);
        push_knot(&mut knots, x, left.max(floor));
        push_knot(&mut knots, x, right.max(floor));
    }
    let last = *xs.last().unwrap();
    push_knot(&mut knots, last, 1.0);
    knots
}
