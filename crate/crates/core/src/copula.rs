//! Bivariate copulas: built-in families, transforms, evaluation, rectangle
//! measures, axiom checks and component-tagged sampling.

use std::fmt;

use rand::Rng;
use rand_distr::{Exp1, Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::integrate;
use crate::rng::{block_rng, blocks};
use crate::special::{norm_cdf, norm_pdf, norm_quantile};

const WEIGHT_TOLERANCE: f64 = 1e-12;
/// Largest double below 1.
const ONE_MINUS: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CopulaError {
    #[error("invalid copula parameter: {0}")]
    InvalidParameter(String),
    #[error("mixture weights must be a nonnegative simplex matching the components: {0}")]
    WeightError(String),
    #[error("singular mass is not known for this copula")]
    UnknownMass,
    #[error("validation grid must be at least 8, got {0}")]
    GridTooSmall(usize),
}

/// Pointwise-evaluable copula.
pub trait Copula {
    fn cdf(&self, u: f64, v: f64) -> f64;

    /// Mass of the singular component.
    fn singular_mass(&self) -> Result<f64, CopulaError> {
        Err(CopulaError::UnknownMass)
    }
}

/// Closed description of a copula as a tree of families and transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case", try_from = "RawSpec")]
pub enum CopulaSpec {
    Independence,
    Comonotone,
    Countermonotone,
    Shuffle { gamma: f64 },
    Gaussian { rho: f64 },
    MoSurvival { alpha1: f64, alpha2: f64 },
    MoConnecting { alpha1: f64, alpha2: f64 },
    OrderStatistics,
    Mixture { weights: Vec<f64>, components: Vec<CopulaSpec> },
    Transpose { inner: Box<CopulaSpec> },
    Survival { inner: Box<CopulaSpec> },
}

#[derive(Deserialize)]
#[serde(tag = "node", rename_all = "snake_case", deny_unknown_fields)]
enum RawSpec {
    Independence,
    Comonotone,
    Countermonotone,
    Shuffle { gamma: f64 },
    Gaussian { rho: f64 },
    MoSurvival { alpha1: f64, alpha2: f64 },
    MoConnecting { alpha1: f64, alpha2: f64 },
    OrderStatistics,
    Mixture { weights: Vec<f64>, components: Vec<CopulaSpec> },
    Transpose { inner: Box<CopulaSpec> },
    Survival { inner: Box<CopulaSpec> },
}

impl TryFrom<RawSpec> for CopulaSpec {
    type Error = CopulaError;

    fn try_from(raw: RawSpec) -> Result<Self, Self::Error> {
        let spec = match raw {
            RawSpec::Independence => CopulaSpec::Independence,
            RawSpec::Comonotone => CopulaSpec::Comonotone,
            RawSpec::Countermonotone => CopulaSpec::Countermonotone,
            RawSpec::Shuffle { gamma } => CopulaSpec::Shuffle { gamma },
            RawSpec::Gaussian { rho } => CopulaSpec::Gaussian { rho },
            RawSpec::MoSurvival { alpha1, alpha2 } => CopulaSpec::MoSurvival { alpha1, alpha2 },
            RawSpec::MoConnecting { alpha1, alpha2 } => CopulaSpec::MoConnecting { alpha1, alpha2 },
            RawSpec::OrderStatistics => CopulaSpec::OrderStatistics,
            RawSpec::Mixture { weights, components } => CopulaSpec::Mixture { weights, components },
            RawSpec::Transpose { inner } => CopulaSpec::Transpose { inner },
            RawSpec::Survival { inner } => CopulaSpec::Survival { inner },
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn check_alphas(alpha1: f64, alpha2: f64) -> Result<(), CopulaError> {
    for a in [alpha1, alpha2] {
        if !(a > 0.0 && a < 1.0) {
            return Err(CopulaError::InvalidParameter(format!(
                "Marshall-Olkin parameters must lie in (0, 1), got {a}"
            )));
        }
    }
    Ok(())
}

fn check_weights(weights: &[f64], n: usize) -> Result<(), CopulaError> {
    if n == 0 || weights.len() != n {
        return Err(CopulaError::WeightError(format!(
            "{} weights for {n} components",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(CopulaError::WeightError("negative or non-finite weight".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(CopulaError::WeightError(format!("weights sum to {total}")));
    }
    Ok(())
}

impl CopulaSpec {
    pub fn shuffle(gamma: f64) -> Result<Self, CopulaError> {
        let s = Self::Shuffle { gamma };
        s.validate().map(|_| s)
    }

    pub fn gaussian(rho: f64) -> Result<Self, CopulaError> {
        let s = Self::Gaussian { rho };
        s.validate().map(|_| s)
    }

    pub fn mo_survival(alpha1: f64, alpha2: f64) -> Result<Self, CopulaError> {
        check_alphas(alpha1, alpha2).map(|_| Self::MoSurvival { alpha1, alpha2 })
    }

    pub fn mo_connecting(alpha1: f64, alpha2: f64) -> Result<Self, CopulaError> {
        check_alphas(alpha1, alpha2).map(|_| Self::MoConnecting { alpha1, alpha2 })
    }

    pub fn mix(components: Vec<CopulaSpec>, weights: Vec<f64>) -> Result<Self, CopulaError> {
        check_weights(&weights, components.len())?;
        Ok(Self::Mixture { weights, components })
    }

    /// Cᵗ(u, v) = C(v, u). Double transposition collapses.
    pub fn transpose(self) -> Self {
        match self {
            Self::Transpose { inner } => *inner,
            other => Self::Transpose { inner: Box::new(other) },
        }
    }

    /// Ĉ(u, v) = u + v − 1 + C(1 − u, 1 − v). Double application collapses.
    pub fn survival_of(self) -> Self {
        match self {
            Self::Survival { inner } => *inner,
            other => Self::Survival { inner: Box::new(other) },
        }
    }

    pub fn validate(&self) -> Result<(), CopulaError> {
        match self {
            Self::Shuffle { gamma } => {
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    return Err(CopulaError::InvalidParameter(format!(
                        "shuffle gamma must lie in (0, 1], got {gamma}"
                    )));
                }
            }
            Self::Gaussian { rho } => {
                if !(*rho > -1.0 && *rho < 1.0) {
                    return Err(CopulaError::InvalidParameter(format!(
                        "gaussian rho must lie in (-1, 1), got {rho}"
                    )));
                }
            }
            Self::MoSurvival { alpha1, alpha2 } | Self::MoConnecting { alpha1, alpha2 } => {
                check_alphas(*alpha1, *alpha2)?
            }
            Self::Mixture { weights, components } => {
                check_weights(weights, components.len())?;
                for c in components {
                    c.validate()?;
                }
            }
            Self::Transpose { inner } | Self::Survival { inner } => inner.validate()?,
            Self::Independence | Self::Comonotone | Self::Countermonotone | Self::OrderStatistics => {}
        }
        Ok(())
    }

    /// Copula density, when the law is absolutely continuous.
    pub fn density(&self, u: f64, v: f64) -> Option<f64> {
        match self {
            Self::Independence => Some(1.0),
            Self::Gaussian { rho } => Some(gaussian_density(*rho, u, v)),
            Self::OrderStatistics => {
                let a = 1.0 - (1.0 - u).sqrt();
                Some(if v >= a * a { 0.5 / (v.sqrt() * (1.0 - u).sqrt()) } else { 0.0 })
            }
            Self::Mixture { weights, components } => {
                let mut total = 0.0;
                for (w, c) in weights.iter().zip(components) {
                    let d = c.density(u, v)?;
                    if *w > 0.0 {
                        total += w * d;
                    }
                }
                Some(total)
            }
            Self::Transpose { inner } => inner.density(v, u),
            Self::Survival { inner } => inner.density(1.0 - u, 1.0 - v),
            _ => None,
        }
    }

    pub fn has_density(&self) -> bool {
        self.density(0.5, 0.5).is_some()
    }

    /// Draws one sample.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> CopulaSample {
        match self {
            Self::Independence => CopulaSample::continuous(open_uniform(rng), open_uniform(rng)),
            Self::Comonotone => {
                let u = open_uniform(rng);
                CopulaSample { u, v: u, component: Component::Singular, structural_tie: true }
            }
            Self::Countermonotone => {
                let u = open_uniform(rng);
                CopulaSample { u, v: 1.0 - u, component: Component::Singular, structural_tie: false }
            }
            Self::Shuffle { gamma } => {
                let u = open_uniform(rng);
                let v = if u <= *gamma { u + (1.0 - gamma) } else { u - gamma };
                CopulaSample {
                    u,
                    v: v.min(ONE_MINUS),
                    component: Component::Singular,
                    structural_tie: *gamma == 1.0,
                }
            }
            Self::Gaussian { rho } => {
                let z1: f64 = rng.sample(StandardNormal);
                let e: f64 = rng.sample(StandardNormal);
                let z2 = rho * z1 + (1.0 - rho * rho).sqrt() * e;
                CopulaSample::continuous(open(norm_cdf(z1)), open(norm_cdf(z2)))
            }
            Self::MoSurvival { alpha1, alpha2 } | Self::MoConnecting { alpha1, alpha2 } => {
                let (x1, x2, tie) = mo_shock(rng, *alpha1, *alpha2);
                let (u, v) = if matches!(self, Self::MoConnecting { .. }) {
                    (-(-x1 / alpha1).exp_m1(), -(-x2 / alpha2).exp_m1())
                } else {
                    ((-x1 / alpha1).exp(), (-x2 / alpha2).exp())
                };
                CopulaSample {
                    u: open(u),
                    v: open(v),
                    component: if tie { Component::Singular } else { Component::AbsolutelyContinuous },
                    structural_tie: tie,
                }
            }
            Self::OrderStatistics => {
                let a = open_uniform(rng);
                let b = open_uniform(rng);
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let u = 1.0 - (1.0 - lo) * (1.0 - lo);
                CopulaSample::continuous(open(u), open(hi * hi))
            }
            Self::Mixture { weights, components } => {
                let pick: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = components.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if pick < acc {
                        chosen = i;
                        break;
                    }
                }
                components[chosen].sample_one(rng)
            }
            Self::Transpose { inner } => {
                let s = inner.sample_one(rng);
                CopulaSample { u: s.v, v: s.u, ..s }
            }
            Self::Survival { inner } => {
                let s = inner.sample_one(rng);
                CopulaSample { u: open(1.0 - s.u), v: open(1.0 - s.v), ..s }
            }
        }
    }
}

fn open(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, ONE_MINUS)
}

fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Common-shock exponential triple: V, W, Z with rates 1/α₁ − 1, 1/α₂ − 1
/// and 1. Returns (V ∧ Z, W ∧ Z, Z ≤ V ∧ W).
pub(crate) fn mo_shock<R: Rng + ?Sized>(rng: &mut R, alpha1: f64, alpha2: f64) -> (f64, f64, bool) {
    let e1: f64 = rng.sample(Exp1);
    let e2: f64 = rng.sample(Exp1);
    let z: f64 = rng.sample(Exp1);
    let v = e1 / (1.0 / alpha1 - 1.0);
    let w = e2 / (1.0 / alpha2 - 1.0);
    (v.min(z), w.min(z), z <= v.min(w))
}

fn gaussian_density(rho: f64, u: f64, v: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 || v <= 0.0 || v >= 1.0 {
        return 0.0;
    }
    let a = norm_quantile(u);
    let b = norm_quantile(v);
    let one_m = 1.0 - rho * rho;
    let q = (rho * rho * (a * a + b * b) - 2.0 * rho * a * b) / (2.0 * one_m);
    (-q).exp() / one_m.sqrt()
}

/// C^(ρ)(u, v) = ∫_{−∞}^{Φ⁻¹(u)} φ(z) Φ((Φ⁻¹(v) − ρz)/√(1−ρ²)) dz.
fn gaussian_cdf(rho: f64, u: f64, v: f64) -> f64 {
    if u <= 0.0 || v <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return v.min(1.0);
    }
    if v >= 1.0 {
        return u;
    }
    if rho == 0.0 {
        return u * v;
    }
    let a = norm_quantile(u);
    let b = norm_quantile(v);
    let s = (1.0 - rho * rho).sqrt();
    let f = |z: f64| norm_pdf(z) * norm_cdf((b - rho * z) / s);
    let lo = (-12.0f64).min(a - 3.0);
    let hi = a.min(12.0);
    let kink = b / rho;
    let mut total = 0.0;
    if kink > lo && kink < hi {
        total += integrate(f, lo, kink, 5e-15, 400).value;
        total += integrate(f, kink, hi, 5e-15, 400).value;
    } else {
        total += integrate(f, lo, hi, 1e-14, 400).value;
    }
    total.clamp((u + v - 1.0).max(0.0), u.min(v))
}

fn shuffle_cdf(gamma: f64, u: f64, v: f64) -> f64 {
    u.min(v).min((u - gamma).max(0.0) + (v + gamma - 1.0).max(0.0))
}

fn mo_survival_cdf(alpha1: f64, alpha2: f64, u: f64, v: f64) -> f64 {
    // uv·min(u^{−α₁}, v^{−α₂}) written without negative powers
    (u.powf(1.0 - alpha1) * v).min(u * v.powf(1.0 - alpha2))
}

fn order_statistics_cdf(u: f64, v: f64) -> f64 {
    let a = 1.0 - (1.0 - u).sqrt();
    if v >= a * a {
        2.0 * a * v.sqrt() - a * a
    } else {
        v
    }
}

impl Copula for CopulaSpec {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        match self {
            Self::Independence => u * v,
            Self::Comonotone => u.min(v),
            Self::Countermonotone => (u + v - 1.0).max(0.0),
            Self::Shuffle { gamma } => shuffle_cdf(*gamma, u, v),
            Self::Gaussian { rho } => gaussian_cdf(*rho, u, v),
            Self::MoSurvival { alpha1, alpha2 } => mo_survival_cdf(*alpha1, *alpha2, u, v),
            Self::MoConnecting { alpha1, alpha2 } => {
                let c = mo_survival_cdf(*alpha1, *alpha2, 1.0 - u, 1.0 - v) + u + v - 1.0;
                c.clamp(0.0, u.min(v))
            }
            Self::OrderStatistics => order_statistics_cdf(u, v),
            Self::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.cdf(u, v))
                .sum(),
            Self::Transpose { inner } => inner.cdf(v, u),
            Self::Survival { inner } => {
                let c = u + v - 1.0 + inner.cdf(1.0 - u, 1.0 - v);
                c.clamp(0.0, u.min(v))
            }
        }
    }

    fn singular_mass(&self) -> Result<f64, CopulaError> {
        Ok(match self {
            Self::Independence | Self::Gaussian { .. } => 0.0,
            // K has density 1/(2√v√(1−u)) above its boundary curve, and that
            // density already integrates to 1
            Self::OrderStatistics => 0.0,
            Self::Comonotone | Self::Countermonotone | Self::Shuffle { .. } => 1.0,
            Self::MoSurvival { alpha1, alpha2 } | Self::MoConnecting { alpha1, alpha2 } => {
                alpha1 * alpha2 / (alpha1 + alpha2 - alpha1 * alpha2)
            }
            Self::Mixture { weights, components } => {
                let mut total = 0.0;
                for (w, c) in weights.iter().zip(components) {
                    total += w * c.singular_mass()?;
                }
                total
            }
            Self::Transpose { inner } | Self::Survival { inner } => inner.singular_mass()?,
        })
    }
}

impl fmt::Display for CopulaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Independence => write!(f, "Independence"),
            Self::Comonotone => write!(f, "Comonotone"),
            Self::Countermonotone => write!(f, "Countermonotone"),
            Self::Shuffle { gamma } => write!(f, "Shuffle({gamma})"),
            Self::Gaussian { rho } => write!(f, "Gaussian({rho})"),
            Self::MoSurvival { alpha1, alpha2 } => write!(f, "MoSurvival({alpha1}, {alpha2})"),
            Self::MoConnecting { alpha1, alpha2 } => write!(f, "MoConnecting({alpha1}, {alpha2})"),
            Self::OrderStatistics => write!(f, "OrderStatistics"),
            Self::Mixture { weights, components } => {
                write!(f, "Mixture[")?;
                for (i, (w, c)) in weights.iter().zip(components).enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{w}*{c}")?;
                }
                write!(f, "]")
            }
            Self::Transpose { inner } => write!(f, "Transpose({inner})"),
            Self::Survival { inner } => write!(f, "Survival({inner})"),
        }
    }
}

/// C-measure of (u₁, u₂] × (v₁, v₂] by inclusion–exclusion.
pub fn rect_measure<C: Copula + ?Sized>(c: &C, u1: f64, u2: f64, v1: f64, v2: f64) -> f64 {
    c.cdf(u2, v2) - c.cdf(u1, v2) - c.cdf(u2, v1) + c.cdf(u1, v1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    AbsolutelyContinuous,
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSample {
    pub u: f64,
    pub v: f64,
    pub component: Component,
    /// The generating construction forced the two latent coordinates equal.
    pub structural_tie: bool,
}

impl CopulaSample {
    fn continuous(u: f64, v: f64) -> Self {
        Self { u, v, component: Component::AbsolutelyContinuous, structural_tie: false }
    }
}

/// `n` samples from `spec`, reproducible for a given seed regardless of
/// thread count.
pub fn copula_sample(spec: &CopulaSpec, seed: u64, n: usize) -> Vec<CopulaSample> {
    let chunks: Vec<Vec<CopulaSample>> = blocks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, len)| {
            let mut rng = block_rng(seed, b);
            (0..len).map(|_| spec.sample_one(&mut rng)).collect()
        })
        .collect();
    chunks.concat()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Boundary,
    TwoIncreasing,
    Frechet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub u: f64,
    pub v: f64,
    /// Size of the breach.
    pub amount: f64,
}

/// Checks the copula axioms on the lattice {0, 1/grid, …, 1}².
pub fn validate_copula<C: Copula + ?Sized>(c: &C, grid: usize) -> Result<Vec<Violation>, CopulaError> {
    const BOUNDARY_TOL: f64 = 1e-10;
    const TOL: f64 = 1e-9;
    if grid < 8 {
        return Err(CopulaError::GridTooSmall(grid));
    }
    let pts: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
    let table: Vec<Vec<f64>> = pts.iter().map(|&u| pts.iter().map(|&v| c.cdf(u, v)).collect()).collect();
    let mut out = Vec::new();
    let mut flag = |kind, u, v, amount: f64| out.push(Violation { kind, u, v, amount });
    for (i, &t) in pts.iter().enumerate() {
        for (u, v, want, got) in [
            (t, 0.0, 0.0, table[i][0]),
            (0.0, t, 0.0, table[0][i]),
            (t, 1.0, t, table[i][grid]),
            (1.0, t, t, table[grid][i]),
        ] {
            if (got - want).abs() > BOUNDARY_TOL {
                flag(ViolationKind::Boundary, u, v, (got - want).abs());
            }
        }
    }
    for (i, &u) in pts.iter().enumerate() {
        for (j, &v) in pts.iter().enumerate() {
            let val = table[i][j];
            let lower = (u + v - 1.0).max(0.0);
            let upper = u.min(v);
            if val < lower - TOL || val > upper + TOL {
                flag(ViolationKind::Frechet, u, v, (lower - val).max(val - upper));
            }
            if i > 0 && j > 0 {
                let m = table[i][j] - table[i - 1][j] - table[i][j - 1] + table[i - 1][j - 1];
                if m < -TOL {
                    flag(ViolationKind::TwoIncreasing, u, v, -m);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_smoothed;

    fn all_families() -> Vec<CopulaSpec> {
        vec![
            CopulaSpec::Independence,
            CopulaSpec::Comonotone,
            CopulaSpec::Countermonotone,
            CopulaSpec::shuffle(0.3).unwrap(),
            CopulaSpec::shuffle(1.0).unwrap(),
            CopulaSpec::gaussian(0.9).unwrap(),
            CopulaSpec::gaussian(-0.6).unwrap(),
            CopulaSpec::mo_survival(0.4, 0.2).unwrap(),
            CopulaSpec::mo_connecting(0.4, 0.2).unwrap(),
            CopulaSpec::OrderStatistics,
        ]
    }

    #[test]
    fn cdf_examples() {
        let s = CopulaSpec::shuffle(0.3).unwrap();
        assert!((s.cdf(0.5, 0.5) - 0.2).abs() < 1e-15);
        let mo = CopulaSpec::mo_survival(0.4, 0.2).unwrap();
        let want = 0.25 * 2f64.powf(0.2);
        assert!((mo.cdf(0.5, 0.5) - want).abs() < 1e-15);
        assert!((want - 0.287_175).abs() < 1e-6);
        for c in all_families() {
            for t in [0.0, 0.2, 0.7, 1.0] {
                assert!((c.cdf(t, 1.0) - t).abs() < 1e-12, "{c}");
                assert!((c.cdf(1.0, t) - t).abs() < 1e-12, "{c}");
            }
        }
    }

    #[test]
    fn rect_measure_examples() {
        assert!((rect_measure(&CopulaSpec::Independence, 0.0, 0.5, 0.0, 0.5) - 0.25).abs() < 1e-15);
        assert_eq!(rect_measure(&CopulaSpec::Comonotone, 0.0, 0.5, 0.5, 1.0), 0.0);
        let s = CopulaSpec::shuffle(0.3).unwrap();
        assert!((rect_measure(&s, 0.0, 0.3, 0.7, 1.0) - 0.3).abs() < 1e-15);
    }

    /// Bivariate normal cdf by Plackett's identity
    /// Φ₂(x, y; ρ) = Φ(x)Φ(y) + ∫₀^ρ φ₂(x, y; r) dr, integrated in θ = asin r
    /// with composite Simpson.
    fn plackett(x: f64, y: f64, rho: f64) -> f64 {
        let g = |t: f64| {
            let (r, c) = (t.sin(), t.cos());
            let om = c * c;
            (-(x * x - 2.0 * r * x * y + y * y) / (2.0 * om)).exp() / (2.0 * std::f64::consts::PI)
        };
        let n = 4000;
        let top = rho.asin();
        let h = top / n as f64;
        let mut sum = g(0.0) + g(top);
        for k in 1..n {
            sum += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
        }
        norm_cdf(x) * norm_cdf(y) + sum * h / 3.0
    }

    #[test]
    fn gaussian_cdf_against_plackett() {
        for &rho in &[-0.8, -0.3, 0.4, 0.9] {
            for &(u, v) in &[(0.1, 0.2), (0.5, 0.5), (0.9, 0.3), (0.02, 0.97), (0.75, 0.8)] {
                let want = plackett(norm_quantile(u), norm_quantile(v), rho);
                let got = CopulaSpec::Gaussian { rho }.cdf(u, v);
                assert!((got - want).abs() < 1e-10, "rho={rho} u={u} v={v}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn gaussian_orthant_value() {
        // C(1/2, 1/2) = 1/4 + asin(ρ)/(2π)
        for &rho in &[-0.9, -0.5, 0.2, 0.7] {
            let want = 0.25 + f64::asin(rho) / (2.0 * std::f64::consts::PI);
            assert!((CopulaSpec::Gaussian { rho }.cdf(0.5, 0.5) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn mo_survival_of_survival_is_connecting() {
        let s = CopulaSpec::mo_survival(0.4, 0.2).unwrap().survival_of();
        let c = CopulaSpec::mo_connecting(0.4, 0.2).unwrap();
        for i in 0..=20 {
            for j in 0..=20 {
                let (u, v) = (i as f64 / 20.0, j as f64 / 20.0);
                assert!((s.cdf(u, v) - c.cdf(u, v)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn transforms_collapse() {
        let g = CopulaSpec::gaussian(0.5).unwrap();
        assert_eq!(g.clone().transpose().transpose(), g);
        assert_eq!(g.clone().survival_of().survival_of(), g);
        let pi = CopulaSpec::Independence.survival_of();
        assert!((pi.cdf(0.3, 0.6) - 0.18).abs() < 1e-15);
    }

    #[test]
    fn parameter_errors() {
        assert!(CopulaSpec::shuffle(0.0).is_err());
        assert!(CopulaSpec::shuffle(1.0).is_ok());
        assert!(CopulaSpec::gaussian(1.0).is_err());
        assert!(CopulaSpec::mo_survival(0.0, 0.5).is_err());
        assert!(matches!(
            CopulaSpec::mix(vec![CopulaSpec::Independence], vec![0.9]),
            Err(CopulaError::WeightError(_))
        ));
        assert!(CopulaSpec::mix(vec![CopulaSpec::Independence, CopulaSpec::Comonotone], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn singular_masses() {
        let mo = CopulaSpec::mo_survival(0.4, 0.2).unwrap();
        assert!((mo.singular_mass().unwrap() - 0.08 / 0.52).abs() < 1e-15);
        assert_eq!(CopulaSpec::Independence.singular_mass().unwrap(), 0.0);
        let m = CopulaSpec::mix(vec![CopulaSpec::Independence, CopulaSpec::Comonotone], vec![0.5, 0.5]).unwrap();
        assert_eq!(m.singular_mass().unwrap(), 0.5);
    }

    #[test]
    fn order_statistics_density_has_unit_mass() {
        let inner = |u: f64| {
            let a = 1.0 - (1.0 - u).sqrt();
            integrate_smoothed(|v| CopulaSpec::OrderStatistics.density(u, v).unwrap(), a * a, 1.0, 1e-13, 200).value
        };
        let total = integrate_smoothed(inner, 0.0, 1.0, 1e-12, 400).value;
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn json_tree() {
        let s: CopulaSpec = serde_json::from_str(
            r#"{"node":"mixture","weights":[0.5,0.5],"components":[{"node":"shuffle","gamma":0.3},{"node":"transpose","inner":{"node":"gaussian","rho":0.5}}]}"#,
        )
        .unwrap();
        assert!(matches!(s, CopulaSpec::Mixture { .. }));
        let round: CopulaSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(round, s);
        assert!(serde_json::from_str::<CopulaSpec>(r#"{"node":"shuffle","gamma":0}"#).is_err());
        assert!(serde_json::from_str::<CopulaSpec>(r#"{"node":"gaussian","rho":0.5,"x":1}"#).is_err());
        let mo: CopulaSpec = serde_json::from_str(r#"{"node":"mo_survival","alpha1":0.4,"alpha2":0.2}"#).unwrap();
        assert_eq!(mo, CopulaSpec::mo_survival(0.4, 0.2).unwrap());
    }

    #[test]
    fn validate_builtins() {
        for c in all_families() {
            let v = validate_copula(&c, 64).unwrap();
            assert!(v.is_empty(), "{c}: {:?}", &v[..v.len().min(3)]);
        }
    }

    struct CorruptedShuffle(f64);

    impl Copula for CorruptedShuffle {
        fn cdf(&self, u: f64, v: f64) -> f64 {
            u.max(v).min((u - self.0).max(0.0) + (v + self.0 - 1.0).max(0.0))
        }
    }

    #[test]
    fn corrupted_formula_is_rejected() {
        let v = validate_copula(&CorruptedShuffle(0.3), 64).unwrap();
        assert!(v.iter().any(|x| x.kind == ViolationKind::Boundary));
        assert_eq!(CorruptedShuffle(0.3).singular_mass(), Err(CopulaError::UnknownMass));
    }

    #[test]
    fn shuffle_samples() {
        let s = CopulaSpec::shuffle(0.3).unwrap();
        for x in copula_sample(&s, 1, 10_000) {
            let d = x.v - x.u;
            assert!((d - 0.7).abs() < 1e-15 || (d + 0.3).abs() < 1e-15);
            assert_eq!(x.component, Component::Singular);
            assert!(!x.structural_tie);
        }
    }

    #[test]
    fn comonotone_samples_are_diagonal() {
        assert!(copula_sample(&CopulaSpec::Comonotone, 3, 1000).iter().all(|s| s.u == s.v));
    }

    #[test]
    fn sampling_is_reproducible() {
        let g = CopulaSpec::gaussian(0.3).unwrap();
        let a = copula_sample(&g, 11, 70_000);
        let b = crate::rng::pool(Some(1)).install(|| copula_sample(&g, 11, 70_000));
        assert_eq!(a, b);
    }

    #[test]
    fn mo_tie_fraction() {
        let mo = CopulaSpec::mo_survival(0.4, 0.2).unwrap();
        let n = 200_000;
        let ties = copula_sample(&mo, 5, n).iter().filter(|s| s.structural_tie).count();
        let p = ties as f64 / n as f64;
        assert!((p - 0.08 / 0.52).abs() < 0.004, "{p}");
    }
}
