//! η(C, G₁, G₂) = P(X₁ ≤ X₂) and ξ = P(X₁ = X₂) by closed form, exact
//! discrete summation, adaptive quadrature or Monte Carlo, plus the level-γ
//! precedence test and L_γ / B_γ classification.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::copula::{Component, Copula, CopulaError, CopulaSpec};
use crate::dist::{check_order, DistError, Distribution, Relation, DEFAULT_ORDER_GRID};
use crate::quad::integrate_smoothed;
use crate::rng::{block_rng, blocks};
use crate::special::norm_cdf;

pub const MIN_MC_SAMPLES: usize = 10_000;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DISCRETE_ATOM_LIMIT: usize = 10_000;
/// Half-width of the Monte Carlo decision band, in standard errors.
pub const MC_BAND: f64 = 3.0;
const TIE_RELATIVE: f64 = 1e-9;
const CLOSED_FORM_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrecedenceError {
    #[error("Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("quantile draw is not finite at u = {u}, v = {v}")]
    NonFiniteDraw { u: f64, v: f64 },
    #[error("copula has no density in closed form; use Monte Carlo")]
    NoDensity,
    #[error("quadrature needs continuous strictly increasing marginals")]
    NotClassG,
    #[error("exact discrete summation needs two atom marginals")]
    NotDiscrete,
    #[error("{0} atoms exceed the exact-summation budget of {DISCRETE_ATOM_LIMIT}")]
    SizeLimit(usize),
    #[error("gamma must lie in [0, 1], got {0}")]
    InvalidGamma(f64),
    #[error("estimate {} is within {MC_BAND} standard errors of gamma = {gamma}", .report.eta)]
    Inconclusive { gamma: f64, report: PrecedenceReport },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Copula(#[from] CopulaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    DiscreteExact,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecedenceReport {
    pub eta: f64,
    pub xi: f64,
    pub method: Method,
    pub stderr_eta: f64,
    pub stderr_xi: f64,
    pub samples: u64,
    pub seed: Option<u64>,
}

impl PrecedenceReport {
    fn exact(eta: f64, xi: f64, method: Method) -> Self {
        Self { eta, xi, method, stderr_eta: 0.0, stderr_xi: 0.0, samples: 0, seed: None }
    }

    /// P(X₁ < X₂).
    pub fn strict(&self) -> f64 {
        self.eta - self.xi
    }
}

/// η(C) and ξ(C) for every node of the copula tree, with equal continuous
/// marginals.
pub fn eta_copula(spec: &CopulaSpec) -> (f64, f64) {
    match spec {
        CopulaSpec::Independence | CopulaSpec::Countermonotone | CopulaSpec::Gaussian { .. } => (0.5, 0.0),
        CopulaSpec::Comonotone => (1.0, 1.0),
        CopulaSpec::Shuffle { gamma } => (*gamma, if *gamma == 1.0 { 1.0 } else { 0.0 }),
        CopulaSpec::OrderStatistics => (2.0 - std::f64::consts::FRAC_PI_2, 0.0),
        CopulaSpec::MoSurvival { alpha1, alpha2 } => mo_survival_eta(*alpha1, *alpha2),
        CopulaSpec::MoConnecting { alpha1, alpha2 } => {
            let (eta, xi) = mo_survival_eta(*alpha1, *alpha2);
            (1.0 - eta + xi, xi)
        }
        CopulaSpec::Mixture { weights, components } => {
            weights.iter().zip(components).fold((0.0, 0.0), |(e, x), (w, c)| {
                let (ce, cx) = eta_copula(c);
                (e + w * ce, x + w * cx)
            })
        }
        CopulaSpec::Transpose { inner } | CopulaSpec::Survival { inner } => {
            let (eta, xi) = eta_copula(inner);
            (1.0 - eta + xi, xi)
        }
    }
}

/// Measure of {u ≤ v} under the Marshall–Olkin survival-form copula.
///
/// The singular part sits on u^α₁ = v^α₂, which meets the diagonal only
/// when α₁ = α₂. There it lies on the diagonal and contributes the tie mass
/// α/(2 − α).
fn mo_survival_eta(alpha1: f64, alpha2: f64) -> (f64, f64) {
    if alpha1 < alpha2 {
        (1.0 / (2.0 - alpha1), 0.0)
    } else if alpha1 > alpha2 {
        ((1.0 - alpha2) / (2.0 - alpha2), 0.0)
    } else {
        (1.0 / (2.0 - alpha1), alpha1 / (2.0 - alpha1))
    }
}

/// Closed-form (η, ξ), or `None` when no formula applies.
///
/// With both marginals absent the result is η(C). With marginals the
/// registry covers equal atomless marginals, Gaussian and independence
/// copulas with normal marginals, independence with exponential marginals,
/// and the Marshall–Olkin connecting copula with its native exponential
/// marginals; transposes, survival copulas and mixtures resolve through
/// their components.
pub fn eta_exact(spec: &CopulaSpec, g1: Option<&Distribution>, g2: Option<&Distribution>) -> Option<(f64, f64)> {
    match (g1, g2) {
        (None, None) => Some(eta_copula(spec)),
        (Some(a), Some(b)) => with_marginals(spec, a, b),
        _ => None,
    }
}

fn with_marginals(spec: &CopulaSpec, g1: &Distribution, g2: &Distribution) -> Option<(f64, f64)> {
    use Distribution as D;
    if g1 == g2 && !g1.has_atoms() {
        return Some(eta_copula(spec));
    }
    match (spec, g1, g2) {
        (CopulaSpec::Gaussian { rho }, D::Normal { mean: m1, sd: s1 }, D::Normal { mean: m2, sd: s2 }) => {
            normal_difference(*rho, *m1, *s1, *m2, *s2)
        }
        (CopulaSpec::Independence, D::Normal { mean: m1, sd: s1 }, D::Normal { mean: m2, sd: s2 }) => {
            normal_difference(0.0, *m1, *s1, *m2, *s2)
        }
        (CopulaSpec::Independence, D::Exponential { rate: r1 }, D::Exponential { rate: r2 }) => {
            Some((r1 / (r1 + r2), 0.0))
        }
        (CopulaSpec::MoConnecting { alpha1, alpha2 }, D::Exponential { rate: r1 }, D::Exponential { rate: r2 })
            if (r1 * alpha1 - 1.0).abs() <= 1e-12 && (r2 * alpha2 - 1.0).abs() <= 1e-12 =>
        {
            let d = alpha1 + alpha2 - alpha1 * alpha2;
            Some((alpha2 / d, alpha1 * alpha2 / d))
        }
        (CopulaSpec::Transpose { inner }, _, _) => {
            let (eta, xi) = with_marginals(inner, g2, g1)?;
            Some((1.0 - eta + xi, xi))
        }
        (CopulaSpec::Survival { inner }, _, _) if !g1.has_atoms() && !g2.has_atoms() => {
            let (eta, xi) = with_marginals(inner, &g1.reflect()?, &g2.reflect()?)?;
            Some((1.0 - eta + xi, xi))
        }
        (CopulaSpec::Mixture { weights, components }, _, _) => {
            let mut acc = (0.0, 0.0);
            for (w, c) in weights.iter().zip(components) {
                let (e, x) = with_marginals(c, g1, g2)?;
                acc = (acc.0 + w * e, acc.1 + w * x);
            }
            Some(acc)
        }
        _ => None,
    }
}

/// X₂ − X₁ is normal with mean μ₂ − μ₁ and variance σ₁² + σ₂² − 2ρσ₁σ₂.
fn normal_difference(rho: f64, m1: f64, s1: f64, m2: f64, s2: f64) -> Option<(f64, f64)> {
    let var = s1 * s1 + s2 * s2 - 2.0 * rho * s1 * s2;
    (var > 0.0).then(|| (norm_cdf((m2 - m1) / var.sqrt()), 0.0))
}

#[derive(Default, Clone, Copy)]
struct Counts {
    le: u64,
    ties: u64,
}

/// Monte Carlo estimate from `n` copula draws pushed through the marginal
/// quantiles.
///
/// A draw is a tie when it comes from a singular component and the two
/// coordinates coincide up to rounding, or when the coordinates are equal
/// and a marginal has atoms. Ties count towards η.
pub fn eta_mc(
    spec: &CopulaSpec,
    g1: &Distribution,
    g2: &Distribution,
    n: usize,
    seed: u64,
) -> Result<PrecedenceReport, PrecedenceError> {
    if n < MIN_MC_SAMPLES {
        return Err(PrecedenceError::TooFewSamples(n));
    }
    let atoms = g1.has_atoms() || g2.has_atoms();
    let partial: Result<Vec<Counts>, PrecedenceError> = blocks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, len)| {
            let mut rng = block_rng(seed, b);
            let mut c = Counts::default();
            for _ in 0..len {
                let s = spec.sample_one(&mut rng);
                let x1 = g1.quantile(s.u)?;
                let x2 = g2.quantile(s.v)?;
                if !(x1.is_finite() && x2.is_finite()) {
                    return Err(PrecedenceError::NonFiniteDraw { u: s.u, v: s.v });
                }
                let tie = if x1 == x2 {
                    atoms || s.component == Component::Singular
                } else {
                    s.component == Component::Singular
                        && (x1 - x2).abs() <= TIE_RELATIVE * x1.abs().max(x2.abs()).max(1.0)
                };
                if tie {
                    c.ties += 1;
                    c.le += 1;
                } else if x1 <= x2 {
                    c.le += 1;
                }
            }
            Ok(c)
        })
        .collect();
    let total = partial?.into_iter().fold(Counts::default(), |a, c| Counts {
        le: a.le + c.le,
        ties: a.ties + c.ties,
    });
    let nf = n as f64;
    let eta = total.le as f64 / nf;
    let xi = total.ties as f64 / nf;
    Ok(PrecedenceReport {
        eta,
        xi,
        method: Method::MonteCarlo,
        stderr_eta: (eta * (1.0 - eta) / nf).sqrt(),
        stderr_xi: (xi * (1.0 - xi) / nf).sqrt(),
        samples: n as u64,
        seed: Some(seed),
    })
}

/// v-coordinates at which the copula density jumps along the vertical line
/// through u. `transposed` asks for the curve solved for the other axis.
fn density_breaks(spec: &CopulaSpec, u: f64, transposed: bool, out: &mut Vec<f64>) {
    match spec {
        CopulaSpec::OrderStatistics => {
            // boundary curve v = (1 − √(1−u))², inverse u = 1 − (1 − √v)²
            let b = if transposed {
                let r = 1.0 - u.sqrt();
                1.0 - r * r
            } else {
                let r = 1.0 - (1.0 - u).sqrt();
                r * r
            };
            out.push(b);
        }
        CopulaSpec::Mixture { components, .. } => {
            for c in components {
                density_breaks(c, u, transposed, out);
            }
        }
        CopulaSpec::Transpose { inner } => density_breaks(inner, u, !transposed, out),
        CopulaSpec::Survival { inner } => {
            let start = out.len();
            density_breaks(inner, 1.0 - u, transposed, out);
            for b in &mut out[start..] {
                *b = 1.0 - *b;
            }
        }
        _ => {}
    }
}

/// η by nested adaptive quadrature of the copula density over
/// {(u, v) : v ≥ G₂(G₁⁻¹(u))}.
pub fn eta_quadrature(
    spec: &CopulaSpec,
    g1: &Distribution,
    g2: &Distribution,
    tol: f64,
) -> Result<PrecedenceReport, PrecedenceError> {
    if !spec.has_density() {
        return Err(PrecedenceError::NoDensity);
    }
    if !g1.is_class_g() || !g2.is_class_g() {
        return Err(PrecedenceError::NotClassG);
    }
    let same = g1 == g2;
    let lower = |u: f64| -> f64 {
        if same {
            u
        } else {
            g2.cdf(g1.quantile(u).unwrap_or(f64::NAN))
        }
    };
    let inner_tol = 0.1 * tol;
    let mut inner_error = 0.0f64;
    let mut breaks = Vec::new();
    let mut outer = |u: f64| -> f64 {
        let b = lower(u);
        if b.is_nan() || b >= 1.0 {
            return 0.0;
        }
        breaks.clear();
        density_breaks(spec, u, false, &mut breaks);
        breaks.retain(|&x| x > b && x < 1.0);
        breaks.sort_by(f64::total_cmp);
        let mut total = 0.0;
        let mut left = b.max(0.0);
        for &right in breaks.iter().chain(std::iter::once(&1.0)) {
            let est = integrate_smoothed(|v| spec.density(u, v).unwrap_or(0.0), left, right, inner_tol, 200);
            inner_error = inner_error.max(est.error);
            total += est.value;
            left = right;
        }
        total
    };

    let mut splits: Vec<f64> = g1
        .breakpoints()
        .into_iter()
        .chain(g2.breakpoints())
        .map(|x| g1.cdf(x))
        .filter(|&p| p > 0.0 && p < 1.0)
        .collect();
    splits.push(1.0);
    splits.sort_by(f64::total_cmp);
    splits.dedup();

    let mut eta = 0.0;
    let mut error = 0.0;
    let mut left = 0.0;
    for &right in &splits {
        let est = integrate_smoothed(&mut outer, left, right, 0.5 * tol / splits.len() as f64, 2000);
        eta += est.value;
        error += est.error;
        left = right;
    }
    Ok(PrecedenceReport {
        eta: eta.clamp(0.0, 1.0),
        xi: 0.0,
        method: Method::Quadrature,
        stderr_eta: error + inner_error,
        stderr_xi: 0.0,
        samples: 0,
        seed: None,
    })
}

/// Exact η and ξ for two atom marginals by summing copula rectangle
/// measures over atom pairs.
pub fn eta_discrete_exact(
    spec: &CopulaSpec,
    g1: &Distribution,
    g2: &Distribution,
) -> Result<PrecedenceReport, PrecedenceError> {
    let (Distribution::DiscreteAtoms(a), Distribution::DiscreteAtoms(b)) = (g1, g2) else {
        return Err(PrecedenceError::NotDiscrete);
    };
    let total_atoms = a.len() + b.len();
    if total_atoms > DISCRETE_ATOM_LIMIT {
        return Err(PrecedenceError::SizeLimit(total_atoms));
    }
    let c1: Vec<f64> = std::iter::once(0.0).chain(a.cumulative().iter().copied()).collect();
    let c2: Vec<f64> = std::iter::once(0.0).chain(b.cumulative().iter().copied()).collect();
    let (xs, ys) = (a.xs(), b.xs());
    let mut eta = 0.0;
    let mut xi = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let (lo, hi) = (c1[i], c1[i + 1]);
        // atoms y_j ≥ x form the suffix starting at k
        let k = ys.partition_point(|&y| y < x);
        let below = spec.cdf(hi, c2[k]) - spec.cdf(lo, c2[k]);
        eta += ((hi - lo) - below).max(0.0);
        if k < ys.len() && ys[k] == x {
            let m = spec.cdf(hi, c2[k + 1]) - spec.cdf(lo, c2[k + 1]) - below;
            xi += m.max(0.0);
        }
    }
    let eta = eta.clamp(0.0, 1.0);
    Ok(PrecedenceReport::exact(eta, xi.min(eta), Method::DiscreteExact))
}

/// η by the most accurate available method: closed form, then exact
/// discrete summation, then quadrature, then Monte Carlo.
pub fn eta_best(
    spec: &CopulaSpec,
    g1: &Distribution,
    g2: &Distribution,
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<PrecedenceReport, PrecedenceError> {
    if let Some((eta, xi)) = eta_exact(spec, Some(g1), Some(g2)) {
        return Ok(PrecedenceReport::exact(eta, xi, Method::ClosedForm));
    }
    if let Ok(r) = eta_discrete_exact(spec, g1, g2) {
        return Ok(r);
    }
    if spec.has_density() && g1.is_class_g() && g2.is_class_g() {
        return eta_quadrature(spec, g1, g2, tol);
    }
    eta_mc(spec, g1, g2, n, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpLevel {
    pub gamma: f64,
    pub holds: bool,
    pub report: PrecedenceReport,
}

/// Whether P(X₁ ≤ X₂) ≥ γ.
///
/// Monte Carlo estimates within [`MC_BAND`] standard errors of γ give
/// [`PrecedenceError::Inconclusive`].
pub fn sp_level(
    spec: &CopulaSpec,
    g1: &Distribution,
    g2: &Distribution,
    gamma: f64,
    n: usize,
    seed: u64,
) -> Result<SpLevel, PrecedenceError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(PrecedenceError::InvalidGamma(gamma));
    }
    let report = eta_best(spec, g1, g2, n, seed, DEFAULT_TOLERANCE)?;
    let margin = match report.method {
        Method::MonteCarlo => {
            let band = MC_BAND * report.stderr_eta;
            if (report.eta - gamma).abs() <= band {
                return Err(PrecedenceError::Inconclusive { gamma, report });
            }
            0.0
        }
        Method::Quadrature => report.stderr_eta.max(CLOSED_FORM_SLACK),
        Method::ClosedForm | Method::DiscreteExact => CLOSED_FORM_SLACK,
    };
    Ok(SpLevel { gamma, holds: report.eta >= gamma - margin, report })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub gamma: f64,
    #[serde(rename = "in_L_gamma")]
    pub in_l_gamma: bool,
    #[serde(rename = "in_B_gamma")]
    pub in_b_gamma: bool,
    pub eta_value: f64,
    pub tolerance: f64,
}

/// L_γ and B_γ membership from η(C).
pub fn classify(spec: &CopulaSpec, gamma: f64, tol: f64) -> Result<ClassVerdict, PrecedenceError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(PrecedenceError::InvalidGamma(gamma));
    }
    let (eta, _) = eta_copula(spec);
    Ok(ClassVerdict {
        gamma,
        in_l_gamma: eta >= gamma - tol,
        in_b_gamma: (eta - gamma).abs() <= tol,
        eta_value: eta,
        tolerance: tol,
    })
}

/// L_γ and B_γ membership from a Monte Carlo report, with the decision band
/// set to [`MC_BAND`] standard errors.
pub fn classify_estimate(report: &PrecedenceReport, gamma: f64) -> ClassVerdict {
    let tol = MC_BAND * report.stderr_eta;
    ClassVerdict {
        gamma,
        in_l_gamma: report.eta >= gamma - tol,
        in_b_gamma: (report.eta - gamma).abs() <= tol,
        eta_value: report.eta,
        tolerance: tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    pub bound: f64,
    pub applicable: bool,
}

/// η(C) as a lower bound for η(C, G₁, G₂), valid when G₁ ⪯_st G₂.
pub fn eta_lower_bound(
    spec: &CopulaSpec,
    g1: &Distribution,
    g2: &Distribution,
) -> Result<LowerBound, PrecedenceError> {
    let applicable = check_order(Relation::St, g1, g2, DEFAULT_ORDER_GRID)?.holds;
    let bound = if applicable { eta_copula(spec).0 } else { 0.0 };
    Ok(LowerBound { bound, applicable })
}
