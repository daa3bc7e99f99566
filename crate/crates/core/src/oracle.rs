//! Construction-based simulators and a bracketing grid integrator.
//!
//! Everything here draws from its own generator and evaluates events
//! directly on the simulated variables, so agreement with `precedence` is
//! independent evidence.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Exp1, Open01};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::copula::{Copula, CopulaSpec};
use crate::dist::Distribution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("load-sharing model needs 1 < lambda < beta < 1 + lambda, got lambda = {lambda}, beta = {beta}")]
    InvalidModel { lambda: f64, beta: f64 },
    #[error("Marshall-Olkin parameters must lie in (0, 1), got ({0}, {1})")]
    InvalidAlpha(f64, f64),
    #[error("grid must be at least 16, got {0}")]
    GridTooSmall(usize),
    #[error("need at least one sample")]
    NoSamples,
}

/// Two-unit load-sharing system. Y is exponential with rate λ; X has
/// failure rate α = 1 while Y works and β after Y fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadSharingModel {
    lambda: f64,
    beta: f64,
}

impl LoadSharingModel {
    pub fn new(lambda: f64, beta: f64) -> Result<Self, OracleError> {
        if !(1.0 < lambda && lambda < beta && beta < 1.0 + lambda) {
            return Err(OracleError::InvalidModel { lambda, beta });
        }
        Ok(Self { lambda, beta })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        1.0
    }

    /// P(X > x) in closed form.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let k = self.lambda / (1.0 + self.lambda - self.beta);
        (1.0 - k) * (-(1.0 + self.lambda) * x).exp() + k * (-self.beta * x).exp()
    }
}

pub fn load_sharing_sample(model: &LoadSharingModel, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let e1: f64 = rng.sample(Exp1);
            let e2: f64 = rng.sample(Exp1);
            let y = e2 / model.lambda;
            let x = if e1 < y { e1 } else { y + (e1 - y) / model.beta };
            (x, y)
        })
        .collect()
}

/// (T, X′, X″) with T = min(Y₁, Y₂), X′ = max(Y₁, Y₂), X″ = max(Y₃, Y₄, Y₅)
/// for five independent draws from `base`.
pub fn order_stats_triple_sample(n: usize, seed: u64, base: &Distribution) -> Vec<(f64, f64, f64)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let draw = |rng: &mut StdRng| -> f64 {
        let u: f64 = rng.sample(Open01);
        base.quantile(u).expect("open-interval probability")
    };
    (0..n)
        .map(|_| {
            let y: [f64; 5] = std::array::from_fn(|_| draw(&mut rng));
            (y[0].min(y[1]), y[0].max(y[1]), y[2].max(y[3]).max(y[4]))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoDraw {
    pub x1: f64,
    pub x2: f64,
    pub tie: bool,
}

/// X₁ = V ∧ Z, X₂ = W ∧ Z with V, W, Z exponential of rates 1/α₁ − 1,
/// 1/α₂ − 1 and 1.
pub fn mo_construction_sample(alpha1: f64, alpha2: f64, n: usize, seed: u64) -> Result<Vec<MoDraw>, OracleError> {
    if !(alpha1 > 0.0 && alpha1 < 1.0 && alpha2 > 0.0 && alpha2 < 1.0) {
        return Err(OracleError::InvalidAlpha(alpha1, alpha2));
    }
    let (mu1, mu2) = (1.0 / alpha1 - 1.0, 1.0 / alpha2 - 1.0);
    let mut rng = StdRng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let v: f64 = rng.sample::<f64, _>(Exp1) / mu1;
            let w: f64 = rng.sample::<f64, _>(Exp1) / mu2;
            let z: f64 = rng.sample(Exp1);
            MoDraw { x1: v.min(z), x2: w.min(z), tie: z <= v.min(w) }
        })
        .collect())
}

/// Certified bounds on η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub low: f64,
    pub high: f64,
}

impl Bracket {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

/// Brackets η(C, G₁, G₂) by splitting [0, 1]² into grid² cells. A cell
/// (u₀, u₁] × (v₀, v₁] lies inside {G₁⁻¹(u) ≤ G₂⁻¹(v)} when
/// G₁⁻¹(u₁) ≤ G₂⁻¹(v₀) and outside when G₁⁻¹(u₀) > G₂⁻¹(v₁).
pub fn grid_eta_oracle<C: Copula + Sync + ?Sized>(
    copula: &C,
    g1: &Distribution,
    g2: &Distribution,
    grid: usize,
) -> Result<Bracket, OracleError> {
    if grid < 16 {
        return Err(OracleError::GridTooSmall(grid));
    }
    let pts: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
    let q1: Vec<f64> = pts.iter().map(|&p| g1.quantile(p).expect("grid probability")).collect();
    let q2: Vec<f64> = pts.iter().map(|&p| g2.quantile(p).expect("grid probability")).collect();
    let table: Vec<Vec<f64>> = pts
        .par_iter()
        .map(|&u| pts.iter().map(|&v| copula.cdf(u, v)).collect())
        .collect();
    // q₂ is nondecreasing, so per row the inside cells form a suffix
    // j ≥ k and the outside cells a prefix j < s; both sums telescope
    let (mut low, mut high) = (0.0, 0.0);
    for i in 0..grid {
        let strip = |j: usize| table[i + 1][j] - table[i][j];
        let k = q2[..grid].partition_point(|&q| q < q1[i + 1]);
        let s = q2[1..].partition_point(|&q| q < q1[i]);
        let s = s.min(k);
        low += (strip(grid) - strip(k)).max(0.0);
        high += (strip(grid) - strip(s)).max(0.0);
    }
    let slack = 4.0 * f64::EPSILON * grid as f64;
    Ok(Bracket { low: (low - slack).max(0.0), high: (high + slack).min(1.0) })
}

/// One differential check: an oracle value against a reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn within(name: &str, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            expected,
            tolerance,
            passed: (observed - expected).abs() <= tolerance,
        }
    }

    fn at_most(name: &str, observed: f64, limit: f64) -> Self {
        Self { name: name.into(), observed, expected: limit, tolerance: 0.0, passed: observed <= limit }
    }
}

fn fraction<T>(xs: &[T], pred: impl Fn(&T) -> bool) -> f64 {
    xs.iter().filter(|x| pred(x)).count() as f64 / xs.len() as f64
}

/// sup over `grid` of F̂_b − F̂_a. Positive values count against a ⪯_st b.
fn ecdf_excess(a: &mut [f64], b: &mut [f64], grid: &[f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let ecdf = |xs: &[f64], t: f64| xs.partition_point(|&x| x <= t) as f64 / xs.len() as f64;
    grid.iter().map(|&t| ecdf(b, t) - ecdf(a, t)).fold(f64::NEG_INFINITY, f64::max)
}

/// Dvoretzky–Kiefer–Wolfowitz half-width at confidence 1 − 10⁻³.
pub fn dkw_epsilon(n: usize) -> f64 {
    ((2.0f64 / 1e-3).ln() / (2.0 * n as f64)).sqrt()
}

/// Runs every worked example through the construction samplers and the
/// grid bracket and compares against closed forms and the main estimators.
pub fn verify_all(n: usize, seed: u64) -> Result<Vec<CheckOutcome>, OracleError> {
    use crate::precedence::{eta_copula, eta_mc};

    if n == 0 {
        return Err(OracleError::NoSamples);
    }
    let mut out = Vec::new();

    let model = LoadSharingModel::new(2.0, 2.5)?;
    let pairs = load_sharing_sample(&model, n, seed);
    out.push(CheckOutcome::within(
        "load_sharing.p_x_le_y",
        fraction(&pairs, |p| p.0 <= p.1),
        1.0 / (1.0 + model.lambda()),
        0.002,
    ));
    out.push(CheckOutcome::within(
        "load_sharing.survival_at_0.5",
        fraction(&pairs, |p| p.0 > 0.5),
        model.survival(0.5),
        0.003,
    ));
    let worst = (1..=32)
        .map(|k| {
            let x = 0.1 * k as f64;
            let s = fraction(&pairs, |p| p.0 > x);
            let bound = (-model.lambda() * x).exp();
            (s - bound) / (3.0 * (bound * (1.0 - bound) / n as f64).sqrt())
        })
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(CheckOutcome::at_most("load_sharing.st_excess_in_stderr_units", worst, 1.0));

    let triples = order_stats_triple_sample(n, seed.wrapping_add(1), &Distribution::standard_uniform());
    out.push(CheckOutcome::within(
        "order_stats.p_t_le_x1",
        fraction(&triples, |t| t.0 <= t.1),
        1.0,
        0.0,
    ));
    out.push(CheckOutcome::within(
        "order_stats.p_t_le_x2",
        fraction(&triples, |t| t.0 <= t.2),
        0.9,
        0.002,
    ));
    let mut xp: Vec<f64> = triples.iter().map(|t| t.1).collect();
    let mut xpp: Vec<f64> = triples.iter().map(|t| t.2).collect();
    let grid: Vec<f64> = (1..=32).map(|k| k as f64 / 33.0).collect();
    out.push(CheckOutcome::at_most(
        "order_stats.x1_st_below_x2_excess",
        ecdf_excess(&mut xp, &mut xpp, &grid),
        2.0 * dkw_epsilon(n),
    ));

    let (a1, a2) = (0.4, 0.2);
    let d = a1 + a2 - a1 * a2;
    let draws = mo_construction_sample(a1, a2, n, seed.wrapping_add(2))?;
    let c_tie = fraction(&draws, |m| m.tie);
    let c_lt = fraction(&draws, |m| m.x1 < m.x2);
    let c_le = fraction(&draws, |m| m.x1 <= m.x2);
    out.push(CheckOutcome::within("mo.construction_xi", c_tie, a1 * a2 / d, 0.002));
    out.push(CheckOutcome::within("mo.construction_strict", c_lt, (1.0 - a1) * a2 / d, 0.002));
    out.push(CheckOutcome::within("mo.construction_eta", c_le, a2 / d, 0.002));
    let spec = CopulaSpec::mo_connecting(a1, a2).expect("valid alphas");
    let e1 = Distribution::exponential(1.0 / a1).expect("positive rate");
    let e2 = Distribution::exponential(1.0 / a2).expect("positive rate");
    if let Ok(r) = eta_mc(&spec, &e1, &e2, n.max(10_000), seed.wrapping_add(3)) {
        let sd = (c_le * (1.0 - c_le) / n as f64).sqrt();
        out.push(CheckOutcome::within(
            "mo.copula_sampler_vs_construction_eta",
            r.eta,
            c_le,
            3.0 * (r.stderr_eta.powi(2) + sd * sd).sqrt(),
        ));
        let sd = (c_tie * (1.0 - c_tie) / n as f64).sqrt();
        out.push(CheckOutcome::within(
            "mo.copula_sampler_vs_construction_xi",
            r.xi,
            c_tie,
            3.0 * (r.stderr_xi.powi(2) + sd * sd).sqrt(),
        ));
    }

    let u = Distribution::standard_uniform();
    for (name, spec, grid) in [
        ("grid.independence", CopulaSpec::Independence, 256),
        ("grid.shuffle_0.3", CopulaSpec::Shuffle { gamma: 0.3 }, 512),
        ("grid.order_statistics", CopulaSpec::OrderStatistics, 512),
    ] {
        let b = grid_eta_oracle(&spec, &u, &u, grid)?;
        let (eta, _) = eta_copula(&spec);
        out.push(CheckOutcome {
            name: name.into(),
            observed: eta,
            expected: 0.5 * (b.low + b.high),
            tolerance: 0.5 * b.width(),
            passed: b.contains(eta),
        });
    }
    Ok(out)
}
