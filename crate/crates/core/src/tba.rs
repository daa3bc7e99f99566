//! Target-based ranking of prospects by P(T ≤ X).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::copula::CopulaSpec;
use crate::dist::{check_order, Distribution, Relation, DEFAULT_ORDER_GRID};
use crate::precedence::{eta_best, Method, PrecedenceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TbaError {
    #[error("no prospects to rank")]
    NoProspects,
    #[error("prospect '{0}': give exactly one of copula, gamma_bound or joint_samples")]
    AmbiguousDependence(String),
    #[error("prospect '{0}': a marginal is required with copula or gamma_bound")]
    MissingMarginal(String),
    #[error("prospect '{name}': gamma_bound {gamma} is outside [0, 1]")]
    InvalidGamma { name: String, gamma: f64 },
    #[error("prospect '{0}': joint_samples is empty")]
    EmptySamples(String),
    #[error("prospect '{name}': {source}")]
    Evaluation { name: String, source: PrecedenceError },
}

/// How a prospect relates to the target.
#[derive(Debug, Clone, PartialEq)]
pub enum ProspectModel {
    /// Joint law C(G_T, G_X).
    Copula { marginal: Distribution, copula: CopulaSpec },
    /// Only η(C) ≥ γ is known.
    GammaBound { marginal: Distribution, gamma: f64 },
    /// Draws of (T, X) from the joint law.
    Sampled { pairs: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "RawProspect")]
pub struct Prospect {
    pub name: String,
    pub model: ProspectModel,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProspect {
    name: String,
    marginal: Option<Distribution>,
    copula: Option<CopulaSpec>,
    gamma_bound: Option<f64>,
    joint_samples: Option<Vec<(f64, f64)>>,
}

impl TryFrom<RawProspect> for Prospect {
    type Error = TbaError;

    fn try_from(raw: RawProspect) -> Result<Self, Self::Error> {
        let name = raw.name;
        let model = match (raw.copula, raw.gamma_bound, raw.joint_samples) {
            (Some(copula), None, None) => ProspectModel::Copula {
                marginal: raw.marginal.ok_or_else(|| TbaError::MissingMarginal(name.clone()))?,
                copula,
            },
            (None, Some(gamma), None) => {
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(TbaError::InvalidGamma { name, gamma });
                }
                ProspectModel::GammaBound {
                    marginal: raw.marginal.ok_or_else(|| TbaError::MissingMarginal(name.clone()))?,
                    gamma,
                }
            }
            (None, None, Some(pairs)) => {
                if pairs.is_empty() {
                    return Err(TbaError::EmptySamples(name));
                }
                ProspectModel::Sampled { pairs }
            }
            _ => return Err(TbaError::AmbiguousDependence(name)),
        };
        Ok(Prospect { name, model })
    }
}

impl Prospect {
    pub fn copula(name: &str, marginal: Distribution, copula: CopulaSpec) -> Self {
        Self { name: name.into(), model: ProspectModel::Copula { marginal, copula } }
    }

    pub fn gamma_bound(name: &str, marginal: Distribution, gamma: f64) -> Self {
        Self { name: name.into(), model: ProspectModel::GammaBound { marginal, gamma } }
    }

    pub fn sampled(name: &str, pairs: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), model: ProspectModel::Sampled { pairs } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Exact,
    Estimate,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingRow {
    pub name: String,
    pub eta_or_bound: f64,
    pub kind: RowKind,
    pub stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum RankingWarning {
    /// A value row sits above a bound row whose true value may be larger.
    MixedComparability { above: String, below: String },
    /// G_T ⪯_st G_X fails, so γ says nothing about P(T ≤ X).
    Incomparable { name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingTable {
    pub rows: Vec<RankingRow>,
    pub warnings: Vec<RankingWarning>,
}

/// Ranks prospects by P(T ≤ X), best first.
///
/// Prospect `i` uses seed `seed + i` when it falls back to Monte Carlo.
pub fn rank_prospects(
    target: &Distribution,
    prospects: &[Prospect],
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<RankingTable, TbaError> {
    if prospects.is_empty() {
        return Err(TbaError::NoProspects);
    }
    let mut rows = Vec::with_capacity(prospects.len());
    let mut warnings = Vec::new();
    for (i, p) in prospects.iter().enumerate() {
        let row = match &p.model {
            ProspectModel::Copula { marginal, copula } => {
                let r = eta_best(copula, target, marginal, n, seed.wrapping_add(i as u64), tol)
                    .map_err(|source| TbaError::Evaluation { name: p.name.clone(), source })?;
                RankingRow {
                    name: p.name.clone(),
                    eta_or_bound: r.eta,
                    kind: if r.method == Method::MonteCarlo { RowKind::Estimate } else { RowKind::Exact },
                    stderr: r.stderr_eta,
                    method: Some(r.method),
                    samples: r.samples,
                }
            }
            ProspectModel::GammaBound { marginal, gamma } => {
                let applicable = check_order(Relation::St, target, marginal, DEFAULT_ORDER_GRID)
                    .map(|r| r.holds)
                    .unwrap_or(false);
                if !applicable {
                    warnings.push(RankingWarning::Incomparable { name: p.name.clone() });
                }
                RankingRow {
                    name: p.name.clone(),
                    eta_or_bound: if applicable { *gamma } else { 0.0 },
                    kind: RowKind::LowerBound,
                    stderr: 0.0,
                    method: None,
                    samples: 0,
                }
            }
            ProspectModel::Sampled { pairs } => {
                let m = pairs.len() as f64;
                let eta = pairs.iter().filter(|(t, x)| t <= x).count() as f64 / m;
                RankingRow {
                    name: p.name.clone(),
                    eta_or_bound: eta,
                    kind: RowKind::Estimate,
                    stderr: (eta * (1.0 - eta) / m).sqrt(),
                    method: Some(Method::MonteCarlo),
                    samples: pairs.len() as u64,
                }
            }
        };
        rows.push(row);
    }
    rows.sort_by(|a, b| b.eta_or_bound.total_cmp(&a.eta_or_bound).then_with(|| a.name.cmp(&b.name)));
    for (i, above) in rows.iter().enumerate() {
        if above.kind == RowKind::LowerBound {
            continue;
        }
        for below in &rows[i + 1..] {
            if below.kind == RowKind::LowerBound && below.eta_or_bound > 0.0 {
                warnings.push(RankingWarning::MixedComparability {
                    above: above.name.clone(),
                    below: below.name.clone(),
                });
            }
        }
    }
    Ok(RankingTable { rows, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    use crate::special::norm_cdf;

    fn normal(m: f64) -> Distribution {
        Distribution::normal(m, 1.0).unwrap()
    }

    #[test]
    fn gaussian_prospects() {
        let c = CopulaSpec::gaussian(0.0).unwrap();
        let ps = [Prospect::copula("A", normal(1.0), c.clone()), Prospect::copula("B", normal(2.0), c)];
        let t = rank_prospects(&normal(0.0), &ps, 100_000, 1, 1e-9).unwrap();
        assert_eq!(t.rows[0].name, "B");
        assert!((t.rows[0].eta_or_bound - norm_cdf(SQRT_2)).abs() < 1e-15);
        assert!((t.rows[1].eta_or_bound - norm_cdf(FRAC_1_SQRT_2)).abs() < 1e-15);
        assert!(t.rows.iter().all(|r| r.kind == RowKind::Exact));
        assert!(t.warnings.is_empty());
    }

    #[test]
    fn larger_gamma_first() {
        let target = normal(0.0);
        let ps = [
            Prospect::gamma_bound("low", normal(1.0), 0.4),
            Prospect::gamma_bound("high", normal(2.0), 0.7),
        ];
        let t = rank_prospects(&target, &ps, 100_000, 1, 1e-9).unwrap();
        assert_eq!(t.rows[0].name, "high");
        assert_eq!(t.rows[0].kind, RowKind::LowerBound);
        assert!(t.warnings.is_empty());
    }

    #[test]
    fn bound_without_st_order_is_flagged() {
        let ps = [Prospect::gamma_bound("worse", normal(-1.0), 0.9)];
        let t = rank_prospects(&normal(0.0), &ps, 100_000, 1, 1e-9).unwrap();
        assert_eq!(t.rows[0].eta_or_bound, 0.0);
        assert_eq!(t.warnings, vec![RankingWarning::Incomparable { name: "worse".into() }]);
    }

    #[test]
    fn mixed_rows_warn() {
        let ps = [
            Prospect::copula("exact", normal(2.0), CopulaSpec::Independence),
            Prospect::gamma_bound("bound", normal(1.0), 0.6),
        ];
        let t = rank_prospects(&normal(0.0), &ps, 100_000, 1, 1e-9).unwrap();
        assert_eq!(t.rows[0].name, "exact");
        assert!(matches!(t.warnings[0], RankingWarning::MixedComparability { .. }));
    }

    #[test]
    fn ties_break_by_name() {
        let c = CopulaSpec::Independence;
        let ps = [Prospect::copula("b", normal(1.0), c.clone()), Prospect::copula("a", normal(1.0), c)];
        let t = rank_prospects(&normal(0.0), &ps, 100_000, 1, 1e-9).unwrap();
        assert_eq!(t.rows[0].name, "a");
    }

    #[test]
    fn json_prospects() {
        let p: Prospect = serde_json::from_str(
            r#"{"name":"A","marginal":{"kind":"normal","mean":1,"sd":1},"copula":{"node":"gaussian","rho":0}}"#,
        )
        .unwrap();
        assert!(matches!(p.model, ProspectModel::Copula { .. }));
        let p: Prospect = serde_json::from_str(r#"{"name":"S","joint_samples":[[0,1],[2,1]]}"#).unwrap();
        assert!(matches!(p.model, ProspectModel::Sampled { .. }));
        let both = r#"{"name":"X","marginal":{"kind":"uniform","a":0,"b":1},"copula":{"node":"independence"},"gamma_bound":0.5}"#;
        assert!(serde_json::from_str::<Prospect>(both).is_err());
        assert!(serde_json::from_str::<Prospect>(r#"{"name":"Y","gamma_bound":0.5}"#).is_err());
        assert!(rank_prospects(&normal(0.0), &[], 10, 0, 1e-9).is_err());
    }
}
