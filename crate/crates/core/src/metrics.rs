//! Quantifiers for comparing strategies: efficiency, error distance,
//! variational distance and CDF views.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::game::GameConfig;
use crate::pfunction::{PFunction, Probability, Provenance, WinnerKind};
use crate::strategy::StrategySpec;

/// Which grid the efficiency sum runs over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WinnerView {
    #[default]
    Exact,
    /// Minimum-winner grids; kept for exploration only.
    Min,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EfficiencyParams {
    pub beta: f64,
    pub view: WinnerView,
    /// Normalizing grid; `None` uses the closed-form random strategy.
    pub reference: Option<PFunction<f64>>,
}

impl Default for EfficiencyParams {
    fn default() -> Self {
        EfficiencyParams {
            beta: 2.0,
            view: WinnerView::Exact,
            reference: None,
        }
    }
}

impl EfficiencyParams {
    pub fn with_beta(beta: f64) -> Self {
        EfficiencyParams {
            beta,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub eta: f64,
    /// Weighted sum of the reference grid.
    pub normalization: f64,
    pub beta: f64,
    pub view: WinnerView,
    pub strategy: String,
    pub config: GameConfig,
    pub provenance: Provenance,
}

/// Closed-form random-strategy grid for `config`, as floats.
pub fn random_reference(config: &GameConfig) -> Result<PFunction<f64>> {
    Ok(exact::exact_pfunction(&StrategySpec::random(), config)?.to_f64())
}

/// `sum_{a, w >= 1} P(a, w) (w / a)^beta`.
fn weighted_sum(rows: &[Vec<f64>], beta: f64) -> f64 {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let a = (i + 1) as f64;
            row.iter()
                .enumerate()
                .skip(1)
                .map(|(w, p)| p * (w as f64 / a).powf(beta))
                .sum::<f64>()
        })
        .sum()
}

fn view_rows(p: &PFunction<f64>, view: WinnerView) -> Result<Vec<Vec<f64>>> {
    match (p.kind(), view) {
        (WinnerKind::ExactWinners, WinnerView::Exact) => Ok(p.rows().to_vec()),
        (_, WinnerView::Min) => Ok(p.min_view().rows().to_vec()),
        (WinnerKind::MinWinners, WinnerView::Exact) => Err(Error::ShapeMismatch(
            "exact-winner efficiency needs an exact-winner grid".into(),
        )),
    }
}

/// Efficiency `eta`, normalized so that the random strategy scores 1.
pub fn efficiency<T: Probability>(p: &PFunction<T>, params: &EfficiencyParams) -> Result<EfficiencyReport> {
    if params.beta.is_nan() || params.beta <= 0.0 {
        return Err(Error::InvalidConfig(format!("beta must be positive, got {}", params.beta)));
    }
    let p = p.to_f64();
    let reference = match &params.reference {
        Some(r) => r.clone(),
        None => random_reference(p.config())?,
    };
    same_shape(p.config(), reference.config())?;
    let normalization = weighted_sum(&view_rows(&reference, params.view)?, params.beta);
    let eta = weighted_sum(&view_rows(&p, params.view)?, params.beta) / normalization;
    Ok(EfficiencyReport {
        eta,
        normalization,
        beta: params.beta,
        view: params.view,
        strategy: p.strategy().to_string(),
        config: *p.config(),
        provenance: p.provenance().clone(),
    })
}

fn same_shape(a: &GameConfig, b: &GameConfig) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!("grids for {a} and {b}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub epsilon: f64,
    pub strategies: (String, String),
    pub config: GameConfig,
}

/// `eps = sum_{a, w} |P_i(a, w) - P_j(a, w)| / ((n + 1) * rows)`, where
/// `rows` is the number of budgets in the grid (`N` when `a_max = N`).
pub fn error_distance<T: Probability, U: Probability>(
    p_i: &PFunction<T>,
    p_j: &PFunction<U>,
) -> Result<DistanceReport> {
    same_shape(p_i.config(), p_j.config())?;
    if p_i.kind() != p_j.kind() {
        return Err(Error::ShapeMismatch("cannot compare exact- and minimum-winner grids".into()));
    }
    let config = *p_i.config();
    let total: f64 = p_i
        .rows()
        .iter()
        .zip(p_j.rows())
        .flat_map(|(ri, rj)| ri.iter().zip(rj).map(|(x, y)| (x.to_f64() - y.to_f64()).abs()))
        .sum();
    let cells = (config.keys() + 1) * config.max_attempts();
    Ok(DistanceReport {
        epsilon: total / cells as f64,
        strategies: (p_i.strategy().to_string(), p_j.strategy().to_string()),
        config,
    })
}

/// Half the L1 distance between two distributions over `w`.
pub fn variational_distance(row_i: &[f64], row_j: &[f64]) -> f64 {
    assert_eq!(row_i.len(), row_j.len(), "rows over different supports");
    0.5 * row_i.iter().zip(row_j).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// `F(w) = sum_{w' <= w} P(a, w')` for an exact-winner grid.
pub fn cdf_view<T: Probability>(p: &PFunction<T>, a: usize) -> Result<Vec<T>> {
    if p.kind() != WinnerKind::ExactWinners {
        return Err(Error::ShapeMismatch("CDF needs an exact-winner grid".into()));
    }
    let row = p
        .rows()
        .get(a.wrapping_sub(1))
        .ok_or_else(|| Error::InvalidConfig(format!("budget {a} outside 1..={}", p.config().max_attempts())))?;
    let mut acc = T::impossible();
    Ok(row
        .iter()
        .map(|x| {
            acc = acc.plus(x);
            acc.clone()
        })
        .collect())
}

/// Largest CDF gap over all budgets and winner counts.
pub fn max_cdf_gap<T: Probability, U: Probability>(p: &PFunction<T>, q: &PFunction<U>) -> Result<f64> {
    same_shape(p.config(), q.config())?;
    let mut gap = 0.0f64;
    for a in 1..=p.config().max_attempts() {
        let f = cdf_view(p, a)?;
        let g = cdf_view(q, a)?;
        for (x, y) in f.iter().zip(&g) {
            gap = gap.max((x.to_f64() - y.to_f64()).abs());
        }
    }
    Ok(gap)
}
