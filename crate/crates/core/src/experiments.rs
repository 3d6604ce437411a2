//! Named studies: P-function grids, efficiency tables, error heatmaps and
//! convergence series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::game::GameConfig;
use crate::mc::{estimate_pfunction, EstimatedPFunction, SamplingPlan};
use crate::metrics::{efficiency, error_distance, max_cdf_gap, EfficiencyParams};
use crate::oracle::brute_force_pfunction;
use crate::pfunction::PFunction;
use crate::strategy::StrategySpec;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Mc,
    Oracle,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "mc" => Ok(Mode::Mc),
            "oracle" => Ok(Mode::Oracle),
            _ => Err(Error::InvalidConfig(format!("unknown mode `{s}` (exact, mc, oracle)"))),
        }
    }
}

/// A computed grid and whatever came with it.
#[derive(Clone, Debug)]
pub enum Computed {
    Exact(PFunction<Rational>),
    Oracle { grid: PFunction<Rational>, placements: u64 },
    Estimated(EstimatedPFunction),
}

impl Computed {
    pub fn grid(&self) -> PFunction<f64> {
        match self {
            Computed::Exact(p) | Computed::Oracle { grid: p, .. } => p.to_f64(),
            Computed::Estimated(e) => e.pfunction.clone(),
        }
    }

    pub fn rational(&self) -> Option<&PFunction<Rational>> {
        match self {
            Computed::Exact(p) | Computed::Oracle { grid: p, .. } => Some(p),
            Computed::Estimated(_) => None,
        }
    }
}

/// P-function of `strategy` by the requested route.
pub fn run_pfunction(
    strategy: &StrategySpec,
    config: &GameConfig,
    plan: &SamplingPlan,
    mode: Mode,
) -> Result<Computed> {
    strategy.validate(config)?;
    match mode {
        Mode::Exact => exact::exact_pfunction(strategy, config)
            .map(Computed::Exact)
            .map_err(|e| match e {
                Error::Unsupported(msg) => Error::Unsupported(format!("{msg} (supported modes: mc, oracle)")),
                other => other,
            }),
        Mode::Oracle => brute_force_pfunction(strategy, config).map(|o| Computed::Oracle {
            grid: o.pfunction,
            placements: o.placements,
        }),
        Mode::Mc => estimate_pfunction(strategy, config, plan).map(Computed::Estimated),
    }
}

/// Closed form when one exists and fits the caps, Monte Carlo otherwise.
pub fn best_available(strategy: &StrategySpec, config: &GameConfig, plan: &SamplingPlan) -> Result<PFunction<f64>> {
    match exact::exact_pfunction(strategy, config) {
        Ok(p) => Ok(p.to_f64()),
        Err(Error::Unsupported(_) | Error::CapExceeded { .. }) => {
            Ok(estimate_pfunction(strategy, config, plan)?.pfunction)
        }
        Err(e) => Err(e),
    }
}

/// One line of the efficiency table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    /// Players of the panel the row belongs to.
    pub panel: usize,
    pub label: String,
    pub strategy: String,
    /// Players actually simulated (ADI is shown at `n = 98` in the 99 panel).
    pub keys: usize,
    pub eta: f64,
}

/// Strategies and player counts of the three efficiency panels.
pub fn table1_roster() -> Vec<(usize, usize, &'static str)> {
    let mut roster = Vec::new();
    let full = [
        "ks0",
        "ks:D=1:E=R",
        "ks:D=1:E=B",
        "bs:D=0:I=1:E=N",
        "bs:D=0:I=5:E=R",
        "bs:D=0:I=5:E=B",
        "gs",
        "adi",
        "rs",
    ];
    roster.extend(full.iter().map(|s| (100, 100, *s)));
    let partial = [
        "ks:D=0:E=R",
        "ks:D=0:E=B",
        "ks:D=1:E=R",
        "ks:D=1:E=B",
        "bs:D=0:I=1:E=N",
        "bs:D=0:I=5:E=R",
        "bs:D=0:I=5:E=B",
        "gs",
        "adi",
        "rs",
    ];
    for panel in [99, 50] {
        for s in partial {
            let keys = if s == "adi" && panel == 99 { 98 } else { panel };
            roster.push((panel, keys, s));
        }
    }
    roster.push((100, 100, "pure-random"));
    roster
}

/// Efficiency of every roster strategy on `N = 100` boxes. The random
/// strategy's row is normalized against itself and reads 1 exactly.
pub fn table1(plan: &SamplingPlan, beta: f64) -> Result<Vec<EfficiencyRow>> {
    table1_rows(&table1_roster(), 100, plan, beta)
}

pub fn table1_rows(
    roster: &[(usize, usize, &str)],
    boxes: usize,
    plan: &SamplingPlan,
    beta: f64,
) -> Result<Vec<EfficiencyRow>> {
    roster
        .iter()
        .map(|&(panel, keys, s)| {
            let spec: StrategySpec = s.parse()?;
            let config = GameConfig::with_keys(boxes, keys)?;
            let grid = if spec == StrategySpec::random() || spec == StrategySpec::pure_random() {
                exact::exact_pfunction(&spec, &config)?.to_f64()
            } else {
                estimate_pfunction(&spec, &config, plan)?.pfunction
            };
            let eta = efficiency(&grid, &EfficiencyParams::with_beta(beta))?.eta;
            Ok(EfficiencyRow {
                panel,
                label: spec.label(),
                strategy: spec.to_string(),
                keys,
                eta,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub config: GameConfig,
    pub strategies: Vec<String>,
    /// `epsilon[i][j]` between strategies `i` and `j`.
    pub epsilon: Vec<Vec<f64>>,
}

/// Pairwise error distances, using closed forms where available.
pub fn error_heatmap(strategies: &[StrategySpec], config: &GameConfig, plan: &SamplingPlan) -> Result<Heatmap> {
    if strategies.len() < 2 {
        return Err(Error::InvalidConfig("an error heatmap needs at least two strategies".into()));
    }
    let grids = strategies
        .iter()
        .map(|s| best_available(s, config, plan))
        .collect::<Result<Vec<_>>>()?;
    let mut epsilon = vec![vec![0.0; grids.len()]; grids.len()];
    for i in 0..grids.len() {
        for j in i + 1..grids.len() {
            let e = error_distance(&grids[i], &grids[j])?.epsilon;
            epsilon[i][j] = e;
            epsilon[j][i] = e;
        }
    }
    Ok(Heatmap {
        config: *config,
        strategies: strategies.iter().map(ToString::to_string).collect(),
        epsilon,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    #[serde(rename = "N")]
    pub boxes: usize,
    #[serde(rename = "n")]
    pub keys: usize,
    /// Distance to the closed-form random strategy.
    pub epsilon: f64,
    /// Largest gap between the two CDFs over all budgets.
    pub cdf_gap: f64,
}

/// Distance of `strategy` to the random strategy along `sizes = [(N, n)]`.
pub fn convergence(strategy: &StrategySpec, sizes: &[(usize, usize)], plan: &SamplingPlan) -> Result<Vec<ConvergencePoint>> {
    sizes
        .iter()
        .map(|&(boxes, keys)| {
            let config = GameConfig::with_keys(boxes, keys)?;
            let grid = estimate_pfunction(strategy, &config, plan)?.pfunction;
            let reference = exact::exact_pfunction(&StrategySpec::random(), &config)?;
            Ok(ConvergencePoint {
                boxes,
                keys,
                epsilon: error_distance(&grid, &reference)?.epsilon,
                cdf_gap: max_cdf_gap(&grid, &reference)?,
            })
        })
        .collect()
}
