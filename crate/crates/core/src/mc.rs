//! Monte Carlo estimation of P-functions.
//!
//! Sample `i` draws its placement and every player's randomness from
//! independent ChaCha streams keyed by `(seed, i)`, so the estimate depends
//! only on the plan and never on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{fresh_slots, resample_into, GameConfig, GameStreams, KeyPlacement};
use crate::pfunction::{PFunction, Provenance, WinnerKind};
use crate::strategy::{Searcher, StrategySpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Number of sampled placements.
    pub s: u64,
    pub seed: u64,
    /// z-score of the reported margins.
    pub z: f64,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            s: 10_000,
            seed: 0,
            z: 1.96,
            workers: None,
        }
    }
}

impl SamplingPlan {
    pub fn new(s: u64, seed: u64) -> Self {
        SamplingPlan {
            s,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 {
            return Err(Error::InvalidConfig("sample size must be at least 1".into()));
        }
        if !(self.z > 0.0 && self.z.is_finite()) {
            return Err(Error::InvalidConfig(format!("z-score must be positive, got {}", self.z)));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// `z sqrt(p (1 - p) / s)`.
pub fn margin_of_error(p: f64, s: u64, z: f64) -> f64 {
    z * (p * (1.0 - p) / s as f64).max(0.0).sqrt()
}

/// Histogram estimate of a P-function together with per-cell margins.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatedPFunction {
    pub pfunction: PFunction<f64>,
    /// Games with exactly `w` winners at budget `a`, `counts[a-1][w]`.
    pub counts: Vec<Vec<u64>>,
    pub margins: Vec<Vec<f64>>,
    pub plan: SamplingPlan,
}

impl EstimatedPFunction {
    fn from_counts(
        strategy: &StrategySpec,
        config: GameConfig,
        plan: SamplingPlan,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self> {
        let s = plan.s as f64;
        let rows: Vec<Vec<f64>> = counts
            .iter()
            .map(|r| r.iter().map(|&c| c as f64 / s).collect())
            .collect();
        let margins = rows
            .iter()
            .map(|r| r.iter().map(|&p| margin_of_error(p, plan.s, plan.z)).collect())
            .collect();
        let pfunction = PFunction::new(
            config,
            WinnerKind::ExactWinners,
            Provenance::MonteCarlo { plan },
            strategy.to_string(),
            rows,
        )?;
        Ok(EstimatedPFunction {
            pfunction,
            counts,
            margins,
            plan,
        })
    }

    /// Margins of the minimum-winner view, from its own proportions.
    pub fn min_margins(&self) -> Vec<Vec<f64>> {
        self.pfunction
            .min_view()
            .rows()
            .iter()
            .map(|r| r.iter().map(|&p| margin_of_error(p, self.plan.s, self.plan.z)).collect())
            .collect()
    }

    /// CSV `a,w,margin`.
    pub fn write_margins_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["a", "w", "margin"])?;
        for (i, row) in self.margins.iter().enumerate() {
            for (w, m) in row.iter().enumerate() {
                wtr.write_record([
                    (i + 1).to_string(),
                    w.to_string(),
                    crate::pfunction::format_probability(*m),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Samples handed to one rayon task.
const CHUNK: u64 = 64;

/// Estimates `P(a, w)` for every `a <= a_max` from `plan.s` sampled games.
///
/// Each game is played once with budget `a_max`; a player who finds her key
/// at attempt `t` wins for every `a >= t`. This equals replaying the game
/// per budget because no strategy looks at its remaining budget.
pub fn estimate_pfunction(
    strategy: &StrategySpec,
    config: &GameConfig,
    plan: &SamplingPlan,
) -> Result<EstimatedPFunction> {
    plan.validate()?;
    strategy.validate(config)?;
    let config = *config;
    let run = || -> Result<Vec<Vec<u64>>> {
        let chunks = plan.s.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(plan.s);
                count_range(strategy, config, plan.seed, lo..hi)
            })
            .try_reduce(|| zero_counts(&config), |a, b| Ok(add_counts(a, b)))
    };
    let counts = match plan.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    EstimatedPFunction::from_counts(strategy, config, *plan, counts)
}

fn zero_counts(config: &GameConfig) -> Vec<Vec<u64>> {
    vec![vec![0; config.keys() + 1]; config.max_attempts()]
}

fn add_counts(mut a: Vec<Vec<u64>>, b: Vec<Vec<u64>>) -> Vec<Vec<u64>> {
    for (ra, rb) in a.iter_mut().zip(b) {
        for (x, y) in ra.iter_mut().zip(rb) {
            *x += y;
        }
    }
    a
}

fn count_range(
    strategy: &StrategySpec,
    config: GameConfig,
    seed: u64,
    samples: std::ops::Range<u64>,
) -> Result<Vec<Vec<u64>>> {
    let a_max = config.max_attempts();
    let mut searcher = Searcher::new(strategy, config)?;
    let mut counts = zero_counts(&config);
    let mut placement = KeyPlacement::new(fresh_slots(&config))?;
    // first_success[t] = players whose key turned up at attempt t.
    let mut first_success = vec![0usize; a_max + 1];
    for i in samples {
        let streams = GameStreams::new(seed, i);
        resample_into(&mut placement, &config, &mut streams.placement());
        first_success.fill(0);
        for player in 1..=config.keys() {
            let mut rng = streams.player(player);
            if let Some(t) = searcher.run(&placement, player, a_max, &mut rng, None).found_at {
                first_success[t] += 1;
            }
        }
        let mut winners = 0;
        for a in 1..=a_max {
            winners += first_success[a];
            counts[a - 1][winners] += 1;
        }
    }
    Ok(counts)
}

/// Reference estimator that replays every sampled game once per budget.
/// Same streams as [`estimate_pfunction`], so the counts must coincide.
pub fn estimate_pfunction_replayed(
    strategy: &StrategySpec,
    config: &GameConfig,
    plan: &SamplingPlan,
) -> Result<EstimatedPFunction> {
    plan.validate()?;
    let mut searcher = Searcher::new(strategy, *config)?;
    let mut counts = zero_counts(config);
    for i in 0..plan.s {
        let streams = GameStreams::new(plan.seed, i);
        let placement = crate::game::sample_placement(config, &mut streams.placement());
        for a in 1..=config.max_attempts() {
            let winners = (1..=config.keys())
                .filter(|&p| {
                    let mut rng = streams.player(p);
                    searcher.run(&placement, p, a, &mut rng, None).found_at.is_some()
                })
                .count();
            counts[a - 1][winners] += 1;
        }
    }
    EstimatedPFunction::from_counts(strategy, *config, *plan, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact;
    use crate::pfunction::rational_to_f64;

    #[test]
    fn margin_examples() {
        assert!((margin_of_error(0.5, 10_000, 1.96) - 0.0098).abs() < 1e-12);
        assert_eq!(margin_of_error(0.0, 10_000, 1.96), 0.0);
        assert!((margin_of_error(0.2, 10_000, 1.96) - 0.00784).abs() < 1e-12);
    }

    #[test]
    fn plan_validation() {
        assert!(SamplingPlan::new(0, 1).validate().is_err());
        let p = SamplingPlan {
            z: 0.0,
            ..SamplingPlan::default()
        };
        assert!(p.validate().is_err());
        assert_eq!(SamplingPlan::default().s, 10_000);
    }

    #[test]
    fn rows_are_histograms() {
        let c = GameConfig::full(8).unwrap();
        let e = estimate_pfunction(&StrategySpec::random(), &c, &SamplingPlan::new(500, 3)).unwrap();
        for row in &e.counts {
            assert_eq!(row.iter().sum::<u64>(), 500);
        }
        assert!(e.pfunction.normalization_error() < 1e-12);
        let bound = 1.96 / (2.0 * 500f64.sqrt());
        assert!(e.margins.iter().flatten().all(|&m| (0.0..=bound + 1e-12).contains(&m)));
    }

    #[test]
    fn single_playout_equals_replay() {
        for (spec, c) in [
            ("rs", GameConfig::full(7).unwrap()),
            ("ks:D=R:E=R", GameConfig::full(7).unwrap()),
            ("pure-random", GameConfig::full(6).unwrap()),
            ("gs", GameConfig::with_keys(8, 5).unwrap()),
            ("bs:D=1:I=2:E=R", GameConfig::with_keys(8, 6).unwrap()),
        ] {
            let spec: StrategySpec = spec.parse().unwrap();
            let plan = SamplingPlan::new(300, 11);
            let fast = estimate_pfunction(&spec, &c, &plan).unwrap();
            let slow = estimate_pfunction_replayed(&spec, &c, &plan).unwrap();
            assert_eq!(fast.counts, slow.counts, "{spec}");
        }
    }

    #[test]
    fn independent_of_worker_count() {
        let c = GameConfig::full(10).unwrap();
        let spec = StrategySpec::random();
        let mut plan = SamplingPlan::new(1000, 5);
        plan.workers = Some(1);
        let one = estimate_pfunction(&spec, &c, &plan).unwrap();
        plan.workers = Some(3);
        let three = estimate_pfunction(&spec, &c, &plan).unwrap();
        assert_eq!(one.counts, three.counts);
    }

    #[test]
    fn seeds_matter_and_repeat() {
        let c = GameConfig::full(10).unwrap();
        let spec = StrategySpec::random();
        let a = estimate_pfunction(&spec, &c, &SamplingPlan::new(200, 1)).unwrap();
        let b = estimate_pfunction(&spec, &c, &SamplingPlan::new(200, 1)).unwrap();
        let d = estimate_pfunction(&spec, &c, &SamplingPlan::new(200, 2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.counts, d.counts);
    }

    #[test]
    fn ks0_estimate_is_close_to_exact() {
        let c = GameConfig::full(20).unwrap();
        let e = estimate_pfunction(&StrategySpec::ks0(), &c, &SamplingPlan::new(4000, 9)).unwrap();
        let exact = exact::exact_ks0_rows(20, 1, 20, 20).unwrap();
        for (er, xr) in e.pfunction.rows().iter().zip(&exact) {
            for (p, x) in er.iter().zip(xr) {
                let x = rational_to_f64(x);
                let sd = (x * (1.0 - x) / 4000.0).sqrt();
                assert!((p - x).abs() <= 5.0 * sd + 1e-9, "{p} vs {x}");
            }
        }
    }

    #[test]
    fn margins_csv() {
        let c = GameConfig::full(3).unwrap();
        let e = estimate_pfunction(&StrategySpec::ks0(), &c, &SamplingPlan::new(50, 0)).unwrap();
        let mut buf = Vec::new();
        e.write_margins_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("a,w,margin\n"));
        assert_eq!(text.lines().count(), 1 + 3 * 4);
    }
}
