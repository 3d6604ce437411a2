//! Classification of strategies by how many attempts guarantee success.
//!
//! A strategy is properly bounded when `a = N` makes every player win on
//! every placement without re-opening a box, bounded when some larger
//! budget does, and unbounded otherwise.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{enumerate_placements, sample_placement, GameConfig, GameStreams};
use crate::oracle;
use crate::strategy::{increment_gcd, Escape, MainRule, Offset, Searcher, StrategySpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum BoundednessClass {
    ProperlyBounded,
    /// Every player wins within `m > N` attempts, some only after `N`.
    Bounded { m: usize },
    Unbounded,
    /// Neither enumeration nor a static rule settles it.
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "evidence", rename_all = "snake_case")]
pub enum Evidence {
    /// Every placement was played.
    Verified { placements: u64 },
    /// Placements and strategy randomness were sampled.
    Sampled { draws: u64 },
    /// Read off the strategy's parameters.
    Declared,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    #[serde(flatten)]
    pub class: BoundednessClass,
    #[serde(flatten)]
    pub evidence: Evidence,
    /// Whether some trace re-opened a box within `N` attempts.
    pub repeats_seen: bool,
    /// Fraction of checked games in which everyone won at `a = N`.
    pub all_win_at_n: Option<f64>,
}

impl Classification {
    pub fn is_verified(&self) -> bool {
        matches!(self.evidence, Evidence::Verified { .. })
    }
}

/// Games sampled for randomized strategies.
pub const SAMPLED_DRAWS: u64 = 2_000;

/// Budget after which a deterministic search is known to loop. The
/// searcher's state is at most (box, scan origin, scan length, occupied
/// count), so a longer run revisits a state.
fn loop_budget(n: usize) -> usize {
    n.pow(4) + n
}

#[derive(Default)]
struct Tally {
    games: u64,
    all_win_at_n: u64,
    repeats: bool,
    latest: usize,
    failures: bool,
}

impl Tally {
    fn class(&self, n: usize) -> BoundednessClass {
        if self.failures {
            BoundednessClass::Unbounded
        } else if self.all_win_at_n == self.games && !self.repeats {
            BoundednessClass::ProperlyBounded
        } else {
            BoundednessClass::Bounded {
                m: self.latest.max(n + 1),
            }
        }
    }
}

/// Plays `placements` and tallies first-success attempts.
fn tally<I, R>(strategy: &StrategySpec, config: GameConfig, games: I, budget: usize) -> Result<Tally>
where
    I: Iterator<Item = (crate::game::KeyPlacement, R)>,
    R: FnMut(usize) -> rand_chacha::ChaCha8Rng,
{
    let n = config.boxes();
    let mut searcher = Searcher::new(strategy, config)?;
    let mut t = Tally::default();
    for (placement, mut rng_for) in games {
        t.games += 1;
        let mut everyone = true;
        for player in 1..=config.keys() {
            let long = searcher.run(&placement, player, budget, &mut rng_for(player), None);
            // Same stream again: the first N openings of the long run.
            let short = searcher.run(&placement, player, n, &mut rng_for(player), None);
            t.repeats |= short.repeated;
            match long.found_at {
                Some(at) => {
                    t.latest = t.latest.max(at);
                    everyone &= at <= n;
                }
                None => {
                    t.failures = true;
                    everyone = false;
                }
            }
        }
        t.all_win_at_n += everyone as u64;
    }
    Ok(t)
}

/// Classifies `strategy` on `config`, by enumeration when the placements fit
/// under the oracle cap, and from the strategy's parameters otherwise.
pub fn classify_boundedness(strategy: &StrategySpec, config: &GameConfig) -> Result<Classification> {
    strategy.validate(config)?;
    let n = config.boxes();
    let config = GameConfig::new(n, config.keys(), n)?;
    let feasible = oracle::check_cap(&config).is_ok();
    if !feasible {
        return Ok(Classification {
            class: declared_class(strategy, &config),
            evidence: Evidence::Declared,
            repeats_seen: false,
            all_win_at_n: None,
        });
    }
    let (t, evidence) = if strategy.is_deterministic() {
        let games = enumerate_placements(&config)?.map(|p| {
            (p, |_player: usize| {
                use rand::SeedableRng;
                rand_chacha::ChaCha8Rng::seed_from_u64(0)
            })
        });
        let t = tally(strategy, config, games, loop_budget(n))?;
        let placements = t.games;
        (t, Evidence::Verified { placements })
    } else {
        let games = (0..SAMPLED_DRAWS).map(|i| {
            let streams = GameStreams::new(0x5eed, i);
            let placement = sample_placement(&config, &mut streams.placement());
            (placement, move |player: usize| streams.player(player))
        });
        let t = tally(strategy, config, games, loop_budget(n))?;
        (t, Evidence::Sampled { draws: SAMPLED_DRAWS })
    };
    let mut class = t.class(n);
    // Sampling cannot rule out a long unlucky run for re-opening strategies.
    if !strategy.is_deterministic() && strategy.allow_revisits() {
        class = BoundednessClass::Unbounded;
    }
    Ok(Classification {
        class,
        evidence,
        repeats_seen: t.repeats,
        all_win_at_n: Some(t.all_win_at_n as f64 / t.games as f64),
    })
}

/// Class implied by the strategy's parameters alone.
pub fn declared_class(strategy: &StrategySpec, config: &GameConfig) -> BoundednessClass {
    use BoundednessClass::*;
    let n = config.boxes();
    match (&strategy.main, strategy.escape) {
        (MainRule::PureRandom, _) => Unbounded,
        (MainRule::Random, _) | (MainRule::Adi, _) => ProperlyBounded,
        (MainRule::Key | MainRule::Box { .. }, Escape::Random | Escape::Sequential) => ProperlyBounded,
        (MainRule::Key, Escape::None) if strategy.offset == Offset::Zero && config.keys() == n => {
            ProperlyBounded
        }
        (MainRule::Key, Escape::None) => Unbounded,
        (MainRule::Box { increment }, Escape::None) => {
            if increment_gcd(*increment, n) == 1 {
                ProperlyBounded
            } else {
                Unbounded
            }
        }
        (MainRule::GoyalSaks, _) if config.keys() == n => ProperlyBounded,
        (MainRule::GoyalSaks, _) => Unknown,
    }
}
