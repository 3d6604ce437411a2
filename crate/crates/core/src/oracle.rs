//! Exhaustive P-functions of deterministic strategies at small `N`.

use num_bigint::{BigInt, BigUint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{enumerate_placements, GameConfig};
use crate::pfunction::{PFunction, Provenance, WinnerKind};
use crate::strategy::{Searcher, StrategySpec};
use crate::Rational;

/// Largest `N` enumerated when every box holds a key.
pub const FULL_CAP: usize = 8;
/// Largest `N` enumerated when some boxes are empty.
pub const PARTIAL_CAP: usize = 7;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub pfunction: PFunction<Rational>,
    /// Placements enumerated, `N!/(N-n)!`.
    pub placements: u64,
}

pub(crate) fn check_cap(config: &GameConfig) -> Result<()> {
    let cap = if config.keys() == config.boxes() {
        FULL_CAP
    } else {
        PARTIAL_CAP
    };
    if config.boxes() > cap {
        return Err(Error::CapExceeded {
            what: "oracle enumeration (boxes N)",
            required: BigUint::from(config.boxes()),
            cap: BigUint::from(cap),
        });
    }
    Ok(())
}

/// Plays every placement once with budget `a_max` and bins the winners of
/// each budget by first-success attempts.
pub fn brute_force_pfunction(strategy: &StrategySpec, config: &GameConfig) -> Result<OracleResult> {
    if !strategy.is_deterministic() {
        return Err(Error::Randomized(strategy.to_string()));
    }
    check_cap(config)?;
    strategy.validate(config)?;
    let config = *config;
    let a_max = config.max_attempts();
    let zero = || vec![vec![0u64; config.keys() + 1]; a_max];
    let counts = enumerate_placements(&config)?
        .par_bridge()
        .fold(
            || (zero(), None::<Searcher>, vec![0usize; a_max + 1]),
            |(mut counts, searcher, mut first), placement| {
                let mut searcher = searcher.unwrap_or_else(|| {
                    Searcher::new(strategy, config).expect("validated above")
                });
                first.fill(0);
                // Deterministic strategies never touch the generator.
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                for player in 1..=config.keys() {
                    if let Some(t) = searcher.run(&placement, player, a_max, &mut rng, None).found_at {
                        first[t] += 1;
                    }
                }
                let mut winners = 0;
                for a in 1..=a_max {
                    winners += first[a];
                    counts[a - 1][winners] += 1;
                }
                (counts, Some(searcher), first)
            },
        )
        .map(|(c, _, _)| c)
        .reduce(zero, |mut x, y| {
            for (rx, ry) in x.iter_mut().zip(y) {
                for (p, q) in rx.iter_mut().zip(ry) {
                    *p += q;
                }
            }
            x
        });
    let placements: u64 = counts.first().map(|r| r.iter().sum()).unwrap_or(0);
    let total = BigInt::from(placements);
    let rows = counts
        .into_iter()
        .map(|r| r.into_iter().map(|c| Rational::new(c.into(), total.clone())).collect())
        .collect();
    let pfunction = PFunction::new(
        config,
        WinnerKind::ExactWinners,
        Provenance::Oracle,
        strategy.to_string(),
        rows,
    )?;
    Ok(OracleResult {
        pfunction,
        placements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact;
    use crate::strategy::{Escape, Offset};

    fn oracle(spec: &str, n_boxes: usize, keys: usize) -> OracleResult {
        let config = GameConfig::with_keys(n_boxes, keys).unwrap();
        brute_force_pfunction(&spec.parse().unwrap(), &config).unwrap()
    }

    #[test]
    fn ks0_matches_partition_formula() {
        for n in 1..=7 {
            let o = oracle("ks0", n, n);
            let rows = exact::exact_ks0_rows(n, 1, n, exact::PARTITION_CAP).unwrap();
            assert_eq!(o.pfunction.rows(), rows.as_slice(), "N={n}");
            assert!(o.pfunction.is_normalized());
        }
    }

    #[test]
    fn enumeration_count() {
        assert_eq!(oracle("ks0", 5, 5).placements, 120);
        assert_eq!(oracle("ks:D=0:E=B", 5, 3).placements, 60);
    }

    #[test]
    fn box_strategy_low_budgets_match_rencontres_and_menage() {
        for n in 2..=7 {
            let o = oracle("bs:D=0:I=1:E=N", n, n);
            assert_eq!(o.pfunction.row(1), exact::exact_bs_a1(n).unwrap().as_slice());
            assert_eq!(o.pfunction.row(2), exact::exact_bs_a2(n).unwrap().as_slice());
        }
        let o = oracle("bs:D=0:I=1:E=N", 4, 4);
        let d: Vec<Rational> = [9, 8, 6, 0, 1].iter().map(|&c| Rational::new(c.into(), 24.into())).collect();
        assert_eq!(o.pfunction.row(1), d.as_slice());
    }

    #[test]
    fn adi_and_gs_equal_ks0_without_empty_boxes() {
        for n in 1..=6 {
            let ks = oracle("ks0", n, n).pfunction.into_rows();
            assert_eq!(oracle("adi", n, n).pfunction.into_rows(), ks);
            assert_eq!(oracle("gs", n, n).pfunction.into_rows(), ks);
        }
    }

    #[test]
    fn box_strategy_is_offset_independent() {
        for n in 2..=6usize {
            for i in 1..n as i64 {
                if crate::strategy::increment_gcd(i, n) != 1 {
                    continue;
                }
                let base = oracle(&format!("bs:D=0:I={i}:E=N"), n, n).pfunction.into_rows();
                for d in 1..n as i64 {
                    let o = oracle(&format!("bs:D={d}:I={i}:E=N"), n, n);
                    assert_eq!(o.pfunction.into_rows(), base, "N={n} I={i} D={d}");
                }
                // Player p starts at box N + 1 - p: still one start per box.
                let reversed = (1..=n as i64).map(|p| n as i64 + 1 - 2 * p).collect();
                let per_player = StrategySpec::boxed(i, Offset::PerPlayer(reversed), Escape::None);
                let o = brute_force_pfunction(&per_player, &GameConfig::full(n).unwrap()).unwrap();
                assert_eq!(o.pfunction.into_rows(), base);
            }
        }
    }

    #[test]
    fn box_strategy_symmetry() {
        for n in 2..=6usize {
            for i in 1..n as i64 {
                if crate::strategy::increment_gcd(i, n) != 1 {
                    continue;
                }
                let p = oracle(&format!("bs:D=0:I={i}:E=N"), n, n).pfunction;
                for a in 1..n {
                    for w in 0..=n {
                        assert_eq!(p.get(a, w), p.get(n - a, n - w), "N={n} I={i} a={a} w={w}");
                    }
                }
            }
        }
    }

    #[test]
    fn adi_with_one_empty_box_equals_ks0_on_fictitious_key() {
        // Every player reads the empty box as holding key N, so ADI at
        // n = N - 1 is KS0 on N keys with player N left out of the count.
        for n in 2..=6 {
            let adi = oracle("adi", n, n - 1).pfunction;
            let mut hist = vec![vec![0i64; n]; n];
            for p in enumerate_placements(&GameConfig::full(n).unwrap()).unwrap() {
                for a in 1..=n {
                    let out = crate::game::play(&p, &StrategySpec::ks0(), a, 0).unwrap();
                    let w = out.winners.iter().filter(|&&i| i < n).count();
                    hist[a - 1][w] += 1;
                }
            }
            let fact: i64 = (1..=n as i64).product();
            for a in 1..=n {
                let expected: Vec<Rational> = hist[a - 1]
                    .iter()
                    .map(|&c| Rational::new(c.into(), fact.into()))
                    .collect();
                assert_eq!(adi.row(a), expected.as_slice(), "N={n} a={a}");
            }
        }
    }

    #[test]
    fn refusals() {
        let c = GameConfig::full(5).unwrap();
        assert!(matches!(brute_force_pfunction(&StrategySpec::random(), &c), Err(Error::Randomized(_))));
        let c = GameConfig::full(9).unwrap();
        assert!(matches!(brute_force_pfunction(&StrategySpec::ks0(), &c), Err(Error::CapExceeded { .. })));
        let c = GameConfig::with_keys(8, 7).unwrap();
        assert!(matches!(brute_force_pfunction(&StrategySpec::adi(), &c), Err(Error::CapExceeded { .. })));
    }
}
