//! Game model: configurations, key placements and the play engine entry point.
//!
//! Boxes and keys are numbered from 1, as are players; player `i` looks for
//! key `i`. Internally slot vectors are 0-based.

use std::fmt;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::strategy::{PlayerRun, Searcher, StrategySpec};

/// Default limit on the number of placements an exhaustive pass may visit.
pub const ENUMERATION_CAP: u64 = 10_000_000;

/// Box count `N`, key/player count `n` and the largest attempt budget
/// `a_max` a P-function is tabulated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct GameConfig {
    boxes: usize,
    keys: usize,
    max_attempts: usize,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    #[serde(rename = "N")]
    boxes: usize,
    #[serde(rename = "n")]
    keys: usize,
    a_max: usize,
}

impl TryFrom<RawConfig> for GameConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        GameConfig::new(raw.boxes, raw.keys, raw.a_max)
    }
}

impl From<GameConfig> for RawConfig {
    fn from(c: GameConfig) -> Self {
        RawConfig {
            boxes: c.boxes,
            keys: c.keys,
            a_max: c.max_attempts,
        }
    }
}

impl GameConfig {
    pub fn new(boxes: usize, keys: usize, max_attempts: usize) -> Result<Self> {
        if boxes == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        if keys == 0 || keys > boxes {
            return Err(Error::InvalidConfig(format!(
                "n must satisfy 1 <= n <= N (got n={keys}, N={boxes})"
            )));
        }
        if max_attempts == 0 || max_attempts > boxes {
            return Err(Error::InvalidConfig(format!(
                "a_max must satisfy 1 <= a_max <= N (got a_max={max_attempts}, N={boxes})"
            )));
        }
        Ok(GameConfig {
            boxes,
            keys,
            max_attempts,
        })
    }

    /// `n = N`, every attempt budget up to `N`.
    pub fn full(boxes: usize) -> Result<Self> {
        Self::new(boxes, boxes, boxes)
    }

    /// `n` keys in `N` boxes, every attempt budget up to `N`.
    pub fn with_keys(boxes: usize, keys: usize) -> Result<Self> {
        Self::new(boxes, keys, boxes)
    }

    pub fn boxes(&self) -> usize {
        self.boxes
    }

    pub fn keys(&self) -> usize {
        self.keys
    }

    pub fn max_attempts(&self) -> usize {
        self.max_attempts
    }

    pub fn empty_boxes(&self) -> usize {
        self.boxes - self.keys
    }

    /// Number of distinct placements, `N! / (N - n)!`.
    pub fn placement_count(&self) -> BigUint {
        ((self.boxes - self.keys + 1)..=self.boxes)
            .map(BigUint::from)
            .product()
    }
}

impl fmt::Display for GameConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} n={} a_max={}", self.boxes, self.keys, self.max_attempts)
    }
}

/// Content of one box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Key(usize),
    Empty,
}

impl Slot {
    pub fn key(self) -> Option<usize> {
        match self {
            Slot::Key(k) => Some(k),
            Slot::Empty => None,
        }
    }

    pub fn is_empty(self) -> bool {
        matches!(self, Slot::Empty)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Key(k) => write!(f, "{k}"),
            Slot::Empty => f.write_str("-"),
        }
    }
}

/// An injective assignment of keys `1..=n` to boxes `1..=N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KeyPlacement {
    slots: Vec<Slot>,
    keys: usize,
}

impl KeyPlacement {
    /// Builds a placement from box contents, box 1 first. The keys present
    /// must be exactly `1..=n` for some `n`.
    pub fn new(slots: Vec<Slot>) -> Result<Self> {
        let keys = slots.iter().filter(|s| !s.is_empty()).count();
        let mut seen = vec![false; keys + 1];
        for slot in &slots {
            if let Slot::Key(k) = *slot {
                if k == 0 || k > keys || seen[k] {
                    return Err(Error::InvalidConfig(format!(
                        "placement keys must be exactly 1..={keys}, found {k} out of range or repeated"
                    )));
                }
                seen[k] = true;
            }
        }
        if slots.is_empty() {
            return Err(Error::InvalidConfig("placement has no boxes".into()));
        }
        if keys == 0 {
            return Err(Error::InvalidConfig("placement holds no keys".into()));
        }
        Ok(KeyPlacement { slots, keys })
    }

    /// Box `b` holds key `perm[b - 1]`.
    pub fn from_permutation(perm: &[usize]) -> Result<Self> {
        Self::new(perm.iter().map(|&k| Slot::Key(k)).collect())
    }

    /// Key `i` in box `i` for every `i`.
    pub fn identity(boxes: usize) -> Self {
        KeyPlacement {
            slots: (1..=boxes).map(Slot::Key).collect(),
            keys: boxes,
        }
    }

    pub fn boxes(&self) -> usize {
        self.slots.len()
    }

    pub fn keys(&self) -> usize {
        self.keys
    }

    /// Content of box `b` (1-based).
    #[inline]
    pub fn slot(&self, b: usize) -> Slot {
        self.slots[b - 1]
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// The box holding key `k`.
    pub fn box_of(&self, k: usize) -> usize {
        self.slots
            .iter()
            .position(|&s| s == Slot::Key(k))
            .map(|i| i + 1)
            .expect("key is placed")
    }

    pub fn is_permutation(&self) -> bool {
        self.keys == self.slots.len()
    }

    /// Cycle lengths of the key-to-box permutation, in ascending order.
    /// Only defined for `n = N`.
    pub fn cycle_lengths(&self) -> Option<Vec<usize>> {
        if !self.is_permutation() {
            return None;
        }
        let n = self.slots.len();
        let mut seen = vec![false; n + 1];
        let mut out = Vec::new();
        for start in 1..=n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut b = start;
            while !seen[b] {
                seen[b] = true;
                len += 1;
                b = self.slot(b).key().expect("permutation");
            }
            out.push(len);
        }
        out.sort_unstable();
        Some(out)
    }
}

impl fmt::Display for KeyPlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.slots.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

pub(crate) fn fresh_slots(config: &GameConfig) -> Vec<Slot> {
    (1..=config.keys)
        .map(Slot::Key)
        .chain(std::iter::repeat_n(Slot::Empty, config.empty_boxes()))
        .collect()
}

/// Draws a placement uniformly from all `N!/(N-n)!` injective assignments.
///
/// The keys and `N - n` empty markers are shuffled together, which induces
/// the uniform distribution over injections.
pub fn sample_placement<R: Rng + ?Sized>(config: &GameConfig, rng: &mut R) -> KeyPlacement {
    let mut slots = fresh_slots(config);
    slots.shuffle(rng);
    KeyPlacement {
        slots,
        keys: config.keys,
    }
}

/// Resets `placement` to the canonical order and reshuffles it in place.
pub(crate) fn resample_into<R: Rng + ?Sized>(
    placement: &mut KeyPlacement,
    config: &GameConfig,
    rng: &mut R,
) {
    for (i, slot) in placement.slots.iter_mut().enumerate() {
        *slot = if i < config.keys {
            Slot::Key(i + 1)
        } else {
            Slot::Empty
        };
    }
    placement.slots.shuffle(rng);
}

/// Every placement for `config`, each exactly once.
pub fn enumerate_placements(config: &GameConfig) -> Result<Placements> {
    enumerate_placements_capped(config, ENUMERATION_CAP)
}

pub fn enumerate_placements_capped(config: &GameConfig, cap: u64) -> Result<Placements> {
    let count = config.placement_count();
    if count > BigUint::from(cap) {
        return Err(Error::cap("placement enumeration", count, cap));
    }
    // Code 0 marks an empty box; codes sorted ascending form the first
    // arrangement in lexicographic order.
    let mut codes = vec![0usize; config.empty_boxes()];
    codes.extend(1..=config.keys);
    Ok(Placements {
        codes,
        keys: config.keys,
        done: false,
    })
}

/// Lexicographic walk over the distinct arrangements of the multiset
/// `{1..=n, empty x (N - n)}`.
#[derive(Debug, Clone)]
pub struct Placements {
    codes: Vec<usize>,
    keys: usize,
    done: bool,
}

impl Iterator for Placements {
    type Item = KeyPlacement;

    fn next(&mut self) -> Option<KeyPlacement> {
        if self.done {
            return None;
        }
        let slots = self
            .codes
            .iter()
            .map(|&c| if c == 0 { Slot::Empty } else { Slot::Key(c) })
            .collect();
        self.done = !next_permutation(&mut self.codes);
        Some(KeyPlacement {
            slots,
            keys: self.keys,
        })
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Result of every player searching once with the same budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayOutcome {
    /// Players who found their key, ascending.
    pub winners: Vec<usize>,
    /// Boxes opened by each player (index `i - 1` for player `i`).
    pub attempts_used: Vec<usize>,
    /// Opened boxes in order, per player; only filled by [`play_traced`].
    pub trace: Option<Vec<Vec<usize>>>,
}

impl PlayOutcome {
    pub fn winner_count(&self) -> usize {
        self.winners.len()
    }
}

/// Per-player random streams for one game.
///
/// Each player draws from a disjoint region of one ChaCha stream, so a
/// player's box sequence never depends on how much randomness another player
/// consumed. Hence it never depends on the attempt budget either.
#[derive(Clone, Debug)]
pub struct GameStreams {
    base: ChaCha8Rng,
}

impl GameStreams {
    pub fn new(seed: u64, stream: u64) -> Self {
        use rand::SeedableRng;
        let mut base = ChaCha8Rng::seed_from_u64(seed);
        base.set_stream(stream);
        GameStreams { base }
    }

    /// Stream used to draw the placement itself.
    pub fn placement(&self) -> ChaCha8Rng {
        self.player(0)
    }

    /// Stream for player `p` (1-based); index 0 is reserved for placements.
    pub fn player(&self, p: usize) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_word_pos((p as u128) << 36);
        rng
    }
}

/// Every player searches with budget `a`. Randomized strategies draw from
/// streams derived from `seed`; the result is a pure function of the inputs.
pub fn play(
    placement: &KeyPlacement,
    strategy: &StrategySpec,
    a: usize,
    seed: u64,
) -> Result<PlayOutcome> {
    play_inner(placement, strategy, a, seed, false)
}

/// Like [`play`], additionally recording the opened boxes of every player.
pub fn play_traced(
    placement: &KeyPlacement,
    strategy: &StrategySpec,
    a: usize,
    seed: u64,
) -> Result<PlayOutcome> {
    play_inner(placement, strategy, a, seed, true)
}

fn play_inner(
    placement: &KeyPlacement,
    strategy: &StrategySpec,
    a: usize,
    seed: u64,
    traced: bool,
) -> Result<PlayOutcome> {
    if a == 0 {
        return Err(Error::InvalidConfig("attempt budget must be at least 1".into()));
    }
    let config = GameConfig::new(placement.boxes(), placement.keys(), placement.boxes())?;
    let mut searcher = Searcher::new(strategy, config)?;
    let streams = GameStreams::new(seed, 0);
    let mut winners = Vec::new();
    let mut attempts_used = Vec::with_capacity(config.keys());
    let mut traces = traced.then(Vec::new);
    for player in 1..=config.keys() {
        let mut rng = streams.player(player);
        let mut trace = Vec::new();
        let PlayerRun { found_at, opened, .. } = searcher.run(
            placement,
            player,
            a,
            &mut rng,
            traced.then_some(&mut trace),
        );
        if found_at.is_some() {
            winners.push(player);
        }
        attempts_used.push(opened);
        if let Some(t) = traces.as_mut() {
            t.push(trace);
        }
    }
    Ok(PlayOutcome {
        winners,
        attempts_used,
        trace: traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::collections::HashMap;

    #[test]
    fn config_validation() {
        assert!(GameConfig::new(0, 0, 0).is_err());
        assert!(GameConfig::new(3, 4, 3).is_err());
        assert!(GameConfig::new(3, 3, 4).is_err());
        assert!(GameConfig::new(3, 0, 1).is_err());
        let c = GameConfig::new(5, 3, 2).unwrap();
        assert_eq!((c.boxes(), c.keys(), c.max_attempts()), (5, 3, 2));
        assert_eq!(c.placement_count(), BigUint::from(60u32));
    }

    #[test]
    fn config_json_uses_symbol_names() {
        let c = GameConfig::new(10, 7, 4).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"N":10,"n":7,"a_max":4}"#);
        let back: GameConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<GameConfig>(r#"{"N":2,"n":3,"a_max":1}"#).is_err());
    }

    #[test]
    fn placement_rejects_repeated_or_missing_keys() {
        assert!(KeyPlacement::from_permutation(&[1, 1, 2]).is_err());
        assert!(KeyPlacement::from_permutation(&[1, 3]).is_err());
        assert!(KeyPlacement::new(vec![Slot::Empty, Slot::Empty]).is_err());
        let p = KeyPlacement::new(vec![Slot::Empty, Slot::Key(2), Slot::Key(1)]).unwrap();
        assert_eq!(p.keys(), 2);
        assert_eq!(p.box_of(1), 3);
        assert!(!p.is_permutation());
    }

    #[test]
    fn single_box_placement_is_forced() {
        let c = GameConfig::full(1).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(sample_placement(&c, &mut rng), KeyPlacement::identity(1));
        }
    }

    #[test]
    fn enumeration_counts() {
        let count = |n, k| enumerate_placements(&GameConfig::with_keys(n, k).unwrap()).unwrap().count();
        assert_eq!(count(3, 3), 6);
        assert_eq!(count(4, 2), 12);
        assert_eq!(count(1, 1), 1);
        assert_eq!(count(5, 3), 60);
    }

    #[test]
    fn enumeration_is_distinct_and_valid() {
        let c = GameConfig::with_keys(5, 2).unwrap();
        let all: Vec<_> = enumerate_placements(&c).unwrap().collect();
        let unique: std::collections::HashSet<_> = all.iter().cloned().collect();
        assert_eq!(unique.len(), all.len());
        for p in &all {
            assert!(KeyPlacement::new(p.slots().to_vec()).is_ok());
            assert_eq!(p.slots().iter().filter(|s| s.is_empty()).count(), 3);
        }
    }

    #[test]
    fn enumeration_cap_refuses_with_count() {
        let c = GameConfig::full(12).unwrap();
        match enumerate_placements(&c) {
            Err(Error::CapExceeded { required, .. }) => {
                assert_eq!(required, BigUint::from(479_001_600u64))
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    fn chi_square(counts: &HashMap<KeyPlacement, u64>, cells: usize, draws: u64) -> f64 {
        assert_eq!(counts.len(), cells);
        let expected = draws as f64 / cells as f64;
        counts
            .values()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum()
    }

    #[test]
    fn sampler_is_uniform_over_permutations() {
        let c = GameConfig::full(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 60_000;
        let mut counts = HashMap::new();
        for _ in 0..draws {
            *counts.entry(sample_placement(&c, &mut rng)).or_insert(0u64) += 1;
        }
        // 5 degrees of freedom; 99.9% quantile is 20.5.
        assert!(chi_square(&counts, 6, draws) < 20.5);
        let expected = draws as f64 / 6.0;
        let sigma = (draws as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for &o in counts.values() {
            assert!((o as f64 - expected).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn sampler_is_uniform_over_injections() {
        let c = GameConfig::with_keys(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let mut counts = HashMap::new();
        for _ in 0..draws {
            *counts.entry(sample_placement(&c, &mut rng)).or_insert(0u64) += 1;
        }
        assert!(chi_square(&counts, 6, draws) < 20.5);
        let expected = draws as f64 / 6.0;
        let sigma = (draws as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for &o in counts.values() {
            assert!((o as f64 - expected).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn sampler_is_seed_deterministic() {
        let c = GameConfig::with_keys(30, 20).unwrap();
        let a = sample_placement(&c, &mut ChaCha8Rng::seed_from_u64(3));
        let b = sample_placement(&c, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn cycle_lengths_of_shift() {
        let p = KeyPlacement::from_permutation(&[2, 3, 1, 4]).unwrap();
        assert_eq!(p.cycle_lengths(), Some(vec![1, 3]));
    }
}
