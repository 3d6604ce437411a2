//! Strategy catalog and the online search engine.
//!
//! Every strategy answers three questions for each player: which box to open
//! first, which box to open next given what was seen, and what to do when
//! the main rule points at an already opened (or empty) box.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameConfig, KeyPlacement, Slot};
use crate::Rational;

/// Rule for choosing the box after the first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum MainRule {
    /// Open the box numbered by the key just found.
    Key,
    /// Open the box `increment` places further along.
    Box { increment: i64 },
    /// Open a uniformly random unopened box.
    Random,
    /// Open a uniformly random box, possibly one already opened.
    PureRandom,
    /// Key rule with fictitious keys for empty boxes (Avis, Devroye, Iwama PF-1).
    Adi,
    /// Bin-and-surplus search of Goyal and Saks.
    GoyalSaks,
}

/// Rule for the first box: player `i` starts at `(i + D) mod N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Offset {
    Zero,
    Constant(i64),
    /// `D_i` for player `i` at index `i - 1`.
    PerPlayer(Vec<i64>),
    UniformRandom,
}

/// What to do when the main rule proposes an opened box, or the key rule
/// lands on an empty one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Escape {
    /// Follow the main rule regardless, re-opening boxes if need be.
    None,
    /// Uniformly random unopened box.
    Random,
    /// Smallest unopened box after the last one, cyclically.
    Sequential,
}

/// Declarative description of a strategy, shared by all players.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategySpec {
    pub main: MainRule,
    pub offset: Offset,
    pub escape: Escape,
}

impl StrategySpec {
    /// Key strategy with zero offset and no escape.
    pub fn ks0() -> Self {
        Self::key(Offset::Zero, Escape::None)
    }

    pub fn key(offset: Offset, escape: Escape) -> Self {
        StrategySpec {
            main: MainRule::Key,
            offset: offset.normalized(),
            escape,
        }
    }

    pub fn boxed(increment: i64, offset: Offset, escape: Escape) -> Self {
        StrategySpec {
            main: MainRule::Box { increment },
            offset: offset.normalized(),
            escape,
        }
    }

    pub fn random() -> Self {
        StrategySpec {
            main: MainRule::Random,
            offset: Offset::UniformRandom,
            escape: Escape::None,
        }
    }

    pub fn pure_random() -> Self {
        StrategySpec {
            main: MainRule::PureRandom,
            offset: Offset::UniformRandom,
            escape: Escape::None,
        }
    }

    pub fn adi() -> Self {
        StrategySpec {
            main: MainRule::Adi,
            offset: Offset::Zero,
            escape: Escape::None,
        }
    }

    pub fn goyal_saks() -> Self {
        StrategySpec {
            main: MainRule::GoyalSaks,
            offset: Offset::Zero,
            escape: Escape::None,
        }
    }

    /// Only the pure random strategy may re-open boxes by design.
    pub fn allow_revisits(&self) -> bool {
        self.main == MainRule::PureRandom
    }

    /// True when no rule consumes randomness.
    pub fn is_deterministic(&self) -> bool {
        match self.main {
            MainRule::Random | MainRule::PureRandom => false,
            MainRule::Adi | MainRule::GoyalSaks => true,
            MainRule::Key | MainRule::Box { .. } => {
                self.offset != Offset::UniformRandom && self.escape != Escape::Random
            }
        }
    }

    /// Checks that the strategy is total for `config`.
    pub fn validate(&self, config: &GameConfig) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidStrategy(format!("{self}: {msg}")));
        if let Offset::PerPlayer(list) = &self.offset {
            if list.len() != config.keys() {
                return bad(format!(
                    "per-player offsets need one entry per player ({} given, n={})",
                    list.len(),
                    config.keys()
                ));
            }
        }
        match self.main {
            MainRule::Key if config.keys() < config.boxes() && self.escape == Escape::None => bad(
                "the key rule needs an escape route when some boxes are empty".into(),
            ),
            MainRule::Box { increment } if config.boxes() > 1 && increment.rem_euclid(config.boxes() as i64) == 0 => {
                bad(format!(
                    "increment {increment} is a multiple of N={}",
                    config.boxes()
                ))
            }
            MainRule::Random | MainRule::PureRandom
                if self.offset != Offset::UniformRandom || self.escape != Escape::None =>
            {
                bad("random strategies take no offset or escape".into())
            }
            MainRule::Adi | MainRule::GoyalSaks
                if self.offset != Offset::Zero || self.escape != Escape::None =>
            {
                bad("this strategy takes no offset or escape".into())
            }
            _ => Ok(()),
        }
    }

    /// Short human label in the style of efficiency tables, e.g. `KS0+R`.
    pub fn label(&self) -> String {
        let esc = match self.escape {
            Escape::None => "",
            Escape::Random => "+R",
            Escape::Sequential => "+B",
        };
        match &self.main {
            MainRule::Key if self.offset == Offset::Zero => format!("KS0{esc}"),
            MainRule::Key => format!("KS{esc}"),
            MainRule::Box { increment } => format!("BS{increment}{esc}"),
            MainRule::Random => "RS".into(),
            MainRule::PureRandom => "pure random".into(),
            MainRule::Adi => "ADI".into(),
            MainRule::GoyalSaks => "GS".into(),
        }
    }

    /// First box for `player`.
    pub fn initial_box<R: Rng + ?Sized>(
        &self,
        config: &GameConfig,
        player: usize,
        rng: &mut R,
    ) -> usize {
        let n = config.boxes();
        match self.main {
            MainRule::Random | MainRule::PureRandom => rng.random_range(1..=n),
            MainRule::Adi => player,
            MainRule::GoyalSaks => GsPlan::new(config).bin_start(player),
            MainRule::Key | MainRule::Box { .. } => match &self.offset {
                Offset::Zero => player,
                Offset::Constant(d) => wrap(player as i64 + d, n),
                Offset::PerPlayer(ds) => wrap(player as i64 + ds[player - 1], n),
                Offset::UniformRandom => rng.random_range(1..=n),
            },
        }
    }

    /// Next box given the player's state after at least one opening.
    pub fn next_box<R: Rng + ?Sized>(&self, state: &mut StrategyState, rng: &mut R) -> usize {
        let n = state.boxes;
        let last = state.last_box.expect("next_box needs an opened box");
        let slot = state.last_slot.expect("next_box needs an observed slot");
        match self.main {
            MainRule::Key => match slot {
                Slot::Key(k) if self.escape == Escape::None || !state.opened.contains(k) => k,
                _ => self.escape(state, rng),
            },
            MainRule::Box { increment } => {
                let proposed = wrap(last as i64 + increment, n);
                if self.escape != Escape::None && state.opened.contains(proposed) {
                    self.escape(state, rng)
                } else {
                    proposed
                }
            }
            MainRule::Random => state.opened.random_unopened(rng),
            MainRule::PureRandom => rng.random_range(1..=n),
            MainRule::Adi => match slot {
                Slot::Key(k) => k,
                Slot::Empty => {
                    state.adi_counter += 1;
                    assert!(
                        state.adi_counter <= n - state.keys,
                        "ADI counter exceeds the number of empty boxes"
                    );
                    state.keys + state.adi_counter
                }
            },
            MainRule::GoyalSaks => state.gs_step(last, slot),
        }
    }

    fn escape<R: Rng + ?Sized>(&self, state: &StrategyState, rng: &mut R) -> usize {
        match self.escape {
            Escape::Random => state.opened.random_unopened(rng),
            Escape::Sequential => state
                .opened
                .next_unopened_after(state.last_box.expect("opened box")),
            Escape::None => unreachable!("{self}: no escape route for an empty box"),
        }
    }
}

impl fmt::Display for StrategySpec {
    /// Canonical compact form, e.g. `ks0`, `ks:D=3:E=R`, `bs:D=0:I=5:E=B`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.main {
            MainRule::Key if self.offset == Offset::Zero && self.escape == Escape::None => {
                f.write_str("ks0")
            }
            MainRule::Key => write!(f, "ks:D={}:E={}", self.offset, self.escape),
            MainRule::Box { increment } => {
                write!(f, "bs:D={}:I={increment}:E={}", self.offset, self.escape)
            }
            MainRule::Random => f.write_str("rs"),
            MainRule::PureRandom => f.write_str("pure-random"),
            MainRule::Adi => f.write_str("adi"),
            MainRule::GoyalSaks => f.write_str("gs"),
        }
    }
}

impl fmt::Display for Offset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Offset::Zero => f.write_str("0"),
            Offset::Constant(d) => write!(f, "{d}"),
            Offset::PerPlayer(ds) => {
                f.write_str("[")?;
                for (i, d) in ds.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{d}")?;
                }
                f.write_str("]")
            }
            Offset::UniformRandom => f.write_str("R"),
        }
    }
}

impl fmt::Display for Escape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Escape::None => "N",
            Escape::Random => "R",
            Escape::Sequential => "B",
        })
    }
}

impl Offset {
    fn normalized(self) -> Self {
        match self {
            Offset::Constant(0) => Offset::Zero,
            other => other,
        }
    }
}

impl FromStr for Offset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidStrategy(format!("bad offset `{s}`"));
        if s == "R" {
            return Ok(Offset::UniformRandom);
        }
        if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let ds = inner
                .split(',')
                .map(|d| d.trim().parse::<i64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Offset::PerPlayer(ds));
        }
        Ok(Offset::Constant(s.parse().map_err(|_| bad())?).normalized())
    }
}

impl FromStr for Escape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" => Ok(Escape::None),
            "R" => Ok(Escape::Random),
            "B" => Ok(Escape::Sequential),
            _ => Err(Error::InvalidStrategy(format!("bad escape `{s}` (expected N, R or B)"))),
        }
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    /// Parses the compact form. Fields may come in any order and default to
    /// `D=0`, `I=1`, `E=N`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let head = parts.next().unwrap_or_default();
        let mut offset = None;
        let mut increment = None;
        let mut escape = None;
        for field in parts {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::InvalidStrategy(format!("bad field `{field}` in `{s}`")))?;
            let dup = || Error::InvalidStrategy(format!("field `{k}` repeated in `{s}`"));
            match k {
                "D" if offset.is_none() => offset = Some(v.parse::<Offset>()?),
                "I" if increment.is_none() => {
                    increment = Some(v.parse::<i64>().map_err(|_| {
                        Error::InvalidStrategy(format!("bad increment `{v}` in `{s}`"))
                    })?)
                }
                "E" if escape.is_none() => escape = Some(v.parse::<Escape>()?),
                "D" | "I" | "E" => return Err(dup()),
                _ => return Err(Error::InvalidStrategy(format!("unknown field `{k}` in `{s}`"))),
            }
        }
        let no_fields = offset.is_none() && increment.is_none() && escape.is_none();
        let spec = match head {
            "ks0" if offset.is_none() && increment.is_none() => {
                StrategySpec::key(Offset::Zero, escape.unwrap_or(Escape::None))
            }
            "ks" if increment.is_none() => StrategySpec::key(
                offset.unwrap_or(Offset::Zero),
                escape.unwrap_or(Escape::None),
            ),
            "bs" => StrategySpec::boxed(
                increment.unwrap_or(1),
                offset.unwrap_or(Offset::Zero),
                escape.unwrap_or(Escape::None),
            ),
            "rs" if no_fields => StrategySpec::random(),
            "pure-random" if no_fields => StrategySpec::pure_random(),
            "adi" if no_fields => StrategySpec::adi(),
            "gs" if no_fields => StrategySpec::goyal_saks(),
            "ks0" | "ks" | "rs" | "pure-random" | "adi" | "gs" => {
                return Err(Error::InvalidStrategy(format!(
                    "`{head}` does not accept the fields given in `{s}`"
                )))
            }
            _ => {
                return Err(Error::InvalidStrategy(format!(
                    "unknown strategy `{head}` (expected ks0, ks, bs, rs, pure-random, adi or gs)"
                )))
            }
        };
        Ok(spec)
    }
}

/// Maps any integer onto boxes `1..=n`, box 0 being box `n`.
#[inline]
pub fn wrap(x: i64, n: usize) -> usize {
    ((x - 1).rem_euclid(n as i64) + 1) as usize
}

/// Bins of the Goyal-Saks strategy: `d = floor(N/n)`, bin `i < n` holds
/// boxes `d(i-1)+1 ..= d(i-1)+d` and bin `n` holds the rest up to `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GsPlan {
    boxes: usize,
    keys: usize,
    spacing: usize,
}

impl GsPlan {
    pub fn new(config: &GameConfig) -> Self {
        GsPlan {
            boxes: config.boxes(),
            keys: config.keys(),
            spacing: config.boxes() / config.keys(),
        }
    }

    /// `d = floor(N / n)`.
    pub fn spacing(&self) -> usize {
        self.spacing
    }

    pub fn bin(&self, i: usize) -> RangeInclusive<usize> {
        let start = self.bin_start(i);
        let end = if i == self.keys {
            self.boxes
        } else {
            start + self.spacing - 1
        };
        start..=end
    }

    pub fn bin_start(&self, i: usize) -> usize {
        self.spacing * (i - 1) + 1
    }

    pub fn bins(&self) -> Vec<RangeInclusive<usize>> {
        (1..=self.keys).map(|i| self.bin(i)).collect()
    }
}

/// `occupied[s, t] - ((t - s) mod N) / d` over the cyclic interval `[s, t]`.
pub fn surplus(placement: &KeyPlacement, s: usize, t: usize, d: usize) -> Rational {
    let n = placement.boxes();
    let gap = (t + n - s) % n;
    let occupied = (0..=gap)
        .filter(|k| !placement.slot(wrap((s + k) as i64, n)).is_empty())
        .count();
    Rational::new(BigInt::from(occupied * d) - BigInt::from(gap), BigInt::from(d))
}

/// `occupied[s, t] - |[s, t]| / d`, charging every box of the cyclic
/// interval including `s`. This is the measure the search uses; at `d = 1`
/// an occupied box still breaks even on its own, so the search follows keys
/// exactly like KS0 when no box is empty.
pub fn span_surplus(placement: &KeyPlacement, s: usize, t: usize, d: usize) -> Rational {
    surplus(placement, s, t, d) - Rational::new(BigInt::from(1), BigInt::from(d))
}

/// Set of opened boxes with O(1) membership and O(1) uniform choice among
/// the unopened ones.
#[derive(Clone, Debug)]
pub(crate) struct OpenedSet {
    /// Position of box `b` in `closed`, or `CLOSED_NONE` once opened.
    pos: Vec<u32>,
    closed: Vec<u32>,
}

const CLOSED_NONE: u32 = u32::MAX;

impl OpenedSet {
    fn new(boxes: usize) -> Self {
        let mut s = OpenedSet {
            pos: vec![0; boxes + 1],
            closed: Vec::with_capacity(boxes),
        };
        s.reset();
        s
    }

    fn reset(&mut self) {
        let n = self.pos.len() - 1;
        self.closed.clear();
        self.closed.extend(1..=n as u32);
        self.pos[0] = CLOSED_NONE;
        for b in 1..=n {
            self.pos[b] = (b - 1) as u32;
        }
    }

    #[inline]
    pub(crate) fn contains(&self, b: usize) -> bool {
        self.pos[b] == CLOSED_NONE
    }

    /// Marks `b` opened; false if it already was.
    #[inline]
    fn insert(&mut self, b: usize) -> bool {
        let i = self.pos[b];
        if i == CLOSED_NONE {
            return false;
        }
        let last = *self.closed.last().expect("closed box present");
        self.closed.swap_remove(i as usize);
        if last as usize != b {
            self.pos[last as usize] = i;
        }
        self.pos[b] = CLOSED_NONE;
        true
    }

    pub(crate) fn opened_count(&self) -> usize {
        self.pos.len() - 1 - self.closed.len()
    }

    fn random_unopened<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        assert!(!self.closed.is_empty(), "every box is already open");
        self.closed[rng.random_range(0..self.closed.len())] as usize
    }

    fn next_unopened_after(&self, b: usize) -> usize {
        let n = self.pos.len() - 1;
        (1..=n)
            .map(|k| wrap((b + k) as i64, n))
            .find(|&c| !self.contains(c))
            .expect("every box is already open")
    }
}

/// Online state of one player in one game.
#[derive(Clone, Debug)]
pub struct StrategyState {
    pub player: usize,
    boxes: usize,
    keys: usize,
    opened: OpenedSet,
    pub last_box: Option<usize>,
    pub last_slot: Option<Slot>,
    /// Empty boxes met so far (ADI only).
    pub adi_counter: usize,
    /// Start of the current sequential scan (GS only).
    pub gs_start: usize,
    /// Occupied boxes seen in the current scan (GS only).
    pub gs_occupied: usize,
    /// Boxes opened in the current scan (GS only).
    pub gs_scanned: usize,
    gs_spacing: usize,
    gs_plan: Option<GsPlan>,
}

impl StrategyState {
    pub fn new(config: &GameConfig, player: usize) -> Self {
        StrategyState {
            player,
            boxes: config.boxes(),
            keys: config.keys(),
            opened: OpenedSet::new(config.boxes()),
            last_box: None,
            last_slot: None,
            adi_counter: 0,
            gs_start: 0,
            gs_occupied: 0,
            gs_scanned: 0,
            gs_spacing: (config.boxes() / config.keys()).max(1),
            gs_plan: Some(GsPlan::new(config)),
        }
    }

    fn reset(&mut self, player: usize) {
        self.player = player;
        self.opened.reset();
        self.last_box = None;
        self.last_slot = None;
        self.adi_counter = 0;
        self.gs_start = 0;
        self.gs_occupied = 0;
        self.gs_scanned = 0;
    }

    pub fn is_opened(&self, b: usize) -> bool {
        self.opened.contains(b)
    }

    pub fn opened_count(&self) -> usize {
        self.opened.opened_count()
    }

    /// [`span_surplus`] of the current scan, up to and including the last
    /// box, as the integer `d * surplus` (its sign is all the scan needs).
    pub fn gs_scaled_surplus(&self) -> i64 {
        (self.gs_occupied * self.gs_spacing) as i64 - self.gs_scanned as i64
    }

    fn gs_begin_scan(&mut self, start: usize) {
        self.gs_start = start;
        self.gs_occupied = 0;
        self.gs_scanned = 0;
    }

    /// Records the box just opened in the current scan and picks the next.
    fn gs_step(&mut self, last: usize, slot: Slot) -> usize {
        self.gs_scanned += 1;
        if !slot.is_empty() {
            self.gs_occupied += 1;
        }
        if self.gs_scaled_surplus() >= 0 {
            if let Slot::Key(j) = slot {
                let next = self.gs_plan.expect("plan").bin_start(j);
                self.gs_begin_scan(next);
                return next;
            }
        }
        if self.gs_scanned >= self.boxes {
            // Full wrap without a jump: restart from the scan origin.
            let start = self.gs_start;
            self.gs_begin_scan(start);
            return start;
        }
        wrap(last as i64 + 1, self.boxes)
    }

    fn observe(&mut self, b: usize, slot: Slot, main: &MainRule, first: bool) -> bool {
        if first && *main == MainRule::GoyalSaks {
            self.gs_begin_scan(b);
        }
        self.last_box = Some(b);
        self.last_slot = Some(slot);
        self.opened.insert(b)
    }
}

/// Outcome of one player's search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlayerRun {
    /// Attempt (1-based) at which the key was found.
    pub found_at: Option<usize>,
    /// Boxes opened, counting repeats.
    pub opened: usize,
    /// Whether some box was opened twice.
    pub repeated: bool,
}

/// Reusable engine running one strategy for one configuration.
pub(crate) struct Searcher<'a> {
    spec: &'a StrategySpec,
    config: GameConfig,
    state: StrategyState,
}

impl<'a> Searcher<'a> {
    pub(crate) fn new(spec: &'a StrategySpec, config: GameConfig) -> Result<Self> {
        spec.validate(&config)?;
        Ok(Searcher {
            spec,
            config,
            state: StrategyState::new(&config, 1),
        })
    }

    /// Player `player` opens up to `budget` boxes, stopping at her key.
    pub(crate) fn run<R: Rng + ?Sized>(
        &mut self,
        placement: &KeyPlacement,
        player: usize,
        budget: usize,
        rng: &mut R,
        mut trace: Option<&mut Vec<usize>>,
    ) -> PlayerRun {
        debug_assert_eq!(placement.boxes(), self.config.boxes());
        let state = &mut self.state;
        state.reset(player);
        let mut b = self.spec.initial_box(&self.config, player, rng);
        let mut repeated = false;
        for attempt in 1..=budget {
            assert!(
                (1..=self.config.boxes()).contains(&b),
                "{} proposed box {b} outside 1..={}",
                self.spec,
                self.config.boxes()
            );
            if let Some(t) = trace.as_deref_mut() {
                t.push(b);
            }
            let slot = placement.slot(b);
            repeated |= !state.observe(b, slot, &self.spec.main, attempt == 1);
            if slot == Slot::Key(player) {
                return PlayerRun {
                    found_at: Some(attempt),
                    opened: attempt,
                    repeated,
                };
            }
            if attempt < budget {
                b = self.spec.next_box(state, rng);
            }
        }
        PlayerRun {
            found_at: None,
            opened: budget,
            repeated,
        }
    }
}

/// `gcd(|i|, N)`, for boundedness checks of box strategies.
pub fn increment_gcd(increment: i64, boxes: usize) -> usize {
    (increment.unsigned_abs() as usize).gcd(&boxes)
}
