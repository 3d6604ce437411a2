//! P-function grids `P(a, w)` and their serialized forms.

use std::fmt;
use std::io::Write;

use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::game::GameConfig;
use crate::mc::SamplingPlan;
use crate::Rational;

/// Whether `P(a, w)` counts games with exactly `w` winners or at least `w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WinnerKind {
    ExactWinners,
    MinWinners,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    MonteCarlo { plan: SamplingPlan },
    Oracle,
}

/// Cell type of a P-function.
pub trait Probability: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    fn impossible() -> Self;
    fn certain() -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn to_f64(&self) -> f64;
    /// The exact value, when there is one.
    fn as_rational(&self) -> Option<&Rational> {
        None
    }
}

impl Probability for f64 {
    fn impossible() -> Self {
        0.0
    }
    fn certain() -> Self {
        1.0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Probability for Rational {
    fn impossible() -> Self {
        Zero::zero()
    }
    fn certain() -> Self {
        One::one()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn as_rational(&self) -> Option<&Rational> {
        Some(self)
    }
}

/// Nearest double, also for numerators and denominators beyond `f64` range.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(x) = ToPrimitive::to_f64(r) {
        if x.is_finite() {
            return x;
        }
    }
    // Scale both sides down to the top 64 bits and keep the exponent apart.
    let bits = |x: &num_bigint::BigInt| x.bits() as i64;
    let (n, d) = (r.numer(), r.denom());
    let shift_n = (bits(n) - 64).max(0);
    let shift_d = (bits(d) - 64).max(0);
    let nf = (n >> shift_n as usize).to_f64().unwrap_or(0.0);
    let df = (d >> shift_d as usize).to_f64().unwrap_or(1.0);
    nf / df * 2f64.powi((shift_n - shift_d) as i32)
}

/// Grid of probabilities with rows `a = 1..=a_max` and columns `w = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PFunction<T> {
    config: GameConfig,
    kind: WinnerKind,
    provenance: Provenance,
    strategy: String,
    rows: Vec<Vec<T>>,
}

impl<T: Probability> PFunction<T> {
    pub fn new(
        config: GameConfig,
        kind: WinnerKind,
        provenance: Provenance,
        strategy: impl Into<String>,
        rows: Vec<Vec<T>>,
    ) -> Result<Self> {
        if rows.len() != config.max_attempts() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows for a_max={}",
                rows.len(),
                config.max_attempts()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != config.keys() + 1) {
            return Err(Error::ShapeMismatch(format!(
                "row of length {} for n={}",
                r.len(),
                config.keys()
            )));
        }
        Ok(PFunction {
            config,
            kind,
            provenance,
            strategy: strategy.into(),
            rows,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn kind(&self) -> WinnerKind {
        self.kind
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Compact strategy string this grid belongs to.
    pub fn strategy(&self) -> &str {
        &self.strategy
    }

    /// `P(a, w)` with `a` from 1.
    pub fn get(&self, a: usize, w: usize) -> &T {
        &self.rows[a - 1][w]
    }

    pub fn try_get(&self, a: usize, w: usize) -> Option<&T> {
        self.rows.get(a.checked_sub(1)?)?.get(w)
    }

    pub fn row(&self, a: usize) -> &[T] {
        &self.rows[a - 1]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<T>> {
        self.rows
    }

    /// Exact-winner rows sum to one; returns the worst deviation.
    pub fn normalization_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let s = r.iter().fold(T::impossible(), |acc, p| acc.plus(p));
                (s.to_f64() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> PFunction<f64> {
        PFunction {
            config: self.config,
            kind: self.kind,
            provenance: self.provenance.clone(),
            strategy: self.strategy.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(T::to_f64).collect())
                .collect(),
        }
    }

    /// Minimum-winner view; identity on grids that already are one.
    pub fn min_view(&self) -> PFunction<T> {
        match self.kind {
            WinnerKind::MinWinners => self.clone(),
            WinnerKind::ExactWinners => min_from_exact(self),
        }
    }

    /// CSV with header `a,w,p`, rows in `(a, w)` order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["a", "w", "p"])?;
        for (i, row) in self.rows.iter().enumerate() {
            for (w, p) in row.iter().enumerate() {
                wtr.write_record([
                    (i + 1).to_string(),
                    w.to_string(),
                    format_probability(p.to_f64()),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// `{config, kind, provenance, strategy, values}`; with `rationals`,
    /// exact grids also carry `exact` as `num/den` strings.
    pub fn to_json(&self, rationals: bool) -> Value {
        let values: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(T::to_f64).collect())
            .collect();
        let mut v = json!({
            "config": self.config,
            "kind": self.kind,
            "provenance": self.provenance,
            "strategy": self.strategy,
            "values": values,
        });
        if rationals && self.rows.iter().flatten().all(|p| p.as_rational().is_some()) {
            let exact: Vec<Vec<String>> = self
                .rows
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|p| {
                            let q = p.as_rational().expect("checked above");
                            format!("{}/{}", q.numer(), q.denom())
                        })
                        .collect()
                })
                .collect();
            v["exact"] = json!(exact);
        }
        v
    }
}

impl PFunction<f64> {
    /// Reads the JSON form back; exact strings are ignored.
    pub fn from_json(v: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            config: GameConfig,
            kind: WinnerKind,
            provenance: Provenance,
            #[serde(default)]
            strategy: String,
            values: Vec<Vec<f64>>,
        }
        let raw: Raw = serde_json::from_value(v.clone())?;
        PFunction::new(raw.config, raw.kind, raw.provenance, raw.strategy, raw.values)
    }

    /// Reads `a,w,p` rows for a known configuration.
    pub fn read_csv<R: std::io::Read>(
        input: R,
        config: GameConfig,
        kind: WinnerKind,
        provenance: Provenance,
        strategy: impl Into<String>,
    ) -> Result<Self> {
        let mut rows = vec![vec![f64::NAN; config.keys() + 1]; config.max_attempts()];
        let mut rdr = csv::Reader::from_reader(input);
        for rec in rdr.deserialize() {
            let (a, w, p): (usize, usize, f64) = rec?;
            let cell = rows
                .get_mut(a.wrapping_sub(1))
                .and_then(|r| r.get_mut(w))
                .ok_or_else(|| Error::ShapeMismatch(format!("cell ({a},{w}) outside the grid")))?;
            *cell = p;
        }
        if rows.iter().flatten().any(|p| p.is_nan()) {
            return Err(Error::ShapeMismatch("missing cells in CSV".into()));
        }
        PFunction::new(config, kind, provenance, strategy, rows)
    }
}

impl PFunction<Rational> {
    /// True when every row sums to exactly one.
    pub fn is_normalized(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.iter().fold(Rational::zero(), |acc, p| acc + p).is_one())
    }
}

/// `P^min(a, k) = sum_{i >= k} P(a, i)`.
pub fn min_from_exact<T: Probability>(p: &PFunction<T>) -> PFunction<T> {
    assert_eq!(p.kind, WinnerKind::ExactWinners, "min_from_exact needs exact winners");
    let rows = p
        .rows
        .iter()
        .map(|row| {
            let mut out = vec![T::impossible(); row.len()];
            let mut acc = T::impossible();
            for w in (0..row.len()).rev() {
                acc = acc.plus(&row[w]);
                out[w] = acc.clone();
            }
            // Rounding must not leak into the w = 0 identity.
            out[0] = T::certain();
            out
        })
        .collect();
    PFunction {
        config: p.config,
        kind: WinnerKind::MinWinners,
        provenance: p.provenance.clone(),
        strategy: p.strategy.clone(),
        rows,
    }
}

/// Decimal with round-trip precision, scientific below `1e-4`.
pub fn format_probability(p: f64) -> String {
    if p == 0.0 || p.abs() >= 1e-4 {
        format!("{p}")
    } else {
        format!("{p:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn rs_n2() -> PFunction<Rational> {
        let config = GameConfig::full(2).unwrap();
        PFunction::new(
            config,
            WinnerKind::ExactWinners,
            Provenance::ClosedForm,
            "rs",
            vec![vec![q(1, 4), q(1, 2), q(1, 4)], vec![q(0, 1), q(0, 1), q(1, 1)]],
        )
        .unwrap()
    }

    #[test]
    fn min_view_of_rs_row() {
        let m = min_from_exact(&rs_n2());
        assert_eq!(m.row(1), &[q(1, 1), q(3, 4), q(1, 4)]);
        assert_eq!(m.row(2), &[q(1, 1), q(1, 1), q(1, 1)]);
        assert_eq!(m.get(1, 2), rs_n2().get(1, 2));
        assert_eq!(m.kind(), WinnerKind::MinWinners);
    }

    #[test]
    fn shape_is_checked() {
        let config = GameConfig::full(2).unwrap();
        let bad = PFunction::new(
            config,
            WinnerKind::ExactWinners,
            Provenance::Oracle,
            "ks0",
            vec![vec![1.0, 0.0, 0.0]],
        );
        assert!(matches!(bad, Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        rs_n2().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "a,w,p");
        assert_eq!(lines[1], "1,0,0.25");
        assert_eq!(lines[2], "1,1,0.5");
        assert_eq!(lines.len(), 7);
        let back = PFunction::read_csv(
            text.as_bytes(),
            GameConfig::full(2).unwrap(),
            WinnerKind::ExactWinners,
            Provenance::ClosedForm,
            "rs",
        )
        .unwrap();
        assert_eq!(back, rs_n2().to_f64());
    }

    #[test]
    fn csv_keeps_twelve_significant_digits() {
        for p in [1.0 / 3.0, 2.0 / 7.0 * 1e-9, 0.123456789012345] {
            let s = format_probability(p);
            let back: f64 = s.parse().unwrap();
            assert!(((back - p) / p).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn json_round_trip_and_rationals() {
        let p = rs_n2();
        let v = p.to_json(true);
        assert_eq!(v["exact"][0][1], "1/2");
        assert_eq!(v["config"]["N"], 2);
        assert_eq!(v["kind"], "exact_winners");
        let back = PFunction::from_json(&v).unwrap();
        assert_eq!(back, p.to_f64());
        assert!(p.to_f64().to_json(true).get("exact").is_none());
    }

    #[test]
    fn huge_rationals_convert() {
        let big = num_bigint::BigInt::from(10).pow(400);
        let r = Rational::new(big.clone() / 3, big);
        assert!((rational_to_f64(&r) - 1.0 / 3.0).abs() < 1e-15);
        let tiny = Rational::new(1.into(), num_bigint::BigInt::from(10).pow(200));
        assert!((rational_to_f64(&tiny) / 1e-200 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalization() {
        assert!(rs_n2().is_normalized());
        assert!(rs_n2().normalization_error() < 1e-15);
    }
}
