//! Closed-form P-functions and the counting behind them, in exact arithmetic.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::game::GameConfig;
use crate::pfunction::{PFunction, Provenance, WinnerKind};
use crate::strategy::StrategySpec;
use crate::Rational;

/// Largest `N` for which KS0 rows are built by partition enumeration.
pub const PARTITION_CAP: usize = 60;

pub fn factorial(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::one(), |acc, k| acc * k)
}

/// Factorials `0!..=n!`.
pub fn factorials(n: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(BigUint::one());
    for k in 1..=n {
        let next = &out[k - 1] * k as u64;
        out.push(next);
    }
    out
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    num_integer::binomial(BigUint::from(n), BigUint::from(k))
}

fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Rational {
    Rational::new(num.into(), den.into())
}

fn biguint_ratio(num: &BigUint, den: &BigUint) -> Rational {
    ratio(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

fn pow(base: &Rational, e: usize) -> Rational {
    num_traits::pow(base.clone(), e)
}

/// Cycle type of a permutation: `alpha(k)` cycles of length `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycleType {
    /// `alpha[k - 1]` for `k = 1..=N`.
    alpha: Vec<usize>,
}

impl CycleType {
    /// From multiplicities `alpha_1..alpha_N`.
    pub fn new(alpha: Vec<usize>) -> Result<Self> {
        let total: usize = alpha.iter().enumerate().map(|(i, a)| (i + 1) * a).sum();
        if total != alpha.len() {
            return Err(Error::InvalidConfig(format!(
                "cycle type covers {total} elements, expected {}",
                alpha.len()
            )));
        }
        Ok(CycleType { alpha })
    }

    /// From cycle lengths, in any order.
    pub fn from_parts(parts: &[usize]) -> Result<Self> {
        let n: usize = parts.iter().sum();
        let mut alpha = vec![0; n];
        for &p in parts {
            if p == 0 {
                return Err(Error::InvalidConfig("cycle of length 0".into()));
            }
            alpha[p - 1] += 1;
        }
        Ok(CycleType { alpha })
    }

    pub fn size(&self) -> usize {
        self.alpha.len()
    }

    /// Number of cycles of length `k`.
    pub fn alpha(&self, k: usize) -> usize {
        self.alpha.get(k.wrapping_sub(1)).copied().unwrap_or(0)
    }

    /// Elements lying on cycles of length `k`, i.e. `k * alpha(k)`.
    pub fn covered(&self, k: usize) -> usize {
        k * self.alpha(k)
    }

    /// Cycle lengths in decreasing order.
    pub fn parts(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for k in (1..=self.size()).rev() {
            out.extend(std::iter::repeat_n(k, self.alpha(k)));
        }
        out
    }

    /// Winners under the key strategy with budget `a`: everyone on a cycle
    /// no longer than `a`.
    pub fn ks0_winners(&self, a: usize) -> usize {
        (1..=a.min(self.size())).map(|k| self.covered(k)).sum()
    }

    /// Permutations with this cycle type.
    pub fn count(&self) -> BigUint {
        count_cycle_type(self)
    }
}

/// `N! / prod_k (k^alpha_k alpha_k!)`.
pub fn count_cycle_type(ct: &CycleType) -> BigUint {
    count_with(&ct.alpha, &factorials(ct.size()))
}

fn count_with(alpha: &[usize], fact: &[BigUint]) -> BigUint {
    let n = alpha.len();
    let mut den = BigUint::one();
    for (i, &a) in alpha.iter().enumerate() {
        if a > 0 {
            den *= num_traits::pow(BigUint::from(i + 1), a) * &fact[a];
        }
    }
    &fact[n] / den
}

/// Calls `f` with the multiplicity vector of every partition of `n`.
pub fn for_each_partition(n: usize, mut f: impl FnMut(&[usize])) {
    fn rec(rest: usize, max: usize, alpha: &mut [usize], f: &mut dyn FnMut(&[usize])) {
        if rest == 0 {
            f(alpha);
            return;
        }
        for k in (1..=max.min(rest)).rev() {
            // Take `m` parts equal to k, then continue with parts < k.
            for m in 1..=rest / k {
                alpha[k - 1] = m;
                rec(rest - m * k, k - 1, alpha, f);
            }
            alpha[k - 1] = 0;
        }
    }
    let mut alpha = vec![0; n];
    rec(n, n, &mut alpha, &mut f);
}

/// All cycle types of `n`.
pub fn cycle_types(n: usize) -> Vec<CycleType> {
    let mut out = Vec::new();
    for_each_partition(n, |alpha| out.push(CycleType { alpha: alpha.to_vec() }));
    out
}

/// Number of partitions of `n` (Euler's pentagonal recurrence).
pub fn partition_count(n: usize) -> BigUint {
    let mut p: Vec<BigInt> = vec![BigInt::one()];
    for m in 1..=n {
        let mut acc = BigInt::zero();
        for k in 1.. {
            let k = k as i64;
            let g1 = (k * (3 * k - 1) / 2) as usize;
            if g1 > m {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc += &p[m - g1] * sign;
            let g2 = (k * (3 * k + 1) / 2) as usize;
            if g2 <= m {
                acc += &p[m - g2] * sign;
            }
        }
        p.push(acc);
    }
    p[n].to_biguint().expect("partition counts are positive")
}

/// Permutations of `n` with at least one `l`-cycle, summed over cycle types.
pub fn omega_at_least_one_enumerated(n: usize, l: usize) -> BigUint {
    assert!((1..=n).contains(&l), "need 1 <= l <= N");
    let fact = factorials(n);
    let mut total = BigUint::zero();
    for_each_partition(n, |alpha| {
        if alpha[l - 1] > 0 {
            total += count_with(alpha, &fact);
        }
    });
    total
}

/// `table[m][k]`: permutations of `m` elements with exactly `k` cycles of
/// length `l`, for `m = 0..=n`.
pub fn omega_exactly_table(n: usize, l: usize) -> Vec<Vec<BigUint>> {
    assert!(l >= 1, "cycle length must be positive");
    let fact = factorials(n);
    let mut table: Vec<Vec<BigUint>> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let r = m / l;
        let mut row = vec![BigUint::zero(); r + 1];
        if m >= l {
            // Place one l-cycle among m elements, the rest carry k - 1 more;
            // each arrangement is met k times.
            let lead = binomial(m, l) * &fact[l - 1];
            for k in 1..=r {
                let (q, rem) = (&lead * &table[m - l][k - 1]).div_rem(&BigUint::from(k));
                debug_assert!(rem.is_zero());
                row[k] = q;
            }
        }
        let with: BigUint = row.iter().skip(1).sum();
        row[0] = &fact[m] - with;
        table.push(row);
    }
    table
}

/// `Omega^N_{alpha_l = k}` via the recursion.
pub fn omega_exactly(n: usize, l: usize, k: usize) -> BigUint {
    omega_exactly_table(n, l)[n]
        .get(k)
        .cloned()
        .unwrap_or_default()
}

/// Permutations of `n` with at least one `l`-cycle, via the recursion:
/// `N!/(l (N-l)!) [ (N-l)! - sum_{i=1}^{r-1} i/(i+1) Omega^{N-l}_{alpha_l=i} ]`.
pub fn omega_at_least_one(n: usize, l: usize) -> BigUint {
    assert!((1..=n).contains(&l), "need 1 <= l <= N");
    let table = omega_exactly_table(n - l, l);
    let inner_row = &table[n - l];
    let mut bracket = ratio(BigInt::from(factorial(n - l)), 1);
    for (i, c) in inner_row.iter().enumerate().skip(1) {
        bracket -= ratio(BigInt::from(c.clone()) * i, i + 1);
    }
    let lead = biguint_ratio(&factorial(n), &(factorial(n - l) * l));
    let value = lead * bracket;
    assert!(value.is_integer(), "Omega must be an integer");
    value.to_integer().to_biguint().expect("non-negative count")
}

/// Permutations of `m` with every cycle of length at most `a` (`short`) or
/// every cycle longer than `a`, for `m = 0..=n`.
fn cycle_bounded_counts(n: usize, a: usize, short: bool) -> Vec<BigUint> {
    let mut out: Vec<BigUint> = vec![BigUint::one()];
    for m in 1..=n {
        let mut acc = BigUint::zero();
        // Cycle through element 1 has length j: (m-1)!/(m-j)! choices.
        let mut falling = BigUint::one();
        for j in 1..=m {
            if j > 1 {
                falling *= m - j + 1;
            }
            if (j <= a) == short {
                acc += &falling * &out[m - j];
            }
        }
        out.push(acc);
    }
    out
}

/// Permutations of `n` whose cycles all have length at most `a`.
pub fn short_cycle_count(n: usize, a: usize) -> BigUint {
    cycle_bounded_counts(n, a, true).pop().expect("non-empty")
}

/// Probability that every player wins under KS0 with budget `a`.
pub fn exact_ks0_all(n: usize, a: usize) -> Result<Rational> {
    check_budget(n, a)?;
    Ok(biguint_ratio(&short_cycle_count(n, a), &factorial(n)))
}

/// `1 - sum_{k>a} Omega^N_k / N!`. Equal to [`exact_ks0_all`] when no
/// permutation can hold two cycles longer than `a`, i.e. `2(a+1) > N`; below
/// that the sum counts such permutations more than once.
pub fn omega_tail_ks0_all(n: usize, a: usize) -> Result<Rational> {
    check_budget(n, a)?;
    let tail: BigUint = (a + 1..=n).map(|k| omega_at_least_one(n, k)).sum();
    Ok(Rational::one() - biguint_ratio(&tail, &factorial(n)))
}

fn check_budget(n: usize, a: usize) -> Result<()> {
    if n == 0 || a == 0 || a > n {
        return Err(Error::InvalidConfig(format!("need 1 <= a <= N, got N={n}, a={a}")));
    }
    Ok(())
}

/// Random strategy, `n = N`: `C(N,w) (a/N)^w ((N-a)/N)^(N-w)`.
pub fn exact_rs(n: usize, a: usize) -> Result<Vec<Rational>> {
    exact_rs_empty(n, n, a)
}

/// Random strategy with `n` keys in `N` boxes: `C(n,w) (a/N)^w ((N-a)/N)^(n-w)`.
pub fn exact_rs_empty(boxes: usize, keys: usize, a: usize) -> Result<Vec<Rational>> {
    check_budget(boxes, a)?;
    if keys == 0 || keys > boxes {
        return Err(Error::InvalidConfig(format!("need 1 <= n <= N, got N={boxes}, n={keys}")));
    }
    let p = ratio(a as i64, boxes as i64);
    let q = Rational::one() - &p;
    Ok(binomial_row(keys, &p, &q))
}

/// `C(n,w) p^w q^(n-w)` for `p + q = 1`.
///
/// With `p = P/D` and `q = Q/D` in lowest terms, `P^w Q^(n-w)` is coprime
/// to `D`, so only the binomial coefficient can cancel against `D^n`. This
/// keeps huge cells (pure random at `N = 100`) away from full gcd reduction.
fn binomial_row(n: usize, p: &Rational, q: &Rational) -> Vec<Rational> {
    debug_assert_eq!(p + q, Rational::one());
    let d = p.denom().to_biguint().expect("positive denominator");
    debug_assert_eq!(p.denom(), q.denom());
    let big_p = p.numer().to_biguint().expect("probability");
    let big_q = q.numer().to_biguint().expect("probability");
    let powers = |x: &BigUint| {
        let mut v = vec![BigUint::one()];
        for k in 1..=n {
            let next = &v[k - 1] * x;
            v.push(next);
        }
        v
    };
    let (pp, qp) = (powers(&big_p), powers(&big_q));
    let den = num_traits::pow(d, n);
    (0..=n)
        .map(|w| {
            let num = &pp[w] * &qp[n - w];
            if num.is_zero() {
                return Rational::zero();
            }
            let c = binomial(n, w);
            let g = c.gcd(&(&den % &c));
            let num = (&c / &g) * num;
            Rational::new_raw(BigInt::from(num), BigInt::from(&den / &g))
        })
        .collect()
}

/// `P^min_RS(a, w)`.
pub fn exact_rs_min(n: usize, a: usize, w: usize) -> Result<Rational> {
    Ok(exact_rs(n, a)?.iter().skip(w).sum())
}

/// Pure random strategy: `C(N,w) (1-q)^w q^(N-w)` with `q = ((N-1)/N)^a`.
/// Any `a >= 1` is allowed since boxes may be re-opened.
pub fn exact_pure_random(n: usize, a: usize) -> Result<Vec<Rational>> {
    if n == 0 || a == 0 {
        return Err(Error::InvalidConfig(format!("need N >= 1 and a >= 1, got N={n}, a={a}")));
    }
    let q = pow(&ratio(n as i64 - 1, n as i64), a);
    let p = Rational::one() - &q;
    Ok(binomial_row(n, &p, &q))
}

/// KS0 row over `w = 0..=N` by enumerating cycle types.
pub fn exact_ks0(n: usize, a: usize) -> Result<Vec<Rational>> {
    Ok(exact_ks0_rows(n, a, a, PARTITION_CAP)?.pop().expect("one row"))
}

/// KS0 rows for budgets `a_from..=a_to`, refusing when `N > cap`.
pub fn exact_ks0_rows(n: usize, a_from: usize, a_to: usize, cap: usize) -> Result<Vec<Vec<Rational>>> {
    check_budget(n, a_from)?;
    check_budget(n, a_to)?;
    if n > cap {
        return Err(Error::CapExceeded {
            what: "KS0 partition enumeration (partitions of N)",
            required: partition_count(n),
            cap: partition_count(cap),
        });
    }
    let fact = factorials(n);
    let budgets = a_from..=a_to;
    let mut counts = vec![vec![BigUint::zero(); n + 1]; budgets.clone().count()];
    for_each_partition(n, |alpha| {
        let c = count_with(alpha, &fact);
        let mut w: usize = (1..a_from).map(|k| k * alpha[k - 1]).sum();
        for (row, a) in counts.iter_mut().zip(budgets.clone()) {
            w += a * alpha[a - 1];
            row[w] += &c;
        }
    });
    Ok(counts
        .into_iter()
        .map(|row| row.iter().map(|c| biguint_ratio(c, &fact[n])).collect())
        .collect())
}

/// KS0 row by splitting the players into short-cycle winners and
/// long-cycle losers: `C(N,w) A_a(w) B_a(N-w) / N!`. Polynomial in `N`.
pub fn exact_ks0_split(n: usize, a: usize) -> Result<Vec<Rational>> {
    check_budget(n, a)?;
    let short = cycle_bounded_counts(n, a, true);
    let long = cycle_bounded_counts(n, a, false);
    let fact = factorial(n);
    Ok((0..=n)
        .map(|w| biguint_ratio(&(binomial(n, w) * &short[w] * &long[n - w]), &fact))
        .collect())
}

/// Subfactorials `!0..=!n`.
pub fn derangements(n: usize) -> Vec<BigUint> {
    let mut d = vec![BigUint::one(), BigUint::zero()];
    for m in 2..=n {
        let next = (&d[m - 1] + &d[m - 2]) * (m - 1);
        d.push(next);
    }
    d.truncate(n + 1);
    d
}

/// Permutations of `n` with exactly `w` fixed points: `C(N,w) !(N-w)`.
pub fn rencontres(n: usize, w: usize) -> BigUint {
    if w > n {
        return BigUint::zero();
    }
    binomial(n, w) * &derangements(n - w)[n - w]
}

/// Box strategy at `a = 1`: `D_{N,w} / N!`.
pub fn exact_bs_a1(n: usize) -> Result<Vec<Rational>> {
    check_budget(n, 1)?;
    let fact = factorial(n);
    Ok((0..=n).map(|w| biguint_ratio(&rencontres(n, w), &fact)).collect())
}

/// Permutations `s` of `n` with exactly `w` indices where `s(i)` is `i` or
/// `i + 1 (mod N)`.
pub fn menage(n: usize, w: usize) -> Result<BigUint> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("ménage numbers need N >= 2, got {n}")));
    }
    if w > n {
        return Ok(BigUint::zero());
    }
    let fact = factorials(n);
    let mut acc = BigInt::zero();
    for k in w..=n {
        // 2N/(2N-k) C(2N-k, k): k-matchings of the 2N-cycle.
        let (m, rem) = (binomial(2 * n - k, k) * (2 * n)).div_rem(&BigUint::from(2 * n - k));
        debug_assert!(rem.is_zero());
        let term = BigInt::from(m * &fact[n - k] * binomial(k, w));
        if (k - w) % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc.to_biguint().expect("ménage counts are non-negative"))
}

/// Box strategy at `a = 2`: `C_{N,w} / N!`.
pub fn exact_bs_a2(n: usize) -> Result<Vec<Rational>> {
    check_budget(n, 2)?;
    let fact = factorial(n);
    (0..=n)
        .map(|w| Ok(biguint_ratio(&menage(n, w)?, &fact)))
        .collect()
}

fn grid(
    config: &GameConfig,
    strategy: &StrategySpec,
    row: impl Fn(usize) -> Result<Vec<Rational>>,
) -> Result<PFunction<Rational>> {
    let rows = (1..=config.max_attempts()).map(row).collect::<Result<Vec<_>>>()?;
    PFunction::new(
        *config,
        WinnerKind::ExactWinners,
        Provenance::ClosedForm,
        strategy.to_string(),
        rows,
    )
}

/// Closed-form P-function of `strategy` on `config`, when one exists.
pub fn exact_pfunction(strategy: &StrategySpec, config: &GameConfig) -> Result<PFunction<Rational>> {
    exact_pfunction_capped(strategy, config, PARTITION_CAP)
}

pub fn exact_pfunction_capped(
    strategy: &StrategySpec,
    config: &GameConfig,
    partition_cap: usize,
) -> Result<PFunction<Rational>> {
    use crate::strategy::MainRule;
    let n = config.boxes();
    let full = config.keys() == n;
    match strategy.main {
        MainRule::Random => grid(config, strategy, |a| exact_rs_empty(n, config.keys(), a)),
        MainRule::PureRandom if full => grid(config, strategy, |a| exact_pure_random(n, a)),
        MainRule::Key | MainRule::Adi | MainRule::GoyalSaks if full && *strategy == canonical(strategy) => {
            let rows = exact_ks0_rows(n, 1, config.max_attempts(), partition_cap)?;
            PFunction::new(
                *config,
                WinnerKind::ExactWinners,
                Provenance::ClosedForm,
                strategy.to_string(),
                rows,
            )
        }
        _ => Err(Error::Unsupported(format!(
            "no closed form for `{strategy}` at {config}; use the oracle or Monte Carlo"
        ))),
    }
}

/// Strategies that reduce to KS0 when no box is empty.
fn canonical(strategy: &StrategySpec) -> StrategySpec {
    use crate::strategy::MainRule;
    match strategy.main {
        MainRule::Key => StrategySpec::ks0(),
        MainRule::Adi => StrategySpec::adi(),
        MainRule::GoyalSaks => StrategySpec::goyal_saks(),
        _ => strategy.clone(),
    }
}
