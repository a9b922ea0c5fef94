//! Continued-fraction expansions of numbers in (0, 1), their convergents, and
//! certified enclosures of the Gauss-map orbit quantities α_k and β_k.
//!
//! An expansion `[0; a_1, a_2, …]` is one of
//!
//! * **finite**: a rational, stored in the canonical form whose last digit is
//!   at least 2;
//! * **eventually periodic**: a quadratic irrational, stored with a primitive
//!   period and the shortest possible preperiod;
//! * **stream**: a finite prefix of an unknown infinite expansion, optionally
//!   with a certified bound on every digit (including the unseen ones).
//!
//! The orbit quantities are enclosed from exact integer arithmetic on the
//! digits. Nothing here iterates `x ↦ {1/x}` in floating point.

use std::fmt;
use std::str::FromStr;

use rug::float::Round;
use rug::{Float, Integer};

use crate::error::{Error, Result};
use crate::interval::{working_precision, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CfKind {
    Finite,
    EventuallyPeriodic,
    Stream,
}

/// A continued-fraction expansion `[0; a_1, a_2, …]` of a number in (0, 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CfDigits {
    kind: CfKind,
    preperiod: Vec<u64>,
    period: Vec<u64>,
    digit_bound: Option<u64>,
}

fn check_positive(digits: &[u64]) -> Result<()> {
    if digits.contains(&0) {
        return Err(Error::InvalidDigits("partial quotients must be >= 1".into()));
    }
    Ok(())
}

/// Length of the shortest word whose repetition gives `period`.
fn primitive_len(period: &[u64]) -> usize {
    let m = period.len();
    (1..=m)
        .filter(|d| m % d == 0)
        .find(|&d| period.chunks(d).all(|c| c == &period[..d]))
        .unwrap_or(m)
}

impl CfDigits {
    /// A rational `[0; a_1, …, a_n]`, normalized so that `a_n >= 2`.
    pub fn finite(mut digits: Vec<u64>) -> Result<Self> {
        check_positive(&digits)?;
        if digits.is_empty() {
            return Err(Error::OutOfUnitInterval);
        }
        if digits.len() >= 2 && digits[digits.len() - 1] == 1 {
            digits.pop();
            *digits.last_mut().unwrap() += 1;
        }
        if digits == [1] {
            // [0; 1] = 1
            return Err(Error::OutOfUnitInterval);
        }
        let bound = digits.iter().copied().max();
        Ok(CfDigits {
            kind: CfKind::Finite,
            preperiod: digits,
            period: Vec::new(),
            digit_bound: bound,
        })
    }

    /// `[0; a_1, …, a_j, (b_1, …, b_m)]` with the period reduced to its
    /// primitive length and the preperiod made as short as possible.
    pub fn periodic(mut preperiod: Vec<u64>, mut period: Vec<u64>) -> Result<Self> {
        check_positive(&preperiod)?;
        check_positive(&period)?;
        if period.is_empty() {
            return Err(Error::InvalidDigits("period must be nonempty".into()));
        }
        period.truncate(primitive_len(&period));
        // [.., c, (b_1 .. b_m)] with c = b_m is [.., (b_m, b_1 .. b_{m-1})]
        while let Some(&last) = preperiod.last() {
            if last != *period.last().unwrap() {
                break;
            }
            preperiod.pop();
            period.rotate_right(1);
        }
        let bound = preperiod.iter().chain(&period).copied().max();
        Ok(CfDigits {
            kind: CfKind::EventuallyPeriodic,
            preperiod,
            period,
            digit_bound: bound,
        })
    }

    /// A materialized prefix of an infinite expansion. `digit_bound = None`
    /// opts out of certified upper bounds; `Some(M)` asserts that every digit,
    /// seen or not, is at most `M`.
    pub fn stream(digits: Vec<u64>, digit_bound: Option<u64>) -> Result<Self> {
        check_positive(&digits)?;
        if let Some(m) = digit_bound {
            if m == 0 {
                return Err(Error::InvalidParameter("digit bound must be >= 1".into()));
            }
            if let Some(&d) = digits.iter().find(|&&d| d > m) {
                return Err(Error::DigitExceedsBound { digit: d, bound: m });
            }
        }
        Ok(CfDigits {
            kind: CfKind::Stream,
            preperiod: digits,
            period: Vec::new(),
            digit_bound,
        })
    }

    /// Re-declares the digit bound of a stream.
    pub fn with_digit_bound(self, bound: Option<u64>) -> Result<Self> {
        match self.kind {
            CfKind::Stream => CfDigits::stream(self.preperiod, bound),
            _ => Ok(self),
        }
    }

    pub fn kind(&self) -> CfKind {
        self.kind
    }

    /// For a stream or a finite expansion, all materialized digits.
    pub fn preperiod(&self) -> &[u64] {
        &self.preperiod
    }

    pub fn period(&self) -> &[u64] {
        &self.period
    }

    pub fn digit_bound(&self) -> Option<u64> {
        self.digit_bound
    }

    /// Number of digits that can be read; `None` when unlimited.
    pub fn depth_available(&self) -> Option<usize> {
        match self.kind {
            CfKind::EventuallyPeriodic => None,
            _ => Some(self.preperiod.len()),
        }
    }

    fn require(&self, needed: usize) -> Result<()> {
        match self.depth_available() {
            Some(available) if available < needed => {
                Err(Error::InsufficientDigits { needed, available })
            }
            _ => Ok(()),
        }
    }

    /// The partial quotient `a_i`, 1-based.
    pub fn digit(&self, i: usize) -> Option<u64> {
        if i == 0 {
            return None;
        }
        if i <= self.preperiod.len() {
            return Some(self.preperiod[i - 1]);
        }
        if self.period.is_empty() {
            return None;
        }
        let j = (i - 1 - self.preperiod.len()) % self.period.len();
        Some(self.period[j])
    }

    /// `a_1 … a_n`, or fewer if the expansion is shorter.
    pub fn prefix(&self, n: usize) -> Vec<u64> {
        (1..=n).map_while(|i| self.digit(i)).collect()
    }

    /// The expansion `[0; a_{k+1}, a_{k+2}, …]` of `α_k(x)`.
    pub fn shifted(&self, k: usize) -> Result<CfDigits> {
        match self.kind {
            CfKind::EventuallyPeriodic => {
                if k <= self.preperiod.len() {
                    CfDigits::periodic(self.preperiod[k..].to_vec(), self.period.clone())
                } else {
                    let mut period = self.period.clone();
                    let m = period.len();
                    period.rotate_left((k - self.preperiod.len()) % m);
                    CfDigits::periodic(Vec::new(), period)
                }
            }
            CfKind::Finite => {
                self.require(k + 1)?;
                CfDigits::finite(self.preperiod[k..].to_vec())
            }
            CfKind::Stream => {
                self.require(k + 1)?;
                CfDigits::stream(self.preperiod[k..].to_vec(), self.digit_bound)
            }
        }
    }
}

impl fmt::Display for CfDigits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |d: &[u64]| d.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        write!(f, "[0;{}", join(&self.preperiod))?;
        match self.kind {
            CfKind::Finite => {}
            CfKind::EventuallyPeriodic => {
                if !self.preperiod.is_empty() {
                    f.write_str(",")?;
                }
                write!(f, "({})", join(&self.period))?;
            }
            CfKind::Stream => {
                if !self.preperiod.is_empty() {
                    f.write_str(",")?;
                }
                f.write_str("...")?;
            }
        }
        f.write_str("]")
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, msg: impl Into<String>) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        match self.peek() {
            Some(b) if b == c => {
                self.pos += 1;
                Ok(())
            }
            Some(b) => Err(self.syntax(format!("expected `{}`, found `{}`", c as char, b as char))),
            None => Err(self.syntax(format!("expected `{}`, found end of input", c as char))),
        }
    }

    fn number(&mut self) -> Result<u64> {
        let start = match self.peek() {
            Some(b'-') => return Err(Error::NegativeDigit { pos: self.pos }),
            Some(b) if b.is_ascii_digit() => self.pos,
            Some(b) => return Err(self.syntax(format!("expected a digit, found `{}`", b as char))),
            None => return Err(self.syntax("expected a digit, found end of input")),
        };
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: u64 = text.parse().map_err(|_| Error::Syntax {
            pos: start,
            msg: "partial quotient does not fit in 64 bits".into(),
        })?;
        Ok(value)
    }

    fn digit(&mut self) -> Result<u64> {
        let start = {
            self.skip_ws();
            self.pos
        };
        match self.number()? {
            0 => Err(Error::ZeroDigit { pos: start }),
            d => Ok(d),
        }
    }

    fn digit_list(&mut self, close: Option<u8>) -> Result<Vec<u64>> {
        let mut out = vec![self.digit()?];
        loop {
            match self.peek() {
                Some(b',') if close.is_some() => {
                    self.pos += 1;
                    out.push(self.digit()?);
                }
                _ => return Ok(out),
            }
        }
    }
}

enum Tail {
    None,
    Period(Vec<u64>),
    Open,
}

impl FromStr for CfDigits {
    type Err = Error;

    /// Grammar: `[0; d, d, …, (d, …, d)]`, where the parenthesized block is
    /// the period. A trailing `...` in place of the period denotes a stream
    /// prefix. Whitespace between tokens is ignored.
    fn from_str(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        p.expect(b'[')?;
        let int_pos = {
            p.skip_ws();
            p.pos
        };
        if p.number()? != 0 {
            return Err(Error::Syntax {
                pos: int_pos,
                msg: "integer part must be 0".into(),
            });
        }
        p.expect(b';')?;

        let mut pre = Vec::new();
        let mut tail = Tail::None;
        loop {
            match p.peek() {
                Some(b'(') => {
                    p.pos += 1;
                    let period = p.digit_list(Some(b')'))?;
                    p.expect(b')')?;
                    tail = Tail::Period(period);
                    break;
                }
                Some(b'.') => {
                    if p.src[p.pos..].starts_with(b"...") {
                        p.pos += 3;
                        tail = Tail::Open;
                        break;
                    }
                    return Err(p.syntax("expected `...`"));
                }
                _ => pre.push(p.digit()?),
            }
            match p.peek() {
                Some(b',') => p.pos += 1,
                _ => break,
            }
        }
        p.expect(b']')?;
        if p.peek().is_some() {
            return Err(p.syntax("trailing characters after `]`"));
        }
        match tail {
            Tail::None => CfDigits::finite(pre),
            Tail::Period(period) => CfDigits::periodic(pre, period),
            Tail::Open => CfDigits::stream(pre, None),
        }
    }
}

/// Parses the text form `[0; a_1, …, (b_1, …, b_m)]`.
pub fn parse_cf(text: &str) -> Result<CfDigits> {
    text.parse()
}

/// A convergent `p_k / q_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Convergent {
    pub k: i64,
    pub p: Integer,
    pub q: Integer,
}

/// Convergents `p_k/q_k` for `k = 0..=depth`.
pub fn convergents(cf: &CfDigits, depth: usize) -> Result<Vec<Convergent>> {
    cf.require(depth)?;
    let (mut p_prev, mut q_prev) = (Integer::from(1), Integer::from(0));
    let (mut p, mut q) = (Integer::from(0), Integer::from(1));
    let mut out = Vec::with_capacity(depth + 1);
    out.push(Convergent {
        k: 0,
        p: p.clone(),
        q: q.clone(),
    });
    for k in 1..=depth {
        let a = cf.digit(k).expect("depth checked");
        let p_next = Integer::from(a) * &p + &p_prev;
        let q_next = Integer::from(a) * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        out.push(Convergent {
            k: k as i64,
            p: p.clone(),
            q: q.clone(),
        });
    }
    Ok(out)
}

/// Outward enclosure of `num/den` for positive integers. Both operands are
/// held exactly, so each endpoint is the correctly rounded quotient and the
/// map from rationals to endpoints is monotone.
fn ratio_interval(num: &Integer, den: &Integer, prec: u32) -> Interval {
    let exact = |n: &Integer| Float::with_val(n.significant_bits().max(1), n);
    let (n, d) = (exact(num), exact(den));
    Interval::new(
        Float::with_val_round(prec, &n / &d, Round::Down).0,
        Float::with_val_round(prec, &n / &d, Round::Up).0,
    )
}

/// The interval between `p_K/q_K` and `p_{K+1}/q_{K+1}`, which contains `x`
/// whatever the digits after `a_{K+1}` are.
pub fn value_enclosure(cf: &CfDigits, depth: usize) -> Result<Interval> {
    if depth == 0 {
        return Err(Error::InvalidParameter("value_enclosure needs K >= 1".into()));
    }
    let cs = convergents(cf, depth + 1)?;
    let (a, b) = (&cs[depth], &cs[depth + 1]);
    let prec = working_precision();
    let ia = ratio_interval(&a.p, &a.q, prec);
    let ib = ratio_interval(&b.p, &b.q, prec);
    Ok(ia.hull(&ib))
}

/// Fibonacci number with `F_1 = F_2 = 1` (and `F_0 = 0`).
pub fn fibonacci(n: u32) -> Integer {
    Integer::from(Integer::fibonacci(n))
}

/// `α_k(x)` and `β_k(x) = α_0(x)⋯α_k(x)` enclosures.
#[derive(Debug, Clone)]
pub struct GaussOrbitEntry {
    pub k: usize,
    pub alpha: Interval,
    pub beta: Interval,
}

/// Number of digits past index `k_max` to read from a periodic expansion so
/// that every α bracket is narrower than the working precision.
fn periodic_lookahead(prec: u32) -> usize {
    // q_L >= F_{L+1} >= φ^{L-1}; the bracket width is below q_L^{-2}.
    const LOG2_PHI: f64 = 0.694_241_913_630_617_3;
    ((prec as f64 + 16.0) / (2.0 * LOG2_PHI)).ceil() as usize + 3
}

/// Enclosures of `α_k` for `k = 0..=k_max`, each taken from the exact range
/// of the tail expansion over all admissible continuations.
pub(crate) fn alpha_enclosures(cf: &CfDigits, k_max: usize, prec: u32) -> Result<Vec<Interval>> {
    let (n, exact) = match cf.kind {
        CfKind::Finite | CfKind::Stream => {
            cf.require(k_max + 2)?;
            (cf.preperiod.len(), cf.kind == CfKind::Finite)
        }
        CfKind::EventuallyPeriodic => (k_max + 1 + periodic_lookahead(prec), false),
    };
    // t_k = [0; a_{k+1}, …, a_n + z] = (n0 + n1 z) / (d0 + d1 z), z ∈ [0, 1]
    let (mut n0, mut n1, mut d0, mut d1) = (
        Integer::from(0),
        Integer::from(1),
        Integer::from(1),
        Integer::from(0),
    );
    let mut alphas = vec![None; k_max + 1];
    for k in (0..n).rev() {
        let a = cf.digit(k + 1).expect("length checked");
        let nd0 = Integer::from(a) * &d0 + &n0;
        let nd1 = Integer::from(a) * &d1 + &n1;
        n0 = std::mem::replace(&mut d0, nd0);
        n1 = std::mem::replace(&mut d1, nd1);
        if k <= k_max {
            let at_zero = ratio_interval(&n0, &d0, prec);
            alphas[k] = Some(if exact {
                at_zero
            } else {
                let num = Integer::from(&n0 + &n1);
                let den = Integer::from(&d0 + &d1);
                at_zero.hull(&ratio_interval(&num, &den, prec))
            });
        }
    }
    Ok(alphas.into_iter().map(|a| a.expect("filled")).collect())
}

/// Orbit entries for `k = 0..=depth`. Requires at least `depth + 2` digits.
pub fn gauss_orbit(cf: &CfDigits, depth: usize) -> Result<Vec<GaussOrbitEntry>> {
    gauss_orbit_prec(cf, depth, working_precision())
}

pub(crate) fn gauss_orbit_prec(
    cf: &CfDigits,
    depth: usize,
    prec: u32,
) -> Result<Vec<GaussOrbitEntry>> {
    let alphas = alpha_enclosures(cf, depth, prec)?;
    let mut beta = Interval::from_f64(1.0, prec);
    Ok(alphas
        .into_iter()
        .enumerate()
        .map(|(k, alpha)| {
            beta = &beta * &alpha;
            GaussOrbitEntry {
                k,
                alpha,
                beta: beta.clone(),
            }
        })
        .collect())
}

/// `β_{k-1}` from an orbit, with `β_{-1} = 1`.
pub fn beta_before(orbit: &[GaussOrbitEntry], k: usize) -> Interval {
    match k {
        0 => Interval::from_f64(1.0, orbit.first().map_or(working_precision(), |e| e.beta.prec())),
        _ => orbit[k - 1].beta.clone(),
    }
}
