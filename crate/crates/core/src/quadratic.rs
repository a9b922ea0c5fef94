//! Quadratic irrationals `(P + √D)/Q` and exact evaluation of the series at
//! them.
//!
//! The Gauss map sends a quadratic irrational to another one with the same
//! discriminant, and only finitely many reduced states exist, so the orbit is
//! eventually periodic. Along a period of length `m` starting at `y`, the
//! series satisfies `Ψ(y) = Ψ_{m−1}(y) + β_{m−1}(y)·Ψ(y)`, a scalar linear
//! equation. Unwinding the preperiod then gives `Ψ(x)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rug::float::Round;
use rug::ops::DivRounding;
use rug::{Float, Integer};

use crate::cf::CfDigits;
use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::interval::{working_precision, Interval};

/// `(P + √D)/Q` with `D > 0` not a square and `Q | D − P²`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadraticSurd {
    p: Integer,
    d: Integer,
    q: Integer,
}

/// Brings `(P + √D)/Q` to the form with `Q | D − P²` by scaling `P`, `Q` by
/// `|Q|` and `D` by `Q²` when needed.
pub fn surd_normalize(p: Integer, d: Integer, q: Integer) -> Result<QuadraticSurd> {
    if q == 0 {
        return Err(Error::InvalidParameter("surd denominator is zero".into()));
    }
    if d <= 0 {
        return Err(Error::InvalidParameter("surd radicand must be positive".into()));
    }
    if d.is_perfect_square() {
        return Err(Error::PerfectSquare(d.to_string()));
    }
    let r = Integer::from(&d - Integer::from(&p * &p));
    if r.is_divisible(&q) {
        return Ok(QuadraticSurd { p, d, q });
    }
    let aq = Integer::from(q.abs_ref());
    Ok(QuadraticSurd {
        p: p * &aq,
        d: d * Integer::from(&q * &q),
        q: q * aq,
    })
}

/// Sign of `√D − m` for non-square `D`.
fn sqrt_cmp(d: &Integer, m: &Integer) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    if *m < 0 {
        return Greater;
    }
    if *d > Integer::from(m * m) {
        Greater
    } else {
        Less
    }
}

impl QuadraticSurd {
    pub fn new(p: impl Into<Integer>, d: impl Into<Integer>, q: impl Into<Integer>) -> Result<Self> {
        surd_normalize(p.into(), d.into(), q.into())
    }

    /// θ = (√5 − 1)/2.
    pub fn golden() -> Self {
        QuadraticSurd::new(-1, 5, 2).unwrap()
    }

    pub fn p(&self) -> &Integer {
        &self.p
    }

    pub fn d(&self) -> &Integer {
        &self.d
    }

    pub fn q(&self) -> &Integer {
        &self.q
    }

    /// Exact test for `0 < x < 1`.
    pub fn in_unit_interval(&self) -> bool {
        use std::cmp::Ordering::*;
        // x > 0  ⇔  sign(P + √D) = sign(Q)
        let pos_num = sqrt_cmp(&self.d, &Integer::from(-&self.p)) == Greater;
        let positive = pos_num == (self.q > 0);
        // x < 1  ⇔  (P + √D − Q)/Q < 0
        let num_above_q = sqrt_cmp(&self.d, &Integer::from(&self.q - &self.p)) == Greater;
        let below_one = num_above_q != (self.q > 0);
        positive && below_one
    }

    /// Enclosure of the value at `prec` bits.
    pub fn value(&self, prec: u32) -> Interval {
        let wp = prec + 8;
        let root = Interval::from_integer(&self.d, wp).sqrt();
        if self.p >= 0 {
            let num = &Interval::from_integer(&self.p, wp) + &root;
            (&num / &Interval::from_integer(&self.q, wp)).with_prec(prec)
        } else {
            // P + √D cancels; use (D − P²) / (Q·(√D − P)) instead
            let r = Integer::from(&self.d - Integer::from(&self.p * &self.p));
            let den = &(&root - &Interval::from_integer(&self.p, wp)) * &Interval::from_integer(&self.q, wp);
            (&Interval::from_integer(&r, wp) / &den).with_prec(prec)
        }
    }

    /// One Gauss step: `(⌊1/x⌋, {1/x})`, computed with integers only.
    pub fn gauss_step(&self) -> (Integer, QuadraticSurd) {
        // 1/x = (−P + √D)/Q'  with  Q' = (D − P²)/Q
        let p1 = Integer::from(-&self.p);
        let q1 = Integer::from(&self.d - Integer::from(&self.p * &self.p)) / &self.q;
        let s = Integer::from(self.d.sqrt_ref());
        let a = if q1 > 0 {
            Integer::from(&p1 + &s).div_floor(q1.clone())
        } else {
            let n = Integer::from(-&p1) - &s - 1u32;
            n.div_floor(Integer::from(-&q1))
        };
        let p2 = p1 - Integer::from(&a * &q1);
        let next = QuadraticSurd {
            p: p2,
            d: self.d.clone(),
            q: q1,
        };
        (a, next)
    }

    /// The surd whose expansion is the given eventually periodic one.
    pub fn from_periodic_cf(cf: &CfDigits) -> Result<Self> {
        if cf.period().is_empty() {
            return Err(Error::NotPeriodic);
        }
        // y = [0; (b_1..b_m)] solves q_{m-1} y² + (q_m − p_{m-1}) y − p_m = 0
        let (pm1, qm1, pm, qm) = word_convergents(cf.period());
        let a = qm1;
        let b = Integer::from(&qm - &pm1);
        let disc = Integer::from(&b * &b) + Integer::from(4u32) * &a * &pm;
        let mut y = surd_normalize(-b, disc, Integer::from(2u32) * a)?;
        if !cf.preperiod().is_empty() {
            // x = (p_j + p_{j-1} y)/(q_j + q_{j-1} y)
            let (pj1, qj1, pj, qj) = word_convergents(cf.preperiod());
            let a = Integer::from(&pj * &y.q) + Integer::from(&pj1 * &y.p);
            let b = pj1;
            let c = Integer::from(&qj * &y.q) + Integer::from(&qj1 * &y.p);
            let d = qj1;
            // (a + b√D)/(c + d√D), rationalized
            let x_num = Integer::from(&a * &c) - Integer::from(&b * &d) * &y.d;
            let y_num = Integer::from(&b * &c) - Integer::from(&a * &d);
            let z = Integer::from(&c * &c) - Integer::from(&d * &d) * &y.d;
            let rad = Integer::from(&y_num * &y_num) * &y.d;
            y = if y_num > 0 {
                surd_normalize(x_num, rad, z)?
            } else {
                surd_normalize(-x_num, rad, -z)?
            };
        }
        Ok(y)
    }
}

/// `(p_{n-1}, q_{n-1}, p_n, q_n)` for the word `[0; w_1, …, w_n]`.
fn word_convergents(w: &[u64]) -> (Integer, Integer, Integer, Integer) {
    let (mut p0, mut q0) = (Integer::from(1), Integer::from(0));
    let (mut p1, mut q1) = (Integer::from(0), Integer::from(1));
    for &a in w {
        let p2 = Integer::from(a) * &p1 + &p0;
        let q2 = Integer::from(a) * &q1 + &q0;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
    }
    (p0, q0, p1, q1)
}

impl fmt::Display for QuadraticSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}+sqrt({}))/{}", self.p, self.d, self.q)
    }
}

impl FromStr for QuadraticSurd {
    type Err = Error;

    /// Accepts `(P+sqrt(D))/Q`, whitespace-insensitive.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::EmptyInput);
        }
        let bad = |pos: usize, msg: &str| Error::Syntax {
            pos,
            msg: msg.to_string(),
        };
        let rest = compact.strip_prefix('(').ok_or_else(|| bad(0, "expected `(`"))?;
        let plus = rest.find("+sqrt(").ok_or_else(|| bad(1, "expected `P+sqrt(D)`"))?;
        let p: Integer = rest[..plus].parse().map_err(|_| bad(1, "bad integer P"))?;
        let after = &rest[plus + 6..];
        let close = after.find("))/").ok_or_else(|| bad(plus + 7, "expected `))/Q`"))?;
        let d: Integer = after[..close].parse().map_err(|_| bad(plus + 7, "bad integer D"))?;
        let q: Integer = after[close + 3..]
            .parse()
            .map_err(|_| bad(plus + 10 + close, "bad integer Q"))?;
        surd_normalize(p, d, q)
    }
}

/// `(⌊1/x⌋, {1/x})` for `x` in (0, 1).
pub fn surd_gauss_step(x: &QuadraticSurd) -> Result<(u64, QuadraticSurd)> {
    let (a, next) = x.gauss_step();
    let a = a
        .to_u64()
        .ok_or_else(|| Error::InvalidParameter(format!("partial quotient {a} exceeds 64 bits")))?;
    Ok((a, next))
}

/// The orbit `x, α(x), α²(x), …` up to the first repeated state, with the
/// digits read along the way.
struct SurdOrbit {
    states: Vec<QuadraticSurd>,
    digits: Vec<Integer>,
    period_start: usize,
}

impl SurdOrbit {
    fn period_len(&self) -> usize {
        self.states.len() - self.period_start
    }

    /// State `k`, wrapping around the period.
    fn state(&self, k: usize) -> &QuadraticSurd {
        if k < self.states.len() {
            &self.states[k]
        } else {
            let m = self.period_len();
            &self.states[self.period_start + (k - self.period_start) % m]
        }
    }
}

fn surd_orbit(x: &QuadraticSurd, max_steps: usize) -> Result<SurdOrbit> {
    if !x.in_unit_interval() {
        return Err(Error::OutOfUnitInterval);
    }
    let mut seen: HashMap<(Integer, Integer), usize> = HashMap::new();
    let mut states = Vec::new();
    let mut digits = Vec::new();
    let mut cur = x.clone();
    for i in 0..=max_steps {
        if let Some(&j) = seen.get(&(cur.p.clone(), cur.q.clone())) {
            return Ok(SurdOrbit {
                states,
                digits,
                period_start: j,
            });
        }
        if i == max_steps {
            break;
        }
        seen.insert((cur.p.clone(), cur.q.clone()), i);
        let (a, next) = cur.gauss_step();
        states.push(cur);
        digits.push(a);
        cur = next;
    }
    Err(Error::PeriodNotFound {
        max_digits: max_steps,
    })
}

/// The eventually periodic expansion of a quadratic irrational in (0, 1).
pub fn cf_of_quadratic(x: &QuadraticSurd, max_digits: usize) -> Result<CfDigits> {
    let orbit = surd_orbit(x, max_digits)?;
    let digits = orbit
        .digits
        .iter()
        .map(|a| {
            a.to_u64()
                .ok_or_else(|| Error::InvalidParameter(format!("partial quotient {a} exceeds 64 bits")))
        })
        .collect::<Result<Vec<u64>>>()?;
    let j = orbit.period_start;
    CfDigits::periodic(digits[..j].to_vec(), digits[j..].to_vec())
}

/// Reads the first `n` digits of a quadratic irrational without looking for
/// the period.
pub fn surd_digits(x: &QuadraticSurd, n: usize) -> Result<Vec<u64>> {
    if !x.in_unit_interval() {
        return Err(Error::OutOfUnitInterval);
    }
    let mut cur = x.clone();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (a, next) = surd_gauss_step(&cur)?;
        out.push(a);
        cur = next;
    }
    Ok(out)
}

/// A value of the series at a quadratic irrational.
#[derive(Debug, Clone)]
pub struct ExactValue {
    /// Midpoint of `enclosure`.
    pub value: Float,
    /// Upper bound on `|value − Ψ(x)|`, at most `2^-precision_bits`.
    pub error: Float,
    pub enclosure: Interval,
    pub preperiod_len: usize,
    pub period_len: usize,
    pub cost_name: String,
}

impl ExactValue {
    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }
}

/// Default cap on orbit length when searching for the period.
pub const MAX_ORBIT: usize = 1 << 20;

/// Enclosure of `Ψ_u(x)` at working precision `prec`, with the period taken
/// to start `cut_shift` steps after the end of the minimal preperiod.
fn psi_at(orbit: &SurdOrbit, u: &CostFunction, prec: u32, cut_shift: usize) -> Result<Interval> {
    let j = orbit.period_start + cut_shift;
    let m = orbit.period_len();
    let alpha = |k: usize| orbit.state(k).value(prec);
    let one = Interval::from_f64(1.0, prec);

    // periodic tail y = α_j(x)
    let mut s = Interval::from_f64(0.0, prec);
    let mut b = one.clone();
    for k in j..j + m {
        let a = alpha(k);
        let term = &b * &u.image(&a.recip())?;
        s = &s + &term;
        b = &b * &a;
    }
    let limit = Float::with_val(prec, 1) - Float::with_val(prec, -20f64).exp2();
    if *b.hi() >= limit {
        return Err(Error::BetaNotSeparated);
    }
    let psi_y = &s / &(&one - &b);

    let mut sum = Interval::from_f64(0.0, prec);
    let mut beta = one;
    for k in 0..j {
        let a = alpha(k);
        sum = &sum + &(&beta * &u.image(&a.recip())?);
        beta = &beta * &a;
    }
    Ok((&sum + &(&beta * &psi_y)).clamp_nonneg())
}

/// `Ψ_u(x)` with certified absolute error at most `2^-precision_bits`.
pub fn evaluate_exact(x: &QuadraticSurd, u: &CostFunction, precision_bits: u32) -> Result<ExactValue> {
    evaluate_exact_cut(x, u, precision_bits, 0)
}

/// As [`evaluate_exact`], but solving the periodic equation `cut_shift` steps
/// later along the orbit. The result does not depend on the cut.
pub fn evaluate_exact_cut(
    x: &QuadraticSurd,
    u: &CostFunction,
    precision_bits: u32,
    cut_shift: usize,
) -> Result<ExactValue> {
    let orbit = surd_orbit(x, MAX_ORBIT)?;
    let target = Float::with_val(64, -(precision_bits as f64)).exp2();
    let mut prec = precision_bits + 32;
    while prec <= 4 * precision_bits + 512 {
        let enc = psi_at(&orbit, u, prec, cut_shift)?;
        let err = enc.radius();
        if enc.is_bounded() && err <= target {
            return Ok(ExactValue {
                value: enc.mid(),
                error: err,
                enclosure: enc,
                preperiod_len: orbit.period_start,
                period_len: orbit.period_len(),
                cost_name: u.name().to_string(),
            });
        }
        prec += 64;
    }
    Err(Error::PrecisionExhausted {
        bits: precision_bits,
    })
}

/// Enclosure of `Ψ_u(x)` at the current working precision.
pub fn exact_enclosure(x: &QuadraticSurd, u: &CostFunction) -> Result<Interval> {
    let orbit = surd_orbit(x, MAX_ORBIT)?;
    psi_at(&orbit, u, working_precision(), 0)
}

/// Enclosure of `u(1/θ)/(1 − θ)`, the value of the series at the fixed point.
pub fn theta_closed_form_enclosure(u: &CostFunction, prec: u32) -> Result<Interval> {
    let theta = QuadraticSurd::golden().value(prec + 16);
    let one = Interval::from_f64(1.0, prec + 16);
    Ok((&u.image(&theta.recip())? / &(&one - &theta)).with_prec(prec))
}

/// `u(1/θ)/(1 − θ)` at the working precision; falls back to `f64` for cost
/// functions without directed evaluation.
pub fn theta_closed_form(u: &CostFunction) -> Float {
    let prec = working_precision();
    match theta_closed_form_enclosure(u, prec) {
        Ok(enc) => enc.mid(),
        Err(_) => {
            let theta = crate::cost::THETA_F64;
            Float::with_val(prec, u.eval(1.0 / theta) / (1.0 - theta))
        }
    }
}

/// The value of `x` rounded to nearest at `prec` bits.
pub fn surd_value_f64(x: &QuadraticSurd) -> f64 {
    x.value(64).mid().to_f64_round(Round::Nearest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::parse_cf;

    fn surd(p: i64, d: i64, q: i64) -> QuadraticSurd {
        QuadraticSurd::new(p, d, q).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(surd(-1, 5, 2), QuadraticSurd { p: (-1).into(), d: 5.into(), q: 2.into() });
        assert_eq!(surd(1, 2, 3), QuadraticSurd { p: 3.into(), d: 18.into(), q: 9.into() });
        assert_eq!(surd(0, 2, 2), QuadraticSurd { p: 0.into(), d: 2.into(), q: 2.into() });
        assert!(matches!(QuadraticSurd::new(1, 4, 3), Err(Error::PerfectSquare(_))));
        assert!(QuadraticSurd::new(1, 2, 0).is_err());
    }

    #[test]
    fn gauss_steps() {
        let theta = QuadraticSurd::golden();
        let (a, next) = surd_gauss_step(&theta).unwrap();
        assert_eq!((a, &next), (1, &theta));

        let theta_prime = surd(3, 5, 2); // wrong sign on purpose: (3+√5)/2 > 1
        assert!(!theta_prime.in_unit_interval());
        // (3 − √5)/2 = (−3 + √5)/(−2)
        let theta_prime = surd(-3, 5, -2);
        assert!(theta_prime.in_unit_interval());
        let (a, next) = surd_gauss_step(&theta_prime).unwrap();
        assert_eq!(a, 2);
        assert!((surd_value_f64(&next) - 0.618_033_988_749_895).abs() < 1e-15);

        let s2 = surd(-1, 2, 1);
        let (a, next) = surd_gauss_step(&s2).unwrap();
        assert_eq!(a, 2);
        assert!((surd_value_f64(&next) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn expansions_of_surds() {
        assert_eq!(cf_of_quadratic(&QuadraticSurd::golden(), 100).unwrap(), parse_cf("[0;(1)]").unwrap());
        assert_eq!(cf_of_quadratic(&surd(-1, 2, 1), 100).unwrap(), parse_cf("[0;(2)]").unwrap());
        assert_eq!(cf_of_quadratic(&surd(-3, 5, -2), 100).unwrap(), parse_cf("[0;2,(1)]").unwrap());
    }

    #[test]
    fn expansion_errors() {
        assert_eq!(cf_of_quadratic(&surd(1, 5, 2), 100), Err(Error::OutOfUnitInterval));
        // √7 − 2 has period 4; two digits are not enough to see it
        let x = surd(-2, 7, 1);
        assert_eq!(cf_of_quadratic(&x, 2), Err(Error::PeriodNotFound { max_digits: 2 }));
        assert_eq!(cf_of_quadratic(&x, 10).unwrap().period(), &[1, 1, 1, 4]);
    }

    #[test]
    fn periodic_cf_to_surd() {
        for s in ["[0;(1)]", "[0;2,(1)]", "[0;(2)]", "[0;(1,2)]", "[0;3,1,(4,1,5)]", "[0;7,(3)]"] {
            let cf = parse_cf(s).unwrap();
            let x = QuadraticSurd::from_periodic_cf(&cf).unwrap();
            assert_eq!(cf_of_quadratic(&x, 1000).unwrap(), cf, "{s} -> {x}");
        }
    }

    #[test]
    fn text_form() {
        let x: QuadraticSurd = "(-1+sqrt(5))/2".parse().unwrap();
        assert_eq!(x, QuadraticSurd::golden());
        let y: QuadraticSurd = " ( -1 + sqrt( 2 ) ) / 1 ".parse().unwrap();
        assert_eq!(y, surd(-1, 2, 1));
        assert!("(1+sqrt(4))/3".parse::<QuadraticSurd>().is_err());
        assert!("1+sqrt(2)".parse::<QuadraticSurd>().is_err());
        assert!("".parse::<QuadraticSurd>().is_err());
        assert_eq!(x.to_string().parse::<QuadraticSurd>().unwrap(), x);
    }

    #[test]
    fn golden_value_matches_closed_form() {
        let u = CostFunction::log();
        let v = evaluate_exact(&QuadraticSurd::golden(), &u, 64).unwrap();
        let c = theta_closed_form(&u);
        assert!(Float::with_val(128, &v.value - &c).abs() < 1e-12);
        assert!(v.error <= Float::with_val(64, -64f64).exp2());
        assert_eq!((v.preperiod_len, v.period_len), (0, 1));
        // oracle: direct summation of θ^k ln(1/θ) over 60 terms
        let theta = 0.618_033_988_749_894_9f64;
        let direct: f64 = (0..60).map(|k| theta.powi(k) * (1.0 / theta).ln()).sum();
        assert!((v.to_f64() - direct).abs() < 1e-12);
    }

    #[test]
    fn theta_prime_value() {
        // ln(1/θ') + θ'·Φ(θ) = 3 ln(1/θ)
        let u = CostFunction::log();
        let v = evaluate_exact(&surd(-3, 5, -2), &u, 64).unwrap();
        let want = 3.0 * (1.0 / 0.618_033_988_749_894_9f64).ln();
        assert!((v.to_f64() - want).abs() < 1e-14);
        assert_eq!((v.preperiod_len, v.period_len), (1, 1));
    }

    #[test]
    fn power_at_theta() {
        let u = CostFunction::power(0.5).unwrap();
        let v = evaluate_exact(&QuadraticSurd::golden(), &u, 64).unwrap();
        let theta = 0.618_033_988_749_894_9f64;
        let want = theta.powf(-0.5) / (1.0 - theta);
        assert!((v.to_f64() - want).abs() < 1e-13);
        assert!((v.to_f64() - 3.330_190_676_785_562).abs() < 1e-13);
    }

    #[test]
    fn closed_form_examples() {
        let theta = 0.618_033_988_749_894_9f64;
        let lin = CostFunction::power_minus_one(1.0).unwrap();
        // (1/θ − 1)/(1 − θ) = θ/θ² = 1/θ
        assert!((theta_closed_form(&lin).to_f64() - 1.0 / theta).abs() < 1e-15);
        let zero = CostFunction::custom("zero", |_| 0.0, crate::cost::Monotonicity::Nondecreasing)
            .with_directed(|t, _| Float::new(t.prec()));
        assert_eq!(theta_closed_form(&zero).to_f64(), 0.0);
    }

    #[test]
    fn higher_precision_is_consistent() {
        let u = CostFunction::log_pow(2.0).unwrap();
        let x = surd(-2, 7, 1);
        let lo = evaluate_exact(&x, &u, 64).unwrap();
        let hi = evaluate_exact(&x, &u, 256).unwrap();
        let diff = Float::with_val(256, &lo.value - &hi.value).abs();
        assert!(diff <= lo.error);
        assert!(hi.error <= Float::with_val(64, -256f64).exp2());
    }

    #[test]
    fn orbits_close_quickly() {
        for d in 2..=1000i64 {
            for p in [-1i64, 0, 1] {
                let Ok(x) = QuadraticSurd::new(p, d, 1) else { continue };
                let s = Integer::from(x.d.sqrt_ref());
                // reduce to (0, 1) by subtracting the integer part
                let Ok(x) = QuadraticSurd::new(Integer::from(&x.p - &s), x.d.clone(), 1) else { continue };
                if !x.in_unit_interval() {
                    continue;
                }
                let orbit = surd_orbit(&x, 2 * d as usize).unwrap();
                assert!(orbit.states.len() <= 2 * d as usize, "D={d}");
            }
        }
    }

    #[test]
    fn cut_position_does_not_matter() {
        let u = CostFunction::log();
        let x: QuadraticSurd = QuadraticSurd::from_periodic_cf(&parse_cf("[0;3,1,(4,1,5)]").unwrap()).unwrap();
        let base = evaluate_exact(&x, &u, 64).unwrap();
        for shift in 1..6 {
            let v = evaluate_exact_cut(&x, &u, 64, shift).unwrap();
            let diff = Float::with_val(128, &v.value - &base.value).abs();
            assert!(diff <= Float::with_val(64, &v.error + &base.error));
        }
    }
}
