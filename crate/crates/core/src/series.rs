//! Partial sums, tail bounds and two-sided enclosures of `Ψ_u(x)`.
//!
//! With `α_k` the Gauss-map iterates of `x` and `β_k = α_0⋯α_k`,
//!
//! ```text
//! Ψ_u(x) = Σ_{k≥0} β_{k−1}(x) · u(1/α_k(x))
//! ```
//!
//! All terms are nonnegative, so a partial sum is a lower bound. An upper
//! bound needs a bound on the digits of the tail: if every digit is at most
//! `M` then `1/α_k < M + 1`, and `β_{k−1} ≤ 1/F_{k+1}` bounds the remaining
//! weights by the reciprocal Fibonacci constant.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rug::float::Round;
use rug::{Float, Integer};

use crate::cf::{gauss_orbit_prec, CfDigits, CfKind, GaussOrbitEntry};
use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::interval::{working_precision, Interval};
use crate::quadratic::{exact_enclosure, QuadraticSurd};

/// Certified enclosure of `Ψ_u(x)` from `K + 1` terms and a tail bound.
#[derive(Debug, Clone)]
pub struct Enclosure {
    pub value: Interval,
    /// Enclosure of the partial sum `Ψ_{u,K}(x)`.
    pub partial: Interval,
    pub depth_k: usize,
    pub digit_bound: Option<u64>,
    /// `value.hi − partial.hi`, rounded up; `+∞` without a digit bound.
    pub tail_bound: Float,
    pub cost_name: String,
}

impl Enclosure {
    pub fn lo(&self) -> &Float {
        self.value.lo()
    }

    pub fn hi(&self) -> &Float {
        self.value.hi()
    }

    pub fn width(&self) -> Float {
        self.value.width()
    }

    pub fn is_bounded(&self) -> bool {
        self.value.is_bounded()
    }
}

fn s_cache() -> &'static Mutex<HashMap<u32, Interval>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Interval>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Enclosure of `Σ_{n≥1} 1/F_n ≈ 3.35988566624`.
///
/// Sums until `3/F_{N+1} < 2^-(prec+8)`; the remainder is at most
/// `3/F_{N+1}` because `F_n/F_{n+1} ≤ 2/3` for `n ≥ 2`.
pub fn reciprocal_fibonacci_sum(prec: u32) -> Interval {
    if let Some(s) = s_cache().lock().unwrap().get(&prec) {
        return s.clone();
    }
    let wp = prec + 16;
    let one = Float::with_val(wp, 1);
    let mut lo = Float::new(wp);
    let mut hi = Float::new(wp);
    let threshold = Integer::from(3) << (prec + 8);
    let (mut f, mut g) = (Integer::from(1), Integer::from(1)); // F_n, F_{n+1}
    loop {
        let (f_lo, f_hi) = (down(wp, &f), up(wp, &f));
        lo = down(wp, &lo + down(wp, &one / &f_hi));
        hi = up(wp, &hi + up(wp, &one / &f_lo));
        if g > threshold {
            break;
        }
        let h = Integer::from(&f + &g);
        f = std::mem::replace(&mut g, h);
    }
    let rem = up(wp, Float::with_val(wp, 3) / &down(wp, &g));
    hi = up(wp, &hi + &rem);
    let s = Interval::new(lo, hi).with_prec(prec);
    s_cache().lock().unwrap().insert(prec, s.clone());
    s
}

fn down<T>(prec: u32, v: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = std::cmp::Ordering>,
{
    Float::with_val_round(prec, v, Round::Down).0
}

fn up<T>(prec: u32, v: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = std::cmp::Ordering>,
{
    Float::with_val_round(prec, v, Round::Up).0
}

/// Prefix sums `Ψ_{u,k}` for `k = 0..=depth` together with the orbit.
fn prefix_sums(
    cf: &CfDigits,
    depth: usize,
    u: &CostFunction,
    prec: u32,
) -> Result<(Vec<Interval>, Vec<GaussOrbitEntry>)> {
    let orbit = gauss_orbit_prec(cf, depth, prec)?;
    let mut sums = Vec::with_capacity(depth + 1);
    let mut acc = Interval::from_f64(0.0, prec);
    let mut weight = Interval::from_f64(1.0, prec);
    for e in &orbit {
        let arg = e.alpha.recip();
        // the Gauss-map iterates lie in (0, 1); trim rounding noise below 1
        let arg = arg
            .intersection(&Interval::unbounded_above(Float::with_val(prec, 1)))
            .ok_or_else(|| Error::Domain(format!("1/alpha_{} below 1", e.k)))?;
        let term = &weight * &u.image(&arg)?;
        acc = (&acc + &term).clamp_nonneg();
        sums.push(acc.clone());
        weight = e.beta.clone();
    }
    Ok((sums, orbit))
}

/// `Ψ_{u,K}(x) = Σ_{k=0}^{K} β_{k−1}(x)·u(1/α_k(x))`.
pub fn partial_sum(cf: &CfDigits, depth: usize, u: &CostFunction) -> Result<Interval> {
    let (sums, _) = prefix_sums(cf, depth, u, working_precision())?;
    Ok(sums.last().cloned().expect("depth + 1 entries"))
}

/// Upper bound on `β_K(x)·Ψ_u(α_{K+1}(x))` when every tail digit is at most
/// `digit_bound`: `β_K · u(M + 1) · Σ 1/F_n`. `+∞` when no bound is known or
/// `u` is not flagged nondecreasing.
pub fn tail_bound(digit_bound: Option<u64>, u: &CostFunction, beta_hi: &Float) -> Float {
    let prec = beta_hi.prec().max(working_precision());
    if *beta_hi <= 0 {
        return Float::new(prec);
    }
    let inf = Float::with_val(prec, rug::float::Special::Infinity);
    let Some(m) = digit_bound else {
        return inf;
    };
    let Some(um) = u.sup_up_to(m, prec) else {
        return inf;
    };
    let s = reciprocal_fibonacci_sum(prec);
    let t = Float::with_val_round(prec, beta_hi * &um, Round::Up).0;
    Float::with_val_round(prec, &t * s.hi(), Round::Up).0
}

/// Two-sided enclosure of `Ψ_u(x)` from depth `K`.
///
/// The upper end is the smallest of `Ψ_{u,k}.hi + tail(k)` over `k ≤ K`, so
/// deeper evaluation never loosens it.
pub fn enclosure(cf: &CfDigits, depth: usize, u: &CostFunction) -> Result<Enclosure> {
    if cf.kind() == CfKind::Finite {
        return Err(Error::RationalInput);
    }
    let prec = working_precision();
    let (sums, orbit) = prefix_sums(cf, depth, u, prec)?;
    let bound = cf.digit_bound();
    let mut hi = Float::with_val(prec, rug::float::Special::Infinity);
    for (s, e) in sums.iter().zip(&orbit) {
        let t = tail_bound(bound, u, e.beta.hi());
        let cand = Float::with_val_round(prec, s.hi() + &t, Round::Up).0;
        if cand < hi {
            hi = cand;
        }
    }
    let partial = sums.last().cloned().expect("depth + 1 entries");
    let lo = partial.lo().clone();
    let hi = if hi < lo { lo.clone() } else { hi };
    let tail = Float::with_val_round(prec, &hi - partial.hi(), Round::Up).0;
    let tail = if tail < 0 { Float::new(prec) } else { tail };
    Ok(Enclosure {
        value: Interval::new(lo, hi),
        partial,
        depth_k: depth,
        digit_bound: bound,
        tail_bound: tail,
        cost_name: u.name().to_string(),
    })
}

/// [`enclosure`], checked against the exact value for eventually periodic
/// input. Fails with [`Error::Inconsistent`] if the two disagree.
pub fn enclosure_checked(cf: &CfDigits, depth: usize, u: &CostFunction) -> Result<Enclosure> {
    let enc = enclosure(cf, depth, u)?;
    if cf.kind() == CfKind::EventuallyPeriodic {
        let x = QuadraticSurd::from_periodic_cf(cf)?;
        let exact = exact_enclosure(&x, u)?;
        if !exact.intersects(&enc.value) {
            return Err(Error::Inconsistent(format!(
                "enclosure {} misses exact value {}",
                enc.value, exact
            )));
        }
    }
    Ok(enc)
}

/// `Ψ_{u,K}(x) / (1 − β_K(x))`.
pub fn ratio_lower_bound(cf: &CfDigits, depth: usize, u: &CostFunction) -> Result<Interval> {
    let prec = working_precision();
    let (sums, orbit) = prefix_sums(cf, depth, u, prec)?;
    let beta = &orbit[depth].beta;
    if *beta.hi() >= 1 {
        return Err(Error::BetaNotSeparated);
    }
    let one = Interval::from_f64(1.0, prec);
    Ok(&sums[depth] / &(&one - beta))
}

/// `Ψ_u(x) − [Ψ_{u,K}(x) + β_K(x)·Ψ_u(α_{K+1}(x))]` for eventually periodic
/// `x`. At `K = 0` this is `Ψ_u(x) − u(1/x) − x·Ψ_u(α(x))`.
///
/// Both values of `Ψ_u` come from the exact quadratic path; the partial sum
/// and `β_K` come from the digit expansion.
pub fn functional_equation_residual(cf: &CfDigits, depth: usize, u: &CostFunction) -> Result<Interval> {
    if cf.kind() != CfKind::EventuallyPeriodic {
        return Err(Error::NotPeriodic);
    }
    let prec = working_precision();
    let x = QuadraticSurd::from_periodic_cf(cf)?;
    let y = QuadraticSurd::from_periodic_cf(&cf.shifted(depth + 1)?)?;
    let psi_x = exact_enclosure(&x, u)?;
    let psi_y = exact_enclosure(&y, u)?;
    let (sums, orbit) = prefix_sums(cf, depth, u, prec)?;
    let rhs = &sums[depth] + &(&orbit[depth].beta * &psi_y);
    Ok(&psi_x - &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::parse_cf;
    use crate::cost::Monotonicity;
    use proptest::prelude::*;

    const THETA: f64 = 0.618_033_988_749_894_9;
    const PHI_THETA: f64 = 1.259_828_913_794_410_3;

    fn ln_inv(x: f64) -> f64 {
        (1.0 / x).ln()
    }

    #[test]
    fn fibonacci_constant() {
        let s = reciprocal_fibonacci_sum(64);
        let want = Float::with_val(128, Float::parse("3.3598856662431775531720113029189271797").unwrap());
        assert!(s.contains(&want));
        assert!(s.width() < 1e-17);
        let s200 = reciprocal_fibonacci_sum(200);
        assert!(s200.is_subset_of(&s));
        assert!(s200.width() < Float::with_val(64, -190f64).exp2());
    }

    #[test]
    fn partial_sum_at_theta() {
        let cf = parse_cf("[0;(1)]").unwrap();
        let got = partial_sum(&cf, 3, &CostFunction::log()).unwrap();
        let want = ln_inv(THETA) * (1.0 - THETA.powi(4)) / (1.0 - THETA);
        assert!((got.mid_f64() - want).abs() < 1e-15);
        assert!(got.width() < 1e-15);
    }

    #[test]
    fn first_term_is_ln_inverse() {
        for s in ["[0;3,7,(2)]", "[0;1,1,5,(1,2)]", "[0;(4)]"] {
            let cf = parse_cf(s).unwrap();
            let x = QuadraticSurd::from_periodic_cf(&cf).unwrap().value(64).mid_f64();
            let got = partial_sum(&cf, 0, &CostFunction::log()).unwrap();
            assert!((got.mid_f64() - ln_inv(x)).abs() < 1e-14, "{s}");
        }
    }

    #[test]
    fn partial_sum_one_step_at_theta_prime() {
        let cf = parse_cf("[0;2,(1)]").unwrap();
        let tp = 1.0 - THETA;
        let want = ln_inv(tp) + tp * ln_inv(THETA);
        let got = partial_sum(&cf, 1, &CostFunction::log()).unwrap();
        assert!((got.mid_f64() - want).abs() < 1e-15);
    }

    #[test]
    fn partial_sum_needs_digits() {
        let cf = CfDigits::stream(vec![1, 2, 3], Some(3)).unwrap();
        assert!(matches!(
            partial_sum(&cf, 2, &CostFunction::log()),
            Err(Error::InsufficientDigits { .. })
        ));
        assert!(partial_sum(&cf, 1, &CostFunction::log()).is_ok());
    }

    #[test]
    fn tail_bound_examples() {
        let u = CostFunction::log();
        assert_eq!(tail_bound(Some(1), &u, &Float::new(64)), 0);
        let t = tail_bound(Some(1), &u, &Float::with_val(64, 1));
        assert!((t.to_f64() - 2.328_895_276_560_232).abs() < 1e-14);
        assert!(tail_bound(None, &u, &Float::with_val(64, 0.5)).is_infinite());
        let odd = CostFunction::custom("odd", |t| t.sin() + 1.0, Monotonicity::Unknown);
        assert!(tail_bound(Some(3), &odd, &Float::with_val(64, 0.5)).is_infinite());
    }

    #[test]
    fn tail_bound_shrinks_with_depth() {
        let cf = parse_cf("[0;(1,3)]").unwrap();
        let u = CostFunction::log();
        let orbit = gauss_orbit_prec(&cf, 30, 64).unwrap();
        let tails: Vec<Float> = orbit.iter().map(|e| tail_bound(cf.digit_bound(), &u, e.beta.hi())).collect();
        assert!(tails.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn enclosure_at_theta() {
        let cf = parse_cf("[0;(1)]").unwrap();
        let e = enclosure(&cf, 20, &CostFunction::log()).unwrap();
        assert!(e.value.contains_f64(PHI_THETA));
        assert!(e.width() < 1e-3);
        assert_eq!(e.depth_k, 20);
        assert_eq!(e.digit_bound, Some(1));
    }

    #[test]
    fn enclosure_at_silver() {
        let cf = parse_cf("[0;(2)]").unwrap();
        let e = enclosure(&cf, 20, &CostFunction::log()).unwrap();
        assert!(e.value.contains_f64(1.504_598_827_159_773_4));
        assert!(e.width() < 1e-6);
    }

    #[test]
    fn unbounded_stream() {
        let cf = CfDigits::stream(vec![1, 2, 3, 4, 5, 6], None).unwrap();
        let e = enclosure(&cf, 4, &CostFunction::log()).unwrap();
        assert!(e.hi().is_infinite());
        assert!(e.lo().is_finite() && *e.lo() > 0);
        assert!(e.tail_bound.is_infinite());
    }

    #[test]
    fn finite_input_rejected() {
        let cf = parse_cf("[0;2,3,4]").unwrap();
        assert_eq!(enclosure(&cf, 0, &CostFunction::log()).unwrap_err(), Error::RationalInput);
    }

    #[test]
    fn ratio_bound_examples() {
        let u = CostFunction::log();
        let theta = parse_cf("[0;(1)]").unwrap();
        for k in [0, 1, 5, 30] {
            let r = ratio_lower_bound(&theta, k, &u).unwrap();
            assert!(r.contains_f64(PHI_THETA) || (r.mid_f64() - PHI_THETA).abs() < 1e-15, "K={k}: {r}");
        }
        let cf = parse_cf("[0;3,(1,4)]").unwrap();
        let x = QuadraticSurd::from_periodic_cf(&cf).unwrap().value(64).mid_f64();
        let r = ratio_lower_bound(&cf, 0, &u).unwrap();
        assert!((r.mid_f64() - ln_inv(x) / (1.0 - x)).abs() < 1e-14);
    }

    #[test]
    fn residual_examples() {
        let u = CostFunction::log();
        for s in ["[0;(1)]", "[0;2,(1)]"] {
            let r = functional_equation_residual(&parse_cf(s).unwrap(), 0, &u).unwrap();
            assert!(r.contains_zero(), "{s}: {r}");
        }
        let sq = CostFunction::power_minus_one(2.0).unwrap();
        let r = functional_equation_residual(&parse_cf("[0;(2)]").unwrap(), 0, &sq).unwrap();
        assert!(r.contains_zero());
        let r = functional_equation_residual(&parse_cf("[0;5,(1,2,3)]").unwrap(), 7, &u).unwrap();
        assert!(r.contains_zero());
        let stream = CfDigits::stream(vec![1; 5], Some(1)).unwrap();
        assert_eq!(functional_equation_residual(&stream, 0, &u).unwrap_err(), Error::NotPeriodic);
    }

    #[test]
    fn checked_enclosure_agrees() {
        let cf = parse_cf("[0;2,2,(1,3)]").unwrap();
        assert!(enclosure_checked(&cf, 12, &CostFunction::log_pow(2.0).unwrap()).is_ok());
    }

    fn periodic_cf() -> impl Strategy<Value = CfDigits> {
        (
            prop::collection::vec(1u64..6, 0..4),
            prop::collection::vec(1u64..6, 1..4),
        )
            .prop_map(|(pre, per)| CfDigits::periodic(pre, per).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn refinement_and_sandwich(cf in periodic_cf(), k in 0usize..25) {
            let u = CostFunction::log();
            let slack = Float::with_val(64, -40f64).exp2();
            let a = enclosure(&cf, k, &u).unwrap();
            let b = enclosure(&cf, k + 3, &u).unwrap();
            prop_assert!(*a.lo() >= 0);
            prop_assert!(Float::with_val(64, b.lo() + &slack) >= *a.lo());
            prop_assert!(Float::with_val(64, a.hi() + &slack) >= *b.hi());
            let x = QuadraticSurd::from_periodic_cf(&cf).unwrap();
            let exact = exact_enclosure(&x, &u).unwrap();
            prop_assert!(exact.intersects(&a.value));
            prop_assert!(exact.intersects(&b.value));
        }
    }
}
