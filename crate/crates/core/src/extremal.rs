//! The minimum at θ: the one-step comparison functions, a randomized scan
//! for points below `Ψ_u(θ)`, the `t^a` counterexample and a probe of the
//! blow-up near rationals.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::float::Round;
use rug::{Float, Integer, Rational};

use crate::cf::{parse_cf, value_enclosure, CfDigits};
use crate::cost::{
    open_unit_grid, strict_monotone_report, uniform_grid, ConditionId, CostFunction, HypothesisReport, Verdict,
    Witness, THETA_F64,
};
use crate::error::{Error, Result};
use crate::interval::{working_precision, Interval};
use crate::quadratic::{evaluate_exact, theta_closed_form_enclosure, QuadraticSurd};
use crate::series::{enclosure, Enclosure};

/// `f(x) = ln(1/x)/x + ln(x/(1 − x))` on (1/2, 1): the ratio
/// `Φ_1(x)/(1 − β_1(x))` for `x` with first digit 1.
pub fn f_of(x: f64) -> Result<f64> {
    if !(x > 0.5 && x < 1.0) {
        return Err(Error::Domain(format!("f needs 1/2 < x < 1, got {x}")));
    }
    Ok((1.0 / x).ln() / x + (x / (1.0 - x)).ln())
}

/// `g(x) = 2x − 1 + (1 − x) ln x` on (0, 1].
pub fn g_of(x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain(format!("g needs 0 < x <= 1, got {x}")));
    }
    Ok(2.0 * x - 1.0 + (1.0 - x) * x.ln())
}

/// `ln(1/x)/(1 − x)` on (0, 1).
pub fn slope_ratio(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("slope ratio needs 0 < x < 1, got {x}")));
    }
    Ok(-x.ln() / (1.0 - x))
}

/// Grid checks: `f` increasing on `[θ, 1 − 10⁻⁶]`, `g` increasing on
/// (0, 1], `g(0.61) > 0`, and the slope ratio decreasing on (0, 1).
pub fn verify_f_monotone(grid_n: usize) -> Vec<HypothesisReport> {
    let n = grid_n.max(3);
    let right = 1.0 - 1e-6;
    let f_grid = uniform_grid(THETA_F64, right, n);
    let f = strict_monotone_report(
        ConditionId::FIncreasing,
        &f_grid,
        format!("uniform, {n} points on [theta, 1-1e-6]"),
        |x| f_of(x).unwrap_or(f64::NAN),
        true,
    );
    let g_grid: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let g = strict_monotone_report(
        ConditionId::GIncreasing,
        &g_grid,
        format!("uniform, {n} points i/{n} on (0, 1]"),
        |x| g_of(x).unwrap_or(f64::NAN),
        true,
    );
    let g61 = g_of(0.61).expect("in domain");
    let g_pos = HypothesisReport {
        condition: ConditionId::GPositiveAt061,
        verdict: if g61 > 0.0 {
            Verdict::PassesOnGrid
        } else {
            Verdict::FailsWithWitness
        },
        witness: (g61 <= 0.0).then(|| Witness {
            points: vec![0.61],
            values: vec![g61],
            note: "g(0.61) is not positive".into(),
        }),
        grid: "single point 0.61".into(),
    };
    let s_grid = open_unit_grid(n);
    let s = strict_monotone_report(
        ConditionId::SlopeRatioDecreasing,
        &s_grid,
        format!("uniform, {n} points i/{} on (0, 1)", n + 1),
        |x| slope_ratio(x).unwrap_or(f64::NAN),
        false,
    );
    vec![f, g, g_pos, s]
}

/// Where a scanned point sits relative to `Ψ_u(θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanStatus {
    /// Enclosure lies strictly above the enclosure of `Ψ_u(θ)`.
    Above,
    /// Enclosures overlap at this depth.
    NotSeparated,
    /// Enclosure lies strictly below `Ψ_u(θ)`.
    Violation,
}

impl ScanStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanStatus::Above => "above",
            ScanStatus::NotSeparated => "not_separated",
            ScanStatus::Violation => "violation",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanRecord {
    pub x_descr: String,
    pub x_enclosure: Interval,
    pub phi: Enclosure,
    /// `phi.lo − Ψ_u(θ).hi`, rounded down.
    pub separation: Float,
    pub status: ScanStatus,
    pub depth_k: usize,
    pub first_digit: u64,
    /// Seed and sample index for random points; `None` for roster points.
    pub seed: Option<u64>,
    pub sample_index: Option<u64>,
}

/// Quadratic irrationals always included in a scan.
pub const ROSTER: &[&str] = &[
    "[0;(1)]",
    "[0;2,(1)]",
    "[0;(2)]",
    "[0;(1,2)]",
    "[0;(2,1)]",
    "[0;(3)]",
    "[0;1,(2)]",
    "[0;(1,1,2)]",
    "[0;(1,3)]",
];

/// The digits of sample `index`: `len` digits uniform on `[1, bound]`, from
/// an independent ChaCha stream so that samples do not depend on each other.
pub fn sample_digits(seed: u64, index: u64, len: usize, bound: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..len).map(|_| rng.gen_range(1..=bound)).collect()
}

fn scan_record(
    cf: &CfDigits,
    descr: String,
    depth: usize,
    u: &CostFunction,
    theta_value: &Interval,
    seed: Option<u64>,
    sample_index: Option<u64>,
) -> Result<ScanRecord> {
    let phi = enclosure(cf, depth, u)?;
    let x_enclosure = value_enclosure(cf, depth + 1)?;
    let prec = phi.value.prec();
    let separation = Float::with_val_round(prec, phi.lo() - theta_value.hi(), Round::Down).0;
    let status = if *phi.lo() > *theta_value.hi() {
        ScanStatus::Above
    } else if *phi.hi() < *theta_value.lo() {
        ScanStatus::Violation
    } else {
        ScanStatus::NotSeparated
    };
    Ok(ScanRecord {
        x_descr: descr,
        x_enclosure,
        phi,
        separation,
        status,
        depth_k: depth,
        first_digit: cf.digit(1).expect("nonempty"),
        seed,
        sample_index,
    })
}

/// `n_samples` random points with `depth + 2` digits uniform on
/// `[1, digit_bound]`, plus [`ROSTER`], each compared with `Ψ_u(θ)`.
///
/// Records are sorted by `phi.lo`, ties broken by description. The output is
/// independent of the number of threads.
pub fn scan_minimum(
    n_samples: u64,
    depth: usize,
    digit_bound: u64,
    seed: u64,
    u: &CostFunction,
) -> Result<Vec<ScanRecord>> {
    if digit_bound == 0 {
        return Err(Error::InvalidParameter("digit bound must be >= 1".into()));
    }
    if depth < 2 {
        return Err(Error::InvalidParameter("scan depth must be >= 2".into()));
    }
    let theta_value = theta_closed_form_enclosure(u, working_precision())?;
    let roster = ROSTER.par_iter().map(|s| {
        let cf = parse_cf(s)?;
        scan_record(&cf, s.to_string(), depth, u, &theta_value, None, None)
    });
    let samples = (0..n_samples).into_par_iter().map(|i| {
        let digits = sample_digits(seed, i, depth + 2, digit_bound);
        let cf = CfDigits::stream(digits, Some(digit_bound))?;
        let descr = cf.to_string();
        scan_record(&cf, descr, depth, u, &theta_value, Some(seed), Some(i))
    });
    let mut records: Vec<ScanRecord> = roster.chain(samples).collect::<Result<_>>()?;
    records.sort_by(|a, b| {
        a.phi
            .lo()
            .partial_cmp(b.phi.lo())
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.x_descr.cmp(&b.x_descr))
            .then_with(|| a.sample_index.cmp(&b.sample_index))
    });
    Ok(records)
}

/// `Ψ_u(θ)` against `Ψ_u(θ′)` for `u(t) = t^a`.
#[derive(Debug, Clone)]
pub struct CounterexampleRecord {
    pub a: f64,
    /// `θ^{−a}/θ′`.
    pub psi_theta: Interval,
    /// `θ′^{−a} + θ^{−a}`.
    pub psi_theta_prime: Interval,
    pub gap: Interval,
    pub psi_theta_solver: Float,
    pub psi_theta_prime_solver: Float,
    /// Largest difference between closed form and periodic solver.
    pub solver_agreement: f64,
}

impl CounterexampleRecord {
    /// `Ψ_u(θ′) < Ψ_u(θ)` is certified.
    pub fn gap_certified(&self) -> bool {
        *self.gap.lo() > 0
    }
}

/// Evaluates both sides of the `t^a` counterexample in closed form and with
/// the periodic solver.
pub fn counterexample_power(a: f64) -> Result<CounterexampleRecord> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!("exponent must lie in (0, 1), got {a}")));
    }
    let prec = working_precision();
    let u = CostFunction::power(a)?;
    let theta = QuadraticSurd::golden();
    let theta_prime = QuadraticSurd::new(-3, 5, -2)?;
    let t = theta.value(prec + 32);
    let tp = theta_prime.value(prec + 32);
    let t_pow = t.pow_f64(-a);
    let psi_theta = (&t_pow / &tp).with_prec(prec);
    let psi_theta_prime = (&tp.pow_f64(-a) + &t_pow).with_prec(prec);
    let gap = &psi_theta - &psi_theta_prime;

    let s_theta = evaluate_exact(&theta, &u, prec)?;
    let s_prime = evaluate_exact(&theta_prime, &u, prec)?;
    let d1 = Float::with_val(prec, &s_theta.value - &psi_theta.mid()).abs();
    let d2 = Float::with_val(prec, &s_prime.value - &psi_theta_prime.mid()).abs();
    Ok(CounterexampleRecord {
        a,
        psi_theta,
        psi_theta_prime,
        gap,
        psi_theta_solver: s_theta.value,
        psi_theta_prime_solver: s_prime.value,
        solver_agreement: d1.to_f64().max(d2.to_f64()),
    })
}

/// One probe point near a rational.
#[derive(Debug, Clone)]
pub struct ProbePoint {
    pub eps: f64,
    /// `+1` for `r + eps·θ`, `−1` for `r − eps·θ`.
    pub side: i8,
    pub x: QuadraticSurd,
    /// Certified lower bound on `Φ(x)` from `depth + 1` terms.
    pub lower_bound: Float,
}

/// `Ψ_{u,K}(x)` with `α_k` taken from the surd orbit itself, so partial
/// quotients of any size are handled.
fn orbit_partial_sum(x: &QuadraticSurd, depth: usize, u: &CostFunction) -> Result<Interval> {
    let prec = working_precision();
    let one = Float::with_val(prec, 1);
    let mut cur = x.clone();
    let mut sum = Interval::from_f64(0.0, prec);
    let mut beta = Interval::from_f64(1.0, prec);
    for k in 0..=depth {
        let a = cur.value(prec);
        let arg = a
            .recip()
            .intersection(&Interval::unbounded_above(one.clone()))
            .ok_or_else(|| Error::Domain(format!("1/alpha_{k} below 1")))?;
        sum = (&sum + &(&beta * &u.image(&arg)?)).clamp_nonneg();
        beta = &beta * &a;
        cur = cur.gauss_step().1;
    }
    Ok(sum)
}

/// Lower bounds on `Φ` at `r ± eps·θ` for each `eps`, taking the `+` side
/// unless it leaves (0, 1).
pub fn divergence_probe(r_num: i64, r_den: i64, eps_list: &[f64], depth: usize) -> Result<Vec<ProbePoint>> {
    if r_den == 0 {
        return Err(Error::InvalidParameter("zero denominator".into()));
    }
    let r = Rational::from((r_num, r_den));
    if r < 0 || r > 1 {
        return Err(Error::InvalidParameter(format!("r = {r} is outside [0, 1]")));
    }
    if eps_list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidParameter("eps values must be positive and finite".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("eps values must be strictly decreasing".into()));
    }
    let log = CostFunction::log();
    eps_list
        .iter()
        .map(|&eps| {
            let e = Rational::from_f64(eps).expect("finite");
            let (b, c, d) = (r.denom().clone(), e.numer().clone(), e.denom().clone());
            let a = r.numer().clone();
            // r ± eθ = (2ad ∓ cb ± cb·√5)/(2bd)
            let cb = Integer::from(&c * &b);
            let two_ad = Integer::from(2) * &a * &d;
            let rad = Integer::from(&cb * &cb) * 5u32;
            let den = Integer::from(2) * &b * &d;
            let plus = QuadraticSurd::new(Integer::from(&two_ad - &cb), rad.clone(), den.clone())?;
            let (x, side) = if plus.in_unit_interval() {
                (plus, 1)
            } else {
                let minus = QuadraticSurd::new(-(two_ad + &cb), rad, -den)?;
                if !minus.in_unit_interval() {
                    return Err(Error::OutOfUnitInterval);
                }
                (minus, -1)
            };
            let lower_bound = orbit_partial_sum(&x, depth, &log)?.lo().clone();
            Ok(ProbePoint {
                eps,
                side,
                x,
                lower_bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHI_THETA: f64 = 1.259_828_913_794_410_3;

    #[test]
    fn f_examples() {
        assert!((f_of(THETA_F64).unwrap() - PHI_THETA).abs() < 1e-14);
        let want = (4.0f64 / 3.0).ln() / 0.75 + 3f64.ln();
        assert!((f_of(0.75).unwrap() - want).abs() < 1e-15);
        assert!((f_of(0.75).unwrap() - 1.4822).abs() < 1e-4);
        assert!(f_of(1.0 - 1e-12).unwrap() > 25.0);
        assert!(f_of(0.5).is_err() && f_of(1.0).is_err());
    }

    #[test]
    fn g_examples() {
        assert!((g_of(0.61).unwrap() - 0.027_224_434_492_235_754).abs() < 1e-15);
        assert_eq!(g_of(1.0).unwrap(), 1.0);
        assert!((g_of(0.5).unwrap() + 0.346_573_590_279_972_6).abs() < 1e-15);
        assert!(g_of(0.2).unwrap() < g_of(0.5).unwrap() && g_of(0.5).unwrap() < g_of(0.9).unwrap());
        assert!(g_of(0.0).is_err());
    }

    #[test]
    fn slope_ratio_examples() {
        assert!((slope_ratio(THETA_F64).unwrap() - PHI_THETA).abs() < 1e-14);
        assert!((slope_ratio(1.0 - 1e-9).unwrap() - 1.0).abs() < 1e-8);
        assert!((slope_ratio(0.25).unwrap() - 4f64.ln() / 0.75).abs() < 1e-15);
    }

    #[test]
    fn monotonicity_reports_pass() {
        let reports = verify_f_monotone(4096);
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert!(r.passed(), "{:?}", r);
        }
    }

    #[test]
    fn sample_streams_are_independent_of_order() {
        let a = sample_digits(7, 3, 10, 10);
        let _ = sample_digits(7, 2, 10, 10);
        assert_eq!(a, sample_digits(7, 3, 10, 10));
        assert_ne!(a, sample_digits(7, 4, 10, 10));
        assert!(a.iter().all(|&d| (1..=10).contains(&d)));
    }

    #[test]
    fn small_scan() {
        let recs = scan_minimum(200, 20, 10, 0, &CostFunction::log()).unwrap();
        assert_eq!(recs.len(), 200 + ROSTER.len());
        assert!(recs.iter().all(|r| r.status != ScanStatus::Violation));
        assert!(recs.windows(2).all(|w| w[0].phi.lo() <= w[1].phi.lo()));
        let theta = recs.iter().find(|r| r.x_descr == "[0;(1)]").unwrap();
        assert_eq!(theta.status, ScanStatus::NotSeparated);
        assert!(theta.separation.to_f64().abs() < 1e-3);
        let silver = recs.iter().find(|r| r.x_descr == "[0;(2)]").unwrap();
        assert!(silver.separation > 0.24);
    }

    #[test]
    fn scan_with_square_root_cost() {
        let u = CostFunction::power(0.5).unwrap();
        let recs = scan_minimum(0, 30, 10, 0, &u).unwrap();
        let tp = recs.iter().find(|r| r.x_descr == "[0;2,(1)]").unwrap();
        assert_eq!(tp.status, ScanStatus::Violation);
    }

    #[test]
    fn scan_rejects_bad_parameters() {
        assert!(scan_minimum(1, 1, 10, 0, &CostFunction::log()).is_err());
        assert!(scan_minimum(1, 5, 0, 0, &CostFunction::log()).is_err());
    }

    #[test]
    fn counterexample_values() {
        let c = counterexample_power(0.5).unwrap();
        assert!(c.gap_certified());
        assert!((c.gap.mid_f64() - 0.440_137_038_521_597_4).abs() < 1e-12);
        assert!((c.psi_theta.mid_f64() - 3.330_190_676_785_562).abs() < 1e-12);
        assert!(c.solver_agreement < 1e-10);
        let near_one = counterexample_power(0.99).unwrap();
        assert!(near_one.gap_certified() && near_one.gap.hi_f64() < 0.05);
        assert!(counterexample_power(0.1).unwrap().gap_certified());
        assert!(counterexample_power(1.0).is_err());
        assert!(counterexample_power(0.0).is_err());
    }

    #[test]
    fn probe_near_zero() {
        let eps: Vec<f64> = (2..=6).map(|j| 10f64.powi(-j)).collect();
        let pts = divergence_probe(0, 1, &eps, 10).unwrap();
        for (j, p) in (2..).zip(&pts) {
            assert_eq!(p.side, 1);
            // Φ(x) >= ln(1/x) with x = eps·θ
            let floor = (1.0 / (p.eps * THETA_F64)).ln();
            assert!(p.lower_bound.to_f64() >= floor - 1e-12, "j={j}");
        }
        assert!(pts.windows(2).all(|w| w[1].lower_bound > w[0].lower_bound));
    }

    #[test]
    fn probe_near_zero_passes_thresholds() {
        let eps: Vec<f64> = (2..=24).step_by(2).map(|j| 10f64.powi(-j)).collect();
        let pts = divergence_probe(0, 1, &eps, 20).unwrap();
        for t in [10.0, 20.0, 50.0] {
            assert!(pts.iter().any(|p| p.lower_bound > t), "threshold {t}");
        }
        let half = divergence_probe(1, 2, &eps, 20).unwrap();
        assert!(half.windows(2).all(|w| w[1].lower_bound > w[0].lower_bound));
        assert!(half.iter().any(|p| p.lower_bound > 20.0));
    }

    #[test]
    fn ratio_bound_equals_closed_form_at_theta() {
        let u = CostFunction::log();
        let theta = parse_cf("[0;(1)]").unwrap();
        let closed = crate::quadratic::theta_closed_form(&u).to_f64();
        for k in 0..=10 {
            let r = crate::series::ratio_lower_bound(&theta, k, &u).unwrap();
            assert!((r.mid_f64() - closed).abs() < 1e-12, "K={k}");
        }
    }

    #[test]
    fn counterexample_gap_on_fine_grid() {
        for i in 1..100 {
            let c = counterexample_power(i as f64 / 100.0).unwrap();
            assert!(c.gap_certified(), "a={}", c.a);
            assert!(c.solver_agreement <= 1e-10);
        }
    }

    #[test]
    fn probe_at_one_uses_minus_side() {
        let pts = divergence_probe(1, 1, &[1e-3, 1e-6], 10).unwrap();
        assert!(pts.iter().all(|p| p.side == -1));
        assert!(pts[1].lower_bound > pts[0].lower_bound);
    }

    #[test]
    fn probe_rejects_bad_input() {
        assert!(divergence_probe(1, 0, &[1e-2], 5).is_err());
        assert!(divergence_probe(3, 2, &[1e-2], 5).is_err());
        assert!(divergence_probe(1, 2, &[1e-3, 1e-2], 5).is_err());
        assert!(divergence_probe(1, 2, &[-1e-3], 5).is_err());
    }
}
