//! Cost functions `u: [1, ∞) → [0, ∞)` and grid checkers for the conditions
//! under which the generalized series keeps its minimum at the golden section.
//!
//! A checker can only falsify or corroborate an analytic property. Verdicts
//! are therefore "passes on grid", "fails with witness" (a concrete
//! reproducible violation), or "not checkable".

use std::fmt;
use std::sync::Arc;

use rug::float::Round;
use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::interval::Interval;

pub(crate) const THETA_F64: f64 = 0.618_033_988_749_894_9;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type DirectedFn = Arc<dyn Fn(&Float, Round) -> Float + Send + Sync>;

/// What is known about the shape of `u`, used to turn point evaluations into
/// image enclosures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
    /// `|u(s) − u(t)| <= L |s − t|` on `[1, ∞)`.
    Lipschitz(f64),
    Unknown,
}

#[derive(Clone)]
pub struct CostFunction {
    name: String,
    params: Vec<(String, f64)>,
    eval: RealFn,
    directed: Option<DirectedFn>,
    derivative_right: Option<RealFn>,
    monotonicity: Monotonicity,
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostFunction")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("monotonicity", &self.monotonicity)
            .finish_non_exhaustive()
    }
}

impl CostFunction {
    /// A cost function known only through `f64` evaluation. It can be used by
    /// the grid checkers; certified evaluation needs [`with_directed`].
    ///
    /// [`with_directed`]: CostFunction::with_directed
    pub fn custom(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        monotonicity: Monotonicity,
    ) -> Self {
        CostFunction {
            name: name.into(),
            params: Vec::new(),
            eval: Arc::new(eval),
            directed: None,
            derivative_right: None,
            monotonicity,
        }
    }

    /// Supplies an evaluation that rounds in the requested direction; the
    /// result carries the precision of the argument.
    pub fn with_directed(
        mut self,
        f: impl Fn(&Float, Round) -> Float + Send + Sync + 'static,
    ) -> Self {
        self.directed = Some(Arc::new(f));
        self
    }

    pub fn with_derivative(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative_right = Some(Arc::new(f));
        self
    }

    pub fn with_params(mut self, params: Vec<(String, f64)>) -> Self {
        self.params = params;
        self
    }

    /// `u(t) = ln t`.
    pub fn log() -> Self {
        CostFunction::custom("log", f64::ln, Monotonicity::Nondecreasing)
            .with_directed(|t, r| Float::with_val_round(t.prec(), t.ln_ref(), r).0)
            .with_derivative(|t| 1.0 / t)
    }

    /// `u(t) = (ln t)^a`, `a >= 1`.
    pub fn log_pow(a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 1.0) {
            return Err(Error::InvalidParameter(format!("logpow exponent must be >= 1, got {a}")));
        }
        let da = a;
        Ok(CostFunction::custom(format!("logpow:{a}"), move |t| t.ln().powf(a), Monotonicity::Nondecreasing)
            .with_directed(move |t, r| {
                let prec = t.prec();
                let l = Float::with_val_round(prec, t.ln_ref(), r).0.max(&Float::new(prec));
                let e = Float::with_val(53, a);
                Float::with_val_round(prec, (&l).pow(&e), r).0
            })
            .with_derivative(move |t| {
                if t == 1.0 {
                    if da == 1.0 { 1.0 } else { 0.0 }
                } else {
                    da * t.ln().powf(da - 1.0) / t
                }
            })
            .with_params(vec![("a".into(), a)]))
    }

    /// `u(t) = (t − 1)^a`, `a > 0`.
    pub fn power_minus_one(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!("powm1 exponent must be > 0, got {a}")));
        }
        Ok(CostFunction::custom(format!("powm1:{a}"), move |t| (t - 1.0).powf(a), Monotonicity::Nondecreasing)
            .with_directed(move |t, r| {
                let prec = t.prec();
                let d = Float::with_val_round(prec, t - 1u32, r).0.max(&Float::new(prec));
                let e = Float::with_val(53, a);
                Float::with_val_round(prec, (&d).pow(&e), r).0
            })
            .with_derivative(move |t| a * (t - 1.0).powf(a - 1.0))
            .with_params(vec![("a".into(), a)]))
    }

    /// `u(t) = t^a`, `a > 0`. Note `u(1) = 1`.
    pub fn power(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!("pow exponent must be > 0, got {a}")));
        }
        Ok(CostFunction::custom(format!("pow:{a}"), move |t| t.powf(a), Monotonicity::Nondecreasing)
            .with_directed(move |t, r| {
                let e = Float::with_val(53, a);
                Float::with_val_round(t.prec(), t.pow(&e), r).0
            })
            .with_derivative(move |t| a * t.powf(a - 1.0))
            .with_params(vec![("a".into(), a)]))
    }

    /// Parses `log`, `logpow:a`, `powm1:a` or `pow:a`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (spec, None),
        };
        let param = || -> Result<f64> {
            let a = arg.ok_or_else(|| Error::InvalidParameter(format!("`{head}` needs a parameter, e.g. `{head}:2`")))?;
            a.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad parameter `{a}` in cost spec")))
        };
        match head {
            "log" if arg.is_none() => Ok(CostFunction::log()),
            "logpow" => CostFunction::log_pow(param()?),
            "powm1" => CostFunction::power_minus_one(param()?),
            "pow" => CostFunction::power(param()?),
            _ => Err(Error::InvalidParameter(format!("unknown cost function `{spec}`"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    pub fn is_monotone_nondecreasing(&self) -> bool {
        self.monotonicity == Monotonicity::Nondecreasing
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn derivative_right(&self, t: f64) -> Option<f64> {
        self.derivative_right.as_ref().map(|d| d(t))
    }

    pub fn has_directed(&self) -> bool {
        self.directed.is_some()
    }

    /// `u(t)` rounded in direction `r`, at the precision of `t`.
    pub fn eval_round(&self, t: &Float, r: Round) -> Result<Float> {
        let f = self.directed.as_ref().ok_or_else(|| Error::NotEnclosable(self.name.clone()))?;
        Ok(f(t, r))
    }

    /// An enclosure of `u([lo, hi])` for `lo >= 1`.
    pub fn image(&self, arg: &Interval) -> Result<Interval> {
        if *arg.lo() < 1 {
            return Err(Error::Domain(format!(
                "cost function `{}` evaluated below 1 (at {})",
                self.name,
                arg.lo_f64()
            )));
        }
        let prec = arg.prec();
        let (lo, hi) = (arg.lo(), arg.hi());
        let out = match self.monotonicity {
            Monotonicity::Nondecreasing => {
                Interval::new(self.eval_round(lo, Round::Down)?, self.eval_round(hi, Round::Up)?)
            }
            Monotonicity::Nonincreasing => {
                Interval::new(self.eval_round(hi, Round::Down)?, self.eval_round(lo, Round::Up)?)
            }
            Monotonicity::Lipschitz(l) => {
                let slack = Float::with_val_round(prec, arg.width() * l, Round::Up).0;
                let a = self.eval_round(lo, Round::Down)?.min(&self.eval_round(hi, Round::Down)?);
                let b = self.eval_round(lo, Round::Up)?.max(&self.eval_round(hi, Round::Up)?);
                Interval::new(
                    Float::with_val_round(prec, &a - &slack, Round::Down).0,
                    Float::with_val_round(prec, &b + &slack, Round::Up).0,
                )
            }
            Monotonicity::Unknown => return Err(Error::NotEnclosable(self.name.clone())),
        };
        Ok(out.clamp_nonneg())
    }

    /// `sup u` over `[1, m + 1]`, when `u` is nondecreasing.
    pub(crate) fn sup_up_to(&self, m: u64, prec: u32) -> Option<Float> {
        if !self.is_monotone_nondecreasing() {
            return None;
        }
        let t = Float::with_val_round(prec, rug::Integer::from(m) + 1u32, Round::Up).0;
        self.eval_round(&t, Round::Up).ok()
    }
}

/// The cost functions the command line knows by name, at a few parameters.
pub fn registry() -> Vec<CostFunction> {
    vec![
        CostFunction::log(),
        CostFunction::log_pow(2.0).unwrap(),
        CostFunction::power_minus_one(1.0).unwrap(),
        CostFunction::power_minus_one(2.0).unwrap(),
        CostFunction::power(0.5).unwrap(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionId {
    /// `u(t) → ∞` as `t → ∞`.
    Unbounded,
    /// Continuity at irrationals; never decidable numerically.
    Continuity,
    /// `x ↦ u(1/x)/(1 − x)` strictly decreasing on (0, 1).
    RatioDecreasing,
    /// `x ↦ u(1/x)/x + u(x/(1 − x))` strictly increasing on [θ, 1).
    StepIncreasing,
    /// `u(1) = 0`.
    VanishesAtOne,
    /// `v(t) = t·u(t)` strictly convex on [1, ∞).
    WeightedConvex,
    /// `x ↦ u(x/(1 − x))` convex on [1/2, 1).
    CompositionConvex,
    /// `u'(1/θ) >= u(1/θ)` with the right derivative.
    SlopeAtGolden,
    /// `w(t) = v(t)/(t − 1)` strictly increasing for `t > 1`.
    ChordSlopeIncreasing,
    /// `f(x) = ln(1/x)/x + ln(x/(1 − x))` strictly increasing on [θ, 1).
    FIncreasing,
    /// `g(x) = 2x − 1 + (1 − x) ln x` strictly increasing on (0, 1].
    GIncreasing,
    /// `g(0.61) > 0`.
    GPositiveAt061,
    /// `x ↦ ln(1/x)/(1 − x)` strictly decreasing on (0, 1).
    SlopeRatioDecreasing,
}

impl ConditionId {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionId::Unbounded => "unbounded",
            ConditionId::Continuity => "continuity",
            ConditionId::RatioDecreasing => "ratio_decreasing",
            ConditionId::StepIncreasing => "step_increasing",
            ConditionId::VanishesAtOne => "vanishes_at_one",
            ConditionId::WeightedConvex => "weighted_convex",
            ConditionId::CompositionConvex => "composition_convex",
            ConditionId::SlopeAtGolden => "slope_at_golden",
            ConditionId::ChordSlopeIncreasing => "chord_slope_increasing",
            ConditionId::FIncreasing => "f_increasing",
            ConditionId::GIncreasing => "g_increasing",
            ConditionId::GPositiveAt061 => "g_positive_at_0.61",
            ConditionId::SlopeRatioDecreasing => "slope_ratio_decreasing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    PassesOnGrid,
    FailsWithWitness,
    NotCheckable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::PassesOnGrid => "passes_on_grid",
            Verdict::FailsWithWitness => "fails_with_witness",
            Verdict::NotCheckable => "not_checkable",
        }
    }
}

/// Points and the values observed there that exhibit a violation.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub condition: ConditionId,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub grid: String,
}

impl HypothesisReport {
    fn pass(condition: ConditionId, grid: String) -> Self {
        HypothesisReport {
            condition,
            verdict: Verdict::PassesOnGrid,
            witness: None,
            grid,
        }
    }

    fn fail(condition: ConditionId, grid: String, witness: Witness) -> Self {
        HypothesisReport {
            condition,
            verdict: Verdict::FailsWithWitness,
            witness: Some(witness),
            grid,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::PassesOnGrid
    }
}

/// Grid sizes and ranges for the checkers.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub points: usize,
    /// Right end of the log-spaced `t` grid on `[1, t_max]`.
    pub t_max: f64,
    /// Distance kept from θ at the left of x-domain grids.
    pub x_left_gap: f64,
    /// Distance kept from 1 at the right of x-domain grids.
    pub x_right_gap: f64,
    /// Allowed dip in slope comparisons for convexity checks.
    pub slack: f64,
    /// `u(t_max)` must exceed this for the unboundedness check.
    pub unbounded_threshold: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            points: 4096,
            t_max: 1e6,
            x_left_gap: 1e-6,
            x_right_gap: 1e-4,
            slack: 0.0,
            unbounded_threshold: 10.0,
        }
    }
}

impl GridConfig {
    pub fn with_points(points: usize) -> Self {
        GridConfig {
            points,
            ..GridConfig::default()
        }
    }
}

pub(crate) fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| a + (b - a) * (i as f64) / ((n - 1) as f64)).collect()
}

/// `n` interior points of (0, 1): `i/(n+1)`.
pub(crate) fn open_unit_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

pub(crate) fn log_grid(t_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let l = t_max.ln();
    let mut g: Vec<f64> = (0..n).map(|i| (l * i as f64 / (n - 1) as f64).exp()).collect();
    g[0] = 1.0;
    g[n - 1] = t_max;
    g
}

/// First index where `vals[i+1] <= vals[i]`.
pub(crate) fn first_non_increase(vals: &[f64]) -> Option<usize> {
    vals.windows(2).position(|w| !(w[1] > w[0]))
}

pub(crate) fn first_non_decrease(vals: &[f64]) -> Option<usize> {
    vals.windows(2).position(|w| !(w[1] < w[0]))
}

/// Strict monotonicity of `f` on `grid`; `increasing` selects the direction.
pub(crate) fn strict_monotone_report(
    condition: ConditionId,
    grid: &[f64],
    grid_desc: String,
    f: impl Fn(f64) -> f64,
    increasing: bool,
) -> HypothesisReport {
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let bad = if increasing {
        first_non_increase(&vals)
    } else {
        first_non_decrease(&vals)
    };
    match bad {
        None => HypothesisReport::pass(condition, grid_desc),
        Some(i) => HypothesisReport::fail(
            condition,
            grid_desc,
            Witness {
                points: vec![grid[i], grid[i + 1]],
                values: vec![vals[i], vals[i + 1]],
                note: format!(
                    "expected strictly {} values",
                    if increasing { "increasing" } else { "decreasing" }
                ),
            },
        ),
    }
}

/// Slopes of consecutive chords of `(xs, ys)`.
fn chord_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect()
}

/// Convexity via nondecreasing chord slopes; `strict` requires increase.
fn convexity_report(
    condition: ConditionId,
    xs: &[f64],
    f: impl Fn(f64) -> f64,
    grid_desc: String,
    strict: bool,
    slack: f64,
) -> HypothesisReport {
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let slopes = chord_slopes(xs, &ys);
    let bad = slopes.windows(2).position(|s| {
        if strict {
            !(s[1] > s[0] - slack)
        } else {
            !(s[1] >= s[0] - slack)
        }
    });
    match bad {
        None => HypothesisReport::pass(condition, grid_desc),
        Some(i) => HypothesisReport::fail(
            condition,
            grid_desc,
            Witness {
                points: xs[i..i + 3].to_vec(),
                values: ys[i..i + 3].to_vec(),
                note: format!(
                    "chord slopes {} then {} are not {}",
                    slopes[i],
                    slopes[i + 1],
                    if strict { "increasing" } else { "nondecreasing" }
                ),
            },
        ),
    }
}

/// `u(t) → ∞`: `u` must be nondecreasing over the last tenth of a log grid on
/// `[1, t_max]` and exceed `cfg.unbounded_threshold` at `t_max`.
pub fn check_unbounded(u: &CostFunction, cfg: &GridConfig) -> HypothesisReport {
    let desc = format!("log-spaced, {} points on [1, {:e}]", cfg.points, cfg.t_max);
    if !(cfg.t_max > 1.0) {
        return HypothesisReport {
            condition: ConditionId::Unbounded,
            verdict: Verdict::NotCheckable,
            witness: None,
            grid: desc,
        };
    }
    let grid = log_grid(cfg.t_max, cfg.points);
    let tail = &grid[grid.len() - grid.len().div_ceil(10)..];
    let vals: Vec<f64> = tail.iter().map(|&t| u.eval(t)).collect();
    if let Some(i) = vals.windows(2).position(|w| !(w[1] >= w[0])) {
        return HypothesisReport::fail(
            ConditionId::Unbounded,
            desc,
            Witness {
                points: vec![tail[i], tail[i + 1]],
                values: vec![vals[i], vals[i + 1]],
                note: "u decreases on the tail of the grid".into(),
            },
        );
    }
    let top = *vals.last().unwrap();
    if !(top > cfg.unbounded_threshold) {
        return HypothesisReport::fail(
            ConditionId::Unbounded,
            desc,
            Witness {
                points: vec![cfg.t_max],
                values: vec![top],
                note: format!("u(t_max) does not exceed {}", cfg.unbounded_threshold),
            },
        );
    }
    HypothesisReport::pass(ConditionId::Unbounded, desc)
}

/// Continuity is assumed, never checked.
pub fn check_continuity(_u: &CostFunction) -> HypothesisReport {
    HypothesisReport {
        condition: ConditionId::Continuity,
        verdict: Verdict::NotCheckable,
        witness: None,
        grid: "none".into(),
    }
}

/// `h(x) = u(1/x)/(1 − x)` strictly decreasing on `i/(n+1)`, `i = 1..n`.
pub fn check_ratio_decreasing(u: &CostFunction, cfg: &GridConfig) -> HypothesisReport {
    let grid = open_unit_grid(cfg.points);
    let desc = format!("uniform, {} interior points of (0, 1)", cfg.points);
    strict_monotone_report(
        ConditionId::RatioDecreasing,
        &grid,
        desc,
        |x| u.eval(1.0 / x) / (1.0 - x),
        false,
    )
}

/// `k(x) = u(1/x)/x + u(x/(1 − x))` strictly increasing on
/// `[θ + x_left_gap, 1 − x_right_gap]`.
pub fn check_step_increasing(u: &CostFunction, cfg: &GridConfig) -> HypothesisReport {
    let (a, b) = (THETA_F64 + cfg.x_left_gap, 1.0 - cfg.x_right_gap);
    let grid = uniform_grid(a, b, cfg.points);
    let desc = format!("uniform, {} points on [{a}, {b}]", cfg.points);
    strict_monotone_report(
        ConditionId::StepIncreasing,
        &grid,
        desc,
        |x| u.eval(1.0 / x) / x + u.eval(x / (1.0 - x)),
        true,
    )
}

/// The sufficient conditions for the golden-section minimum: `u(1) = 0`,
/// strict convexity of `t·u(t)`, convexity of `u(x/(1 − x))` on [1/2, 1), and
/// `u'(1/θ) >= u(1/θ)`. The chord-slope monotonicity that follows from the
/// first two is reported as a cross-check.
pub fn check_convexity_class(u: &CostFunction, cfg: &GridConfig) -> Vec<HypothesisReport> {
    let mut out = Vec::with_capacity(5);

    let u1 = u.eval(1.0);
    out.push(if u1 == 0.0 {
        HypothesisReport::pass(ConditionId::VanishesAtOne, "t = 1".into())
    } else {
        HypothesisReport::fail(
            ConditionId::VanishesAtOne,
            "t = 1".into(),
            Witness {
                points: vec![1.0],
                values: vec![u1],
                note: "u(1) != 0".into(),
            },
        )
    });

    let tgrid = log_grid(cfg.t_max, cfg.points);
    let tdesc = format!("log-spaced, {} points on [1, {:e}]", cfg.points, cfg.t_max);
    out.push(convexity_report(
        ConditionId::WeightedConvex,
        &tgrid,
        |t| t * u.eval(t),
        tdesc.clone(),
        true,
        cfg.slack,
    ));

    let (a, b) = (0.5, 1.0 - cfg.x_right_gap);
    let xgrid = uniform_grid(a, b, cfg.points);
    out.push(convexity_report(
        ConditionId::CompositionConvex,
        &xgrid,
        |x| u.eval(x / (1.0 - x)),
        format!("uniform, {} points on [{a}, {b}]", cfg.points),
        false,
        cfg.slack,
    ));

    let at = 1.0 / THETA_F64;
    out.push(match u.derivative_right(at) {
        None => HypothesisReport {
            condition: ConditionId::SlopeAtGolden,
            verdict: Verdict::NotCheckable,
            witness: None,
            grid: "t = 1/θ".into(),
        },
        Some(d) => {
            let val = u.eval(at);
            if d >= val {
                HypothesisReport::pass(ConditionId::SlopeAtGolden, "t = 1/θ".into())
            } else {
                HypothesisReport::fail(
                    ConditionId::SlopeAtGolden,
                    "t = 1/θ".into(),
                    Witness {
                        points: vec![at],
                        values: vec![d, val],
                        note: "right derivative below value".into(),
                    },
                )
            }
        }
    });

    out.push(strict_monotone_report(
        ConditionId::ChordSlopeIncreasing,
        &tgrid[1..],
        format!("{tdesc}, excluding t = 1"),
        |t| t * u.eval(t) / (t - 1.0),
        true,
    ));
    out
}

/// Every check that applies to `u`, in a fixed order.
pub fn check_all(u: &CostFunction, cfg: &GridConfig) -> Vec<HypothesisReport> {
    let mut out = vec![
        check_unbounded(u, cfg),
        check_continuity(u),
        check_ratio_decreasing(u, cfg),
        check_step_increasing(u, cfg),
    ];
    out.extend(check_convexity_class(u, cfg));
    out
}
