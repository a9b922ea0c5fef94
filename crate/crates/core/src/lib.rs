//! Certified evaluation of Brjuno-type series
//!
//! ```text
//! Ψ_u(x) = Σ_{k≥0} β_{k−1}(x) · u(1/α_k(x)),    Φ = Ψ_ln,
//! ```
//!
//! where `α_k` are the Gauss-map iterates of `x ∈ (0, 1)` and
//! `β_k = α_0⋯α_k`. Every number this crate reports about `Ψ_u` is an
//! outward-rounded interval computed with MPFR.
//!
//! * [`cf`]: continued-fraction digits, convergents and Gauss orbits.
//! * [`interval`]: interval arithmetic with directed rounding.
//! * [`cost`]: cost functions `u` and grid checks of their properties.
//! * [`series`]: partial sums, tail bounds and enclosures.
//! * [`quadratic`]: quadratic irrationals, where the series is solved exactly.
//! * [`extremal`]: comparisons against the value at the golden section.
//!
//! ```
//! use brjuno::{enclosure, parse_cf, CostFunction};
//!
//! let theta = parse_cf("[0;(1)]")?;
//! let e = enclosure(&theta, 30, &CostFunction::log())?;
//! assert!(e.value.contains_f64(1.2598289137944103));
//! # Ok::<(), brjuno::Error>(())
//! ```

pub mod cf;
pub mod cost;
pub mod error;
pub mod extremal;
pub mod interval;
pub mod quadratic;
pub mod series;

pub use cf::{convergents, gauss_orbit, parse_cf, value_enclosure, CfDigits, CfKind};
pub use cost::{CostFunction, GridConfig, HypothesisReport, Monotonicity, Verdict};
pub use error::{Error, Result};
pub use interval::{set_working_precision, working_precision, Interval};
pub use quadratic::{cf_of_quadratic, evaluate_exact, theta_closed_form, ExactValue, QuadraticSurd};
pub use series::{enclosure, partial_sum, ratio_lower_bound, tail_bound, Enclosure};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/continued-fractions.md")]
    mod continued_fractions {}
    #[doc = include_str!("../../../book/src/enclosures.md")]
    mod enclosures {}
    #[doc = include_str!("../../../book/src/quadratic-irrationals.md")]
    mod quadratic_irrationals {}
    #[doc = include_str!("../../../book/src/cost-functions.md")]
    mod cost_functions {}
    #[doc = include_str!("../../../book/src/golden-minimum.md")]
    mod golden_minimum {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
