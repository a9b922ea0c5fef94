//! `brjuno`: command-line access to certified Brjuno-series evaluation.
//!
//! Output is JSON lines (default) or CSV, one record per line. Exit codes:
//! 0 success, 1 a check failed or a violation was certified, 2 bad input or
//! configuration, 3 not enough digits or precision.

mod output;

use std::process::ExitCode;

use brjuno::cost::check_all;
use brjuno::extremal::{counterexample_power, divergence_probe, scan_minimum, verify_f_monotone, ScanStatus};
use brjuno::quadratic::{cf_of_quadratic, evaluate_exact, MAX_ORBIT};
use brjuno::series::enclosure;
use brjuno::{set_working_precision, CfDigits, CfKind, CostFunction, Error, GridConfig, HypothesisReport, QuadraticSurd};
use clap::{Args, Parser, Subcommand};
use rug::float::Round;

use output::{write_rows, Cell, Format, Row};

#[derive(Debug, Parser)]
#[command(name = "brjuno", version, about = "Certified evaluation of Brjuno-type series")]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunConfig {
    /// Cost function: log, logpow:a, powm1:a or pow:a.
    #[arg(long = "u", global = true, default_value = "log")]
    cost: String,
    /// Number of terms minus one in partial sums.
    #[arg(long, global = true, default_value_t = 40)]
    depth: usize,
    /// Upper bound on every partial quotient of a stream input.
    #[arg(long = "digit-bound", global = true)]
    digit_bound: Option<u64>,
    #[arg(long = "precision-bits", global = true, env = "BRJUNO_PRECISION_BITS", default_value_t = 64)]
    precision_bits: u32,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Random samples in a scan.
    #[arg(long, global = true, default_value_t = 1000)]
    samples: u64,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Skip the exact quadratic path in `eval`.
    #[arg(long = "enclosure-only", global = true)]
    enclosure_only: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate at a continued fraction `[0;a1,...,(b1,...,bm)]` or a surd `(P+sqrt(D))/Q`.
    Eval { input: String },
    /// Compare random and roster points against the value at the golden section.
    Scan,
    /// Grid checks of the cost function's hypotheses.
    Check,
    /// Both sides of the t^a counterexample at θ and θ′.
    Counterexample {
        /// Exponents in (0, 1), comma separated.
        #[arg(long = "a", value_delimiter = ',', default_value = "0.5")]
        a: Vec<f64>,
    },
    /// Lower bounds near a rational `r` at `r ± eps·θ`.
    Divergence {
        /// The rational, as `p/q` or an integer.
        #[arg(long, default_value = "0")]
        r: String,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "1e-2,1e-3,1e-4,1e-5,1e-6,1e-7,1e-8"
        )]
        eps: Vec<f64>,
        /// Exit 1 unless the last lower bound exceeds this.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Monotonicity of the one-step comparison functions.
    Verify {
        #[arg(long, default_value_t = 4096)]
        grid: usize,
    },
}

enum Failure {
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InsufficientDigits { .. } | Error::PrecisionExhausted { .. } | Error::BetaNotSeparated => 3,
        Error::Inconsistent(_) => 1,
        _ => 2,
    }
}

impl RunConfig {
    fn validate(&self) -> Result<CostFunction, Error> {
        if !(24..=1 << 16).contains(&self.precision_bits) {
            return Err(Error::InvalidParameter(format!(
                "precision must be between 24 and 65536 bits, got {}",
                self.precision_bits
            )));
        }
        if self.digit_bound == Some(0) {
            return Err(Error::InvalidParameter("digit bound must be >= 1".into()));
        }
        CostFunction::from_spec(&self.cost)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let u = match cli.config.validate() {
        Ok(u) => u,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    set_working_precision(cli.config.precision_bits);
    match run(&cli.command, &cli.config, &u) {
        Ok(ok) => ExitCode::from(if ok { 0 } else { 1 }),
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Returns `false` when the command ran but found a failure.
fn run(cmd: &Command, cfg: &RunConfig, u: &CostFunction) -> Result<bool, Failure> {
    match cmd {
        Command::Eval { input } => cmd_eval(input, cfg, u),
        Command::Scan => cmd_scan(cfg, u),
        Command::Check => cmd_check(cfg, u),
        Command::Counterexample { a } => cmd_counterexample(a, cfg),
        Command::Divergence { r, eps, threshold } => cmd_divergence(r, eps, *threshold, cfg),
        Command::Verify { grid } => cmd_verify(*grid, cfg),
    }
}

enum Input {
    Cf(CfDigits),
    Surd(QuadraticSurd),
}

fn parse_input(text: &str) -> Result<Input, Error> {
    if text.contains("sqrt") {
        Ok(Input::Surd(text.parse()?))
    } else {
        Ok(Input::Cf(text.parse()?))
    }
}

fn cmd_eval(input: &str, cfg: &RunConfig, u: &CostFunction) -> Result<bool, Failure> {
    let parsed = parse_input(input)?;
    let exact_target = match (&parsed, cfg.enclosure_only) {
        (_, true) => None,
        (Input::Surd(x), false) => Some(x.clone()),
        (Input::Cf(cf), false) if cf.kind() == CfKind::EventuallyPeriodic => Some(QuadraticSurd::from_periodic_cf(cf)?),
        _ => None,
    };
    if let Some(x) = exact_target {
        let cf = cf_of_quadratic(&x, MAX_ORBIT)?;
        let v = evaluate_exact(&x, u, cfg.precision_bits)?;
        let row: Row = vec![
            ("record", "exact".into()),
            ("input", input.into()),
            ("cf", cf.to_string().into()),
            ("surd", x.to_string().into()),
            ("cost", v.cost_name.clone().into()),
            ("value", Cell::float(&v.value, Round::Nearest)),
            ("error", Cell::float(&v.error, Round::Up)),
            ("lo", Cell::lo(&v.enclosure)),
            ("hi", Cell::hi(&v.enclosure)),
            ("preperiod_len", v.preperiod_len.into()),
            ("period_len", v.period_len.into()),
            ("precision_bits", u64::from(cfg.precision_bits).into()),
        ];
        write_rows(cfg.format, &[row])?;
        return Ok(true);
    }
    let cf = match parsed {
        Input::Cf(cf) => cf,
        Input::Surd(x) => cf_of_quadratic(&x, MAX_ORBIT)?,
    };
    let cf = match cfg.digit_bound {
        Some(m) if cf.kind() == CfKind::Stream => cf.with_digit_bound(Some(m))?,
        _ => cf,
    };
    let e = enclosure(&cf, cfg.depth, u)?;
    let row: Row = vec![
        ("record", "enclosure".into()),
        ("input", input.into()),
        ("cf", cf.to_string().into()),
        ("cost", e.cost_name.clone().into()),
        ("depth", e.depth_k.into()),
        ("digit_bound", Cell::opt(e.digit_bound)),
        ("lo", Cell::lo(&e.value)),
        ("hi", Cell::hi(&e.value)),
        ("partial_lo", Cell::lo(&e.partial)),
        ("partial_hi", Cell::hi(&e.partial)),
        ("tail_bound", Cell::float(&e.tail_bound, Round::Up)),
        ("precision_bits", u64::from(cfg.precision_bits).into()),
    ];
    write_rows(cfg.format, &[row])?;
    Ok(true)
}

fn cmd_scan(cfg: &RunConfig, u: &CostFunction) -> Result<bool, Failure> {
    let bound = cfg.digit_bound.unwrap_or(10);
    let records = scan_minimum(cfg.samples, cfg.depth, bound, cfg.seed, u)?;
    let rows: Vec<Row> = records
        .iter()
        .map(|r| {
            vec![
                ("record", "scan".into()),
                ("x", r.x_descr.clone().into()),
                ("sample_index", Cell::opt(r.sample_index)),
                ("seed", Cell::opt(r.seed)),
                ("first_digit", r.first_digit.into()),
                ("depth", r.depth_k.into()),
                ("digit_bound", Cell::opt(r.phi.digit_bound)),
                ("x_lo", Cell::lo(&r.x_enclosure)),
                ("x_hi", Cell::hi(&r.x_enclosure)),
                ("phi_lo", Cell::lo(&r.phi.value)),
                ("phi_hi", Cell::hi(&r.phi.value)),
                ("separation", Cell::float(&r.separation, Round::Down)),
                ("status", r.status.as_str().into()),
            ]
        })
        .collect();
    write_rows(cfg.format, &rows)?;
    let violations = records.iter().filter(|r| r.status == ScanStatus::Violation).count();
    let above = records.iter().filter(|r| r.status == ScanStatus::Above).count();
    eprintln!(
        "scanned {} points: {} above, {} not separated, {} violations",
        records.len(),
        above,
        records.len() - above - violations,
        violations
    );
    Ok(violations == 0)
}

fn report_row(record: &'static str, cost: &str, r: &HypothesisReport, value: Cell) -> Row {
    let (points, values, note) = match &r.witness {
        Some(w) => (Cell::Nums(w.points.clone()), Cell::Nums(w.values.clone()), Cell::Str(w.note.clone())),
        None => (Cell::Nums(vec![]), Cell::Nums(vec![]), Cell::Null),
    };
    vec![
        ("record", record.into()),
        ("cost", cost.into()),
        ("condition", r.condition.as_str().into()),
        ("verdict", r.verdict.as_str().into()),
        ("grid", r.grid.clone().into()),
        ("value", value),
        ("witness_points", points),
        ("witness_values", values),
        ("note", note),
    ]
}

fn cmd_check(cfg: &RunConfig, u: &CostFunction) -> Result<bool, Failure> {
    let reports = check_all(u, &GridConfig::default());
    let rows: Vec<Row> = reports.iter().map(|r| report_row("check", u.name(), r, Cell::Null)).collect();
    write_rows(cfg.format, &rows)?;
    Ok(reports.iter().all(|r| r.verdict != brjuno::Verdict::FailsWithWitness))
}

fn cmd_verify(grid: usize, cfg: &RunConfig) -> Result<bool, Failure> {
    if grid < 3 {
        return Err(Error::InvalidParameter("grid needs at least 3 points".into()).into());
    }
    let reports = verify_f_monotone(grid);
    let g61 = brjuno::extremal::g_of(0.61)?;
    let rows: Vec<Row> = reports
        .iter()
        .map(|r| {
            let value = match r.condition {
                brjuno::cost::ConditionId::GPositiveAt061 => Cell::Num(g61),
                _ => Cell::Null,
            };
            report_row("verify", "log", r, value)
        })
        .collect();
    write_rows(cfg.format, &rows)?;
    Ok(reports.iter().all(HypothesisReport::passed))
}

fn cmd_counterexample(a: &[f64], cfg: &RunConfig) -> Result<bool, Failure> {
    let mut rows = Vec::new();
    let mut ok = true;
    for &a in a {
        let c = counterexample_power(a)?;
        let agree = c.solver_agreement <= 1e-10;
        ok &= c.gap_certified() && agree;
        rows.push(vec![
            ("record", "counterexample".into()),
            ("a", a.into()),
            ("psi_theta", c.psi_theta.mid_f64().into()),
            ("psi_theta_prime", c.psi_theta_prime.mid_f64().into()),
            ("gap", c.gap.mid_f64().into()),
            ("gap_lo", Cell::lo(&c.gap)),
            ("psi_theta_solver", Cell::float(&c.psi_theta_solver, Round::Nearest)),
            ("psi_theta_prime_solver", Cell::float(&c.psi_theta_prime_solver, Round::Nearest)),
            ("solver_agreement", c.solver_agreement.into()),
            ("gap_certified", c.gap_certified().into()),
        ]);
    }
    write_rows(cfg.format, &rows)?;
    Ok(ok)
}

fn parse_rational(text: &str) -> Result<(i64, i64), Error> {
    let bad = || Error::InvalidParameter(format!("expected a rational `p/q`, got `{text}`"));
    match text.split_once('/') {
        Some((p, q)) => Ok((p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?)),
        None => Ok((text.trim().parse().map_err(|_| bad())?, 1)),
    }
}

fn cmd_divergence(r: &str, eps: &[f64], threshold: Option<f64>, cfg: &RunConfig) -> Result<bool, Failure> {
    let (p, q) = parse_rational(r)?;
    let points = divergence_probe(p, q, eps, cfg.depth)?;
    let rows: Vec<Row> = points
        .iter()
        .map(|pt| {
            vec![
                ("record", "divergence".into()),
                ("r", r.trim().into()),
                ("eps", pt.eps.into()),
                ("side", i64::from(pt.side).into()),
                ("x", pt.x.to_string().into()),
                ("depth", cfg.depth.into()),
                ("lower_bound", Cell::float(&pt.lower_bound, Round::Down)),
            ]
        })
        .collect();
    write_rows(cfg.format, &rows)?;
    Ok(match (threshold, points.last()) {
        (Some(t), Some(last)) => last.lower_bound > t,
        _ => true,
    })
}
