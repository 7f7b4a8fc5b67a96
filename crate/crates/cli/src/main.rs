use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hilbert_core::bigfloat::Precision;
use hilbert_core::classgroup::{Discriminant, EnumerationConfig};
use hilbert_core::engine::{
    benchmark_suite, compute_class_polynomial, format_bench_table, height_bounds,
    tree_scaling_ladder, verify, EngineError, Enumeration, PipelineConfig, Strategy,
    DEFAULT_PRIME_BITS, DEFAULT_TRIALS,
};
use hilbert_core::heightbound::PrecisionPolicy;
use rug::{Integer, Rational};

const EXIT_USAGE: u8 = 2;
const EXIT_ROUNDING: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Sparse,
    Multipoint,
    Agm,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Sparse => Strategy::Sparse,
            StrategyArg::Multipoint => Strategy::Multipoint,
            StrategyArg::Agm => Strategy::Agm,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EnumerationArg {
    Naive,
    Factored,
    /// GRH-conditional: closure of the classes of small split primes.
    Prime,
}

impl From<EnumerationArg> for Enumeration {
    fn from(e: EnumerationArg) -> Self {
        match e {
            EnumerationArg::Naive => Enumeration::Naive,
            EnumerationArg::Factored => Enumeration::Factored,
            EnumerationArg::Prime => Enumeration::Prime,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputArg {
    Text,
    Structured,
}

/// Hilbert class polynomials of imaginary quadratic discriminants.
#[derive(Debug, Parser)]
#[command(name = "hilbert", version)]
struct Args {
    /// Negative discriminant, congruent to 0 or 1 modulo 4.
    #[arg(
        short = 'D',
        long,
        allow_hyphen_values = true,
        required_unless_present = "bench"
    )]
    discriminant: Option<String>,

    #[arg(long, value_enum, default_value = "sparse")]
    strategy: StrategyArg,

    /// Class group enumeration; `prime` is GRH-conditional.
    #[arg(long, value_enum, default_value = "factored")]
    enumeration: EnumerationArg,

    /// Working precision in bits, replacing the one derived from the height bounds.
    #[arg(long)]
    precision: Option<u32>,

    /// Factor applied to the height bound, at least 1.
    #[arg(long, default_value = "1.01")]
    safety_factor: String,

    #[arg(long, default_value_t = 32)]
    guard_bits: u32,

    /// Print the proven and heuristic height bounds and stop.
    #[arg(long)]
    emit_height_bound: bool,

    /// Number of CM primes to verify the result against.
    #[arg(long, default_value_t = 0)]
    verify: usize,

    #[arg(long, default_value_t = EnumerationConfig::default().seed)]
    seed: u64,

    #[arg(long, value_enum, default_value = "text")]
    output: OutputArg,

    /// Evaluate the multipoint strategy in this many chunks sorted by |q|.
    #[arg(long, value_name = "K")]
    chunked_multipoint: Option<usize>,

    /// File of discriminants, one per line; prints a timing table for all strategies.
    #[arg(long, value_name = "FILE")]
    bench: Option<String>,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

/// Exact value of a decimal such as `1.01`.
fn parse_decimal(s: &str) -> Option<Rational> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits: Integer = format!("{int}{frac}").parse().ok()?;
    let scale = Integer::from(Integer::u_pow_u(10, frac.len() as u32));
    Some(Rational::from((digits, scale)))
}

fn parse_discriminant(s: &str) -> Result<Discriminant, String> {
    let v: Integer = s
        .trim()
        .parse()
        .map_err(|_| format!("{s:?} is not an integer"))?;
    Discriminant::new(v).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let Some(factor) = parse_decimal(&args.safety_factor) else {
        return usage(format!("invalid safety factor {:?}", args.safety_factor));
    };
    let policy = match PrecisionPolicy::new(factor, args.guard_bits) {
        Ok(p) => p,
        Err(e) => return usage(e),
    };
    let config = PipelineConfig {
        strategy: args.strategy.into(),
        enumeration: args.enumeration.into(),
        policy,
        precision: args.precision,
        chunks: args.chunked_multipoint,
        seed: args.seed,
        ..Default::default()
    };

    if let Some(path) = &args.bench {
        return bench(path, &config);
    }
    let d = match parse_discriminant(args.discriminant.as_deref().unwrap_or_default()) {
        Ok(d) => d,
        Err(e) => return usage(e),
    };

    if args.emit_height_bound {
        let forms = config
            .enumeration
            .enumerate(&d, &EnumerationConfig { seed: config.seed });
        let (proven, heuristic, prec) = height_bounds(&forms, &config.policy);
        println!("D {} h {}", d.value(), forms.h());
        println!(
            "proven {:.6} nats {} bits",
            proven.nats_f64(),
            proven.bits()
        );
        println!(
            "heuristic {:.6} nats {} bits",
            heuristic.nats_f64(),
            heuristic.bits()
        );
        println!("precision {} bits", prec.bits());
        return ExitCode::SUCCESS;
    }

    let (poly, report) = match compute_class_polynomial(&d, &config) {
        Ok(r) => r,
        Err(e @ EngineError::RoundingFailed { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ROUNDING);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    eprintln!(
        "h = {}, precision {} bits, {} attempt(s), {:.3} s",
        report.h,
        report.precision.bits(),
        report.attempts,
        report.timings.total().as_secs_f64()
    );

    let mut verified = None;
    if args.verify > 0 {
        match verify(
            &d,
            poly.coeffs(),
            args.verify,
            DEFAULT_PRIME_BITS,
            DEFAULT_TRIALS,
            args.seed,
        ) {
            Ok(v) => {
                for (cm, verdict) in &v.results {
                    eprintln!("p = {} (U = {}, V = {}): {verdict}", cm.p, cm.u, cm.v);
                }
                verified = Some(v.passed() && v.results.len() == args.verify);
            }
            Err(e) => {
                eprintln!("error: {e}");
                verified = Some(false);
            }
        }
    }
    match args.output {
        OutputArg::Text => print!("{}", poly.to_text()),
        OutputArg::Structured => println!("{}", poly.to_json(verified)),
    }
    if verified == Some(false) {
        return ExitCode::from(EXIT_VERIFICATION);
    }
    ExitCode::SUCCESS
}

fn bench(path: &str, config: &PipelineConfig) -> ExitCode {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return usage(format!("{path}: {e}")),
    };
    let mut ds = Vec::new();
    for line in text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
    {
        match parse_discriminant(line) {
            Ok(d) => ds.push(d),
            Err(e) => return usage(format!("{path}: {e}")),
        }
    }
    let reports = match benchmark_suite(&ds, &Strategy::ALL, config) {
        Ok(r) => r,
        Err(e @ EngineError::RoundingFailed { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ROUNDING);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut out = format_bench_table(&reports);
    let ladder = tree_scaling_ladder(
        &[64, 128, 256, 512],
        Precision::at_least(256),
        3,
        config.seed,
    );
    let _ = writeln!(out, "poly from roots, 256 bits");
    for (i, step) in ladder.iter().enumerate() {
        let ratio = i
            .checked_sub(1)
            .map(|j| {
                format!(
                    "{:.2}",
                    step.time.as_secs_f64() / ladder[j].time.as_secs_f64()
                )
            })
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "  h = {:<6} {:>10.4} s   ratio {ratio}",
            step.h,
            step.time.as_secs_f64()
        );
    }
    print!("{out}");
    ExitCode::SUCCESS
}
