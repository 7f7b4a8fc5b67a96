//! The full computation: class group, working precision, conjugates, product
//! tree and rounding, with verification modulo CM primes.

mod bench;
mod conjugates;
mod verify;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rug::{Float, Integer, Rational};
use thiserror::Error;

use crate::bigfloat::{BigReal, NumericError, Precision};
use crate::classgroup::{
    enumerate_factored, enumerate_naive, enumerate_prime_generated, ClassGroupError,
    ClassGroupList, Discriminant, EnumerationConfig,
};
use crate::heightbound::{
    default_bound, heuristic_estimate, proven_bound, working_precision, HeightBound,
    PrecisionPolicy,
};
use crate::modeval::ModEvalError;
use crate::polyops::{poly_from_roots, round_to_integers, PolyError, RoundingPart};

pub use bench::{benchmark_suite, format_bench_table, tree_scaling_ladder, LadderStep};
pub use conjugates::{conjugates, eta_polynomial, max_relative_difference_log2, ConjugateTimings};
pub use verify::{
    cm_primes, find_cm_prime, verify, verify_mod_p, CmPrime, Verdict, VerificationReport,
    DEFAULT_PRIME_BITS, DEFAULT_TRIALS, PRIME_SEARCH_CAP,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    ClassGroup(#[from] ClassGroupError),
    #[error(transparent)]
    ModEval(#[from] ModEvalError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("rounding failed after {attempts} attempts (last precision {precision} bits): coefficient of degree {degree}: {part}, distance {distance:e}")]
    RoundingFailed {
        attempts: u32,
        precision: u32,
        degree: usize,
        distance: f64,
        part: RoundingPart,
    },
    #[error("rounded polynomial is not monic of degree {h}")]
    NotMonic { h: usize },
    #[error("measured height {measured:.3} nats exceeds the proven bound {bound:.3}")]
    HeightViolation { measured: f64, bound: f64 },
    #[error("no CM prime of at least {min_bits} bits found for D = {d}")]
    NoCmPrime { d: String, min_bits: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Sparse,
    Multipoint,
    Agm,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Sparse, Strategy::Multipoint, Strategy::Agm];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Sparse => "sparse",
            Strategy::Multipoint => "multipoint",
            Strategy::Agm => "agm",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Enumeration {
    Naive,
    Factored,
    /// Closure of the classes of small split primes; complete under GRH.
    Prime,
}

impl Enumeration {
    pub const ALL: [Enumeration; 3] = [
        Enumeration::Naive,
        Enumeration::Factored,
        Enumeration::Prime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Enumeration::Naive => "naive",
            Enumeration::Factored => "factored",
            Enumeration::Prime => "prime",
        }
    }

    pub fn enumerate(self, d: &Discriminant, config: &EnumerationConfig) -> ClassGroupList {
        match self {
            Enumeration::Naive => enumerate_naive(d),
            Enumeration::Factored => enumerate_factored(d, config),
            Enumeration::Prime => enumerate_prime_generated(d, config),
        }
    }
}

impl fmt::Display for Enumeration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Enumeration {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Enumeration::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown enumeration {s:?}"))
    }
}

/// Settings of one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub strategy: Strategy,
    pub enumeration: Enumeration,
    pub policy: PrecisionPolicy,
    /// Replaces the precision derived from the height bounds.
    pub precision: Option<u32>,
    /// Precision increases by 5/4 after each rounding failure, at most this
    /// many times.
    pub max_retries: u32,
    /// Number of magnitude-sorted chunks for multipoint evaluation.
    pub chunks: Option<usize>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            strategy: Strategy::Sparse,
            enumeration: Enumeration::Factored,
            policy: PrecisionPolicy::default(),
            precision: None,
            max_retries: 3,
            chunks: None,
            seed: EnumerationConfig::default().seed,
        }
    }
}

/// A monic integer polynomial `prod (X - j(tau_i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPolynomial {
    discriminant: Discriminant,
    coeffs: Vec<Integer>,
    used_precision: Precision,
    measured_height_nats: BigReal,
    strategy: Strategy,
}

impl ClassPolynomial {
    pub fn discriminant(&self) -> &Discriminant {
        &self.discriminant
    }

    pub fn h(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Ascending degree; the last entry is 1.
    pub fn coeffs(&self) -> &[Integer] {
        &self.coeffs
    }

    pub fn used_precision(&self) -> Precision {
        self.used_precision
    }

    /// `ln max |c_i|`.
    pub fn measured_height_nats(&self) -> &BigReal {
        &self.measured_height_nats
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// `D h`, then the coefficients from degree `h` down to 0, one per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.discriminant.value(), self.h());
        for c in self.coeffs.iter().rev() {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }

    /// A single JSON object; coefficients ascending, as decimal strings.
    pub fn to_json(&self, verified: Option<bool>) -> String {
        let value = serde_json::json!({
            "D": self.discriminant.value().to_string().parse::<i64>().ok(),
            "h": self.h(),
            "precision_bits": self.used_precision.bits(),
            "strategy": self.strategy.name(),
            "coefficients": self.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "height_nats": self.measured_height_nats.to_f64(),
            "verified": verified,
        });
        value.to_string()
    }
}

/// Height in nats of a coefficient list.
pub fn measured_height(coeffs: &[Integer]) -> BigReal {
    let max = coeffs
        .iter()
        .map(|c| c.clone().abs())
        .max()
        .unwrap_or_default();
    if max <= 1 {
        return BigReal::zero(Precision::at_least(64));
    }
    BigReal::from_float(Float::with_val(64, &max).ln())
}

/// Wall-clock time per phase of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub class_group: Duration,
    pub q_powers: Duration,
    pub eta_table: Duration,
    pub conjugates: Duration,
    pub tree: Duration,
    pub rounding: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.class_group
            + self.q_powers
            + self.eta_table
            + self.conjugates
            + self.tree
            + self.rounding
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub discriminant: Discriminant,
    pub h: usize,
    pub strategy: Strategy,
    pub enumeration: Enumeration,
    /// Precision of the successful attempt.
    pub precision: Precision,
    pub attempts: u32,
    pub timings: PhaseTimings,
    pub worst_rounding_distance: f64,
    pub measured_height_nats: f64,
    pub proven_bound_nats: f64,
    pub heuristic_nats: f64,
}

/// Proven bound, heuristic estimate and the working precision they give.
pub fn height_bounds(
    forms: &ClassGroupList,
    policy: &PrecisionPolicy,
) -> (HeightBound, HeightBound, Precision) {
    let d = forms.discriminant();
    let proven = proven_bound(d, forms.h());
    let heuristic = heuristic_estimate(d, forms);
    let prec = working_precision(&default_bound(d, forms), policy);
    (proven, heuristic, prec)
}

/// Computes `H_D` exactly.
pub fn compute_class_polynomial(
    d: &Discriminant,
    config: &PipelineConfig,
) -> Result<(ClassPolynomial, RunReport), EngineError> {
    let mut timings = PhaseTimings::default();
    let start = Instant::now();
    let forms = config
        .enumeration
        .enumerate(d, &EnumerationConfig { seed: config.seed });
    timings.class_group = start.elapsed();
    compute_from_forms(&forms, config, timings)
}

/// [`compute_class_polynomial`] for an already enumerated class group.
pub fn compute_from_forms(
    forms: &ClassGroupList,
    config: &PipelineConfig,
    mut timings: PhaseTimings,
) -> Result<(ClassPolynomial, RunReport), EngineError> {
    let d = forms.discriminant();
    let h = forms.h();
    let (proven, heuristic, derived) = height_bounds(forms, &config.policy);
    let mut prec = config.precision.map(Precision::at_least).unwrap_or(derived);
    let growth = Rational::from((5, 4));
    let mut attempts = 0;
    loop {
        attempts += 1;
        let (roots, t) = conjugates(forms.forms(), prec, config.strategy, config.chunks)?;
        timings.q_powers += t.q_powers;
        timings.eta_table += t.eta_table;
        timings.conjugates += t.conjugates;

        let start = Instant::now();
        let tree = poly_from_roots(&roots)?;
        timings.tree += start.elapsed();

        let start = Instant::now();
        let rounded = round_to_integers(tree.root());
        timings.rounding += start.elapsed();
        match rounded {
            Ok(r) => {
                if r.coeffs.len() != h + 1 || r.coeffs[h] != 1 {
                    return Err(EngineError::NotMonic { h });
                }
                let height = measured_height(&r.coeffs);
                let (measured, bound) = (height.to_f64(), proven.nats_f64());
                if height.as_float() > proven.natural_log_height().as_float() {
                    return Err(EngineError::HeightViolation { measured, bound });
                }
                let report = RunReport {
                    discriminant: d.clone(),
                    h,
                    strategy: config.strategy,
                    enumeration: config.enumeration,
                    precision: prec,
                    attempts,
                    timings,
                    worst_rounding_distance: r.worst_distance,
                    measured_height_nats: measured,
                    proven_bound_nats: bound,
                    heuristic_nats: heuristic.nats_f64(),
                };
                let poly = ClassPolynomial {
                    discriminant: d.clone(),
                    coeffs: r.coeffs,
                    used_precision: prec,
                    measured_height_nats: height,
                    strategy: config.strategy,
                };
                return Ok((poly, report));
            }
            Err(PolyError::InsufficientPrecision {
                degree,
                distance,
                part,
            }) => {
                if attempts > config.max_retries {
                    return Err(EngineError::RoundingFailed {
                        attempts,
                        precision: prec.bits(),
                        degree,
                        distance,
                        part,
                    });
                }
                let next = Rational::from(&growth * prec.bits()).ceil();
                prec = Precision::at_least(next.numer().to_u32().unwrap_or(u32::MAX));
            }
            Err(e) => return Err(e.into()),
        }
    }
}

#[cfg(test)]
mod tests;
