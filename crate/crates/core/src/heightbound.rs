//! Upper bounds on the logarithmic height of `H_D`, and the bit precision
//! derived from them.
//!
//! Heights are kept in natural-log units; bits appear only at the boundary.

use std::fmt;

use rug::float::Round;
use rug::ops::{AddAssignRound, MulAssignRound};
use rug::{Float, Integer, Rational};
use thiserror::Error;

use crate::bigfloat::{BigReal, Precision};
use crate::classgroup::{ClassGroupList, Discriminant};

/// Precision at which bounds are evaluated before rounding up.
const EVAL_BITS: u32 = 53 + 64;

/// Reference values, 30 significant digits.
pub mod constants {
    /// `sqrt(3) * pi`
    pub const C1: &str = "5.44139809270265355178223477293";
    /// `4 gamma c1 + 2 c5`
    pub const C2: &str = "18.5873025546971490332660888287";
    /// `c1 c6 + 2 gamma c5`
    pub const C3: &str = "17.4421542841757159441262112889";
    /// `c1 (gamma + 1) + c5`
    pub const C4: &str = "11.5941891519779331557482960431";
    /// `ln(2 k2)`
    pub const C5: &str = "3.01193084120198469129907812602";
    /// `2 k3 + 2 ln 2 + 2 gamma^2`
    pub const C6: &str = "2.56645198898796463589776351802";
    /// `744 + sum_{v >= 1} e^{4 pi sqrt v} / (sqrt 2 v^{3/4}) e^{-pi sqrt 3 v}`
    pub const K1: &str = "2114.56624994520450204190268451";
    /// `1 + k1 e^{-pi sqrt 3}`
    pub const K2: &str = "10.1633047572306611816487194986";
    /// `(ln^2 3 - ln 2) / 2`
    pub const K3: &str = "0.256900890126318334213273501196";
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("safety factor {0} is below 1")]
    SafetyFactorBelowOne(Rational),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeightMode {
    Proven,
    Heuristic,
}

impl fmt::Display for HeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeightMode::Proven => "proven",
            HeightMode::Heuristic => "heuristic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightBound {
    natural_log_height: BigReal,
    bits: u64,
    mode: HeightMode,
}

impl HeightBound {
    /// Wraps a height in nats; `bits` is derived by rounding up.
    pub fn from_nats(natural_log_height: BigReal, mode: HeightMode) -> Self {
        let prec = natural_log_height.prec();
        let ln2 = crate::bigfloat::ln2_const(prec);
        let mut q = Float::with_val(prec.bits(), natural_log_height.as_float() / ln2.as_float());
        q.mul_assign_round(1, Round::Up);
        let bits = if q.is_sign_negative() {
            0
        } else {
            q.ceil()
                .to_integer()
                .and_then(|i| i.to_u64())
                .unwrap_or(u64::MAX)
        };
        HeightBound {
            natural_log_height,
            bits,
            mode,
        }
    }

    pub fn natural_log_height(&self) -> &BigReal {
        &self.natural_log_height
    }

    pub fn nats_f64(&self) -> f64 {
        self.natural_log_height.to_f64()
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn mode(&self) -> HeightMode {
        self.mode
    }
}

/// Inflation of a height estimate into a working precision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecisionPolicy {
    safety_factor: Rational,
    guard_bits: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy {
            safety_factor: Rational::from((101, 100)),
            guard_bits: 32,
        }
    }
}

impl PrecisionPolicy {
    pub fn new(safety_factor: Rational, guard_bits: u32) -> Result<Self, PolicyError> {
        if safety_factor < 1 {
            return Err(PolicyError::SafetyFactorBelowOne(safety_factor));
        }
        Ok(PrecisionPolicy {
            safety_factor,
            guard_bits,
        })
    }

    pub fn safety_factor(&self) -> &Rational {
        &self.safety_factor
    }

    pub fn guard_bits(&self) -> u32 {
        self.guard_bits
    }

    /// A policy with the safety factor scaled by `factor`, used on retries.
    pub fn scaled(&self, factor: &Rational) -> Self {
        PrecisionPolicy {
            safety_factor: Rational::from(&self.safety_factor * factor),
            guard_bits: self.guard_bits,
        }
    }
}

/// The constants of the bound, recomputed from their definitions.
#[derive(Debug, Clone)]
pub struct HeightConstants {
    pub gamma: Float,
    pub c1: Float,
    pub c2: Float,
    pub c3: Float,
    pub c4: Float,
    pub c5: Float,
    pub c6: Float,
    pub k1: Float,
    pub k2: Float,
    pub k3: Float,
}

impl HeightConstants {
    pub fn compute(bits: u32) -> Self {
        let w = bits + 32;
        let f = |v: Float| Float::with_val(w, v);
        let pi = crate::bigfloat::pi_const(Precision::at_least(w)).into_float();
        let gamma = crate::bigfloat::euler_gamma(Precision::at_least(w)).into_float();
        let ln2 = Float::with_val(w, rug::float::Constant::Log2);
        let sqrt3 = f(Float::with_val(w, 3).sqrt());
        let c1 = f(sqrt3.clone() * &pi);
        let e_pi_sqrt3 = f(Float::with_val(w, -&c1).exp());

        // terms peak near v = 5 and then decay like e^{-5.4 v + 12.6 sqrt v}
        let mut k1 = Float::with_val(w, 744);
        let sqrt2 = f(Float::with_val(w, 2).sqrt());
        let eps = Float::with_val(w, Float::i_exp(1, -(w as i32) - 16));
        let mut v = 1u32;
        loop {
            let vf = Float::with_val(w, v);
            let num = f(Float::with_val(w, 4 * pi.clone() * vf.clone().sqrt())
                - Float::with_val(w, &c1 * &vf))
            .exp();
            let den = f(sqrt2.clone() * Float::with_val(w, vf.clone().sqrt() * vf.sqrt().sqrt()));
            let term = f(num / den);
            k1 += &term;
            if v > 10 && term < eps {
                break;
            }
            v += 1;
        }
        let k2 = f(Float::with_val(w, &k1 * &e_pi_sqrt3) + 1u32);
        let c5 = f(Float::with_val(w, 2 * k2.clone()).ln());
        let ln3 = f(Float::with_val(w, 3).ln());
        let k3 = f((Float::with_val(w, ln3.square_ref()) - &ln2) / 2u32);
        let c6 = f(Float::with_val(w, 2 * k3.clone())
            + Float::with_val(w, 2 * ln2.clone())
            + Float::with_val(w, 2 * gamma.clone().square()));
        let c2 =
            f(Float::with_val(w, 4 * gamma.clone() * &c1) + Float::with_val(w, 2 * c5.clone()));
        let c3 = f(Float::with_val(w, &c1 * &c6) + Float::with_val(w, 2 * gamma.clone() * &c5));
        let c4 = f(Float::with_val(w, c1.clone() * Float::with_val(w, &gamma + 1u32)) + &c5);
        HeightConstants {
            gamma,
            c1,
            c2,
            c3,
            c4,
            c5,
            c6,
            k1,
            k2,
            k3,
        }
    }
}

fn parse(s: &str, bits: u32) -> Float {
    Float::with_val(bits, Float::parse(s).expect("valid literal"))
}

/// `N = sqrt(|D|/3)` and `ln N` at `bits`.
fn n_and_log(d: &Discriminant, bits: u32) -> (Float, Float) {
    let n = Float::with_val(bits, Float::with_val(bits, d.abs()) / 3u32).sqrt();
    let ln = Float::with_val(bits, n.ln_ref());
    (n, ln)
}

/// Rounds a positive value up by a few ulps so truncation cannot undercut it.
fn nudge_up(mut x: Float) -> Float {
    let ulps = Float::with_val(
        x.prec(),
        Float::i_exp(1, x.get_exp().unwrap_or(0) - x.prec() as i32 + 4),
    );
    x.add_assign_round(ulps, Round::Up);
    x
}

/// `c5 h + c1 N (ln^2 N + 4 gamma ln N + c6 + (ln N + gamma + 1)/N)` with
/// `N = sqrt(|D|/3)`.
pub fn proven_bound(d: &Discriminant, h: usize) -> HeightBound {
    let b = EVAL_BITS;
    let gamma = crate::bigfloat::euler_gamma(Precision::at_least(b)).into_float();
    let c1 = parse(constants::C1, b);
    let c5 = parse(constants::C5, b);
    let c6 = parse(constants::C6, b);
    let (n, ln) = n_and_log(d, b);
    let mut inner = Float::with_val(b, ln.square_ref());
    inner += Float::with_val(b, 4 * gamma.clone() * &ln);
    inner += &c6;
    inner += Float::with_val(b, Float::with_val(b, &ln + &gamma) + 1u32) / &n;
    let mut total = Float::with_val(b, c1 * n * inner);
    total += Float::with_val(b, c5 * h as u64);
    HeightBound::from_nats(BigReal::from_float(nudge_up(total)), HeightMode::Proven)
}

/// The closed form `c1 N ln^2 N + c2 N ln N + c3 N + c1 ln N + c4`, which
/// dominates [`proven_bound`] once `h` is eliminated.
pub fn proven_bound_closed_form(d: &Discriminant) -> f64 {
    let b = EVAL_BITS;
    let (n, ln) = n_and_log(d, b);
    let c = |s| parse(s, b);
    let mut t = Float::with_val(
        b,
        c(constants::C1) * Float::with_val(b, &n * Float::with_val(b, ln.square_ref())),
    );
    t += Float::with_val(b, c(constants::C2) * Float::with_val(b, &n * &ln));
    t += Float::with_val(b, c(constants::C3) * &n);
    t += Float::with_val(b, c(constants::C1) * &ln);
    t += c(constants::C4);
    t.to_f64()
}

/// `pi sqrt|D| sum 1/A` over the reduced forms.
pub fn heuristic_estimate(d: &Discriminant, forms: &ClassGroupList) -> HeightBound {
    let b = EVAL_BITS;
    let mut sum = Rational::new();
    for f in forms.forms() {
        sum += Rational::from((Integer::from(1), f.a.clone()));
    }
    let pi = crate::bigfloat::pi_const(Precision::at_least(b)).into_float();
    let root = Float::with_val(b, d.abs()).sqrt();
    let total = Float::with_val(b, pi * root) * Float::with_val(b, &sum);
    HeightBound::from_nats(
        BigReal::from_float(Float::with_val(b, total)),
        HeightMode::Heuristic,
    )
}

/// The larger of the two bounds.
pub fn default_bound(d: &Discriminant, forms: &ClassGroupList) -> HeightBound {
    let proven = proven_bound(d, forms.h());
    let heuristic = heuristic_estimate(d, forms);
    if heuristic.natural_log_height.as_float() > proven.natural_log_height.as_float() {
        heuristic
    } else {
        proven
    }
}

/// `ceil(bits * safety_factor) + guard_bits`, at least 53.
pub fn working_precision(bound: &HeightBound, policy: &PrecisionPolicy) -> Precision {
    let scaled = Rational::from(&policy.safety_factor * bound.bits);
    let bits = scaled
        .ceil()
        .numer()
        .to_u64()
        .unwrap_or(u64::MAX)
        .saturating_add(policy.guard_bits as u64);
    Precision::at_least(u32::try_from(bits).unwrap_or(u32::MAX))
}
