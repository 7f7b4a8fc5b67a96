//! Dedekind's eta function and the `j`-invariant at points of the upper half
//! plane.
//!
//! Three evaluators are provided: the sparse pentagonal series for `eta` (with
//! `j` from the Weber function `f1`), the truncated `q`-expansion of `j`, and
//! Newton iteration on the AGM relation between `k'` and `tau`.

mod agm;
mod jseries;

use rug::{Float, Integer};
use thiserror::Error;

use crate::bigfloat::{self, cexp, csqrt, pi_const, BigComplex, BigReal, NumericError, Precision};
use crate::classgroup::{reduce_form, ClassGroupError, QuadForm, TransformWord, WordStep};

pub use agm::{
    eta_agm, eta_agm_at, j_agm, j_agm_at, j_from_lambda, kprime_newton, theta_kprime,
    AGM_IM_THRESHOLD,
};
pub use jseries::{j_coefficients, naive_j, naive_j_series, naive_j_terms, J_TERM_CAP};

/// Extra bits carried internally by the public evaluators.
pub const GUARD_BITS: u32 = 32;

#[derive(Debug, Error)]
pub enum ModEvalError {
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    ClassGroup(#[from] ClassGroupError),
    #[error("{0} has non-positive imaginary part")]
    NotInUpperHalfPlane(String),
    #[error("{0} is not in the fundamental domain")]
    OutsideFundamentalDomain(String),
    #[error("{0} is outside the domain of the AGM relation")]
    OutsideAgmDomain(String),
    #[error("{needed} series terms needed, cap is {cap}")]
    TermCapExceeded { needed: usize, cap: usize },
    #[error("Newton iteration for k' did not converge at tau = {0}")]
    NewtonDivergence(String),
    #[error("twelfth root does not match the series value of eta at tau = {0}")]
    BranchMismatch(String),
}

pub type Result<T, E = ModEvalError> = std::result::Result<T, E>;

/// The root `(-B + sqrt(D))/(2A)` of a positive definite form.
#[derive(Debug, Clone)]
pub struct TauPoint {
    form: QuadForm,
    tau: BigComplex,
    prec: Precision,
}

impl TauPoint {
    pub fn new(form: QuadForm, prec: Precision) -> Result<Self> {
        form.validate()?;
        let tau = form_root(&form, prec);
        Ok(TauPoint { form, tau, prec })
    }

    pub fn form(&self) -> &QuadForm {
        &self.form
    }

    pub fn tau(&self) -> &BigComplex {
        &self.tau
    }

    pub fn prec(&self) -> Precision {
        self.prec
    }

    pub fn with_prec(&self, prec: Precision) -> Self {
        TauPoint {
            form: self.form.clone(),
            tau: form_root(&self.form, prec),
            prec,
        }
    }

    /// The point `tau / 2`, as the root of `[4A, 2B, C] / gcd`.
    pub fn half(&self) -> Self {
        let f = &self.form;
        let (mut a, mut b, mut c) = (
            Integer::from(&f.a << 2),
            Integer::from(&f.b << 1),
            f.c.clone(),
        );
        let g = Integer::from(a.gcd_ref(&b)).gcd(&c);
        if g != 1 {
            a /= &g;
            b /= &g;
            c /= &g;
        }
        let form = QuadForm { a, b, c };
        TauPoint {
            tau: form_root(&form, self.prec),
            form,
            prec: self.prec,
        }
    }
}

pub(crate) fn form_root(f: &QuadForm, prec: Precision) -> BigComplex {
    let p = prec.bits();
    let neg_d = Integer::from(4 * Integer::from(&f.a * &f.c)) - Integer::from(f.b.square_ref());
    let two_a = Float::with_val(p, &f.a) * 2u32;
    let im = Float::with_val(p, neg_d).sqrt() / &two_a;
    let re = -Float::with_val(p, &f.b) / &two_a;
    BigComplex::from_floats(re, im)
}

/// Membership in the closed standard fundamental domain, with a small
/// tolerance for points computed on its boundary.
pub fn in_fundamental_domain(z: &BigComplex) -> bool {
    let (re, im) = z.to_f64();
    im > 0.0 && re.abs() <= 0.5 + 1e-9 && re * re + im * im >= 1.0 - 1e-9
}

fn describe(z: &BigComplex) -> String {
    let (re, im) = z.to_f64();
    format!("{re:.6}{im:+.6}i")
}

/// Reduces the point through its form, so the word is exact.
pub fn reduce_argument(tau: &TauPoint) -> Result<(BigComplex, TransformWord)> {
    let (g, word) = reduce_form(&tau.form)?;
    Ok((form_root(&g, tau.prec), word))
}

/// Floating-point reduction of an arbitrary point of the upper half plane.
pub fn reduce_complex(z: &BigComplex) -> Result<(BigComplex, TransformWord)> {
    if z.im_float().is_sign_negative() || z.im_float().is_zero() {
        return Err(ModEvalError::NotInUpperHalfPlane(describe(z)));
    }
    let prec = z.prec();
    let mut z = z.clone();
    let mut word = TransformWord::new();
    for _ in 0..100_000 {
        let shift = Float::with_val(prec.bits(), z.re_float() + 0.5f64).floor();
        let k = shift.to_integer().expect("finite");
        if k != 0 {
            let k = Integer::from(-k);
            z = z.add_real(&BigReal::from_integer(&k, prec));
            word.push_shift(k);
        }
        if z.norm_sqr().as_float() < &1u32 {
            z = z.recip()?.neg();
            word.push_s();
            continue;
        }
        return Ok((z, word));
    }
    Err(ModEvalError::OutsideFundamentalDomain(describe(&z)))
}

/// `eta(z_end) = zeta_24^root24 * halfpower * eta(tau_start)`.
#[derive(Debug, Clone)]
pub struct EtaMultiplier {
    pub root24: u32,
    pub halfpower: BigComplex,
}

impl EtaMultiplier {
    pub fn value(&self) -> BigComplex {
        &zeta24(self.root24, self.halfpower.prec()) * &self.halfpower
    }
}

/// `exp(2 pi i k / 24)`.
pub fn zeta24(k: u32, prec: Precision) -> BigComplex {
    let mut angle = pi_const(prec).into_float();
    angle *= k % 24;
    angle /= 12u32;
    let (sin, cos) = angle.sin_cos(Float::new(prec.bits()));
    BigComplex::from_floats(cos, sin)
}

fn add_shift(root24: u32, k: &Integer) -> u32 {
    (root24 + k.mod_u(24)) % 24
}

/// Composes `eta(z + 1) = zeta_24 eta(z)` and `eta(-1/z) = sqrt(-i z) eta(z)`
/// along `word`, starting at `tau_start`.
pub fn eta_multiplier(word: &TransformWord, tau_start: &BigComplex) -> Result<EtaMultiplier> {
    let prec = tau_start.prec();
    let mut z = tau_start.clone();
    let mut root24 = 0;
    let mut halfpower = BigComplex::one(prec);
    for step in word.steps() {
        match step {
            WordStep::Shift(k) => {
                root24 = add_shift(root24, k);
                z = z.add_real(&BigReal::from_integer(k, prec));
            }
            WordStep::S => {
                halfpower *= &csqrt(&z.mul_i().neg());
                z = z.recip()?.neg();
            }
        }
    }
    Ok(EtaMultiplier { root24, halfpower })
}

/// The same multiplier, with every intermediate point recomputed from the
/// intermediate form instead of carried through floating-point steps.
fn form_multiplier(form: &QuadForm, word: &TransformWord, prec: Precision) -> EtaMultiplier {
    let mut f = form.clone();
    let mut root24 = 0;
    let mut halfpower = BigComplex::one(prec);
    for step in word.steps() {
        match step {
            WordStep::Shift(s) => {
                root24 = add_shift(root24, s);
                let t = Integer::from(&f.a * s);
                f.c += Integer::from(&t - &f.b) * s;
                f.b -= t * 2u32;
            }
            WordStep::S => {
                halfpower *= &csqrt(&form_root(&f, prec).mul_i().neg());
                std::mem::swap(&mut f.a, &mut f.c);
                f.b = -std::mem::take(&mut f.b);
            }
        }
    }
    EtaMultiplier { root24, halfpower }
}

/// Pentagonal exponents `v(3v-1)/2` and `v(3v+1)/2` for `v = 1..=count`.
pub fn pentagonal_exponents(count: u64) -> Vec<(u64, u64)> {
    (1..=count)
        .map(|v| (v * (3 * v - 1) / 2, v * (3 * v + 1) / 2))
        .collect()
}

/// `1 + sum (-1)^v (q^{v(3v-1)/2} + q^{v(3v+1)/2})` over exponents below
/// `max_exponent`, four multiplications per `v`.
pub(crate) fn pentagonal_sum(q: &BigComplex, max_exponent: u64) -> BigComplex {
    let mut sum = BigComplex::one(q.prec());
    if max_exponent <= 1 {
        return sum;
    }
    let q2 = q.square();
    let mut q_v = q.clone();
    let mut q_2v1 = q.clone();
    let mut q_minus = q.clone();
    let mut q_plus = q2.clone();
    let mut v = 1u64;
    loop {
        let e_minus = v * (3 * v - 1) / 2;
        if e_minus >= max_exponent {
            return sum;
        }
        let odd = v % 2 == 1;
        let mut add = |t: &BigComplex| if odd { sum -= t } else { sum += t };
        add(&q_minus);
        if e_minus + v < max_exponent {
            add(&q_plus);
        }
        v += 1;
        q_v *= q;
        q_2v1 *= &q2;
        q_minus = &q_plus * &q_2v1;
        q_plus = &q_minus * &q_v;
    }
}

/// First pentagonal exponent that may be dropped: `|q|^e <= 2^-(prec+8)`.
pub(crate) fn eta_truncation(prec: Precision, im_z: f64) -> u64 {
    let bound =
        (prec.bits() as f64 + 8.0) * std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI * im_z);
    bound.floor() as u64 + 2
}

/// `q^{1/24}` and `q` at `z`.
pub(crate) fn q_powers(z: &BigComplex) -> Result<(BigComplex, BigComplex)> {
    let pi = pi_const(z.prec());
    let q24 = cexp(&z.mul_i().mul_real(&pi).div_u64(12))?;
    let mut q = &q24.square() * &q24;
    for _ in 0..3 {
        q = q.square();
    }
    Ok((q24, q))
}

/// `eta(z)` for `z` in the fundamental domain, from the pentagonal series.
pub fn eta_sparse(z: &BigComplex, prec: Precision) -> Result<BigComplex> {
    eta_sparse_with_terms(z, prec, None)
}

/// [`eta_sparse`] with an explicit exponent cutoff in place of the default.
pub fn eta_sparse_with_terms(
    z: &BigComplex,
    prec: Precision,
    max_exponent: Option<u64>,
) -> Result<BigComplex> {
    if !in_fundamental_domain(z) {
        return Err(ModEvalError::OutsideFundamentalDomain(describe(z)));
    }
    let w = prec.plus(16);
    let z = z.with_prec(w);
    let (q24, q) = q_powers(&z)?;
    let cutoff = max_exponent.unwrap_or_else(|| eta_truncation(prec, z.im().to_f64()));
    Ok((&q24 * &pentagonal_sum(&q, cutoff)).with_prec(prec))
}

/// `eta(tau)` via reduction of the form, the series at the reduced point and
/// the inverse multiplier.
pub fn eta_at(tau: &TauPoint) -> Result<BigComplex> {
    let w = tau.prec.plus(GUARD_BITS);
    let (g, word) = reduce_form(&tau.form)?;
    let z = form_root(&g, w);
    let m = form_multiplier(&tau.form, &word, w).value();
    let e = eta_sparse(&z, w)?;
    Ok(bigfloat::div(&e, &m)?.with_prec(tau.prec))
}

/// A form's root moved into the fundamental domain, with `q^{1/24}`, `q` and
/// the multiplier relating `eta` at the two points.
#[derive(Debug, Clone)]
pub(crate) struct ReducedPoint {
    pub z: BigComplex,
    pub q24: BigComplex,
    pub q: BigComplex,
    pub multiplier: BigComplex,
}

pub(crate) fn reduced_point(form: &QuadForm, prec: Precision) -> Result<ReducedPoint> {
    let (g, word) = reduce_form(form)?;
    let z = form_root(&g, prec);
    let multiplier = form_multiplier(form, &word, prec).value();
    let (q24, q) = q_powers(&z)?;
    Ok(ReducedPoint {
        z,
        q24,
        q,
        multiplier,
    })
}

/// `eta(z)` for any `z` in the upper half plane.
pub fn eta_at_point(z: &BigComplex, prec: Precision) -> Result<BigComplex> {
    let extra = z.exponent().unwrap_or(0).max(0) as u32;
    let w = prec.plus(GUARD_BITS + extra);
    let start = z.with_prec(w);
    let (reduced, word) = reduce_complex(&start)?;
    let m = eta_multiplier(&word, &start)?.value();
    let e = eta_sparse(&reduced, w)?;
    Ok(bigfloat::div(&e, &m)?.with_prec(prec))
}

/// `j = ((f1^24 + 16) / f1^8)^3`.
pub fn j_from_weber_f1(f1: &BigComplex) -> Result<BigComplex> {
    let mut f8 = f1.clone();
    for _ in 0..3 {
        f8 = f8.square();
    }
    let f24 = &f8.square() * &f8;
    let t = bigfloat::div(&f24.add_i64(16), &f8)?;
    Ok(&t.square() * &t)
}

/// `j(tau)` from `eta(tau/2) / eta(tau)`.
pub fn j_from_eta(tau: &TauPoint) -> Result<BigComplex> {
    let w = tau.prec.plus(GUARD_BITS);
    let t = tau.with_prec(w);
    let e1 = eta_at(&t)?;
    let e2 = eta_at(&t.half())?;
    Ok(j_from_weber_f1(&bigfloat::div(&e2, &e1)?)?.with_prec(tau.prec))
}

/// `j(z)` for any `z` in the upper half plane.
pub fn j_at_point(z: &BigComplex, prec: Precision) -> Result<BigComplex> {
    let w = prec.plus(GUARD_BITS);
    let (z, _) = reduce_complex(&z.with_prec(w.plus(z.exponent().unwrap_or(0).max(0) as u32)))?;
    let z = z.with_prec(w);
    let e1 = eta_sparse(&z, w)?;
    let e2 = eta_at_point(&z.mul_pow2(-1), w)?;
    Ok(j_from_weber_f1(&bigfloat::div(&e2, &e1)?)?.with_prec(prec))
}

#[cfg(test)]
mod tests;
