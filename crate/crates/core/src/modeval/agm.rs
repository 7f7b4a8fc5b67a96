//! `k'`, `eta` and `j` from Newton iteration on the arithmetic-geometric mean.
//!
//! With `theta_00`, `theta_01` the theta constants of nome `e^{i pi tau}`,
//! `k' = theta_01^2 / theta_00^2`, `lambda = k'^2` and
//! `tau = i M(1, k') / M(1, k)` where `k^2 = 1 - k'^2`. Then
//! `theta_00^2 = 1 / M(1, k')` and `eta^12 = lambda (1 - lambda) theta_00^12 / 16`.

use rug::Float;

use super::{
    describe, eta_multiplier, eta_sparse, form_multiplier, form_root, j_from_eta, reduce_complex,
    ModEvalError, Result, TauPoint, GUARD_BITS,
};
use crate::bigfloat::{self, agm, cexp, csqrt, pi_const, BigComplex, BigReal, Precision};
use crate::classgroup::reduce_form;

/// Reduced points with a larger imaginary part are evaluated by the series.
pub const AGM_IM_THRESHOLD: f64 = 5.0;

/// Precision of the theta-series starting value.
const START_BITS: u32 = 256;

/// Newton steps allowed after the last precision doubling.
const EXTRA_STEPS: usize = 6;

/// `theta_00` and `theta_01` for the nome `q`, to about `prec` bits.
fn theta_00_01(q: &BigComplex, im_tau: f64) -> (BigComplex, BigComplex) {
    let prec = q.prec();
    let mut t00 = BigComplex::zero(prec);
    let mut t01 = BigComplex::zero(prec);
    let q2 = q.square();
    let mut odd = q.clone(); // q^{2n-1}
    let mut term = q.clone(); // q^{n^2}
    let per_unit = std::f64::consts::PI * im_tau / std::f64::consts::LN_2;
    let mut n = 1u64;
    loop {
        t00 += &term;
        if n % 2 == 1 {
            t01 -= &term;
        } else {
            t01 += &term;
        }
        n += 1;
        if (n * n) as f64 * per_unit > prec.bits() as f64 + 16.0 {
            break;
        }
        odd *= &q2;
        term *= &odd;
    }
    (t00.mul_pow2(1).add_i64(1), t01.mul_pow2(1).add_i64(1))
}

/// `k'(tau)` summed directly from the theta series; slow for small `Im tau`.
pub fn theta_kprime(tau: &BigComplex, prec: Precision) -> Result<BigComplex> {
    let im = tau.im().to_f64();
    if im <= 0.0 {
        return Err(ModEvalError::NotInUpperHalfPlane(describe(tau)));
    }
    let w = prec.plus(16);
    let t = tau.with_prec(w);
    let q = cexp(&t.mul_i().mul_real(&pi_const(w)))?;
    let (t00, t01) = theta_00_01(&q, im);
    let r = bigfloat::div(&t01, &t00)?;
    Ok(r.square().with_prec(prec))
}

/// `tau - n` with `n` the nearest integer, and the parity of `n`.
fn translate(tau: &BigComplex) -> (BigComplex, bool) {
    let n = Float::with_val(tau.prec().bits(), tau.re_float() + 0.5f64)
        .floor()
        .to_integer()
        .expect("finite");
    let odd = n.is_odd();
    let shifted = tau.add_real(&BigReal::from_integer(&rug::Integer::from(-n), tau.prec()));
    (shifted, odd)
}

/// `tau` and `-1/tau` both in `{|Re z| <= 1, |z +- 1/2| >= 1/2}`, for
/// `|Re tau| <= 1/2`.
fn in_agm_domain(tau: &BigComplex) -> bool {
    let (re, im) = tau.to_f64();
    im > 0.0 && re.abs() <= (re * re + im * im) * (1.0 + 1e-12)
}

/// `i M(1, k') / M(1, sqrt(1 - k'^2)) - tau`.
fn residual(kp: &BigComplex, tau: &BigComplex) -> Result<BigComplex> {
    let one = BigComplex::one(kp.prec());
    let k = csqrt(&(&one - &kp.square()));
    let m1 = agm(&one, kp)?;
    let m2 = agm(&one, &k)?;
    Ok(&bigfloat::div(&m1, &m2)?.mul_i() - tau)
}

/// One Newton step at the precision of `kp`, with a forward difference of
/// step `2^{-prec/2}` for the derivative. Returns the new value and the step.
fn newton_step(kp: &BigComplex, tau: &BigComplex) -> Result<(BigComplex, BigComplex)> {
    let p = kp.prec();
    let f0 = residual(kp, tau)?;
    let eps = BigComplex::one(p).mul_pow2(-(p.bits() as i32 / 2));
    let f1 = residual(&(kp + &eps), tau)?;
    let deriv = bigfloat::div(&(&f1 - &f0), &eps)?;
    let dx = bigfloat::div(&f0, &deriv)?;
    Ok((kp - &dx, dx))
}

/// Bits lost to the conditioning of `tau -> k'` when `k'` is close to 1.
fn conditioning_bits(im: f64) -> u32 {
    (std::f64::consts::PI * im / std::f64::consts::LN_2).ceil() as u32
}

/// Increasing precisions from just above `start` to `target`, each at most
/// about twice the previous.
fn doubling_schedule(start: u32, target: u32) -> Vec<u32> {
    let mut out = vec![target];
    while let Some(&last) = out.last() {
        let next = last / 2 + 8;
        if next <= start + 32 || next >= last {
            break;
        }
        out.push(next);
    }
    out.reverse();
    out
}

/// `k'(tau)` by Newton iteration on the AGM relation, started from a
/// 256-bit theta-series value and doubling the precision each step.
pub fn kprime_newton(tau: &BigComplex, prec: Precision) -> Result<BigComplex> {
    if tau.im().to_f64() <= 0.0 {
        return Err(ModEvalError::NotInUpperHalfPlane(describe(tau)));
    }
    let (t0, odd) = translate(tau);
    if !in_agm_domain(&t0) {
        return Err(ModEvalError::OutsideAgmDomain(describe(tau)));
    }
    let guard = 32 + conditioning_bits(t0.im().to_f64());
    let target = prec.bits() + guard;
    let start = START_BITS.min(target);
    let mut x = theta_kprime(&t0, Precision::at_least(start))?;
    for p in doubling_schedule(start, target) {
        let p = Precision::at_least(p);
        x = newton_step(&x.with_prec(p), &t0.with_prec(p))?.0;
    }
    let tp = Precision::at_least(target);
    let t0 = t0.with_prec(tp);
    let tol = -(target as i32) + (guard as i32) / 2;
    let mut converged = false;
    for _ in 0..EXTRA_STEPS {
        let (next, dx) = newton_step(&x.with_prec(tp), &t0)?;
        x = next;
        let small = match (dx.exponent(), x.exponent()) {
            (None, _) => true,
            (Some(e), Some(ex)) => e <= ex + tol,
            (Some(_), None) => false,
        };
        if small {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(ModEvalError::NewtonDivergence(describe(tau)));
    }
    let x = if odd { x.recip()? } else { x };
    Ok(x.with_prec(prec))
}

/// `256 (1 - lambda + lambda^2)^3 / (lambda (1 - lambda))^2`.
pub fn j_from_lambda(lambda: &BigComplex) -> Result<BigComplex> {
    let one_minus = &BigComplex::one(lambda.prec()) - lambda;
    j_from_lambda_parts(lambda, &one_minus)
}

fn j_from_lambda_parts(lambda: &BigComplex, one_minus: &BigComplex) -> Result<BigComplex> {
    let prod = lambda * one_minus;
    let num = &BigComplex::one(lambda.prec()) - &prod;
    let num3 = &num.square() * &num;
    Ok(bigfloat::div(&num3, &prod.square())?.mul_pow2(8))
}

/// `lambda` and `1 - lambda = (1 - k')(1 + k')` at `z`.
fn lambda_parts(z: &BigComplex, prec: Precision) -> Result<(BigComplex, BigComplex, BigComplex)> {
    let kp = kprime_newton(z, prec)?;
    let one = BigComplex::one(prec);
    let one_minus = &(&one - &kp) * &(&one + &kp);
    Ok((kp.square(), one_minus, kp))
}

/// `eta(z)` for `z` in the fundamental domain with `Im z <= 5`.
fn eta_agm_reduced(z: &BigComplex, prec: Precision) -> Result<BigComplex> {
    if z.im().to_f64() > AGM_IM_THRESHOLD {
        return eta_sparse(z, prec);
    }
    let w = prec.plus(GUARD_BITS);
    let (lambda, one_minus, kp) = lambda_parts(&z.with_prec(w), w)?;
    let theta2 = agm(&BigComplex::one(w), &kp)?.recip()?;
    let t6 = {
        let t3 = &theta2.square() * &theta2;
        t3.square()
    };
    let p = (&(&lambda * &one_minus) * &t6).mul_pow2(-4);

    let start = START_BITS.min(w.bits());
    let x0 = eta_sparse(z, Precision::at_least(start))?;
    let mut x = x0.clone();
    // x <- x - (x - P / x^11) / 12
    let step = |x: &BigComplex, p: &BigComplex| -> Result<BigComplex> {
        let x11 = &x.square().pow_u64(5) * x;
        let r = bigfloat::div(p, &x11)?;
        Ok(x - &(x - &r).div_u64(12))
    };
    for bits in doubling_schedule(start, w.bits()) {
        let bp = Precision::at_least(bits);
        x = step(&x.with_prec(bp), &p.with_prec(bp))?;
    }
    x = step(&x.with_prec(w), &p)?;
    let x0w = x0.with_prec(w);
    let dev = (&x - &x0w).abs();
    let mut limit = x0w.abs();
    limit = limit.div_u64(10);
    if dev.as_float() > limit.as_float() {
        return Err(ModEvalError::BranchMismatch(describe(z)));
    }
    Ok(x.with_prec(prec))
}

/// `eta(tau)` with the reduced value from the AGM.
pub fn eta_agm(tau: &TauPoint) -> Result<BigComplex> {
    let w = tau.prec().plus(GUARD_BITS);
    let (g, word) = reduce_form(tau.form())?;
    let z = form_root(&g, w);
    let m = form_multiplier(tau.form(), &word, w).value();
    let e = eta_agm_reduced(&z, w)?;
    Ok(bigfloat::div(&e, &m)?.with_prec(tau.prec()))
}

/// [`eta_agm`] for an arbitrary point of the upper half plane.
pub fn eta_agm_at(z: &BigComplex, prec: Precision) -> Result<BigComplex> {
    let extra = z.exponent().unwrap_or(0).max(0) as u32;
    let w = prec.plus(GUARD_BITS + extra);
    let start = z.with_prec(w);
    let (reduced, word) = reduce_complex(&start)?;
    let m = eta_multiplier(&word, &start)?.value();
    let e = eta_agm_reduced(&reduced, w)?;
    Ok(bigfloat::div(&e, &m)?.with_prec(prec))
}

fn j_agm_reduced(z: &BigComplex, prec: Precision) -> Result<BigComplex> {
    let w = prec.plus(GUARD_BITS);
    let (lambda, one_minus, _) = lambda_parts(&z.with_prec(w), w)?;
    Ok(j_from_lambda_parts(&lambda, &one_minus)?.with_prec(prec))
}

/// `j(tau)` from `lambda = k'^2`; reduced points above the imaginary-part
/// threshold go through the eta series instead.
pub fn j_agm(tau: &TauPoint) -> Result<BigComplex> {
    let (g, _) = reduce_form(tau.form())?;
    let reduced = TauPoint::new(g, tau.prec())?;
    if reduced.tau().im().to_f64() > AGM_IM_THRESHOLD {
        return j_from_eta(&reduced);
    }
    j_agm_reduced(reduced.tau(), tau.prec())
}

/// [`j_agm`] for an arbitrary point of the upper half plane.
pub fn j_agm_at(z: &BigComplex, prec: Precision) -> Result<BigComplex> {
    let w = prec.plus(GUARD_BITS + z.exponent().unwrap_or(0).max(0) as u32);
    let (reduced, _) = reduce_complex(&z.with_prec(w))?;
    if reduced.im().to_f64() > AGM_IM_THRESHOLD {
        return super::j_at_point(&reduced, prec);
    }
    j_agm_reduced(&reduced, prec)
}
